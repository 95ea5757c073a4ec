//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use rayon::prelude::*;

use robustmatch::fixtures::{gs3, gs3_leave, mu_e, mu_f, mu_m};
use robustmatch::lattice::RotationDigraph;
use robustmatch::objective::{psi, PsiTable};
use robustmatch::oracle::{brute_solve, enumerate_stable_matchings, poset_oracle, Domain};
use robustmatch::rational::{int, ratio};
use robustmatch::stable_opt::{prepare_params, solve_with_params, WeightedRotationDigraph};
use robustmatch::relaxed::solve_relaxed_with_params;
use robustmatch::{
    build_rotation_digraph, min_sumsq_stable, random_instance, ConventionPair, Instance, LeaveDistribution,
    ObjectiveParams, Rational,
};

const ENSEMBLE: u64 = 200;
const DEGENERATE: u64 = 50;
const RICH: usize = 100;

type Outcome = Result<String, String>;

fn nus() -> [Rational; 5] {
    [int(0), ratio(1, 4), ratio(1, 2), ratio(3, 4), int(1)]
}

/// One ensemble case: instance, leave distribution and ν drawn from the seed.
fn case(seed: u64, max_n: usize) -> (Instance, ObjectiveParams) {
    let n = 2 + (seed as usize) % (max_n - 1);
    let instance = random_instance(n, seed, seed % 3 != 0).expect("valid instance");
    let leavers = (seed as usize / 5) % (2 * n + 1);
    let leave = LeaveDistribution::random(&instance, leavers, seed ^ 0x5eed);
    let nu = nus()[(seed as usize / 3) % 5].clone();
    let params = prepare_params(&instance, nu, leave, ConventionPair::default()).expect("params");
    (instance, params)
}

/// Cases whose lattice has at least two rotations, found by scanning seeds.
fn rich_cases(count: usize) -> Vec<u64> {
    (10_000u64..)
        .filter(|&seed| {
            let n = 4 + (seed as usize) % 3;
            let instance = random_instance(n, seed, true).expect("valid instance");
            build_rotation_digraph(&instance).len() >= 2
        })
        .take(count)
        .collect()
}

fn rich_case(seed: u64) -> (Instance, ObjectiveParams) {
    let n = 4 + (seed as usize) % 3;
    let instance = random_instance(n, seed, true).expect("valid instance");
    let leave = LeaveDistribution::random(&instance, 1 + (seed as usize) % (2 * n), seed);
    let nu = nus()[(seed as usize) % 5].clone();
    let params = prepare_params(&instance, nu, leave, ConventionPair::default()).expect("params");
    (instance, params)
}

fn check(cond: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what())
    }
}

fn first_failure(results: Vec<Result<(), String>>) -> Result<(), String> {
    results.into_iter().collect::<Result<Vec<()>, String>>().map(|_| ())
}

fn criterion_1() -> Outcome {
    let g = gs3();
    let expected = [
        ("mu_M", mu_m(&g), int(1), ratio(69, 2)),
        ("mu_E", mu_e(&g), int(1), int(30)),
        ("mu_F", mu_f(&g), int(1), ratio(69, 2)),
        ("mu_M", mu_m(&g), int(0), ratio(9, 4)),
        ("mu_E", mu_e(&g), int(0), int(6)),
        ("mu_F", mu_f(&g), int(0), ratio(81, 4)),
    ];
    for (name, matching, nu, want) in expected {
        let params = prepare_params(&g, nu.clone(), gs3_leave(&g), ConventionPair::default())
            .map_err(|e| e.to_string())?;
        let got = psi(&g, &matching, &params).map_err(|e| e.to_string())?;
        check(got == want, || format!("psi({name}; nu={nu}) = {got}, expected {want}"))?;
    }
    Ok("six exact values".into())
}

fn criterion_2() -> Outcome {
    let started = Instant::now();
    let g = gs3();
    for (nu, want, name) in [(int(1), mu_e(&g), "mu_E"), (int(0), mu_m(&g), "mu_M")] {
        let params = prepare_params(&g, nu.clone(), gs3_leave(&g), ConventionPair::default())
            .map_err(|e| e.to_string())?;
        let got = solve_with_params(&g, &params).map_err(|e| e.to_string())?;
        check(got.matching == want, || {
            format!("nu={nu}: got {}, expected {name}", got.matching.display(&g))
        })?;
    }
    let elapsed = started.elapsed();
    check(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!("{elapsed:.2?}"))
}

fn criterion_3() -> Outcome {
    let started = Instant::now();
    let results: Vec<_> = (0..ENSEMBLE)
        .into_par_iter()
        .map(|seed| {
            let (instance, params) = case(seed, 6);
            let robust = solve_with_params(&instance, &params).map_err(|e| e.to_string())?;
            let (_, brute) = brute_solve(&instance, &params, Domain::Stable).map_err(|e| e.to_string())?;
            check(robust.psi == brute, || format!("seed {seed}: solver {} vs oracle {brute}", robust.psi))
        })
        .collect();
    first_failure(results)?;
    Ok(format!("{ENSEMBLE} instances, {:.1?}", started.elapsed()))
}

fn criterion_4() -> Outcome {
    let started = Instant::now();
    let results: Vec<_> = (0..ENSEMBLE)
        .into_par_iter()
        .map(|seed| {
            let (instance, params) = case(seed, 5);
            let relaxed = solve_relaxed_with_params(&instance, &params).map_err(|e| e.to_string())?;
            let robust = solve_with_params(&instance, &params).map_err(|e| e.to_string())?;
            let (_, brute) = brute_solve(&instance, &params, Domain::All).map_err(|e| e.to_string())?;
            check(relaxed.psi == brute, || format!("seed {seed}: relaxed {} vs oracle {brute}", relaxed.psi))?;
            check(relaxed.psi <= robust.psi, || {
                format!("seed {seed}: relaxed {} above robust {}", relaxed.psi, robust.psi)
            })
        })
        .collect();
    first_failure(results)?;
    Ok(format!("{ENSEMBLE} instances, {:.1?}", started.elapsed()))
}

fn structure((instance, params): (Instance, ObjectiveParams), seed: u64) -> Result<(usize, usize), String> {
    let digraph: RotationDigraph = build_rotation_digraph(&instance);
    let subsets = digraph.closed_subsets();
    let stable = enumerate_stable_matchings(&instance).map_err(|e| e.to_string())?;
    check(subsets.len() == stable.len(), || {
        format!("seed {seed}: {} closed subsets, {} stable matchings", subsets.len(), stable.len())
    })?;

    let oracle = poset_oracle(&instance).map_err(|e| e.to_string())?;
    let index: BTreeMap<BTreeSet<(usize, usize)>, usize> =
        oracle.rotations.iter().cloned().enumerate().map(|(i, k)| (k, i)).collect();
    let mapped: Vec<usize> = digraph
        .rotations()
        .iter()
        .map(|r| index.get(&r.pairs().iter().copied().collect()).copied())
        .collect::<Option<_>>()
        .ok_or_else(|| format!("seed {seed}: rotation missing from the oracle"))?;
    check(mapped.len() == oracle.rotations.len(), || format!("seed {seed}: rotation counts differ"))?;
    let closure = digraph.transitive_closure();
    let ours: BTreeSet<(usize, usize)> = (0..digraph.len())
        .flat_map(|a| (0..digraph.len()).map(move |b| (a, b)))
        .filter(|&(a, b)| closure[a][b])
        .map(|(a, b)| (mapped[a], mapped[b]))
        .collect();
    check(ours == oracle.precedes, || format!("seed {seed}: precedence relation differs"))?;

    let weighted =
        WeightedRotationDigraph::new(&instance, digraph.clone(), &params).map_err(|e| e.to_string())?;
    let table = PsiTable::new(&instance, &params).map_err(|e| e.to_string())?;
    let value_of: BTreeMap<BTreeSet<usize>, Rational> = subsets
        .iter()
        .map(|s| Ok((s.clone(), table.psi(&digraph.matching_of_closed_subset(s)?))))
        .collect::<robustmatch::Result<_>>()
        .map_err(|e| e.to_string())?;
    let top = value_of[&BTreeSet::new()].clone();
    for (subset, value) in &value_of {
        let telescoped: Rational = top.clone() + subset.iter().map(|&r| weighted.change[r].clone()).sum::<Rational>();
        check(&telescoped == value, || format!("seed {seed}: telescoping fails on {subset:?}"))?;
    }
    // Every step eliminating an exposed rotation changes the objective by the same amount.
    let mut exposures = vec![0usize; digraph.len()];
    for (subset, value) in &value_of {
        for r in 0..digraph.len() {
            if subset.contains(&r) || !digraph.predecessors(r).iter().all(|p| subset.contains(p)) {
                continue;
            }
            let mut after = subset.clone();
            after.insert(r);
            let step = value_of[&after].clone() - value;
            check(step == weighted.change[r], || format!("seed {seed}: rotation {r} step {step} varies"))?;
            exposures[r] += 1;
        }
    }
    check(exposures.iter().all(|&e| e >= 1), || format!("seed {seed}: a rotation is never exposed"))?;
    Ok((digraph.len(), exposures.iter().filter(|&&e| e >= 2).count()))
}

fn criterion_5() -> Outcome {
    let started = Instant::now();
    let rich = rich_cases(RICH);
    let counts = (0..ENSEMBLE)
        .into_par_iter()
        .map(|seed| structure(case(seed, 6), seed))
        .chain(rich.into_par_iter().map(|seed| structure(rich_case(seed), seed)))
        .collect::<Result<Vec<_>, String>>()?;
    let rotations: usize = counts.iter().map(|c| c.0).sum();
    let repeated: usize = counts.iter().map(|c| c.1).sum();
    Ok(format!(
        "{ENSEMBLE}+{RICH} instances, {rotations} rotations, {repeated} exposed in several matchings, {:.1?}",
        started.elapsed()
    ))
}

fn scale_run(n: usize, seed: u64) -> Result<(Duration, usize), String> {
    let instance = random_instance(n, seed, true).map_err(|e| e.to_string())?;
    let leave = LeaveDistribution::random(&instance, 20, seed);
    let started = Instant::now();
    let params = prepare_params(&instance, ratio(1, 2), leave, ConventionPair::default())
        .map_err(|e| e.to_string())?;
    let solution = solve_with_params(&instance, &params).map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    let (stable, _) = robustmatch::is_stable(&instance, &solution.matching).map_err(|e| e.to_string())?;
    check(stable, || format!("n={n}: output is not stable"))?;
    let rotations = build_rotation_digraph(&instance).len();
    check(rotations <= n * n, || format!("n={n}: {rotations} rotations exceed n^2"))?;
    Ok((elapsed, rotations))
}

fn criterion_6() -> Outcome {
    println!("    growth (stable mode, 20 leavers, nu = 1/2)");
    println!("    {:>5} {:>10} {:>12}", "n", "rotations", "seconds");
    let mut last = Duration::ZERO;
    for n in [25, 50, 100, 200] {
        let (elapsed, rotations) = scale_run(n, 2024)?;
        println!("    {n:>5} {rotations:>10} {:>12.3}", elapsed.as_secs_f64());
        last = elapsed;
    }
    check(last < Duration::from_secs(60), || format!("n=200 took {last:?}"))?;
    Ok(format!("n=200 in {last:.2?}"))
}

fn criterion_7() -> Outcome {
    let results: Vec<_> = (0..DEGENERATE)
        .into_par_iter()
        .map(|seed| {
            let n = 2 + (seed as usize) % 7;
            let instance = random_instance(n, 1000 + seed, seed % 2 == 0).map_err(|e| e.to_string())?;
            let leave = LeaveDistribution::nobody_leaves(&instance);
            let solve = |nu: Rational| {
                let params = prepare_params(&instance, nu, leave.clone(), ConventionPair::default())?;
                solve_with_params(&instance, &params)
            };
            let reference = min_sumsq_stable(&instance);
            let one = solve(int(1)).map_err(|e| e.to_string())?;
            check(one.matching == reference, || format!("seed {seed}: nu=1 differs from the min-sumsq matching"))?;
            let zero = solve(int(0)).map_err(|e| e.to_string())?;
            check(zero.matching == reference, || format!("seed {seed}: nu=0 differs from the baseline"))?;
            check(zero.psi == int(0), || format!("seed {seed}: nu=0 objective is {}", zero.psi))
        })
        .collect();
    first_failure(results)?;
    Ok(format!("{DEGENERATE} instances"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("worked-example objective table", criterion_1),
        ("worked-example solver answers", criterion_2),
        ("stable solver matches brute force", criterion_3),
        ("relaxed solver matches brute force", criterion_4),
        ("lattice structure and weights", criterion_5),
        ("scale smoke test", criterion_6),
        ("degenerate parameters", criterion_7),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {}: PASS  {name} ({detail})", i + 1),
            Err(reason) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {reason}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
