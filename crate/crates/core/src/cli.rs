//! Command-line front end.
//!
//! Every subcommand emits a JSON document with a fixed key order. Rationals
//! are printed exactly as `"num/den"` unless `--decimal` is given. Exit codes:
//! 0 on success, 1 on bad input, 2 when a computed result violates an
//! invariant the solvers guarantee.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::Error;
use crate::format::{parse_instance, serialize_instance, InstanceDocument};
use crate::lattice::{build_rotation_digraph, propose_da, Side};
use crate::model::{is_stable, random_instance, Instance, LeaveDistribution, Matching};
use crate::objective::{self, Convention, ConventionPair, ObjectiveParams};
use crate::oracle;
use crate::rational::{self, Rational};
use crate::relaxed::solve_relaxed_with_params;
use crate::stable_opt::{prepare_params, solve_with_params, RobustSolution};

#[derive(Debug, Parser)]
#[command(name = "robustmatch", version, about = "Perturbation-robust matchings for two-sided markets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute the robust stable matching or the relaxed robust matching.
    Solve(SolveArgs),
    /// Evaluate the objective of a given matching.
    Evaluate(EvaluateArgs),
    /// List stable matchings, rotations, digraph edges or all matchings.
    Enumerate(EnumerateArgs),
    /// Write a random instance document.
    Generate(GenerateArgs),
    /// Compare the objective of several matching policies.
    Compare(ObjectiveArgs),
    /// Brute-force references for small instances (debugging aid).
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Stable,
    Relaxed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConventionArg {
    #[value(name = "self")]
    SelfCost,
    Retained,
}

impl From<ConventionArg> for Convention {
    fn from(c: ConventionArg) -> Self {
        match c {
            ConventionArg::SelfCost => Convention::SelfCost,
            ConventionArg::Retained => Convention::Retained,
        }
    }
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Write the document here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Print rationals as decimals.
    #[arg(long)]
    pub decimal: bool,
}

#[derive(Debug, Args)]
pub struct ObjectiveArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Trade-off parameter, `p/q` or a decimal; defaults to the document's `nu`.
    #[arg(long)]
    pub nu: Option<String>,
    #[arg(long, value_enum, default_value = "self")]
    pub cost_convention: ConventionArg,
    #[arg(long, value_enum, default_value = "retained")]
    pub regret_convention: ConventionArg,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub objective: ObjectiveArgs,
    #[arg(long, value_enum, default_value = "stable")]
    pub mode: Mode,
    /// Include wall-clock time in the report.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub objective: ObjectiveArgs,
    /// Pairs as `m1:w2,m2:w3`; unlisted agents are single.
    #[arg(long)]
    pub matching: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum What {
    Stable,
    Rotations,
    Edges,
    AllMatchings,
}

#[derive(Debug, Args)]
pub struct EnumerateArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "stable")]
    pub what: What,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Insert self at a random position instead of last.
    #[arg(long)]
    pub self_random: bool,
    /// Number of agents given a positive departure probability.
    #[arg(long, default_value_t = 0)]
    pub leavers: usize,
    #[arg(long)]
    pub nu: Option<String>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleWhat {
    Stable,
    Poset,
    BruteStable,
    BruteAll,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub objective: ObjectiveArgs,
    #[arg(long, value_enum, default_value = "stable")]
    pub what: OracleWhat,
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

#[derive(Serialize)]
struct Conventions {
    cost: String,
    regret: String,
}

#[derive(Serialize)]
struct LeaverTerm {
    leaver: String,
    probability: String,
    psi: String,
}

/// Output of `solve` and `evaluate`.
#[derive(Serialize)]
struct SolveReport {
    mode: String,
    nu: String,
    conventions: Conventions,
    matching: Vec<(String, String)>,
    psi: String,
    psi_by_leaver: Vec<LeaverTerm>,
    expected_blocking_pairs: String,
    stable: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    closed_subset: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    timing_ms: Option<u128>,
}

#[derive(Serialize)]
struct CompareRow {
    policy: String,
    stable: bool,
    psi: String,
    expected_blocking_pairs: String,
    matching: Vec<(String, String)>,
}

#[derive(Serialize)]
struct CompareReport {
    nu: String,
    conventions: Conventions,
    rows: Vec<CompareRow>,
}

#[derive(Serialize)]
struct RotationOut {
    index: usize,
    pairs: Vec<(String, String)>,
}

struct Printer {
    decimal: bool,
}

impl Printer {
    fn q(&self, value: &Rational) -> String {
        if self.decimal {
            rational::format_decimal(value)
        } else {
            rational::format(value)
        }
    }
}

fn read_document(path: &PathBuf) -> CliResult<InstanceDocument> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?;
    Ok(parse_instance(&text)?)
}

fn emit(document: &str, output: Option<&PathBuf>, stdout: &mut dyn Write) -> CliResult<()> {
    match output {
        Some(path) => std::fs::write(path, document)
            .map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display()))),
        None => stdout
            .write_all(document.as_bytes())
            .map_err(|e| Failure::Input(format!("cannot write output: {e}"))),
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn conventions_of(args: &ObjectiveArgs) -> ConventionPair {
    ConventionPair {
        cost_term: args.cost_convention.into(),
        regret_term: args.regret_convention.into(),
    }
}

fn conventions_out(c: ConventionPair) -> Conventions {
    Conventions {
        cost: c.cost_term.to_string(),
        regret: c.regret_term.to_string(),
    }
}

fn resolve_nu(flag: Option<&str>, doc: &InstanceDocument) -> CliResult<Rational> {
    match (flag, &doc.nu) {
        (Some(text), _) => Ok(rational::parse(text)?),
        (None, Some(nu)) => Ok(nu.clone()),
        (None, None) => Err(Failure::Input("no nu given and the document has none".into())),
    }
}

/// Reads the input and computes the baselines.
fn load(args: &ObjectiveArgs) -> CliResult<(Instance, ObjectiveParams)> {
    let doc = read_document(&args.input)?;
    let nu = resolve_nu(args.nu.as_deref(), &doc)?;
    let params = prepare_params(&doc.instance, nu, doc.leave, conventions_of(args))?;
    Ok((doc.instance, params))
}

fn parse_matching(instance: &Instance, text: &str) -> CliResult<Matching> {
    let mut pairs = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (a, b) = item
            .split_once(':')
            .ok_or_else(|| Failure::Input(format!("`{item}` is not of the form a:b")))?;
        pairs.push((a.trim(), b.trim()));
    }
    Ok(Matching::from_pairs(instance, &pairs)?)
}

fn report(
    instance: &Instance,
    params: &ObjectiveParams,
    mode: &str,
    solution: &RobustSolution,
    printer: &Printer,
    timing_ms: Option<u128>,
) -> CliResult<SolveReport> {
    let total: Rational = solution.breakdown.iter().map(|(_, v)| v.clone()).sum();
    if total != solution.psi {
        return Err(Failure::Internal("objective breakdown does not add up".into()));
    }
    let stable = is_stable(instance, &solution.matching)?.0;
    Ok(SolveReport {
        mode: mode.to_string(),
        nu: printer.q(&params.nu),
        conventions: conventions_out(params.conventions),
        matching: solution.matching.id_pairs(instance),
        psi: printer.q(&solution.psi),
        psi_by_leaver: solution
            .breakdown
            .iter()
            .map(|(l, v)| LeaverTerm {
                leaver: l.label(instance),
                probability: printer.q(params.leave.prob(*l)),
                psi: printer.q(v),
            })
            .collect(),
        expected_blocking_pairs: printer.q(&objective::expected_blocking_pairs(
            instance,
            &solution.matching,
            &params.leave,
        )?),
        stable,
        closed_subset: solution
            .closed_subset
            .as_ref()
            .map(|s| s.iter().copied().collect()),
        timing_ms,
    })
}

fn solve(args: &SolveArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let started = Instant::now();
    let (instance, params) = load(&args.objective)?;
    let printer = Printer {
        decimal: args.objective.out.decimal,
    };
    let (mode, solution) = match args.mode {
        Mode::Stable => ("stable", solve_with_params(&instance, &params)?),
        Mode::Relaxed => ("relaxed", solve_relaxed_with_params(&instance, &params)?),
    };
    if args.mode == Mode::Stable && !is_stable(&instance, &solution.matching)?.0 {
        return Err(Failure::Internal("robust solution is not stable".into()));
    }
    let timing = args.timing.then(|| started.elapsed().as_millis());
    let doc = report(&instance, &params, mode, &solution, &printer, timing)?;
    emit(&to_json(&doc), args.objective.out.output.as_ref(), stdout)
}

fn evaluate(args: &EvaluateArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let (instance, params) = load(&args.objective)?;
    let matching = parse_matching(&instance, &args.matching)?;
    let breakdown = objective::psi_breakdown(&instance, &matching, &params)?;
    let psi = breakdown.iter().map(|(_, v)| v.clone()).sum();
    let solution = RobustSolution {
        matching,
        psi,
        closed_subset: None,
        breakdown,
    };
    let printer = Printer {
        decimal: args.objective.out.decimal,
    };
    let doc = report(&instance, &params, "evaluate", &solution, &printer, None)?;
    emit(&to_json(&doc), args.objective.out.output.as_ref(), stdout)
}

fn enumerate(args: &EnumerateArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let doc = read_document(&args.input)?;
    let instance = &doc.instance;
    let digraph = build_rotation_digraph(instance);
    let rotations = || -> Vec<RotationOut> {
        digraph
            .rotations()
            .iter()
            .enumerate()
            .map(|(index, r)| RotationOut {
                index,
                pairs: r
                    .pairs()
                    .iter()
                    .map(|&(m, w)| (instance.id(m).to_string(), instance.id(w).to_string()))
                    .collect(),
            })
            .collect()
    };
    let value = match args.what {
        What::Stable => {
            let matchings: Vec<Vec<(String, String)>> = digraph
                .closed_subsets()
                .iter()
                .map(|s| digraph.matching_of_closed_subset(s).map(|m| m.id_pairs(instance)))
                .collect::<Result<_, _>>()?;
            serde_json::json!({ "count": matchings.len(), "matchings": matchings })
        }
        What::Rotations => serde_json::json!({ "count": digraph.len(), "rotations": rotations() }),
        What::Edges => serde_json::json!({
            "rotations": rotations(),
            "edges": digraph.edges(),
        }),
        What::AllMatchings => {
            let all: Vec<Vec<(String, String)>> = oracle::enumerate_matchings(instance)?
                .iter()
                .map(|m| m.id_pairs(instance))
                .collect();
            serde_json::json!({ "count": all.len(), "matchings": all })
        }
    };
    emit(&to_json(&value), args.out.output.as_ref(), stdout)
}

fn generate(args: &GenerateArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let instance = random_instance(args.n, args.seed, !args.self_random)?;
    let leave = if args.leavers == 0 {
        LeaveDistribution::nobody_leaves(&instance)
    } else {
        LeaveDistribution::random(&instance, args.leavers, args.seed)
    };
    let nu = args.nu.as_deref().map(rational::parse).transpose()?;
    let doc = InstanceDocument { instance, leave, nu };
    emit(&serialize_instance(&doc), args.output.as_ref(), stdout)
}

fn compare(args: &ObjectiveArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let (instance, params) = load(args)?;
    let printer = Printer {
        decimal: args.out.decimal,
    };
    let robust = solve_with_params(&instance, &params)?;
    let relaxed = solve_relaxed_with_params(&instance, &params)?;
    let policies: Vec<(&str, Matching)> = vec![
        ("men_optimal", propose_da(&instance, Side::Men).0),
        ("women_optimal", propose_da(&instance, Side::Women).0),
        (
            "min_sumsq",
            params
                .baselines
                .get(crate::model::Leaver::Nobody)
                .expect("baseline for nobody leaving")
                .clone(),
        ),
        ("robust", robust.matching.clone()),
        ("relaxed", relaxed.matching.clone()),
    ];
    let mut rows = Vec::new();
    let mut values = Vec::new();
    for (name, matching) in policies {
        let value = objective::psi(&instance, &matching, &params)?;
        let stable = is_stable(&instance, &matching)?.0;
        rows.push(CompareRow {
            policy: name.to_string(),
            stable,
            psi: printer.q(&value),
            expected_blocking_pairs: printer.q(&objective::expected_blocking_pairs(
                &instance,
                &matching,
                &params.leave,
            )?),
            matching: matching.id_pairs(&instance),
        });
        values.push((name, stable, value));
    }
    let robust_value = &robust.psi;
    if values.iter().any(|(n, s, v)| *s && *n != "relaxed" && v < robust_value) {
        return Err(Failure::Internal("a stable policy beats the robust solution".into()));
    }
    if relaxed.psi > *robust_value {
        return Err(Failure::Internal("relaxed solution is worse than the robust one".into()));
    }
    let doc = CompareReport {
        nu: printer.q(&params.nu),
        conventions: conventions_out(params.conventions),
        rows,
    };
    emit(&to_json(&doc), args.out.output.as_ref(), stdout)
}

fn run_oracle(args: &OracleArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let printer = Printer {
        decimal: args.objective.out.decimal,
    };
    let value = match args.what {
        OracleWhat::Stable | OracleWhat::Poset => {
            let doc = read_document(&args.objective.input)?;
            let instance = &doc.instance;
            if args.what == OracleWhat::Stable {
                let all: Vec<Vec<(String, String)>> = oracle::enumerate_stable_matchings(instance)?
                    .iter()
                    .map(|m| m.id_pairs(instance))
                    .collect();
                serde_json::json!({ "count": all.len(), "matchings": all })
            } else {
                let poset = oracle::poset_oracle(instance)?;
                let rotations: Vec<Vec<(String, String)>> = poset
                    .rotations
                    .iter()
                    .map(|r| {
                        r.iter()
                            .map(|&(m, w)| (instance.id(m).to_string(), instance.id(w).to_string()))
                            .collect()
                    })
                    .collect();
                serde_json::json!({ "rotations": rotations, "precedes": poset.precedes })
            }
        }
        OracleWhat::BruteStable | OracleWhat::BruteAll => {
            let (instance, params) = load(&args.objective)?;
            let domain = if args.what == OracleWhat::BruteStable {
                oracle::Domain::Stable
            } else {
                oracle::Domain::All
            };
            let (matching, value) = oracle::brute_solve(&instance, &params, domain)?;
            serde_json::json!({
                "matching": matching.id_pairs(&instance),
                "psi": printer.q(&value),
            })
        }
    };
    emit(&to_json(&value), args.objective.out.output.as_ref(), stdout)
}

/// Runs the command line and returns the process exit status.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 {
                stdout.write_all(rendered.as_bytes())
            } else {
                stderr.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Solve(a) => solve(a, stdout),
        Command::Evaluate(a) => evaluate(a, stdout),
        Command::Enumerate(a) => enumerate(a, stdout),
        Command::Generate(a) => generate(a, stdout),
        Command::Compare(a) => compare(a, stdout),
        Command::Oracle(a) => run_oracle(a, stdout),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Input(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            1
        }
        Err(Failure::Internal(msg)) => {
            let _ = writeln!(stderr, "internal error: {msg}");
            2
        }
    }
}

