//! The relaxed problem: minimise the robustness objective over every
//! sex-respecting matching, stable or not, through an assignment problem.
//!
//! Each agent is both a row and a column. Pairing distinct agents of the same
//! sex is forbidden, opposite-sex entries carry the expected contribution of
//! the pair, and the diagonal carries twice the expected contribution of a
//! single agent. A matching used as a permutation then costs exactly twice
//! its objective. An optimal permutation is folded back into a matching cycle
//! by cycle; forbidden entries force every cycle to alternate sexes, so each
//! longer cycle splits into two perfect pairings and the cheaper one is never
//! worse than the cycle itself.

use num_traits::{One, Zero};

use crate::assignment::{solve_assignment, AssignmentCosts};
use crate::error::{Error, Result};
use crate::model::{AgentIdx, Instance, LeaveDistribution, Leaver, Matching};
use crate::objective::{self, Convention, ConventionPair, ObjectiveParams};
use crate::rational::{square, Rational};
use crate::stable_opt::{prepare_params, RobustSolution};

/// Cost `agent` is charged when its partner `gone` has left.
fn abandoned_cost<'a>(instance: &'a Instance, agent: AgentIdx, gone: AgentIdx, c: Convention) -> &'a Rational {
    match c {
        Convention::SelfCost => instance.cost(agent, agent),
        Convention::Retained => instance.cost(agent, gone),
    }
}

/// Assignment cost of putting `a` with `b`; `None` stands for infinity.
pub fn pair_cost_f(instance: &Instance, a: AgentIdx, b: AgentIdx, params: &ObjectiveParams) -> Result<Option<Rational>> {
    let nu = &params.nu;
    let rest = Rational::one() - nu;
    let conv = params.conventions;
    let mut total = Rational::zero();
    if a == b {
        let c = instance.cost(a, a);
        for leaver in params.leave.leavers() {
            let p = params.leave.prob(leaver);
            if p.is_zero() || leaver == Leaver::Agent(a) {
                continue;
            }
            let base = params.baseline(instance, leaver)?;
            let b_cost = instance.cost(a, base.partner(a));
            total += p * (nu * square(c) + &rest * square(&(c - b_cost)));
        }
        return Ok(Some(total * Rational::from_integer(2.into())));
    }
    if instance.sex(a) == instance.sex(b) {
        return Ok(None);
    }
    let c_ab = instance.cost(a, b);
    let c_ba = instance.cost(b, a);
    for leaver in params.leave.leavers() {
        let p = params.leave.prob(leaver);
        if p.is_zero() {
            continue;
        }
        let base = params.baseline(instance, leaver)?;
        if leaver == Leaver::Agent(a) || leaver == Leaver::Agent(b) {
            // The one who stays is charged per convention.
            let (stay, gone) = if leaver == Leaver::Agent(a) { (b, a) } else { (a, b) };
            let d = abandoned_cost(instance, stay, gone, conv.cost_term);
            let r = abandoned_cost(instance, stay, gone, conv.regret_term);
            let b_stay = instance.cost(stay, base.partner(stay));
            total += p * (nu * square(d) + &rest * square(&(r - b_stay)));
        } else {
            let b_a = instance.cost(a, base.partner(a));
            let b_b = instance.cost(b, base.partner(b));
            total += p
                * (nu * (square(c_ab) + square(c_ba))
                    + &rest * (square(&(c_ab - b_a)) + square(&(c_ba - b_b))));
        }
    }
    Ok(Some(total))
}

/// The full symmetric assignment matrix over all agents.
pub fn assignment_costs(instance: &Instance, params: &ObjectiveParams) -> Result<AssignmentCosts> {
    let n = instance.num_agents();
    let mut entries = vec![vec![None; n]; n];
    for a in 0..n {
        for b in a..n {
            let f = pair_cost_f(instance, a, b, params)?;
            entries[b][a] = f.clone();
            entries[a][b] = f;
        }
    }
    AssignmentCosts::new(entries)
}

/// Folds a finite-cost permutation into a matching whose doubled cost is no
/// larger than the permutation's cost.
pub fn symmetrize(instance: &Instance, permutation: &[usize], costs: &AssignmentCosts) -> Result<Matching> {
    let n = permutation.len();
    let f = |x: usize, y: usize| -> Result<&Rational> {
        costs
            .get(x, y)
            .ok_or_else(|| Error::InvalidParameter("permutation uses a forbidden pair".into()))
    };
    let mut partner: Vec<AgentIdx> = (0..n).collect();
    let mut seen = vec![false; n];
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut cycle = vec![start];
        seen[start] = true;
        let mut cur = permutation[start];
        while cur != start {
            seen[cur] = true;
            cycle.push(cur);
            cur = permutation[cur];
        }
        let len = cycle.len();
        if len == 1 {
            continue;
        }
        if len % 2 == 1 {
            return Err(Error::InvalidParameter("odd cycle in a finite-cost permutation".into()));
        }
        let mut even = Rational::zero();
        let mut odd = Rational::zero();
        for k in (0..len).step_by(2) {
            even += f(cycle[k], cycle[k + 1])?;
            odd += f(cycle[k + 1], cycle[(k + 2) % len])?;
        }
        let offset = if even <= odd { 0 } else { 1 };
        for k in (0..len).step_by(2) {
            let (x, y) = (cycle[(k + offset) % len], cycle[(k + offset + 1) % len]);
            partner[x] = y;
            partner[y] = x;
        }
    }
    Matching::new(instance, partner)
}

/// Relaxed optimum for fixed parameters.
pub fn solve_relaxed_with_params(instance: &Instance, params: &ObjectiveParams) -> Result<RobustSolution> {
    let costs = assignment_costs(instance, params)?;
    let (permutation, _) = solve_assignment(&costs)?;
    let matching = symmetrize(instance, &permutation, &costs)?;
    let breakdown = objective::psi_breakdown(instance, &matching, params)?;
    let psi = breakdown.iter().map(|(_, v)| v.clone()).sum();
    Ok(RobustSolution {
        matching,
        psi,
        closed_subset: None,
        breakdown,
    })
}

/// The matching, stable or not, minimising the robustness objective.
pub fn solve_relaxed(
    instance: &Instance,
    nu: Rational,
    leave: LeaveDistribution,
    conventions: ConventionPair,
) -> Result<RobustSolution> {
    let params = prepare_params(instance, nu, leave, conventions)?;
    solve_relaxed_with_params(instance, &params)
}
