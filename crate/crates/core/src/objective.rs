//! The robustness objective: expected squared social cost mixed with expected
//! squared regret against per-departure baseline matchings.
//!
//! For a departure `l` (or nobody), every remaining agent `a` contributes
//! `nu * d(a)^2 + (1 - nu) * (r(a) - b(a))^2`, where `d` and `r` are the costs
//! `a` displays under the cost and regret conventions, and `b(a)` is the cost
//! of `a`'s partner in the baseline for `l`. Terms are weighted by the
//! departure probability and summed.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{blocking_pairs_of, AgentIdx, Instance, LeaveDistribution, Leaver, Matching};
use crate::rational::{self, square, Rational};

/// What an agent whose partner departed is charged.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    /// The cost of being single.
    #[serde(rename = "self")]
    SelfCost,
    /// The cost of the partner that left, as if the pair still stood.
    Retained,
}

impl fmt::Display for Convention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Convention::SelfCost => "self",
            Convention::Retained => "retained",
        })
    }
}

impl std::str::FromStr for Convention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "self" => Ok(Convention::SelfCost),
            "retained" => Ok(Convention::Retained),
            other => Err(Error::InvalidParameter(format!("unknown convention `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConventionPair {
    pub cost_term: Convention,
    pub regret_term: Convention,
}

impl Default for ConventionPair {
    fn default() -> Self {
        Self {
            cost_term: Convention::SelfCost,
            regret_term: Convention::Retained,
        }
    }
}

/// Baseline matchings per departure, all indexed over the full instance.
///
/// The baseline for an agent departure is a stable matching of the reduced
/// market, lifted back with the leaver single.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BaselineSet {
    baselines: BTreeMap<Leaver, Matching>,
}

impl BaselineSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, leaver: Leaver, matching: Matching) {
        self.baselines.insert(leaver, matching);
    }

    pub fn get(&self, leaver: Leaver) -> Option<&Matching> {
        self.baselines.get(&leaver)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Leaver, &Matching)> {
        self.baselines.iter()
    }

    pub fn len(&self) -> usize {
        self.baselines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.baselines.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObjectiveParams {
    pub nu: Rational,
    pub leave: LeaveDistribution,
    pub conventions: ConventionPair,
    pub baselines: BaselineSet,
}

impl ObjectiveParams {
    pub fn new(
        nu: Rational,
        leave: LeaveDistribution,
        conventions: ConventionPair,
        baselines: BaselineSet,
    ) -> Result<Self> {
        if !rational::in_unit_interval(&nu) {
            return Err(Error::InvalidParameter(format!(
                "nu = {} is outside [0, 1]",
                rational::format(&nu)
            )));
        }
        let params = Self {
            nu,
            leave,
            conventions,
            baselines,
        };
        for leaver in params.leave.leavers() {
            if params.baselines.get(leaver).is_none() {
                return Err(Error::MissingBaseline(format!("{leaver:?}")));
            }
        }
        Ok(params)
    }

    pub(crate) fn baseline(&self, instance: &Instance, leaver: Leaver) -> Result<&Matching> {
        self.baselines
            .get(leaver)
            .ok_or_else(|| Error::MissingBaseline(leaver.label(instance)))
    }

    /// Leavers with positive probability (nobody included when `p_phi > 0`).
    pub(crate) fn active_leavers(&self) -> Vec<Leaver> {
        self.leave
            .leavers()
            .into_iter()
            .filter(|&l| !self.leave.prob(l).is_zero())
            .collect()
    }
}

/// Cost `agent` displays when matched to `partner` and `leaver` departs.
pub(crate) fn shown_cost<'a>(
    instance: &'a Instance,
    agent: AgentIdx,
    partner: AgentIdx,
    leaver: Leaver,
    convention: Convention,
) -> &'a Rational {
    if leaver == Leaver::Agent(partner) && partner != agent {
        match convention {
            Convention::SelfCost => instance.cost(agent, agent),
            Convention::Retained => instance.cost(agent, partner),
        }
    } else {
        instance.cost(agent, partner)
    }
}

/// The cost `agent` displays under `matching` once `leaver` has departed.
pub fn displayed_cost<'a>(
    instance: &'a Instance,
    matching: &Matching,
    leaver: Leaver,
    agent: AgentIdx,
    convention: Convention,
) -> Result<&'a Rational> {
    if leaver == Leaver::Agent(agent) {
        return Err(Error::InvalidParameter(format!(
            "`{}` is the leaver and displays no cost",
            instance.id(agent)
        )));
    }
    Ok(shown_cost(
        instance,
        agent,
        matching.partner(agent),
        leaver,
        convention,
    ))
}

/// Unweighted contribution of one remaining agent for one departure.
pub(crate) fn agent_term(
    instance: &Instance,
    agent: AgentIdx,
    partner: AgentIdx,
    leaver: Leaver,
    baseline: &Matching,
    params: &ObjectiveParams,
) -> Rational {
    let one_minus_nu = Rational::one() - &params.nu;
    let mut term = Rational::zero();
    if !params.nu.is_zero() {
        let d = shown_cost(instance, agent, partner, leaver, params.conventions.cost_term);
        term += &params.nu * square(d);
    }
    if !one_minus_nu.is_zero() {
        let r = shown_cost(instance, agent, partner, leaver, params.conventions.regret_term);
        let b = instance.cost(agent, baseline.partner(agent));
        term += one_minus_nu * square(&(r - b));
    }
    term
}

/// Probability-weighted objective contribution of each departure, nobody first.
pub fn psi_breakdown(
    instance: &Instance,
    matching: &Matching,
    params: &ObjectiveParams,
) -> Result<Vec<(Leaver, Rational)>> {
    if matching.len() != instance.num_agents() {
        return Err(Error::InvalidMatching("matching does not fit the instance".into()));
    }
    let mut out = Vec::new();
    for leaver in params.leave.leavers() {
        let p = params.leave.prob(leaver);
        if p.is_zero() {
            out.push((leaver, Rational::zero()));
            continue;
        }
        let baseline = params.baseline(instance, leaver)?;
        let mut inner = Rational::zero();
        for agent in (0..instance.num_agents()).filter(|&a| Leaver::Agent(a) != leaver) {
            inner += agent_term(instance, agent, matching.partner(agent), leaver, baseline, params);
        }
        out.push((leaver, p * inner));
    }
    Ok(out)
}

/// The robustness objective of `matching`.
pub fn psi(instance: &Instance, matching: &Matching, params: &ObjectiveParams) -> Result<Rational> {
    Ok(psi_breakdown(instance, matching, params)?
        .into_iter()
        .map(|(_, v)| v)
        .sum())
}

/// Precomputed per-(agent, partner) expected contributions.
///
/// `psi(mu) = sum_a table[a][mu(a)]`; used where the objective is evaluated for
/// many matchings of the same instance.
pub struct PsiTable {
    table: Vec<Vec<Option<Rational>>>,
}

impl PsiTable {
    pub fn new(instance: &Instance, params: &ObjectiveParams) -> Result<Self> {
        let n = instance.num_agents();
        let leavers = params.active_leavers();
        let baselines = leavers
            .iter()
            .map(|&l| params.baseline(instance, l))
            .collect::<Result<Vec<_>>>()?;
        let mut table = vec![vec![None; n]; n];
        for (agent, row) in table.iter_mut().enumerate() {
            for &partner in instance.preferences(agent) {
                let mut value = Rational::zero();
                for (&leaver, baseline) in leavers.iter().zip(&baselines) {
                    if leaver == Leaver::Agent(agent) {
                        continue;
                    }
                    let term = agent_term(instance, agent, partner, leaver, baseline, params);
                    value += params.leave.prob(leaver) * term;
                }
                row[partner] = Some(value);
            }
        }
        Ok(Self { table })
    }

    pub fn psi(&self, matching: &Matching) -> Rational {
        matching
            .partners()
            .iter()
            .enumerate()
            .map(|(a, &b)| self.table[a][b].as_ref().expect("sex-respecting matching"))
            .sum()
    }
}

/// Expected number of blocking pairs once the departure is realised.
///
/// When an agent leaves, its partner becomes single and everyone else keeps
/// their partner; blocking pairs are counted among the remaining agents.
pub fn expected_blocking_pairs(
    instance: &Instance,
    matching: &Matching,
    leave: &LeaveDistribution,
) -> Result<Rational> {
    if matching.len() != instance.num_agents() {
        return Err(Error::InvalidMatching("matching does not fit the instance".into()));
    }
    let mut total = Rational::zero();
    for leaver in leave.leavers() {
        let p = leave.prob(leaver);
        if p.is_zero() {
            continue;
        }
        let mut partner = matching.partners().to_vec();
        if let Some(gone) = leaver.agent() {
            let abandoned = partner[gone];
            partner[abandoned] = abandoned;
            partner[gone] = gone;
        }
        let count = blocking_pairs_of(instance, &partner, leaver.agent()).len();
        total += p * rational::int(count as i64);
    }
    Ok(total)
}
