//! Market instances, departure distributions, matchings and stability.
//!
//! Agents are addressed by dense indices. Men come first, sorted by id,
//! followed by women sorted by id, so index order agrees with id order on
//! each side. Every agent is a candidate for itself; being self-matched
//! means staying single.

use std::collections::{HashMap, HashSet};
use std::fmt;

use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};

pub type AgentIdx = usize;

const NOT_CANDIDATE: usize = usize::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sex {
    Man,
    Woman,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Agent {
    pub id: String,
    pub sex: Sex,
}

/// A two-sided market with strict nonnegative costs over the opposite sex and self.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    agents: Vec<Agent>,
    num_men: usize,
    index: HashMap<String, AgentIdx>,
    cost: Vec<Vec<Option<Rational>>>,
    rank: Vec<Vec<usize>>,
    prefs: Vec<Vec<AgentIdx>>,
}

impl Instance {
    /// Builds and validates an instance from `(agent, candidate, cost)` entries.
    pub fn new<I>(men: Vec<String>, women: Vec<String>, costs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, String, Rational)>,
    {
        let mut men = men;
        let mut women = women;
        men.sort();
        women.sort();
        let num_men = men.len();
        let agents: Vec<Agent> = men
            .into_iter()
            .map(|id| Agent { id, sex: Sex::Man })
            .chain(women.into_iter().map(|id| Agent { id, sex: Sex::Woman }))
            .collect();
        let mut index = HashMap::with_capacity(agents.len());
        for (i, agent) in agents.iter().enumerate() {
            if index.insert(agent.id.clone(), i).is_some() {
                return Err(Error::DuplicateAgent(agent.id.clone()));
            }
        }

        let n = agents.len();
        let mut cost: Vec<Vec<Option<Rational>>> = vec![vec![None; n]; n];
        for (agent, candidate, value) in costs {
            let a = *index.get(&agent).ok_or_else(|| Error::UnknownAgent(agent.clone()))?;
            let b = *index
                .get(&candidate)
                .ok_or_else(|| Error::UnknownAgent(candidate.clone()))?;
            if a != b && agents[a].sex == agents[b].sex {
                return Err(Error::InvalidCandidate { agent, candidate });
            }
            if value < Rational::zero() {
                return Err(Error::NegativeCost(agent));
            }
            if cost[a][b].is_some() {
                return Err(Error::Malformed(format!(
                    "agent `{agent}` lists candidate `{candidate}` twice"
                )));
            }
            cost[a][b] = Some(value);
        }
        Self::from_parts(agents, num_men, index, cost)
    }

    /// Builds an instance with rank costs: the k-th listed candidate costs k.
    /// Each list must name every opposite-sex agent and the agent itself.
    pub fn from_rankings(men: &[&str], women: &[&str], lists: &[(&str, &[&str])]) -> Result<Self> {
        let costs = lists.iter().flat_map(|(agent, list)| {
            list.iter().enumerate().map(move |(k, candidate)| {
                (agent.to_string(), candidate.to_string(), rational::int(k as i64 + 1))
            })
        });
        Self::new(
            men.iter().map(|s| s.to_string()).collect(),
            women.iter().map(|s| s.to_string()).collect(),
            costs.collect::<Vec<_>>(),
        )
    }

    fn from_parts(
        agents: Vec<Agent>,
        num_men: usize,
        index: HashMap<String, AgentIdx>,
        cost: Vec<Vec<Option<Rational>>>,
    ) -> Result<Self> {
        let n = agents.len();
        let mut rank = vec![vec![NOT_CANDIDATE; n]; n];
        let mut prefs = Vec::with_capacity(n);
        for a in 0..n {
            let mut list: Vec<AgentIdx> = Vec::new();
            for b in 0..n {
                let admissible = a == b || agents[a].sex != agents[b].sex;
                if admissible {
                    if cost[a][b].is_none() {
                        return Err(Error::MissingCost {
                            agent: agents[a].id.clone(),
                            candidate: agents[b].id.clone(),
                        });
                    }
                    list.push(b);
                }
            }
            list.sort_by(|&x, &y| cost[a][x].cmp(&cost[a][y]));
            for pair in list.windows(2) {
                if cost[a][pair[0]] == cost[a][pair[1]] {
                    return Err(Error::TiedCost {
                        agent: agents[a].id.clone(),
                        first: agents[pair[0]].id.clone(),
                        second: agents[pair[1]].id.clone(),
                    });
                }
            }
            for (k, &b) in list.iter().enumerate() {
                rank[a][b] = k;
            }
            prefs.push(list);
        }
        Ok(Self {
            agents,
            num_men,
            index,
            cost,
            rank,
            prefs,
        })
    }

    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn num_men(&self) -> usize {
        self.num_men
    }

    pub fn num_women(&self) -> usize {
        self.agents.len() - self.num_men
    }

    pub fn men(&self) -> std::ops::Range<AgentIdx> {
        0..self.num_men
    }

    pub fn women(&self) -> std::ops::Range<AgentIdx> {
        self.num_men..self.agents.len()
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn id(&self, agent: AgentIdx) -> &str {
        &self.agents[agent].id
    }

    pub fn sex(&self, agent: AgentIdx) -> Sex {
        self.agents[agent].sex
    }

    pub fn index_of(&self, id: &str) -> Result<AgentIdx> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownAgent(id.to_string()))
    }

    /// Cost `agent` attaches to `candidate`.
    ///
    /// Panics if `candidate` is a same-sex agent other than `agent`.
    pub fn cost(&self, agent: AgentIdx, candidate: AgentIdx) -> &Rational {
        self.cost[agent][candidate]
            .as_ref()
            .expect("cost queried for a same-sex candidate")
    }

    pub fn try_cost(&self, agent: AgentIdx, candidate: AgentIdx) -> Option<&Rational> {
        self.cost[agent][candidate].as_ref()
    }

    /// Position of `candidate` in `agent`'s preference order (0 = best).
    pub fn rank(&self, agent: AgentIdx, candidate: AgentIdx) -> Option<usize> {
        match self.rank[agent][candidate] {
            NOT_CANDIDATE => None,
            r => Some(r),
        }
    }

    /// Candidates of `agent` in strictly increasing cost, self included.
    pub fn preferences(&self, agent: AgentIdx) -> &[AgentIdx] {
        &self.prefs[agent]
    }

    /// True if `agent` strictly prefers `x` to `y`.
    pub fn prefers(&self, agent: AgentIdx, x: AgentIdx, y: AgentIdx) -> bool {
        self.rank[agent][x] < self.rank[agent][y]
    }

    /// True if `agent` prefers `candidate` to staying single.
    pub fn acceptable(&self, agent: AgentIdx, candidate: AgentIdx) -> bool {
        candidate != agent && self.rank[agent][candidate] < self.rank[agent][agent]
    }

    /// Removes `leaver`, keeping every other cost unchanged.
    pub fn remove_agent(&self, leaver: &str) -> Result<Instance> {
        let gone = self.index_of(leaver)?;
        let keep: Vec<AgentIdx> = (0..self.num_agents()).filter(|&a| a != gone).collect();
        let agents: Vec<Agent> = keep.iter().map(|&a| self.agents[a].clone()).collect();
        let num_men = self.num_men - usize::from(self.sex(gone) == Sex::Man);
        let index = agents
            .iter()
            .enumerate()
            .map(|(i, a)| (a.id.clone(), i))
            .collect();
        let cost = keep
            .iter()
            .map(|&a| keep.iter().map(|&b| self.cost[a][b].clone()).collect())
            .collect();
        Self::from_parts(agents, num_men, index, cost)
    }
}

/// Which agent departs, if any.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Leaver {
    Nobody,
    Agent(AgentIdx),
}

impl Leaver {
    pub fn agent(self) -> Option<AgentIdx> {
        match self {
            Leaver::Nobody => None,
            Leaver::Agent(a) => Some(a),
        }
    }

    pub fn label(self, instance: &Instance) -> String {
        match self {
            Leaver::Nobody => "phi".to_string(),
            Leaver::Agent(a) => instance.id(a).to_string(),
        }
    }
}

/// Probability that nobody leaves plus per-agent departure probabilities.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LeaveDistribution {
    phi: Rational,
    per_agent: Vec<Rational>,
}

impl LeaveDistribution {
    /// Validates that every probability lies in `[0, 1]` and the total is exactly one.
    pub fn new(phi: Rational, per_agent: Vec<Rational>) -> Result<Self> {
        for p in std::iter::once(&phi).chain(per_agent.iter()) {
            if !rational::in_unit_interval(p) {
                return Err(Error::InvalidProbability(format!(
                    "{} is outside [0, 1]",
                    rational::format(p)
                )));
            }
        }
        let total: Rational = per_agent.iter().fold(phi.clone(), |acc, p| acc + p);
        if total != Rational::one() {
            return Err(Error::InvalidProbability(format!(
                "probabilities sum to {}, not 1",
                rational::format(&total)
            )));
        }
        Ok(Self { phi, per_agent })
    }

    /// Builds a distribution from `(agent id, probability)` entries; unlisted agents get 0.
    pub fn from_ids<'a, I>(instance: &Instance, phi: Rational, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, Rational)>,
    {
        let mut per_agent = vec![Rational::zero(); instance.num_agents()];
        let mut seen = HashSet::new();
        for (id, p) in entries {
            let a = instance.index_of(id)?;
            if !seen.insert(a) {
                return Err(Error::Malformed(format!("duplicate leave entry for `{id}`")));
            }
            per_agent[a] = p;
        }
        Self::new(phi, per_agent)
    }

    /// The degenerate distribution in which nobody leaves.
    pub fn nobody_leaves(instance: &Instance) -> Self {
        Self {
            phi: Rational::one(),
            per_agent: vec![Rational::zero(); instance.num_agents()],
        }
    }

    /// Seeded distribution with `leavers` distinct positive-probability agents
    /// and a positive no-departure mass. Probabilities are small-denominator rationals.
    pub fn random(instance: &Instance, leavers: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = instance.num_agents();
        let mut chosen: Vec<AgentIdx> = (0..n).collect();
        chosen.shuffle(&mut rng);
        chosen.truncate(leavers.min(n));
        let weights: Vec<i64> = (0..=chosen.len()).map(|_| rng.gen_range(1..=9)).collect();
        let total: i64 = weights.iter().sum();
        let mut per_agent = vec![Rational::zero(); n];
        for (&a, &w) in chosen.iter().zip(&weights[1..]) {
            per_agent[a] = rational::ratio(w, total);
        }
        Self {
            phi: rational::ratio(weights[0], total),
            per_agent,
        }
    }

    pub fn phi(&self) -> &Rational {
        &self.phi
    }

    pub fn prob(&self, leaver: Leaver) -> &Rational {
        match leaver {
            Leaver::Nobody => &self.phi,
            Leaver::Agent(a) => &self.per_agent[a],
        }
    }

    pub fn per_agent(&self) -> &[Rational] {
        &self.per_agent
    }

    /// `Nobody` followed by every agent with positive departure probability.
    pub fn leavers(&self) -> Vec<Leaver> {
        std::iter::once(Leaver::Nobody)
            .chain(
                self.per_agent
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| !p.is_zero())
                    .map(|(a, _)| Leaver::Agent(a)),
            )
            .collect()
    }
}

/// A sex-respecting involution over the agents; `partner[a] == a` means single.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Matching {
    partner: Vec<AgentIdx>,
}

impl Matching {
    pub fn new(instance: &Instance, partner: Vec<AgentIdx>) -> Result<Self> {
        let n = instance.num_agents();
        if partner.len() != n {
            return Err(Error::InvalidMatching(format!(
                "matching covers {} agents, instance has {n}",
                partner.len()
            )));
        }
        for (a, &b) in partner.iter().enumerate() {
            if b >= n {
                return Err(Error::InvalidMatching(format!("partner index {b} out of range")));
            }
            if partner[b] != a {
                return Err(Error::InvalidMatching(format!(
                    "`{}` and `{}` disagree about being partners",
                    instance.id(a),
                    instance.id(b)
                )));
            }
            if a != b && instance.sex(a) == instance.sex(b) {
                return Err(Error::InvalidMatching(format!(
                    "`{}` and `{}` have the same sex",
                    instance.id(a),
                    instance.id(b)
                )));
            }
        }
        Ok(Self { partner })
    }

    /// Everyone single.
    pub fn empty(instance: &Instance) -> Self {
        Self {
            partner: (0..instance.num_agents()).collect(),
        }
    }

    /// Builds a matching from id pairs; unlisted agents are single. `(x, x)` is allowed.
    pub fn from_pairs(instance: &Instance, pairs: &[(&str, &str)]) -> Result<Self> {
        let mut partner: Vec<AgentIdx> = (0..instance.num_agents()).collect();
        let mut seen = HashSet::new();
        for &(x, y) in pairs {
            let a = instance.index_of(x)?;
            let b = instance.index_of(y)?;
            for agent in [a, b] {
                if !seen.insert(agent) && a != b {
                    return Err(Error::InvalidMatching(format!(
                        "`{}` appears in more than one pair",
                        instance.id(agent)
                    )));
                }
            }
            partner[a] = b;
            partner[b] = a;
        }
        Self::new(instance, partner)
    }

    pub(crate) fn from_partner_unchecked(partner: Vec<AgentIdx>) -> Self {
        Self { partner }
    }

    pub fn partner(&self, agent: AgentIdx) -> AgentIdx {
        self.partner[agent]
    }

    pub fn partners(&self) -> &[AgentIdx] {
        &self.partner
    }

    pub fn len(&self) -> usize {
        self.partner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partner.is_empty()
    }

    pub fn is_single(&self, agent: AgentIdx) -> bool {
        self.partner[agent] == agent
    }

    /// Pairs `(a, partner(a))` with `a <= partner(a)`; singles appear as `(a, a)`.
    pub fn pairs(&self) -> Vec<(AgentIdx, AgentIdx)> {
        self.partner
            .iter()
            .enumerate()
            .filter(|&(a, &b)| a <= b)
            .map(|(a, &b)| (a, b))
            .collect()
    }

    /// Id pairs, men first in id order, then single women.
    pub fn id_pairs(&self, instance: &Instance) -> Vec<(String, String)> {
        self.pairs()
            .into_iter()
            .map(|(a, b)| (instance.id(a).to_string(), instance.id(b).to_string()))
            .collect()
    }

    pub fn display<'a>(&'a self, instance: &'a Instance) -> MatchingDisplay<'a> {
        MatchingDisplay {
            matching: self,
            instance,
        }
    }

    fn check_against(&self, instance: &Instance) -> Result<()> {
        if self.partner.len() != instance.num_agents() {
            return Err(Error::InvalidMatching(format!(
                "matching covers {} agents, instance has {}",
                self.partner.len(),
                instance.num_agents()
            )));
        }
        Ok(())
    }
}

pub struct MatchingDisplay<'a> {
    matching: &'a Matching,
    instance: &'a Instance,
}

impl fmt::Display for MatchingDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (a, b)) in self.matching.pairs().into_iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "({},{})", self.instance.id(a), self.instance.id(b))?;
        }
        write!(f, "}}")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BlockingPair {
    pub man: AgentIdx,
    pub woman: AgentIdx,
}

/// Blocking pairs of `partner` (indexed like `instance`), ordered by (man, woman).
/// Agents in `skip` are ignored.
pub(crate) fn blocking_pairs_of(
    instance: &Instance,
    partner: &[AgentIdx],
    skip: Option<AgentIdx>,
) -> Vec<BlockingPair> {
    let mut out = Vec::new();
    for m in instance.men() {
        if Some(m) == skip {
            continue;
        }
        for w in instance.women() {
            if Some(w) == skip || partner[m] == w {
                continue;
            }
            if instance.prefers(m, w, partner[m]) && instance.prefers(w, m, partner[w]) {
                out.push(BlockingPair { man: m, woman: w });
            }
        }
    }
    out
}

/// Returns whether `matching` is stable together with all of its blocking pairs.
///
/// A matching is stable when it is individually rational and has no blocking pair.
pub fn is_stable(instance: &Instance, matching: &Matching) -> Result<(bool, Vec<BlockingPair>)> {
    matching.check_against(instance)?;
    let individually_rational = (0..instance.num_agents())
        .all(|a| !instance.prefers(a, a, matching.partner(a)));
    let pairs = blocking_pairs_of(instance, matching.partners(), None);
    Ok((individually_rational && pairs.is_empty(), pairs))
}

/// Seeded random instance with `n` men and `n` women and rank costs.
///
/// With `self_rank_last` every agent ranks self last; otherwise self is inserted
/// at a seeded position in each list.
pub fn random_instance(n: usize, seed: u64, self_rank_last: bool) -> Result<Instance> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = n.to_string().len();
    let men: Vec<String> = (1..=n).map(|i| format!("m{i:0width$}")).collect();
    let women: Vec<String> = (1..=n).map(|i| format!("w{i:0width$}")).collect();
    let mut costs = Vec::with_capacity(2 * n * (n + 1));
    for (own, other) in [(&men, &women), (&women, &men)] {
        for me in own.iter() {
            let mut list: Vec<&String> = other.iter().collect();
            list.shuffle(&mut rng);
            let at = if self_rank_last {
                n
            } else {
                rng.gen_range(0..=n)
            };
            list.insert(at, me);
            for (k, candidate) in list.into_iter().enumerate() {
                costs.push((me.clone(), candidate.clone(), rational::int(k as i64 + 1)));
            }
        }
    }
    Instance::new(men, women, costs)
}
