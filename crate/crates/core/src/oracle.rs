//! Brute-force references for small markets. Deliberately naive.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{is_stable, AgentIdx, Instance, Matching};
use crate::objective::{ObjectiveParams, PsiTable};
use crate::rational::Rational;

pub const DEFAULT_MATCHING_BOUND: usize = 12;
pub const DEFAULT_POSET_BOUND: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Stable,
    All,
}

fn check_bound(instance: &Instance, bound: usize) -> Result<()> {
    if instance.num_agents() > bound {
        return Err(Error::BoundExceeded {
            agents: instance.num_agents(),
            bound,
        });
    }
    Ok(())
}

/// Every sex-respecting involution, singles included.
pub fn enumerate_matchings(instance: &Instance) -> Result<Vec<Matching>> {
    enumerate_matchings_bounded(instance, DEFAULT_MATCHING_BOUND)
}

pub fn enumerate_matchings_bounded(instance: &Instance, bound: usize) -> Result<Vec<Matching>> {
    check_bound(instance, bound)?;
    let n = instance.num_agents();
    let men: Vec<AgentIdx> = instance.men().collect();
    let mut out = Vec::new();
    let mut partner: Vec<AgentIdx> = (0..n).collect();
    fn go(at: usize, men: &[AgentIdx], instance: &Instance, partner: &mut Vec<AgentIdx>, out: &mut Vec<Matching>) {
        if at == men.len() {
            out.push(Matching::from_partner_unchecked(partner.clone()));
            return;
        }
        let m = men[at];
        go(at + 1, men, instance, partner, out);
        for w in instance.women() {
            if partner[w] == w {
                partner[m] = w;
                partner[w] = m;
                go(at + 1, men, instance, partner, out);
                partner[m] = m;
                partner[w] = w;
            }
        }
    }
    go(0, &men, instance, &mut partner, &mut out);
    Ok(out)
}

pub fn enumerate_stable_matchings(instance: &Instance) -> Result<Vec<Matching>> {
    Ok(enumerate_matchings(instance)?
        .into_iter()
        .filter(|m| is_stable(instance, m).map(|(s, _)| s).unwrap_or(false))
        .collect())
}

/// Exact minimiser of the objective over the chosen domain; ties go to the
/// earliest matching in enumeration order.
pub fn brute_solve(instance: &Instance, params: &ObjectiveParams, domain: Domain) -> Result<(Matching, Rational)> {
    let candidates = match domain {
        Domain::Stable => enumerate_stable_matchings(instance)?,
        Domain::All => enumerate_matchings(instance)?,
    };
    let table = PsiTable::new(instance, params)?;
    let mut best: Option<(Matching, Rational)> = None;
    for m in candidates {
        let value = table.psi(&m);
        if best.as_ref().map_or(true, |(_, b)| value < *b) {
            best = Some((m, value));
        }
    }
    Ok(best.expect("at least the empty matching exists"))
}

/// A rotation identified by its set of `(man, woman)` pairs.
pub type RotationKey = BTreeSet<(AgentIdx, AgentIdx)>;

/// Rotation poset recovered by exploring every elimination sequence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PosetOracle {
    pub rotations: Vec<RotationKey>,
    /// `(a, b)`: rotation `a` must be eliminated before rotation `b`.
    pub precedes: BTreeSet<(usize, usize)>,
    /// Eliminated rotation set of every stable matching reached.
    pub states: BTreeMap<Matching, BTreeSet<usize>>,
}

/// Rotations exposed in a stable matching, straight from the definition.
fn naive_exposed(instance: &Instance, mu: &Matching) -> Vec<RotationKey> {
    let succ: HashMap<AgentIdx, (AgentIdx, AgentIdx)> = instance
        .men()
        .filter(|&m| !mu.is_single(m))
        .filter_map(|m| {
            let prefs = instance.preferences(m);
            let at = prefs.iter().position(|&w| w == mu.partner(m)).expect("candidate");
            let w = prefs[at + 1..]
                .iter()
                .copied()
                .take_while(|&w| w != m)
                .find(|&w| instance.prefers(w, m, mu.partner(w)))?;
            (!mu.is_single(w)).then(|| (m, (w, mu.partner(w))))
        })
        .collect();
    let mut found = BTreeSet::new();
    for &start in succ.keys() {
        let mut path = vec![start];
        let mut cur = start;
        while let Some(&(_, next)) = succ.get(&cur) {
            if let Some(at) = path.iter().position(|&x| x == next) {
                let key: RotationKey = path[at..].iter().map(|&m| (m, mu.partner(m))).collect();
                found.insert(key);
                break;
            }
            if path.len() > instance.num_men() {
                break;
            }
            path.push(next);
            cur = next;
        }
    }
    found.into_iter().collect()
}

fn eliminate_naive(instance: &Instance, mu: &Matching, rotation: &RotationKey) -> Matching {
    let mut partner = mu.partners().to_vec();
    // Each man takes his first woman below the current partner who prefers him.
    let moves: Vec<(AgentIdx, AgentIdx)> = rotation
        .iter()
        .map(|&(m, w)| {
            let prefs = instance.preferences(m);
            let at = prefs.iter().position(|&x| x == w).expect("candidate");
            let next = prefs[at + 1..]
                .iter()
                .copied()
                .find(|&x| instance.prefers(x, m, mu.partner(x)))
                .expect("rotation member has a successor");
            (m, next)
        })
        .collect();
    for (m, w) in moves {
        partner[m] = w;
        partner[w] = m;
    }
    Matching::from_partner_unchecked(partner)
}

pub fn poset_oracle(instance: &Instance) -> Result<PosetOracle> {
    check_bound(instance, DEFAULT_POSET_BOUND)?;
    let stable = enumerate_stable_matchings(instance)?;
    // Men-optimal: the stable matching every man likes at least as well as any other.
    let top = stable
        .iter()
        .min_by_key(|mu| {
            instance
                .men()
                .map(|m| instance.rank(m, mu.partner(m)).expect("candidate"))
                .sum::<usize>()
        })
        .expect("a stable matching exists")
        .clone();
    let mut keys: BTreeMap<RotationKey, usize> = BTreeMap::new();
    let mut states: BTreeMap<Matching, BTreeSet<usize>> = BTreeMap::new();
    let mut stack = vec![(top, BTreeSet::new())];
    while let Some((mu, eliminated)) = stack.pop() {
        if let Some(seen) = states.get(&mu) {
            assert_eq!(seen, &eliminated, "eliminated set depends only on the matching");
            continue;
        }
        for rotation in naive_exposed(instance, &mu) {
            let next_id = keys.len();
            let id = *keys.entry(rotation.clone()).or_insert(next_id);
            let mut after = eliminated.clone();
            after.insert(id);
            stack.push((eliminate_naive(instance, &mu, &rotation), after));
        }
        states.insert(mu, eliminated);
    }
    let mut rotations: Vec<RotationKey> = vec![BTreeSet::new(); keys.len()];
    for (key, id) in keys {
        rotations[id] = key;
    }
    let mut precedes = BTreeSet::new();
    for a in 0..rotations.len() {
        for b in 0..rotations.len() {
            if a != b && states.values().filter(|s| s.contains(&b)).all(|s| s.contains(&a)) {
                precedes.insert((a, b));
            }
        }
    }
    Ok(PosetOracle {
        rotations,
        precedes,
        states,
    })
}
