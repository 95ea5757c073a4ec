//! Deferred acceptance, rotations and the sparse rotation digraph.
//!
//! Rotations are discovered along a single maximal elimination chain from the
//! men-optimal matching down to the women-optimal one: every rotation of the
//! instance is eliminated exactly once on any such chain.

use std::collections::{BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AgentIdx, Instance, Matching, Sex};

/// Which side proposes in deferred acceptance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Men,
    Women,
}

impl Side {
    fn sex(self) -> Sex {
        match self {
            Side::Men => Sex::Man,
            Side::Women => Sex::Woman,
        }
    }
}

/// Remaining candidate lists after deferred acceptance and rotation eliminations.
///
/// Lists are in preference order and never contain self. For the proposing
/// side the head of the list is the current partner; for the other side the
/// tail is. Membership is symmetric.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Shortlists {
    side: Side,
    lists: Vec<Vec<AgentIdx>>,
    partner: Vec<AgentIdx>,
}

impl Shortlists {
    /// Shortlists of a stable matching, oriented towards `side`.
    ///
    /// `(p, r)` survives iff both find each other acceptable, `p` does not
    /// prefer `r` to its partner, and `r` does not prefer its partner to `p`.
    pub fn of_stable_matching(instance: &Instance, matching: &Matching, side: Side) -> Self {
        let n = instance.num_agents();
        let mut lists = vec![Vec::new(); n];
        let partner = matching.partners().to_vec();
        for p in (0..n).filter(|&a| instance.sex(a) == side.sex()) {
            for &r in instance.preferences(p) {
                if r == p || !instance.acceptable(p, r) || !instance.acceptable(r, p) {
                    continue;
                }
                if instance.prefers(p, r, partner[p]) || instance.prefers(r, partner[r], p) {
                    continue;
                }
                lists[p].push(r);
            }
        }
        for p in (0..n).filter(|&a| instance.sex(a) == side.sex()) {
            for i in 0..lists[p].len() {
                let r = lists[p][i];
                lists[r].push(p);
            }
        }
        for r in (0..n).filter(|&a| instance.sex(a) != side.sex()) {
            lists[r].sort_by_key(|&p| instance.rank(r, p));
        }
        Self {
            side,
            lists,
            partner,
        }
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn list(&self, agent: AgentIdx) -> &[AgentIdx] {
        &self.lists[agent]
    }

    pub fn contains(&self, agent: AgentIdx, candidate: AgentIdx) -> bool {
        self.lists[agent].contains(&candidate)
    }

    pub fn partner(&self, agent: AgentIdx) -> AgentIdx {
        self.partner[agent]
    }

    pub fn matching(&self) -> Matching {
        Matching::from_partner_unchecked(self.partner.clone())
    }

    fn is_proposer(&self, instance: &Instance, agent: AgentIdx) -> bool {
        instance.sex(agent) == self.side.sex()
    }

    fn delete_pair(&mut self, a: AgentIdx, b: AgentIdx) {
        self.lists[a].retain(|&x| x != b);
        self.lists[b].retain(|&x| x != a);
    }
}

/// A cycle of matched pairs `(p_k, r_k)` in which `r_{k+1}` is second on `p_k`'s shortlist.
///
/// Pairs are stored proposer first; for men-oriented shortlists that is
/// `(man, woman)`. The cycle starts at its smallest proposer.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rotation {
    pairs: Vec<(AgentIdx, AgentIdx)>,
}

impl Rotation {
    /// Builds a rotation, normalising the cycle start. Needs at least two pairs.
    pub fn new(pairs: Vec<(AgentIdx, AgentIdx)>) -> Result<Self> {
        if pairs.len() < 2 {
            return Err(Error::InvalidParameter("a rotation has at least two pairs".into()));
        }
        let start = (0..pairs.len()).min_by_key(|&i| pairs[i].0).expect("nonempty");
        let mut pairs = pairs;
        pairs.rotate_left(start);
        Ok(Self { pairs })
    }

    pub fn pairs(&self) -> &[(AgentIdx, AgentIdx)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// `(proposer, from, to)` for each member of the cycle.
    pub fn moves(&self) -> impl Iterator<Item = (AgentIdx, AgentIdx, AgentIdx)> + '_ {
        let r = self.pairs.len();
        (0..r).map(move |k| (self.pairs[k].0, self.pairs[k].1, self.pairs[(k + 1) % r].1))
    }

    /// All agents moved by the rotation.
    pub fn members(&self) -> impl Iterator<Item = AgentIdx> + '_ {
        self.pairs.iter().flat_map(|&(p, r)| [p, r])
    }

    pub fn smallest_proposer(&self) -> AgentIdx {
        self.pairs[0].0
    }

    pub fn label(&self, instance: &Instance) -> String {
        let body: Vec<String> = self
            .pairs
            .iter()
            .map(|&(p, r)| format!("({},{})", instance.id(p), instance.id(r)))
            .collect();
        format!("[{}]", body.join(","))
    }
}

/// Deferred acceptance with `side` proposing.
///
/// Returns the proposer-optimal stable matching and the resulting shortlists.
/// A proposer that runs out of acceptable candidates stays single.
pub fn propose_da(instance: &Instance, side: Side) -> (Matching, Shortlists) {
    let n = instance.num_agents();
    let mut partner: Vec<AgentIdx> = (0..n).collect();
    let mut next_choice = vec![0usize; n];
    let mut queue: VecDeque<AgentIdx> = (0..n).filter(|&a| instance.sex(a) == side.sex()).collect();
    while let Some(p) = queue.pop_front() {
        let prefs = instance.preferences(p);
        loop {
            let r = prefs[next_choice[p]];
            next_choice[p] += 1;
            if r == p {
                break;
            }
            let held = partner[r];
            if instance.prefers(r, p, held) {
                if held != r {
                    partner[held] = held;
                    queue.push_back(held);
                }
                partner[r] = p;
                partner[p] = r;
                break;
            }
        }
    }
    let matching = Matching::from_partner_unchecked(partner);
    let shortlists = Shortlists::of_stable_matching(instance, &matching, side);
    (matching, shortlists)
}

/// Every rotation exposed in `shortlists`, sorted by smallest proposer.
pub fn exposed_rotations(instance: &Instance, shortlists: &Shortlists) -> Vec<Rotation> {
    let n = instance.num_agents();
    let mut succ: Vec<Option<AgentIdx>> = vec![None; n];
    for p in (0..n).filter(|&a| shortlists.is_proposer(instance, a)) {
        let list = shortlists.list(p);
        if list.len() < 2 || list[0] != shortlists.partner(p) {
            continue;
        }
        let q = shortlists.partner(list[1]);
        if q != list[1] && shortlists.list(q).first() == Some(&list[1]) {
            succ[p] = Some(q);
        }
    }
    // Cycles of the successor map; 0 = unvisited, 1 = on current path, 2 = done.
    let mut state = vec![0u8; n];
    let mut out = Vec::new();
    for start in 0..n {
        if state[start] != 0 || succ[start].is_none() {
            continue;
        }
        let mut path = Vec::new();
        let mut cur = Some(start);
        while let Some(p) = cur {
            if state[p] == 2 {
                break;
            }
            if state[p] == 1 {
                let at = path.iter().position(|&x| x == p).expect("on path");
                let pairs = path[at..]
                    .iter()
                    .map(|&m| (m, shortlists.partner(m)))
                    .collect();
                out.push(Rotation::new(pairs).expect("cycles have length >= 2"));
                break;
            }
            state[p] = 1;
            path.push(p);
            cur = succ[p];
        }
        for p in path {
            state[p] = 2;
        }
    }
    out.sort_by_key(Rotation::smallest_proposer);
    out
}

fn is_exposed(shortlists: &Shortlists, rotation: &Rotation) -> bool {
    rotation.moves().all(|(p, from, to)| {
        let list = shortlists.list(p);
        list.len() >= 2 && list[0] == from && list[1] == to && shortlists.partner(p) == from
    })
}

/// Eliminates an exposed rotation: each proposer moves to the next partner in
/// the cycle, the abandoned pairs are deleted, and each receiver deletes every
/// proposer she now ranks below her new partner.
pub fn eliminate_rotation(
    instance: &Instance,
    shortlists: &Shortlists,
    rotation: &Rotation,
) -> Result<Shortlists> {
    if !is_exposed(shortlists, rotation) {
        return Err(Error::NotExposed);
    }
    let mut next = shortlists.clone();
    for (p, from, to) in rotation.moves() {
        next.partner[p] = to;
        next.partner[to] = p;
        next.delete_pair(p, from);
    }
    for (p, _, to) in rotation.moves() {
        let worse: Vec<AgentIdx> = next.lists[to]
            .iter()
            .copied()
            .filter(|&q| instance.prefers(to, p, q))
            .collect();
        for q in worse {
            next.delete_pair(q, to);
        }
    }
    Ok(next)
}

/// All rotations of an instance with the pair bookkeeping used for the digraph.
#[derive(Clone, Debug)]
pub struct RotationSet {
    pub rotations: Vec<Rotation>,
    /// `(man, woman)` -> rotation that matches the man to the woman.
    pub move_to: HashMap<(AgentIdx, AgentIdx), usize>,
    /// `(man, woman)` -> rotation that separates the pair.
    pub move_from: HashMap<(AgentIdx, AgentIdx), usize>,
    /// `(man, woman)` -> rotation after which the woman ranks the man below her partner.
    pub removed_by: HashMap<(AgentIdx, AgentIdx), usize>,
}

/// Enumerates every rotation by walking one maximal elimination chain from
/// the men-optimal matching. Rotations are ordered by smallest man, then by
/// discovery.
pub fn enumerate_rotations(instance: &Instance) -> RotationSet {
    let (_, mut state) = propose_da(instance, Side::Men);
    let mut discovered: Vec<Rotation> = Vec::new();
    let mut move_to = Vec::new();
    let mut move_from = Vec::new();
    let mut removed_by = Vec::new();
    loop {
        let exposed = exposed_rotations(instance, &state);
        let Some(rotation) = exposed.into_iter().next() else {
            break;
        };
        let id = discovered.len();
        for (m, from, to) in rotation.moves() {
            move_from.push(((m, from), id));
            move_to.push(((m, to), id));
        }
        // The receiver `to` trades her old partner for `m`; men strictly between
        // lose her for good.
        let pairs = rotation.pairs();
        let r = pairs.len();
        for k in 0..r {
            let (m_new, _) = pairs[k];
            let (m_old, w) = pairs[(k + 1) % r];
            for &m in instance.preferences(w) {
                if instance.prefers(w, m_new, m) && instance.prefers(w, m, m_old) {
                    removed_by.push(((m, w), id));
                }
            }
        }
        state = eliminate_rotation(instance, &state, &rotation).expect("freshly exposed");
        discovered.push(rotation);
    }

    let mut order: Vec<usize> = (0..discovered.len()).collect();
    order.sort_by_key(|&i| (discovered[i].smallest_proposer(), i));
    let mut renumber = vec![0; discovered.len()];
    for (new, &old) in order.iter().enumerate() {
        renumber[old] = new;
    }
    let remap = |v: Vec<((AgentIdx, AgentIdx), usize)>| -> HashMap<(AgentIdx, AgentIdx), usize> {
        v.into_iter().map(|(k, id)| (k, renumber[id])).collect()
    };
    let mut slots: Vec<Option<Rotation>> = discovered.into_iter().map(Some).collect();
    let rotations = order
        .iter()
        .map(|&old| slots[old].take().expect("each rotation once"))
        .collect();
    RotationSet {
        rotations,
        move_to: remap(move_to),
        move_from: remap(move_from),
        removed_by: remap(removed_by),
    }
}

/// Sparse precedence digraph over the rotations; an edge `a -> b` means `a`
/// must be eliminated before `b`.
#[derive(Clone, Debug)]
pub struct RotationDigraph {
    men_optimal: Matching,
    set: RotationSet,
    edges: Vec<(usize, usize)>,
    preds: Vec<Vec<usize>>,
    succs: Vec<Vec<usize>>,
    topo: Vec<usize>,
}

/// Builds the sparse rotation digraph.
///
/// Two edge kinds: from the rotation that brings a man to a woman to the one
/// that takes him away; and, when a rotation moves a man past women he was
/// never matched to, from each rotation that made such a woman reject him.
pub fn build_rotation_digraph(instance: &Instance) -> RotationDigraph {
    let (men_optimal, _) = propose_da(instance, Side::Men);
    let set = enumerate_rotations(instance);
    let mut edges = BTreeSet::new();
    for (pair, &to_id) in &set.move_to {
        if let Some(&from_id) = set.move_from.get(pair) {
            edges.insert((to_id, from_id));
        }
    }
    for (id, rotation) in set.rotations.iter().enumerate() {
        for (m, from, to) in rotation.moves() {
            let lo = instance.rank(m, from).expect("candidate");
            let hi = instance.rank(m, to).expect("candidate");
            for &w in &instance.preferences(m)[lo + 1..hi] {
                if let Some(&by) = set.removed_by.get(&(m, w)) {
                    edges.insert((by, id));
                }
            }
        }
    }
    debug_assert!(edges.iter().all(|&(a, b)| a != b));
    let k = set.rotations.len();
    let edges: Vec<(usize, usize)> = edges.into_iter().collect();
    let mut preds = vec![Vec::new(); k];
    let mut succs = vec![Vec::new(); k];
    for &(a, b) in &edges {
        preds[b].push(a);
        succs[a].push(b);
    }
    let mut indegree: Vec<usize> = preds.iter().map(Vec::len).collect();
    let mut ready: BTreeSet<usize> = (0..k).filter(|&i| indegree[i] == 0).collect();
    let mut topo = Vec::with_capacity(k);
    while let Some(i) = ready.pop_first() {
        topo.push(i);
        for &j in &succs[i] {
            indegree[j] -= 1;
            if indegree[j] == 0 {
                ready.insert(j);
            }
        }
    }
    assert_eq!(topo.len(), k, "rotation digraph must be acyclic");
    RotationDigraph {
        men_optimal,
        set,
        edges,
        preds,
        succs,
        topo,
    }
}

impl RotationDigraph {
    pub fn rotations(&self) -> &[Rotation] {
        &self.set.rotations
    }

    pub fn rotation_set(&self) -> &RotationSet {
        &self.set
    }

    pub fn len(&self) -> usize {
        self.set.rotations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.set.rotations.is_empty()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn predecessors(&self, node: usize) -> &[usize] {
        &self.preds[node]
    }

    pub fn successors(&self, node: usize) -> &[usize] {
        &self.succs[node]
    }

    pub fn topological_order(&self) -> &[usize] {
        &self.topo
    }

    pub fn men_optimal(&self) -> &Matching {
        &self.men_optimal
    }

    pub fn is_closed(&self, subset: &BTreeSet<usize>) -> bool {
        subset
            .iter()
            .all(|&i| i < self.len() && self.preds[i].iter().all(|p| subset.contains(p)))
    }

    /// Reachability matrix: `closure[a][b]` iff a nonempty path leads from `a` to `b`.
    pub fn transitive_closure(&self) -> Vec<Vec<bool>> {
        let k = self.len();
        let mut reach = vec![vec![false; k]; k];
        for &i in self.topo.iter().rev() {
            for &j in &self.succs[i] {
                reach[i][j] = true;
                let row = reach[j].clone();
                for (x, r) in row.into_iter().enumerate() {
                    reach[i][x] |= r;
                }
            }
        }
        reach
    }

    /// The stable matching reached by eliminating a closed set of rotations.
    pub fn matching_of_closed_subset(&self, subset: &BTreeSet<usize>) -> Result<Matching> {
        if !self.is_closed(subset) {
            return Err(Error::NotClosed);
        }
        let mut partner = self.men_optimal.partners().to_vec();
        for &i in self.topo.iter().filter(|i| subset.contains(i)) {
            for (m, _, to) in self.set.rotations[i].moves() {
                partner[m] = to;
                partner[to] = m;
            }
        }
        Ok(Matching::from_partner_unchecked(partner))
    }

    /// Eliminates rotations in the given order through the shortlists, failing
    /// as soon as one is not exposed.
    pub fn eliminate_in_order(&self, instance: &Instance, order: &[usize]) -> Result<Matching> {
        let mut state = Shortlists::of_stable_matching(instance, &self.men_optimal, Side::Men);
        for &i in order {
            let rotation = self.set.rotations.get(i).ok_or(Error::NotExposed)?;
            state = eliminate_rotation(instance, &state, rotation)?;
        }
        Ok(state.matching())
    }

    /// Every closed subset, in a deterministic order. Exponential; small digraphs only.
    pub fn closed_subsets(&self) -> Vec<BTreeSet<usize>> {
        let mut out = Vec::new();
        let mut current = BTreeSet::new();
        self.closed_from(0, &mut current, &mut out);
        out
    }

    fn closed_from(&self, at: usize, current: &mut BTreeSet<usize>, out: &mut Vec<BTreeSet<usize>>) {
        if at == self.topo.len() {
            out.push(current.clone());
            return;
        }
        let node = self.topo[at];
        self.closed_from(at + 1, current, out);
        if self.preds[node].iter().all(|p| current.contains(p)) {
            current.insert(node);
            self.closed_from(at + 1, current, out);
            current.remove(&node);
        }
    }
}
