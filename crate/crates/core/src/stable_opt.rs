//! Optimal stable matchings through the rotation digraph.
//!
//! Eliminating a rotation changes the objective by an amount that depends
//! only on the rotation itself, so the best stable matching is the
//! maximum-weight closed set of the digraph with node weights `-W(rho)`,
//! found with a minimum cut.

use std::collections::BTreeSet;

use num_traits::{Signed, Zero};
use rayon::prelude::*;

use crate::error::Result;
use crate::flow::{max_flow_min_cut, FlowNetwork, MinCut};
use crate::lattice::{build_rotation_digraph, Rotation, RotationDigraph};
use crate::model::{AgentIdx, Instance, LeaveDistribution, Leaver, Matching};
use crate::objective::{self, agent_term, BaselineSet, ConventionPair, ObjectiveParams};
use crate::rational::{self, Rational};

/// Rotation digraph with the objective change `W(rho)` of each rotation.
#[derive(Clone, Debug)]
pub struct WeightedRotationDigraph {
    pub digraph: RotationDigraph,
    /// `W(rho)`: objective after elimination minus objective before.
    pub change: Vec<Rational>,
}

impl WeightedRotationDigraph {
    pub fn new(instance: &Instance, digraph: RotationDigraph, params: &ObjectiveParams) -> Result<Self> {
        let change = digraph
            .rotations()
            .iter()
            .map(|r| rotation_weight(instance, r, params))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { digraph, change })
    }

    /// Closure weight of a node, `-W(rho)`.
    pub fn node_weight(&self, node: usize) -> Rational {
        -&self.change[node]
    }
}

/// Objective change caused by eliminating `rotation` from any stable matching exposing it.
///
/// Only the agents moved by the rotation change partner, so the change is a
/// sum over the rotation's members.
pub fn rotation_weight(instance: &Instance, rotation: &Rotation, params: &ObjectiveParams) -> Result<Rational> {
    let pairs = rotation.pairs();
    let r = pairs.len();
    // (agent, partner before, partner after)
    let mut moved: Vec<(AgentIdx, AgentIdx, AgentIdx)> = Vec::with_capacity(2 * r);
    for k in 0..r {
        let (m, w) = pairs[k];
        let (m_next, w_next) = pairs[(k + 1) % r];
        moved.push((m, w, w_next));
        moved.push((w_next, m_next, m));
    }
    let mut total = Rational::zero();
    for leaver in params.active_leavers() {
        let baseline = params.baseline(instance, leaver)?;
        let mut inner = Rational::zero();
        for &(agent, before, after) in moved.iter().filter(|m| Leaver::Agent(m.0) != leaver) {
            inner += agent_term(instance, agent, after, leaver, baseline, params);
            inner -= agent_term(instance, agent, before, leaver, baseline, params);
        }
        total += params.leave.prob(leaver) * inner;
    }
    Ok(total)
}

/// Flow network for the closure problem on the rotation digraph.
#[derive(Clone, Debug)]
pub struct ClosureNetwork {
    pub network: FlowNetwork,
    /// `1 + sum |node weight|`, standing in for infinite capacity.
    pub surrogate_infinity: Rational,
    /// Per rotation, the index of its edge into the sink, if any.
    pub sink_edge: Vec<Option<usize>>,
    /// Per rotation, the index of its edge from the source, if any.
    pub source_edge: Vec<Option<usize>>,
    /// Indices of the digraph's own edges.
    pub internal_edges: Vec<usize>,
}

impl ClosureNetwork {
    pub fn source(&self) -> usize {
        self.network.source
    }

    pub fn sink(&self) -> usize {
        self.network.sink
    }
}

/// Rotations with positive node weight feed the sink, negative ones hang off
/// the source, zero-weight ones get no terminal edge; digraph edges keep their
/// direction with surrogate-infinite capacity. Rotation `i` is node `i`; the
/// source and sink follow.
pub fn build_flow_network(weighted: &WeightedRotationDigraph) -> ClosureNetwork {
    let k = weighted.digraph.len();
    let (s, t) = (k, k + 1);
    let mut network = FlowNetwork::new(k + 2, s, t);
    let surrogate_infinity =
        rational::int(1) + weighted.change.iter().map(|w| w.abs()).sum::<Rational>();
    let mut sink_edge = vec![None; k];
    let mut source_edge = vec![None; k];
    for node in 0..k {
        let weight = weighted.node_weight(node);
        if weight.is_positive() {
            sink_edge[node] = Some(network.add_edge(node, t, weight));
        } else if weight.is_negative() {
            source_edge[node] = Some(network.add_edge(s, node, -weight));
        }
    }
    let internal_edges = weighted
        .digraph
        .edges()
        .iter()
        .map(|&(a, b)| network.add_edge(a, b, surrogate_infinity.clone()))
        .collect();
    ClosureNetwork {
        network,
        surrogate_infinity,
        sink_edge,
        source_edge,
        internal_edges,
    }
}

/// Positive rotations whose sink edge survives the cut, plus everything that reaches them.
pub fn extract_optimal_closed_subset(
    weighted: &WeightedRotationDigraph,
    network: &ClosureNetwork,
    cut: &MinCut,
) -> BTreeSet<usize> {
    let cut_edges: BTreeSet<usize> = cut.cut_edges.iter().copied().collect();
    let mut chosen = BTreeSet::new();
    let mut stack: Vec<usize> = (0..weighted.digraph.len())
        .filter(|&i| matches!(network.sink_edge[i], Some(e) if !cut_edges.contains(&e)))
        .collect();
    while let Some(node) = stack.pop() {
        if chosen.insert(node) {
            stack.extend(weighted.digraph.predecessors(node).iter().copied());
        }
    }
    chosen
}

/// Result of an optimisation run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RobustSolution {
    pub matching: Matching,
    pub psi: Rational,
    /// Eliminated rotations, as indices into the rotation digraph (stable mode only).
    pub closed_subset: Option<BTreeSet<usize>>,
    /// Probability-weighted objective per departure, nobody first.
    pub breakdown: Vec<(Leaver, Rational)>,
}

/// Minimises the objective over stable matchings for fixed parameters.
pub fn solve_with_params(instance: &Instance, params: &ObjectiveParams) -> Result<RobustSolution> {
    let digraph = build_rotation_digraph(instance);
    let weighted = WeightedRotationDigraph::new(instance, digraph, params)?;
    let network = build_flow_network(&weighted);
    let cut = max_flow_min_cut(&network.network);
    let subset = extract_optimal_closed_subset(&weighted, &network, &cut);
    let matching = weighted.digraph.matching_of_closed_subset(&subset)?;
    let breakdown = objective::psi_breakdown(instance, &matching, params)?;
    let psi = breakdown.iter().map(|(_, v)| v.clone()).sum();
    Ok(RobustSolution {
        matching,
        psi,
        closed_subset: Some(subset),
        breakdown,
    })
}

/// Stable matching minimising the sum of squared costs.
pub fn min_sumsq_stable(instance: &Instance) -> Matching {
    let digraph = build_rotation_digraph(instance);
    let mut baselines = BaselineSet::new();
    baselines.insert(Leaver::Nobody, digraph.men_optimal().clone());
    let params = ObjectiveParams::new(
        rational::int(1),
        LeaveDistribution::nobody_leaves(instance),
        ConventionPair::default(),
        baselines,
    )
    .expect("nobody-leaves parameters are valid");
    let weighted =
        WeightedRotationDigraph::new(instance, digraph, &params).expect("baseline present");
    let network = build_flow_network(&weighted);
    let cut = max_flow_min_cut(&network.network);
    let subset = extract_optimal_closed_subset(&weighted, &network, &cut);
    weighted
        .digraph
        .matching_of_closed_subset(&subset)
        .expect("extracted subsets are closed")
}

/// Lifts a matching of `instance` minus `gone` back to `instance`, with `gone` single.
fn lift(reduced: &Matching, gone: AgentIdx) -> Matching {
    let up = |i: AgentIdx| if i < gone { i } else { i + 1 };
    let n = reduced.len() + 1;
    let mut partner: Vec<AgentIdx> = (0..n).collect();
    for (i, &p) in reduced.partners().iter().enumerate() {
        partner[up(i)] = up(p);
    }
    Matching::from_partner_unchecked(partner)
}

/// Sum-of-squares optimal stable matchings of the full market and of each
/// market missing one positive-probability leaver.
pub fn compute_baselines(instance: &Instance, leave: &LeaveDistribution) -> Result<BaselineSet> {
    let leavers = leave.leavers();
    let computed = leavers
        .par_iter()
        .map(|&leaver| -> Result<(Leaver, Matching)> {
            let matching = match leaver {
                Leaver::Nobody => min_sumsq_stable(instance),
                Leaver::Agent(a) => {
                    let reduced = instance.remove_agent(instance.id(a))?;
                    lift(&min_sumsq_stable(&reduced), a)
                }
            };
            Ok((leaver, matching))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut baselines = BaselineSet::new();
    for (leaver, matching) in computed {
        baselines.insert(leaver, matching);
    }
    Ok(baselines)
}

/// Objective parameters with baselines computed for `instance`.
pub fn prepare_params(
    instance: &Instance,
    nu: Rational,
    leave: LeaveDistribution,
    conventions: ConventionPair,
) -> Result<ObjectiveParams> {
    let baselines = compute_baselines(instance, &leave)?;
    ObjectiveParams::new(nu, leave, conventions, baselines)
}

/// The stable matching minimising the robustness objective.
pub fn solve_robust(
    instance: &Instance,
    nu: Rational,
    leave: LeaveDistribution,
    conventions: ConventionPair,
) -> Result<RobustSolution> {
    let params = prepare_params(instance, nu, leave, conventions)?;
    solve_with_params(instance, &params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{gs3, gs3_leave, mu_e, mu_f, mu_m};
    use crate::model::{is_stable, random_instance};
    use crate::objective::psi;
    use crate::rational::{int, ratio};

    fn gs3_params(nu: Rational) -> (Instance, ObjectiveParams) {
        let g = gs3();
        let leave = gs3_leave(&g);
        let params = prepare_params(&g, nu, leave, ConventionPair::default()).unwrap();
        (g, params)
    }

    #[test]
    fn min_sumsq_examples() {
        let g = gs3();
        assert_eq!(min_sumsq_stable(&g), mu_e(&g));
        let reduced = g.remove_agent("m1").unwrap();
        let expected = Matching::from_pairs(&reduced, &[("m2", "w2"), ("m3", "w3")]).unwrap();
        assert_eq!(min_sumsq_stable(&reduced), expected);
    }

    #[test]
    fn baselines_on_gs3() {
        let g = gs3();
        let b = compute_baselines(&g, &gs3_leave(&g)).unwrap();
        assert_eq!(b.len(), 2);
        assert_eq!(b.get(Leaver::Nobody), Some(&mu_e(&g)));
        let lifted = Matching::from_pairs(&g, &[("m2", "w2"), ("m3", "w3")]).unwrap();
        assert_eq!(b.get(Leaver::Agent(0)), Some(&lifted));
        let only = compute_baselines(&g, &LeaveDistribution::nobody_leaves(&g)).unwrap();
        assert_eq!(only.len(), 1);
    }

    #[test]
    fn baselines_are_stable_in_reduced_markets() {
        let g = random_instance(5, 3, false).unwrap();
        let leave = LeaveDistribution::random(&g, 5, 3);
        let b = compute_baselines(&g, &leave).unwrap();
        assert_eq!(b.len(), 6);
        for (&leaver, mu) in b.iter() {
            match leaver {
                Leaver::Nobody => assert!(is_stable(&g, mu).unwrap().0),
                Leaver::Agent(a) => {
                    let reduced = g.remove_agent(g.id(a)).unwrap();
                    let pairs: Vec<(&str, &str)> = mu
                        .pairs()
                        .into_iter()
                        .filter(|&(x, _)| x != a)
                        .map(|(x, y)| (g.id(x), g.id(y)))
                        .collect();
                    let down = Matching::from_pairs(&reduced, &pairs).unwrap();
                    assert!(is_stable(&reduced, &down).unwrap().0);
                }
            }
        }
    }

    #[test]
    fn gs3_rotation_weights() {
        for (nu, w0, w1) in [(int(1), ratio(-9, 2), ratio(9, 2)), (int(0), ratio(15, 4), ratio(57, 4))] {
            let (g, params) = gs3_params(nu);
            let d = build_rotation_digraph(&g);
            assert_eq!(rotation_weight(&g, &d.rotations()[0], &params).unwrap(), w0);
            assert_eq!(rotation_weight(&g, &d.rotations()[1], &params).unwrap(), w1);
            // Same as the objective differences along the chain.
            let values: Vec<Rational> =
                [mu_m(&g), mu_e(&g), mu_f(&g)].iter().map(|m| psi(&g, m, &params).unwrap()).collect();
            assert_eq!(&values[1] - &values[0], w0);
            assert_eq!(&values[2] - &values[1], w1);
        }
    }

    #[test]
    fn gs3_networks() {
        let (g, params) = gs3_params(int(1));
        let weighted = WeightedRotationDigraph::new(&g, build_rotation_digraph(&g), &params).unwrap();
        let net = build_flow_network(&weighted);
        let edges: Vec<(usize, usize, Rational)> = net
            .network
            .edges
            .iter()
            .map(|e| (e.from, e.to, e.capacity.clone()))
            .collect();
        assert_eq!(
            edges,
            vec![(0, 3, ratio(9, 2)), (2, 1, ratio(9, 2)), (0, 1, int(10))]
        );
        let cut = max_flow_min_cut(&net.network);
        assert_eq!(cut.value, int(0));
        assert!(cut.cut_edges.is_empty());
        assert_eq!(extract_optimal_closed_subset(&weighted, &net, &cut), [0].into());

        let (g, params) = gs3_params(int(0));
        let weighted = WeightedRotationDigraph::new(&g, build_rotation_digraph(&g), &params).unwrap();
        let net = build_flow_network(&weighted);
        let terminals: Vec<(usize, usize)> = net
            .network
            .edges
            .iter()
            .filter(|e| e.from == net.source() || e.to == net.sink())
            .map(|e| (e.from, e.to))
            .collect();
        assert_eq!(terminals, vec![(2, 0), (2, 1)]);
        let cut = max_flow_min_cut(&net.network);
        assert!(extract_optimal_closed_subset(&weighted, &net, &cut).is_empty());
    }

    #[test]
    fn empty_and_trivial_networks() {
        let reduced = gs3().remove_agent("m1").unwrap();
        let mut baselines = BaselineSet::new();
        baselines.insert(Leaver::Nobody, min_sumsq_stable(&reduced));
        let params = ObjectiveParams::new(
            int(1),
            LeaveDistribution::nobody_leaves(&reduced),
            ConventionPair::default(),
            baselines,
        )
        .unwrap();
        let weighted =
            WeightedRotationDigraph::new(&reduced, build_rotation_digraph(&reduced), &params).unwrap();
        let net = build_flow_network(&weighted);
        assert_eq!(net.network.num_nodes, 2);
        assert!(net.network.edges.is_empty());
        assert_eq!(max_flow_min_cut(&net.network).value, int(0));
    }

    #[test]
    fn solve_gs3() {
        let g = gs3();
        let sol = solve_robust(&g, int(1), gs3_leave(&g), ConventionPair::default()).unwrap();
        assert_eq!(sol.matching, mu_e(&g));
        assert_eq!(sol.psi, int(30));
        let sol = solve_robust(&g, int(0), gs3_leave(&g), ConventionPair::default()).unwrap();
        assert_eq!(sol.matching, mu_m(&g));
        assert_eq!(sol.psi, ratio(9, 4));
        assert_eq!(sol.closed_subset, Some(BTreeSet::new()));
    }

    #[test]
    fn min_cut_never_uses_internal_edges() {
        for seed in 0..60 {
            let g = random_instance(6, seed, false).unwrap();
            let leave = LeaveDistribution::random(&g, 3, seed);
            let params = prepare_params(&g, ratio(1, 2), leave, ConventionPair::default()).unwrap();
            let weighted = WeightedRotationDigraph::new(&g, build_rotation_digraph(&g), &params).unwrap();
            let net = build_flow_network(&weighted);
            let cut = max_flow_min_cut(&net.network);
            for e in &cut.cut_edges {
                assert!(!net.internal_edges.contains(e));
            }
            let subset = extract_optimal_closed_subset(&weighted, &net, &cut);
            assert!(weighted.digraph.is_closed(&subset));
        }
    }
}
