//! Exact s-t maximum flow and minimum cut over rational capacities.
//!
//! Capacities are scaled to integers by the least common denominator and
//! solved with Dinic's algorithm on big integers.

use std::collections::VecDeque;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::rational::Rational;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowEdge {
    pub from: usize,
    pub to: usize,
    pub capacity: Rational,
}

/// A capacitated directed network with a distinguished source and sink.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowNetwork {
    pub num_nodes: usize,
    pub source: usize,
    pub sink: usize,
    pub edges: Vec<FlowEdge>,
}

impl FlowNetwork {
    pub fn new(num_nodes: usize, source: usize, sink: usize) -> Self {
        assert!(source < num_nodes && sink < num_nodes && source != sink);
        Self {
            num_nodes,
            source,
            sink,
            edges: Vec::new(),
        }
    }

    pub fn add_edge(&mut self, from: usize, to: usize, capacity: Rational) -> usize {
        assert!(!capacity.is_negative(), "capacities are nonnegative");
        self.edges.push(FlowEdge { from, to, capacity });
        self.edges.len() - 1
    }

    /// Total capacity of the edges leaving `source_side`.
    pub fn cut_capacity(&self, source_side: &[bool]) -> Rational {
        self.edges
            .iter()
            .filter(|e| source_side[e.from] && !source_side[e.to])
            .map(|e| e.capacity.clone())
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinCut {
    pub value: Rational,
    /// Indices into `FlowNetwork::edges` of the edges crossing the cut.
    pub cut_edges: Vec<usize>,
    /// Nodes reachable from the source in the final residual network.
    pub source_side: Vec<bool>,
}

struct Arc {
    to: usize,
    residual: BigInt,
}

struct Dinic {
    adj: Vec<Vec<usize>>,
    arcs: Vec<Arc>,
    level: Vec<i64>,
    cursor: Vec<usize>,
}

impl Dinic {
    fn new(n: usize) -> Self {
        Self {
            adj: vec![Vec::new(); n],
            arcs: Vec::new(),
            level: vec![-1; n],
            cursor: vec![0; n],
        }
    }

    fn add(&mut self, from: usize, to: usize, cap: BigInt) {
        self.adj[from].push(self.arcs.len());
        self.arcs.push(Arc { to, residual: cap });
        self.adj[to].push(self.arcs.len());
        self.arcs.push(Arc {
            to: from,
            residual: BigInt::zero(),
        });
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for &a in &self.adj[v] {
                let arc = &self.arcs[a];
                if arc.residual.is_positive() && self.level[arc.to] < 0 {
                    self.level[arc.to] = self.level[v] + 1;
                    queue.push_back(arc.to);
                }
            }
        }
        self.level[t] >= 0
    }

    fn dfs(&mut self, v: usize, t: usize, limit: &BigInt) -> BigInt {
        if v == t {
            return limit.clone();
        }
        while self.cursor[v] < self.adj[v].len() {
            let a = self.adj[v][self.cursor[v]];
            let to = self.arcs[a].to;
            if self.arcs[a].residual.is_positive() && self.level[to] == self.level[v] + 1 {
                let push = limit.min(&self.arcs[a].residual).clone();
                let got = self.dfs(to, t, &push);
                if got.is_positive() {
                    self.arcs[a].residual -= &got;
                    self.arcs[a ^ 1].residual += &got;
                    return got;
                }
            }
            self.cursor[v] += 1;
        }
        BigInt::zero()
    }

    fn run(&mut self, s: usize, t: usize, bound: &BigInt) -> BigInt {
        let mut total = BigInt::zero();
        while self.bfs(s, t) {
            self.cursor.iter_mut().for_each(|c| *c = 0);
            loop {
                let pushed = self.dfs(s, t, bound);
                if pushed.is_zero() {
                    break;
                }
                total += pushed;
            }
        }
        total
    }

    fn reachable(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.adj.len()];
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(v) = stack.pop() {
            for &a in &self.adj[v] {
                let arc = &self.arcs[a];
                if arc.residual.is_positive() && !seen[arc.to] {
                    seen[arc.to] = true;
                    stack.push(arc.to);
                }
            }
        }
        seen
    }
}

/// Maximum s-t flow and the minimum cut induced by the residual reachability
/// of the source.
pub fn max_flow_min_cut(network: &FlowNetwork) -> MinCut {
    let scale = network
        .edges
        .iter()
        .fold(BigInt::one(), |acc, e| acc.lcm(e.capacity.denom()));
    let mut dinic = Dinic::new(network.num_nodes);
    let mut bound = BigInt::one();
    for e in &network.edges {
        let cap = e.capacity.numer() * (&scale / e.capacity.denom());
        bound += &cap;
        dinic.add(e.from, e.to, cap);
    }
    let flow = dinic.run(network.source, network.sink, &bound);
    let source_side = dinic.reachable(network.source);
    let cut_edges: Vec<usize> = network
        .edges
        .iter()
        .enumerate()
        .filter(|(_, e)| source_side[e.from] && !source_side[e.to])
        .map(|(i, _)| i)
        .collect();
    MinCut {
        value: Rational::new(flow, scale),
        cut_edges,
        source_side,
    }
}
