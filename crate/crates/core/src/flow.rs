//! Maximum flow by shortest augmenting paths (Edmonds–Karp).
//!
//! Generic over the capacity type so that the same solver runs on `f64`
//! masses and on exact rationals.

use std::collections::VecDeque;
use std::fmt::Debug;

use num_rational::Ratio;
use num_traits::Num;

/// Capacity type of a [`FlowNetwork`].
pub trait FlowValue: Num + Copy + PartialOrd + Debug {
    /// Residual capacities at or below this are treated as saturated.
    fn residual_tolerance() -> Self;
}

impl FlowValue for f64 {
    fn residual_tolerance() -> Self {
        1e-12
    }
}

impl FlowValue for f32 {
    fn residual_tolerance() -> Self {
        1e-6
    }
}

impl FlowValue for i64 {
    fn residual_tolerance() -> Self {
        0
    }
}

impl FlowValue for Ratio<i64> {
    fn residual_tolerance() -> Self {
        Ratio::from_integer(0)
    }
}

impl FlowValue for Ratio<i128> {
    fn residual_tolerance() -> Self {
        Ratio::from_integer(0)
    }
}

#[derive(Debug, Clone)]
struct Arc<C> {
    to: usize,
    cap: C,
    flow: C,
}

/// A directed network; every arc is stored next to its reverse (ids `2k`, `2k+1`).
#[derive(Debug, Clone)]
pub struct FlowNetwork<C> {
    arcs: Vec<Arc<C>>,
    adjacency: Vec<Vec<usize>>,
}

impl<C: FlowValue> FlowNetwork<C> {
    pub fn new(nodes: usize) -> Self {
        FlowNetwork { arcs: Vec::new(), adjacency: vec![Vec::new(); nodes] }
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    /// Adds `from → to` with the given capacity and returns its id.
    pub fn add_edge(&mut self, from: usize, to: usize, cap: C) -> usize {
        let id = self.arcs.len();
        self.arcs.push(Arc { to, cap, flow: C::zero() });
        self.arcs.push(Arc { to: from, cap: C::zero(), flow: C::zero() });
        self.adjacency[from].push(id);
        self.adjacency[to].push(id + 1);
        id
    }

    fn residual(&self, arc: usize) -> C {
        self.arcs[arc].cap - self.arcs[arc].flow
    }

    fn open(&self, arc: usize) -> bool {
        self.residual(arc) > C::residual_tolerance()
    }

    /// Pushes a maximum flow from `source` to `sink` and returns its value.
    pub fn max_flow(&mut self, source: usize, sink: usize) -> C {
        let mut total = C::zero();
        if source == sink {
            return total;
        }
        loop {
            let mut via: Vec<Option<usize>> = vec![None; self.node_count()];
            let mut seen = vec![false; self.node_count()];
            seen[source] = true;
            let mut queue = VecDeque::from([source]);
            while let Some(u) = queue.pop_front() {
                if u == sink {
                    break;
                }
                for &a in &self.adjacency[u] {
                    let v = self.arcs[a].to;
                    if !seen[v] && self.open(a) {
                        seen[v] = true;
                        via[v] = Some(a);
                        queue.push_back(v);
                    }
                }
            }
            if !seen[sink] {
                return total;
            }

            let mut bottleneck: Option<C> = None;
            let mut v = sink;
            while let Some(a) = via[v] {
                let r = self.residual(a);
                bottleneck = Some(match bottleneck {
                    Some(b) if b < r => b,
                    _ => r,
                });
                v = self.arcs[a ^ 1].to;
            }
            let push = bottleneck.expect("augmenting path has an arc");
            let mut v = sink;
            while let Some(a) = via[v] {
                self.arcs[a].flow = self.arcs[a].flow + push;
                self.arcs[a ^ 1].flow = self.arcs[a ^ 1].flow - push;
                v = self.arcs[a ^ 1].to;
            }
            total = total + push;
        }
    }

    pub fn flow(&self, edge: usize) -> C {
        self.arcs[edge].flow
    }

    /// Nodes reachable from `source` in the residual network: the source side
    /// of the canonical minimum cut once a maximum flow is in place.
    pub fn source_side(&self, source: usize) -> Vec<bool> {
        let mut seen = vec![false; self.node_count()];
        seen[source] = true;
        let mut stack = vec![source];
        while let Some(u) = stack.pop() {
            for &a in &self.adjacency[u] {
                let v = self.arcs[a].to;
                if !seen[v] && self.open(a) {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    }
}
