use serde::{Deserialize, Serialize};

use super::instance::{midpoint, ProblemInstance};
use crate::losses::Label;
use crate::scalar::Scalar;

/// A pair of opposite-label atoms whose closed ε-balls meet, with a point in both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ConflictEdge<T> {
    pub pos: usize,
    pub neg: usize,
    pub midpoint: Vec<T>,
}

/// Bipartite graph on atoms: positives on one side, negatives on the other,
/// an edge whenever `d(xᵢ, xⱼ) ≤ 2ε`. Vertex weights are the atom masses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ConflictGraph<T> {
    pub positives: Vec<usize>,
    pub negatives: Vec<usize>,
    pub edges: Vec<ConflictEdge<T>>,
}

impl<T: Scalar> ConflictGraph<T> {
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Whether `cover` (atom indices) touches every edge.
    pub fn is_vertex_cover(&self, cover: &[usize]) -> bool {
        self.edges.iter().all(|e| cover.contains(&e.pos) || cover.contains(&e.neg))
    }

    /// Largest witness violation `max(d(z, xᵢ), d(z, xⱼ)) − ε` over all edges.
    pub fn worst_witness_excess(&self, inst: &ProblemInstance<T>) -> T {
        let m = inst.metric();
        self.edges
            .iter()
            .map(|e| {
                let a = m.distance(&e.midpoint, &inst.atoms()[e.pos].x);
                let b = m.distance(&e.midpoint, &inst.atoms()[e.neg].x);
                a.max(b) - inst.epsilon()
            })
            .fold(T::neg_infinity(), T::max)
    }
}

pub fn build_conflict_graph<T: Scalar>(inst: &ProblemInstance<T>) -> ConflictGraph<T> {
    let atoms = inst.atoms();
    let (positives, negatives): (Vec<usize>, Vec<usize>) =
        (0..atoms.len()).partition(|&i| atoms[i].y == Label::Pos);
    let reach = inst.epsilon() + inst.epsilon();
    let mut edges = Vec::new();
    for &p in &positives {
        for &n in &negatives {
            if inst.distance(p, n) <= reach {
                edges.push(ConflictEdge {
                    pos: p,
                    neg: n,
                    midpoint: midpoint(&atoms[p].x, &atoms[n].x),
                });
            }
        }
    }
    ConflictGraph { positives, negatives, edges }
}
