//! Exact adversarial Bayes 0/1 risk on finite distributions.
//!
//! Two opposite-label atoms whose ε-balls meet cannot both be classified
//! robustly: any classifier errs on one of them at the common point. Any
//! vertex cover of the resulting conflict graph is conversely achievable, so
//! the adversarial Bayes risk is the minimum-weight vertex cover, computed
//! here as a minimum cut. The matching maximum flow pairs conflicting masses
//! at their midpoints, which is an optimal attack: the standard Bayes risk of
//! the attacked distribution equals the adversarial one.

mod attack;
mod conflict;
mod instance;

use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use attack::{standard_bayes_risk, AttackPlan, Move, PLAN_TOLERANCE};
pub use conflict::{build_conflict_graph, ConflictEdge, ConflictGraph};
pub use instance::{midpoint, random_instance, Atom, Metric, ProblemInstance, MASS_TOLERANCE};

use crate::error::{Error, Result};
use crate::flow::FlowNetwork;
use crate::scalar::Scalar;

/// Largest instance the exhaustive oracle accepts.
pub const BRUTE_FORCE_MAX_ATOMS: usize = 20;
/// Agreement required between the three routes to the Bayes risk.
pub const DUALITY_TOLERANCE: f64 = 1e-9;
/// Upper bound on the number of optimal covers the oracle reports.
const MAX_REPORTED_COVERS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskMethod {
    Mincut,
    BruteForce,
    DualAttack,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound = "T: Scalar")]
pub enum Witness<T> {
    /// The atoms misclassified by an optimal classifier.
    VertexCover {
        atoms: Vec<usize>,
        mass: T,
        /// All minimum covers, when the method enumerates them.
        #[serde(skip_serializing_if = "Option::is_none", default)]
        all_optimal: Option<Vec<Vec<usize>>>,
    },
    Attack(AttackPlan<T>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RiskReport<T> {
    pub value: T,
    pub method: RiskMethod,
    pub witness: Witness<T>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub runtime_secs: Option<f64>,
}

impl<T: Scalar> RiskReport<T> {
    pub fn cover(&self) -> Option<&[usize]> {
        match &self.witness {
            Witness::VertexCover { atoms, .. } => Some(atoms),
            Witness::Attack(_) => None,
        }
    }

    pub fn without_timing(mut self) -> Self {
        self.runtime_secs = None;
        self
    }
}

struct MinCut<T> {
    value: T,
    cover: Vec<usize>,
    graph: ConflictGraph<T>,
    edge_flows: Vec<T>,
}

fn min_cut<T: Scalar>(inst: &ProblemInstance<T>) -> MinCut<T> {
    let graph = build_conflict_graph(inst);
    let n = inst.len();
    let (source, sink) = (0, n + 1);
    let node = |atom: usize| atom + 1;
    let unbounded = T::one() + inst.total_mass();

    let mut net = FlowNetwork::new(n + 2);
    for &p in &graph.positives {
        net.add_edge(source, node(p), inst.atoms()[p].mass);
    }
    for &q in &graph.negatives {
        net.add_edge(node(q), sink, inst.atoms()[q].mass);
    }
    let edge_ids: Vec<usize> = graph
        .edges
        .iter()
        .map(|e| net.add_edge(node(e.pos), node(e.neg), unbounded))
        .collect();
    let value = net.max_flow(source, sink);

    // cut arcs: source → unreachable positive, reachable negative → sink
    let reach = net.source_side(source);
    let mut cover: Vec<usize> = graph
        .positives
        .iter()
        .copied()
        .filter(|&p| !reach[node(p)])
        .chain(graph.negatives.iter().copied().filter(|&q| reach[node(q)]))
        .collect();
    cover.sort_unstable();
    let edge_flows = edge_ids.iter().map(|&id| net.flow(id)).collect();
    MinCut { value, cover, graph, edge_flows }
}

fn cover_mass<T: Scalar>(inst: &ProblemInstance<T>, cover: &[usize]) -> T {
    cover.iter().fold(T::zero(), |acc, &i| acc + inst.atoms()[i].mass)
}

/// Minimum-weight vertex cover of the conflict graph via a minimum cut.
/// Among optimal covers, the one read off the residual-reachable source side is returned.
pub fn adversarial_bayes_risk<T: Scalar>(inst: &ProblemInstance<T>) -> RiskReport<T> {
    let start = Instant::now();
    let cut = min_cut(inst);
    let mass = cover_mass(inst, &cut.cover);
    RiskReport {
        value: cut.value,
        method: RiskMethod::Mincut,
        witness: Witness::VertexCover { atoms: cut.cover, mass, all_optimal: None },
        runtime_secs: Some(start.elapsed().as_secs_f64()),
    }
}

/// Exhaustive oracle: the lightest subset of atoms covering every conflict edge.
pub fn brute_force_bayes_risk<T: Scalar>(inst: &ProblemInstance<T>) -> Result<RiskReport<T>> {
    let n = inst.len();
    if n > BRUTE_FORCE_MAX_ATOMS {
        return Err(Error::Resource(format!(
            "brute force enumerates 2^n subsets; n = {n} exceeds {BRUTE_FORCE_MAX_ATOMS}"
        )));
    }
    let start = Instant::now();
    let graph = build_conflict_graph(inst);
    let mut adjacent = vec![0u32; n];
    for e in &graph.edges {
        adjacent[e.pos] |= 1 << e.neg;
        adjacent[e.neg] |= 1 << e.pos;
    }
    let tol = T::lit(1e-12);
    let mut best: Option<T> = None;
    let mut optimal: Vec<u32> = Vec::new();
    for mask in 0u32..(1u32 << n) {
        // feasible iff every uncovered atom has all its neighbours covered
        let feasible = (0..n).all(|i| mask & (1 << i) != 0 || adjacent[i] & !mask == 0);
        if !feasible {
            continue;
        }
        let mass = (0..n)
            .filter(|&i| mask & (1 << i) != 0)
            .fold(T::zero(), |acc, i| acc + inst.atoms()[i].mass);
        match best {
            Some(b) if mass > b + tol => {}
            Some(b) if mass >= b - tol => {
                if optimal.len() < MAX_REPORTED_COVERS {
                    optimal.push(mask);
                }
                if mass < b {
                    best = Some(mass);
                }
            }
            _ => {
                best = Some(mass);
                optimal = vec![mask];
            }
        }
    }
    let as_atoms = |mask: u32| (0..n).filter(|&i| mask & (1 << i) != 0).collect::<Vec<_>>();
    let covers: Vec<Vec<usize>> = optimal.iter().map(|&m| as_atoms(m)).collect();
    let value = best.expect("the full atom set is always a cover");
    Ok(RiskReport {
        value,
        method: RiskMethod::BruteForce,
        witness: Witness::VertexCover {
            atoms: covers[0].clone(),
            mass: value,
            all_optimal: Some(covers),
        },
        runtime_secs: Some(start.elapsed().as_secs_f64()),
    })
}

/// The attack read off a maximum flow: each conflict edge carrying flow `w`
/// sends `w` of both endpoints to their midpoint; leftover mass stays put.
pub fn optimal_attack<T: Scalar>(inst: &ProblemInstance<T>) -> AttackPlan<T> {
    let cut = min_cut(inst);
    let tol = T::residual_tolerance();
    let mut moved = vec![T::zero(); inst.len()];
    let mut moves = Vec::new();
    for (edge, &w) in cut.graph.edges.iter().zip(&cut.edge_flows) {
        if w <= tol {
            continue;
        }
        for src in [edge.pos, edge.neg] {
            moves.push(Move {
                source: src,
                dest: edge.midpoint.clone(),
                label: inst.atoms()[src].y,
                mass: w,
            });
            moved[src] += w;
        }
    }
    for (i, atom) in inst.atoms().iter().enumerate() {
        let rest = atom.mass - moved[i];
        if rest > tol {
            moves.push(Move { source: i, dest: atom.x.clone(), label: atom.y, mass: rest });
        }
    }
    moves.sort_by_key(|m| m.source);
    AttackPlan { metric: inst.metric(), epsilon: inst.epsilon(), moves }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct DualityReport<T> {
    pub mincut: T,
    pub brute_force: T,
    pub dual_attack: T,
    pub max_gap: T,
    pub tolerance: T,
    pub holds: bool,
}

/// Min-cut value, brute-force value, and standard Bayes risk under the
/// optimal attack, which must all agree.
pub fn duality_values<T: Scalar>(inst: &ProblemInstance<T>) -> Result<DualityReport<T>> {
    let mincut = adversarial_bayes_risk(inst).value;
    let brute_force = brute_force_bayes_risk(inst)?.value;
    let plan = optimal_attack(inst);
    plan.check_membership(inst)?;
    let dual_attack = standard_bayes_risk(&plan.distribution());
    let max_gap = (mincut - brute_force)
        .abs()
        .max((mincut - dual_attack).abs())
        .max((brute_force - dual_attack).abs());
    let tolerance = T::lit(DUALITY_TOLERANCE);
    Ok(DualityReport { mincut, brute_force, dual_attack, max_gap, tolerance, holds: max_gap <= tolerance })
}

/// Like [`duality_values`], but a mismatch is an error carrying the three values.
pub fn verify_strong_duality<T: Scalar>(inst: &ProblemInstance<T>) -> Result<DualityReport<T>> {
    let report = duality_values(inst)?;
    if report.holds {
        Ok(report)
    } else {
        Err(Error::Invariant(format!(
            "strong duality violated: mincut {}, brute force {}, dual attack {}",
            report.mincut, report.brute_force, report.dual_attack
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::Label::{Neg, Pos};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn line(eps: f64, atoms: &[(f64, crate::losses::Label, f64)]) -> ProblemInstance<f64> {
        let atoms = atoms.iter().map(|&(x, y, m)| Atom::scalar(x, y, m)).collect();
        ProblemInstance::new(Metric::Euclidean, eps, atoms).unwrap()
    }

    fn three_point() -> ProblemInstance<f64> {
        line(1.0, &[(0.0, Pos, 0.5), (-1.5, Neg, 0.25), (1.5, Neg, 0.25)])
    }

    fn realizable() -> ProblemInstance<f64> {
        line(1.0, &[(-5.0, Neg, 0.5), (5.0, Pos, 0.5)])
    }

    fn coincident(eps: f64) -> ProblemInstance<f64> {
        line(eps, &[(0.0, Pos, 0.5), (0.0, Neg, 0.5)])
    }

    fn chain() -> ProblemInstance<f64> {
        line(0.6, &[(0.0, Pos, 0.25), (1.0, Neg, 0.25), (2.0, Pos, 0.25), (3.0, Neg, 0.25)])
    }

    #[test]
    fn conflict_graph_examples() {
        let g = build_conflict_graph(&three_point());
        let pairs: Vec<(usize, usize)> = g.edges.iter().map(|e| (e.pos, e.neg)).collect();
        assert_eq!(pairs, vec![(0, 1), (0, 2)]);
        assert_eq!(g.edges[0].midpoint, vec![-0.75]);
        assert_eq!(build_conflict_graph(&realizable()).edge_count(), 0);
        assert_eq!(build_conflict_graph(&coincident(0.0)).edge_count(), 1);
    }

    #[test]
    fn bayes_risk_examples() {
        let r = adversarial_bayes_risk(&three_point());
        assert_eq!(r.value, 0.5);
        assert_eq!(r.cover(), Some(&[0][..]));
        assert_eq!(adversarial_bayes_risk(&realizable()).value, 0.0);
        for eps in [0.0, 0.5, 3.0] {
            assert_eq!(adversarial_bayes_risk(&coincident(eps)).value, 0.5);
        }
    }

    #[test]
    fn brute_force_examples() {
        let r = brute_force_bayes_risk(&three_point()).unwrap();
        assert_eq!(r.value, 0.5);
        let Witness::VertexCover { all_optimal, .. } = &r.witness else { panic!() };
        assert_eq!(all_optimal.as_deref(), Some(&[vec![0], vec![1, 2]][..]));
        assert_eq!(brute_force_bayes_risk(&realizable()).unwrap().value, 0.0);
        // edges (0,1), (2,1), (2,3): every cover needs two of the quarter masses
        let c = chain();
        assert_eq!(build_conflict_graph(&c).edge_count(), 3);
        assert_eq!(brute_force_bayes_risk(&c).unwrap().value, 0.5);
        assert_eq!(adversarial_bayes_risk(&c).value, 0.5);
    }

    #[test]
    fn brute_force_refuses_large_instances() {
        let atoms = (0..21).map(|i| Atom::scalar(i as f64, Pos, 1.0 / 21.0)).collect();
        let inst = ProblemInstance::new(Metric::Euclidean, 0.1, atoms).unwrap();
        assert!(matches!(brute_force_bayes_risk(&inst), Err(Error::Resource(_))));
    }

    #[test]
    fn optimal_attack_on_three_points() {
        let inst = three_point();
        let plan = optimal_attack(&inst);
        plan.check_membership(&inst).unwrap();
        let moves: Vec<(usize, f64, f64)> =
            plan.moves.iter().map(|m| (m.source, m.dest[0], m.mass)).collect();
        assert_eq!(
            moves,
            vec![(0, -0.75, 0.25), (0, 0.75, 0.25), (1, -0.75, 0.25), (2, 0.75, 0.25)]
        );
        assert_eq!(standard_bayes_risk(&plan.distribution()), 0.5);
    }

    #[test]
    fn optimal_attack_trivial_cases() {
        let inst = realizable();
        let plan = optimal_attack(&inst);
        assert!(plan.moves.iter().all(|m| m.dest == inst.atoms()[m.source].x));
        assert_eq!(standard_bayes_risk(&plan.distribution()), 0.0);

        let inst = coincident(0.5);
        let plan = optimal_attack(&inst);
        plan.check_membership(&inst).unwrap();
        assert!(plan.moves.iter().all(|m| m.dest == vec![0.0]));
        assert_eq!(standard_bayes_risk(&plan.distribution()), 0.5);
    }

    #[test]
    fn standard_bayes_risk_examples() {
        let pure = vec![Atom::<f64>::scalar(0.0, Pos, 0.5), Atom::scalar(1.0, Pos, 0.5)];
        assert_eq!(standard_bayes_risk(&pure), 0.0);
        assert_eq!(standard_bayes_risk(coincident(0.0).atoms()), 0.5);
    }

    #[test]
    fn duality_examples() {
        let r = verify_strong_duality(&three_point()).unwrap();
        assert_eq!((r.mincut, r.brute_force, r.dual_attack), (0.5, 0.5, 0.5));
        let r = verify_strong_duality(&realizable()).unwrap();
        assert_eq!((r.mincut, r.brute_force, r.dual_attack), (0.0, 0.0, 0.0));
    }

    #[test]
    fn plan_membership_rejects_bad_plans() {
        let inst = three_point();
        let mut plan = optimal_attack(&inst);
        plan.moves[0].dest = vec![-2.0];
        assert!(plan.check_membership(&inst).is_err());
        let mut plan = optimal_attack(&inst);
        plan.moves[0].label = Neg;
        assert!(plan.check_membership(&inst).is_err());
        let mut plan = optimal_attack(&inst);
        plan.moves.pop();
        assert!(plan.check_membership(&inst).is_err());
    }

    #[test]
    fn random_instances_satisfy_the_duality_triangle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for k in 0..60 {
            let n = 2 + k % 7;
            let dim = 1 + k % 2;
            let metric = if k % 3 == 0 { Metric::Chebyshev } else { Metric::Euclidean };
            let eps = [0.3, 0.6, 1.0][k % 3];
            let inst = random_instance::<f64, _>(&mut rng, n, dim, metric, eps);
            let g = build_conflict_graph(&inst);
            assert!(g.worst_witness_excess(&inst) <= 1e-9);
            let r = verify_strong_duality(&inst).unwrap();
            assert!(r.holds);
            let cut = adversarial_bayes_risk(&inst);
            assert!(g.is_vertex_cover(cut.cover().unwrap()));
            let Witness::VertexCover { mass, .. } = cut.witness else { panic!() };
            assert!((mass - cut.value).abs() < 1e-12);
        }
    }

    #[test]
    fn risk_is_monotone_in_epsilon_and_reduces_at_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..30 {
            let inst = random_instance::<f64, _>(&mut rng, 7, 2, Metric::Euclidean, 0.0);
            assert_eq!(adversarial_bayes_risk(&inst).value, standard_bayes_risk(inst.atoms()));
            let mut last = 0.0;
            for eps in [0.0, 0.1, 0.3, 0.6, 1.0, 2.0] {
                let v = adversarial_bayes_risk(&inst.with_epsilon(eps).unwrap()).value;
                assert!(v >= last - 1e-12);
                last = v;
            }
        }
    }

    #[test]
    fn single_precision_instances() {
        let atoms = vec![
            Atom::<f32>::scalar(0.0, Pos, 0.5),
            Atom::scalar(-1.5, Neg, 0.25),
            Atom::scalar(1.5, Neg, 0.25),
        ];
        let inst = ProblemInstance::new(Metric::Euclidean, 1.0f32, atoms).unwrap();
        let r = verify_strong_duality(&inst).unwrap();
        assert_eq!(r.mincut, 0.5f32);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;
        use rand::SeedableRng;
        use rand_chacha::ChaCha8Rng;

        proptest! {
            #[test]
            fn three_values_agree(seed in any::<u64>(), n in 1usize..=9, linf in any::<bool>(), eps in 0.0..1.5f64) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let metric = if linf { Metric::Chebyshev } else { Metric::Euclidean };
                let inst = random_instance::<f64, _>(&mut rng, n, 2, metric, eps);
                let r = duality_values(&inst).unwrap();
                prop_assert!(r.holds, "{r:?}");
            }

            #[test]
            fn label_flip_and_reordering_keep_the_risk(seed in any::<u64>(), n in 1usize..=9, eps in 0.0..1.5f64) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let inst = random_instance::<f64, _>(&mut rng, n, 1, Metric::Euclidean, eps);
                let base = adversarial_bayes_risk(&inst).value;
                let flipped: Vec<_> = inst.atoms().iter().rev().map(|a| Atom::new(a.x.clone(), a.y.flip(), a.mass)).collect();
                let other = ProblemInstance::new(inst.metric(), eps, flipped).unwrap();
                prop_assert!((adversarial_bayes_risk(&other).value - base).abs() <= 1e-12);
            }

            #[test]
            fn risk_lies_between_standard_risk_and_smaller_class(seed in any::<u64>(), n in 1usize..=9, eps in 0.0..1.5f64) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let inst = random_instance::<f64, _>(&mut rng, n, 2, Metric::Euclidean, eps);
                let v = adversarial_bayes_risk(&inst).value;
                let pos: f64 = inst.atoms().iter().filter(|a| a.y == Pos).map(|a| a.mass).sum();
                prop_assert!(v >= standard_bayes_risk(inst.atoms()) - 1e-12);
                prop_assert!(v <= pos.min(1.0 - pos) + 1e-12);
            }
        }
    }
}
