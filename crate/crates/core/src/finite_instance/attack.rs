use serde::{Deserialize, Serialize};

use super::instance::{Atom, Metric, ProblemInstance};
use crate::error::{Error, Result};
use crate::losses::Label;
use crate::scalar::Scalar;

/// Slack allowed on move lengths and mass bookkeeping.
pub const PLAN_TOLERANCE: f64 = 1e-9;

/// `mass` of atom `source` relocated to `dest` (possibly its own position).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Move<T> {
    pub source: usize,
    pub dest: Vec<T>,
    pub label: Label,
    pub mass: T,
}

/// A label-preserving coupling that moves each unit of mass at most ε.
/// The pushforward of the moves is the attacked distribution `Q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct AttackPlan<T> {
    pub metric: Metric,
    pub epsilon: T,
    pub moves: Vec<Move<T>>,
}

impl<T: Scalar> AttackPlan<T> {
    /// The attacked distribution as an atom list, one atom per move.
    pub fn distribution(&self) -> Vec<Atom<T>> {
        self.moves
            .iter()
            .map(|m| Atom::new(m.dest.clone(), m.label, m.mass))
            .collect()
    }

    /// Checks that the plan is a member of the ε-adversarial set of `inst`:
    /// short moves, labels kept, and every atom's mass moved exactly once.
    pub fn check_membership(&self, inst: &ProblemInstance<T>) -> Result<()> {
        let tol = T::lit(PLAN_TOLERANCE);
        let mut moved = vec![T::zero(); inst.len()];
        for (k, m) in self.moves.iter().enumerate() {
            let Some(atom) = inst.atoms().get(m.source) else {
                return Err(Error::Invariant(format!("move {k}: unknown source {}", m.source)));
            };
            if m.label != atom.y {
                return Err(Error::Invariant(format!("move {k}: label changed")));
            }
            if m.mass < T::zero() {
                return Err(Error::Invariant(format!("move {k}: negative mass {}", m.mass)));
            }
            let len = inst.metric().distance(&atom.x, &m.dest);
            if len > inst.epsilon() + tol {
                return Err(Error::Invariant(format!(
                    "move {k}: length {len} exceeds epsilon {}",
                    inst.epsilon()
                )));
            }
            moved[m.source] += m.mass;
        }
        for (i, (atom, &out)) in inst.atoms().iter().zip(&moved).enumerate() {
            if out > atom.mass + tol {
                return Err(Error::Invariant(format!(
                    "atom {i}: moved {out} of its mass {}",
                    atom.mass
                )));
            }
        }
        let total = moved.iter().fold(T::zero(), |a, &b| a + b);
        if (total - inst.total_mass()).abs() > tol {
            return Err(Error::Invariant(format!("plan carries mass {total}, expected 1")));
        }
        Ok(())
    }

    pub fn csv_header(&self) -> Vec<String> {
        let dim = self.moves.first().map_or(1, |m| m.dest.len());
        let mut h = vec!["source_index".to_string()];
        h.extend((0..dim).map(|k| format!("x{k}")));
        h.push("label".into());
        h.push("mass".into());
        h
    }

    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        self.moves
            .iter()
            .map(|m| {
                let mut row = vec![m.source.to_string()];
                row.extend(m.dest.iter().map(|c| c.to_string()));
                row.push(m.label.to_string());
                row.push(m.mass.to_string());
                row
            })
            .collect()
    }
}

/// Standard 0/1 Bayes risk of a finite distribution: atoms are grouped by
/// exact position and each location contributes `min(positive, negative)`
/// mass, i.e. `total · min(η, 1 − η)`.
pub fn standard_bayes_risk<T: Scalar>(atoms: &[Atom<T>]) -> T {
    let mut locations: Vec<(&[T], T, T)> = Vec::new();
    for a in atoms {
        let slot = match locations.iter_mut().find(|(x, _, _)| *x == a.x.as_slice()) {
            Some(s) => s,
            None => {
                locations.push((a.x.as_slice(), T::zero(), T::zero()));
                locations.last_mut().expect("just pushed")
            }
        };
        match a.y {
            Label::Pos => slot.1 += a.mass,
            Label::Neg => slot.2 += a.mass,
        }
    }
    locations.iter().fold(T::zero(), |acc, (_, p, n)| acc + p.min(*n))
}
