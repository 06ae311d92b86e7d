use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::Label;
use crate::scalar::Scalar;

/// Masses must sum to one within this.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// Distance on `ℝᵈ`. Both choices have exact coordinate midpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "l2")]
    Euclidean,
    #[serde(rename = "linf")]
    Chebyshev,
}

impl Metric {
    pub fn distance<T: Scalar>(self, a: &[T], b: &[T]) -> T {
        let diffs = a.iter().zip(b).map(|(&u, &v)| (u - v).abs());
        match self {
            Metric::Euclidean => {
                if a.len() == 1 {
                    diffs.fold(T::zero(), |acc, d| acc + d)
                } else {
                    diffs.fold(T::zero(), |acc, d| acc + d * d).sqrt()
                }
            }
            Metric::Chebyshev => diffs.fold(T::zero(), T::max),
        }
    }
}

/// Coordinate midpoint; a metric midpoint for both supported metrics.
pub fn midpoint<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    let half = T::lit(0.5);
    a.iter().zip(b).map(|(&u, &v)| (u + v) * half).collect()
}

/// A weighted labeled point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Atom<T> {
    pub x: Vec<T>,
    pub y: Label,
    pub mass: T,
}

impl<T: Scalar> Atom<T> {
    pub fn new(x: Vec<T>, y: Label, mass: T) -> Self {
        Atom { x, y, mass }
    }

    pub fn scalar(x: f64, y: Label, mass: f64) -> Self {
        Atom { x: vec![T::lit(x)], y, mass: T::lit(mass) }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct RawInstance<T> {
    metric: Metric,
    epsilon: T,
    atoms: Vec<Atom<T>>,
}

/// A finite empirical distribution with an attack radius.
///
/// JSON: `{"metric": "l2"|"linf", "epsilon": ε, "atoms": [{"x": [..], "y": ±1, "mass": m}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInstance<T>", into = "RawInstance<T>")]
#[serde(bound = "T: Scalar")]
pub struct ProblemInstance<T> {
    metric: Metric,
    epsilon: T,
    atoms: Vec<Atom<T>>,
}

impl<T: Scalar> TryFrom<RawInstance<T>> for ProblemInstance<T> {
    type Error = Error;

    fn try_from(raw: RawInstance<T>) -> Result<Self> {
        ProblemInstance::new(raw.metric, raw.epsilon, raw.atoms)
    }
}

impl<T: Scalar> From<ProblemInstance<T>> for RawInstance<T> {
    fn from(inst: ProblemInstance<T>) -> Self {
        RawInstance { metric: inst.metric, epsilon: inst.epsilon, atoms: inst.atoms }
    }
}

impl<T: Scalar> ProblemInstance<T> {
    pub fn new(metric: Metric, epsilon: T, atoms: Vec<Atom<T>>) -> Result<Self> {
        if !epsilon.is_finite() || epsilon < T::zero() {
            return Err(Error::Instance(format!("epsilon: must be finite and >= 0, got {epsilon}")));
        }
        let Some(first) = atoms.first() else {
            return Err(Error::Instance("atoms: at least one atom is required".into()));
        };
        let dim = first.x.len();
        if dim == 0 {
            return Err(Error::Instance("atoms[0].x: must have at least one coordinate".into()));
        }
        let mut total = T::zero();
        for (i, atom) in atoms.iter().enumerate() {
            if atom.x.len() != dim {
                return Err(Error::Instance(format!(
                    "atoms[{i}].x: dimension {} differs from {dim}",
                    atom.x.len()
                )));
            }
            if let Some(k) = atom.x.iter().position(|c| !c.is_finite()) {
                return Err(Error::Instance(format!("atoms[{i}].x[{k}]: not finite")));
            }
            if !(atom.mass > T::zero()) || !atom.mass.is_finite() {
                return Err(Error::Instance(format!(
                    "atoms[{i}].mass: must be finite and > 0, got {}",
                    atom.mass
                )));
            }
            total += atom.mass;
        }
        if (total - T::one()).abs() > T::lit(MASS_TOLERANCE) {
            return Err(Error::Instance(format!("atoms: masses sum to {total}, expected 1")));
        }
        Ok(ProblemInstance { metric, epsilon, atoms })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instances serialize")
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    pub fn atoms(&self) -> &[Atom<T>] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].x.len()
    }

    pub fn distance(&self, i: usize, j: usize) -> T {
        self.metric.distance(&self.atoms[i].x, &self.atoms[j].x)
    }

    /// Same atoms and metric under another radius.
    pub fn with_epsilon(&self, epsilon: T) -> Result<Self> {
        ProblemInstance::new(self.metric, epsilon, self.atoms.clone())
    }

    pub fn total_mass(&self) -> T {
        self.atoms.iter().fold(T::zero(), |acc, a| acc + a.mass)
    }
}

/// A random instance: `n` atoms uniform in `[0, 2]ᵈ`, random labels, random
/// masses normalized to one.
pub fn random_instance<T: Scalar, R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    dim: usize,
    metric: Metric,
    epsilon: T,
) -> ProblemInstance<T> {
    let raw: Vec<(Vec<f64>, Label, f64)> = (0..n)
        .map(|_| {
            let x = (0..dim).map(|_| rng.gen_range(0.0..2.0)).collect();
            let y = if rng.gen_bool(0.5) { Label::Pos } else { Label::Neg };
            (x, y, rng.gen_range(0.05..1.0))
        })
        .collect();
    let total: f64 = raw.iter().map(|r| r.2).sum();
    let atoms = raw
        .into_iter()
        .map(|(x, y, m)| Atom::new(x.into_iter().map(T::lit).collect(), y, T::lit(m / total)))
        .collect();
    ProblemInstance::new(metric, epsilon, atoms).expect("random instance is valid")
}
