//! Clamped subgradient descent on the adversarial surrogate risk of grid classifiers.
//!
//! Each step moves, for every atom, only the cell attaining its inner
//! supremum. The clamp at `±M` keeps iterates finite for losses whose optimal
//! scores are infinite.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::finite_instance::{
    adversarial_bayes_risk, brute_force_bayes_risk, optimal_attack, Atom, ProblemInstance,
    Witness,
};
use crate::grid_world::{
    auto_axes, cover_classifier, sup_over, zero_one_risk, Axis, GridClassifier,
    SaturationBound,
};
use crate::losses::{optimal_conditional_risk, Label, LossSpec, MarginLoss, SearchConfig};
use crate::scalar::Scalar;
use crate::scenarios;

/// Number of logged points a run aims for.
pub const LOG_POINTS: usize = 200;
/// A run fails once its surrogate risk exceeds this multiple of the initial risk.
pub const DIVERGENCE_FACTOR: f64 = 10.0;
/// Last-vs-best surrogate gap below which a run counts as converged.
pub const CONVERGENCE_GAP: f64 = 1e-4;
/// Tolerance on final risks in the consistency reports.
pub const RISK_TOLERANCE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound = "T: Scalar")]
pub enum Schedule<T> {
    Constant { step: T },
    /// `step / √t` at iteration `t ≥ 1`.
    InvSqrt { step: T },
}

impl<T: Scalar> Default for Schedule<T> {
    fn default() -> Self {
        Schedule::Constant { step: T::lit(0.5) }
    }
}

impl<T: Scalar> Schedule<T> {
    pub fn step(&self, t: usize) -> T {
        match *self {
            Schedule::Constant { step } => step,
            Schedule::InvSqrt { step } => step / T::from_count(t.max(1)).sqrt(),
        }
    }

    fn base(&self) -> T {
        match *self {
            Schedule::Constant { step } | Schedule::InvSqrt { step } => step,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    #[default]
    Zeros,
    /// `h_n` on the three-point family.
    Pathological(u64),
    /// The cover classifier of the `k`-th minimum vertex cover, at `±M`.
    Cover(usize),
    /// Cell values uniform in `[−1, 1]`.
    Random(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", bound = "T: Scalar")]
pub enum GridSpec<T> {
    #[default]
    Auto,
    Width(T),
}

impl<T: Scalar> GridSpec<T> {
    fn width(&self) -> Option<T> {
        match *self {
            GridSpec::Auto => None,
            GridSpec::Width(w) => Some(w),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", bound = "T: Scalar")]
pub enum InstanceRef<T> {
    /// An instance JSON file; relative paths resolve against the config file.
    Path(PathBuf),
    Inline(ProblemInstance<T>),
    Scenario {
        name: String,
        #[serde(default)]
        params: BTreeMap<String, f64>,
    },
}

/// Everything a training run needs. JSON field names match the struct.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Scalar")]
pub struct TrainConfig<T> {
    pub loss: LossSpec<T>,
    pub instance: InstanceRef<T>,
    #[serde(default)]
    pub grid: GridSpec<T>,
    #[serde(default)]
    pub schedule: Schedule<T>,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default)]
    pub init: Init,
    #[serde(default = "default_clamp")]
    pub clamp: T,
}

fn default_iterations() -> usize {
    10_000
}

fn default_clamp<T: Scalar>() -> T {
    T::lit(20.0)
}

impl<T: Scalar> TrainConfig<T> {
    /// Constant step 0.5, 10⁴ iterations, zeros init, clamp 20, auto grid.
    pub fn new(loss: &MarginLoss<T>, instance: InstanceRef<T>) -> Self {
        TrainConfig {
            loss: loss.clone().into(),
            instance,
            grid: GridSpec::Auto,
            schedule: Schedule::Constant { step: T::lit(0.5) },
            iterations: 10_000,
            init: Init::Zeros,
            clamp: T::lit(20.0),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Reads a config and resolves a relative instance path against its directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let mut config = Self::from_json(&fs::read_to_string(path)?)?;
        if let InstanceRef::Path(p) = &mut config.instance {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("iterations: must be >= 1".into()));
        }
        let step = self.schedule.base();
        if !step.is_finite() || !(step > T::zero()) {
            return Err(Error::Config(format!("schedule.step: must be finite and > 0, got {step}")));
        }
        if !self.clamp.is_finite() || !(self.clamp > T::zero()) {
            return Err(Error::Config(format!("clamp: must be finite and > 0, got {}", self.clamp)));
        }
        self.margin_loss()?;
        Ok(())
    }

    pub fn margin_loss(&self) -> Result<MarginLoss<T>> {
        MarginLoss::new(self.loss.kind, self.loss.tau, self.loss.lambda)
    }

    pub fn load_instance(&self) -> Result<ProblemInstance<T>> {
        match &self.instance {
            InstanceRef::Path(p) => ProblemInstance::from_json(&fs::read_to_string(p)?),
            InstanceRef::Inline(inst) => Ok(inst.clone()),
            InstanceRef::Scenario { name, params } => scenarios::build(name, params),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TrajectoryPoint<T> {
    pub iteration: usize,
    pub surrogate_risk: T,
    pub adv01_risk: T,
    pub qstar_risk: T,
    pub max_update: T,
}

/// Logged diagnostics of a run, one point every `⌈T/200⌉` iterations plus
/// the initial and final iterates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TrajectoryRecord<T> {
    pub loss: String,
    pub log_every: usize,
    pub points: Vec<TrajectoryPoint<T>>,
}

impl<T: Scalar> TrajectoryRecord<T> {
    pub fn last(&self) -> &TrajectoryPoint<T> {
        self.points.last().expect("a trajectory has its initial point")
    }

    /// Running minimum of the logged surrogate risk.
    pub fn best_so_far(&self) -> Vec<T> {
        let mut best = T::infinity();
        self.points
            .iter()
            .map(|p| {
                best = best.min(p.surrogate_risk);
                best
            })
            .collect()
    }

    /// `last − best` logged surrogate risk.
    pub fn surrogate_gap(&self) -> T {
        let best = self.best_so_far().last().copied().unwrap_or(T::zero());
        self.last().surrogate_risk - best
    }

    pub fn csv_header() -> [&'static str; 5] {
        ["iteration", "surrogate_risk", "adv01_risk", "qstar_risk", "max_update"]
    }

    pub fn csv_rows(&self) -> Vec<[String; 5]> {
        self.points
            .iter()
            .map(|p| {
                [
                    p.iteration.to_string(),
                    p.surrogate_risk.to_string(),
                    p.adv01_risk.to_string(),
                    p.qstar_risk.to_string(),
                    p.max_update.to_string(),
                ]
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    pub trajectory: TrajectoryRecord<T>,
    pub classifier: GridClassifier<T>,
    pub instance: ProblemInstance<T>,
}

/// Ball cell lists of every atom, computed once per grid.
struct Balls {
    cells: Vec<Vec<usize>>,
}

impl Balls {
    fn new<T: Scalar>(f: &GridClassifier<T>, inst: &ProblemInstance<T>) -> Result<Self> {
        let cells = inst
            .atoms()
            .iter()
            .map(|a| f.ball_cells(&a.x, inst.epsilon(), inst.metric()))
            .collect::<Result<_>>()?;
        Ok(Balls { cells })
    }

    fn surrogate_and_gradient<T: Scalar>(
        &self,
        f: &GridClassifier<T>,
        loss: &MarginLoss<T>,
        inst: &ProblemInstance<T>,
    ) -> (T, Vec<T>) {
        let mut grad = vec![T::zero(); f.cell_count()];
        let mut risk = T::zero();
        for (i, (atom, cells)) in inst.atoms().iter().zip(&self.cells).enumerate() {
            let sup = sup_over(f, loss, atom.y, i, cells);
            risk += atom.mass * sup.loss;
            let y = atom.y.sign::<T>();
            grad[sup.cell] += atom.mass * loss.derivative(y * f.values()[sup.cell]) * y;
        }
        (risk, grad)
    }

    fn adv_zero_one<T: Scalar>(&self, f: &GridClassifier<T>, inst: &ProblemInstance<T>) -> T {
        inst.atoms()
            .iter()
            .zip(&self.cells)
            .filter(|(a, cells)| cells.iter().any(|&c| Label::predict(f.values()[c]) != a.y))
            .fold(T::zero(), |acc, (a, _)| acc + a.mass)
    }
}

/// The (sub)gradient of the adversarial surrogate risk with respect to the
/// cell values: each atom adds `mass · φ'(y v) · y` at its argmax cell.
pub fn gradient<T: Scalar>(
    f: &GridClassifier<T>,
    loss: &MarginLoss<T>,
    inst: &ProblemInstance<T>,
) -> Result<Vec<T>> {
    Ok(Balls::new(f, inst)?.surrogate_and_gradient(f, loss, inst).1)
}

/// Central finite differences of the adversarial surrogate risk in every cell value.
pub fn finite_difference_gradient<T: Scalar>(
    f: &GridClassifier<T>,
    loss: &MarginLoss<T>,
    inst: &ProblemInstance<T>,
    h: T,
) -> Result<Vec<T>> {
    let balls = Balls::new(f, inst)?;
    let mut g = f.clone();
    (0..f.cell_count())
        .map(|c| {
            let v = f.values()[c];
            g.set_value(c, v + h);
            let up = balls.surrogate_and_gradient(&g, loss, inst).0;
            g.set_value(c, v - h);
            let down = balls.surrogate_and_gradient(&g, loss, inst).0;
            g.set_value(c, v);
            Ok((up - down) / (h + h))
        })
        .collect()
}

fn clamp<T: Scalar>(v: T, m: T) -> T {
    v.max(-m).min(m)
}

/// The initial classifier a config asks for.
pub fn initial_classifier<T: Scalar>(
    config: &TrainConfig<T>,
    inst: &ProblemInstance<T>,
) -> Result<GridClassifier<T>> {
    let m = config.clamp;
    let width = config.grid.width();
    let mut f = match config.init {
        Init::Zeros => GridClassifier::constant(auto_axes(inst, width)?, T::zero(), T::zero())?,
        Init::Random(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut f = GridClassifier::constant(auto_axes(inst, width)?, T::zero(), T::zero())?;
            for c in 0..f.cell_count() {
                f.set_value(c, T::lit(rng.gen_range(-1.0..=1.0)));
            }
            f
        }
        Init::Pathological(n) => pathological_sequence(inst, n, width)?,
        Init::Cover(k) => {
            let report = brute_force_bayes_risk(inst)?;
            let Witness::VertexCover { all_optimal: Some(covers), .. } = report.witness else {
                unreachable!("brute force lists its optimal covers")
            };
            let cover = covers.get(k).ok_or_else(|| {
                Error::Config(format!("init.cover: index {k} but only {} minimum covers", covers.len()))
            })?;
            cover_classifier(inst, cover, SaturationBound::new(m)?)?
        }
    };
    for c in 0..f.cell_count() {
        let v = clamp(f.values()[c], m);
        f.set_value(c, v);
    }
    Ok(f)
}

/// Runs a config end to end, loading its instance.
pub fn train<T: Scalar>(config: &TrainConfig<T>) -> Result<TrainOutcome<T>> {
    let inst = config.load_instance()?;
    train_on(config, &inst)
}

/// Runs `f ← clamp(f − step_t · g_t, ±M)` for `T` iterations on a given instance.
pub fn train_on<T: Scalar>(config: &TrainConfig<T>, inst: &ProblemInstance<T>) -> Result<TrainOutcome<T>> {
    config.validate()?;
    let loss = config.margin_loss()?;
    let mut f = initial_classifier(config, inst)?;
    let balls = Balls::new(&f, inst)?;
    let qstar = optimal_attack(inst).distribution();
    let total = config.iterations;
    let log_every = total.div_ceil(LOG_POINTS);
    let m = config.clamp;

    let point = |f: &GridClassifier<T>, iteration: usize, surrogate: T, max_update: T| TrajectoryPoint {
        iteration,
        surrogate_risk: surrogate,
        adv01_risk: balls.adv_zero_one(f, inst),
        qstar_risk: zero_one_risk(f, &qstar),
        max_update,
    };

    let (initial, mut grad) = balls.surrogate_and_gradient(&f, &loss, inst);
    let mut points = vec![point(&f, 0, initial, T::zero())];
    let limit = T::lit(DIVERGENCE_FACTOR) * initial;
    for t in 1..=total {
        let step = config.schedule.step(t);
        let mut max_update = T::zero();
        for (c, &g) in grad.iter().enumerate() {
            if g != T::zero() {
                let old = f.values()[c];
                let new = clamp(old - step * g, m);
                max_update = max_update.max((new - old).abs());
                f.set_value(c, new);
            }
        }
        let (risk, next) = balls.surrogate_and_gradient(&f, &loss, inst);
        grad = next;
        if !risk.is_finite() || (initial > T::zero() && risk > limit) {
            return Err(Error::Diverged { iteration: t, risk: risk.as_f64(), initial: initial.as_f64() });
        }
        if t % log_every == 0 || t == total {
            points.push(point(&f, t, risk, max_update));
        }
    }
    Ok(TrainOutcome {
        trajectory: TrajectoryRecord { loss: loss.name().to_string(), log_every, points },
        classifier: f,
        instance: inst.clone(),
    })
}

/// Shape of the three-point family: `+` at 0 with mass ½, `−` at `±a` with mass ¼.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreePoint<T> {
    pub epsilon: T,
    pub a: T,
}

impl<T: Scalar> ThreePoint<T> {
    pub fn recognize(inst: &ProblemInstance<T>) -> Result<Self> {
        let not_family = || {
            Error::Precondition(
                "instance is not the three-point family (+ at 0 with mass 1/2, - at -a and a with mass 1/4)"
                    .into(),
            )
        };
        let atoms = inst.atoms();
        if inst.dim() != 1 || atoms.len() != 3 {
            return Err(not_family());
        }
        let tol = T::lit(1e-12);
        let quarter = T::lit(0.25);
        let center = atoms.iter().find(|a| a.y == Label::Pos).ok_or_else(not_family)?;
        let sides: Vec<&Atom<T>> = atoms.iter().filter(|a| a.y == Label::Neg).collect();
        if center.x[0] != T::zero() || (center.mass - T::lit(0.5)).abs() > tol || sides.len() != 2 {
            return Err(not_family());
        }
        let a = sides[0].x[0].abs();
        if (sides[0].x[0] + sides[1].x[0]).abs() > tol
            || !(a > T::zero())
            || sides.iter().any(|s| (s.mass - quarter).abs() > tol)
        {
            return Err(not_family());
        }
        let eps = inst.epsilon();
        if !(eps < a && a < eps + eps) {
            return Err(Error::Precondition(format!(
                "three-point family needs eps < a < 2 eps, got eps = {eps}, a = {a}"
            )));
        }
        Ok(ThreePoint { epsilon: eps, a })
    }

    /// `Z₁ = [−ε, −a+ε]`.
    pub fn z1(&self) -> (T, T) {
        (-self.epsilon, self.epsilon - self.a)
    }

    /// `Z₂ = [a−ε, ε]`.
    pub fn z2(&self) -> (T, T) {
        (self.a - self.epsilon, self.epsilon)
    }
}

fn is_multiple<T: Scalar>(x: T, w: T) -> bool {
    let r = x / w;
    (r - r.round()).abs() <= T::lit(1e-9) * r.abs().max(T::one())
}

/// The coarsest cell width putting `±ε` and `±(a−ε)` on the lattice `wℤ`,
/// i.e. `(a−ε)/k` for the smallest `k` that also divides ε. Each of `Z₁`,
/// `Z₂` and the middle interval is then a whole number of cells.
fn aligned_width<T: Scalar>(shape: &ThreePoint<T>, width: Option<T>) -> Result<T> {
    let (eps, inner) = (shape.epsilon, shape.a - shape.epsilon);
    let aligned = |w: T| is_multiple(eps, w) && is_multiple(inner, w);
    if let Some(w) = width {
        return if w > T::zero() && aligned(w) {
            Ok(w)
        } else {
            Err(Error::Precondition(format!(
                "grid width {w} does not align with the breakpoints eps = {eps}, a - eps = {inner}"
            )))
        };
    }
    (1..=MAX_ALIGNMENT_DIVISOR)
        .map(|k| inner / T::from_count(k))
        .find(|&w| is_multiple(eps, w))
        .ok_or_else(|| {
            Error::Precondition(format!(
                "no grid width (a - eps)/k with k <= {MAX_ALIGNMENT_DIVISOR} divides eps = {eps}; pass a width"
            ))
        })
}

/// Largest divisor tried when aligning the pathological grid.
pub const MAX_ALIGNMENT_DIVISOR: usize = 10_000;

/// `h_n`: `+1/n` on `Z₁`, `−1/n` on `Z₂`, `+1` between them, `−1` elsewhere,
/// on a grid whose cell boundaries include every breakpoint. Without an
/// explicit width the coarsest such grid is used, so that `Z₁` and `Z₂` are
/// single cells for the default parameters.
pub fn pathological_sequence<T: Scalar>(
    inst: &ProblemInstance<T>,
    n: u64,
    width: Option<T>,
) -> Result<GridClassifier<T>> {
    if n == 0 {
        return Err(Error::Precondition("n must be a positive integer".into()));
    }
    let shape = ThreePoint::recognize(inst)?;
    let w = aligned_width(&shape, width)?;
    let reach = shape.a + shape.epsilon;
    let half_cells = (reach / w).ceil().to_usize().expect("finite width") + 1;
    let lo = -(T::from_count(half_cells) * w);
    let axis = Axis { lo, hi: -lo, cells: 2 * half_cells };
    let mut f = GridClassifier::constant(vec![axis], -T::one(), -T::one())?;
    let small = T::one() / T::lit(n as f64);
    let within = |x: T, (a, b): (T, T)| x > a && x < b;
    for c in 0..f.cell_count() {
        let x = f.cell_center(c)[0];
        let v = if within(x, shape.z1()) {
            small
        } else if within(x, shape.z2()) {
            -small
        } else if x.abs() < shape.a - shape.epsilon {
            T::one()
        } else {
            -T::one()
        };
        f.set_value(c, v);
    }
    Ok(f)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Passed,
    Failed,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PseudoConsistencyReport<T> {
    pub status: CheckStatus,
    pub bayes_risk: T,
    pub final_qstar_risk: T,
    pub final_adv01_risk: T,
    /// `R_ε(f_final) − R*_ε`; may stay large.
    pub consistency_gap: T,
    pub surrogate_gap: T,
}

/// Checks that the final iterate's 0/1 risk under the optimal attack is
/// within 0.01 of the adversarial Bayes risk, and reports the adversarial gap.
pub fn verify_pseudo_consistency<T: Scalar>(
    traj: &TrajectoryRecord<T>,
    inst: &ProblemInstance<T>,
) -> PseudoConsistencyReport<T> {
    let bayes = adversarial_bayes_risk(inst).value;
    let last = traj.last();
    let surrogate_gap = traj.surrogate_gap();
    let status = if surrogate_gap >= T::lit(CONVERGENCE_GAP) {
        CheckStatus::Inconclusive
    } else if (last.qstar_risk - bayes).abs() <= T::lit(RISK_TOLERANCE) {
        CheckStatus::Passed
    } else {
        CheckStatus::Failed
    };
    PseudoConsistencyReport {
        status,
        bayes_risk: bayes,
        final_qstar_risk: last.qstar_risk,
        final_adv01_risk: last.adv01_risk,
        consistency_gap: last.adv01_risk - bayes,
        surrogate_gap,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RealizableReport<T> {
    pub status: CheckStatus,
    pub loss: String,
    pub final_adv01_risk: T,
    pub final_surrogate_risk: T,
    pub inf_phi: T,
}

/// Settings used by [`verify_realizable_consistency`]: zeros init, constant step 2,
/// 10⁴ iterations, clamp 20.
pub fn realizable_config<T: Scalar>(loss: &MarginLoss<T>, inst: &ProblemInstance<T>) -> TrainConfig<T> {
    let mut config = TrainConfig::new(loss, InstanceRef::Inline(inst.clone()));
    config.schedule = Schedule::Constant { step: T::lit(2.0) };
    config
}

/// Trains on an instance with zero adversarial Bayes risk and checks that
/// both the adversarial 0/1 risk and the surrogate excess over `inf φ` vanish.
pub fn verify_realizable_consistency<T: Scalar>(
    inst: &ProblemInstance<T>,
    loss: &MarginLoss<T>,
) -> Result<RealizableReport<T>> {
    let bayes = adversarial_bayes_risk(inst).value;
    if bayes > T::zero() {
        return Err(Error::Precondition(format!(
            "instance is not realisable at this radius: adversarial Bayes risk {bayes}"
        )));
    }
    let outcome = train_on(&realizable_config(loss, inst), inst)?;
    let inf_phi = optimal_conditional_risk(loss, T::one(), &SearchConfig::default())?.value;
    let last = *outcome.trajectory.last();
    let tol = T::lit(RISK_TOLERANCE);
    let passed = last.adv01_risk <= tol && last.surrogate_risk <= inf_phi + tol;
    Ok(RealizableReport {
        status: if passed { CheckStatus::Passed } else { CheckStatus::Failed },
        loss: loss.name().to_string(),
        final_adv01_risk: last.adv01_risk,
        final_surrogate_risk: last.surrogate_risk,
        inf_phi,
    })
}

/// Smallest gap between an atom's supremum and its runner-up, in loss value.
pub fn argmax_margin<T: Scalar>(
    f: &GridClassifier<T>,
    loss: &MarginLoss<T>,
    inst: &ProblemInstance<T>,
) -> Result<T> {
    let terms = crate::grid_world::adversarial_argmax(f, loss, inst)?;
    Ok(terms.iter().fold(T::infinity(), |m, t| m.min(t.margin)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finite_instance::standard_bayes_risk;
    use crate::grid_world::{adv_surrogate_risk, adv_zero_one_risk, risk_under_distribution};
    use crate::losses::LossKind;

    fn three_point(eps: f64, a: f64) -> ProblemInstance<f64> {
        scenarios::three_point(eps, a).unwrap()
    }

    fn realizable() -> ProblemInstance<f64> {
        scenarios::realizable_pair(1.0, 10.0).unwrap()
    }

    fn logistic() -> MarginLoss<f64> {
        MarginLoss::of_kind(LossKind::Logistic)
    }

    #[test]
    fn pathological_sequence_values() {
        let inst = three_point(1.0, 1.5);
        for n in [1, 10, 10_000] {
            let h = pathological_sequence(&inst, n, None).unwrap();
            assert_eq!(h.axes()[0].width(), 0.5);
            assert_eq!(adv_zero_one_risk(&h, &inst).unwrap(), 0.75);
            assert_eq!(h.value_at(&[-0.75]), 1.0 / n as f64);
            assert_eq!(h.value_at(&[0.75]), -1.0 / n as f64);
            assert_eq!(h.value_at(&[0.0]), 1.0);
            assert_eq!(h.value_at(&[1.25]), -1.0);
        }
        let q = optimal_attack(&inst).distribution();
        assert_eq!(zero_one_risk(&pathological_sequence(&inst, 1, None).unwrap(), &q), 0.5);
    }

    #[test]
    fn pathological_surrogate_risk_approaches_phi_zero() {
        let inst = three_point(1.0, 1.5);
        let phi = logistic();
        for n in [1u64, 10, 100, 10_000, 1_000_000] {
            let h = pathological_sequence(&inst, n, None).unwrap();
            let s = adv_surrogate_risk(&h, &phi, &inst).unwrap();
            let x = 1.0 / n as f64;
            let exact = 0.75 * phi.eval(-x) + 0.25 * phi.eval(x);
            assert!((s - exact).abs() < 1e-15);
            assert!(s - 2f64.ln() <= x && s >= 2f64.ln());
        }
    }

    #[test]
    fn pathological_sequence_on_other_parameters() {
        for (eps, a) in [(1.0, 1.3), (0.5, 0.8), (2.0, 3.0)] {
            let inst = three_point(eps, a);
            for width in [None, Some(eps / 10.0)] {
                let h = pathological_sequence(&inst, 3, width).unwrap();
                assert_eq!(adv_zero_one_risk(&h, &inst).unwrap(), 0.75, "eps {eps}, a {a}");
            }
        }
    }

    #[test]
    fn pathological_sequence_preconditions() {
        let inst = realizable();
        assert!(matches!(pathological_sequence(&inst, 1, None), Err(Error::Precondition(_))));
        let inst = three_point(1.0, 1.5);
        assert!(matches!(pathological_sequence(&inst, 0, None), Err(Error::Precondition(_))));
        assert!(matches!(pathological_sequence(&inst, 1, Some(0.3)), Err(Error::Precondition(_))));
        let fine = pathological_sequence(&inst, 1, Some(0.0625)).unwrap();
        assert_eq!(adv_zero_one_risk(&fine, &inst).unwrap(), 0.75);
        let wide = inst.with_epsilon(0.7).unwrap();
        assert!(matches!(pathological_sequence(&wide, 1, None), Err(Error::Precondition(_))));
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let losses = [LossKind::Logistic, LossKind::Sigmoid, LossKind::ShiftedSigmoid];
        for inst in [three_point(1.0, 1.5), realizable()] {
            let axes = auto_axes(&inst, None).unwrap();
            for kind in losses {
                let loss = MarginLoss::of_kind(kind);
                let mut f = GridClassifier::constant(axes.clone(), 0.0, 0.0).unwrap();
                for c in 0..f.cell_count() {
                    f.set_value(c, rng.gen_range(-2.0..2.0));
                }
                if argmax_margin(&f, &loss, &inst).unwrap() < 1e-6 {
                    continue;
                }
                let g = gradient(&f, &loss, &inst).unwrap();
                let fd = finite_difference_gradient(&f, &loss, &inst, 1e-5).unwrap();
                for (a, b) in g.iter().zip(&fd) {
                    assert!((a - b).abs() < 1e-4, "{kind}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn hinge_subgradient_at_the_kink() {
        let inst = realizable();
        let f = GridClassifier::constant(auto_axes(&inst, None).unwrap(), 1.0, 1.0).unwrap();
        let g = gradient(&f, &MarginLoss::of_kind(LossKind::Hinge), &inst).unwrap();
        // the positive atom sits at the kink; the negative one sees margin −1
        assert_eq!(g.iter().filter(|&&v| v != 0.0).count(), 2);
        assert!(g.iter().any(|&v| v == -0.5));
        assert!(g.iter().any(|&v| v == 0.5));
    }

    #[test]
    fn config_json_round_trip_and_validation() {
        let text = r#"{
            "loss": {"kind": "logistic"},
            "instance": {"scenario": {"name": "three_point"}},
            "grid": "auto",
            "schedule": {"kind": "inv_sqrt", "step": 0.5},
            "iterations": 100,
            "init": {"pathological": 10},
            "clamp": 20
        }"#;
        let config = TrainConfig::<f64>::from_json(text).unwrap();
        assert_eq!(config.init, Init::Pathological(10));
        assert_eq!(config.schedule.step(4), 0.25);
        config.validate().unwrap();
        let again = TrainConfig::<f64>::from_json(&serde_json::to_string(&config).unwrap()).unwrap();
        assert_eq!(again, config);

        let mut bad = config.clone();
        bad.iterations = 0;
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
        let mut bad = config.clone();
        bad.clamp = -1.0;
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
        let mut bad = config;
        bad.schedule = Schedule::Constant { step: 0.0 };
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
        assert!(TrainConfig::<f64>::from_json(r#"{"loss": {"kind": "logistic"}, "bogus": 1}"#).is_err());
    }

    #[test]
    fn trajectory_logging_cadence() {
        let mut config = TrainConfig::new(&logistic(), InstanceRef::Inline(realizable()));
        config.iterations = 1000;
        let out = train(&config).unwrap();
        let t = &out.trajectory;
        assert_eq!(t.log_every, 5);
        assert_eq!(t.points.len(), 201);
        assert_eq!(t.points[1].iteration, 5);
        assert_eq!(t.last().iteration, 1000);
        let best = t.best_so_far();
        assert!(best.windows(2).all(|w| w[1] <= w[0]));
        for p in &t.points {
            assert!(p.surrogate_risk >= 0.0);
            assert!((0.0..=1.0).contains(&p.adv01_risk) && (0.0..=1.0).contains(&p.qstar_risk));
        }
    }

    #[test]
    fn realizable_pair_consistency() {
        for kind in [LossKind::Logistic, LossKind::Hinge, LossKind::ShiftedSigmoid] {
            let r = verify_realizable_consistency(&realizable(), &MarginLoss::of_kind(kind)).unwrap();
            assert_eq!(r.status, CheckStatus::Passed, "{r:?}");
            assert_eq!(r.final_adv01_risk, 0.0);
        }
        let err = verify_realizable_consistency(&three_point(1.0, 1.5), &logistic()).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn shifted_sigmoid_from_zeros_reaches_the_bayes_risk() {
        let loss = MarginLoss::shifted_sigmoid(1.0).unwrap();
        let mut config = TrainConfig::new(&loss, InstanceRef::Inline(three_point(1.0, 1.5)));
        config.iterations = 50_000;
        let out = train(&config).unwrap();
        let last = out.trajectory.last();
        assert_eq!(last.adv01_risk, 0.5, "{last:?}");
        assert_eq!(last.qstar_risk, 0.5);
    }

    #[test]
    fn lower_bound_chain_along_a_run() {
        let inst = three_point(1.0, 1.5);
        let sigmoid = MarginLoss::of_kind(LossKind::Sigmoid);
        let mut config = TrainConfig::new(&sigmoid, InstanceRef::Inline(inst.clone()));
        config.iterations = 400;
        config.init = Init::Random(1);
        let bayes = adversarial_bayes_risk(&inst).value;
        let q = optimal_attack(&inst).distribution();
        assert_eq!(standard_bayes_risk(&q), bayes);
        for iterations in [1, 50, 400] {
            config.iterations = iterations;
            let out = train(&config).unwrap();
            let f = &out.classifier;
            let adv = adv_surrogate_risk(f, &sigmoid, &inst).unwrap();
            let under_q = risk_under_distribution(f, &q, &sigmoid);
            assert!(adv >= under_q - 1e-12);
            assert!(under_q >= bayes - 1e-12);
        }
    }

    #[test]
    fn divergence_is_reported() {
        // a huge step on the square loss overshoots past the clamp and back
        let mut config = TrainConfig::new(&MarginLoss::of_kind(LossKind::Square), InstanceRef::Inline(realizable()));
        config.schedule = Schedule::Constant { step: 100.0 };
        config.clamp = 1000.0;
        config.iterations = 10;
        assert!(matches!(train(&config), Err(Error::Diverged { .. })));
    }

    #[test]
    fn cover_and_random_inits() {
        let inst = three_point(1.0, 1.5);
        let mut config = TrainConfig::new(&MarginLoss::of_kind(LossKind::Sigmoid), InstanceRef::Inline(inst.clone()));
        config.iterations = 1;
        for k in [0, 1] {
            config.init = Init::Cover(k);
            let f = initial_classifier(&config, &inst).unwrap();
            assert_eq!(adv_zero_one_risk(&f, &inst).unwrap(), 0.5);
        }
        config.init = Init::Cover(2);
        assert!(matches!(initial_classifier(&config, &inst), Err(Error::Config(_))));
        config.init = Init::Random(9);
        let a = initial_classifier(&config, &inst).unwrap();
        let b = initial_classifier(&config, &inst).unwrap();
        assert_eq!(a, b);
        assert!(a.values().iter().all(|v| v.abs() <= 1.0));
    }
}
