//! The margin-loss zoo, the two reference 0/1 losses, and conditional risks
//! minimized over the extended real line.
//!
//! A margin loss is a function `φ: ℝ → ℝ₊` applied to the signed margin
//! `y·f(x)`. The odd-structured members of the zoo (sigmoid, ramp and their
//! shifted versions) are all written as `φ(α) = λ + ψ(α − τ)` with `ψ` odd and
//! bounded below by `−½`, which is what the calibration and consistency
//! machinery keys on.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extended::ExtendedReal;
use crate::scalar::Scalar;

/// Binary label `y ∈ {−1, +1}`. Serialized as the integer `1` or `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Label {
    Neg,
    Pos,
}

impl Label {
    pub fn sign<T: Scalar>(self) -> T {
        match self {
            Label::Pos => T::one(),
            Label::Neg => -T::one(),
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Label::Pos => Label::Neg,
            Label::Neg => Label::Pos,
        }
    }

    /// Predicted label of a real score, with `sign(0) = +1`.
    pub fn predict<T: Scalar>(score: T) -> Self {
        if score >= T::zero() {
            Label::Pos
        } else {
            Label::Neg
        }
    }
}

impl TryFrom<i8> for Label {
    type Error = String;

    fn try_from(v: i8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Label::Pos),
            -1 => Ok(Label::Neg),
            other => Err(format!("label must be 1 or -1, got {other}")),
        }
    }
}

impl From<Label> for i8 {
    fn from(l: Label) -> i8 {
        match l {
            Label::Pos => 1,
            Label::Neg => -1,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", i8::from(*self))
    }
}

/// Anything that scores a prediction `v` against a label `y`.
pub trait PointLoss<T: Scalar> {
    fn label(&self) -> String;

    /// `L(y, v)` for a finite prediction.
    fn loss(&self, y: Label, v: T) -> T;

    /// `L(y, v)` in the limit `v → +∞` (`positive`) or `v → −∞`.
    fn loss_at_infinity(&self, y: Label, positive: bool) -> ExtendedReal<T>;

    fn loss_ext(&self, y: Label, v: ExtendedReal<T>) -> ExtendedReal<T> {
        match v {
            ExtendedReal::Finite(x) => ExtendedReal::Finite(self.loss(y, x)),
            ExtendedReal::PosInf => self.loss_at_infinity(y, true),
            ExtendedReal::NegInf => self.loss_at_infinity(y, false),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Hinge,
    Logistic,
    Square,
    Exponential,
    Sigmoid,
    Ramp,
    ShiftedSigmoid,
    ShiftedRamp,
}

impl LossKind {
    pub const ALL: [LossKind; 8] = [
        LossKind::Hinge,
        LossKind::Logistic,
        LossKind::Square,
        LossKind::Exponential,
        LossKind::Sigmoid,
        LossKind::Ramp,
        LossKind::ShiftedSigmoid,
        LossKind::ShiftedRamp,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LossKind::Hinge => "hinge",
            LossKind::Logistic => "logistic",
            LossKind::Square => "square",
            LossKind::Exponential => "exponential",
            LossKind::Sigmoid => "sigmoid",
            LossKind::Ramp => "ramp",
            LossKind::ShiftedSigmoid => "shifted_sigmoid",
            LossKind::ShiftedRamp => "shifted_ramp",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        LossKind::ALL
            .into_iter()
            .find(|k| k.as_str() == name)
            .ok_or_else(|| Error::Config(format!("unknown loss kind {name:?}")))
    }

    fn is_convex(self) -> bool {
        matches!(
            self,
            LossKind::Hinge | LossKind::Logistic | LossKind::Square | LossKind::Exponential
        )
    }

    fn is_odd_structured(self) -> bool {
        !self.is_convex()
    }

    fn is_shifted(self) -> bool {
        matches!(self, LossKind::ShiftedSigmoid | LossKind::ShiftedRamp)
    }

    fn is_sigmoid_like(self) -> bool {
        matches!(self, LossKind::Sigmoid | LossKind::ShiftedSigmoid)
    }

    fn default_tau(self) -> f64 {
        match self {
            LossKind::ShiftedSigmoid => 1.0,
            LossKind::ShiftedRamp => 0.5,
            _ => 0.0,
        }
    }

    fn default_lambda(self) -> f64 {
        if self.is_odd_structured() {
            0.5
        } else {
            0.0
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LossFlags {
    pub is_convex: bool,
    pub is_decreasing: bool,
    pub is_strictly_decreasing_near_zero: bool,
    pub is_odd_plus_constant: bool,
}

/// `φ(α) = λ + ψ(α − τ)` with `ψ` odd.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OddStructure<T> {
    pub lambda: T,
    pub tau: T,
}

/// The user-facing JSON shape of a loss: `{"kind": ..., "tau": ..., "lambda": ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossSpec<T> {
    pub kind: LossKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<T>,
}

/// A member of the margin-loss zoo with its derived structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LossSpec<T>", into = "LossSpec<T>")]
#[serde(bound = "T: Scalar")]
pub struct MarginLoss<T> {
    name: String,
    kind: LossKind,
    tau: T,
    lambda: T,
    flags: LossFlags,
    limits: (ExtendedReal<T>, ExtendedReal<T>),
}

impl<T: Scalar> TryFrom<LossSpec<T>> for MarginLoss<T> {
    type Error = Error;

    fn try_from(spec: LossSpec<T>) -> Result<Self> {
        MarginLoss::new(spec.kind, spec.tau, spec.lambda)
    }
}

impl<T: Scalar> From<MarginLoss<T>> for LossSpec<T> {
    fn from(loss: MarginLoss<T>) -> Self {
        LossSpec {
            kind: loss.kind,
            tau: Some(loss.tau),
            lambda: Some(loss.lambda),
        }
    }
}

impl<T: Scalar> MarginLoss<T> {
    /// Builds a loss; missing `tau`/`lambda` take the kind's defaults
    /// (`τ = 1` for shifted_sigmoid, `τ = ½` for shifted_ramp, `λ = ½` for
    /// odd-structured kinds, 0 otherwise).
    pub fn new(kind: LossKind, tau: Option<T>, lambda: Option<T>) -> Result<Self> {
        let tau = tau.unwrap_or_else(|| T::lit(kind.default_tau()));
        let lambda = lambda.unwrap_or_else(|| T::lit(kind.default_lambda()));
        if !tau.is_finite() || tau < T::zero() {
            return Err(Error::Config(format!("{kind}: tau must be finite and >= 0, got {tau}")));
        }
        if !lambda.is_finite() || lambda < T::zero() {
            return Err(Error::Config(format!(
                "{kind}: lambda must be finite and >= 0, got {lambda}"
            )));
        }
        if !kind.is_shifted() && tau != T::zero() {
            return Err(Error::Config(format!("{kind} takes no shift, got tau = {tau}")));
        }
        if kind.is_convex() && lambda != T::zero() {
            return Err(Error::Config(format!("{kind} takes no offset, got lambda = {lambda}")));
        }
        let half = T::lit(0.5);
        if kind.is_odd_structured() && lambda < half {
            // inf ψ = −½, so a smaller offset makes the loss negative
            return Err(Error::Config(format!(
                "{kind}: lambda must be >= 1/2 to keep the loss nonnegative, got {lambda}"
            )));
        }

        let flags = LossFlags {
            is_convex: kind.is_convex(),
            is_decreasing: kind != LossKind::Square,
            is_strictly_decreasing_near_zero: match kind {
                // ψ_ramp is strictly decreasing only on (−1, 1); at α = 0 the argument is −τ
                LossKind::Ramp | LossKind::ShiftedRamp => tau < T::one(),
                _ => true,
            },
            is_odd_plus_constant: kind.is_odd_structured() && tau == T::zero(),
        };
        let limits = match kind {
            LossKind::Hinge | LossKind::Logistic | LossKind::Exponential => {
                (ExtendedReal::PosInf, ExtendedReal::zero())
            }
            LossKind::Square => (ExtendedReal::PosInf, ExtendedReal::PosInf),
            _ => (ExtendedReal::Finite(lambda + half), ExtendedReal::Finite(lambda - half)),
        };
        let name = if kind.is_shifted() {
            format!("{kind}(tau={tau})")
        } else {
            kind.as_str().to_string()
        };
        let name = if kind.is_odd_structured() && lambda != half {
            format!("{name}+{}", lambda - half)
        } else {
            name
        };
        Ok(MarginLoss { name, kind, tau, lambda, flags, limits })
    }

    pub fn of_kind(kind: LossKind) -> Self {
        Self::new(kind, None, None).expect("default parameters are valid")
    }

    pub fn shifted_sigmoid(tau: T) -> Result<Self> {
        Self::new(LossKind::ShiftedSigmoid, Some(tau), None)
    }

    pub fn shifted_ramp(tau: T) -> Result<Self> {
        Self::new(LossKind::ShiftedRamp, Some(tau), None)
    }

    /// The eight canonical zoo members, shifted ones at `τ = 1` (sigmoid) and `τ = ½` (ramp).
    pub fn zoo() -> Vec<Self> {
        LossKind::ALL.into_iter().map(Self::of_kind).collect()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> LossKind {
        self.kind
    }

    pub fn tau(&self) -> T {
        self.tau
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn flags(&self) -> LossFlags {
        self.flags
    }

    /// `(lim_{t→−∞} φ(t), lim_{t→+∞} φ(t))`.
    pub fn limits(&self) -> (ExtendedReal<T>, ExtendedReal<T>) {
        self.limits
    }

    /// The `λ + ψ(· − τ)` decomposition, for odd-structured kinds.
    pub fn odd_structure(&self) -> Option<OddStructure<T>> {
        self.kind
            .is_odd_structured()
            .then_some(OddStructure { lambda: self.lambda, tau: self.tau })
    }

    /// The odd part `ψ` of odd-structured kinds.
    pub fn psi(&self, u: T) -> Option<T> {
        let half = T::lit(0.5);
        if self.kind.is_sigmoid_like() {
            // (1 + e^u)^{-1} − ½ = −½ tanh(u/2); tanh keeps the oddness exact
            Some(-half * (u * half).tanh())
        } else if self.kind.is_odd_structured() {
            Some((-u * half).max(-half).min(half))
        } else {
            None
        }
    }

    /// `φ(t)` at a finite margin.
    pub fn eval(&self, t: T) -> T {
        let one = T::one();
        match self.kind {
            LossKind::Hinge => (one - t).max(T::zero()),
            LossKind::Logistic => {
                if t > T::zero() {
                    (-t).exp().ln_1p()
                } else {
                    -t + t.exp().ln_1p()
                }
            }
            LossKind::Square => (one - t) * (one - t),
            LossKind::Exponential => (-t).exp(),
            _ => self.lambda + self.psi(t - self.tau).expect("odd-structured kind"),
        }
    }

    /// `φ` at an extended margin, using the declared limits at `±∞`.
    pub fn eval_ext(&self, t: ExtendedReal<T>) -> ExtendedReal<T> {
        match t {
            ExtendedReal::Finite(x) => ExtendedReal::Finite(self.eval(x)),
            ExtendedReal::NegInf => self.limits.0,
            ExtendedReal::PosInf => self.limits.1,
        }
    }

    /// A derivative of `φ` at `t`; at kinks a fixed subgradient is returned
    /// (hinge at 1: −1, ramp at its two corners: −½ scaled slope).
    pub fn derivative(&self, t: T) -> T {
        let one = T::one();
        let half = T::lit(0.5);
        match self.kind {
            LossKind::Hinge => {
                if t <= one {
                    -one
                } else {
                    T::zero()
                }
            }
            LossKind::Logistic => {
                // −1/(1+e^t), written to avoid overflow for large |t|
                if t > T::zero() {
                    let e = (-t).exp();
                    -e / (one + e)
                } else {
                    -one / (one + t.exp())
                }
            }
            LossKind::Square => -(one + one) * (one - t),
            LossKind::Exponential => -(-t).exp(),
            LossKind::Sigmoid | LossKind::ShiftedSigmoid => {
                let th = ((t - self.tau) * half).tanh();
                -half * half * (one - th * th)
            }
            LossKind::Ramp | LossKind::ShiftedRamp => {
                if (t - self.tau).abs() <= one {
                    -half
                } else {
                    T::zero()
                }
            }
        }
    }
}

impl<T: Scalar> PointLoss<T> for MarginLoss<T> {
    fn label(&self) -> String {
        self.name.clone()
    }

    fn loss(&self, y: Label, v: T) -> T {
        self.eval(y.sign::<T>() * v)
    }

    fn loss_at_infinity(&self, y: Label, positive: bool) -> ExtendedReal<T> {
        let margin_positive = positive == (y == Label::Pos);
        if margin_positive {
            self.limits.1
        } else {
            self.limits.0
        }
    }
}

/// The two 0/1 losses: `l_{0/1}` (error iff `y·sign(v) ≤ 0`, `sign(0) = +1`)
/// and `l_≤` (error iff `y·v ≤ 0`, so indecision is always penalized).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceLoss {
    ZeroOne,
    ZeroOneLeq,
}

impl<T: Scalar> PointLoss<T> for ReferenceLoss {
    fn label(&self) -> String {
        match self {
            ReferenceLoss::ZeroOne => "zero_one".into(),
            ReferenceLoss::ZeroOneLeq => "zero_one_leq".into(),
        }
    }

    fn loss(&self, y: Label, v: T) -> T {
        let wrong = match self {
            ReferenceLoss::ZeroOne => Label::predict(v) != y,
            ReferenceLoss::ZeroOneLeq => y.sign::<T>() * v <= T::zero(),
        };
        if wrong {
            T::one()
        } else {
            T::zero()
        }
    }

    fn loss_at_infinity(&self, y: Label, positive: bool) -> ExtendedReal<T> {
        let predicted = if positive { Label::Pos } else { Label::Neg };
        if predicted == y {
            ExtendedReal::zero()
        } else {
            ExtendedReal::Finite(T::one())
        }
    }
}

fn check_eta<T: Scalar>(eta: T) -> Result<()> {
    if eta >= T::zero() && eta <= T::one() {
        Ok(())
    } else {
        Err(Error::Domain(format!("eta must lie in [0, 1], got {eta}")))
    }
}

/// `η L(+1, α) + (1 − η) L(−1, α)`; for margin losses `ηφ(α) + (1−η)φ(−α)`.
pub fn conditional_risk<T: Scalar, L: PointLoss<T> + ?Sized>(
    loss: &L,
    eta: T,
    alpha: ExtendedReal<T>,
) -> Result<ExtendedReal<T>> {
    check_eta(eta)?;
    Ok(conditional_risk_unchecked(loss, eta, alpha))
}

fn conditional_risk_unchecked<T: Scalar, L: PointLoss<T> + ?Sized>(
    loss: &L,
    eta: T,
    alpha: ExtendedReal<T>,
) -> ExtendedReal<T> {
    let pos = loss.loss_ext(Label::Pos, alpha).weighted(eta);
    let neg = loss.loss_ext(Label::Neg, alpha).weighted(T::one() - eta);
    pos.add_nonneg(neg)
}

/// `S(α) = ½φ(α) + ½φ(−α)`, the conditional risk at `η = ½`.
pub fn symmetrized<T: Scalar>(loss: &MarginLoss<T>, alpha: ExtendedReal<T>) -> ExtendedReal<T> {
    let half = T::lit(0.5);
    loss.eval_ext(alpha)
        .weighted(half)
        .add_nonneg(loss.eval_ext(alpha.neg()).weighted(half))
}

/// Bounded-grid search over the extended reals.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SearchConfig<T> {
    /// The grid covers `[−bound, bound]`.
    pub bound: T,
    pub step: T,
    /// Golden-section bracket width at which refinement stops.
    pub refine_tol: T,
    /// Slack under which a point counts as a minimizer.
    pub argmin_tol: T,
}

impl<T: Scalar> Default for SearchConfig<T> {
    fn default() -> Self {
        SearchConfig {
            bound: T::lit(50.0),
            step: T::lit(0.01),
            refine_tol: T::lit(1e-10),
            argmin_tol: T::lit(1e-7),
        }
    }
}

/// Where the near-minimizers of a conditional risk sit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArgminSummary<T> {
    pub neg_inf: bool,
    pub pos_inf: bool,
    /// Whether `α = 0` is within tolerance of the minimum.
    pub zero: bool,
    /// Maximal runs of grid points within tolerance, as closed intervals.
    pub finite: Vec<(T, T)>,
}

impl<T: Scalar> ArgminSummary<T> {
    /// Every near-minimizer is `≥ 0` (or `+∞`).
    pub fn all_nonnegative(&self) -> bool {
        !self.neg_inf && self.finite.iter().all(|(lo, _)| *lo >= T::zero())
    }

    /// Every near-minimizer is `< 0` (or `−∞`).
    pub fn all_negative(&self) -> bool {
        !self.pos_inf && self.finite.iter().all(|(_, hi)| *hi < T::zero())
    }

    /// Smallest `|α|` among the finite near-minimizers.
    pub fn min_abs_finite(&self) -> Option<T> {
        self.finite
            .iter()
            .map(|&(lo, hi)| {
                if lo <= T::zero() && hi >= T::zero() {
                    T::zero()
                } else {
                    lo.abs().min(hi.abs())
                }
            })
            .reduce(T::min)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimalRisk<T> {
    pub value: T,
    /// One point attaining `value`.
    pub minimizer: ExtendedReal<T>,
    pub argmin: ArgminSummary<T>,
}

/// `inf_{α ∈ ℝ̄} ηL(+1, α) + (1−η)L(−1, α)`.
///
/// Searched on a uniform grid over `[−B, B]`, refined by golden section on the
/// bracket around the best grid point, and compared against both limits.
pub fn optimal_conditional_risk<T: Scalar, L: PointLoss<T> + ?Sized>(
    loss: &L,
    eta: T,
    search: &SearchConfig<T>,
) -> Result<OptimalRisk<T>> {
    check_eta(eta)?;
    if !(search.bound > T::zero() && search.step > T::zero() && search.step <= search.bound) {
        return Err(Error::Config("search grid needs 0 < step <= bound".into()));
    }
    let eval = |a: T| -> Result<T> {
        conditional_risk_unchecked(loss, eta, ExtendedReal::Finite(a))
            .finite()
            .filter(|v| v.is_finite())
            .ok_or_else(|| {
                Error::Numeric(format!("{} is not finite at alpha = {a}", loss.label()))
            })
    };

    let n = (T::lit(2.0) * search.bound / search.step).round().to_usize().unwrap_or(0) + 1;
    let grid: Vec<T> = (0..n)
        .map(|i| -search.bound + search.step * T::from_count(i))
        .collect();
    let values = grid.iter().map(|&a| eval(a)).collect::<Result<Vec<T>>>()?;

    let (best, &grid_min) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).expect("finite values"))
        .expect("grid is nonempty");
    let mut value = grid_min;
    let mut minimizer = ExtendedReal::Finite(grid[best]);

    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(n - 1)];
    let (refined_at, refined) = golden_section(&eval, lo, hi, search.refine_tol)?;
    if refined < value {
        value = refined;
        minimizer = ExtendedReal::Finite(refined_at);
    }
    let at_zero = eval(T::zero())?;
    if at_zero < value {
        value = at_zero;
        minimizer = ExtendedReal::zero();
    }
    let lim_neg = conditional_risk_unchecked(loss, eta, ExtendedReal::NegInf);
    let lim_pos = conditional_risk_unchecked(loss, eta, ExtendedReal::PosInf);
    for (lim, at) in [(lim_neg, ExtendedReal::NegInf), (lim_pos, ExtendedReal::PosInf)] {
        if let Some(v) = lim.finite() {
            if v < value {
                value = v;
                minimizer = at;
            }
        }
    }

    let cut = value + search.argmin_tol;
    let near = |v: ExtendedReal<T>| v.finite().is_some_and(|x| x <= cut);
    let mut finite = Vec::new();
    let mut run: Option<(T, T)> = None;
    for (a, v) in grid.iter().zip(&values) {
        if *v <= cut {
            run = Some(match run {
                Some((start, _)) => (start, *a),
                None => (*a, *a),
            });
        } else if let Some(r) = run.take() {
            finite.push(r);
        }
    }
    finite.extend(run);

    Ok(OptimalRisk {
        value,
        minimizer,
        argmin: ArgminSummary {
            neg_inf: near(lim_neg),
            pos_inf: near(lim_pos),
            zero: at_zero <= cut,
            finite,
        },
    })
}

fn golden_section<T: Scalar>(
    f: &impl Fn(T) -> Result<T>,
    mut a: T,
    mut b: T,
    tol: T,
) -> Result<(T, T)> {
    let inv_phi = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
    let mut c = b - (b - a) * inv_phi;
    let mut d = a + (b - a) * inv_phi;
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * inv_phi;
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * inv_phi;
            fd = f(d)?;
        }
        if c >= d {
            break;
        }
    }
    Ok(if fc <= fd { (c, fc) } else { (d, fd) })
}
