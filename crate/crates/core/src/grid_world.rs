//! Piecewise-constant classifiers on 1D/2D grids with exact adversarial risks.
//!
//! For a classifier that is constant on grid cells, the supremum over a ball is
//! a maximum over the cells the ball reaches. A cell counts when the ball
//! meets it in a set of positive measure, i.e. when the distance from the
//! center to the closed cell is strictly below ε. Cells that only touch the
//! ball's boundary sphere are ignored, which makes the result independent of
//! how shared cell faces are assigned.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::finite_instance::{build_conflict_graph, Atom, Metric, ProblemInstance};
use crate::losses::{Label, MarginLoss, PointLoss, ReferenceLoss};
use crate::scalar::Scalar;

/// Auto-sized grids refuse to grow beyond this many cells.
pub const MAX_CELLS: usize = 1 << 22;
/// Cells per ε along each axis for auto-sized grids, at least.
pub const CELLS_PER_EPSILON: f64 = 10.0;

/// One axis of the grid box: `cells` equal cells spanning `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Axis<T> {
    pub lo: T,
    pub hi: T,
    pub cells: usize,
}

impl<T: Scalar> Axis<T> {
    pub fn width(&self) -> T {
        (self.hi - self.lo) / T::from_count(self.cells)
    }

    /// Left edge of cell `k`; `boundary(cells)` is `hi`.
    pub fn boundary(&self, k: usize) -> T {
        if k == self.cells {
            self.hi
        } else {
            self.lo + self.width() * T::from_count(k)
        }
    }

    /// Cell holding `x` under half-open cells `[a, b)`, if inside the axis.
    pub fn locate(&self, x: T) -> Option<usize> {
        if !(x >= self.lo && x < self.hi) {
            return None;
        }
        let guess = ((x - self.lo) / self.width()).floor().to_usize().unwrap_or(0);
        let mut k = guess.min(self.cells - 1);
        while k > 0 && x < self.boundary(k) {
            k -= 1;
        }
        while k + 1 < self.cells && x >= self.boundary(k + 1) {
            k += 1;
        }
        Some(k)
    }

    /// Distance from `x` to the closed cell `k`.
    fn gap(&self, k: usize, x: T) -> T {
        let (a, b) = (self.boundary(k), self.boundary(k + 1));
        (a - x).max(x - b).max(T::zero())
    }

    fn validate(&self, axis: usize) -> Result<()> {
        if !self.lo.is_finite() || !self.hi.is_finite() || !(self.lo < self.hi) {
            return Err(Error::Config(format!(
                "axes[{axis}]: need finite lo < hi, got [{}, {}]",
                self.lo, self.hi
            )));
        }
        if self.cells == 0 {
            return Err(Error::Config(format!("axes[{axis}].cells: must be >= 1")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct RawGrid<T> {
    axes: Vec<Axis<T>>,
    values: Vec<T>,
    outside: T,
}

/// A classifier constant on the cells of a 1D or 2D grid, with one more value
/// outside the grid box. Values are stored row-major (last axis fastest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid<T>", into = "RawGrid<T>")]
#[serde(bound = "T: Scalar")]
pub struct GridClassifier<T> {
    axes: Vec<Axis<T>>,
    values: Vec<T>,
    outside: T,
}

impl<T: Scalar> TryFrom<RawGrid<T>> for GridClassifier<T> {
    type Error = Error;

    fn try_from(raw: RawGrid<T>) -> Result<Self> {
        GridClassifier::new(raw.axes, raw.values, raw.outside)
    }
}

impl<T: Scalar> From<GridClassifier<T>> for RawGrid<T> {
    fn from(g: GridClassifier<T>) -> Self {
        RawGrid { axes: g.axes, values: g.values, outside: g.outside }
    }
}

impl<T: Scalar> GridClassifier<T> {
    pub fn new(axes: Vec<Axis<T>>, values: Vec<T>, outside: T) -> Result<Self> {
        if !(1..=2).contains(&axes.len()) {
            return Err(Error::Config(format!("axes: dimension must be 1 or 2, got {}", axes.len())));
        }
        for (i, a) in axes.iter().enumerate() {
            a.validate(i)?;
        }
        let count: usize = axes.iter().map(|a| a.cells).product();
        if values.len() != count {
            return Err(Error::Config(format!(
                "values: expected {count} cell values, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Config(format!("values[{i}]: not finite")));
        }
        if !outside.is_finite() {
            return Err(Error::Config("outside: not finite".into()));
        }
        Ok(GridClassifier { axes, values, outside })
    }

    pub fn constant(axes: Vec<Axis<T>>, value: T, outside: T) -> Result<Self> {
        let count = axes.iter().map(|a| a.cells).product();
        GridClassifier::new(axes, vec![value; count], outside)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("classifiers serialize")
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis<T>] {
        &self.axes
    }

    pub fn cell_count(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn outside(&self) -> T {
        self.outside
    }

    /// Overwrites one cell value; the value must be finite.
    pub fn set_value(&mut self, cell: usize, value: T) {
        assert!(value.is_finite(), "cell values must be finite");
        self.values[cell] = value;
    }

    /// Per-axis cell indices of a flat cell index.
    pub fn unflatten(&self, cell: usize) -> Vec<usize> {
        match self.axes.as_slice() {
            [_] => vec![cell],
            [_, b] => vec![cell / b.cells, cell % b.cells],
            _ => unreachable!("dimension is 1 or 2"),
        }
    }

    fn flatten(&self, idx: &[usize]) -> usize {
        match idx {
            [i] => *i,
            [i, j] => i * self.axes[1].cells + j,
            _ => unreachable!("dimension is 1 or 2"),
        }
    }

    /// Closed bounds `(lo, hi)` of a cell along every axis.
    pub fn cell_bounds(&self, cell: usize) -> Vec<(T, T)> {
        self.unflatten(cell)
            .into_iter()
            .zip(&self.axes)
            .map(|(k, a)| (a.boundary(k), a.boundary(k + 1)))
            .collect()
    }

    pub fn cell_center(&self, cell: usize) -> Vec<T> {
        let half = T::lit(0.5);
        self.cell_bounds(cell).into_iter().map(|(a, b)| (a + b) * half).collect()
    }

    /// Flat index of the half-open cell holding `x`, or `None` outside the box.
    pub fn locate(&self, x: &[T]) -> Option<usize> {
        let idx: Option<Vec<usize>> = self.axes.iter().zip(x).map(|(a, &c)| a.locate(c)).collect();
        idx.map(|i| self.flatten(&i))
    }

    /// `f(x)`.
    pub fn value_at(&self, x: &[T]) -> T {
        self.locate(x).map_or(self.outside, |c| self.values[c])
    }

    fn slack(&self, center: &[T], eps: T) -> T {
        let scale = center.iter().fold(eps, |m, c| m.max(c.abs())).max(T::one());
        T::lit(1e-12).max(T::epsilon() * T::lit(64.0)) * scale
    }

    /// Cells met by the ball `B_ε(center)` in positive measure, in ascending
    /// index order. For `ε = 0` this is the single cell holding the center.
    pub fn ball_cells(&self, center: &[T], eps: T, metric: Metric) -> Result<Vec<usize>> {
        if center.len() != self.dim() {
            return Err(Error::Domain(format!(
                "point of dimension {} on a {}-dimensional grid",
                center.len(),
                self.dim()
            )));
        }
        let uncovered = || {
            Error::Domain(format!(
                "grid box does not contain the {eps}-ball around {center:?}"
            ))
        };
        if eps == T::zero() {
            return self.locate(center).map(|c| vec![c]).ok_or_else(uncovered);
        }
        let slack = self.slack(center, eps);
        for (a, &c) in self.axes.iter().zip(center) {
            if c - eps < a.lo - slack || c + eps > a.hi + slack {
                return Err(uncovered());
            }
        }
        let reach = eps - slack;
        // cells within reach along each axis separately
        let ranges: Vec<Vec<(usize, T)>> = self
            .axes
            .iter()
            .zip(center)
            .map(|(a, &c)| {
                (0..a.cells)
                    .map(|k| (k, a.gap(k, c)))
                    .filter(|&(_, g)| g < reach)
                    .collect()
            })
            .collect();
        let mut cells = Vec::new();
        match ranges.as_slice() {
            [xs] => cells.extend(xs.iter().map(|&(k, _)| k)),
            [xs, ys] => {
                for &(i, gx) in xs {
                    for &(j, gy) in ys {
                        let inside = match metric {
                            Metric::Chebyshev => true,
                            Metric::Euclidean => gx * gx + gy * gy < reach * reach,
                        };
                        if inside {
                            cells.push(self.flatten(&[i, j]));
                        }
                    }
                }
            }
            _ => unreachable!("dimension is 1 or 2"),
        }
        Ok(cells)
    }

    /// The same classifier on a grid with every cell split in two along each axis.
    pub fn refine(&self) -> Self {
        let axes: Vec<Axis<T>> =
            self.axes.iter().map(|a| Axis { lo: a.lo, hi: a.hi, cells: 2 * a.cells }).collect();
        let count: usize = axes.iter().map(|a| a.cells).product();
        let values = (0..count)
            .map(|cell| {
                let idx: Vec<usize> = match axes.as_slice() {
                    [_] => vec![cell / 2],
                    [_, b] => vec![cell / b.cells / 2, cell % b.cells / 2],
                    _ => unreachable!("dimension is 1 or 2"),
                };
                self.values[self.flatten(&idx)]
            })
            .collect();
        GridClassifier { axes, values, outside: self.outside }
    }

    pub fn csv_header(&self) -> Vec<String> {
        let mut h = vec!["cell".to_string()];
        for k in 0..self.dim() {
            h.push(format!("x{k}_lo"));
            h.push(format!("x{k}_hi"));
        }
        h.push("value".into());
        h
    }

    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        (0..self.cell_count())
            .map(|cell| {
                let mut row = vec![cell.to_string()];
                for (a, b) in self.cell_bounds(cell) {
                    row.push(a.to_string());
                    row.push(b.to_string());
                }
                row.push(self.values[cell].to_string());
                row
            })
            .collect()
    }
}

/// A finite magnitude standing in for `±∞` scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SaturationBound<T> {
    pub m: T,
}

impl<T: Scalar> SaturationBound<T> {
    pub fn new(m: T) -> Result<Self> {
        if !m.is_finite() || !(m > T::zero()) {
            return Err(Error::Config(format!("saturation bound must be finite and > 0, got {m}")));
        }
        Ok(SaturationBound { m })
    }

    /// Checks `φ(M) ≤ 1e−6` and, for a finite lower limit, `φ(−M) ≥ limit₋ − 1e−6`.
    pub fn check(&self, loss: &MarginLoss<T>) -> Result<()> {
        let tol = T::lit(1e-6);
        let top = loss.eval(self.m);
        if top > tol {
            return Err(Error::Config(format!(
                "{}: phi(M) = {top} exceeds 1e-6 at M = {}",
                loss.name(),
                self.m
            )));
        }
        if let Some(limit) = loss.limits().0.finite() {
            let bottom = loss.eval(-self.m);
            if bottom < limit - tol {
                return Err(Error::Config(format!(
                    "{}: phi(-M) = {bottom} is more than 1e-6 below its limit {limit}",
                    loss.name()
                )));
            }
        }
        Ok(())
    }
}

/// The cell attaining an atom's inner supremum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupTerm<T> {
    pub atom: usize,
    pub cell: usize,
    pub loss: T,
    /// Gap between the maximum and the best other cell; `+∞` with a single cell.
    pub margin: T,
}

/// Per-atom maximizers of `φ(y f(x'))` over the ball; ties go to the lowest cell index.
pub fn adversarial_argmax<T: Scalar>(
    f: &GridClassifier<T>,
    loss: &MarginLoss<T>,
    inst: &ProblemInstance<T>,
) -> Result<Vec<SupTerm<T>>> {
    inst.atoms()
        .iter()
        .enumerate()
        .map(|(i, atom)| {
            let cells = f.ball_cells(&atom.x, inst.epsilon(), inst.metric())?;
            Ok(sup_over(f, loss, atom.y, i, &cells))
        })
        .collect()
}

pub(crate) fn sup_over<T: Scalar>(
    f: &GridClassifier<T>,
    loss: &MarginLoss<T>,
    y: Label,
    atom: usize,
    cells: &[usize],
) -> SupTerm<T> {
    let mut best: Option<SupTerm<T>> = None;
    let mut runner_up = T::neg_infinity();
    for &c in cells {
        let l = loss.loss(y, f.values[c]);
        match &mut best {
            Some(b) if l > b.loss => {
                runner_up = b.loss;
                *b = SupTerm { atom, cell: c, loss: l, margin: T::zero() };
            }
            Some(_) => runner_up = runner_up.max(l),
            None => best = Some(SupTerm { atom, cell: c, loss: l, margin: T::zero() }),
        }
    }
    let mut b = best.expect("a covered ball meets at least one cell");
    b.margin = b.loss - runner_up;
    b
}

/// `E[sup_{x' ∈ B_ε(x)} 1{sign f(x') ≠ y}]`, with `sign(0) = +1`.
pub fn adv_zero_one_risk<T: Scalar>(f: &GridClassifier<T>, inst: &ProblemInstance<T>) -> Result<T> {
    let mut risk = T::zero();
    for atom in inst.atoms() {
        let cells = f.ball_cells(&atom.x, inst.epsilon(), inst.metric())?;
        if cells.iter().any(|&c| Label::predict(f.values[c]) != atom.y) {
            risk += atom.mass;
        }
    }
    Ok(risk)
}

/// `E[sup_{x' ∈ B_ε(x)} φ(y f(x'))]`.
pub fn adv_surrogate_risk<T: Scalar>(
    f: &GridClassifier<T>,
    loss: &MarginLoss<T>,
    inst: &ProblemInstance<T>,
) -> Result<T> {
    let terms = adversarial_argmax(f, loss, inst)?;
    Ok(terms
        .iter()
        .zip(inst.atoms())
        .fold(T::zero(), |acc, (t, a)| acc + a.mass * t.loss))
}

/// Standard (non-adversarial) risk `Σ mass · L(y, f(x))` of an atom list.
pub fn risk_under_distribution<T: Scalar, L: PointLoss<T> + ?Sized>(
    f: &GridClassifier<T>,
    atoms: &[Atom<T>],
    loss: &L,
) -> T {
    atoms
        .iter()
        .fold(T::zero(), |acc, a| acc + a.mass * loss.loss(a.y, f.value_at(&a.x)))
}

/// `risk_under_distribution` with the 0/1 loss.
pub fn zero_one_risk<T: Scalar>(f: &GridClassifier<T>, atoms: &[Atom<T>]) -> T {
    risk_under_distribution(f, atoms, &ReferenceLoss::ZeroOne)
}

/// Largest power of two not above `target`.
fn dyadic_floor<T: Scalar>(target: T) -> T {
    let two = T::one() + T::one();
    two.powf(target.log2().floor())
}

/// Cell width for an auto-sized grid on `inst`: a power of two no larger than
/// ε/10, and small enough that no cell reaches two opposite-label balls that
/// do not conflict.
pub fn auto_width<T: Scalar>(inst: &ProblemInstance<T>) -> T {
    let eps = inst.epsilon();
    let mut target = if eps > T::zero() { eps / T::lit(CELLS_PER_EPSILON) } else { T::infinity() };
    let spread = T::from_count(inst.dim()).sqrt() * (T::one() + T::one());
    let atoms = inst.atoms();
    for i in 0..atoms.len() {
        for j in (i + 1)..atoms.len() {
            if atoms[i].y == atoms[j].y {
                continue;
            }
            let gap = inst.distance(i, j) - eps - eps;
            if gap > T::zero() {
                target = target.min(gap / spread);
            }
        }
    }
    if target.is_infinite() {
        T::one()
    } else {
        dyadic_floor(target)
    }
}

/// Grid box with cell width `w` containing every ε-ball of `inst` with one
/// cell of margin; boundaries are integer multiples of `w`.
pub fn auto_axes<T: Scalar>(inst: &ProblemInstance<T>, width: Option<T>) -> Result<Vec<Axis<T>>> {
    if inst.dim() > 2 {
        return Err(Error::Domain(format!("grids support 1 or 2 dimensions, got {}", inst.dim())));
    }
    let w = match width {
        Some(w) if !(w > T::zero()) || !w.is_finite() => {
            return Err(Error::Config(format!("grid width must be finite and > 0, got {w}")))
        }
        Some(w) => w,
        None => auto_width(inst),
    };
    let eps = inst.epsilon();
    let mut axes = Vec::with_capacity(inst.dim());
    for k in 0..inst.dim() {
        let (min, max) = inst
            .atoms()
            .iter()
            .map(|a| a.x[k])
            .fold((T::infinity(), T::neg_infinity()), |(lo, hi), x| (lo.min(x), hi.max(x)));
        let lo = ((min - eps) / w).floor() * w - w;
        let hi = ((max + eps) / w).ceil() * w + w;
        let cells = ((hi - lo) / w).round().to_usize().unwrap_or(usize::MAX);
        axes.push(Axis { lo, hi, cells });
    }
    let total = axes.iter().try_fold(1usize, |acc, a| acc.checked_mul(a.cells));
    match total {
        Some(t) if t <= MAX_CELLS => Ok(axes),
        _ => Err(Error::Resource(format!(
            "grid of width {w} would exceed {MAX_CELLS} cells"
        ))),
    }
}

/// The classifier from a vertex cover: `+M` on the balls of uncovered
/// positive atoms, `−M` everywhere else, including outside the grid box.
pub fn cover_classifier<T: Scalar>(
    inst: &ProblemInstance<T>,
    cover: &[usize],
    bound: SaturationBound<T>,
) -> Result<GridClassifier<T>> {
    if let Some(&bad) = cover.iter().find(|&&i| i >= inst.len()) {
        return Err(Error::Precondition(format!("cover: atom index {bad} out of range")));
    }
    let graph = build_conflict_graph(inst);
    if !graph.is_vertex_cover(cover) {
        return Err(Error::Precondition(format!(
            "cover: {cover:?} misses a conflict edge, so it is not a vertex cover"
        )));
    }
    let m = bound.m;
    let mut g = GridClassifier::constant(auto_axes(inst, None)?, -m, -m)?;
    let uncovered = |i: &usize| !cover.contains(i);
    for i in (0..inst.len()).filter(uncovered) {
        let atom = &inst.atoms()[i];
        if atom.y == Label::Pos {
            for c in g.ball_cells(&atom.x, inst.epsilon(), inst.metric())? {
                g.values[c] = m;
            }
        }
    }
    for i in (0..inst.len()).filter(uncovered) {
        let atom = &inst.atoms()[i];
        if atom.y == Label::Neg {
            let cells = g.ball_cells(&atom.x, inst.epsilon(), inst.metric())?;
            if cells.iter().any(|&c| g.values[c] > T::zero()) {
                return Err(Error::Invariant(format!(
                    "atom {i}: its ball shares a cell with an uncovered positive ball"
                )));
            }
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finite_instance::{adversarial_bayes_risk, brute_force_bayes_risk, optimal_attack};
    use crate::finite_instance::{random_instance, standard_bayes_risk, AttackPlan, Move, Witness};
    use crate::losses::{LossKind, Label::{Neg, Pos}};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn line(eps: f64, atoms: &[(f64, Label, f64)]) -> ProblemInstance<f64> {
        let atoms = atoms.iter().map(|&(x, y, m)| Atom::scalar(x, y, m)).collect();
        ProblemInstance::new(Metric::Euclidean, eps, atoms).unwrap()
    }

    fn three_point() -> ProblemInstance<f64> {
        line(1.0, &[(0.0, Pos, 0.5), (-1.5, Neg, 0.25), (1.5, Neg, 0.25)])
    }

    fn realizable() -> ProblemInstance<f64> {
        line(1.0, &[(-5.0, Neg, 0.5), (5.0, Pos, 0.5)])
    }

    /// The three-point h_n written out cell by cell on the auto grid.
    fn h(n: f64) -> GridClassifier<f64> {
        let axes = auto_axes(&three_point(), None).unwrap();
        let mut g = GridClassifier::constant(axes, -1.0, -1.0).unwrap();
        for c in 0..g.cell_count() {
            let x = g.cell_center(c)[0];
            let v = if (-1.0..=-0.5).contains(&x) {
                1.0 / n
            } else if (0.5..=1.0).contains(&x) {
                -1.0 / n
            } else if x.abs() < 0.5 {
                1.0
            } else {
                -1.0
            };
            g.set_value(c, v);
        }
        g
    }

    #[test]
    fn auto_grid_for_three_points() {
        let axes = auto_axes(&three_point(), None).unwrap();
        assert_eq!(axes[0].width(), 1.0 / 16.0);
        assert_eq!(axes[0].lo, -2.5625);
        assert_eq!(axes[0].hi, 2.5625);
        assert_eq!(axes[0].cells, 82);
    }

    #[test]
    fn axis_location_is_half_open() {
        let a = Axis { lo: -1.0, hi: 1.0, cells: 4 };
        assert_eq!(a.locate(-1.0), Some(0));
        assert_eq!(a.locate(-0.5), Some(1));
        assert_eq!(a.locate(0.999), Some(3));
        assert_eq!(a.locate(1.0), None);
        assert_eq!(a.locate(-1.01), None);
    }

    #[test]
    fn ball_cells_ignore_touching_cells() {
        let g = GridClassifier::constant(vec![Axis { lo: -4.0, hi: 4.0, cells: 8 }], 0.0, 0.0).unwrap();
        // ball (−1.5, 0.5) around −0.5: cells [−2,−1], [−1,0], [0,1]
        assert_eq!(g.ball_cells(&[-0.5], 1.0, Metric::Euclidean).unwrap(), vec![2, 3, 4]);
        // ball (−1, 1) around 0 meets exactly the two cells it spans
        assert_eq!(g.ball_cells(&[0.0], 1.0, Metric::Euclidean).unwrap(), vec![3, 4]);
        assert!(g.ball_cells(&[3.5], 1.0, Metric::Euclidean).is_err());
        assert_eq!(g.ball_cells(&[0.0], 0.0, Metric::Euclidean).unwrap(), vec![4]);
    }

    #[test]
    fn euclidean_and_chebyshev_balls_differ_at_corners() {
        let axis = Axis { lo: -2.0, hi: 2.0, cells: 4 };
        let g = GridClassifier::constant(vec![axis, axis], 0.0, 0.0).unwrap();
        let l2 = g.ball_cells(&[0.5, 0.5], 0.6, Metric::Euclidean).unwrap();
        let linf = g.ball_cells(&[0.5, 0.5], 0.6, Metric::Chebyshev).unwrap();
        assert_eq!(linf.len(), 9);
        assert_eq!(l2.len(), 5);
        assert!(!l2.contains(&g.locate(&[-0.5, -0.5]).unwrap()));
    }

    #[test]
    fn pathological_classifier_risks() {
        let inst = three_point();
        let phi = MarginLoss::of_kind(LossKind::Logistic);
        for n in [1.0, 10.0, 1e4] {
            assert_eq!(adv_zero_one_risk(&h(n), &inst).unwrap(), 0.75);
            let s = adv_surrogate_risk(&h(n), &phi, &inst).unwrap();
            let oracle = 0.75 * phi.eval(-1.0 / n) + 0.25 * phi.eval(1.0 / n);
            assert!((s - oracle).abs() < 1e-15, "{s} vs {oracle}");
        }
        let s = adv_surrogate_risk(&h(1e4), &phi, &inst).unwrap();
        assert!((s - 2f64.ln()).abs() < 1e-4);
    }

    #[test]
    fn constant_classifiers() {
        let inst = three_point();
        let axes = auto_axes(&inst, None).unwrap();
        let plus = GridClassifier::constant(axes.clone(), 1.0, 1.0).unwrap();
        assert_eq!(adv_zero_one_risk(&plus, &inst).unwrap(), 0.5);
        let zero = GridClassifier::constant(axes, 0.0, 0.0).unwrap();
        let phi = MarginLoss::of_kind(LossKind::Logistic);
        assert!((adv_surrogate_risk(&zero, &phi, &inst).unwrap() - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn sign_matched_classifier_on_the_realizable_pair() {
        let inst = realizable();
        let mut g = GridClassifier::constant(auto_axes(&inst, None).unwrap(), -20.0, -20.0).unwrap();
        for c in 0..g.cell_count() {
            if g.cell_center(c)[0] > 0.0 {
                g.set_value(c, 20.0);
            }
        }
        assert_eq!(adv_zero_one_risk(&g, &inst).unwrap(), 0.0);
        let phi = MarginLoss::of_kind(LossKind::Logistic);
        assert!(adv_surrogate_risk(&g, &phi, &inst).unwrap() <= 1e-6);
    }

    #[test]
    fn risks_under_attacked_distributions() {
        let inst = three_point();
        let q = optimal_attack(&inst).distribution();
        assert_eq!(zero_one_risk(&h(1.0), &q), 0.5);
        let pair = line(0.5, &[(0.0, Pos, 0.5), (0.0, Neg, 0.5)]);
        let axes = auto_axes(&pair, None).unwrap();
        let plus = GridClassifier::constant(axes.clone(), 1.0, 1.0).unwrap();
        assert_eq!(zero_one_risk(&plus, pair.atoms()), 0.5);
        let zero = GridClassifier::constant(axes, 0.0, 0.0).unwrap();
        assert_eq!(risk_under_distribution(&zero, pair.atoms(), &ReferenceLoss::ZeroOneLeq), 1.0);
    }

    #[test]
    fn cover_classifiers_on_three_points() {
        let inst = three_point();
        let sigmoid = MarginLoss::of_kind(LossKind::Sigmoid);
        let m = SaturationBound::new(20.0).unwrap();
        m.check(&sigmoid).unwrap();
        for cover in [vec![0], vec![1, 2]] {
            let g = cover_classifier(&inst, &cover, m).unwrap();
            assert_eq!(adv_zero_one_risk(&g, &inst).unwrap(), 0.5);
            let s = adv_surrogate_risk(&g, &sigmoid, &inst).unwrap();
            assert!(s <= 0.5 + 1e-6 && s >= 0.5 - 1e-9, "{s}");
        }
        assert!(matches!(cover_classifier(&inst, &[1], m), Err(Error::Precondition(_))));
    }

    #[test]
    fn cover_classifier_on_the_realizable_pair() {
        let inst = realizable();
        let g = cover_classifier(&inst, &[], SaturationBound::new(20.0).unwrap()).unwrap();
        assert_eq!(adv_zero_one_risk(&g, &inst).unwrap(), 0.0);
        for kind in [LossKind::Sigmoid, LossKind::Logistic] {
            let s = adv_surrogate_risk(&g, &MarginLoss::of_kind(kind), &inst).unwrap();
            assert!(s <= 1e-6, "{kind}: {s}");
        }
    }

    #[test]
    fn saturation_bound_checks() {
        let m = SaturationBound::new(20.0).unwrap();
        m.check(&MarginLoss::<f64>::of_kind(LossKind::Logistic)).unwrap();
        m.check(&MarginLoss::<f64>::of_kind(LossKind::Hinge)).unwrap();
        assert!(m.check(&MarginLoss::<f64>::of_kind(LossKind::Square)).is_err());
        assert!(SaturationBound::new(2.0).unwrap().check(&MarginLoss::<f64>::of_kind(LossKind::Sigmoid)).is_err());
        assert!(SaturationBound::<f64>::new(0.0).is_err());
    }

    #[test]
    fn best_cover_classifier_meets_the_bayes_risk() {
        let sigmoid = MarginLoss::of_kind(LossKind::Sigmoid);
        let m = SaturationBound::new(20.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for k in 0..20 {
            let metric = if k % 2 == 0 { Metric::Euclidean } else { Metric::Chebyshev };
            let inst = random_instance::<f64, _>(&mut rng, 5, 1 + k % 2, metric, 0.3);
            let bayes = adversarial_bayes_risk(&inst).value;
            let Witness::VertexCover { all_optimal: Some(covers), .. } =
                brute_force_bayes_risk(&inst).unwrap().witness
            else {
                panic!()
            };
            let best = covers
                .iter()
                .map(|c| {
                    let g = cover_classifier(&inst, c, m).unwrap();
                    assert!(adv_zero_one_risk(&g, &inst).unwrap() <= bayes + 1e-12);
                    adv_surrogate_risk(&g, &sigmoid, &inst).unwrap()
                })
                .fold(f64::INFINITY, f64::min);
            assert!(best <= bayes + 1e-5 && best >= bayes - 1e-9, "{best} vs {bayes}");
        }
    }

    #[test]
    fn zero_radius_matches_standard_risk() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let inst = random_instance::<f64, _>(&mut rng, 6, 2, Metric::Euclidean, 0.0);
            let mut g = GridClassifier::constant(auto_axes(&inst, Some(0.125)).unwrap(), 0.0, 0.0).unwrap();
            for c in 0..g.cell_count() {
                g.set_value(c, rng.gen_range(-1.0..1.0));
            }
            // atoms moved to the centers of their cells
            let atoms: Vec<Atom<f64>> = inst
                .atoms()
                .iter()
                .map(|a| Atom::new(g.cell_center(g.locate(&a.x).unwrap()), a.y, a.mass))
                .collect();
            let centered = ProblemInstance::new(Metric::Euclidean, 0.0, atoms).unwrap();
            assert_eq!(adv_zero_one_risk(&g, &centered).unwrap(), zero_one_risk(&g, centered.atoms()));
            let phi = MarginLoss::of_kind(LossKind::Logistic);
            let s = adv_surrogate_risk(&g, &phi, &centered).unwrap();
            assert!((s - risk_under_distribution(&g, centered.atoms(), &phi)).abs() < 1e-15);
        }
    }

    #[test]
    fn json_and_csv_shapes() {
        let g = GridClassifier::new(vec![Axis { lo: 0.0, hi: 1.0, cells: 2 }], vec![0.5, -0.5], -1.0).unwrap();
        let text = g.to_json();
        assert_eq!(GridClassifier::<f64>::from_json(&text).unwrap(), g);
        assert!(GridClassifier::<f64>::from_json(r#"{"axes":[{"lo":0,"hi":1,"cells":2}],"values":[1],"outside":0}"#).is_err());
        assert_eq!(g.csv_header(), vec!["cell", "x0_lo", "x0_hi", "value"]);
        assert_eq!(g.csv_rows()[1], vec!["1", "0.5", "1", "-0.5"]);
    }

    fn random_grid(rng: &mut ChaCha8Rng, inst: &ProblemInstance<f64>) -> GridClassifier<f64> {
        let axes = auto_axes(inst, Some(0.25)).unwrap();
        let mut g = GridClassifier::constant(axes, 0.0, 0.0).unwrap();
        for c in 0..g.cell_count() {
            g.set_value(c, rng.gen_range(-1.0..1.0));
        }
        g
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn sup_dominates_any_feasible_attack(seed in any::<u64>(), dim in 1usize..=2) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let inst = random_instance::<f64, _>(&mut rng, 5, dim, Metric::Chebyshev, 0.5);
            let g = random_grid(&mut rng, &inst);
            // each atom moved to a random point of its ball
            let moves = inst.atoms().iter().enumerate().map(|(i, a)| Move {
                source: i,
                dest: a.x.iter().map(|c| c + rng.gen_range(-0.5..=0.5)).collect(),
                label: a.y,
                mass: a.mass,
            }).collect();
            let plan = AttackPlan { metric: inst.metric(), epsilon: inst.epsilon(), moves };
            plan.check_membership(&inst).unwrap();
            let adv = adv_zero_one_risk(&g, &inst).unwrap();
            prop_assert!(adv >= zero_one_risk(&g, &plan.distribution()) - 1e-12);
            prop_assert!(adv >= standard_bayes_risk(inst.atoms()) - 1e-12);
        }

        #[test]
        fn refinement_preserves_adversarial_risk(seed in any::<u64>(), dim in 1usize..=2, l2 in any::<bool>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let metric = if l2 { Metric::Euclidean } else { Metric::Chebyshev };
            let inst = random_instance::<f64, _>(&mut rng, 5, dim, metric, 0.4);
            let g = random_grid(&mut rng, &inst);
            let fine = g.refine();
            prop_assert_eq!(adv_zero_one_risk(&g, &inst).unwrap(), adv_zero_one_risk(&fine, &inst).unwrap());
            let phi = MarginLoss::of_kind(LossKind::Logistic);
            let a = adv_surrogate_risk(&g, &phi, &inst).unwrap();
            let b = adv_surrogate_risk(&fine, &phi, &inst).unwrap();
            prop_assert!((a - b).abs() < 1e-15);
        }

        #[test]
        fn adversarial_risk_bounds_the_bayes_risk(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let inst = random_instance::<f64, _>(&mut rng, 6, 1, Metric::Euclidean, 0.3);
            let g = random_grid(&mut rng, &inst);
            prop_assert!(adv_zero_one_risk(&g, &inst).unwrap() >= adversarial_bayes_risk(&inst).value - 1e-12);
        }
    }
}
