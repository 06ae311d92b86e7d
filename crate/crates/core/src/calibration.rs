//! Standard and adversarial calibration verdicts for margin losses.
//!
//! A loss is adversarially calibrated only if it is calibrated in the
//! standard sense and `0` is not a minimizer of `S(α) = ½φ(α) + ½φ(−α)` over
//! the extended reals. Together with monotonicity (decreasing, strictly near
//! 0) the same two conditions are sufficient. Convex losses and losses that
//! are an odd function plus a constant always fail the second condition.

use serde::{Deserialize, Serialize};

use crate::extended::ExtendedReal;
use crate::losses::{
    optimal_conditional_risk, symmetrized, LossFlags, LossSpec, MarginLoss, SearchConfig,
};
use crate::scalar::Scalar;

/// Central-difference step for `φ'(0)`.
pub const DERIVATIVE_STEP: f64 = 1e-5;
/// `φ'(0)` must be below this to count as negative.
pub const DERIVATIVE_THRESHOLD: f64 = -1e-7;
/// Number of points of the `η` grid used by the argmin-sign test.
pub const ETA_GRID_POINTS: usize = 101;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StandardMethod {
    /// Convex losses: calibrated iff `φ'(0) < 0`.
    DerivativeAtZero,
    /// Other losses: every near-minimizer of the conditional risk predicts the majority label.
    ArgminSign,
}

/// An `η` at which some near-minimizer has the wrong sign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SignViolation<T> {
    pub eta: T,
    pub minimizer: ExtendedReal<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct StandardEvidence<T> {
    pub calibrated: bool,
    pub method: StandardMethod,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub derivative_at_zero: Option<T>,
    /// Number of `η` values checked by the sign test.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub etas_checked: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub violations: Vec<SignViolation<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SymmetrizedEvidence<T> {
    pub zero_in_argmin: bool,
    /// `S(0) = φ(0)`.
    pub s_at_zero: T,
    pub min_s: T,
    pub argmin_at: ExtendedReal<T>,
    /// `S(0) − min S`.
    pub gap: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ZeroOneLikeEvidence<T> {
    pub zero_one_like: bool,
    pub declared_limits: (ExtendedReal<T>, ExtendedReal<T>),
    /// `(φ(−50), φ(50))`.
    pub measured_limits: (T, T),
    pub shifted_odd_identity: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdversarialVerdict {
    Calibrated,
    NotCalibrated,
    /// The necessary condition holds but the monotonicity hypotheses of the
    /// sufficient condition are missing.
    Inconclusive,
}

/// The result that settled the adversarial verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictRule {
    /// No convex margin loss is adversarially calibrated.
    ConvexCorollary,
    /// Odd-plus-constant losses have a constant `S`, so 0 is a minimizer.
    OddCorollary,
    /// Necessary condition: standard calibration fails.
    NecessaryNotStandard,
    /// Necessary condition: 0 minimizes the symmetrized loss.
    NecessaryZeroInArgmin,
    /// Shifted odd losses (`τ > 0`) are adversarially calibrated.
    ShiftedOdd,
    /// Sufficient condition: calibrated, decreasing, strictly near 0, 0 not a minimizer of `S`.
    Sufficient,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct AdversarialCheck<T> {
    pub calibrated: bool,
    pub verdict: AdversarialVerdict,
    pub rule: VerdictRule,
    /// Which clause of the sufficient condition failed, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failed_clause: Option<String>,
    pub standard: StandardEvidence<T>,
    pub symmetrized: SymmetrizedEvidence<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CalibrationReport<T> {
    pub loss_name: String,
    pub loss: LossSpec<T>,
    pub flags: LossFlags,
    pub standard_calibrated: bool,
    pub standard_evidence: StandardEvidence<T>,
    pub zero_in_argmin_symmetrized: bool,
    pub symmetrized_evidence: SymmetrizedEvidence<T>,
    pub adversarially_calibrated: bool,
    pub adversarial_verdict: AdversarialVerdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failed_clause: Option<String>,
    pub zero_one_like: bool,
    pub zero_one_like_evidence: ZeroOneLikeEvidence<T>,
    pub verdict_rule: VerdictRule,
}

pub fn check_standard_calibration<T: Scalar>(
    loss: &MarginLoss<T>,
    search: &SearchConfig<T>,
) -> StandardEvidence<T> {
    if loss.flags().is_convex {
        let h = T::lit(DERIVATIVE_STEP);
        let d = (loss.eval(h) - loss.eval(-h)) / (h + h);
        return StandardEvidence {
            calibrated: d < T::lit(DERIVATIVE_THRESHOLD),
            method: StandardMethod::DerivativeAtZero,
            derivative_at_zero: Some(d),
            etas_checked: None,
            violations: Vec::new(),
        };
    }

    let mut violations = Vec::new();
    let mut checked = 0;
    for i in 0..ETA_GRID_POINTS {
        if 2 * i == ETA_GRID_POINTS - 1 {
            // η = ½: both signs are optimal
            continue;
        }
        let eta = T::from_count(i) / T::from_count(ETA_GRID_POINTS - 1);
        checked += 1;
        let opt = match optimal_conditional_risk(loss, eta, search) {
            Ok(o) => o,
            Err(_) => {
                violations.push(SignViolation { eta, minimizer: ExtendedReal::zero() });
                continue;
            }
        };
        let ok = if eta > T::lit(0.5) {
            opt.argmin.all_nonnegative()
        } else {
            opt.argmin.all_negative()
        };
        if !ok {
            let witness = if eta > T::lit(0.5) {
                if opt.argmin.neg_inf {
                    ExtendedReal::NegInf
                } else {
                    opt.argmin.finite.first().map_or(ExtendedReal::zero(), |r| ExtendedReal::Finite(r.0))
                }
            } else if opt.argmin.pos_inf {
                ExtendedReal::PosInf
            } else {
                opt.argmin.finite.last().map_or(ExtendedReal::zero(), |r| ExtendedReal::Finite(r.1))
            };
            violations.push(SignViolation { eta, minimizer: witness });
        }
    }
    StandardEvidence {
        calibrated: violations.is_empty(),
        method: StandardMethod::ArgminSign,
        derivative_at_zero: None,
        etas_checked: Some(checked),
        violations,
    }
}

/// Whether `0 ∈ argmin_{α∈ℝ̄} S(α)`, decided as `S(0) ≤ min S + tol`.
pub fn symmetrized_evidence<T: Scalar>(
    loss: &MarginLoss<T>,
    search: &SearchConfig<T>,
) -> SymmetrizedEvidence<T> {
    let s0 = symmetrized(loss, ExtendedReal::zero()).to_float();
    let opt = optimal_conditional_risk(loss, T::lit(0.5), search)
        .expect("zoo losses are finite on the search grid");
    SymmetrizedEvidence {
        zero_in_argmin: opt.argmin.zero,
        s_at_zero: s0,
        min_s: opt.value,
        argmin_at: opt.minimizer,
        gap: s0 - opt.value,
    }
}

pub fn check_adversarial_calibration<T: Scalar>(
    loss: &MarginLoss<T>,
    search: &SearchConfig<T>,
) -> AdversarialCheck<T> {
    let standard = check_standard_calibration(loss, search);
    let sym = symmetrized_evidence(loss, search);
    let flags = loss.flags();

    let failed_clause = if !standard.calibrated {
        Some("not calibrated in the standard setting".to_string())
    } else if !flags.is_decreasing {
        Some("not decreasing".to_string())
    } else if !flags.is_strictly_decreasing_near_zero {
        Some("not strictly decreasing near 0".to_string())
    } else if sym.zero_in_argmin {
        Some("0 minimizes the symmetrized loss".to_string())
    } else {
        None
    };

    let necessary = standard.calibrated && !sym.zero_in_argmin;
    let (verdict, rule) = if flags.is_convex {
        (AdversarialVerdict::NotCalibrated, VerdictRule::ConvexCorollary)
    } else if flags.is_odd_plus_constant {
        (AdversarialVerdict::NotCalibrated, VerdictRule::OddCorollary)
    } else if !standard.calibrated {
        (AdversarialVerdict::NotCalibrated, VerdictRule::NecessaryNotStandard)
    } else if sym.zero_in_argmin {
        (AdversarialVerdict::NotCalibrated, VerdictRule::NecessaryZeroInArgmin)
    } else if failed_clause.is_none() {
        let shifted = loss.odd_structure().is_some_and(|o| o.tau > T::zero());
        let rule = if shifted { VerdictRule::ShiftedOdd } else { VerdictRule::Sufficient };
        (AdversarialVerdict::Calibrated, rule)
    } else {
        debug_assert!(necessary);
        (AdversarialVerdict::Inconclusive, VerdictRule::Inconclusive)
    };

    AdversarialCheck {
        calibrated: verdict == AdversarialVerdict::Calibrated,
        verdict,
        rule,
        failed_clause,
        standard,
        symmetrized: sym,
    }
}

pub fn check_zero_one_like<T: Scalar>(loss: &MarginLoss<T>) -> ZeroOneLikeEvidence<T> {
    let declared = loss.limits();
    let measured = (loss.eval(T::lit(-50.0)), loss.eval(T::lit(50.0)));
    let identity = loss.odd_structure().is_some_and(|odd| {
        (0..=400).all(|i| {
            let u = T::lit(-20.0) + T::lit(0.1) * T::from_count(i);
            let s = loss.eval(odd.tau + u) + loss.eval(odd.tau - u);
            (s - (odd.lambda + odd.lambda)).abs() <= T::lit(1e-9)
        })
    });
    let limits_ok = declared == (ExtendedReal::Finite(T::one()), ExtendedReal::zero());
    ZeroOneLikeEvidence {
        zero_one_like: limits_ok && identity,
        declared_limits: declared,
        measured_limits: measured,
        shifted_odd_identity: identity,
    }
}

pub fn audit<T: Scalar>(loss: &MarginLoss<T>) -> CalibrationReport<T> {
    audit_with(loss, &SearchConfig::default())
}

pub fn audit_with<T: Scalar>(loss: &MarginLoss<T>, search: &SearchConfig<T>) -> CalibrationReport<T> {
    let adv = check_adversarial_calibration(loss, search);
    let zol = check_zero_one_like(loss);
    CalibrationReport {
        loss_name: loss.name().to_string(),
        loss: loss.clone().into(),
        flags: loss.flags(),
        standard_calibrated: adv.standard.calibrated,
        standard_evidence: adv.standard,
        zero_in_argmin_symmetrized: adv.symmetrized.zero_in_argmin,
        symmetrized_evidence: adv.symmetrized,
        adversarially_calibrated: adv.calibrated,
        adversarial_verdict: adv.verdict,
        failed_clause: adv.failed_clause,
        zero_one_like: zol.zero_one_like,
        zero_one_like_evidence: zol,
        verdict_rule: adv.rule,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::LossKind;

    fn s() -> SearchConfig<f64> {
        SearchConfig::default()
    }

    fn of(kind: LossKind) -> MarginLoss<f64> {
        MarginLoss::of_kind(kind)
    }

    #[test]
    fn standard_calibration_examples() {
        assert!(check_standard_calibration(&of(LossKind::Hinge), &s()).calibrated);
        assert!(check_standard_calibration(&of(LossKind::ShiftedSigmoid), &s()).calibrated);
        let sig = check_standard_calibration(&of(LossKind::Sigmoid), &s());
        assert!(sig.calibrated);
        assert_eq!(sig.method, StandardMethod::ArgminSign);
        assert_eq!(sig.etas_checked, Some(100));
        let hinge = check_standard_calibration(&of(LossKind::Hinge), &s());
        assert!((hinge.derivative_at_zero.unwrap() + 1.0).abs() < 1e-9);
    }

    #[test]
    fn adversarial_calibration_examples() {
        let logistic = check_adversarial_calibration(&of(LossKind::Logistic), &s());
        assert!(!logistic.calibrated);
        assert_eq!(logistic.rule, VerdictRule::ConvexCorollary);

        let sigmoid = check_adversarial_calibration(&of(LossKind::Sigmoid), &s());
        assert!(!sigmoid.calibrated);
        assert_eq!(sigmoid.rule, VerdictRule::OddCorollary);

        let shifted = check_adversarial_calibration(&of(LossKind::ShiftedSigmoid), &s());
        assert!(shifted.calibrated);
        assert_eq!(shifted.rule, VerdictRule::ShiftedOdd);
        assert_eq!(shifted.failed_clause, None);
    }

    #[test]
    fn zero_one_like_examples() {
        assert!(check_zero_one_like(&of(LossKind::Sigmoid)).zero_one_like);
        assert!(check_zero_one_like(&of(LossKind::ShiftedSigmoid)).zero_one_like);
        assert!(check_zero_one_like(&of(LossKind::Ramp)).zero_one_like);
        assert!(!check_zero_one_like(&of(LossKind::Hinge)).zero_one_like);
        // an extra offset keeps the odd structure but moves the limits
        let lifted = MarginLoss::<f64>::new(LossKind::Sigmoid, None, Some(1.0)).unwrap();
        let ev = check_zero_one_like(&lifted);
        assert!(ev.shifted_odd_identity && !ev.zero_one_like);
    }

    #[test]
    fn audit_examples() {
        let hinge = audit(&of(LossKind::Hinge));
        assert!(hinge.standard_calibrated && !hinge.adversarially_calibrated && !hinge.zero_one_like);

        let ramp = audit(&of(LossKind::Ramp));
        assert!(ramp.standard_calibrated && !ramp.adversarially_calibrated);
        assert_eq!(ramp.verdict_rule, VerdictRule::OddCorollary);

        let sr = audit(&MarginLoss::<f64>::shifted_ramp(0.5).unwrap());
        assert!(sr.standard_calibrated && sr.adversarially_calibrated);
    }

    #[test]
    fn shifted_ramp_verdict_against_grid_argmin_oracle() {
        // S(α) for the τ = ½ ramp, scanned directly: strictly above its ±∞ value
        // everywhere on [−10, 10], so 0 is not a minimizer
        let phi = |t: f64| 0.5 * (1.0 - (t - 0.5)).clamp(0.0, 2.0);
        let sym = |a: f64| 0.5 * phi(a) + 0.5 * phi(-a);
        let at_inf = 0.5 * (0.0 + 1.0);
        let min_finite = (0..=20_000).map(|i| sym(-10.0 + 0.001 * i as f64)).fold(f64::INFINITY, f64::min);
        assert!(min_finite >= at_inf);
        assert!(sym(0.0) > at_inf + 1e-7);
    }

    #[test]
    fn wide_ramp_shift_is_inconclusive() {
        // τ ≥ 1 flattens the ramp around 0, so the sufficient condition's
        // monotonicity hypothesis is missing while the necessary one holds
        let wide = MarginLoss::<f64>::shifted_ramp(1.5).unwrap();
        let check = check_adversarial_calibration(&wide, &s());
        assert_eq!(check.verdict, AdversarialVerdict::Inconclusive);
        assert!(!check.calibrated);
        assert!(check.standard.calibrated && !check.symmetrized.zero_in_argmin);
    }

    #[test]
    fn report_serializes_with_evidence() {
        let v = serde_json::to_value(audit(&of(LossKind::Hinge))).unwrap();
        assert_eq!(v["adversarially_calibrated"], false);
        assert_eq!(v["verdict_rule"], "convex_corollary");
        assert_eq!(v["loss"]["kind"], "hinge");
        assert!(v["standard_evidence"]["derivative_at_zero"].is_number());
        assert_eq!(v["zero_one_like_evidence"]["declared_limits"][0], "+inf");
    }

    #[test]
    fn necessity_holds_over_the_zoo() {
        for l in MarginLoss::<f64>::zoo() {
            let r = audit(&l);
            if r.adversarially_calibrated {
                assert!(r.standard_calibrated && !r.zero_in_argmin_symmetrized, "{}", l.name());
            }
            if l.flags().is_convex {
                assert!(!r.adversarially_calibrated && r.zero_in_argmin_symmetrized, "{}", l.name());
            }
        }
    }

    fn grid() -> impl Iterator<Item = f64> {
        (0..=2000).map(|i| -50.0 + 0.05 * i as f64)
    }

    #[test]
    fn convex_losses_minimize_the_symmetrized_loss_at_zero() {
        for l in MarginLoss::<f64>::zoo().into_iter().filter(|l| l.flags().is_convex) {
            let s0 = symmetrized(&l, ExtendedReal::zero()).to_float();
            for a in grid() {
                assert!(s0 <= symmetrized(&l, ExtendedReal::Finite(a)).to_float() + 1e-9);
            }
        }
    }

    #[test]
    fn odd_plus_constant_losses_have_flat_symmetrized_loss() {
        for kind in [LossKind::Sigmoid, LossKind::Ramp] {
            let l = of(kind);
            for a in grid() {
                let v = symmetrized(&l, ExtendedReal::Finite(a)).to_float();
                assert!((v - l.lambda()).abs() <= 1e-9, "{kind} at {a}");
            }
        }
    }

    #[test]
    fn shifted_losses_have_a_strict_gap_at_zero() {
        for l in [
            MarginLoss::<f64>::shifted_sigmoid(1.0).unwrap(),
            MarginLoss::<f64>::shifted_ramp(0.5).unwrap(),
            MarginLoss::<f64>::shifted_sigmoid(0.25).unwrap(),
        ] {
            let odd = l.odd_structure().unwrap();
            let ev = symmetrized_evidence(&l, &s());
            let psi_gap = l.psi(-odd.tau).unwrap() - l.psi(odd.tau).unwrap();
            assert!(psi_gap > 0.0);
            // S(0) − min S = ψ(−τ) = ½(ψ(−τ) − ψ(τ))
            assert!(ev.gap >= 0.5 * psi_gap - 1e-9, "{}", l.name());
            assert!(!ev.zero_in_argmin);
            assert_eq!(ev.min_s, odd.lambda);
            // the ramp saturates, so S reaches λ once |α| ≥ 1 + τ; stay inside that
            for a in (0..=200).map(|i| -1.0 + 0.01 * i as f64) {
                assert!(symmetrized(&l, ExtendedReal::Finite(a)).to_float() > ev.min_s);
            }
        }
    }
}
