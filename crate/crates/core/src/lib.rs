//! Adversarial calibration lab: margin-loss audits, exact adversarial Bayes
//! risks on finite distributions, and adversarial training of grid classifiers.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix `f64`. The max-flow solver additionally runs on exact
//! rationals.

pub mod calibration;
pub mod error;
pub mod extended;
pub mod finite_instance;
pub mod flow;
pub mod grid_world;
pub mod losses;
pub mod scalar;
pub mod scenarios;
pub mod training;

pub use error::{Error, Result};
pub use losses::{Label, LossKind, PointLoss, ReferenceLoss};
pub use scalar::Scalar;

pub type ExtendedReal = extended::ExtendedReal<f64>;
pub type MarginLoss = losses::MarginLoss<f64>;
pub type SearchConfig = losses::SearchConfig<f64>;
pub type CalibrationReport = calibration::CalibrationReport<f64>;
pub type Atom = finite_instance::Atom<f64>;
pub type ProblemInstance = finite_instance::ProblemInstance<f64>;
pub type ConflictGraph = finite_instance::ConflictGraph<f64>;
pub type AttackPlan = finite_instance::AttackPlan<f64>;
pub type RiskReport = finite_instance::RiskReport<f64>;
pub type DualityReport = finite_instance::DualityReport<f64>;
pub type GridClassifier = grid_world::GridClassifier<f64>;
pub type SaturationBound = grid_world::SaturationBound<f64>;
pub type TrainConfig = training::TrainConfig<f64>;
pub type TrajectoryRecord = training::TrajectoryRecord<f64>;
pub type TrainOutcome = training::TrainOutcome<f64>;
