//! Nonlinear model-based bandits for choosing profitable fertilizer rates.
//!
//! A grower picks one nitrogen rate per season from a small grid, sees one
//! noisy yield, and wants to maximize `p_y · yield − p_x · rate`. This crate
//! supplies parametric yield-response curves, least-squares estimation with
//! delta-method uncertainty, five selection policies, a simulated field, and
//! a replicated experiment harness.
//!
//! ```
//! use nlbandit::{ArmGrid, EconomicParams, ModelKind, ResponseModel};
//!
//! let truth = ResponseModel::new(ModelKind::QuadraticPlateau, vec![80.0, 1.2, -0.003, 180.0])?;
//! let econ = EconomicParams::new(5.0, 0.7)?;
//! let grid = ArmGrid::uniform(250.0, 50.0)?;
//! assert_eq!(grid.arms()[truth.best_grid_arm(&econ, &grid)], 150.0);
//! # Ok::<(), nlbandit::Error>(())
//! ```

pub mod environment;
pub mod error;
pub mod estimation;
pub mod harness;
pub mod history;
mod lm;
pub mod model;
pub mod policy;

pub use environment::{Environment, NoiseModel, StepOutcome};
pub use error::{Error, Result};
pub use estimation::{
    estimate_curvature, fit_curvature_matched, fit_guarded, fit_nls, CurvatureTargets, FitResult, FitStatus,
};
pub use harness::{aggregate, run_experiment, run_replicate, AggregateSummary, ExperimentConfig, RunRecord, Scenario};
pub use history::{History, Observation};
pub use model::{ArmGrid, EconomicParams, ModelKind, ParamVector, ResponseModel};
pub use policy::{select, ArmScore, Decision, PolicyConfig, PolicyKind, PolicyState};

// Compile and run the guide's and the README's code blocks as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/response-models.md")]
    mod response_models {}
    #[doc = include_str!("../../../book/src/estimation.md")]
    mod estimation {}
    #[doc = include_str!("../../../book/src/policies.md")]
    mod policies {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/advisor.md")]
    mod advisor {}
    #[doc = include_str!("../../../README.md")]
    mod readme {}
}
