//! Positivity-preserving simulation of the stochastic SIS epidemic model.
//!
//! The infected count `I(t) ∈ (0, N)` is integrated through the logit
//! transform `y = log(I/(N − I))`, which turns the multiplicative noise into
//! additive noise `σN dB`. Three integrators are provided:
//!
//! * classical Euler–Maruyama on `I` (may leave `(0, N)`),
//! * logarithmic Euler–Maruyama on `y`,
//! * logarithmic truncated Euler–Maruyama, which caps `y` at `log(KΔ^{-1/2})`.
//!
//! The [`harness`] module measures strong convergence against a fine reference
//! driven by the same Brownian path, and estimates extinction rates.
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`); the `*64` aliases
//! below fix the scalar to `f64`.

pub mod cli;
pub mod error;
pub mod harness;
pub mod model;
pub mod paths;
pub mod scalar;
pub mod schemes;
pub mod transform;

pub use error::{Error, Result};
pub use model::{derive, moment_constant_kp, DerivedQuantities, MomentConstant, Preset, Regime, SisParams};
pub use paths::{BrownianGrid, IncrementStream, NormalStream};
pub use scalar::Real;
pub use schemes::{
    run_trajectory, run_with_increments, step_classical_em, step_log_em, step_log_tem, Recording,
    SchemeConfig, SchemeKind, StepSize, TrajectoryRecord,
};
pub use transform::{drift_f, forward, inverse, YState};

pub type SisParams64 = SisParams<f64>;
pub type SisParams32 = SisParams<f32>;
pub type DerivedQuantities64 = DerivedQuantities<f64>;
pub type YState64 = YState<f64>;
pub type BrownianGrid64 = BrownianGrid<f64>;
pub type SchemeConfig64 = SchemeConfig<f64>;
pub type TrajectoryRecord64 = TrajectoryRecord<f64>;
pub type ConvergenceConfig64 = harness::ConvergenceConfig<f64>;
pub type ConvergenceReport64 = harness::ConvergenceReport<f64>;
pub type ExtinctionConfig64 = harness::ExtinctionConfig<f64>;
pub type ExtinctionReport64 = harness::ExtinctionReport<f64>;
