//! Monte Carlo experiments: strong-error studies, extinction diagnostics and
//! the closed-form bounds they are compared against.

pub mod bounds;
pub mod convergence;
pub mod extinction;
pub mod fit;
pub mod report;

pub use bounds::{delta_threshold, h_of_delta, DeltaThreshold, HForm, ThresholdKind};
pub use convergence::{path_sup_errors, strong_error_study, ConvergenceConfig, ConvergenceReport};
pub use extinction::{extinction_study, ExtinctionConfig, ExtinctionReport, DEFAULT_EXTINCTION_THRESHOLD};
pub use fit::{fit_slope, SlopeFit};
pub use report::Summary;
