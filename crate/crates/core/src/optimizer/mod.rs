//! Lagrangian decisions under RDO, DEDO and DERDO.

mod cost;
mod decide;
pub mod experiment;
pub mod lambda;

pub use cost::{evaluate_candidate, CandidateCoding, CostBreakdown, Objective, ObjectiveKind};
pub use decide::{decide_block, select_best};
pub use experiment::{default_lambda_grid, fitted_log2_lambda_slope, qp_search_experiment, ExperimentOptions, QpHistogram, QpWindow};
pub use lambda::{lambda_e_from_qp, lambda_r_from_qp};
