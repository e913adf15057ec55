//! Reconstruction of linear threshold functions from their Chow
//! parameters.
//!
//! - [`func`]: LTFs, linear bounded functions (LBFs) and truth tables.
//! - [`chow`]: exact and Monte Carlo Chow vectors, Chow distance, `dist`.
//! - [`reconstruct`]: the iterative LBF reconstruction.
//! - [`exact`] and [`lp`]: LP-based exact recovery for small `n`.
//! - [`structural`]: regularity, critical index, anti-concentration.
//! - [`learners`]: 1-RFA and noisy-example learners.
//! - [`pipeline`]: instance generation, low-weight approximation, reports.

pub mod chow;
pub mod exact;
pub mod func;
pub mod learners;
pub mod lp;
pub mod pipeline;
pub mod reconstruct;
pub mod rng;
pub mod structural;

pub use chow::{
    chow_distance, chow_estimate, chow_exact, dist_estimate, dist_l1, ChowVector, EstimatorConfig,
};
pub use func::{lbf_to_ltf, project_p1, tabulate, FunctionSource, Lbf, Ltf, TruthTable};
pub use reconstruct::{
    chow_reconstruct, ChowMode, ReconstructParams, ReconstructTrace, Reconstruction,
};
