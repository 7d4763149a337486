//! Maximal structured singular value of an LTI system over a frequency
//! range, for real diagonal uncertainty.
//!
//! The crate computes `mu_max = sup_omega mu(M(j*omega))` two ways: the
//! conventional per-frequency branch and bound that tightens `mu` at every
//! grid point independently, and a sweep that runs the branch and bound for
//! many frequencies in lockstep against one shared incumbent, pruning every
//! box whose upper bound cannot beat it. The second pays for bound
//! evaluations only where the peak might still hide, which is where the
//! efficiency gain comes from; `engine::compare` quantifies it.
//!
//! Module map:
//!
//! * [`numerics`] — dense complex eigenvalues, SVD, solves, conditioning
//! * [`plant`] — state-space models and `M(omega) = C (jwI - A)^{-1} B + D`
//! * [`uncertainty`] — boxes of real diagonal parameters and bisection
//! * [`bounds`] — `lambda_r_max`, the LB/UB pair, and a brute-force oracle
//! * [`engine`] — frequency grids, both sweep algorithms, run metrics
//! * [`cli`] — model files, sweep configuration, result artifacts

pub mod bounds;
pub mod cli;
pub mod engine;
pub mod error;
pub mod numerics;
pub mod plant;
pub mod uncertainty;

#[cfg(test)]
pub(crate) mod test_support;

pub use bounds::{lambda_r_max, lower_bound, mu_box_oracle, upper_bound, BoundOptions, BoundPair};
pub use engine::{
    compare, run_conventional, run_parallel, ExecutionMode, FrequencyGrid, SweepResult,
};
pub use error::{Error, Result};
pub use numerics::ComplexMatrix;
pub use plant::StateSpaceModel;
pub use uncertainty::UncertaintyBox;
