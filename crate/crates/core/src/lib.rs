//! Sparse precision-matrix estimation for mixed continuous, binary, ordinal and
//! count data under a Gaussian copula.
//!
//! Two estimators are provided:
//!
//! * [`copulaem`]: Monte Carlo EM on the extended rank likelihood, with a
//!   graphical lasso M-step ([`glasso`]) and truncated-normal Gibbs E-step
//!   ([`tmvn`]);
//! * [`copulatau`]: one-step graphical lasso on a correlation matrix assembled
//!   from pairwise Kendall's tau, either the sample statistic or the tau implied
//!   by a fitted bivariate copula.
//!
//! [`simulate`] holds the structure-recovery benchmark harness.

// `!(a < b)` is used on purpose so that NaN inputs fail validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod copulaem;
pub mod copulatau;
pub mod dataio;
pub mod error;
pub mod export;
pub mod glasso;
pub mod linalg;
pub mod normal;
pub mod simulate;
pub mod tmvn;

pub use dataio::{BoundsMode, ColumnSpec, IntervalBounds, MixedDataset, Schema, VariableKind};
pub use error::{Error, Result};
pub use glasso::{CorrelationMatrix, MatrixRole, PrecisionEstimate, SolverSettings};
pub use tmvn::McSettings;
