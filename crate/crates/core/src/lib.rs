//! Sparse-group LASSO estimation for high-dimensional, mixed-frequency
//! time-series regressions.
//!
//! The crate is organised bottom-up:
//!
//! * [`timeseries`]: aligned low/high-frequency series, panels and group bookkeeping.
//! * [`dictionary`]: shifted Jacobi/Legendre dictionaries and MIDAS weight matrices.
//! * [`design`]: ARDL-MIDAS design matrices, lead/delay alignment and simple aggregation.
//! * [`solver`]: the sparse-group LASSO block coordinate descent solver.
//! * [`tuning`]: blocked K-fold cross-validation over `(lambda, alpha)`.
//! * [`simulation`]: Monte Carlo data generating processes and the estimator comparison harness.
//! * [`evaluation`]: rolling-window nowcasting, baselines, Diebold-Mariano tests and CUMSFE.

pub mod design;
pub mod dictionary;
pub mod error;
pub mod evaluation;
pub mod simulation;
pub mod solver;
pub mod timeseries;
pub mod tuning;

pub use error::{Error, Result};

pub use nalgebra::{DMatrix, DVector};
