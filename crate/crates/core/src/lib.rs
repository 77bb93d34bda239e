//! Monte Carlo integration with large families of control variates.
//!
//! The estimators regress integrand values on tensor-product Legendre (or
//! one-dimensional Fourier) controls and subtract the fitted part, whose
//! integral is known to be zero. OLS uses every control; the LASSO and
//! LSLASSO variants select a sparse subset first.

pub mod basis;
pub mod bounds;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod integrands;
mod linalg;
pub mod qmc;

pub use basis::{BasisSpec, Family, MultiIndex};
pub use error::{CvError, Result};
pub use estimators::{EstimateResult, Flag, Method, SampleBatch, Selector};
pub use harness::{ExperimentConfig, ExperimentReport, MethodName};
pub use integrands::{Integrand, LogDensity, Synthetic};
