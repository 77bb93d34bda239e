//! Integrands on hypercubes: synthetic test functions with known integral
//! and log-likelihoods used for Bayesian evidence estimation.

mod capture;
mod sonar;
mod synthetic;

pub use capture::{capture_likelihood, capture_log_likelihood, capture_nu, CaptureData, CaptureLogLik};
pub use sonar::{load_sonar, sonar_loglik, SonarData, SonarLogLik, SONAR_ROWS};
pub use synthetic::{exp_product, log_normal_product, phi, Synthetic};

use crate::error::{CvError, Result};

/// Axis-aligned cube `[lo, hi]^d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hypercube {
    pub lo: f64,
    pub hi: f64,
}

impl Hypercube {
    pub const UNIT: Hypercube = Hypercube { lo: 0.0, hi: 1.0 };

    pub fn from_unit(&self, u: f64) -> f64 {
        self.lo + (self.hi - self.lo) * u
    }
}

/// A point-evaluable function on a hypercube.
pub trait Integrand: Send + Sync {
    fn name(&self) -> String;

    fn dim(&self) -> usize;

    fn domain(&self) -> Hypercube {
        Hypercube::UNIT
    }

    fn eval(&self, x: &[f64]) -> Result<f64>;

    /// Analytic value of the integral against the uniform law, when known.
    fn true_value(&self) -> Option<f64> {
        None
    }

    /// Evaluate at the image of a unit-cube point under the affine map onto
    /// the domain. `scratch` is reused between calls.
    fn eval_unit(&self, u: &[f64], scratch: &mut Vec<f64>) -> Result<f64> {
        let dom = self.domain();
        if dom == Hypercube::UNIT {
            return self.eval(u);
        }
        scratch.clear();
        scratch.extend(u.iter().map(|&v| dom.from_unit(v)));
        self.eval(scratch)
    }
}

/// A log-density on a hypercube, integrated after exponentiation.
pub trait LogDensity: Send + Sync {
    fn name(&self) -> String;

    fn dim(&self) -> usize;

    fn domain(&self) -> Hypercube;

    fn log_eval(&self, x: &[f64]) -> Result<f64>;
}

/// `exp(log_density - shift)`, the integrand used for evidence estimation.
///
/// With `shift` near the largest log-density the values stay representable;
/// the evidence is then `exp(shift)` times the integral of this function.
pub struct Shifted<'a, L: ?Sized> {
    pub inner: &'a L,
    pub shift: f64,
}

impl<L: LogDensity + ?Sized> Integrand for Shifted<'_, L> {
    fn name(&self) -> String {
        format!("exp({} - {})", self.inner.name(), self.shift)
    }

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn domain(&self) -> Hypercube {
        self.inner.domain()
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        Ok((self.inner.log_eval(x)? - self.shift).exp())
    }
}

pub(crate) fn check_dim(expected: usize, x: &[f64], context: &'static str) -> Result<()> {
    if x.len() == expected {
        Ok(())
    } else {
        Err(CvError::DimensionMismatch {
            expected,
            got: x.len(),
            context,
        })
    }
}

pub(crate) fn check_cube(dom: Hypercube, x: &[f64]) -> Result<()> {
    match x.iter().find(|v| !(dom.lo..=dom.hi).contains(*v)) {
        None => Ok(()),
        Some(v) => Err(CvError::Domain(format!(
            "coordinate {v} is outside [{}, {}]",
            dom.lo, dom.hi
        ))),
    }
}
