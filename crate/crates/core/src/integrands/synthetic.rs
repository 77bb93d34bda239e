use std::f64::consts::{FRAC_2_PI, LN_2, PI};

use serde::{Deserialize, Serialize};

use super::{check_cube, check_dim, Hypercube, Integrand};
use crate::error::{CvError, Result};

/// `1 + sin(pi (2/d sum x_i - 1))`; integrates to 1 on the unit cube.
pub fn phi(x: &[f64]) -> f64 {
    let d = x.len() as f64;
    let s: f64 = x.iter().sum();
    1.0 + (PI * (2.0 / d * s - 1.0)).sin()
}

/// Product of log-normal densities over the first `j` coordinates.
pub fn log_normal_product(j: usize, x: &[f64]) -> Result<f64> {
    let c = FRAC_2_PI.sqrt();
    let mut v = 1.0;
    for &xi in &x[..j] {
        if xi <= 0.0 {
            return Err(CvError::Domain(format!(
                "log-normal factor is singular at {xi}"
            )));
        }
        let l = xi.ln();
        v *= c / xi * (-0.5 * l * l).exp();
    }
    Ok(v)
}

/// `log(2)^j 2^{sum_{i<=j} (1 - x_i)}`.
pub fn exp_product(j: usize, x: &[f64]) -> f64 {
    let s: f64 = x[..j].iter().map(|xi| 1.0 - xi).sum();
    LN_2.powi(j as i32) * s.exp2()
}

/// The synthetic test integrands, all integrating to 1 on `[0, 1]^d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Synthetic {
    Phi { d: usize },
    #[serde(alias = "f")]
    LogNormal { d: usize, j: usize },
    #[serde(alias = "g")]
    Exponential { d: usize, j: usize },
}

impl Synthetic {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Synthetic::Phi { d } if d == 0 => Err(CvError::invalid("d", "must be at least 1")),
            Synthetic::LogNormal { d, j } | Synthetic::Exponential { d, j } if j == 0 || j > d => {
                Err(CvError::invalid("j", format!("must lie in 1..={d}, got {j}")))
            }
            _ => Ok(()),
        }
    }
}

impl Integrand for Synthetic {
    fn name(&self) -> String {
        match self {
            Synthetic::Phi { d } => format!("phi(d={d})"),
            Synthetic::LogNormal { d, j } => format!("f{j}(d={d})"),
            Synthetic::Exponential { d, j } => format!("g{j}(d={d})"),
        }
    }

    fn dim(&self) -> usize {
        match *self {
            Synthetic::Phi { d } | Synthetic::LogNormal { d, .. } | Synthetic::Exponential { d, .. } => d,
        }
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x, "integrand argument")?;
        check_cube(Hypercube::UNIT, x)?;
        match *self {
            Synthetic::Phi { .. } => Ok(phi(x)),
            Synthetic::LogNormal { j, .. } => log_normal_product(j, x),
            Synthetic::Exponential { j, .. } => Ok(exp_product(j, x)),
        }
    }

    fn true_value(&self) -> Option<f64> {
        Some(1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn phi_values() {
        assert_abs_diff_eq!(phi(&[0.5]), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(phi(&[1.0, 1.0]), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn log_normal_values() {
        assert_abs_diff_eq!(log_normal_product(1, &[1.0]).unwrap(), 0.7978845608028654, epsilon = 1e-15);
        assert_abs_diff_eq!(log_normal_product(2, &[1.0, 1.0, 0.3]).unwrap(), 2.0 / PI, epsilon = 1e-15);
        assert!(log_normal_product(1, &[0.0]).is_err());
        let f = Synthetic::LogNormal { d: 3, j: 2 };
        assert!(f.eval(&[0.5, 0.0, 0.2]).is_err());
        assert!(f.eval(&[0.5, 0.2, 0.0]).is_ok());
    }

    #[test]
    fn exp_values() {
        assert_abs_diff_eq!(exp_product(1, &[1.0]), 0.6931471805599453, epsilon = 1e-15);
        assert_abs_diff_eq!(exp_product(1, &[0.0]), 1.3862943611198906, epsilon = 1e-15);
    }

    #[test]
    fn products_factorize() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let x: Vec<f64> = (0..6).map(|_| rng.gen_range(0.01..1.0)).collect();
            for j in 1..=6 {
                let g: f64 = (0..j).map(|i| exp_product(1, &x[i..])).product();
                assert_relative_eq!(exp_product(j, &x), g, max_relative = 1e-12);
                let f: f64 = (0..j).map(|i| log_normal_product(1, &x[i..]).unwrap()).product();
                assert_relative_eq!(log_normal_product(j, &x).unwrap(), f, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn validation() {
        assert!(Synthetic::Exponential { d: 3, j: 4 }.validate().is_err());
        assert!(Synthetic::LogNormal { d: 3, j: 0 }.validate().is_err());
        assert!(Synthetic::Phi { d: 0 }.validate().is_err());
        assert!(Synthetic::Phi { d: 3 }.eval(&[0.1, 0.2]).is_err());
        let s: Synthetic = serde_json::from_str(r#"{"kind":"g","d":5,"j":3}"#).unwrap();
        assert_eq!(s, Synthetic::Exponential { d: 5, j: 3 });
    }
}
