//! Cormack-Jolly-Seber likelihood for capture-recapture counts.

use serde::{Deserialize, Serialize};

use super::{check_cube, check_dim, Hypercube, LogDensity};
use crate::error::{CvError, Result};

/// Release counts and first-recapture counts.
///
/// `recaptures[i][t]` is the number of animals released in occasion `i`
/// (0-based) and first recaptured in occasion `i + 1 + t`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptureData {
    pub released: Vec<u32>,
    pub recaptures: Vec<Vec<u32>>,
}

impl CaptureData {
    /// European dipper data, releases 1981-1986, recaptures 1982-1987.
    pub fn dipper() -> Self {
        Self {
            released: vec![22, 60, 78, 80, 88, 98],
            recaptures: vec![
                vec![11, 2, 0, 0, 0, 0],
                vec![24, 1, 0, 0, 0],
                vec![34, 2, 0, 0],
                vec![45, 1, 2],
                vec![51, 0],
                vec![52],
            ],
        }
    }

    pub fn new(released: Vec<u32>, recaptures: Vec<Vec<u32>>) -> Result<Self> {
        let data = Self {
            released,
            recaptures,
        };
        data.validate()?;
        Ok(data)
    }

    pub fn validate(&self) -> Result<()> {
        let i = self.released.len();
        if i == 0 || self.recaptures.len() != i {
            return Err(CvError::invalid("recaptures", "one row per release occasion is required"));
        }
        for (row, (r, xs)) in self.released.iter().zip(&self.recaptures).enumerate() {
            if xs.len() != i - row {
                return Err(CvError::invalid(
                    "recaptures",
                    format!("row {row} must have {} entries, has {}", i - row, xs.len()),
                ));
            }
            if xs.iter().map(|&x| u64::from(x)).sum::<u64>() > u64::from(*r) {
                return Err(CvError::invalid("recaptures", format!("row {row} exceeds its release count")));
            }
        }
        Ok(())
    }

    /// Number of release occasions.
    pub fn occasions(&self) -> usize {
        self.released.len()
    }

    /// Parameter dimension: survivals `phi_1..phi_I` then recaptures `p_2..p_{I+1}`.
    pub fn dim(&self) -> usize {
        2 * self.occasions()
    }

    /// Animals never seen again after release.
    pub fn never_recaptured(&self) -> Vec<u32> {
        self.released
            .iter()
            .zip(&self.recaptures)
            .map(|(r, xs)| r - xs.iter().sum::<u32>())
            .collect()
    }
}

/// First-recapture probabilities `nu[i][t]` for release `i`, recapture
/// occasion `i + 1 + t`.
pub fn capture_nu(data: &CaptureData, theta: &[f64]) -> Result<Vec<Vec<f64>>> {
    check_dim(data.dim(), theta, "capture parameter")?;
    check_cube(Hypercube::UNIT, theta)?;
    let occ = data.occasions();
    let (phi, p) = theta.split_at(occ);
    // p[t] is the recapture probability of occasion t + 2 (1-based)
    Ok((0..occ)
        .map(|i| {
            let mut carry = phi[i];
            (i + 1..=occ)
                .map(|j| {
                    // j is the 0-based occasion of recapture; p index j - 1
                    let nu = carry * p[j - 1];
                    if j < occ {
                        carry *= phi[j] * (1.0 - p[j - 1]);
                    }
                    nu
                })
                .collect()
        })
        .collect())
}

pub fn capture_log_likelihood(data: &CaptureData, theta: &[f64]) -> Result<f64> {
    let nu = capture_nu(data, theta)?;
    let never = data.never_recaptured();
    let mut ll = 0.0;
    for ((row, xs), &r) in nu.iter().zip(&data.recaptures).zip(&never) {
        for (&v, &x) in row.iter().zip(xs) {
            if x > 0 {
                ll += f64::from(x) * v.ln();
            }
        }
        if r > 0 {
            let chi = (1.0 - row.iter().sum::<f64>()).max(0.0);
            ll += f64::from(r) * chi.ln();
        }
    }
    Ok(ll)
}

pub fn capture_likelihood(data: &CaptureData, theta: &[f64]) -> Result<f64> {
    capture_log_likelihood(data, theta).map(f64::exp)
}

/// Capture log-likelihood as a [`LogDensity`] on `[0, 1]^{2I}`.
#[derive(Debug, Clone)]
pub struct CaptureLogLik(pub CaptureData);

impl LogDensity for CaptureLogLik {
    fn name(&self) -> String {
        "capture".into()
    }

    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn domain(&self) -> Hypercube {
        Hypercube::UNIT
    }

    fn log_eval(&self, x: &[f64]) -> Result<f64> {
        capture_log_likelihood(&self.0, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dipper_never_recaptured() {
        let d = CaptureData::dipper();
        d.validate().unwrap();
        assert_eq!(d.never_recaptured(), vec![9, 35, 42, 32, 37, 46]);
        assert_eq!(d.dim(), 12);
    }

    #[test]
    fn degenerate_corner_has_zero_likelihood() {
        let d = CaptureData::dipper();
        let theta = [1.0; 12];
        let nu = capture_nu(&d, &theta).unwrap();
        for row in &nu {
            assert_eq!(row[0], 1.0);
            assert!(row[1..].iter().all(|&v| v == 0.0));
        }
        assert_eq!(capture_likelihood(&d, &theta).unwrap(), 0.0);
    }

    #[test]
    fn nu_hand_value() {
        let d = CaptureData::dipper();
        let nu = capture_nu(&d, &[0.5; 12]).unwrap();
        // nu_{1,3} = phi_1 p_3 phi_2 (1 - p_2)
        assert_abs_diff_eq!(nu[0][1], 0.0625, epsilon = 1e-15);
    }

    #[test]
    fn nu_matches_direct_product() {
        let d = CaptureData::dipper();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let theta: Vec<f64> = (0..12).map(|_| rng.gen::<f64>()).collect();
            let phi = |i: usize| theta[i - 1];
            let p = |j: usize| theta[6 + j - 2];
            let nu = capture_nu(&d, &theta).unwrap();
            for i in 1..=6 {
                for j in i + 1..=7 {
                    let mut v = phi(i) * p(j);
                    for k in i + 1..j {
                        v *= phi(k) * (1.0 - p(k));
                    }
                    assert_abs_diff_eq!(nu[i - 1][j - i - 1], v, epsilon = 1e-15);
                }
            }
            let ll = capture_log_likelihood(&d, &theta).unwrap();
            let mut direct = 0.0;
            for (i, row) in nu.iter().enumerate() {
                let chi = 1.0 - row.iter().sum::<f64>();
                direct += f64::from(d.never_recaptured()[i]) * chi.ln();
                for (t, v) in row.iter().enumerate() {
                    let x = d.recaptures[i][t];
                    if x > 0 {
                        direct += f64::from(x) * v.ln();
                    }
                }
            }
            assert_abs_diff_eq!(ll, direct, epsilon = 1e-9);
        }
    }

    #[test]
    fn rejects_outside_cube() {
        let d = CaptureData::dipper();
        assert!(capture_likelihood(&d, &[1.1; 12]).is_err());
        assert!(capture_likelihood(&d, &[0.5; 11]).is_err());
        assert!(CaptureData::new(vec![1, 2], vec![vec![2, 0], vec![1]]).is_err());
    }

    #[test]
    fn json_export() {
        let js = serde_json::to_string(&CaptureData::dipper()).unwrap();
        assert!(js.starts_with(r#"{"released":[22,60,78,80,88,98]"#));
        let back: CaptureData = serde_json::from_str(&js).unwrap();
        assert_eq!(back, CaptureData::dipper());
    }
}
