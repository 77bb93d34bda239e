//! Logistic-regression log-likelihood on the sonar (mines vs rocks) data.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use ndarray::{Array2, ArrayView1};

use super::{check_cube, check_dim, Hypercube, LogDensity};
use crate::error::{CvError, Result};

pub const SONAR_ROWS: usize = 208;
const SONAR_FEATURES: usize = 60;

/// Design with a leading intercept column and labels in `{-1, +1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SonarData {
    pub x: Array2<f64>,
    pub y: Vec<f64>,
}

impl SonarData {
    pub fn new(x: Array2<f64>, y: Vec<f64>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(CvError::DimensionMismatch {
                expected: x.nrows(),
                got: y.len(),
                context: "labels vs design rows",
            });
        }
        Ok(Self { x, y })
    }

    pub fn rows(&self) -> usize {
        self.x.nrows()
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    /// Parse comma-separated rows of 60 features followed by `R` or `M`.
    /// `expected_rows` enforces the row count when given.
    pub fn from_reader(
        reader: impl Read,
        source: &Path,
        expected_rows: Option<usize>,
    ) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let parse_err = |line: usize, reason: String| CvError::Parse {
            path: source.to_path_buf(),
            line,
            reason,
        };
        let mut values = Vec::new();
        let mut y = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let line = row + 1;
            let rec = rec.map_err(|e| parse_err(line, e.to_string()))?;
            if rec.len() != SONAR_FEATURES + 1 {
                return Err(parse_err(
                    line,
                    format!("expected {} fields, found {}", SONAR_FEATURES + 1, rec.len()),
                ));
            }
            values.push(1.0);
            for (c, field) in rec.iter().take(SONAR_FEATURES).enumerate() {
                let v: f64 = field
                    .parse()
                    .map_err(|_| parse_err(line, format!("field {} is not a number: {field:?}", c + 1)))?;
                values.push(v);
            }
            y.push(match &rec[SONAR_FEATURES] {
                "M" => 1.0,
                "R" => -1.0,
                other => return Err(parse_err(line, format!("unknown label {other:?}"))),
            });
        }
        if let Some(want) = expected_rows {
            if y.len() != want {
                return Err(parse_err(
                    y.len(),
                    format!("expected {want} rows, found {}", y.len()),
                ));
            }
        }
        let x = Array2::from_shape_vec((y.len(), SONAR_FEATURES + 1), values)
            .expect("row-major buffer matches shape");
        Ok(Self { x, y })
    }
}

/// Load the 208-row sonar CSV.
pub fn load_sonar(path: impl AsRef<Path>) -> Result<SonarData> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| CvError::io(path, e))?;
    SonarData::from_reader(file, path, Some(SONAR_ROWS))
}

/// `log(1 + exp(z))` without overflow.
fn log1p_exp(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// `-sum_i log(1 + exp(-y_i <x_i, theta>))`.
pub fn sonar_loglik(data: &SonarData, theta: &[f64]) -> Result<f64> {
    check_dim(data.dim(), theta, "sonar coefficient")?;
    let theta = ArrayView1::from(theta);
    Ok(-data
        .x
        .rows()
        .into_iter()
        .zip(&data.y)
        .map(|(row, &y)| log1p_exp(-y * row.dot(&theta)))
        .sum::<f64>())
}

/// Sonar log-likelihood as a [`LogDensity`] on `[-1, 1]^61`.
#[derive(Debug, Clone)]
pub struct SonarLogLik(pub SonarData);

impl LogDensity for SonarLogLik {
    fn name(&self) -> String {
        "sonar".into()
    }

    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn domain(&self) -> Hypercube {
        Hypercube { lo: -1.0, hi: 1.0 }
    }

    fn log_eval(&self, x: &[f64]) -> Result<f64> {
        check_cube(self.domain(), x)?;
        sonar_loglik(&self.0, x)
    }
}
