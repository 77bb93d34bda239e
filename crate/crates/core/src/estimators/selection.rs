//! Choosing the LASSO penalty on a subsample.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize};

use super::lasso::{LassoConfig, LassoProblem};
use super::{Flag, SampleBatch};
use crate::error::{CvError, Result};

pub const DEFAULT_C1: f64 = 3.0;
pub const DEFAULT_C2: f64 = 12.0;
pub const DEFAULT_MAX_STEPS: usize = 60;
pub const DEFAULT_FOLDS: usize = 5;
pub const DEFAULT_GRID_POINTS: usize = 50;
pub const DEFAULT_GRID_RATIO: f64 = 1e-4;

/// How the penalty of the subsample LASSO fit is picked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Selector {
    /// Aim for a support size in `[c1 sqrt(n), c2 sqrt(n)]`.
    Dichotomic {
        #[serde(default = "default_c1")]
        c1: f64,
        #[serde(default = "default_c2")]
        c2: f64,
        #[serde(default = "default_max_steps")]
        max_steps: usize,
    },
    /// K-fold cross-validation over a log grid below `lambda_max`.
    Kfold {
        #[serde(default = "default_folds")]
        k: usize,
        #[serde(default = "default_grid_points")]
        grid_points: usize,
    },
    /// A fixed penalty on the standardized scale.
    Fixed { lambda: f64 },
}

fn default_c1() -> f64 {
    DEFAULT_C1
}
fn default_c2() -> f64 {
    DEFAULT_C2
}
fn default_max_steps() -> usize {
    DEFAULT_MAX_STEPS
}
fn default_folds() -> usize {
    DEFAULT_FOLDS
}
fn default_grid_points() -> usize {
    DEFAULT_GRID_POINTS
}

impl Selector {
    pub fn dichotomic() -> Self {
        Selector::Dichotomic {
            c1: DEFAULT_C1,
            c2: DEFAULT_C2,
            max_steps: DEFAULT_MAX_STEPS,
        }
    }

    pub fn kfold() -> Self {
        Selector::Kfold {
            k: DEFAULT_FOLDS,
            grid_points: DEFAULT_GRID_POINTS,
        }
    }

    /// Accepts either a bare name (`"dichotomic"`, `"kfold"`) or the tagged
    /// object form.
    pub fn deserialize_lenient<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Name(String),
            Full(Selector),
        }
        match Repr::deserialize(d)? {
            Repr::Name(s) => s.parse().map_err(serde::de::Error::custom),
            Repr::Full(s) => Ok(s),
        }
    }
}

impl Default for Selector {
    fn default() -> Self {
        Self::dichotomic()
    }
}

impl FromStr for Selector {
    type Err = CvError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dichotomic" => Ok(Self::dichotomic()),
            "kfold" | "cv" => Ok(Self::kfold()),
            other => Err(CvError::invalid(
                "selector",
                format!("unknown selector {other:?}, expected dichotomic or kfold"),
            )),
        }
    }
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Selector::Dichotomic { .. } => write!(f, "dichotomic"),
            Selector::Kfold { .. } => write!(f, "kfold"),
            Selector::Fixed { lambda } => write!(f, "fixed({lambda})"),
        }
    }
}

/// Outcome of a penalty search on the subsample.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    /// Coefficients on the original control scale.
    pub beta: Vec<f64>,
    /// Penalty on the standardized scale.
    pub lambda: f64,
    pub support_size: usize,
    /// LASSO fits performed (penalty evaluations).
    pub steps: usize,
    /// Coordinate-descent sweeps over all fits.
    pub sweeps: usize,
    pub flags: Vec<Flag>,
}

/// `points` log-spaced values from `lambda_max` down to `ratio * lambda_max`.
pub fn log_grid(lambda_max: f64, points: usize, ratio: f64) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lambda_max],
        _ => {
            let lr = ratio.ln();
            (0..points)
                .map(|i| lambda_max * (lr * i as f64 / (points - 1) as f64).exp())
                .collect()
        }
    }
}

/// Run `selector` on the first `n_sub` rows; support targets use the full
/// sample size `batch.n()`.
pub fn select(batch: &SampleBatch, n_sub: usize, selector: &Selector, cfg: &LassoConfig) -> Result<Selection> {
    let prob = LassoProblem::from_batch(batch, n_sub)?;
    match *selector {
        Selector::Dichotomic { c1, c2, max_steps } => dichotomic_on(&prob, batch.n(), c1, c2, max_steps, cfg),
        Selector::Kfold { k, grid_points } => {
            let grid = log_grid(prob.lambda_max(), grid_points, DEFAULT_GRID_RATIO);
            kfold_on(batch, n_sub, &prob, &grid, k, cfg)
        }
        Selector::Fixed { lambda } => {
            let (b, stats) = prob.solve(lambda, cfg, None)?;
            Ok(finish(&prob, b, lambda, 1, stats.sweeps, stats.converged, Vec::new()))
        }
    }
}

/// Target support sizes `(floor(c1 sqrt(n)), floor(c2 sqrt(n)))`, both ends
/// included.
pub fn support_target(n: usize, c1: f64, c2: f64) -> (usize, usize) {
    let root = (n as f64).sqrt();
    ((c1 * root).floor() as usize, (c2 * root).floor() as usize)
}

/// Dichotomic search for a support size in [`support_target`].
pub fn dichotomic_search(
    batch: &SampleBatch,
    n_sub: usize,
    c1: f64,
    c2: f64,
    max_steps: usize,
) -> Result<Selection> {
    let prob = LassoProblem::from_batch(batch, n_sub)?;
    dichotomic_on(&prob, batch.n(), c1, c2, max_steps, &LassoConfig::default())
}

/// K-fold cross-validation over `grid` on the first `n_sub` rows.
pub fn kfold_cv(batch: &SampleBatch, n_sub: usize, grid: &[f64], k: usize) -> Result<Selection> {
    let prob = LassoProblem::from_batch(batch, n_sub)?;
    kfold_on(batch, n_sub, &prob, grid, k, &LassoConfig::default())
}

fn support_size(b: &[f64]) -> usize {
    b.iter().filter(|&&v| v != 0.0).count()
}

fn finish(
    prob: &LassoProblem,
    b: Vec<f64>,
    lambda: f64,
    steps: usize,
    sweeps: usize,
    converged: bool,
    mut flags: Vec<Flag>,
) -> Selection {
    if !converged && !flags.contains(&Flag::NotConverged) {
        flags.push(Flag::NotConverged);
    }
    Selection {
        support_size: support_size(&b),
        beta: prob.to_original(&b),
        lambda,
        steps,
        sweeps,
        flags,
    }
}

fn dichotomic_on(
    prob: &LassoProblem,
    n_full: usize,
    c1: f64,
    c2: f64,
    max_steps: usize,
    cfg: &LassoConfig,
) -> Result<Selection> {
    if !(c1 > 0.0 && c1 < c2) {
        return Err(CvError::invalid("c1, c2", format!("need 0 < c1 < c2, got {c1}, {c2}")));
    }
    if max_steps == 0 {
        return Err(CvError::invalid("max_steps", "must be positive"));
    }
    let (lo, hi) = support_target(n_full, c1, c2);
    let in_range = |l: usize| l >= lo && l <= hi;
    let distance = |l: usize| lo.saturating_sub(l) + l.saturating_sub(hi);
    let usable = prob.usable_cols();
    let unreachable = usable < lo;

    let lmax = prob.lambda_max();
    let mut flags = Vec::new();
    if unreachable {
        flags.push(Flag::TargetUnreachable);
    }
    if lmax == 0.0 {
        // nothing correlates with f: every penalty gives the empty support
        let b = vec![0.0; prob.cols()];
        return Ok(finish(prob, b, 0.0, 0, 0, true, flags));
    }

    let mut steps = 0;
    let mut sweeps = 0;
    let mut converged = true;
    let mut lambda = lmax;
    let mut warm = vec![0.0; prob.cols()];
    let mut best: Option<(Vec<f64>, f64, usize)> = None;
    // largest penalty known to give too few, smallest known to give too many
    let mut too_few = lmax;
    let mut too_many: Option<f64> = None;

    while steps < max_steps {
        lambda = match too_many {
            None => lambda / 2.0,
            Some(tm) => (too_few * tm).sqrt(),
        };
        let (b, stats) = prob.solve(lambda, cfg, Some(&warm))?;
        steps += 1;
        sweeps += stats.sweeps;
        converged &= stats.converged;
        let l = support_size(&b);
        let better = best.as_ref().is_none_or(|(_, _, bl)| distance(l) < distance(*bl));
        if better {
            best = Some((b.clone(), lambda, l));
        }
        if in_range(l) {
            return Ok(finish(prob, b, lambda, steps, sweeps, converged, flags));
        }
        if unreachable && l >= usable {
            return Ok(finish(prob, b, lambda, steps, sweeps, converged, flags));
        }
        if l < lo {
            too_few = lambda;
        } else {
            too_many = Some(lambda);
        }
        warm = b;
    }
    if !unreachable {
        flags.push(Flag::MaxStepsReached);
    }
    let (b, lambda, _) = best.expect("at least one step was taken");
    Ok(finish(prob, b, lambda, steps, sweeps, converged, flags))
}

fn kfold_on(
    batch: &SampleBatch,
    n_sub: usize,
    full: &LassoProblem,
    grid: &[f64],
    k: usize,
    cfg: &LassoConfig,
) -> Result<Selection> {
    if grid.is_empty() {
        return Err(CvError::invalid("grid", "must not be empty"));
    }
    if let Some(bad) = grid.iter().find(|l| !(**l >= 0.0) || !l.is_finite()) {
        return Err(CvError::invalid("grid", format!("penalties must be finite and >= 0, got {bad}")));
    }
    if k < 2 {
        return Err(CvError::invalid("K", format!("need at least 2 folds, got {k}")));
    }
    if n_sub < k {
        return Err(CvError::invalid("N", format!("N = {n_sub} is smaller than K = {k}")));
    }
    // descending order so each fit warm-starts from a sparser one
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| grid[b].total_cmp(&grid[a]));

    let h = batch.design();
    let f = batch.f_vals();
    let mut cv = vec![0.0; grid.len()];
    let mut steps = 0;
    let mut sweeps = 0;
    let mut converged = true;
    for fold in 0..k {
        let start = fold * n_sub / k;
        let end = (fold + 1) * n_sub / k;
        let train: Vec<usize> = (0..n_sub).filter(|&i| i < start || i >= end).collect();
        let test = start..end;
        let prob = LassoProblem::from_rows(h, f, &train)?;
        let mut warm = vec![0.0; prob.cols()];
        for &g in &order {
            let (b, stats) = prob.solve(grid[g], cfg, Some(&warm))?;
            steps += 1;
            sweeps += stats.sweeps;
            converged &= stats.converged;
            let beta = prob.to_original(&b);
            let a = prob.intercept(&beta);
            let nz: Vec<(usize, f64)> = beta.iter().copied().enumerate().filter(|(_, v)| *v != 0.0).collect();
            let err: f64 = test
                .clone()
                .map(|i| {
                    let pred = a + nz.iter().map(|&(j, v)| v * h[[i, j]]).sum::<f64>();
                    (f[i] - pred).powi(2)
                })
                .sum::<f64>()
                / test.len() as f64;
            cv[g] += err / k as f64;
            warm = b;
        }
    }
    // first minimizer in descending order prefers the sparser fit on ties
    let best = order
        .iter()
        .copied()
        .fold(None::<usize>, |acc, g| match acc {
            Some(a) if cv[a] <= cv[g] => Some(a),
            _ => Some(g),
        })
        .expect("grid is nonempty");
    let lambda = grid[best];

    let mut warm = vec![0.0; full.cols()];
    for &g in &order {
        if grid[g] < lambda {
            break;
        }
        let (b, stats) = full.solve(grid[g], cfg, Some(&warm))?;
        steps += 1;
        sweeps += stats.sweeps;
        converged &= stats.converged;
        warm = b;
    }
    Ok(finish(full, warm, lambda, steps, sweeps, converged, Vec::new()))
}
