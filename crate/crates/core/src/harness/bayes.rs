use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::experiment::{check_common, run_plan, ExperimentReport, MethodName, Plan};
use super::{run_indexed, sample_uniform_stream};
use crate::basis::BasisSpec;
use crate::error::{CvError, Result};
use crate::estimators::Selector;
use crate::integrands::{load_sonar, CaptureData, CaptureLogLik, Integrand, LogDensity, Shifted, SonarLogLik};

/// Pilot draws used to pick the log-likelihood shift.
pub const DEFAULT_PILOT: usize = 1000;
const DEFAULT_N_GOLD: usize = 10_000_000;
const GOLD_CHUNK: usize = 1 << 16;
// replicate r uses stream r; these stay clear of any realistic replicate count
const PILOT_STREAM: u64 = u64::MAX;
const GOLD_STREAM_BASE: u64 = 1 << 62;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dataset {
    Capture,
    Sonar,
}

impl std::str::FromStr for Dataset {
    type Err = CvError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "capture" => Ok(Dataset::Capture),
            "sonar" => Ok(Dataset::Sonar),
            other => Err(CvError::invalid("dataset", format!("unknown dataset {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BayesConfig {
    pub dataset: Dataset,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_path: Option<PathBuf>,
    pub n: usize,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub n_sub: Option<usize>,
    #[serde(default = "default_n_gold")]
    pub n_gold: usize,
    /// Largest univariate degree.
    pub k: usize,
    /// Largest number of coordinates a control may depend on.
    pub order: usize,
    /// Total-degree thresholds, one basis per entry; empty means no
    /// threshold beyond `k` and `order`.
    #[serde(default)]
    pub degs: Vec<usize>,
    pub replicates: usize,
    pub master_seed: u64,
    pub methods: Vec<MethodName>,
    #[serde(default, deserialize_with = "Selector::deserialize_lenient")]
    pub selector: Selector,
    /// Directory for the gold-standard cache and report files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

fn default_n_gold() -> usize {
    DEFAULT_N_GOLD
}

impl BayesConfig {
    /// Capture study at `m = 1062`: order-2 interactions with `k = 10` and
    /// total degree at most 6.
    pub fn capture_default() -> Self {
        Self {
            dataset: Dataset::Capture,
            data_path: None,
            n: 5000,
            n_sub: None,
            n_gold: DEFAULT_N_GOLD,
            k: 10,
            order: 2,
            degs: vec![6],
            replicates: 50,
            master_seed: 1,
            methods: vec![MethodName::Mc, MethodName::Ols, MethodName::Lasso, MethodName::Lslassox],
            selector: Selector::dichotomic(),
            output: None,
        }
    }

    /// Sonar study at `m = 305`: one-coordinate controls of degree up to 5.
    pub fn sonar_default(path: impl Into<PathBuf>) -> Self {
        Self {
            dataset: Dataset::Sonar,
            data_path: Some(path.into()),
            k: 5,
            order: 1,
            degs: vec![5],
            ..Self::capture_default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dataset == Dataset::Sonar && self.data_path.is_none() {
            return Err(CvError::Config("the sonar dataset needs data_path".into()));
        }
        if self.n_gold == 0 {
            return Err(CvError::Config("n_gold must be at least 1".into()));
        }
        if self.k == 0 {
            return Err(CvError::Config("k must be at least 1".into()));
        }
        check_common(self.n, self.n_sub, self.replicates, &self.methods)
    }
}

/// Controls that vary in at most `order` coordinates, each of degree
/// `1..=k`.
pub fn build_interaction_basis(d: usize, k: usize, order: usize) -> Result<BasisSpec> {
    BasisSpec::interaction(d, k, order, None)
}

fn unit_log(density: &dyn LogDensity, u: &[f64], scratch: &mut Vec<f64>) -> Result<f64> {
    let dom = density.domain();
    scratch.clear();
    scratch.extend(u.iter().map(|&v| dom.from_unit(v)));
    density.log_eval(scratch)
}

/// Largest log-density over `pilot` uniform draws.
pub fn log_shift(density: &dyn LogDensity, pilot: usize, seed: u64) -> Result<f64> {
    let pts = sample_uniform_stream(density.dim(), pilot.max(1), seed, PILOT_STREAM);
    let mut scratch = Vec::new();
    let mut best = f64::NEG_INFINITY;
    for row in pts.rows() {
        let v = unit_log(density, row.as_slice().expect("standard layout"), &mut scratch)?;
        best = best.max(v);
    }
    if !best.is_finite() {
        return Err(CvError::NonFinite("pilot log-likelihood maximum"));
    }
    Ok(best)
}

/// Plain Monte Carlo estimate of `E[exp(log_density - shift)]` under the
/// uniform law on the unit cube.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldStandard {
    pub dataset: String,
    pub seed: u64,
    pub n_gold: usize,
    pub shift: f64,
    pub mean: f64,
    /// Standard error of `mean`.
    pub se: f64,
    /// `shift + log(mean)`.
    pub log_evidence: f64,
}

pub fn gold_standard(density: &dyn LogDensity, shift: f64, n_gold: usize, seed: u64) -> Result<GoldStandard> {
    let chunks = n_gold.div_ceil(GOLD_CHUNK);
    let d = density.dim();
    let parts = run_indexed(chunks, |c| {
        let len = GOLD_CHUNK.min(n_gold - c * GOLD_CHUNK);
        let pts = sample_uniform_stream(d, len, seed, GOLD_STREAM_BASE + c as u64);
        let mut scratch = Vec::new();
        let (mut s, mut s2) = (0.0, 0.0);
        for row in pts.rows() {
            let v = (unit_log(density, row.as_slice().expect("standard layout"), &mut scratch)? - shift).exp();
            s += v;
            s2 += v * v;
        }
        Ok((s, s2))
    })?;
    let (s, s2) = parts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let nf = n_gold as f64;
    let mean = s / nf;
    let var = if n_gold > 1 { ((s2 - nf * mean * mean) / (nf - 1.0)).max(0.0) } else { 0.0 };
    if !(mean > 0.0) {
        return Err(CvError::NonFinite("gold-standard mean (no mass found)"));
    }
    Ok(GoldStandard {
        dataset: density.name(),
        seed,
        n_gold,
        shift,
        mean,
        se: (var / nf).sqrt(),
        log_evidence: shift + mean.ln(),
    })
}

fn cached_gold(
    dir: Option<&Path>,
    density: &dyn LogDensity,
    shift: f64,
    n_gold: usize,
    seed: u64,
) -> Result<GoldStandard> {
    let path = dir.map(|d| d.join("gold.json"));
    if let Some(p) = path.as_ref().filter(|p| p.exists()) {
        let text = fs::read_to_string(p).map_err(|e| CvError::io(p, e))?;
        if let Ok(g) = serde_json::from_str::<GoldStandard>(&text) {
            if g.dataset == density.name() && g.seed == seed && g.n_gold == n_gold && g.shift == shift {
                return Ok(g);
            }
        }
    }
    let g = gold_standard(density, shift, n_gold, seed)?;
    if let Some(p) = path {
        let dir = p.parent().expect("joined path has a parent");
        fs::create_dir_all(dir).map_err(|e| CvError::io(dir, e))?;
        fs::write(&p, serde_json::to_string_pretty(&g)?).map_err(|e| CvError::io(&p, e))?;
    }
    Ok(g)
}

/// Evidence ratios `Z_hat / Z_gold` per replicate, scored against 1.
pub fn run_bayes(cfg: &BayesConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let density: Box<dyn LogDensity> = match cfg.dataset {
        Dataset::Capture => Box::new(CaptureLogLik(CaptureData::dipper())),
        Dataset::Sonar => Box::new(SonarLogLik(load_sonar(cfg.data_path.as_ref().expect("validated"))?)),
    };
    let d = density.dim();
    let order = cfg.order.min(d);
    let specs: Vec<BasisSpec> = if cfg.degs.is_empty() {
        vec![build_interaction_basis(d, cfg.k, order)?]
    } else {
        cfg.degs
            .iter()
            .map(|&deg| BasisSpec::interaction(d, cfg.k, order, Some(deg)))
            .collect::<Result<_>>()?
    };
    let shift = log_shift(density.as_ref(), DEFAULT_PILOT, cfg.master_seed)?;
    let gold = cached_gold(cfg.output.as_deref(), density.as_ref(), shift, cfg.n_gold, cfg.master_seed)?;
    let integrand = Shifted {
        inner: density.as_ref(),
        shift,
    };
    debug_assert_eq!(integrand.dim(), d);
    let plan = Plan {
        integrand: &integrand,
        specs: &specs,
        n: cfg.n,
        n_sub: cfg.n_sub,
        replicates: cfg.replicates,
        seed: cfg.master_seed,
        methods: &cfg.methods,
        selector: &cfg.selector,
        truth: 1.0,
        scale: gold.mean,
    };
    let rows = run_plan(&plan)?;
    Ok(ExperimentReport {
        config: serde_json::to_value(cfg)?,
        truth: 1.0,
        truth_se: Some(gold.se / gold.mean),
        log_evidence: Some(gold.log_evidence),
        rows,
    })
}
