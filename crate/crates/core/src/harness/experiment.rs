use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{run_indexed, sample_uniform_stream};
use crate::basis::{build_design, BasisSpec, Family};
use crate::error::{CvError, Result};
use crate::estimators::{
    eval_rows, lasso_estimate, lslasso_estimate, lslassox_subsample, mc_estimate, mean, ols_estimate,
    EstimateResult, SampleBatch, Selector,
};
use crate::integrands::{Integrand, Synthetic};
use crate::qmc::halton_points;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodName {
    Mc,
    Halton,
    Ols,
    Lasso,
    Lslasso,
    Lslassox,
}

impl MethodName {
    pub const ALL: [MethodName; 6] = [
        MethodName::Mc,
        MethodName::Halton,
        MethodName::Ols,
        MethodName::Lasso,
        MethodName::Lslasso,
        MethodName::Lslassox,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MethodName::Mc => "mc",
            MethodName::Halton => "halton",
            MethodName::Ols => "ols",
            MethodName::Lasso => "lasso",
            MethodName::Lslasso => "lslasso",
            MethodName::Lslassox => "lslassox",
        }
    }

    /// Whether the method depends on the control variates.
    pub fn uses_controls(self) -> bool {
        !matches!(self, MethodName::Mc | MethodName::Halton)
    }
}

impl fmt::Display for MethodName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MethodName {
    type Err = CvError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| CvError::invalid("method", format!("unknown method {s:?}")))
    }
}

/// Tensor bases for several total-degree thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisGrid {
    pub family: Family,
    pub k: usize,
    pub degs: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
}

impl BasisGrid {
    pub fn specs(&self, d: usize) -> Result<Vec<BasisSpec>> {
        self.degs
            .iter()
            .map(|&deg| BasisSpec::with_order(self.family, d, self.k, deg, self.order))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub integrand: Synthetic,
    pub basis: BasisGrid,
    pub n: usize,
    /// Subsample size of `lslasso`.
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub n_sub: Option<usize>,
    pub replicates: usize,
    pub master_seed: u64,
    pub methods: Vec<MethodName>,
    #[serde(default, deserialize_with = "Selector::deserialize_lenient")]
    pub selector: Selector,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.integrand.validate()?;
        if self.basis.degs.is_empty() {
            return Err(CvError::Config("basis.degs must not be empty".into()));
        }
        check_common(self.n, self.n_sub, self.replicates, &self.methods)
    }
}

pub(crate) fn check_common(n: usize, n_sub: Option<usize>, replicates: usize, methods: &[MethodName]) -> Result<()> {
    if n < 2 {
        return Err(CvError::Config(format!("n must be at least 2, got {n}")));
    }
    if replicates == 0 {
        return Err(CvError::Config("replicates must be at least 1".into()));
    }
    if methods.is_empty() {
        return Err(CvError::Config("methods must not be empty".into()));
    }
    match n_sub {
        Some(0) => return Err(CvError::Config("N must be at least 1".into())),
        Some(s) if s > n => return Err(CvError::Config(format!("N = {s} exceeds n = {n}"))),
        None if methods.contains(&MethodName::Lslasso) => {
            return Err(CvError::Config("method lslasso requires N".into()))
        }
        _ => {}
    }
    Ok(())
}

/// Replicated estimates of one method at one basis size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: MethodName,
    /// Number of controls; 0 for methods that use none.
    pub m: usize,
    pub estimates: Vec<f64>,
    pub mse: f64,
    /// `mse(mc) / mse(method)`.
    pub efficiency: f64,
    /// Mean wall time per replicate.
    pub wall_time_ms: f64,
    /// Replicates whose estimate carried at least one diagnostic flag.
    pub flagged: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: serde_json::Value,
    /// Reference value the estimates are scored against.
    pub truth: f64,
    /// Standard error of `truth` when it is itself estimated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth_se: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_evidence: Option<f64>,
    pub rows: Vec<SummaryRow>,
}

impl ExperimentReport {
    pub fn row(&self, method: MethodName, m: usize) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.method == method && r.m == m)
    }

    pub fn efficiency(&self, method: MethodName, m: usize) -> Option<f64> {
        self.row(method, m).map(|r| r.efficiency)
    }
}

/// What one replicate run needs beyond the integrand.
pub(crate) struct Plan<'a> {
    pub integrand: &'a dyn Integrand,
    pub specs: &'a [BasisSpec],
    pub n: usize,
    pub n_sub: Option<usize>,
    pub replicates: usize,
    pub seed: u64,
    pub methods: &'a [MethodName],
    pub selector: &'a Selector,
    pub truth: f64,
    /// Estimates are divided by this before scoring.
    pub scale: f64,
}

struct Cell {
    method: MethodName,
    m: usize,
    estimate: f64,
    ms: f64,
    flagged: bool,
}

fn timed(f: impl FnOnce() -> Result<EstimateResult>) -> Result<(EstimateResult, f64)> {
    let t = Instant::now();
    let r = f()?;
    Ok((r, t.elapsed().as_secs_f64() * 1e3))
}

fn replicate(plan: &Plan<'_>, r: usize) -> Result<Vec<Cell>> {
    let d = plan.integrand.dim();
    let pts = sample_uniform_stream(d, plan.n, plan.seed, r as u64);
    let f = eval_rows(plan.integrand, pts.view())?;
    let mut cells = Vec::new();
    let (mc, ms) = timed(|| mc_estimate(&f))?;
    cells.push(Cell {
        method: MethodName::Mc,
        m: 0,
        estimate: mc.alpha / plan.scale,
        ms,
        flagged: false,
    });
    let needs_controls = plan.methods.iter().any(|m| m.uses_controls());
    if !needs_controls {
        return Ok(cells);
    }
    for spec in plan.specs {
        let t = Instant::now();
        let h = build_design(spec, pts.view())?;
        let batch = SampleBatch::from_design(f.clone(), h)?;
        let setup = t.elapsed().as_secs_f64() * 1e3;
        for &method in plan.methods {
            let run = || match method {
                MethodName::Ols => ols_estimate(&batch),
                MethodName::Lasso => lasso_estimate(&batch, plan.selector),
                MethodName::Lslasso => lslasso_estimate(&batch, plan.n_sub.expect("validated"), plan.selector),
                MethodName::Lslassox => lslasso_estimate(&batch, lslassox_subsample(plan.n), plan.selector),
                MethodName::Mc | MethodName::Halton => unreachable!(),
            };
            if !method.uses_controls() {
                continue;
            }
            let (res, ms) = timed(run)?;
            cells.push(Cell {
                method,
                m: spec.m(),
                estimate: res.alpha / plan.scale,
                ms: ms + setup,
                flagged: !res.flags.is_empty(),
            });
        }
    }
    Ok(cells)
}

pub(crate) fn run_plan(plan: &Plan<'_>) -> Result<Vec<SummaryRow>> {
    let per_rep = run_indexed(plan.replicates, |r| replicate(plan, r))?;

    let halton = if plan.methods.contains(&MethodName::Halton) {
        let t = Instant::now();
        let pts = halton_points(plan.integrand.dim(), plan.n)?;
        let v = mean(&eval_rows(plan.integrand, pts.view())?) / plan.scale;
        Some((v, t.elapsed().as_secs_f64() * 1e3))
    } else {
        None
    };

    let mut keys: Vec<(MethodName, usize)> = vec![(MethodName::Mc, 0)];
    if halton.is_some() {
        keys.push((MethodName::Halton, 0));
    }
    for spec in plan.specs {
        for &m in plan.methods {
            if m.uses_controls() {
                keys.push((m, spec.m()));
            }
        }
    }

    let r = plan.replicates as f64;
    let mut rows: Vec<SummaryRow> = keys
        .into_iter()
        .map(|(method, m)| {
            let (estimates, ms, flagged) = if method == MethodName::Halton {
                let (v, ms) = halton.expect("halton requested");
                (vec![v; plan.replicates], ms, 0)
            } else {
                let mut est = Vec::with_capacity(plan.replicates);
                let mut ms = 0.0;
                let mut flagged = 0;
                for cells in &per_rep {
                    let c = cells
                        .iter()
                        .find(|c| c.method == method && c.m == m)
                        .expect("every replicate runs every method");
                    est.push(c.estimate);
                    ms += c.ms;
                    flagged += usize::from(c.flagged);
                }
                (est, ms / r, flagged)
            };
            let mse = estimates.iter().map(|e| (e - plan.truth).powi(2)).sum::<f64>() / r;
            SummaryRow {
                method,
                m,
                estimates,
                mse,
                efficiency: f64::NAN,
                wall_time_ms: ms,
                flagged,
            }
        })
        .collect();
    let mc_mse = rows[0].mse;
    for row in &mut rows {
        row.efficiency = if row.method == MethodName::Mc { 1.0 } else { mc_mse / row.mse };
    }
    Ok(rows)
}

/// Run every requested method on the same draws for each replicate.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let specs = cfg.basis.specs(cfg.integrand.dim())?;
    let truth = cfg.integrand.true_value().expect("synthetic integrands have known integrals");
    let plan = Plan {
        integrand: &cfg.integrand,
        specs: &specs,
        n: cfg.n,
        n_sub: cfg.n_sub,
        replicates: cfg.replicates,
        seed: cfg.master_seed,
        methods: &cfg.methods,
        selector: &cfg.selector,
        truth,
        scale: 1.0,
    };
    let rows = run_plan(&plan)?;
    Ok(ExperimentReport {
        config: serde_json::to_value(cfg)?,
        truth,
        truth_se: None,
        log_evidence: None,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(methods: Vec<MethodName>) -> ExperimentConfig {
        ExperimentConfig {
            integrand: Synthetic::Phi { d: 3 },
            basis: BasisGrid {
                family: Family::LegendreShifted,
                k: 12,
                degs: vec![1],
                order: None,
            },
            n: 2000,
            n_sub: Some(500),
            replicates: 20,
            master_seed: 5,
            methods,
            selector: Selector::dichotomic(),
            output: None,
        }
    }

    #[test]
    fn config_json() {
        let js = r#"{"integrand":{"kind":"phi","d":3},
            "basis":{"family":"legendre","k":12,"degs":[1,3]},
            "n":1000,"N":200,"replicates":3,"master_seed":1,
            "methods":["mc","ols","lslasso"],"selector":"kfold"}"#;
        let c: ExperimentConfig = serde_json::from_str(js).unwrap();
        assert_eq!(c.selector, Selector::kfold());
        assert_eq!(c.n_sub, Some(200));
        c.validate().unwrap();
        let back: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn validation() {
        let mut c = cfg(vec![MethodName::Lslasso]);
        c.n_sub = None;
        assert!(c.validate().is_err());
        let mut c = cfg(vec![MethodName::Mc]);
        c.replicates = 0;
        assert!(c.validate().is_err());
        let mut c = cfg(vec![MethodName::Mc]);
        c.n_sub = Some(5000);
        assert!(c.validate().is_err());
        let mut c = cfg(vec![MethodName::Mc]);
        c.basis.degs.clear();
        assert!(c.validate().is_err());
        assert!("LASSO".parse::<MethodName>().is_ok());
        assert!("ridge".parse::<MethodName>().is_err());
    }

    #[test]
    fn paired_design_and_mc_efficiency() {
        let all = run_experiment(&cfg(vec![MethodName::Mc, MethodName::Ols, MethodName::Lslasso])).unwrap();
        let some = run_experiment(&cfg(vec![MethodName::Ols])).unwrap();
        assert_eq!(all.row(MethodName::Ols, 3).unwrap().estimates, some.row(MethodName::Ols, 3).unwrap().estimates);
        assert_eq!(all.efficiency(MethodName::Mc, 0), Some(1.0));
        assert_eq!(all.rows.len(), 3);
        assert!(all.rows.iter().all(|r| r.estimates.len() == 20 && r.mse >= 0.0));
    }

    #[test]
    fn single_replicate_mse() {
        let mut c = cfg(vec![MethodName::Mc]);
        c.replicates = 1;
        let r = run_experiment(&c).unwrap();
        let row = &r.rows[0];
        assert_eq!(row.mse, (row.estimates[0] - 1.0).powi(2));
    }

    #[test]
    fn halton_row() {
        let r = run_experiment(&cfg(vec![MethodName::Halton])).unwrap();
        let h = r.row(MethodName::Halton, 0).unwrap();
        assert!(h.estimates.windows(2).all(|w| w[0] == w[1]));
        assert!(h.efficiency > 1.0);
    }
}
