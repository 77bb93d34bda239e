//! `cvmc`: one-shot estimates, benchmark runs, evidence studies and bound
//! evaluation from the command line.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use cvmc::basis::{BasisSpec, Family};
use cvmc::bounds::{bound_report, BoundParams};
use cvmc::error::CvError;
use cvmc::estimators::{
    lasso_estimate, lslasso_estimate, lslassox_subsample, mc_estimate, ols_estimate, EstimateResult, SampleBatch,
    Selector,
};
use cvmc::harness::{
    emit_report, run_bayes, run_experiment, sample_uniform, BayesConfig, Dataset, ExperimentConfig,
    ExperimentReport, MethodName, ReportFormat,
};
use cvmc::integrands::{Integrand, Synthetic};
use cvmc::qmc::halton_points;

const EXIT_CONFIG: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(name = "cvmc", version, about = "Monte Carlo integration with control variates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the integral of a synthetic test function once.
    Integrate(IntegrateArgs),
    /// Run a replicated experiment described by a JSON config.
    Bench(BenchArgs),
    /// Estimate a Bayesian evidence against a gold standard.
    Bayes(BayesArgs),
    /// Evaluate the concentration bounds for a JSON parameter set.
    Bounds(BoundsArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum IntegrandKind {
    Phi,
    /// Product of log-normal densities in the first j coordinates.
    F,
    /// Product of exponential densities in the first j coordinates.
    G,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Legendre,
    Fourier,
}

#[derive(Clone, Copy, ValueEnum)]
enum SelectorArg {
    Dichotomic,
    Kfold,
}

impl From<SelectorArg> for Selector {
    fn from(s: SelectorArg) -> Self {
        match s {
            SelectorArg::Dichotomic => Selector::dichotomic(),
            SelectorArg::Kfold => Selector::kfold(),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
    Both,
}

#[derive(Args)]
struct IntegrateArgs {
    #[arg(long, value_enum, default_value = "phi")]
    integrand: IntegrandKind,
    #[arg(long)]
    d: usize,
    /// Number of active coordinates of `f` and `g`.
    #[arg(long, default_value_t = 1)]
    j: usize,
    #[arg(long, value_enum, default_value = "legendre")]
    family: FamilyArg,
    #[arg(long, default_value_t = 12)]
    k: usize,
    #[arg(long, default_value_t = 3)]
    deg: usize,
    #[arg(long)]
    n: usize,
    /// Subsample size for `lslasso`.
    #[arg(long = "N")]
    n_sub: Option<usize>,
    #[arg(long, default_value = "ols")]
    method: MethodName,
    #[arg(long, value_enum, default_value = "dichotomic")]
    selector: SelectorArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct BenchArgs {
    /// Experiment config (JSON).
    config: PathBuf,
    /// Output directory; overrides `output` in the config.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "both")]
    format: FormatArg,
}

#[derive(Args)]
struct BayesArgs {
    #[arg(long)]
    dataset: Dataset,
    /// Sonar CSV (60 features and an R/M label per line).
    #[arg(long)]
    data_path: Option<PathBuf>,
    #[arg(long, default_value_t = 5000)]
    n: usize,
    #[arg(long = "N")]
    n_sub: Option<usize>,
    #[arg(long, default_value_t = 10_000_000)]
    n_gold: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Largest univariate degree (default: 10 for capture, 5 for sonar).
    #[arg(long)]
    k: Option<usize>,
    /// Interaction order (default: 2 for capture, 1 for sonar).
    #[arg(long)]
    order: Option<usize>,
    /// Total-degree threshold; repeat for several bases.
    #[arg(long)]
    deg: Vec<usize>,
    #[arg(long, default_value_t = 50)]
    replicates: usize,
    #[arg(long, value_delimiter = ',', default_value = "mc,ols,lasso,lslassox")]
    methods: Vec<MethodName>,
    #[arg(long, value_enum, default_value = "dichotomic")]
    selector: SelectorArg,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "both")]
    format: FormatArg,
}

#[derive(Args)]
struct BoundsArgs {
    /// Parameter file (JSON), or `-` for standard input.
    params: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = match cli.command {
        Command::Integrate(a) => integrate(a),
        Command::Bench(a) => bench(a),
        Command::Bayes(a) => bayes(a),
        Command::Bounds(a) => bounds(a),
    };
    match out {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { EXIT_IO } else { EXIT_CONFIG })
        }
    }
}

fn read_input(path: &Path) -> Result<String, CvError> {
    let mut s = String::new();
    if path == Path::new("-") {
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| CvError::Io { path: path.into(), source: e })?;
    } else {
        s = fs::read_to_string(path).map_err(|e| CvError::Io { path: path.into(), source: e })?;
    }
    Ok(s)
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CvError> {
    let text = read_input(path)?;
    serde_json::from_str(&text).map_err(|e| CvError::Config(format!("{}: {e}", path.display())))
}

fn print_json(v: &serde_json::Value) -> Result<(), CvError> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn integrate(a: IntegrateArgs) -> Result<(), CvError> {
    let integrand = match a.integrand {
        IntegrandKind::Phi => Synthetic::Phi { d: a.d },
        IntegrandKind::F => Synthetic::LogNormal { d: a.d, j: a.j },
        IntegrandKind::G => Synthetic::Exponential { d: a.d, j: a.j },
    };
    integrand.validate()?;
    let family = match a.family {
        FamilyArg::Legendre => Family::LegendreShifted,
        FamilyArg::Fourier => Family::Fourier,
    };
    let selector = Selector::from(a.selector);
    let truth = integrand.true_value();
    let (result, m): (EstimateResult, usize) = if a.method == MethodName::Halton {
        let pts = halton_points(a.d, a.n)?;
        let f = cvmc::estimators::eval_rows(&integrand, pts.view())?;
        (mc_estimate(&f)?, 0)
    } else {
        let spec = BasisSpec::new(family, a.d, a.k, a.deg)?;
        let batch = SampleBatch::from_integrand(&integrand, &spec, sample_uniform(a.d, a.n, a.seed))?;
        let r = match a.method {
            MethodName::Mc => mc_estimate(batch.f_vals())?,
            MethodName::Ols => ols_estimate(&batch)?,
            MethodName::Lasso => lasso_estimate(&batch, &selector)?,
            MethodName::Lslasso => {
                let n_sub = a
                    .n_sub
                    .ok_or_else(|| CvError::Config("method lslasso requires --N".into()))?;
                lslasso_estimate(&batch, n_sub, &selector)?
            }
            MethodName::Lslassox => lslasso_estimate(&batch, lslassox_subsample(a.n), &selector)?,
            MethodName::Halton => unreachable!(),
        };
        (r, if a.method.uses_controls() { spec.m() } else { 0 })
    };
    print_json(&json!({
        "integrand": integrand.name(),
        "method": a.method,
        "n": a.n,
        "m": m,
        "result": result,
        "true_value": truth,
        "abs_error": truth.map(|t| (result.alpha - t).abs()),
    }))
}

fn write_report(report: &ExperimentReport, dir: &Path, format: FormatArg) -> Result<(), CvError> {
    let formats: &[ReportFormat] = match format {
        FormatArg::Csv => &[ReportFormat::Csv],
        FormatArg::Json => &[ReportFormat::Json],
        FormatArg::Both => &[ReportFormat::Csv, ReportFormat::Json],
    };
    for &f in formats {
        for p in emit_report(report, dir, f)? {
            eprintln!("wrote {}", p.display());
        }
    }
    Ok(())
}

fn print_summary(report: &ExperimentReport) {
    println!("{:<9} {:>6} {:>12} {:>12} {:>10}", "method", "m", "mse", "efficiency", "ms/rep");
    for r in &report.rows {
        println!(
            "{:<9} {:>6} {:>12.4e} {:>12.4e} {:>10.1}",
            r.method.as_str(),
            r.m,
            r.mse,
            r.efficiency,
            r.wall_time_ms
        );
    }
}

fn bench(a: BenchArgs) -> Result<(), CvError> {
    let mut cfg: ExperimentConfig = parse_json(&a.config)?;
    if a.output.is_some() {
        cfg.output = a.output;
    }
    let dir = cfg
        .output
        .clone()
        .ok_or_else(|| CvError::Config("no output directory: set `output` or pass --output".into()))?;
    let report = run_experiment(&cfg)?;
    write_report(&report, &dir, a.format)?;
    print_summary(&report);
    Ok(())
}

fn bayes(a: BayesArgs) -> Result<(), CvError> {
    let base = match a.dataset {
        Dataset::Capture => BayesConfig::capture_default(),
        Dataset::Sonar => {
            let path = a
                .data_path
                .clone()
                .ok_or_else(|| CvError::Config("dataset sonar requires --data-path".into()))?;
            BayesConfig::sonar_default(path)
        }
    };
    let cfg = BayesConfig {
        data_path: a.data_path.or(base.data_path.clone()),
        n: a.n,
        n_sub: a.n_sub,
        n_gold: a.n_gold,
        k: a.k.unwrap_or(base.k),
        order: a.order.unwrap_or(base.order),
        degs: if a.deg.is_empty() && (a.k.is_some() || a.order.is_some()) {
            Vec::new()
        } else if a.deg.is_empty() {
            base.degs.clone()
        } else {
            a.deg
        },
        replicates: a.replicates,
        master_seed: a.seed,
        methods: a.methods,
        selector: a.selector.into(),
        output: a.output.clone(),
        ..base
    };
    let report = run_bayes(&cfg)?;
    if let Some(dir) = &a.output {
        write_report(&report, dir, a.format)?;
    }
    if let (Some(lz), Some(se)) = (report.log_evidence, report.truth_se) {
        println!("log evidence (gold standard): {lz:.6}  relative se: {se:.2e}");
    }
    print_summary(&report);
    Ok(())
}

fn bounds(a: BoundsArgs) -> Result<(), CvError> {
    let p: BoundParams = parse_json(&a.params)?;
    let report = bound_report(&p)?;
    print_json(&serde_json::to_value(report)?)
}
