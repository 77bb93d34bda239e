use std::fs::{self, File};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::experiment::ExperimentReport;
use crate::error::{CvError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

/// Write `report` into `dir` and return the files written.
///
/// CSV output is three files: `replicates.csv` (one row per estimate),
/// `summary.csv` (method, m, mse, efficiency) and `timings.csv`. Timings
/// live apart from the summary so that the summary is a pure function of
/// the configuration. JSON output is `report.json` with everything.
pub fn emit_report(report: &ExperimentReport, dir: &Path, format: ReportFormat) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| CvError::io(dir, e))?;
    match format {
        ReportFormat::Json => {
            let path = dir.join("report.json");
            let file = File::create(&path).map_err(|e| CvError::io(&path, e))?;
            serde_json::to_writer_pretty(file, report)?;
            Ok(vec![path])
        }
        ReportFormat::Csv => {
            let reps = dir.join("replicates.csv");
            let mut w = writer(&reps)?;
            w.write_record(["method", "m", "replicate", "estimate", "abs_error"])?;
            for row in &report.rows {
                for (r, e) in row.estimates.iter().enumerate() {
                    w.write_record([
                        row.method.as_str().to_string(),
                        row.m.to_string(),
                        r.to_string(),
                        e.to_string(),
                        (e - report.truth).abs().to_string(),
                    ])?;
                }
            }
            finish(w, &reps)?;

            let summary = dir.join("summary.csv");
            let mut w = writer(&summary)?;
            w.write_record(["method", "m", "mse", "efficiency"])?;
            for row in &report.rows {
                w.write_record([
                    row.method.as_str().to_string(),
                    row.m.to_string(),
                    row.mse.to_string(),
                    row.efficiency.to_string(),
                ])?;
            }
            finish(w, &summary)?;

            let timings = dir.join("timings.csv");
            let mut w = writer(&timings)?;
            w.write_record(["method", "m", "wall_time_ms"])?;
            for row in &report.rows {
                w.write_record([
                    row.method.as_str().to_string(),
                    row.m.to_string(),
                    format!("{:.3}", row.wall_time_ms),
                ])?;
            }
            finish(w, &timings)?;
            Ok(vec![reps, summary, timings])
        }
    }
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| CvError::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn finish(mut w: csv::Writer<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| CvError::io(path, e))
}
