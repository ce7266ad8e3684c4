//! Versioned JSON reports, ECDF and histogram data files, and the
//! results-table renderer.
//!
//! Reports carry no timestamps or host details, so identical runs produce
//! identical files (timing fields aside).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use cleandb_core::cleanse::{CleanseConfig, CleanseReport};
use cleandb_core::metrics::{HistogramBin, NormalizedMetrics, RunMetrics};
use cleandb_core::positioning::KnnConfig;
use cleandb_core::sweep::{SweepConfig, SweepResult};
use cleandb_core::synth::SynthConfig;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::LoadConfig;
use crate::fsutil::atomic_write;
use crate::{Error, Result};

/// Bumped whenever a report field changes meaning or disappears.
pub const SCHEMA_VERSION: u32 = 1;

/// Shape of a map as it entered a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapSummary {
    pub rows: usize,
    pub aps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanseReportFile {
    pub schema_version: u32,
    pub dataset: String,
    pub input: PathBuf,
    pub load: LoadConfig,
    pub config: CleanseConfig,
    pub input_map: MapSummary,
    pub report: CleanseReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub train: PathBuf,
    pub test: PathBuf,
    /// Pre-cleansed training file, when one was supplied.
    pub cleansed_input: Option<PathBuf>,
    /// Cleansing applied on the fly, when requested.
    pub cleanse: Option<CleanseConfig>,
    pub knn: KnnConfig,
    pub load: LoadConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleansedRun {
    pub rho: Option<f64>,
    pub train: MapSummary,
    pub metrics: RunMetrics,
    /// `None` when a baseline field is zero and the ratio is undefined.
    pub normalized: Option<NormalizedMetrics>,
    pub normalize_error: Option<String>,
}

/// Baseline and (optionally) cleansed run on one dataset: one results-table row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub schema_version: u32,
    pub dataset: String,
    pub config: EvalConfig,
    pub train: MapSummary,
    pub test: MapSummary,
    pub baseline: RunMetrics,
    pub cleansed: Option<CleansedRun>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TuneOn {
    Validation,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRunConfig {
    pub train: PathBuf,
    pub test: Option<PathBuf>,
    pub tune_on: TuneOn,
    pub validation_fraction: Option<f64>,
    pub seed: Option<u64>,
    pub sweep: SweepConfig,
    pub load: LoadConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub schema_version: u32,
    pub dataset: String,
    pub config: SweepRunConfig,
    /// Map the candidate thresholds were cleansed from.
    pub fit_map: MapSummary,
    /// Map the candidates were scored on.
    pub tune_map: MapSummary,
    pub result: SweepResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenReport {
    pub schema_version: u32,
    pub config: SynthConfig,
    pub queries: usize,
    pub query_seed: u64,
    pub clean: MapSummary,
    pub poisoned: MapSummary,
    /// Row indices of the injected outliers in the poisoned map.
    pub outliers: Vec<usize>,
}

/// Writes `value` as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    atomic_write(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)
            .map_err(|source| Error::Json { path: path.to_path_buf(), source })?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))
    })
}

/// Reads a JSON report and checks its schema version.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|source| Error::Json { path: path.to_path_buf(), source })?;
    match value.get("schema_version").and_then(serde_json::Value::as_u64) {
        Some(v) if v == u64::from(SCHEMA_VERSION) => {}
        Some(v) => return Err(Error::Config(format!("{}: unsupported schema_version {v}", path.display()))),
        None => return Err(Error::Config(format!("{}: missing schema_version", path.display()))),
    }
    serde_json::from_value(value).map_err(|source| Error::Json { path: path.to_path_buf(), source })
}

/// `error_m,probability` rows of an empirical CDF.
pub fn write_ecdf(path: &Path, steps: &[(f64, f64)]) -> Result<()> {
    atomic_write(path, |w| {
        let mut text = String::from("error_m,probability\n");
        for (e, p) in steps {
            let _ = writeln!(text, "{e},{p}");
        }
        w.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
    })
}

/// `rss_dbm,density,not_detected` rows; the not-detected bin sits at the sentinel.
pub fn write_histogram(path: &Path, bins: &[HistogramBin]) -> Result<()> {
    atomic_write(path, |w| {
        let mut text = String::from("rss_dbm,density,not_detected\n");
        for b in bins {
            let _ = writeln!(text, "{},{},{}", b.center, b.density, u8::from(b.not_detected));
        }
        w.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
    })
}

fn fmt_opt(v: Option<f64>, decimals: usize) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.decimals$}"))
}

const HEADER: [&str; 16] = [
    "Dataset", "|T_TR|", "|T_TE|", "|A|", "rho", "zeta_b", "zeta_f", "eps_2D", "eps_3D", "delta", "~|T_TR|", "~zeta_b",
    "~zeta_f", "~eps_2D", "~eps_3D", "~delta",
];

/// Renders the comparison table: absolute baseline metrics, then cleansed
/// metrics normalised by the baseline, then an `Avg.` row over the
/// normalised columns of every row that has them.
pub fn render_table(reports: &[EvaluationReport]) -> String {
    let mut rows: Vec<Vec<String>> = vec![HEADER.iter().map(|s| s.to_string()).collect()];
    let mut sums = [0.0f64; 6];
    let mut counts = [0usize; 6];
    for r in reports {
        let b = &r.baseline;
        let norm = r.cleansed.as_ref().and_then(|c| c.normalized);
        let rho = r.cleansed.as_ref().and_then(|c| c.rho);
        let ncols = norm.map(|n| {
            [Some(n.train_size), n.building_hit, n.floor_hit, Some(n.mean_2d), Some(n.mean_3d), Some(n.predict_time)]
        });
        if let Some(cols) = ncols {
            for (i, v) in cols.iter().enumerate() {
                if let Some(v) = v {
                    sums[i] += v;
                    counts[i] += 1;
                }
            }
        }
        let mut row = vec![
            r.dataset.clone(),
            r.train.rows.to_string(),
            r.test.rows.to_string(),
            r.train.aps.to_string(),
            fmt_opt(rho, 0),
            fmt_opt(b.building_hit, 3),
            fmt_opt(b.floor_hit, 3),
            format!("{:.3}", b.mean_2d),
            format!("{:.3}", b.mean_3d),
            format!("{:.3}", b.predict_time),
        ];
        match ncols {
            Some(cols) => row.extend(cols.iter().map(|v| fmt_opt(*v, 3))),
            None => row.extend(std::iter::repeat_n("x".to_string(), 6)),
        }
        rows.push(row);
    }
    let mut avg = vec!["Avg.".to_string()];
    avg.extend(std::iter::repeat_n(String::new(), 9));
    avg.extend(
        (0..6).map(|i| if counts[i] == 0 { "-".to_string() } else { format!("{:.3}", sums[i] / counts[i] as f64) }),
    );
    rows.push(avg);

    let widths: Vec<usize> =
        (0..HEADER.len()).map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for (i, row) in rows.iter().enumerate() {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(c, (cell, &w))| if c == 0 { format!("{cell:<w$}") } else { format!("{cell:>w$}") })
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
        if i == 0 || i == rows.len() - 2 {
            let total: usize = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
            out.push_str(&"-".repeat(total));
            out.push('\n');
        }
    }
    out
}
