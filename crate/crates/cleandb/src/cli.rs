//! The `cleandb` command line.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use cleandb_core::cleanse::{clean, CleanseConfig, WindowStat};
use cleandb_core::metrics::{ecdf, evaluate, normalize, rss_histogram_unit_width, Evaluation, HitRates, SystemClock};
use cleandb_core::positioning::{fit, Distance, KnnConfig, ScanStrategy};
use cleandb_core::radiomap::{PositiveTransform, RadioMap};
use cleandb_core::sweep::{holdout_split, sweep, Objective, SweepConfig};
use cleandb_core::synth::{generate, generate_queries, SynthConfig};

use crate::config::LoadConfig;
use crate::csvio::{load_csv, save_csv};
use crate::fsutil::{atomic_write_bytes, OutputLock};
use crate::report::{
    read_json, render_table, write_ecdf, write_histogram, write_json, CleanseReportFile, CleansedRun, EvalConfig,
    EvaluationReport, GenReport, MapSummary, SweepReport, SweepRunConfig, TuneOn, SCHEMA_VERSION,
};
use crate::{Error, Result};

/// Environment variable holding the worker-thread count.
pub const THREADS_ENV: &str = "CLEANDB_THREADS";

const EXIT_CODES: &str = "\
Exit codes:
   0  success
   2  invalid command-line arguments
   3  file could not be read or written
   4  input file has no header or no data rows
   5  row with the wrong number of columns
   6  non-numeric cell
   7  required label column missing
   8  no access-point columns
   9  CSV syntax error
  10  invalid configuration
  11  malformed JSON report
  12  output directory locked by another run
  13  train and test maps have different access points
  20  empty radio map
  21  duplicate access-point id
  22  ragged row
  23  RSS value outside the valid band
  24  no detected values in the map
  30  zero comparison window
  31  every fingerprint removed at this threshold
  32  invalid cleansing or sweep parameter
  40  empty training set
  41  k larger than the training set
  42  dimension mismatch between queries and training data
  50  ground-truth label missing for a requested hit rate
  51  baseline metric is zero, ratio undefined
  52  empty evaluation input

Environment:
  CLEANDB_THREADS  worker threads for matching and prediction (default: all cores)";

#[derive(Debug, Parser)]
#[command(name = "cleandb", version, about = "Radio-map cleansing and k-NN positioning evaluation", after_help = EXIT_CODES)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Remove low-correlation fingerprints from a training map.
    Clean(CleanArgs),
    /// Evaluate k-NN positioning with the full and (optionally) cleansed map.
    Eval(EvalArgs),
    /// Search cleansing thresholds and pick the most aggressive harmless one.
    Sweep(SweepArgs),
    /// Generate synthetic radio maps with injected outliers.
    Gen(GenArgs),
    /// Render a results table from stored evaluation reports.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StatArg {
    Mean,
    Max,
}

impl From<StatArg> for WindowStat {
    fn from(s: StatArg) -> Self {
        match s {
            StatArg::Mean => WindowStat::Mean,
            StatArg::Max => WindowStat::Max,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DistanceArg {
    Manhattan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ObjectiveArg {
    MaxRemovals,
    MinError3d,
}

#[derive(Debug, Clone, Args)]
pub struct LoadArgs {
    /// TOML load configuration (column names, sentinel, band).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Cell value meaning "not detected"; overrides the config file.
    #[arg(long, allow_negative_numbers = true)]
    pub sentinel: Option<f64>,
    /// Metres per floor for maps without a HEIGHT column; overrides the config file.
    #[arg(long)]
    pub floor_height: Option<f64>,
}

impl LoadArgs {
    fn resolve(&self) -> Result<LoadConfig> {
        let mut cfg = match &self.config {
            Some(p) => LoadConfig::from_file(p)?,
            None => LoadConfig::default(),
        };
        if let Some(s) = self.sentinel {
            cfg.sentinel = s;
        }
        if let Some(h) = self.floor_height {
            cfg.floor_height = h;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Args)]
pub struct KnnArgs {
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, value_enum, default_value_t = DistanceArg::Manhattan)]
    pub distance: DistanceArg,
}

impl KnnArgs {
    fn resolve(&self) -> Result<KnnConfig> {
        if self.k == 0 {
            return Err(Error::Core(cleandb_core::Error::InvalidConfig("k must be at least 1".into())));
        }
        let distance = match self.distance {
            DistanceArg::Manhattan => Distance::Manhattan,
        };
        Ok(KnnConfig { k: self.k, distance, scan: ScanStrategy::default() })
    }
}

#[derive(Debug, Clone, Args)]
pub struct CleanArgs {
    #[arg(long)]
    pub train: PathBuf,
    /// Match-percentage threshold, 0 to 100.
    #[arg(long)]
    pub rho: f64,
    #[arg(long, value_enum, default_value_t = StatArg::Max)]
    pub stat: StatArg,
    #[command(flatten)]
    pub load: LoadArgs,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    /// Pre-cleansed training file to compare against the baseline.
    #[arg(long, conflicts_with = "rho")]
    pub cleansed: Option<PathBuf>,
    /// Cleanse the training map at this threshold and compare.
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long, value_enum, default_value_t = StatArg::Max)]
    pub stat: StatArg,
    /// Dataset name for the report; defaults to the training file's stem.
    #[arg(long)]
    pub name: Option<String>,
    #[command(flatten)]
    pub knn: KnnArgs,
    #[command(flatten)]
    pub load: LoadArgs,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub train: PathBuf,
    /// Test map; required with `--tune-on test`.
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Score thresholds on a held-out part of the training map, or on the test map.
    #[arg(long, value_enum, default_value_t = TuneOn::Validation)]
    pub tune_on: TuneOn,
    #[arg(long, default_value_t = 0.2)]
    pub validation_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 5)]
    pub grid_step: u32,
    /// Window statistics to try; repeat the flag for several.
    #[arg(long, value_enum)]
    pub stat: Vec<StatArg>,
    #[arg(long, value_enum, default_value_t = ObjectiveArg::MaxRemovals)]
    pub objective: ObjectiveArg,
    #[arg(long)]
    pub name: Option<String>,
    #[command(flatten)]
    pub knn: KnnArgs,
    #[command(flatten)]
    pub load: LoadArgs,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    #[arg(long, default_value_t = SynthConfig::default().seed)]
    pub seed: u64,
    #[arg(long, default_value_t = SynthConfig::default().ap_count)]
    pub aps: usize,
    /// Surveyed area along x, metres.
    #[arg(long, default_value_t = SynthConfig::default().area_width)]
    pub width: f64,
    /// Surveyed area along y, metres.
    #[arg(long, default_value_t = SynthConfig::default().area_depth)]
    pub depth: f64,
    /// How far outside the surveyed area APs may sit, metres.
    #[arg(long, default_value_t = SynthConfig::default().ap_margin)]
    pub ap_margin: f64,
    #[arg(long, default_value_t = SynthConfig::default().floors)]
    pub floors: usize,
    #[arg(long, default_value_t = SynthConfig::default().floor_height)]
    pub floor_height: f64,
    /// Survey grid spacing in metres.
    #[arg(long, default_value_t = SynthConfig::default().grid_spacing)]
    pub spacing: f64,
    #[arg(long, default_value_t = SynthConfig::default().tx_power, allow_negative_numbers = true)]
    pub tx_power: f64,
    #[arg(long, default_value_t = SynthConfig::default().path_loss_exponent)]
    pub exponent: f64,
    /// Shadowing standard deviation in dB.
    #[arg(long, default_value_t = SynthConfig::default().shadowing_sigma)]
    pub sigma: f64,
    /// Detection threshold in dBm.
    #[arg(long, default_value_t = SynthConfig::default().detection_threshold, allow_negative_numbers = true)]
    pub threshold: f64,
    /// Keep fractional dBm values instead of rounding.
    #[arg(long)]
    pub no_quantize: bool,
    #[arg(long, default_value_t = 0)]
    pub outliers: usize,
    /// Number of test queries to draw; 0 skips the test file.
    #[arg(long, default_value_t = 0)]
    pub queries: usize,
    #[arg(long, default_value_t = 0)]
    pub query_seed: u64,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

impl GenArgs {
    fn synth_config(&self) -> SynthConfig {
        SynthConfig {
            ap_count: self.aps,
            area_width: self.width,
            area_depth: self.depth,
            ap_margin: self.ap_margin,
            floors: self.floors,
            floor_height: self.floor_height,
            grid_spacing: self.spacing,
            tx_power: self.tx_power,
            path_loss_exponent: self.exponent,
            shadowing_sigma: self.sigma,
            detection_threshold: self.threshold,
            quantize: !self.no_quantize,
            outlier_count: self.outliers,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Evaluation report files, or directories holding `evaluation_report.json`.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Also write the table to `<OUT>/table.txt`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Applies the thread-count variable to the global worker pool.
pub fn init_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("{THREADS_ENV} must be a positive integer, got `{raw}`")))?;
    // A pool may already exist when embedded in another process.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    init_threads()?;
    match cli.command {
        Command::Clean(a) => run_clean(&a),
        Command::Eval(a) => run_eval(&a),
        Command::Sweep(a) => run_sweep(&a),
        Command::Gen(a) => run_gen(&a),
        Command::Report(a) => run_report(&a),
    }
}

fn summary(map: &RadioMap) -> MapSummary {
    MapSummary { rows: map.len(), aps: map.ap_count() }
}

fn dataset_name(explicit: &Option<String>, train: &Path) -> String {
    explicit.clone().unwrap_or_else(|| train.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default())
}

fn check_aligned(train: &RadioMap, other: &RadioMap) -> Result<()> {
    if train.ap_ids() != other.ap_ids() {
        let first = train.ap_ids().iter().zip(other.ap_ids()).position(|(a, b)| a != b);
        return Err(Error::ApMismatch(match first {
            Some(i) => format!("column {} is `{}` vs `{}`", i + 1, train.ap_ids()[i], other.ap_ids()[i]),
            None => format!("{} vs {} access points", train.ap_count(), other.ap_count()),
        }));
    }
    Ok(())
}

fn run_clean(a: &CleanArgs) -> Result<()> {
    let cfg = CleanseConfig::new(a.rho, a.stat.into())?;
    let load = a.load.resolve()?;
    let _lock = OutputLock::acquire(&a.out)?;
    let map = load_csv(&a.train, &load)?;
    let (cleaned, report) = clean(&map, &cfg)?;
    let file = CleanseReportFile {
        schema_version: SCHEMA_VERSION,
        dataset: map.meta.name.clone(),
        input: a.train.clone(),
        load,
        config: cfg,
        input_map: summary(&map),
        report,
    };
    save_csv(&cleaned, &a.out.join("cleansed.csv"))?;
    write_json(&a.out.join("cleanse_report.json"), &file)?;
    println!("kept {} of {} fingerprints (window {}, rho {})", cleaned.len(), map.len(), file.report.window, cfg.rho);
    Ok(())
}

fn run_positioning(
    train: &RadioMap,
    test: &RadioMap,
    transform: &PositiveTransform,
    knn: KnnConfig,
    rates: HitRates,
) -> Result<Evaluation> {
    let model = fit(transform.apply(train), knn)?;
    Ok(evaluate(&model, &transform.apply(test), rates, &SystemClock::default())?)
}

fn run_eval(a: &EvalArgs) -> Result<()> {
    let knn = a.knn.resolve()?;
    let cleanse = a.rho.map(|rho| CleanseConfig::new(rho, a.stat.into())).transpose()?;
    let load = a.load.resolve()?;
    let _lock = OutputLock::acquire(&a.out)?;

    let train = load_csv(&a.train, &load)?;
    let test = load_csv(&a.test, &load)?;
    check_aligned(&train, &test)?;
    let cleansed_map = match (&a.cleansed, cleanse) {
        (Some(path), _) => {
            let m = load_csv(path, &load)?;
            check_aligned(&train, &m)?;
            Some(m)
        }
        (None, Some(cfg)) => Some(clean(&train, &cfg)?.0),
        (None, None) => None,
    };

    // One transform, fitted on the full training map, shared by both runs.
    let transform = PositiveTransform::fit(&train)?;
    let rates = HitRates::for_labels(&train.positions());
    let base = run_positioning(&train, &test, &transform, knn, rates)?;
    write_ecdf(&a.out.join("ecdf_2d_baseline.csv"), &ecdf(&base.errors_2d))?;
    write_ecdf(&a.out.join("ecdf_3d_baseline.csv"), &ecdf(&base.errors_3d))?;
    write_histogram(&a.out.join("rss_hist_baseline.csv"), &rss_histogram_unit_width(&train)?)?;

    let cleansed = match &cleansed_map {
        Some(m) => {
            let run = run_positioning(m, &test, &transform, knn, rates)?;
            write_ecdf(&a.out.join("ecdf_2d_cleansed.csv"), &ecdf(&run.errors_2d))?;
            write_ecdf(&a.out.join("ecdf_3d_cleansed.csv"), &ecdf(&run.errors_3d))?;
            write_histogram(&a.out.join("rss_hist_cleansed.csv"), &rss_histogram_unit_width(m)?)?;
            let (normalized, normalize_error) = match normalize(&run.metrics, &base.metrics) {
                Ok(n) => (Some(n), None),
                Err(e) => (None, Some(e.to_string())),
            };
            Some(CleansedRun { rho: a.rho, train: summary(m), metrics: run.metrics, normalized, normalize_error })
        }
        None => None,
    };

    let report = EvaluationReport {
        schema_version: SCHEMA_VERSION,
        dataset: dataset_name(&a.name, &a.train),
        config: EvalConfig {
            train: a.train.clone(),
            test: a.test.clone(),
            cleansed_input: a.cleansed.clone(),
            cleanse,
            knn,
            load,
        },
        train: summary(&train),
        test: summary(&test),
        baseline: base.metrics,
        cleansed,
    };
    write_json(&a.out.join("evaluation_report.json"), &report)?;
    print!("{}", render_table(std::slice::from_ref(&report)));
    Ok(())
}

fn run_sweep(a: &SweepArgs) -> Result<()> {
    let knn = a.knn.resolve()?;
    let stats: Vec<WindowStat> = if a.stat.is_empty() {
        SweepConfig::default().stats
    } else {
        let mut s: Vec<WindowStat> = Vec::new();
        for &stat in &a.stat {
            if !s.contains(&stat.into()) {
                s.push(stat.into());
            }
        }
        s
    };
    let objective = match a.objective {
        ObjectiveArg::MaxRemovals => Objective::MaxRemovals,
        ObjectiveArg::MinError3d => Objective::MinError3d,
    };
    let config = SweepConfig { grid_step: a.grid_step, stats, knn, objective };
    if config.grid_step == 0 || config.grid_step > 100 {
        return Err(Error::Core(cleandb_core::Error::InvalidConfig("grid step must lie in 1..=100".into())));
    }
    let tune_test = match (a.tune_on, &a.test) {
        (TuneOn::Test, Some(p)) => Some(p.clone()),
        (TuneOn::Test, None) => return Err(Error::Config("--tune-on test requires --test".into())),
        (TuneOn::Validation, _) => {
            if !(a.validation_fraction > 0.0 && a.validation_fraction < 1.0) {
                return Err(Error::Config("--validation-fraction must lie in (0, 1)".into()));
            }
            None
        }
    };
    let load = a.load.resolve()?;
    let _lock = OutputLock::acquire(&a.out)?;

    let train = load_csv(&a.train, &load)?;
    let (fit_map, tune_map) = match &tune_test {
        Some(path) => {
            let test = load_csv(path, &load)?;
            check_aligned(&train, &test)?;
            (train, test)
        }
        None => holdout_split(&train, a.validation_fraction, a.seed)?,
    };
    let result = sweep(&fit_map, &tune_map, &config, &SystemClock::default())?;
    let validation = a.tune_on == TuneOn::Validation;
    let report = SweepReport {
        schema_version: SCHEMA_VERSION,
        dataset: dataset_name(&a.name, &a.train),
        config: SweepRunConfig {
            train: a.train.clone(),
            test: a.test.clone(),
            tune_on: a.tune_on,
            validation_fraction: validation.then_some(a.validation_fraction),
            seed: validation.then_some(a.seed),
            sweep: config,
            load,
        },
        fit_map: summary(&fit_map),
        tune_map: summary(&tune_map),
        result,
    };
    write_json(&a.out.join("sweep_report.json"), &report)?;
    let chosen = report.result.chosen();
    if report.result.no_safe_cleansing {
        println!("no safe cleansing: every threshold that removes rows degrades accuracy (rho {})", chosen.rho);
    } else {
        println!(
            "chosen rho {} ({:?} window {}): removes {} of {}",
            chosen.rho,
            chosen.window_stat,
            chosen.window,
            chosen.removed,
            chosen.kept + chosen.removed
        );
    }
    Ok(())
}

fn run_gen(a: &GenArgs) -> Result<()> {
    let config = a.synth_config();
    config.validate()?;
    let _lock = OutputLock::acquire(&a.out)?;
    let maps = generate(&config)?;
    save_csv(&maps.clean, &a.out.join("clean.csv"))?;
    save_csv(&maps.poisoned, &a.out.join("poisoned.csv"))?;
    if a.queries > 0 {
        save_csv(&generate_queries(&config, a.queries, a.query_seed)?, &a.out.join("test.csv"))?;
    }
    let report = GenReport {
        schema_version: SCHEMA_VERSION,
        config,
        queries: a.queries,
        query_seed: a.query_seed,
        clean: summary(&maps.clean),
        poisoned: summary(&maps.poisoned),
        outliers: maps.outliers,
    };
    write_json(&a.out.join("gen_report.json"), &report)?;
    println!(
        "wrote {} clean and {} poisoned fingerprints to {}",
        report.clean.rows,
        report.poisoned.rows,
        a.out.display()
    );
    Ok(())
}

fn run_report(a: &ReportArgs) -> Result<()> {
    let reports = a
        .inputs
        .iter()
        .map(|p| {
            let file = if p.is_dir() { p.join("evaluation_report.json") } else { p.clone() };
            read_json::<EvaluationReport>(&file)
        })
        .collect::<Result<Vec<_>>>()?;
    let table = render_table(&reports);
    if let Some(out) = &a.out {
        let _lock = OutputLock::acquire(out)?;
        atomic_write_bytes(&out.join("table.txt"), table.as_bytes())?;
    }
    print!("{table}");
    Ok(())
}
