//! Threshold search for the cleansing pass.
//!
//! A coarse grid `0, step, 2·step, … < 100` is evaluated for every window
//! statistic. Where a grid point is worse than the best seen so far while its
//! predecessor was not, every integer threshold strictly between the two is
//! evaluated as well. The chosen threshold is the one that removes the most
//! fingerprints without raising the mean 3D error or lowering the floor hit
//! rate relative to the uncleansed baseline.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cleanse::{clean, CleanseConfig, WindowStat};
use crate::metrics::{evaluate, normalize, Clock, HitRates, NormalizedMetrics, RunMetrics};
use crate::positioning::{fit, KnnConfig};
use crate::radiomap::{PositiveTransform, RadioMap};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    /// Most removals among non-degrading thresholds.
    #[default]
    MaxRemovals,
    /// Lowest mean 3D error among non-degrading thresholds.
    MinError3d,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Coarse grid spacing in percentage points.
    pub grid_step: u32,
    pub stats: Vec<WindowStat>,
    pub knn: KnnConfig,
    pub objective: Objective,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            grid_step: 5,
            stats: alloc::vec![WindowStat::Max, WindowStat::Mean],
            knn: KnnConfig::default(),
            objective: Objective::MaxRemovals,
        }
    }
}

impl SweepConfig {
    pub fn coarse_grid(&self) -> Vec<u32> {
        (0..100).step_by(self.grid_step.max(1) as usize).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub rho: f64,
    pub window_stat: WindowStat,
    /// Added by refinement rather than the coarse grid.
    pub refined: bool,
    pub window: usize,
    pub kept: usize,
    pub removed: usize,
    /// `None` when every fingerprint was removed.
    pub metrics: Option<RunMetrics>,
    /// `None` when a baseline field is zero (for example a perfect baseline).
    pub normalized: Option<NormalizedMetrics>,
    /// Mean 3D error and floor hit rate are no worse than the baseline's.
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub baseline: RunMetrics,
    /// Sorted by `rho`, then by window statistic.
    pub records: Vec<SweepRecord>,
    pub chosen_rho: f64,
    pub chosen_window_stat: WindowStat,
    /// No threshold removed anything without degrading the metrics; the
    /// chosen record is the least aggressive one and should not be applied.
    pub no_safe_cleansing: bool,
}

impl SweepResult {
    pub fn chosen(&self) -> &SweepRecord {
        self.records
            .iter()
            .find(|r| r.rho == self.chosen_rho && r.window_stat == self.chosen_window_stat)
            .expect("chosen record is always among the records")
    }
}

struct Evaluator<'a, C> {
    train: &'a RadioMap,
    tune: &'a RadioMap,
    transform: PositiveTransform,
    rates: HitRates,
    knn: KnnConfig,
    baseline: RunMetrics,
    clock: &'a C,
}

impl<C: Clock + Sync> Evaluator<'_, C> {
    fn record(&self, rho: u32, window_stat: WindowStat, refined: bool) -> Result<SweepRecord> {
        let config = CleanseConfig::new(rho as f64, window_stat)?;
        let m = self.train.len();
        match clean(self.train, &config) {
            Ok((cleaned, report)) => {
                let positioner = fit(self.transform.apply(&cleaned), self.knn)?;
                let run = evaluate(&positioner, &self.transform.apply(self.tune), self.rates, self.clock)?.metrics;
                Ok(SweepRecord {
                    rho: config.rho,
                    window_stat,
                    refined,
                    window: report.window,
                    kept: report.kept.len(),
                    removed: report.removed.len(),
                    normalized: normalize(&run, &self.baseline).ok(),
                    feasible: no_worse(&run, &self.baseline),
                    metrics: Some(run),
                })
            }
            Err(Error::AllRemoved { .. }) => Ok(SweepRecord {
                rho: config.rho,
                window_stat,
                refined,
                window: crate::cleanse::compute_window(&crate::radiomap::valid_counts(self.train), window_stat)?,
                kept: 0,
                removed: m,
                metrics: None,
                normalized: None,
                feasible: false,
            }),
            Err(e) => Err(e),
        }
    }

    fn records(&self, jobs: &[(u32, WindowStat, bool)]) -> Result<Vec<SweepRecord>> {
        let run = |&(rho, stat, refined): &(u32, WindowStat, bool)| self.record(rho, stat, refined);
        #[cfg(feature = "std")]
        {
            use rayon::prelude::*;
            jobs.par_iter().map(run).collect()
        }
        #[cfg(not(feature = "std"))]
        {
            jobs.iter().map(run).collect()
        }
    }
}

fn no_worse(run: &RunMetrics, baseline: &RunMetrics) -> bool {
    let floors_ok = match (run.floor_hit, baseline.floor_hit) {
        (Some(r), Some(b)) => r >= b,
        _ => true,
    };
    run.mean_3d <= baseline.mean_3d && floors_ok
}

/// Worse than the best values seen so far on either tracked metric.
fn degraded(record: &SweepRecord, best_error: f64, best_floor: Option<f64>) -> bool {
    match &record.metrics {
        None => true,
        Some(m) => m.mean_3d > best_error || matches!((m.floor_hit, best_floor), (Some(f), Some(b)) if f < b),
    }
}

/// Integer thresholds to add between coarse points, per statistic.
fn refinement(coarse: &[SweepRecord], grid: &[u32], stat: WindowStat) -> Vec<(u32, WindowStat, bool)> {
    let mut jobs = Vec::new();
    let mut best_error = f64::INFINITY;
    let mut best_floor: Option<f64> = None;
    let mut previous_degraded = false;
    for (k, record) in coarse.iter().enumerate() {
        let is_degraded = k > 0 && degraded(record, best_error, best_floor);
        if is_degraded && !previous_degraded {
            jobs.extend((grid[k - 1] + 1..grid[k]).map(|rho| (rho, stat, true)));
        }
        if let Some(m) = &record.metrics {
            best_error = best_error.min(m.mean_3d);
            best_floor = match (best_floor, m.floor_hit) {
                (Some(b), Some(f)) => Some(b.max(f)),
                (None, f) => f,
                (b, None) => b,
            };
        }
        previous_degraded = is_degraded;
    }
    jobs
}

/// Evaluates cleansing thresholds of `train` against `tune` and picks one.
///
/// The positive transform is fitted once on the full training map and reused
/// for every cleansed variant and for `tune`.
pub fn sweep<C: Clock + Sync>(
    train: &RadioMap,
    tune: &RadioMap,
    config: &SweepConfig,
    clock: &C,
) -> Result<SweepResult> {
    if config.stats.is_empty() {
        return Err(Error::InvalidConfig(alloc::string::String::from("at least one window statistic is required")));
    }
    if config.grid_step == 0 {
        return Err(Error::InvalidConfig(alloc::string::String::from("grid_step must be at least 1")));
    }
    let transform = PositiveTransform::fit(train)?;
    let train_positive = transform.apply(train);
    let rates = HitRates::for_labels(train_positive.labels());
    let baseline_model = fit(train_positive, config.knn)?;
    let baseline = evaluate(&baseline_model, &transform.apply(tune), rates, clock)?.metrics;

    let evaluator = Evaluator { train, tune, transform, rates, knn: config.knn, baseline, clock };
    let grid = config.coarse_grid();

    let coarse_jobs: Vec<_> = config.stats.iter().flat_map(|&s| grid.iter().map(move |&rho| (rho, s, false))).collect();
    let mut records = evaluator.records(&coarse_jobs)?;

    let mut refine_jobs = Vec::new();
    for (i, &stat) in config.stats.iter().enumerate() {
        let coarse = &records[i * grid.len()..(i + 1) * grid.len()];
        refine_jobs.extend(refinement(coarse, &grid, stat));
    }
    records.extend(evaluator.records(&refine_jobs)?);
    let stat_rank = |s: WindowStat| config.stats.iter().position(|&x| x == s).unwrap_or(usize::MAX);
    records.sort_by(|a, b| a.rho.total_cmp(&b.rho).then(stat_rank(a.window_stat).cmp(&stat_rank(b.window_stat))));

    let (chosen, no_safe_cleansing) = choose(&records, config.objective);
    let chosen = &records[chosen];
    Ok(SweepResult {
        baseline,
        chosen_rho: chosen.rho,
        chosen_window_stat: chosen.window_stat,
        no_safe_cleansing,
        records,
    })
}

/// Index of the chosen record and whether cleansing should be skipped.
///
/// Ties on the objective go to the higher threshold: equal removal counts
/// mean equal removal sets, and the highest such threshold marks the edge
/// of the safe region.
fn choose(records: &[SweepRecord], objective: Objective) -> (usize, bool) {
    let useful = |r: &SweepRecord| r.feasible && r.removed > 0;
    let mut best: Option<usize> = None;
    for (i, r) in records.iter().enumerate() {
        if !r.feasible {
            continue;
        }
        let better = match best {
            None => true,
            Some(b) => {
                let cur = &records[b];
                match objective {
                    Objective::MaxRemovals => r.removed >= cur.removed,
                    Objective::MinError3d => {
                        let (re, ce) = (
                            r.metrics.map_or(f64::INFINITY, |m| m.mean_3d),
                            cur.metrics.map_or(f64::INFINITY, |m| m.mean_3d),
                        );
                        re < ce || (re == ce && r.removed >= cur.removed)
                    }
                }
            }
        };
        if better {
            best = Some(i);
        }
    }
    let no_safe = !records.iter().any(useful);
    if no_safe {
        // Least aggressive record; removal counts grow with the threshold.
        let fallback = (0..records.len())
            .min_by(|&a, &b| {
                records[a].removed.cmp(&records[b].removed).then(records[a].rho.total_cmp(&records[b].rho))
            })
            .unwrap_or(0);
        return (fallback, true);
    }
    (best.unwrap_or(0), false)
}

/// Splits `map` into `(fit, validation)` parts with a seeded shuffle; both
/// keep original row order.
pub fn holdout_split(map: &RadioMap, validation_fraction: f64, seed: u64) -> Result<(RadioMap, RadioMap)> {
    if !(validation_fraction > 0.0 && validation_fraction < 1.0) {
        return Err(Error::InvalidConfig(alloc::format!(
            "validation fraction must lie in (0, 1), got {validation_fraction}"
        )));
    }
    let m = map.len();
    if m < 2 {
        return Err(Error::InvalidConfig(alloc::string::String::from("need at least two fingerprints to split")));
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_val = (libm::ceil(validation_fraction * m as f64) as usize).clamp(1, m - 1);
    let (val, fit_rows) = order.split_at_mut(n_val);
    val.sort_unstable();
    fit_rows.sort_unstable();
    Ok((map.select(fit_rows)?, map.select(val)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::NullClock;
    use crate::radiomap::tests::map_of;

    fn record(rho: f64, removed: usize, feasible: bool, err: f64) -> SweepRecord {
        SweepRecord {
            rho,
            window_stat: WindowStat::Max,
            refined: false,
            window: 3,
            kept: 10 - removed,
            removed,
            metrics: Some(RunMetrics {
                building_hit: None,
                floor_hit: None,
                mean_2d: err,
                mean_3d: err,
                max_3d: err,
                predict_time: 0.0,
                train_size: 10 - removed,
            }),
            normalized: None,
            feasible,
        }
    }

    #[test]
    fn choose_prefers_most_removals_then_higher_rho() {
        let recs = [
            record(0.0, 0, true, 1.0),
            record(5.0, 2, true, 1.0),
            record(10.0, 2, true, 0.9),
            record(15.0, 4, false, 2.0),
        ];
        assert_eq!(choose(&recs, Objective::MaxRemovals), (2, false));
        assert_eq!(choose(&recs, Objective::MinError3d), (2, false));
    }

    #[test]
    fn choose_flags_when_nothing_is_safe() {
        let recs = [record(0.0, 1, false, 2.0), record(5.0, 3, false, 3.0)];
        assert_eq!(choose(&recs, Objective::MaxRemovals), (0, true));
    }

    #[test]
    fn grid_step_hundred_is_single_point() {
        let cfg = SweepConfig { grid_step: 100, ..SweepConfig::default() };
        assert_eq!(cfg.coarse_grid(), alloc::vec![0]);
        assert_eq!(SweepConfig::default().coarse_grid().len(), 20);
        assert_eq!(*SweepConfig::default().coarse_grid().last().unwrap(), 95);
    }

    #[test]
    fn refinement_only_at_degradation_onset() {
        let grid = [0, 5, 10, 15];
        let recs = [
            record(0.0, 0, true, 1.0),
            record(5.0, 1, true, 1.0),
            record(10.0, 2, false, 2.0),
            record(15.0, 3, false, 3.0),
        ];
        let jobs = refinement(&recs, &grid, WindowStat::Max);
        assert_eq!(jobs.iter().map(|j| j.0).collect::<Vec<_>>(), alloc::vec![6, 7, 8, 9]);
    }

    #[test]
    fn holdout_split_partitions() {
        let rows: Vec<[Option<f64>; 1]> = (0..10).map(|i| [Some(-40.0 - i as f64)]).collect();
        let refs: Vec<&[Option<f64>]> = rows.iter().map(|r| r.as_slice()).collect();
        let map = map_of(&refs);
        let (a, b) = holdout_split(&map, 0.2, 3).unwrap();
        assert_eq!((a.len(), b.len()), (8, 2));
        let (a2, b2) = holdout_split(&map, 0.2, 3).unwrap();
        assert_eq!((a, b), (a2, b2));
        assert!(holdout_split(&map, 1.0, 3).is_err());
    }

    #[test]
    fn sweep_single_grid_point() {
        let map = map_of(&[&[Some(-40.0), Some(-50.0)], &[Some(-50.0), Some(-40.0)], &[Some(-45.0), None]]);
        let cfg = SweepConfig { grid_step: 100, stats: alloc::vec![WindowStat::Max], ..SweepConfig::default() };
        let res = sweep(&map, &map, &cfg, &NullClock).unwrap();
        assert_eq!(res.records.len(), 1);
        assert_eq!(res.chosen_rho, 0.0);
    }
}
