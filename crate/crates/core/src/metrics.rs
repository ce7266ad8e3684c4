//! Positioning quality metrics and the data behind error CDFs and RSS
//! distribution plots.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::positioning::{PositionEstimate, Positioner};
use crate::radiomap::{Position, PositiveMap, RadioMap, RssValue};
use crate::{Error, Result};

/// Monotonic time source in seconds.
pub trait Clock {
    fn now(&self) -> f64;
}

/// Clock that never advances; every measured duration is zero.
#[derive(Debug, Clone, Copy, Default)]
pub struct NullClock;

impl Clock for NullClock {
    fn now(&self) -> f64 {
        0.0
    }
}

#[cfg(feature = "std")]
#[derive(Debug, Clone, Copy)]
pub struct SystemClock {
    origin: std::time::Instant,
}

#[cfg(feature = "std")]
impl Default for SystemClock {
    fn default() -> Self {
        SystemClock { origin: std::time::Instant::now() }
    }
}

#[cfg(feature = "std")]
impl Clock for SystemClock {
    fn now(&self) -> f64 {
        self.origin.elapsed().as_secs_f64()
    }
}

/// Which classification hit rates to report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct HitRates {
    pub floor: bool,
    pub building: bool,
}

impl HitRates {
    /// Floors when the training labels span more than one floor; buildings
    /// when every training row has a building label and more than one occurs.
    pub fn for_labels(train: &[Position]) -> Self {
        let floor = train.windows(2).any(|w| w[0].floor != w[1].floor);
        let building =
            train.iter().all(|p| p.building.is_some()) && train.windows(2).any(|w| w[0].building != w[1].building);
        HitRates { floor, building }
    }
}

/// One row of the results table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    /// Building hit rate in percent.
    pub building_hit: Option<f64>,
    /// Floor hit rate in percent.
    pub floor_hit: Option<f64>,
    pub mean_2d: f64,
    pub mean_3d: f64,
    pub max_3d: f64,
    /// Wall-clock seconds for the whole batch prediction.
    pub predict_time: f64,
    pub train_size: usize,
}

/// Every field divided by the baseline's.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizedMetrics {
    pub train_size: f64,
    pub building_hit: Option<f64>,
    pub floor_hit: Option<f64>,
    pub mean_2d: f64,
    pub mean_3d: f64,
    pub predict_time: f64,
}

/// Metrics plus the per-query data they were computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub metrics: RunMetrics,
    pub estimates: Vec<PositionEstimate>,
    pub errors_2d: Vec<f64>,
    pub errors_3d: Vec<f64>,
}

/// Predicts every test row and scores the estimates against its labels.
pub fn evaluate<C: Clock + Sync>(
    positioner: &Positioner,
    test: &PositiveMap,
    rates: HitRates,
    clock: &C,
) -> Result<Evaluation> {
    if test.is_empty() {
        return Err(Error::EmptyInput);
    }
    check_ground_truth(test.labels(), rates)?;
    let start = clock.now();
    let estimates = positioner.predict_batch(test, clock)?;
    let predict_time = clock.now() - start;
    score(estimates, test.labels(), rates, positioner.train_size(), predict_time)
}

fn check_ground_truth(truth: &[Position], rates: HitRates) -> Result<()> {
    if rates.building && truth.iter().any(|p| p.building.is_none()) {
        return Err(Error::MissingGroundTruth("building"));
    }
    Ok(())
}

/// Scores precomputed estimates.
pub fn score(
    estimates: Vec<PositionEstimate>,
    truth: &[Position],
    rates: HitRates,
    train_size: usize,
    predict_time: f64,
) -> Result<Evaluation> {
    if truth.is_empty() {
        return Err(Error::EmptyInput);
    }
    if estimates.len() != truth.len() {
        return Err(Error::DimensionMismatch { expected: truth.len(), found: estimates.len() });
    }
    check_ground_truth(truth, rates)?;
    let mut errors_2d = Vec::with_capacity(truth.len());
    let mut errors_3d = Vec::with_capacity(truth.len());
    let mut floor_hits = 0usize;
    let mut building_hits = 0usize;
    for (est, t) in estimates.iter().zip(truth) {
        let dx = est.x - t.x;
        let dy = est.y - t.y;
        let dz = est.z - t.z;
        errors_2d.push(libm::sqrt(dx * dx + dy * dy));
        errors_3d.push(libm::sqrt(dx * dx + dy * dy + dz * dz));
        floor_hits += usize::from(est.floor == t.floor);
        building_hits += usize::from(est.building == t.building);
    }
    let count = truth.len() as f64;
    let hit = |hits: usize| 100.0 * hits as f64 / count;
    let metrics = RunMetrics {
        building_hit: rates.building.then(|| hit(building_hits)),
        floor_hit: rates.floor.then(|| hit(floor_hits)),
        mean_2d: errors_2d.iter().sum::<f64>() / count,
        mean_3d: errors_3d.iter().sum::<f64>() / count,
        max_3d: errors_3d.iter().copied().fold(0.0, f64::max),
        predict_time,
        train_size,
    };
    Ok(Evaluation { metrics, estimates, errors_2d, errors_3d })
}

fn ratio(name: &'static str, run: f64, base: f64) -> Result<f64> {
    if base == 0.0 {
        return Err(Error::ZeroBaselineField(name));
    }
    Ok(run / base)
}

fn ratio_opt(name: &'static str, run: Option<f64>, base: Option<f64>) -> Result<Option<f64>> {
    match (run, base) {
        (Some(r), Some(b)) => ratio(name, r, b).map(Some),
        _ => Ok(None),
    }
}

/// Field-wise `run / baseline`.
pub fn normalize(run: &RunMetrics, baseline: &RunMetrics) -> Result<NormalizedMetrics> {
    Ok(NormalizedMetrics {
        train_size: ratio("train_size", run.train_size as f64, baseline.train_size as f64)?,
        building_hit: ratio_opt("building_hit", run.building_hit, baseline.building_hit)?,
        floor_hit: ratio_opt("floor_hit", run.floor_hit, baseline.floor_hit)?,
        mean_2d: ratio("mean_2d", run.mean_2d, baseline.mean_2d)?,
        mean_3d: ratio("mean_3d", run.mean_3d, baseline.mean_3d)?,
        predict_time: ratio("predict_time", run.predict_time, baseline.predict_time)?,
    })
}

/// Empirical CDF as `(value, P(X ≤ value))` steps, one per distinct value.
pub fn ecdf(errors: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted = errors.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, v) in sorted.iter().enumerate() {
        let p = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == *v => last.1 = p,
            _ => out.push((*v, p)),
        }
    }
    out
}

/// Share of samples strictly below `x`.
pub fn fraction_below(errors: &[f64], x: f64) -> f64 {
    if errors.is_empty() {
        return 0.0;
    }
    errors.iter().filter(|&&e| e < x).count() as f64 / errors.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub center: f64,
    /// Share of all cells that fall in this bin.
    pub density: f64,
    pub not_detected: bool,
}

/// Histogram of every cell of `map`: `bins` equal-width bins over the
/// detected range, followed by one bin at the sentinel for not-detected cells.
pub fn rss_histogram(map: &RadioMap, bins: usize) -> Result<Vec<HistogramBin>> {
    if bins == 0 {
        return Err(Error::InvalidConfig(alloc::string::String::from("bins must be at least 1")));
    }
    Ok(histogram_over(map, map.min_detected().zip(map.max_detected()), bins))
}

/// [`rss_histogram`] with 1 dBm bins centred on whole dBm values.
pub fn rss_histogram_unit_width(map: &RadioMap) -> Result<Vec<HistogramBin>> {
    let range =
        map.min_detected().zip(map.max_detected()).map(|(lo, hi)| (libm::floor(lo) - 0.5, libm::ceil(hi) + 0.5));
    let bins = range.map_or(1, |(lo, hi)| (hi - lo) as usize);
    Ok(histogram_over(map, range, bins))
}

fn histogram_over(map: &RadioMap, range: Option<(f64, f64)>, bins: usize) -> Vec<HistogramBin> {
    let total = (map.len() * map.ap_count()) as f64;
    let mut counts = alloc::vec![0usize; bins];
    let mut undetected = 0usize;
    for fp in map.fingerprints() {
        for v in &fp.rss {
            match (*v, range) {
                (RssValue::Detected(level), Some((lo, hi))) => {
                    let idx = if hi > lo {
                        let t = (level - lo) / (hi - lo) * bins as f64;
                        (t as usize).min(bins - 1)
                    } else {
                        0
                    };
                    counts[idx] += 1;
                }
                _ => undetected += 1,
            }
        }
    }
    let mut out = Vec::with_capacity(bins + 1);
    if let Some((lo, hi)) = range {
        let width = (hi - lo) / bins as f64;
        for (i, &c) in counts.iter().enumerate() {
            out.push(HistogramBin {
                center: lo + width * (i as f64 + 0.5),
                density: c as f64 / total,
                not_detected: false,
            });
        }
    }
    if undetected > 0 || range.is_none() {
        out.push(HistogramBin { center: map.meta.sentinel, density: undetected as f64 / total, not_detected: true });
    }
    out
}
