//! Correlation-based removal of fingerprints from a radio map.
//!
//! Each fingerprint is reduced to the identifiers of its strongest access
//! points (at most `window` of them, strongest first). Two fingerprints match
//! by the share of identifiers they have in common, relative to the window.
//! A fingerprint's score is its best match against any *different* rank row
//! that strictly exceeds the threshold `rho`; fingerprints scoring zero are
//! dropped.
//!
//! The pairwise pass is `O(m² · n / 64)` using per-row AP bitsets and is
//! data-parallel over rows when the `std` feature is enabled.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::radiomap::{valid_counts, RadioMap};
use crate::{Error, Result};

/// Column index of an access point in its radio map.
pub type ApIndex = u32;

/// Statistic over valid counts that fixes the rank window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowStat {
    Mean,
    Max,
}

/// How a match is compared against the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Comparison {
    /// The match must exceed `rho`.
    #[default]
    Strict,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CleanseConfig {
    /// Threshold on the 0 to 100 percentage scale.
    pub rho: f64,
    pub window_stat: WindowStat,
    #[serde(default)]
    pub comparison: Comparison,
}

impl CleanseConfig {
    pub fn new(rho: f64, window_stat: WindowStat) -> Result<Self> {
        let config = CleanseConfig { rho, window_stat, comparison: Comparison::Strict };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=100.0).contains(&self.rho) {
            return Err(Error::InvalidConfig(alloc::format!("rho must lie in [0, 100], got {}", self.rho)));
        }
        Ok(())
    }
}

/// Rank window from per-row valid counts.
pub fn compute_window(nu: &[usize], stat: WindowStat) -> Result<usize> {
    if nu.is_empty() {
        return Err(Error::EmptyInput);
    }
    let window = match stat {
        WindowStat::Mean => nu.iter().sum::<usize>() / nu.len(),
        WindowStat::Max => nu.iter().copied().max().unwrap_or(0),
    };
    if window == 0 {
        return Err(Error::ZeroWindow);
    }
    Ok(window)
}

/// AP identifiers of every fingerprint ordered by descending RSS.
///
/// Rows hold only detected APs and are truncated to the window, so sparse
/// fingerprints have rows shorter than `window`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApRankMatrix {
    rows: Vec<Vec<ApIndex>>,
    window: usize,
    ap_count: usize,
}

impl ApRankMatrix {
    pub fn from_rows(rows: Vec<Vec<ApIndex>>, window: usize, ap_count: usize) -> Result<Self> {
        if window == 0 {
            return Err(Error::ZeroWindow);
        }
        for row in &rows {
            if row.len() > window {
                return Err(Error::InvalidConfig(alloc::format!(
                    "rank row of length {} exceeds window {}",
                    row.len(),
                    window
                )));
            }
            let mut sorted = row.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != row.len() || sorted.last().is_some_and(|&a| a as usize >= ap_count) {
                return Err(Error::InvalidConfig(alloc::string::String::from(
                    "rank rows must hold distinct in-range AP indices",
                )));
            }
        }
        Ok(ApRankMatrix { rows, window, ap_count })
    }

    pub fn rows(&self) -> &[Vec<ApIndex>] {
        &self.rows
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn ap_count(&self) -> usize {
        self.ap_count
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Sorts each row's detected APs by RSS (descending, ties by column) and keeps the first `window`.
pub fn rank_aps(map: &RadioMap, window: usize) -> Result<ApRankMatrix> {
    if window == 0 {
        return Err(Error::ZeroWindow);
    }
    let rows = map
        .fingerprints()
        .iter()
        .map(|fp| {
            let mut detected: Vec<(f64, ApIndex)> =
                fp.rss.iter().enumerate().filter_map(|(j, v)| v.level().map(|level| (level, j as ApIndex))).collect();
            detected.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            detected.truncate(window);
            detected.into_iter().map(|(_, ap)| ap).collect()
        })
        .collect();
    Ok(ApRankMatrix { rows, window, ap_count: map.ap_count() })
}

/// `shared / window × 100`.
pub fn percentage(shared: usize, window: usize) -> f64 {
    shared as f64 / window as f64 * 100.0
}

/// Set-based overlap of two rank rows relative to the window.
pub fn match_percentage(row_i: &[ApIndex], row_l: &[ApIndex], window: usize) -> f64 {
    let shared = row_i.iter().filter(|a| row_l.contains(a)).count();
    percentage(shared, window)
}

/// Best qualifying match percentage per fingerprint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MatchVector {
    pub values: Vec<f64>,
}

impl MatchVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Rows packed as AP bitsets plus ordered-equality classes.
struct PackedRanks {
    words: usize,
    bits: Vec<u64>,
    lens: Vec<usize>,
    class: Vec<usize>,
}

impl PackedRanks {
    fn new(ranks: &ApRankMatrix) -> Self {
        let words = ranks.ap_count.div_ceil(64).max(1);
        let mut bits = vec![0u64; words * ranks.rows.len()];
        for (i, row) in ranks.rows.iter().enumerate() {
            let base = i * words;
            for &ap in row {
                bits[base + ap as usize / 64] |= 1u64 << (ap % 64);
            }
        }
        let mut classes: BTreeMap<&[ApIndex], usize> = BTreeMap::new();
        let class = ranks
            .rows
            .iter()
            .map(|row| {
                let next = classes.len();
                *classes.entry(row.as_slice()).or_insert(next)
            })
            .collect();
        PackedRanks { words, bits, lens: ranks.rows.iter().map(Vec::len).collect(), class }
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    fn shared(&self, i: usize, l: usize) -> usize {
        self.row(i).iter().zip(self.row(l)).map(|(a, b)| (a & b).count_ones() as usize).sum()
    }

    /// Largest qualifying overlap of row `i`, or 0.
    fn best_shared(&self, i: usize, min_shared: usize, window: usize) -> usize {
        let len_i = self.lens[i];
        if len_i < min_shared {
            return 0;
        }
        let mut best = 0;
        for l in 0..self.lens.len() {
            let cap = len_i.min(self.lens[l]);
            if cap <= best || cap < min_shared || self.class[l] == self.class[i] {
                continue;
            }
            let shared = self.shared(i, l);
            if shared >= min_shared && shared > best {
                best = shared;
                if best == window {
                    break;
                }
            }
        }
        best
    }
}

/// Smallest overlap whose percentage is strictly above `rho`, if any.
fn min_qualifying_shared(rho: f64, window: usize) -> Option<usize> {
    (1..=window).find(|&c| percentage(c, window).partial_cmp(&rho) == Some(Ordering::Greater))
}

/// Scores every rank row by its best qualifying match against any other,
/// non-identical rank row.
pub fn compute_match_vector(ranks: &ApRankMatrix, config: &CleanseConfig) -> MatchVector {
    let m = ranks.rows.len();
    let window = ranks.window;
    let Some(min_shared) = min_qualifying_shared(config.rho, window) else {
        return MatchVector { values: vec![0.0; m] };
    };
    let packed = PackedRanks::new(ranks);
    let score = |i: usize| match packed.best_shared(i, min_shared, window) {
        0 => 0.0,
        c => percentage(c, window),
    };

    #[cfg(feature = "std")]
    let values = {
        use rayon::prelude::*;
        (0..m).into_par_iter().map(score).collect()
    };
    #[cfg(not(feature = "std"))]
    let values = (0..m).map(score).collect();

    MatchVector { values }
}

/// Outcome of one cleansing pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanseReport {
    /// Retained row indices in original order.
    pub kept: Vec<usize>,
    pub removed: Vec<usize>,
    pub window: usize,
    pub rho: f64,
    pub window_stat: WindowStat,
    #[serde(rename = "match")]
    pub match_vector: MatchVector,
}

impl CleanseReport {
    pub(crate) fn from_match(match_vector: MatchVector, window: usize, config: &CleanseConfig) -> Result<Self> {
        let (kept, removed): (Vec<usize>, Vec<usize>) =
            (0..match_vector.len()).partition(|&i| match_vector.values[i] > 0.0);
        if kept.is_empty() {
            return Err(Error::AllRemoved { rho: config.rho });
        }
        Ok(CleanseReport { kept, removed, window, rho: config.rho, window_stat: config.window_stat, match_vector })
    }

    /// Fraction of rows retained.
    pub fn retained_ratio(&self) -> f64 {
        self.kept.len() as f64 / (self.kept.len() + self.removed.len()) as f64
    }
}

/// Scores `map` and reports which rows survive, without building the sub-map.
pub fn cleanse_report(map: &RadioMap, config: &CleanseConfig) -> Result<CleanseReport> {
    config.validate()?;
    let window = compute_window(&valid_counts(map), config.window_stat)?;
    let ranks = rank_aps(map, window)?;
    let match_vector = compute_match_vector(&ranks, config);
    CleanseReport::from_match(match_vector, window, config)
}

/// Removes every fingerprint whose best qualifying match is zero.
pub fn clean(map: &RadioMap, config: &CleanseConfig) -> Result<(RadioMap, CleanseReport)> {
    let report = cleanse_report(map, config)?;
    let cleaned = map.select(&report.kept)?;
    Ok((cleaned, report))
}
