//! Brute-force k-NN matcher over a positive-representation radio map.
//!
//! Coordinates are the mean of the `k` nearest training rows; floor and
//! building are the majority label among them, with ties resolved in favour
//! of the nearer neighbour. Distance ties resolve to the lower training row.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::metrics::Clock;
use crate::radiomap::{Position, PositiveMap};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distance {
    #[default]
    Manhattan,
}

impl Distance {
    pub fn eval(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Distance::Manhattan => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
        }
    }
}

/// Linear scan flavour. Both produce bit-identical neighbours.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanStrategy {
    Exhaustive,
    /// Stops accumulating a row once its partial sum can no longer enter the top k.
    #[default]
    EarlyAbandon,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnnConfig {
    pub k: usize,
    pub distance: Distance,
    #[serde(default)]
    pub scan: ScanStrategy,
}

impl Default for KnnConfig {
    fn default() -> Self {
        KnnConfig { k: 1, distance: Distance::Manhattan, scan: ScanStrategy::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositionEstimate {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub floor: i32,
    pub building: Option<i32>,
    /// Seconds spent on this query; zero when not timed.
    pub query_time: f64,
    /// Training row of the nearest neighbour.
    pub nearest: usize,
}

/// A fitted k-NN model. Immutable; `predict` is safe to call concurrently.
#[derive(Debug, Clone)]
pub struct Positioner {
    train: PositiveMap,
    config: KnnConfig,
}

pub fn fit(train: PositiveMap, config: KnnConfig) -> Result<Positioner> {
    if train.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if config.k == 0 {
        return Err(Error::InvalidConfig(alloc::string::String::from("k must be at least 1")));
    }
    if config.k > train.len() {
        return Err(Error::KTooLarge { k: config.k, train: train.len() });
    }
    Ok(Positioner { train, config })
}

impl Positioner {
    pub fn config(&self) -> &KnnConfig {
        &self.config
    }

    pub fn train(&self) -> &PositiveMap {
        &self.train
    }

    pub fn train_size(&self) -> usize {
        self.train.len()
    }

    /// The `k` nearest training rows, nearest first.
    pub fn neighbors(&self, query: &[f64]) -> Result<Vec<Neighbor>> {
        let n = self.train.ap_count();
        if query.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: query.len() });
        }
        let k = self.config.k;
        let mut best: Vec<Neighbor> = Vec::with_capacity(k + 1);
        for (index, row) in self.train.rows().enumerate() {
            let bound = if best.len() == k { best[k - 1].distance } else { f64::INFINITY };
            let distance = match self.config.scan {
                ScanStrategy::Exhaustive => self.config.distance.eval(query, row),
                ScanStrategy::EarlyAbandon => match self.bounded_distance(query, row, bound) {
                    Some(d) => d,
                    None => continue,
                },
            };
            if distance < bound {
                let at = best.partition_point(|nb| nb.distance <= distance);
                best.insert(at, Neighbor { index, distance });
                best.truncate(k);
            }
        }
        Ok(best)
    }

    /// Same summation order as [`Distance::eval`]; gives up once the partial sum reaches `bound`.
    fn bounded_distance(&self, query: &[f64], row: &[f64], bound: f64) -> Option<f64> {
        const CHECK_EVERY: usize = 16;
        let Distance::Manhattan = self.config.distance;
        let mut sum = 0.0;
        for (qc, rc) in query.chunks(CHECK_EVERY).zip(row.chunks(CHECK_EVERY)) {
            for (x, y) in qc.iter().zip(rc) {
                sum += (x - y).abs();
            }
            if sum >= bound {
                return None;
            }
        }
        Some(sum)
    }

    pub fn predict(&self, query: &[f64]) -> Result<PositionEstimate> {
        let neighbors = self.neighbors(query)?;
        Ok(self.aggregate(&neighbors))
    }

    pub fn predict_timed<C: Clock>(&self, query: &[f64], clock: &C) -> Result<PositionEstimate> {
        let start = clock.now();
        let mut estimate = self.predict(query)?;
        estimate.query_time = clock.now() - start;
        Ok(estimate)
    }

    /// Predicts every row of `queries`; parallel over queries under `std`.
    pub fn predict_batch<C: Clock + Sync>(&self, queries: &PositiveMap, clock: &C) -> Result<Vec<PositionEstimate>> {
        let run = |i: usize| self.predict_timed(queries.row(i), clock);
        #[cfg(feature = "std")]
        {
            use rayon::prelude::*;
            (0..queries.len()).into_par_iter().map(run).collect()
        }
        #[cfg(not(feature = "std"))]
        {
            (0..queries.len()).map(run).collect()
        }
    }

    fn aggregate(&self, neighbors: &[Neighbor]) -> PositionEstimate {
        let labels = self.train.labels();
        let picked: Vec<&Position> = neighbors.iter().map(|nb| &labels[nb.index]).collect();
        let k = picked.len() as f64;
        let mean = |f: fn(&Position) -> f64| picked.iter().map(|p| f(p)).sum::<f64>() / k;
        PositionEstimate {
            x: mean(|p| p.x),
            y: mean(|p| p.y),
            z: mean(|p| p.z),
            floor: majority(picked.iter().map(|p| p.floor)),
            building: majority(picked.iter().map(|p| p.building)),
            query_time: 0.0,
            nearest: neighbors[0].index,
        }
    }
}

/// Most frequent label; among equally frequent labels the first seen wins.
fn majority<T: PartialEq + Copy>(labels: impl Iterator<Item = T>) -> T {
    let labels: Vec<T> = labels.collect();
    let mut winner = labels[0];
    let mut winner_count = 0;
    for (i, &candidate) in labels.iter().enumerate() {
        if labels[..i].contains(&candidate) {
            continue;
        }
        let count = labels.iter().filter(|&&l| l == candidate).count();
        if count > winner_count {
            winner = candidate;
            winner_count = count;
        }
    }
    winner
}
