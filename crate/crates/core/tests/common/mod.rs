#![allow(dead_code)]

use cleandb_core::radiomap::{Fingerprint, MapMeta, RadioMap, RssValue};
use rand::Rng;

pub fn ap_ids(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("AP{i:03}")).collect()
}

/// Random map with integer dBm levels (so RSS ties are common) and a
/// per-map detection density.
pub fn random_map<R: Rng>(rng: &mut R, max_rows: usize, max_aps: usize) -> RadioMap {
    let m = rng.random_range(1..=max_rows);
    let n = rng.random_range(1..=max_aps);
    let density = rng.random_range(0.05..0.9);
    let rows = (0..m)
        .map(|_| {
            let rss = (0..n)
                .map(|_| {
                    if rng.random_bool(density) {
                        RssValue::Detected(rng.random_range(-100..=-30) as f64)
                    } else {
                        RssValue::NotDetected
                    }
                })
                .collect();
            Fingerprint {
                rss,
                x: rng.random_range(0.0..50.0),
                y: rng.random_range(0.0..50.0),
                z: None,
                floor: rng.random_range(0..3),
                building: None,
            }
        })
        .collect();
    RadioMap::new(rows, ap_ids(n), MapMeta::default()).unwrap()
}

/// A map with at least one detected value.
pub fn random_detected_map<R: Rng>(rng: &mut R, max_rows: usize, max_aps: usize) -> RadioMap {
    loop {
        let map = random_map(rng, max_rows, max_aps);
        if map.min_detected().is_some() {
            return map;
        }
    }
}
