//! Fingerprint radio maps and the positive data representation.
//!
//! A [`RadioMap`] is an `m × n` matrix of [`RssValue`]s (one row per
//! fingerprint, one column per access point) with a position label per row.
//! Not-detected cells are an explicit state; the on-disk sentinel (100 dBm in
//! the UJI family of datasets) never survives past loading.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default non-detected marker used by the UJI-style datasets.
pub const DEFAULT_SENTINEL: f64 = 100.0;

/// Default storey height used to synthesize `z` when a map has no height column.
pub const DEFAULT_FLOOR_HEIGHT: f64 = 4.0;

/// A single RSS cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RssValue {
    /// Measured level in dBm.
    Detected(f64),
    NotDetected,
}

impl RssValue {
    pub fn level(self) -> Option<f64> {
        match self {
            RssValue::Detected(v) => Some(v),
            RssValue::NotDetected => None,
        }
    }

    pub fn is_detected(self) -> bool {
        matches!(self, RssValue::Detected(_))
    }
}

/// Plausible range for detected levels, inclusive on both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RssBand {
    pub min: f64,
    pub max: f64,
}

impl Default for RssBand {
    fn default() -> Self {
        RssBand { min: -110.0, max: 0.0 }
    }
}

impl RssBand {
    pub fn contains(&self, v: f64) -> bool {
        v >= self.min && v <= self.max
    }
}

/// Ground-truth label of a fingerprint with `z` already resolved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub floor: i32,
    pub building: Option<i32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fingerprint {
    pub rss: Vec<RssValue>,
    pub x: f64,
    pub y: f64,
    /// Height in meters when the dataset records one.
    pub z: Option<f64>,
    pub floor: i32,
    pub building: Option<i32>,
}

impl Fingerprint {
    /// Label with `z` falling back to `floor × floor_height`.
    pub fn position(&self, floor_height: f64) -> Position {
        Position {
            x: self.x,
            y: self.y,
            z: self.z.unwrap_or(self.floor as f64 * floor_height),
            floor: self.floor,
            building: self.building,
        }
    }

    pub fn valid_count(&self) -> usize {
        self.rss.iter().filter(|v| v.is_detected()).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapMeta {
    pub name: String,
    pub coordinate_units: String,
    pub floor_height: f64,
    /// Marker written for not-detected cells when the map is saved again.
    pub sentinel: f64,
}

impl Default for MapMeta {
    fn default() -> Self {
        MapMeta {
            name: String::new(),
            coordinate_units: String::from("m"),
            floor_height: DEFAULT_FLOOR_HEIGHT,
            sentinel: DEFAULT_SENTINEL,
        }
    }
}

/// Validated `m × n` radio map.
#[derive(Debug, Clone, PartialEq)]
pub struct RadioMap {
    fingerprints: Vec<Fingerprint>,
    ap_ids: Vec<String>,
    pub meta: MapMeta,
}

impl RadioMap {
    /// Builds a map, checking `m ≥ 1`, `n ≥ 1`, unique AP ids and a uniform row width.
    pub fn new(fingerprints: Vec<Fingerprint>, ap_ids: Vec<String>, meta: MapMeta) -> Result<Self> {
        if fingerprints.is_empty() || ap_ids.is_empty() {
            return Err(Error::EmptyMap);
        }
        let mut seen = BTreeSet::new();
        for id in &ap_ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateApId(id.clone()));
            }
        }
        let n = ap_ids.len();
        for (row, fp) in fingerprints.iter().enumerate() {
            if fp.rss.len() != n {
                return Err(Error::RaggedRow { row, expected: n, found: fp.rss.len() });
            }
        }
        Ok(RadioMap { fingerprints, ap_ids, meta })
    }

    /// Rejects detected levels outside `band`.
    pub fn validate_band(&self, band: RssBand) -> Result<()> {
        for (row, fp) in self.fingerprints.iter().enumerate() {
            for (col, v) in fp.rss.iter().enumerate() {
                if let RssValue::Detected(level) = *v {
                    if !band.contains(level) {
                        return Err(Error::RssOutOfBand { row, col, value: level, min: band.min, max: band.max });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn fingerprints(&self) -> &[Fingerprint] {
        &self.fingerprints
    }

    pub fn ap_ids(&self) -> &[String] {
        &self.ap_ids
    }

    /// Number of fingerprints `m`.
    pub fn len(&self) -> usize {
        self.fingerprints.len()
    }

    /// Always false for a validated map; provided for API symmetry.
    pub fn is_empty(&self) -> bool {
        self.fingerprints.is_empty()
    }

    /// Number of access points `n`.
    pub fn ap_count(&self) -> usize {
        self.ap_ids.len()
    }

    /// Sub-map with the given rows, in the given order.
    pub fn select(&self, rows: &[usize]) -> Result<RadioMap> {
        if rows.is_empty() {
            return Err(Error::EmptyMap);
        }
        let fingerprints = rows.iter().map(|&r| self.fingerprints[r].clone()).collect();
        Ok(RadioMap { fingerprints, ap_ids: self.ap_ids.clone(), meta: self.meta.clone() })
    }

    pub fn positions(&self) -> Vec<Position> {
        let h = self.meta.floor_height;
        self.fingerprints.iter().map(|fp| fp.position(h)).collect()
    }

    /// True when more than one floor label occurs.
    pub fn is_multi_floor(&self) -> bool {
        let first = self.fingerprints[0].floor;
        self.fingerprints.iter().any(|fp| fp.floor != first)
    }

    /// True when every row carries a building label and more than one occurs.
    pub fn is_multi_building(&self) -> bool {
        let mut ids = self.fingerprints.iter().map(|fp| fp.building);
        match ids.next() {
            Some(Some(first)) => {
                let mut multi = false;
                for b in ids {
                    match b {
                        Some(b) if b != first => multi = true,
                        Some(_) => {}
                        None => return false,
                    }
                }
                multi
            }
            _ => false,
        }
    }

    /// Smallest detected level in the map.
    pub fn min_detected(&self) -> Option<f64> {
        self.detected_levels().fold(None, |acc, v| match acc {
            Some(m) if m <= v => Some(m),
            _ => Some(v),
        })
    }

    pub fn max_detected(&self) -> Option<f64> {
        self.detected_levels().fold(None, |acc, v| match acc {
            Some(m) if m >= v => Some(m),
            _ => Some(v),
        })
    }

    fn detected_levels(&self) -> impl Iterator<Item = f64> + '_ {
        self.fingerprints.iter().flat_map(|fp| fp.rss.iter().filter_map(|v| v.level()))
    }
}

/// Per-row count of detected cells (`ν`).
pub fn valid_counts(map: &RadioMap) -> Vec<usize> {
    map.fingerprints.iter().map(Fingerprint::valid_count).collect()
}

/// Affine shift `v ↦ v − v_min + 1` learned on a training map.
///
/// Values below the learned minimum (test data) clamp to 1 so that every
/// detected cell stays strictly above the not-detected 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositiveTransform {
    pub min_detected: f64,
}

impl PositiveTransform {
    pub fn fit(train: &RadioMap) -> Result<Self> {
        train.min_detected().map(|min_detected| PositiveTransform { min_detected }).ok_or(Error::NoDetectedValues)
    }

    pub fn value(&self, v: RssValue) -> f64 {
        match v {
            RssValue::Detected(level) => {
                let shifted = level - self.min_detected + 1.0;
                if shifted < 1.0 {
                    1.0
                } else {
                    shifted
                }
            }
            RssValue::NotDetected => 0.0,
        }
    }

    pub fn apply(&self, map: &RadioMap) -> PositiveMap {
        let n = map.ap_count();
        let mut values = Vec::with_capacity(map.len() * n);
        for fp in map.fingerprints() {
            values.extend(fp.rss.iter().map(|&v| self.value(v)));
        }
        PositiveMap { values, ap_count: n, labels: map.positions(), transform: *self }
    }
}

/// Dense row-major matrix of transformed values plus resolved labels.
#[derive(Debug, Clone, PartialEq)]
pub struct PositiveMap {
    values: Vec<f64>,
    ap_count: usize,
    labels: Vec<Position>,
    pub transform: PositiveTransform,
}

impl PositiveMap {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn ap_count(&self) -> usize {
        self.ap_count
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.ap_count..(i + 1) * self.ap_count]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.ap_count)
    }

    pub fn labels(&self) -> &[Position] {
        &self.labels
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Fits the positive transform on `map` and applies it to the same map.
pub fn to_positive(map: &RadioMap) -> Result<PositiveMap> {
    Ok(PositiveTransform::fit(map)?.apply(map))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use alloc::format;
    use alloc::vec;

    pub(crate) fn fp(rss: &[Option<f64>]) -> Fingerprint {
        Fingerprint {
            rss: rss.iter().map(|v| v.map_or(RssValue::NotDetected, RssValue::Detected)).collect(),
            x: 0.0,
            y: 0.0,
            z: None,
            floor: 0,
            building: None,
        }
    }

    pub(crate) fn ids(n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("AP{i:03}")).collect()
    }

    pub(crate) fn map_of(rows: &[&[Option<f64>]]) -> RadioMap {
        let n = rows[0].len();
        RadioMap::new(rows.iter().map(|r| fp(r)).collect(), ids(n), MapMeta::default()).unwrap()
    }

    #[test]
    fn rejects_empty_and_duplicates() {
        assert_eq!(RadioMap::new(vec![], ids(2), MapMeta::default()), Err(Error::EmptyMap));
        let rows = vec![fp(&[None, None])];
        let dup = vec![String::from("A"), String::from("A")];
        assert_eq!(RadioMap::new(rows, dup, MapMeta::default()), Err(Error::DuplicateApId(String::from("A"))));
    }

    #[test]
    fn rejects_ragged_rows() {
        let rows = vec![fp(&[None, None]), fp(&[None])];
        assert_eq!(
            RadioMap::new(rows, ids(2), MapMeta::default()),
            Err(Error::RaggedRow { row: 1, expected: 2, found: 1 })
        );
    }

    #[test]
    fn band_validation() {
        let map = map_of(&[&[Some(-60.0), Some(-120.0)]]);
        assert!(matches!(map.validate_band(RssBand::default()), Err(Error::RssOutOfBand { col: 1, .. })));
        assert!(map.validate_band(RssBand { min: -130.0, max: 0.0 }).is_ok());
    }

    #[test]
    fn valid_counts_examples() {
        let map = map_of(&[&[None, None, None], &[Some(-60.0), None, Some(-50.0)]]);
        assert_eq!(valid_counts(&map), vec![0, 2]);
    }

    #[test]
    fn positive_transform_example() {
        let map = map_of(&[&[Some(-90.0), Some(-60.0), None]]);
        let pos = to_positive(&map).unwrap();
        assert_eq!(pos.row(0), &[1.0, 31.0, 0.0]);
        assert_eq!(pos.transform.min_detected, -90.0);
    }

    #[test]
    fn positive_transform_all_undetected() {
        let map = map_of(&[&[None, None], &[None, None]]);
        assert_eq!(to_positive(&map), Err(Error::NoDetectedValues));
    }

    #[test]
    fn test_values_below_training_minimum_clamp_to_one() {
        let train = map_of(&[&[Some(-80.0), Some(-40.0)]]);
        let test = map_of(&[&[Some(-95.0), None]]);
        let t = PositiveTransform::fit(&train).unwrap();
        assert_eq!(t.apply(&test).row(0), &[1.0, 0.0]);
    }

    #[test]
    fn z_falls_back_to_floor_height() {
        let mut f = fp(&[None]);
        f.floor = 3;
        assert_eq!(f.position(4.0).z, 12.0);
        f.z = Some(7.5);
        assert_eq!(f.position(4.0).z, 7.5);
    }

    #[test]
    fn building_and_floor_flags() {
        let mut a = fp(&[Some(-50.0)]);
        let mut b = a.clone();
        b.floor = 1;
        let map = RadioMap::new(vec![a.clone(), b.clone()], ids(1), MapMeta::default()).unwrap();
        assert!(map.is_multi_floor());
        assert!(!map.is_multi_building());
        a.building = Some(0);
        b.building = Some(2);
        let map = RadioMap::new(vec![a, b], ids(1), MapMeta::default()).unwrap();
        assert!(map.is_multi_building());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn cell() -> impl Strategy<Value = Option<f64>> {
            prop_oneof![1 => Just(None), 3 => (-110i32..=0).prop_map(|v| Some(v as f64))]
        }

        proptest! {
            #[test]
            fn positive_transform_preserves_order_and_detection(
                cells in proptest::collection::vec(cell(), 50)
            ) {
                let rows: Vec<&[Option<f64>]> = cells.chunks(5).collect();
                let map = map_of(&rows);
                let Ok(pos) = to_positive(&map) else {
                    prop_assert!(cells.iter().all(|c| c.is_none()));
                    return Ok(());
                };
                let flat: Vec<f64> = pos.values().to_vec();
                for (i, a) in cells.iter().enumerate() {
                    prop_assert_eq!(a.is_some(), flat[i] > 0.0);
                    if a.is_none() {
                        prop_assert_eq!(flat[i], 0.0);
                    }
                    for (j, b) in cells.iter().enumerate() {
                        if let (Some(a), Some(b)) = (a, b) {
                            if a > b {
                                prop_assert!(flat[i] > flat[j]);
                            }
                        }
                    }
                }
            }

            #[test]
            fn valid_plus_undetected_is_width(cells in proptest::collection::vec(cell(), 40)) {
                let rows: Vec<&[Option<f64>]> = cells.chunks(8).collect();
                let map = map_of(&rows);
                for (i, nu) in valid_counts(&map).into_iter().enumerate() {
                    let nd = map.fingerprints()[i].rss.iter().filter(|v| !v.is_detected()).count();
                    prop_assert_eq!(nu + nd, map.ap_count());
                }
            }
        }
    }
}
