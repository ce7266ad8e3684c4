//! Synthetic radio maps from a log-distance path-loss model, and a literal
//! reference implementation of the cleansing loop used as a test oracle.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::cleanse::{CleanseConfig, CleanseReport, MatchVector, WindowStat};
use crate::radiomap::{Fingerprint, MapMeta, RadioMap, RssValue, DEFAULT_FLOOR_HEIGHT};
use crate::{Error, Result};

/// Reference distance of the path-loss model, meters.
pub const REFERENCE_DISTANCE: f64 = 1.0;

const STREAM_LAYOUT: u64 = 0;
const STREAM_SURVEY: u64 = 1;
const STREAM_OUTLIERS: u64 = 2;
const STREAM_QUERIES: u64 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub ap_count: usize,
    /// Extent along x, meters.
    pub area_width: f64,
    /// Extent along y, meters.
    pub area_depth: f64,
    /// APs are placed up to this far outside the surveyed area, meters.
    pub ap_margin: f64,
    pub floors: usize,
    pub floor_height: f64,
    pub grid_spacing: f64,
    /// RSS at the reference distance, dBm.
    pub tx_power: f64,
    pub path_loss_exponent: f64,
    pub shadowing_sigma: f64,
    /// Levels below this are not detected, dBm.
    pub detection_threshold: f64,
    /// Round levels to whole dBm like commodity receivers do.
    pub quantize: bool,
    pub outlier_count: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            ap_count: 200,
            area_width: 60.0,
            area_depth: 30.0,
            ap_margin: 20.0,
            floors: 2,
            floor_height: DEFAULT_FLOOR_HEIGHT,
            grid_spacing: 2.0,
            tx_power: -30.0,
            path_loss_exponent: 4.0,
            shadowing_sigma: 0.0,
            detection_threshold: -80.0,
            quantize: true,
            outlier_count: 0,
            seed: 7,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(String::from(msg)));
        if self.ap_count == 0 || self.floors == 0 {
            return bad("ap_count and floors must be at least 1");
        }
        if !(self.area_width > 0.0 && self.area_depth > 0.0 && self.grid_spacing > 0.0) {
            return bad("area and grid spacing must be positive");
        }
        if !(self.ap_margin >= 0.0 && self.ap_margin.is_finite()) {
            return bad("ap_margin must be a finite non-negative number");
        }
        if !(self.shadowing_sigma >= 0.0 && self.shadowing_sigma.is_finite()) {
            return bad("shadowing_sigma must be a finite non-negative number");
        }
        if !(self.floor_height >= 0.0 && self.path_loss_exponent > 0.0) {
            return bad("floor_height must be non-negative and path_loss_exponent positive");
        }
        if !(self.tx_power <= 0.0 && self.detection_threshold >= -110.0 && self.detection_threshold <= self.tx_power) {
            return bad("levels must satisfy -110 <= detection_threshold <= tx_power <= 0");
        }
        Ok(())
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

/// Log-distance model: `P0 − 10·n·log10(d / d0) + noise`, with `d` clamped to `d0`.
pub fn path_loss_rss(distance: f64, tx_power: f64, exponent: f64, noise: f64) -> f64 {
    let d = distance.max(REFERENCE_DISTANCE);
    tx_power - 10.0 * exponent * libm::log10(d / REFERENCE_DISTANCE) + noise
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct AccessPoint {
    x: f64,
    y: f64,
    z: f64,
}

/// Clean survey, poisoned survey and where the injected rows sit in the latter.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthMaps {
    pub clean: RadioMap,
    pub poisoned: RadioMap,
    /// Row indices of injected outliers within `poisoned`.
    pub outliers: Vec<usize>,
}

struct Survey<'a> {
    config: &'a SynthConfig,
    aps: Vec<AccessPoint>,
    noise: Option<Normal<f64>>,
}

impl<'a> Survey<'a> {
    fn new(config: &'a SynthConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = config.rng(STREAM_LAYOUT);
        let aps = (0..config.ap_count)
            .map(|_| AccessPoint {
                x: rng.random_range(-config.ap_margin..=config.area_width + config.ap_margin),
                y: rng.random_range(-config.ap_margin..=config.area_depth + config.ap_margin),
                z: rng.random_range(0..config.floors) as f64 * config.floor_height,
            })
            .collect();
        let noise = if config.shadowing_sigma > 0.0 {
            Some(Normal::new(0.0, config.shadowing_sigma).map_err(|e| Error::InvalidConfig(format!("{e}")))?)
        } else {
            None
        };
        Ok(Survey { config, aps, noise })
    }

    fn ap_ids(&self) -> Vec<String> {
        (1..=self.aps.len()).map(|i| format!("AP{i:03}")).collect()
    }

    fn meta(&self) -> MapMeta {
        MapMeta { name: String::from("synthetic"), floor_height: self.config.floor_height, ..MapMeta::default() }
    }

    fn measure<R: Rng>(&self, x: f64, y: f64, floor: usize, rng: &mut R) -> Fingerprint {
        let c = self.config;
        let z = floor as f64 * c.floor_height;
        let rss = self
            .aps
            .iter()
            .map(|ap| {
                let (dx, dy, dz) = (ap.x - x, ap.y - y, ap.z - z);
                let d = libm::sqrt(dx * dx + dy * dy + dz * dz);
                let noise = self.noise.map_or(0.0, |n| n.sample(rng));
                let mut level = path_loss_rss(d, c.tx_power, c.path_loss_exponent, noise);
                if c.quantize {
                    level = libm::round(level);
                }
                if level < c.detection_threshold {
                    RssValue::NotDetected
                } else {
                    RssValue::Detected(level.min(c.tx_power))
                }
            })
            .collect();
        Fingerprint { rss, x, y, z: None, floor: floor as i32, building: None }
    }

    fn grid(&self) -> Vec<(f64, f64, usize)> {
        let c = self.config;
        let nx = libm::floor(c.area_width / c.grid_spacing) as usize + 1;
        let ny = libm::floor(c.area_depth / c.grid_spacing) as usize + 1;
        let mut points = Vec::with_capacity(nx * ny * c.floors);
        for floor in 0..c.floors {
            for iy in 0..ny {
                for ix in 0..nx {
                    points.push((ix as f64 * c.grid_spacing, iy as f64 * c.grid_spacing, floor));
                }
            }
        }
        points
    }

    fn outlier<R: Rng>(&self, typical_len: usize, rng: &mut R) -> Fingerprint {
        let c = self.config;
        let n = self.aps.len();
        let k = typical_len.clamp(1, n);
        let mut rss = alloc::vec![RssValue::NotDetected; n];
        let mut placed = 0;
        while placed < k {
            let j = rng.random_range(0..n);
            if rss[j].is_detected() {
                continue;
            }
            let level = rng.random_range(c.detection_threshold..=c.tx_power);
            rss[j] = RssValue::Detected(if c.quantize { libm::round(level) } else { level });
            placed += 1;
        }
        Fingerprint {
            rss,
            x: rng.random_range(0.0..=c.area_width),
            y: rng.random_range(0.0..=c.area_depth),
            z: None,
            floor: rng.random_range(0..c.floors) as i32,
            building: None,
        }
    }
}

/// Surveys a regular grid on every floor, then appends `outlier_count`
/// fingerprints whose detected APs and levels are uniformly random.
pub fn generate(config: &SynthConfig) -> Result<SynthMaps> {
    let survey = Survey::new(config)?;
    let mut rng = config.rng(STREAM_SURVEY);
    let clean_rows: Vec<Fingerprint> =
        survey.grid().into_iter().map(|(x, y, f)| survey.measure(x, y, f, &mut rng)).collect();

    let mut orng = config.rng(STREAM_OUTLIERS);
    let mut poisoned_rows = clean_rows.clone();
    let mut outliers = Vec::with_capacity(config.outlier_count);
    for _ in 0..config.outlier_count {
        let template = &clean_rows[orng.random_range(0..clean_rows.len())];
        outliers.push(poisoned_rows.len());
        poisoned_rows.push(survey.outlier(template.valid_count(), &mut orng));
    }

    let clean = RadioMap::new(clean_rows, survey.ap_ids(), survey.meta())?;
    let poisoned = RadioMap::new(poisoned_rows, survey.ap_ids(), survey.meta())?;
    Ok(SynthMaps { clean, poisoned, outliers })
}

/// `count` fingerprints at uniformly random positions, measured against the
/// same AP layout as [`generate`] with the same config.
pub fn generate_queries(config: &SynthConfig, count: usize, query_seed: u64) -> Result<RadioMap> {
    let survey = Survey::new(config)?;
    let mut rng = config.rng(STREAM_QUERIES.wrapping_add(query_seed));
    let rows = (0..count)
        .map(|_| {
            let x = rng.random_range(0.0..=config.area_width);
            let y = rng.random_range(0.0..=config.area_depth);
            let floor = rng.random_range(0..config.floors);
            survey.measure(x, y, floor, &mut rng)
        })
        .collect();
    RadioMap::new(rows, survey.ap_ids(), survey.meta())
}

/// Naive transcription of the cleansing loop: explicit counting, an
/// insertion sort per row and a triple loop for the intersections.
pub fn oracle_clean(map: &RadioMap, config: &CleanseConfig) -> Result<CleanseReport> {
    config.validate()?;
    let rows = map.fingerprints();
    let m = rows.len();

    let mut nu = Vec::with_capacity(m);
    for fp in rows {
        let mut count = 0usize;
        for v in &fp.rss {
            if let RssValue::Detected(_) = v {
                count += 1;
            }
        }
        nu.push(count);
    }
    let window = match config.window_stat {
        WindowStat::Mean => {
            let mut total = 0usize;
            for c in &nu {
                total += c;
            }
            total / m
        }
        WindowStat::Max => {
            let mut best = 0usize;
            for &c in &nu {
                if c > best {
                    best = c;
                }
            }
            best
        }
    };
    if window == 0 {
        return Err(Error::ZeroWindow);
    }

    let mut ranked: Vec<Vec<usize>> = Vec::with_capacity(m);
    for fp in rows {
        let mut entries: Vec<(f64, usize)> = Vec::new();
        for (j, v) in fp.rss.iter().enumerate() {
            if let RssValue::Detected(level) = v {
                entries.push((*level, j));
            }
        }
        for a in 1..entries.len() {
            let mut b = a;
            while b > 0 {
                let (lp, jp) = entries[b - 1];
                let (lc, jc) = entries[b];
                if lc > lp || (lc == lp && jc < jp) {
                    entries.swap(b - 1, b);
                    b -= 1;
                } else {
                    break;
                }
            }
        }
        let mut row = Vec::new();
        for (k, (_, j)) in entries.iter().enumerate() {
            if k < window {
                row.push(*j);
            }
        }
        ranked.push(row);
    }

    let mut scores = Vec::with_capacity(m);
    for i in 0..m {
        let mut best = 0.0f64;
        for l in 0..m {
            let mut shared = 0usize;
            for a in &ranked[i] {
                for b in &ranked[l] {
                    if a == b {
                        shared += 1;
                    }
                }
            }
            let candidate = shared as f64 / window as f64 * 100.0;
            if ranked[i] != ranked[l] && best < candidate && candidate > config.rho {
                best = candidate;
            }
        }
        scores.push(best);
    }

    let mut kept = Vec::new();
    let mut removed = Vec::new();
    for (i, s) in scores.iter().enumerate() {
        if *s == 0.0 {
            removed.push(i);
        } else {
            kept.push(i);
        }
    }
    if kept.is_empty() {
        return Err(Error::AllRemoved { rho: config.rho });
    }
    Ok(CleanseReport {
        kept,
        removed,
        window,
        rho: config.rho,
        window_stat: config.window_stat,
        match_vector: MatchVector { values: scores },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cleanse::cleanse_report;
    use crate::radiomap::tests::map_of;

    #[test]
    fn path_loss_identities() {
        assert_eq!(path_loss_rss(REFERENCE_DISTANCE, -30.0, 2.0, 0.0), -30.0);
        assert_eq!(path_loss_rss(10.0, -30.0, 2.0, 0.0), -50.0);
        assert_eq!(path_loss_rss(0.2, -30.0, 2.0, 0.0), -30.0);
    }

    #[test]
    fn no_outliers_means_identical_maps() {
        let maps = generate(&SynthConfig::default()).unwrap();
        assert_eq!(maps.clean, maps.poisoned);
        assert!(maps.outliers.is_empty());
    }

    #[test]
    fn reproducible_under_seed() {
        let cfg = SynthConfig { outlier_count: 5, shadowing_sigma: 3.0, ..SynthConfig::default() };
        assert_eq!(generate(&cfg).unwrap(), generate(&cfg).unwrap());
        let other = SynthConfig { seed: cfg.seed + 1, ..cfg.clone() };
        assert_ne!(generate(&cfg).unwrap().poisoned, generate(&other).unwrap().poisoned);
        assert_eq!(generate_queries(&cfg, 10, 1).unwrap(), generate_queries(&cfg, 10, 1).unwrap());
    }

    #[test]
    fn outliers_are_appended() {
        let cfg = SynthConfig { outlier_count: 4, ..SynthConfig::default() };
        let maps = generate(&cfg).unwrap();
        let m = maps.clean.len();
        assert_eq!(maps.outliers, (m..m + 4).collect::<Vec<_>>());
        assert_eq!(&maps.poisoned.fingerprints()[..m], maps.clean.fingerprints());
        for &o in &maps.outliers {
            assert!(maps.poisoned.fingerprints()[o].valid_count() >= 1);
        }
    }

    #[test]
    fn generated_levels_are_plausible() {
        let maps = generate(&SynthConfig { shadowing_sigma: 6.0, outlier_count: 3, ..SynthConfig::default() }).unwrap();
        maps.poisoned.validate_band(crate::radiomap::RssBand::default()).unwrap();
    }

    #[test]
    fn invalid_configs() {
        for cfg in [
            SynthConfig { ap_count: 0, ..SynthConfig::default() },
            SynthConfig { floors: 0, ..SynthConfig::default() },
            SynthConfig { shadowing_sigma: -1.0, ..SynthConfig::default() },
            SynthConfig { grid_spacing: 0.0, ..SynthConfig::default() },
            SynthConfig { tx_power: 5.0, ..SynthConfig::default() },
        ] {
            assert!(matches!(generate(&cfg), Err(Error::InvalidConfig(_))));
        }
    }

    #[test]
    fn oracle_agrees_on_toy_map() {
        let map = map_of(&[
            &[Some(-40.0), Some(-50.0), Some(-60.0), None, None],
            &[Some(-45.0), Some(-50.0), None, Some(-70.0), None],
            &[Some(-40.0), None, Some(-55.0), Some(-65.0), None],
            &[None, None, None, None, Some(-30.0)],
        ]);
        let cfg = CleanseConfig::new(10.0, WindowStat::Max).unwrap();
        let report = oracle_clean(&map, &cfg).unwrap();
        assert_eq!(report.removed, vec![3]);
        assert_eq!(report, cleanse_report(&map, &cfg).unwrap());
        let all = CleanseConfig::new(100.0, WindowStat::Max).unwrap();
        assert_eq!(oracle_clean(&map, &all), cleanse_report(&map, &all));
    }
}
