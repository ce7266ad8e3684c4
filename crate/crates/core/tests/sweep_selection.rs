use cleandb_core::cleanse::{clean, CleanseConfig, WindowStat};
use cleandb_core::metrics::{evaluate, HitRates, NullClock};
use cleandb_core::positioning::{fit, KnnConfig};
use cleandb_core::radiomap::{Fingerprint, MapMeta, PositiveTransform, RadioMap, RssValue};
use cleandb_core::sweep::{sweep, SweepConfig};
use cleandb_core::Error;

const APS: usize = 60;

/// Fingerprint hearing `aps` with levels descending in list order.
fn row(aps: &[usize], x: f64) -> Fingerprint {
    let mut rss = vec![RssValue::NotDetected; APS];
    for (rank, &ap) in aps.iter().enumerate() {
        rss[ap] = RssValue::Detected(-30.0 - rank as f64);
    }
    Fingerprint { rss, x, y: 0.0, z: None, floor: 0, building: None }
}

fn ids() -> Vec<String> {
    (1..=APS).map(|i| format!("AP{i:03}")).collect()
}

fn swapped_head(mut aps: Vec<usize>) -> Vec<usize> {
    aps.swap(0, 1);
    aps
}

/// Two tight clusters, a bridging row `U` whose best match is 9/22 ≈ 40.9 %,
/// and two filler rows whose best matches are 8/22 and 3/22.
fn toy() -> (RadioMap, RadioMap) {
    let a: Vec<usize> = (0..22).collect();
    let b: Vec<usize> = (22..44).collect();
    let u: Vec<usize> = (0..9).chain(22..31).chain(44..48).collect();
    let h: Vec<usize> = (9..17).chain(31..39).chain(48..54).collect();
    let h2: Vec<usize> = vec![17, 18, 19, 39, 54, 55, 56, 57, 58, 59];
    let train = RadioMap::new(
        vec![
            row(&a, 0.0),
            row(&swapped_head(a.clone()), 0.0),
            row(&b, 60.0),
            row(&swapped_head(b.clone()), 60.0),
            row(&u, 30.0),
            row(&h, 5.0),
            row(&h2, 10.0),
        ],
        ids(),
        MapMeta::default(),
    )
    .unwrap();
    let test = RadioMap::new(vec![row(&a, 0.0), row(&b, 60.0), row(&u, 30.0)], ids(), MapMeta::default()).unwrap();
    (train, test)
}

#[test]
fn picks_last_threshold_before_harm() {
    let (train, test) = toy();

    // Exhaustive integer evaluation: feasible thresholds and their removal counts.
    let transform = PositiveTransform::fit(&train).unwrap();
    let tp = transform.apply(&test);
    let mut best: Option<(u32, usize)> = None;
    for rho in 0..=100u32 {
        let cfg = CleanseConfig::new(rho as f64, WindowStat::Max).unwrap();
        let (removed, error) = match clean(&train, &cfg) {
            Ok((cleaned, report)) => {
                let model = fit(transform.apply(&cleaned), KnnConfig::default()).unwrap();
                let e = evaluate(&model, &tp, HitRates::default(), &NullClock).unwrap();
                (report.removed.len(), e.metrics.mean_3d)
            }
            Err(Error::AllRemoved { .. }) => (train.len(), f64::INFINITY),
            Err(e) => panic!("{e}"),
        };
        let expected_removed = match rho {
            0..=13 => 0,
            14..=36 => 1,
            37..=40 => 2,
            41..=99 => 3,
            _ => 7,
        };
        assert_eq!(removed, expected_removed, "rho {rho}");
        if error <= 0.0 && best.is_none_or(|(_, r)| removed >= r) {
            best = Some((rho, removed));
        }
    }
    assert_eq!(best, Some((40, 2)));

    let cfg = SweepConfig { stats: vec![WindowStat::Max], ..SweepConfig::default() };
    let result = sweep(&train, &test, &cfg, &NullClock).unwrap();
    assert_eq!(result.chosen_rho, 40.0);
    assert_eq!(result.chosen_window_stat, WindowStat::Max);
    assert!(!result.no_safe_cleansing);
    assert_eq!(result.chosen().removed, 2);
    assert!(result.chosen().feasible);

    let refined: Vec<f64> = result.records.iter().filter(|r| r.refined).map(|r| r.rho).collect();
    assert_eq!(refined, vec![41.0, 42.0, 43.0, 44.0]);
    assert!(result.records.windows(2).all(|w| w[0].rho < w[1].rho));
}

#[test]
fn refined_thresholds_sit_between_grid_points() {
    let (train, test) = toy();
    for step in [5u32, 7, 10, 30] {
        let cfg = SweepConfig { grid_step: step, ..SweepConfig::default() };
        let result = sweep(&train, &test, &cfg, &NullClock).unwrap();
        for r in result.records.iter().filter(|r| r.refined) {
            assert!(!(r.rho as u32).is_multiple_of(step), "refined rho {} lies on the grid", r.rho);
        }
        let chosen = result.chosen();
        if result.records.iter().any(|r| r.feasible) {
            assert!(chosen.feasible);
        }
        assert_eq!(result, sweep(&train, &test, &cfg, &NullClock).unwrap());
    }
}

#[test]
fn flags_maps_where_every_threshold_hurts() {
    let a = vec![0usize, 1];
    let train = RadioMap::new(
        vec![row(&a, 0.0), row(&swapped_head(a.clone()), 0.0), row(&[2], 10.0)],
        ids(),
        MapMeta::default(),
    )
    .unwrap();
    let test = RadioMap::new(vec![row(&a, 0.0), row(&[2], 10.0)], ids(), MapMeta::default()).unwrap();
    let result = sweep(&train, &test, &SweepConfig::default(), &NullClock).unwrap();
    assert!(result.no_safe_cleansing);
    assert_eq!(result.chosen_rho, 0.0);
    assert!(result.records.iter().all(|r| !r.feasible));
}
