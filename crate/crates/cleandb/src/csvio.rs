//! Radio-map CSV files.
//!
//! Header row first. AP columns are recognised by name prefix (see
//! [`ColumnSchema`]); label columns by exact name; anything else is ignored.
//! Cells equal to the sentinel become not-detected.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use cleandb_core::radiomap::{Fingerprint, MapMeta, RadioMap, RssValue};

use crate::config::LoadConfig;
use crate::fsutil::atomic_write;
use crate::{Error, Result};

struct Layout {
    width: usize,
    ap_cols: Vec<usize>,
    x: usize,
    y: usize,
    floor: Option<usize>,
    building: Option<usize>,
    height: Option<usize>,
}

fn layout(header: &csv::StringRecord, config: &LoadConfig, path: &Path) -> Result<Layout> {
    let schema = &config.columns;
    let find = |name: &str| header.iter().position(|h| h.trim() == name);
    let require = |name: &str| {
        find(name).ok_or_else(|| Error::MissingLabelColumn { path: path.to_path_buf(), column: name.to_string() })
    };
    let ap_cols: Vec<usize> =
        header.iter().enumerate().filter(|(_, h)| schema.is_ap(h.trim())).map(|(i, _)| i).collect();
    if ap_cols.is_empty() {
        return Err(Error::NoApColumns { path: path.to_path_buf(), prefixes: schema.ap_prefixes.clone() });
    }
    Ok(Layout {
        width: header.len(),
        ap_cols,
        x: require(&schema.x)?,
        y: require(&schema.y)?,
        floor: schema.floor.as_deref().map(require).transpose()?,
        building: schema.building.as_deref().and_then(find),
        height: schema.height.as_deref().and_then(find),
    })
}

fn dataset_name(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

pub fn load_csv(path: &Path, config: &LoadConfig) -> Result<RadioMap> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, path, config)
}

/// Parses a radio map from `reader`; `path` is used for messages and the dataset name.
pub fn read_csv<R: Read>(reader: R, path: &Path, config: &LoadConfig) -> Result<RadioMap> {
    config.validate()?;
    let csv_err = |source| Error::Csv { path: path.to_path_buf(), source };
    let mut rdr = csv::ReaderBuilder::new().flexible(true).has_headers(true).from_reader(reader);
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.is_empty() || (header.len() == 1 && header[0].trim().is_empty()) {
        return Err(Error::EmptyFile { path: path.to_path_buf() });
    }
    let layout = layout(&header, config, path)?;
    let ap_ids: Vec<String> = layout.ap_cols.iter().map(|&c| header[c].trim().to_string()).collect();

    let mut fingerprints = Vec::new();
    let mut record = csv::StringRecord::new();
    while rdr.read_record(&mut record).map_err(csv_err)? {
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != layout.width {
            return Err(Error::MalformedRow {
                path: path.to_path_buf(),
                line,
                expected: layout.width,
                found: record.len(),
            });
        }
        let number = |col: usize| -> Result<f64> {
            let raw = record[col].trim();
            raw.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::NonNumericCell {
                path: path.to_path_buf(),
                line,
                column: header[col].to_string(),
                value: raw.to_string(),
            })
        };
        let integer = |col: usize| -> Result<i32> {
            let v = number(col)?;
            if v.fract() != 0.0 || v.abs() > i32::MAX as f64 {
                return Err(Error::NonNumericCell {
                    path: path.to_path_buf(),
                    line,
                    column: header[col].to_string(),
                    value: record[col].trim().to_string(),
                });
            }
            Ok(v as i32)
        };
        let rss = layout
            .ap_cols
            .iter()
            .map(|&c| {
                let v = number(c)?;
                Ok(if v == config.sentinel { RssValue::NotDetected } else { RssValue::Detected(v) })
            })
            .collect::<Result<Vec<_>>>()?;
        fingerprints.push(Fingerprint {
            rss,
            x: number(layout.x)?,
            y: number(layout.y)?,
            z: layout.height.map(number).transpose()?,
            floor: layout.floor.map(integer).transpose()?.unwrap_or(0),
            building: layout.building.map(integer).transpose()?,
        });
    }
    if fingerprints.is_empty() {
        return Err(Error::EmptyFile { path: path.to_path_buf() });
    }
    let meta = MapMeta {
        name: dataset_name(path),
        floor_height: config.floor_height,
        sentinel: config.sentinel,
        ..MapMeta::default()
    };
    let map = RadioMap::new(fingerprints, ap_ids, meta)?;
    map.validate_band(config.band)?;
    Ok(map)
}

/// Writes `map` in the canonical layout: AP columns, then
/// `LONGITUDE,LATITUDE,FLOOR`, then `BUILDINGID` and `HEIGHT` when every row has them.
pub fn write_csv<W: Write>(map: &RadioMap, out: W) -> Result<()> {
    let fps = map.fingerprints();
    let with_building = fps.iter().all(|f| f.building.is_some());
    let with_height = fps.iter().all(|f| f.z.is_some());
    let mut w = csv::WriterBuilder::new().from_writer(out);
    let csv_err = |source| Error::Csv { path: "<output>".into(), source };

    let mut header: Vec<&str> = map.ap_ids().iter().map(String::as_str).collect();
    header.extend(["LONGITUDE", "LATITUDE", "FLOOR"]);
    if with_building {
        header.push("BUILDINGID");
    }
    if with_height {
        header.push("HEIGHT");
    }
    w.write_record(&header).map_err(csv_err)?;

    let sentinel = map.meta.sentinel.to_string();
    let mut row: Vec<String> = Vec::with_capacity(header.len());
    for fp in fps {
        row.clear();
        row.extend(fp.rss.iter().map(|v| match v {
            RssValue::Detected(level) => level.to_string(),
            RssValue::NotDetected => sentinel.clone(),
        }));
        row.push(fp.x.to_string());
        row.push(fp.y.to_string());
        row.push(fp.floor.to_string());
        if let (true, Some(b)) = (with_building, fp.building) {
            row.push(b.to_string());
        }
        if let (true, Some(z)) = (with_height, fp.z) {
            row.push(z.to_string());
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("<output>", e))?;
    Ok(())
}

pub fn save_csv(map: &RadioMap, path: &Path) -> Result<()> {
    atomic_write(path, |w| write_csv(map, w))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RadioMap> {
        read_csv(text.as_bytes(), Path::new("t.csv"), &LoadConfig::default())
    }

    #[test]
    fn sentinel_cells_become_not_detected() {
        let map = parse(
            "AP001,AP002,LONGITUDE,LATITUDE,FLOOR,BUILDINGID\n\
             -60,100,1,2,0,0\n\
             100,100,3,4,1,0\n\
             -70,-80,5,6,2,0\n",
        )
        .unwrap();
        assert_eq!((map.len(), map.ap_count()), (3, 2));
        let nd = map.fingerprints().iter().flat_map(|f| &f.rss).filter(|v| !v.is_detected()).count();
        assert_eq!(nd, 3);
        assert_eq!(map.fingerprints()[0].rss, vec![RssValue::Detected(-60.0), RssValue::NotDetected]);
        assert_eq!(map.fingerprints()[2].floor, 2);
        assert_eq!(map.fingerprints()[2].building, Some(0));
        assert_eq!(map.meta.name, "t");
    }

    #[test]
    fn short_row_is_malformed() {
        let err = parse("AP001,AP002,LONGITUDE,LATITUDE,FLOOR,BUILDINGID\n-60,100,1\n").unwrap_err();
        assert!(matches!(err, Error::MalformedRow { line: 2, expected: 6, found: 3, .. }), "{err}");
    }

    #[test]
    fn non_numeric_cell() {
        let err = parse("AP001,LONGITUDE,LATITUDE,FLOOR\nabc,1,2,0\n").unwrap_err();
        assert!(matches!(err, Error::NonNumericCell { ref column, .. } if column == "AP001"), "{err}");
        let err = parse("AP001,LONGITUDE,LATITUDE,FLOOR\n-50,1,2,0.5\n").unwrap_err();
        assert!(matches!(err, Error::NonNumericCell { ref column, .. } if column == "FLOOR"), "{err}");
    }

    #[test]
    fn missing_label_and_empty() {
        assert!(matches!(parse("AP001,LONGITUDE,FLOOR\n-50,1,0\n"), Err(Error::MissingLabelColumn { .. })));
        assert!(matches!(parse(""), Err(Error::EmptyFile { .. })));
        assert!(matches!(parse("AP001,LONGITUDE,LATITUDE,FLOOR\n"), Err(Error::EmptyFile { .. })));
    }

    #[test]
    fn out_of_band_values_rejected() {
        let err = parse("AP001,LONGITUDE,LATITUDE,FLOOR\n-150,1,2,0\n").unwrap_err();
        assert!(matches!(err, Error::Core(cleandb_core::Error::RssOutOfBand { .. })));
    }

    #[test]
    fn uji_layout_with_extra_columns() {
        let map = parse(
            "WAP001,WAP002,LONGITUDE,LATITUDE,FLOOR,BUILDINGID,SPACEID,USERID\n\
             -45,100,-7541.26,4864921.9,2,1,106,2\n",
        )
        .unwrap();
        assert_eq!(map.ap_ids(), &["WAP001".to_string(), "WAP002".to_string()]);
        assert_eq!(map.fingerprints()[0].x, -7541.26);
    }

    #[test]
    fn custom_sentinel_and_height() {
        let cfg = LoadConfig { sentinel: 0.0, ..LoadConfig::default() };
        let map =
            read_csv("AP1,AP2,LONGITUDE,LATITUDE,FLOOR,HEIGHT\n0,-40,1,1,0,1.5\n".as_bytes(), Path::new("x"), &cfg)
                .unwrap();
        assert_eq!(map.fingerprints()[0].rss[0], RssValue::NotDetected);
        assert_eq!(map.fingerprints()[0].z, Some(1.5));
        assert_eq!(map.fingerprints()[0].building, None);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn save_then_load_is_identity(
                cells in proptest::collection::vec(prop_oneof![Just(None), (-110i32..=0).prop_map(Some)], 12),
                coords in proptest::collection::vec((-1e6f64..1e6, -1e6f64..1e6, 0i32..5, 0i32..3), 3),
            ) {
                let fps: Vec<Fingerprint> = cells
                    .chunks(4)
                    .zip(&coords)
                    .map(|(c, &(x, y, floor, b))| Fingerprint {
                        rss: c.iter().map(|v| v.map_or(RssValue::NotDetected, |l| RssValue::Detected(l as f64))).collect(),
                        x,
                        y,
                        z: None,
                        floor,
                        building: Some(b),
                    })
                    .collect();
                let ids = (1..=4).map(|i| format!("AP{i:03}")).collect();
                let meta = MapMeta { name: "rt".into(), ..MapMeta::default() };
                let map = RadioMap::new(fps, ids, meta).unwrap();
                let mut buf = Vec::new();
                write_csv(&map, &mut buf).unwrap();
                let back = read_csv(buf.as_slice(), Path::new("rt.csv"), &LoadConfig::default()).unwrap();
                prop_assert_eq!(back, map);
            }
        }
    }
}
