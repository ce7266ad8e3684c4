//! Load-time configuration, read from a small TOML file.
//!
//! ```toml
//! sentinel = 100
//! floor_height = 4.0
//!
//! [band]
//! min = -110
//! max = 0
//!
//! [columns]
//! x = "LONGITUDE"
//! y = "LATITUDE"
//! floor = "FLOOR"
//! building = "BUILDINGID"
//! height = "HEIGHT"
//! ap_prefixes = ["AP", "WAP"]
//! ```
//!
//! Every key is optional; missing keys take the defaults shown.

use std::path::Path;

use cleandb_core::radiomap::{RssBand, DEFAULT_FLOOR_HEIGHT, DEFAULT_SENTINEL};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Maps CSV header names onto fingerprint fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColumnSchema {
    pub x: String,
    pub y: String,
    /// `None` for single-floor layouts without a floor column.
    pub floor: Option<String>,
    /// Used when present in the header; single-building files may omit it.
    pub building: Option<String>,
    /// Used when present in the header.
    pub height: Option<String>,
    /// A column is an AP column when its name starts with one of these.
    pub ap_prefixes: Vec<String>,
}

impl Default for ColumnSchema {
    fn default() -> Self {
        ColumnSchema {
            x: "LONGITUDE".into(),
            y: "LATITUDE".into(),
            floor: Some("FLOOR".into()),
            building: Some("BUILDINGID".into()),
            height: Some("HEIGHT".into()),
            ap_prefixes: vec!["AP".into(), "WAP".into()],
        }
    }
}

impl ColumnSchema {
    pub(crate) fn is_label(&self, name: &str) -> bool {
        name == self.x
            || name == self.y
            || self.floor.as_deref() == Some(name)
            || self.building.as_deref() == Some(name)
            || self.height.as_deref() == Some(name)
    }

    pub(crate) fn is_ap(&self, name: &str) -> bool {
        !self.is_label(name) && self.ap_prefixes.iter().any(|p| name.starts_with(p.as_str()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoadConfig {
    /// Cell value meaning "not detected".
    pub sentinel: f64,
    pub floor_height: f64,
    pub band: RssBand,
    pub columns: ColumnSchema,
}

impl Default for LoadConfig {
    fn default() -> Self {
        LoadConfig {
            sentinel: DEFAULT_SENTINEL,
            floor_height: DEFAULT_FLOOR_HEIGHT,
            band: RssBand::default(),
            columns: ColumnSchema::default(),
        }
    }
}

impl LoadConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: LoadConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.sentinel.is_finite() {
            return Err(Error::Config("sentinel must be finite".into()));
        }
        if !(self.floor_height.is_finite() && self.floor_height >= 0.0) {
            return Err(Error::Config("floor_height must be a non-negative number".into()));
        }
        if self.band.min.is_nan() || self.band.max.is_nan() || self.band.min > self.band.max {
            return Err(Error::Config("band.min must not exceed band.max".into()));
        }
        if self.columns.ap_prefixes.is_empty() {
            return Err(Error::Config("columns.ap_prefixes must not be empty".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_defaults() {
        assert_eq!(LoadConfig::from_toml_str("").unwrap(), LoadConfig::default());
    }

    #[test]
    fn partial_override() {
        let c = LoadConfig::from_toml_str("sentinel = 0\n[columns]\nx = \"X\"\nbuilding = \"B\"\n").unwrap();
        assert_eq!(c.sentinel, 0.0);
        assert_eq!(c.columns.x, "X");
        assert_eq!(c.columns.y, "LATITUDE");
        assert_eq!(c.columns.building.as_deref(), Some("B"));
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(matches!(LoadConfig::from_toml_str("sentinal = 3"), Err(Error::Config(_))));
        assert!(matches!(LoadConfig::from_toml_str("floor_height = -1.0"), Err(Error::Config(_))));
        assert!(matches!(LoadConfig::from_toml_str("[band]\nmin = 0\nmax = -10"), Err(Error::Config(_))));
    }

    #[test]
    fn ap_detection() {
        let s = ColumnSchema::default();
        assert!(s.is_ap("WAP001"));
        assert!(s.is_ap("AP17"));
        assert!(!s.is_ap("LONGITUDE"));
        assert!(!s.is_ap("USERID"));
    }
}
