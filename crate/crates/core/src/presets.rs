//! Named curves: built-in detector and protocol presets, capacity bounds,
//! and user presets loaded from JSON.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cv::CvParams;
use crate::dv::DvDetectorPreset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Curve {
    Dv(DvDetectorPreset),
    Cv(CvParams),
    CapacityLower,
    CapacityUpper,
}

/// One entry of a custom preset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PresetEntry {
    Dv {
        name: String,
        eta_d: f64,
        #[serde(rename = "Y0")]
        y0: f64,
        e_d: f64,
        f_e: f64,
    },
    Cv {
        name: String,
        eta_d: f64,
        eps: f64,
        phi: f64,
        xi: f64,
    },
}

impl PresetEntry {
    fn into_named(self) -> Result<(String, Curve)> {
        let (name, curve) = match self {
            Self::Dv { name, eta_d, y0, e_d, f_e } => {
                let p = DvDetectorPreset { eta_d, y0, e_d, f_e };
                p.validate()?;
                (name, Curve::Dv(p))
            }
            Self::Cv { name, eta_d, eps, phi, xi } => {
                let p = CvParams { phi, xi, eta_d, epsilon: eps };
                p.validate()?;
                (name, Curve::Cv(p))
            }
        };
        if name.is_empty() || name.contains(',') {
            return Err(Error::invalid(format!("preset name `{name}` must be non-empty without commas")));
        }
        Ok((name, curve))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Registry {
    curves: BTreeMap<String, Curve>,
}

pub const DEFAULT_CURVES: [&str; 8] = [
    "cv-practical",
    "cv-ideal-rec",
    "capacity-lower",
    "capacity-upper",
    "dv-practical",
    "dv-best-semi-low",
    "dv-best-semi-high",
    "dv-snspd",
];

impl Default for Registry {
    fn default() -> Self {
        Self::builtin()
    }
}

impl Registry {
    pub fn builtin() -> Self {
        let curves = [
            ("dv-practical", Curve::Dv(DvDetectorPreset::PRACTICAL)),
            ("dv-best-semi-low", Curve::Dv(DvDetectorPreset::BEST_SEMI_LOW)),
            ("dv-best-semi-high", Curve::Dv(DvDetectorPreset::BEST_SEMI_HIGH)),
            ("dv-snspd", Curve::Dv(DvDetectorPreset::SNSPD)),
            ("cv-practical", Curve::Cv(CvParams::PRACTICAL)),
            ("cv-ideal-rec", Curve::Cv(CvParams::IDEAL_RECONCILIATION)),
            ("capacity-lower", Curve::CapacityLower),
            ("capacity-upper", Curve::CapacityUpper),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        Self { curves }
    }

    pub fn get(&self, name: &str) -> Result<Curve> {
        self.curves.get(name).copied().ok_or_else(|| Error::UnknownCurve(name.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Curve)> {
        self.curves.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Adds presets from a JSON array (or a single object). Later entries
    /// replace earlier ones with the same name, including built-ins.
    pub fn extend_from_json(&mut self, json: &str) -> Result<()> {
        let value: serde_json::Value = serde_json::from_str(json)?;
        let entries: Vec<PresetEntry> = match value {
            serde_json::Value::Array(_) => serde_json::from_value(value)?,
            other => vec![serde_json::from_value(other)?],
        };
        for e in entries {
            let (name, curve) = e.into_named()?;
            self.curves.insert(name, curve);
        }
        Ok(())
    }

    pub fn extend_from_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        self.extend_from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_presets_have_expected_parameters() {
        let r = Registry::builtin();
        assert_eq!(
            r.get("dv-practical").unwrap(),
            Curve::Dv(DvDetectorPreset { eta_d: 0.145, y0: 6e-6, e_d: 0.015, f_e: 1.16 })
        );
        assert_eq!(
            r.get("cv-practical").unwrap(),
            Curve::Cv(CvParams { phi: 60.0, xi: 0.97, eta_d: 0.98, epsilon: 0.01 })
        );
        let Curve::Cv(ideal) = r.get("cv-ideal-rec").unwrap() else { panic!() };
        assert_eq!(ideal.xi, 1.0);
        for name in DEFAULT_CURVES {
            assert!(r.get(name).is_ok(), "{name}");
        }
        assert!(matches!(r.get("nope"), Err(Error::UnknownCurve(_))));
    }

    #[test]
    fn custom_presets_from_json() {
        let mut r = Registry::builtin();
        r.extend_from_json(
            r#"[
                {"name": "dv-alt", "kind": "dv", "eta_d": 0.93, "Y0": 6e-6, "e_d": 0.001, "f_e": 1.16},
                {"name": "cv-hi", "kind": "cv", "eta_d": 0.98, "eps": 0.02, "phi": 100, "xi": 0.98}
            ]"#,
        )
        .unwrap();
        assert_eq!(
            r.get("cv-hi").unwrap(),
            Curve::Cv(CvParams { phi: 100.0, xi: 0.98, eta_d: 0.98, epsilon: 0.02 })
        );
        assert!(matches!(r.get("dv-alt").unwrap(), Curve::Dv(p) if p.y0 == 6e-6));

        assert!(r.extend_from_json(r#"{"name": "x", "kind": "dv", "eta_d": 2, "Y0": 0, "e_d": 0, "f_e": 1}"#).is_err());
        assert!(r.extend_from_json(r#"{"name": "x", "kind": "qv"}"#).is_err());
        assert!(r.extend_from_json(r#"{"name": "a,b", "kind": "cv", "eta_d": 1, "eps": 0, "phi": 1, "xi": 1}"#).is_err());
    }
}
