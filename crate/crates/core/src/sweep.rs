//! Distance sweeps over a relay placement and a set of named curves.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{
    secret_key_capacity_bounds, LinkBudget, RelayConfiguration, DEFAULT_ATTENUATION_DB_PER_KM,
};
use crate::cv;
use crate::dv;
use crate::error::{Error, Result};
use crate::gaussian::TwoModeAttack;
use crate::presets::{Curve, Registry};

/// How grid points are spaced.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    /// `d_min`/`d_max` are total distances in km.
    #[default]
    Km,
    /// `d_min`/`d_max` are total fibre losses in dB; points are converted
    /// to km with the sweep's attenuation.
    Db,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub panel: char,
    pub d_min: f64,
    pub d_max: f64,
    pub steps: usize,
    pub curves: Vec<String>,
    pub attenuation: f64,
    pub seed: u64,
    pub grid: GridKind,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            panel: 'a',
            d_min: 0.5,
            d_max: 25.0,
            steps: 50,
            curves: crate::presets::DEFAULT_CURVES.iter().map(|s| s.to_string()).collect(),
            attenuation: DEFAULT_ATTENUATION_DB_PER_KM,
            seed: 0,
            grid: GridKind::Km,
        }
    }
}

impl SweepSpec {
    pub fn relay(&self) -> Result<RelayConfiguration> {
        RelayConfiguration::panel(self.panel)
            .ok_or_else(|| Error::invalid(format!("unknown panel `{}`, expected a-d", self.panel)))
    }

    pub fn validate(&self, registry: &Registry) -> Result<()> {
        self.relay()?;
        if !(self.d_min >= 0.0 && self.d_min < self.d_max && self.d_max.is_finite()) {
            return Err(Error::invalid(format!(
                "need 0 <= d_min < d_max, got {} and {}",
                self.d_min, self.d_max
            )));
        }
        if self.steps < 2 {
            return Err(Error::invalid(format!("need at least 2 steps, got {}", self.steps)));
        }
        if !(self.attenuation > 0.0 && self.attenuation.is_finite()) {
            return Err(Error::invalid(format!("attenuation must be > 0, got {}", self.attenuation)));
        }
        if self.curves.is_empty() {
            return Err(Error::invalid("no curves requested"));
        }
        for c in &self.curves {
            registry.get(c)?;
        }
        Ok(())
    }

    /// Total distances of the grid, in km.
    pub fn distances(&self) -> Vec<f64> {
        let scale = match self.grid {
            GridKind::Km => 1.0,
            GridKind::Db => 1.0 / self.attenuation,
        };
        let n = self.steps;
        (0..n)
            .map(|i| {
                let x = if i + 1 == n {
                    self.d_max
                } else {
                    self.d_min + (self.d_max - self.d_min) * i as f64 / (n - 1) as f64
                };
                x * scale
            })
            .collect()
    }
}

/// Optimiser output attached to a record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Aux {
    Dv { mu_a: f64, mu_b: f64, no_positive_rate: bool },
    Cv { attack: TwoModeAttack, i_ab: f64, chi_e: f64 },
    Capacity { eta_tot: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipKind {
    /// The relay placement does not fit in the total distance.
    Geometry,
    /// The rate could not be evaluated at this point.
    Computation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRecord {
    pub d_tot: f64,
    pub curve_id: String,
    pub rate_raw: Option<f64>,
    pub rate_clamped: Option<f64>,
    pub aux: Option<Aux>,
    pub skipped: Option<SkipKind>,
    pub notes: String,
}

impl CurveRecord {
    fn skipped(d_tot: f64, curve_id: &str, err: &Error) -> Self {
        let kind = match err {
            Error::InfeasibleConfiguration(_) => SkipKind::Geometry,
            _ => SkipKind::Computation,
        };
        Self {
            d_tot,
            curve_id: curve_id.to_string(),
            rate_raw: None,
            rate_clamped: None,
            aux: None,
            skipped: Some(kind),
            notes: format!("skipped: {err}"),
        }
    }
}

/// Rate of one curve at one total distance.
pub fn evaluate_point(
    relay: RelayConfiguration,
    d_tot: f64,
    attenuation: f64,
    curve: &Curve,
) -> Result<(f64, Aux, String)> {
    let link = LinkBudget::from_total(relay, d_tot, attenuation)?;
    Ok(match curve {
        Curve::Dv(p) => {
            let o = dv::optimize_intensities(link.eta_a, link.eta_b, p)?;
            let notes = if o.no_positive_rate { "no positive rate" } else { "" };
            (
                o.breakdown.rate_raw,
                Aux::Dv { mu_a: o.mu.mu_a, mu_b: o.mu.mu_b, no_positive_rate: o.no_positive_rate },
                notes.to_string(),
            )
        }
        Curve::Cv(p) => {
            let b = cv::general_rate(link.eta_a, link.eta_b, p)?;
            (
                b.rate_raw,
                Aux::Cv { attack: b.attack_at_optimum, i_ab: b.i_ab, chi_e: b.chi_e },
                String::new(),
            )
        }
        Curve::CapacityLower | Curve::CapacityUpper => {
            let (lo, hi) = secret_key_capacity_bounds(link.eta_tot())?;
            let r = if matches!(curve, Curve::CapacityLower) { lo } else { hi };
            (r, Aux::Capacity { eta_tot: link.eta_tot() }, String::new())
        }
    })
}

/// Evaluates every curve at every grid distance.
///
/// Records come back sorted by `(curve_id, d_tot)`. Points that cannot be
/// evaluated are kept as skipped rows.
pub fn run_sweep(spec: &SweepSpec, registry: &Registry) -> Result<Vec<CurveRecord>> {
    spec.validate(registry)?;
    let relay = spec.relay()?;
    let distances = spec.distances();
    let mut tasks = Vec::with_capacity(spec.curves.len() * distances.len());
    for name in &spec.curves {
        let curve = registry.get(name)?;
        for &d in &distances {
            tasks.push((name.as_str(), curve, d));
        }
    }
    let mut records: Vec<CurveRecord> = tasks
        .par_iter()
        .map(|&(name, curve, d)| match evaluate_point(relay, d, spec.attenuation, &curve) {
            Ok((raw, aux, notes)) => CurveRecord {
                d_tot: d,
                curve_id: name.to_string(),
                rate_raw: Some(raw),
                rate_clamped: Some(raw.max(0.0)),
                aux: Some(aux),
                skipped: None,
                notes,
            },
            Err(e) => CurveRecord::skipped(d, name, &e),
        })
        .collect();
    records.sort_by(|a, b| a.curve_id.cmp(&b.curve_id).then(a.d_tot.total_cmp(&b.d_tot)));
    records.dedup_by(|a, b| a.curve_id == b.curve_id && a.d_tot == b.d_tot);
    Ok(records)
}

fn find<'a>(records: &'a [CurveRecord], curve: &str, d: f64) -> Option<&'a CurveRecord> {
    let tol = 1e-9 * d.abs().max(1.0);
    records.iter().find(|r| r.curve_id == curve && (r.d_tot - d).abs() <= tol)
}

/// `log₁₀(rate_x / rate_y)` at distance `d`, from clamped rates.
pub fn compare_curves(records: &[CurveRecord], curve_x: &str, curve_y: &str, d: f64) -> Result<f64> {
    let rate = |c: &str| -> Result<f64> {
        let r = find(records, c, d)
            .ok_or_else(|| Error::UndefinedComparison(format!("no `{c}` record at {d} km")))?;
        match r.rate_clamped {
            Some(x) if x > 0.0 => Ok(x),
            _ => Err(Error::UndefinedComparison(format!("`{c}` has no positive rate at {d} km"))),
        }
    };
    let (x, y) = (rate(curve_x)?, rate(curve_y)?);
    Ok((x / y).log10())
}
