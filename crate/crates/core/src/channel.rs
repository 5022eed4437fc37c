//! Fibre links, relay placement and the capacity of the end-to-end channel.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_ATTENUATION_DB_PER_KM: f64 = 0.2;

/// Transmissivity of `d` km of fibre with the given loss in dB/km.
pub fn transmissivity_from_distance(d: f64, attenuation: f64) -> Result<f64> {
    if !(d >= 0.0) || !d.is_finite() {
        return Err(Error::invalid(format!("distance must be >= 0 km, got {d}")));
    }
    if !(attenuation > 0.0) || !attenuation.is_finite() {
        return Err(Error::invalid(format!(
            "attenuation must be > 0 dB/km, got {attenuation}"
        )));
    }
    Ok(10f64.powf(-attenuation * d / 10.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "d_fixed")]
pub enum RelayConfiguration {
    /// The relay sits in Alice's lab; all fibre is on Bob's side.
    RelayAtAlice,
    /// Alice's leg has a fixed length in km.
    FixedAliceLeg(f64),
    /// Alice and Bob are equidistant from the relay.
    Symmetric,
}

impl RelayConfiguration {
    /// The four relay placements used for the comparison panels.
    pub fn panel(tag: char) -> Option<Self> {
        match tag.to_ascii_lowercase() {
            'a' => Some(Self::RelayAtAlice),
            'b' => Some(Self::FixedAliceLeg(0.1)),
            'c' => Some(Self::FixedAliceLeg(1.0)),
            'd' => Some(Self::Symmetric),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::FixedAliceLeg(x) if !(x > 0.0) || !x.is_finite() => Err(Error::invalid(
                format!("fixed Alice leg must be > 0 km, got {x}"),
            )),
            _ => Ok(()),
        }
    }
}

/// Splits a total Alice–Bob distance into the (Alice, Bob) legs.
pub fn split_total_distance(config: RelayConfiguration, d_tot: f64) -> Result<(f64, f64)> {
    config.validate()?;
    if !(d_tot >= 0.0) || !d_tot.is_finite() {
        return Err(Error::invalid(format!(
            "total distance must be >= 0 km, got {d_tot}"
        )));
    }
    match config {
        RelayConfiguration::RelayAtAlice => Ok((0.0, d_tot)),
        RelayConfiguration::FixedAliceLeg(x) => {
            if d_tot < x {
                Err(Error::InfeasibleConfiguration(format!(
                    "total distance {d_tot} km is shorter than the fixed Alice leg {x} km"
                )))
            } else {
                Ok((x, d_tot - x))
            }
        }
        RelayConfiguration::Symmetric => Ok((d_tot / 2.0, d_tot / 2.0)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub d_a: f64,
    pub d_b: f64,
    pub attenuation: f64,
    pub eta_a: f64,
    pub eta_b: f64,
}

impl LinkBudget {
    pub fn new(d_a: f64, d_b: f64, attenuation: f64) -> Result<Self> {
        Ok(Self {
            d_a,
            d_b,
            attenuation,
            eta_a: transmissivity_from_distance(d_a, attenuation)?,
            eta_b: transmissivity_from_distance(d_b, attenuation)?,
        })
    }

    pub fn from_total(config: RelayConfiguration, d_tot: f64, attenuation: f64) -> Result<Self> {
        let (d_a, d_b) = split_total_distance(config, d_tot)?;
        Self::new(d_a, d_b, attenuation)
    }

    pub fn eta_tot(&self) -> f64 {
        self.eta_a * self.eta_b
    }
}

/// Lower and upper bounds on the secret-key capacity of a lossy channel
/// with transmissivity `eta_tot`, in bits per use.
pub fn secret_key_capacity_bounds(eta_tot: f64) -> Result<(f64, f64)> {
    if eta_tot == 1.0 {
        return Err(Error::Divergence(
            "capacity is unbounded at unit transmissivity".into(),
        ));
    }
    if !(0.0..1.0).contains(&eta_tot) {
        return Err(Error::invalid(format!(
            "transmissivity must lie in [0, 1), got {eta_tot}"
        )));
    }
    // -log2(1-η) and log2(1+η) - log2(1-η), written with ln_1p for small η.
    let l = -(-eta_tot).ln_1p() / std::f64::consts::LN_2;
    let u = eta_tot.ln_1p() / std::f64::consts::LN_2 + l;
    Ok((l, u))
}
