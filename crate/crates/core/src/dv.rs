//! Discrete-variable MDI-QKD with weak coherent pulses and infinite decoys.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simplex::NelderMead;

/// Detector and post-processing parameters of a DV relay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DvDetectorPreset {
    pub eta_d: f64,
    #[serde(rename = "Y0")]
    pub y0: f64,
    pub e_d: f64,
    pub f_e: f64,
}

impl DvDetectorPreset {
    pub const PRACTICAL: Self = Self { eta_d: 0.145, y0: 6e-6, e_d: 0.015, f_e: 1.16 };
    pub const BEST_SEMI_LOW: Self = Self { eta_d: 0.55, y0: 5e-4, e_d: 0.015, f_e: 1.16 };
    pub const BEST_SEMI_HIGH: Self = Self { eta_d: 0.55, y0: 5e-4, e_d: 0.001, f_e: 1.16 };
    pub const SNSPD: Self = Self { eta_d: 0.93, y0: 1e-6, e_d: 0.001, f_e: 1.16 };

    pub fn validate(&self) -> Result<()> {
        let ok = self.eta_d > 0.0
            && self.eta_d <= 1.0
            && (0.0..1.0).contains(&self.y0)
            && (0.0..0.5).contains(&self.e_d)
            && self.f_e >= 1.0
            && self.f_e.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("DV detector parameters out of range: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntensityPair {
    pub mu_a: f64,
    pub mu_b: f64,
}

impl IntensityPair {
    pub fn new(mu_a: f64, mu_b: f64) -> Result<Self> {
        let p = Self { mu_a, mu_b };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mu_a > 0.0 && self.mu_b > 0.0 && self.mu_a.is_finite() && self.mu_b.is_finite() {
            Ok(())
        } else {
            Err(Error::invalid(format!("intensities must be positive and finite: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DvRateBreakdown {
    pub p_z11: f64,
    pub y_z11: f64,
    pub e_x11: f64,
    /// Set when the single-photon yield is zero and `e_x11` fell back to 1/2.
    pub e_x11_no_signal: bool,
    pub q_z: f64,
    pub e_z: f64,
    pub rate_raw: f64,
}

impl DvRateBreakdown {
    pub fn rate_clamped(&self) -> f64 {
        self.rate_raw.max(0.0)
    }
}

fn check_unit(name: &str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must lie in [0, 1], got {x}")))
    }
}

/// Shannon entropy of a biased coin, in bits.
pub fn binary_entropy(x: f64) -> Result<f64> {
    check_unit("probability", x)?;
    if x == 0.0 || x == 1.0 {
        return Ok(0.0);
    }
    Ok(-x * x.log2() - (1.0 - x) * (1.0 - x).log2())
}

/// Yield of the Z basis when both users send exactly one photon.
pub fn single_photon_yield(eta_a: f64, eta_b: f64, preset: &DvDetectorPreset) -> Result<f64> {
    check_unit("eta_A", eta_a)?;
    check_unit("eta_B", eta_b)?;
    preset.validate()?;
    let a = eta_a * preset.eta_d;
    let b = eta_b * preset.eta_d;
    let y0 = preset.y0;
    let bracket = 4.0 * y0 * y0 * (1.0 - a) * (1.0 - b)
        + 2.0 * y0 * (a + b - 1.5 * a * b)
        + a * b / 2.0;
    Ok((1.0 - y0).powi(2) * bracket)
}

fn error_x_with_flag(eta_a: f64, eta_b: f64, preset: &DvDetectorPreset) -> Result<(f64, bool)> {
    let y = single_photon_yield(eta_a, eta_b, preset)?;
    if y <= 0.0 {
        return Ok((0.5, true));
    }
    let signal = (1.0 - preset.y0).powi(2)
        * (1.0 - preset.e_d).powi(2)
        * eta_a
        * eta_b
        * preset.eta_d
        * preset.eta_d;
    Ok(((0.5 - signal / (4.0 * y)).clamp(0.0, 0.5), false))
}

/// X-basis error rate for single-photon inputs, in [0, 1/2].
///
/// Returns 1/2 when the yield vanishes.
pub fn single_photon_error_x(eta_a: f64, eta_b: f64, preset: &DvDetectorPreset) -> Result<f64> {
    error_x_with_flag(eta_a, eta_b, preset).map(|(e, _)| e)
}

/// Probability that a threshold detector with dark-click probability `y0`
/// clicks when `h` photons arrive on average.
fn click_probability(y0: f64, h: f64) -> f64 {
    -((-y0).ln_1p() - h).exp_m1()
}

/// Probability of exactly one click among the two H detectors and exactly
/// one among the two V detectors, given the mean photon number per detector.
fn coincidence(y0: f64, h_h: f64, h_v: f64) -> f64 {
    let c_h = click_probability(y0, h_h);
    let c_v = click_probability(y0, h_v);
    4.0 * (1.0 - c_h) * c_h * (1.0 - c_v) * c_v
}

/// Success probabilities (Ω₁ for equal Z bits, Ω₂ for opposite bits).
pub fn omegas(
    eta_a: f64,
    eta_b: f64,
    mu: IntensityPair,
    preset: &DvDetectorPreset,
) -> Result<(f64, f64)> {
    check_unit("eta_A", eta_a)?;
    check_unit("eta_B", eta_b)?;
    mu.validate()?;
    preset.validate()?;
    let p = preset.e_d / 2.0;
    let la = eta_a * preset.eta_d * mu.mu_a;
    let lb = eta_b * preset.eta_d * mu.mu_b;
    let omega2 = coincidence(
        preset.y0,
        (la * (1.0 - p) + lb * p) / 2.0,
        (la * p + lb * (1.0 - p)) / 2.0,
    );
    let omega1 = coincidence(preset.y0, (la + lb) * (1.0 - p) / 2.0, (la + lb) * p / 2.0);
    Ok((omega1, omega2))
}

/// Z-basis gain and QBER for weak coherent pulses.
pub fn wcp_gain_qber(
    eta_a: f64,
    eta_b: f64,
    mu: IntensityPair,
    preset: &DvDetectorPreset,
) -> Result<(f64, f64)> {
    let (o1, o2) = omegas(eta_a, eta_b, mu, preset)?;
    let s = o1 + o2;
    if !(s > 0.0) {
        return Err(Error::UndefinedQber);
    }
    Ok((s / 2.0, (o1 / s).min(0.5)))
}

pub fn dv_rate(
    eta_a: f64,
    eta_b: f64,
    mu: IntensityPair,
    preset: &DvDetectorPreset,
) -> Result<DvRateBreakdown> {
    let (q_z, e_z) = wcp_gain_qber(eta_a, eta_b, mu, preset)?;
    let y_z11 = single_photon_yield(eta_a, eta_b, preset)?;
    let (e_x11, no_signal) = error_x_with_flag(eta_a, eta_b, preset)?;
    let p_z11 = mu.mu_a * mu.mu_b * (-(mu.mu_a + mu.mu_b)).exp();
    let rate_raw = p_z11 * y_z11 * (1.0 - binary_entropy(e_x11)?)
        - q_z * preset.f_e * binary_entropy(e_z)?;
    Ok(DvRateBreakdown {
        p_z11,
        y_z11,
        e_x11,
        e_x11_no_signal: no_signal,
        q_z,
        e_z,
        rate_raw,
    })
}

pub const INTENSITY_MIN: f64 = 1e-3;
pub const INTENSITY_MAX: f64 = 1.0;
pub const SEED_GRID: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntensityOptimum {
    pub mu: IntensityPair,
    /// Best rate found, clamped at zero.
    pub r_star: f64,
    pub breakdown: DvRateBreakdown,
    pub no_positive_rate: bool,
}

/// Log-spaced points on `[lo, hi]`, endpoints included.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// Maximises the DV rate over both signal intensities in `[1e-3, 1]²`.
///
/// A 50×50 logarithmic grid seeds a simplex in log-intensity space, mapped
/// smoothly onto the box; the result is never worse than the best grid
/// point.
pub fn optimize_intensities(
    eta_a: f64,
    eta_b: f64,
    preset: &DvDetectorPreset,
) -> Result<IntensityOptimum> {
    check_unit("eta_A", eta_a)?;
    check_unit("eta_B", eta_b)?;
    preset.validate()?;
    let rate = |ma: f64, mb: f64| -> f64 {
        match dv_rate(eta_a, eta_b, IntensityPair { mu_a: ma, mu_b: mb }, preset) {
            Ok(b) => b.rate_raw,
            Err(_) => f64::NEG_INFINITY,
        }
    };
    let grid = log_grid(INTENSITY_MIN, INTENSITY_MAX, SEED_GRID);
    let mut best = (f64::NEG_INFINITY, grid[0], grid[0]);
    for &ma in &grid {
        for &mb in &grid {
            let r = rate(ma, mb);
            if r > best.0 {
                best = (r, ma, mb);
            }
        }
    }

    let (lo, hi) = (INTENSITY_MIN.ln(), INTENSITY_MAX.ln());
    let nm = NelderMead {
        f_tol_abs: 1e-300,
        f_tol_rel: 1e-10,
        x_tol: 1e-9,
        max_evals: 2000,
        initial_step: 0.02,
    };
    let m = nm.minimize_mapped(
        |x| -rate(x[0].exp(), x[1].exp()),
        &[best.1.ln(), best.2.ln()],
        &[lo, lo],
        &[hi, hi],
    );
    let (mut ma, mut mb) = (m.x[0].exp(), m.x[1].exp());
    if !(-m.f >= best.0) {
        ma = best.1;
        mb = best.2;
    }
    let mu = IntensityPair { mu_a: ma.clamp(INTENSITY_MIN, INTENSITY_MAX), mu_b: mb.clamp(INTENSITY_MIN, INTENSITY_MAX) };
    let breakdown = dv_rate(eta_a, eta_b, mu, preset)?;
    let no_positive_rate = !(breakdown.rate_raw > 0.0);
    Ok(IntensityOptimum {
        mu,
        r_star: breakdown.rate_raw.max(0.0),
        breakdown,
        no_positive_rate,
    })
}
