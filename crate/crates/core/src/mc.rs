//! Monte Carlo model of the DV relay.
//!
//! Four threshold detectors sit behind a 50:50 beamsplitter, one per
//! (output port, polarisation). Mode index is `2 * port + pol` with
//! `pol = 0` for H and `1` for V. A relay event succeeds when exactly two
//! detectors click, one H and one V. Clicks on the same port announce ψ⁺,
//! clicks on different ports announce ψ⁻.
//!
//! Single-photon inputs use the exact two-photon amplitudes at the
//! beamsplitter. Weak coherent pulses route every photon independently.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dv::{self, DvDetectorPreset, IntensityPair};
use crate::error::{Error, Result};
use crate::rng::trial_rng;

pub const MIN_TRIALS: u64 = 10_000;
const CHUNK: u64 = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    /// Number of samples behind the estimate (trials, or successful
    /// events for a conditional rate).
    pub n_trials: u64,
    pub seed: u64,
}

impl McEstimate {
    fn proportion(hits: u64, n: u64, seed: u64) -> Option<Self> {
        if n == 0 {
            return None;
        }
        let p = hits as f64 / n as f64;
        Some(Self {
            mean: p,
            std_error: (p * (1.0 - p) / n as f64).sqrt(),
            n_trials: n,
            seed,
        })
    }

    /// Distance from `value` in units of the standard error.
    pub fn z_score(&self, value: f64) -> f64 {
        let d = (self.mean - value).abs();
        if self.std_error > 0.0 {
            d / self.std_error
        } else if d == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinglePhotonEstimate {
    pub y_z11: McEstimate,
    /// `None` when no X-basis trial succeeded.
    pub e_x11: Option<McEstimate>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WcpEstimate {
    pub q_z: McEstimate,
    /// `None` when no trial succeeded.
    pub e_z: Option<McEstimate>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Bell {
    PsiPlus,
    PsiMinus,
}

/// Decodes a click pattern over the four detectors.
fn announce(clicks: [bool; 4]) -> Option<Bell> {
    if clicks.iter().filter(|&&c| c).count() != 2 {
        return None;
    }
    let h = clicks[0] || clicks[2];
    let v = clicks[1] || clicks[3];
    if !(h && v) {
        return None;
    }
    if (clicks[0] && clicks[1]) || (clicks[2] && clicks[3]) {
        Some(Bell::PsiPlus)
    } else {
        Some(Bell::PsiMinus)
    }
}

fn add_dark_counts(rng: &mut ChaCha8Rng, photons: [bool; 4], y0: f64) -> [bool; 4] {
    let mut c = photons;
    for x in c.iter_mut() {
        // Draw for every detector so the stream layout is pattern independent.
        let dark = rng.random::<f64>() < y0;
        *x |= dark;
    }
    c
}

fn draw(rng: &mut ChaCha8Rng, p: f64) -> bool {
    rng.random::<f64>() < p
}

/// Polarisation angle of the prepared state, in radians.
fn prepared_angle(x_basis: bool, bit: bool) -> f64 {
    use std::f64::consts::FRAC_PI_4;
    match (x_basis, bit) {
        (false, false) => 0.0,
        (false, true) => 2.0 * FRAC_PI_4,
        (true, false) => FRAC_PI_4,
        (true, true) => 3.0 * FRAC_PI_4,
    }
}

/// One photon from each user; returns which detectors saw light.
fn single_photon_trial(
    rng: &mut ChaCha8Rng,
    eta_a: f64,
    eta_b: f64,
    preset: &DvDetectorPreset,
    x_basis: bool,
    bit_a: bool,
    bit_b: bool,
) -> [bool; 4] {
    // sin²θ = e_d/2 per user, opposite senses, so the relative rotation
    // leaves a (1 − e_d) polarisation contrast.
    let theta = (preset.e_d / 2.0).sqrt().asin();
    let ta = prepared_angle(x_basis, bit_a) + theta;
    let tb = prepared_angle(x_basis, bit_b) - theta;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let x = [s * ta.cos(), s * ta.sin(), s * ta.cos(), s * ta.sin()];
    let y = [s * tb.cos(), s * tb.sin(), -s * tb.cos(), -s * tb.sin()];

    let alive_a = draw(rng, eta_a * preset.eta_d);
    let alive_b = draw(rng, eta_b * preset.eta_d);
    let u: f64 = rng.random();
    let mut lit = [false; 4];
    match (alive_a, alive_b) {
        (false, false) => {}
        (true, false) | (false, true) => {
            let amp = if alive_a { &x } else { &y };
            let mut acc = 0.0;
            let mut chosen = 3;
            for (i, a) in amp.iter().enumerate() {
                acc += a * a;
                if u < acc {
                    chosen = i;
                    break;
                }
            }
            lit[chosen] = true;
        }
        (true, true) => {
            let mut acc = 0.0;
            let mut chosen = (3, 3);
            'outer: for i in 0..4 {
                for j in i..4 {
                    let p = if i == j {
                        2.0 * (x[i] * y[i]).powi(2)
                    } else {
                        (x[i] * y[j] + x[j] * y[i]).powi(2)
                    };
                    acc += p;
                    if u < acc {
                        chosen = (i, j);
                        break 'outer;
                    }
                }
            }
            lit[chosen.0] = true;
            lit[chosen.1] = true;
        }
    }
    lit
}

fn check_inputs(eta_a: f64, eta_b: f64, preset: &DvDetectorPreset, n_trials: u64) -> Result<()> {
    if n_trials < MIN_TRIALS {
        return Err(Error::invalid(format!(
            "at least {MIN_TRIALS} trials are required, got {n_trials}"
        )));
    }
    for (name, e) in [("eta_A", eta_a), ("eta_B", eta_b)] {
        if !(0.0..=1.0).contains(&e) {
            return Err(Error::invalid(format!("{name} must lie in [0, 1], got {e}")));
        }
    }
    preset.validate()
}

/// Runs `n_trials` independent trials in parallel and sums their integer
/// tallies. Integer addition is associative, so the totals do not depend on
/// how rayon splits the work.
fn tally<const K: usize, F>(n_trials: u64, seed: u64, trial: F) -> [u64; K]
where
    F: Fn(&mut ChaCha8Rng) -> [u64; K] + Sync,
{
    let chunks = n_trials.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = [0u64; K];
            for i in c * CHUNK..((c + 1) * CHUNK).min(n_trials) {
                let mut rng = trial_rng(seed, i);
                let t = trial(&mut rng);
                for k in 0..K {
                    acc[k] += t[k];
                }
            }
            acc
        })
        .reduce(
            || [0u64; K],
            |mut a, b| {
                for k in 0..K {
                    a[k] += b[k];
                }
                a
            },
        )
}

/// Estimates the single-photon Z-basis yield and X-basis error rate.
///
/// Every trial runs one Z-basis round and one X-basis round with fresh
/// uniformly random bits for both users.
pub fn simulate_single_photon(
    eta_a: f64,
    eta_b: f64,
    preset: &DvDetectorPreset,
    n_trials: u64,
    seed: u64,
) -> Result<SinglePhotonEstimate> {
    check_inputs(eta_a, eta_b, preset, n_trials)?;
    let [z_ok, x_ok, x_err] = tally(n_trials, seed, |rng| {
        let mut out = [0u64; 3];
        let (a, b) = (rng.random::<bool>(), rng.random::<bool>());
        let lit = single_photon_trial(rng, eta_a, eta_b, preset, false, a, b);
        if announce(add_dark_counts(rng, lit, preset.y0)).is_some() {
            out[0] = 1;
        }
        let (a, b) = (rng.random::<bool>(), rng.random::<bool>());
        let lit = single_photon_trial(rng, eta_a, eta_b, preset, true, a, b);
        if let Some(bell) = announce(add_dark_counts(rng, lit, preset.y0)) {
            out[1] = 1;
            let wrong = match bell {
                Bell::PsiPlus => a != b,
                Bell::PsiMinus => a == b,
            };
            out[2] = wrong as u64;
        }
        out
    });
    Ok(SinglePhotonEstimate {
        y_z11: McEstimate::proportion(z_ok, n_trials, seed).expect("n_trials > 0"),
        e_x11: McEstimate::proportion(x_err, x_ok, seed),
    })
}

/// Estimates the Z-basis gain and QBER for weak coherent pulses.
pub fn simulate_wcp(
    eta_a: f64,
    eta_b: f64,
    mu: IntensityPair,
    preset: &DvDetectorPreset,
    n_trials: u64,
    seed: u64,
) -> Result<WcpEstimate> {
    check_inputs(eta_a, eta_b, preset, n_trials)?;
    mu.validate()?;
    let pa = Poisson::new(mu.mu_a).map_err(|e| Error::invalid(e.to_string()))?;
    let pb = Poisson::new(mu.mu_b).map_err(|e| Error::invalid(e.to_string()))?;
    let flip = preset.e_d / 2.0;
    let (sa, sb) = (eta_a * preset.eta_d, eta_b * preset.eta_d);
    let [ok, err] = tally(n_trials, seed, |rng| {
        let (a, b) = (rng.random::<bool>(), rng.random::<bool>());
        let mut lit = [false; 4];
        for (dist, survive, bit) in [(&pa, sa, a), (&pb, sb, b)] {
            let n = dist.sample(rng) as u64;
            let k = if n == 0 {
                0
            } else {
                Binomial::new(n, survive).expect("probability in [0, 1]").sample(rng)
            };
            for _ in 0..k {
                let pol = bit ^ draw(rng, flip);
                let port = rng.random::<bool>();
                lit[2 * port as usize + pol as usize] = true;
            }
        }
        match announce(add_dark_counts(rng, lit, preset.y0)) {
            Some(_) => [1, (a == b) as u64],
            None => [0, 0],
        }
    });
    Ok(WcpEstimate {
        q_z: McEstimate::proportion(ok, n_trials, seed).expect("n_trials > 0"),
        e_z: McEstimate::proportion(err, ok, seed),
    })
}

/// One parameter point checked against the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationCase {
    pub eta_a: f64,
    pub eta_b: f64,
    pub mu: IntensityPair,
    pub preset: DvDetectorPreset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationRow {
    pub case: usize,
    pub quantity: String,
    pub analytic: f64,
    pub estimate: Option<McEstimate>,
    pub z_score: f64,
    pub pass: bool,
}

/// Compares the analytic Y, e_X, Q and E with the simulator, passing each
/// quantity that lies within `sigmas` standard errors.
pub fn validate(
    cases: &[ValidationCase],
    n_trials: u64,
    seed: u64,
    sigmas: f64,
) -> Result<Vec<ValidationRow>> {
    let mut rows = Vec::with_capacity(4 * cases.len());
    for (i, c) in cases.iter().enumerate() {
        let case_seed = seed.wrapping_add(i as u64);
        let sp = simulate_single_photon(c.eta_a, c.eta_b, &c.preset, n_trials, case_seed)?;
        let wcp = simulate_wcp(c.eta_a, c.eta_b, c.mu, &c.preset, n_trials, case_seed)?;
        let y = dv::single_photon_yield(c.eta_a, c.eta_b, &c.preset)?;
        let ex = dv::single_photon_error_x(c.eta_a, c.eta_b, &c.preset)?;
        let (q, e) = dv::wcp_gain_qber(c.eta_a, c.eta_b, c.mu, &c.preset)?;
        for (name, analytic, est) in [
            ("Y_Z11", y, Some(sp.y_z11)),
            ("e_X11", ex, sp.e_x11),
            ("Q_Z", q, Some(wcp.q_z)),
            ("E_Z", e, wcp.e_z),
        ] {
            let z = est.map_or(f64::INFINITY, |m| m.z_score(analytic));
            rows.push(ValidationRow {
                case: i,
                quantity: name.to_string(),
                analytic,
                estimate: est,
                z_score: z,
                pass: z <= sigmas,
            });
        }
    }
    Ok(rows)
}

/// Random but reproducible validation points spanning the built-in DV
/// presets.
pub fn random_cases(n: usize, seed: u64) -> Vec<ValidationCase> {
    let presets = [
        DvDetectorPreset::PRACTICAL,
        DvDetectorPreset::BEST_SEMI_LOW,
        DvDetectorPreset::BEST_SEMI_HIGH,
        DvDetectorPreset::SNSPD,
    ];
    let mut rng = trial_rng(seed, u64::MAX);
    (0..n)
        .map(|i| ValidationCase {
            eta_a: rng.random_range(0.2..1.0),
            eta_b: rng.random_range(0.2..1.0),
            mu: IntensityPair {
                mu_a: rng.random_range(0.05..0.8),
                mu_b: rng.random_range(0.05..0.8),
            },
            preset: presets[i % presets.len()],
        })
        .collect()
}
