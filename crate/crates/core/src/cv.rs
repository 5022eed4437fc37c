//! Continuous-variable MDI-QKD with Gaussian-modulated coherent states.
//!
//! The general rate is `ξ·I_AB − χ_E`, with Eve's Holevo information
//! maximised over two-mode Gaussian environments that reproduce the
//! observed excess noise.

use nalgebra::Matrix2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{
    self, attack_is_physical, bosonic_entropy_h, chi_loss, quadrature_noises, von_neumann_entropy,
    EprSource, QuadratureCM, TwoModeAttack, PHYSICAL_TOL,
};
use crate::simplex::NelderMead;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvParams {
    pub phi: f64,
    pub xi: f64,
    pub eta_d: f64,
    pub epsilon: f64,
}

impl CvParams {
    pub const PRACTICAL: Self = Self { phi: 60.0, xi: 0.97, eta_d: 0.98, epsilon: 0.01 };
    pub const IDEAL_RECONCILIATION: Self = Self { xi: 1.0, ..Self::PRACTICAL };

    pub fn validate(&self) -> Result<()> {
        let ok = self.phi >= 0.0
            && self.phi.is_finite()
            && (0.0..=1.0).contains(&self.xi)
            && self.eta_d > 0.0
            && self.eta_d <= 1.0
            && self.epsilon >= 0.0
            && self.epsilon.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("CV parameters out of range: {self:?}")))
        }
    }
}

/// Whose variable Eve's Holevo information is computed on.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum HolevoTarget {
    #[default]
    Alice,
    Bob,
}

/// How `I_AB` is evaluated inside [`general_rate`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum MutualInfoModel {
    /// Mutual information of the heterodyne outcomes on the post-relay
    /// state, exact at every modulation.
    #[default]
    Exact,
    /// `log₂[(φ+1)/χ]`, see [`mutual_information`].
    LargeModulation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvRateBreakdown {
    pub i_ab: f64,
    pub chi_e: f64,
    pub chi: f64,
    pub epsilon: f64,
    pub rate_raw: f64,
    pub attack_at_optimum: TwoModeAttack,
    /// Alice's transmissivity after folding in the relay efficiency.
    pub eta_a_effective: f64,
}

impl CvRateBreakdown {
    pub fn rate_clamped(&self) -> f64 {
        self.rate_raw.max(0.0)
    }
}

/// `log₂[(φ+1)/χ]` bits.
pub fn mutual_information(phi: f64, chi: f64) -> Result<f64> {
    if !(chi > 0.0) {
        return Err(Error::invalid(format!("equivalent noise must be positive, got {chi}")));
    }
    if !(phi >= 0.0) {
        return Err(Error::invalid(format!("modulation must be >= 0, got {phi}")));
    }
    Ok(((phi + 1.0) / chi).log2())
}

fn blocks(cm: &QuadratureCM) -> (Matrix2<f64>, Matrix2<f64>, Matrix2<f64>) {
    let m = cm.matrix();
    let a = Matrix2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let b = Matrix2::new(m[(2, 2)], m[(2, 3)], m[(3, 2)], m[(3, 3)]);
    let c = Matrix2::new(m[(0, 2)], m[(0, 3)], m[(1, 2)], m[(1, 3)]);
    (a, b, c)
}

/// State of the second block after heterodyning the first.
fn heterodyne_conditional(
    measured: &Matrix2<f64>,
    other: &Matrix2<f64>,
    cross: &Matrix2<f64>,
) -> Result<Matrix2<f64>> {
    let inv = (measured + Matrix2::identity())
        .try_inverse()
        .ok_or_else(|| Error::DegenerateMeasurement("singular heterodyne covariance".into()))?;
    Ok(other - cross.transpose() * inv * cross)
}

/// Mutual information between heterodyne outcomes on both modes of a
/// two-mode state.
pub fn heterodyne_mutual_information(cm: &QuadratureCM) -> Result<f64> {
    let (a, b, c) = blocks(cm);
    let b_given_a = heterodyne_conditional(&a, &b, &c)?;
    let num = (b + Matrix2::identity()).determinant();
    let den = (b_given_a + Matrix2::identity()).determinant();
    Ok(0.5 * (num / den).log2())
}

/// Eve's Holevo information on the chosen party's heterodyne variable,
/// assuming she holds the purification of the two-mode state.
pub fn holevo(cm: &QuadratureCM, target: HolevoTarget) -> Result<f64> {
    if cm.n_modes() != 2 {
        return Err(Error::invalid("Holevo information needs a two-mode state"));
    }
    let (a, b, c) = blocks(cm);
    let rest = match target {
        HolevoTarget::Alice => heterodyne_conditional(&a, &b, &c)?,
        HolevoTarget::Bob => heterodyne_conditional(&b, &a, &c.transpose())?,
    };
    let joint = von_neumann_entropy(cm)?;
    let tol = gaussian::roundoff_tolerance(cm);
    let nu = rest.determinant().max(0.0).sqrt();
    if nu < 1.0 - tol {
        return Err(Error::invalid(format!("unphysical conditional state: ν = {nu}")));
    }
    Ok(joint - bosonic_entropy_h(nu.max(1.0))?)
}

/// Relative gap below which the asymmetric closed form is not used.
pub const SYMMETRIC_DISPATCH: f64 = 1e-9;
const CLOSED_FORM_DOMAIN: f64 = 1e-6;

fn h_clamped(x: f64) -> Result<f64> {
    if x < 1.0 - CLOSED_FORM_DOMAIN || !x.is_finite() {
        return Err(Error::FormulaDomain(format!("entropy argument {x} below 1")));
    }
    bosonic_entropy_h(x.max(1.0))
}

fn check_eta(name: &str, e: f64) -> Result<()> {
    if e > 0.0 && e <= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must lie in (0, 1], got {e}")))
    }
}

/// Large-modulation rate with ideal reconciliation for unequal links.
pub fn closed_form_rate_asymmetric(eta_a: f64, eta_b: f64, epsilon: f64) -> Result<f64> {
    check_eta("eta_A", eta_a)?;
    check_eta("eta_B", eta_b)?;
    if !(epsilon >= 0.0) {
        return Err(Error::invalid(format!("excess noise must be >= 0, got {epsilon}")));
    }
    let sum = eta_a + eta_b;
    let gap = (eta_a - eta_b).abs();
    if gap <= SYMMETRIC_DISPATCH * sum {
        return Err(Error::DeferToSymmetric);
    }
    let chi = 2.0 * sum / (eta_a * eta_b) + epsilon;
    let lead = (2.0 * sum / (std::f64::consts::E * gap * chi)).log2();
    let mid = h_clamped(eta_a * chi / sum - 1.0)?;
    let last = h_clamped((eta_a * eta_b * chi - sum * sum) / (gap * sum))?;
    Ok(lead + mid - last)
}

/// Symmetric large-modulation rate as a function of the equivalent noise.
pub fn symmetric_rate_from_chi(chi: f64) -> Result<f64> {
    if !(chi > 4.0) {
        return Err(Error::Divergence(format!(
            "symmetric rate diverges for equivalent noise {chi} <= 4"
        )));
    }
    let e2 = std::f64::consts::E * std::f64::consts::E;
    Ok(h_clamped(chi / 2.0 - 1.0)? + (16.0 / (e2 * chi * (chi - 4.0))).log2())
}

/// Large-modulation rate with ideal reconciliation for equal links.
pub fn closed_form_rate_symmetric(eta: f64, epsilon: f64) -> Result<f64> {
    check_eta("eta", eta)?;
    if !(epsilon >= 0.0) {
        return Err(Error::invalid(format!("excess noise must be >= 0, got {epsilon}")));
    }
    symmetric_rate_from_chi(4.0 / eta + epsilon)
}

/// Dispatches to the symmetric or asymmetric closed form.
pub fn closed_form_rate(eta_a: f64, eta_b: f64, epsilon: f64) -> Result<f64> {
    match closed_form_rate_asymmetric(eta_a, eta_b, epsilon) {
        Err(Error::DeferToSymmetric) => closed_form_rate_symmetric(0.5 * (eta_a + eta_b), epsilon),
        r => r,
    }
}

/// Tuning of the worst-case attack search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackSearch {
    /// Points per thermal-noise axis of the outer grid.
    pub omega_points: usize,
    /// Points of the correlation scan for every outer cell.
    pub g_points: usize,
    /// Upper edge of the thermal-noise box is `1 + omega_span·ε·χ_loss`.
    pub omega_span: f64,
    /// Convergence tolerance of the refinement, in bits.
    pub tolerance_bits: f64,
    pub max_evals: usize,
}

impl Default for AttackSearch {
    fn default() -> Self {
        Self { omega_points: 7, g_points: 21, omega_span: 10.0, tolerance_bits: 1e-5, max_evals: 600 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CvOptions {
    pub target: HolevoTarget,
    pub mutual_info: MutualInfoModel,
    pub search: AttackSearch,
}

/// Input-referred noise both quadratures must share, on average, to give
/// excess noise `epsilon`.
fn target_noise(eta_a: f64, eta_b: f64, epsilon: f64) -> f64 {
    2.0 + epsilon * eta_a * eta_b / (eta_a + eta_b)
}

const NOISE_TOL: f64 = 1e-6;

/// Completes `(ω_A, ω_B, g)` with the `g′` that reproduces `epsilon`.
fn project(eta_a: f64, eta_b: f64, epsilon: f64, omega_a: f64, omega_b: f64, g: f64) -> Option<TwoModeAttack> {
    let base = eta_a + eta_b + (1.0 - eta_a) * omega_a + (1.0 - eta_b) * omega_b;
    let k = 2.0 * ((1.0 - eta_a) * (1.0 - eta_b)).sqrt();
    let n_star = target_noise(eta_a, eta_b, epsilon);
    let n_q = base - k * g;
    if !(n_q > 0.0) || !(k > 0.0) {
        return None;
    }
    let g_prime = (n_star * n_star / n_q - base) / k;
    g_prime.is_finite().then_some(TwoModeAttack { omega_a, omega_b, g, g_prime })
}

/// Symmetric pair of independent entangling cloners with excess noise
/// `epsilon`, or the one-sided cloner when a link is lossless.
pub fn cloner_attack(eta_a: f64, eta_b: f64, epsilon: f64) -> Result<TwoModeAttack> {
    let extra = target_noise(eta_a, eta_b, epsilon) - 2.0;
    let leak = 2.0 - eta_a - eta_b;
    if extra == 0.0 {
        return Ok(TwoModeAttack::PURE_LOSS);
    }
    if !(leak > 0.0) {
        return Err(Error::InfeasibleNoise(format!(
            "lossless links cannot carry excess noise {epsilon}"
        )));
    }
    let w = 1.0 + extra / leak;
    Ok(if eta_a == 1.0 || eta_b == 1.0 {
        // Only the lossy link's environment matters; keep the other in vacuum.
        if eta_a == 1.0 {
            TwoModeAttack::cloners(1.0, w)
        } else {
            TwoModeAttack::cloners(w, 1.0)
        }
    } else {
        TwoModeAttack::cloners(w, w)
    })
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    chi_e: f64,
    attack: TwoModeAttack,
}

fn key(a: &TwoModeAttack) -> [f64; 4] {
    [a.omega_a, a.omega_b, a.g, a.g_prime]
}

/// Larger χ_E wins; exact ties go to the lexicographically smaller attack.
fn better(x: &Candidate, y: &Candidate) -> bool {
    if x.chi_e != y.chi_e {
        return x.chi_e > y.chi_e;
    }
    let (kx, ky) = (key(&x.attack), key(&y.attack));
    kx.iter().zip(&ky).map(|(a, b)| a.total_cmp(b)).find(|o| o.is_ne()) == Some(std::cmp::Ordering::Less)
}

fn evaluate(
    eta_a: f64,
    eta_b: f64,
    attack: &TwoModeAttack,
    source: &EprSource,
    target: HolevoTarget,
) -> Option<Candidate> {
    if attack_is_physical(attack).margin < -PHYSICAL_TOL {
        return None;
    }
    let cm = gaussian::relay_conditional_state(eta_a, eta_b, attack, source).ok()?;
    let chi_e = holevo(&cm, target).ok()?;
    chi_e.is_finite().then_some(Candidate { chi_e, attack: *attack })
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![lo];
    }
    (0..n).map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }).collect()
}

/// Maximises Eve's Holevo information over physical two-mode attacks that
/// reproduce `params.epsilon`.
///
/// `eta_a` and `eta_b` are the transmissivities seen by the relay model,
/// so any detector efficiency must already be folded in.
pub fn worst_case_holevo(
    eta_a: f64,
    eta_b: f64,
    params: &CvParams,
) -> Result<(f64, TwoModeAttack)> {
    worst_case_holevo_with(eta_a, eta_b, params, &CvOptions::default())
}

pub fn worst_case_holevo_with(
    eta_a: f64,
    eta_b: f64,
    params: &CvParams,
    options: &CvOptions,
) -> Result<(f64, TwoModeAttack)> {
    params.validate()?;
    check_eta("eta_A", eta_a)?;
    check_eta("eta_B", eta_b)?;
    let source = EprSource::from_modulation(params.phi)?;
    let eps = params.epsilon;
    let target = options.target;
    let search = &options.search;
    let k = 2.0 * ((1.0 - eta_a) * (1.0 - eta_b)).sqrt();

    if k <= 1e-12 {
        // A lossless link decouples its environment; the constraint then
        // fixes the other link's thermal noise.
        let attack = cloner_attack(eta_a, eta_b, eps)?;
        let c = evaluate(eta_a, eta_b, &attack, &source, target).ok_or_else(|| {
            Error::InfeasibleNoise(format!("no physical attack gives excess noise {eps}"))
        })?;
        return Ok((c.chi_e, c.attack));
    }

    let w_max = 1.0 + search.omega_span * eps * chi_loss(eta_a, eta_b)?;
    let omegas = linspace(1.0, w_max, search.omega_points);
    let cells: Vec<(f64, f64)> =
        omegas.iter().flat_map(|&a| omegas.iter().map(move |&b| (a, b))).collect();

    let per_cell: Vec<Option<Candidate>> = cells
        .par_iter()
        .map(|&(wa, wb)| {
            let g_max = (wa * wb).sqrt();
            let mut best: Option<Candidate> = None;
            for g in linspace(-g_max, g_max, search.g_points) {
                let Some(attack) = project(eta_a, eta_b, eps, wa, wb, g) else { continue };
                if let Some(c) = evaluate(eta_a, eta_b, &attack, &source, target) {
                    if best.as_ref().is_none_or(|b| better(&c, b)) {
                        best = Some(c);
                    }
                }
            }
            best
        })
        .collect();

    let mut best: Option<Candidate> = None;
    for c in per_cell.into_iter().flatten() {
        if best.as_ref().is_none_or(|b| better(&c, b)) {
            best = Some(c);
        }
    }
    // The symmetric cloner pair is feasible whenever the box allows it.
    if let Ok(a) = cloner_attack(eta_a, eta_b, eps) {
        if a.omega_a <= w_max && a.omega_b <= w_max {
            if let Some(c) = evaluate(eta_a, eta_b, &a, &source, target) {
                if best.as_ref().is_none_or(|b| better(&c, b)) {
                    best = Some(c);
                }
            }
        }
    }
    let Some(seed) = best else {
        return Err(Error::InfeasibleNoise(format!(
            "no physical attack in the search box gives excess noise {eps}"
        )));
    };
    if eps == 0.0 {
        return Ok((seed.chi_e, seed.attack));
    }

    let g_bound = w_max;
    let nm = NelderMead {
        f_tol_abs: search.tolerance_bits * 0.1,
        f_tol_rel: 0.0,
        x_tol: 1e-9,
        max_evals: search.max_evals,
        initial_step: 0.02,
    };
    let objective = |x: &[f64]| -> f64 {
        project(eta_a, eta_b, eps, x[0], x[1], x[2])
            .and_then(|a| evaluate(eta_a, eta_b, &a, &source, target))
            .map_or(f64::INFINITY, |c| -c.chi_e)
    };
    let m = nm.minimize(
        objective,
        &[seed.attack.omega_a, seed.attack.omega_b, seed.attack.g],
        &[1.0, 1.0, -g_bound],
        &[w_max, w_max, g_bound],
    );
    let refined = project(eta_a, eta_b, eps, m.x[0], m.x[1], m.x[2])
        .and_then(|a| evaluate(eta_a, eta_b, &a, &source, target));
    let best = match refined {
        Some(r) if better(&r, &seed) => r,
        _ => seed,
    };
    Ok((best.chi_e, best.attack))
}

/// Secret-key rate of the CV protocol under the worst-case attack.
pub fn general_rate(eta_a: f64, eta_b: f64, params: &CvParams) -> Result<CvRateBreakdown> {
    general_rate_with(eta_a, eta_b, params, &CvOptions::default())
}

pub fn general_rate_with(
    eta_a: f64,
    eta_b: f64,
    params: &CvParams,
    options: &CvOptions,
) -> Result<CvRateBreakdown> {
    params.validate()?;
    check_eta("eta_A", eta_a)?;
    check_eta("eta_B", eta_b)?;
    let eta_a_eff = eta_a * params.eta_d;
    let (chi_e, attack) = worst_case_holevo_with(eta_a_eff, eta_b, params, options)?;
    let source = EprSource::from_modulation(params.phi)?;
    let (chi, epsilon) = gaussian::equivalent_noise(eta_a_eff, eta_b, &attack, &source)?;
    if (epsilon - params.epsilon).abs() > NOISE_TOL {
        return Err(Error::InfeasibleNoise(format!(
            "attack reproduces excess noise {epsilon}, expected {}",
            params.epsilon
        )));
    }
    let i_ab = match options.mutual_info {
        MutualInfoModel::Exact => {
            let cm = gaussian::relay_conditional_state(eta_a_eff, eta_b, &attack, &source)?;
            heterodyne_mutual_information(&cm)?
        }
        MutualInfoModel::LargeModulation => mutual_information(params.phi, chi)?,
    };
    Ok(CvRateBreakdown {
        i_ab,
        chi_e,
        chi,
        epsilon,
        rate_raw: params.xi * i_ab - chi_e,
        attack_at_optimum: attack,
        eta_a_effective: eta_a_eff,
    })
}

/// Both quadrature noises of an attack, checked against the target excess
/// noise. Exposed for diagnostics.
pub fn attack_noise(eta_a: f64, eta_b: f64, attack: &TwoModeAttack) -> Result<(f64, f64)> {
    let (n_q, n_p) = quadrature_noises(eta_a, eta_b, attack);
    let chi = gaussian::chi_from_noises(eta_a, eta_b, n_q, n_p);
    Ok((chi, chi - chi_loss(eta_a, eta_b)?))
}
