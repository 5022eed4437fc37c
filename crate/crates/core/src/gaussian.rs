//! Gaussian states in shot-noise units (vacuum variance 1).
//!
//! Quadratures are interleaved as `(q₁, p₁, q₂, p₂, …)`, so the symplectic
//! form is block diagonal with blocks `[[0, 1], [-1, 0]]`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack on symplectic eigenvalues when deciding physicality.
pub const PHYSICAL_TOL: f64 = 1e-9;
const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureCM {
    matrix: DMatrix<f64>,
    pub mean: Option<DVector<f64>>,
}

impl QuadratureCM {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let (r, c) = matrix.shape();
        if r != c || r == 0 || r % 2 != 0 {
            return Err(Error::invalid(format!(
                "covariance matrix must be square with even size, got {r}x{c}"
            )));
        }
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("covariance matrix has non-finite entries"));
        }
        let scale = matrix.amax().max(1.0);
        for i in 0..r {
            for j in 0..i {
                if (matrix[(i, j)] - matrix[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::invalid(format!(
                        "covariance matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self { matrix, mean: None })
    }

    pub fn vacuum(n_modes: usize) -> Self {
        Self { matrix: DMatrix::identity(2 * n_modes, 2 * n_modes), mean: None }
    }

    pub fn thermal(omega: f64) -> Result<Self> {
        Self::new(DMatrix::from_diagonal_element(2, 2, omega))
    }

    pub fn n_modes(&self) -> usize {
        self.matrix.nrows() / 2
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    /// Covariance matrix of the listed modes, in the given order.
    pub fn reduced(&self, modes: &[usize]) -> Self {
        let idx: Vec<usize> = modes.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
        let k = idx.len();
        let matrix = DMatrix::from_fn(k, k, |i, j| self.matrix[(idx[i], idx[j])]);
        Self { matrix, mean: None }
    }

    /// Applies `S V Sᵀ`.
    pub fn transform(&self, s: &DMatrix<f64>) -> Self {
        let m = s * &self.matrix * s.transpose();
        Self { matrix: symmetrize(m), mean: self.mean.as_ref().map(|d| s * d) }
    }

    pub fn min_symplectic_eigenvalue(&self) -> f64 {
        symplectic_spectrum(&self.matrix).last().copied().unwrap_or(f64::NAN)
    }

    pub fn is_physical(&self) -> bool {
        positive_definite(&self.matrix)
            && self.min_symplectic_eigenvalue() >= 1.0 - PHYSICAL_TOL
    }
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

fn positive_definite(m: &DMatrix<f64>) -> bool {
    m.clone().cholesky().is_some()
}

/// The `2n × 2n` symplectic form.
pub fn symplectic_form(n_modes: usize) -> DMatrix<f64> {
    let mut o = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for k in 0..n_modes {
        o[(2 * k, 2 * k + 1)] = 1.0;
        o[(2 * k + 1, 2 * k)] = -1.0;
    }
    o
}

fn det2(m: &DMatrix<f64>, r: usize, c: usize) -> f64 {
    m[(r, c)] * m[(r + 1, c + 1)] - m[(r, c + 1)] * m[(r + 1, c)]
}

fn symplectic_spectrum(v: &DMatrix<f64>) -> Vec<f64> {
    let n = v.nrows() / 2;
    let mut nu = match n {
        1 => vec![det2(v, 0, 0).max(0.0).sqrt()],
        _ => general_spectrum(v),
    };
    nu.sort_by(|a, b| b.total_cmp(a));
    nu
}

fn general_spectrum(v: &DMatrix<f64>) -> Vec<f64> {
    let n = v.nrows() / 2;
    let omega = symplectic_form(n);
    if let Some(chol) = v.clone().cholesky() {
        // With V = L Lᵀ, the matrix A = Lᵀ Ω L is antisymmetric and similar
        // to ΩV, so AᵀA has every ν² twice.
        let l = chol.l();
        let a = l.transpose() * &omega * &l;
        let ata = symmetrize(a.transpose() * &a);
        let mut ev: Vec<f64> = ata.symmetric_eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        return ev.chunks(2).map(|p| (0.5 * (p[0] + p[1])).max(0.0).sqrt()).collect();
    }
    let mut ev: Vec<f64> = (&omega * v).complex_eigenvalues().iter().map(|z| z.norm()).collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect()
}

/// Symplectic eigenvalues, largest first.
pub fn symplectic_eigenvalues(cm: &QuadratureCM) -> Vec<f64> {
    symplectic_spectrum(&cm.matrix)
}

/// Entropy in bits of a thermal mode with symplectic eigenvalue `x`.
pub fn bosonic_entropy_h(x: f64) -> Result<f64> {
    if !(x >= 1.0 - PHYSICAL_TOL) || !x.is_finite() {
        return Err(Error::invalid(format!("symplectic eigenvalue below 1: {x}")));
    }
    let x = x.max(1.0);
    let a = (x + 1.0) / 2.0;
    let b = (x - 1.0) / 2.0;
    if b == 0.0 {
        return Ok(0.0);
    }
    // a·log a − b·log b with a − b = 1, rearranged to avoid cancellation.
    Ok(a.log2() + b * (1.0 / b).ln_1p() / std::f64::consts::LN_2)
}

/// Tolerance below 1 on symplectic eigenvalues that is indistinguishable
/// from rounding for a matrix of this magnitude. ν² is quadratic in the
/// entries, so the floor grows with the square of the largest one.
pub fn roundoff_tolerance(cm: &QuadratureCM) -> f64 {
    PHYSICAL_TOL.max(f64::EPSILON * cm.matrix.amax().powi(2))
}

/// Entropy in bits, summing `h` over the symplectic spectrum.
///
/// Eigenvalues within rounding of 1 are treated as 1.
pub fn von_neumann_entropy(cm: &QuadratureCM) -> Result<f64> {
    if !positive_definite(&cm.matrix) {
        return Err(Error::invalid("covariance matrix is not positive definite"));
    }
    let tol = roundoff_tolerance(cm);
    symplectic_eigenvalues(cm)
        .into_iter()
        .map(|nu| {
            if nu >= 1.0 - tol {
                bosonic_entropy_h(nu.max(1.0))
            } else {
                Err(Error::invalid(format!("unphysical state: symplectic eigenvalue {nu}")))
            }
        })
        .sum()
}

/// Eve's two-mode environment in normal form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoModeAttack {
    pub omega_a: f64,
    pub omega_b: f64,
    pub g: f64,
    pub g_prime: f64,
}

impl TwoModeAttack {
    pub const PURE_LOSS: Self = Self { omega_a: 1.0, omega_b: 1.0, g: 0.0, g_prime: 0.0 };

    pub fn cloners(omega_a: f64, omega_b: f64) -> Self {
        Self { omega_a, omega_b, g: 0.0, g_prime: 0.0 }
    }

    pub fn cm(&self) -> DMatrix<f64> {
        let mut v = DMatrix::zeros(4, 4);
        v[(0, 0)] = self.omega_a;
        v[(1, 1)] = self.omega_a;
        v[(2, 2)] = self.omega_b;
        v[(3, 3)] = self.omega_b;
        v[(0, 2)] = self.g;
        v[(2, 0)] = self.g;
        v[(1, 3)] = self.g_prime;
        v[(3, 1)] = self.g_prime;
        v
    }

    /// `ν₋ − 1` of the environment, or a negative number when the matrix is
    /// not even positive definite.
    pub fn physicality_margin(&self) -> f64 {
        let ab = self.omega_a * self.omega_b;
        let pd = [self.omega_a, self.omega_b, ab - self.g * self.g, ab - self.g_prime * self.g_prime];
        let worst = pd.iter().copied().fold(f64::INFINITY, f64::min);
        if !(worst > 0.0) {
            return worst.min(0.0) - 1.0;
        }
        let delta = self.omega_a.powi(2) + self.omega_b.powi(2) + 2.0 * self.g * self.g_prime;
        let det = (ab - self.g * self.g) * (ab - self.g_prime * self.g_prime);
        let disc = (delta * delta - 4.0 * det).max(0.0).sqrt();
        let big = (delta + disc) / 2.0;
        (det / big).sqrt() - 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Physicality {
    pub physical: bool,
    pub margin: f64,
}

pub fn attack_is_physical(attack: &TwoModeAttack) -> Physicality {
    let margin = attack.physicality_margin();
    Physicality { physical: margin >= -PHYSICAL_TOL, margin }
}

/// Two-mode squeezed vacuum with local variance `mu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EprSource {
    pub mu: f64,
}

impl EprSource {
    /// Entangled source equivalent to Gaussian modulation of variance `phi`.
    pub fn from_modulation(phi: f64) -> Result<Self> {
        if !(phi >= 0.0) || !phi.is_finite() {
            return Err(Error::invalid(format!("modulation must be >= 0, got {phi}")));
        }
        Ok(Self { mu: phi + 1.0 })
    }

    pub fn cm(&self) -> DMatrix<f64> {
        let c = ((self.mu - 1.0) * (self.mu + 1.0)).max(0.0).sqrt();
        let mut v = DMatrix::from_diagonal_element(4, 4, self.mu);
        v[(0, 2)] = c;
        v[(2, 0)] = c;
        v[(1, 3)] = -c;
        v[(3, 1)] = -c;
        v
    }
}

/// Mode labels of the six-mode relay model.
pub mod modes {
    /// Alice's retained arm.
    pub const A_KEPT: usize = 0;
    /// Alice's travelling mode.
    pub const A_TRAVEL: usize = 1;
    pub const B_KEPT: usize = 2;
    pub const B_TRAVEL: usize = 3;
    /// Eve's modes injected into Alice's and Bob's links.
    pub const E_A: usize = 4;
    pub const E_B: usize = 5;
}

/// Beamsplitter of transmissivity `t` acting on modes `i` (signal) and `j`.
pub fn beamsplitter(n_modes: usize, i: usize, j: usize, t: f64) -> DMatrix<f64> {
    let mut m = DMatrix::identity(2 * n_modes, 2 * n_modes);
    let (c, s) = (t.sqrt(), (1.0 - t).sqrt());
    for k in 0..2 {
        let (a, b) = (2 * i + k, 2 * j + k);
        m[(a, a)] = c;
        m[(a, b)] = s;
        m[(b, a)] = -s;
        m[(b, b)] = c;
    }
    m
}

fn check_links(eta_a: f64, eta_b: f64) -> Result<()> {
    for (name, e) in [("eta_A", eta_a), ("eta_B", eta_b)] {
        if !(e > 0.0 && e <= 1.0) {
            return Err(Error::invalid(format!("{name} must lie in (0, 1], got {e}")));
        }
    }
    Ok(())
}

/// Six-mode state after both links, before the relay measures.
pub fn relay_input_state(
    eta_a: f64,
    eta_b: f64,
    attack: &TwoModeAttack,
    source: &EprSource,
) -> Result<QuadratureCM> {
    check_links(eta_a, eta_b)?;
    if !(source.mu >= 1.0) {
        return Err(Error::invalid(format!("EPR variance must be >= 1, got {}", source.mu)));
    }
    let mut v = DMatrix::zeros(12, 12);
    let epr = source.cm();
    for (off, blk) in [(0usize, &epr), (4, &epr)] {
        v.view_mut((off, off), (4, 4)).copy_from(blk);
    }
    v.view_mut((8, 8), (4, 4)).copy_from(&attack.cm());
    let s = beamsplitter(6, modes::B_TRAVEL, modes::E_B, eta_b)
        * beamsplitter(6, modes::A_TRAVEL, modes::E_A, eta_a);
    QuadratureCM::new(v).map(|cm| cm.transform(&s))
}

/// The two quadratures read out by the relay, as functionals on the
/// six-mode phase space.
pub fn bell_functionals() -> [DVector<f64>; 2] {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut q_minus = DVector::zeros(12);
    q_minus[2 * modes::A_TRAVEL] = r;
    q_minus[2 * modes::B_TRAVEL] = -r;
    let mut p_plus = DVector::zeros(12);
    p_plus[2 * modes::A_TRAVEL + 1] = r;
    p_plus[2 * modes::B_TRAVEL + 1] = r;
    [q_minus, p_plus]
}

#[derive(Debug, Clone)]
pub struct RelayOutcome {
    /// Conditional state of Alice's and Bob's retained arms.
    pub kept: QuadratureCM,
    /// Conditional state of the retained arms and Eve's two output modes,
    /// ordered (a, b, E_A, E_B).
    pub with_environment: QuadratureCM,
    /// Variances of q₋ and p₊.
    pub measured_variances: (f64, f64),
}

/// Measures q₋ then p₊ with ideal homodyne detection, as two rank-one Schur
/// complements.
pub fn relay_outcome(
    eta_a: f64,
    eta_b: f64,
    attack: &TwoModeAttack,
    source: &EprSource,
) -> Result<RelayOutcome> {
    let input = relay_input_state(eta_a, eta_b, attack, source)?;
    let mut v = input.into_matrix();
    let mut variances = [0.0; 2];
    for (k, l) in bell_functionals().iter().enumerate() {
        let vl = &v * l;
        let var = l.dot(&vl);
        variances[k] = var;
        if !(var > 1e-12 * v.amax().max(1.0)) {
            return Err(Error::DegenerateMeasurement(format!(
                "measured quadrature {k} has variance {var}"
            )));
        }
        v -= &vl * vl.transpose() / var;
        v = symmetrize(v);
    }
    let full = QuadratureCM { matrix: v, mean: None };
    Ok(RelayOutcome {
        kept: full.reduced(&[modes::A_KEPT, modes::B_KEPT]),
        with_environment: full.reduced(&[modes::A_KEPT, modes::B_KEPT, modes::E_A, modes::E_B]),
        measured_variances: (variances[0], variances[1]),
    })
}

/// Post-relay covariance matrix of (a, b); independent of the outcome.
pub fn relay_conditional_state(
    eta_a: f64,
    eta_b: f64,
    attack: &TwoModeAttack,
    source: &EprSource,
) -> Result<QuadratureCM> {
    relay_outcome(eta_a, eta_b, attack, source).map(|o| o.kept)
}

/// Input-referred noise of q₋ and p₊ for a given attack, in closed form.
pub fn quadrature_noises(eta_a: f64, eta_b: f64, attack: &TwoModeAttack) -> (f64, f64) {
    let base = eta_a + eta_b + (1.0 - eta_a) * attack.omega_a + (1.0 - eta_b) * attack.omega_b;
    let k = 2.0 * ((1.0 - eta_a) * (1.0 - eta_b)).sqrt();
    (base - k * attack.g, base + k * attack.g_prime)
}

/// Pure-loss equivalent noise `2(η_A + η_B)/(η_A η_B)`.
pub fn chi_loss(eta_a: f64, eta_b: f64) -> Result<f64> {
    let p = eta_a * eta_b;
    if !(p > 0.0) {
        return Err(Error::Divergence("equivalent noise diverges for a dead link".into()));
    }
    Ok(2.0 * (eta_a + eta_b) / p)
}

/// Equivalent noise from the two quadrature noises: their geometric mean,
/// referred to the input.
pub fn chi_from_noises(eta_a: f64, eta_b: f64, n_q: f64, n_p: f64) -> f64 {
    (eta_a + eta_b) / (eta_a * eta_b) * (n_q * n_p).sqrt()
}

/// Equivalent noise `χ` and excess noise `ε = χ − χ_loss`, read off the
/// relay statistics.
pub fn equivalent_noise(
    eta_a: f64,
    eta_b: f64,
    attack: &TwoModeAttack,
    source: &EprSource,
) -> Result<(f64, f64)> {
    let loss = chi_loss(eta_a, eta_b)?;
    let input = relay_input_state(eta_a, eta_b, attack, source)?;
    let [lq, lp] = bell_functionals();
    let v = input.matrix();
    let signal = (source.mu - 1.0) * (eta_a + eta_b);
    let n_q = 2.0 * lq.dot(&(v * &lq)) - signal;
    let n_p = 2.0 * lp.dot(&(v * &lp)) - signal;
    let chi = chi_from_noises(eta_a, eta_b, n_q, n_p);
    Ok((chi, chi - loss))
}
