#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Phase rotation of one mode.
pub fn rotation(n: usize, k: usize, theta: f64) -> DMatrix<f64> {
    let mut s = DMatrix::identity(2 * n, 2 * n);
    let (c, si) = (theta.cos(), theta.sin());
    s[(2 * k, 2 * k)] = c;
    s[(2 * k, 2 * k + 1)] = si;
    s[(2 * k + 1, 2 * k)] = -si;
    s[(2 * k + 1, 2 * k + 1)] = c;
    s
}

pub fn squeezer(n: usize, k: usize, r: f64) -> DMatrix<f64> {
    let mut s = DMatrix::identity(2 * n, 2 * n);
    s[(2 * k, 2 * k)] = r.exp();
    s[(2 * k + 1, 2 * k + 1)] = (-r).exp();
    s
}

/// Beamsplitter written out directly in quadrature space.
pub fn mixer(n: usize, i: usize, j: usize, t: f64) -> DMatrix<f64> {
    let mut s = DMatrix::identity(2 * n, 2 * n);
    let (c, si) = (t.sqrt(), (1.0 - t).sqrt());
    for k in 0..2 {
        s[(2 * i + k, 2 * i + k)] = c;
        s[(2 * i + k, 2 * j + k)] = si;
        s[(2 * j + k, 2 * i + k)] = -si;
        s[(2 * j + k, 2 * j + k)] = c;
    }
    s
}

pub fn random_symplectic(rng: &mut ChaCha8Rng, n: usize, layers: usize) -> DMatrix<f64> {
    let mut s = DMatrix::identity(2 * n, 2 * n);
    for _ in 0..layers {
        for k in 0..n {
            s = rotation(n, k, rng.random_range(0.0..std::f64::consts::TAU)) * s;
            s = squeezer(n, k, rng.random_range(-0.8..0.8)) * s;
        }
        if n > 1 {
            let i = rng.random_range(0..n);
            let j = (i + rng.random_range(1..n)) % n;
            s = mixer(n, i, j, rng.random_range(0.05..0.95)) * s;
        }
    }
    s
}

/// Random physical state: thermal modes pushed through a random symplectic.
pub fn random_state(rng: &mut ChaCha8Rng, n: usize) -> (DMatrix<f64>, Vec<f64>) {
    let nus: Vec<f64> = (0..n).map(|_| rng.random_range(1.0..5.0)).collect();
    let mut d = DMatrix::zeros(2 * n, 2 * n);
    for (k, &nu) in nus.iter().enumerate() {
        d[(2 * k, 2 * k)] = nu;
        d[(2 * k + 1, 2 * k + 1)] = nu;
    }
    let s = random_symplectic(rng, n, 3);
    let v = &s * d * s.transpose();
    ((&v + v.transpose()) * 0.5, nus)
}

/// Symplectic spectrum from the complex eigenvalues of Ω V.
pub fn dense_spectrum(v: &DMatrix<f64>) -> Vec<f64> {
    let n = v.nrows() / 2;
    let mut o = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        o[(2 * k, 2 * k + 1)] = 1.0;
        o[(2 * k + 1, 2 * k)] = -1.0;
    }
    let mut ev: Vec<f64> = (o * v).complex_eigenvalues().iter().map(|z| z.norm()).collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev.into_iter().step_by(2).collect()
}
