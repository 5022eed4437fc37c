//! Box-bounded Nelder–Mead minimisation.
//!
//! Points are clamped into the box before every evaluation, so the objective
//! is never called outside it. The best vertex only ever improves, which lets
//! callers seed the simplex at a grid optimum and keep that guarantee.

#[derive(Debug, Clone, Copy)]
pub struct NelderMead {
    /// Stop once the spread of objective values across the simplex falls
    /// below `f_tol_abs + f_tol_rel * |f_best|`.
    pub f_tol_abs: f64,
    pub f_tol_rel: f64,
    /// Stop once every vertex is within this distance of the best one.
    pub x_tol: f64,
    pub max_evals: usize,
    /// Initial step per coordinate, as a fraction of the box width.
    pub initial_step: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self {
            f_tol_abs: 1e-12,
            f_tol_rel: 1e-9,
            x_tol: 1e-10,
            max_evals: 4000,
            initial_step: 0.05,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
}

impl NelderMead {
    /// Minimises `f` over the box `[lo, hi]` starting from `x0`.
    ///
    /// Non-finite objective values are treated as +∞.
    pub fn minimize<F>(&self, mut f: F, x0: &[f64], lo: &[f64], hi: &[f64]) -> Minimum
    where
        F: FnMut(&[f64]) -> f64,
    {
        let n = x0.len();
        assert!(n > 0 && lo.len() == n && hi.len() == n);
        let clamp = |x: &mut [f64]| {
            for i in 0..n {
                x[i] = x[i].clamp(lo[i], hi[i]);
            }
        };
        let mut evals = 0usize;
        let mut eval = |x: &[f64], evals: &mut usize| {
            *evals += 1;
            let v = f(x);
            if v.is_finite() {
                v
            } else {
                f64::INFINITY
            }
        };

        let mut start = x0.to_vec();
        clamp(&mut start);
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        let f0 = eval(&start, &mut evals);
        simplex.push((start.clone(), f0));
        for i in 0..n {
            let mut v = start.clone();
            let step = self.initial_step * (hi[i] - lo[i]);
            // Step inward if the start sits on the upper face.
            v[i] = if v[i] + step <= hi[i] { v[i] + step } else { v[i] - step };
            clamp(&mut v);
            let fv = eval(&v, &mut evals);
            simplex.push((v, fv));
        }

        let order = |s: &mut Vec<(Vec<f64>, f64)>| {
            s.sort_by(|a, b| a.1.total_cmp(&b.1));
        };

        while evals < self.max_evals {
            order(&mut simplex);
            let fb = simplex[0].1;
            let fw = simplex[n].1;
            let spread = fw - fb;
            let xspread = simplex[1..]
                .iter()
                .flat_map(|(v, _)| v.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
                .fold(0.0f64, f64::max);
            if (spread.is_finite() && spread <= self.f_tol_abs + self.f_tol_rel * fb.abs())
                || xspread <= self.x_tol
            {
                break;
            }

            let mut centroid = vec![0.0; n];
            for (v, _) in &simplex[..n] {
                for i in 0..n {
                    centroid[i] += v[i] / n as f64;
                }
            }
            let along = |t: f64| -> Vec<f64> {
                let mut p: Vec<f64> = (0..n)
                    .map(|i| centroid[i] + t * (simplex[n].0[i] - centroid[i]))
                    .collect();
                clamp(&mut p);
                p
            };

            let xr = along(-1.0);
            let fr = eval(&xr, &mut evals);
            if fr < simplex[0].1 {
                let xe = along(-2.0);
                let fe = eval(&xe, &mut evals);
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
                continue;
            }
            if fr < simplex[n - 1].1 {
                simplex[n] = (xr, fr);
                continue;
            }
            let (xc, fc) = if fr < fw {
                let x = along(-0.5);
                let v = eval(&x, &mut evals);
                (x, v)
            } else {
                let x = along(0.5);
                let v = eval(&x, &mut evals);
                (x, v)
            };
            if fc < fw.min(fr) {
                simplex[n] = (xc, fc);
                continue;
            }
            // Shrink toward the best vertex.
            let best = simplex[0].0.clone();
            for (v, fv) in simplex.iter_mut().skip(1) {
                for i in 0..n {
                    v[i] = best[i] + 0.5 * (v[i] - best[i]);
                }
                *fv = eval(v, &mut evals);
            }
        }
        order(&mut simplex);
        let (x, f) = simplex.swap_remove(0);
        Minimum { x, f, evals }
    }

    /// Minimises over the box through the map `x = lo + (hi - lo)(1 + sin u)/2`
    /// instead of clamping.
    ///
    /// Clamping flattens a simplex against a face of the box, which can stall
    /// it short of an optimum near a corner. The map keeps the faces
    /// reachable while the simplex moves freely in `u`. `initial_step` is
    /// read as a fraction of a half period of the map.
    pub fn minimize_mapped<F>(&self, mut f: F, x0: &[f64], lo: &[f64], hi: &[f64]) -> Minimum
    where
        F: FnMut(&[f64]) -> f64,
    {
        use std::f64::consts::PI;
        let n = x0.len();
        assert!(lo.len() == n && hi.len() == n);
        let to_x = |u: &[f64]| -> Vec<f64> {
            (0..n).map(|i| (lo[i] + (hi[i] - lo[i]) * 0.5 * (1.0 + u[i].sin())).clamp(lo[i], hi[i])).collect()
        };
        let u0: Vec<f64> = (0..n)
            .map(|i| {
                let t = if hi[i] > lo[i] { 2.0 * (x0[i] - lo[i]) / (hi[i] - lo[i]) - 1.0 } else { 0.0 };
                t.clamp(-1.0, 1.0).asin()
            })
            .collect();
        // A box of many periods so the clamp in `minimize` never binds.
        let span = 20.0 * PI;
        let ulo: Vec<f64> = u0.iter().map(|u| u - span / 2.0).collect();
        let uhi: Vec<f64> = u0.iter().map(|u| u + span / 2.0).collect();
        let inner = NelderMead { initial_step: self.initial_step * PI / span, ..*self };
        let m = inner.minimize(|u| f(&to_x(u)), &u0, &ulo, &uhi);
        Minimum { x: to_x(&m.x), f: m.f, evals: m.evals }
    }
}
