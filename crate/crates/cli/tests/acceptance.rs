//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use mdi_core::channel::{LinkBudget, RelayConfiguration};
use mdi_core::cv::{self, CvParams};
use mdi_core::dv::binary_entropy;
use mdi_core::gaussian::bosonic_entropy_h;
use mdi_core::mc;
use mdi_core::presets::Registry;
use mdi_core::sweep::{run_sweep, CurveRecord, SweepSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GAP_PRACTICAL: (f64, f64) = (3.0, 4.5);
const GAP_SNSPD: (f64, f64) = (1.0 - 0.7, 1.0 + 0.7);
const GAP_SEMI: (f64, f64) = (2.0 - 0.5, 3.0 + 0.5);
const SWEEP_BUDGET: Duration = Duration::from_secs(120);
const MC_BUDGET: Duration = Duration::from_secs(180);
const MC_TRIALS: u64 = 10_000_000;
const CONVERGENCE_BITS: f64 = 1e-3;
const SYMMETRIC_CROSSING_KM: (f64, f64) = (6.0 - 2.0, 6.0 + 2.0);
const CAPACITY_DECADES: f64 = 1.5;

type Criterion = (&'static str, fn() -> Verdict);

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

fn sweep(panel: char, curves: &[&str]) -> (Vec<CurveRecord>, Duration) {
    let spec = SweepSpec { panel, curves: curves.iter().map(|s| s.to_string()).collect(), ..Default::default() };
    let t = Instant::now();
    let recs = run_sweep(&spec, &Registry::builtin()).expect("valid sweep");
    (recs, t.elapsed())
}

fn clamped(recs: &[CurveRecord], curve: &str) -> Vec<(f64, Option<f64>)> {
    recs.iter().filter(|r| r.curve_id == curve).map(|r| (r.d_tot, r.rate_clamped)).collect()
}

/// Checks `log10(x/y)` against `band` at every grid point in 5–25 km and
/// reports the offending points.
fn gap_check(recs: &[CurveRecord], x: &str, y: &str, band: (f64, f64), label: &str) -> (bool, String) {
    let xs = clamped(recs, x);
    let ys = clamped(recs, y);
    let mut bad = Vec::new();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for ((d, rx), (_, ry)) in xs.iter().zip(&ys) {
        if *d < 5.0 - 1e-9 || *d > 25.0 + 1e-9 {
            continue;
        }
        match (rx, ry) {
            (Some(a), Some(b)) if *a > 0.0 && *b > 0.0 => {
                let g = (a / b).log10();
                lo = lo.min(g);
                hi = hi.max(g);
                if !(band.0..=band.1).contains(&g) {
                    bad.push(format!("{d}km:{g:.2}"));
                }
            }
            _ => bad.push(format!("{d}km:undefined")),
        }
    }
    let mut s = format!("{label} gap range [{lo:.2}, {hi:.2}]");
    if !bad.is_empty() {
        let shown: Vec<_> = bad.iter().take(6).cloned().collect();
        s += &format!(", {} points outside: {}{}", bad.len(), shown.join(" "), if bad.len() > 6 { " ..." } else { "" });
    }
    (bad.is_empty(), s)
}

fn criterion_1() -> Verdict {
    let (recs, took) = sweep('a', &["cv-practical", "dv-practical"]);
    let (ok, s) = gap_check(&recs, "cv-practical", "dv-practical", GAP_PRACTICAL, "a");
    let fast = took <= SWEEP_BUDGET;
    Verdict::new(ok && fast, format!("target [3, 4.5]; {s}; sweep {:.2}s", took.as_secs_f64()))
}

fn criterion_2() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for panel in ['a', 'b', 'c', 'd'] {
        let (recs, _) = sweep(panel, &["cv-practical", "dv-snspd"]);
        let (ok, s) = gap_check(&recs, "cv-practical", "dv-snspd", GAP_SNSPD, &panel.to_string());
        pass &= ok;
        parts.push(s);
    }
    Verdict::new(pass, format!("target 1.0 ± 0.7; {}", parts.join("; ")))
}

fn criterion_3() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for panel in ['a', 'b', 'c'] {
        let (recs, _) = sweep(panel, &["cv-practical", "dv-best-semi-low", "dv-best-semi-high"]);
        for edge in ["dv-best-semi-low", "dv-best-semi-high"] {
            let (ok, s) = gap_check(&recs, "cv-practical", edge, GAP_SEMI, &format!("{panel}/{edge}"));
            pass &= ok;
            parts.push(s);
        }
    }
    Verdict::new(pass, format!("target [2, 3] ± 0.5; {}", parts.join("; ")))
}

fn symmetric_rate(d: f64) -> f64 {
    let link = LinkBudget::from_total(RelayConfiguration::Symmetric, d, 0.2).unwrap();
    cv::general_rate(link.eta_a, link.eta_b, &CvParams::PRACTICAL).unwrap().rate_raw
}

fn criterion_4() -> Verdict {
    let at5 = symmetric_rate(5.0).max(0.0);
    let at9 = symmetric_rate(9.0).max(0.0);
    let crossing = if at5 > 0.0 && at9 == 0.0 {
        let (mut a, mut b) = (5.0, 9.0);
        for _ in 0..50 {
            let m = 0.5 * (a + b);
            if symmetric_rate(m) > 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        Some(0.5 * (a + b))
    } else {
        None
    };
    let pass = crossing.is_some_and(|c| (SYMMETRIC_CROSSING_KM.0..=SYMMETRIC_CROSSING_KM.1).contains(&c));
    Verdict::new(
        pass,
        format!(
            "R(5km) = {at5:.4}, R(9km) = {at9}, zero crossing {} (window [4, 8] km)",
            crossing.map_or("not bracketed".into(), |c| format!("{c:.3} km"))
        ),
    )
}

fn criterion_5() -> Verdict {
    let mut above = Vec::new();
    for panel in ['a', 'b', 'c', 'd'] {
        let (recs, _) = sweep(panel, &["cv-ideal-rec", "capacity-upper"]);
        let cv = clamped(&recs, "cv-ideal-rec");
        let up = clamped(&recs, "capacity-upper");
        for ((d, r), (_, u)) in cv.iter().zip(&up) {
            if let (Some(r), Some(u)) = (r, u) {
                if r > u {
                    above.push(format!("{panel}@{d}km"));
                }
            }
        }
    }
    let (recs, _) = sweep('a', &["cv-ideal-rec", "capacity-lower"]);
    let cv = clamped(&recs, "cv-ideal-rec");
    let lo = clamped(&recs, "capacity-lower");
    let mut far = Vec::new();
    let mut worst = 0.0f64;
    for ((d, r), (_, k)) in cv.iter().zip(&lo) {
        match (r, k) {
            (Some(r), Some(k)) if *r > 0.0 && *k > 0.0 => {
                let decades = (r / k).log10().abs();
                worst = worst.max(decades);
                if decades > CAPACITY_DECADES {
                    far.push(format!("{d}km:{decades:.2}"));
                }
            }
            _ => far.push(format!("{d}km:undefined")),
        }
    }
    Verdict::new(
        above.is_empty() && far.is_empty(),
        format!(
            "{} points above K_upper; panel a max |log10(R/K_lower)| = {worst:.3} (limit 1.5){}",
            above.len(),
            if far.is_empty() { String::new() } else { format!(", outside: {}", far.join(" ")) }
        ),
    )
}

fn criterion_6() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let ea: f64 = rng.random_range(0.5..1.0);
        let eb: f64 = rng.random_range(0.05..1.0);
        let eps: f64 = rng.random_range(0.0..0.05);
        let p = CvParams { phi: 1e6, xi: 1.0, eta_d: 1.0, epsilon: eps };
        let general = cv::general_rate(ea, eb, &p).unwrap().rate_raw;
        let closed = cv::closed_form_rate_asymmetric(ea, eb, eps).unwrap();
        worst = worst.max((general - closed).abs());
    }
    let mut cont: f64 = 0.0;
    for (eta, eps) in [(0.9, 0.0), (0.95, 0.01), (0.99, 0.03), (0.7, 0.005)] {
        let s = cv::closed_form_rate_symmetric(eta, eps).unwrap();
        let a = cv::closed_form_rate_asymmetric(eta + 1e-6, eta, eps).unwrap();
        cont = cont.max((s - a).abs());
    }
    Verdict::new(
        worst <= CONVERGENCE_BITS && cont <= CONVERGENCE_BITS,
        format!("max |general - closed| = {worst:.2e} bits over 10 tuples; symmetric continuity {cont:.2e} bits"),
    )
}

fn criterion_7() -> Verdict {
    let t = Instant::now();
    let cases = mc::random_cases(5, 7);
    let rows = mc::validate(&cases, MC_TRIALS, 7, 3.0).unwrap();
    let took = t.elapsed();
    let failed: Vec<String> = rows
        .iter()
        .filter(|r| !r.pass)
        .map(|r| format!("case {} {} z={:.2}", r.case, r.quantity, r.z_score))
        .collect();
    let max_z = rows.iter().map(|r| r.z_score).fold(0.0, f64::max);
    Verdict::new(
        failed.is_empty() && took <= MC_BUDGET,
        format!(
            "{} checks, max z = {max_z:.2}, {:.1}s{}",
            rows.len(),
            took.as_secs_f64(),
            if failed.is_empty() { String::new() } else { format!(", failing: {}", failed.join(", ")) }
        ),
    )
}

fn criterion_8() -> Verdict {
    let h2 = binary_entropy(0.25).unwrap();
    let g3 = bosonic_entropy_h(3.0).unwrap();
    let sym = cv::symmetric_rate_from_chi(5.0).unwrap();
    let asym = cv::closed_form_rate_asymmetric(0.8, 1.0, 0.0).unwrap();
    let checks = [
        (h2 - 0.811278).abs() <= 1e-6,
        g3 == 2.0,
        (sym - -0.3049).abs() <= 1e-3,
        (asym - 0.5574).abs() <= 1e-3,
    ];
    Verdict::new(
        checks.iter().all(|&c| c),
        format!("H2(0.25) = {h2:.9}, h(3) = {g3}, symmetric(χ=5) = {sym:.6}, asymmetric(0.8, 1, 0) = {asym:.6}"),
    )
}

fn criterion_9() -> Verdict {
    let dir = std::env::temp_dir().join(format!("mdi-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let threads = std::thread::available_parallelism().map_or(8, |n| n.get()).max(8).to_string();
    let mut files = Vec::new();
    for (i, t) in [None, Some("1"), Some(threads.as_str()), None].into_iter().enumerate() {
        let path = dir.join(format!("run{i}.csv"));
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_mdi-sweep"));
        cmd.args(["sweep", "--panel", "a", "--out"]).arg(&path);
        if let Some(t) = t {
            cmd.env("RAYON_NUM_THREADS", t);
        }
        let status = cmd.status().unwrap();
        if !status.success() {
            return Verdict::new(false, format!("sweep run {i} exited with {status}"));
        }
        files.push(std::fs::read(&path).unwrap());
    }
    let _ = std::fs::remove_dir_all(&dir);
    let same = files.windows(2).all(|w| w[0] == w[1]);
    Verdict::new(same, format!("4 runs (default, 1 and {threads} threads, default), {} bytes each", files[0].len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("practical CV vs practical DV gap, panel a", criterion_1),
        ("CV vs SNSPD DV gap, panels a-d", criterion_2),
        ("CV vs best semiconductor DV gap, panels a-c", criterion_3),
        ("symmetric CV reach, panel d", criterion_4),
        ("capacity sandwich", criterion_5),
        ("closed-form convergence", criterion_6),
        ("Monte Carlo oracle agreement", criterion_7),
        ("spot values", criterion_8),
        ("sweep determinism", criterion_9),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        if !v.pass {
            failures += 1;
        }
        println!("{} criterion {} ({name}): {}", if v.pass { "PASS" } else { "FAIL" }, i + 1, v.detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
