use mdi_core::dv::{single_photon_error_x, single_photon_yield, wcp_gain_qber, DvDetectorPreset, IntensityPair};
use mdi_core::mc::{simulate_single_photon, simulate_wcp};

const N: u64 = 10_000_000;

#[test]
fn wcp_estimates_match_analytic_gain_and_qber() {
    let p = DvDetectorPreset::PRACTICAL;
    let mu = IntensityPair { mu_a: 0.3, mu_b: 0.3 };
    let (q, e) = wcp_gain_qber(0.5, 0.8, mu, &p).unwrap();
    let est = simulate_wcp(0.5, 0.8, mu, &p, N, 17).unwrap();
    assert!(est.q_z.z_score(q) <= 3.0, "Q {} vs {q}", est.q_z.mean);
    let e_est = est.e_z.unwrap();
    assert!(e_est.z_score(e) <= 3.0, "E {} vs {e}", e_est.mean);
}

#[test]
fn single_photon_estimates_match_analytic_formulas() {
    let p = DvDetectorPreset::PRACTICAL;
    let y = single_photon_yield(0.5, 0.8, &p).unwrap();
    let ex = single_photon_error_x(0.5, 0.8, &p).unwrap();
    let est = simulate_single_photon(0.5, 0.8, &p, N, 23).unwrap();
    assert!(est.y_z11.z_score(y) <= 3.0, "Y {} vs {y}", est.y_z11.mean);
    let ex_est = est.e_x11.unwrap();
    assert!(ex_est.z_score(ex) <= 3.0, "eX {} vs {ex}", ex_est.mean);
}

#[test]
fn noiseless_bright_pulses_match_model() {
    let p = DvDetectorPreset { eta_d: 1.0, y0: 0.0, e_d: 0.0, f_e: 1.16 };
    let mu = IntensityPair { mu_a: 1.0, mu_b: 1.0 };
    let (q, e) = wcp_gain_qber(1.0, 1.0, mu, &p).unwrap();
    let est = simulate_wcp(1.0, 1.0, mu, &p, 1_000_000, 5).unwrap();
    assert!(est.q_z.z_score(q) <= 3.0);
    assert!(est.e_z.unwrap().z_score(e) <= 3.0, "{} vs {e}", est.e_z.unwrap().mean);
}

#[test]
fn faint_pulses_reach_the_accidental_limit() {
    let p = DvDetectorPreset { y0: 5e-4, ..DvDetectorPreset::BEST_SEMI_LOW };
    let mu = IntensityPair { mu_a: 1e-4, mu_b: 1e-4 };
    let est = simulate_wcp(0.5, 0.5, mu, &p, N, 29).unwrap();
    let e = est.e_z.unwrap();
    assert!(e.z_score(0.5) <= 3.0, "{} ± {}", e.mean, e.std_error);
}
