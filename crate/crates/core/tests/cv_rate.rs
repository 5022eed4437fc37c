use mdi_core::channel::{secret_key_capacity_bounds, LinkBudget, RelayConfiguration};
use mdi_core::cv::{
    closed_form_rate, closed_form_rate_asymmetric, closed_form_rate_symmetric, general_rate,
    general_rate_with, worst_case_holevo, CvOptions, CvParams, MutualInfoModel,
};
use mdi_core::dv::{optimize_intensities, DvDetectorPreset};
use mdi_core::gaussian::attack_is_physical;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const LARGE: CvParams = CvParams { phi: 1e6, xi: 1.0, eta_d: 1.0, epsilon: 0.0 };

/// Slack for comparisons between two separately optimised attacks.
const SEARCH_SLACK: f64 = 1e-5;

fn panels() -> [RelayConfiguration; 4] {
    ['a', 'b', 'c', 'd'].map(|c| RelayConfiguration::panel(c).unwrap())
}

#[test]
fn large_modulation_matches_closed_form() {
    let mut r = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..10 {
        let ea: f64 = r.random_range(0.5..1.0);
        let eb: f64 = r.random_range(0.05..1.0);
        let eps: f64 = r.random_range(0.0..0.05);
        let params = CvParams { epsilon: eps, ..LARGE };
        let ours = general_rate(ea, eb, &params).unwrap().rate_raw;
        let closed = closed_form_rate_asymmetric(ea, eb, eps).unwrap();
        assert!((ours - closed).abs() < 1e-3, "({ea}, {eb}, {eps}): {ours} vs {closed}");
    }
}

#[test]
fn closed_form_is_continuous_across_symmetric_guard() {
    for (eta, eps) in [(0.9, 0.0), (0.95, 0.01), (0.8, 0.002), (0.99, 0.03)] {
        let sym = closed_form_rate_symmetric(eta, eps).unwrap();
        let asym = closed_form_rate_asymmetric(eta + 1e-6, eta, eps).unwrap();
        assert!((sym - asym).abs() < 1e-3, "{eta}: {sym} vs {asym}");
        assert!((closed_form_rate(eta, eta, eps).unwrap() - sym).abs() < 1e-12);
    }
}

#[test]
fn no_reconciliation_means_no_key() {
    let p = CvParams { xi: 0.0, ..CvParams::PRACTICAL };
    let b = general_rate(0.9, 0.5, &p).unwrap();
    assert!(b.rate_raw <= 0.0);
    assert_eq!(b.rate_clamped(), 0.0);
}

#[test]
fn exact_and_large_modulation_information_agree_at_large_phi() {
    let opts = CvOptions { mutual_info: MutualInfoModel::LargeModulation, ..Default::default() };
    let p = CvParams { epsilon: 0.01, ..LARGE };
    let a = general_rate(0.95, 0.6, &p).unwrap();
    let b = general_rate_with(0.95, 0.6, &p, &opts).unwrap();
    assert!((a.i_ab - b.i_ab).abs() < 1e-4);
}

#[test]
fn rate_decreases_faster_in_alice_link() {
    let p = CvParams::PRACTICAL;
    let d = 0.02;
    for i in 0..6 {
        for j in i..6 {
            let eta = 0.7 + 0.05 * i as f64;
            let eta_p = 0.7 + 0.05 * j as f64;
            let alice_hit = general_rate(eta - d, eta_p, &p).unwrap().rate_raw;
            let bob_hit = general_rate(eta, eta_p - d, &p).unwrap().rate_raw;
            assert!(alice_hit <= bob_hit + 1e-9, "({eta}, {eta_p}): {alice_hit} > {bob_hit}");
        }
    }
}

#[test]
fn practical_cv_beats_every_dv_preset_at_ten_km() {
    let link = LinkBudget::from_total(RelayConfiguration::RelayAtAlice, 10.0, 0.2).unwrap();
    let cv = general_rate(link.eta_a, link.eta_b, &CvParams::PRACTICAL).unwrap().rate_raw;
    for preset in [
        DvDetectorPreset::PRACTICAL,
        DvDetectorPreset::BEST_SEMI_LOW,
        DvDetectorPreset::BEST_SEMI_HIGH,
        DvDetectorPreset::SNSPD,
    ] {
        let dv = optimize_intensities(link.eta_a, link.eta_b, &preset).unwrap().r_star;
        assert!(cv > dv, "{cv} vs {dv}");
    }
}

#[test]
fn clamped_rates_stay_below_capacity_on_every_panel() {
    for relay in panels() {
        for params in [CvParams::PRACTICAL, CvParams::IDEAL_RECONCILIATION] {
            for i in 1..=50 {
                let d = 0.5 * i as f64;
                let Ok(link) = LinkBudget::from_total(relay, d, 0.2) else { continue };
                let (_, upper) = secret_key_capacity_bounds(link.eta_tot()).unwrap();
                let r = general_rate(link.eta_a, link.eta_b, &params).unwrap().rate_clamped();
                assert!(r <= upper, "{relay:?} {d} km: {r} > {upper}");
            }
        }
    }
}

fn eta() -> impl Strategy<Value = f64> {
    0.3f64..0.999
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn worst_case_attack_is_physical(ea in eta(), eb in eta(), eps in 0.0f64..0.05) {
        let p = CvParams { epsilon: eps, ..CvParams::PRACTICAL };
        let (chi_e, att) = worst_case_holevo(ea, eb, &p).unwrap();
        prop_assert!(attack_is_physical(&att).margin >= -1e-9);
        prop_assert!(chi_e >= 0.0);
    }

    #[test]
    fn rate_non_increasing_in_excess_noise(ea in eta(), eb in eta(), eps in 0.0f64..0.04, de in 0.002f64..0.02) {
        let lo = general_rate(ea, eb, &CvParams { epsilon: eps, ..CvParams::PRACTICAL }).unwrap().rate_raw;
        let hi = general_rate(ea, eb, &CvParams { epsilon: eps + de, ..CvParams::PRACTICAL }).unwrap().rate_raw;
        prop_assert!(hi <= lo + SEARCH_SLACK, "{} > {}", hi, lo);
    }

    #[test]
    fn rate_non_decreasing_in_reconciliation(ea in eta(), eb in eta(), xi in 0.5f64..0.99, dx in 0.001f64..0.01) {
        let a = general_rate(ea, eb, &CvParams { xi, ..CvParams::PRACTICAL }).unwrap().rate_raw;
        let b = general_rate(ea, eb, &CvParams { xi: xi + dx, ..CvParams::PRACTICAL }).unwrap().rate_raw;
        prop_assert!(b >= a - SEARCH_SLACK, "{} < {}", b, a);
    }

    #[test]
    fn rate_non_decreasing_in_detector_efficiency(ea in eta(), eb in eta(), ed in 0.5f64..0.98, dd in 0.005f64..0.02) {
        let a = general_rate(ea, eb, &CvParams { eta_d: ed, ..CvParams::PRACTICAL }).unwrap().rate_raw;
        let b = general_rate(ea, eb, &CvParams { eta_d: ed + dd, ..CvParams::PRACTICAL }).unwrap().rate_raw;
        prop_assert!(b >= a - SEARCH_SLACK, "{} < {}", b, a);
    }

    // Both informations vanish at φ = 0, so where the large-modulation rate is
    // negative the raw rate falls with φ. The property is checked at ξ = 1
    // inside the key-generating region.
    #[test]
    fn rate_non_decreasing_in_modulation(ea in 0.9f64..0.999, eb in eta(), phi in 5.0f64..200.0, k in 1.1f64..3.0) {
        let base = CvParams::IDEAL_RECONCILIATION;
        let a = general_rate(ea, eb, &CvParams { phi, ..base }).unwrap().rate_raw;
        prop_assume!(a >= 0.0);
        let b = general_rate(ea, eb, &CvParams { phi: phi * k, ..base }).unwrap().rate_raw;
        prop_assert!(b >= a - SEARCH_SLACK, "{} < {}", b, a);
    }
}
