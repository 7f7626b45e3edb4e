use platoon_core::noise::Snr;
use platoon_core::platoon::GainSet;
use platoon_core::synthesis::{
    feasible_region, gamma_bounds, headway_lower_bound, headway_slope_numerator,
    internal_stability, ka_upper_bound, optimal_ka_headway, GridBox,
};
use proptest::prelude::*;

fn rho() -> impl Strategy<Value = f64> {
    prop_oneof![1.01f64..2.0, 2.0f64..20.0, 20.0f64..1e4]
}

fn tau0() -> impl Strategy<Value = f64> {
    0.05f64..2.0
}

/// Fraction of the admissible `k_a` range, kept away from both ends.
fn ka_fraction() -> impl Strategy<Value = f64> {
    1e-4f64..(1.0 - 1e-4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn optimum_is_global_minimum(rho in rho(), tau0 in tau0(), frac in ka_fraction()) {
        let snr = Snr::Factor(rho);
        let opt = optimal_ka_headway(snr, tau0).unwrap();
        let ka = frac * ka_upper_bound(snr);
        let h = headway_lower_bound(ka, snr, tau0).unwrap();
        prop_assert!(h >= opt.hw_lb - 1e-12 * opt.hw_lb.max(1.0), "h({ka}) = {h} < {}", opt.hw_lb);
        prop_assert!(opt.ka > 0.0 && opt.ka < ka_upper_bound(snr));
        prop_assert!(opt.hw_lb >= tau0);
    }

    #[test]
    fn headway_bound_is_unimodal(rho in rho(), tau0 in tau0()) {
        let snr = Snr::Factor(rho);
        let opt = optimal_ka_headway(snr, tau0).unwrap();
        let max = ka_upper_bound(snr);
        let n = 64;
        let left: Vec<f64> = (1..n)
            .map(|k| opt.ka * k as f64 / n as f64)
            .map(|ka| headway_lower_bound(ka, snr, tau0).unwrap())
            .collect();
        let right: Vec<f64> = (1..n)
            .map(|k| opt.ka + (max - opt.ka) * k as f64 / n as f64)
            .map(|ka| headway_lower_bound(ka, snr, tau0).unwrap())
            .collect();
        prop_assert!(left.windows(2).all(|w| w[1] < w[0]), "not decreasing left of k*");
        prop_assert!(right.windows(2).all(|w| w[1] > w[0]), "not increasing right of k*");
    }

    #[test]
    fn slope_sign_flips_at_optimum(rho in rho(), frac in ka_fraction()) {
        let snr = Snr::Factor(rho);
        let opt = optimal_ka_headway(snr, 1.0).unwrap();
        let ka = frac * ka_upper_bound(snr);
        prop_assume!((ka - opt.ka).abs() > 1e-9);
        let f = headway_slope_numerator(ka, snr);
        if ka < opt.ka {
            prop_assert!(f < 0.0);
        } else {
            prop_assert!(f > 0.0);
        }
    }

    #[test]
    fn region_nonempty_iff_headway_above_bound(
        rho in rho(),
        tau0 in tau0(),
        frac in ka_fraction(),
        scale in 0.2f64..3.0,
    ) {
        let snr = Snr::Factor(rho);
        let ka = frac * ka_upper_bound(snr);
        let lb = headway_lower_bound(ka, snr, tau0).unwrap();
        let hw = lb * scale;
        prop_assume!((hw / lb - 1.0).abs() > 1e-12);
        let region = feasible_region(ka, snr, tau0, hw).unwrap();
        prop_assert_eq!(region.is_nonempty(), hw > lb);
        prop_assert!((region.ratio() - hw / lb).abs() <= 1e-12 * region.ratio());
        prop_assert!((region.b1 - region.a1 / hw).abs() <= 1e-15 * region.b1);
        prop_assert!((region.b2 - 2.0 * region.a2 / hw).abs() <= 1e-15 * region.b2);
        if hw > lb {
            let (kp, kv) = region.interior_point().unwrap();
            prop_assert!(region.contains(kp, kv));
        }
    }

    #[test]
    fn region_membership_matches_gamma_window(
        rho in rho(),
        tau0 in tau0(),
        frac in ka_fraction(),
        scale in 1.001f64..3.0,
        u in 0.0f64..1.0,
        v in 0.0f64..1.0,
    ) {
        let snr = Snr::Factor(rho);
        let ka = frac * ka_upper_bound(snr);
        let hw = headway_lower_bound(ka, snr, tau0).unwrap() * scale;
        let region = feasible_region(ka, snr, tau0, hw).unwrap();
        // sample a box around the region so both outcomes occur
        let kp = 1e-9 + u * 1.5 * region.b2.max(region.b1);
        let kv = 1e-9 + v * 1.5 * region.a1.max(region.a2);
        let gains = GainSet::new(ka, kv, kp, hw).unwrap();
        let window = gamma_bounds(snr, tau0, &gains).unwrap();
        let gamma = gains.gamma();
        let near_edge = (gamma - window.upper).abs() < 1e-12 * window.upper
            || (gamma - window.lower).abs() < 1e-12 * window.lower;
        prop_assume!(!near_edge);
        prop_assert_eq!(region.contains(kp, kv), window.passes());
        if region.contains(kp, kv) {
            prop_assert!(internal_stability(tau0, gamma, kp).unwrap());
        }
    }

    #[test]
    fn polygon_vertices_lie_in_region(
        rho in rho(),
        tau0 in tau0(),
        frac in ka_fraction(),
        scale in 1.01f64..3.0,
    ) {
        let snr = Snr::Factor(rho);
        let ka = frac * ka_upper_bound(snr);
        let hw = headway_lower_bound(ka, snr, tau0).unwrap() * scale;
        let region = feasible_region(ka, snr, tau0, hw).unwrap();
        let poly = region.polygon(&GridBox { kp: (0.0, region.b1), kv: (0.0, region.a1) });
        prop_assert!(poly.len() >= 3);
        for (kp, kv) in poly {
            prop_assert!(kv / region.a1 + kp / region.b1 <= 1.0 + 1e-9);
            prop_assert!(kv / region.a2 + kp / region.b2 >= 1.0 - 1e-9);
        }
    }

    #[test]
    fn noiseless_reduction(tau0 in tau0(), ka in 1e-4f64..0.9999) {
        let h = headway_lower_bound(ka, Snr::Noiseless, tau0).unwrap();
        let expect = 2.0 * tau0 / (1.0 + ka);
        prop_assert!((h - expect).abs() <= 4.0 * f64::EPSILON * expect);
    }
}

#[test]
fn large_rho_approaches_noiseless_limits() {
    let tau0 = 0.5;
    let opt = optimal_ka_headway(Snr::Factor(1e12), tau0).unwrap();
    assert!((opt.ka - 1.0).abs() < 1e-5);
    assert!((opt.hw_lb - tau0).abs() < 1e-5);
    let clean = optimal_ka_headway(Snr::Noiseless, tau0).unwrap();
    assert_eq!((clean.ka, clean.hw_lb), (1.0, tau0));
    assert!(!clean.attained);
}
