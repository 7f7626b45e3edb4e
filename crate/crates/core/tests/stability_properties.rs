use platoon_core::noise::{ka_interval, ChannelSpec, Snr};
use platoon_core::platoon::GainSet;
use platoon_core::stability::{
    build_tf, hinf_norm, quartic_conditions, robust_verdict, tau_samples, Classification, OmegaGrid,
};
use platoon_core::synthesis::{feasible_region, headway_lower_bound, ka_upper_bound, GridBox};
use proptest::prelude::*;

/// A random design strictly inside the feasible region.
#[derive(Debug, Clone)]
struct Design {
    snr: Snr,
    tau0: f64,
    gains: GainSet,
}

fn design() -> impl Strategy<Value = Design> {
    (
        1.05f64..50.0,
        0.1f64..1.5,
        0.02f64..0.98,
        1.01f64..2.5,
        prop::collection::vec(0.01f64..1.0, 8),
    )
        .prop_map(|(rho, tau0, frac, scale, weights)| {
            let snr = Snr::Factor(rho);
            let ka = frac * ka_upper_bound(snr);
            let hw = headway_lower_bound(ka, snr, tau0).unwrap() * scale;
            let region = feasible_region(ka, snr, tau0, hw).unwrap();
            let poly = region.polygon(&GridBox {
                kp: (0.0, region.b1),
                kv: (0.0, region.a1),
            });
            let centre = region.interior_point().unwrap();
            // convex mix of the vertices, pulled halfway to the centroid
            let total: f64 = weights.iter().take(poly.len()).sum();
            let (mut kp, mut kv) = (0.0, 0.0);
            for (w, (p, v)) in weights.iter().zip(&poly) {
                kp += w / total * p;
                kv += w / total * v;
            }
            let gains = GainSet::new(ka, 0.5 * (kv + centre.1), 0.5 * (kp + centre.0), hw).unwrap();
            Design { snr, tau0, gains }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn analytic_certificate_is_sound(
        d in design(),
        taus in prop::collection::vec(1e-3f64..=1.0, 50),
        kas in prop::collection::vec(0.0f64..=1.0, 20),
    ) {
        let (lo, hi) = ka_interval(d.gains.ka, d.snr);
        let cond = quartic_conditions((lo, hi), d.tau0, &d.gains);
        prop_assert!(cond.passes(), "{cond:?}");
        let grid = OmegaGrid::default();
        for &t in &taus {
            for &k in &kas {
                let tf = build_tf(&d.gains, lo + k * (hi - lo), t * d.tau0).unwrap();
                let norm = hinf_norm(&tf, &grid).unwrap();
                prop_assert!(norm.value <= 1.0 + 1e-9, "τ={} k̃={} norm={}", tf.tau, tf.ka_eff, norm.value);
            }
        }
    }

    #[test]
    fn condition_a_at_bound_covers_smaller_lags(d in design(), taus in prop::collection::vec(1e-3f64..=1.0, 50)) {
        let (lo, hi) = ka_interval(d.gains.ka, d.snr);
        let at_bound = build_tf(&d.gains, hi, d.tau0).unwrap().quartic_coefficients().1;
        prop_assert!(at_bound >= 0.0);
        for k in [lo, hi] {
            for &t in &taus {
                let c = build_tf(&d.gains, k, t * d.tau0).unwrap().quartic_coefficients().1;
                prop_assert!(c >= at_bound - 1e-15);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn dc_gain_is_exactly_one(
        ka in 1e-3f64..2.0,
        kv in 1e-3f64..5.0,
        kp in 1e-4f64..5.0,
        hw in 1e-2f64..5.0,
        tau in 1e-2f64..2.0,
    ) {
        let tf = build_tf(&GainSet::new(ka, kv, kp, hw).unwrap(), ka, tau).unwrap();
        prop_assert_eq!(tf.dc_gain(), 1.0);
        prop_assert_eq!(tf.magnitude(0.0).unwrap(), 1.0);
        prop_assert_eq!(tf.numerator()[2], tf.denominator()[3]);
    }

    #[test]
    fn quartic_identity(
        d in design(),
        w in 1e-3f64..1e2,
    ) {
        let tf = build_tf(&d.gains, d.gains.ka, d.tau0).unwrap();
        let (c2, c1, c0) = tf.quartic_coefficients();
        let w2 = w * w;
        let q = c2 * w2 * w2 + c1 * w2 + c0;
        let m = tf.magnitude(w).unwrap();
        // |D|²(1 − |H|²) = ω² q
        let n2 = (tf.kp - tf.ka_eff * w2).powi(2) + (tf.kv * w).powi(2);
        let d2 = n2 / (m * m);
        let scale = d2.max(1e-300);
        prop_assert!(((d2 - n2) - w2 * q).abs() <= 1e-9 * scale);
    }
}

#[test]
fn refinement_halving_is_stable() {
    for hw in [0.65, 0.8, 0.95] {
        let gains = GainSet::new(0.5, 0.63, 0.009, hw).unwrap();
        for ka_eff in [0.4, 0.524, 0.6] {
            let tf = build_tf(&gains, ka_eff, 0.5).unwrap();
            let base = OmegaGrid::default();
            let finer = OmegaGrid {
                rel_width: base.rel_width / 2.0,
                ..base
            };
            let a = hinf_norm(&tf, &base).unwrap().value;
            let b = hinf_norm(&tf, &finer).unwrap().value;
            assert!(
                (a - b).abs() < base.rel_width,
                "hw={hw} k̃={ka_eff}: {a} vs {b}"
            );
        }
    }
}

#[test]
fn certified_verdicts_hold_at_every_sample() {
    let spec = ChannelSpec::reference();
    let cases = [
        (
            GainSet::new(0.5, 0.63, 0.009, 0.95).unwrap(),
            Classification::Certified,
        ),
        (
            GainSet::new(0.5, 0.63, 0.009, 0.65).unwrap(),
            Classification::Unstable,
        ),
        (
            GainSet::new(0.318_305_009_375_087_6, 0.85, 0.003, 0.88).unwrap(),
            Classification::Certified,
        ),
    ];
    for (gains, expected) in cases {
        let v = robust_verdict(&spec, 0.5, &gains).unwrap();
        assert_eq!(v.classification, expected, "h_w = {}", gains.hw);
        assert_eq!(v.samples.len(), 3 * tau_samples(0.5).len());
        if expected == Classification::Certified {
            assert!(v.samples.iter().all(|s| s.hinf <= 1.0 + 1e-6));
        }
    }
}
