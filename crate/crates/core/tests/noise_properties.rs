use platoon_core::noise::{
    expected_noise_factor, link_rng, sample_noise_factor, snr_db_to_rho, ChannelSpec, Snr,
    REFERENCE_BIT_PROBS,
};
use proptest::prelude::*;

fn bit_probs(max_bits: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..0.99, 1..=max_bits)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn samples_stay_inside_attainable_range(
        rho in 1.01f64..50.0,
        probs in bit_probs(16),
        seed in any::<u64>(),
    ) {
        let spec = ChannelSpec::new(Snr::from_factor(rho).unwrap(), probs).unwrap();
        let lo = 1.0 - 1.0 / rho;
        let hi = spec.max_attainable();
        prop_assert!(hi < 1.0 + 1.0 / rho);
        let mut rng = link_rng(seed, 1);
        for _ in 0..500 {
            let w = sample_noise_factor(&spec, &mut rng).value();
            prop_assert!(w >= lo - 1e-15 && w <= hi + 1e-15, "w = {w}");
        }
    }

    #[test]
    fn mean_factor_increases_with_each_bit_probability(
        rho in 1.01f64..50.0,
        probs in bit_probs(16),
        idx in any::<prop::sample::Index>(),
        bump in 1e-3f64..0.5,
    ) {
        let snr = Snr::from_factor(rho).unwrap();
        let j = idx.index(probs.len());
        let base = ChannelSpec::new(snr, probs.clone()).unwrap();
        let mut raised = probs;
        raised[j] = (raised[j] + bump).min(0.995);
        prop_assume!(raised[j] > base.bit_probs[j]);
        let raised = ChannelSpec::new(snr, raised).unwrap();
        prop_assert!(expected_noise_factor(&raised) > expected_noise_factor(&base));
    }

    #[test]
    fn mean_factor_inside_open_band(rho in 1.01f64..50.0, probs in bit_probs(16)) {
        let spec = ChannelSpec::new(Snr::from_factor(rho).unwrap(), probs).unwrap();
        let w = expected_noise_factor(&spec);
        prop_assert!(w > 1.0 - 1.0 / rho && w < 1.0 + 1.0 / rho);
    }

    #[test]
    fn db_round_trip(db in 1e-4f64..80.0) {
        let rho = snr_db_to_rho(db).unwrap();
        prop_assert!(rho > 1.0);
        prop_assert!((20.0 * rho.log10() - db).abs() < 1e-9 * db.max(1.0));
    }
}

#[test]
fn empirical_mean_is_unbiased() {
    let spec = ChannelSpec::reference();
    let wbar = expected_noise_factor(&spec);
    let sigma = spec.noise_std();
    let m = 200_000usize;
    for seed in [1u64, 2, 3] {
        let mut rng = link_rng(seed, 1);
        let sum: f64 = (0..m)
            .map(|_| sample_noise_factor(&spec, &mut rng).value())
            .sum();
        let mean = sum / m as f64;
        assert!(
            (mean - wbar).abs() <= 4.0 * sigma / (m as f64).sqrt(),
            "seed {seed}: mean {mean} vs {wbar}"
        );
    }
}

#[test]
fn empirical_spread_matches_bit_variance() {
    let spec = ChannelSpec::reference();
    let sigma = spec.noise_std();
    let mut rng = link_rng(11, 3);
    let m = 100_000;
    let xs: Vec<f64> = (0..m)
        .map(|_| sample_noise_factor(&spec, &mut rng).value())
        .collect();
    let mean = xs.iter().sum::<f64>() / m as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
    assert!((var.sqrt() / sigma - 1.0).abs() < 0.02);
}

#[test]
fn single_fair_bit() {
    for rho in [1.5, 5.0, 40.0] {
        let spec = ChannelSpec::new(Snr::Factor(rho), vec![0.5]).unwrap();
        assert!((expected_noise_factor(&spec) - (1.0 - 0.5 / rho)).abs() < 1e-15);
    }
}

#[test]
fn reference_list_has_sixteen_bits() {
    let spec = ChannelSpec::reference();
    assert_eq!(spec.bits(), REFERENCE_BIT_PROBS.len());
    assert_eq!(spec.bits(), 16);
}
