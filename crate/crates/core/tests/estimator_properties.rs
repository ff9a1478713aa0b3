use deconv_cdf_core::fourier::{estimate_cdf, estimate_cdf_with, InversionKernel, SampleSet};
use deconv_cdf_core::noise::{Distribution, NoiseModel};
use deconv_cdf_core::quadrature::QuadratureConfig;
use proptest::prelude::*;

fn quad() -> QuadratureConfig {
    QuadratureConfig::default()
}

fn sample_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-4.0..4.0f64, 1..12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn permutation_invariant(y in sample_strategy(), lambda in 0.1..15.0f64, t0 in -2.0..2.0f64, seed in any::<u64>()) {
        let noise = NoiseModel::laplace_preset(0.0, 0.5).unwrap();
        let mut shuffled = y.clone();
        let mut rng = deconv_cdf_core::rng::rng_from_seed(seed);
        rand::seq::SliceRandom::shuffle(shuffled.as_mut_slice(), &mut rng);
        let a = estimate_cdf(&SampleSet::new(y), &noise, lambda, t0, &quad()).unwrap();
        let b = estimate_cdf(&SampleSet::new(shuffled), &noise, lambda, t0, &quad()).unwrap();
        prop_assert!((a.value_raw - b.value_raw).abs() <= 1e-12);
    }

    #[test]
    fn linear_in_empirical_measure(
        (y1, y2) in (1usize..8).prop_flat_map(|k| (prop::collection::vec(-4.0..4.0f64, k), prop::collection::vec(-4.0..4.0f64, k))),
        lambda in 0.1..15.0f64,
        t0 in -2.0..2.0f64,
    ) {
        let noise = NoiseModel::scenario_gamma();
        let kernel = InversionKernel::quadrature(&noise, quad());
        let a = estimate_cdf_with(&SampleSet::new(y1.clone()), &kernel, lambda, t0, false).unwrap();
        let b = estimate_cdf_with(&SampleSet::new(y2.clone()), &kernel, lambda, t0, false).unwrap();
        let mut both = y1;
        both.extend(y2);
        let c = estimate_cdf_with(&SampleSet::new(both), &kernel, lambda, t0, false).unwrap();
        prop_assert!((c.value_raw - 0.5 * (a.value_raw + b.value_raw)).abs() <= 1e-6);
    }

    #[test]
    fn clipped_value_in_unit_interval(y in sample_strategy(), lambda in 0.0..40.0f64, t0 in -3.0..3.0f64) {
        let noise = NoiseModel::scenario_gamma();
        let kernel = InversionKernel::for_noise(&noise, quad());
        let r = estimate_cdf_with(&SampleSet::new(y), &kernel, lambda, t0, true).unwrap();
        prop_assert!(r.value_raw.is_finite());
        prop_assert!((0.0..=1.0).contains(&r.value_clipped));
        prop_assert_eq!(r.value_clipped, r.value_raw.clamp(0.0, 1.0));
        let per = r.per_obs_integrals.unwrap();
        let back = 0.5 - per.iter().sum::<f64>() / (std::f64::consts::PI * per.len() as f64);
        prop_assert!((back - r.value_raw).abs() <= 1e-12);
    }
}

#[test]
fn nearly_noiseless_matches_edf() {
    let n = 10_000;
    let noise = NoiseModel::gaussian_preset(0.0, 1e-8).unwrap();
    let target = Distribution::gaussian(0.0, 1.0).unwrap();
    let sample = SampleSet::simulate(&target, &noise, n, 11);
    let kernel = InversionKernel::for_noise(&noise, quad());
    let mut worst = 0.0f64;
    for i in 0..=20 {
        let t0 = -2.0 + 0.2 * i as f64;
        let est = estimate_cdf_with(&sample, &kernel, 50.0, t0, false).unwrap();
        let edf = sample.y.iter().filter(|&&y| y <= t0).count() as f64 / n as f64;
        worst = worst.max((est.value_clipped - edf).abs());
    }
    assert!(worst <= 0.05, "max deviation {worst}");
}

#[test]
fn closed_form_kernels_agree_with_quadrature() {
    let cfg = QuadratureConfig {
        abs_tol: 1e-11,
        rel_tol: 1e-10,
        ..QuadratureConfig::default()
    };
    for noise in [NoiseModel::scenario_gamma(), NoiseModel::laplace_preset(0.4, 0.5).unwrap()] {
        let exact = InversionKernel::for_noise(&noise, cfg);
        let numeric = InversionKernel::quadrature(&noise, cfg);
        assert!(!matches!(exact, InversionKernel::Quadrature { .. }));
        for i in 0..15 {
            let d = -5.0 + i as f64 * 0.71;
            for lambda in [0.3, 2.0, 7.5, 30.0] {
                let a = exact.integral_to(d, lambda).unwrap();
                let b = numeric.integral_to(d, lambda).unwrap();
                assert!((a - b).abs() <= 1e-7, "d = {d}, λ = {lambda}: {a} vs {b}");
            }
        }
    }
}
