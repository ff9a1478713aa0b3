use deconv_cdf_core::discretize::{bin_observations, lipschitz_class, BinGrid, DiscreteProblem, OutOfRange, A_FLOOR};
use deconv_cdf_core::noise::NoiseModel;
use deconv_cdf_core::rng::rng_from_seed;
use proptest::prelude::*;
use rand::Rng;

fn problem(m: usize, big_m: usize, scale: f64) -> DiscreteProblem {
    let noise = NoiseModel::laplace_preset(0.0, scale).unwrap();
    let bins_i = BinGrid::uniform(-2.0, 2.0, big_m).unwrap();
    let bins_j = DiscreteProblem::default_observation_bins(&noise, &bins_i, m).unwrap();
    DiscreteProblem::new(&noise, bins_j, bins_i, 0.0, 100, 0.05).unwrap()
}

fn simplex_point(weights: Vec<f64>) -> Vec<f64> {
    let s: f64 = weights.iter().sum();
    weights.iter().map(|w| w / s).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn channel_matrix_is_substochastic(m in 1usize..20, big_m in 1usize..20, scale in 0.05..2.0f64) {
        let p = problem(m, big_m, scale);
        for v in p.a.as_slice() {
            prop_assert!((0.0..=1.0).contains(v));
        }
        for s in p.a.column_sums() {
            // each floored entry may add up to A_FLOOR
            prop_assert!(s > 0.0 && s <= 1.0 + m as f64 * A_FLOOR + 1e-15);
        }
    }

    #[test]
    fn forward_model_maps_simplex_into_subsimplex(
        m in 1usize..15,
        w in prop::collection::vec(0.01..1.0f64, 1..15),
    ) {
        let p = problem(m, w.len(), 0.5);
        let x = simplex_point(w);
        let ax = p.a.mul_vec(&x);
        prop_assert!(ax.iter().all(|&v| v >= 0.0));
        prop_assert!(ax.iter().sum::<f64>() <= 1.0 + m as f64 * A_FLOOR + 1e-12);
    }

    #[test]
    fn binning_preserves_counts_and_ignores_order(
        y in prop::collection::vec(-3.0..3.0f64, 1..60),
        m in 1usize..10,
        seed in any::<u64>(),
    ) {
        let bins = BinGrid::uniform(-2.0, 2.0, m).unwrap();
        let e = bin_observations(&y, &bins, OutOfRange::Clamp).unwrap();
        prop_assert_eq!(e.counts.iter().sum::<u64>() as usize, y.len());
        prop_assert!((e.p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        let mut shuffled = y.clone();
        rand::seq::SliceRandom::shuffle(shuffled.as_mut_slice(), &mut rng_from_seed(seed));
        let f = bin_observations(&shuffled, &bins, OutOfRange::Clamp).unwrap();
        prop_assert_eq!(e.counts, f.counts);
    }

    #[test]
    fn lipschitz_classes_nest(dim in 2usize..8, l in 0.001..0.5f64, extra in 0.0..0.5f64) {
        let small = lipschitz_class(dim, l).unwrap();
        let large = lipschitz_class(dim, l + extra).unwrap();
        prop_assert!(small.is_subset_of(&large, 1e-12).unwrap());
    }
}

#[test]
fn forward_model_matches_simulation() {
    let n = 100_000;
    let big_m = 8;
    let m = 12;
    let noise = NoiseModel::scenario_gamma();
    let bins_i = BinGrid::uniform(-2.0, 2.0, big_m).unwrap();
    let bins_j = DiscreteProblem::default_observation_bins(&noise, &bins_i, m).unwrap();
    let p = DiscreteProblem::new(&noise, bins_j.clone(), bins_i.clone(), 0.0, n, 0.05).unwrap();
    let x = simplex_point(vec![1.0, 3.0, 0.5, 2.0, 2.0, 0.2, 1.0, 4.0]);
    let mids = bins_i.midpoints();
    let mut rng = rng_from_seed(2024);
    let y: Vec<f64> = (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let k = x
                .iter()
                .position(|&w| {
                    acc += w;
                    u < acc
                })
                .unwrap_or(big_m - 1);
            mids[k] + noise.law.sample(&mut rng)
        })
        .collect();
    let emp = bin_observations(&y, &bins_j, OutOfRange::Clamp).unwrap();
    let ax = p.a.mul_vec(&x);
    let tv = 0.5 * emp.p.iter().zip(&ax).map(|(a, b)| (a - b).abs()).sum::<f64>();
    assert!(tv <= 5.0 * (m as f64 / n as f64).sqrt(), "total variation {tv}");
}

#[test]
fn vacuous_and_degenerate_lipschitz_classes() {
    let simplex = deconv_cdf_core::discretize::ConvexClass::simplex(4).unwrap();
    let wide = lipschitz_class(4, 1.0).unwrap();
    assert!(simplex.is_subset_of(&wide, 1e-12).unwrap());
    let pinned = lipschitz_class(2, 0.0).unwrap();
    let (x, _) = pinned.maximize_linear(&[1.0, 0.0]).unwrap();
    assert!((x[0] - 0.5).abs() <= 1e-12 && (x[1] - 0.5).abs() <= 1e-12);
    assert!(!pinned.has_interior());
}
