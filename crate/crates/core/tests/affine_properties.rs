use deconv_cdf_core::affine::{
    build_affine_estimator, h_constraint, solve_smax, SolveOptions, SolveReport, SolverKind,
};
use deconv_cdf_core::discretize::{lipschitz_class, BinGrid, ConvexClass, DiscreteProblem};
use deconv_cdf_core::linalg::Matrix;
use deconv_cdf_core::noise::NoiseModel;
use deconv_cdf_core::rng::rng_from_seed;
use proptest::prelude::*;
use rand::Rng;

fn laplace_problem(m: usize, big_m: usize, n: usize, epsilon: f64) -> DiscreteProblem {
    let noise = NoiseModel::laplace_preset(0.0, 0.4).unwrap();
    let bins_i = BinGrid::uniform(-1.0, 1.0, big_m).unwrap();
    let bins_j = DiscreteProblem::default_observation_bins(&noise, &bins_i, m).unwrap();
    DiscreteProblem::new(&noise, bins_j, bins_i, 0.1, n, epsilon).unwrap()
}

fn solve(p: &DiscreteProblem, class: &ConvexClass, epsilon: f64) -> SolveReport {
    solve_smax(class, &p.a, &p.g, p.n, epsilon, &SolveOptions::default()).unwrap()
}

/// Random points of a class: convex combinations of vertices reached by
/// random linear objectives.
fn class_points(class: &ConvexClass, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rng_from_seed(seed);
    let vertices: Vec<Vec<f64>> = (0..4 * class.dim + 4)
        .map(|_| {
            let c: Vec<f64> = (0..class.dim).map(|_| rng.random::<f64>() - 0.5).collect();
            class.maximize_linear(&c).unwrap().0
        })
        .collect();
    (0..count)
        .map(|_| {
            let w: Vec<f64> = vertices.iter().map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
            let s: f64 = w.iter().sum();
            let mut x = vec![0.0; class.dim];
            for (wk, v) in w.iter().zip(&vertices) {
                for (xi, vi) in x.iter_mut().zip(v) {
                    *xi += wk / s * vi;
                }
            }
            x
        })
        .collect()
}

#[test]
fn two_bin_identity_matches_grid_search() {
    let (n, eps) = (10, 0.05);
    let a = Matrix::identity(2);
    let g = [0.0, 1.0];
    let r = solve_smax(&ConvexClass::simplex(2).unwrap(), &a, &g, n, eps, &SolveOptions::default()).unwrap();
    let bound = -(2.0f64 / eps).ln() / n as f64;
    let mut best = 0.0f64;
    for i in 0..=1000 {
        let xa = i as f64 * 1e-3;
        for j in i..=1000 {
            let ya = j as f64 * 1e-3;
            let rho = ((1.0 - xa) * (1.0 - ya)).sqrt() + (xa * ya).sqrt();
            if rho.ln() >= bound {
                best = best.max(0.5 * (ya - xa));
            }
        }
    }
    assert!((r.s_bar - best).abs() <= 2e-3, "{} vs grid {best}", r.s_bar);
}

#[test]
fn certificate_monotone_in_epsilon_and_class() {
    let p = laplace_problem(10, 6, 50, 0.05);
    let simplex = ConvexClass::simplex(6).unwrap();
    // a larger ε shrinks ln(2/ε) and so tightens the affinity constraint
    let mut prev = f64::INFINITY;
    for eps in [0.005, 0.02, 0.05, 0.1, 0.25] {
        let s = solve(&p, &simplex, eps).s_bar;
        assert!(s <= prev + 1e-6, "ε = {eps}: {s} > {prev}");
        prev = s;
    }
    let mut prev = 0.0;
    for l in [0.0, 0.02, 0.05, 0.1, 0.3, 1.0] {
        let s = solve(&p, &lipschitz_class(6, l).unwrap(), 0.05).s_bar;
        assert!(s >= prev - 1e-6, "L = {l}: {s} < {prev}");
        prev = s;
    }
}

#[test]
fn certificate_shrinks_with_sample_size() {
    let simplex = ConvexClass::simplex(5).unwrap();
    let mut prev = f64::INFINITY;
    for n in [10, 100, 1000, 100_000] {
        let p = laplace_problem(8, 5, n, 0.05);
        let s = solve(&p, &simplex, 0.05).s_bar;
        assert!(s <= prev + 1e-6);
        prev = s;
    }
}

#[test]
fn multiplier_certifies_optimality() {
    let p = laplace_problem(9, 6, 80, 0.05);
    let log_term = (2.0f64 / 0.05).ln();
    for (idx, class) in [ConvexClass::simplex(6).unwrap(), lipschitz_class(6, 0.08).unwrap(), lipschitz_class(6, 0.0).unwrap()]
        .iter()
        .enumerate()
    {
        let r = solve(&p, class, 0.05);
        assert!(r.s_bar >= 0.0);
        assert!(class.contains(&r.x_bar, 1e-8) && class.contains(&r.y_bar, 1e-8));
        assert!(r.h_residual >= -1e-6 * log_term);
        if r.nu > 0.0 {
            assert!(r.h_residual.abs() <= 1e-5 * log_term, "class {idx}: h = {}", r.h_residual);
        }
        let lagrangian = |x: &[f64], y: &[f64]| {
            let obj: f64 = 0.5 * p.g.iter().zip(x.iter().zip(y)).map(|(g, (a, b))| g * (b - a)).sum::<f64>();
            obj + r.nu * h_constraint(x, y, &p.a, p.n, 0.05).unwrap()
        };
        let at_opt = lagrangian(&r.x_bar, &r.y_bar);
        assert!(at_opt >= r.s_bar - 1e-5);
        let xs = class_points(class, 300, 10 + idx as u64);
        let ys = class_points(class, 300, 20 + idx as u64);
        for (x, y) in xs.iter().zip(&ys) {
            assert!(lagrangian(x, y) <= r.s_bar + 1e-4, "class {idx}");
            assert!(lagrangian(y, x) <= r.s_bar + 1e-4, "class {idx}");
        }
    }
}

#[test]
fn solvers_agree_on_a_full_dimensional_class() {
    let p = laplace_problem(7, 5, 60, 0.05);
    let class = lipschitz_class(5, 0.15).unwrap();
    let ipm = solve_smax(&class, &p.a, &p.g, p.n, 0.05, &SolveOptions::default()).unwrap();
    let fw = solve_smax(
        &class,
        &p.a,
        &p.g,
        p.n,
        0.05,
        &SolveOptions {
            kind: SolverKind::LagrangianBisection,
            tol: 1e-6,
            max_iter: 20_000,
        },
    );
    let fw = match fw {
        Ok(r) => r,
        Err(deconv_cdf_core::Error::NonConvergence(r)) => *r,
        Err(e) => panic!("{e}"),
    };
    assert!((ipm.s_bar - fw.s_bar).abs() <= 2e-3, "{} vs {}", ipm.s_bar, fw.s_bar);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn estimate_stays_within_weight_range(w in prop::collection::vec(0.0..1.0f64, 8), seed in 0u64..4) {
        prop_assume!(w.iter().sum::<f64>() > 0.0);
        let p = laplace_problem(8, 4 + seed as usize, 40, 0.05);
        let class = ConvexClass::simplex(p.big_m()).unwrap();
        let r = solve(&p, &class, 0.05);
        let est = build_affine_estimator(&r, &p.a, &p.g, p.n, 0.05).unwrap();
        let s: f64 = w.iter().sum();
        let prob: Vec<f64> = w.iter().map(|v| v / s).collect();
        let v = est.estimate(&prob).unwrap();
        let lo = est.phi.iter().cloned().fold(f64::INFINITY, f64::min) + est.c;
        let hi = est.phi.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + est.c;
        prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
    }
}
