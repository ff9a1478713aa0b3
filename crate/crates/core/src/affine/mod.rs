//! Minimax affine estimation of `gᵀx` from binned observations.
//!
//! The risk certificate is the value of
//!
//! ```text
//! S̄(ε) = max_{x, y ∈ X} ½ gᵀ(y − x)   s.t.   n ln ρ(x, y) + ln(2/ε) ≥ 0,
//! ρ(x, y) = Σ_j √([Ax]_j [Ay]_j),
//! ```
//!
//! and the estimator weights come from its optimal pair and the multiplier of
//! the affinity constraint.

mod ipm;
mod lagrangian;

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::discretize::{ConvexClass, DiscreteProblem, EmpiricalDistribution, A_FLOOR};
use crate::linalg::Matrix;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub x_bar: Vec<f64>,
    pub y_bar: Vec<f64>,
    pub nu: f64,
    pub s_bar: f64,
    pub h_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverKind {
    /// Interior point when the class has an interior, otherwise Lagrangian.
    #[default]
    Auto,
    InteriorPoint,
    LagrangianBisection,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    pub kind: SolverKind,
    /// Cap on Newton steps (interior point) or inner iterations (Lagrangian).
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-7,
            kind: SolverKind::Auto,
            max_iter: 5000,
        }
    }
}

pub fn hellinger_affinity(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            found: q.len(),
        });
    }
    Ok(p.iter().zip(q).map(|(a, b)| (a * b).sqrt()).sum())
}

/// `h(x, y; ε) = n ln ρ(Ax, Ay) + ln(2/ε)`.
pub fn h_constraint(x: &[f64], y: &[f64], a: &Matrix, n: usize, epsilon: f64) -> Result<f64> {
    let p = a.mul_vec(x);
    let q = a.mul_vec(y);
    if p.iter().chain(&q).any(|&v| !(v > 0.0)) {
        return Err(Error::NonpositiveArgument);
    }
    let rho = hellinger_affinity(&p, &q)?;
    if !(rho > 0.0) {
        return Err(Error::NonpositiveArgument);
    }
    Ok(n as f64 * rho.ln() + (2.0 / epsilon).ln())
}

/// Problem data shared by both solvers.
pub(crate) struct Program<'a> {
    pub class: &'a ConvexClass,
    pub a: &'a Matrix,
    pub g: &'a [f64],
    pub n: f64,
    pub log_term: f64,
}

impl Program<'_> {
    pub fn dim(&self) -> usize {
        self.class.dim
    }

    /// `½ gᵀ(y − x)` for `z = (x, y)`.
    pub fn objective(&self, z: &[f64]) -> f64 {
        let m = self.dim();
        0.5 * self
            .g
            .iter()
            .enumerate()
            .map(|(k, gk)| gk * (z[m + k] - z[k]))
            .sum::<f64>()
    }

    /// `(h, ρ, Ax, Ay)`.
    pub fn affinity(&self, z: &[f64]) -> (f64, f64, Vec<f64>, Vec<f64>) {
        let m = self.dim();
        let p = self.a.mul_vec(&z[..m]);
        let q = self.a.mul_vec(&z[m..]);
        let rho: f64 = p.iter().zip(&q).map(|(a, b)| (a * b).sqrt()).sum();
        (self.n * rho.ln() + self.log_term, rho, p, q)
    }

    pub fn h(&self, z: &[f64]) -> f64 {
        self.affinity(z).0
    }

    /// Gradient of `h` with respect to `z`.
    pub fn h_grad(&self, z: &[f64]) -> (f64, Vec<f64>) {
        let (h, rho, p, q) = self.affinity(z);
        let r: Vec<f64> = p
            .iter()
            .zip(&q)
            .map(|(a, b)| (b.max(1e-300) / a.max(1e-300)).sqrt())
            .collect();
        let dp: Vec<f64> = r.iter().map(|v| 0.5 * v).collect();
        let dq: Vec<f64> = r.iter().map(|v| 0.5 / v).collect();
        let scale = self.n / rho;
        let mut grad = self.a.tmul_vec(&dp);
        grad.extend(self.a.tmul_vec(&dq));
        for v in grad.iter_mut() {
            *v *= scale;
        }
        (h, grad)
    }

    pub fn report(&self, z: &[f64], nu: f64, iterations: usize, converged: bool) -> SolveReport {
        let m = self.dim();
        let (mut x, mut y) = (z[..m].to_vec(), z[m..].to_vec());
        let mut s_bar = self.objective(z);
        if s_bar < 0.0 {
            core::mem::swap(&mut x, &mut y);
            s_bar = -s_bar;
        }
        SolveReport {
            x_bar: x,
            y_bar: y,
            nu,
            s_bar,
            h_residual: self.h(z),
            iterations,
            converged,
        }
    }
}

/// Computes `S̄(ε)` with its optimizers and multiplier.
pub fn solve_smax(
    class: &ConvexClass,
    a: &Matrix,
    g: &[f64],
    n: usize,
    epsilon: f64,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    if !(epsilon > 0.0 && epsilon <= 0.25) {
        return Err(Error::Domain("epsilon must lie in (0, 1/4]".into()));
    }
    if n == 0 {
        return Err(Error::EmptySample);
    }
    if a.cols() != class.dim || g.len() != class.dim {
        return Err(Error::DimensionMismatch {
            expected: class.dim,
            found: if a.cols() != class.dim { a.cols() } else { g.len() },
        });
    }
    if !(opts.tol > 0.0) || opts.max_iter == 0 {
        return Err(Error::Domain("solver tolerance and iteration cap must be positive".into()));
    }
    let prog = Program {
        class,
        a,
        g,
        n: n as f64,
        log_term: (2.0 / epsilon).ln(),
    };
    let mut start = class.center.clone();
    start.extend_from_slice(&class.center);
    if !(prog.h(&start) > 0.0) {
        return Err(Error::Infeasible(
            "affinity constraint fails even for x = y; widen the observation bins".into(),
        ));
    }
    match opts.kind {
        SolverKind::InteriorPoint => ipm::solve(&prog, start, opts),
        SolverKind::LagrangianBisection => lagrangian::solve(&prog, start, opts),
        SolverKind::Auto if class.has_interior() => ipm::solve(&prog, start, opts),
        SolverKind::Auto => lagrangian::solve(&prog, start, opts),
    }
}

pub fn solve_problem(problem: &DiscreteProblem, class: &ConvexClass, opts: &SolveOptions) -> Result<SolveReport> {
    solve_smax(class, &problem.a, &problem.g, problem.n, problem.epsilon, opts)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AffineEstimator {
    pub phi: Vec<f64>,
    pub c: f64,
    pub s_bar: f64,
    pub epsilon: f64,
}

/// `φ_j = νn ln √([Aȳ]_j/[Ax̄]_j)`, `c = ½ gᵀ(x̄ + ȳ)`.
pub fn build_affine_estimator(report: &SolveReport, a: &Matrix, g: &[f64], n: usize, epsilon: f64) -> Result<AffineEstimator> {
    if report.x_bar.len() != a.cols() || g.len() != a.cols() {
        return Err(Error::DimensionMismatch {
            expected: a.cols(),
            found: report.x_bar.len(),
        });
    }
    let p = a.mul_vec(&report.x_bar);
    let q = a.mul_vec(&report.y_bar);
    let at_floor = 2.0 * A_FLOOR;
    let scale = report.nu * n as f64 * 0.5;
    let phi = p
        .iter()
        .zip(&q)
        .map(|(&pj, &qj)| {
            if (pj <= at_floor && qj <= at_floor) || scale == 0.0 {
                0.0
            } else {
                scale * (qj / pj).ln()
            }
        })
        .collect();
    let c = 0.5
        * g.iter()
            .zip(report.x_bar.iter().zip(&report.y_bar))
            .map(|(gk, (x, y))| gk * (x + y))
            .sum::<f64>();
    Ok(AffineEstimator {
        phi,
        c,
        s_bar: report.s_bar,
        epsilon,
    })
}

impl AffineEstimator {
    /// `Σ φ_k p̃_k + c`.
    pub fn estimate(&self, p: &[f64]) -> Result<f64> {
        if p.len() != self.phi.len() {
            return Err(Error::DimensionMismatch {
                expected: self.phi.len(),
                found: p.len(),
            });
        }
        Ok(self.phi.iter().zip(p).map(|(a, b)| a * b).sum::<f64>() + self.c)
    }
}

pub fn affine_estimate(est: &AffineEstimator, p: &EmpiricalDistribution) -> Result<f64> {
    est.estimate(&p.p)
}

/// `ϑ(ε) = 2 ln(2/ε) / ln(1/(4ε))`, the ratio bounding the risk of the
/// affine estimator by its certificate, `ε ∈ (0, ¼)`.
pub fn risk_bound_factor(epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 0.25) {
        return Err(Error::Domain("epsilon must lie in (0, 1/4)".into()));
    }
    Ok(2.0 * (2.0 / epsilon).ln() / (1.0 / (4.0 * epsilon)).ln())
}

/// `3 ln(2N/ε) / ln(2/ε)`, the risk inflation of nested adaptation.
pub fn nested_factor(classes: usize, epsilon: f64) -> f64 {
    3.0 * (2.0 * classes as f64 / epsilon).ln() / (2.0 / epsilon).ln()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NestedChoice {
    /// Zero-based index of the selected class.
    pub k_hat: usize,
    pub value: f64,
    /// False when the certificates were not nondecreasing.
    pub monotone: bool,
}

/// Smallest index `k` with `|ĝ_{k'} − ĝ_k| ≤ S_k + S_{k'}` for all `k' ≥ k`.
pub fn adapt_nested(estimates: &[f64], certificates: &[f64]) -> Result<NestedChoice> {
    if estimates.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if estimates.len() != certificates.len() {
        return Err(Error::DimensionMismatch {
            expected: estimates.len(),
            found: certificates.len(),
        });
    }
    let monotone = certificates.windows(2).all(|w| w[1] >= w[0]);
    let big_n = estimates.len();
    let k_hat = (0..big_n)
        .find(|&k| (k..big_n).all(|j| (estimates[j] - estimates[k]).abs() <= certificates[k] + certificates[j]))
        .expect("the last index is always good");
    Ok(NestedChoice {
        k_hat,
        value: estimates[k_hat],
        monotone,
    })
}

/// Estimators for a nested family, each solved at `ε/N`.
#[derive(Debug, Clone, PartialEq)]
pub struct NestedAffine {
    pub estimators: Vec<AffineEstimator>,
    pub reports: Vec<SolveReport>,
    pub epsilon: f64,
}

impl NestedAffine {
    pub fn build(problem: &DiscreteProblem, classes: &[ConvexClass], opts: &SolveOptions) -> Result<Self> {
        if classes.is_empty() {
            return Err(Error::EmptyGrid);
        }
        let eps = problem.epsilon / classes.len() as f64;
        let mut estimators = Vec::with_capacity(classes.len());
        let mut reports = Vec::with_capacity(classes.len());
        for class in classes {
            let r = solve_smax(class, &problem.a, &problem.g, problem.n, eps, opts)?;
            estimators.push(build_affine_estimator(&r, &problem.a, &problem.g, problem.n, eps)?);
            reports.push(r);
        }
        Ok(NestedAffine {
            estimators,
            reports,
            epsilon: problem.epsilon,
        })
    }

    pub fn certificates(&self) -> Vec<f64> {
        self.estimators.iter().map(|e| e.s_bar).collect()
    }

    pub fn estimate(&self, p: &[f64]) -> Result<NestedChoice> {
        let values = self
            .estimators
            .iter()
            .map(|e| e.estimate(p))
            .collect::<Result<Vec<_>>>()?;
        adapt_nested(&values, &self.certificates())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_relative_eq;

    fn identity_problem() -> (ConvexClass, Matrix, Vec<f64>) {
        (ConvexClass::simplex(2).unwrap(), Matrix::identity(2), vec![0.0, 1.0])
    }

    #[test]
    fn affinity_examples() {
        assert_relative_eq!(hellinger_affinity(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 1.0, epsilon = 1e-15);
        assert_eq!(hellinger_affinity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        let want = 0.25 + 7.0f64.sqrt() / 4.0;
        assert_relative_eq!(hellinger_affinity(&[0.5, 0.5], &[0.125, 0.875]).unwrap(), want, epsilon = 1e-15);
        assert!(hellinger_affinity(&[1.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn constraint_examples() {
        let a = Matrix::identity(2);
        let x = [0.4, 0.6];
        assert_relative_eq!(h_constraint(&x, &x, &a, 50, 0.05).unwrap(), 40.0f64.ln(), epsilon = 1e-12);
        assert!(h_constraint(&x, &x, &a, 50, 2.0).unwrap().abs() < 1e-12);
        let y = [0.6, 0.4];
        let h1 = h_constraint(&x, &y, &a, 10, 0.05).unwrap() - 40.0f64.ln();
        let h2 = h_constraint(&x, &y, &a, 20, 0.05).unwrap() - 40.0f64.ln();
        assert_relative_eq!(h2, 2.0 * h1, epsilon = 1e-12);
        assert_eq!(h_constraint(&[1.0, 0.0], &[1.0, 0.0], &a, 1, 0.05), Err(Error::NonpositiveArgument));
    }

    #[test]
    fn factor_examples() {
        assert_relative_eq!(risk_bound_factor(0.05).unwrap(), 4.584_059_348_440_358, epsilon = 1e-14);
        assert!((risk_bound_factor(1e-300).unwrap() - 2.0).abs() < 0.01);
        assert!(risk_bound_factor(0.25).is_err());
    }

    #[test]
    fn nested_rule() {
        let c = adapt_nested(&[0.0, 10.0, 10.1], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((c.k_hat, c.value), (1, 10.0));
        assert_eq!(adapt_nested(&[0.4], &[0.1]).unwrap().k_hat, 0);
        assert_eq!(adapt_nested(&[0.4, 0.4, 0.4], &[0.1, 0.2, 0.3]).unwrap().k_hat, 0);
        assert!(!adapt_nested(&[0.4, 0.4], &[0.3, 0.1]).unwrap().monotone);
    }

    #[test]
    fn estimator_algebra() {
        let est = AffineEstimator {
            phi: vec![0.0, 0.0],
            c: 0.3,
            s_bar: 0.1,
            epsilon: 0.05,
        };
        assert_eq!(est.estimate(&[0.2, 0.8]).unwrap(), 0.3);
        let est = AffineEstimator {
            phi: vec![-1.0, 2.0],
            ..est
        };
        assert_relative_eq!(est.estimate(&[0.0, 1.0]).unwrap(), 2.3);
        let mid = est.estimate(&[0.5, 0.5]).unwrap();
        assert_relative_eq!(mid, 0.5 * (est.estimate(&[1.0, 0.0]).unwrap() + est.estimate(&[0.0, 1.0]).unwrap()));
        assert!(est.estimate(&[1.0]).is_err());
    }

    #[test]
    fn singleton_class() {
        let class = crate::discretize::lipschitz_class(2, 0.0).unwrap();
        let a = Matrix::identity(2);
        let r = solve_smax(&class, &a, &[0.0, 1.0], 10, 0.05, &SolveOptions::default()).unwrap();
        assert!(r.s_bar.abs() < 1e-9);
        assert_relative_eq!(r.x_bar[0], 0.5, epsilon = 1e-9);
        assert_relative_eq!(r.y_bar[0], 0.5, epsilon = 1e-9);
        let est = build_affine_estimator(&r, &a, &[0.0, 1.0], 10, 0.05).unwrap();
        assert!(est.phi.iter().all(|v| v.abs() < 1e-9));
        assert_relative_eq!(est.c, 0.5, epsilon = 1e-9);
    }

    #[test]
    fn two_point_problem_solvers_agree() {
        let (class, a, g) = identity_problem();
        let ipm = solve_smax(&class, &a, &g, 10, 0.05, &SolveOptions::default()).unwrap();
        let lag = solve_smax(
            &class,
            &a,
            &g,
            10,
            0.05,
            &SolveOptions {
                kind: SolverKind::LagrangianBisection,
                ..SolveOptions::default()
            },
        )
        .unwrap();
        assert!((ipm.s_bar - lag.s_bar).abs() < 1e-5, "{} vs {}", ipm.s_bar, lag.s_bar);
        assert!(ipm.h_residual.abs() < 1e-5 && ipm.nu > 0.0);
        // closed form: by symmetry x = (½+s, ½−s), y = (½−s, ½+s), √(1−4s²) = (ε/2)^{1/n}
        let s = 0.5 * (1.0 - (0.025f64).powf(0.2)).sqrt();
        assert_relative_eq!(ipm.s_bar, s, epsilon = 1e-6);
    }

    #[test]
    fn s_bar_shrinks_with_n() {
        let (class, a, g) = identity_problem();
        let opts = SolveOptions::default();
        let small = solve_smax(&class, &a, &g, 10, 0.05, &opts).unwrap().s_bar;
        let large = solve_smax(&class, &a, &g, 100_000, 0.05, &opts).unwrap().s_bar;
        assert!(large <= small);
    }

    #[test]
    fn zero_multiplier_gives_constant() {
        let r = SolveReport {
            x_bar: vec![0.5, 0.5],
            y_bar: vec![0.2, 0.8],
            nu: 0.0,
            s_bar: 0.15,
            h_residual: 1.0,
            iterations: 0,
            converged: true,
        };
        let e = build_affine_estimator(&r, &Matrix::identity(2), &[0.0, 1.0], 10, 0.05).unwrap();
        assert_eq!(e.phi, vec![0.0, 0.0]);
        assert_relative_eq!(e.c, 0.65);
    }
}
