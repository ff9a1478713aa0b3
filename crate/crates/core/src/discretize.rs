//! Binned version of the deconvolution problem.
//!
//! The signal range is cut into `M` bins with midpoints `b̄_k`, the
//! observation range into `m` bins `J_j`. A signal concentrated at `b̄_k`
//! produces an observation in `J_j` with probability `A_jk`, and the target
//! functional is `gᵀx` with `g_k = 1(b̄_k ≤ t0)`.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::Matrix;
use crate::lp::LinearProgram;
use crate::noise::NoiseModel;
use crate::{Error, Result};

/// Floor applied to every entry of the channel matrix.
pub const A_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct BinGrid {
    edges: Vec<f64>,
}

impl BinGrid {
    pub fn uniform(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if count == 0 || !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::BinOrdering);
        }
        let w = (hi - lo) / count as f64;
        let mut edges: Vec<f64> = (0..=count).map(|i| lo + w * i as f64).collect();
        edges[count] = hi;
        Ok(BinGrid { edges })
    }

    pub fn from_edges(edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 || edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::BinOrdering);
        }
        Ok(BinGrid { edges })
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn count(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn lo(&self) -> f64 {
        self.edges[0]
    }

    pub fn hi(&self) -> f64 {
        self.edges[self.edges.len() - 1]
    }

    pub fn midpoints(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// Bin of `y`: `[a₀, a₁]` for the first bin, `(a_{j−1}, a_j]` after.
    pub fn index_of(&self, y: f64) -> Option<usize> {
        if !(y >= self.lo() && y <= self.hi()) {
            return None;
        }
        let k = self.edges.partition_point(|&e| e < y);
        Some(k.saturating_sub(1))
    }
}

/// Uniform bins on `[lo, hi]`.
pub fn make_bins(lo: f64, hi: f64, count: usize) -> Result<BinGrid> {
    BinGrid::uniform(lo, hi, count)
}

/// `A_jk = P{b̄_k + ζ ∈ J_j}` from noise CDF differences, floored at [`A_FLOOR`].
pub fn build_a(model: &NoiseModel, bins_j: &BinGrid, bins_i: &BinGrid) -> Matrix {
    let mids = bins_i.midpoints();
    let (m, big_m) = (bins_j.count(), mids.len());
    let mut a = Matrix::zeros(m, big_m);
    for (k, &b) in mids.iter().enumerate() {
        let mut prev = model.law.cdf(bins_j.edges[0] - b);
        for j in 0..m {
            let next = model.law.cdf(bins_j.edges[j + 1] - b);
            a[(j, k)] = (next - prev).max(A_FLOOR);
            prev = next;
        }
    }
    a
}

/// `g_k = 1(b̄_k ≤ t0)`.
pub fn build_g(bins_i: &BinGrid, t0: f64) -> Vec<f64> {
    bins_i
        .midpoints()
        .iter()
        .map(|&b| if b <= t0 { 1.0 } else { 0.0 })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutOfRange {
    #[default]
    Clamp,
    Drop,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    pub counts: Vec<u64>,
    pub n: u64,
    pub p: Vec<f64>,
}

impl EmpiricalDistribution {
    pub fn from_counts(counts: Vec<u64>) -> Result<Self> {
        let n: u64 = counts.iter().sum();
        if n == 0 {
            return Err(Error::EmptySample);
        }
        let p = counts.iter().map(|&c| c as f64 / n as f64).collect();
        Ok(EmpiricalDistribution { counts, n, p })
    }
}

pub fn bin_observations(y: &[f64], bins_j: &BinGrid, policy: OutOfRange) -> Result<EmpiricalDistribution> {
    if y.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut counts = vec![0u64; bins_j.count()];
    for &v in y {
        let idx = match bins_j.index_of(v) {
            Some(i) => Some(i),
            None => match policy {
                OutOfRange::Drop => None,
                OutOfRange::Clamp if v < bins_j.lo() => Some(0),
                OutOfRange::Clamp if v > bins_j.hi() => Some(bins_j.count() - 1),
                // NaN
                OutOfRange::Clamp => None,
            },
        };
        if let Some(i) = idx {
            counts[i] += 1;
        }
    }
    if counts.iter().all(|&c| c == 0) {
        return Err(Error::AllDropped);
    }
    EmpiricalDistribution::from_counts(counts)
}

/// Everything the affine estimator needs.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteProblem {
    pub bins_j: BinGrid,
    pub bins_i: BinGrid,
    pub a: Matrix,
    pub g: Vec<f64>,
    pub n: usize,
    pub epsilon: f64,
    pub t0: f64,
}

impl DiscreteProblem {
    pub fn new(model: &NoiseModel, bins_j: BinGrid, bins_i: BinGrid, t0: f64, n: usize, epsilon: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptySample);
        }
        if !(epsilon > 0.0 && epsilon <= 0.25) {
            return Err(Error::Domain("epsilon must lie in (0, 1/4]".into()));
        }
        let a = build_a(model, &bins_j, &bins_i);
        let g = build_g(&bins_i, t0);
        Ok(DiscreteProblem {
            bins_j,
            bins_i,
            a,
            g,
            n,
            epsilon,
            t0,
        })
    }

    /// Observation bins covering the signal range widened by the central
    /// `1 − 2·10⁻⁶` of the noise law.
    pub fn default_observation_bins(model: &NoiseModel, bins_i: &BinGrid, m: usize) -> Result<BinGrid> {
        let lo = bins_i.lo() + model.law.quantile(1e-6);
        let hi = bins_i.hi() + model.law.quantile(1.0 - 1e-6);
        BinGrid::uniform(lo, hi, m)
    }

    pub fn m(&self) -> usize {
        self.a.rows()
    }

    pub fn big_m(&self) -> usize {
        self.a.cols()
    }

    pub fn with_n(&self, n: usize) -> Self {
        DiscreteProblem { n, ..self.clone() }
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        DiscreteProblem {
            epsilon,
            ..self.clone()
        }
    }
}

/// `Σ_k coef_k x_k ≤ rhs`, stored sparsely.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub terms: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl LinearConstraint {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(k, c)| c * x[k]).sum()
    }

    fn dense(&self, dim: usize) -> Vec<f64> {
        let mut row = vec![0.0; dim];
        for &(k, c) in &self.terms {
            row[k] += c;
        }
        row
    }
}

/// Polyhedral subset of the probability simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexClass {
    pub dim: usize,
    pub constraints: Vec<LinearConstraint>,
    pub label: String,
    /// A point of the class, as deep inside as the constraints allow.
    pub center: Vec<f64>,
    /// Smallest slack of `center` over all inequalities, including `x ≥ 0`.
    pub depth: f64,
}

impl ConvexClass {
    /// Validates the constraints and finds the deepest point by linear
    /// programming. Empty classes are rejected.
    pub fn new(dim: usize, constraints: Vec<LinearConstraint>, label: impl Into<String>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("class dimension must be positive".into()));
        }
        for c in &constraints {
            if let Some(&(k, _)) = c.terms.iter().find(|(k, _)| *k >= dim) {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: k + 1,
                });
            }
        }
        // max s  s.t.  c·x + s‖c‖ ≤ d,  s − x_k ≤ 0,  Σx = 1,  s ≤ 1
        let mut lp = LinearProgram::new({
            let mut c = vec![0.0; dim + 1];
            c[dim] = 1.0;
            c
        });
        for c in &constraints {
            let mut row = c.dense(dim + 1);
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            row[dim] = norm;
            lp.add_le(row, c.rhs);
        }
        for k in 0..dim {
            let mut row = vec![0.0; dim + 1];
            row[k] = -1.0;
            row[dim] = 1.0;
            lp.add_le(row, 0.0);
        }
        let mut one = vec![1.0; dim + 1];
        one[dim] = 0.0;
        lp.add_eq(one, 1.0);
        let mut cap = vec![0.0; dim + 1];
        cap[dim] = 1.0;
        lp.add_le(cap, 1.0);
        let sol = lp.solve().map_err(|e| match e {
            Error::Infeasible(_) => Error::Infeasible("class is empty".into()),
            other => other,
        })?;
        let center = normalize(sol.x[..dim].to_vec());
        let depth = sol.x[dim];
        Ok(ConvexClass {
            dim,
            constraints,
            label: label.into(),
            center,
            depth,
        })
    }

    pub fn simplex(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("class dimension must be positive".into()));
        }
        Ok(ConvexClass {
            dim,
            constraints: Vec::new(),
            label: String::from("simplex"),
            center: vec![1.0 / dim as f64; dim],
            depth: 1.0 / dim as f64,
        })
    }

    /// `{x ∈ Δ : |x_{k+1} − x_k| ≤ L}`.
    pub fn lipschitz(dim: usize, l: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("class dimension must be positive".into()));
        }
        if !(l >= 0.0) {
            return Err(Error::Infeasible("Lipschitz constant must be nonnegative".into()));
        }
        let mut constraints = Vec::with_capacity(2 * dim.saturating_sub(1));
        for k in 0..dim.saturating_sub(1) {
            constraints.push(LinearConstraint {
                terms: vec![(k + 1, 1.0), (k, -1.0)],
                rhs: l,
            });
            constraints.push(LinearConstraint {
                terms: vec![(k, 1.0), (k + 1, -1.0)],
                rhs: l,
            });
        }
        let u = 1.0 / dim as f64;
        let depth = if dim == 1 { u } else { u.min(l / 2.0f64.sqrt()) };
        Ok(ConvexClass {
            dim,
            constraints,
            label: alloc::format!("lipschitz({l})"),
            center: vec![u; dim],
            depth,
        })
    }

    pub fn has_interior(&self) -> bool {
        self.depth > 1e-10
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.dim
            && x.iter().all(|&v| v >= -tol)
            && (x.iter().sum::<f64>() - 1.0).abs() <= tol
            && self.constraints.iter().all(|c| c.eval(x) <= c.rhs + tol)
    }

    /// `max cᵀx` over the class.
    pub fn maximize_linear(&self, c: &[f64]) -> Result<(Vec<f64>, f64)> {
        if c.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: c.len(),
            });
        }
        if self.constraints.is_empty() {
            let (k, &v) = c
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .expect("nonempty");
            let mut x = vec![0.0; self.dim];
            x[k] = 1.0;
            return Ok((x, v));
        }
        let mut lp = LinearProgram::new(c.to_vec());
        for con in &self.constraints {
            lp.add_le(con.dense(self.dim), con.rhs);
        }
        lp.add_eq(vec![1.0; self.dim], 1.0);
        let sol = lp.solve()?;
        let x = normalize(sol.x);
        let v = c.iter().zip(&x).map(|(a, b)| a * b).sum();
        Ok((x, v))
    }

    /// True when every constraint of `other` holds on all of `self`.
    pub fn is_subset_of(&self, other: &ConvexClass, tol: f64) -> Result<bool> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: other.dim,
                found: self.dim,
            });
        }
        for con in &other.constraints {
            let (_, v) = self.maximize_linear(&con.dense(self.dim))?;
            if v > con.rhs + tol {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

fn normalize(mut x: Vec<f64>) -> Vec<f64> {
    for v in x.iter_mut() {
        *v = v.max(0.0);
    }
    let s: f64 = x.iter().sum();
    if s > 0.0 {
        for v in x.iter_mut() {
            *v /= s;
        }
    }
    x
}

pub fn lipschitz_class(dim: usize, l: f64) -> Result<ConvexClass> {
    ConvexClass::lipschitz(dim, l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::Distribution;
    use approx::assert_relative_eq;

    #[test]
    fn uniform_bins() {
        assert_eq!(make_bins(0.0, 1.0, 2).unwrap().edges(), &[0.0, 0.5, 1.0]);
        let b = make_bins(-8.0, 8.0, 200).unwrap();
        assert_eq!(b.edges().len(), 201);
        assert_relative_eq!(b.edges()[1] - b.edges()[0], 0.08, epsilon = 1e-12);
        assert_eq!(make_bins(0.0, 1.0, 0), Err(Error::BinOrdering));
        assert_eq!(BinGrid::from_edges(vec![0.0, 0.0, 1.0]), Err(Error::BinOrdering));
    }

    #[test]
    fn g_vector() {
        let b = BinGrid::from_edges(vec![0.0, 1.0, 2.0]).unwrap();
        assert_eq!(build_g(&b, 1.6), vec![1.0, 1.0]);
        assert_eq!(build_g(&b, 0.7), vec![1.0, 0.0]);
        assert_eq!(build_g(&b, 0.1), vec![0.0, 0.0]);
    }

    #[test]
    fn observation_binning() {
        let b = BinGrid::from_edges(vec![0.0, 0.5, 1.0]).unwrap();
        assert_eq!(bin_observations(&[0.2, 0.7], &b, OutOfRange::Clamp).unwrap().counts, vec![1, 1]);
        assert_eq!(bin_observations(&[0.5], &b, OutOfRange::Clamp).unwrap().counts, vec![1, 0]);
        assert_eq!(bin_observations(&[0.0], &b, OutOfRange::Clamp).unwrap().counts, vec![1, 0]);
        assert_eq!(bin_observations(&[1.0], &b, OutOfRange::Clamp).unwrap().counts, vec![0, 1]);
        let single = BinGrid::from_edges(vec![0.0, 1.0]).unwrap();
        assert_eq!(bin_observations(&[-5.0], &single, OutOfRange::Clamp).unwrap().counts, vec![1]);
        assert_eq!(bin_observations(&[-5.0], &single, OutOfRange::Drop), Err(Error::AllDropped));
        let d = bin_observations(&[-5.0, 0.3, 7.0], &b, OutOfRange::Drop).unwrap();
        assert_eq!((d.counts.clone(), d.n), (vec![1, 0], 1));
    }

    #[test]
    fn channel_matrix_point_mass() {
        let m = NoiseModel::new(Distribution::gaussian(0.0, 1e-12).unwrap());
        let b = make_bins(0.0, 1.0, 4).unwrap();
        let a = build_a(&m, &b, &b);
        for j in 0..4 {
            for k in 0..4 {
                let want = if j == k { 1.0 } else { 0.0 };
                assert!((a[(j, k)] - want).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn channel_matrix_laplace() {
        let m = NoiseModel::laplace_preset(0.0, 0.5).unwrap();
        let bj = BinGrid::from_edges(vec![-1.0, 0.0, 1.0, 2.0]).unwrap();
        let bi = BinGrid::from_edges(vec![-0.5, 0.5, 1.0, 1.5]).unwrap();
        let a = build_a(&m, &bj, &bi);
        let f = |t: f64| if t < 0.0 { 0.5 * (2.0 * t).exp() } else { 1.0 - 0.5 * (-2.0 * t).exp() };
        let mids = [0.0, 0.75, 1.25];
        for (k, &b) in mids.iter().enumerate() {
            for j in 0..3 {
                let want = f(bj.edges()[j + 1] - b) - f(bj.edges()[j] - b);
                assert_relative_eq!(a[(j, k)], want, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn wide_observation_range_is_nearly_stochastic() {
        let m = NoiseModel::scenario_gamma();
        let bi = make_bins(-1.0, 16.0, 50).unwrap();
        let bj = DiscreteProblem::default_observation_bins(&m, &bi, 60).unwrap();
        let a = build_a(&m, &bj, &bi);
        for s in a.column_sums() {
            assert!(s <= 1.0 + 60.0 * A_FLOOR && s > 1.0 - 3e-6, "{s}");
        }
    }

    #[test]
    fn lipschitz_classes() {
        let c = lipschitz_class(4, 1.0).unwrap();
        assert!(c.contains(&[1.0, 0.0, 0.0, 0.0], 1e-12));
        let pinned = lipschitz_class(2, 0.0).unwrap();
        assert!(!pinned.has_interior());
        assert!(pinned.contains(&[0.5, 0.5], 1e-12));
        assert!(!pinned.contains(&[0.6, 0.4], 1e-12));
        let (_, v) = pinned.maximize_linear(&[1.0, 0.0]).unwrap();
        assert_relative_eq!(v, 0.5, epsilon = 1e-10);
        let small = lipschitz_class(5, 0.01).unwrap();
        let big = lipschitz_class(5, 0.1).unwrap();
        assert!(small.is_subset_of(&big, 1e-12).unwrap());
        assert!(!big.is_subset_of(&small, 1e-12).unwrap());
        assert!(lipschitz_class(3, -1.0).is_err());
    }

    #[test]
    fn general_class_center_and_emptiness() {
        let c = ConvexClass::new(
            3,
            vec![LinearConstraint {
                terms: vec![(0, 1.0)],
                rhs: 0.2,
            }],
            "x0 small",
        )
        .unwrap();
        assert!(c.has_interior());
        assert!(c.contains(&c.center, 1e-9));
        let empty = ConvexClass::new(
            2,
            vec![
                LinearConstraint {
                    terms: vec![(0, 1.0)],
                    rhs: 0.2,
                },
                LinearConstraint {
                    terms: vec![(1, 1.0)],
                    rhs: 0.2,
                },
            ],
            "empty",
        );
        assert!(matches!(empty, Err(Error::Infeasible(_))));
    }
}
