//! Data-driven choice of the cut-off frequency by interval intersection.
//!
//! For every `λ` on a grid the estimate `F̃_λ` is wrapped in a confidence
//! interval `Q_λ`; the selected cut-off is the smallest `λ` such that all
//! intervals from `λ` upwards share a common point.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};

#[allow(unused_imports)]
use num_traits::Float;

use crate::fourier::{EstimateResult, InversionKernel, SampleSet};
use crate::noise::{Distribution, NoiseModel, E1, E2};
use crate::quadrature::QuadratureConfig;
use crate::rng::derive_seed;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaGrid {
    values: Vec<f64>,
}

impl LambdaGrid {
    /// `λ_min·2^j`, `j = 0..count`.
    pub fn dyadic(lambda_min: f64, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::EmptyGrid);
        }
        if !(lambda_min > 0.0) || !lambda_min.is_finite() {
            return Err(Error::Domain("lambda_min must be positive".into()));
        }
        Ok(LambdaGrid {
            values: (0..count).map(|j| lambda_min * 2.0f64.powi(j as i32)).collect(),
        })
    }

    /// Halves down from `lambda_max` until the smallest value is at most `floor`.
    pub fn halving(lambda_max: f64, floor: f64) -> Result<Self> {
        if !(lambda_max > 0.0) || !(floor > 0.0) {
            return Err(Error::Domain("lambda_max and floor must be positive".into()));
        }
        let count = halving_count(lambda_max, floor);
        Self::dyadic(lambda_max / 2.0f64.powi(count as i32 - 1), count)
    }

    /// Top value `n / (11 m̄² ln(4N/ε))`, with `N` the size of the halving
    /// grid it generates. The smallest `N` whose top value needs at most `N`
    /// halvings is used, so `λ_min` may sit one step below `floor`.
    pub fn theorem_default(n: usize, epsilon: f64, m_bar: f64, floor: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptySample);
        }
        check_epsilon(epsilon)?;
        let top = |count: usize| n as f64 / (11.0 * m_bar * m_bar * (4.0 * count as f64 / epsilon).ln());
        let count = (1..)
            .find(|&c| halving_count(top(c), floor) <= c)
            .expect("halving count is bounded");
        let lambda_max = top(count);
        Self::dyadic(lambda_max / 2.0f64.powi(count as i32 - 1), count)
    }

    /// `start, start + step, …` up to `stop` inclusive (within rounding).
    pub fn arithmetic(start: f64, step: f64, stop: f64) -> Result<Self> {
        if !(start > 0.0) || !(step > 0.0) || !(stop >= start) {
            return Err(Error::Domain("arithmetic grid needs 0 < start <= stop and step > 0".into()));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        Ok(LambdaGrid {
            values: (0..count).map(|j| start + step * j as f64).collect(),
        })
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyGrid);
        }
        if values[0] <= 0.0 || values.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("grid must be positive and strictly increasing".into()));
        }
        Ok(LambdaGrid { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn lambda_min(&self) -> f64 {
        self.values[0]
    }

    pub fn lambda_max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }
}

fn halving_count(lambda_max: f64, floor: f64) -> usize {
    if lambda_max <= floor {
        1
    } else {
        (lambda_max / floor).log2().ceil() as usize + 1
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::Domain("epsilon must lie in (0, 1/2)".into()));
    }
    Ok(())
}

/// `ω₁ = min{ω₀, (4b)^{−1/τ}}` and `c* = 2π⁻²(2 + 1/τ)²`.
pub fn omega1_cstar(omega0: f64, b: f64, tau: f64) -> (f64, f64) {
    let omega1 = omega0.min((4.0 * b).powf(-1.0 / tau));
    let c = 2.0 + 1.0 / tau;
    (omega1, 2.0 * c * c / (PI * PI))
}

/// `m̄ = √(2c*) + (πcβ)⁻¹ 2^{1+(β/2−1)₊}[2 + β ln₊(1/ω₁)]`.
pub fn m_bar(beta: f64, c_lower: f64, omega1: f64, c_star: f64) -> f64 {
    let pow = 1.0 + (0.5 * beta - 1.0).max(0.0);
    let ln_plus = (1.0 / omega1).ln().max(0.0);
    (2.0 * c_star).sqrt() + 2.0f64.powf(pow) * (2.0 + beta * ln_plus) / (PI * c_lower * beta)
}

/// `√2(√2 − 1)⁻¹[1 + √(3 ln(4N/ε))]`.
pub fn interval_factor(grid_len: usize, epsilon: f64) -> f64 {
    SQRT_2 / (SQRT_2 - 1.0) * (1.0 + (3.0 * (4.0 * grid_len as f64 / epsilon).ln()).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IntervalRule {
    /// Half-widths `ϑ ṽ_λ n^{−½}` built from the noise constants.
    Theorem,
    /// Half-widths `κ ŝ_λ n^{−½}`, `ŝ²_λ` the running maximum of the sample
    /// variance of the per-observation terms. `None` selects
    /// `κ = √(2 ln(2N/ε))`.
    Empirical { kappa: Option<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LepskiConfig {
    pub epsilon: f64,
    pub grid: LambdaGrid,
    pub e1: E1,
    pub e2: E2,
    pub rule: IntervalRule,
}

impl LepskiConfig {
    /// Takes the constants from the noise model.
    pub fn from_model(model: &NoiseModel, grid: LambdaGrid, epsilon: f64) -> Result<Self> {
        let e1 = model.e1.ok_or(Error::MissingParameters("E1 constants are required"))?;
        let e2 = model.e2.ok_or(Error::MissingParameters("E2 constants are required"))?;
        Ok(LepskiConfig {
            epsilon,
            grid,
            e1,
            e2,
            rule: IntervalRule::Theorem,
        })
    }

    pub fn with_rule(mut self, rule: IntervalRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_epsilon(self.epsilon)?;
        let (e1, e2) = (self.e1, self.e2);
        if !(e1.beta > 0.0 && e1.c_lower > 0.0 && e2.omega0 > 0.0 && e2.b > 0.0) {
            return Err(Error::Domain("noise constants must be positive".into()));
        }
        if !(e2.tau > 0.0 && e2.tau <= 2.0) {
            return Err(Error::Domain("tau must lie in (0, 2]".into()));
        }
        if self.grid.is_empty() {
            return Err(Error::EmptyGrid);
        }
        Ok(())
    }

    pub fn omega1_cstar(&self) -> (f64, f64) {
        omega1_cstar(self.e2.omega0, self.e2.b, self.e2.tau)
    }

    pub fn m_bar(&self) -> f64 {
        let (omega1, c_star) = self.omega1_cstar();
        m_bar(self.e1.beta, self.e1.c_lower, omega1, c_star)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaRow {
    pub lambda: f64,
    pub estimate: f64,
    /// `σ̃²_λ` (theorem rule) or the sample variance of `ξ_j(λ)` (empirical rule).
    pub sigma_sq: f64,
    /// Running maximum of `sigma_sq`.
    pub big_sigma_sq: f64,
    /// Squared scale of the half-width before the factor `theta`.
    pub v_sq: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LepskiTrace {
    pub per_lambda: Vec<LambdaRow>,
    pub selected_index: usize,
    pub theta: f64,
    pub selected: EstimateResult,
}

/// Smallest index whose suffix of intervals has a common point.
pub fn select_index(intervals: &[(f64, f64)]) -> Result<usize> {
    if intervals.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    let mut selected = intervals.len() - 1;
    for (j, &(a, b)) in intervals.iter().enumerate().rev() {
        lo = lo.max(a);
        hi = hi.min(b);
        if lo > hi {
            break;
        }
        selected = j;
    }
    Ok(selected)
}

struct PathSums {
    estimate_sum: Vec<f64>,
    tail_sq_sum: Vec<f64>,
    xi_sum: Vec<f64>,
    xi_sq_sum: Vec<f64>,
}

/// Accumulates `∫₀^λ`, `(∫_{ω₁}^λ)²` and `ξ²` over the sample for every `λ`.
fn path_sums(sample: &SampleSet, kernel: &InversionKernel, lambdas: &[f64], omega1: f64, t0: f64) -> Result<PathSums> {
    let mut breakpoints = Vec::with_capacity(lambdas.len() + 1);
    let pos = lambdas.partition_point(|&l| l < omega1);
    breakpoints.extend_from_slice(&lambdas[..pos]);
    breakpoints.push(omega1);
    breakpoints.extend_from_slice(&lambdas[pos..]);
    let k = lambdas.len();
    let mut sums = PathSums {
        estimate_sum: vec![0.0; k],
        tail_sq_sum: vec![0.0; k],
        xi_sum: vec![0.0; k],
        xi_sq_sum: vec![0.0; k],
    };
    let mut row = vec![0.0; breakpoints.len()];
    for &y in &sample.y {
        kernel.cumulative(y - t0, &breakpoints, &mut row)?;
        let at_omega1 = row[pos];
        for i in 0..k {
            let full = if i < pos { row[i] } else { row[i + 1] };
            sums.estimate_sum[i] += full;
            let xi = full / PI;
            sums.xi_sum[i] += xi;
            sums.xi_sq_sum[i] += xi * xi;
            if i >= pos && lambdas[i] > omega1 {
                let tail = full - at_omega1;
                sums.tail_sq_sum[i] += tail * tail;
            }
        }
    }
    Ok(sums)
}

/// `σ̃²_λ = c* + 2(π²n)⁻¹ Σ_j (∫_{ω₁}^λ ω⁻¹ Im{e^{iω(Y_j−t0)}/f̂(ω)} dω)²`.
pub fn sigma_tilde_sq(
    sample: &SampleSet,
    model: &NoiseModel,
    lambda: f64,
    t0: f64,
    omega1: f64,
    c_star: f64,
    q: &QuadratureConfig,
) -> Result<f64> {
    if sample.y.is_empty() {
        return Err(Error::EmptySample);
    }
    if !(lambda > 0.0) {
        return Err(Error::Domain("lambda must be positive".into()));
    }
    if lambda <= omega1 {
        return Ok(c_star);
    }
    let kernel = InversionKernel::quadrature(model, *q);
    let mut sum = 0.0;
    for &y in &sample.y {
        let v = kernel.integral(y - t0, omega1, lambda)?;
        sum += v * v;
    }
    Ok(c_star + 2.0 * sum / (PI * PI * sample.n() as f64))
}

/// Runs the selection with closed-form kernels where the noise has one.
pub fn run_lepski(
    sample: &SampleSet,
    model: &NoiseModel,
    cfg: &LepskiConfig,
    t0: f64,
    q: &QuadratureConfig,
) -> Result<LepskiTrace> {
    q.validate()?;
    run_lepski_with(sample, &InversionKernel::for_noise(model, *q), cfg, t0)
}

pub fn run_lepski_with(
    sample: &SampleSet,
    kernel: &InversionKernel,
    cfg: &LepskiConfig,
    t0: f64,
) -> Result<LepskiTrace> {
    cfg.validate()?;
    if sample.y.is_empty() {
        return Err(Error::EmptySample);
    }
    let lambdas = cfg.grid.values();
    let big_n = lambdas.len();
    let n = sample.n() as f64;
    let (omega1, c_star) = cfg.omega1_cstar();
    let sums = path_sums(sample, kernel, lambdas, omega1, t0)?;

    let (theta, log_term, m_bar) = match cfg.rule {
        IntervalRule::Theorem => (
            interval_factor(big_n, cfg.epsilon),
            (4.0 * (big_n * big_n) as f64 / cfg.epsilon).ln(),
            cfg.m_bar(),
        ),
        IntervalRule::Empirical { kappa } => (
            kappa.unwrap_or_else(|| (2.0 * (2.0 * big_n as f64 / cfg.epsilon).ln()).sqrt()),
            0.0,
            0.0,
        ),
    };

    let mut rows = Vec::with_capacity(big_n);
    let mut running = f64::NEG_INFINITY;
    for (i, &lambda) in lambdas.iter().enumerate() {
        let estimate = 0.5 - sums.estimate_sum[i] / (PI * n);
        let sigma_sq = match cfg.rule {
            IntervalRule::Theorem => c_star + 2.0 * sums.tail_sq_sum[i] / (PI * PI * n),
            IntervalRule::Empirical { .. } => {
                let mean = sums.xi_sum[i] / n;
                (sums.xi_sq_sum[i] / n - mean * mean).max(0.0)
            }
        };
        running = running.max(sigma_sq);
        let v_sq = running + 11.0 * m_bar * m_bar * lambda.powf(2.0 * cfg.e1.beta) * log_term / n;
        let half = theta * v_sq.sqrt() / n.sqrt();
        rows.push(LambdaRow {
            lambda,
            estimate,
            sigma_sq,
            big_sigma_sq: running,
            v_sq,
            lo: estimate - half,
            hi: estimate + half,
        });
    }
    let intervals: Vec<(f64, f64)> = rows.iter().map(|r| (r.lo, r.hi)).collect();
    let selected_index = select_index(&intervals)?;
    let chosen = rows[selected_index];
    Ok(LepskiTrace {
        per_lambda: rows,
        selected_index,
        theta,
        selected: EstimateResult {
            value_raw: chosen.estimate,
            value_clipped: chosen.estimate.clamp(0.0, 1.0),
            lambda: chosen.lambda,
            per_obs_integrals: None,
        },
    })
}

/// Monte Carlo versions of the population quantities behind the oracle
/// cut-off.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleQuantities {
    pub lambdas: Vec<f64>,
    pub sigma_sq: Vec<f64>,
    pub sigma_sq_se: Vec<f64>,
    pub big_sigma_sq: Vec<f64>,
    pub v_sq: Vec<f64>,
    /// Mean of the estimator at each cut-off, from the same draws.
    pub mean_estimate: Vec<f64>,
    pub lambda_o_index: usize,
    /// No grid point met the defining inequality; `lambda_o_index` is the top.
    pub lambda_o_missing: bool,
}

/// Inputs describing the simulation behind [`oracle_quantities`].
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSetup<'a> {
    pub target: &'a Distribution,
    pub noise: &'a NoiseModel,
    pub kernel: &'a InversionKernel,
    pub cfg: &'a LepskiConfig,
    pub t0: f64,
    pub alpha: f64,
    pub l: f64,
    /// Sample size the estimator is used with.
    pub n: usize,
    /// Number of single-observation draws for the expectations.
    pub draws: usize,
    pub seed: u64,
}

pub fn oracle_quantities(setup: &OracleSetup<'_>) -> Result<OracleQuantities> {
    let cfg = setup.cfg;
    cfg.validate()?;
    if setup.draws < 2 || setup.n == 0 {
        return Err(Error::Domain("need at least two draws and n >= 1".into()));
    }
    let sample = SampleSet::simulate(setup.target, setup.noise, setup.draws, setup.seed);
    let lambdas = cfg.grid.values();
    let big_n = lambdas.len();
    let (omega1, c_star) = cfg.omega1_cstar();

    let mut breakpoints = lambdas.to_vec();
    let pos = breakpoints.partition_point(|&l| l < omega1);
    breakpoints.insert(pos, omega1);
    let mut row = vec![0.0; breakpoints.len()];
    let mut s1 = vec![0.0; big_n];
    let mut s2 = vec![0.0; big_n];
    let mut est = vec![0.0; big_n];
    for &y in &sample.y {
        setup.kernel.cumulative(y - setup.t0, &breakpoints, &mut row)?;
        for i in 0..big_n {
            let full = if i < pos { row[i] } else { row[i + 1] };
            est[i] += full;
            if i >= pos && lambdas[i] > omega1 {
                let t = full - row[pos];
                s1[i] += t * t;
                s2[i] += t * t * t * t;
            }
        }
    }
    let draws = setup.draws as f64;
    let scale = 2.0 / (PI * PI);
    let mut out = OracleQuantities {
        lambdas: lambdas.to_vec(),
        sigma_sq: Vec::with_capacity(big_n),
        sigma_sq_se: Vec::with_capacity(big_n),
        big_sigma_sq: Vec::with_capacity(big_n),
        v_sq: Vec::with_capacity(big_n),
        mean_estimate: est.iter().map(|s| 0.5 - s / (PI * draws)).collect(),
        lambda_o_index: big_n - 1,
        lambda_o_missing: true,
    };
    let m_bar = cfg.m_bar();
    let log_term = (4.0 * (big_n * big_n) as f64 / cfg.epsilon).ln();
    let n = setup.n as f64;
    let mut running = f64::NEG_INFINITY;
    for i in 0..big_n {
        let mean = s1[i] / draws;
        let var = (s2[i] / draws - mean * mean).max(0.0);
        let sigma_sq = c_star + scale * mean;
        running = running.max(sigma_sq);
        out.sigma_sq.push(sigma_sq);
        out.sigma_sq_se.push(scale * (var / (draws - 1.0)).sqrt());
        out.big_sigma_sq.push(running);
        let v_sq = running + 11.0 * m_bar * m_bar * lambdas[i].powf(2.0 * cfg.e1.beta) * log_term / n;
        out.v_sq.push(v_sq);
        let bias_side = 2.0 * SQRT_2 / PI.sqrt() * setup.l * lambdas[i].powf(-setup.alpha - 0.5);
        if out.lambda_o_missing && v_sq.sqrt() / n.sqrt() >= bias_side {
            out.lambda_o_index = i;
            out.lambda_o_missing = false;
        }
    }
    Ok(out)
}

/// Independent draws of `Y` for repeated experiments keyed by replication.
pub fn replicate_sample(target: &Distribution, noise: &NoiseModel, n: usize, master: u64, rep: u64) -> SampleSet {
    SampleSet::simulate(target, noise, n, derive_seed(master, &[rep]))
}
