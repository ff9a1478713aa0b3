//! Empirical convergence rate of the fixed cut-off estimator.

use deconv_cdf_core::fourier::{estimate_cdf_with, InversionKernel, SampleSet, TabulatedKernel};
use deconv_cdf_core::lepski::replicate_sample;
use deconv_cdf_core::noise::{Distribution, NoiseModel};
use deconv_cdf_core::quadrature::QuadratureConfig;
use deconv_cdf_core::rates::{classify_zone, lambda_of, rate_psi, ZoneKind};
use deconv_cdf_core::rng::derive_seed;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RateSetup {
    pub target: Distribution,
    pub noise: NoiseModel,
    /// Nominal smoothness of the target.
    pub alpha: f64,
    /// Decay exponent of the noise characteristic function.
    pub beta: f64,
    /// The cut-off is `lambda_scale · λ(n)`.
    pub lambda_scale: f64,
    pub n_list: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    pub t0: f64,
    pub quadrature: QuadratureConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub n: usize,
    pub lambda: f64,
    pub rmse: f64,
    /// Standard error of the RMSE by the delta method.
    pub rmse_se: f64,
    pub mean_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub points: Vec<RatePoint>,
    /// Least-squares slope of ln RMSE against ln n.
    pub slope: f64,
    pub slope_se: f64,
    pub intercept: f64,
    /// Exponent of the theoretical rate in this zone.
    pub nominal_slope: f64,
}

/// Least-squares fit `y = a + b x`, returning `(b, se(b), a)`.
pub fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let ssr: f64 = x.iter().zip(y).map(|(u, v)| (v - a - b * u).powi(2)).sum();
    let se = if x.len() > 2 {
        (ssr / (k - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    (b, se, a)
}

/// Exponent of `ψ_n` in `n`: `−(2α+1)/(4α+4β)` or `−½` in the regular
/// zones, a log-log secant over the sample sizes elsewhere.
pub fn nominal_slope(alpha: f64, beta: f64, n_lo: f64, n_hi: f64) -> Result<f64> {
    Ok(match classify_zone(alpha, beta)?.kind {
        ZoneKind::Regular1 => -(2.0 * alpha + 1.0) / (4.0 * alpha + 4.0 * beta),
        ZoneKind::Regular2 => -0.5,
        _ => (rate_psi(n_hi, alpha, beta)?.ln() - rate_psi(n_lo, alpha, beta)?.ln()) / (n_hi.ln() - n_lo.ln()),
    })
}

enum Kernel {
    Direct(InversionKernel),
    Table(TabulatedKernel),
}

impl Kernel {
    fn build(setup: &RateSetup, lambda: f64) -> Result<Self> {
        let direct = InversionKernel::for_noise(&setup.noise, setup.quadrature);
        if !matches!(direct, InversionKernel::Quadrature { .. }) {
            return Ok(Kernel::Direct(direct));
        }
        let lo = setup.target.quantile(1e-7) + setup.noise.law.quantile(1e-7) - setup.t0;
        let hi = setup.target.quantile(1.0 - 1e-7) + setup.noise.law.quantile(1.0 - 1e-7) - setup.t0;
        let step = 0.1 / lambda.max(1.0);
        Ok(Kernel::Table(TabulatedKernel::build(
            &setup.noise,
            setup.quadrature,
            lambda,
            lo,
            hi,
            step,
        )?))
    }

    fn estimate(&self, sample: &SampleSet, lambda: f64, t0: f64) -> Result<f64> {
        Ok(match self {
            Kernel::Direct(k) => estimate_cdf_with(sample, k, lambda, t0, false)?.value_raw,
            Kernel::Table(k) => k.estimate(sample, t0)?.value_raw,
        })
    }
}

/// RMSE of the unclipped estimate at `t0` for each sample size and the
/// fitted log-log slope.
pub fn rate_experiment(setup: &RateSetup) -> Result<RateReport> {
    if setup.n_list.len() < 3 {
        return Err(HarnessError::Config("the rate experiment needs at least three sample sizes".into()));
    }
    let lo = *setup.n_list.iter().min().expect("nonempty");
    let hi = *setup.n_list.iter().max().expect("nonempty");
    if lo == 0 || (hi as f64) < 10.0 * lo as f64 {
        return Err(HarnessError::Config("sample sizes must be positive and span a decade".into()));
    }
    if setup.reps < 2 || !(setup.lambda_scale > 0.0) {
        return Err(HarnessError::Config("need reps >= 2 and a positive lambda_scale".into()));
    }
    let truth = setup.target.cdf(setup.t0);
    let mut points = Vec::with_capacity(setup.n_list.len());
    for (idx, &n) in setup.n_list.iter().enumerate() {
        let lambda = setup.lambda_scale * lambda_of(n as f64, setup.alpha, setup.beta)?;
        let kernel = Kernel::build(setup, lambda)?;
        let master = derive_seed(setup.seed, &[idx as u64, n as u64]);
        let errors = (0..setup.reps)
            .into_par_iter()
            .map(|rep| {
                let sample = replicate_sample(&setup.target, &setup.noise, n, master, rep as u64);
                Ok(kernel.estimate(&sample, lambda, setup.t0)? - truth)
            })
            .collect::<Result<Vec<f64>>>()?;
        let r = setup.reps as f64;
        let sq: Vec<f64> = errors.iter().map(|e| e * e).collect();
        let mse = sq.iter().sum::<f64>() / r;
        let sq_var = sq.iter().map(|s| (s - mse).powi(2)).sum::<f64>() / (r - 1.0);
        let rmse = mse.sqrt();
        points.push(RatePoint {
            n,
            lambda,
            rmse,
            rmse_se: (sq_var / r).sqrt() / (2.0 * rmse),
            mean_error: errors.iter().sum::<f64>() / r,
        });
    }
    let x: Vec<f64> = points.iter().map(|p| (p.n as f64).ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.rmse.ln()).collect();
    let (slope, slope_se, intercept) = fit_line(&x, &y);
    Ok(RateReport {
        points,
        slope,
        slope_se,
        intercept,
        nominal_slope: nominal_slope(setup.alpha, setup.beta, lo as f64, hi as f64)?,
    })
}
