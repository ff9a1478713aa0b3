//! Fourier-inversion estimator of `F(t0)`:
//!
//! ```text
//! F̃_λ(t0) = ½ − (πn)⁻¹ Σ_j ∫₀^λ ω⁻¹ Im{ e^{iω(Y_j−t0)} / f̂_ζ(ω) } dω
//! ```
//!
//! Each per-observation integral comes either from adaptive quadrature or
//! from a closed form (Gamma shape-2 and Laplace noise).

use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_PI, PI};

#[allow(unused_imports)]
use num_traits::Float;

use crate::noise::{Distribution, NoiseModel};
use crate::quadrature::{integrate, QuadratureConfig};
use crate::rng::{derive_seed, rng_from_seed};
use crate::special::si;
use crate::{Error, Result};

/// Below this frequency the integrand is replaced by its limit at zero.
pub const OMEGA_LIMIT: f64 = 1e-8;
/// `|f̂_ζ|` below this is treated as a zero of the characteristic function.
pub const CF_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub y: Vec<f64>,
    pub seed: Option<u64>,
}

impl SampleSet {
    pub fn new(y: Vec<f64>) -> Self {
        SampleSet { y, seed: None }
    }

    /// Draws `X_j + ζ_j`; signal and noise use separate child streams.
    pub fn simulate(target: &Distribution, noise: &NoiseModel, n: usize, seed: u64) -> Self {
        let mut rx = rng_from_seed(derive_seed(seed, &[0]));
        let mut rz = rng_from_seed(derive_seed(seed, &[1]));
        let y = (0..n)
            .map(|_| target.sample(&mut rx) + noise.law.sample(&mut rz))
            .collect();
        SampleSet { y, seed: Some(seed) }
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResult {
    pub value_raw: f64,
    pub value_clipped: f64,
    pub lambda: f64,
    /// `∫₀^λ` for each observation, i.e. `π ξ_j`.
    pub per_obs_integrals: Option<Vec<f64>>,
}

impl EstimateResult {
    fn from_sum(sum: f64, n: usize, lambda: f64, per_obs: Option<Vec<f64>>) -> Self {
        let value_raw = 0.5 - FRAC_1_PI * sum / n as f64;
        EstimateResult {
            value_raw,
            value_clipped: value_raw.clamp(0.0, 1.0),
            lambda,
            per_obs_integrals: per_obs,
        }
    }
}

/// `ω⁻¹ Im{e^{iωd}/f̂(ω)}` with `d = y − t0`.
pub fn integrand(model: &NoiseModel, y: f64, t0: f64, omega: f64) -> Result<f64> {
    law_integrand(&model.law, model.law.mean(), y - t0, omega)
}

fn law_integrand(law: &Distribution, mean: f64, d: f64, omega: f64) -> Result<f64> {
    if omega < OMEGA_LIMIT {
        return Ok(d - mean);
    }
    let cf = law.cf(omega);
    let modulus_sq = cf.norm_sqr();
    if modulus_sq < CF_FLOOR * CF_FLOOR {
        return Err(Error::VanishingCf {
            omega,
            modulus: modulus_sq.sqrt(),
        });
    }
    let (s, c) = (omega * d).sin_cos();
    Ok((s * cf.re - c * cf.im) / (modulus_sq * omega))
}

/// `I_λ(y) = ∫₀^λ ω⁻¹ Im{e^{iωy}(1 − iθω)²} dω`, the per-observation integral
/// for zero-location Gamma noise of shape 2 and scale `θ`.
pub fn gamma_closed_form(theta: f64, lambda: f64, y: f64) -> f64 {
    let y_eps = 1e-6 * (theta * lambda).max(1.0);
    let t2 = theta * theta;
    if y.abs() < y_eps {
        let l3 = lambda * lambda * lambda;
        let l5 = l3 * lambda * lambda;
        return -2.0 * theta * lambda
            + y * (lambda - t2 * l3 / 3.0)
            + y * y * (theta * l3 / 3.0)
            + y * y * y * (-l3 / 18.0 + t2 * l5 / 30.0);
    }
    let (s, c) = (lambda * y).sin_cos();
    si(lambda * y) + (t2 * lambda * c - 2.0 * theta * s) / y - t2 * s / (y * y)
}

/// `∫₀^λ ω⁻¹ sin(ωd)(1 + a²ω²) dω`, the per-observation integral for
/// zero-location Laplace noise of scale `a`.
pub fn laplace_closed_form(a: f64, lambda: f64, d: f64) -> f64 {
    let d_eps = 1e-6 * (a * lambda).max(1.0);
    let a2 = a * a;
    if d.abs() < d_eps {
        let l3 = lambda * lambda * lambda;
        let l5 = l3 * lambda * lambda;
        return d * (lambda + a2 * l3 / 3.0) - d * d * d * (l3 / 18.0 + a2 * l5 / 30.0);
    }
    let (s, c) = (lambda * d).sin_cos();
    si(lambda * d) + a2 * (s / (d * d) - lambda * c / d)
}

/// How the per-observation integrals are evaluated.
#[derive(Debug, Clone, PartialEq)]
pub enum InversionKernel {
    Quadrature {
        law: Distribution,
        mean: f64,
        config: QuadratureConfig,
    },
    GammaShape2 {
        loc: f64,
        scale: f64,
    },
    Laplace {
        loc: f64,
        scale: f64,
    },
}

impl InversionKernel {
    pub fn quadrature(model: &NoiseModel, config: QuadratureConfig) -> Self {
        InversionKernel::Quadrature {
            mean: model.law.mean(),
            law: model.law.clone(),
            config,
        }
    }

    /// Closed form when the law admits one, quadrature otherwise.
    pub fn for_noise(model: &NoiseModel, config: QuadratureConfig) -> Self {
        match model.law {
            Distribution::Gamma { loc, shape, scale } if shape == 2.0 => {
                InversionKernel::GammaShape2 { loc, scale }
            }
            Distribution::Laplace { loc, scale } => InversionKernel::Laplace { loc, scale },
            _ => Self::quadrature(model, config),
        }
    }

    /// `∫₀^λ` for the observation offset `d = y − t0`.
    pub fn integral_to(&self, d: f64, lambda: f64) -> Result<f64> {
        self.integral(d, 0.0, lambda)
    }

    /// `∫_lo^hi` for the observation offset `d = y − t0`.
    pub fn integral(&self, d: f64, lo: f64, hi: f64) -> Result<f64> {
        match self {
            InversionKernel::GammaShape2 { loc, scale } => {
                let v_hi = gamma_closed_form(*scale, hi, d - loc);
                let v_lo = if lo == 0.0 {
                    0.0
                } else {
                    gamma_closed_form(*scale, lo, d - loc)
                };
                Ok(v_hi - v_lo)
            }
            InversionKernel::Laplace { loc, scale } => {
                let v_hi = laplace_closed_form(*scale, hi, d - loc);
                let v_lo = if lo == 0.0 {
                    0.0
                } else {
                    laplace_closed_form(*scale, lo, d - loc)
                };
                Ok(v_hi - v_lo)
            }
            InversionKernel::Quadrature { law, mean, config } => {
                let freq = d.abs().max((d - mean).abs());
                let cap = if freq > 0.0 { Some(PI / freq) } else { None };
                integrate(|w| law_integrand(law, *mean, d, w), lo, hi, config, cap)
            }
        }
    }

    /// `out[i] = ∫₀^{breakpoints[i]}`; breakpoints must be nondecreasing.
    pub fn cumulative(&self, d: f64, breakpoints: &[f64], out: &mut [f64]) -> Result<()> {
        if out.len() != breakpoints.len() {
            return Err(Error::DimensionMismatch {
                expected: breakpoints.len(),
                found: out.len(),
            });
        }
        match self {
            InversionKernel::Quadrature { .. } => {
                let (mut acc, mut prev) = (0.0, 0.0);
                for (slot, &bp) in out.iter_mut().zip(breakpoints) {
                    acc += self.integral(d, prev, bp)?;
                    prev = bp;
                    *slot = acc;
                }
            }
            _ => {
                for (slot, &bp) in out.iter_mut().zip(breakpoints) {
                    *slot = self.integral_to(d, bp)?;
                }
            }
        }
        Ok(())
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::Domain("cut-off frequency must be finite and nonnegative".into()));
    }
    Ok(())
}

/// Estimate by adaptive quadrature of every per-observation integral.
pub fn estimate_cdf(
    sample: &SampleSet,
    model: &NoiseModel,
    lambda: f64,
    t0: f64,
    q: &QuadratureConfig,
) -> Result<EstimateResult> {
    q.validate()?;
    estimate_cdf_with(sample, &InversionKernel::quadrature(model, *q), lambda, t0, true)
}

pub fn estimate_cdf_with(
    sample: &SampleSet,
    kernel: &InversionKernel,
    lambda: f64,
    t0: f64,
    keep_per_obs: bool,
) -> Result<EstimateResult> {
    if sample.y.is_empty() {
        return Err(Error::EmptySample);
    }
    check_lambda(lambda)?;
    let mut per_obs = if keep_per_obs {
        Vec::with_capacity(sample.n())
    } else {
        Vec::new()
    };
    let mut sum = 0.0;
    for &y in &sample.y {
        let v = if lambda == 0.0 {
            0.0
        } else {
            kernel.integral_to(y - t0, lambda)?
        };
        sum += v;
        if keep_per_obs {
            per_obs.push(v);
        }
    }
    Ok(EstimateResult::from_sum(
        sum,
        sample.n(),
        lambda,
        keep_per_obs.then_some(per_obs),
    ))
}

/// Estimates for several cut-offs sharing one pass over the sample.
/// `lambdas` must be nondecreasing.
pub fn estimate_cdf_path(
    sample: &SampleSet,
    kernel: &InversionKernel,
    lambdas: &[f64],
    t0: f64,
) -> Result<Vec<EstimateResult>> {
    if sample.y.is_empty() {
        return Err(Error::EmptySample);
    }
    for &l in lambdas {
        check_lambda(l)?;
    }
    if lambdas.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Domain("cut-off frequencies must be nondecreasing".into()));
    }
    let mut sums = alloc::vec![0.0; lambdas.len()];
    let mut row = alloc::vec![0.0; lambdas.len()];
    for &y in &sample.y {
        kernel.cumulative(y - t0, lambdas, &mut row)?;
        for (s, v) in sums.iter_mut().zip(&row) {
            *s += v;
        }
    }
    Ok(sums
        .iter()
        .zip(lambdas)
        .map(|(&s, &l)| EstimateResult::from_sum(s, sample.n(), l, None))
        .collect())
}

/// The per-observation integral `∫₀^λ` at a fixed cut-off, tabulated in the
/// offset `d` on a uniform grid and interpolated by cubic Hermite polynomials
/// whose slopes `∫₀^λ Re{e^{iωd}/f̂(ω)} dω` are integrated directly.
/// Offsets off the grid are integrated directly.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedKernel {
    pub lambda: f64,
    lo: f64,
    step: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
    direct: InversionKernel,
}

impl TabulatedKernel {
    pub fn build(model: &NoiseModel, config: QuadratureConfig, lambda: f64, lo: f64, hi: f64, step: f64) -> Result<Self> {
        config.validate()?;
        check_lambda(lambda)?;
        if !(hi > lo) || !(step > 0.0) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Domain("table needs lo < hi and a positive step".into()));
        }
        let direct = InversionKernel::quadrature(model, config);
        let count = ((hi - lo) / step).ceil() as usize + 1;
        let law = &model.law;
        let mut values = Vec::with_capacity(count);
        let mut slopes = Vec::with_capacity(count);
        for i in 0..count {
            let d = lo + i as f64 * step;
            values.push(direct.integral_to(d, lambda)?);
            let cap = if d != 0.0 { Some(PI / d.abs()) } else { None };
            slopes.push(integrate(|w| law_slope_integrand(law, d, w), 0.0, lambda, &config, cap)?);
        }
        Ok(TabulatedKernel {
            lambda,
            lo,
            step,
            values,
            slopes,
            direct,
        })
    }

    pub fn eval(&self, d: f64) -> Result<f64> {
        let u = (d - self.lo) / self.step;
        let last = self.values.len() - 1;
        if !(u >= 0.0) || u > last as f64 {
            return self.direct.integral_to(d, self.lambda);
        }
        let i = (u.floor() as usize).min(last.saturating_sub(1));
        if last == 0 {
            return Ok(self.values[0]);
        }
        let t = u - i as f64;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        Ok(h00 * self.values[i]
            + h10 * self.step * self.slopes[i]
            + h01 * self.values[i + 1]
            + h11 * self.step * self.slopes[i + 1])
    }

    pub fn estimate(&self, sample: &SampleSet, t0: f64) -> Result<EstimateResult> {
        if sample.y.is_empty() {
            return Err(Error::EmptySample);
        }
        let mut sum = 0.0;
        for &y in &sample.y {
            sum += self.eval(y - t0)?;
        }
        Ok(EstimateResult::from_sum(sum, sample.n(), self.lambda, None))
    }
}

/// `Re{e^{iωd}/f̂(ω)}`, the derivative of the integrand numerator in `d`.
fn law_slope_integrand(law: &Distribution, d: f64, omega: f64) -> Result<f64> {
    let cf = law.cf(omega);
    let modulus_sq = cf.norm_sqr();
    if modulus_sq < CF_FLOOR * CF_FLOOR {
        return Err(Error::VanishingCf {
            omega,
            modulus: modulus_sq.sqrt(),
        });
    }
    let (s, c) = (omega * d).sin_cos();
    Ok((c * cf.re + s * cf.im) / modulus_sq)
}
