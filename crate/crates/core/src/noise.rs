//! Known error laws: characteristic functions, distribution functions,
//! sampling, and numerical checks of the ordinary-smoothness assumptions.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution as _, Gamma, Normal, Open01};

use crate::rng::rng_from_seed;
use crate::special::{gamma_p, normal_cdf};
use crate::{Error, Result};

/// A univariate law. Used both for the noise and for simulated targets.
#[derive(Debug, Clone, PartialEq)]
pub enum Distribution {
    /// Density `[Γ(shape) scale^shape]⁻¹ (x−loc)^{shape−1} e^{−(x−loc)/scale}` on `x ≥ loc`.
    Gamma { loc: f64, shape: f64, scale: f64 },
    /// Density `(2·scale)⁻¹ e^{−|x−loc|/scale}`.
    Laplace { loc: f64, scale: f64 },
    Gaussian { mean: f64, variance: f64 },
    Mixture(Vec<(f64, Distribution)>),
}

impl Distribution {
    pub fn gamma(loc: f64, shape: f64, scale: f64) -> Result<Self> {
        if !(shape > 0.0 && scale > 0.0 && loc.is_finite()) {
            return Err(Error::Domain("gamma requires shape > 0, scale > 0".into()));
        }
        Ok(Distribution::Gamma { loc, shape, scale })
    }

    pub fn laplace(loc: f64, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && loc.is_finite()) {
            return Err(Error::Domain("laplace requires scale > 0".into()));
        }
        Ok(Distribution::Laplace { loc, scale })
    }

    pub fn gaussian(mean: f64, variance: f64) -> Result<Self> {
        if !(variance > 0.0 && mean.is_finite()) {
            return Err(Error::Domain("gaussian requires variance > 0".into()));
        }
        Ok(Distribution::Gaussian { mean, variance })
    }

    /// Weights must be nonnegative and sum to one within `1e-12`.
    pub fn mixture(components: Vec<(f64, Distribution)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Domain("mixture needs at least one component".into()));
        }
        if components.iter().any(|(w, _)| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::Domain("mixture weights must be nonnegative".into()));
        }
        let total: f64 = components.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Domain("mixture weights must sum to one".into()));
        }
        Ok(Distribution::Mixture(components))
    }

    /// `E e^{iωX}`.
    pub fn cf(&self, omega: f64) -> Complex64 {
        match self {
            Distribution::Gamma { loc, shape, scale } => {
                let ts = scale * omega;
                let modulus = (1.0 + ts * ts).powf(-0.5 * shape);
                let arg = shape * ts.atan() + omega * loc;
                Complex64::from_polar(modulus, arg)
            }
            Distribution::Laplace { loc, scale } => {
                let ts = scale * omega;
                Complex64::from_polar(1.0 / (1.0 + ts * ts), omega * loc)
            }
            Distribution::Gaussian { mean, variance } => {
                Complex64::from_polar((-0.5 * variance * omega * omega).exp(), omega * mean)
            }
            Distribution::Mixture(components) => {
                if omega == 0.0 {
                    return Complex64::new(1.0, 0.0);
                }
                components
                    .iter()
                    .map(|(w, d)| d.cf(omega) * *w)
                    .fold(Complex64::new(0.0, 0.0), |acc, z| acc + z)
            }
        }
    }

    pub fn cdf(&self, t: f64) -> f64 {
        match self {
            Distribution::Gamma { loc, shape, scale } => gamma_p(*shape, (t - loc) / scale),
            Distribution::Laplace { loc, scale } => {
                let z = (t - loc) / scale;
                if z < 0.0 {
                    0.5 * z.exp()
                } else {
                    1.0 - 0.5 * (-z).exp()
                }
            }
            Distribution::Gaussian { mean, variance } => normal_cdf((t - mean) / variance.sqrt()),
            Distribution::Mixture(components) => components
                .iter()
                .map(|(w, d)| w * d.cdf(t))
                .sum::<f64>()
                .clamp(0.0, 1.0),
        }
    }

    pub fn pdf(&self, t: f64) -> f64 {
        match self {
            Distribution::Gamma { loc, shape, scale } => {
                let z = (t - loc) / scale;
                if z <= 0.0 {
                    return 0.0;
                }
                ((shape - 1.0) * z.ln() - z - libm::lgamma(*shape)).exp() / scale
            }
            Distribution::Laplace { loc, scale } => (-(t - loc).abs() / scale).exp() / (2.0 * scale),
            Distribution::Gaussian { mean, variance } => {
                let z = (t - mean) / variance.sqrt();
                (-0.5 * z * z).exp() / (2.0 * PI * variance).sqrt()
            }
            Distribution::Mixture(components) => components.iter().map(|(w, d)| w * d.pdf(t)).sum(),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Distribution::Gamma { loc, shape, scale } => loc + shape * scale,
            Distribution::Laplace { loc, .. } => *loc,
            Distribution::Gaussian { mean, .. } => *mean,
            Distribution::Mixture(components) => components.iter().map(|(w, d)| w * d.mean()).sum(),
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            Distribution::Gamma { shape, scale, .. } => shape * scale * scale,
            Distribution::Laplace { scale, .. } => 2.0 * scale * scale,
            Distribution::Gaussian { variance, .. } => *variance,
            Distribution::Mixture(components) => {
                let mean = self.mean();
                components
                    .iter()
                    .map(|(w, d)| {
                        let m = d.mean();
                        w * (d.variance() + (m - mean) * (m - mean))
                    })
                    .sum()
            }
        }
    }

    /// A typical length, used to size default search brackets.
    pub fn scale(&self) -> f64 {
        self.variance().sqrt()
    }

    /// Inverse distribution function by bisection.
    pub fn quantile(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return f64::NEG_INFINITY;
        }
        if p >= 1.0 {
            return f64::INFINITY;
        }
        let mean = self.mean();
        let mut width = self.scale().max(1e-12);
        let mut lo = mean - width;
        while self.cdf(lo) > p {
            width *= 2.0;
            lo = mean - width;
        }
        width = self.scale().max(1e-12);
        let mut hi = mean + width;
        while self.cdf(hi) < p {
            width *= 2.0;
            hi = mean + width;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-14 * (1.0 + mid.abs()) {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Distribution::Gamma { loc, shape, scale } => {
                // parameters validated at construction
                let g = Gamma::new(*shape, *scale).expect("valid gamma parameters");
                loc + g.sample(rng)
            }
            Distribution::Laplace { loc, scale } => {
                let u: f64 = Open01.sample(rng);
                let u = u - 0.5;
                loc - scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
            }
            Distribution::Gaussian { mean, variance } => {
                let n = Normal::new(*mean, variance.sqrt()).expect("valid normal parameters");
                n.sample(rng)
            }
            Distribution::Mixture(components) => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (w, d) in components {
                    acc += w;
                    if u < acc {
                        return d.sample(rng);
                    }
                }
                // u landed in the rounding gap above the last partial sum
                components.last().expect("nonempty mixture").1.sample(rng)
            }
        }
    }
}

/// Ordinary-smoothness bounds `c(1+ω²)^{−β/2} ≤ |f̂(ω)| ≤ C(1+ω²)^{−β/2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct E1 {
    pub beta: f64,
    pub c_lower: f64,
    pub c_upper: f64,
}

/// Local behaviour at the origin: `|f̂(ω)| ≥ 1 − b|ω|^τ` for `|ω| ≤ ω₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct E2 {
    pub omega0: f64,
    pub b: f64,
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    pub law: Distribution,
    pub e1: Option<E1>,
    pub e2: Option<E2>,
}

impl NoiseModel {
    pub fn new(law: Distribution) -> Self {
        NoiseModel {
            law,
            e1: None,
            e2: None,
        }
    }

    pub fn with_e1(mut self, e1: E1) -> Self {
        self.e1 = Some(e1);
        self
    }

    pub fn with_e2(mut self, e2: E2) -> Self {
        self.e2 = Some(e2);
        self
    }

    /// Gamma noise with the analytic constants attached: `β` equals the shape,
    /// `c = min(1, θ^{−β})`, `C = max(1, θ^{−β})`, and near the origin
    /// `b = βθ²/2`, `τ = 2`, `ω₀ = 1/θ`.
    pub fn gamma_preset(loc: f64, shape: f64, scale: f64) -> Result<Self> {
        let law = Distribution::gamma(loc, shape, scale)?;
        let k = scale.powf(-shape);
        Ok(NoiseModel::new(law)
            .with_e1(E1 {
                beta: shape,
                c_lower: k.min(1.0),
                c_upper: k.max(1.0),
            })
            .with_e2(E2 {
                omega0: 1.0 / scale,
                b: 0.5 * shape * scale * scale,
                tau: 2.0,
            }))
    }

    /// Laplace noise with `β = 2`, `c = min(1, a⁻²)`, `C = max(1, a⁻²)`,
    /// `b = a²`, `τ = 2`, `ω₀ = 1/a`.
    pub fn laplace_preset(loc: f64, scale: f64) -> Result<Self> {
        let law = Distribution::laplace(loc, scale)?;
        let k = 1.0 / (scale * scale);
        Ok(NoiseModel::new(law)
            .with_e1(E1 {
                beta: 2.0,
                c_lower: k.min(1.0),
                c_upper: k.max(1.0),
            })
            .with_e2(E2 {
                omega0: 1.0 / scale,
                b: scale * scale,
                tau: 2.0,
            }))
    }

    /// Gaussian noise is supersmooth; only the local bound is attached.
    pub fn gaussian_preset(mean: f64, variance: f64) -> Result<Self> {
        let law = Distribution::gaussian(mean, variance)?;
        Ok(NoiseModel::new(law).with_e2(E2 {
            omega0: 1.0 / variance.sqrt(),
            b: 0.5 * variance,
            tau: 2.0,
        }))
    }

    /// Gamma errors with shape 2 and standard deviation 1/2.
    pub fn scenario_gamma() -> Self {
        Self::gamma_preset(0.0, 2.0, 0.5 * FRAC_1_SQRT_2).expect("valid preset")
    }

    /// `½ L(−1, ½) + ½ L(1, ½)`; its characteristic function has zeros.
    pub fn scenario_laplace_mixture() -> Self {
        let law = Distribution::mixture(alloc::vec![
            (0.5, Distribution::laplace(-1.0, 0.5).expect("valid")),
            (0.5, Distribution::laplace(1.0, 0.5).expect("valid")),
        ])
        .expect("valid mixture");
        NoiseModel::new(law)
    }

    /// `½ N(0, ¼) + ½ N(2, ¼)`; its characteristic function vanishes at `π/2`.
    pub fn scenario_normal_mixture() -> Self {
        let law = Distribution::mixture(alloc::vec![
            (0.5, Distribution::gaussian(0.0, 0.25).expect("valid")),
            (0.5, Distribution::gaussian(2.0, 0.25).expect("valid")),
        ])
        .expect("valid mixture");
        NoiseModel::new(law)
    }

    /// Gamma errors with shape 0.3: `|f̂(ω)|` decays like `|ω|^{−0.3}`.
    pub fn rough_preset() -> Self {
        Self::gamma_preset(0.0, 0.3, 0.5).expect("valid preset")
    }
}

pub fn cf_eval(model: &NoiseModel, omega: f64) -> Complex64 {
    model.law.cf(omega)
}

pub fn noise_cdf(model: &NoiseModel, t: f64) -> f64 {
    model.law.cdf(t)
}

/// `n` i.i.d. draws; the same seed always yields the same sequence.
pub fn sample_noise(model: &NoiseModel, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    (0..n).map(|_| model.law.sample(&mut rng)).collect()
}

/// Outcome of checking the smoothness assumptions on a frequency grid.
///
/// For E1, `worst_ratio_low = min |f̂|/(c(1+ω²)^{−β/2})` and
/// `worst_ratio_high = min C(1+ω²)^{−β/2}/|f̂|`; both must be at least one.
/// For E2, `e2_worst_ratio = min |f̂|/(1 − b|ω|^τ)` over grid points with
/// `|ω| ≤ ω₀` and a positive right-hand side. Ratios of an unchecked block
/// are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub e1_pass: bool,
    pub e2_pass: bool,
    pub worst_ratio_low: f64,
    pub worst_ratio_high: f64,
    pub e2_worst_ratio: f64,
    pub grid: Vec<f64>,
}

const RATIO_SLACK: f64 = 1e-12;

/// 400 log-spaced frequencies on `[10⁻², 10³]`.
pub fn default_omega_grid() -> Vec<f64> {
    log_grid(1e-2, 1e3, 400)
}

pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return alloc::vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

pub fn verify_assumptions(model: &NoiseModel, grid: &[f64]) -> Result<AssumptionReport> {
    if model.e1.is_none() && model.e2.is_none() {
        return Err(Error::MissingParameters("neither E1 nor E2 constants are set"));
    }
    if grid.is_empty() || grid.iter().any(|w| !(*w >= 0.0)) {
        return Err(Error::Domain("frequency grid must be nonempty and nonnegative".into()));
    }

    let (mut low, mut high) = (f64::NAN, f64::NAN);
    if let Some(e1) = model.e1 {
        low = f64::INFINITY;
        high = f64::INFINITY;
        for &w in grid {
            let modulus = model.law.cf(w).norm();
            let envelope = (1.0 + w * w).powf(-0.5 * e1.beta);
            low = low.min(modulus / (e1.c_lower * envelope));
            high = high.min(e1.c_upper * envelope / modulus);
        }
    }

    let mut e2_ratio = f64::NAN;
    if let Some(e2) = model.e2 {
        e2_ratio = f64::INFINITY;
        for &w in grid.iter().filter(|w| w.abs() <= e2.omega0) {
            let rhs = 1.0 - e2.b * w.abs().powf(e2.tau);
            if rhs > 0.0 {
                e2_ratio = e2_ratio.min(model.law.cf(w).norm() / rhs);
            }
        }
    }

    Ok(AssumptionReport {
        e1_pass: low >= 1.0 - RATIO_SLACK && high >= 1.0 - RATIO_SLACK,
        e2_pass: e2_ratio >= 1.0 - RATIO_SLACK,
        worst_ratio_low: low,
        worst_ratio_high: high,
        e2_worst_ratio: e2_ratio,
        grid: grid.to_vec(),
    })
}
