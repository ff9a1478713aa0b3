//! Reference curves from the minimax theory: classification of the
//! smoothness pair `(α, β)`, rate and bandwidth orders, and the bias,
//! variance and deviation bounds of the inversion estimator.
//!
//! Constants that the theory leaves implicit (`K1`, `K2`) are caller inputs.

use core::f64::consts::{FRAC_2_PI, PI};

#[allow(unused_imports)]
use num_traits::Float;

use crate::noise::Distribution;
use crate::quadrature::{integrate, QuadratureConfig};
use crate::{Error, Result};

/// Tolerance for the equalities `α + β = ½`, `β = ½` and `α + 3β = ½`.
pub const ZONE_TOL: f64 = 1e-12;

/// Sobolev-type ball `(2π)⁻¹ ∫ |f̂(ω)|²(1+ω²)^α dω ≤ L²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SobolevClass {
    pub alpha: f64,
    pub l: f64,
}

impl SobolevClass {
    pub fn new(alpha: f64, l: f64) -> Result<Self> {
        if !(alpha > -0.5) || !(l > 0.0) {
            return Err(Error::Domain("Sobolev class needs alpha > -1/2 and L > 0".into()));
        }
        Ok(SobolevClass { alpha, l })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZoneKind {
    /// `α + β > ½`, `β ≥ ½`.
    Regular1,
    /// `α + β > ½`, `β < ½`.
    Regular2,
    /// `α + β = ½`.
    Border,
    /// `α + β < ½`, `α + 3β ≥ ½`.
    Singular1,
    /// `α + 3β < ½`.
    Singular2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Zone {
    pub kind: ZoneKind,
    pub alpha: f64,
    pub beta: f64,
    /// Set for `β = ½`, where the regular rate carries a logarithm.
    pub log_factor: bool,
}

impl Zone {
    pub fn is_regular(&self) -> bool {
        matches!(self.kind, ZoneKind::Regular1 | ZoneKind::Regular2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Cmp {
    Below,
    Equal,
    Above,
}

fn cmp_half(v: f64) -> Cmp {
    let s = v - 0.5;
    if s.abs() <= ZONE_TOL {
        Cmp::Equal
    } else if s > 0.0 {
        Cmp::Above
    } else {
        Cmp::Below
    }
}

pub fn classify_zone(alpha: f64, beta: f64) -> Result<Zone> {
    if !(alpha > -0.5) || !(beta > 0.0) || !alpha.is_finite() || !beta.is_finite() {
        return Err(Error::Domain("need alpha > -1/2 and beta > 0".into()));
    }
    let beta_cmp = cmp_half(beta);
    let (kind, log_factor) = match cmp_half(alpha + beta) {
        Cmp::Equal => (ZoneKind::Border, false),
        Cmp::Above => match beta_cmp {
            Cmp::Below => (ZoneKind::Regular2, false),
            Cmp::Equal => (ZoneKind::Regular1, true),
            Cmp::Above => (ZoneKind::Regular1, false),
        },
        Cmp::Below => match cmp_half(alpha + 3.0 * beta) {
            Cmp::Below => (ZoneKind::Singular2, false),
            _ => (ZoneKind::Singular1, false),
        },
    };
    Ok(Zone {
        kind,
        alpha,
        beta,
        log_factor,
    })
}

fn regular(alpha: f64, beta: f64) -> Result<Zone> {
    let zone = classify_zone(alpha, beta)?;
    if !zone.is_regular() {
        return Err(Error::Zone {
            alpha,
            beta,
            expected: "regular",
        });
    }
    Ok(zone)
}

/// Rate `ψ(z)` of the regular zone.
pub fn rate_psi(z: f64, alpha: f64, beta: f64) -> Result<f64> {
    let zone = regular(alpha, beta)?;
    if !(z >= 1.0) {
        return Err(Error::Domain("rate functions need z >= 1".into()));
    }
    Ok(match (zone.kind, zone.log_factor) {
        (ZoneKind::Regular2, _) => 1.0 / z.sqrt(),
        (_, true) => (z.ln() / z).sqrt(),
        _ => z.powf(-(2.0 * alpha + 1.0) / (4.0 * alpha + 4.0 * beta)),
    })
}

/// Bandwidth order `λ(z) = z^{1/(2α + max(2β, 1))}` of the regular zone.
pub fn lambda_of(z: f64, alpha: f64, beta: f64) -> Result<f64> {
    regular(alpha, beta)?;
    if !(z >= 1.0) {
        return Err(Error::Domain("rate functions need z >= 1".into()));
    }
    Ok(z.powf(1.0 / (2.0 * alpha + (2.0 * beta).max(1.0))))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePair {
    pub lambda: f64,
    pub phi: f64,
}

/// Bandwidth and risk orders on the border and in the singular zone.
pub fn irregular_zone_rate(n: f64, alpha: f64, beta: f64) -> Result<RatePair> {
    let zone = classify_zone(alpha, beta)?;
    if !(n > 1.0) {
        return Err(Error::Domain("sample size must exceed 1".into()));
    }
    let ln = n.ln();
    let (lambda, phi) = match zone.kind {
        ZoneKind::Regular1 | ZoneKind::Regular2 => {
            return Err(Error::Zone {
                alpha,
                beta,
                expected: "border or singular",
            })
        }
        ZoneKind::Border => match cmp_half(beta) {
            Cmp::Above => (n / ln.sqrt(), (ln.sqrt() / n).powf(alpha + 0.5)),
            Cmp::Equal => (n / ln.powf(1.5), ln.powf(0.75) / n.sqrt()),
            Cmp::Below => (
                (n / ln.sqrt()).powf(1.0 / (2.0 * alpha + 1.0)),
                ln.powf(0.25) / n.sqrt(),
            ),
        },
        ZoneKind::Singular1 => {
            let den = 2.0 * alpha + 3.0 - 2.0 * beta;
            (n.powf(2.0 / den), n.powf(-(2.0 * alpha + 1.0) / den))
        }
        ZoneKind::Singular2 => (
            n.powf(1.0 / (2.0 * alpha + 2.0 * beta + 1.0)),
            n.powf(-(2.0 * alpha + 1.0) / (4.0 * alpha + 4.0 * beta + 2.0)),
        ),
    };
    Ok(RatePair { lambda, phi })
}

/// Lower-bound order `z^{−(2α+1)/(4α+4β)}` for the ε-risk, `z = n / ln(1/ε)`.
pub fn lower_bound_rate(n: f64, epsilon: f64, alpha: f64, beta: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) || !(n > 0.0) {
        return Err(Error::Domain("need n > 0 and epsilon in (0, 1)".into()));
    }
    if !(alpha + beta > 0.0) {
        return Err(Error::Domain("need alpha + beta > 0".into()));
    }
    let z = n / (1.0 / epsilon).ln();
    Ok(z.powf(-(2.0 * alpha + 1.0) / (4.0 * alpha + 4.0 * beta)))
}

/// `K₀ = √(2/π)(1 + (2α+1)^{−½})`.
pub fn bias_constant(alpha: f64) -> f64 {
    FRAC_2_PI.sqrt() * (1.0 + 1.0 / (2.0 * alpha + 1.0).sqrt())
}

/// `K₀ L λ^{−α−½}`, valid for `λ ≥ 1`.
pub fn bias_bound(cls: SobolevClass, lambda: f64) -> Result<f64> {
    if !(lambda >= 1.0) {
        return Err(Error::Domain("bias bound requires lambda >= 1".into()));
    }
    Ok(bias_constant(cls.alpha) * cls.l * lambda.powf(-cls.alpha - 0.5))
}

/// Inputs of the variance bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceBoundParams {
    pub alpha: f64,
    pub beta: f64,
    pub l: f64,
    pub c_upper: f64,
    pub c_lower: f64,
    pub c_star: f64,
    pub omega1: f64,
    pub k1: f64,
    pub k2: f64,
}

/// Growth factor of the stochastic term.
pub fn variance_growth(beta: f64, lambda: f64, omega1: f64) -> f64 {
    match cmp_half(beta) {
        Cmp::Above => lambda.powf(2.0 * beta - 1.0),
        Cmp::Equal => (lambda / omega1).ln().max(1.0),
        Cmp::Below => 1.0,
    }
}

impl VarianceBoundParams {
    fn check(&self, lambda: f64, n: usize) -> Result<()> {
        if n == 0 || !(lambda >= self.omega1.max(1.0)) {
            return Err(Error::Domain("variance bound requires n >= 1 and lambda >= max(1, omega1)".into()));
        }
        Ok(())
    }

    /// Upper bound on the variance of the estimator at cut-off `λ`.
    pub fn bound(&self, lambda: f64, n: usize) -> Result<f64> {
        self.check(lambda, n)?;
        let p = self;
        let nf = n as f64;
        let ratio = 1.0 / (p.c_lower * p.c_lower);
        let w = variance_growth(p.beta, lambda, p.omega1);
        let main = match cmp_half(p.alpha + p.beta) {
            Cmp::Above => p.k1 * p.l * p.c_upper * ratio * w,
            Cmp::Equal => p.k1 * p.l * p.c_upper * ratio * w * (lambda / p.omega1).ln().sqrt(),
            Cmp::Below => {
                let lg = (lambda / p.omega1).ln();
                let a = p.l * p.c_upper * lambda.powf(0.5 - p.beta - p.alpha);
                let b = lg * lg + lambda.powf(2.0 * p.beta);
                p.k1 * ratio * a.min(b)
            }
        };
        Ok(main / nf + p.c_star / nf)
    }

    /// The bound for `β > 1` that does not involve `α` or `L`.
    pub fn bound_smooth_noise(&self, lambda: f64, n: usize) -> Result<f64> {
        self.check(lambda, n)?;
        if !(self.beta > 1.0) {
            return Err(Error::Domain("the alpha-free bound needs beta > 1".into()));
        }
        let nf = n as f64;
        Ok(self.k2 * self.c_upper / (self.c_lower * self.c_lower) * lambda.powf(2.0 * self.beta - 1.0) / nf
            + self.c_star / nf)
    }
}

/// `m_λ = √(2c*) + 2^{1+(β/2−1)₊}(πc)⁻¹[ln(λ/ω₁) + λ^β/β]`.
pub fn m_lambda(beta: f64, c_lower: f64, omega1: f64, c_star: f64, lambda: f64) -> f64 {
    let pow = 1.0 + (0.5 * beta - 1.0).max(0.0);
    (2.0 * c_star).sqrt()
        + 2.0f64.powf(pow) / (PI * c_lower) * ((lambda / omega1).ln() + lambda.powf(beta) / beta)
}

/// `min(1, 2 exp{−nz²/(2σ² + (2/3)mz)})`.
pub fn bernstein_tail(z: f64, n: usize, sigma_sq: f64, m: f64) -> f64 {
    let nf = n as f64;
    let e = -nf * z * z / (2.0 * sigma_sq + 2.0 / 3.0 * m * z);
    (2.0 * e.exp()).min(1.0)
}

/// Smallest `L` with the law in the Sobolev ball of smoothness `α`,
/// integrating `|f̂|²(1+ω²)^α` over `[0, cutoff]`.
pub fn sobolev_radius(dist: &Distribution, alpha: f64, cutoff: f64, q: &QuadratureConfig) -> Result<f64> {
    let integral = integrate(
        |w| Ok(dist.cf(w).norm_sqr() * (1.0 + w * w).powf(alpha)),
        0.0,
        cutoff,
        q,
        Some(1.0),
    )?;
    Ok((integral / PI).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zone_examples() {
        assert_eq!(classify_zone(1.0, 2.0).unwrap().kind, ZoneKind::Regular1);
        assert_eq!(classify_zone(0.2, 0.4).unwrap().kind, ZoneKind::Regular2);
        assert_eq!(classify_zone(-0.4, 0.3).unwrap().kind, ZoneKind::Singular1);
        assert_eq!(classify_zone(0.1, 0.4).unwrap().kind, ZoneKind::Border);
        assert_eq!(classify_zone(-0.45, 0.1).unwrap().kind, ZoneKind::Singular2);
        let z = classify_zone(1.0, 0.5).unwrap();
        assert!(z.kind == ZoneKind::Regular1 && z.log_factor);
        assert!(classify_zone(-0.5, 1.0).is_err());
        assert!(classify_zone(0.0, 0.0).is_err());
    }

    #[test]
    fn psi_examples() {
        assert_relative_eq!(rate_psi(1e4, 1.0, 0.3).unwrap(), 1e-2, epsilon = 1e-15);
        assert_relative_eq!(rate_psi(1e4, 1.0, 2.0).unwrap(), 1e4f64.powf(-0.25), epsilon = 1e-15);
        assert_relative_eq!(lambda_of(64.0, 1.0, 2.0).unwrap(), 2.0, epsilon = 1e-14);
        let z = 100.0f64;
        assert_relative_eq!(rate_psi(z, 1.0, 0.5).unwrap(), (z.ln() / z).sqrt());
        assert!(matches!(rate_psi(10.0, -0.4, 0.3), Err(Error::Zone { .. })));
    }

    #[test]
    fn table_cells() {
        let n = 1000.0f64;
        let ln = n.ln();
        let r = irregular_zone_rate(n, 0.0, 0.5).unwrap();
        assert_relative_eq!(r.phi, ln.powf(0.75) / n.sqrt());
        assert_relative_eq!(r.lambda, n / ln.powf(1.5));
        let r = irregular_zone_rate(n, -0.25, 0.75).unwrap();
        assert_relative_eq!(r.lambda, n / ln.sqrt());
        let r = irregular_zone_rate(n, -0.3, 0.3).unwrap();
        let den = 2.0 * -0.3 + 3.0 - 0.6;
        assert_relative_eq!(r.phi, n.powf(-(2.0 * -0.3 + 1.0) / den));
        assert!(irregular_zone_rate(n, 1.0, 1.0).is_err());
    }

    #[test]
    fn bias_examples() {
        let c = SobolevClass::new(0.5, 1.0).unwrap();
        assert_relative_eq!(bias_constant(0.5), 1.362_074_144_350_621_7, epsilon = 1e-15);
        assert_relative_eq!(bias_bound(c, 1.0).unwrap(), bias_constant(0.5));
        assert_relative_eq!(bias_bound(c, 4.0).unwrap(), bias_constant(0.5) / 4.0);
        assert!(bias_bound(c, 0.5).is_err());
    }

    #[test]
    fn bernstein_examples() {
        assert_eq!(bernstein_tail(1e-9, 100, 1.0, 1.0), 1.0);
        assert_relative_eq!(bernstein_tail(1.0, 100, 1.0, 1.0), 2.0 * (-37.5f64).exp(), max_relative = 1e-12);
        let a = bernstein_tail(0.3, 100, 1.0, 1.0);
        let b = bernstein_tail(0.4, 100, 1.0, 1.0);
        assert!(b < a);
    }

    #[test]
    fn variance_branches() {
        let p = VarianceBoundParams {
            alpha: 1.0,
            beta: 0.3,
            l: 2.0,
            c_upper: 1.5,
            c_lower: 0.5,
            c_star: 1.2,
            omega1: 0.5,
            k1: 1.0,
            k2: 1.0,
        };
        let n = 100;
        let want = (2.0 * 1.5 / 0.25 + 1.2) / 100.0;
        assert_relative_eq!(p.bound(3.0, n).unwrap(), want);
        assert_relative_eq!(p.bound(30.0, n).unwrap(), want);
        let q = VarianceBoundParams { beta: 2.0, ..p };
        let r = (q.bound(8.0, n).unwrap() - 0.012) / (q.bound(4.0, n).unwrap() - 0.012);
        assert_relative_eq!(r, 8.0, max_relative = 1e-12);
        assert!(p.bound_smooth_noise(4.0, n).is_err());
        assert!(q.bound_smooth_noise(4.0, n).is_ok());
    }

    #[test]
    fn sobolev_radius_of_gaussian() {
        // (2π)⁻¹∫ e^{−ω²} dω = 1/(2√π) for α = 0
        let d = Distribution::gaussian(0.0, 1.0).unwrap();
        let l = sobolev_radius(&d, 0.0, 40.0, &QuadratureConfig::default()).unwrap();
        assert_relative_eq!(l * l, 0.5 / PI.sqrt(), max_relative = 1e-7);
    }
}
