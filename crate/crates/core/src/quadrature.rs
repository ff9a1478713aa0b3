//! Globally adaptive panel quadrature.
//!
//! The interval is first cut into panels no longer than an optional cap
//! (half a period of the oscillation, for Fourier integrands). The panel with
//! the largest error estimate is then bisected until the summed estimate
//! meets `max(abs_tol, rel_tol·|I|)`.

use alloc::collections::BinaryHeap;
use core::cmp::Ordering;

#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PanelRule {
    GaussKronrod15,
    SimpsonAdaptive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Maximum number of bisections after the initial partition.
    pub max_subdivisions: usize,
    pub panel_rule: PanelRule,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            abs_tol: 1e-8,
            rel_tol: 1e-6,
            max_subdivisions: 2000,
            panel_rule: PanelRule::GaussKronrod15,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) || self.max_subdivisions == 0 {
            return Err(Error::Domain(
                "quadrature tolerances must be positive and max_subdivisions at least 1".into(),
            ));
        }
        Ok(())
    }
}

// Kronrod abscissae on [-1, 1] (nonnegative half) and weights; the Gauss
// 7-point rule uses the odd-indexed nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// 15-point Kronrod estimate and the QUADPACK error estimate.
pub fn gauss_kronrod_15<F>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center)?;
    let mut resg = fc * WG[3];
    let mut resk = fc * WGK[7];
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx)?;
        let f2 = f(center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let reskh = 0.5 * resk;
    let mut resasc = WGK[7] * (fc - reskh).abs();
    let mut resabs = WGK[7] * fc.abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv1[j] - reskh).abs() + (fv2[j] - reskh).abs());
        resabs += WGK[j] * (fv1[j].abs() + fv2[j].abs());
    }
    let result = resk * half;
    resasc *= half.abs();
    resabs *= half.abs();
    let mut err = ((resk - resg) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    Ok((result, err))
}

/// Five-point Simpson panel with Richardson correction.
pub fn simpson_panel<F>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let h = b - a;
    let f0 = f(a)?;
    let f1 = f(a + 0.25 * h)?;
    let f2 = f(a + 0.5 * h)?;
    let f3 = f(a + 0.75 * h)?;
    let f4 = f(b)?;
    let coarse = h / 6.0 * (f0 + 4.0 * f2 + f4);
    let fine = h / 12.0 * (f0 + 4.0 * f1 + 2.0 * f2 + 4.0 * f3 + f4);
    let diff = fine - coarse;
    Ok((fine + diff / 15.0, diff.abs() / 15.0))
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// `∫_a^b f`, with initial panels no longer than `max_panel` when given.
/// `a > b` returns the negated integral over `[b, a]`.
pub fn integrate<F>(mut f: F, a: f64, b: f64, cfg: &QuadratureConfig, max_panel: Option<f64>) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    cfg.validate()?;
    if a == b {
        return Ok(0.0);
    }
    if a > b {
        return integrate(f, b, a, cfg, max_panel).map(|v| -v);
    }
    let rule = |f: &mut F, lo: f64, hi: f64| match cfg.panel_rule {
        PanelRule::GaussKronrod15 => gauss_kronrod_15(f, lo, hi),
        PanelRule::SimpsonAdaptive => simpson_panel(f, lo, hi),
    };

    let width = b - a;
    let pieces = match max_panel {
        Some(cap) if cap > 0.0 && cap.is_finite() => ((width / cap).ceil() as usize).max(1),
        _ => 1,
    };
    let mut heap = BinaryHeap::with_capacity(pieces + cfg.max_subdivisions);
    let (mut total, mut total_err) = (0.0, 0.0);
    for i in 0..pieces {
        let lo = a + width * i as f64 / pieces as f64;
        let hi = if i + 1 == pieces {
            b
        } else {
            a + width * (i + 1) as f64 / pieces as f64
        };
        let (value, error) = rule(&mut f, lo, hi)?;
        total += value;
        total_err += error;
        heap.push(Panel {
            a: lo,
            b: hi,
            value,
            error,
        });
    }

    let mut splits = 0;
    while total_err > cfg.abs_tol.max(cfg.rel_tol * total.abs()) {
        if splits == cfg.max_subdivisions {
            return Err(Error::QuadratureNonConvergence {
                subdivisions: splits,
                error: total_err,
            });
        }
        let worst = heap.pop().expect("heap holds at least one panel");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(Error::QuadratureNonConvergence {
                subdivisions: splits,
                error: total_err,
            });
        }
        let (v1, e1) = rule(&mut f, worst.a, mid)?;
        let (v2, e2) = rule(&mut f, mid, worst.b)?;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
        splits += 1;
    }
    // re-sum to shed drift from the incremental updates
    Ok(heap.iter().map(|p| p.value).sum())
}
