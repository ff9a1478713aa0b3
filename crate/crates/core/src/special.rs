//! Special functions not provided by `libm`.

use core::f64::consts::FRAC_PI_2;

#[allow(unused_imports)]
use num_traits::Float;

const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;

/// Sine integral `Si(x) = ∫₀ˣ sin(t)/t dt`.
///
/// Power series below `x = 4`, auxiliary functions above.
pub fn si(x: f64) -> f64 {
    if x.is_nan() {
        return x;
    }
    if x < 0.0 {
        return -si(-x);
    }
    if x == 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return FRAC_PI_2;
    }
    if x < SERIES_LIMIT {
        let x2 = x * x;
        let mut sum = x;
        let mut fact = x;
        let mut k = 1.0;
        loop {
            fact *= -x2 / ((2.0 * k) * (2.0 * k + 1.0));
            let term = fact / (2.0 * k + 1.0);
            sum += term;
            if term.abs() < EPS * sum.abs() {
                break;
            }
            k += 1.0;
        }
        sum
    } else {
        let (f, g) = auxiliary(x);
        let (s, c) = x.sin_cos();
        FRAC_PI_2 - f * c - g * s
    }
}

/// Cosine integral `Ci(x) = γ + ln x + ∫₀ˣ (cos t − 1)/t dt`, `x > 0`.
pub fn ci(x: f64) -> f64 {
    const EULER: f64 = 0.577_215_664_901_532_9;
    if x <= 0.0 {
        return f64::NAN;
    }
    if x < SERIES_LIMIT {
        let x2 = x * x;
        let mut sum = 0.0;
        let mut fact = 1.0;
        let mut k = 1.0;
        loop {
            fact *= -x2 / ((2.0 * k - 1.0) * (2.0 * k));
            let term = fact / (2.0 * k);
            sum += term;
            if term.abs() < EPS * sum.abs().max(TINY) {
                break;
            }
            k += 1.0;
        }
        EULER + x.ln() + sum
    } else if x.is_infinite() {
        0.0
    } else {
        let (f, g) = auxiliary(x);
        let (s, c) = x.sin_cos();
        f * s - g * c
    }
}

const SERIES_LIMIT: f64 = 4.0;
const ASYMPTOTIC_LIMIT: f64 = 64.0;

/// Auxiliary functions `f, g` with `Si = π/2 − f cos x − g sin x` and
/// `Ci = f sin x − g cos x`, for `x ≥ 4`.
///
/// Chebyshev expansions on `[4, 8]`, `[8, 16]`, `[16, 32]`, `[32, 64]` and
/// the asymptotic series beyond.
fn auxiliary(x: f64) -> (f64, f64) {
    let (lo, hi, f, g): (f64, f64, &[f64], &[f64]) = if x < 8.0 {
        (4.0, 8.0, &F_4_8, &G_4_8)
    } else if x < 16.0 {
        (8.0, 16.0, &F_8_16, &G_8_16)
    } else if x < 32.0 {
        (16.0, 32.0, &F_16_32, &G_16_32)
    } else if x < ASYMPTOTIC_LIMIT {
        (32.0, 64.0, &F_32_64, &G_32_64)
    } else {
        return asymptotic(x);
    };
    let u = (2.0 * x - lo - hi) / (hi - lo);
    (clenshaw(f, u), clenshaw(g, u))
}

/// `Σ c_k T_k(u)`.
fn clenshaw(c: &[f64], u: f64) -> f64 {
    let (mut b1, mut b2) = (0.0, 0.0);
    for &ck in c.iter().skip(1).rev() {
        let b0 = 2.0 * u * b1 - b2 + ck;
        b2 = b1;
        b1 = b0;
    }
    u * b1 - b2 + c[0]
}

/// `f ~ x⁻¹ Σ (−1)ᵏ (2k)!/x²ᵏ`, `g ~ x⁻² Σ (−1)ᵏ (2k+1)!/x²ᵏ`, `x ≥ 64`.
fn asymptotic(x: f64) -> (f64, f64) {
    let r = 1.0 / (x * x);
    let (mut f, mut g) = (1.0, 1.0);
    let (mut tf, mut tg) = (1.0, 1.0);
    let mut k = 1.0;
    while tf.abs() > EPS * 0.01 || tg.abs() > EPS * 0.01 {
        tf *= -(2.0 * k - 1.0) * (2.0 * k) * r;
        tg *= -(2.0 * k) * (2.0 * k + 1.0) * r;
        f += tf;
        g += tg;
        k += 1.0;
    }
    (f / x, g * r)
}

/// Regularized lower incomplete gamma function `P(a, x)`.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return 1.0;
    }
    let log_prefactor = -x + a * x.ln() - libm::lgamma(a);
    if x < a + 1.0 {
        let mut ap = a;
        let mut del = 1.0 / a;
        let mut sum = del;
        for _ in 0..10_000 {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if del.abs() < sum.abs() * EPS {
                break;
            }
        }
        (sum * log_prefactor.exp()).min(1.0)
    } else {
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < TINY {
                d = TINY;
            }
            c = b + an / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < EPS {
                break;
            }
        }
        (1.0 - log_prefactor.exp() * h).max(0.0)
    }
}

/// Standard normal distribution function.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * core::f64::consts::FRAC_1_SQRT_2)
}

/// Standard normal quantile by bisection on [`normal_cdf`].
pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let (mut lo, mut hi) = (-40.0, 40.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if normal_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}

#[rustfmt::skip]
const F_4_8: [f64; 22] = [
    0.16717681039192772, -0.052546160071067945, 0.00804751314943478,
    -0.001210774213032889, 0.0001800951057304072, -2.6614477565592665e-05,
    3.922302822357104e-06, -5.780738099176182e-07, 8.537260374345828e-08,
    -1.2651811380600354e-08, 1.883142823582715e-09, -2.816756566883273e-10,
    4.235189873013378e-11, -6.4016472265182095e-12, 9.72713625786481e-13,
    -1.485568169095521e-13, 2.279972418407143e-14, -3.5155778374494015e-15,
    5.444871130895536e-16, -8.468254684457638e-17, 1.3222350757890788e-17,
    -2.0721847540706854e-18,
];
#[rustfmt::skip]
const G_4_8: [f64; 24] = [
    0.028157859332454915, -0.016839642873199157, 0.0037695585938418877,
    -0.0007446165743295987, 0.00013723595474322034, -2.4236151407969813e-05,
    4.1635669152570235e-06, -7.023344738271882e-07, 1.1705024583369642e-07,
    -1.9353643879521857e-08, 3.1839434082932408e-09, -5.222156436947035e-10,
    8.551118472164014e-11, -1.3992858933098253e-11, 2.2897707769034265e-12,
    -3.7486817208751767e-13, 6.141852326014491e-14, -1.0072585142374768e-14,
    1.6537000235050822e-15, -2.718171067628022e-16, 4.4731633458130984e-17,
    -7.370091604986453e-18, 1.2157536226465907e-18, -2.0078069229410777e-19,
];
#[rustfmt::skip]
const F_8_16: [f64; 23] = [
    0.0869161546125181, -0.02899378457704347, 0.004782217708710122,
    -0.0007812585072683772, 0.0001266084747498371, -2.038211441180266e-05,
    3.263736670533513e-06, -5.204302449457339e-07, 8.272451473403123e-08,
    -1.3119442104391363e-08, 2.077479764039537e-09, -3.286845546035231e-10,
    5.1985019731660994e-11, -8.22296398776536e-12, 1.3013345532694866e-12,
    -2.0610475379872805e-13, 3.2675848533982795e-14, -5.186616442611557e-15,
    8.243642625041708e-16, -1.3121251971019065e-16, 2.0916188265050355e-17,
    -3.3393360008342583e-18, 5.339718057326575e-19,
];
#[rustfmt::skip]
const G_8_16: [f64; 24] = [
    0.007860808870803029, -0.0050455674749676546, 0.001224725453084323,
    -0.0002633497662575326, 5.28376921817572e-05, -1.0132816757858397e-05,
    1.8824061522505566e-06, -3.41606746257857e-07, 6.090029494048802e-08,
    -1.07086873217321e-08, 1.862805470726875e-09, -3.212885015344153e-10,
    5.504042040749794e-11, -9.378383144449351e-12, 1.5911544870230972e-12,
    -2.6904127156294446e-13, 4.5368833532636765e-14, -7.634483291082098e-15,
    1.2825937704385318e-15, -2.1520492854456127e-16, 3.6074833191720634e-17,
    -6.0430458940577215e-18, 1.011805182960919e-18, -1.6935603099848882e-19,
];
#[rustfmt::skip]
const F_16_32: [f64; 23] = [
    0.043995474314375345, -0.01497922147347472, 0.002541036396328848,
    -0.00042961547707327086, 7.240698948157098e-05, -1.2167510714790264e-05,
    2.039087352657276e-06, -3.4086019010003496e-07, 5.684816936645999e-08,
    -9.46124960035656e-09, 1.5716725501502402e-09, -2.606416491009107e-10,
    4.315952409559823e-11, -7.137388034573254e-12, 1.1789790045135624e-12,
    -1.9455686111280485e-13, 3.2079354434425805e-14, -5.2857108735063955e-15,
    8.704329959602164e-16, -1.4327562974271775e-16, 2.357549507966895e-17,
    -3.8783151625547974e-18, 6.37907082752746e-19,
];
#[rustfmt::skip]
const G_16_32: [f64; 25] = [
    0.0020414224492125983, -0.0013461015779324438, 0.000338039530056517,
    -7.558337976801985e-05, 1.5827922251563874e-05, -3.176390286448871e-06,
    6.185338580760457e-07, -1.1775925746295701e-07, 2.2028525400984447e-08,
    -4.062918730037033e-09, 7.407138001821829e-10, -1.3373735466143208e-10,
    2.394926515467842e-11, -4.2587823746373765e-12, 7.527540423153449e-13,
    -1.3235585883990857e-13, 2.3165813142326714e-14, -4.038441102205327e-15,
    7.01541929924533e-16, -1.2149262038435344e-16, 2.098268864662368e-17,
    -3.615144986008702e-18, 6.215340432109936e-19, -1.0665603086859839e-19,
    1.827180004047213e-20,
];
#[rustfmt::skip]
const F_32_64: [f64; 24] = [
    0.022071670936553593, -0.007558526283652348, 0.0012929943202743088,
    -0.00022097830122590878, 3.773141377074321e-05, -6.436722017857673e-06,
    1.097092529032382e-06, -1.8683056154140875e-07, 3.1789867416578793e-08,
    -5.4047573230314345e-09, 9.181664202281304e-10, -1.5586040222085154e-10,
    2.6438155780305896e-11, -4.481460429124042e-12, 7.591249893505209e-13,
    -1.2850639205581202e-13, 2.1740342340531527e-14, -3.675790400897504e-15,
    6.211411335151455e-16, -1.0490530045592214e-16, 1.7708608831763174e-17,
    -2.9878820594170955e-18, 5.039023426045857e-19, -8.494639040415532e-20,
];
#[rustfmt::skip]
const G_32_64: [f64; 25] = [
    0.0005159376893051008, -0.00034297008495679134, 8.705959315365802e-05,
    -1.9721504888214112e-05, 4.1927301939422245e-06, -8.557980028425061e-07,
    1.69778932781179e-07, -3.297860606821957e-08, 6.3021914324463404e-09,
    -1.1887386516407743e-09, 2.2183944403597677e-10, -4.103062635561127e-11,
    7.531390982305911e-12, -1.373392685152429e-12, 2.4901778497934164e-13,
    -4.4923953789017284e-14, 8.068299874694065e-15, -1.4432691079542273e-15,
    2.572452727868693e-16, -4.570155754514979e-17, 8.095184204054253e-18,
    -1.430035465741849e-18, 2.5199379808437703e-19, -4.430402357923823e-20,
    7.772925672430463e-21,
];

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use core::f64::consts::PI;

    #[test]
    fn si_reference_values() {
        assert_eq!(si(0.0), 0.0);
        // Abramowitz & Stegun table 5.1
        assert_relative_eq!(si(1.0), 0.946_083_070_367_183, epsilon = 1e-14);
        assert_relative_eq!(si(PI), 1.851_937_051_982_466, epsilon = 1e-14);
        assert_relative_eq!(si(10.0), 1.658_347_594_218_874, epsilon = 1e-14);
        assert_relative_eq!(si(-2.5), -1.778_520_173_443_827, epsilon = 1e-14);
    }

    #[test]
    fn si_tail() {
        assert!((si(1e4) - FRAC_PI_2).abs() <= 2e-4);
        assert!((si(1e6) - FRAC_PI_2).abs() <= 2e-6);
        assert_eq!(si(f64::INFINITY), FRAC_PI_2);
    }

    #[test]
    fn si_continuous_at_branch_switches() {
        for x in [4.0, 8.0, 16.0, 32.0, 64.0] {
            assert!((si(x - 1e-12) - si(x)).abs() < 1e-12, "Si at {x}");
            assert!((ci(x - 1e-12) - ci(x)).abs() < 1e-12, "Ci at {x}");
        }
    }

    #[test]
    fn ci_reference_values() {
        assert_relative_eq!(ci(1.0), 0.337_403_922_900_968_1, epsilon = 1e-14);
        assert_relative_eq!(ci(5.0), -0.190_029_749_656_643_9, epsilon = 1e-14);
        assert_eq!(ci(f64::INFINITY), 0.0);
    }

    /// Frozen from 50-digit evaluations, around every branch.
    const SICI: [(f64, f64, f64); 18] = [
        (2.0, 1.605_412_976_802_694_8, 0.422_980_828_774_865_0),
        (3.999, 1.758_392_281_476_295_1, -0.140_818_171_963_112_9),
        (4.0, 1.758_203_138_949_053_1, -0.140_981_697_886_930_4),
        (4.001, 1.758_013_880_311_059_8, -0.141_144_993_757_416_7),
        (5.5, 1.468_724_072_665_098_7, -0.142_052_947_551_519_3),
        (7.9, 1.561_671_070_214_550_2, 0.123_638_007_059_717_8),
        (8.0, 1.574_186_821_706_942_1, 0.122_433_882_532_009_6),
        (12.3, 1.495_007_967_394_828_5, -0.027_287_806_236_935_1),
        (16.0, 1.631_302_268_270_032_9, -0.014_200_190_120_190_0),
        (23.7, 1.566_755_150_281_353_8, -0.041_889_326_813_966_0),
        (31.9, 1.542_649_258_603_711_5, 0.013_695_878_071_614_8),
        (32.0, 1.544_241_777_059_141_5, 0.016_388_823_376_158_7),
        (47.0, 1.591_835_043_815_832_2, 0.003_074_862_202_395_1),
        (63.99, 1.564_308_793_475_578_6, 0.014_210_928_918_502_6),
        (64.0, 1.564_452_250_212_030_5, 0.014_272_879_213_325_5),
        (64.01, 1.564_596_296_759_298_3, 0.014_333_382_412_837_8),
        (100.0, 1.562_225_466_889_056_3, -0.005_148_825_142_610_5),
        (1234.5, 1.571_597_667_027_584_2, 0.000_118_425_996_961_3),
    ];

    #[test]
    fn sici_match_high_precision_values() {
        for (x, s, c) in SICI {
            assert!((si(x) - s).abs() <= 4e-16, "Si({x}) = {} vs {s}", si(x));
            assert!((ci(x) - c).abs() <= 4e-16, "Ci({x}) = {} vs {c}", ci(x));
        }
    }

    #[test]
    fn gamma_p_matches_closed_forms() {
        // shape 1: exponential
        for &x in &[0.1, 1.0, 3.0, 12.0] {
            assert_relative_eq!(gamma_p(1.0, x), 1.0 - (-x).exp(), epsilon = 1e-14);
        }
        // shape 2: 1 - e^{-x}(1+x)
        for &x in &[0.1, 2.0, 7.5] {
            assert_relative_eq!(gamma_p(2.0, x), 1.0 - (-x).exp() * (1.0 + x), epsilon = 1e-14);
        }
        // shape 1/2: erf(sqrt x)
        for &x in &[0.01, 0.5, 4.0] {
            assert_relative_eq!(gamma_p(0.5, x), libm::erf(x.sqrt()), epsilon = 1e-13);
        }
        assert_eq!(gamma_p(3.0, 0.0), 0.0);
    }

    #[test]
    fn normal_quantile_inverts_cdf() {
        for &p in &[1e-6, 0.025, 0.5, 0.9, 0.999] {
            assert_relative_eq!(normal_cdf(normal_quantile(p)), p, max_relative = 1e-10);
        }
        assert_relative_eq!(normal_quantile(0.975), 1.959_963_984_540_054, epsilon = 1e-9);
    }
}
