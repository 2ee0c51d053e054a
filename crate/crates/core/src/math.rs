//! Scalar special functions: the standard normal distribution, its inverse,
//! and the bivariate normal CDF.

use core::f64::consts::{FRAC_1_SQRT_2, PI};

use libm::{asin, erfc, exp, log, sin, sqrt};

/// `ln(sqrt(2 pi))`
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[inline]
pub fn normal_pdf(x: f64) -> f64 {
    exp(-0.5 * x * x - LN_SQRT_2PI)
}

#[inline]
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal quantile.
///
/// Rational approximation (Acklam) followed by one Halley step against
/// `erfc`, which brings the relative error down to a few ulps.
pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.024_25;

    let x = if p < P_LOW {
        let q = sqrt(-2.0 * log(p));
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = sqrt(-2.0 * log(1.0 - p));
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };

    // Halley refinement. In the upper tail work with the complement so the
    // residual keeps its precision.
    let e = if p > 0.5 {
        (1.0 - p) - normal_cdf(-x)
    } else {
        normal_cdf(x) - p
    };
    let u = e * exp(0.5 * x * x + LN_SQRT_2PI);
    x - u / (1.0 + 0.5 * x * u)
}

// Gauss-Legendre nodes (positive half) and weights for 6, 12 and 20 points.
const BVN_W6: [f64; 3] = [0.171_324_492_379_170_5, 0.360_761_573_048_138_4, 0.467_913_934_572_690_4];
const BVN_X6: [f64; 3] = [0.932_469_514_203_152_2, 0.661_209_386_466_264_7, 0.238_619_186_083_197];
const BVN_W12: [f64; 6] = [
    0.047_175_336_386_511_77,
    0.106_939_325_995_318_3,
    0.160_078_328_543_346_4,
    0.203_167_426_723_065_9,
    0.233_492_536_538_354_7,
    0.249_147_045_813_402_9,
];
const BVN_X12: [f64; 6] = [
    0.981_560_634_246_719_1,
    0.904_117_256_370_475,
    0.769_902_674_194_305,
    0.587_317_954_286_617_1,
    0.367_831_498_998_180_2,
    0.125_233_408_511_469_2,
];
const BVN_W20: [f64; 10] = [
    0.017_614_007_139_152_12,
    0.040_601_429_800_386_94,
    0.062_672_048_334_109_06,
    0.083_276_741_576_704_75,
    0.101_930_119_817_240_4,
    0.118_194_531_961_518_4,
    0.131_688_638_449_176_6,
    0.142_096_109_318_382_1,
    0.149_172_986_472_603_7,
    0.152_753_387_130_725_9,
];
const BVN_X20: [f64; 10] = [
    0.993_128_599_185_094_9,
    0.963_971_927_277_913_8,
    0.912_234_428_251_326,
    0.839_116_971_822_218_8,
    0.746_331_906_460_150_8,
    0.636_053_680_726_515,
    0.510_867_001_950_827_1,
    0.373_706_088_715_419_6,
    0.227_785_851_141_645_1,
    0.076_526_521_133_497_33,
];

/// `P(X <= x, Y <= y)` for standard bivariate normal `(X, Y)` with
/// correlation `r`.
///
/// Genz's refinement of the Drezner-Wesolowsky method; absolute error is
/// around 1e-15.
pub fn bivariate_normal_cdf(x: f64, y: f64, r: f64) -> f64 {
    if x == f64::NEG_INFINITY || y == f64::NEG_INFINITY {
        return 0.0;
    }
    if x == f64::INFINITY {
        return normal_cdf(y);
    }
    if y == f64::INFINITY {
        return normal_cdf(x);
    }
    upper_orthant(-x, -y, r)
}

/// `P(X > h, Y > k)`.
fn upper_orthant(h: f64, k: f64, r: f64) -> f64 {
    let (w, xn): (&[f64], &[f64]) = if r.abs() < 0.3 {
        (&BVN_W6, &BVN_X6)
    } else if r.abs() < 0.75 {
        (&BVN_W12, &BVN_X12)
    } else {
        (&BVN_W20, &BVN_X20)
    };
    let two_pi = 2.0 * PI;
    let mut k = k;
    let mut hk = h * k;

    let p = if r.abs() < 0.925 {
        let hs = 0.5 * (h * h + k * k);
        let asr = 0.5 * asin(r);
        let mut bvn = 0.0;
        for (wi, xi) in w.iter().zip(xn) {
            for s in [1.0 - xi, 1.0 + xi] {
                let sn = sin(asr * s);
                bvn += wi * exp((sn * hk - hs) / (1.0 - sn * sn));
            }
        }
        bvn * asr / two_pi + normal_cdf(-h) * normal_cdf(-k)
    } else {
        if r < 0.0 {
            k = -k;
            hk = -hk;
        }
        let mut bvn = 0.0;
        if r.abs() < 1.0 {
            let as_ = (1.0 - r) * (1.0 + r);
            let mut a = sqrt(as_);
            let bs = (h - k) * (h - k);
            let c = (4.0 - hk) / 8.0;
            let d = (12.0 - hk) / 80.0;
            let asr = -0.5 * (bs / as_ + hk);
            if asr > -100.0 {
                bvn = a * exp(asr) * (1.0 - c * (bs - as_) * (1.0 - d * bs) / 3.0 + c * d * as_ * as_);
            }
            if hk > -100.0 {
                let b = sqrt(bs);
                let sp = sqrt(two_pi) * normal_cdf(-b / a);
                bvn -= exp(-0.5 * hk) * sp * b * (1.0 - c * bs * (1.0 - d * bs) / 3.0);
            }
            a *= 0.5;
            let mut acc = 0.0;
            for (wi, xi) in w.iter().zip(xn) {
                for s in [1.0 - xi, 1.0 + xi] {
                    let xs = (a * s) * (a * s);
                    let asr = -0.5 * (bs / xs + hk);
                    if asr > -100.0 {
                        let rs = sqrt(1.0 - xs);
                        let sp = 1.0 + c * xs * (1.0 + 5.0 * d * xs);
                        let ep = exp(-hk * xs / (2.0 * (1.0 + rs) * (1.0 + rs))) / rs;
                        acc += wi * exp(asr) * (sp - ep);
                    }
                }
            }
            bvn = (a * acc - bvn) / two_pi;
        }
        if r > 0.0 {
            bvn + normal_cdf(-h.max(k))
        } else if h >= k {
            -bvn
        } else {
            let l = if h < 0.0 {
                normal_cdf(k) - normal_cdf(h)
            } else {
                normal_cdf(-h) - normal_cdf(-k)
            };
            l - bvn
        }
    };
    p.clamp(0.0, 1.0)
}

/// `ln(exp(a) + exp(b) - 1)` for `a, b >= 0` without overflow or
/// cancellation near zero.
#[inline]
pub(crate) fn ln_exp_sum_m1(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi < 30.0 {
        libm::log1p(libm::expm1(hi) + libm::expm1(lo))
    } else {
        hi + libm::log1p(exp(lo - hi) - exp(-hi))
    }
}

/// `ln(exp(x) + exp(y))`.
#[inline]
pub(crate) fn log_add_exp(x: f64, y: f64) -> f64 {
    let (hi, lo) = if x >= y { (x, y) } else { (y, x) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + libm::log1p(exp(lo - hi))
}
