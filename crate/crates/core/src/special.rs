//! Normal distribution helpers and the Marcum Q-function.

use crate::error::{Error, Result};
#[allow(unused_imports)]
use num_traits::Float;

/// Absolute truncation tolerance of the Marcum series.
pub const MARCUM_TOLERANCE: f64 = 1e-12;

const MARCUM_MAX_TERMS: usize = 1_000_000;

/// `Phi(x)`, the standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * core::f64::consts::FRAC_1_SQRT_2)
}

/// `Phi^{-1}(p)` by Wichura's AS 241 (PPND16), accurate to about 1e-16.
#[allow(clippy::excessive_precision)] // coefficients as published
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter {
            name: "p",
            reason: "probability must lie in (0, 1)",
        });
    }
    const A: [f64; 8] = [
        3.387_132_872_796_366_6,
        133.141_667_891_784_38,
        1_971.590_950_306_551_4,
        13_731.693_765_509_461,
        45_921.953_931_549_87,
        67_265.770_927_008_7,
        33_430.575_583_588_13,
        2_509.080_928_730_122_7,
    ];
    const B: [f64; 8] = [
        1.0,
        42.313_330_701_600_91,
        687.187_007_492_057_9,
        5_394.196_021_424_751,
        21_213.794_301_586_596,
        39_307.895_800_092_71,
        28_729.085_735_721_943,
        5_226.495_278_852_546,
    ];
    const C: [f64; 8] = [
        1.423_437_110_749_683_6,
        4.630_337_846_156_545,
        5.769_497_221_460_691,
        3.647_848_324_763_204_5,
        1.270_458_252_452_368_4,
        0.241_780_725_177_450_6,
        0.022_723_844_989_269_184,
        7.745_450_142_783_414e-4,
    ];
    const D: [f64; 8] = [
        1.0,
        2.053_191_626_637_759,
        1.676_384_830_183_803_8,
        0.689_767_334_985_1,
        0.148_103_976_427_480_07,
        0.015_198_666_563_616_457,
        5.475_938_084_995_345e-4,
        1.050_750_071_644_416_8e-9,
    ];
    const E: [f64; 8] = [
        6.657_904_643_501_103,
        5.463_784_911_164_114,
        1.784_826_539_917_291_3,
        0.296_560_571_828_504_9,
        0.026_532_189_526_576_124,
        0.001_242_660_947_388_078_4,
        2.711_555_568_743_487_6e-5,
        2.010_334_399_292_288_1e-7,
    ];
    const F: [f64; 8] = [
        1.0,
        0.599_832_206_555_887_9,
        0.136_929_880_922_735_8,
        0.014_875_361_290_850_615,
        7.868_691_311_456_133e-4,
        1.846_318_317_510_054_8e-5,
        1.421_511_758_316_446e-7,
        2.044_263_103_389_939_8e-15,
    ];
    fn ratio(num: &[f64; 8], den: &[f64; 8], r: f64) -> f64 {
        let n = num.iter().rev().fold(0.0, |acc, &c| acc * r + c);
        let d = den.iter().rev().fold(0.0, |acc, &c| acc * r + c);
        n / d
    }

    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180_625 - q * q;
        return Ok(q * ratio(&A, &B, r));
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let r = (-tail.ln()).sqrt();
    let val = if r <= 5.0 {
        ratio(&C, &D, r - 1.6)
    } else {
        ratio(&E, &F, r - 5.0)
    };
    Ok(if q < 0.0 { -val } else { val })
}

/// First-order Marcum Q-function `Q_1(nu, b)`.
///
/// Poisson mixture over `k` of regularized upper incomplete gamma tails,
/// `sum_k e^{-nu^2/2} (nu^2/2)^k / k! * Gamma(k+1, b^2/2) / k!`. Both weight
/// sequences are carried in the log domain, so large arguments underflow to
/// zero term by term instead of overflowing.
pub fn marcum_q1(nu: f64, b: f64) -> f64 {
    debug_assert!(nu >= 0.0 && b >= 0.0, "marcum_q1 takes nonnegative arguments");
    let nu = nu.abs();
    let b = b.abs();
    if b == 0.0 {
        return 1.0;
    }
    let x = 0.5 * b * b;
    if nu == 0.0 {
        return (-x).exp();
    }
    let lambda = 0.5 * nu * nu;
    let ln_lambda = lambda.ln();
    let ln_x = x.ln();

    let mut log_poisson = -lambda;
    let mut log_gamma_term = -x;
    let mut gamma_tail = 0.0;
    let mut total = 0.0;
    for k in 0..MARCUM_MAX_TERMS {
        if k > 0 {
            let ln_k = (k as f64).ln();
            log_poisson += ln_lambda - ln_k;
            log_gamma_term += ln_x - ln_k;
        }
        gamma_tail = (gamma_tail + log_gamma_term.exp()).min(1.0);
        let weight = log_poisson.exp();
        total += weight * gamma_tail;
        let kf = k as f64;
        if kf + 2.0 > lambda {
            // remaining Poisson mass is bounded by a geometric series
            let ratio = lambda / (kf + 2.0);
            let remainder = weight * ratio / (1.0 - ratio);
            if remainder < MARCUM_TOLERANCE * 0.1 {
                break;
            }
        }
    }
    total.clamp(0.0, 1.0)
}
