//! Kernel estimates of the sample spectral density and its Hilbert transform,
//! and the analytical nonlinear shrinkage built from them.
//!
//! Each sample eigenvalue `lambda_j` carries an Epanechnikov kernel of local
//! bandwidth `h_j = lambda_j * n^{-1/3}`. Evaluated at `lambda`, the summed
//! kernels give `b` (a density, up to the `1/min(n,p)` normalization) and the
//! summed Hilbert transforms give `a`. When `p > n` the `p - n` smallest
//! eigenvalues are structural zeros and are left out of both sums.

use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Eigenvalues at or below this fraction of the largest one count as zero.
pub const ZERO_EIGENVALUE_THRESHOLD: f64 = 1e-12;

/// Lower safety floor on the clipped values, relative to the largest sample
/// eigenvalue.
pub const INVERTIBILITY_FLOOR: f64 = 1e-8;

const SQRT_5: f64 = 2.236_067_977_499_79;

/// Kernel sums `a` and `b` at one evaluation point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelEvaluation {
    pub a: f64,
    pub b: f64,
    pub lambda: f64,
    /// Global bandwidth `h_n = n^{-1/3}`.
    pub bandwidth: f64,
}

/// `h_n = n^{-1/3}`.
pub fn global_bandwidth(n: usize) -> f64 {
    (n as f64).cbrt().recip()
}

/// First (0-based) index of the kernel sum, `[p - n]^+`.
pub fn kernel_start(p: usize, n: usize) -> usize {
    p.saturating_sub(n)
}

fn zero_threshold(eigs: &[f64]) -> f64 {
    ZERO_EIGENVALUE_THRESHOLD * eigs.last().copied().unwrap_or(0.0).max(0.0)
}

fn check_spectrum(eigs: &[f64], p: usize, n: usize) -> Result<()> {
    if eigs.len() != p || p == 0 {
        return Err(Error::DimensionMismatch {
            expected: p,
            actual: eigs.len(),
        });
    }
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "n",
            reason: "sample count must be at least 1",
        });
    }
    if let Some(i) = eigs.windows(2).position(|w| !(w[0] <= w[1])) {
        return Err(Error::NotAscending { index: i + 1 });
    }
    Ok(())
}

/// Evaluates `a(lambda, eigs)` and `b(lambda, eigs)`.
pub fn lw_kernel(lambda: f64, eigs: &[f64], p: usize, n: usize) -> Result<KernelEvaluation> {
    check_spectrum(eigs, p, n)?;
    let start = kernel_start(p, n);
    let threshold = zero_threshold(eigs);
    let hn = global_bandwidth(n);
    if let Some(offset) = eigs[start..].iter().position(|&l| l <= threshold) {
        return Err(Error::ZeroBandwidth { index: start + offset });
    }
    let (a, b) = kernel_sums(lambda, &eigs[start..], hn);
    Ok(KernelEvaluation {
        a,
        b,
        lambda,
        bandwidth: hn,
    })
}

/// Beyond this many bandwidths the two terms of the Hilbert kernel cancel to
/// leading order and the series form takes over.
const FAR_FIELD: f64 = 8.0;

/// `-3x/10 + 3/(4 sqrt 5) (1 - x^2/5) log|(sqrt 5 - x)/(sqrt 5 + x)|` for
/// `|x| > sqrt 5`, expanded in `u = sqrt(5)/x` with the linear parts cancelled:
/// `-(3/sqrt 5) sum_{k>=1} u^{2k-1} / (4k^2 - 1)`.
fn hilbert_far_field(x: f64) -> f64 {
    let u = SQRT_5 / x;
    let u2 = u * u;
    let mut power = u;
    let mut sum = 0.0;
    for k in 1..200u32 {
        let term = power / f64::from(4 * k * k - 1);
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
        power *= u2;
    }
    -3.0 / SQRT_5 * sum
}

/// Sums over `j` in ascending order; every entry of `active` is positive.
fn kernel_sums(lambda: f64, active: &[f64], hn: f64) -> (f64, f64) {
    let mut a = 0.0;
    let mut b = 0.0;
    for &lj in active {
        let h = lj * hn;
        let d = lambda - lj;
        let x = d / h;
        if x.abs() >= FAR_FIELD {
            a += hilbert_far_field(x) / (PI * h);
            continue;
        }
        let bracket = 1.0 - 0.2 * x * x;
        a -= 3.0 * d / (10.0 * PI * h * h);
        let num = SQRT_5 * h - d;
        let den = SQRT_5 * h + d;
        // 0 * log 0 at the kernel edges is taken as 0
        if bracket != 0.0 && num != 0.0 && den != 0.0 {
            a += 3.0 / (4.0 * SQRT_5 * PI * h) * bracket * (num / den).abs().ln();
        }
        if bracket > 0.0 {
            b += 3.0 / (4.0 * SQRT_5 * h) * bracket;
        }
    }
    (a, b)
}

/// Raw shrunken eigenvalues `d~_j`, before clipping.
///
/// Positive eigenvalues use `lambda / |1 - p/n - (p/n) lambda zeta|^2` with
/// `zeta = pi (a + i b) / min(n, p)`. For `p > n` the kernel sums only see the
/// `n` nonzero eigenvalues, so `zeta` is first mixed with the atom of mass
/// `1 - n/p` at zero, `zeta_p = (n/p) zeta - (1 - n/p) / lambda`, which
/// collapses the denominator to `|lambda zeta|^2`. Zero eigenvalues use
/// `1 / (pi (p/n - 1) a(0) / n)`.
pub fn lw_shrink_raw(eigs: &[f64], p: usize, n: usize) -> Result<Vec<f64>> {
    check_spectrum(eigs, p, n)?;
    if p == n {
        return Err(Error::RatioNearOne { p, n });
    }
    let start = kernel_start(p, n);
    let threshold = zero_threshold(eigs);
    if let Some(offset) = eigs[start..].iter().position(|&l| l <= threshold) {
        return Err(Error::ZeroBandwidth { index: start + offset });
    }
    let active = &eigs[start..];
    let hn = global_bandwidth(n);
    let ratio = p as f64 / n as f64;
    let norm = PI / p.min(n) as f64;

    let mut zero_value: Option<f64> = None;
    let mut out = Vec::with_capacity(p);
    for (index, &lambda) in eigs.iter().enumerate() {
        let value = if lambda > threshold {
            let (a, b) = kernel_sums(lambda, active, hn);
            let zeta = Complex64::new(a, b) * norm;
            let denom = if p > n {
                (zeta * lambda).norm_sqr()
            } else {
                (Complex64::new(1.0 - ratio, 0.0) - zeta * (ratio * lambda)).norm_sqr()
            };
            if denom == 0.0 {
                return Err(Error::ZeroDenominator { index });
            }
            lambda / denom
        } else {
            if p <= n {
                return Err(Error::ZeroEigenvalueBranch { index, p, n });
            }
            *zero_value.get_or_insert_with(|| {
                let (a0, _) = kernel_sums(0.0, active, hn);
                1.0 / (PI * (ratio - 1.0) * a0 / n as f64)
            })
        };
        if !value.is_finite() {
            return Err(Error::NonFinite { index });
        }
        out.push(value);
    }
    Ok(out)
}

/// Upper bound used when clipping `d~`.
///
/// `EdgeScaled` divides the largest sample eigenvalue by `(1 + sqrt(p/n))^2`.
/// That equals `||R||` asymptotically only when `R` is a multiple of the
/// identity; for any other spectrum it falls below `||R||` and cuts off the top
/// of the spectrum. `SampleMax` uses the largest sample eigenvalue itself,
/// which is asymptotically at least `||R||` for every `R`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum UpperClip {
    #[default]
    SampleMax,
    EdgeScaled,
}

impl UpperClip {
    pub fn bound(self, lambda_max: f64, p: usize, n: usize) -> f64 {
        match self {
            UpperClip::SampleMax => lambda_max,
            UpperClip::EdgeScaled => lambda_max / (1.0 + (p as f64 / n as f64).sqrt()).powi(2),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            UpperClip::SampleMax => "sample-max",
            UpperClip::EdgeScaled => "edge-scaled",
        }
    }
}

impl core::str::FromStr for UpperClip {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sample-max" => Ok(UpperClip::SampleMax),
            "edge-scaled" => Ok(UpperClip::EdgeScaled),
            _ => Err(Error::InvalidParameter {
                name: "upper-clip",
                reason: "expected sample-max or edge-scaled",
            }),
        }
    }
}

/// Clipped values plus how many entries each rule touched.
#[derive(Debug, Clone, PartialEq)]
pub struct ClipOutcome {
    pub values: Vec<f64>,
    pub upper_clipped: usize,
    pub lower_clipped: usize,
    pub floored: usize,
    pub upper_bound: f64,
    pub floor: f64,
}

/// Clips `d~` into `[T0, upper.bound(..)]`, then raises anything below
/// `1e-8 * lambda_max` to that floor.
pub fn lw_clip(d_tilde: &[f64], eigs: &[f64], p: usize, n: usize, t0: f64, upper: UpperClip) -> Result<ClipOutcome> {
    check_spectrum(eigs, p, n)?;
    if d_tilde.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            actual: d_tilde.len(),
        });
    }
    if !(t0 >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "t0",
            reason: "lower clip must be nonnegative",
        });
    }
    let lambda_max = eigs[p - 1];
    let upper_bound = upper.bound(lambda_max, p, n);
    let floor = INVERTIBILITY_FLOOR * lambda_max;
    let mut outcome = ClipOutcome {
        values: Vec::with_capacity(p),
        upper_clipped: 0,
        lower_clipped: 0,
        floored: 0,
        upper_bound,
        floor,
    };
    for &d in d_tilde {
        let mut v = if d > upper_bound {
            outcome.upper_clipped += 1;
            upper_bound
        } else if d < t0 {
            outcome.lower_clipped += 1;
            t0
        } else {
            d
        };
        if v < floor {
            outcome.floored += 1;
            v = floor;
        }
        outcome.values.push(v);
    }
    Ok(outcome)
}
