//! Adaptive matched filter statistic, its diagnostic functionals, and
//! analytic and empirical false-alarm / detection rates.

use alloc::vec::Vec;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::estimators::ShrinkageCovariance;
use crate::linalg::{quad_form, CVector, Field};
use crate::population::PopulationCovariance;
use crate::rng::{stream, Stream};
use crate::sampling::gaussian_vector;
use crate::special::{marcum_q1, normal_cdf, normal_quantile};

/// Observation draws per independently seeded block.
pub const DRAW_BLOCK: usize = 1024;

/// `T = mu' R^{-1} y / (mu' R^{-1} mu)^{1/2}` and `|T|^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmfStatistic {
    pub t_value: Complex64,
    pub t_squared: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorDiagnostics {
    /// `(mu' R^-1 R R^-1 mu) / (mu' R^-1 mu)`.
    pub xi: f64,
    /// `(mu' R^-1 mu) / (mu' R^-1 R R^-1 mu)^{1/2}`.
    pub nu: f64,
    /// `mu' R^-1 mu`.
    pub mu_quad: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Analytic,
    Empirical { trials: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub p0: f64,
    pub p1: f64,
    /// Binomial standard errors; zero for analytic points.
    pub se0: f64,
    pub se1: f64,
    pub provenance: Provenance,
}

fn positive_quad(est: &ShrinkageCovariance, mu: &CVector) -> Result<f64> {
    let q = est.inv_quad_form(mu)?;
    if !(q > 0.0) {
        return Err(Error::DegenerateQuadForm { value: q });
    }
    Ok(q)
}

/// Evaluated through the eigensystem of `est`; no dense inverse is formed.
pub fn amf_statistic(mu: &CVector, est: &ShrinkageCovariance, y: &CVector) -> Result<AmfStatistic> {
    if y.len() != est.dim() {
        return Err(Error::DimensionMismatch {
            expected: est.dim(),
            actual: y.len(),
        });
    }
    let cm = est.eigensystem().coordinates(mu)?;
    let cy = est.eigensystem().coordinates(y)?;
    let mut num = Complex64::new(0.0, 0.0);
    let mut den = 0.0;
    for ((m, v), d) in cm.iter().zip(cy.iter()).zip(est.shrunken()) {
        num += m.conj() * v / *d;
        den += m.norm_sqr() / d;
    }
    if !(den > 0.0) {
        return Err(Error::DegenerateQuadForm { value: den });
    }
    let t_value = num / den.sqrt();
    Ok(AmfStatistic {
        t_value,
        t_squared: t_value.norm_sqr(),
    })
}

/// `xi` and `nu` against the true covariance `r`.
pub fn diagnostics(mu: &CVector, est: &ShrinkageCovariance, r: &PopulationCovariance) -> Result<DetectorDiagnostics> {
    if r.dim() != est.dim() {
        return Err(Error::DimensionMismatch {
            expected: est.dim(),
            actual: r.dim(),
        });
    }
    let mu_quad = positive_quad(est, mu)?;
    let w = est.solve(mu)?;
    let spread = quad_form(&w, r.matrix())?;
    if !(spread > 0.0) {
        return Err(Error::DegenerateQuadForm { value: spread });
    }
    Ok(DetectorDiagnostics {
        xi: spread / mu_quad,
        nu: mu_quad / spread.sqrt(),
        mu_quad,
    })
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "alpha",
            reason: "false-alarm level must lie in (0, 1)",
        })
    }
}

/// Threshold `t` with `Pr[|Z|^2 > t] = alpha`.
pub fn threshold_for_alpha(alpha: f64, field: Field) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(match field {
        Field::Complex => -alpha.ln(),
        Field::Real => normal_quantile(1.0 - 0.5 * alpha)?.powi(2),
    })
}

/// `Pr[|Z|^2 > t]` for standard normal `Z` in `field`.
pub fn p0_analytic(t: f64, field: Field) -> f64 {
    let t = t.max(0.0);
    match field {
        Field::Complex => (-t).exp(),
        Field::Real => 2.0 * normal_cdf(-t.sqrt()),
    }
}

/// `Pr[|Z + a (mu_quad)^{1/2}|^2 > t]`.
pub fn p1_analytic(t: f64, a: Complex64, mu_quad: f64, field: Field) -> f64 {
    let t = t.max(0.0);
    let m = a.norm() * mu_quad.max(0.0).sqrt();
    match field {
        Field::Complex => marcum_q1(core::f64::consts::SQRT_2 * m, (2.0 * t).sqrt()),
        Field::Real => {
            let s = t.sqrt();
            normal_cdf(m - s) + normal_cdf(-s - m)
        }
    }
}

pub fn analytic_point(t: f64, a: Complex64, mu_quad: f64, field: Field) -> RocPoint {
    RocPoint {
        threshold: t,
        p0: p0_analytic(t, field),
        p1: p1_analytic(t, a, mu_quad, field),
        se0: 0.0,
        se1: 0.0,
        provenance: Provenance::Analytic,
    }
}

/// Exact rates with the fit held fixed and Gaussian observations. Then
/// `T = a (mu' R^-1 mu)^{1/2} + N(0, xi)`, so the reference law is rescaled by
/// `xi` and the deflection becomes `|a| nu`.
pub fn conditional_point(t: f64, a: Complex64, d: &DetectorDiagnostics, field: Field) -> RocPoint {
    let scaled = t.max(0.0) / d.xi;
    RocPoint {
        threshold: t,
        p0: p0_analytic(scaled, field),
        p1: p1_analytic(scaled, a, d.nu * d.nu, field),
        se0: 0.0,
        se1: 0.0,
        provenance: Provenance::Analytic,
    }
}

/// `|T|^2` values of fresh null and alternative observations with the
/// training data (hence `est`) held fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct StatisticPools {
    pub null: Vec<f64>,
    pub alt: Vec<f64>,
}

impl StatisticPools {
    pub fn trials(&self) -> usize {
        self.null.len()
    }

    /// Exceedance frequencies `|T|^2 > t` under each hypothesis.
    pub fn rates_at(&self, t: f64) -> RocPoint {
        let trials = self.trials();
        let frac = |pool: &[f64]| pool.iter().filter(|&&v| v > t).count() as f64 / trials as f64;
        let p0 = frac(&self.null);
        let p1 = frac(&self.alt);
        let se = |p: f64| (p * (1.0 - p) / trials as f64).sqrt();
        RocPoint {
            threshold: t,
            p0,
            p1,
            se0: se(p0),
            se1: se(p1),
            provenance: Provenance::Empirical { trials },
        }
    }

    /// Smallest threshold whose empirical false-alarm rate is at most `alpha`.
    pub fn matched_threshold(&self, alpha: f64) -> f64 {
        let mut sorted = self.null.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let allowed = (alpha * self.trials() as f64).floor() as usize;
        if allowed >= sorted.len() {
            0.0
        } else {
            sorted[allowed]
        }
    }
}

/// Draws the pools.
///
/// With `w = R^-1 mu / (mu' R^-1 mu)^{1/2}` and `y = a mu + R^{1/2} z`,
/// `T = a (mu' R^-1 mu)^{1/2} + (R^{1/2} w)' z`; projecting once turns every
/// draw into an O(p) inner product. Draws come in blocks of [`DRAW_BLOCK`],
/// each from its own stream keyed by block index.
pub fn draw_statistic_pools(
    mu: &CVector,
    est: &ShrinkageCovariance,
    r: &PopulationCovariance,
    a: Complex64,
    field: Field,
    trials: usize,
    seed: u64,
) -> Result<StatisticPools> {
    if trials == 0 {
        return Err(Error::InvalidParameter {
            name: "trials",
            reason: "need at least one trial",
        });
    }
    if r.dim() != est.dim() || mu.len() != est.dim() {
        return Err(Error::DimensionMismatch {
            expected: est.dim(),
            actual: if r.dim() != est.dim() { r.dim() } else { mu.len() },
        });
    }
    let q = positive_quad(est, mu)?;
    let w = est.solve(mu)?.unscale(q.sqrt());
    let g = r.sqrt().as_matrix() * w;
    let shift = a * q.sqrt();
    let p = est.dim();

    let draw = |tag: Stream, offset: Complex64| -> Vec<f64> {
        let mut out = Vec::with_capacity(trials);
        for block in 0..trials.div_ceil(DRAW_BLOCK) {
            let mut rng = stream(seed, tag, &[block as u64]);
            let count = DRAW_BLOCK.min(trials - block * DRAW_BLOCK);
            for _ in 0..count {
                let z = gaussian_vector(p, field, &mut rng);
                out.push((offset + g.dotc(&z)).norm_sqr());
            }
        }
        out
    };
    Ok(StatisticPools {
        null: draw(Stream::NullPool, Complex64::new(0.0, 0.0)),
        alt: draw(Stream::AltPool, shift),
    })
}

/// Conditional empirical rates at one threshold.
#[allow(clippy::too_many_arguments)]
pub fn empirical_rates(
    mu: &CVector,
    est: &ShrinkageCovariance,
    r: &PopulationCovariance,
    a: Complex64,
    t: f64,
    field: Field,
    trials: usize,
    seed: u64,
) -> Result<RocPoint> {
    Ok(draw_statistic_pools(mu, est, r, a, field, trials, seed)?.rates_at(t))
}

/// Empirical rates at every threshold from one shared observation pool, so
/// both rates are non-increasing in `t`.
#[allow(clippy::too_many_arguments)]
pub fn roc_curve(
    mu: &CVector,
    est: &ShrinkageCovariance,
    r: &PopulationCovariance,
    a: Complex64,
    thresholds: &[f64],
    field: Field,
    trials: usize,
    seed: u64,
) -> Result<Vec<RocPoint>> {
    let pools = draw_statistic_pools(mu, est, r, a, field, trials, seed)?;
    Ok(thresholds.iter().map(|&t| pools.rates_at(t)).collect())
}
