//! Covariance estimators sharing the representation `U diag(d) U'`, where `U`
//! holds eigenvectors of the sample covariance (or, for the clairvoyant
//! reference, of the population covariance).

pub mod kernel;

use alloc::string::String;
use alloc::vec::Vec;
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{
    check_positive, eig_hermitian, inv_quad_form, CMatrix, CVector, EigenSystem, Field, HermitianMatrix,
};
use crate::population::PopulationCovariance;
use crate::sampling::TrainingSet;

pub use kernel::{lw_clip, lw_kernel, lw_shrink_raw, ClipOutcome, KernelEvaluation, UpperClip};

pub const LW_LABEL: &str = "lw-analytical";
pub const ORACLE_LABEL: &str = "oracle-finite-sample";
pub const DIAGONAL_LOADING_LABEL: &str = "diagonal-loading";
pub const SAMPLE_LABEL: &str = "sample";
pub const CLAIRVOYANT_LABEL: &str = "clairvoyant";

/// Excluded band of aspect ratios around `p/n = 1`.
pub const RATIO_GUARD: (f64, f64) = (0.95, 1.05);

/// Default diagonal load as a fraction of `tr(S)/p`.
pub const DEFAULT_LOADING_FRACTION: f64 = 0.1;

/// Bookkeeping from one analytical shrinkage fit.
#[derive(Debug, Clone, PartialEq)]
pub struct LwDiagnostics {
    /// `d~_j` before clipping.
    pub raw: Vec<f64>,
    pub upper_clipped: usize,
    pub lower_clipped: usize,
    pub floored: usize,
    pub upper_bound: f64,
    /// Sample eigenvalues handled by the zero branch.
    pub zero_eigenvalues: usize,
    /// Raw values that came out `<= 0` (possible in the zero branch).
    pub nonpositive_raw: usize,
}

/// `R^ = U diag(d) U'` with every `d_j > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShrinkageCovariance {
    eigensystem: EigenSystem,
    shrunken: Vec<f64>,
    label: String,
    diagnostics: Option<LwDiagnostics>,
}

impl ShrinkageCovariance {
    pub fn new(eigensystem: EigenSystem, shrunken: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if shrunken.len() != eigensystem.dim() {
            return Err(Error::DimensionMismatch {
                expected: eigensystem.dim(),
                actual: shrunken.len(),
            });
        }
        check_positive(&shrunken)?;
        Ok(Self {
            eigensystem,
            shrunken,
            label: label.into(),
            diagnostics: None,
        })
    }

    fn with_diagnostics(mut self, diagnostics: LwDiagnostics) -> Self {
        self.diagnostics = Some(diagnostics);
        self
    }

    pub fn dim(&self) -> usize {
        self.shrunken.len()
    }

    pub fn field(&self) -> Field {
        self.eigensystem.field()
    }

    pub fn eigensystem(&self) -> &EigenSystem {
        &self.eigensystem
    }

    pub fn shrunken(&self) -> &[f64] {
        &self.shrunken
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn diagnostics(&self) -> Option<&LwDiagnostics> {
        self.diagnostics.as_ref()
    }

    /// `v' R^{-1} v`.
    pub fn inv_quad_form(&self, v: &CVector) -> Result<f64> {
        inv_quad_form(v, &self.eigensystem, &self.shrunken)
    }

    /// `R^{-1} v`.
    pub fn solve(&self, v: &CVector) -> Result<CVector> {
        let mut c = self.eigensystem.coordinates(v)?;
        for (cj, dj) in c.iter_mut().zip(&self.shrunken) {
            *cj /= *dj;
        }
        Ok(self.eigensystem.vectors() * c)
    }

    /// The dense matrix `U diag(d) U'`.
    pub fn to_matrix(&self) -> HermitianMatrix {
        self.eigensystem
            .compose(&self.shrunken)
            .expect("lengths agree by construction")
    }

    /// `c R^` for `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        let shrunken = self.shrunken.iter().map(|d| d * c).collect();
        let mut out = Self::new(self.eigensystem.clone(), shrunken, self.label.clone())?;
        out.diagnostics = self.diagnostics.clone();
        Ok(out)
    }

    /// Same eigenvectors, shrunken values replaced by `f(d_j)`.
    pub fn map_shrunken(&self, label: impl Into<String>, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            self.eigensystem.clone(),
            self.shrunken.iter().map(|&d| f(d)).collect(),
            label,
        )
    }
}

/// `S = n^{-1} X X'`.
pub fn sample_covariance(x: &TrainingSet) -> HermitianMatrix {
    let m = x.matrix();
    let n = x.len() as f64;
    // four real products instead of one complex one
    let re: DMatrix<f64> = m.map(|z| z.re);
    let s = match x.field() {
        Field::Real => (&re * re.transpose()).map(|v| Complex64::new(v / n, 0.0)),
        Field::Complex => {
            let im: DMatrix<f64> = m.map(|z| z.im);
            let real_part = &re * re.transpose() + &im * im.transpose();
            let imag_part = &im * re.transpose() - &re * im.transpose();
            let mut s = real_part.zip_map(&imag_part, |a, b| Complex64::new(a / n, b / n));
            let p = s.nrows();
            for i in 0..p {
                s[(i, i)].im = 0.0;
                for j in (i + 1)..p {
                    let v = (s[(i, j)] + s[(j, i)].conj()) * 0.5;
                    s[(i, j)] = v;
                    s[(j, i)] = v.conj();
                }
            }
            s
        }
    };
    HermitianMatrix::from_trusted(x.field(), s)
}

/// Eigensystem of `S` together with the sample count it came from.
#[derive(Debug, Clone)]
pub struct SampleSpectrum {
    eigensystem: EigenSystem,
    n: usize,
}

impl SampleSpectrum {
    pub fn from_training(x: &TrainingSet) -> Result<Self> {
        let s = sample_covariance(x);
        Ok(Self {
            eigensystem: eig_hermitian(&s)?,
            n: x.len(),
        })
    }

    /// For a sample covariance computed elsewhere from `n` columns.
    pub fn from_covariance(s: &HermitianMatrix, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter {
                name: "n",
                reason: "sample count must be at least 1",
            });
        }
        Ok(Self {
            eigensystem: eig_hermitian(s)?,
            n,
        })
    }

    pub fn eigensystem(&self) -> &EigenSystem {
        &self.eigensystem
    }

    pub fn eigenvalues(&self) -> &[f64] {
        self.eigensystem.values()
    }

    pub fn dim(&self) -> usize {
        self.eigensystem.dim()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `p / n`.
    pub fn ratio(&self) -> f64 {
        self.dim() as f64 / self.n as f64
    }

    /// `tr(S) / p`.
    pub fn mean_eigenvalue(&self) -> f64 {
        self.eigenvalues().iter().sum::<f64>() / self.dim() as f64
    }
}

/// Analytical nonlinear shrinkage from a precomputed sample spectrum.
pub fn lw_from_spectrum(spectrum: &SampleSpectrum, t0: f64, upper: UpperClip) -> Result<ShrinkageCovariance> {
    let (p, n) = (spectrum.dim(), spectrum.n());
    let ratio = spectrum.ratio();
    if ratio > RATIO_GUARD.0 && ratio < RATIO_GUARD.1 {
        return Err(Error::RatioNearOne { p, n });
    }
    let eigs = spectrum.eigenvalues();
    let raw = lw_shrink_raw(eigs, p, n)?;
    let clip = lw_clip(&raw, eigs, p, n, t0, upper)?;
    let zero_threshold = kernel::ZERO_EIGENVALUE_THRESHOLD * eigs[p - 1].max(0.0);
    let diagnostics = LwDiagnostics {
        zero_eigenvalues: eigs.iter().filter(|&&l| l <= zero_threshold).count(),
        nonpositive_raw: raw.iter().filter(|&&d| d <= 0.0).count(),
        upper_clipped: clip.upper_clipped,
        lower_clipped: clip.lower_clipped,
        floored: clip.floored,
        upper_bound: clip.upper_bound,
        raw,
    };
    Ok(ShrinkageCovariance::new(spectrum.eigensystem().clone(), clip.values, LW_LABEL)?.with_diagnostics(diagnostics))
}

/// Ledoit-Wolf analytical nonlinear shrinkage of the training data, with the
/// default upper clip.
pub fn lw_estimator(x: &TrainingSet, t0: f64) -> Result<ShrinkageCovariance> {
    lw_from_spectrum(&SampleSpectrum::from_training(x)?, t0, UpperClip::default())
}

/// `d*_j = u_j' R u_j` for the sample eigenvectors `u_j`.
pub fn oracle_from_spectrum(spectrum: &SampleSpectrum, r: &PopulationCovariance) -> Result<ShrinkageCovariance> {
    let p = spectrum.dim();
    if r.dim() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            actual: r.dim(),
        });
    }
    let u = spectrum.eigensystem().vectors();
    let ru: CMatrix = r.matrix().as_matrix() * u;
    let d: Vec<f64> = (0..p).map(|j| u.column(j).dotc(&ru.column(j)).re).collect();
    ShrinkageCovariance::new(spectrum.eigensystem().clone(), d, ORACLE_LABEL)
}

pub fn oracle_estimator(x: &TrainingSet, r: &PopulationCovariance) -> Result<ShrinkageCovariance> {
    oracle_from_spectrum(&SampleSpectrum::from_training(x)?, r)
}

/// `lambda_j + beta`.
pub fn diagonal_loading_from_spectrum(spectrum: &SampleSpectrum, beta: f64) -> Result<ShrinkageCovariance> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidParameter {
            name: "beta",
            reason: "diagonal load must be positive and finite",
        });
    }
    let d = spectrum.eigenvalues().iter().map(|l| l.max(0.0) + beta).collect();
    ShrinkageCovariance::new(spectrum.eigensystem().clone(), d, DIAGONAL_LOADING_LABEL)
}

pub fn diagonal_loading(x: &TrainingSet, beta: f64) -> Result<ShrinkageCovariance> {
    diagonal_loading_from_spectrum(&SampleSpectrum::from_training(x)?, beta)
}

/// `S` itself; fails when `S` is singular.
pub fn sample_from_spectrum(spectrum: &SampleSpectrum) -> Result<ShrinkageCovariance> {
    ShrinkageCovariance::new(
        spectrum.eigensystem().clone(),
        spectrum.eigenvalues().to_vec(),
        SAMPLE_LABEL,
    )
}

/// The true covariance in shrinkage form, `Q diag(tau) Q'`.
pub fn clairvoyant(r: &PopulationCovariance, field: Field) -> ShrinkageCovariance {
    ShrinkageCovariance::new(r.eigensystem(field), r.eigenvalues().to_vec(), CLAIRVOYANT_LABEL)
        .expect("population eigenvalues are positive")
}

/// Estimator choice plus parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "kebab-case"))]
pub enum EstimatorSpec {
    /// Analytical nonlinear shrinkage with lower clip `t0`.
    Lw {
        #[cfg_attr(feature = "serde", serde(default))]
        t0: f64,
        #[cfg_attr(feature = "serde", serde(default))]
        upper: UpperClip,
    },
    /// `S + beta I`; `beta` defaults to `0.1 tr(S)/p`.
    DiagonalLoading {
        #[cfg_attr(feature = "serde", serde(default))]
        beta: Option<f64>,
    },
    Sample,
    /// Finite-sample oracle `u_j' R u_j`; needs the population.
    Oracle,
    /// The population covariance itself; needs the population.
    Clairvoyant,
}

impl EstimatorSpec {
    pub fn label(&self) -> &'static str {
        match self {
            EstimatorSpec::Lw { .. } => LW_LABEL,
            EstimatorSpec::DiagonalLoading { .. } => DIAGONAL_LOADING_LABEL,
            EstimatorSpec::Sample => SAMPLE_LABEL,
            EstimatorSpec::Oracle => ORACLE_LABEL,
            EstimatorSpec::Clairvoyant => CLAIRVOYANT_LABEL,
        }
    }

    pub fn needs_population(&self) -> bool {
        matches!(self, EstimatorSpec::Oracle | EstimatorSpec::Clairvoyant)
    }

    pub fn fit(
        &self,
        spectrum: &SampleSpectrum,
        population: Option<&PopulationCovariance>,
    ) -> Result<ShrinkageCovariance> {
        let need_population = || {
            population.ok_or(Error::InvalidParameter {
                name: "population",
                reason: "estimator needs the true covariance",
            })
        };
        match *self {
            EstimatorSpec::Lw { t0, upper } => lw_from_spectrum(spectrum, t0, upper),
            EstimatorSpec::DiagonalLoading { beta } => {
                let beta = beta.unwrap_or(DEFAULT_LOADING_FRACTION * spectrum.mean_eigenvalue());
                diagonal_loading_from_spectrum(spectrum, beta)
            }
            EstimatorSpec::Sample => sample_from_spectrum(spectrum),
            EstimatorSpec::Oracle => oracle_from_spectrum(spectrum, need_population()?),
            EstimatorSpec::Clairvoyant => Ok(clairvoyant(need_population()?, spectrum.eigensystem().field())),
        }
    }
}

impl core::fmt::Display for EstimatorSpec {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.label())
    }
}

impl core::str::FromStr for EstimatorSpec {
    type Err = Error;

    /// Accepts the labels `lw`, `diagonal-loading`, `sample`, `oracle` and
    /// `clairvoyant` with default parameters.
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "lw" | "lw-analytical" => EstimatorSpec::Lw {
                t0: 0.0,
                upper: UpperClip::SampleMax,
            },
            "diagonal-loading" | "dl" => EstimatorSpec::DiagonalLoading { beta: None },
            "sample" => EstimatorSpec::Sample,
            "oracle" | "oracle-finite-sample" => EstimatorSpec::Oracle,
            "clairvoyant" => EstimatorSpec::Clairvoyant,
            _ => {
                return Err(Error::InvalidParameter {
                    name: "method",
                    reason: "unknown estimator",
                })
            }
        })
    }
}
