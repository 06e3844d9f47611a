//! Training data, signal directions and test observations.

use nalgebra::DMatrix;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector, Field};
use crate::population::PopulationCovariance;
use crate::rng::{stream, Stream, StreamRng};

/// Smallest Student-t degrees of freedom with a finite 16th absolute moment.
pub const MIN_STUDENT_DF: f64 = 17.0;

/// Distribution of the i.i.d. entries of `W`. Every law has zero mean and
/// unit variance.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum EntryLaw {
    GaussianUnit,
    Rademacher,
    ScaledStudentT { df: f64 },
}

impl EntryLaw {
    pub fn validate(&self) -> Result<()> {
        match *self {
            EntryLaw::ScaledStudentT { df } if !(df >= MIN_STUDENT_DF) => Err(Error::HeavyTail { df }),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            EntryLaw::GaussianUnit => "gaussian",
            EntryLaw::Rademacher => "rademacher",
            EntryLaw::ScaledStudentT { .. } => "student-t",
        }
    }

    fn sampler(&self) -> Result<EntrySampler> {
        self.validate()?;
        Ok(match *self {
            EntryLaw::GaussianUnit => EntrySampler::Gaussian,
            EntryLaw::Rademacher => EntrySampler::Rademacher,
            EntryLaw::ScaledStudentT { df } => EntrySampler::StudentT {
                dist: StudentT::new(df).map_err(|_| Error::HeavyTail { df })?,
                scale: ((df - 2.0) / df).sqrt(),
            },
        })
    }
}

enum EntrySampler {
    Gaussian,
    Rademacher,
    StudentT { dist: StudentT<f64>, scale: f64 },
}

impl EntrySampler {
    fn unit_real(&self, rng: &mut StreamRng) -> f64 {
        match self {
            EntrySampler::Gaussian => StandardNormal.sample(rng),
            EntrySampler::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            EntrySampler::StudentT { dist, scale } => dist.sample(rng) * scale,
        }
    }

    /// Real field: one unit-variance draw. Complex field: independent real
    /// and imaginary parts of variance 1/2 each.
    fn draw(&self, field: Field, rng: &mut StreamRng) -> Complex64 {
        match field {
            Field::Real => Complex64::new(self.unit_real(rng), 0.0),
            Field::Complex => {
                let re = self.unit_real(rng);
                let im = self.unit_real(rng);
                Complex64::new(re, im) * core::f64::consts::FRAC_1_SQRT_2
            }
        }
    }
}

/// Standard normal scalar in `field` (`E|z|^2 = 1`).
pub fn standard_normal(field: Field, rng: &mut StreamRng) -> Complex64 {
    EntrySampler::Gaussian.draw(field, rng)
}

/// A vector of i.i.d. standard normal entries.
pub fn gaussian_vector(p: usize, field: Field, rng: &mut StreamRng) -> CVector {
    CVector::from_fn(p, |_, _| standard_normal(field, rng))
}

/// `p x n` training matrix `X = R^{1/2} W`.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    x: CMatrix,
    field: Field,
    law: Option<EntryLaw>,
    seed: Option<u64>,
}

impl TrainingSet {
    /// Wraps externally supplied data.
    pub fn from_matrix(x: CMatrix, field: Field) -> Result<Self> {
        if x.ncols() == 0 || x.nrows() == 0 {
            return Err(Error::InvalidParameter {
                name: "x",
                reason: "training matrix needs at least one row and one column",
            });
        }
        if field == Field::Real {
            let max_imag = x.iter().fold(0.0f64, |acc, z| acc.max(z.im.abs()));
            if max_imag > 0.0 {
                return Err(Error::ImaginaryInRealField { max_imag });
            }
        }
        Ok(Self {
            x,
            field,
            law: None,
            seed: None,
        })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.x
    }

    pub fn field(&self) -> Field {
        self.field
    }

    /// Dimension `p`.
    pub fn dim(&self) -> usize {
        self.x.nrows()
    }

    /// Sample count `n`.
    pub fn len(&self) -> usize {
        self.x.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.x.ncols() == 0
    }

    pub fn law(&self) -> Option<EntryLaw> {
        self.law
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// `c X`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            x: self.x.scale(c),
            ..self.clone()
        }
    }

    /// `Q X` for a unitary `Q`.
    pub fn rotated(&self, q: &CMatrix) -> Result<Self> {
        if q.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: q.ncols(),
            });
        }
        Ok(Self {
            x: q * &self.x,
            ..self.clone()
        })
    }
}

/// Draws `n` columns with covariance `R`. Column `j` is generated from its
/// own stream keyed by `(seed, j)`.
pub fn sample_training(
    r: &PopulationCovariance,
    n: usize,
    law: EntryLaw,
    field: Field,
    seed: u64,
) -> Result<TrainingSet> {
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "n",
            reason: "need at least one training column",
        });
    }
    let sampler = law.sampler()?;
    let p = r.dim();
    let mut w = CMatrix::zeros(p, n);
    for j in 0..n {
        let mut rng = stream(seed, Stream::Training, &[j as u64]);
        for i in 0..p {
            w[(i, j)] = sampler.draw(field, &mut rng);
        }
    }
    let x = multiply_sqrt(r, &w, field);
    Ok(TrainingSet {
        x,
        field,
        law: Some(law),
        seed: Some(seed),
    })
}

/// `R^{1/2} W`; the population root is real, so a real field stays on the
/// real fast path.
fn multiply_sqrt(r: &PopulationCovariance, w: &CMatrix, field: Field) -> CMatrix {
    if r.rotation().is_none() {
        let mut x = w.clone();
        for (i, tau) in r.eigenvalues().iter().enumerate() {
            x.row_mut(i).scale_mut(tau.sqrt());
        }
        return x;
    }
    let root: DMatrix<f64> = r.sqrt().as_matrix().map(|z| z.re);
    let re = &root * w.map(|z| z.re);
    match field {
        Field::Real => re.map(|x| Complex64::new(x, 0.0)),
        Field::Complex => {
            let im = &root * w.map(|z| z.im);
            re.zip_map(&im, Complex64::new)
        }
    }
}

/// Unit vector uniform on the sphere: a normalized standard normal vector.
pub fn sample_signal_direction(p: usize, field: Field, seed: u64) -> Result<CVector> {
    if p == 0 {
        return Err(Error::InvalidParameter {
            name: "p",
            reason: "dimension must be at least 1",
        });
    }
    let mut rng = stream(seed, Stream::Signal, &[]);
    loop {
        let v = gaussian_vector(p, field, &mut rng);
        let norm = v.norm();
        if norm > 0.0 {
            return Ok(v.unscale(norm));
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Hypothesis {
    H0,
    /// Signal present with amplitude `a != 0`.
    H1(Complex64),
}

#[derive(Debug, Clone)]
pub struct Observation {
    pub y: CVector,
    pub hypothesis: Hypothesis,
}

/// `y = a mu + R^{1/2} z` (the signal term only under `H1`) for a given noise
/// vector `z`.
pub fn observation_from_noise(
    r: &PopulationCovariance,
    mu: &CVector,
    hypothesis: Hypothesis,
    z: &CVector,
) -> Result<CVector> {
    let p = r.dim();
    for len in [mu.len(), z.len()] {
        if len != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                actual: len,
            });
        }
    }
    let mut y = r.sqrt().as_matrix() * z;
    if let Hypothesis::H1(a) = hypothesis {
        if a == Complex64::new(0.0, 0.0) {
            return Err(Error::InvalidParameter {
                name: "a",
                reason: "signal amplitude under H1 must be nonzero",
            });
        }
        y.axpy(a, mu, Complex64::new(1.0, 0.0));
    }
    Ok(y)
}

/// One Gaussian test observation.
pub fn sample_observation(
    r: &PopulationCovariance,
    mu: &CVector,
    hypothesis: Hypothesis,
    field: Field,
    seed: u64,
) -> Result<Observation> {
    let mut rng = stream(seed, Stream::Observation, &[]);
    let z = gaussian_vector(r.dim(), field, &mut rng);
    let y = observation_from_noise(r, mu, hypothesis, &z)?;
    Ok(Observation { y, hypothesis })
}
