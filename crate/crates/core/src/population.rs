//! Population covariance matrices with a prescribed limiting spectrum.

use alloc::vec::Vec;
use nalgebra::{DMatrix, QR};
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, EigenSystem, Field, HermitianMatrix};
use crate::rng::{stream, Stream};

const WEIGHT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum SpectrumComponent {
    PointMass { value: f64 },
    UniformInterval { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WeightedComponent {
    #[cfg_attr(feature = "serde", serde(flatten))]
    pub component: SpectrumComponent,
    pub weight: f64,
}

impl WeightedComponent {
    pub fn point(value: f64, weight: f64) -> Self {
        Self {
            component: SpectrumComponent::PointMass { value },
            weight,
        }
    }

    pub fn uniform(lo: f64, hi: f64, weight: f64) -> Self {
        Self {
            component: SpectrumComponent::UniformInterval { lo, hi },
            weight,
        }
    }

    fn bounds(&self) -> (f64, f64) {
        match self.component {
            SpectrumComponent::PointMass { value } => (value, value),
            SpectrumComponent::UniformInterval { lo, hi } => (lo, hi),
        }
    }

    /// Weighted CDF contribution at `x`, split into the continuous part and
    /// the atom sitting exactly at `x`.
    fn cdf_parts(&self, x: f64) -> (f64, f64) {
        match self.component {
            SpectrumComponent::PointMass { value } => {
                if x > value {
                    (self.weight, 0.0)
                } else if x == value {
                    (0.0, self.weight)
                } else {
                    (0.0, 0.0)
                }
            }
            SpectrumComponent::UniformInterval { lo, hi } => {
                if hi == lo {
                    // degenerate interval behaves like an atom
                    return WeightedComponent::point(lo, self.weight).cdf_parts(x);
                }
                let frac = ((x - lo) / (hi - lo)).clamp(0.0, 1.0);
                (self.weight * frac, 0.0)
            }
        }
    }
}

/// Mixture of point masses and uniform intervals on a compact subset of
/// `(0, inf)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(
    feature = "serde",
    serde(try_from = "Vec<WeightedComponent>", into = "Vec<WeightedComponent>")
)]
pub struct SpectrumModel {
    components: Vec<WeightedComponent>,
}

impl TryFrom<Vec<WeightedComponent>> for SpectrumModel {
    type Error = Error;

    fn try_from(components: Vec<WeightedComponent>) -> Result<Self> {
        Self::new(components)
    }
}

impl From<SpectrumModel> for Vec<WeightedComponent> {
    fn from(model: SpectrumModel) -> Self {
        model.components
    }
}

impl SpectrumModel {
    pub fn new(components: Vec<WeightedComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidSpectrum("no components"));
        }
        let mut total = 0.0;
        for c in &components {
            if !(c.weight > 0.0) || !c.weight.is_finite() {
                return Err(Error::InvalidSpectrum("weights must be positive and finite"));
            }
            let (lo, hi) = c.bounds();
            if !(lo > 0.0) || !hi.is_finite() {
                return Err(Error::InvalidSpectrum("support must lie in (0, inf)"));
            }
            if lo > hi {
                return Err(Error::InvalidSpectrum("interval with lo > hi"));
            }
            total += c.weight;
        }
        if (total - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(Error::InvalidSpectrum("weights must sum to 1"));
        }
        Ok(Self { components })
    }

    /// Single atom at `value`.
    pub fn point(value: f64) -> Result<Self> {
        Self::new(alloc::vec![WeightedComponent::point(value, 1.0)])
    }

    pub fn components(&self) -> &[WeightedComponent] {
        &self.components
    }

    /// `(T_lo, T_hi)`, the smallest and largest support points.
    pub fn support_bounds(&self) -> (f64, f64) {
        self.components.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), c| {
            let (a, b) = c.bounds();
            (lo.min(a), hi.max(b))
        })
    }

    /// `H(x)`, right-continuous.
    pub fn cdf(&self, x: f64) -> f64 {
        self.components
            .iter()
            .map(|c| {
                let (cont, atom) = c.cdf_parts(x);
                cont + atom
            })
            .sum()
    }

    /// `inf { x : H(x) >= u }` for `u` in `(0, 1]`.
    ///
    /// `H` is linear between consecutive support breakpoints and jumps at
    /// atoms, so the inverse is located exactly by scanning breakpoints.
    pub fn quantile(&self, u: f64) -> f64 {
        let mut breaks: Vec<f64> = Vec::with_capacity(2 * self.components.len());
        for c in &self.components {
            let (lo, hi) = c.bounds();
            breaks.push(lo);
            breaks.push(hi);
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();

        let mut prev: Option<(f64, f64)> = None;
        for &x in &breaks {
            let (cont, atom): (f64, f64) = self
                .components
                .iter()
                .map(|c| c.cdf_parts(x))
                .fold((0.0, 0.0), |acc, v| (acc.0 + v.0, acc.1 + v.1));
            let at = cont + atom;
            if at >= u {
                let left_limit = cont;
                return match prev {
                    Some((x0, h0)) if u <= left_limit && left_limit > h0 => {
                        x0 + (u - h0) / (left_limit - h0) * (x - x0)
                    }
                    _ => x,
                };
            }
            prev = Some((x, at));
        }
        *breaks.last().expect("model has at least one component")
    }
}

/// `tau_j = H^{-1}((j - 1/2) / p)` for `j = 1..p`, ascending.
pub fn spectrum_quantiles(model: &SpectrumModel, p: usize) -> Result<Vec<f64>> {
    if p == 0 {
        return Err(Error::InvalidParameter {
            name: "p",
            reason: "dimension must be at least 1",
        });
    }
    let pf = p as f64;
    Ok((1..=p).map(|j| model.quantile((j as f64 - 0.5) / pf)).collect())
}

/// A population covariance `R = Q diag(tau) Q'` with its square root.
#[derive(Debug, Clone)]
pub struct PopulationCovariance {
    eigenvalues: Vec<f64>,
    rotation: Option<DMatrix<f64>>,
    bounds: (f64, f64),
    matrix: HermitianMatrix,
    sqrt: HermitianMatrix,
}

impl PopulationCovariance {
    /// Builds `Q diag(tau) Q'` for ascending positive `tau` and an orthogonal
    /// `rotation` (identity when `None`).
    pub fn from_parts(eigenvalues: Vec<f64>, rotation: Option<DMatrix<f64>>) -> Result<Self> {
        let p = eigenvalues.len();
        if p == 0 {
            return Err(Error::InvalidParameter {
                name: "p",
                reason: "dimension must be at least 1",
            });
        }
        if let Some(index) = eigenvalues.windows(2).position(|w| !(w[0] <= w[1])) {
            return Err(Error::NotAscending { index: index + 1 });
        }
        if let Some(index) = eigenvalues.iter().position(|&t| !(t > 0.0) || !t.is_finite()) {
            return Err(Error::NonPositiveDiagonal {
                index,
                value: eigenvalues[index],
            });
        }
        if let Some(q) = &rotation {
            if q.nrows() != p || q.ncols() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    actual: q.nrows(),
                });
            }
        }
        let roots: Vec<f64> = eigenvalues.iter().map(|t| t.sqrt()).collect();
        let (matrix, sqrt) = match &rotation {
            None => (
                HermitianMatrix::diagonal(&eigenvalues, Field::Real),
                HermitianMatrix::diagonal(&roots, Field::Real),
            ),
            Some(q) => (conjugate(q, &eigenvalues), conjugate(q, &roots)),
        };
        let bounds = (eigenvalues[0], eigenvalues[p - 1]);
        Ok(Self {
            eigenvalues,
            rotation,
            bounds,
            matrix,
            sqrt,
        })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// The rotation `Q`, or `None` for the identity.
    pub fn rotation(&self) -> Option<&DMatrix<f64>> {
        self.rotation.as_ref()
    }

    /// Smallest and largest population eigenvalue.
    pub fn bounds(&self) -> (f64, f64) {
        self.bounds
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.matrix
    }

    pub fn sqrt(&self) -> &HermitianMatrix {
        &self.sqrt
    }

    /// The eigensystem `(tau, Q)` tagged with `field`.
    pub fn eigensystem(&self, field: Field) -> EigenSystem {
        let p = self.dim();
        let vectors = match &self.rotation {
            None => CMatrix::identity(p, p),
            Some(q) => q.map(|x| Complex64::new(x, 0.0)),
        };
        EigenSystem::from_parts(field, self.eigenvalues.clone(), vectors).expect("population eigenvalues are ascending")
    }
}

fn conjugate(q: &DMatrix<f64>, diag: &[f64]) -> HermitianMatrix {
    let mut scaled = q.clone();
    for (j, &d) in diag.iter().enumerate() {
        scaled.column_mut(j).scale_mut(d);
    }
    let m = scaled * q.transpose();
    let sym = (&m + m.transpose()) * 0.5;
    HermitianMatrix::from_trusted(Field::Real, sym.map(|x| Complex64::new(x, 0.0)))
}

/// Haar-distributed orthogonal matrix: QR of an i.i.d. standard normal grid
/// with the signs of `diag(R)` absorbed into `Q`.
pub fn haar_orthogonal(p: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = stream(seed, Stream::Rotation, &[p as u64]);
    let g = DMatrix::<f64>::from_fn(p, p, |_, _| StandardNormal.sample(&mut rng));
    let qr = QR::new(g);
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..p {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Population covariance whose eigenvalues are the `p` spectrum quantiles.
pub fn build_population(model: &SpectrumModel, p: usize, rotate: bool, seed: u64) -> Result<PopulationCovariance> {
    let tau = spectrum_quantiles(model, p)?;
    let rotation = rotate.then(|| haar_orthogonal(p, seed));
    PopulationCovariance::from_parts(tau, rotation)
}
