//! Dense Hermitian linear algebra over the real and complex fields.
//!
//! Every matrix is stored with complex entries. A [`Field::Real`] matrix is
//! one whose imaginary parts are identically zero; it is decomposed with the
//! real symmetric solver and lifted back, so both fields share the same
//! downstream code.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Relative tolerance of the Hermitian-symmetry check.
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;

/// Relative floor below which a negative eigenvalue is treated as rounding noise.
pub const PSD_TOLERANCE: f64 = 1e-12;

/// Scalar field shared by every matrix of one pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Field {
    Real,
    Complex,
}

impl Field {
    pub fn name(self) -> &'static str {
        match self {
            Field::Real => "real",
            Field::Complex => "complex",
        }
    }
}

/// A square Hermitian matrix tagged with its field.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    field: Field,
    data: CMatrix,
}

impl HermitianMatrix {
    /// Validates shape and symmetry, then stores the exactly-Hermitian part
    /// `(m + m')/2`.
    pub fn new(field: Field, data: CMatrix) -> Result<Self> {
        let (rows, cols) = data.shape();
        if rows != cols || rows == 0 {
            return Err(Error::NotSquare { rows, cols });
        }
        if field == Field::Real {
            let max_imag = data.iter().fold(0.0f64, |acc, z| acc.max(z.im.abs()));
            if max_imag > 0.0 {
                return Err(Error::ImaginaryInRealField { max_imag });
            }
        }
        let max_asymmetry = max_asymmetry(&data);
        let scale = data.iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
        let tolerance = HERMITIAN_TOLERANCE * scale;
        if max_asymmetry > tolerance {
            return Err(Error::NotHermitian {
                max_asymmetry,
                tolerance,
            });
        }
        let data = (&data + data.adjoint()).scale(0.5);
        Ok(Self { field, data })
    }

    pub fn from_real(data: &DMatrix<f64>) -> Result<Self> {
        Self::new(Field::Real, data.map(|x| Complex64::new(x, 0.0)))
    }

    pub fn identity(dim: usize, field: Field) -> Self {
        Self {
            field,
            data: CMatrix::identity(dim, dim),
        }
    }

    pub fn diagonal(values: &[f64], field: Field) -> Self {
        let diag = CVector::from_iterator(values.len(), values.iter().map(|&v| Complex64::new(v, 0.0)));
        Self {
            field,
            data: CMatrix::from_diagonal(&diag),
        }
    }

    /// Wraps a matrix already known to be exactly Hermitian.
    pub(crate) fn from_trusted(field: Field, data: CMatrix) -> Self {
        Self { field, data }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.data
    }

    pub fn into_matrix(self) -> CMatrix {
        self.data
    }

    pub fn trace(&self) -> f64 {
        self.data.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            field: self.field,
            data: self.data.scale(factor),
        }
    }
}

/// Largest entrywise deviation `|m_ij - conj(m_ji)|`.
pub fn max_asymmetry(m: &CMatrix) -> f64 {
    let p = m.nrows().min(m.ncols());
    let mut worst = 0.0f64;
    for i in 0..p {
        for j in i..p {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Frobenius norm of `a - b` relative to the Frobenius norm of `b`.
pub fn relative_frobenius_error(a: &CMatrix, b: &CMatrix) -> f64 {
    let denom = b.norm();
    let diff = (a - b).norm();
    if denom == 0.0 {
        diff
    } else {
        diff / denom
    }
}

/// `max |U'U - I|` over all entries.
pub fn orthonormality_error(u: &CMatrix) -> f64 {
    let gram = u.adjoint() * u;
    let mut worst = 0.0f64;
    for i in 0..gram.nrows() {
        for j in 0..gram.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - Complex64::new(target, 0.0)).norm());
        }
    }
    worst
}

/// Ascending eigenvalues with the matching orthonormal eigenvectors as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    field: Field,
    values: Vec<f64>,
    vectors: CMatrix,
}

impl EigenSystem {
    /// Assembles an eigensystem from parts. Checks shape and ordering; the
    /// caller is responsible for orthonormality of `vectors`.
    pub fn from_parts(field: Field, values: Vec<f64>, vectors: CMatrix) -> Result<Self> {
        let p = values.len();
        if vectors.nrows() != p || vectors.ncols() != p || p == 0 {
            return Err(Error::NotSquare {
                rows: vectors.nrows(),
                cols: vectors.ncols(),
            });
        }
        if let Some(index) = first_descent(&values) {
            return Err(Error::NotAscending { index });
        }
        Ok(Self { field, values, vectors })
    }

    pub fn identity(dim: usize, field: Field) -> Self {
        Self {
            field,
            values: alloc::vec![1.0; dim],
            vectors: CMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vectors(&self) -> &CMatrix {
        &self.vectors
    }

    /// Coordinates `U'v` of `v` in the eigenbasis.
    pub fn coordinates(&self, v: &CVector) -> Result<CVector> {
        check_len(self.dim(), v.len())?;
        Ok(self.vectors.ad_mul(v))
    }

    /// `U diag(d) U'`.
    pub fn compose(&self, d: &[f64]) -> Result<HermitianMatrix> {
        check_len(self.dim(), d.len())?;
        let mut scaled = self.vectors.clone();
        for (j, &dj) in d.iter().enumerate() {
            scaled.column_mut(j).scale_mut(dj);
        }
        let m = scaled * self.vectors.adjoint();
        Ok(HermitianMatrix::from_trusted(self.field, hermitian_part(m)))
    }

    /// `U diag(lambda) U'`.
    pub fn reconstruct(&self) -> HermitianMatrix {
        self.compose(&self.values).expect("lengths agree by construction")
    }
}

fn hermitian_part(m: CMatrix) -> CMatrix {
    (&m + m.adjoint()).scale(0.5)
}

fn first_descent(values: &[f64]) -> Option<usize> {
    values.windows(2).position(|w| !(w[0] <= w[1])).map(|i| i + 1)
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}

/// Iteration cap handed to the implicit QR sweep.
pub fn eig_iteration_cap(dim: usize) -> usize {
    100 * dim + 1000
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues in ascending order.
///
/// Output is a deterministic function of the input bits. Within a repeated
/// eigenvalue the basis is whatever the solver produced.
pub fn eig_hermitian(m: &HermitianMatrix) -> Result<EigenSystem> {
    let p = m.dim();
    let cap = eig_iteration_cap(p);
    let (values, vectors) = match m.field() {
        Field::Real => {
            let real = m.as_matrix().map(|z| z.re);
            let eig = SymmetricEigen::try_new(real, f64::EPSILON, cap)
                .ok_or(Error::EigenNonConvergence { max_iterations: cap })?;
            (eig.eigenvalues, eig.eigenvectors.map(|x| Complex64::new(x, 0.0)))
        }
        Field::Complex => {
            let eig = SymmetricEigen::try_new(m.as_matrix().clone(), f64::EPSILON, cap)
                .ok_or(Error::EigenNonConvergence { max_iterations: cap })?;
            (eig.eigenvalues, eig.eigenvectors)
        }
    };

    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let sorted_values: Vec<f64> = order.iter().map(|&k| values[k]).collect();
    let mut sorted_vectors = CMatrix::zeros(p, p);
    for (dst, &src) in order.iter().enumerate() {
        sorted_vectors.set_column(dst, &vectors.column(src));
    }
    Ok(EigenSystem {
        field: m.field(),
        values: sorted_values,
        vectors: sorted_vectors,
    })
}

/// Principal square root of a positive semidefinite matrix.
///
/// Eigenvalues down to `-1e-12 * lambda_max` are clamped to zero; anything
/// more negative is rejected.
pub fn sqrt_psd(m: &HermitianMatrix) -> Result<HermitianMatrix> {
    let eig = eig_hermitian(m)?;
    let lambda_max = eig.values.last().copied().unwrap_or(0.0).max(0.0);
    let floor = -PSD_TOLERANCE * lambda_max;
    let mut roots = Vec::with_capacity(eig.dim());
    for (index, &value) in eig.values.iter().enumerate() {
        if value < floor {
            return Err(Error::NotPositiveSemidefinite { index, value, floor });
        }
        roots.push(value.max(0.0).sqrt());
    }
    eig.compose(&roots)
}

/// `v' m v` for Hermitian `m`; the imaginary rounding residue is dropped.
pub fn quad_form(v: &CVector, m: &HermitianMatrix) -> Result<f64> {
    check_len(m.dim(), v.len())?;
    Ok(v.dotc(&(m.as_matrix() * v)).re)
}

/// `v' U diag(1/d) U' v` without forming the inverse.
pub fn inv_quad_form(v: &CVector, e: &EigenSystem, d: &[f64]) -> Result<f64> {
    check_len(e.dim(), d.len())?;
    check_positive(d)?;
    let c = e.coordinates(v)?;
    Ok(c.iter().zip(d).map(|(cj, dj)| cj.norm_sqr() / dj).sum())
}

pub(crate) fn check_positive(d: &[f64]) -> Result<()> {
    match d.iter().position(|&x| !(x > 0.0)) {
        Some(index) => Err(Error::NonPositiveDiagonal { index, value: d[index] }),
        None => Ok(()),
    }
}
