//! Dense complex matrices for small Hilbert spaces.
//!
//! [`ComplexMatrix`] is a thin square-matrix wrapper over `nalgebra`, with
//! tolerance-aware comparisons and a Hermitian eigensolver that returns
//! eigenpairs in a reproducible order and phase.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Validation tolerance for Hermiticity, unitarity and unit trace.
pub const VALIDATION_TOL: f64 = 1e-9;
/// Tolerance for reconstruction identities.
pub const RECONSTRUCTION_TOL: f64 = 1e-12;
/// Eigenvalues closer than this are treated as one degenerate level.
pub const DEGENERACY_TOL: f64 = 1e-9;
/// Largest supported dimension.
pub const MAX_DIM: usize = 64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Square complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix(DMatrix<Complex64>);

/// Column vector of complex amplitudes.
pub type ComplexVector = DVector<Complex64>;

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::from_element(dim, dim, ZERO))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    /// Real diagonal matrix.
    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.0[(i, i)] = Complex64::new(d, 0.0);
        }
        m
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_major(dim: usize, entries: &[Complex64]) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::MalformedMatrix(format!(
                "dimension {dim} outside 1..={MAX_DIM}"
            )));
        }
        if entries.len() != dim * dim {
            return Err(Error::MalformedMatrix(format!(
                "expected {} entries for dim {dim}, found {}",
                dim * dim,
                entries.len()
            )));
        }
        if entries
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::MalformedMatrix("non-finite entry".into()));
        }
        Ok(Self(DMatrix::from_row_slice(dim, dim, entries)))
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[ComplexVector]) -> Self {
        Self(DMatrix::from_columns(columns))
    }

    pub fn from_nalgebra(m: DMatrix<Complex64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::MalformedMatrix(format!(
                "matrix is {}x{}, not square",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(Self(m))
    }

    pub fn as_nalgebra(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.0[(row, col)]
    }

    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.0[(row, col)] = value;
    }

    pub fn column(&self, col: usize) -> ComplexVector {
        self.0.column(col).into_owned()
    }

    pub fn dagger(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        Self(&self.0 * &rhs.0)
    }

    pub fn add(&self, rhs: &Self) -> Self {
        Self(&self.0 + &rhs.0)
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        Self(&self.0 - &rhs.0)
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self(&self.0 * factor)
    }

    pub fn apply(&self, v: &ComplexVector) -> ComplexVector {
        &self.0 * v
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    /// Kronecker product `self ⊗ rhs`.
    pub fn kron(&self, rhs: &Self) -> Self {
        Self(self.0.kronecker(&rhs.0))
    }

    /// Commutator `[self, rhs]`.
    pub fn commutator(&self, rhs: &Self) -> Self {
        self.mul(rhs).sub(&rhs.mul(self))
    }

    /// Largest entrywise modulus.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise modulus of `self - rhs`.
    pub fn max_abs_diff(&self, rhs: &Self) -> f64 {
        debug_assert_eq!(self.dim(), rhs.dim());
        self.0
            .iter()
            .zip(rhs.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, rhs: &Self, tol: f64) -> bool {
        self.dim() == rhs.dim() && self.max_abs_diff(rhs) <= tol
    }

    /// `max |M - M^dagger|`.
    pub fn hermiticity_defect(&self) -> f64 {
        self.max_abs_diff(&self.dagger())
    }

    /// `max |M^dagger M - 1|`.
    pub fn unitarity_defect(&self) -> f64 {
        self.dagger()
            .mul(self)
            .max_abs_diff(&Self::identity(self.dim()))
    }

    /// Row-major copy of the entries.
    pub fn row_major(&self) -> Vec<Complex64> {
        let d = self.dim();
        (0..d)
            .flat_map(|r| (0..d).map(move |c| (r, c)))
            .map(|(r, c)| self.0[(r, c)])
            .collect()
    }

    /// Matrix with each entry replaced by its squared modulus.
    pub fn squared_moduli(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        (0..d)
            .map(|r| (0..d).map(|c| self.0[(r, c)].norm_sqr()).collect())
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&MatrixRepr::from(self)).expect("matrix serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let repr: MatrixRepr = serde_json::from_str(text)?;
        Self::try_from(repr)
    }
}

/// Serialized matrix form: `dim` plus row-major `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixRepr {
    pub dim: usize,
    pub entries: Vec<[f64; 2]>,
}

impl From<&ComplexMatrix> for MatrixRepr {
    fn from(m: &ComplexMatrix) -> Self {
        Self {
            dim: m.dim(),
            entries: m.row_major().iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

impl TryFrom<MatrixRepr> for ComplexMatrix {
    type Error = Error;

    fn try_from(repr: MatrixRepr) -> Result<Self> {
        let entries: Vec<Complex64> = repr
            .entries
            .iter()
            .map(|[re, im]| Complex64::new(*re, *im))
            .collect();
        Self::from_row_major(repr.dim, &entries)
    }
}

impl Serialize for ComplexMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixRepr::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = MatrixRepr::deserialize(d)?;
        ComplexMatrix::try_from(repr).map_err(serde::de::Error::custom)
    }
}

/// Eigenpairs of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    /// Ascending.
    pub values: Vec<f64>,
    /// Orthonormal, `vectors[i]` belongs to `values[i]`.
    pub vectors: Vec<ComplexVector>,
}

impl EigenDecomposition {
    /// `sum_i lambda_i v_i v_i^dagger`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        spectral_sum(&self.values, &self.vectors)
    }

    /// Matrix whose columns are the eigenvectors.
    pub fn basis(&self) -> ComplexMatrix {
        ComplexMatrix::from_columns(&self.vectors)
    }

    /// Index ranges of eigenvalues that agree within [`DEGENERACY_TOL`].
    pub fn degenerate_groups(&self) -> Vec<std::ops::Range<usize>> {
        group_levels(&self.values, DEGENERACY_TOL)
    }
}

/// `sum_i w_i v_i v_i^dagger`.
pub fn spectral_sum(weights: &[f64], vectors: &[ComplexVector]) -> ComplexMatrix {
    let d = vectors.first().map_or(0, |v| v.len());
    let mut acc = DMatrix::from_element(d, d, ZERO);
    for (w, v) in weights.iter().zip(vectors) {
        acc += (v * v.adjoint()) * Complex64::new(*w, 0.0);
    }
    ComplexMatrix(acc)
}

/// Splits an ascending list into runs whose consecutive gaps are below `tol`.
pub fn group_levels(sorted: &[f64], tol: f64) -> Vec<std::ops::Range<usize>> {
    let mut groups = Vec::new();
    let mut start = 0;
    for i in 1..=sorted.len() {
        if i == sorted.len() || sorted[i] - sorted[i - 1] >= tol {
            groups.push(start..i);
            start = i;
        }
    }
    groups
}

/// Hermitian eigensolver.
///
/// Eigenvalues come back ascending. Each eigenvector is rotated so that its
/// largest-modulus entry is real and positive; ties in modulus go to the
/// lowest index.
pub fn eig_hermitian(m: &ComplexMatrix) -> Result<EigenDecomposition> {
    let deviation = m.hermiticity_defect();
    if deviation > VALIDATION_TOL {
        return Err(Error::NonHermitianInput { deviation });
    }
    let d = m.dim();
    // Symmetrize so the solver sees an exactly Hermitian input.
    let herm = (&m.0 + m.0.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::try_new(herm, f64::EPSILON, 0)
        .ok_or_else(|| Error::MalformedMatrix("eigensolver did not converge".into()))?;

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| {
            let mut v = eig.eigenvectors.column(i).into_owned();
            let norm = v.norm();
            v /= Complex64::new(norm, 0.0);
            fix_phase(&mut v);
            v
        })
        .collect();
    Ok(EigenDecomposition { values, vectors })
}

/// Rotates `v` so its largest-modulus entry is real and positive.
pub fn fix_phase(v: &mut ComplexVector) {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let pivot = v
        .iter()
        .position(|z| z.norm() >= max * (1.0 - 1e-12))
        .expect("some entry attains the maximum");
    let phase = v[pivot] / v[pivot].norm();
    *v *= phase.conj();
    v[pivot] = Complex64::new(v[pivot].re, 0.0);
}

/// Matrix function `f(H)` of a Hermitian matrix from its eigenpairs.
pub fn spectral_function(eig: &EigenDecomposition, f: impl Fn(f64) -> Complex64) -> ComplexMatrix {
    let d = eig.vectors.first().map_or(0, |v| v.len());
    let mut acc = DMatrix::from_element(d, d, ZERO);
    for (&lambda, v) in eig.values.iter().zip(&eig.vectors) {
        acc += (v * v.adjoint()) * f(lambda);
    }
    ComplexMatrix(acc)
}

/// Inner product `<a|b>`.
pub fn inner(a: &ComplexVector, b: &ComplexVector) -> Complex64 {
    a.dotc(b)
}
