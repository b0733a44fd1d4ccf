//! Validated operators and qubit maps.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    eig_hermitian, spectral_sum, ComplexMatrix, ComplexVector, EigenDecomposition, VALIDATION_TOL,
};

/// Hermitian operator together with its spectral decomposition.
#[derive(Clone, Debug)]
pub struct Hamiltonian {
    matrix: ComplexMatrix,
    eigen: EigenDecomposition,
}

impl Hamiltonian {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let eigen = eig_hermitian(&matrix)?;
        Ok(Self { matrix, eigen })
    }

    /// Diagonal Hamiltonian with the given levels (need not be sorted).
    pub fn diagonal(levels: &[f64]) -> Result<Self> {
        if levels.is_empty() || levels.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidParameter(
                "energy levels must be finite".into(),
            ));
        }
        Self::new(ComplexMatrix::from_real_diagonal(levels))
    }

    /// Two-level system with `E0 = 0`, `E1 = 1`.
    pub fn qubit() -> Self {
        Self::diagonal(&[0.0, 1.0]).expect("valid levels")
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Ascending energies.
    pub fn energies(&self) -> &[f64] {
        &self.eigen.values
    }

    pub fn eigenvectors(&self) -> &[ComplexVector] {
        &self.eigen.vectors
    }

    pub fn eigen(&self) -> &EigenDecomposition {
        &self.eigen
    }
}

/// Positive semi-definite, unit-trace Hermitian operator.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    populations: Vec<f64>,
    basis: Vec<ComplexVector>,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let eig = eig_hermitian(&matrix)?;
        let trace: f64 = eig.values.iter().sum();
        if (trace - 1.0).abs() > VALIDATION_TOL {
            return Err(Error::InvalidState(format!("trace {trace} differs from 1")));
        }
        if let Some(&neg) = eig.values.iter().find(|&&p| p < -VALIDATION_TOL) {
            return Err(Error::InvalidState(format!("negative eigenvalue {neg:e}")));
        }
        let populations = eig.values.iter().map(|p| p.clamp(0.0, 1.0)).collect();
        Ok(Self {
            matrix,
            populations,
            basis: eig.vectors,
        })
    }

    /// State built directly from eigenvalues and an orthonormal eigenbasis.
    pub fn from_spectral(populations: Vec<f64>, basis: Vec<ComplexVector>) -> Result<Self> {
        if populations.len() != basis.len() || populations.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: populations.len(),
                found: basis.len(),
            });
        }
        let total: f64 = populations.iter().sum();
        if (total - 1.0).abs() > VALIDATION_TOL
            || populations.iter().any(|&p| p.is_nan() || p < -VALIDATION_TOL)
        {
            return Err(Error::InvalidState(format!(
                "populations {populations:?} are not a probability vector"
            )));
        }
        let frame = ComplexMatrix::from_columns(&basis);
        let defect = frame.unitarity_defect();
        if defect > VALIDATION_TOL {
            return Err(Error::NotUnitary { deviation: defect });
        }
        let populations: Vec<f64> = populations.iter().map(|p| p.clamp(0.0, 1.0)).collect();
        let matrix = spectral_sum(&populations, &basis);
        Ok(Self {
            matrix,
            populations,
            basis,
        })
    }

    /// Pure state `|psi><psi|`.
    pub fn pure(psi: &ComplexVector) -> Result<Self> {
        let norm = psi.norm();
        if (norm - 1.0).abs() > VALIDATION_TOL {
            return Err(Error::InvalidState(format!("state vector norm {norm}")));
        }
        let m = ComplexMatrix::from_nalgebra(psi * psi.adjoint())?;
        Self::new(m)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Eigenvalues, in the order of [`DensityMatrix::basis`].
    pub fn populations(&self) -> &[f64] {
        &self.populations
    }

    pub fn basis(&self) -> &[ComplexVector] {
        &self.basis
    }

    /// `U rho U^dagger`.
    pub fn evolve(&self, u: &UnitaryOperator) -> Result<Self> {
        check_dim(self.dim(), u.dim())?;
        let basis = self.basis.iter().map(|v| u.matrix().apply(v)).collect();
        Self::from_spectral(self.populations.clone(), basis)
    }

    /// `tr(rho A)`, real part.
    pub fn expectation(&self, observable: &ComplexMatrix) -> f64 {
        self.matrix.mul(observable).trace().re
    }

    pub fn purity(&self) -> f64 {
        self.populations.iter().map(|p| p * p).sum()
    }
}

/// Unitary matrix.
#[derive(Clone, Debug)]
pub struct UnitaryOperator {
    matrix: ComplexMatrix,
}

impl UnitaryOperator {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let deviation = matrix.unitarity_defect();
        if deviation > VALIDATION_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(Self { matrix })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(dim),
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Time-reversal partner `U^dagger = U^-1`.
    pub fn inverse(&self) -> Self {
        Self {
            matrix: self.matrix.dagger(),
        }
    }

    /// `|<m|U|n>|^2` in the standard basis, indexed `[m][n]`.
    pub fn transition_probabilities(&self) -> Vec<Vec<f64>> {
        self.matrix.squared_moduli()
    }

    pub fn compose(&self, after: &UnitaryOperator) -> Result<Self> {
        check_dim(self.dim(), after.dim())?;
        Ok(Self {
            matrix: after.matrix.mul(&self.matrix),
        })
    }
}

/// Real Bloch vector in the convention `rho = (1 + a.sigma) / 2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub ax: f64,
    pub ay: f64,
    pub az: f64,
}

impl BlochVector {
    pub fn new(ax: f64, ay: f64, az: f64) -> Result<Self> {
        let v = Self { ax, ay, az };
        let norm = v.norm();
        if norm.is_nan() || norm > 1.0 + VALIDATION_TOL {
            return Err(Error::InvalidState(format!(
                "Bloch vector length {} exceeds 1",
                v.norm()
            )));
        }
        Ok(v)
    }

    pub fn norm(&self) -> f64 {
        (self.ax * self.ax + self.ay * self.ay + self.az * self.az).sqrt()
    }

    pub fn is_pure(&self) -> bool {
        (self.norm() - 1.0).abs() <= VALIDATION_TOL
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

pub(crate) fn check_beta(beta: f64) -> Result<()> {
    if !beta.is_finite() || beta < 0.0 {
        return Err(Error::InvalidBeta(beta));
    }
    Ok(())
}

/// Gibbs populations `exp(-beta E_n) / Z`, in the order of `energies`.
pub fn gibbs_weights(energies: &[f64], beta: f64) -> Result<Vec<f64>> {
    check_beta(beta)?;
    let ground = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let boltzmann: Vec<f64> = energies
        .iter()
        .map(|e| (-beta * (e - ground)).exp())
        .collect();
    let z: f64 = boltzmann.iter().sum();
    Ok(boltzmann.into_iter().map(|w| w / z).collect())
}

/// Thermal state `exp(-beta H) / Z`, diagonal in the eigenbasis of `h`.
pub fn thermal_state(h: &Hamiltonian, beta: f64) -> Result<DensityMatrix> {
    let populations = gibbs_weights(h.energies(), beta)?;
    DensityMatrix::from_spectral(populations, h.eigenvectors().to_vec())
}

/// Partition function `tr exp(-beta H)`.
pub fn partition_function(h: &Hamiltonian, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    Ok(h.energies().iter().map(|e| (-beta * e).exp()).sum())
}

/// Qubit rotation: about y by `theta`, then about z by `phi`.
pub fn rotation_unitary(theta: f64, phi: f64) -> Result<UnitaryOperator> {
    if !(0.0..=PI).contains(&theta) {
        return Err(Error::AngleOutOfRange {
            name: "theta",
            value: theta,
            min: 0.0,
            max: PI,
        });
    }
    if !(0.0..2.0 * PI).contains(&phi) {
        return Err(Error::AngleOutOfRange {
            name: "phi",
            value: phi,
            min: 0.0,
            max: 2.0 * PI,
        });
    }
    let (s, c) = (theta / 2.0).sin_cos();
    let minus = Complex64::from_polar(1.0, -phi / 2.0);
    let plus = Complex64::from_polar(1.0, phi / 2.0);
    let matrix = ComplexMatrix::from_row_major(2, &[minus * c, -minus * s, plus * s, plus * c])?;
    UnitaryOperator::new(matrix)
}

/// Half-wave-plate Jones matrix with fast axis at `alpha` from horizontal.
pub fn hwp_jones(alpha: f64) -> UnitaryOperator {
    let alpha = alpha.rem_euclid(PI);
    let (s, c) = (2.0 * alpha).sin_cos();
    let r = |x: f64| Complex64::new(x, 0.0);
    UnitaryOperator {
        matrix: ComplexMatrix::from_row_major(2, &[r(c), r(s), r(s), r(-c)]).expect("2x2 entries"),
    }
}

/// Waveplate axis that reproduces the transition statistics of a y rotation by `theta`.
pub fn hwp_angle_for_rotation(theta: f64) -> f64 {
    theta / 4.0
}

/// Axis of the time-reversed waveplate setting.
pub fn hwp_reversed_angle(alpha: f64) -> f64 {
    alpha + FRAC_PI_2
}

pub fn pauli_x() -> ComplexMatrix {
    let z = Complex64::new(0.0, 0.0);
    let o = Complex64::new(1.0, 0.0);
    ComplexMatrix::from_row_major(2, &[z, o, o, z]).expect("2x2")
}

pub fn pauli_y() -> ComplexMatrix {
    let z = Complex64::new(0.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    ComplexMatrix::from_row_major(2, &[z, -i, i, z]).expect("2x2")
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_real_diagonal(&[1.0, -1.0])
}

/// Bloch vector `a_i = tr(rho sigma_i)` of a qubit state.
pub fn bloch_vector(rho: &DensityMatrix) -> Result<BlochVector> {
    check_dim(2, rho.dim())?;
    Ok(BlochVector {
        ax: rho.expectation(&pauli_x()),
        ay: rho.expectation(&pauli_y()),
        az: rho.expectation(&pauli_z()),
    })
}

/// Inverse of [`bloch_vector`].
pub fn bloch_to_state(a: &BlochVector) -> Result<DensityMatrix> {
    let a = BlochVector::new(a.ax, a.ay, a.az)?;
    let half = Complex64::new(0.5, 0.0);
    let m = ComplexMatrix::identity(2)
        .add(&pauli_x().scale(Complex64::new(a.ax, 0.0)))
        .add(&pauli_y().scale(Complex64::new(a.ay, 0.0)))
        .add(&pauli_z().scale(Complex64::new(a.az, 0.0)))
        .scale(half);
    DensityMatrix::new(m)
}

/// Haar-distributed unitary: Gram-Schmidt on a complex Gaussian matrix.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> UnitaryOperator {
    let mut columns: Vec<ComplexVector> = Vec::with_capacity(dim);
    while columns.len() < dim {
        let mut v = ComplexVector::from_fn(dim, |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        // Modified Gram-Schmidt, applied twice for stability.
        for _ in 0..2 {
            for q in &columns {
                let proj = q.dotc(&v);
                v -= q * proj;
            }
        }
        let norm = v.norm();
        if norm < 1e-8 {
            continue;
        }
        v /= Complex64::new(norm, 0.0);
        columns.push(v);
    }
    UnitaryOperator {
        matrix: ComplexMatrix::from_columns(&columns),
    }
}

/// Random Hermitian matrix with standard-normal entries (GUE up to scale).
pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(dim);
    for r in 0..dim {
        m.set(r, r, Complex64::new(rng.sample(StandardNormal), 0.0));
        for c in (r + 1)..dim {
            let z = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
            m.set(r, c, z);
            m.set(c, r, z.conj());
        }
    }
    m
}

/// Random ascending spectrum in `[0, span]` with distinct levels.
pub fn random_levels<R: Rng + ?Sized>(dim: usize, span: f64, rng: &mut R) -> Vec<f64> {
    let mut levels: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() * span).collect();
    levels.sort_by(f64::total_cmp);
    levels
}

/// Checks the reconstruction identity `H = sum_n E_n |n><n|`.
pub fn spectral_reconstruction_error(h: &Hamiltonian) -> f64 {
    h.eigen().reconstruct().max_abs_diff(h.matrix())
}
