//! Mean coherent energy as an arrow of time for unitary processes.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{check_beta, check_dim, DensityMatrix, Hamiltonian, UnitaryOperator};

/// `<C> = tr[U rho0 U^dagger H] - tr[rho0 H]`.
pub fn mean_c_trace(rho0: &DensityMatrix, u: &UnitaryOperator, h: &Hamiltonian) -> Result<f64> {
    check_dim(rho0.dim(), u.dim())?;
    check_dim(rho0.dim(), h.dim())?;
    let umat = u.matrix();
    let evolved = umat.mul(rho0.matrix()).mul(&umat.dagger());
    Ok(evolved.mul(h.matrix()).trace().re - rho0.matrix().mul(h.matrix()).trace().re)
}

/// Qubit closed form `sin^2(theta/2) tanh(beta/2)`.
pub fn mean_c_closed_form(theta: f64, beta: f64) -> Result<f64> {
    if !(0.0..=PI).contains(&theta) {
        return Err(Error::AngleOutOfRange {
            name: "theta",
            value: theta,
            min: 0.0,
            max: PI,
        });
    }
    check_beta(beta)?;
    Ok((theta / 2.0).sin().powi(2) * (beta / 2.0).tanh())
}

/// z-component of the Bloch vector after a y rotation by `theta`.
pub fn bloch_z_after(theta: f64, az0: f64) -> f64 {
    az0 * theta.cos()
}

/// `<C>` over a `(theta, beta)` grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArrowSweep {
    pub thetas: Vec<f64>,
    pub betas: Vec<f64>,
    /// Row-major, `surface[i * betas.len() + j]` at `(thetas[i], betas[j])`.
    pub surface: Vec<f64>,
    pub min: f64,
}

impl ArrowSweep {
    pub fn at(&self, theta_index: usize, beta_index: usize) -> f64 {
        self.surface[theta_index * self.betas.len() + beta_index]
    }

    pub fn is_nonnegative(&self, tol: f64) -> bool {
        self.min >= -tol
    }

    /// Writes `theta,beta,mean_C` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(["theta", "beta", "mean_C"])?;
        for (i, theta) in self.thetas.iter().enumerate() {
            for (j, beta) in self.betas.iter().enumerate() {
                w.serialize((theta, beta, self.at(i, j)))?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

pub fn arrow_sweep(thetas: &[f64], betas: &[f64]) -> Result<ArrowSweep> {
    if thetas.is_empty() || betas.is_empty() {
        return Err(Error::InvalidParameter(
            "sweep grids must be nonempty".into(),
        ));
    }
    let mut surface = Vec::with_capacity(thetas.len() * betas.len());
    for &theta in thetas {
        for &beta in betas {
            surface.push(mean_c_closed_form(theta, beta)?);
        }
    }
    let min = surface.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -1e-10 {
        log::error!("arrow sweep produced a negative mean coherent energy {min:e}");
    }
    Ok(ArrowSweep {
        thetas: thetas.to_vec(),
        betas: betas.to_vec(),
        surface,
        min,
    })
}

/// `n` evenly spaced points from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    stop
                } else {
                    start + (stop - start) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}
