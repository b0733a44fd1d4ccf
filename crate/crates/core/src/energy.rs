//! Work, heat and coherent energy along a sampled trajectory.
//!
//! With `H(t) = sum_n E_n |n><n|` and `rho(t) = sum_k rho_k |k><k|`, the
//! internal energy `U = sum_{n,k} E_n rho_k |<n|k>|^2` changes through the
//! levels (work), through the populations (heat) and through the overlaps
//! (coherent energy). Each contribution is integrated on the caller's grid
//! with second-order finite differences and the trapezoidal rule.
//!
//! Eigen-branches are followed between grid points by maximal eigenvector
//! overlap, so level crossings that the grid resolves are handled; crossings
//! it cannot resolve are reported as [`Error::EigenTrackingAmbiguous`].

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{group_levels, ComplexMatrix, ComplexVector, MatrixRepr, DEGENERACY_TOL};
use crate::quantum::{check_dim, DensityMatrix, Hamiltonian};

/// Matched overlaps below this make branch tracking ambiguous.
pub const MIN_TRACKING_OVERLAP: f64 = 0.5;

/// Hamiltonians and states sampled on a strictly increasing time grid.
#[derive(Clone, Debug)]
pub struct Trajectory {
    times: Vec<f64>,
    hamiltonians: Vec<Hamiltonian>,
    states: Vec<DensityMatrix>,
}

impl Trajectory {
    pub fn new(
        times: Vec<f64>,
        hamiltonians: Vec<Hamiltonian>,
        states: Vec<DensityMatrix>,
    ) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::InvalidTrajectory(format!(
                "need at least 2 grid points, got {}",
                times.len()
            )));
        }
        if hamiltonians.len() != times.len() || states.len() != times.len() {
            return Err(Error::InvalidTrajectory(format!(
                "{} times, {} Hamiltonians, {} states",
                times.len(),
                hamiltonians.len(),
                states.len()
            )));
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidTrajectory("non-finite time".into()));
        }
        if let Some(w) = times.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::InvalidTrajectory(format!(
                "times not strictly increasing at {} -> {}",
                w[0], w[1]
            )));
        }
        let dim = hamiltonians[0].dim();
        for (h, rho) in hamiltonians.iter().zip(&states) {
            check_dim(dim, h.dim())?;
            check_dim(dim, rho.dim())?;
        }
        Ok(Self {
            times,
            hamiltonians,
            states,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn hamiltonians(&self) -> &[Hamiltonian] {
        &self.hamiltonians
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    pub fn dim(&self) -> usize {
        self.hamiltonians[0].dim()
    }

    /// Number of time steps (grid points minus one).
    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: TrajectoryFile = serde_json::from_str(text)?;
        file.try_into()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&TrajectoryFile::from(self)).expect("trajectory serialization")
    }
}

/// On-disk trajectory: header plus one block per grid point.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryFile {
    pub dim: usize,
    /// Number of steps; `blocks.len() == steps + 1`.
    pub steps: usize,
    pub blocks: Vec<TrajectoryBlock>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryBlock {
    pub time: f64,
    pub hamiltonian: MatrixRepr,
    pub state: MatrixRepr,
}

impl TryFrom<TrajectoryFile> for Trajectory {
    type Error = Error;

    fn try_from(file: TrajectoryFile) -> Result<Self> {
        if file.blocks.len() != file.steps.saturating_add(1) {
            return Err(Error::InvalidTrajectory(format!(
                "header declares {} steps but {} blocks follow",
                file.steps,
                file.blocks.len()
            )));
        }
        let mut times = Vec::with_capacity(file.blocks.len());
        let mut hs = Vec::with_capacity(file.blocks.len());
        let mut states = Vec::with_capacity(file.blocks.len());
        for block in file.blocks {
            let h = ComplexMatrix::try_from(block.hamiltonian)?;
            let rho = ComplexMatrix::try_from(block.state)?;
            check_dim(file.dim, h.dim())?;
            check_dim(file.dim, rho.dim())?;
            times.push(block.time);
            hs.push(Hamiltonian::new(h)?);
            states.push(DensityMatrix::new(rho)?);
        }
        Trajectory::new(times, hs, states)
    }
}

impl From<&Trajectory> for TrajectoryFile {
    fn from(t: &Trajectory) -> Self {
        Self {
            dim: t.dim(),
            steps: t.steps(),
            blocks: t
                .times
                .iter()
                .zip(&t.hamiltonians)
                .zip(&t.states)
                .map(|((&time, h), rho)| TrajectoryBlock {
                    time,
                    hamiltonian: MatrixRepr::from(h.matrix()),
                    state: MatrixRepr::from(rho.matrix()),
                })
                .collect(),
        }
    }
}

/// Cumulative energy contributions on the trajectory grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub times: Vec<f64>,
    pub work: Vec<f64>,
    pub heat: Vec<f64>,
    pub coherent: Vec<f64>,
    /// `U(t) = tr(rho(t) H(t))`.
    pub internal: Vec<f64>,
}

impl EnergyLedger {
    /// `U(t) - U(0) - W(t) - Q(t) - C(t)` per grid point.
    pub fn residuals(&self) -> Vec<f64> {
        let u0 = self.internal[0];
        (0..self.times.len())
            .map(|i| self.internal[i] - u0 - self.work[i] - self.heat[i] - self.coherent[i])
            .collect()
    }

    /// Writes `time,U,W,Q,C,residual` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(["time", "U", "W", "Q", "C", "residual"])?;
        for (i, r) in self.residuals().into_iter().enumerate() {
            w.serialize((
                self.times[i],
                self.internal[i],
                self.work[i],
                self.heat[i],
                self.coherent[i],
                r,
            ))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Largest absolute first-law residual over the grid.
pub fn closure_report(ledger: &EnergyLedger) -> f64 {
    ledger
        .residuals()
        .into_iter()
        .map(f64::abs)
        .fold(0.0, f64::max)
}

/// `|<n|k>|^2` indexed `[n][k]`.
pub fn overlap_weights(h: &Hamiltonian, rho: &DensityMatrix) -> Result<Vec<Vec<f64>>> {
    check_dim(h.dim(), rho.dim())?;
    Ok(weights(h.eigenvectors(), rho.basis()))
}

fn weights(h_vectors: &[ComplexVector], rho_vectors: &[ComplexVector]) -> Vec<Vec<f64>> {
    h_vectors
        .iter()
        .map(|n| rho_vectors.iter().map(|k| n.dotc(k).norm_sqr()).collect())
        .collect()
}

/// Spectral data of `H` and `rho` at one grid point, with consistent branch labels.
#[derive(Clone, Debug)]
pub struct SpectralFrame {
    pub energies: Vec<f64>,
    pub h_vectors: Vec<ComplexVector>,
    pub populations: Vec<f64>,
    pub rho_vectors: Vec<ComplexVector>,
    pub internal_energy: f64,
}

/// Computes the ledger of a trajectory.
pub fn decompose(traj: &Trajectory) -> Result<EnergyLedger> {
    let times = traj.times();
    let mut frames: Vec<SpectralFrame> = Vec::with_capacity(times.len());
    for (i, (h, rho)) in traj.hamiltonians().iter().zip(traj.states()).enumerate() {
        let mut frame = SpectralFrame {
            energies: h.energies().to_vec(),
            h_vectors: h.eigenvectors().to_vec(),
            populations: rho.populations().to_vec(),
            rho_vectors: rho.basis().to_vec(),
            internal_energy: rho.expectation(h.matrix()),
        };
        if let Some(prev) = frames.last() {
            let (t0, t1) = (times[i - 1], times[i]);
            (frame.energies, frame.h_vectors) =
                track_branches(&prev.h_vectors, frame.energies, frame.h_vectors, (t0, t1))?;
            (frame.populations, frame.rho_vectors) = track_branches(
                &prev.rho_vectors,
                frame.populations,
                frame.rho_vectors,
                (t0, t1),
            )?;
        }
        frames.push(frame);
    }
    decompose_frames(times, &frames)
}

/// Ledger from pre-labelled spectral frames.
pub fn decompose_frames(times: &[f64], frames: &[SpectralFrame]) -> Result<EnergyLedger> {
    if times.len() != frames.len() || times.len() < 2 {
        return Err(Error::InvalidTrajectory(format!(
            "{} times for {} frames",
            times.len(),
            frames.len()
        )));
    }
    let d = frames[0].energies.len();
    let npts = times.len();

    let energies: Vec<Vec<f64>> = (0..d)
        .map(|n| frames.iter().map(|f| f.energies[n]).collect())
        .collect();
    let pops: Vec<Vec<f64>> = (0..d)
        .map(|k| frames.iter().map(|f| f.populations[k]).collect())
        .collect();
    let w: Vec<Vec<Vec<f64>>> = frames
        .iter()
        .map(|f| weights(&f.h_vectors, &f.rho_vectors))
        .collect();
    let w_series = |n: usize, k: usize| -> Vec<f64> { w.iter().map(|wt| wt[n][k]).collect() };

    let d_energies: Vec<Vec<f64>> = energies.iter().map(|s| derivative(times, s)).collect();
    let d_pops: Vec<Vec<f64>> = pops.iter().map(|s| derivative(times, s)).collect();

    let mut work_rate = vec![0.0; npts];
    let mut heat_rate = vec![0.0; npts];
    let mut coherent_rate = vec![0.0; npts];
    for n in 0..d {
        for k in 0..d {
            let d_w = derivative(times, &w_series(n, k));
            for t in 0..npts {
                let (e, p, wt) = (energies[n][t], pops[k][t], w[t][n][k]);
                work_rate[t] += p * wt * d_energies[n][t];
                heat_rate[t] += e * wt * d_pops[k][t];
                coherent_rate[t] += e * p * d_w[t];
            }
        }
    }

    Ok(EnergyLedger {
        times: times.to_vec(),
        work: cumulative_trapezoid(times, &work_rate),
        heat: cumulative_trapezoid(times, &heat_rate),
        coherent: cumulative_trapezoid(times, &coherent_rate),
        internal: frames.iter().map(|f| f.internal_energy).collect(),
    })
}

/// Second-order finite differences on a possibly nonuniform grid.
///
/// Centered three-point stencils inside, one-sided three-point stencils at
/// the ends. A two-point grid falls back to the single forward difference.
pub fn derivative(times: &[f64], values: &[f64]) -> Vec<f64> {
    let n = times.len();
    debug_assert_eq!(n, values.len());
    if n < 2 {
        return vec![0.0; n];
    }
    if n == 2 {
        let slope = (values[1] - values[0]) / (times[1] - times[0]);
        return vec![slope, slope];
    }
    let mut out = vec![0.0; n];
    {
        let (a, b) = (times[1] - times[0], times[2] - times[1]);
        out[0] = -(2.0 * a + b) / (a * (a + b)) * values[0] + (a + b) / (a * b) * values[1]
            - a / (b * (a + b)) * values[2];
    }
    for i in 1..n - 1 {
        let (a, b) = (times[i] - times[i - 1], times[i + 1] - times[i]);
        out[i] = -b / (a * (a + b)) * values[i - 1]
            + (b - a) / (a * b) * values[i]
            + a / (b * (a + b)) * values[i + 1];
    }
    {
        let (a, b) = (times[n - 1] - times[n - 2], times[n - 2] - times[n - 3]);
        out[n - 1] = (2.0 * a + b) / (a * (a + b)) * values[n - 1]
            - (a + b) / (a * b) * values[n - 2]
            + a / (b * (a + b)) * values[n - 3];
    }
    out
}

/// Running trapezoidal integral, starting at 0.
pub fn cumulative_trapezoid(times: &[f64], rate: &[f64]) -> Vec<f64> {
    let mut acc = Vec::with_capacity(times.len());
    let mut total = 0.0;
    acc.push(0.0);
    for i in 1..times.len() {
        total += 0.5 * (times[i] - times[i - 1]) * (rate[i] + rate[i - 1]);
        acc.push(total);
    }
    acc
}

/// Reorders `(values, vectors)` so branch `i` continues `prev[i]`.
fn track_branches(
    prev: &[ComplexVector],
    values: Vec<f64>,
    mut vectors: Vec<ComplexVector>,
    (t_prev, t_next): (f64, f64),
) -> Result<(Vec<f64>, Vec<ComplexVector>)> {
    let d = prev.len();
    align_degenerate_blocks(prev, &values, &mut vectors);

    let overlap: Vec<Vec<f64>> = prev
        .iter()
        .map(|p| vectors.iter().map(|v| p.dotc(v).norm_sqr()).collect())
        .collect();
    let mut pairs: Vec<(usize, usize)> = (0..d).flat_map(|i| (0..d).map(move |j| (i, j))).collect();
    pairs.sort_by(|a, b| {
        overlap[b.0][b.1]
            .total_cmp(&overlap[a.0][a.1])
            .then(a.cmp(b))
    });

    let mut assigned: Vec<Option<usize>> = vec![None; d];
    let mut taken = vec![false; d];
    for (i, j) in pairs {
        if assigned[i].is_none() && !taken[j] {
            assigned[i] = Some(j);
            taken[j] = true;
        }
    }
    let perm: Vec<usize> = assigned
        .into_iter()
        .map(|a| a.expect("greedy assignment is total"))
        .collect();
    debug_assert!(taken.iter().all(|&t| t));

    let worst = perm
        .iter()
        .enumerate()
        .map(|(i, &j)| overlap[i][j])
        .fold(f64::INFINITY, f64::min);
    if worst < MIN_TRACKING_OVERLAP {
        return Err(Error::EigenTrackingAmbiguous {
            t_prev,
            t_next,
            overlap: worst,
        });
    }
    let new_values = perm.iter().map(|&j| values[j]).collect();
    let new_vectors = perm.iter().map(|&j| vectors[j].clone()).collect();
    Ok((new_values, new_vectors))
}

/// Within each degenerate eigenspace, replaces the solver's arbitrary basis by
/// the projections of the previous frame's vectors (re-orthonormalized), so
/// that labels inside the block carry over between grid points.
fn align_degenerate_blocks(prev: &[ComplexVector], values: &[f64], vectors: &mut [ComplexVector]) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| values[i]).collect();

    for group in group_levels(&sorted, DEGENERACY_TOL) {
        if group.len() < 2 {
            continue;
        }
        let members: Vec<usize> = group.map(|g| order[g]).collect();
        let span: Vec<ComplexVector> = members.iter().map(|&m| vectors[m].clone()).collect();
        let project = |v: &ComplexVector| -> ComplexVector {
            span.iter()
                .fold(ComplexVector::zeros(v.len()), |acc, w| acc + w * w.dotc(v))
        };

        let mut candidates: Vec<(f64, ComplexVector)> = prev
            .iter()
            .map(|p| {
                let proj = project(p);
                (proj.norm_squared(), proj)
            })
            .collect();
        candidates.sort_by(|a, b| b.0.total_cmp(&a.0));

        let mut aligned: Vec<ComplexVector> = Vec::with_capacity(members.len());
        let fallback = span.iter().map(|w| (1.0, w.clone()));
        for (_, mut v) in candidates.into_iter().chain(fallback) {
            if aligned.len() == members.len() {
                break;
            }
            for q in &aligned {
                let c = q.dotc(&v);
                v -= q * c;
            }
            let norm = v.norm();
            if norm > 1e-6 {
                aligned.push(v.unscale(norm));
            }
        }
        for (&m, v) in members.iter().zip(aligned) {
            vectors[m] = v;
        }
    }
}
