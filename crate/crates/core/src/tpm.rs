//! Two-point-measurement statistics of coherent energy.
//!
//! A thermal state of `H` is measured in the energy basis, evolved by a
//! unitary, and measured again. The outcome difference `E_m - E_n` is the
//! coherent energy exchanged in that run. This module enumerates the exact
//! distribution of that difference, its characteristic function (as a sum
//! over the support and as a trace over operators), the integral identity
//! `<exp(-beta C)> = 1`, and the forward/backward ratio law.

use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{spectral_function, DEGENERACY_TOL, VALIDATION_TOL};
use crate::quantum::{check_beta, check_dim, gibbs_weights, Hamiltonian, UnitaryOperator};

/// Probabilities below this are too small for a meaningful log-ratio.
pub const POSITIVITY_FLOOR: f64 = 1e-300;

/// Discrete distribution of coherent-energy outcomes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TpmDistribution {
    pub beta: f64,
    /// Ascending, pairwise separated by at least the binning tolerance.
    pub support: Vec<f64>,
    pub probs: Vec<f64>,
    /// False when the two measurements used Hamiltonians with different spectra.
    pub spectrum_preserving: bool,
}

impl TpmDistribution {
    /// Bins `(value, weight)` pairs; zero weights are dropped.
    pub fn from_transitions(beta: f64, mut transitions: Vec<(f64, f64)>) -> Self {
        transitions.retain(|&(_, w)| w != 0.0);
        transitions.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut support: Vec<f64> = Vec::new();
        let mut probs: Vec<f64> = Vec::new();
        let mut anchor = f64::NEG_INFINITY;
        for (c, w) in transitions {
            if c - anchor < DEGENERACY_TOL {
                *probs.last_mut().expect("anchor set") += w;
            } else {
                anchor = c;
                support.push(c);
                probs.push(w);
            }
        }
        Self {
            beta,
            support,
            probs,
            spectrum_preserving: true,
        }
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Probability of the support point within binning tolerance of `c`, or 0.
    pub fn prob_at(&self, c: f64) -> f64 {
        self.index_of(c).map_or(0.0, |i| self.probs[i])
    }

    pub fn index_of(&self, c: f64) -> Option<usize> {
        self.support
            .iter()
            .enumerate()
            .filter(|(_, &s)| (s - c).abs() < 2.0 * DEGENERACY_TOL)
            .min_by(|a, b| (a.1 - c).abs().total_cmp(&(b.1 - c).abs()))
            .map(|(i, _)| i)
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.support.iter().copied().zip(self.probs.iter().copied())
    }
}

/// Options for [`tpm_distribution_with`].
#[derive(Clone, Copy, Debug)]
pub struct TpmOptions {
    /// Warn when the two measurement Hamiltonians have different spectra.
    pub spectrum_preserving_check: bool,
}

impl Default for TpmOptions {
    fn default() -> Self {
        Self {
            spectrum_preserving_check: true,
        }
    }
}

/// Coherent-energy distribution for a thermal start in `h` and process `u`.
pub fn tpm_distribution(
    h: &Hamiltonian,
    beta: f64,
    u: &UnitaryOperator,
) -> Result<TpmDistribution> {
    tpm_distribution_with(h, h, beta, u, &TpmOptions::default())
}

/// TPM distribution with distinct initial and final measurement Hamiltonians.
///
/// With equal spectra every outcome difference is coherent energy. When the
/// spectra differ the difference also contains work; the result is still
/// computed but `spectrum_preserving` is cleared.
pub fn tpm_distribution_with(
    initial: &Hamiltonian,
    fin: &Hamiltonian,
    beta: f64,
    u: &UnitaryOperator,
    opts: &TpmOptions,
) -> Result<TpmDistribution> {
    check_dim(initial.dim(), u.dim())?;
    check_dim(initial.dim(), fin.dim())?;
    check_beta(beta)?;
    let p = gibbs_weights(initial.energies(), beta)?;

    let mut transitions = Vec::with_capacity(u.dim() * u.dim());
    let umat = u.matrix();
    for (n, (e_n, ket_n)) in initial
        .energies()
        .iter()
        .zip(initial.eigenvectors())
        .enumerate()
    {
        let evolved = umat.apply(ket_n);
        for (e_m, ket_m) in fin.energies().iter().zip(fin.eigenvectors()) {
            let amp = ket_m.dotc(&evolved);
            transitions.push((e_m - e_n, p[n] * amp.norm_sqr()));
        }
    }
    let mut dist = TpmDistribution::from_transitions(beta, transitions);

    let same_spectrum = initial
        .energies()
        .iter()
        .zip(fin.energies())
        .all(|(a, b)| (a - b).abs() <= VALIDATION_TOL);
    if !same_spectrum {
        dist.spectrum_preserving = false;
        if opts.spectrum_preserving_check {
            log::warn!(
                "measurement Hamiltonians have different spectra; \
                 outcome differences include work, not only coherent energy"
            );
        }
    }
    Ok(dist)
}

/// `chi(q) = sum_i p_i exp(i q C_i)`.
pub fn characteristic_function(dist: &TpmDistribution, q: Complex64) -> Complex64 {
    let i = Complex64::new(0.0, 1.0);
    dist.iter().map(|(c, p)| (i * q * c).exp() * p).sum()
}

/// `chi(q) = tr[U^dagger exp(iqH) U exp(-iqH) rho_0]` with `rho_0` thermal.
pub fn characteristic_function_trace(
    h: &Hamiltonian,
    beta: f64,
    u: &UnitaryOperator,
    q: Complex64,
) -> Result<Complex64> {
    check_dim(h.dim(), u.dim())?;
    check_beta(beta)?;
    let i = Complex64::new(0.0, 1.0);
    // exp(-iqH) and rho_0 commute; fold them into one spectral function so
    // that q = i beta does not multiply exp(+beta H) into exp(-beta H).
    // Energies are measured from the ground level, which cancels in the trace.
    let e0 = h.energies()[0];
    let z: f64 = h.energies().iter().map(|e| (-beta * (e - e0)).exp()).sum();
    let forward = spectral_function(h.eigen(), |e| (i * q * (e - e0)).exp());
    let backward_rho = spectral_function(h.eigen(), |e| (-(i * q + beta) * (e - e0)).exp() / z);
    let umat = u.matrix();
    let product = umat.dagger().mul(&forward).mul(umat).mul(&backward_rho);
    Ok(product.trace())
}

/// `<exp(-beta C)>` over the distribution.
pub fn ift_value(dist: &TpmDistribution) -> f64 {
    dist.iter().map(|(c, p)| p * (-dist.beta * c).exp()).sum()
}

/// Distribution of the time-reversed protocol: thermal start, process `U^dagger`.
pub fn backward_distribution(
    h: &Hamiltonian,
    beta: f64,
    u: &UnitaryOperator,
) -> Result<TpmDistribution> {
    tpm_distribution(h, beta, &u.inverse())
}

/// `<C>`.
pub fn mean_coherent_energy(dist: &TpmDistribution) -> f64 {
    dist.iter().map(|(c, p)| p * c).sum()
}

/// One row of a detailed-fluctuation check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DftRow {
    pub c: f64,
    pub p_forward: f64,
    /// Backward probability of `-c`.
    pub p_backward_neg: f64,
    pub log_ratio: Option<f64>,
    pub beta_c: f64,
    pub residual: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DftReport {
    pub beta: f64,
    pub rows: Vec<DftRow>,
}

impl DftReport {
    /// Largest `|residual|` over defined rows (0 when none are defined).
    pub fn max_abs_residual(&self) -> f64 {
        self.rows
            .iter()
            .filter_map(|r| r.residual)
            .map(f64::abs)
            .fold(0.0, f64::max)
    }

    pub fn row(&self, c: f64) -> Option<&DftRow> {
        self.rows
            .iter()
            .find(|r| (r.c - c).abs() < 2.0 * DEGENERACY_TOL)
    }
}

/// Pairs `P(C)` with `P~(-C)` and reports `ln P(C) - ln P~(-C) - beta C`.
pub fn dft_report(forward: &TpmDistribution, backward: &TpmDistribution) -> Result<DftReport> {
    if (forward.beta - backward.beta).abs() > VALIDATION_TOL {
        return Err(Error::MismatchedProtocol {
            forward: forward.beta,
            backward: backward.beta,
        });
    }
    let beta = forward.beta;
    let mut cs: Vec<f64> = forward.support.clone();
    for &b in &backward.support {
        if forward.index_of(-b).is_none() {
            cs.push(-b);
        }
    }
    cs.sort_by(f64::total_cmp);

    let rows = cs
        .into_iter()
        .map(|c| {
            let pf = forward.prob_at(c);
            let pb = backward.prob_at(-c);
            let defined = pf >= POSITIVITY_FLOOR && pb >= POSITIVITY_FLOOR;
            let log_ratio = defined.then(|| pf.ln() - pb.ln());
            DftRow {
                c,
                p_forward: pf,
                p_backward_neg: pb,
                log_ratio,
                // + 0.0 turns -0 into 0.
                beta_c: beta * c + 0.0,
                residual: log_ratio.map(|lr| lr - beta * c + 0.0),
            }
        })
        .collect();
    Ok(DftReport { beta, rows })
}

/// Writes `C,prob` rows.
pub fn write_distribution_csv<W: Write>(dist: &TpmDistribution, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(["C", "prob"])?;
    for (c, p) in dist.iter() {
        w.serialize((c, p))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `C,prob` rows back. Lines starting with `#` are ignored.
pub fn read_distribution_csv<R: Read>(input: R, beta: f64) -> Result<TpmDistribution> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(input);
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["C", "prob"] {
        return Err(Error::InvalidParameter(format!(
            "unexpected distribution header {headers:?}"
        )));
    }
    let mut support = Vec::new();
    let mut probs = Vec::new();
    for record in r.records() {
        let record = record?;
        let parse = |i: usize| -> Result<f64> {
            record
                .get(i)
                .and_then(|s| s.parse::<f64>().ok())
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::InvalidParameter(format!("bad field {i} in {record:?}")))
        };
        support.push(parse(0)?);
        probs.push(parse(1)?);
    }
    Ok(TpmDistribution {
        beta,
        support,
        probs,
        spectrum_preserving: true,
    })
}

/// Writes `C,P_fwd,P_bwd_neg,log_ratio,beta_C,residual`; undefined fields are empty.
pub fn write_dft_csv<W: Write>(report: &DftReport, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(["C", "P_fwd", "P_bwd_neg", "log_ratio", "beta_C", "residual"])?;
    for row in &report.rows {
        w.serialize((
            row.c,
            row.p_forward,
            row.p_backward_neg,
            row.log_ratio,
            row.beta_c,
            row.residual,
        ))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{haar_unitary, rotation_unitary};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn qubit_closed_form(theta: f64, beta: f64) -> (f64, f64, f64) {
        let p0 = 1.0 / (1.0 + (-beta).exp());
        let p1 = 1.0 - p0;
        let s2 = (theta / 2.0).sin().powi(2);
        let c2 = (theta / 2.0).cos().powi(2);
        (p1 * s2, c2, p0 * s2)
    }

    #[test]
    fn identity_process_has_single_outcome() {
        let h = Hamiltonian::qubit();
        let dist = tpm_distribution(&h, 1.0, &UnitaryOperator::identity(2)).unwrap();
        assert_eq!(dist.support, vec![0.0]);
        assert_eq!(dist.probs, vec![1.0]);
        assert_eq!(mean_coherent_energy(&dist), 0.0);
        let back = backward_distribution(&h, 1.0, &UnitaryOperator::identity(2)).unwrap();
        assert_eq!(back, dist);
    }

    #[test]
    fn qubit_rotation_matches_closed_forms() {
        let h = Hamiltonian::qubit();
        let (theta, beta) = (1.2, 0.8);
        let dist = tpm_distribution(&h, beta, &rotation_unitary(theta, 0.3).unwrap()).unwrap();
        let (pm, p0, pp) = qubit_closed_form(theta, beta);
        assert_eq!(dist.support, vec![-1.0, 0.0, 1.0]);
        assert!((dist.probs[0] - pm).abs() < 1e-15);
        assert!((dist.probs[1] - p0).abs() < 1e-15);
        assert!((dist.probs[2] - pp).abs() < 1e-15);
    }

    #[test]
    fn mean_at_figure_angle() {
        let theta = 86.6f64.to_radians();
        let dist = tpm_distribution(
            &Hamiltonian::qubit(),
            2.0,
            &rotation_unitary(theta, 0.0).unwrap(),
        )
        .unwrap();
        // sin^2(43.3 deg) * tanh(1)
        assert!((mean_coherent_energy(&dist) - 0.35822).abs() < 1e-5);
    }

    #[test]
    fn ift_is_trivial_at_infinite_temperature() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = Hamiltonian::diagonal(&[0.0, 0.4, 1.7]).unwrap();
        let dist = tpm_distribution(&h, 0.0, &haar_unitary(3, &mut rng)).unwrap();
        assert!((ift_value(&dist) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn characteristic_function_at_zero_and_i_beta() {
        let h = Hamiltonian::qubit();
        let u = rotation_unitary(PI / 3.0, 1.0).unwrap();
        let dist = tpm_distribution(&h, 1.4, &u).unwrap();
        let one = characteristic_function(&dist, Complex64::new(0.0, 0.0));
        assert!((one - 1.0).norm() < 1e-15);
        let at_i_beta = characteristic_function(&dist, Complex64::new(0.0, 1.4));
        assert!((at_i_beta.re - ift_value(&dist)).abs() < 1e-15);
        assert!(at_i_beta.im.abs() < 1e-15);
    }

    #[test]
    fn trace_form_identity_process() {
        let h = Hamiltonian::diagonal(&[0.0, 0.3, 2.0]).unwrap();
        for q in [Complex64::new(0.7, 0.0), Complex64::new(-2.0, 0.5)] {
            let chi =
                characteristic_function_trace(&h, 1.0, &UnitaryOperator::identity(3), q).unwrap();
            assert!((chi - 1.0).norm() < 1e-13);
        }
    }

    #[test]
    fn trace_form_matches_hand_expansion() {
        // theta = pi/2, beta = 1, q = 1: P(-1) e^{-i} + P(0) + P(+1) e^{i}.
        let h = Hamiltonian::qubit();
        let u = rotation_unitary(PI / 2.0, 0.0).unwrap();
        let (pm, p0, pp) = qubit_closed_form(PI / 2.0, 1.0);
        let i = Complex64::new(0.0, 1.0);
        let expected = (-i).exp() * pm + p0 + i.exp() * pp;
        let chi = characteristic_function_trace(&h, 1.0, &u, Complex64::new(1.0, 0.0)).unwrap();
        assert!((chi - expected).norm() < 1e-14);
    }

    #[test]
    fn dft_rows_for_qubit() {
        let h = Hamiltonian::qubit();
        let u = rotation_unitary(1.0, 0.5).unwrap();
        let beta = 2.5;
        let fwd = tpm_distribution(&h, beta, &u).unwrap();
        let bwd = backward_distribution(&h, beta, &u).unwrap();
        let report = dft_report(&fwd, &bwd).unwrap();
        assert!(report.row(0.0).unwrap().log_ratio.unwrap().abs() < 1e-14);
        assert!((report.row(1.0).unwrap().log_ratio.unwrap() - beta).abs() < 1e-13);
        assert!((report.row(-1.0).unwrap().log_ratio.unwrap() + beta).abs() < 1e-13);
        assert!(report.max_abs_residual() < 1e-13);
    }

    #[test]
    fn dft_rejects_mismatched_beta() {
        let h = Hamiltonian::qubit();
        let u = rotation_unitary(1.0, 0.0).unwrap();
        let a = tpm_distribution(&h, 1.0, &u).unwrap();
        let b = backward_distribution(&h, 1.1, &u).unwrap();
        assert!(matches!(
            dft_report(&a, &b),
            Err(Error::MismatchedProtocol { .. })
        ));
    }

    #[test]
    fn dft_below_floor_is_undefined() {
        let fwd = TpmDistribution::from_transitions(1.0, vec![(0.0, 1.0), (1.0, 1e-310)]);
        let bwd = TpmDistribution::from_transitions(1.0, vec![(0.0, 1.0), (-1.0, 0.5)]);
        let report = dft_report(&fwd, &bwd).unwrap();
        let row = report.row(1.0).unwrap();
        assert!(row.log_ratio.is_none() && row.residual.is_none());
        assert_eq!(report.row(0.0).unwrap().residual, Some(0.0));
    }

    #[test]
    fn binning_merges_nearly_equal_gaps() {
        let d = TpmDistribution::from_transitions(
            0.0,
            vec![(1.0, 0.25), (1.0 + 5e-10, 0.25), (0.0, 0.5), (2.0, 0.0)],
        );
        assert_eq!(d.support, vec![0.0, 1.0]);
        assert_eq!(d.probs, vec![0.5, 0.5]);
    }

    #[test]
    fn rejects_bad_inputs() {
        let h = Hamiltonian::qubit();
        assert!(matches!(
            tpm_distribution(&h, -1.0, &UnitaryOperator::identity(2)),
            Err(Error::InvalidBeta(_))
        ));
        assert!(matches!(
            tpm_distribution(&h, 1.0, &UnitaryOperator::identity(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn different_final_spectrum_is_flagged() {
        let a = Hamiltonian::diagonal(&[0.0, 1.0]).unwrap();
        let b = Hamiltonian::diagonal(&[0.0, 2.0]).unwrap();
        let u = rotation_unitary(1.0, 0.0).unwrap();
        let d = tpm_distribution_with(&a, &b, 1.0, &u, &TpmOptions::default()).unwrap();
        assert!(!d.spectrum_preserving);
        assert!(d.index_of(2.0).is_some());
        assert!(tpm_distribution(&a, 1.0, &u).unwrap().spectrum_preserving);
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let h = Hamiltonian::diagonal(&[0.0, 0.37, 1.91]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let dist = tpm_distribution(&h, 0.9, &haar_unitary(3, &mut rng)).unwrap();
        let mut buf = Vec::new();
        write_distribution_csv(&dist, &mut buf).unwrap();
        let back = read_distribution_csv(buf.as_slice(), 0.9).unwrap();
        assert_eq!(back, dist);
        assert!(read_distribution_csv("x,y\n1,2\n".as_bytes(), 0.0).is_err());
        assert!(read_distribution_csv("C,prob\n1,inf\n".as_bytes(), 0.0).is_err());
    }

    #[test]
    fn dft_csv_has_expected_header() {
        let h = Hamiltonian::qubit();
        let u = rotation_unitary(1.0, 0.0).unwrap();
        let r = dft_report(
            &tpm_distribution(&h, 1.0, &u).unwrap(),
            &backward_distribution(&h, 1.0, &u).unwrap(),
        )
        .unwrap();
        let mut buf = Vec::new();
        write_dft_csv(&r, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("C,P_fwd,P_bwd_neg,log_ratio,beta_C,residual\n"));
        assert_eq!(text.lines().count(), 4);
    }
}
