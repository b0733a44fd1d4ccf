//! Emulation of the polarization-photon experiment.
//!
//! A pair source prepares `sqrt(p0)|00> + sqrt(p1)|11>` in modes (idler,
//! signal). The signal passes a waveplate (the process) and both photons are
//! projected onto `{|0>, |1>}`. Projecting the idler onto `|k>` heralds the
//! signal in `|k>` before the process, so a coincidence `(k, j)` is a TPM run
//! with coherent energy `j - k` (levels 0 and 1).
//!
//! Counts per outcome are independent Poisson variables with mean
//! `N p(k, j) + b`, optionally with Gaussian jitter of the waveplate axis per
//! batch. Error bars come from a Poisson bootstrap of the observed counts.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, ComplexVector};
use crate::quantum::{
    check_beta, check_dim, hwp_jones, hwp_reversed_angle, DensityMatrix, Hamiltonian,
    UnitaryOperator,
};
use crate::tpm::{ift_value, mean_coherent_energy, tpm_distribution, TpmDistribution};

/// Coherent-energy values in estimator order.
pub const OUTCOMES: [f64; 3] = [-1.0, 0.0, 1.0];

/// Entangled pair `sqrt(p0)|00> + sqrt(p1)|11>`, idler first.
#[derive(Clone, Debug)]
pub struct SourceState {
    p0: f64,
    p1: f64,
    amplitudes: ComplexVector,
}

impl SourceState {
    pub fn new(p0: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p0) {
            return Err(Error::InvalidParameter(format!(
                "Schmidt weight {p0} outside [0, 1]"
            )));
        }
        Ok(Self::from_weights(p0, 1.0 - p0))
    }

    /// Source whose reduced signal state is thermal at `beta` for levels 0 and 1.
    pub fn from_beta(beta: f64) -> Result<Self> {
        check_beta(beta)?;
        let boltzmann = (-beta).exp();
        Ok(Self::from_weights(
            1.0 / (1.0 + boltzmann),
            boltzmann / (1.0 + boltzmann),
        ))
    }

    fn from_weights(p0: f64, p1: f64) -> Self {
        let mut amplitudes = ComplexVector::zeros(4);
        amplitudes[0] = Complex64::new(p0.sqrt(), 0.0);
        amplitudes[3] = Complex64::new(p1.sqrt(), 0.0);
        Self { p0, p1, amplitudes }
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }

    pub fn p1(&self) -> f64 {
        self.p1
    }

    /// `ln(p0 / p1)`; infinite for a product source.
    pub fn beta(&self) -> f64 {
        (self.p0 / self.p1).ln()
    }

    /// Two-photon amplitudes indexed `2k + j` (idler `k`, signal `j`).
    pub fn amplitudes(&self) -> &ComplexVector {
        &self.amplitudes
    }

    /// Signal state after tracing out the idler.
    pub fn reduced_signal_state(&self) -> Result<DensityMatrix> {
        let mut m = ComplexMatrix::zeros(2);
        for j in 0..2 {
            for jp in 0..2 {
                let v: Complex64 = (0..2)
                    .map(|k| self.amplitudes[2 * k + j] * self.amplitudes[2 * k + jp].conj())
                    .sum();
                m.set(j, jp, v);
            }
        }
        DensityMatrix::new(m)
    }
}

/// The optical element acting on the signal photon.
#[derive(Clone, Debug)]
pub enum Process {
    /// Half-wave plate with fast axis at `alpha` radians.
    Waveplate {
        alpha: f64,
    },
    Unitary(UnitaryOperator),
}

impl Process {
    /// Jones matrix with the waveplate axis offset by `jitter`.
    pub fn unitary(&self, jitter: f64) -> UnitaryOperator {
        match self {
            Process::Waveplate { alpha } => hwp_jones(alpha + jitter),
            Process::Unitary(u) => u.clone(),
        }
    }

    /// Time-reversed setting: waveplate axis turned by 90 degrees.
    pub fn reversed(&self) -> Process {
        match self {
            Process::Waveplate { alpha } => Process::Waveplate {
                alpha: hwp_reversed_angle(*alpha),
            },
            Process::Unitary(u) => Process::Unitary(u.inverse()),
        }
    }
}

/// One pair of projections with the process in between.
#[derive(Clone, Debug)]
pub struct MeasurementSetting {
    pub idler: usize,
    pub signal: usize,
    pub process: Process,
}

impl MeasurementSetting {
    pub fn new(idler: usize, signal: usize, process: Process) -> Result<Self> {
        if idler > 1 || signal > 1 {
            return Err(Error::InvalidParameter(format!(
                "projection labels must be 0 or 1, got ({idler}, {signal})"
            )));
        }
        Ok(Self {
            idler,
            signal,
            process,
        })
    }

    /// `|(<k|_i (x) <j|_s U) |psi0>|^2`.
    pub fn probability(&self, source: &SourceState) -> Result<f64> {
        let u = self.process.unitary(0.0);
        check_dim(2, u.dim())?;
        let full = ComplexMatrix::identity(2).kron(u.matrix());
        let out = full.apply(source.amplitudes());
        Ok(out[2 * self.idler + self.signal].norm_sqr())
    }

    /// Coherent energy heralded by this setting.
    pub fn coherent_energy(&self) -> f64 {
        self.signal as f64 - self.idler as f64
    }
}

/// Coincidence probabilities indexed `2k + j`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointProbabilities(pub [f64; 4]);

impl JointProbabilities {
    pub fn get(&self, idler: usize, signal: usize) -> f64 {
        self.0[2 * idler + signal]
    }

    /// TPM distribution obtained by mapping `(k, j)` to `C = j - k`.
    pub fn coherent_distribution(&self, beta: f64) -> TpmDistribution {
        let transitions = (0..2)
            .flat_map(|k| (0..2).map(move |j| (k, j)))
            .map(|(k, j)| (j as f64 - k as f64, self.get(k, j)))
            .collect();
        TpmDistribution::from_transitions(beta, transitions)
    }
}

/// Coincidence probabilities for all four projection pairs.
pub fn joint_probabilities(
    source: &SourceState,
    u: &UnitaryOperator,
) -> Result<JointProbabilities> {
    check_dim(2, u.dim())?;
    let full = ComplexMatrix::identity(2).kron(u.matrix());
    let out = full.apply(source.amplitudes());
    let mut p = [0.0; 4];
    for (slot, amp) in p.iter_mut().zip(out.iter()) {
        *slot = amp.norm_sqr();
    }
    Ok(JointProbabilities(p))
}

/// Detection imperfections.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Standard deviation of the waveplate axis jitter, radians.
    pub misalignment: f64,
    /// Expected accidental counts added to every outcome.
    pub background: f64,
    pub misalignment_on: bool,
    pub background_on: bool,
}

impl NoiseConfig {
    pub fn off() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.misalignment >= 0.0 && self.misalignment.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "misalignment {} must be finite and >= 0",
                self.misalignment
            )));
        }
        if !(self.background >= 0.0 && self.background.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "background {} must be finite and >= 0",
                self.background
            )));
        }
        Ok(())
    }

    fn jitter_sigma(&self) -> f64 {
        if self.misalignment_on {
            self.misalignment
        } else {
            0.0
        }
    }

    fn background_rate(&self) -> f64 {
        if self.background_on {
            self.background
        } else {
            0.0
        }
    }
}

/// Seed plus stream index of a ChaCha generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

/// What a stream is used for; keeps counting and resampling draws apart.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StreamPurpose {
    Counts = 0,
    Bootstrap = 1,
    Backward = 2,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// Stream for grid point `point`, replicate `replicate`.
    pub fn for_point(seed: u64, point: u32, replicate: u32, purpose: StreamPurpose) -> Self {
        let stream = ((purpose as u64) << 62)
            | ((u64::from(point) & 0x3fff_ffff) << 32)
            | u64::from(replicate);
        Self { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Coincidence counts indexed `2k + j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    pub counts: [u64; 4],
    /// Expected number of coincidences (before background).
    pub exposure: f64,
    pub rng: RngStream,
    pub noise: NoiseConfig,
    /// Waveplate jitter actually applied to this batch, radians.
    pub jitter: f64,
}

impl CountRecord {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    // Poisson::new only fails for non-positive or non-finite means.
    Poisson::new(mean)
        .expect("positive finite mean")
        .sample(rng) as u64
}

fn check_exposure(exposure: f64) -> Result<()> {
    if !(exposure > 0.0 && exposure.is_finite()) {
        return Err(Error::InvalidExposure(exposure));
    }
    Ok(())
}

/// Draws Poisson counts with mean `N p + b` per outcome. Waveplate jitter is
/// not applied here since the probabilities are already fixed; see
/// [`sample_setting`].
pub fn sample_counts(
    probs: &JointProbabilities,
    exposure: f64,
    noise: &NoiseConfig,
    rng_stream: RngStream,
) -> Result<CountRecord> {
    check_exposure(exposure)?;
    noise.validate()?;
    let mut rng = rng_stream.rng();
    Ok(draw(probs, exposure, noise, rng_stream, 0.0, &mut rng))
}

fn draw(
    probs: &JointProbabilities,
    exposure: f64,
    noise: &NoiseConfig,
    rng_stream: RngStream,
    jitter: f64,
    rng: &mut ChaCha8Rng,
) -> CountRecord {
    let b = noise.background_rate();
    let mut counts = [0u64; 4];
    for (c, p) in counts.iter_mut().zip(probs.0) {
        *c = poisson(exposure * p + b, rng);
    }
    CountRecord {
        counts,
        exposure,
        rng: rng_stream,
        noise: *noise,
        jitter,
    }
}

/// Full batch: jitter the waveplate, compute probabilities, draw counts.
pub fn sample_setting(
    source: &SourceState,
    process: &Process,
    exposure: f64,
    noise: &NoiseConfig,
    rng_stream: RngStream,
) -> Result<CountRecord> {
    check_exposure(exposure)?;
    noise.validate()?;
    let mut rng = rng_stream.rng();
    let sigma = noise.jitter_sigma();
    let jitter = if sigma > 0.0 {
        Normal::new(0.0, sigma)
            .map_err(|e| Error::InvalidParameter(e.to_string()))?
            .sample(&mut rng)
    } else {
        0.0
    };
    let probs = joint_probabilities(source, &process.unitary(jitter))?;
    Ok(draw(&probs, exposure, noise, rng_stream, jitter, &mut rng))
}

/// Distribution over `C in {-1, 0, 1}` from nonnegative outcome weights.
/// All three support points are kept, including empty ones.
pub fn distribution_from_weights(weights: [f64; 4], beta: f64) -> Result<TpmDistribution> {
    let total: f64 = weights.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::EmptyRecord);
    }
    let minus = weights[2] / total;
    let zero = (weights[0] + weights[3]) / total;
    let plus = weights[1] / total;
    Ok(TpmDistribution {
        beta,
        support: OUTCOMES.to_vec(),
        probs: vec![minus, zero, plus],
        spectrum_preserving: true,
    })
}

/// Point estimate of the distribution from count ratios.
pub fn point_estimate(rec: &CountRecord, beta: f64) -> Result<TpmDistribution> {
    distribution_from_weights(rec.counts.map(|c| c as f64), beta)
}

/// Bootstrap standard errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapErrors {
    /// For `C = -1, 0, 1`.
    pub probs: [f64; 3],
    pub mean_c: f64,
    pub ift: f64,
    /// Resamples with a nonzero total.
    pub resamples: usize,
}

/// Minimum number of bootstrap resamples.
pub const MIN_RESAMPLES: usize = 100;

/// Poisson bootstrap: each outcome redrawn from `Poisson(observed count)`.
pub fn bootstrap_errorbars(
    rec: &CountRecord,
    beta: f64,
    resamples: usize,
    rng_stream: RngStream,
) -> Result<BootstrapErrors> {
    if resamples < MIN_RESAMPLES {
        return Err(Error::InvalidParameter(format!(
            "need at least {MIN_RESAMPLES} resamples, got {resamples}"
        )));
    }
    if rec.total() == 0 {
        return Err(Error::EmptyRecord);
    }
    let mut rng = rng_stream.rng();
    let mut stats: Vec<[f64; 5]> = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let synthetic = rec.counts.map(|c| poisson(c as f64, &mut rng) as f64);
        let Ok(dist) = distribution_from_weights(synthetic, beta) else {
            continue;
        };
        stats.push([
            dist.probs[0],
            dist.probs[1],
            dist.probs[2],
            mean_coherent_energy(&dist),
            ift_value(&dist),
        ]);
    }
    if stats.len() < 2 {
        return Err(Error::EmptyRecord);
    }
    let sd = |idx: usize| sample_std(stats.iter().map(|s| s[idx]));
    Ok(BootstrapErrors {
        probs: [sd(0), sd(1), sd(2)],
        mean_c: sd(3),
        ift: sd(4),
        resamples: stats.len(),
    })
}

/// Sample standard deviation (`n - 1` denominator).
pub fn sample_std(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = values.clone().count();
    if n < 2 {
        return 0.0;
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    let ss: f64 = values.map(|v| (v - mean).powi(2)).sum();
    (ss / (n - 1) as f64).sqrt()
}

/// Point estimates with bootstrap error bars.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub distribution: TpmDistribution,
    pub errors: BootstrapErrors,
    pub mean_c: f64,
    pub ift: f64,
}

impl Estimate {
    pub fn prob(&self, c: f64) -> f64 {
        self.distribution.prob_at(c)
    }

    pub fn stderr(&self, c: f64) -> f64 {
        OUTCOMES
            .iter()
            .position(|&o| o == c)
            .map_or(f64::NAN, |i| self.errors.probs[i])
    }
}

pub fn estimate_distribution(
    rec: &CountRecord,
    beta: f64,
    resamples: usize,
    rng_stream: RngStream,
) -> Result<Estimate> {
    let distribution = point_estimate(rec, beta)?;
    let errors = bootstrap_errorbars(rec, beta, resamples, rng_stream)?;
    Ok(Estimate {
        mean_c: mean_coherent_energy(&distribution),
        ift: ift_value(&distribution),
        distribution,
        errors,
    })
}

/// Sweep over inverse temperatures with replicated batches.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub betas: Vec<f64>,
    pub process: Process,
    pub exposure: f64,
    pub noise: NoiseConfig,
    pub seed: u64,
    pub replicates: u32,
    pub resamples: usize,
}

/// One replicate at one inverse temperature.
#[derive(Clone, Debug)]
pub struct ExperimentPoint {
    pub beta: f64,
    pub replicate: u32,
    pub record: CountRecord,
    pub estimate: Estimate,
    /// Exact engine distribution for the nominal (unjittered) process.
    pub exact: TpmDistribution,
}

/// Runs source, counting and estimation for every `(beta, replicate)`.
/// Points run in parallel; the output is ordered by `(beta index, replicate)`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ExperimentPoint>> {
    run_with(cfg, &cfg.process, StreamPurpose::Counts)
}

/// Same as [`run_experiment`] for the time-reversed waveplate setting.
pub fn run_backward_experiment(cfg: &ExperimentConfig) -> Result<Vec<ExperimentPoint>> {
    run_with(cfg, &cfg.process.reversed(), StreamPurpose::Backward)
}

fn run_with(
    cfg: &ExperimentConfig,
    process: &Process,
    purpose: StreamPurpose,
) -> Result<Vec<ExperimentPoint>> {
    if cfg.betas.is_empty() {
        return Err(Error::InvalidParameter("beta grid is empty".into()));
    }
    if cfg.replicates == 0 {
        return Err(Error::InvalidParameter("replicates must be >= 1".into()));
    }
    check_exposure(cfg.exposure)?;
    cfg.noise.validate()?;
    let h = Hamiltonian::qubit();
    let jobs: Vec<(usize, u32)> = (0..cfg.betas.len())
        .flat_map(|i| (0..cfg.replicates).map(move |r| (i, r)))
        .collect();
    jobs.into_par_iter()
        .map(|(i, r)| {
            let beta = cfg.betas[i];
            let source = SourceState::from_beta(beta)?;
            let counts_stream = RngStream::for_point(cfg.seed, i as u32, r, purpose);
            let boot_stream = RngStream::for_point(
                cfg.seed ^ 0x9e37_79b9_7f4a_7c15,
                i as u32,
                r,
                StreamPurpose::Bootstrap,
            );
            let record = sample_setting(&source, process, cfg.exposure, &cfg.noise, counts_stream)?;
            let estimate = estimate_distribution(&record, beta, cfg.resamples, boot_stream)?;
            let exact = tpm_distribution(&h, beta, &process.unitary(0.0))?;
            Ok(ExperimentPoint {
                beta,
                replicate: r,
                record,
                estimate,
                exact,
            })
        })
        .collect()
}

/// IFT estimate and error bar at one grid point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IftPoint {
    pub beta: f64,
    pub replicate: u32,
    pub estimate: f64,
    pub stderr: f64,
    pub exact: f64,
}

/// `P(0) + P(1) e^{-beta} + P(-1) e^{beta}` from emulated counts, per grid point.
pub fn ift_experiment(cfg: &ExperimentConfig) -> Result<Vec<IftPoint>> {
    Ok(run_experiment(cfg)?
        .into_iter()
        .map(|p| IftPoint {
            beta: p.beta,
            replicate: p.replicate,
            estimate: qubit_ift(&p.estimate.distribution),
            stderr: p.estimate.errors.ift,
            exact: ift_value(&p.exact),
        })
        .collect())
}

/// Three-outcome expansion of the integral identity.
pub fn qubit_ift(dist: &TpmDistribution) -> f64 {
    let beta = dist.beta;
    dist.prob_at(0.0) + dist.prob_at(1.0) * (-beta).exp() + dist.prob_at(-1.0) * beta.exp()
}

/// `|sum p - 1|` helper for validating probability vectors.
pub fn normalization_defect(p: &JointProbabilities) -> f64 {
    (p.0.iter().sum::<f64>() - 1.0).abs()
}
