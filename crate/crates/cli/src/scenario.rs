//! Mode runners: build the physics from a config and fill output tables.

use std::f64::consts::PI;

use coherent_ft::arrow::{mean_c_closed_form, mean_c_trace};
use coherent_ft::energy::{decompose, Trajectory};
use coherent_ft::photonic::{
    run_backward_experiment, run_experiment, ExperimentConfig, ExperimentPoint, NoiseConfig,
    Process, OUTCOMES,
};
use coherent_ft::quantum::{
    hwp_angle_for_rotation, hwp_jones, rotation_unitary, thermal_state, Hamiltonian,
    UnitaryOperator,
};
use coherent_ft::tpm::{
    backward_distribution, dft_report, ift_value, mean_coherent_energy, tpm_distribution,
    DftReport, TpmDistribution,
};
use coherent_ft::ComplexMatrix;
use rayon::prelude::*;

use crate::config::{Mode, ScenarioConfig};
use crate::error::{CliError, Result};
use crate::table::{Cell, Table};

pub const RESULTS_COLUMNS: [&str; 7] = [
    "scenario_id",
    "series",
    "beta",
    "replicate",
    "estimate",
    "stderr",
    "exact",
];
pub const COUNTS_COLUMNS: [&str; 8] = [
    "scenario_id",
    "beta",
    "replicate",
    "n00",
    "n01",
    "n10",
    "n11",
    "jitter_deg",
];
pub const DFT_COLUMNS: [&str; 9] = [
    "scenario_id",
    "beta",
    "replicate",
    "C",
    "P_fwd",
    "P_bwd_neg",
    "log_ratio",
    "beta_C",
    "residual",
];
pub const ARROW_COLUMNS: [&str; 5] = ["scenario_id", "theta_deg", "beta", "mean_C", "closed_form"];
pub const LEDGER_COLUMNS: [&str; 7] = ["scenario_id", "time", "U", "W", "Q", "C", "residual"];

/// Degrees to radians with the interval ends mapped exactly.
fn radians(deg: f64) -> f64 {
    if deg == 180.0 {
        PI
    } else if deg == 360.0 {
        2.0 * PI
    } else {
        deg.to_radians()
    }
}

pub fn series_p(c: f64) -> String {
    format!("P(C={})", c + 0.0)
}

pub fn series_log_ratio(c: f64) -> String {
    format!("ln[P(C={})/P~(C={})]", c + 0.0, -c + 0.0)
}

/// Hamiltonian, process unitary, and (for a qubit with levels 0, 1) the
/// emulator process.
struct Setup {
    h: Hamiltonian,
    u: UnitaryOperator,
    process: Option<Process>,
}

fn load_matrix(cfg: &ScenarioConfig, rel: &std::path::Path) -> Result<ComplexMatrix> {
    let path = cfg.resolve(rel);
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    ComplexMatrix::from_json(&text).map_err(CliError::engine(path.display().to_string()))
}

fn setup(cfg: &ScenarioConfig) -> Result<Setup> {
    let p = &cfg.physics;
    let u_file = match &p.unitary_file {
        Some(f) => Some(
            UnitaryOperator::new(load_matrix(cfg, f)?)
                .map_err(CliError::engine(f.display().to_string()))?,
        ),
        None => None,
    };
    let h = match &p.hamiltonian_file {
        Some(f) => Hamiltonian::new(load_matrix(cfg, f)?)
            .map_err(CliError::engine(f.display().to_string()))?,
        None => {
            let d = p
                .dimension
                .or(u_file.as_ref().map(UnitaryOperator::dim))
                .unwrap_or(2);
            let levels: Vec<f64> = (0..d).map(|n| n as f64).collect();
            Hamiltonian::diagonal(&levels).map_err(CliError::engine("physics.dimension"))?
        }
    };
    if let Some(d) = p.dimension {
        if d != h.dim() {
            return Err(CliError::ConfigParse(format!(
                "physics.dimension = {d} but the Hamiltonian is {}x{}",
                h.dim(),
                h.dim()
            )));
        }
    }

    let (u, process) = if let Some(u) = u_file {
        let process = Process::Unitary(u.clone());
        (u, Some(process))
    } else if let Some(theta) = p.theta_deg {
        let u = rotation_unitary(radians(theta), radians(p.phi_deg))
            .map_err(CliError::engine("physics.theta_deg"))?;
        // The waveplate at theta/4 has the same transition statistics.
        let alpha = hwp_angle_for_rotation(radians(theta));
        (u, Some(Process::Waveplate { alpha }))
    } else if let Some(alpha) = p.hwp_alpha_deg {
        if !alpha.is_finite() {
            return Err(CliError::ConfigParse(
                "physics.hwp_alpha_deg must be finite".into(),
            ));
        }
        let alpha = radians(alpha);
        (hwp_jones(alpha), Some(Process::Waveplate { alpha }))
    } else {
        return Err(crate::error::missing("physics.theta_deg"));
    };
    if u.dim() != h.dim() {
        return Err(CliError::ConfigParse(format!(
            "process is {}x{} but the Hamiltonian is {}x{}",
            u.dim(),
            u.dim(),
            h.dim(),
            h.dim()
        )));
    }
    // The emulator is a polarization qubit with levels 0 and 1.
    let is_emulated_qubit = h.dim() == 2
        && h.matrix()
            .approx_eq(&ComplexMatrix::from_real_diagonal(&[0.0, 1.0]), 1e-12);
    Ok(Setup {
        h,
        u,
        process: process.filter(|_| is_emulated_qubit),
    })
}

/// All level differences `E_m - E_n`, merged within binning tolerance.
fn candidate_support(h: &Hamiltonian) -> Vec<f64> {
    let pairs: Vec<(f64, f64)> = h
        .energies()
        .iter()
        .flat_map(|em| h.energies().iter().map(move |en| (em - en, 1.0)))
        .collect();
    TpmDistribution::from_transitions(0.0, pairs).support
}

fn experiment(cfg: &ScenarioConfig, s: &Setup, seed: u64) -> Result<ExperimentConfig> {
    let sampling = cfg
        .sampling
        .as_ref()
        .ok_or_else(|| crate::error::missing("sampling"))?;
    let process = s.process.clone().ok_or_else(|| {
        CliError::ConfigParse(
            "photon emulation needs the qubit Hamiltonian diag(0, 1); \
             drop hamiltonian_file/dimension or the [sampling] section"
                .into(),
        )
    })?;
    let misalignment = radians(cfg.noise.misalignment_deg);
    Ok(ExperimentConfig {
        betas: cfg.betas()?,
        process,
        exposure: sampling.exposure,
        noise: NoiseConfig {
            misalignment,
            background: cfg.noise.background,
            misalignment_on: misalignment > 0.0,
            background_on: cfg.noise.background > 0.0,
        },
        seed,
        replicates: sampling.replicates,
        resamples: sampling.resamples,
    })
}

fn exact_rows(id: &str, beta: f64, dist: &TpmDistribution, support: &[f64], t: &mut Table) {
    for &c in support {
        let p = dist.prob_at(c);
        t.push(row(id, series_p(c), beta, 0, p, Some(0.0), p));
    }
    let mean = mean_coherent_energy(dist);
    t.push(row(id, "mean_C".into(), beta, 0, mean, Some(0.0), mean));
    let ift = ift_value(dist);
    t.push(row(id, "ift".into(), beta, 0, ift, Some(0.0), ift));
}

fn row(
    id: &str,
    series: String,
    beta: f64,
    replicate: u32,
    estimate: f64,
    stderr: Option<f64>,
    exact: f64,
) -> Vec<Cell> {
    vec![
        id.into(),
        series.into(),
        beta.into(),
        replicate.into(),
        estimate.into(),
        stderr.into(),
        exact.into(),
    ]
}

fn counts_table(id: &str, points: &[ExperimentPoint]) -> Table {
    let mut t = Table::new("counts", &COUNTS_COLUMNS);
    for p in points {
        let n = p.record.counts;
        t.push(vec![
            id.into(),
            p.beta.into(),
            p.replicate.into(),
            n[0].into(),
            n[1].into(),
            n[2].into(),
            n[3].into(),
            p.record.jitter.to_degrees().into(),
        ]);
    }
    t
}

fn exact_distributions(s: &Setup, betas: &[f64]) -> Result<Vec<TpmDistribution>> {
    betas
        .par_iter()
        .map(|&b| tpm_distribution(&s.h, b, &s.u))
        .collect::<coherent_ft::Result<Vec<_>>>()
        .map_err(CliError::engine("tpm engine"))
}

fn run_tpm_exact(cfg: &ScenarioConfig) -> Result<Vec<Table>> {
    let s = setup(cfg)?;
    let betas = cfg.betas()?;
    let support = candidate_support(&s.h);
    let dists = exact_distributions(&s, &betas)?;
    let mut t = Table::new("results", &RESULTS_COLUMNS);
    for (beta, dist) in betas.iter().zip(&dists) {
        exact_rows(&cfg.scenario_id, *beta, dist, &support, &mut t);
    }
    Ok(vec![t])
}

fn run_tpm_sample(cfg: &ScenarioConfig, seed: u64) -> Result<Vec<Table>> {
    let s = setup(cfg)?;
    let exp = experiment(cfg, &s, seed)?;
    let points = run_experiment(&exp).map_err(CliError::engine("emulator"))?;
    let id = cfg.scenario_id.as_str();
    let mut t = Table::new("results", &RESULTS_COLUMNS);
    for p in &points {
        let est = &p.estimate;
        for c in OUTCOMES {
            t.push(row(
                id,
                series_p(c),
                p.beta,
                p.replicate,
                est.prob(c),
                Some(est.stderr(c)),
                p.exact.prob_at(c),
            ));
        }
        t.push(row(
            id,
            "mean_C".into(),
            p.beta,
            p.replicate,
            est.mean_c,
            Some(est.errors.mean_c),
            mean_coherent_energy(&p.exact),
        ));
        t.push(row(
            id,
            "ift".into(),
            p.beta,
            p.replicate,
            est.ift,
            Some(est.errors.ift),
            ift_value(&p.exact),
        ));
    }
    Ok(vec![t, counts_table(id, &points)])
}

fn run_ift(cfg: &ScenarioConfig, seed: u64) -> Result<Vec<Table>> {
    let s = setup(cfg)?;
    let id = cfg.scenario_id.as_str();
    let mut t = Table::new("results", &RESULTS_COLUMNS);
    if cfg.sampling.is_some() {
        let exp = experiment(cfg, &s, seed)?;
        let points = run_experiment(&exp).map_err(CliError::engine("emulator"))?;
        for p in &points {
            t.push(row(
                id,
                "ift".into(),
                p.beta,
                p.replicate,
                p.estimate.ift,
                Some(p.estimate.errors.ift),
                ift_value(&p.exact),
            ));
        }
        return Ok(vec![t, counts_table(id, &points)]);
    }
    let betas = cfg.betas()?;
    for (beta, dist) in betas.iter().zip(exact_distributions(&s, &betas)?) {
        let v = ift_value(&dist);
        t.push(row(id, "ift".into(), *beta, 0, v, Some(0.0), v));
    }
    Ok(vec![t])
}

fn push_dft(id: &str, replicate: u32, report: &DftReport, t: &mut Table) {
    for r in &report.rows {
        t.push(vec![
            id.into(),
            report.beta.into(),
            replicate.into(),
            r.c.into(),
            r.p_forward.into(),
            r.p_backward_neg.into(),
            r.log_ratio.into(),
            r.beta_c.into(),
            r.residual.into(),
        ]);
    }
}

fn run_dft(cfg: &ScenarioConfig, seed: u64) -> Result<Vec<Table>> {
    let s = setup(cfg)?;
    let id = cfg.scenario_id.as_str();
    let mut results = Table::new("results", &RESULTS_COLUMNS);
    let mut dft = Table::new("dft", &DFT_COLUMNS);
    if cfg.sampling.is_some() {
        let exp = experiment(cfg, &s, seed)?;
        let fwd = run_experiment(&exp).map_err(CliError::engine("emulator (forward)"))?;
        let bwd = run_backward_experiment(&exp).map_err(CliError::engine("emulator (backward)"))?;
        for (f, b) in fwd.iter().zip(&bwd) {
            let report = dft_report(&f.estimate.distribution, &b.estimate.distribution)
                .map_err(CliError::engine("dft"))?;
            push_dft(id, f.replicate, &report, &mut dft);
            for c in OUTCOMES {
                let (pf, pb) = (f.estimate.prob(c), b.estimate.prob(-c));
                let (sf, sb) = (f.estimate.stderr(c), b.estimate.stderr(-c));
                let defined = pf > 0.0 && pb > 0.0;
                let lr = defined.then(|| pf.ln() - pb.ln());
                let err = defined.then(|| ((sf / pf).powi(2) + (sb / pb).powi(2)).sqrt());
                results.push(vec![
                    id.into(),
                    series_log_ratio(c).into(),
                    f.beta.into(),
                    f.replicate.into(),
                    lr.into(),
                    err.into(),
                    (f.beta * c + 0.0).into(),
                ]);
            }
        }
        let mut counts = counts_table(id, &fwd);
        counts.name = "counts_forward";
        let mut counts_b = counts_table(id, &bwd);
        counts_b.name = "counts_backward";
        return Ok(vec![results, dft, counts, counts_b]);
    }

    let betas = cfg.betas()?;
    let support = candidate_support(&s.h);
    let reports: Vec<DftReport> = betas
        .par_iter()
        .map(|&beta| {
            let f = tpm_distribution(&s.h, beta, &s.u)?;
            let b = backward_distribution(&s.h, beta, &s.u)?;
            dft_report(&f, &b)
        })
        .collect::<coherent_ft::Result<_>>()
        .map_err(CliError::engine("dft"))?;
    for report in &reports {
        push_dft(id, 0, report, &mut dft);
        for &c in &support {
            let lr = report.row(c).and_then(|r| r.log_ratio);
            results.push(vec![
                id.into(),
                series_log_ratio(c).into(),
                report.beta.into(),
                0u32.into(),
                lr.into(),
                lr.map(|_| 0.0).into(),
                (report.beta * c + 0.0).into(),
            ]);
        }
    }
    Ok(vec![results, dft])
}

fn run_arrow(cfg: &ScenarioConfig) -> Result<Vec<Table>> {
    let (thetas, betas) = cfg.arrow_grid()?;
    let phi = radians(cfg.physics.phi_deg);
    let h = Hamiltonian::qubit();
    let rows: Vec<Vec<(f64, f64, f64, f64)>> = thetas
        .par_iter()
        .map(|&theta_deg| {
            let theta = radians(theta_deg);
            let u = rotation_unitary(theta, phi)?;
            betas
                .iter()
                .map(|&beta| {
                    let rho = thermal_state(&h, beta)?;
                    Ok((
                        theta_deg,
                        beta,
                        mean_c_trace(&rho, &u, &h)?,
                        mean_c_closed_form(theta, beta)?,
                    ))
                })
                .collect()
        })
        .collect::<coherent_ft::Result<_>>()
        .map_err(CliError::engine("arrow sweep"))?;
    let mut t = Table::new("arrow", &ARROW_COLUMNS);
    for (theta, beta, mean, closed) in rows.into_iter().flatten() {
        t.push(vec![
            cfg.scenario_id.as_str().into(),
            theta.into(),
            beta.into(),
            mean.into(),
            closed.into(),
        ]);
    }
    Ok(vec![t])
}

fn run_decompose(cfg: &ScenarioConfig) -> Result<Vec<Table>> {
    let input = cfg
        .decompose
        .as_ref()
        .ok_or_else(|| crate::error::missing("decompose"))?;
    let path = cfg.resolve(&input.trajectory_file);
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    let traj =
        Trajectory::from_json(&text).map_err(CliError::engine(path.display().to_string()))?;
    let ledger = decompose(&traj).map_err(CliError::engine("energy decomposition"))?;
    let residuals = ledger.residuals();
    let mut t = Table::new("ledger", &LEDGER_COLUMNS);
    for (i, &time) in ledger.times.iter().enumerate() {
        t.push(vec![
            cfg.scenario_id.as_str().into(),
            time.into(),
            ledger.internal[i].into(),
            ledger.work[i].into(),
            ledger.heat[i].into(),
            ledger.coherent[i].into(),
            residuals[i].into(),
        ]);
    }
    Ok(vec![t])
}

/// Runs `mode` and returns its tables in output order.
pub fn execute(cfg: &ScenarioConfig, mode: Mode, seed: u64) -> Result<Vec<Table>> {
    cfg.validate_for(mode)?;
    log::info!("running {mode} for scenario {}", cfg.scenario_id);
    match mode {
        Mode::TpmExact => run_tpm_exact(cfg),
        Mode::TpmSample => run_tpm_sample(cfg, seed),
        Mode::IftSweep => run_ift(cfg, seed),
        Mode::DftSweep => run_dft(cfg, seed),
        Mode::ArrowSweep => run_arrow(cfg),
        Mode::Decompose => run_decompose(cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::Path;

    fn cfg(text: &str) -> ScenarioConfig {
        ScenarioConfig::parse(text, Path::new(".")).unwrap()
    }

    #[test]
    fn radians_hits_interval_ends() {
        assert_eq!(radians(180.0), PI);
        assert_eq!(radians(0.0), 0.0);
    }

    #[test]
    fn qubit_support_is_three_points() {
        assert_eq!(
            candidate_support(&Hamiltonian::qubit()),
            vec![-1.0, 0.0, 1.0]
        );
    }

    #[test]
    fn tpm_exact_probability_columns() {
        let c = cfg(
            "scenario_id = \"f\"\n[physics]\nbeta = { start = 0.0, stop = 5.0, step = 0.25 }\ntheta_deg = 86.6\n",
        );
        let t = &execute(&c, Mode::TpmExact, 0).unwrap()[0];
        // 21 betas x (3 probabilities + mean + ift).
        assert_eq!(t.rows.len(), 21 * 5);
        let zero: Vec<f64> = t
            .rows
            .iter()
            .filter(|r| r[1] == Cell::from("P(C=0)"))
            .map(|r| r[4].as_f64().unwrap())
            .collect();
        let expected = (radians(86.6) / 2.0).cos().powi(2);
        assert!(zero.iter().all(|p| (p - expected).abs() < 1e-12));
    }

    #[test]
    fn emulation_requires_qubit() {
        let c = cfg(
            "scenario_id = \"f\"\n[physics]\nbeta = [1.0]\ntheta_deg = 10.0\ndimension = 2\n[sampling]\nexposure = 100.0\n",
        );
        assert!(execute(&c, Mode::TpmSample, 0).is_ok());
        let c = cfg(
            "scenario_id = \"f\"\n[physics]\nbeta = [1.0]\ndimension = 3\nhwp_alpha_deg = 10.0\n",
        );
        assert!(matches!(
            execute(&c, Mode::TpmExact, 0),
            Err(CliError::ConfigParse(_))
        ));
    }
}
