//! Scenario files: one TOML document per run.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::{missing, CliError, Result};

/// Largest grid a range specification may expand to.
const MAX_GRID: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    TpmExact,
    TpmSample,
    IftSweep,
    DftSweep,
    ArrowSweep,
    Decompose,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::TpmExact => "tpm-exact",
            Mode::TpmSample => "tpm-sample",
            Mode::IftSweep => "ift-sweep",
            Mode::DftSweep => "dft-sweep",
            Mode::ArrowSweep => "arrow-sweep",
            Mode::Decompose => "decompose",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A grid given either as explicit values or as an inclusive range.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Values(Vec<f64>),
    Single(f64),
    Range { start: f64, stop: f64, step: f64 },
}

impl Grid {
    pub fn expand(&self, name: &str) -> Result<Vec<f64>> {
        let values = match *self {
            Grid::Values(ref v) => v.clone(),
            Grid::Single(x) => vec![x],
            Grid::Range { start, stop, step } => {
                if !(step > 0.0 && step.is_finite() && start.is_finite() && stop.is_finite()) {
                    return Err(CliError::ConfigParse(format!(
                        "{name}: range needs finite start/stop and step > 0"
                    )));
                }
                if stop < start {
                    Vec::new()
                } else {
                    // Tolerate rounding in (stop - start) / step.
                    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
                    if n > MAX_GRID {
                        return Err(CliError::ConfigParse(format!(
                            "{name}: range expands to {n} points (limit {MAX_GRID})"
                        )));
                    }
                    (0..n).map(|i| start + i as f64 * step).collect()
                }
            }
        };
        if values.is_empty() {
            return Err(CliError::ConfigParse(format!("{name}: grid is empty")));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(CliError::ConfigParse(format!(
                "{name}: non-finite value {bad}"
            )));
        }
        Ok(values)
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Physics {
    pub beta: Option<Grid>,
    pub theta_deg: Option<f64>,
    #[serde(default)]
    pub phi_deg: f64,
    pub hwp_alpha_deg: Option<f64>,
    pub dimension: Option<usize>,
    pub hamiltonian_file: Option<PathBuf>,
    pub unitary_file: Option<PathBuf>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sampling {
    pub exposure: f64,
    #[serde(default = "default_resamples")]
    pub resamples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_replicates")]
    pub replicates: u32,
}

fn default_resamples() -> usize {
    400
}

fn default_replicates() -> u32 {
    1
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Noise {
    #[serde(default)]
    pub misalignment_deg: f64,
    #[serde(default)]
    pub background: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    #[serde(default = "default_out")]
    pub dir: PathBuf,
    #[serde(default)]
    pub json: bool,
}

impl Default for Output {
    fn default() -> Self {
        Self {
            dir: default_out(),
            json: false,
        }
    }
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrowGrid {
    pub theta_deg: Grid,
    pub beta: Grid,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecomposeInput {
    pub trajectory_file: PathBuf,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario_id: String,
    pub mode: Option<Mode>,
    #[serde(default)]
    pub physics: Physics,
    pub sampling: Option<Sampling>,
    #[serde(default)]
    pub noise: Noise,
    #[serde(default)]
    pub output: Output,
    pub arrow: Option<ArrowGrid>,
    pub decompose: Option<DecomposeInput>,

    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
    /// Hex SHA-256 of the config text.
    #[serde(skip)]
    pub sha256: String,
}

impl ScenarioConfig {
    /// Parses config text; relative paths resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: ScenarioConfig =
            toml::from_str(text).map_err(|e| CliError::ConfigParse(e.message().to_string()))?;
        if cfg.scenario_id.is_empty()
            || !cfg
                .scenario_id
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c))
        {
            return Err(CliError::ConfigParse(format!(
                "scenario_id {:?} must be nonempty and use [A-Za-z0-9._-]",
                cfg.scenario_id
            )));
        }
        cfg.base_dir = base_dir.to_path_buf();
        cfg.sha256 = hex::encode(Sha256::digest(text.as_bytes()));
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Checks the declared mode (if any) against the one requested, then the
    /// fields that mode needs.
    pub fn validate_for(&self, mode: Mode) -> Result<()> {
        if let Some(declared) = self.mode {
            if declared != mode {
                return Err(CliError::ConfigParse(format!(
                    "config declares mode {declared} but subcommand runs {mode}"
                )));
            }
        }
        match mode {
            Mode::TpmExact | Mode::IftSweep | Mode::DftSweep | Mode::TpmSample => {
                self.betas()?;
                self.check_process()?;
                if mode == Mode::TpmSample && self.sampling.is_none() {
                    return Err(missing("sampling"));
                }
            }
            Mode::ArrowSweep => {
                self.arrow_grid()?;
            }
            Mode::Decompose => {
                let input = self
                    .decompose
                    .as_ref()
                    .ok_or_else(|| missing("decompose"))?;
                self.existing(&input.trajectory_file)?;
            }
        }
        if let Some(s) = &self.sampling {
            if !(s.exposure > 0.0 && s.exposure.is_finite()) {
                return Err(CliError::ConfigParse(format!(
                    "sampling.exposure must be positive, got {}",
                    s.exposure
                )));
            }
            if s.replicates == 0 {
                return Err(CliError::ConfigParse(
                    "sampling.replicates must be >= 1".into(),
                ));
            }
        }
        for (name, v) in [
            ("noise.misalignment_deg", self.noise.misalignment_deg),
            ("noise.background", self.noise.background),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(CliError::ConfigParse(format!(
                    "{name} must be >= 0, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn betas(&self) -> Result<Vec<f64>> {
        let betas = self
            .physics
            .beta
            .as_ref()
            .ok_or_else(|| missing("physics.beta"))?
            .expand("physics.beta")?;
        check_betas(&betas, "physics.beta")?;
        Ok(betas)
    }

    /// Theta and beta grids of an arrow sweep, theta in degrees.
    pub fn arrow_grid(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let grid = self.arrow.as_ref().ok_or_else(|| missing("arrow"))?;
        let thetas = grid.theta_deg.expand("arrow.theta_deg")?;
        if let Some(bad) = thetas.iter().find(|t| !(0.0..=180.0).contains(*t)) {
            return Err(CliError::ConfigParse(format!(
                "arrow.theta_deg value {bad} outside [0, 180]"
            )));
        }
        let betas = grid.beta.expand("arrow.beta")?;
        check_betas(&betas, "arrow.beta")?;
        Ok((thetas, betas))
    }

    fn check_process(&self) -> Result<()> {
        let p = &self.physics;
        let given = [
            p.theta_deg.is_some(),
            p.hwp_alpha_deg.is_some(),
            p.unitary_file.is_some(),
        ]
        .iter()
        .filter(|&&b| b)
        .count();
        match given {
            0 => Err(missing(
                "physics.theta_deg | physics.hwp_alpha_deg | physics.unitary_file",
            )),
            1 => {
                if let Some(f) = &p.unitary_file {
                    self.existing(f)?;
                }
                if let Some(f) = &p.hamiltonian_file {
                    self.existing(f)?;
                }
                Ok(())
            }
            _ => Err(CliError::ConfigParse(
                "give exactly one of theta_deg, hwp_alpha_deg, unitary_file".into(),
            )),
        }
    }

    /// Resolves `path` against the config directory.
    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    fn existing(&self, path: &Path) -> Result<PathBuf> {
        let full = self.resolve(path);
        if !full.is_file() {
            return Err(CliError::ConfigParse(format!(
                "referenced file {} does not exist",
                full.display()
            )));
        }
        Ok(full)
    }
}

fn check_betas(betas: &[f64], name: &str) -> Result<()> {
    if let Some(bad) = betas.iter().find(|b| **b < 0.0) {
        return Err(CliError::ConfigParse(format!(
            "{name}: negative beta {bad}"
        )));
    }
    Ok(())
}
