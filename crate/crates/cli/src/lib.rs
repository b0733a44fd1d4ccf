//! Scenario runner behind the `coherent-ft` command.
//!
//! A scenario is one TOML file naming the physics (inverse temperatures, the
//! process, optional Hamiltonian/unitary files), the sampling plan for the
//! photon emulator, and where to write results. Each subcommand maps to one
//! mode; outputs are long-form CSVs with a provenance comment line.

pub mod config;
pub mod error;
pub mod scenario;
pub mod table;

use std::path::{Path, PathBuf};

pub use config::{Mode, ScenarioConfig};
pub use error::{CliError, Result};
pub use table::{read_table, Cell, ParsedTable, Provenance, Table};

/// Effective seed: command-line override, then `sampling.seed`, then 0.
pub fn effective_seed(cfg: &ScenarioConfig, seed_override: Option<u64>) -> u64 {
    seed_override
        .or(cfg.sampling.as_ref().map(|s| s.seed))
        .unwrap_or(0)
}

/// Runs one scenario and writes its outputs; returns the files written.
pub fn run(
    cfg: &ScenarioConfig,
    mode: Mode,
    seed_override: Option<u64>,
    out_override: Option<&Path>,
) -> Result<Vec<PathBuf>> {
    let seed = effective_seed(cfg, seed_override);
    let tables = scenario::execute(cfg, mode, seed)?;
    let dir = match out_override {
        Some(d) => d.to_path_buf(),
        None => cfg.resolve(&cfg.output.dir),
    };
    let prov = Provenance::new(&cfg.sha256, seed);
    emit_plot_data(&tables, &prov, cfg, mode, &dir)
}

/// Writes each table as `<name>.csv` and, if requested, all of them to `plot.json`.
pub fn emit_plot_data(
    tables: &[Table],
    prov: &Provenance,
    cfg: &ScenarioConfig,
    mode: Mode,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut written = Vec::new();
    for t in tables {
        let path = dir.join(t.file_name());
        let file = std::fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
        t.write_csv(prov, std::io::BufWriter::new(file))?;
        log::info!("wrote {} ({} rows)", path.display(), t.rows.len());
        written.push(path);
    }
    if cfg.output.json {
        let tables_json: serde_json::Map<String, serde_json::Value> = tables
            .iter()
            .map(|t| (t.name.to_string(), t.to_json()))
            .collect();
        let doc = serde_json::json!({
            "tool": table::TOOL_NAME,
            "version": prov.version,
            "config_sha256": prov.config_sha256,
            "seed": prov.seed,
            "scenario_id": cfg.scenario_id,
            "mode": mode.as_str(),
            "tables": tables_json,
        });
        let path = dir.join("plot.json");
        let mut text = serde_json::to_string_pretty(&doc).expect("json value serializes");
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
