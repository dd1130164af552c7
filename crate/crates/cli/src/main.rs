//! `aeroqkd` — airborne QKD flight-pass simulator with boundary-layer
//! aero-optics.
//!
//! Exit codes: 0 success, 2 configuration error, 3 I/O error,
//! 4 domain/numerics error.

use aeroqkd_cli::config::{config_digest, parse_config, ConfigError};
use aeroqkd_cli::emit::{
    emit_timeseries, format_compare_summary, format_run_summary, RunManifest,
};
use aeroqkd_core::driver::{
    compare_baseline, run_scenario, validate_config, BoundaryLayerSource, DriverError,
    ScenarioConfig,
};
use aeroqkd_core::flow::{save_density_grid, FlowError};
use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "aeroqkd", version, about = "Airborne QKD link simulator with boundary-layer effects")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; created if missing.
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Override the simulation time step, seconds.
    #[arg(long)]
    time_step: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one pass and emit the time series and summary.
    Run {
        #[command(flatten)]
        common: CommonArgs,
        /// Drop the configured boundary layer (Strehl ratio 1).
        #[arg(long)]
        no_boundary_layer: bool,
    },
    /// Simulate with and without the boundary layer and emit both.
    Compare {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Parse and validate a configuration, printing its digest.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Generate the configured synthetic density grid file.
    SynthLayer {
        #[arg(long)]
        config: PathBuf,
        /// Output density grid path.
        #[arg(long)]
        out: PathBuf,
    },
}

enum CliError {
    Config(String),
    Io(String),
    Domain(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Domain(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Io(m) | CliError::Domain(m) => m,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Read { .. } => CliError::Io(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<DriverError> for CliError {
    fn from(e: DriverError) -> Self {
        match e {
            DriverError::Config(_) => CliError::Config(e.to_string()),
            DriverError::Flow(FlowError::Io(_)) => CliError::Io(e.to_string()),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn load(config_path: &Path, time_step: Option<f64>) -> Result<ScenarioConfig, CliError> {
    let mut config = parse_config(config_path)?;
    if let Some(dt) = time_step {
        config.time_step_s = dt;
    }
    Ok(config)
}

fn cmd_run(common: &CommonArgs, no_boundary_layer: bool) -> Result<(), CliError> {
    let mut config = load(&common.config, common.time_step)?;
    if no_boundary_layer {
        config.boundary_layer = BoundaryLayerSource::None;
    }
    let run = run_scenario(&config)?;
    std::fs::create_dir_all(&common.out_dir)?;
    let csv_path = common.out_dir.join("timeseries.csv");
    let summary_path = common.out_dir.join("summary.txt");
    emit_timeseries(&run.records, &csv_path)?;
    let manifest = RunManifest::new(
        config_digest(&config),
        common.config.clone(),
        vec![csv_path.clone(), summary_path.clone()],
    );
    std::fs::write(&summary_path, format_run_summary(&run.summary, &manifest))?;
    println!(
        "pass: {} records, quantum window {:.0} s, mean rate {:.1} bps, {:.0} secure bits",
        run.records.len(),
        run.summary.quantum_window_s,
        run.summary.mean_rate_bps,
        run.summary.total_secure_bits
    );
    println!("wrote {} and {}", csv_path.display(), summary_path.display());
    Ok(())
}

fn cmd_compare(common: &CommonArgs) -> Result<(), CliError> {
    let config = load(&common.config, common.time_step)?;
    let cmp = compare_baseline(&config)?;
    std::fs::create_dir_all(&common.out_dir)?;
    let with_path = common.out_dir.join("timeseries_with_bl.csv");
    let no_path = common.out_dir.join("timeseries_no_bl.csv");
    let summary_path = common.out_dir.join("summary.txt");
    emit_timeseries(&cmp.with_layer.records, &with_path)?;
    emit_timeseries(&cmp.baseline.records, &no_path)?;
    let manifest = RunManifest::new(
        config_digest(&config),
        common.config.clone(),
        vec![with_path.clone(), no_path.clone(), summary_path.clone()],
    );
    std::fs::write(&summary_path, format_compare_summary(&cmp, &manifest))?;
    println!(
        "boundary layer: {:.2} dB mean Strehl loss, {:.1}% rate reduction ({:.1} -> {:.1} bps)",
        cmp.bl_extra_loss_db,
        100.0 * cmp.rate_reduction_fraction,
        cmp.baseline.summary.mean_rate_bps,
        cmp.with_layer.summary.mean_rate_bps
    );
    println!(
        "wrote {}, {} and {}",
        with_path.display(),
        no_path.display(),
        summary_path.display()
    );
    Ok(())
}

fn cmd_validate(config_path: &Path) -> Result<(), CliError> {
    let config = parse_config(config_path)?;
    validate_config(&config)?;
    if let BoundaryLayerSource::File(path) = &config.boundary_layer {
        if !path.exists() {
            return Err(CliError::Io(format!(
                "boundary-layer grid file {} does not exist",
                path.display()
            )));
        }
    }
    println!("ok: sha256:{}", config_digest(&config));
    Ok(())
}

fn cmd_synth_layer(config_path: &Path, out: &Path) -> Result<(), CliError> {
    let config = parse_config(config_path)?;
    let BoundaryLayerSource::Synthetic(layer) = &config.boundary_layer else {
        return Err(CliError::Config(
            "synth-layer needs `source = synthetic` in [boundary_layer]".into(),
        ));
    };
    let grid = layer.generate().map_err(DriverError::Flow)?;
    save_density_grid(&grid, out).map_err(|e| match e {
        FlowError::Io(io) => CliError::Io(io.to_string()),
        other => CliError::Domain(other.to_string()),
    })?;
    println!("wrote {} ({}x{} nodes)", out.display(), grid.nx, grid.ny);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { common, no_boundary_layer } => cmd_run(common, *no_boundary_layer),
        Command::Compare { common } => cmd_compare(common),
        Command::Validate { config } => cmd_validate(config),
        Command::SynthLayer { config, out } => cmd_synth_layer(config, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
