//! Time-series and summary emission.
//!
//! Output is deterministic byte-for-byte for a fixed configuration and
//! tool version: floats are printed with 17 significant digits and the
//! manifest timestamp honours `SOURCE_DATE_EPOCH` for reproducible runs.

use aeroqkd_core::driver::{ComparisonRun, ScenarioSummary, TimeSeriesRecord};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const TIMESERIES_HEADER: &str =
    "t,alpha_deg,l_m,theta_deg,deflection_mrad,offset_m,opd_rms_m,strehl,eta0,eta,loss_db,q_mu,e_mu,r_bps,phase";

/// Provenance block appended to every summary document.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub config_digest: String,
    pub tool_version: String,
    pub timestamp_unix: u64,
    pub input_config: PathBuf,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn new(config_digest: String, input_config: PathBuf, outputs: Vec<PathBuf>) -> Self {
        let timestamp_unix = std::env::var("SOURCE_DATE_EPOCH")
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or_else(|| {
                std::time::SystemTime::now()
                    .duration_since(std::time::UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0)
            });
        Self {
            config_digest,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp_unix,
            input_config,
            outputs,
        }
    }
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// CSV rows mirroring the per-timestep panels: angles in degrees,
/// deflection in milliradians, one row per timestep.
pub fn format_timeseries(records: &[TimeSeriesRecord]) -> String {
    let mut out = String::with_capacity(64 + records.len() * 256);
    out.push_str(TIMESERIES_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            num(r.t),
            num(r.alpha.to_degrees()),
            num(r.l),
            num(r.theta.to_degrees()),
            num(r.deflection_rad * 1e3),
            num(r.offset_m),
            num(r.opd_rms),
            num(r.strehl),
            num(r.eta_0),
            num(r.eta),
            num(r.loss_db),
            num(r.q_mu),
            num(r.e_mu),
            num(r.r_bps),
            r.phase.as_str(),
        );
    }
    out
}

pub fn emit_timeseries(records: &[TimeSeriesRecord], path: &Path) -> std::io::Result<()> {
    std::fs::write(path, format_timeseries(records))
}

fn push_summary_fields(out: &mut String, prefix: &str, s: &ScenarioSummary) {
    let _ = writeln!(out, "{prefix}total_time_s = {}", num(s.total_time_s));
    let _ = writeln!(out, "{prefix}quantum_window_s = {}", num(s.quantum_window_s));
    let _ = writeln!(out, "{prefix}distance_min_m = {}", num(s.distance_range_m.0));
    let _ = writeln!(out, "{prefix}distance_max_m = {}", num(s.distance_range_m.1));
    let _ = writeln!(out, "{prefix}mean_rate_bps = {}", num(s.mean_rate_bps));
    let _ = writeln!(out, "{prefix}total_secure_bits = {}", num(s.total_secure_bits));
    let _ = writeln!(out, "{prefix}bl_extra_loss_db = {}", num(s.bl_extra_loss_db));
    let _ = writeln!(
        out,
        "{prefix}rate_reduction_fraction = {}",
        num(s.rate_reduction_fraction)
    );
}

fn push_manifest(out: &mut String, manifest: &RunManifest) {
    let _ = writeln!(out, "config_digest = sha256:{}", manifest.config_digest);
    let _ = writeln!(out, "tool_version = {}", manifest.tool_version);
    let _ = writeln!(out, "timestamp_unix = {}", manifest.timestamp_unix);
    let _ = writeln!(out, "input_config = {}", manifest.input_config.display());
    for o in &manifest.outputs {
        let _ = writeln!(out, "output = {}", o.display());
    }
}

/// Flat key-value summary for a single run.
pub fn format_run_summary(summary: &ScenarioSummary, manifest: &RunManifest) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "run_kind = run");
    push_summary_fields(&mut out, "", summary);
    push_manifest(&mut out, manifest);
    out
}

/// Flat key-value summary for a with/without-boundary-layer comparison.
pub fn format_compare_summary(cmp: &ComparisonRun, manifest: &RunManifest) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "run_kind = compare");
    let _ = writeln!(out, "rate_reduction_fraction = {}", num(cmp.rate_reduction_fraction));
    let _ = writeln!(out, "bl_extra_loss_db = {}", num(cmp.bl_extra_loss_db));
    push_summary_fields(&mut out, "with_bl_", &cmp.with_layer.summary);
    push_summary_fields(&mut out, "no_bl_", &cmp.baseline.summary);
    push_manifest(&mut out, manifest);
    out
}
