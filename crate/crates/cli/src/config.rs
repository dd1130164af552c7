//! Scenario configuration files.
//!
//! Flat sectioned key-value text, one `key = value` pair per line, with
//! `[section]` headers grouped the way the reference parameter table is:
//! `aircraft`, `photon_source`, `ground_station`, `protocol`, plus
//! `simulation` and `boundary_layer` for run controls. `#` starts a
//! comment. Unknown sections and keys are rejected, missing required keys
//! are reported by name, and every physical invariant violation carries
//! the offending key.

use aeroqkd_core::decoy::{DetectorModel, ProtocolParams};
use aeroqkd_core::driver::{AeroConfig, AircraftConfig, BoundaryLayerSource, ScenarioConfig};
use aeroqkd_core::flow::{LayerStructure, SyntheticLayer};
use aeroqkd_core::link::{AtmosphereParams, ReceiverParams, TransmitterParams};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("line {line}: expected `key = value`, found `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown section `[{name}]`")]
    UnknownSection { line: usize, name: String },
    #[error("line {line}: unknown key `{key}` in section [{section}]")]
    UnknownKey { line: usize, section: String, key: String },
    #[error("line {line}: duplicate key `{key}` in section [{section}]")]
    DuplicateKey { line: usize, section: String, key: String },
    #[error("line {line}: key `{key}`: cannot parse `{value}` as {kind}")]
    BadValue { line: usize, key: String, value: String, kind: &'static str },
    #[error("missing required key `{key}` in section [{section}]")]
    MissingKey { section: &'static str, key: &'static str },
    #[error("key `{key}`: {reason}")]
    Invalid { key: String, reason: String },
}

const SECTIONS: [&str; 6] =
    ["aircraft", "photon_source", "ground_station", "protocol", "simulation", "boundary_layer"];

#[derive(Default)]
struct Section {
    entries: BTreeMap<String, (String, usize)>,
}

fn parse_sections(text: &str) -> Result<BTreeMap<String, Section>, ConfigError> {
    let mut sections: BTreeMap<String, Section> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let name = name.trim().to_string();
            if !SECTIONS.contains(&name.as_str()) {
                return Err(ConfigError::UnknownSection { line, name });
            }
            sections.entry(name.clone()).or_default();
            current = Some(name);
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Syntax { line, text: content.to_string() });
        };
        let section = current
            .clone()
            .ok_or_else(|| ConfigError::Syntax { line, text: content.to_string() })?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        let entry = sections.entry(section.clone()).or_default();
        if entry.entries.insert(key.clone(), (value, line)).is_some() {
            return Err(ConfigError::DuplicateKey { line, section, key });
        }
    }
    Ok(sections)
}

/// One section's entries with consumed-key tracking, so anything left
/// over is reported as unknown.
struct Reader<'a> {
    name: &'static str,
    entries: BTreeMap<String, (String, usize)>,
    _marker: std::marker::PhantomData<&'a ()>,
}

impl Reader<'_> {
    fn new(name: &'static str, sections: &mut BTreeMap<String, Section>) -> Self {
        let entries = sections.remove(name).map(|s| s.entries).unwrap_or_default();
        Self { name, entries, _marker: std::marker::PhantomData }
    }

    fn take(&mut self, key: &'static str) -> Option<(String, usize)> {
        self.entries.remove(key)
    }

    fn required_f64(&mut self, key: &'static str) -> Result<f64, ConfigError> {
        match self.take(key) {
            None => Err(ConfigError::MissingKey { section: self.name, key }),
            Some((value, line)) => parse_f64(key, &value, line),
        }
    }

    fn optional_f64(&mut self, key: &'static str, default: f64) -> Result<f64, ConfigError> {
        match self.take(key) {
            None => Ok(default),
            Some((value, line)) => parse_f64(key, &value, line),
        }
    }

    fn optional_usize(&mut self, key: &'static str, default: usize) -> Result<usize, ConfigError> {
        match self.take(key) {
            None => Ok(default),
            Some((value, line)) => value.parse().map_err(|_| ConfigError::BadValue {
                line,
                key: key.to_string(),
                value,
                kind: "positive integer",
            }),
        }
    }

    fn optional_bool(&mut self, key: &'static str, default: bool) -> Result<bool, ConfigError> {
        match self.take(key) {
            None => Ok(default),
            Some((value, line)) => match value.as_str() {
                "true" => Ok(true),
                "false" => Ok(false),
                _ => Err(ConfigError::BadValue {
                    line,
                    key: key.to_string(),
                    value,
                    kind: "boolean (`true` or `false`)",
                }),
            },
        }
    }

    fn finish(self) -> Result<(), ConfigError> {
        if let Some((key, (_, line))) = self.entries.into_iter().next() {
            return Err(ConfigError::UnknownKey { line, section: self.name.to_string(), key });
        }
        Ok(())
    }
}

fn parse_f64(key: &str, value: &str, line: usize) -> Result<f64, ConfigError> {
    value.parse().map_err(|_| ConfigError::BadValue {
        line,
        key: key.to_string(),
        value: value.to_string(),
        kind: "number",
    })
}

fn invalid(key: &str, err: impl std::fmt::Display) -> ConfigError {
    ConfigError::Invalid { key: key.to_string(), reason: err.to_string() }
}

/// Parse a configuration file into a fully validated scenario.
pub fn parse_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let mut sections = parse_sections(text)?;

    let mut aircraft = Reader::new("aircraft", &mut sections);
    let ac = AircraftConfig {
        speed_mach: aircraft.required_f64("speed_mach")?,
        sound_speed_m_s: aircraft.optional_f64("sound_speed_m_s", 340.3)?,
        height_m: aircraft.required_f64("height_m")?,
        horizon_distance_m: aircraft.required_f64("horizon_distance_m")?,
        air_density: aircraft.required_f64("air_density_kg_m3")?,
    };
    aircraft.finish()?;

    let mut source = Reader::new("photon_source", &mut sections);
    let d_t = source.required_f64("transmitter_diameter_m")?;
    let sigma_t = source.required_f64("pointing_error_rad")?;
    let lambda_m = source.required_f64("wavelength_m")?;
    let fried = source.required_f64("fried_parameter_m")?;
    source.finish()?;
    let transmitter =
        TransmitterParams::new(d_t, sigma_t, lambda_m).map_err(|e| invalid("photon_source", e))?;

    let mut ground = Reader::new("ground_station", &mut sections);
    let receiver = ReceiverParams::new(
        ground.required_f64("receiver_diameter_m")?,
        ground.required_f64("optics_efficiency")?,
        ground.required_f64("detector_efficiency")?,
    )
    .map_err(|e| invalid("ground_station", e))?;
    let dark_count = ground.required_f64("dark_count_rate")?;
    let detection_error = ground.required_f64("detection_error_rate")?;
    ground.finish()?;
    let detector =
        DetectorModel::new(dark_count, detection_error).map_err(|e| invalid("ground_station", e))?;

    let mut proto = Reader::new("protocol", &mut sections);
    let mu = proto.required_f64("signal_intensity")?;
    let nu = proto.required_f64("decoy_intensity")?;
    let n_rep = proto.required_f64("repetition_rate_hz")?;
    let p_s = proto.required_f64("p_signal")?;
    let p_d = proto.required_f64("p_decoy")?;
    let p_v = proto.required_f64("p_vacuum")?;
    let f_ec = proto.optional_f64("reconciliation_efficiency", 1.16)?;
    let q = proto.take("protocol_q");
    let cutoff = proto.optional_f64("qber_cutoff", 0.10)?;
    proto.finish()?;
    let mut protocol =
        ProtocolParams::new(mu, nu, p_s, p_d, p_v, n_rep, f_ec).map_err(|e| invalid("protocol", e))?;
    if let Some((value, line)) = q {
        protocol = protocol
            .with_q(parse_f64("protocol_q", &value, line)?)
            .map_err(|e| invalid("protocol_q", e))?;
    }
    protocol = protocol.with_qber_cutoff(cutoff).map_err(|e| invalid("qber_cutoff", e))?;

    let mut sim = Reader::new("simulation", &mut sections);
    let time_step_s = sim.optional_f64("time_step_s", 1.0)?;
    let azimuth_bound_deg = sim.optional_f64("azimuth_bound_deg", 60.0)?;
    let max_range_m = sim.optional_f64("max_range_m", 60_000.0)?;
    let beta = sim.optional_f64("extinction_optical_thickness", 0.25)?;
    let uncompensated = sim.optional_bool("uncompensated_deflection", false)?;
    let aero = AeroConfig {
        n_rays: sim.optional_usize("fan_rays", 17)?,
        step_fraction: sim.optional_f64("step_fraction", 0.25)?,
        aperture_station_frac: sim.optional_f64("aperture_station_frac", 0.7)?,
    };
    sim.finish()?;
    let atmosphere =
        AtmosphereParams::new(fried, beta).map_err(|e| invalid("extinction_optical_thickness", e))?;

    let mut bl = Reader::new("boundary_layer", &mut sections);
    let source_kind = bl.take("source").map(|(v, _)| v).unwrap_or_else(|| "none".to_string());
    let boundary_layer = match source_kind.as_str() {
        "none" => BoundaryLayerSource::None,
        "file" => {
            let (path, _) = bl
                .take("path")
                .ok_or(ConfigError::MissingKey { section: "boundary_layer", key: "path" })?;
            BoundaryLayerSource::File(PathBuf::from(path))
        }
        "uniform-strehl" => {
            let strehl = bl.required_f64("strehl")?;
            if !(strehl > 0.0 && strehl <= 1.0) {
                return Err(invalid("strehl", "must lie in (0, 1]"));
            }
            BoundaryLayerSource::UniformStrehl(strehl)
        }
        "synthetic" => {
            let mut layer = SyntheticLayer::new(
                bl.optional_f64("freestream_density_kg_m3", ac.air_density)?,
                bl.required_f64("wall_density_kg_m3")?,
                bl.required_f64("thickness_m")?,
                bl.required_f64("chord_m")?,
                bl.optional_usize("resolution", 512)?,
            );
            layer.phase_center_frac = bl.optional_f64("phase_center_frac", 0.7)?;
            for (amp_key, lam_key) in [
                ("structure1_amplitude_kg_m3", "structure1_wavelength_m"),
                ("structure2_amplitude_kg_m3", "structure2_wavelength_m"),
            ] {
                let amp = bl.optional_f64(amp_key, 0.0)?;
                let lam = bl.optional_f64(lam_key, 0.0)?;
                if amp != 0.0 {
                    if !(lam > 0.0) {
                        return Err(invalid(lam_key, "must be positive when the amplitude is set"));
                    }
                    layer.structures.push(LayerStructure { amplitude: amp, wavelength_m: lam });
                }
            }
            BoundaryLayerSource::Synthetic(layer)
        }
        other => {
            return Err(invalid(
                "source",
                format!("unknown boundary-layer source `{other}` (none | file | synthetic | uniform-strehl)"),
            ))
        }
    };
    bl.finish()?;

    Ok(ScenarioConfig {
        aircraft: ac,
        transmitter,
        receiver,
        atmosphere,
        protocol,
        detector,
        time_step_s,
        azimuth_bound_deg,
        max_range_m,
        boundary_layer,
        aero,
        uncompensated_deflection: uncompensated,
    })
}

/// Canonical text form of a scenario; `parse_config_str` round-trips it.
pub fn write_config(config: &ScenarioConfig) -> String {
    let mut out = String::new();
    let f = |v: f64| format!("{v:.16e}");
    let _ = writeln!(out, "[aircraft]");
    let _ = writeln!(out, "speed_mach = {}", f(config.aircraft.speed_mach));
    let _ = writeln!(out, "sound_speed_m_s = {}", f(config.aircraft.sound_speed_m_s));
    let _ = writeln!(out, "height_m = {}", f(config.aircraft.height_m));
    let _ = writeln!(out, "horizon_distance_m = {}", f(config.aircraft.horizon_distance_m));
    let _ = writeln!(out, "air_density_kg_m3 = {}", f(config.aircraft.air_density));
    let _ = writeln!(out, "\n[photon_source]");
    let _ = writeln!(out, "transmitter_diameter_m = {}", f(config.transmitter.d_t));
    let _ = writeln!(out, "pointing_error_rad = {}", f(config.transmitter.sigma_t));
    let _ = writeln!(out, "wavelength_m = {}", f(config.transmitter.lambda_m));
    let _ = writeln!(out, "fried_parameter_m = {}", f(config.atmosphere.r_0));
    let _ = writeln!(out, "\n[ground_station]");
    let _ = writeln!(out, "receiver_diameter_m = {}", f(config.receiver.d_r));
    let _ = writeln!(out, "detection_error_rate = {}", f(config.detector.e_d));
    let _ = writeln!(out, "dark_count_rate = {}", f(config.detector.y_0));
    let _ = writeln!(out, "detector_efficiency = {}", f(config.receiver.eta_d));
    let _ = writeln!(out, "optics_efficiency = {}", f(config.receiver.eta_s));
    let _ = writeln!(out, "\n[protocol]");
    let _ = writeln!(out, "signal_intensity = {}", f(config.protocol.mu));
    let _ = writeln!(out, "decoy_intensity = {}", f(config.protocol.nu));
    let _ = writeln!(out, "repetition_rate_hz = {}", f(config.protocol.n_rep));
    let _ = writeln!(out, "p_signal = {}", f(config.protocol.p_s));
    let _ = writeln!(out, "p_decoy = {}", f(config.protocol.p_d));
    let _ = writeln!(out, "p_vacuum = {}", f(config.protocol.p_v));
    let _ = writeln!(out, "reconciliation_efficiency = {}", f(config.protocol.f_ec));
    let _ = writeln!(out, "protocol_q = {}", f(config.protocol.q));
    let _ = writeln!(out, "qber_cutoff = {}", f(config.protocol.qber_cutoff));
    let _ = writeln!(out, "\n[simulation]");
    let _ = writeln!(out, "time_step_s = {}", f(config.time_step_s));
    let _ = writeln!(out, "azimuth_bound_deg = {}", f(config.azimuth_bound_deg));
    let _ = writeln!(out, "max_range_m = {}", f(config.max_range_m));
    let _ = writeln!(out, "extinction_optical_thickness = {}", f(config.atmosphere.beta));
    let _ = writeln!(out, "uncompensated_deflection = {}", config.uncompensated_deflection);
    let _ = writeln!(out, "fan_rays = {}", config.aero.n_rays);
    let _ = writeln!(out, "step_fraction = {}", f(config.aero.step_fraction));
    let _ = writeln!(out, "aperture_station_frac = {}", f(config.aero.aperture_station_frac));
    let _ = writeln!(out, "\n[boundary_layer]");
    match &config.boundary_layer {
        BoundaryLayerSource::None => {
            let _ = writeln!(out, "source = none");
        }
        BoundaryLayerSource::File(path) => {
            let _ = writeln!(out, "source = file");
            let _ = writeln!(out, "path = {}", path.display());
        }
        BoundaryLayerSource::UniformStrehl(sr) => {
            let _ = writeln!(out, "source = uniform-strehl");
            let _ = writeln!(out, "strehl = {}", f(*sr));
        }
        BoundaryLayerSource::Synthetic(layer) => {
            let _ = writeln!(out, "source = synthetic");
            let _ = writeln!(out, "freestream_density_kg_m3 = {}", f(layer.freestream_rho));
            let _ = writeln!(out, "wall_density_kg_m3 = {}", f(layer.wall_rho));
            let _ = writeln!(out, "thickness_m = {}", f(layer.thickness_m));
            let _ = writeln!(out, "chord_m = {}", f(layer.chord_m));
            let _ = writeln!(out, "resolution = {}", layer.resolution);
            let _ = writeln!(out, "phase_center_frac = {}", f(layer.phase_center_frac));
            for (i, s) in layer.structures.iter().take(2).enumerate() {
                let _ = writeln!(out, "structure{}_amplitude_kg_m3 = {}", i + 1, f(s.amplitude));
                let _ = writeln!(out, "structure{}_wavelength_m = {}", i + 1, f(s.wavelength_m));
            }
        }
    }
    out
}

/// Content digest of a scenario: SHA-256 over the canonical text form, so
/// key order and formatting of the source file do not matter.
pub fn config_digest(config: &ScenarioConfig) -> String {
    let canonical = write_config(config);
    let mut hasher = Sha256::new();
    hasher.update(canonical.as_bytes());
    hex::encode(hasher.finalize())
}
