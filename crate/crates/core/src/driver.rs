//! Flight-pass orchestration: per-timestep geometry, boundary-layer
//! optics, link budget and key rate, phase segmentation, aggregation, and
//! the with/without-boundary-layer comparison.
//!
//! Timesteps are independent once the configuration is frozen, so the
//! pass is evaluated in parallel; records are collected in time order and
//! reduced sequentially, which keeps the output identical to a sequential
//! run.

use crate::aero::{aero_summary, AeroError, FanParams, Ray, Vec2};
use crate::decoy::{secure_key_rate, DecoyError, DetectorModel, ProtocolParams};
use crate::flow::{
    gladstone_dale_constant, load_density_grid, to_refractive_index, FlowError,
    RefractiveIndexGrid, SyntheticLayer,
};
use crate::geometry::{sample_geometry, AircraftState, GeometryError, Vec3};
use crate::link::{evaluate_link, AtmosphereParams, LinkError, ReceiverParams, TransmitterParams};
use rayon::prelude::*;
use std::path::PathBuf;
use thiserror::Error;

/// Aircraft and pass parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AircraftConfig {
    /// Flight speed in Mach number.
    pub speed_mach: f64,
    /// Speed of sound used for the Mach conversion, m/s.
    pub sound_speed_m_s: f64,
    /// Relative flying height, metres.
    pub height_m: f64,
    /// Shortest horizon (cross-track) distance to the station, metres.
    pub horizon_distance_m: f64,
    /// Freestream air density at altitude, kg/m^3.
    pub air_density: f64,
}

impl AircraftConfig {
    pub fn speed_m_s(&self) -> f64 {
        self.speed_mach * self.sound_speed_m_s
    }
}

/// Where the boundary-layer density field comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryLayerSource {
    /// No layer: Strehl ratio 1 and zero deflection at every step.
    None,
    /// Density grid file in the `DENSITY-GRID v1` format.
    File(PathBuf),
    /// Synthetic flat-plate layer.
    Synthetic(SyntheticLayer),
    /// Fixed Strehl ratio injected at every step (testing hook).
    UniformStrehl(f64),
}

/// Ray-fan and tracer settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AeroConfig {
    /// Rays across the transmitter aperture.
    pub n_rays: usize,
    /// Integration step as a fraction of the smaller cell size.
    pub step_fraction: f64,
    /// Aperture position as a fraction of the grid chordwise extent.
    pub aperture_station_frac: f64,
}

impl Default for AeroConfig {
    fn default() -> Self {
        // 17 rays and min(dx,dy)/4 are convergence-tested defaults.
        Self { n_rays: 17, step_fraction: 0.25, aperture_station_frac: 0.7 }
    }
}

/// Full scenario configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub aircraft: AircraftConfig,
    pub transmitter: TransmitterParams,
    pub receiver: ReceiverParams,
    pub atmosphere: AtmosphereParams,
    pub protocol: ProtocolParams,
    pub detector: DetectorModel,
    /// Time step, seconds.
    pub time_step_s: f64,
    /// Azimuth bound of the quantum phase, degrees.
    ///
    /// Stored in the file unit so configuration round-trips are exact;
    /// converted to radians at the point of use.
    pub azimuth_bound_deg: f64,
    /// Pass extent: simulate while the slant range stays below this.
    pub max_range_m: f64,
    pub boundary_layer: BoundaryLayerSource,
    pub aero: AeroConfig,
    /// Fold the deflection offset into the pointing term instead of
    /// assuming the ATP pre-compensates it.
    pub uncompensated_deflection: bool,
}

/// Communication phase of a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseLabel {
    Calibration,
    Quantum,
    PostProcessing,
}

impl PhaseLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            PhaseLabel::Calibration => "calibration",
            PhaseLabel::Quantum => "quantum",
            PhaseLabel::PostProcessing => "postprocessing",
        }
    }
}

/// One timestep of the simulated pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeSeriesRecord {
    pub t: f64,
    pub alpha: f64,
    pub l: f64,
    pub theta: f64,
    pub deflection_rad: f64,
    pub offset_m: f64,
    pub opd_rms: f64,
    pub strehl: f64,
    pub eta_0: f64,
    pub eta: f64,
    pub loss_db: f64,
    pub q_mu: f64,
    pub e_mu: f64,
    pub r_per_pulse: f64,
    pub r_bps: f64,
    pub phase: PhaseLabel,
}

/// Aggregated pass results.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioSummary {
    pub total_time_s: f64,
    pub quantum_window_s: f64,
    /// Min and max slant range during the quantum phase, metres.
    pub distance_range_m: (f64, f64),
    /// Mean secure rate over the quantum phase, bits/s.
    pub mean_rate_bps: f64,
    pub total_secure_bits: f64,
    /// Mean Strehl-induced loss over the quantum phase, dB.
    pub bl_extra_loss_db: f64,
    /// Filled by the baseline comparison; zero for a single run.
    pub rate_reduction_fraction: f64,
}

/// Records plus summary of one scenario run.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioRun {
    pub records: Vec<TimeSeriesRecord>,
    pub summary: ScenarioSummary,
}

/// Result of the with/without-boundary-layer comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRun {
    pub with_layer: ScenarioRun,
    pub baseline: ScenarioRun,
    pub rate_reduction_fraction: f64,
    pub bl_extra_loss_db: f64,
}

#[derive(Debug, Error)]
pub enum DriverError {
    #[error("invalid scenario: {0}")]
    Config(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Aero(#[from] AeroError),
    #[error(transparent)]
    Link(#[from] LinkError),
    #[error(transparent)]
    Decoy(#[from] DecoyError),
}

/// Per-step boundary-layer evaluation strategy.
enum LayerModel {
    None,
    Uniform { strehl: f64, opd_rms: f64 },
    Grid { grid: RefractiveIndexGrid, fan: FanParams, aperture_x: f64 },
}

fn build_layer(config: &ScenarioConfig) -> Result<LayerModel, DriverError> {
    let lambda_um = config.transmitter.lambda_m * 1e6;
    let k = gladstone_dale_constant(lambda_um)?;
    let density = match &config.boundary_layer {
        BoundaryLayerSource::None => return Ok(LayerModel::None),
        BoundaryLayerSource::UniformStrehl(sr) => {
            if !(*sr > 0.0 && *sr <= 1.0) {
                return Err(DriverError::Config(format!(
                    "uniform Strehl ratio must lie in (0, 1], got {sr}"
                )));
            }
            // Invert the Marechal relation for the implied OPD.
            let opd_rms =
                config.transmitter.lambda_m / (2.0 * std::f64::consts::PI) * (-sr.ln()).sqrt();
            return Ok(LayerModel::Uniform { strehl: *sr, opd_rms });
        }
        BoundaryLayerSource::File(path) => load_density_grid(path)?,
        BoundaryLayerSource::Synthetic(layer) => layer.generate()?,
    };
    let grid = to_refractive_index(&density, &k);
    let exterior_index = 1.0 + config.aircraft.air_density * k.k_gd;
    let step_m = config.aero.step_fraction * grid.dx.min(grid.dy);
    let fan = FanParams {
        aperture_d: config.transmitter.d_t,
        n_rays: config.aero.n_rays,
        step_m,
        exterior_index,
    };
    let aperture_x =
        grid.origin.0 + config.aero.aperture_station_frac * (grid.x_max() - grid.origin.0);
    Ok(LayerModel::Grid { grid, fan, aperture_x })
}

/// Check a scenario configuration without running it.
pub fn validate_config(config: &ScenarioConfig) -> Result<(), DriverError> {
    config.protocol.validate()?;
    config.detector.validate()?;
    if !(config.time_step_s > 0.0) {
        return Err(DriverError::Config("time step must be positive".into()));
    }
    if !(config.azimuth_bound_deg > 0.0) || config.azimuth_bound_deg >= 90.0 {
        return Err(DriverError::Config("azimuth bound must lie in (0, 90) degrees".into()));
    }
    let a = &config.aircraft;
    for (name, v) in [
        ("speed", a.speed_mach),
        ("sound speed", a.sound_speed_m_s),
        ("height", a.height_m),
        ("horizon distance", a.horizon_distance_m),
        ("air density", a.air_density),
    ] {
        if !(v > 0.0) {
            return Err(DriverError::Config(format!("aircraft {name} must be positive")));
        }
    }
    let closest = a.height_m.hypot(a.horizon_distance_m);
    if config.max_range_m <= closest {
        return Err(DriverError::Config(format!(
            "max range {} m does not reach the closest approach {closest:.1} m",
            config.max_range_m
        )));
    }
    if config.aero.n_rays < 3 || config.aero.n_rays % 2 == 0 {
        return Err(DriverError::Config("fan needs an odd ray count >= 3".into()));
    }
    if !(config.aero.step_fraction > 0.0 && config.aero.step_fraction <= 0.5) {
        return Err(DriverError::Config("step fraction must lie in (0, 0.5]".into()));
    }
    if !(0.0..=1.0).contains(&config.aero.aperture_station_frac) {
        return Err(DriverError::Config("aperture station must lie in [0, 1]".into()));
    }
    Ok(())
}

/// Run a full pass: one record per timestep, plus the aggregate summary.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioRun, DriverError> {
    validate_config(config)?;
    let layer = build_layer(config)?;
    let a = &config.aircraft;
    let v = a.speed_m_s();
    let (h, d) = (a.height_m, a.horizon_distance_m);
    // Pass extent: |x| such that l = max_range.
    let x_max = (config.max_range_m.powi(2) - h * h - d * d).sqrt();
    let k_max = (x_max / (v * config.time_step_s)).floor() as i64;
    let station = Vec3::new(0.0, 0.0, 0.0);
    let velocity = Vec3::new(v, 0.0, 0.0);

    let mut records: Vec<TimeSeriesRecord> = (-k_max..=k_max)
        .into_par_iter()
        .map(|k| {
            let t = k as f64 * config.time_step_s;
            let state = AircraftState::new(Vec3::new(v * t, -d, h), velocity);
            let geo = sample_geometry(&state, station, t)?;

            let (deflection, offset, opd_rms, strehl) = match &layer {
                LayerModel::None => (0.0, 0.0, 0.0, 1.0),
                LayerModel::Uniform { strehl, opd_rms } => (0.0, 0.0, *opd_rms, *strehl),
                LayerModel::Grid { grid, fan, aperture_x } => {
                    let chief = Ray::new(
                        Vec2::new(*aperture_x, grid.origin.1),
                        Vec2::new(geo.alpha.sin(), geo.alpha.cos()),
                    )?;
                    let s =
                        aero_summary(grid, &chief, fan, config.transmitter.lambda_m, geo.l)?;
                    (s.deflection_rad, s.offset_m, s.opd_rms, s.strehl)
                }
            };

            let extra_pointing = if config.uncompensated_deflection { offset } else { 0.0 };
            let link = evaluate_link(
                &config.transmitter,
                &config.atmosphere,
                &config.receiver,
                strehl,
                geo.l,
                geo.theta,
                extra_pointing,
            )?;
            let key = secure_key_rate(&config.protocol, &config.detector, link.eta)?;

            Ok(TimeSeriesRecord {
                t,
                alpha: geo.alpha,
                l: geo.l,
                theta: geo.theta,
                deflection_rad: deflection,
                offset_m: offset,
                opd_rms,
                strehl,
                eta_0: link.eta_0,
                eta: link.eta,
                loss_db: link.loss_db,
                q_mu: key.q_mu,
                e_mu: key.e_mu,
                r_per_pulse: key.r_per_pulse,
                r_bps: key.r_bps,
                phase: PhaseLabel::Quantum,
            })
        })
        .collect::<Result<_, DriverError>>()?;

    segment_phases(&mut records, config.azimuth_bound_deg.to_radians());
    let summary = aggregate(&records, config.time_step_s);
    Ok(ScenarioRun { records, summary })
}

/// Label records by phase and zero the secure rate outside the quantum
/// window: calibration for `alpha < -bound`, quantum for `|alpha| <= bound`,
/// post-processing for `alpha > bound`.
pub fn segment_phases(records: &mut [TimeSeriesRecord], alpha_bound: f64) {
    for r in records.iter_mut() {
        r.phase = if r.alpha < -alpha_bound {
            PhaseLabel::Calibration
        } else if r.alpha > alpha_bound {
            PhaseLabel::PostProcessing
        } else {
            PhaseLabel::Quantum
        };
        if r.phase != PhaseLabel::Quantum {
            r.r_per_pulse = 0.0;
            r.r_bps = 0.0;
        }
    }
}

/// Aggregate labeled records into the pass summary.
pub fn aggregate(records: &[TimeSeriesRecord], dt: f64) -> ScenarioSummary {
    let quantum: Vec<&TimeSeriesRecord> =
        records.iter().filter(|r| r.phase == PhaseLabel::Quantum).collect();
    let n_q = quantum.len();
    let (mut l_min, mut l_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut rate_sum = 0.0;
    let mut loss_sum = 0.0;
    for r in &quantum {
        l_min = l_min.min(r.l);
        l_max = l_max.max(r.l);
        rate_sum += r.r_bps;
        loss_sum += -10.0 * r.strehl.log10();
    }
    let (distance_range_m, mean_rate_bps, bl_extra_loss_db) = if n_q == 0 {
        ((0.0, 0.0), 0.0, 0.0)
    } else {
        ((l_min, l_max), rate_sum / n_q as f64, loss_sum / n_q as f64)
    };
    ScenarioSummary {
        total_time_s: records.len() as f64 * dt,
        quantum_window_s: n_q as f64 * dt,
        distance_range_m,
        mean_rate_bps,
        total_secure_bits: rate_sum * dt,
        bl_extra_loss_db,
        rate_reduction_fraction: 0.0,
    }
}

/// Run the scenario with its boundary layer and once more with the layer
/// removed, and quantify the impact.
pub fn compare_baseline(config: &ScenarioConfig) -> Result<ComparisonRun, DriverError> {
    if config.boundary_layer == BoundaryLayerSource::None {
        return Err(DriverError::Config(
            "comparison needs a boundary-layer source; got `none`".into(),
        ));
    }
    let mut with_layer = run_scenario(config)?;
    let mut baseline_config = config.clone();
    baseline_config.boundary_layer = BoundaryLayerSource::None;
    let baseline = run_scenario(&baseline_config)?;

    let reduction = if baseline.summary.mean_rate_bps > 0.0 {
        (1.0 - with_layer.summary.mean_rate_bps / baseline.summary.mean_rate_bps).max(0.0)
    } else {
        0.0
    };
    with_layer.summary.rate_reduction_fraction = reduction;
    let bl_extra_loss_db = with_layer.summary.bl_extra_loss_db;
    Ok(ComparisonRun { with_layer, baseline, rate_reduction_fraction: reduction, bl_extra_loss_db })
}
