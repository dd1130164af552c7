//! Flight-pass geometry between the aircraft (Alice) and the ground
//! station (Bob) in the local East-North-Up frame.
//!
//! The aircraft flies a straight, level, constant-velocity line. All
//! quantities are instantaneous functions of the two positions and the
//! velocity vector, so timesteps can be evaluated independently.

use std::ops::{Add, Mul, Sub};
use thiserror::Error;

/// Position or direction in East-North-Up coordinates, metres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// Norm of the horizontal (East, North) components.
    pub fn horizontal_norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    /// Dot product of the horizontal components only.
    pub fn horizontal_dot(&self, other: &Vec3) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// Magnitude of the 2D cross product of the horizontal components.
    pub fn horizontal_cross(&self, other: &Vec3) -> f64 {
        (self.x * other.y - self.y * other.x).abs()
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

/// Aircraft kinematic state: position and a constant velocity.
#[derive(Debug, Clone, Copy)]
pub struct AircraftState {
    pub position: Vec3,
    pub velocity: Vec3,
}

impl AircraftState {
    pub const fn new(position: Vec3, velocity: Vec3) -> Self {
        Self { position, velocity }
    }
}

/// Instantaneous pass geometry at time `t`.
///
/// `d` is the cross-track horizontal distance (the horizontal distance at
/// closest approach, constant along a straight pass); the along-track
/// projection is available separately via [`horizon_distance`].
#[derive(Debug, Clone, Copy)]
pub struct GeometrySample {
    /// Simulation time, seconds.
    pub t: f64,
    /// Slant range Alice-Bob, metres.
    pub l: f64,
    /// Relative flying height, metres.
    pub h: f64,
    /// Cross-track horizontal distance, metres.
    pub d: f64,
    /// Relative azimuth angle, radians in [-pi/2, pi/2].
    pub alpha: f64,
    /// Zenith angle of the receiving telescope, radians in [0, pi/2).
    pub theta: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("aircraft and station positions coincide")]
    CoincidentPoints,
    #[error("horizontal velocity is zero; azimuth geometry is undefined")]
    ZeroHorizontalVelocity,
    #[error("aircraft is directly above the station; azimuth is undefined")]
    ZeroHorizontalSeparation,
    #[error("relative height is zero; horizontal links are unsupported")]
    HorizontalLink,
}

/// Slant range `l` between aircraft `s` and station `o`.
pub fn slant_range(s: Vec3, o: Vec3) -> Result<f64, GeometryError> {
    let l = (o - s).norm();
    if l == 0.0 {
        return Err(GeometryError::CoincidentPoints);
    }
    Ok(l)
}

/// Relative flying height `h = |(o - s) . Z|`.
pub fn relative_height(s: Vec3, o: Vec3) -> f64 {
    (o.z - s.z).abs()
}

/// Horizon distance as the projection of the horizontal separation onto
/// the horizontal velocity direction.
///
/// This is the along-track distance to the point abeam the station; it
/// shrinks to zero at closest approach. The cross-track distance the
/// name suggests is [`cross_track_distance`]; both are exposed and the
/// driver uses the cross-track one for window analytics.
pub fn horizon_distance(s: Vec3, o: Vec3, v: Vec3) -> Result<f64, GeometryError> {
    let vh = v.horizontal_norm();
    if vh == 0.0 {
        return Err(GeometryError::ZeroHorizontalVelocity);
    }
    let so = o - s;
    Ok(v.horizontal_dot(&so).abs() / vh)
}

/// Cross-track horizontal distance between the station and the ground
/// track; constant along a straight pass and equal to the horizontal
/// distance at closest approach.
pub fn cross_track_distance(s: Vec3, o: Vec3, v: Vec3) -> Result<f64, GeometryError> {
    let vh = v.horizontal_norm();
    if vh == 0.0 {
        return Err(GeometryError::ZeroHorizontalVelocity);
    }
    let so = o - s;
    Ok(v.horizontal_cross(&so) / vh)
}

/// Relative azimuth angle `alpha` in [-pi/2, pi/2].
///
/// Zero at closest approach (separation perpendicular to the track),
/// negative while approaching, positive while receding.
pub fn azimuth_angle(s: Vec3, o: Vec3, v: Vec3) -> Result<f64, GeometryError> {
    let vh = v.horizontal_norm();
    if vh == 0.0 {
        return Err(GeometryError::ZeroHorizontalVelocity);
    }
    let so = o - s;
    let soh = so.horizontal_norm();
    if soh == 0.0 {
        return Err(GeometryError::ZeroHorizontalSeparation);
    }
    let cos = (v.horizontal_dot(&so) / (vh * soh)).clamp(-1.0, 1.0);
    Ok(cos.acos() - std::f64::consts::FRAC_PI_2)
}

/// Zenith angle of the receiving telescope, `theta = arccos(h / l)`.
pub fn zenith_angle(s: Vec3, o: Vec3) -> Result<f64, GeometryError> {
    let l = slant_range(s, o)?;
    let h = relative_height(s, o);
    if h == 0.0 {
        return Err(GeometryError::HorizontalLink);
    }
    Ok((h / l).clamp(-1.0, 1.0).acos())
}

/// Advance the aircraft by `dt` seconds at its constant velocity.
pub fn propagate(state: AircraftState, dt: f64) -> AircraftState {
    AircraftState::new(state.position + state.velocity * dt, state.velocity)
}

/// Full geometry sample for one timestep.
pub fn sample_geometry(
    state: &AircraftState,
    station: Vec3,
    t: f64,
) -> Result<GeometrySample, GeometryError> {
    let s = state.position;
    Ok(GeometrySample {
        t,
        l: slant_range(s, station)?,
        h: relative_height(s, station),
        d: cross_track_distance(s, station, state.velocity)?,
        alpha: azimuth_angle(s, station, state.velocity)?,
        theta: zenith_angle(s, station)?,
    })
}
