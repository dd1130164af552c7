//! Aero-optical effects: gradient-index ray tracing through the
//! boundary-layer index grid, optical path length/difference across the
//! transmitter aperture, deflection angle, beam offset and Strehl ratio.
//!
//! Rays follow `d/ds (n dr/ds) = grad n`, integrated as the first-order
//! system `dr/ds = p/|p|`, `dp/ds = grad n`, `dOPL/ds = n` with a classical
//! 4-stage Runge-Kutta scheme. The grid exterior is treated as a uniform
//! medium: index clamps to the nearest edge value and the gradient is zero,
//! so rays leave the layer on straight lines.

use crate::flow::{bilinear, bilinear_gradient, RefractiveIndexGrid};
use thiserror::Error;

/// 2D point or direction in the trace plane (chordwise x, wall-normal y).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(&self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn scale(&self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }

    pub fn add(&self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }

    pub fn normalized(&self) -> Vec2 {
        let n = self.norm();
        Vec2::new(self.x / n, self.y / n)
    }
}

/// A ray entering the trace plane.
#[derive(Debug, Clone, Copy)]
pub struct Ray {
    pub origin: Vec2,
    /// Unit direction.
    pub direction: Vec2,
}

impl Ray {
    /// Build a ray, normalizing the direction.
    pub fn new(origin: Vec2, direction: Vec2) -> Result<Self, AeroError> {
        let n = direction.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(AeroError::ZeroDirection);
        }
        Ok(Self { origin, direction: direction.scale(1.0 / n) })
    }
}

/// Result of tracing one ray through the grid.
#[derive(Debug, Clone)]
pub struct RayTraceResult {
    pub exit_point: Vec2,
    pub exit_direction: Vec2,
    /// Optical path length accumulated inside the grid, metres.
    pub opl: f64,
    /// Visited points, including entry and exit.
    pub path: Vec<Vec2>,
}

/// Optical path samples across the transmitter aperture.
#[derive(Debug, Clone)]
pub struct WavefrontSample {
    /// Transverse offsets across the aperture, metres.
    pub aperture_offsets: Vec<f64>,
    /// Plane-to-plane optical path length per ray, metres.
    pub opl_values: Vec<f64>,
    /// `OPL - mean(OPL)` per ray, metres.
    pub opd_values: Vec<f64>,
    pub opd_rms: f64,
}

/// Per-timestep aero-optical summary.
#[derive(Debug, Clone, Copy)]
pub struct AeroOpticsSummary {
    pub deflection_rad: f64,
    /// Transverse beam displacement at the ground, metres.
    pub offset_m: f64,
    pub opd_rms: f64,
    pub strehl: f64,
    pub phase_rms: f64,
}

/// Ray-fan parameters for aperture wavefront evaluation.
#[derive(Debug, Clone, Copy)]
pub struct FanParams {
    /// Transmitter aperture diameter, metres.
    pub aperture_d: f64,
    /// Rays across the aperture; odd so the chief ray is included.
    pub n_rays: usize,
    /// Integration step, metres.
    pub step_m: f64,
    /// Refractive index outside the grid (freestream).
    pub exterior_index: f64,
}

#[derive(Debug, Error)]
pub enum AeroError {
    #[error("integration step {step} exceeds limit {max} (min cell size / 2)")]
    StepTooLarge { step: f64, max: f64 },
    #[error("step must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("ray origin ({x}, {y}) is outside the grid")]
    OriginOutsideGrid { x: f64, y: f64 },
    #[error("ray direction has zero norm")]
    ZeroDirection,
    #[error("ray did not exit the grid within {0} steps")]
    NoExit(usize),
    #[error("fan needs an odd ray count >= 3, got {0}")]
    BadFanSize(usize),
    #[error("aperture diameter must be positive, got {0}")]
    BadAperture(f64),
    #[error("fan ray turned back toward the aperture plane")]
    RayReversed,
}

// ---------------------------------------------------------------------------
// Index fields
// ---------------------------------------------------------------------------

/// A continuous refractive-index field over the trace plane.
pub trait IndexField {
    fn index(&self, x: f64, y: f64) -> f64;
    fn gradient(&self, x: f64, y: f64) -> (f64, f64);
}

/// Grid-backed field: bilinear inside, clamped to the nearest edge value
/// with zero gradient outside.
pub struct GridField<'a> {
    grid: &'a RefractiveIndexGrid,
}

impl<'a> GridField<'a> {
    pub fn new(grid: &'a RefractiveIndexGrid) -> Self {
        Self { grid }
    }

    fn clamp_point(&self, x: f64, y: f64) -> (f64, f64) {
        (
            x.clamp(self.grid.origin.0, self.grid.x_max()),
            y.clamp(self.grid.origin.1, self.grid.y_max()),
        )
    }
}

impl IndexField for GridField<'_> {
    fn index(&self, x: f64, y: f64) -> f64 {
        let (cx, cy) = self.clamp_point(x, y);
        bilinear(self.grid, cx, cy)
    }

    fn gradient(&self, x: f64, y: f64) -> (f64, f64) {
        if self.grid.contains(x, y) {
            bilinear_gradient(self.grid, x, y)
        } else {
            (0.0, 0.0)
        }
    }
}

// ---------------------------------------------------------------------------
// Tracer
// ---------------------------------------------------------------------------

/// Axis-aligned integration domain.
#[derive(Debug, Clone, Copy)]
pub struct TraceBounds {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl TraceBounds {
    pub fn of_grid(grid: &RefractiveIndexGrid) -> Self {
        Self {
            x_min: grid.origin.0,
            x_max: grid.x_max(),
            y_min: grid.origin.1,
            y_max: grid.y_max(),
        }
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    fn diagonal(&self) -> f64 {
        (self.x_max - self.x_min).hypot(self.y_max - self.y_min)
    }
}

#[derive(Debug, Clone, Copy)]
struct TraceState {
    pos: Vec2,
    /// Optical momentum `n * dr/ds`.
    p: Vec2,
    opl: f64,
}

fn derivative(field: &impl IndexField, s: &TraceState) -> (Vec2, Vec2, f64) {
    let n = field.index(s.pos.x, s.pos.y);
    let (gx, gy) = field.gradient(s.pos.x, s.pos.y);
    let t = s.p.normalized();
    (t, Vec2::new(gx, gy), n)
}

fn rk4_step(field: &impl IndexField, s: &TraceState, h: f64) -> TraceState {
    let (r1, p1, o1) = derivative(field, s);
    let s2 = TraceState {
        pos: s.pos.add(r1.scale(0.5 * h)),
        p: s.p.add(p1.scale(0.5 * h)),
        opl: s.opl,
    };
    let (r2, p2, o2) = derivative(field, &s2);
    let s3 = TraceState {
        pos: s.pos.add(r2.scale(0.5 * h)),
        p: s.p.add(p2.scale(0.5 * h)),
        opl: s.opl,
    };
    let (r3, p3, o3) = derivative(field, &s3);
    let s4 = TraceState { pos: s.pos.add(r3.scale(h)), p: s.p.add(p3.scale(h)), opl: s.opl };
    let (r4, p4, o4) = derivative(field, &s4);
    TraceState {
        pos: s.pos.add(
            r1.add(r2.scale(2.0)).add(r3.scale(2.0)).add(r4).scale(h / 6.0),
        ),
        p: s.p.add(p1.add(p2.scale(2.0)).add(p3.scale(2.0)).add(p4).scale(h / 6.0)),
        opl: s.opl + (o1 + 2.0 * o2 + 2.0 * o3 + o4) * h / 6.0,
    }
}

/// Trace through an arbitrary field until the ray leaves `bounds`.
pub fn trace_field(
    field: &impl IndexField,
    bounds: &TraceBounds,
    ray: &Ray,
    step_m: f64,
    record_path: bool,
) -> Result<RayTraceResult, AeroError> {
    if !(step_m > 0.0) {
        return Err(AeroError::NonPositiveStep(step_m));
    }
    if !bounds.contains(ray.origin) {
        return Err(AeroError::OriginOutsideGrid { x: ray.origin.x, y: ray.origin.y });
    }
    let n0 = field.index(ray.origin.x, ray.origin.y);
    let mut state = TraceState { pos: ray.origin, p: ray.direction.scale(n0), opl: 0.0 };
    let mut path = Vec::new();
    if record_path {
        path.push(state.pos);
    }
    let max_steps = (16.0 * bounds.diagonal() / step_m) as usize + 64;
    for _ in 0..max_steps {
        let next = rk4_step(field, &state, step_m);
        if bounds.contains(next.pos) {
            state = next;
            if record_path {
                path.push(state.pos);
            }
            continue;
        }
        // Bisect the final step length so the exit lands on the boundary.
        let mut lo = 0.0;
        let mut hi = step_m;
        for _ in 0..64 {
            let mid = 0.5 * (lo + hi);
            if bounds.contains(rk4_step(field, &state, mid).pos) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let last = rk4_step(field, &state, hi);
        if record_path {
            path.push(last.pos);
        }
        return Ok(RayTraceResult {
            exit_point: last.pos,
            exit_direction: last.p.normalized(),
            opl: last.opl,
            path,
        });
    }
    Err(AeroError::NoExit(max_steps))
}

/// Trace through a refractive-index grid.
///
/// The step must not exceed half the smaller cell size so the integrator
/// resolves every cell of the bilinear field.
pub fn trace_ray(
    grid: &RefractiveIndexGrid,
    ray: &Ray,
    step_m: f64,
) -> Result<RayTraceResult, AeroError> {
    let max = 0.5 * grid.dx.min(grid.dy);
    if step_m > max {
        return Err(AeroError::StepTooLarge { step: step_m, max });
    }
    trace_field(&GridField::new(grid), &TraceBounds::of_grid(grid), ray, step_m, true)
}

/// Accumulated `integral n ds` of a finished trace.
pub fn optical_path_length(result: &RayTraceResult) -> f64 {
    result.opl
}

// ---------------------------------------------------------------------------
// Aperture wavefront
// ---------------------------------------------------------------------------

/// Trace a fan of parallel rays across the aperture and build the
/// wavefront sample.
///
/// Optical path lengths are referenced plane-to-plane: each ray starts on
/// the aperture plane through the chief origin (perpendicular to the chief
/// direction) and is extended with the exterior index to a common exit
/// plane beyond the grid, so a uniform medium yields identically zero OPD
/// for every fan geometry and tilt.
pub fn aperture_wavefront(
    grid: &RefractiveIndexGrid,
    chief: &Ray,
    params: &FanParams,
) -> Result<WavefrontSample, AeroError> {
    if params.n_rays < 3 || params.n_rays % 2 == 0 {
        return Err(AeroError::BadFanSize(params.n_rays));
    }
    if !(params.aperture_d > 0.0) {
        return Err(AeroError::BadAperture(params.aperture_d));
    }
    let u = chief.direction;
    let perp = Vec2::new(u.y, -u.x);
    let bounds = TraceBounds::of_grid(grid);
    let field = GridField::new(grid);
    let n_ext = params.exterior_index;

    let mut offsets = Vec::with_capacity(params.n_rays);
    // (pre-grid OPL, along-chief exit coordinate, exit direction, in-grid OPL)
    let mut legs = Vec::with_capacity(params.n_rays);
    for i in 0..params.n_rays {
        // Midpoint placement: uniform offsets whose root-mean-square is a
        // proper quadrature of the aperture, so coarse and fine fans agree.
        let xi = params.aperture_d * ((i as f64 + 0.5) / params.n_rays as f64 - 0.5);
        offsets.push(xi);
        let origin = chief.origin.add(perp.scale(xi));
        let (pre_opl, start) = if bounds.contains(origin) {
            (0.0, Some(origin))
        } else {
            match ray_box_entry(origin, u, &bounds) {
                Some(t) => {
                    // Snap onto the boundary; rounding can land a hair outside.
                    let hit = origin.add(u.scale(t));
                    let snapped = Vec2::new(
                        hit.x.clamp(bounds.x_min, bounds.x_max),
                        hit.y.clamp(bounds.y_min, bounds.y_max),
                    );
                    (n_ext * t, Some(snapped))
                }
                // Misses the grid entirely: pure exterior propagation.
                None => (0.0, None),
            }
        };
        match start {
            Some(p0) => {
                let ray = Ray { origin: p0, direction: u };
                let res = trace_field(&field, &bounds, &ray, params.step_m, false)?;
                let along = res.exit_point.add(chief.origin.scale(-1.0)).dot(u);
                legs.push((pre_opl, along, res.exit_direction, res.opl));
            }
            None => legs.push((0.0, 0.0, u, 0.0)),
        }
    }

    // Common exit plane just beyond the farthest exit point.
    let z_exit = legs.iter().map(|l| l.1).fold(f64::NEG_INFINITY, f64::max);
    let mut opl_values = Vec::with_capacity(params.n_rays);
    for (pre, along, dir, in_grid) in &legs {
        let cosine = dir.dot(u);
        if cosine <= 0.0 {
            return Err(AeroError::RayReversed);
        }
        opl_values.push(pre + in_grid + n_ext * (z_exit - along) / cosine);
    }
    let mean = opl_values.iter().sum::<f64>() / opl_values.len() as f64;
    let opd_values: Vec<f64> = opl_values.iter().map(|o| o - mean).collect();
    let opd_rms =
        (opd_values.iter().map(|d| d * d).sum::<f64>() / opd_values.len() as f64).sqrt();
    Ok(WavefrontSample { aperture_offsets: offsets, opl_values, opd_values, opd_rms })
}

/// Distance along `dir` from `origin` to the box boundary, if the ray hits it.
fn ray_box_entry(origin: Vec2, dir: Vec2, bounds: &TraceBounds) -> Option<f64> {
    let mut t_min = 0.0f64;
    let mut t_max = f64::INFINITY;
    for (o, d, lo, hi) in [
        (origin.x, dir.x, bounds.x_min, bounds.x_max),
        (origin.y, dir.y, bounds.y_min, bounds.y_max),
    ] {
        if d.abs() < 1e-300 {
            if o < lo || o > hi {
                return None;
            }
        } else {
            let (t0, t1) = ((lo - o) / d, (hi - o) / d);
            let (t0, t1) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
            t_min = t_min.max(t0);
            t_max = t_max.min(t1);
        }
    }
    (t_min <= t_max).then_some(t_min)
}

// ---------------------------------------------------------------------------
// Scalar relations
// ---------------------------------------------------------------------------

/// Phase difference `phi = 2 pi OPD / lambda`.
pub fn phase_difference(opd_m: f64, lambda_m: f64) -> f64 {
    debug_assert!(lambda_m > 0.0);
    2.0 * std::f64::consts::PI * opd_m / lambda_m
}

/// Strehl ratio under the Marechal approximation,
/// `SR = exp(-(2 pi OPD_rms / lambda)^2)`.
pub fn strehl_ratio(opd_rms_m: f64, lambda_m: f64) -> f64 {
    debug_assert!(lambda_m > 0.0 && opd_rms_m >= 0.0);
    let phi = phase_difference(opd_rms_m, lambda_m);
    (-phi * phi).exp()
}

/// Angle between entry and exit directions, radians.
///
/// Evaluated as `atan2(|cross|, dot)`, the well-conditioned form of the
/// clamped arccos of the dot product: micro-radian deflections survive
/// where `acos` near 1 would round to ~1e-8.
pub fn deflection_angle(entry: Vec2, exit: Vec2) -> f64 {
    let cross = (entry.x * exit.y - entry.y * exit.x).abs();
    cross.atan2(entry.dot(exit))
}

/// Small-angle transverse beam displacement after `range_l` metres.
pub fn drifted_offset(deflection_rad: f64, range_l_m: f64) -> f64 {
    deflection_rad * range_l_m
}

/// Full aero-optical summary for one geometry: chief-ray deflection plus
/// the aperture wavefront statistics.
pub fn aero_summary(
    grid: &RefractiveIndexGrid,
    chief: &Ray,
    params: &FanParams,
    lambda_m: f64,
    range_l_m: f64,
) -> Result<AeroOpticsSummary, AeroError> {
    let wavefront = aperture_wavefront(grid, chief, params)?;
    let chief_trace =
        trace_field(&GridField::new(grid), &TraceBounds::of_grid(grid), chief, params.step_m, false)?;
    let deflection = deflection_angle(chief.direction, chief_trace.exit_direction);
    Ok(AeroOpticsSummary {
        deflection_rad: deflection,
        offset_m: drifted_offset(deflection, range_l_m),
        opd_rms: wavefront.opd_rms,
        strehl: strehl_ratio(wavefront.opd_rms, lambda_m),
        phase_rms: phase_difference(wavefront.opd_rms, lambda_m),
    })
}
