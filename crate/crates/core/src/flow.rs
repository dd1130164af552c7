//! Boundary-layer density fields and refractive-index grids.
//!
//! Density fields come either from an external file (one CFD export per
//! run) or from the synthetic flat-plate generator below. Conversion to
//! refractive index is the Gladstone-Dale relation `n = 1 + rho * K_GD`.
//!
//! The synthetic generator makes no claim of aerodynamic fidelity: it is a
//! deterministic stand-in so the full optics/link/key-rate pipeline can be
//! exercised and calibrated without CFD output. Users with a real density
//! field use the file ingestion path.

use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

/// 2D rectilinear density grid in the airfoil-local frame.
///
/// Nodes sit at `(origin.0 + ix*dx, origin.1 + iy*dy)`; values are stored
/// row-major with `ix` fastest: `values[iy * nx + ix]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub origin: (f64, f64),
    values: Vec<f64>,
}

/// Refractive-index grid on the same lattice as its source density grid.
#[derive(Debug, Clone)]
pub struct RefractiveIndexGrid {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub origin: (f64, f64),
    values: Vec<f64>,
}

/// Gladstone-Dale constant for a given photon wavelength.
#[derive(Debug, Clone, Copy)]
pub struct GladstoneDaleConstant {
    /// m^3/kg.
    pub k_gd: f64,
    /// Photon wavelength, micrometres.
    pub lambda_um: f64,
}

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("wavelength must be positive, got {0}")]
    NonPositiveWavelength(f64),
    #[error("grid dimensions must be at least 2x2, got {nx}x{ny}")]
    BadDimensions { nx: usize, ny: usize },
    #[error("cell sizes must be positive, got dx={dx}, dy={dy}")]
    BadCellSize { dx: f64, dy: f64 },
    #[error("density value at index {index} is negative ({value})")]
    NegativeDensity { index: usize, value: f64 },
    #[error("density value at index {index} is not finite")]
    NonFiniteDensity { index: usize },
    #[error("expected {expected} grid values, found {found}")]
    ValueCount { expected: usize, found: usize },
    #[error("line 1: expected `DENSITY-GRID v1` header, found `{0}`")]
    BadMagic(String),
    #[error("line 2: malformed grid header: {0}")]
    BadHeader(String),
    #[error("value {index}: cannot parse `{token}` as a density")]
    BadValue { index: usize, token: String },
    #[error("synthetic layer: {0} must be positive")]
    NonPositiveParameter(&'static str),
    #[error("sample point ({x}, {y}) is outside the grid")]
    OutOfBounds { x: f64, y: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl DensityGrid {
    pub fn new(
        nx: usize,
        ny: usize,
        dx: f64,
        dy: f64,
        origin: (f64, f64),
        values: Vec<f64>,
    ) -> Result<Self, FlowError> {
        if nx < 2 || ny < 2 {
            return Err(FlowError::BadDimensions { nx, ny });
        }
        if !(dx > 0.0) || !(dy > 0.0) {
            return Err(FlowError::BadCellSize { dx, dy });
        }
        if values.len() != nx * ny {
            return Err(FlowError::ValueCount { expected: nx * ny, found: values.len() });
        }
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() {
                return Err(FlowError::NonFiniteDensity { index });
            }
            if value < 0.0 {
                return Err(FlowError::NegativeDensity { index, value });
            }
        }
        Ok(Self { nx, ny, dx, dy, origin, values })
    }

    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.nx + ix]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl RefractiveIndexGrid {
    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.nx + ix]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Node coordinates of grid node `(ix, iy)`.
    pub fn node(&self, ix: usize, iy: usize) -> (f64, f64) {
        (self.origin.0 + ix as f64 * self.dx, self.origin.1 + iy as f64 * self.dy)
    }

    pub fn x_max(&self) -> f64 {
        self.origin.0 + (self.nx - 1) as f64 * self.dx
    }

    pub fn y_max(&self) -> f64 {
        self.origin.1 + (self.ny - 1) as f64 * self.dy
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.origin.0 && x <= self.x_max() && y >= self.origin.1 && y <= self.y_max()
    }
}

/// Gladstone-Dale constant; the correction term decays with the square of
/// the wavelength in micrometres.
pub fn gladstone_dale_constant(lambda_um: f64) -> Result<GladstoneDaleConstant, FlowError> {
    if !(lambda_um > 0.0) {
        return Err(FlowError::NonPositiveWavelength(lambda_um));
    }
    Ok(GladstoneDaleConstant {
        k_gd: 2.23e-4 * (1.0 + 7.52e-3 / (lambda_um * lambda_um)),
        lambda_um,
    })
}

/// Pointwise `n = 1 + rho * K_GD`.
pub fn to_refractive_index(rho: &DensityGrid, k: &GladstoneDaleConstant) -> RefractiveIndexGrid {
    RefractiveIndexGrid {
        nx: rho.nx,
        ny: rho.ny,
        dx: rho.dx,
        dy: rho.dy,
        origin: rho.origin,
        values: rho.values.iter().map(|&r| 1.0 + r * k.k_gd).collect(),
    }
}

/// Bilinear interpolation of the index grid; exact at nodes.
pub fn sample_index(grid: &RefractiveIndexGrid, x: f64, y: f64) -> Result<f64, FlowError> {
    if !grid.contains(x, y) {
        return Err(FlowError::OutOfBounds { x, y });
    }
    Ok(bilinear(grid, x, y))
}

pub(crate) fn bilinear(grid: &RefractiveIndexGrid, x: f64, y: f64) -> f64 {
    let (ix, iy, fx, fy) = locate(grid, x, y);
    let v00 = grid.value(ix, iy);
    let v10 = grid.value(ix + 1, iy);
    let v01 = grid.value(ix, iy + 1);
    let v11 = grid.value(ix + 1, iy + 1);
    (1.0 - fx) * (1.0 - fy) * v00 + fx * (1.0 - fy) * v10 + (1.0 - fx) * fy * v01 + fx * fy * v11
}

/// Gradient of the bilinear interpolant inside the containing cell.
pub(crate) fn bilinear_gradient(grid: &RefractiveIndexGrid, x: f64, y: f64) -> (f64, f64) {
    let (ix, iy, fx, fy) = locate(grid, x, y);
    let v00 = grid.value(ix, iy);
    let v10 = grid.value(ix + 1, iy);
    let v01 = grid.value(ix, iy + 1);
    let v11 = grid.value(ix + 1, iy + 1);
    let gx = ((1.0 - fy) * (v10 - v00) + fy * (v11 - v01)) / grid.dx;
    let gy = ((1.0 - fx) * (v01 - v00) + fx * (v11 - v10)) / grid.dy;
    (gx, gy)
}

fn locate(grid: &RefractiveIndexGrid, x: f64, y: f64) -> (usize, usize, f64, f64) {
    let u = (x - grid.origin.0) / grid.dx;
    let v = (y - grid.origin.1) / grid.dy;
    let ix = (u.floor() as usize).min(grid.nx - 2);
    let iy = (v.floor() as usize).min(grid.ny - 2);
    (ix, iy, u - ix as f64, v - iy as f64)
}

// ---------------------------------------------------------------------------
// File format
// ---------------------------------------------------------------------------

const MAGIC: &str = "DENSITY-GRID v1";

/// Load a density grid from the plain-text format.
pub fn load_density_grid(path: &Path) -> Result<DensityGrid, FlowError> {
    let text = std::fs::read_to_string(path)?;
    parse_density_grid(&text)
}

pub fn parse_density_grid(text: &str) -> Result<DensityGrid, FlowError> {
    let mut lines = text.lines();
    let magic = lines.next().unwrap_or_default().trim();
    if magic != MAGIC {
        return Err(FlowError::BadMagic(magic.to_string()));
    }
    let header = lines.next().unwrap_or_default();
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 6 {
        return Err(FlowError::BadHeader(format!(
            "expected 6 fields `nx ny dx dy origin_x origin_y`, found {}",
            fields.len()
        )));
    }
    let nx: usize = fields[0]
        .parse()
        .map_err(|_| FlowError::BadHeader(format!("bad nx `{}`", fields[0])))?;
    let ny: usize = fields[1]
        .parse()
        .map_err(|_| FlowError::BadHeader(format!("bad ny `{}`", fields[1])))?;
    let mut geom = [0.0f64; 4];
    for (slot, field) in geom.iter_mut().zip(&fields[2..]) {
        *slot = field
            .parse()
            .map_err(|_| FlowError::BadHeader(format!("bad number `{field}`")))?;
    }
    let mut values = Vec::with_capacity(nx * ny);
    for (index, token) in lines.flat_map(str::split_whitespace).enumerate() {
        let v: f64 = token
            .parse()
            .map_err(|_| FlowError::BadValue { index, token: token.to_string() })?;
        values.push(v);
    }
    DensityGrid::new(nx, ny, geom[0], geom[1], (geom[2], geom[3]), values)
}

/// Write a density grid in the plain-text format with 17 significant digits.
pub fn save_density_grid(grid: &DensityGrid, path: &Path) -> Result<(), FlowError> {
    std::fs::write(path, format_density_grid(grid))?;
    Ok(())
}

pub fn format_density_grid(grid: &DensityGrid) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(
        out,
        "{} {} {:.16e} {:.16e} {:.16e} {:.16e}",
        grid.nx, grid.ny, grid.dx, grid.dy, grid.origin.0, grid.origin.1
    );
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            if ix > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{:.16e}", grid.value(ix, iy));
        }
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------------------
// Synthetic flat-plate layer
// ---------------------------------------------------------------------------

/// One sinusoidal density-structure component of the synthetic layer.
///
/// Structures model the coherent density variation a real turbulent layer
/// carries along the chord; without them a smooth mean profile produces
/// almost no optical path variation across a centimetre-scale aperture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerStructure {
    /// Peak density amplitude, kg/m^3.
    pub amplitude: f64,
    /// Chordwise wavelength, metres.
    pub wavelength_m: f64,
}

/// Parameters of the synthetic flat-plate boundary layer.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticLayer {
    pub freestream_rho: f64,
    pub wall_rho: f64,
    /// Layer thickness at the trailing edge, metres.
    pub thickness_m: f64,
    pub chord_m: f64,
    /// Chordwise cell count; the wall-normal direction uses half as many.
    pub resolution: usize,
    /// Optional coherent structures; empty means the bare mean profile.
    pub structures: Vec<LayerStructure>,
    /// Chord fraction where structure phase crosses zero (maximum slope).
    pub phase_center_frac: f64,
}

impl SyntheticLayer {
    pub fn new(
        freestream_rho: f64,
        wall_rho: f64,
        thickness_m: f64,
        chord_m: f64,
        resolution: usize,
    ) -> Self {
        Self {
            freestream_rho,
            wall_rho,
            thickness_m,
            chord_m,
            resolution,
            structures: Vec::new(),
            phase_center_frac: 0.7,
        }
    }

    /// Layer thickness at chordwise station `x`.
    pub fn delta(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            self.thickness_m * (x / self.chord_m).powf(0.8)
        }
    }

    /// Analytic density at `(x, y)`; `y = 0` is the wall.
    pub fn density_at(&self, x: f64, y: f64) -> f64 {
        let mut rho = if y <= 0.0 {
            self.wall_rho
        } else {
            let delta = self.delta(x);
            if y >= delta {
                self.freestream_rho
            } else {
                // 1/7-power blend across the local thickness.
                self.wall_rho + (self.freestream_rho - self.wall_rho) * (y / delta).powf(1.0 / 7.0)
            }
        };
        let delta = self.delta(x);
        if y > 0.0 && y < delta {
            let x0 = self.phase_center_frac * self.chord_m;
            let window = (std::f64::consts::PI * y / delta).sin();
            for s in &self.structures {
                if s.amplitude != 0.0 && s.wavelength_m > 0.0 {
                    rho += s.amplitude
                        * (2.0 * std::f64::consts::PI * (x - x0) / s.wavelength_m).sin()
                        * window;
                }
            }
        }
        rho
    }

    /// Evaluate the layer on its grid. The domain is `[0, chord]` along
    /// the chord and `[0, 1.5 * thickness]` wall-normal.
    pub fn generate(&self) -> Result<DensityGrid, FlowError> {
        for (name, v) in [
            ("freestream_rho", self.freestream_rho),
            ("wall_rho", self.wall_rho),
            ("thickness_m", self.thickness_m),
            ("chord_m", self.chord_m),
            ("resolution", self.resolution as f64),
        ] {
            if !(v > 0.0) {
                return Err(FlowError::NonPositiveParameter(name));
            }
        }
        let nx_cells = self.resolution.max(2);
        let ny_cells = (self.resolution / 2).max(2);
        let nx = nx_cells + 1;
        let ny = ny_cells + 1;
        let dx = self.chord_m / nx_cells as f64;
        let height = 1.5 * self.thickness_m;
        let dy = height / ny_cells as f64;
        let mut values = Vec::with_capacity(nx * ny);
        for iy in 0..ny {
            let y = iy as f64 * dy;
            for ix in 0..nx {
                let x = ix as f64 * dx;
                values.push(self.density_at(x, y));
            }
        }
        DensityGrid::new(nx, ny, dx, dy, (0.0, 0.0), values)
    }
}

/// Bare flat-plate layer with no coherent structures.
pub fn synth_boundary_layer(
    freestream_rho: f64,
    wall_rho: f64,
    thickness_m: f64,
    chord_m: f64,
    resolution: usize,
) -> Result<DensityGrid, FlowError> {
    SyntheticLayer::new(freestream_rho, wall_rho, thickness_m, chord_m, resolution).generate()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn gladstone_dale_frozen_values() {
        // Frozen from direct evaluation at 50-digit precision.
        assert!(approx(
            gladstone_dale_constant(1.55).unwrap().k_gd,
            2.2369800624349636e-4,
            1e-19
        ));
        assert!(approx(gladstone_dale_constant(0.5).unwrap().k_gd, 2.2970784e-4, 1e-19));
        // Long-wavelength limit: correction vanishes.
        assert!(approx(gladstone_dale_constant(1e9).unwrap().k_gd, 2.23e-4, 1e-12));
    }

    #[test]
    fn gladstone_dale_rejects_nonpositive() {
        assert!(gladstone_dale_constant(0.0).is_err());
        assert!(gladstone_dale_constant(-1.0).is_err());
    }

    fn uniform_grid(rho: f64) -> DensityGrid {
        DensityGrid::new(3, 2, 0.5, 0.5, (0.0, 0.0), vec![rho; 6]).unwrap()
    }

    #[test]
    fn refractive_index_frozen_values() {
        let k = gladstone_dale_constant(1.55).unwrap();
        let vacuum = to_refractive_index(&uniform_grid(0.0), &k);
        assert!(vacuum.values().iter().all(|&n| n == 1.0));
        // Table 1 air density at 10 km.
        let n = to_refractive_index(&uniform_grid(0.413), &k).value(0, 0);
        assert!(approx(n, 1.0000923872765786, 1e-13));
        // Sea-level density.
        let n = to_refractive_index(&uniform_grid(1.225), &k).value(0, 0);
        assert!(approx(n, 1.0002740300576483, 1e-13));
    }

    #[test]
    fn refractive_index_monotone_in_density() {
        let k = gladstone_dale_constant(1.55).unwrap();
        let lo = to_refractive_index(&uniform_grid(0.3), &k);
        let hi = to_refractive_index(&uniform_grid(0.9), &k);
        for (a, b) in lo.values().iter().zip(hi.values()) {
            assert!(b >= a);
        }
    }

    #[test]
    fn parse_uniform_two_by_two() {
        let text = "DENSITY-GRID v1\n2 2 0.1 0.1 0 0\n0.413 0.413\n0.413 0.413\n";
        let g = parse_density_grid(text).unwrap();
        assert_eq!((g.nx, g.ny), (2, 2));
        assert!(g.values().iter().all(|&v| v == 0.413));
    }

    #[test]
    fn parse_errors_are_distinct() {
        assert!(matches!(
            parse_density_grid("DENSITY GRID\n"),
            Err(FlowError::BadMagic(_))
        ));
        assert!(matches!(
            parse_density_grid("DENSITY-GRID v1\n2 2 0.1\n"),
            Err(FlowError::BadHeader(_))
        ));
        // Declared 3x2 but only 4 values present.
        assert!(matches!(
            parse_density_grid("DENSITY-GRID v1\n3 2 0.1 0.1 0 0\n1 1\n1 1\n"),
            Err(FlowError::ValueCount { expected: 6, found: 4 })
        ));
        assert!(matches!(
            parse_density_grid("DENSITY-GRID v1\n2 2 0.1 0.1 0 0\n1 1 1 -0.5\n"),
            Err(FlowError::NegativeDensity { .. })
        ));
        assert!(matches!(
            parse_density_grid("DENSITY-GRID v1\n2 2 0.1 0.1 0 0\n1 1 x 1\n"),
            Err(FlowError::BadValue { .. })
        ));
        assert!(matches!(
            load_density_grid(Path::new("/nonexistent/grid.txt")),
            Err(FlowError::Io(_))
        ));
    }

    #[test]
    fn save_load_round_trip_bit_exact() {
        let layer = SyntheticLayer::new(0.413, 0.35, 0.03, 3.0, 32);
        let grid = layer.generate().unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("layer.dat");
        save_density_grid(&grid, &path).unwrap();
        let back = load_density_grid(&path).unwrap();
        assert_eq!(grid, back);
    }

    #[test]
    fn synthetic_layer_boundary_conditions() {
        let layer = SyntheticLayer::new(0.413, 0.35, 0.03, 3.0, 64);
        let grid = layer.generate().unwrap();
        // Wall row is wall density; top row is freestream.
        for ix in 0..grid.nx {
            assert!(approx(grid.value(ix, 0), 0.35, 1e-12));
            assert!(approx(grid.value(ix, grid.ny - 1), 0.413, 1e-12));
        }
    }

    #[test]
    fn synthetic_layer_degenerate_is_uniform() {
        let grid = synth_boundary_layer(0.413, 0.413, 0.03, 3.0, 16).unwrap();
        assert!(grid.values().iter().all(|&v| v == 0.413));
    }

    #[test]
    fn synthetic_layer_rejects_nonpositive() {
        assert!(synth_boundary_layer(0.0, 0.3, 0.03, 3.0, 16).is_err());
        assert!(synth_boundary_layer(0.4, 0.3, -0.03, 3.0, 16).is_err());
    }

    #[test]
    fn synthetic_layer_refinement_consistency() {
        // Doubling the resolution reproduces the field at shared nodes.
        let mut layer = SyntheticLayer::new(0.413, 0.35, 0.03, 3.0, 64);
        layer.structures.push(LayerStructure { amplitude: 0.05, wavelength_m: 0.5 });
        let coarse = layer.generate().unwrap();
        layer.resolution = 128;
        let fine = layer.generate().unwrap();
        for iy in 0..coarse.ny {
            for ix in 0..coarse.nx {
                let c = coarse.value(ix, iy);
                let f = fine.value(2 * ix, 2 * iy);
                assert!(approx(c, f, 1e-6), "node ({ix},{iy}): {c} vs {f}");
            }
        }
    }

    #[test]
    fn sample_index_exact_at_nodes_and_bilinear() {
        let k = gladstone_dale_constant(1.55).unwrap();
        let layer = SyntheticLayer::new(0.413, 0.35, 0.03, 3.0, 32);
        let n = to_refractive_index(&layer.generate().unwrap(), &k);
        for iy in (0..n.ny).step_by(3) {
            for ix in (0..n.nx).step_by(5) {
                let (x, y) = n.node(ix, iy);
                assert_eq!(sample_index(&n, x, y).unwrap(), n.value(ix, iy));
            }
        }
        // Uniform grid: every interior point returns the uniform value.
        let u = to_refractive_index(&uniform_grid(0.5), &k);
        let v = u.value(0, 0);
        assert!(approx(sample_index(&u, 0.73, 0.21).unwrap(), v, 1e-15));
    }

    #[test]
    fn sample_index_linear_field_midpoint() {
        // n linear in x: midpoint query is the mean of the neighbours.
        let rho = DensityGrid::new(
            3,
            2,
            1.0,
            1.0,
            (0.0, 0.0),
            vec![0.0, 1.0, 2.0, 0.0, 1.0, 2.0],
        )
        .unwrap();
        let k = gladstone_dale_constant(1.55).unwrap();
        let n = to_refractive_index(&rho, &k);
        let mid = sample_index(&n, 0.5, 0.0).unwrap();
        assert!(approx(mid, 0.5 * (n.value(0, 0) + n.value(1, 0)), 1e-15));
    }

    #[test]
    fn sample_index_out_of_bounds() {
        let k = gladstone_dale_constant(1.55).unwrap();
        let n = to_refractive_index(&uniform_grid(0.5), &k);
        assert!(matches!(sample_index(&n, -0.1, 0.0), Err(FlowError::OutOfBounds { .. })));
        assert!(matches!(sample_index(&n, 0.0, 9.9), Err(FlowError::OutOfBounds { .. })));
    }

    #[test]
    fn bilinear_reproduces_affine_fields() {
        // Affine field sampled on the grid interpolates exactly everywhere.
        let (a, b, c) = (1.0, 3e-4, -2e-4);
        let mut values = Vec::new();
        for iy in 0..5 {
            for ix in 0..7 {
                values.push(a + b * (0.25 * ix as f64) + c * (0.5 * iy as f64));
            }
        }
        let rho = DensityGrid::new(7, 5, 0.25, 0.5, (0.0, 0.0), values).unwrap();
        let n = RefractiveIndexGrid {
            nx: rho.nx,
            ny: rho.ny,
            dx: rho.dx,
            dy: rho.dy,
            origin: rho.origin,
            values: rho.values().to_vec(),
        };
        for &(x, y) in &[(0.1, 0.1), (0.77, 1.3), (1.49, 1.99), (0.333, 0.777)] {
            let expect = a + b * x + c * y;
            assert!(approx(bilinear(&n, x, y), expect, 1e-12));
        }
    }
}
