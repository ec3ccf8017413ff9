//! The qubit's electric field inside the piezoelectric film: analytic disk or
//! sampled grid, squared-field integrals, in-plane Fourier transforms and the
//! field-map file format.
//!
//! A field-map file holds one component:
//!
//! ```text
//! # nx, ny, dx_m, dy_m, component
//! # 150, 150, 5e-6, 5e-6, z
//! v00, v01, ..., v0(nx-1)
//! ...
//! ```
//!
//! Row `j` holds the cells at `y_j = (j - (ny-1)/2) dy`, column `i` those at
//! `x_i = (i - (nx-1)/2) dx`; the grid is centred on the qubit pad.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::special::jinc;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    X,
    Y,
    Z,
}

impl Component {
    pub const ALL: [Component; 3] = [Component::X, Component::Y, Component::Z];

    pub fn label(self) -> char {
        match self {
            Component::X => 'x',
            Component::Y => 'y',
            Component::Z => 'z',
        }
    }

    pub fn file_name(self) -> &'static str {
        match self {
            Component::X => "Ex.csv",
            Component::Y => "Ey.csv",
            Component::Z => "Ez.csv",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "x" | "ex" => Some(Component::X),
            "y" | "ey" => Some(Component::Y),
            "z" | "ez" => Some(Component::Z),
            _ => None,
        }
    }
}

/// Sampled field on a uniform, pad-centred grid; values are row-major (`ny` rows of `nx`).
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub ex: Vec<f64>,
    pub ey: Vec<f64>,
    pub ez: Vec<f64>,
}

impl FieldGrid {
    pub fn new(nx: usize, ny: usize, dx: f64, dy: f64, ex: Vec<f64>, ey: Vec<f64>, ez: Vec<f64>) -> Result<Self> {
        let g = Self { nx, ny, dx, dy, ex, ey, ez };
        g.validate()?;
        Ok(g)
    }

    pub fn zeros(nx: usize, ny: usize, dx: f64, dy: f64) -> Result<Self> {
        let n = nx * ny;
        Self::new(nx, ny, dx, dy, vec![0.0; n], vec![0.0; n], vec![0.0; n])
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::InvalidInput("field grid must be non-empty".into()));
        }
        if !(self.dx > 0.0 && self.dy > 0.0 && self.dx.is_finite() && self.dy.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "grid spacing must be positive, got ({}, {})",
                self.dx, self.dy
            )));
        }
        for c in Component::ALL {
            let v = self.component(c);
            if v.len() != self.nx * self.ny {
                return Err(Error::Shape {
                    what: "field grid component",
                    expected: self.nx * self.ny,
                    got: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "E{} contains non-finite values",
                    c.label()
                )));
            }
        }
        Ok(())
    }

    pub fn component(&self, c: Component) -> &[f64] {
        match c {
            Component::X => &self.ex,
            Component::Y => &self.ey,
            Component::Z => &self.ez,
        }
    }

    pub fn x(&self, i: usize) -> f64 {
        (i as f64 - 0.5 * (self.nx as f64 - 1.0)) * self.dx
    }

    pub fn y(&self, j: usize) -> f64 {
        (j as f64 - 0.5 * (self.ny as f64 - 1.0)) * self.dy
    }

    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    /// Midpoint-rule `∫ E_c² d²r`.
    pub fn squared_integral(&self, c: Component) -> f64 {
        self.component(c).iter().map(|v| v * v).sum::<f64>() * self.cell_area()
    }

    /// `Ê_c(k) = ∫ E_c(r) exp(-i k·r) d²r` by direct summation.
    pub fn transform(&self, c: Component, kx: f64, ky: f64) -> Complex64 {
        let v = self.component(c);
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..self.ny {
            let py = -ky * self.y(j);
            for i in 0..self.nx {
                let e = v[j * self.nx + i];
                if e != 0.0 {
                    acc += e * Complex64::from_polar(1.0, py - kx * self.x(i));
                }
            }
        }
        acc * self.cell_area()
    }

    /// `√⟨|Ê_c|²⟩` averaged over `n_angles` directions of k⊥.
    pub fn radial_transform(&self, c: Component, k: f64, n_angles: usize) -> f64 {
        let n = n_angles.max(1);
        let p: f64 = (0..n)
            .map(|a| {
                let th = std::f64::consts::PI * a as f64 / n as f64;
                self.transform(c, k * th.cos(), k * th.sin()).norm_sqr()
            })
            .sum();
        (p / n as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FieldProfile {
    UniformDisk { ez: f64, a: f64 },
    SampledGrid(FieldGrid),
}

/// Squared-field integrals of the three components (V²).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct FieldIntegrals {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl FieldProfile {
    pub fn uniform_disk(ez: f64, a: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) || !ez.is_finite() {
            return Err(Error::InvalidInput(format!(
                "uniform disk needs finite E_z and a > 0, got E_z = {ez}, a = {a}"
            )));
        }
        Ok(FieldProfile::UniformDisk { ez, a })
    }

    /// Integrals of all three components; a uniform disk has no in-plane field.
    pub fn integrals(&self) -> FieldIntegrals {
        match self {
            FieldProfile::UniformDisk { ez, a } => FieldIntegrals {
                x: 0.0,
                y: 0.0,
                z: ez * ez * std::f64::consts::PI * a * a,
            },
            FieldProfile::SampledGrid(g) => FieldIntegrals {
                x: g.squared_integral(Component::X),
                y: g.squared_integral(Component::Y),
                z: g.squared_integral(Component::Z),
            },
        }
    }

    /// Representative E_z over a pad of radius `a`: `√(∫E_z² / πa²)`.
    pub fn rms_ez(&self, a: f64) -> f64 {
        (self.integrals().z / (std::f64::consts::PI * a * a)).sqrt()
    }
}

/// `Ê_z(k⊥) = E_z πa² · 2J1(k⊥a)/(k⊥a)` (V·m).
pub fn disk_transform(ez: f64, a: f64, k_perp: f64) -> f64 {
    ez * std::f64::consts::PI * a * a * jinc(k_perp * a)
}

pub fn squared_field_integral(profile: &FieldProfile, component: Component) -> Result<f64> {
    match (profile, component) {
        (FieldProfile::UniformDisk { ez, a }, Component::Z) => Ok(ez * ez * std::f64::consts::PI * a * a),
        (FieldProfile::UniformDisk { .. }, c) => Err(Error::MissingComponent(c.label())),
        (FieldProfile::SampledGrid(g), c) => Ok(g.squared_integral(c)),
    }
}

/// In-plane transform of E_z as a function of |k⊥|.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldTransform {
    Disk { ez: f64, a: f64 },
    /// Tabulated on increasing `k`, linearly interpolated, zero beyond the last point.
    Table { k: Vec<f64>, values: Vec<f64> },
}

impl FieldTransform {
    pub fn eval(&self, k_perp: f64) -> f64 {
        let k_perp = k_perp.abs();
        match self {
            FieldTransform::Disk { ez, a } => disk_transform(*ez, *a, k_perp),
            FieldTransform::Table { k, values } => {
                if k.is_empty() || k_perp > *k.last().unwrap() {
                    return 0.0;
                }
                let i = k.partition_point(|&x| x <= k_perp).clamp(1, k.len() - 1);
                let (k0, k1) = (k[i - 1], k[i]);
                let t = if k1 > k0 { (k_perp - k0) / (k1 - k0) } else { 0.0 };
                values[i - 1] + t * (values[i] - values[i - 1])
            }
        }
    }

    /// Azimuthally averaged `|Ê_z|` of a grid on `n` points up to `k_max`.
    pub fn from_grid(grid: &FieldGrid, k_max: f64, n: usize) -> Self {
        let k: Vec<f64> = (0..n).map(|i| k_max * i as f64 / (n - 1).max(1) as f64).collect();
        let values = k.iter().map(|&kk| grid.radial_transform(Component::Z, kk, 16)).collect();
        FieldTransform::Table { k, values }
    }
}

fn map_err(path: &Path, msg: impl Into<String>) -> Error {
    Error::FieldMap {
        path: path.to_path_buf(),
        msg: msg.into(),
    }
}

/// One parsed field-map file.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentFile {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub component: Component,
    pub values: Vec<f64>,
}

pub fn parse_component(text: &str, path: &Path) -> Result<ComponentFile> {
    let mut header: Option<(usize, usize, f64, f64, Component)> = None;
    let mut values = Vec::new();
    let mut rows = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let parts: Vec<&str> = rest.split(',').map(str::trim).collect();
            if parts.first().map_or(true, |p| p.parse::<usize>().is_err()) {
                continue; // column-name line
            }
            if header.is_some() {
                return Err(map_err(path, format!("line {}: duplicate header", lineno + 1)));
            }
            if parts.len() != 5 {
                return Err(map_err(path, "malformed header: expected nx, ny, dx_m, dy_m, component"));
            }
            let nx = parts[0].parse::<usize>().map_err(|e| map_err(path, format!("bad nx: {e}")))?;
            let ny = parts[1].parse::<usize>().map_err(|e| map_err(path, format!("bad ny: {e}")))?;
            let dx = parts[2].parse::<f64>().map_err(|e| map_err(path, format!("bad dx_m: {e}")))?;
            let dy = parts[3].parse::<f64>().map_err(|e| map_err(path, format!("bad dy_m: {e}")))?;
            let c = Component::parse(parts[4])
                .ok_or_else(|| map_err(path, format!("unknown component '{}'", parts[4])))?;
            if nx == 0 || ny == 0 || !(dx > 0.0) || !(dy > 0.0) {
                return Err(map_err(path, "malformed header: sizes and spacings must be positive"));
            }
            header = Some((nx, ny, dx, dy, c));
            values.reserve(nx * ny);
            continue;
        }
        let (nx, ny, ..) = header.ok_or_else(|| map_err(path, "data before header"))?;
        if rows == ny {
            return Err(map_err(path, format!("more than {ny} data rows")));
        }
        let mut count = 0;
        for (col, tok) in line.split(',').enumerate() {
            let v: f64 = tok.trim().parse().map_err(|_| {
                map_err(path, format!("row {rows}, column {col}: cannot parse '{}'", tok.trim()))
            })?;
            if !v.is_finite() {
                return Err(map_err(path, format!("row {rows}, column {col}: value {v} is not finite")));
            }
            values.push(v);
            count += 1;
        }
        if count != nx {
            return Err(map_err(path, format!("row {rows} has {count} values, expected {nx}")));
        }
        rows += 1;
    }
    let (nx, ny, dx, dy, component) = header.ok_or_else(|| map_err(path, "missing header"))?;
    if rows != ny {
        return Err(map_err(path, format!("found {rows} data rows, expected {ny}")));
    }
    Ok(ComponentFile { nx, ny, dx, dy, component, values })
}

pub fn read_component(path: &Path) -> Result<ComponentFile> {
    let text = std::fs::read_to_string(path).map_err(|e| map_err(path, e.to_string()))?;
    parse_component(&text, path)
}

pub fn format_component(grid: &FieldGrid, c: Component) -> String {
    let mut s = String::with_capacity(grid.nx * grid.ny * 24 + 64);
    s.push_str("# nx, ny, dx_m, dy_m, component\n");
    let _ = writeln!(s, "# {}, {}, {:e}, {:e}, {}", grid.nx, grid.ny, grid.dx, grid.dy, c.label());
    let v = grid.component(c);
    for row in v.chunks(grid.nx) {
        for (i, x) in row.iter().enumerate() {
            if i > 0 {
                s.push_str(", ");
            }
            // Shortest round-trip representation.
            let _ = write!(s, "{x:e}");
        }
        s.push('\n');
    }
    s
}

/// Write `Ex.csv`, `Ey.csv`, `Ez.csv` into `dir`.
pub fn write_field_map(dir: &Path, grid: &FieldGrid) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for c in Component::ALL {
        std::fs::write(dir.join(c.file_name()), format_component(grid, c))?;
    }
    Ok(())
}

/// Load `Ex.csv`, `Ey.csv`, `Ez.csv` from `dir` into a sampled profile.
pub fn load_field_map(dir: &Path) -> Result<FieldProfile> {
    let mut parts: Vec<ComponentFile> = Vec::with_capacity(3);
    for c in Component::ALL {
        let path: PathBuf = dir.join(c.file_name());
        let f = read_component(&path)?;
        if f.component != c {
            return Err(map_err(&path, format!("header declares component {}", f.component.label())));
        }
        if let Some(first) = parts.first() {
            if (f.nx, f.ny, f.dx, f.dy) != (first.nx, first.ny, first.dx, first.dy) {
                return Err(map_err(&path, "grid shape or spacing differs from Ex.csv"));
            }
        }
        parts.push(f);
    }
    let ez = parts.pop().unwrap();
    let ey = parts.pop().unwrap();
    let ex = parts.pop().unwrap();
    Ok(FieldProfile::SampledGrid(FieldGrid::new(
        ez.nx, ez.ny, ez.dx, ez.dy, ex.values, ey.values, ez.values,
    )?))
}

/// Synthetic stand-in for the simulated qubit field used as a regression fixture.
///
/// Inner disk pad and outer ring with opposite E_z, Gaussian enhancement at the
/// pad edges, and a radial in-plane field in the gap. Amplitudes are calibrated
/// on the grid itself so the three midpoint integrals hit the target values.
pub mod reference {
    use super::FieldGrid;

    pub const N: usize = 150;
    pub const SPACING: f64 = 5e-6;
    /// Inner pad radius and the inner/outer radii of the ring electrode (m).
    pub const R_PAD: f64 = 135e-6;
    pub const R_RING_IN: f64 = 200e-6;
    pub const R_RING_OUT: f64 = 350e-6;
    /// E_z on the inner pad (V/m).
    pub const E_PAD: f64 = 0.045;
    /// Width of the edge enhancement (m).
    pub const RIM_WIDTH: f64 = 10e-6;
    /// Target squared integrals (V²).
    pub const TARGET_X: f64 = 2.33e-10;
    pub const TARGET_Y: f64 = 2.17e-10;
    pub const TARGET_Z: f64 = 5.75e-10;

    pub fn grid() -> FieldGrid {
        let mut g = FieldGrid::zeros(N, N, SPACING, SPACING).expect("static grid");
        let area = g.cell_area();
        // Zero net flux between pad and ring.
        let e_ring = E_PAD * R_PAD * R_PAD / (R_RING_OUT * R_RING_OUT - R_RING_IN * R_RING_IN);
        let gauss = |d: f64| {
            if d.abs() > 5.0 * RIM_WIDTH {
                0.0
            } else {
                (-0.5 * (d / RIM_WIDTH).powi(2)).exp()
            }
        };

        let n = N * N;
        let mut base = vec![0.0; n];
        let mut rim = vec![0.0; n];
        let mut ux = vec![0.0; n];
        let mut uy = vec![0.0; n];
        for j in 0..N {
            for i in 0..N {
                let (x, y) = (g.x(i), g.y(j));
                let r = x.hypot(y);
                let k = j * N + i;
                base[k] = if r < R_PAD {
                    E_PAD
                } else if (R_RING_IN..R_RING_OUT).contains(&r) {
                    -e_ring
                } else {
                    0.0
                };
                rim[k] = gauss(r - R_PAD) - gauss(r - R_RING_IN);
                if r > R_PAD && r < R_RING_IN {
                    let er = (std::f64::consts::PI * (r - R_PAD) / (R_RING_IN - R_PAD)).sin();
                    ux[k] = er * x / r;
                    uy[k] = er * y / r;
                }
            }
        }
        // Solve Σ(base + A·rim)² dA = target for the positive root A.
        let qa: f64 = rim.iter().map(|r| r * r).sum();
        let qb: f64 = 2.0 * base.iter().zip(&rim).map(|(b, r)| b * r).sum::<f64>();
        let qc: f64 = base.iter().map(|b| b * b).sum::<f64>() - TARGET_Z / area;
        let amp = (-qb + (qb * qb - 4.0 * qa * qc).sqrt()) / (2.0 * qa);
        let sx = (TARGET_X / (ux.iter().map(|v| v * v).sum::<f64>() * area)).sqrt();
        let sy = (TARGET_Y / (uy.iter().map(|v| v * v).sum::<f64>() * area)).sqrt();

        g.ez = base.iter().zip(&rim).map(|(b, r)| b + amp * r).collect();
        g.ex = ux.iter().map(|v| sx * v).collect();
        g.ey = uy.iter().map(|v| sy * v).collect();
        g
    }
}

/// Directory holding the shipped reference field map.
pub fn reference_field_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join("reference_field")
}
