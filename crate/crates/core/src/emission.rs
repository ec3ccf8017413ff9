//! Spontaneous emission of sound into the substrate and coupling to discrete
//! standing waves.
//!
//! The substrate supplies density and wave velocities; the piezoelectric film
//! supplies `e33`, `e15` and the dielectric constant.

use rayon::prelude::*;
use serde::Serialize;

use crate::constants::{EPS0, HBAR, TWO_PI};
use crate::error::{Error, Result};
use crate::fields::{Component, FieldProfile, FieldTransform};
use crate::materials::MaterialTensorSet;
use crate::special::{bessel_root, j0, j1};

/// Scalar material data the emission formulas need.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Medium {
    /// Substrate density (kg/m³).
    pub rho: f64,
    pub v_l: f64,
    pub v_sh: f64,
    pub v_perp: f64,
    /// Film piezoelectric moduli (C/m²).
    pub e33: f64,
    pub e15: f64,
    /// Film relative permittivity along z.
    pub eps33: f64,
}

impl Medium {
    pub fn from_materials(substrate: &MaterialTensorSet, film: &MaterialTensorSet) -> Result<Self> {
        let v = substrate.stiffened_velocities()?;
        let e = film.piezo_stress().ok_or_else(|| {
            Error::InvalidInput(format!("film '{}' has no piezoelectric tensor", film.name))
        })?;
        let eps = film
            .eps
            .ok_or_else(|| Error::InvalidInput(format!("film '{}' has no dielectric tensor", film.name)))?;
        Ok(Self {
            rho: substrate.rho,
            v_l: v.v_l,
            v_sh: v.v_sh,
            v_perp: v.v_perp,
            e33: e[(2, 2)],
            e15: e[(0, 4)],
            eps33: eps[(2, 2)],
        })
    }

    pub fn with_e33(self, e33: f64) -> Self {
        Self { e33, ..self }
    }

    pub fn with_e15(self, e15: f64) -> Self {
        Self { e15, ..self }
    }

    /// `ω_n = π n v_l / b`.
    pub fn overtone_frequency(&self, n: u32, b: f64) -> f64 {
        std::f64::consts::PI * n as f64 * self.v_l / b
    }

    /// `ω_n(k⊥) = √(ω_n² + v⊥² k⊥²)`.
    pub fn dispersion(&self, n: u32, b: f64, k_perp: f64) -> f64 {
        self.overtone_frequency(n, b).hypot(self.v_perp * k_perp)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Transducer {
    Flat,
    Dome { z0: f64, r: f64 },
    Cylinder { z0: f64, r: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeviceGeometry {
    /// Resonator thickness (m).
    pub b: f64,
    /// Piezoelectric film thickness (m).
    pub b_p: f64,
    pub transducer: Transducer,
    /// Qubit pad radius (m).
    pub a: f64,
    pub n: Option<u32>,
}

impl DeviceGeometry {
    pub fn new(b: f64, b_p: f64, transducer: Transducer, a: f64) -> Result<Self> {
        let g = Self { b, b_p, transducer, a, n: None };
        g.validate()?;
        Ok(g)
    }

    pub fn with_overtone(self, n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("overtone n must be positive".into()));
        }
        Ok(Self { n: Some(n), ..self })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if !(self.b > 0.0 && self.b.is_finite()) {
            return bad(format!("resonator thickness must be positive, got {}", self.b));
        }
        if !(self.b_p > 0.0 && self.b_p < self.b / 10.0) {
            return bad(format!("film thickness must satisfy 0 < b_p < b/10, got {}", self.b_p));
        }
        if !(self.a > 0.0 && self.a.is_finite()) {
            return bad(format!("pad radius must be positive, got {}", self.a));
        }
        match self.transducer {
            Transducer::Flat => Ok(()),
            Transducer::Dome { z0, r } | Transducer::Cylinder { z0, r } => {
                if !(z0 > 0.0 && z0 < self.b) {
                    return bad(format!("transducer height must satisfy 0 < z0 < b, got {z0}"));
                }
                if !(r > 0.0 && r.is_finite()) {
                    return bad(format!("transducer radius must be positive, got {r}"));
                }
                Ok(())
            }
        }
    }

    /// Dome radius of curvature `R = r²/(2 z0)`.
    pub fn curvature_radius(&self) -> Option<f64> {
        match self.transducer {
            Transducer::Dome { z0, r } => Some(r * r / (2.0 * z0)),
            _ => None,
        }
    }

    /// `V_mode = b π a²`.
    pub fn mode_volume(&self) -> f64 {
        self.b * std::f64::consts::PI * self.a * self.a
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CouplingResult {
    /// Coupling (rad/s), non-negative.
    pub g: f64,
    pub n: u32,
    pub m: u32,
    pub l: u32,
    /// Mode frequency (rad/s).
    pub frequency: f64,
}

fn check_omega(omega0: f64) -> Result<()> {
    if !(omega0 > 0.0 && omega0.is_finite()) {
        return Err(Error::InvalidInput(format!("qubit frequency must be positive, got {omega0}")));
    }
    Ok(())
}

/// `sin⁴(ω0 b_p / 2v)`: thickness suppression of emission from a film of thickness `b_p`.
pub fn thickness_factor(omega0: f64, b_p: f64, v: f64) -> f64 {
    (omega0 * b_p / (2.0 * v)).sin().powi(4)
}

fn free_space_rate(e: f64, v: f64, rho: f64, omega0: f64, b_p: f64, e2: f64) -> f64 {
    TWO_PI / HBAR * 4.0 * e * e / (std::f64::consts::PI * v * rho * omega0) * thickness_factor(omega0, b_p, v) * e2
}

/// Longitudinal emission rate into acoustic free space (rad/s).
pub fn free_space_rate_longitudinal(medium: &Medium, geom: &DeviceGeometry, omega0: f64, ez2_integral: f64) -> Result<f64> {
    check_omega(omega0)?;
    Ok(free_space_rate(medium.e33, medium.v_l, medium.rho, omega0, geom.b_p, ez2_integral))
}

/// Shear emission rate for one in-plane polarization (rad/s).
pub fn free_space_rate_shear(
    medium: &Medium,
    geom: &DeviceGeometry,
    omega0: f64,
    e_alpha2_integral: f64,
    polarization: Component,
) -> Result<f64> {
    check_omega(omega0)?;
    if polarization == Component::Z {
        return Err(Error::InvalidInput("shear polarization must be x or y".into()));
    }
    Ok(free_space_rate(medium.e15, medium.v_sh, medium.rho, omega0, geom.b_p, e_alpha2_integral))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FreeSpaceRates {
    pub longitudinal: f64,
    pub shear_x: f64,
    pub shear_y: f64,
    pub total: f64,
}

impl FreeSpaceRates {
    pub fn shear_fraction(&self) -> f64 {
        if self.total == 0.0 {
            0.0
        } else {
            (self.shear_x + self.shear_y) / self.total
        }
    }
}

/// All three free-space channels and their sum.
pub fn total_free_space_rate(
    medium: &Medium,
    geom: &DeviceGeometry,
    omega0: f64,
    profile: &FieldProfile,
) -> Result<FreeSpaceRates> {
    let i = profile.integrals();
    let longitudinal = free_space_rate_longitudinal(medium, geom, omega0, i.z)?;
    let shear_x = free_space_rate_shear(medium, geom, omega0, i.x, Component::X)?;
    let shear_y = free_space_rate_shear(medium, geom, omega0, i.y, Component::Y)?;
    Ok(FreeSpaceRates {
        longitudinal,
        shear_x,
        shear_y,
        total: longitudinal + shear_x + shear_y,
    })
}

/// Coupling to the flat standing wave of overtone `n` confined above a pad of radius `a`.
pub fn standing_wave_coupling(medium: &Medium, geom: &DeviceGeometry, n: u32, ez: f64, a: f64) -> Result<CouplingResult> {
    if n == 0 {
        return Err(Error::InvalidInput("overtone n must be positive".into()));
    }
    let w = medium.overtone_frequency(n, geom.b);
    let area = std::f64::consts::PI * a * a;
    let v_mode = geom.b * area;
    let s = (std::f64::consts::PI * n as f64 * geom.b_p / (2.0 * geom.b)).sin().powi(2);
    let g = 2.0 * medium.e33 / (HBAR * medium.rho * w * v_mode).sqrt() * s * ez * area;
    Ok(CouplingResult { g: g.abs(), n, m: 0, l: 0, frequency: w })
}

/// `g_{n k⊥}` for a normalization volume `v_cav` (signed; `|g|²` is what enters rates).
pub fn mode_coupling_k(medium: &Medium, geom: &DeviceGeometry, n: u32, k_perp: f64, transform: &FieldTransform, v_cav: f64) -> f64 {
    let w = medium.dispersion(n, geom.b, k_perp);
    let s = (std::f64::consts::PI * n as f64 * geom.b_p / (2.0 * geom.b)).sin().powi(2);
    2.0 * medium.e33 * transform.eval(k_perp) * s / (HBAR * medium.rho * w * v_cav).sqrt()
}

/// `ω_diff = v⊥² π² / (2 ω_n a²)`.
pub fn diffraction_scale(medium: &Medium, a: f64, omega_n: f64) -> f64 {
    medium.v_perp.powi(2) * std::f64::consts::PI.powi(2) / (2.0 * omega_n * a * a)
}

/// Fraction of the qubit's single-photon energy stored as E_z in the film.
pub fn participation_ratio(profile: &FieldProfile, eps_film: f64, b_p: f64, omega0: f64) -> Result<f64> {
    check_omega(omega0)?;
    Ok(EPS0 * eps_film * b_p * profile.integrals().z / (HBAR * omega0))
}

/// Overlap `∫ E_z [J0(μ r⊥/r)/J1(μ)]² d²r` over the cylinder footprint `r⊥ < r`.
pub fn cylinder_overlap(profile: &FieldProfile, r: f64) -> f64 {
    let mu = bessel_root(0, 1).expect("first root of J0");
    let norm = j1(mu).powi(2);
    match profile {
        FieldProfile::UniformDisk { ez, a } => {
            // ∫_0^c 2πρ J0²(kρ) dρ = π c² [J0²(kc) + J1²(kc)].
            let c = a.min(r);
            let x = mu * c / r;
            ez * std::f64::consts::PI * c * c * (j0(x).powi(2) + j1(x).powi(2)) / norm
        }
        FieldProfile::SampledGrid(g) => {
            let mut acc = 0.0;
            for jy in 0..g.ny {
                for ix in 0..g.nx {
                    let rho = g.x(ix).hypot(g.y(jy));
                    if rho < r {
                        acc += g.ez[jy * g.nx + ix] * j0(mu * rho / r).powi(2);
                    }
                }
            }
            acc * g.cell_area() / norm
        }
    }
}

/// Coupling to the principal (m = 0, l = 1) bound mode of a cylinder transducer.
///
/// The mode-shape weight enters the overlap squared.
pub fn cylinder_principal_coupling(medium: &Medium, geom: &DeviceGeometry, n: u32, profile: &FieldProfile) -> Result<CouplingResult> {
    let Transducer::Cylinder { z0, r } = geom.transducer else {
        return Err(Error::WrongTransducer { expected: "cylinder" });
    };
    if n == 0 {
        return Err(Error::InvalidInput("overtone n must be positive".into()));
    }
    let w = crate::boundstates::cylinder_frequency(medium, geom.b, z0, r, n, bessel_root(0, 1)?);
    let s = (w * z0 / (2.0 * medium.v_l)).sin().powi(2);
    let vol = geom.b * std::f64::consts::PI * r * r;
    let g = 2.0 * medium.e33 / (HBAR * medium.rho * w * vol).sqrt() * s * cylinder_overlap(profile, r);
    Ok(CouplingResult { g: g.abs(), n, m: 0, l: 1, frequency: w })
}

/// Settings for the discretized-mode golden-rule oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleGrid {
    /// Thickness of the auxiliary slab whose overtones discretize k_z (m).
    pub slab: f64,
    /// Number of radial k⊥ points up to `ka_max / a`.
    pub k_points: usize,
    pub ka_max: f64,
    /// Overtones kept on each side of resonance, in units of the broadening.
    pub window: f64,
}

impl Default for OracleGrid {
    fn default() -> Self {
        Self {
            slab: 0.1,
            k_points: 2000,
            ka_max: 200.0,
            window: 400.0,
        }
    }
}

/// Brute-force golden rule: sum `2π |g_{n k⊥}|² L(ω0 − ω_n(k⊥))` over slab
/// overtones and a radial k⊥ grid, with a unit-area Lorentzian of half width
/// `broadening` standing in for the delta function.
pub fn fgr_discrete_oracle(
    medium: &Medium,
    geom: &DeviceGeometry,
    omega0: f64,
    profile: &FieldProfile,
    broadening: f64,
    grid: OracleGrid,
) -> Result<f64> {
    check_omega(omega0)?;
    let (ez, a) = match profile {
        FieldProfile::UniformDisk { ez, a } => (*ez, *a),
        FieldProfile::SampledGrid(_) => {
            // Uniform disk of the pad radius with the same ∫E_z².
            (profile.rms_ez(geom.a), geom.a)
        }
    };
    let transform = FieldTransform::Disk { ez, a };
    let nk = grid.k_points.max(2);
    let dk = grid.ka_max / a / (nk - 1) as f64;
    let k_z0 = omega0 / medium.v_l;
    // Largest frequency step between neighbouring grid points near resonance.
    let mode_step = std::f64::consts::PI * medium.v_l / grid.slab;
    let k_max = grid.ka_max / a;
    let k_step = medium.v_perp.powi(2) * k_max * dk / omega0;
    let step = mode_step.max(k_step);
    if !(broadening >= 3.0 * step) {
        return Err(Error::UnderResolved(format!(
            "broadening {broadening:.3e} rad/s is below 3x the frequency grid step {step:.3e} rad/s"
        )));
    }

    // Simpson weights on the radial grid (trapezoid on the last panel if even).
    let mut wk = vec![0.0; nk];
    let panels = if (nk - 1) % 2 == 0 { nk - 1 } else { nk - 2 };
    for i in 0..=panels {
        wk[i] = if i == 0 || i == panels { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 } * dk / 3.0;
    }
    if panels < nk - 1 {
        wk[nk - 2] += 0.5 * dk;
        wk[nk - 1] += 0.5 * dk;
    }
    // ∫ d²k/(2π)² f = (1/2π) ∫ k f dk.
    let kw: Vec<(f64, f64)> = (0..nk)
        .map(|i| {
            let k = i as f64 * dk;
            (k, wk[i] * k * transform.eval(k).powi(2) / TWO_PI)
        })
        .collect();

    let span = grid.window * broadening / medium.v_l;
    let n_lo = (((k_z0 - span) * grid.slab / std::f64::consts::PI).floor().max(1.0)) as u32;
    let n_hi = ((k_z0 + span) * grid.slab / std::f64::consts::PI).ceil() as u32;
    let pref = 4.0 * medium.e33 * medium.e33 / (HBAR * medium.rho * grid.slab);
    let lorentz = |d: f64| broadening / std::f64::consts::PI / (d * d + broadening * broadening);

    let per_n: Vec<f64> = (n_lo..=n_hi)
        .into_par_iter()
        .map(|n| {
            let kz = std::f64::consts::PI * n as f64 / grid.slab;
            let s4 = (kz * geom.b_p / 2.0).sin().powi(4);
            let wn = medium.v_l * kz;
            let sum: f64 = kw
                .iter()
                .map(|&(k, w)| {
                    let om = wn.hypot(medium.v_perp * k);
                    w / om * lorentz(omega0 - om)
                })
                .sum();
            TWO_PI * pref * s4 * sum
        })
        .collect();
    Ok(per_n.iter().sum())
}
