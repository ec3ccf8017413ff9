//! Acoustic bound states under dome and cylinder transducers.

use serde::Serialize;

use crate::emission::{DeviceGeometry, Medium, Transducer};
use crate::error::{Error, Result};
pub use crate::special::{bessel_root, bessel_roots};

/// Relative margin below `ω_n` a mode must clear to count as bound.
const THRESHOLD_REL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundMode {
    pub n: u32,
    pub m: u32,
    /// Radial index; `None` for dome modes.
    pub l: Option<u32>,
    /// Angular frequency (rad/s).
    pub frequency: f64,
    pub below_threshold: bool,
}

impl BoundMode {
    /// Modes the radially symmetric qubit field couples to: even m under a dome, m = 0 in a cylinder.
    pub fn qubit_coupled(&self) -> bool {
        match self.l {
            None => self.m % 2 == 0,
            Some(_) => self.m == 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeSpectrum {
    pub modes: Vec<BoundMode>,
    /// Validity conditions that do not hold for the requested geometry.
    pub warnings: Vec<String>,
}

impl ModeSpectrum {
    pub fn resolvable(&self) -> impl Iterator<Item = &BoundMode> {
        self.modes.iter().filter(|m| m.below_threshold && m.qubit_coupled())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DomeForm {
    /// Linearized ladder `ω_n(1 − z0/b) + v⊥(m+1)/√(Rb)`.
    #[default]
    Paraxial,
    /// `√(ω_n²(1 − 2z0/b) + 2ω_n v⊥(m+1)/√(Rb))`.
    Exact,
}

fn is_below(f: f64, omega_n: f64) -> bool {
    f < omega_n * (1.0 - THRESHOLD_REL)
}

/// `λ_ac = 2π v_l / ω_n`.
pub fn acoustic_wavelength(medium: &Medium, omega_n: f64) -> f64 {
    std::f64::consts::TAU * medium.v_l / omega_n
}

/// Overtone closest to a given acoustic wavelength in a slab of thickness `b`.
pub fn overtone_for_wavelength(b: f64, lambda: f64) -> u32 {
    (2.0 * b / lambda).round().max(1.0) as u32
}

pub fn dome_frequency(medium: &Medium, b: f64, z0: f64, curvature: f64, n: u32, m: u32, form: DomeForm) -> f64 {
    let wn = medium.overtone_frequency(n, b);
    let ladder = medium.v_perp / (curvature * b).sqrt() * (m + 1) as f64;
    match form {
        DomeForm::Paraxial => wn * (1.0 - z0 / b) + ladder,
        DomeForm::Exact => (wn * wn * (1.0 - 2.0 * z0 / b) + 2.0 * wn * ladder).sqrt(),
    }
}

/// `ω_{n,m,l} ≈ ω_n(1 − z0/b) + μ² v⊥² / (2 ω_n r²)`.
pub fn cylinder_frequency(medium: &Medium, b: f64, z0: f64, r: f64, n: u32, mu: f64) -> f64 {
    let wn = medium.overtone_frequency(n, b);
    wn * (1.0 - z0 / b) + mu * mu * medium.v_perp.powi(2) / (2.0 * wn * r * r)
}

pub fn dome_spectrum(medium: &Medium, geom: &DeviceGeometry, n: u32, m_max: u32, form: DomeForm) -> Result<ModeSpectrum> {
    let Transducer::Dome { z0, .. } = geom.transducer else {
        return Err(Error::WrongTransducer { expected: "dome" });
    };
    check_n(n)?;
    let curvature = geom.curvature_radius().expect("dome");
    let wn = medium.overtone_frequency(n, geom.b);
    let lambda = acoustic_wavelength(medium, wn);
    let mut warnings = Vec::new();
    if lambda > 0.1 * (curvature * geom.b).sqrt() {
        warnings.push(format!(
            "acoustic wavelength {lambda:.3e} m is not small against sqrt(R b) = {:.3e} m",
            (curvature * geom.b).sqrt()
        ));
    }
    if z0 > 0.1 * geom.b {
        warnings.push(format!("dome height {z0:.3e} m is not small against b = {:.3e} m", geom.b));
    }
    let modes = (0..=m_max)
        .map(|m| {
            let f = dome_frequency(medium, geom.b, z0, curvature, n, m, form);
            BoundMode { n, m, l: None, frequency: f, below_threshold: is_below(f, wn) }
        })
        .collect();
    Ok(ModeSpectrum { modes, warnings })
}

/// Closed-form count of qubit-coupled dome modes, from `m + 1 < 2π (z0/b)(v_l/v⊥) √(Rb)/λ_ac`.
pub fn dome_mode_bound(medium: &Medium, geom: &DeviceGeometry, n: u32) -> Result<usize> {
    let Transducer::Dome { z0, .. } = geom.transducer else {
        return Err(Error::WrongTransducer { expected: "dome" });
    };
    let curvature = geom.curvature_radius().expect("dome");
    let lambda = acoustic_wavelength(medium, medium.overtone_frequency(n, geom.b));
    let bound = std::f64::consts::TAU * (z0 / geom.b) * (medium.v_l / medium.v_perp) * (curvature * geom.b).sqrt() / lambda;
    // Largest m with m + 1 < bound, then count the even ones in 0..=m.
    let m_top = (bound - 1.0).ceil() as i64 - 1;
    Ok(if m_top < 0 { 0 } else { (m_top / 2 + 1) as usize })
}

pub fn cylinder_spectrum(medium: &Medium, geom: &DeviceGeometry, n: u32, m_list: &[u32], l_max: u32) -> Result<ModeSpectrum> {
    let Transducer::Cylinder { z0, r } = geom.transducer else {
        return Err(Error::WrongTransducer { expected: "cylinder" });
    };
    check_n(n)?;
    let wn = medium.overtone_frequency(n, geom.b);
    let lambda = acoustic_wavelength(medium, wn);
    let mut warnings = Vec::new();
    let scale = (lambda * geom.b).sqrt();
    if r < 5.0 * scale {
        warnings.push(format!("radius {r:.3e} m is not large against sqrt(lambda b) = {scale:.3e} m"));
    }
    if z0 < 0.25 * lambda {
        warnings.push(format!(
            "height {z0:.3e} m is well below the acoustic wavelength {lambda:.3e} m; confinement criterion not validated there"
        ));
    }
    let mut modes = Vec::with_capacity(m_list.len() * l_max as usize);
    for &m in m_list {
        for (i, mu) in bessel_roots(m, l_max as usize).into_iter().enumerate() {
            let f = cylinder_frequency(medium, geom.b, z0, r, n, mu);
            modes.push(BoundMode {
                n,
                m,
                l: Some(i as u32 + 1),
                frequency: f,
                below_threshold: is_below(f, wn),
            });
        }
    }
    Ok(ModeSpectrum { modes, warnings })
}

/// Number of m = 0 cylinder roots satisfying `μ² < 8π² (v_l²/v⊥²) z0 r² / (b λ_ac²)`.
pub fn cylinder_mode_bound(medium: &Medium, geom: &DeviceGeometry, n: u32) -> Result<usize> {
    let Transducer::Cylinder { z0, r } = geom.transducer else {
        return Err(Error::WrongTransducer { expected: "cylinder" });
    };
    let lambda = acoustic_wavelength(medium, medium.overtone_frequency(n, geom.b));
    let limit = 8.0 * std::f64::consts::PI.powi(2) * (medium.v_l / medium.v_perp).powi(2) * z0 * r * r
        / (geom.b * lambda * lambda);
    let mut count = 0;
    loop {
        let mu = bessel_root(0, count as u32 + 1)?;
        if mu * mu >= limit {
            return Ok(count);
        }
        count += 1;
    }
}

/// Frequencies of the bound, qubit-coupled modes shifted by `offset` and kept if inside `window` (rad/s).
pub fn stick_spectrum(modes: &[BoundMode], window: (f64, f64), offset: f64) -> Result<Vec<f64>> {
    if !(window.1 > window.0) {
        return Err(Error::EmptyWindow);
    }
    let mut out: Vec<f64> = modes
        .iter()
        .filter(|m| m.below_threshold && m.qubit_coupled())
        .map(|m| m.frequency + offset)
        .filter(|f| *f >= window.0 && *f <= window.1)
        .collect();
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(out)
}

fn check_n(n: u32) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidInput("overtone n must be positive".into()));
    }
    Ok(())
}
