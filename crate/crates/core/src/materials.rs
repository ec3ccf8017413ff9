//! Anisotropic material tensors in Voigt notation and the axial wave velocities
//! derived from them.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, Matrix3, Matrix6, SMatrix};
use serde::{Deserialize, Serialize};

use crate::constants::EPS0;
use crate::error::{Error, Result};

/// 3×6 piezoelectric tensor (strain form in m/V or stress form in C/m²).
pub type Piezo = SMatrix<f64, 3, 6>;

/// Environment variable naming a directory of `<name>.json` preset files.
pub const PRESET_DIR_ENV: &str = "PHONOSCOPE_PRESET_DIR";

const BUILTIN: &[(&str, &str)] = &[
    ("sapphire", include_str!("../data/presets/sapphire.json")),
    ("aln", include_str!("../data/presets/aln.json")),
];

#[derive(Debug, Clone, PartialEq)]
pub struct MaterialTensorSet {
    pub name: String,
    /// Mass density (kg/m³).
    pub rho: f64,
    /// Stiffness at constant electric field (Pa).
    pub c: Matrix6<f64>,
    pub d: Option<Piezo>,
    pub e: Option<Piezo>,
    /// Relative dielectric tensor.
    pub eps: Option<Matrix3<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WaveVelocities {
    pub v_l: f64,
    pub v_sh: f64,
    /// Velocity governing the paraxial transverse dispersion of longitudinal waves.
    pub v_perp: f64,
}

/// On-disk preset layout: flat row-major arrays in SI units.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresetFile {
    pub name: String,
    pub rho: f64,
    pub c: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<Vec<f64>>,
}

fn fixed<const R: usize, const C: usize>(
    what: &'static str,
    v: &[f64],
) -> Result<SMatrix<f64, R, C>> {
    if v.len() != R * C {
        return Err(Error::Shape {
            what,
            expected: R * C,
            got: v.len(),
        });
    }
    if let Some(x) = v.iter().find(|x| !x.is_finite()) {
        return Err(Error::InvalidInput(format!("{what} contains {x}")));
    }
    Ok(SMatrix::from_row_slice(v))
}

fn row_major<const R: usize, const C: usize>(m: &SMatrix<f64, R, C>) -> Vec<f64> {
    (0..R)
        .flat_map(|i| (0..C).map(move |j| (i, j)))
        .map(|(i, j)| m[(i, j)])
        .collect()
}

fn rel_close(a: f64, b: f64, rel: f64, floor: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()) + floor
}

impl MaterialTensorSet {
    pub fn new(
        name: impl Into<String>,
        rho: f64,
        c: Matrix6<f64>,
        d: Option<Piezo>,
        e: Option<Piezo>,
        eps: Option<Matrix3<f64>>,
    ) -> Result<Self> {
        let m = Self {
            name: name.into(),
            rho,
            c,
            d,
            e,
            eps,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho.is_finite() && self.rho > 0.0) {
            return Err(Error::InvalidInput(format!(
                "{}: density must be positive, got {}",
                self.name, self.rho
            )));
        }
        let scale = self.c.amax();
        if (self.c - self.c.transpose()).amax() > 1e-12 * scale {
            return Err(Error::InvalidInput(format!(
                "{}: stiffness is not symmetric",
                self.name
            )));
        }
        if self.c.cholesky().is_none() {
            return Err(Error::InvalidInput(format!(
                "{}: stiffness is not positive definite",
                self.name
            )));
        }
        if let (Some(d), Some(e)) = (&self.d, &self.e) {
            let from_d = d * self.c;
            let floor = 1e-9 * e.amax().max(from_d.amax());
            for (i, (a, b)) in from_d.iter().zip(e.iter()).enumerate() {
                if !rel_close(*a, *b, 0.01, floor) {
                    return Err(Error::InvalidInput(format!(
                        "{}: e = d·c violated at element {} ({} vs {})",
                        self.name, i, a, b
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn from_preset_file(p: PresetFile) -> Result<Self> {
        let c = fixed::<6, 6>("stiffness c", &p.c)?;
        let d = p.d.as_deref().map(|v| fixed::<3, 6>("piezo d", v)).transpose()?;
        let e = p.e.as_deref().map(|v| fixed::<3, 6>("piezo e", v)).transpose()?;
        let eps = p.eps.as_deref().map(|v| fixed::<3, 3>("eps", v)).transpose()?;
        Self::new(p.name, p.rho, c, d, e, eps)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Self::from_preset_file(serde_json::from_str(s)?)
    }

    pub fn to_preset_file(&self) -> PresetFile {
        PresetFile {
            name: self.name.clone(),
            rho: self.rho,
            c: row_major(&self.c),
            d: self.d.as_ref().map(row_major),
            e: self.e.as_ref().map(row_major),
            eps: self.eps.as_ref().map(row_major),
        }
    }

    /// Stress-form piezoelectric tensor: the stored `e`, else `d·c`, else `None`.
    pub fn piezo_stress(&self) -> Option<Piezo> {
        self.e.or_else(|| self.d.map(|d| d * self.c))
    }

    /// Piezoelectrically stiffened stiffness `c^D`; equals `c` for non-piezoelectric media.
    pub fn stiffened(&self) -> Result<Matrix6<f64>> {
        match (self.piezo_stress(), self.eps) {
            (Some(e), Some(eps)) => stiffened_tensor(&self.c, &e, &eps),
            (Some(_), None) => Err(Error::InvalidInput(format!(
                "{}: piezoelectric medium needs a dielectric tensor",
                self.name
            ))),
            _ => Ok(self.c),
        }
    }

    pub fn velocities(&self) -> Result<WaveVelocities> {
        axis_velocities(&self.c, self.rho)
    }

    pub fn stiffened_velocities(&self) -> Result<WaveVelocities> {
        axis_velocities(&self.stiffened()?, self.rho)
    }

    /// Copy with every stiffness component multiplied by `s`.
    pub fn scaled_stiffness(&self, s: f64) -> Self {
        Self {
            c: self.c * s,
            ..self.clone()
        }
    }
}

/// `e = d·c` for dynamically sized inputs, checking the Voigt shapes.
pub fn stress_form_from_strain_form(d: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if c.shape() != (6, 6) {
        return Err(Error::Shape {
            what: "stiffness (6×6)",
            expected: 36,
            got: c.len(),
        });
    }
    if d.shape() != (3, 6) {
        return Err(Error::Shape {
            what: "strain-form piezo tensor (3×6)",
            expected: 18,
            got: d.len(),
        });
    }
    Ok(d * c)
}

/// `c^D = c^E + eᵀ (ε₀ ε)⁻¹ e`.
pub fn stiffened_tensor(c: &Matrix6<f64>, e: &Piezo, eps: &Matrix3<f64>) -> Result<Matrix6<f64>> {
    let inv = (eps * EPS0)
        .try_inverse()
        .filter(|m| m.iter().all(|x| x.is_finite()))
        .ok_or(Error::SingularDielectric)?;
    let corr = e.transpose() * inv * e;
    // Symmetrize so the output is symmetric to the last bit.
    let corr = 0.5 * (corr + corr.transpose());
    Ok(c + corr)
}

/// Velocities for propagation along the z (c-) axis.
pub fn axis_velocities(c: &Matrix6<f64>, rho: f64) -> Result<WaveVelocities> {
    let (c13, c33, c44) = (c[(0, 2)], c[(2, 2)], c[(3, 3)]);
    if !(c33 > 0.0 && c44 > 0.0 && rho > 0.0) {
        return Err(Error::InvalidInput(
            "c33, c44 and rho must be positive".into(),
        ));
    }
    if (c33 - c44).abs() <= 1e-12 * c33 {
        return Err(Error::DegenerateIsotropy);
    }
    let perp2 = (c44 + (c13 + c44).powi(2) / (c33 - c44)) / rho;
    if perp2 <= 0.0 {
        return Err(Error::InvalidInput(
            "transverse dispersion is not positive".into(),
        ));
    }
    Ok(WaveVelocities {
        v_l: (c33 / rho).sqrt(),
        v_sh: (c44 / rho).sqrt(),
        v_perp: perp2.sqrt(),
    })
}

pub fn builtin_preset_names() -> impl Iterator<Item = &'static str> {
    BUILTIN.iter().map(|(n, _)| *n)
}

pub fn builtin_preset(name: &str) -> Result<MaterialTensorSet> {
    let key = name.to_ascii_lowercase();
    BUILTIN
        .iter()
        .find(|(n, _)| *n == key)
        .ok_or_else(|| Error::UnknownPreset(name.to_string()))
        .and_then(|(_, s)| MaterialTensorSet::from_json_str(s))
}

/// Load a preset by name, preferring `<dir>/<name>.json` when a directory is given.
pub fn load_preset(name: &str, dir: Option<&Path>) -> Result<MaterialTensorSet> {
    match dir {
        Some(dir) => {
            let path = dir.join(format!("{}.json", name.to_ascii_lowercase()));
            if !path.exists() {
                return Err(Error::UnknownPreset(format!("{} (in {})", name, dir.display())));
            }
            MaterialTensorSet::from_json_str(&std::fs::read_to_string(path)?)
        }
        None => builtin_preset(name),
    }
}

pub fn preset_dir_from_env() -> Option<PathBuf> {
    std::env::var_os(PRESET_DIR_ENV).map(PathBuf::from)
}
