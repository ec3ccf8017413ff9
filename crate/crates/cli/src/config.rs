//! Device configuration file and its resolution into library types.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use phonoscope::emission::{DeviceGeometry, Medium, Transducer};
use phonoscope::fields::{self, FieldProfile};
use phonoscope::materials::{load_preset, preset_dir_from_env};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeviceConfig {
    pub materials: MaterialsSection,
    pub geometry: GeometrySection,
    pub field: FieldSection,
    pub overrides: Overrides,
}

impl Default for DeviceConfig {
    fn default() -> Self {
        Self {
            materials: MaterialsSection::default(),
            geometry: GeometrySection::default(),
            field: FieldSection::Reference,
            overrides: Overrides::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaterialsSection {
    pub substrate: String,
    pub film: String,
}

impl Default for MaterialsSection {
    fn default() -> Self {
        Self { substrate: "sapphire".into(), film: "aln".into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum TransducerKind {
    Flat,
    Dome,
    Cylinder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransducerSection {
    pub kind: TransducerKind,
    pub z0_m: f64,
    pub r_m: f64,
}

impl Default for TransducerSection {
    fn default() -> Self {
        Self { kind: TransducerKind::Flat, z0_m: 1e-6, r_m: 125e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometrySection {
    pub b_m: f64,
    pub b_p_m: f64,
    /// Pad radius used for the standing-wave coupling and ω_diff.
    pub a_m: f64,
    pub overtone: Option<u32>,
    pub transducer: TransducerSection,
}

impl Default for GeometrySection {
    fn default() -> Self {
        Self {
            b_m: 100e-6,
            b_p_m: 1e-6,
            a_m: 300e-6,
            overtone: None,
            transducer: TransducerSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSection {
    /// Bundled reference map.
    Reference,
    UniformDisk { ez_v_m: f64, a_m: f64 },
    Map { dir: PathBuf },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Overrides {
    pub e33_c_m2: Option<f64>,
    pub e15_c_m2: Option<f64>,
    pub eps33: Option<f64>,
    pub rho_kg_m3: Option<f64>,
    pub v_l_m_s: Option<f64>,
    pub v_sh_m_s: Option<f64>,
    pub v_perp_m_s: Option<f64>,
}

impl DeviceConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))
            }
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let o = &self.overrides;
        let fields = [
            ("e15_c_m2", o.e15_c_m2),
            ("eps33", o.eps33),
            ("rho_kg_m3", o.rho_kg_m3),
            ("v_l_m_s", o.v_l_m_s),
            ("v_sh_m_s", o.v_sh_m_s),
            ("v_perp_m_s", o.v_perp_m_s),
        ];
        for (name, v) in fields {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(CliError::Config(format!("override {name} must be positive, got {v}")));
                }
            }
        }
        if let Some(e) = o.e33_c_m2 {
            if !e.is_finite() {
                return Err(CliError::Config(format!("override e33_c_m2 must be finite, got {e}")));
            }
        }
        if let FieldSection::UniformDisk { ez_v_m, a_m } = self.field {
            if !(ez_v_m.is_finite() && a_m > 0.0) {
                return Err(CliError::Config("uniform_disk field needs finite ez_v_m and positive a_m".into()));
            }
        }
        self.geometry(None).map(|_| ())
    }

    pub fn geometry(&self, kind: Option<TransducerKind>) -> Result<DeviceGeometry, CliError> {
        let g = &self.geometry;
        let t = &g.transducer;
        let transducer = match kind.unwrap_or(t.kind) {
            TransducerKind::Flat => Transducer::Flat,
            TransducerKind::Dome => Transducer::Dome { z0: t.z0_m, r: t.r_m },
            TransducerKind::Cylinder => Transducer::Cylinder { z0: t.z0_m, r: t.r_m },
        };
        let geom = DeviceGeometry::new(g.b_m, g.b_p_m, transducer, g.a_m).map_err(CliError::config)?;
        match g.overtone {
            Some(n) => geom.with_overtone(n).map_err(CliError::config),
            None => Ok(geom),
        }
    }

    pub fn medium(&self) -> Result<Medium, CliError> {
        let dir = preset_dir_from_env();
        let sub = load_preset(&self.materials.substrate, dir.as_deref()).map_err(CliError::config)?;
        let film = load_preset(&self.materials.film, dir.as_deref()).map_err(CliError::config)?;
        let mut m = Medium::from_materials(&sub, &film).map_err(CliError::config)?;
        let o = &self.overrides;
        if let Some(v) = o.e33_c_m2 {
            m.e33 = v;
        }
        if let Some(v) = o.e15_c_m2 {
            m.e15 = v;
        }
        if let Some(v) = o.eps33 {
            m.eps33 = v;
        }
        if let Some(v) = o.rho_kg_m3 {
            m.rho = v;
        }
        if let Some(v) = o.v_l_m_s {
            m.v_l = v;
        }
        if let Some(v) = o.v_sh_m_s {
            m.v_sh = v;
        }
        if let Some(v) = o.v_perp_m_s {
            m.v_perp = v;
        }
        Ok(m)
    }

    /// Field profile; a directory given on the command line wins over the config.
    pub fn profile(&self, map_dir: Option<&Path>) -> Result<FieldProfile, CliError> {
        if let Some(dir) = map_dir {
            return fields::load_field_map(dir).map_err(CliError::config);
        }
        match &self.field {
            FieldSection::Reference => Ok(FieldProfile::SampledGrid(fields::reference::grid())),
            FieldSection::UniformDisk { ez_v_m, a_m } => FieldProfile::uniform_disk(*ez_v_m, *a_m).map_err(CliError::config),
            FieldSection::Map { dir } => fields::load_field_map(dir).map_err(CliError::config),
        }
    }
}
