//! One function per subcommand; each returns the full text to emit.

use std::collections::BTreeSet;
use std::f64::consts::{PI, TAU};
use std::path::Path;

use rayon::prelude::*;
use serde_json::json;

use phonoscope::boundstates::{cylinder_spectrum, dome_spectrum, BoundMode, DomeForm};
use phonoscope::dynamics::{
    closed_form_trace, full_dynamics, perturbative_decay, single_overtone_valid, InversionOptions, SelfEnergyParams,
};
use phonoscope::elastodynamics::{shear_splitting, shear_splitting_numeric, velocity_surface as surface};
use phonoscope::emission::{diffraction_scale, standing_wave_coupling, total_free_space_rate, DeviceGeometry, Medium};
use phonoscope::fields::FieldProfile;
use phonoscope::materials::{load_preset, preset_dir_from_env, MaterialTensorSet};
use phonoscope::spectroscopy::{estimate_initial, fit_spectrum, DispersiveModel, FitOptions, FitParameters};

use crate::config::{DeviceConfig, FieldSection, TransducerKind};
use crate::error::CliError;
use crate::output::{num, sig9, Table};
use crate::{Common, Method, Range};

const GHZ: f64 = TAU * 1e9;
const MHZ: f64 = TAU * 1e6;
const KHZ: f64 = TAU * 1e3;

fn linspace(r: Range, points: usize) -> Result<Vec<f64>, CliError> {
    if points < 2 {
        return Err(CliError::Usage(format!("--points must be at least 2, got {points}")));
    }
    Ok((0..points).map(|i| r.0 + (r.1 - r.0) * i as f64 / (points - 1) as f64).collect())
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Usage(format!("--{name} must be positive, got {v}")))
    }
}

fn material(name: &str) -> Result<MaterialTensorSet, CliError> {
    load_preset(name, preset_dir_from_env().as_deref()).map_err(CliError::config)
}

fn device(c: &Common) -> Result<DeviceConfig, CliError> {
    let cfg = DeviceConfig::load(c.config.as_deref())?;
    cfg.validate()?;
    Ok(cfg)
}

fn field_label(cfg: &DeviceConfig, map_dir: Option<&Path>) -> String {
    if let Some(d) = map_dir {
        return format!("map {}", d.display());
    }
    match &cfg.field {
        FieldSection::Reference => "reference".into(),
        FieldSection::UniformDisk { ez_v_m, a_m } => format!("uniform_disk ez_v_m={} a_m={}", num(*ez_v_m), num(*a_m)),
        FieldSection::Map { dir } => format!("map {}", dir.display()),
    }
}

fn kind_label(k: TransducerKind) -> &'static str {
    match k {
        TransducerKind::Flat => "flat",
        TransducerKind::Dome => "dome",
        TransducerKind::Cylinder => "cylinder",
    }
}

fn device_params(t: &mut Table, cfg: &DeviceConfig, m: &Medium, g: &DeviceGeometry, field: &str) {
    t.param("substrate", &cfg.materials.substrate);
    t.param("film", &cfg.materials.film);
    t.param("b_m", num(g.b));
    t.param("b_p_m", num(g.b_p));
    t.param("a_m", num(g.a));
    t.param("rho_kg_m3", num(m.rho));
    t.param("v_l_m_s", num(m.v_l));
    t.param("v_sh_m_s", num(m.v_sh));
    t.param("v_perp_m_s", num(m.v_perp));
    t.param("e33_c_m2", num(m.e33));
    t.param("e15_c_m2", num(m.e15));
    t.param("field", field);
}

fn matrix_rows<const R: usize, const C: usize>(m: &nalgebra::SMatrix<f64, R, C>) -> serde_json::Value {
    (0..R).map(|i| (0..C).map(|j| sig9(m[(i, j)])).collect::<Vec<_>>()).collect()
}

pub fn materials(preset: &str) -> Result<String, CliError> {
    let mat = material(preset)?;
    let v = mat.velocities()?;
    let kms = |w: phonoscope::materials::WaveVelocities| {
        json!({ "v_l": sig9(w.v_l / 1e3), "v_sh": sig9(w.v_sh / 1e3), "v_perp": sig9(w.v_perp / 1e3) })
    };
    let mut doc = json!({
        "command": "materials",
        "parameters": { "preset": preset },
        "name": mat.name,
        "rho_kg_m3": sig9(mat.rho),
        "c_E_Pa": matrix_rows(&mat.c),
        "velocities_kms": kms(v),
    });
    if let Some(e) = mat.piezo_stress() {
        doc["e_C_m2"] = matrix_rows(&e);
    }
    if let Some(eps) = mat.eps {
        doc["eps_r"] = matrix_rows(&eps);
    }
    if mat.piezo_stress().is_some() && mat.eps.is_some() {
        doc["c_D_Pa"] = matrix_rows(&mat.stiffened()?);
        doc["stiffened_velocities_kms"] = kms(mat.stiffened_velocities()?);
    }
    Ok(serde_json::to_string_pretty(&doc).expect("json values are finite") + "\n")
}

pub fn velocity_surface(material_name: &str, phi_deg: f64, points: usize, stiffened: bool) -> Result<String, CliError> {
    let mut mat = material(material_name)?;
    if stiffened {
        if mat.piezo_stress().is_none() || mat.eps.is_none() {
            return Err(CliError::Usage(format!("{material_name} has no piezoelectric data to stiffen")));
        }
        mat.c = mat.stiffened()?;
    }
    let rows = surface(&mat, phi_deg.to_radians(), points)?;
    let mut t = Table::new("velocity-surface", &["theta_deg", "v1_kms", "v2_kms", "v3_kms"]);
    t.param("material", material_name);
    t.param("phi_deg", num(phi_deg));
    t.param("points", points);
    t.param("stiffened", stiffened);
    for (i, r) in rows.iter().enumerate() {
        let theta = 180.0 * i as f64 / (points - 1) as f64;
        let v = r.velocities();
        t.row(&[num(theta), num(v[0] / 1e3), num(v[1] / 1e3), num(v[2] / 1e3)]);
    }
    Ok(t.render())
}

pub fn emit_rate(
    c: &Common,
    material_name: Option<String>,
    kind: Option<TransducerKind>,
    range: Range,
    points: usize,
    e33: Option<f64>,
) -> Result<String, CliError> {
    let mut cfg = device(c)?;
    if let Some(m) = material_name {
        cfg.materials.substrate = m;
    }
    let mut medium = cfg.medium()?;
    if let Some(e) = e33 {
        medium = medium.with_e33(e);
    }
    let geom = cfg.geometry(kind)?;
    let profile = cfg.profile(c.field_map_dir.as_deref())?;
    let freqs = linspace(range, points)?;
    positive("freq-ghz-range", range.0)?;

    let rates = freqs
        .par_iter()
        .map(|&f| total_free_space_rate(&medium, &geom, f * GHZ, &profile))
        .collect::<Result<Vec<_>, _>>()?;

    let mut t = Table::new(
        "emit-rate",
        &["freq_GHz", "gamma_l_Hz", "gamma_sh_x_Hz", "gamma_sh_y_Hz", "gamma_total_Hz"],
    );
    device_params(&mut t, &cfg, &medium, &geom, &field_label(&cfg, c.field_map_dir.as_deref()));
    t.param("geometry", kind_label(kind.unwrap_or(cfg.geometry.transducer.kind)));
    t.param("freq_ghz_range", format!("{},{}", num(range.0), num(range.1)));
    t.param("points", points);
    for (f, r) in freqs.iter().zip(&rates) {
        t.row(&[num(*f), num(r.longitudinal / TAU), num(r.shear_x / TAU), num(r.shear_y / TAU), num(r.total / TAU)]);
    }
    Ok(t.render())
}

/// Overtone parameters of the configured device: `(g, ω_n, ω_diff)` for overtone `n`.
fn overtone_params(medium: &Medium, geom: &DeviceGeometry, profile: &FieldProfile, n: u32) -> Result<(f64, f64, f64), CliError> {
    let ez = profile.rms_ez(geom.a);
    let cpl = standing_wave_coupling(medium, geom, n, ez, geom.a)?;
    Ok((cpl.g, cpl.frequency, diffraction_scale(medium, geom.a, cpl.frequency)))
}

pub fn decay_spectrum(
    c: &Common,
    range: Range,
    points: usize,
    omega_n_ghz: Option<f64>,
    g_mhz: Option<f64>,
    omega_diff_khz: Option<f64>,
    e33: Option<f64>,
) -> Result<String, CliError> {
    let freqs = linspace(range, points)?;
    positive("freq-ghz-range", range.0)?;
    let mut t = Table::new("decay-spectrum", &["freq_GHz", "gamma_Hz"]);

    let overtones: Vec<SelfEnergyParams> = match (omega_n_ghz, g_mhz, omega_diff_khz) {
        (Some(wn), Some(g), Some(wd)) => {
            t.param("mode", "single overtone");
            t.param("omega_n_ghz", num(wn));
            t.param("g_mhz", num(g));
            t.param("omega_diff_khz", num(wd));
            vec![SelfEnergyParams::new(g * MHZ, wn * GHZ, wd * KHZ)?]
        }
        (None, None, None) => {
            let cfg = device(c)?;
            let mut medium = cfg.medium()?;
            if let Some(e) = e33 {
                medium = medium.with_e33(e);
            }
            let geom = cfg.geometry(None)?;
            let profile = cfg.profile(c.field_map_dir.as_deref())?;
            let fsr = PI * medium.v_l / geom.b;
            let n_hi = (range.1 * GHZ / fsr).floor() as u32;
            t.param("mode", "device overtones");
            device_params(&mut t, &cfg, &medium, &geom, &field_label(&cfg, c.field_map_dir.as_deref()));
            t.param("overtones", format!("1..{n_hi}"));
            let mut v = Vec::new();
            for n in 1..=n_hi {
                let (g, wn, wd) = overtone_params(&medium, &geom, &profile, n)?;
                if g > 0.0 {
                    v.push(SelfEnergyParams::new(g, wn, wd)?);
                }
            }
            v
        }
        _ => {
            return Err(CliError::Usage(
                "--omega-n-ghz, --g-mhz and --omega-diff-khz must be given together".into(),
            ))
        }
    };
    t.param("freq_ghz_range", format!("{},{}", num(range.0), num(range.1)));
    t.param("points", points);

    let gamma: Vec<f64> = freqs
        .par_iter()
        .map(|&f| overtones.iter().map(|p| perturbative_decay(f * GHZ, p)).sum::<f64>())
        .collect();
    for (f, g) in freqs.iter().zip(&gamma) {
        t.row(&[num(*f), num(g / TAU)]);
    }
    Ok(t.render())
}

pub struct DynamicsArgs {
    pub omega0_ghz: Option<f64>,
    pub omega_n_ghz: Option<f64>,
    pub g_mhz: Option<f64>,
    pub omega_diff_khz: Option<f64>,
    pub tmax_us: f64,
    pub samples: usize,
    pub method: Method,
    pub eta_khz: Option<f64>,
    pub step_khz: Option<f64>,
    pub e33: Option<f64>,
}

/// Overtone used when none is configured.
const DEFAULT_OVERTONE: u32 = 110;

pub fn dynamics(c: &Common, a: DynamicsArgs) -> Result<String, CliError> {
    let t_max = positive("tmax-us", a.tmax_us)? * 1e-6;
    let mut t = Table::new("dynamics", &["t_us", "Pe"]);

    let (g, wn, wd, fsr) = if let (Some(g), Some(wn), Some(wd)) = (a.g_mhz, a.omega_n_ghz, a.omega_diff_khz) {
        (g * MHZ, wn * GHZ, wd * KHZ, None)
    } else {
        let cfg = device(c)?;
        let mut medium = cfg.medium()?;
        if let Some(e) = a.e33 {
            medium = medium.with_e33(e);
        }
        let geom = cfg.geometry(None)?;
        let profile = cfg.profile(c.field_map_dir.as_deref())?;
        let n = geom.n.unwrap_or(DEFAULT_OVERTONE);
        let (g0, wn0, wd0) = overtone_params(&medium, &geom, &profile, n)?;
        device_params(&mut t, &cfg, &medium, &geom, &field_label(&cfg, c.field_map_dir.as_deref()));
        t.param("overtone", n);
        (
            a.g_mhz.map_or(g0, |x| x * MHZ),
            a.omega_n_ghz.map_or(wn0, |x| x * GHZ),
            a.omega_diff_khz.map_or(wd0, |x| x * KHZ),
            Some(PI * medium.v_l / geom.b),
        )
    };
    let p = SelfEnergyParams::new(g, wn, wd)?;
    let w0 = a.omega0_ghz.map_or(wn, |x| x * GHZ);
    if let Some(fsr) = fsr {
        if !single_overtone_valid(g, fsr) {
            eprintln!("warning: g is not small against the free spectral range; neighbouring overtones are ignored");
        }
    }

    let trace = match a.method {
        Method::ClosedForm => closed_form_trace(w0, &p, t_max, a.samples)?,
        Method::FourierInversion => {
            let opts = InversionOptions {
                eta: a.eta_khz.map(|x| x * KHZ),
                step: a.step_khz.map(|x| x * KHZ),
                margin: None,
            };
            full_dynamics(w0, &p, t_max, a.samples, opts)?
        }
    };

    t.param("omega0_ghz", num(w0 / GHZ));
    t.param("omega_n_ghz", num(wn / GHZ));
    t.param("g_mhz", num(g / MHZ));
    t.param("omega_diff_khz", num(wd / KHZ));
    t.param("tmax_us", num(a.tmax_us));
    t.param("samples", a.samples);
    t.param("method", match a.method {
        Method::ClosedForm => "closed-form",
        Method::FourierInversion => "fourier-inversion",
    });
    if a.method == Method::FourierInversion {
        t.param("eta_khz", num(trace.eta / KHZ));
        t.param("step_khz", num(trace.step / KHZ));
    }
    for (tt, pe) in trace.times.iter().zip(&trace.population) {
        t.row(&[num(tt * 1e6), num(*pe)]);
    }
    Ok(t.render())
}

#[allow(clippy::too_many_arguments)]
pub fn bound_states(
    c: &Common,
    kind: Option<TransducerKind>,
    range: Range,
    offset_mhz: f64,
    m_max: u32,
    l_max: u32,
    m_list: &[u32],
    resolvable_only: bool,
) -> Result<String, CliError> {
    let cfg = device(c)?;
    let kind = kind.unwrap_or(cfg.geometry.transducer.kind);
    if kind == TransducerKind::Flat {
        return Err(CliError::Usage("bound-states needs --geometry dome or cylinder".into()));
    }
    if !offset_mhz.is_finite() {
        return Err(CliError::Usage("--offset-mhz must be finite".into()));
    }
    positive("freq-ghz-range", range.0)?;
    let medium = cfg.medium()?;
    let geom = cfg.geometry(Some(kind))?;
    let offset = offset_mhz * MHZ;
    let (lo, hi) = (range.0 * GHZ, range.1 * GHZ);

    // Every bound or unbound mode of overtone n sits above ω_n √(1 − 2 z0/b).
    let z0 = cfg.geometry.transducer.z0_m;
    let floor = (1.0 - 2.0 * z0 / geom.b).max(0.0).sqrt();
    let fsr = PI * medium.v_l / geom.b;
    let n_hi = ((hi - offset) / (fsr * floor)).ceil().max(1.0) as u32;

    let spectra = (1..=n_hi)
        .into_par_iter()
        .map(|n| match kind {
            TransducerKind::Dome => dome_spectrum(&medium, &geom, n, m_max, DomeForm::Paraxial),
            _ => cylinder_spectrum(&medium, &geom, n, m_list, l_max),
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut warnings = BTreeSet::new();
    let mut modes: Vec<BoundMode> = Vec::new();
    for s in &spectra {
        let keep = |m: &&BoundMode| {
            let f = m.frequency + offset;
            f >= lo && f <= hi && (!resolvable_only || (m.below_threshold && m.qubit_coupled()))
        };
        let before = modes.len();
        modes.extend(s.modes.iter().filter(keep).copied());
        if modes.len() > before {
            warnings.extend(s.warnings.iter().cloned());
        }
    }
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    modes.sort_by(|a, b| {
        a.frequency
            .total_cmp(&b.frequency)
            .then(a.n.cmp(&b.n))
            .then(a.m.cmp(&b.m))
            .then(a.l.cmp(&b.l))
    });

    let mut t = Table::new("bound-states", &["freq_GHz", "n", "m", "l", "below_threshold"]);
    device_params(&mut t, &cfg, &medium, &geom, "not used");
    t.param("geometry", kind_label(kind));
    t.param("z0_m", num(z0));
    t.param("r_m", num(cfg.geometry.transducer.r_m));
    t.param("freq_ghz_range", format!("{},{}", num(range.0), num(range.1)));
    t.param("offset_mhz", num(offset_mhz));
    match kind {
        TransducerKind::Dome => t.param("m_max", m_max),
        _ => {
            t.param("m_list", m_list.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(" "));
            t.param("l_max", l_max);
        }
    }
    t.param("resolvable_only", resolvable_only);
    for m in &modes {
        t.row(&[
            num((m.frequency + offset) / GHZ),
            m.n.to_string(),
            m.m.to_string(),
            m.l.unwrap_or(0).to_string(),
            u8::from(m.below_threshold).to_string(),
        ]);
    }
    Ok(t.render())
}

/// Two numeric columns; `#` comments, blank lines and a non-numeric header line are skipped.
fn read_spectrum(path: &Path) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let (mut f, mut y) = (Vec::new(), Vec::new());
    let mut seen_header = false;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: Option<Vec<f64>> = cells.iter().map(|c| c.parse().ok()).collect();
        match parsed {
            Some(v) if v.len() == 2 => {
                f.push(v[0] * GHZ);
                y.push(v[1]);
            }
            None if !seen_header && f.is_empty() => seen_header = true,
            _ => {
                return Err(CliError::Config(format!(
                    "{}:{}: expected two numbers `freq_GHz, intensity`",
                    path.display(),
                    i + 1
                )))
            }
        }
    }
    Ok((f, y))
}

fn report(p: &FitParameters) -> serde_json::Value {
    json!({
        "omega_tilde0_GHz": sig9(p.omega_tilde0 / GHZ),
        "gamma2_kHz": sig9(p.gamma2 / KHZ),
        "kappa_kHz": sig9(p.kappa / KHZ),
        "nbar": sig9(p.nbar),
        "amplitude": sig9(p.amplitude),
        "baseline": sig9(p.baseline),
    })
}

pub fn spectro_fit(
    input: &Path,
    chi_mhz: f64,
    init_gamma2_khz: f64,
    init_kappa_khz: f64,
    init_nbar: Option<f64>,
    init_omega0_ghz: Option<f64>,
) -> Result<String, CliError> {
    let (freqs, intensity) = read_spectrum(input)?;
    let chi = chi_mhz * MHZ;
    let estimate = if init_nbar.is_none() || init_omega0_ghz.is_none() {
        estimate_initial(&freqs, &intensity, chi)
    } else {
        None
    };
    let missing = || CliError::Usage("could not locate peaks; pass --init-omega0-ghz and --init-nbar".into());
    let w0 = match init_omega0_ghz {
        Some(x) => x * GHZ,
        None => estimate.ok_or_else(missing)?.0,
    };
    let nbar = match init_nbar {
        Some(x) => x,
        None => estimate.ok_or_else(missing)?.1,
    };
    let initial = DispersiveModel::new(w0, chi, init_gamma2_khz * KHZ, init_kappa_khz * KHZ, nbar)?;
    let fit = fit_spectrum(&freqs, &intensity, chi, &initial, FitOptions::default())?;
    let doc = json!({
        "command": "spectro-fit",
        "parameters": {
            "input": input.display().to_string(),
            "chi_MHz": sig9(chi_mhz),
            "init_gamma2_kHz": sig9(init_gamma2_khz),
            "init_kappa_kHz": sig9(init_kappa_khz),
            "init_nbar": sig9(nbar),
            "init_omega_tilde0_GHz": sig9(w0 / GHZ),
        },
        "samples": freqs.len(),
        "fit": report(&fit.params),
        "uncertainties": report(&fit.uncertainties),
        "residual_norm": sig9(fit.residual_norm),
        "iterations": fit.iterations,
    });
    Ok(serde_json::to_string_pretty(&doc).expect("json values are finite") + "\n")
}

pub fn splitting(material_name: &str, freq_ghz: f64, range: Range, points: usize, phi_deg: f64) -> Result<String, CliError> {
    let mat = material(material_name)?;
    let w0 = positive("freq-ghz", freq_ghz)? * GHZ;
    let tilts = linspace(range, points)?;
    let phi = phi_deg.to_radians();
    let rows = tilts
        .par_iter()
        .map(|&d| -> Result<(f64, f64), CliError> {
            let th = d.to_radians();
            Ok((shear_splitting(&mat, w0, th, phi)?, shear_splitting_numeric(&mat, w0, th, phi)?.abs()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut t = Table::new("splitting", &["tilt_deg", "perturbative_MHz", "numeric_MHz"]);
    t.param("material", material_name);
    t.param("freq_ghz", num(freq_ghz));
    t.param("tilt_deg_range", format!("{},{}", num(range.0), num(range.1)));
    t.param("points", points);
    t.param("phi_deg", num(phi_deg));
    for (d, (p, n)) in tilts.iter().zip(&rows) {
        t.row(&[num(*d), num(p / MHZ), num(n / MHZ)]);
    }
    Ok(t.render())
}
