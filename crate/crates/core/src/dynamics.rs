//! Qubit dynamics against the phonon continuum of one flat-resonator overtone.
//!
//! With a uniform-disk field the self-energy is
//! `Σ(z) = (g²/ω_diff) F(π√w) / w`, `w = (z − ω_n)/ω_diff`, where
//! `F(v) = 1 − iπ J1(v) H1(v)` is [`continuum_kernel`]. Population traces come
//! from inverting the resolvent `1/(z − ω0 − Σ(z))` along `Im z = η`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::special::{continuum_kernel, continuum_kernel_below, continuum_kernel_real, j1, y1};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelfEnergyParams {
    /// Standing-wave coupling (rad/s).
    pub g: f64,
    pub omega_n: f64,
    pub omega_diff: f64,
}

impl SelfEnergyParams {
    pub fn new(g: f64, omega_n: f64, omega_diff: f64) -> Result<Self> {
        for (name, v) in [("g", g), ("omega_n", omega_n), ("omega_diff", omega_diff)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self { g, omega_n, omega_diff })
    }

    /// `Σ` as a function of `ν = ω − ω_n`, for complex `ν` with `Im ν ≥ 0`.
    pub fn sigma_offset(&self, nu: Complex64) -> Complex64 {
        let w = nu / self.omega_diff;
        if w == Complex64::new(0.0, 0.0) {
            return self.sigma_real_offset(0.0);
        }
        let v = std::f64::consts::PI * w.sqrt();
        self.g * self.g / self.omega_diff * continuum_kernel(v) / w
    }

    fn sigma_real_offset(&self, nu: f64) -> Complex64 {
        if nu == 0.0 {
            // Average of the two one-sided limits.
            let d = 1e-8 * self.omega_diff;
            return 0.5 * (self.sigma_real_offset(d) + self.sigma_real_offset(-d));
        }
        let pref = self.g * self.g / nu;
        let x = std::f64::consts::PI * (nu.abs() / self.omega_diff).sqrt();
        if nu > 0.0 {
            pref * continuum_kernel_real(x)
        } else {
            Complex64::new(pref * continuum_kernel_below(x), 0.0)
        }
    }
}

/// Real-axis self-energy (rad/s); purely real below threshold.
pub fn self_energy(omega: f64, p: &SelfEnergyParams) -> Complex64 {
    p.sigma_real_offset(omega - p.omega_n)
}

/// Self-energy at a complex frequency in the upper half plane.
pub fn self_energy_complex(z: Complex64, p: &SelfEnergyParams) -> Complex64 {
    p.sigma_offset(z - p.omega_n)
}

/// Golden-rule rate `2π g² J1²(π√((ω0−ω_n)/ω_diff)) / (ω0 − ω_n)`; zero at or below threshold.
pub fn perturbative_decay(omega0: f64, p: &SelfEnergyParams) -> f64 {
    let d = omega0 - p.omega_n;
    if d <= 0.0 {
        return 0.0;
    }
    let x = std::f64::consts::PI * (d / p.omega_diff).sqrt();
    std::f64::consts::TAU * p.g * p.g * j1(x).powi(2) / d
}

/// Envelope of [`perturbative_decay`] far above threshold, `(4/π) g² / (ω_diff s^{3/2})`, `s = (ω0−ω_n)/ω_diff`.
pub fn decay_envelope(omega0: f64, p: &SelfEnergyParams) -> f64 {
    let s = (omega0 - p.omega_n) / p.omega_diff;
    if s <= 0.0 {
        return 0.0;
    }
    4.0 / std::f64::consts::PI * p.g * p.g / (p.omega_diff * s.powf(1.5))
}

/// Poles `ω±` of the resolvent with only the leading `g²/(ω−ω_n)` term of Σ kept.
pub fn dressed_poles(omega0: f64, omega_n: f64, g: f64) -> (f64, f64) {
    let mid = 0.5 * (omega0 + omega_n);
    let half = g.hypot(0.5 * (omega0 - omega_n));
    (mid + half, mid - half)
}

/// `Ω_R = √(4g² + (ω0 − ω_n)²)`.
pub fn rabi_frequency(omega0: f64, omega_n: f64, g: f64) -> f64 {
    (2.0 * g).hypot(omega0 - omega_n)
}

/// Early-time population `1 − (4g²/Ω_R²) sin²(Ω_R t/2)`.
pub fn rabi_population(t: f64, omega0: f64, omega_n: f64, g: f64) -> f64 {
    let w = rabi_frequency(omega0, omega_n, g);
    1.0 - (2.0 * g / w).powi(2) * (0.5 * w * t).sin().powi(2)
}

/// Decay of the vacuum Rabi oscillations at resonance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RabiDecay {
    /// `|Im Σ(ω_n + g)| = π g J1²(x)`, `x = π√(g/ω_diff)`.
    pub pole: f64,
    /// `π g (J1² + Y1²)(x)`, the envelope of `pole` over the diffraction oscillation.
    pub envelope: f64,
}

pub fn rabi_decay_rate(p: &SelfEnergyParams) -> RabiDecay {
    let x = std::f64::consts::PI * (p.g / p.omega_diff).sqrt();
    let pole = self_energy(p.omega_n + p.g, p).im.abs();
    let envelope = std::f64::consts::PI * p.g * (j1(x).powi(2) + y1(x).powi(2));
    RabiDecay { pole, envelope }
}

/// True when one overtone dominates Σ: `g ≤ 0.1 · FSR` (both in the same units).
pub fn single_overtone_valid(g: f64, fsr: f64) -> bool {
    g <= 0.1 * fsr
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceMethod {
    ClosedForm,
    FourierInversion,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DynamicsTrace {
    /// Sample times (s).
    pub times: Vec<f64>,
    /// `P_e(t) = |A_e(t)|²`.
    pub population: Vec<f64>,
    pub method: TraceMethod,
    pub omega0: f64,
    pub params: SelfEnergyParams,
    /// Contour offset and frequency step used (rad/s); zero for closed form.
    pub eta: f64,
    pub step: f64,
}

/// Numerical settings for [`full_dynamics`]; `None` picks the default.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InversionOptions {
    pub eta: Option<f64>,
    pub step: Option<f64>,
    /// Distance beyond the outer of `ω_n`, `ω0` the grid extends (rad/s).
    pub margin: Option<f64>,
}

const CHUNK: usize = 4096;

fn sample_times(t_max: f64, samples: usize) -> Result<Vec<f64>> {
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidInput(format!("t_max must be positive, got {t_max}")));
    }
    if samples < 2 {
        return Err(Error::InvalidInput("need at least two time samples".into()));
    }
    Ok((0..samples).map(|i| t_max * i as f64 / (samples - 1) as f64).collect())
}

/// Closed-form Rabi trace on the same time grid as [`full_dynamics`].
pub fn closed_form_trace(omega0: f64, p: &SelfEnergyParams, t_max: f64, samples: usize) -> Result<DynamicsTrace> {
    let times = sample_times(t_max, samples)?;
    let population = times.iter().map(|&t| rabi_population(t, omega0, p.omega_n, p.g)).collect();
    Ok(DynamicsTrace {
        times,
        population,
        method: TraceMethod::ClosedForm,
        omega0,
        params: *p,
        eta: 0.0,
        step: 0.0,
    })
}

/// Margin at which the dropped one-sided tail `∫ g²√ω_diff / (π ν^{7/2}) dν` of the
/// subtracted resolvent falls to 2.5e-7 in amplitude.
fn tail_margin(p: &SelfEnergyParams) -> f64 {
    let c = p.g * p.g * p.omega_diff.sqrt() / (5.0 * std::f64::consts::PI.powi(2));
    (c / 2.5e-7).powf(0.4)
}

/// Grid settings [`full_dynamics`] would use.
pub fn inversion_grid(p: &SelfEnergyParams, t_max: f64, opts: InversionOptions) -> Result<(f64, f64, f64)> {
    let big = p.g.max(p.omega_diff);
    let eta = match opts.eta {
        Some(e) if e > 0.0 && e.is_finite() => e,
        Some(e) => return Err(Error::InvalidInput(format!("eta must be positive, got {e}"))),
        None => (1e-3 * big).min(2.0 / t_max),
    };
    let max_step = (p.g.min(p.omega_diff) / 20.0).min(eta / 3.0).min(std::f64::consts::PI / t_max);
    let step = match opts.step {
        Some(h) if h > max_step * (1.0 + 1e-12) => {
            return Err(Error::UnderResolved(format!(
                "frequency step {h:.3e} rad/s exceeds the limit min(min(ω_diff, g)/20, η/3, π/t_max) = {max_step:.3e} rad/s"
            )))
        }
        Some(h) if h > 0.0 => h,
        Some(h) => return Err(Error::InvalidInput(format!("frequency step must be positive, got {h}"))),
        None => max_step,
    };
    let min_margin = 20.0 * big;
    let margin = match opts.margin {
        Some(m) if m < min_margin * (1.0 - 1e-12) => {
            return Err(Error::UnderResolved(format!(
                "grid margin {m:.3e} rad/s is below 20·max(g, ω_diff) = {min_margin:.3e} rad/s"
            )))
        }
        Some(m) => m,
        None => min_margin.max(tail_margin(p)),
    };
    Ok((eta, step, margin))
}

/// `P_e(t)` by trapezoidal inversion of the resolvent along `Im ω = η`.
///
/// The free resolvent `1/(ω − ω0)` is subtracted and added back analytically,
/// so the truncated integrand decays as `|ω|⁻³`. Shifting the contour is exact
/// for any `η > 0`; the factor `e^{ηt}` is applied afterwards.
pub fn full_dynamics(
    omega0: f64,
    p: &SelfEnergyParams,
    t_max: f64,
    samples: usize,
    opts: InversionOptions,
) -> Result<DynamicsTrace> {
    let times = sample_times(t_max, samples)?;
    let (eta, h, margin) = inversion_grid(p, t_max, opts)?;
    let detuning = omega0 - p.omega_n;
    // Frequencies are measured from ω_n.
    let lo = detuning.min(0.0) - margin;
    let hi = detuning.max(0.0) + margin;
    let npts = ((hi - lo) / h).ceil() as usize + 1;
    if npts > 200_000_000 {
        return Err(Error::UnderResolved(format!("frequency grid would need {npts} points")));
    }

    let chunks: Vec<Vec<Complex64>> = (0..npts.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            let end = (start + CHUNK).min(npts);
            let vals: Vec<Complex64> = (start..end)
                .map(|k| {
                    let nu = Complex64::new(lo + k as f64 * h, eta);
                    let sigma = p.sigma_offset(nu);
                    let f = 1.0 / (nu - detuning - sigma) - 1.0 / (nu - detuning);
                    let wgt = if k == 0 || k == npts - 1 { 0.5 } else { 1.0 };
                    f * wgt
                })
                .collect();
            let nu0 = lo + start as f64 * h;
            times
                .iter()
                .map(|&t| {
                    // Phasor recurrence, anchored once per chunk.
                    let mut ph = Complex64::from_polar(1.0, -nu0 * t);
                    let rot = Complex64::from_polar(1.0, -h * t);
                    let mut acc = Complex64::new(0.0, 0.0);
                    for v in &vals {
                        acc += v * ph;
                        ph *= rot;
                    }
                    acc
                })
                .collect()
        })
        .collect();

    let mut sums = vec![Complex64::new(0.0, 0.0); times.len()];
    for part in &chunks {
        for (s, v) in sums.iter_mut().zip(part) {
            *s += v;
        }
    }
    let i_over_2pi = Complex64::new(0.0, 1.0 / std::f64::consts::TAU);
    let population = times
        .iter()
        .zip(&sums)
        .map(|(&t, s)| {
            let a = Complex64::from_polar(1.0, -detuning * t) + (eta * t).exp() * i_over_2pi * h * s;
            a.norm_sqr()
        })
        .collect();
    Ok(DynamicsTrace {
        times,
        population,
        method: TraceMethod::FourierInversion,
        omega0,
        params: *p,
        eta,
        step: h,
    })
}
