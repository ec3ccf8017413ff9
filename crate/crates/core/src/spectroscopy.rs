//! Dispersive spectroscopy of a qubit next to a coherently displaced phonon mode.
//!
//! The qubit line splits into Lorentzians at `ω̃0 + Nχ` with Poisson weights in
//! the phonon number `N` and full width at half maximum `γ(N) = 2γ₂ + Nκ`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

/// Largest Poisson tail mass a model may drop.
pub const MAX_TAIL: f64 = 1e-6;
/// Tail mass targeted when the truncation is chosen automatically.
pub const AUTO_TAIL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DispersiveModel {
    /// Stark-shifted qubit frequency (rad/s).
    pub omega_tilde0: f64,
    /// Dispersive shift per phonon (rad/s).
    pub chi: f64,
    pub gamma2: f64,
    pub kappa: f64,
    pub nbar: f64,
    pub n_max: usize,
}

impl DispersiveModel {
    /// Model with the Fock truncation chosen so the dropped Poisson mass is below [`AUTO_TAIL`].
    pub fn new(omega_tilde0: f64, chi: f64, gamma2: f64, kappa: f64, nbar: f64) -> Result<Self> {
        if !(nbar >= 0.0 && nbar.is_finite()) {
            return Err(Error::InvalidInput(format!("nbar must be non-negative, got {nbar}")));
        }
        let m = Self {
            omega_tilde0,
            chi,
            gamma2,
            kappa,
            nbar,
            n_max: auto_n_max(nbar, AUTO_TAIL),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn with_n_max(self, n_max: usize) -> Result<Self> {
        let m = Self { n_max, ..self };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if !(self.gamma2 > 0.0) {
            return bad(format!("gamma2 must be positive, got {}", self.gamma2));
        }
        if !(self.kappa >= 0.0) {
            return bad(format!("kappa must be non-negative, got {}", self.kappa));
        }
        if !(self.nbar >= 0.0) {
            return bad(format!("nbar must be non-negative, got {}", self.nbar));
        }
        if !(self.omega_tilde0.is_finite() && self.chi.is_finite()) {
            return bad("frequencies must be finite".into());
        }
        let floor = min_n_max(self.nbar);
        if self.n_max < floor {
            return bad(format!("N_max = {} is below ceil(nbar + 5 sqrt(nbar)) = {floor}", self.n_max));
        }
        let (_, tail) = poisson_weights(self.nbar, self.n_max);
        if tail > MAX_TAIL {
            return Err(Error::Truncation { tail, n_max: self.n_max });
        }
        Ok(())
    }
}

fn min_n_max(nbar: f64) -> usize {
    (nbar + 5.0 * nbar.sqrt()).ceil() as usize
}

/// Smallest `N_max ≥ ⌈n̄ + 5√n̄⌉` whose Poisson tail is below `tail`.
pub fn auto_n_max(nbar: f64, tail: f64) -> usize {
    let mut n = min_n_max(nbar);
    while poisson_weights(nbar, n).1 >= tail && n < 100_000 {
        n += 1;
    }
    n
}

/// Poisson weights for `N = 0..=n_max` and the dropped mass.
pub fn poisson_weights(nbar: f64, n_max: usize) -> (Vec<f64>, f64) {
    let mut w = Vec::with_capacity(n_max + 1);
    let mut p = (-nbar).exp();
    let mut sum = 0.0;
    for k in 0..=n_max {
        if k > 0 {
            p *= nbar / k as f64;
        }
        w.push(p);
        sum += p;
    }
    (w, (1.0 - sum).max(0.0))
}

/// `χ = 2g²/Δ`.
pub fn dispersive_shift(g: f64, delta: f64) -> Result<f64> {
    if delta == 0.0 || !delta.is_finite() {
        return Err(Error::InvalidInput(format!("detuning must be non-zero, got {delta}")));
    }
    Ok(2.0 * g * g / delta)
}

/// The dispersive approximation needs `|Δ| > 3g`.
pub fn dispersive_regime_ok(g: f64, delta: f64) -> bool {
    delta.abs() > 3.0 * g.abs()
}

/// `γ(N) = 2γ₂ + Nκ`.
pub fn linewidth(n: usize, gamma2: f64, kappa: f64) -> f64 {
    2.0 * gamma2 + n as f64 * kappa
}

/// `C = 4g²/(κγ₂)`.
pub fn cooperativity(g: f64, kappa: f64, gamma2: f64) -> f64 {
    4.0 * g * g / (kappa * gamma2)
}

/// Unit-area Lorentzian with full width at half maximum `fwhm`.
pub fn lorentzian(x: f64, center: f64, fwhm: f64) -> f64 {
    let h = 0.5 * fwhm;
    h / std::f64::consts::PI / ((x - center).powi(2) + h * h)
}

/// `S(ω) = Σ_N P(N; n̄) L(ω; ω̃0 + Nχ, γ(N))`, unit area over ω (rad/s).
pub fn spectrum_model(model: &DispersiveModel, freqs: &[f64]) -> Result<Vec<f64>> {
    model.validate()?;
    let (w, _) = poisson_weights(model.nbar, model.n_max);
    Ok(freqs
        .iter()
        .map(|&f| {
            w.iter()
                .enumerate()
                .map(|(n, wn)| {
                    wn * lorentzian(
                        f,
                        model.omega_tilde0 + n as f64 * model.chi,
                        linewidth(n, model.gamma2, model.kappa),
                    )
                })
                .sum()
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iter: usize,
    /// Convergence when `‖δθ‖ < rel_step · ‖θ‖`.
    pub rel_step: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { max_iter: 200, rel_step: 1e-10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitParameters {
    pub omega_tilde0: f64,
    pub gamma2: f64,
    pub kappa: f64,
    pub nbar: f64,
    pub amplitude: f64,
    pub baseline: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub params: FitParameters,
    /// One-sigma uncertainties from the residual-scaled inverse normal matrix.
    pub uncertainties: FitParameters,
    pub chi: f64,
    pub residual_norm: f64,
    pub iterations: usize,
    /// Residual norm after every accepted step, starting with the initial guess.
    pub residual_history: Vec<f64>,
}

const NAMES: [&str; 6] = ["omega_tilde0", "gamma2", "kappa", "nbar", "amplitude", "baseline"];

/// Normalized problem: x = (ω − ω_ref)/|χ|, θ = [c, s, p, q, A, B] with
/// γ₂ = s², κ = p², n̄ = q² in units of |χ| (widths) and phonons.
struct Problem<'a> {
    x: Vec<f64>,
    y: &'a [f64],
    sign: f64,
}

impl Problem<'_> {
    fn eval(&self, th: &[f64], out: &mut [f64]) {
        let (c, g2, k, nbar, a, b) = (th[0], th[1] * th[1], th[2] * th[2], th[3] * th[3], th[4], th[5]);
        let n_max = auto_n_max(nbar, 1e-12);
        let (w, _) = poisson_weights(nbar, n_max);
        for (o, &x) in out.iter_mut().zip(&self.x) {
            let s: f64 = w
                .iter()
                .enumerate()
                .map(|(n, wn)| wn * lorentzian(x, c + self.sign * n as f64, 2.0 * g2 + n as f64 * k))
                .sum();
            *o = a * s + b;
        }
    }

    fn residuals(&self, th: &[f64]) -> DVector<f64> {
        let mut m = vec![0.0; self.x.len()];
        self.eval(th, &mut m);
        DVector::from_iterator(m.len(), m.iter().zip(self.y).map(|(m, y)| m - y))
    }

    fn jacobian(&self, th: &[f64]) -> DMatrix<f64> {
        let n = self.x.len();
        let mut j = DMatrix::zeros(n, th.len());
        let mut plus = vec![0.0; n];
        let mut minus = vec![0.0; n];
        let mut t = th.to_vec();
        for k in 0..th.len() {
            let h = 1e-6 * th[k].abs().max(1e-3);
            t[k] = th[k] + h;
            self.eval(&t, &mut plus);
            t[k] = th[k] - h;
            self.eval(&t, &mut minus);
            t[k] = th[k];
            for i in 0..n {
                j[(i, k)] = (plus[i] - minus[i]) / (2.0 * h);
            }
        }
        j
    }
}

/// Levenberg–Marquardt fit of γ₂, κ, ω̃0, n̄ plus amplitude and baseline, with χ held fixed.
pub fn fit_spectrum(freqs: &[f64], intensity: &[f64], chi: f64, initial: &DispersiveModel, opts: FitOptions) -> Result<FitResult> {
    if freqs.len() != intensity.len() {
        return Err(Error::Shape {
            what: "spectrum intensities",
            expected: freqs.len(),
            got: intensity.len(),
        });
    }
    if freqs.len() < 50 {
        return Err(Error::InvalidInput(format!("need at least 50 samples, got {}", freqs.len())));
    }
    if chi == 0.0 || !chi.is_finite() {
        return Err(Error::InvalidInput("chi must be non-zero".into()));
    }
    let (lo, hi) = freqs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &f| (a.min(f), b.max(f)));
    if hi - lo < 4.0 * chi.abs() {
        return Err(Error::InvalidInput("samples must span at least 4|chi|".into()));
    }
    if freqs.iter().chain(intensity).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("spectrum contains non-finite values".into()));
    }
    let scale = chi.abs();
    let reference = initial.omega_tilde0;
    let prob = Problem {
        x: freqs.iter().map(|f| (f - reference) / scale).collect(),
        y: intensity,
        sign: chi.signum(),
    };

    // Amplitude and baseline by linear least squares at the initial shape.
    let mut th = vec![
        0.0,
        (initial.gamma2 / scale).sqrt(),
        (initial.kappa / scale).sqrt(),
        initial.nbar.sqrt(),
        1.0,
        0.0,
    ];
    let mut unit = vec![0.0; freqs.len()];
    prob.eval(&th, &mut unit);
    let (a0, b0) = linear_fit(&unit, intensity);
    th[4] = a0;
    th[5] = b0;

    let j0 = prob.jacobian(&th);
    let col_max = (0..th.len()).map(|k| j0.column(k).norm()).fold(0.0, f64::max);
    for k in 0..th.len() {
        if !(j0.column(k).norm() > 1e-12 * col_max) {
            return Err(Error::DegenerateJacobian(NAMES[k].to_string()));
        }
    }

    let mut r = prob.residuals(&th);
    let mut cost = r.norm_squared();
    let mut history = vec![cost.sqrt()];
    let mut lambda = -1.0;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        iterations += 1;
        let j = prob.jacobian(&th);
        let a = j.transpose() * &j;
        let g = j.transpose() * &r;
        let diag: Vec<f64> = (0..th.len()).map(|k| a[(k, k)].max(1e-300)).collect();
        if lambda < 0.0 {
            lambda = 1e-3;
        }
        let mut step_taken = None;
        while lambda < 1e16 {
            let mut m = a.clone();
            for k in 0..th.len() {
                m[(k, k)] += lambda * diag[k];
            }
            let delta = match m.cholesky() {
                Some(ch) => ch.solve(&(-&g)),
                None => {
                    lambda *= 4.0;
                    continue;
                }
            };
            let trial: Vec<f64> = th.iter().zip(delta.iter()).map(|(t, d)| t + d).collect();
            let rt = prob.residuals(&trial);
            let ct = rt.norm_squared();
            if ct.is_finite() && ct <= cost {
                step_taken = Some((trial, rt, ct, delta.norm()));
                lambda = (lambda / 3.0).max(1e-12);
                break;
            }
            lambda *= 4.0;
        }
        let Some((trial, rt, ct, dn)) = step_taken else {
            // No downhill step at any damping: at a minimum to working precision.
            converged = true;
            break;
        };
        let tn = trial.iter().map(|t| t * t).sum::<f64>().sqrt();
        th = trial;
        r = rt;
        cost = ct;
        history.push(cost.sqrt());
        if dn <= opts.rel_step * tn.max(1e-300) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence(format!(
            "{} iterations without the relative step falling below {:e}",
            opts.max_iter, opts.rel_step
        )));
    }

    let params = FitParameters {
        omega_tilde0: reference + th[0] * scale,
        gamma2: th[1] * th[1] * scale,
        kappa: th[2] * th[2] * scale,
        nbar: th[3] * th[3],
        amplitude: th[4] * scale,
        baseline: th[5],
    };
    let uncertainties = uncertainties(&prob, &th, cost, scale);
    Ok(FitResult {
        params,
        uncertainties,
        chi,
        residual_norm: cost.sqrt(),
        iterations,
        residual_history: history,
    })
}

fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let (sx, sy) = (x.iter().sum::<f64>(), y.iter().sum::<f64>());
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let det = n * sxx - sx * sx;
    if det.abs() < 1e-300 {
        return (1.0, 0.0);
    }
    let a = (n * sxy - sx * sy) / det;
    (a, (sy - a * sx) / n)
}

fn uncertainties(prob: &Problem, th: &[f64], cost: f64, scale: f64) -> FitParameters {
    let j = prob.jacobian(th);
    let dof = (prob.x.len() as f64 - th.len() as f64).max(1.0);
    let cov = (j.transpose() * &j).try_inverse().map(|c| c * (cost / dof));
    let sd = |k: usize| cov.as_ref().map_or(f64::NAN, |c| c[(k, k)].max(0.0).sqrt());
    // Propagate through γ₂ = s²|χ| etc.
    FitParameters {
        omega_tilde0: sd(0) * scale,
        gamma2: 2.0 * th[1].abs() * sd(1) * scale,
        kappa: 2.0 * th[2].abs() * sd(2) * scale,
        nbar: 2.0 * th[3].abs() * sd(3),
        amplitude: sd(4) * scale,
        baseline: sd(5),
    }
}

/// Rough initial ω̃0 and n̄ from the sampled spectrum: the N = 0 line is the
/// outermost prominent peak on the side opposite to χ, and n̄ follows from the
/// height ratio of the two tallest neighbouring peaks.
pub fn estimate_initial(freqs: &[f64], intensity: &[f64], chi: f64) -> Option<(f64, f64)> {
    let base = intensity.iter().cloned().fold(f64::INFINITY, f64::min);
    let top = intensity.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - base;
    if !(top > 0.0) {
        return None;
    }
    let mut peaks: Vec<(f64, f64)> = (1..intensity.len().saturating_sub(1))
        .filter(|&i| intensity[i] > intensity[i - 1] && intensity[i] >= intensity[i + 1])
        .map(|i| (freqs[i], intensity[i] - base))
        .filter(|&(_, h)| h > 0.05 * top)
        .collect();
    if peaks.is_empty() {
        return None;
    }
    // Descending frequency when χ < 0, ascending otherwise.
    peaks.sort_by(|a, b| (chi.signum() * a.0).partial_cmp(&(chi.signum() * b.0)).unwrap());
    let omega0 = peaks[0].0;
    let mut by_height = peaks.clone();
    by_height.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    let nbar = match by_height.as_slice() {
        [hi, next, ..] => {
            // Index each peak by N = round((f − ω̃0)/χ).
            let n_hi = ((hi.0 - omega0) / chi).round();
            let n_next = ((next.0 - omega0) / chi).round();
            if n_next > n_hi {
                next.1 / hi.1 * n_next
            } else {
                hi.1 / next.1 * n_hi.max(1.0)
            }
        }
        _ => 0.1,
    };
    Some((omega0, nbar.max(1e-3)))
}
