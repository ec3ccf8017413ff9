//! Bessel functions for the disk transform, the continuum self-energy and the
//! cylinder spectrum.
//!
//! Real `J0, J1, Y0, Y1, J_m` come from `libm`. `I1` is summed from its power
//! series, `K1` from a small-argument series, a trapezoid rule on
//! `∫ exp(-x cosh t) cosh t dt`, or the Hankel asymptotic series.
//!
//! The continuum kernel `1 - iπ J1(v) H1(v)` is evaluated for `v` in the
//! closed first quadrant, which is where `π√w` lands for `w` in the upper half
//! plane.

use std::f64::consts::{FRAC_PI_4, PI};

use num_complex::Complex64;

use crate::constants::EULER_GAMMA;
use crate::error::{Error, Result};

/// Radius beyond which the Hankel asymptotic series is used.
const R_ASYMPTOTIC: f64 = 12.0;

/// Above this argument the modified-function route replaces the J/Y series.
const ARG_SWITCH: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BesselKind {
    J0,
    J1,
    Y0,
    Y1,
    I1,
    K1,
}

/// Evaluate one of the real Bessel functions.
///
/// `Y0`, `Y1` and `K1` are singular at the origin and return a domain error there.
pub fn bessel_kernel(x: f64, kind: BesselKind) -> Result<f64> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::InvalidInput(format!(
            "Bessel argument must be finite and non-negative, got {x}"
        )));
    }
    let singular = matches!(kind, BesselKind::Y0 | BesselKind::Y1 | BesselKind::K1);
    if singular && x == 0.0 {
        let function = match kind {
            BesselKind::Y0 => "Y0",
            BesselKind::Y1 => "Y1",
            _ => "K1",
        };
        return Err(Error::Domain { function, x });
    }
    Ok(match kind {
        BesselKind::J0 => j0(x),
        BesselKind::J1 => j1(x),
        BesselKind::Y0 => libm::y0(x),
        BesselKind::Y1 => libm::y1(x),
        BesselKind::I1 => i1(x),
        BesselKind::K1 => k1(x),
    })
}

#[inline]
pub fn j0(x: f64) -> f64 {
    libm::j0(x)
}

#[inline]
pub fn j1(x: f64) -> f64 {
    libm::j1(x)
}

#[inline]
pub fn y1(x: f64) -> f64 {
    libm::y1(x)
}

/// `J_m(x)` for integer order.
#[inline]
pub fn jn(m: u32, x: f64) -> f64 {
    libm::jn(m as i32, x)
}

/// `2 J1(x) / x`, equal to 1 at the origin.
pub fn jinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let q = x * x / 8.0;
        1.0 - q + q * q / 3.0
    } else {
        2.0 * j1(x) / x
    }
}

/// Modified Bessel function `I1` by its power series (all terms positive).
pub fn i1(x: f64) -> f64 {
    let h = 0.5 * x;
    let q = h * h;
    let mut term = h;
    let mut sum = term;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= q / (k * (k + 1.0));
        sum += term;
        if term < 1e-17 * sum || k > 2000.0 {
            break;
        }
    }
    sum
}

/// Modified Bessel function `K1` for `x > 0`.
pub fn k1(x: f64) -> f64 {
    if x < 2.0 {
        k1_series(x)
    } else if x < 20.0 {
        k1_integral(Complex64::new(x, 0.0)).re
    } else {
        k1_asymptotic(x)
    }
}

fn digamma_int(n: usize) -> f64 {
    // ψ(n) for positive integers.
    -EULER_GAMMA + (1..n).map(|j| 1.0 / j as f64).sum::<f64>()
}

fn k1_series(x: f64) -> f64 {
    let h = 0.5 * x;
    let q = h * h;
    let mut term = 1.0;
    let mut psi_a = digamma_int(1);
    let mut psi_b = digamma_int(2);
    let mut sum = (psi_a + psi_b) * term;
    for k in 1..60 {
        let kf = k as f64;
        term *= q / (kf * (kf + 1.0));
        psi_a += 1.0 / kf;
        psi_b += 1.0 / (kf + 1.0);
        let t = (psi_a + psi_b) * term;
        sum += t;
        if t.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    1.0 / x + h.ln() * i1(x) - 0.5 * h * sum
}

fn k1_asymptotic(x: f64) -> f64 {
    // K_ν(x) ~ sqrt(π/2x) e^{-x} Σ a_k(ν)/x^k, all terms positive.
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..40 {
        let odd = (2 * k - 1) as f64;
        term *= (4.0 - odd * odd) / (k as f64 * 8.0 * x);
        let next = term.abs();
        sum += term;
        if next < 1e-17 {
            break;
        }
    }
    (PI / (2.0 * x)).sqrt() * (-x).exp() * sum
}

/// `K1(u) = ∫_0^∞ exp(-u cosh t) cosh t dt`, trapezoid rule, valid for `Re u > 0`.
///
/// The integrand is analytic in a strip around the real t axis, so the rule
/// converges geometrically in the step size.
fn k1_integral(u: Complex64) -> Complex64 {
    let h: f64 = 0.05;
    let decay = u.re;
    let mut sum = 0.5 * (-u).exp();
    let mut t = h;
    loop {
        let c = t.cosh();
        if decay * c > 745.0 {
            break;
        }
        let term = (-u * c).exp() * c;
        sum += term;
        if term.norm() < 1e-18 * sum.norm() && decay * c > 40.0 {
            break;
        }
        t += h;
    }
    sum * h
}

/// Complex `I1(u)` from its power series.
fn i1_complex(u: Complex64) -> Complex64 {
    let h = 0.5 * u;
    let q = h * h;
    let mut term = h;
    let mut sum = term;
    for k in 1..400 {
        let kf = k as f64;
        term *= q / (kf * (kf + 1.0));
        sum += term;
        if term.norm() < 1e-17 * sum.norm() {
            break;
        }
    }
    sum
}

/// Power series for `J1(z)`, `1 - 2 J1(z)/z` and `Y1(z) + 2/(πz)`.
///
/// The second quantity is summed directly so that it keeps full relative
/// accuracy for small `z`.
fn series_j1_y1(z: Complex64) -> (Complex64, Complex64, Complex64) {
    let h = 0.5 * z;
    let mq = -(h * h);
    let mut t = Complex64::new(1.0, 0.0); // (-z²/4)^k / (k!(k+1)!)
    let mut jsum = t;
    let mut one_minus = Complex64::new(0.0, 0.0);
    let mut psi_a = digamma_int(1);
    let mut psi_b = digamma_int(2);
    let mut ysum = t * (psi_a + psi_b);
    for k in 1..200 {
        let kf = k as f64;
        t *= mq / (kf * (kf + 1.0));
        psi_a += 1.0 / kf;
        psi_b += 1.0 / (kf + 1.0);
        jsum += t;
        one_minus -= t;
        let yt = t * (psi_a + psi_b);
        ysum += yt;
        if t.norm() < 1e-18 * jsum.norm().max(1e-300) && yt.norm() < 1e-18 * ysum.norm() {
            break;
        }
    }
    let j1 = h * jsum;
    let y_rest = (2.0 / PI) * h.ln() * j1 - (1.0 / PI) * h * ysum;
    (j1, one_minus, y_rest)
}

/// Hankel asymptotic sums `S±(z) = Σ (±i)^k a_k(1) / z^k`.
fn hankel_sums(z: Complex64) -> (Complex64, Complex64) {
    let i = Complex64::i();
    let mut a = Complex64::new(1.0, 0.0);
    let mut plus = a;
    let mut minus = a;
    let mut ip = Complex64::new(1.0, 0.0);
    let mut im = Complex64::new(1.0, 0.0);
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        a *= (4.0 - odd * odd) / (k as f64 * 8.0) / z;
        let size = a.norm();
        if size > last {
            break;
        }
        ip *= i;
        im *= -i;
        plus += ip * a;
        minus += im * a;
        if size < 1e-17 {
            break;
        }
        last = size;
    }
    (plus, minus)
}

/// `F(v) = 1 - iπ J1(v) H1⁽¹⁾(v)` for `v` in the closed first quadrant.
///
/// On the positive real axis `F = 1 + πJ1Y1 - iπJ1²`; on the positive
/// imaginary axis `v = iu` it equals the real number `1 - 2 I1(u) K1(u)`.
pub fn continuum_kernel(v: Complex64) -> Complex64 {
    let r = v.norm();
    if r >= R_ASYMPTOTIC {
        // J1 = (H1 + H2)/2, so J1 H1 = (H1² + H1 H2)/2, and the exponentials in
        // H1 H2 cancel analytically.
        let (sp, sm) = hankel_sums(v);
        let phase = (2.0 * Complex64::i() * (v - 3.0 * FRAC_PI_4)).exp();
        return 1.0 - Complex64::i() / v * (phase * sp * sp + sp * sm);
    }
    if r < 1.0 || v.arg() <= ARG_SWITCH {
        let (j1, one_minus, y_rest) = series_j1_y1(v);
        return one_minus + PI * j1 * y_rest - Complex64::i() * PI * j1 * j1;
    }
    let u = -Complex64::i() * v;
    1.0 - 2.0 * i1_complex(u) * k1_integral(u)
}

/// Real-axis kernel above threshold, `1 + πJ1(x)Y1(x) - iπJ1(x)²`.
pub fn continuum_kernel_real(x: f64) -> Complex64 {
    if x < 1.0 {
        continuum_kernel(Complex64::new(x, 0.0))
    } else {
        let j = j1(x);
        Complex64::new(1.0 + PI * j * y1(x), -PI * j * j)
    }
}

/// Real-axis kernel below threshold, `1 - 2 I1(u) K1(u)`.
pub fn continuum_kernel_below(u: f64) -> f64 {
    if u < 1.0 || u >= R_ASYMPTOTIC {
        continuum_kernel(Complex64::new(0.0, u)).re
    } else {
        1.0 - 2.0 * i1(u) * k1(u)
    }
}

/// The `l`-th positive root of `J_m` (`l ≥ 1`).
///
/// Roots are bracketed by a fixed-step scan, then polished by bisection and Newton.
pub fn bessel_root(m: u32, l: u32) -> Result<f64> {
    if l == 0 {
        return Err(Error::InvalidInput("Bessel root index l starts at 1".into()));
    }
    Ok(bessel_roots(m, l as usize)[l as usize - 1])
}

/// The first `count` positive roots of `J_m`, increasing.
pub fn bessel_roots(m: u32, count: usize) -> Vec<f64> {
    let f = |x: f64| jn(m, x);
    let mut roots = Vec::with_capacity(count);
    let step = 0.25;
    // J_m is positive on (0, j_{m,1}) and j_{m,1} > m.
    let mut lo = (m as f64).max(0.1);
    let mut flo = f(lo);
    while roots.len() < count {
        let hi = lo + step;
        let fhi = f(hi);
        if flo == 0.0 {
            roots.push(lo);
        } else if flo * fhi < 0.0 {
            roots.push(polish_root(m, lo, hi));
        }
        lo = hi;
        flo = fhi;
    }
    roots
}

fn polish_root(m: u32, mut lo: f64, mut hi: f64) -> f64 {
    let f = |x: f64| jn(m, x);
    let flo = f(lo);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if f(mid) * flo > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..8 {
        let dj = if m == 0 {
            -j1(x)
        } else {
            0.5 * (jn(m - 1, x) - jn(m + 1, x))
        };
        let dx = f(x) / dj;
        x -= dx;
        if dx.abs() < 1e-16 * x {
            break;
        }
    }
    x
}
