use std::f64::consts::TAU;

use phonoscope::spectroscopy::*;
use phonoscope::Error;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};

const KHZ: f64 = TAU * 1e3;
const MHZ: f64 = TAU * 1e6;

fn device_model() -> DispersiveModel {
    DispersiveModel::new(TAU * 4.97e9, -0.35 * MHZ, 39.8 * KHZ, 21.8 * KHZ, 1.0).unwrap()
}

fn grid(m: &DispersiveModel, n: usize) -> Vec<f64> {
    let lo = m.omega_tilde0 - 5.5 * m.chi.abs();
    let hi = m.omega_tilde0 + 1.5 * m.chi.abs();
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn dispersive_shift_values() {
    let chi = dispersive_shift(1.35 * MHZ, -10.5 * MHZ).unwrap();
    assert!(rel(chi / MHZ, -0.347) < 2e-3, "{}", chi / MHZ);
    assert!(rel(dispersive_shift(1.35 * MHZ, -105.0 * MHZ).unwrap(), chi / 10.0) < 1e-12);
    assert_eq!(dispersive_shift(0.0, 1.0).unwrap(), 0.0);
    assert!(matches!(dispersive_shift(1.0, 0.0), Err(Error::InvalidInput(_))));
    assert!(dispersive_regime_ok(1.35, -10.5));
    assert!(!dispersive_regime_ok(1.35, 3.0));
}

#[test]
fn linewidth_and_cooperativity() {
    let (g2, k) = (39.8 * KHZ, 21.8 * KHZ);
    assert_eq!(linewidth(0, g2, k), 2.0 * g2);
    assert_eq!(linewidth(1, g2, k) - linewidth(0, g2, k), k);
    assert!(rel(linewidth(4, g2, k) - linewidth(2, g2, k), 2.0 * k) < 1e-12);
    let c = cooperativity(1.35 * MHZ, k, g2);
    assert!(rel(c, 8.4e3) < 0.02, "{c}");
    assert_eq!(cooperativity(0.0, k, g2), 0.0);
    assert!(rel(cooperativity(2.7 * MHZ, k, g2), 4.0 * c) < 1e-12);
}

#[test]
fn model_validation() {
    assert!(DispersiveModel::new(1.0, -0.1, 0.0, 0.0, 1.0).is_err());
    assert!(DispersiveModel::new(1.0, -0.1, 1e-3, -1.0, 1.0).is_err());
    assert!(DispersiveModel::new(1.0, -0.1, 1e-3, 0.0, -1.0).is_err());
    let m = DispersiveModel::new(1.0, -0.1, 1e-3, 0.0, 4.0).unwrap();
    assert!(m.n_max >= 14);
    // ceil(4 + 10) = 14 satisfies the floor but drops more than 1e-6 of the mass.
    assert!(matches!(m.with_n_max(14), Err(Error::Truncation { .. })));
    assert!(m.with_n_max(13).is_err());
    assert!(poisson_weights(4.0, m.n_max).1 < AUTO_TAIL);
}

#[test]
fn vacuum_is_a_single_lorentzian() {
    let m = DispersiveModel::new(10.0, -1.0, 0.05, 0.02, 0.0).unwrap();
    let f = [9.0, 9.95, 10.0, 10.1, 12.0];
    let s = spectrum_model(&m, &f).unwrap();
    for (x, y) in f.iter().zip(&s) {
        let expect = 0.05 / std::f64::consts::PI / ((x - 10.0).powi(2) + 0.05 * 0.05);
        assert!(rel(*y, expect) < 1e-12);
    }
}

#[test]
fn unit_area_for_several_shapes() {
    for &(chi, g2, k) in &[(-1.0, 0.05, 0.02), (2.0, 0.01, 0.0), (-0.3, 0.1, 0.2)] {
        let m = DispersiveModel::new(0.0, chi, g2, k, 1.5).unwrap();
        // ω = c + w tan u maps the whole line onto (−π/2, π/2); midpoint rule in u.
        let (c, w) = (2.0 * chi, 4.0 * chi.abs());
        let n = 400_000;
        let du = std::f64::consts::PI / n as f64;
        let u: Vec<f64> = (0..n).map(|i| -std::f64::consts::FRAC_PI_2 + (i as f64 + 0.5) * du).collect();
        let f: Vec<f64> = u.iter().map(|u| c + w * u.tan()).collect();
        let s = spectrum_model(&m, &f).unwrap();
        let area: f64 = s.iter().zip(&u).map(|(s, u)| s * w / u.cos().powi(2)).sum::<f64>() * du;
        assert!((area - 1.0).abs() < 1e-4, "area {area} for chi {chi}");
    }
}

fn local_maxima(f: &[f64], s: &[f64]) -> Vec<f64> {
    (1..s.len() - 1).filter(|&i| s[i] > s[i - 1] && s[i] >= s[i + 1]).map(|i| f[i]).collect()
}

fn fwhm_around(f: &[f64], s: &[f64], center: f64) -> f64 {
    let i0 = f.iter().position(|&x| x >= center).unwrap();
    let half = s[i0] / 2.0;
    let mut lo = i0;
    while s[lo] > half {
        lo -= 1;
    }
    let mut hi = i0;
    while s[hi] > half {
        hi += 1;
    }
    f[hi] - f[lo]
}

#[test]
fn device_spectrum_resolves_three_peaks() {
    let m = device_model();
    let f = grid(&m, 20_001);
    let s = spectrum_model(&m, &f).unwrap();
    let mut peaks = local_maxima(&f, &s);
    peaks.sort_by(|a, b| b.partial_cmp(a).unwrap());
    assert!(peaks.len() >= 3, "{peaks:?}");
    for n in 0..3 {
        let expect = m.omega_tilde0 + n as f64 * m.chi;
        assert!((peaks[n] - expect).abs() < linewidth(n, m.gamma2, m.kappa) / 10.0);
    }
    let widths: Vec<f64> = peaks[..3].iter().map(|&p| fwhm_around(&f, &s, p)).collect();
    assert!(widths[0] < widths[1] && widths[1] < widths[2], "{widths:?}");
}

fn init_from(m: &DispersiveModel) -> DispersiveModel {
    DispersiveModel::new(m.omega_tilde0 + 0.05 * m.chi.abs(), m.chi, m.gamma2 * 1.3, m.kappa.max(5.0 * KHZ) * 0.7, 0.8).unwrap()
}

#[test]
fn noiseless_round_trip() {
    let m = device_model();
    let f = grid(&m, 400);
    let y: Vec<f64> = spectrum_model(&m, &f).unwrap().iter().map(|v| 3.0e6 * v + 0.2).collect();
    let fit = fit_spectrum(&f, &y, m.chi, &init_from(&m), FitOptions::default()).unwrap();
    let p = fit.params;
    assert!(rel(p.gamma2, m.gamma2) < 1e-3);
    assert!(rel(p.kappa, m.kappa) < 1e-3);
    assert!(rel(p.nbar, m.nbar) < 1e-3);
    assert!((p.omega_tilde0 - m.omega_tilde0).abs() < 1e-3 * m.gamma2);
    assert!(rel(p.amplitude, 3.0e6) < 1e-3);
    assert!((p.baseline - 0.2).abs() < 1e-3);
    assert!(fit.iterations <= 200);
    for w in fit.residual_history.windows(2) {
        assert!(w[1] <= w[0]);
    }
}

#[test]
fn noisy_fits_recover_kappa() {
    let m = device_model();
    let f = grid(&m, 400);
    let clean = spectrum_model(&m, &f).unwrap();
    let peak = clean.iter().cloned().fold(0.0, f64::max);
    let noise = Normal::new(0.0, 0.01 * peak).unwrap();
    let mut sq = 0.0;
    for seed in 0..20u64 {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let y: Vec<f64> = clean.iter().map(|v| v + noise.sample(&mut rng)).collect();
        let fit = fit_spectrum(&f, &y, m.chi, &init_from(&m), FitOptions::default()).unwrap();
        sq += ((fit.params.kappa - m.kappa) / m.kappa).powi(2);
        assert!(fit.uncertainties.kappa > 0.0);
    }
    let rms = (sq / 20.0).sqrt();
    assert!(rms < 0.15, "kappa RMS error {rms}");
}

#[test]
fn zero_kappa_is_detected_as_zero() {
    let m = DispersiveModel::new(TAU * 4.97e9, -0.35 * MHZ, 39.8 * KHZ, 0.0, 1.0).unwrap();
    let f = grid(&m, 400);
    let y = spectrum_model(&m, &f).unwrap();
    let fit = fit_spectrum(&f, &y, m.chi, &init_from(&m), FitOptions::default()).unwrap();
    assert!(fit.params.kappa < 0.5 * KHZ, "{}", fit.params.kappa / KHZ);
}

#[test]
fn fitted_peaks_sit_on_the_ladder() {
    let m = device_model();
    let f = grid(&m, 400);
    let y = spectrum_model(&m, &f).unwrap();
    let p = fit_spectrum(&f, &y, m.chi, &init_from(&m), FitOptions::default()).unwrap().params;
    let fitted = DispersiveModel::new(p.omega_tilde0, m.chi, p.gamma2, p.kappa, p.nbar).unwrap();
    let fine = grid(&m, 40_001);
    let mut peaks = local_maxima(&fine, &spectrum_model(&fitted, &fine).unwrap());
    peaks.sort_by(|a, b| b.partial_cmp(a).unwrap());
    // Only N = 0 and 1 satisfy |χ| > 3γ(N) here.
    for (n, pk) in peaks.iter().take(2).enumerate() {
        let g = linewidth(n, p.gamma2, p.kappa);
        assert!(m.chi.abs() > 3.0 * g);
        assert!((pk - (p.omega_tilde0 + n as f64 * m.chi)).abs() < g / 10.0);
    }
}

#[test]
fn fit_preconditions() {
    let m = device_model();
    let f = grid(&m, 40);
    let y = spectrum_model(&m, &f).unwrap();
    assert!(matches!(fit_spectrum(&f, &y, m.chi, &m, FitOptions::default()), Err(Error::InvalidInput(_))));
    let narrow: Vec<f64> = (0..100).map(|i| m.omega_tilde0 + i as f64 * 0.01 * m.chi.abs()).collect();
    let y = spectrum_model(&m, &narrow).unwrap();
    assert!(fit_spectrum(&narrow, &y, m.chi, &m, FitOptions::default()).is_err());
    let f = grid(&m, 100);
    let y = spectrum_model(&m, &f).unwrap();
    assert!(matches!(fit_spectrum(&f, &y[..99], m.chi, &m, FitOptions::default()), Err(Error::Shape { .. })));
    let strict = FitOptions { max_iter: 1, rel_step: 1e-10 };
    assert!(matches!(fit_spectrum(&f, &y, m.chi, &init_from(&m), strict), Err(Error::NoConvergence(_))));
}

#[test]
fn zero_kappa_start_is_degenerate() {
    let m = device_model();
    let f = grid(&m, 200);
    let y = spectrum_model(&m, &f).unwrap();
    let init = DispersiveModel::new(m.omega_tilde0, m.chi, m.gamma2, 0.0, 1.0).unwrap();
    match fit_spectrum(&f, &y, m.chi, &init, FitOptions::default()) {
        Err(Error::DegenerateJacobian(name)) => assert_eq!(name, "kappa"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn initial_guess_from_peaks() {
    let m = device_model();
    let f = grid(&m, 2000);
    let y = spectrum_model(&m, &f).unwrap();
    let (w0, nbar) = estimate_initial(&f, &y, m.chi).unwrap();
    assert!((w0 - m.omega_tilde0).abs() < m.gamma2);
    assert!(nbar > 0.5 && nbar < 2.0, "{nbar}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn fit_is_scale_equivariant(c in 0.01f64..1e4) {
        let m = device_model();
        let f = grid(&m, 300);
        let y = spectrum_model(&m, &f).unwrap();
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let noise = Normal::new(0.0, 0.01 * y.iter().cloned().fold(0.0, f64::max)).unwrap();
        let y: Vec<f64> = y.iter().map(|v| v + noise.sample(&mut rng)).collect();
        let ys: Vec<f64> = y.iter().map(|v| c * v).collect();
        let a = fit_spectrum(&f, &y, m.chi, &init_from(&m), FitOptions::default()).unwrap().params;
        let b = fit_spectrum(&f, &ys, m.chi, &init_from(&m), FitOptions::default()).unwrap().params;
        prop_assert!(rel(b.gamma2, a.gamma2) < 1e-6);
        prop_assert!(rel(b.kappa, a.kappa) < 1e-5);
        prop_assert!(rel(b.nbar, a.nbar) < 1e-6);
        prop_assert!((b.omega_tilde0 - a.omega_tilde0).abs() < 1e-6 * m.gamma2);
        prop_assert!(rel(b.amplitude, c * a.amplitude) < 1e-6);
    }

    #[test]
    fn weights_sum_to_one(nbar in 0.0f64..30.0) {
        let n = auto_n_max(nbar, AUTO_TAIL);
        let (w, tail) = poisson_weights(nbar, n);
        prop_assert!(tail < AUTO_TAIL);
        prop_assert!((w.iter().sum::<f64>() + tail - 1.0).abs() < 1e-12);
        prop_assert!(n as f64 >= nbar + 5.0 * nbar.sqrt());
    }
}
