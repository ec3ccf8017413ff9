use std::f64::consts::{PI, TAU};

use phonoscope::constants::HBAR;
use phonoscope::emission::*;
use phonoscope::fields::{load_field_map, reference_field_dir, Component, FieldProfile, FieldTransform};
use phonoscope::materials::builtin_preset;
use phonoscope::special::{bessel_root, j0};
use phonoscope::Error;
use proptest::prelude::*;

const EZ2: f64 = 5.75e-10;

fn medium() -> Medium {
    Medium::from_materials(&builtin_preset("sapphire").unwrap(), &builtin_preset("aln").unwrap()).unwrap()
}

fn flat() -> DeviceGeometry {
    DeviceGeometry::new(100e-6, 1e-6, Transducer::Flat, 300e-6).unwrap()
}

fn w0() -> f64 {
    TAU * 6.69e9
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn reference() -> FieldProfile {
    load_field_map(&reference_field_dir()).unwrap()
}

#[test]
fn geometry_validation() {
    assert!(DeviceGeometry::new(100e-6, 20e-6, Transducer::Flat, 1e-4).is_err());
    assert!(DeviceGeometry::new(100e-6, 0.0, Transducer::Flat, 1e-4).is_err());
    assert!(DeviceGeometry::new(100e-6, 1e-6, Transducer::Dome { z0: 2e-4, r: 1e-4 }, 1e-4).is_err());
    assert!(DeviceGeometry::new(100e-6, 1e-6, Transducer::Cylinder { z0: 1e-6, r: 0.0 }, 1e-4).is_err());
    assert!(flat().with_overtone(0).is_err());
    let d = DeviceGeometry::new(100e-6, 1e-6, Transducer::Dome { z0: 1e-6, r: 125e-6 }, 1e-4).unwrap();
    assert!(rel(d.curvature_radius().unwrap(), 7.8125e-3) < 1e-12);
    assert!(flat().curvature_radius().is_none());
}

#[test]
fn longitudinal_rate_at_the_reference_point() {
    let m = medium().with_e33(1.40);
    let g = free_space_rate_longitudinal(&m, &flat(), w0(), EZ2).unwrap();
    assert!(rel(g / TAU, 5.9e6) < 0.03, "{}", g / TAU);
    let s4 = thickness_factor(w0(), 1e-6, m.v_l);
    assert!(rel(s4, 0.8) < 0.05, "{s4}");
    // Low-coupling film.
    let g52 = free_space_rate_longitudinal(&m.with_e33(0.52), &flat(), w0(), EZ2).unwrap();
    assert!(rel(g52 / TAU, 750e3) < 0.15, "{}", g52 / TAU);
    assert_eq!(free_space_rate_longitudinal(&m.with_e33(0.0), &flat(), w0(), EZ2).unwrap(), 0.0);
    assert!(free_space_rate_longitudinal(&m, &flat(), 0.0, EZ2).is_err());
}

#[test]
fn shear_rate_formula() {
    let m = medium();
    let g = free_space_rate_shear(&m, &flat(), w0(), 2.33e-10, Component::X).unwrap();
    let s4 = (w0() * 1e-6 / (2.0 * m.v_sh)).sin().powi(4);
    let expect = TAU / HBAR * 4.0 * m.e15 * m.e15 / (PI * m.v_sh * m.rho * w0()) * s4 * 2.33e-10;
    assert!(rel(g, expect) < 1e-12);
    assert!(matches!(free_space_rate_shear(&m, &flat(), w0(), 1.0, Component::Z), Err(Error::InvalidInput(_))));
    assert!(free_space_rate_shear(&m, &flat(), -1.0, 1.0, Component::Y).is_err());
}

#[test]
fn total_rate_is_longitudinal_dominated() {
    let m = medium().with_e33(1.40);
    let r = total_free_space_rate(&m, &flat(), w0(), &reference()).unwrap();
    assert_eq!(r.total, r.longitudinal + r.shear_x + r.shear_y);
    assert!(r.shear_fraction() < 3e-3, "{}", r.shear_fraction());
    let zero = m.with_e33(0.0).with_e15(0.0);
    assert_eq!(total_free_space_rate(&zero, &flat(), w0(), &reference()).unwrap().total, 0.0);
    // A disk carries no in-plane field.
    let disk = FieldProfile::uniform_disk(0.045, 300e-6).unwrap();
    let r = total_free_space_rate(&m, &flat(), w0(), &disk).unwrap();
    assert_eq!(r.shear_x + r.shear_y, 0.0);
}

#[test]
fn thin_film_limit_is_quartic() {
    let m = medium();
    let g = |bp: f64| {
        let geom = DeviceGeometry::new(100e-6, bp, Transducer::Flat, 300e-6).unwrap();
        free_space_rate_longitudinal(&m, &geom, w0(), EZ2).unwrap()
    };
    let ratio = g(2e-8) / g(1e-8);
    assert!(rel(ratio, 16.0) < 0.01, "{ratio}");
}

#[test]
fn standing_wave_coupling_estimate() {
    let m = medium().with_e33(0.52);
    let c = standing_wave_coupling(&m, &flat(), 110, 0.045, 300e-6).unwrap();
    assert!(rel(c.g / TAU, 3e6) < 0.3, "{}", c.g / TAU);
    assert!(rel(c.frequency, m.overtone_frequency(110, 100e-6)) < 1e-15);
    // n b_p / b = 2 puts the film at a node.
    let node = standing_wave_coupling(&m, &flat(), 200, 0.045, 300e-6).unwrap();
    assert!(node.g < 1e-12 * c.g);
    assert!(standing_wave_coupling(&m, &flat(), 0, 0.045, 300e-6).is_err());
}

#[test]
fn mode_coupling_limits() {
    let m = medium().with_e33(0.52);
    let geom = flat();
    let a = 300e-6;
    let t = FieldTransform::Disk { ez: 0.045, a };
    let k1 = bessel_root(1, 1).unwrap() / a;
    let g0 = mode_coupling_k(&m, &geom, 110, 0.0, &t, geom.mode_volume());
    assert!(mode_coupling_k(&m, &geom, 110, k1, &t, geom.mode_volume()).abs() < 1e-12 * g0.abs());
    let sw = standing_wave_coupling(&m, &geom, 110, 0.045, a).unwrap();
    assert!(rel(g0.abs(), sw.g) < 1e-9);
    for &k in &[1e3, 7e3, 2e4] {
        let p = mode_coupling_k(&m, &geom, 110, k, &t, 1.0);
        let n = mode_coupling_k(&m, &geom, 110, -k, &t, 1.0);
        assert_eq!(p * p, n * n);
    }
}

#[test]
fn golden_rule_from_mode_couplings() {
    // b → ∞: sum |g_{n k*}|² over the overtones of a thick slab, with the
    // δ(ω0 − ω_n(k)) done analytically at k* on the dispersion shell.
    use rayon::prelude::*;
    let m = medium().with_e33(1.40);
    let slab = 5.0;
    let big = DeviceGeometry::new(slab, 1e-6, Transducer::Flat, 300e-6).unwrap();
    let ez = (EZ2 / (PI * 300e-6 * 300e-6)).sqrt();
    let t = FieldTransform::Disk { ez, a: 300e-6 };
    let term = |n: u32| {
        let wn = m.overtone_frequency(n, slab);
        let k = (w0() * w0() - wn * wn).max(0.0).sqrt() / m.v_perp;
        mode_coupling_k(&m, &big, n, k, &t, slab).powi(2)
    };
    // Overtone index where k* reaches zero.
    let n_c = w0() * slab / (PI * m.v_l);
    let top = n_c.floor() as u32;
    let sum: f64 = (1..=top).into_par_iter().map(term).sum();
    // Midpoint-rule view of the sum, closed off at n_c with a linear extrapolation.
    let f_c = term(top) + (n_c - top as f64) * (term(top) - term(top - 1));
    let integral = sum + (n_c - top as f64 - 0.5) * f_c;
    // ∫ d²k/(2π)² 2π |g|² δ(ω0 − ω) = |g|² ω0 / v⊥².
    let gamma = integral * w0() / m.v_perp.powi(2);
    let analytic = free_space_rate_longitudinal(&m, &flat(), w0(), EZ2).unwrap();
    assert!(rel(gamma, analytic) < 0.02, "{} vs {}", gamma / TAU, analytic / TAU);
}

#[test]
fn oracle_agrees_and_converges() {
    let m = medium().with_e33(1.40);
    let disk = FieldProfile::uniform_disk((EZ2 / (PI * 300e-6 * 300e-6)).sqrt(), 300e-6).unwrap();
    let analytic = free_space_rate_longitudinal(&m, &flat(), w0(), EZ2).unwrap();
    let grid = OracleGrid::default();
    let o = fgr_discrete_oracle(&m, &flat(), w0(), &disk, TAU * 1e6, grid).unwrap();
    assert!(rel(o, analytic) < 0.05, "{} vs {}", o / TAU, analytic / TAU);
    let fine = OracleGrid { slab: 2.0 * grid.slab, k_points: 2 * grid.k_points - 1, ..grid };
    let o2 = fgr_discrete_oracle(&m, &flat(), w0(), &disk, TAU * 1e6, fine).unwrap();
    assert!(rel(o2, o) < 0.02);
    // The sampled reference map is converted to an equivalent-area disk.
    let og = fgr_discrete_oracle(&m, &flat(), w0(), &reference(), TAU * 1e6, grid).unwrap();
    assert!(rel(og, analytic) < 0.05);
    assert_eq!(fgr_discrete_oracle(&m.with_e33(0.0), &flat(), w0(), &disk, TAU * 1e6, grid).unwrap(), 0.0);
}

#[test]
fn oracle_refuses_narrow_broadening() {
    let m = medium();
    let disk = FieldProfile::uniform_disk(0.045, 300e-6).unwrap();
    let r = fgr_discrete_oracle(&m, &flat(), w0(), &disk, TAU * 1e3, OracleGrid::default());
    assert!(matches!(r, Err(Error::UnderResolved(_))));
}

#[test]
fn diffraction_scale_values() {
    let mut m = medium();
    m.v_perp = 9.2e3;
    let wn = TAU * 6e9;
    let wd = diffraction_scale(&m, 300e-6, wn);
    assert!(rel(wd / TAU, 20e3) < 0.10, "{}", wd / TAU);
    assert!(rel(diffraction_scale(&m, 600e-6, wn), wd / 4.0) < 1e-12);
    // ω_n(k⊥ = π/a) − ω_n = v⊥²π²/(2ω_n a²) to leading order.
    let b = 100e-6;
    let n = 107;
    let wn = m.overtone_frequency(n, b);
    let shift = m.dispersion(n, b, PI / 300e-6) - wn;
    assert!(rel(shift, diffraction_scale(&m, 300e-6, wn)) < 1e-5);
}

#[test]
fn participation_ratio_values() {
    let m = medium();
    let p = participation_ratio(&reference(), m.eps33, 1e-6, w0()).unwrap();
    assert!(rel(p, 0.01) < 0.5, "{p}");
    let zero = FieldProfile::uniform_disk(0.0, 1e-4).unwrap();
    assert_eq!(participation_ratio(&zero, m.eps33, 1e-6, w0()).unwrap(), 0.0);
    let p2 = participation_ratio(&reference(), m.eps33, 2e-6, w0()).unwrap();
    assert!(rel(p2, 2.0 * p) < 1e-12);
}

fn cylinder(z0: f64) -> DeviceGeometry {
    DeviceGeometry::new(100e-6, 1e-6, Transducer::Cylinder { z0, r: 125e-6 }, 135e-6).unwrap()
}

#[test]
fn cylinder_coupling_estimate() {
    let m = medium().with_e33(0.5);
    let geom = cylinder(1e-6);
    // Overtone nearest 5 GHz.
    let n = (TAU * 5.0e9 * geom.b / (PI * m.v_l)).round() as u32;
    let c = cylinder_principal_coupling(&m, &geom, n, &reference()).unwrap();
    assert!((c.g / TAU - 1e6).abs() < 0.5e6, "{}", c.g / TAU);
    assert_eq!((c.m, c.l), (0, 1));
    let zero = FieldProfile::uniform_disk(0.0, 1e-4).unwrap();
    assert_eq!(cylinder_principal_coupling(&m, &geom, n, &zero).unwrap().g, 0.0);
    assert!(matches!(
        cylinder_principal_coupling(&m, &flat(), n, &reference()),
        Err(Error::WrongTransducer { .. })
    ));
}

/// Simpson quadrature of `2π ρ [J0(μρ/r)/J1(μ)]²` on `[0, c]`.
fn radial_overlap(ez: f64, c: f64, r: f64) -> f64 {
    let mu = bessel_root(0, 1).unwrap();
    let norm = phonoscope::special::j1(mu).powi(2);
    let n = 2000;
    let h = c / n as f64;
    let f = |rho: f64| TAU * rho * j0(mu * rho / r).powi(2);
    let mut s = f(0.0) + f(c);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    ez * s * h / 3.0 / norm
}

#[test]
fn cylinder_overlap_closed_form() {
    let r = 125e-6;
    for &a in &[50e-6, 125e-6, 300e-6] {
        let disk = FieldProfile::uniform_disk(0.03, a).unwrap();
        let o = cylinder_overlap(&disk, r);
        assert!(rel(o, radial_overlap(0.03, a.min(r), r)) < 1e-9, "a = {a}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rate_scales_with_e33_squared(e in 0.01f64..3.0, s in 0.1f64..10.0) {
        let m = medium().with_e33(e);
        let g1 = free_space_rate_longitudinal(&m, &flat(), w0(), EZ2).unwrap();
        let g2 = free_space_rate_longitudinal(&m.with_e33(s * e), &flat(), w0(), EZ2).unwrap();
        prop_assert!(rel(g2, s * s * g1) < 1e-12);
    }

    #[test]
    fn rate_is_linear_in_field_integral(i1 in 1e-12f64..1e-8, i2 in 1e-12f64..1e-8) {
        let m = medium();
        let f = |i: f64| free_space_rate_longitudinal(&m, &flat(), w0(), i).unwrap();
        prop_assert!(rel(f(i1 + i2), f(i1) + f(i2)) < 1e-12);
    }

    #[test]
    fn couplings_are_non_negative(n in 1u32..400, ez in -1.0f64..1.0) {
        let c = standing_wave_coupling(&medium(), &flat(), n, ez, 300e-6).unwrap();
        prop_assert!(c.g >= 0.0 && c.frequency > 0.0);
    }
}

#[test]
fn nine_fold_for_triple_e33() {
    let m = medium();
    let g1 = free_space_rate_longitudinal(&m, &flat(), w0(), EZ2).unwrap();
    let g3 = free_space_rate_longitudinal(&m.with_e33(3.0 * m.e33), &flat(), w0(), EZ2).unwrap();
    assert!(rel(g3, 9.0 * g1) < 1e-12);
}
