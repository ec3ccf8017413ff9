use std::f64::consts::PI;

use nalgebra::{Matrix3, Matrix6, SymmetricEigen, Vector3};
use phonoscope::elastodynamics::{
    christoffel_matrix, full_tensor, polarized_velocities, rotate_stiffness, rotation_about_axis,
    shear_splitting, shear_splitting_numeric, sym_eigen3, tilt_rotation, velocity_surface, voigt_from_tensor,
    PropagationDirection,
};
use phonoscope::materials::{builtin_preset, MaterialTensorSet};
use phonoscope::Error;
use proptest::prelude::*;

fn sapphire() -> MaterialTensorSet {
    builtin_preset("sapphire").unwrap()
}

/// `M_il = Σ_jk c_ijkl n_j n_k / ρ` by explicit loops over the 4-index tensor.
fn christoffel_loop(c: &Matrix6<f64>, rho: f64, n: &Vector3<f64>) -> Matrix3<f64> {
    let t = full_tensor(c);
    let mut m = Matrix3::zeros();
    for i in 0..3 {
        for l in 0..3 {
            let mut acc = 0.0;
            for j in 0..3 {
                for k in 0..3 {
                    acc += t[i][j][k][l] * n[j] * n[k];
                }
            }
            m[(i, l)] = acc / rho;
        }
    }
    m
}

fn sorted_desc(v: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = v.into_iter().collect();
    v.sort_by(|a, b| b.partial_cmp(a).unwrap());
    v
}

#[test]
fn sapphire_c_axis_christoffel() {
    let m = christoffel_matrix(&sapphire(), PropagationDirection::z()).unwrap();
    let (vsh, vl) = (m[(0, 0)].sqrt(), m[(2, 2)].sqrt());
    assert!((vsh / 6.1e3 - 1.0).abs() < 0.01, "{vsh}");
    assert!((vl / 11.2e3 - 1.0).abs() < 0.01, "{vl}");
    assert_eq!(m[(0, 0)], m[(1, 1)]);
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        assert!(m[(i, j)].abs() < 1e-12 * m.amax());
    }
    let pv = polarized_velocities(&sapphire(), PropagationDirection::z()).unwrap();
    let v = pv.velocities();
    assert!(((v[1] - v[2]) / v[1]).abs() < 1e-9);
}

#[test]
fn christoffel_matches_loop_oracle() {
    let s = sapphire();
    for (theta, phi) in [(30f64, 0f64), (45.0, 0.0), (60.0, 33.0), (120.0, 210.0)] {
        let dir = PropagationDirection::new(theta.to_radians(), phi.to_radians()).unwrap();
        let m = christoffel_matrix(&s, dir).unwrap();
        let oracle = christoffel_loop(&s.c, s.rho, &dir.unit_vector());
        assert!((m - oracle).amax() < 1e-12 * oracle.amax());
        let want = sorted_desc(SymmetricEigen::new(oracle).eigenvalues.iter().map(|l| l.sqrt()));
        let got = polarized_velocities(&s, dir).unwrap().velocities();
        for k in 0..3 {
            assert!((got[k] - want[k]).abs() < 1e-9 * want[k], "θ={theta}: {got:?} vs {want:?}");
        }
    }
}

#[test]
fn surface_starts_on_c_axis_and_is_continuous() {
    let surf = velocity_surface(&sapphire(), 0.0, 181).unwrap();
    let v0 = sorted_desc(surf[0].velocities());
    assert!((v0[0] / 11.2e3 - 1.0).abs() < 0.01);
    assert!((v0[1] / 6.1e3 - 1.0).abs() < 0.01);
    assert!((v0[2] / 6.1e3 - 1.0).abs() < 0.01);
    for w in surf.windows(2) {
        for b in 0..3 {
            let d = w[0].branches[b].polarization.dot(&w[1].branches[b].polarization);
            assert!(d > 0.8, "polarization jump {d}");
            let dv = (w[0].branches[b].velocity - w[1].branches[b].velocity).abs();
            assert!(dv < 0.05 * w[0].branches[b].velocity, "velocity jump {dv}");
        }
    }
    assert!(matches!(velocity_surface(&sapphire(), 0.0, 1), Err(Error::InvalidInput(_))));
}

#[test]
fn isotropic_surface_is_flat() {
    let (c11, c44) = (300e9, 100e9);
    let mut c = Matrix6::zeros();
    for i in 0..3 {
        for j in 0..3 {
            c[(i, j)] = if i == j { c11 } else { c11 - 2.0 * c44 };
        }
        c[(i + 3, i + 3)] = c44;
    }
    let m = MaterialTensorSet::new("iso", 3000.0, c, None, None, None).unwrap();
    let surf = velocity_surface(&m, 0.7, 37).unwrap();
    let first = sorted_desc(surf[0].velocities());
    for s in &surf {
        let v = sorted_desc(s.velocities());
        for k in 0..3 {
            assert!((v[k] - first[k]).abs() < 1e-9 * first[k]);
        }
    }
}

#[test]
fn polarizations_are_orthonormal() {
    for name in ["sapphire", "aln"] {
        let m = builtin_preset(name).unwrap();
        for t in 0..=12 {
            for p in 0..6 {
                let dir = PropagationDirection::new(PI * t as f64 / 12.0, PI * p as f64 / 3.0).unwrap();
                let pv = polarized_velocities(&m, dir).unwrap();
                let v = pv.velocities();
                assert!(v[0] >= v[1] && v[1] >= v[2] && v[2] > 0.0);
                for a in 0..3 {
                    for b in 0..3 {
                        let d = pv.branches[a].polarization.dot(&pv.branches[b].polarization);
                        let want = if a == b { 1.0 } else { 0.0 };
                        assert!((d - want).abs() < 1e-9, "{name} t={t} p={p}: {d}");
                    }
                }
            }
        }
    }
}

#[test]
fn eigen3_handles_degenerate_and_diagonal() {
    let (l, v) = sym_eigen3(&Matrix3::from_diagonal(&Vector3::new(2.0, 5.0, 2.0)));
    assert_eq!(l, [5.0, 2.0, 2.0]);
    assert!((v[0].y.abs() - 1.0).abs() < 1e-12);
    let (l, _) = sym_eigen3(&Matrix3::identity());
    assert_eq!(l, [1.0, 1.0, 1.0]);
}

fn rotate_loop(c: &Matrix6<f64>, r: &Matrix3<f64>) -> Matrix6<f64> {
    let t = full_tensor(c);
    let mut out = [[[[0.0; 3]; 3]; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    let mut acc = 0.0;
                    for p in 0..3 {
                        for q in 0..3 {
                            for s in 0..3 {
                                for u in 0..3 {
                                    acc += r[(i, p)] * r[(j, q)] * r[(k, s)] * r[(l, u)] * t[p][q][s][u];
                                }
                            }
                        }
                    }
                    out[i][j][k][l] = acc;
                }
            }
        }
    }
    voigt_from_tensor(&out)
}

#[test]
fn rotations() {
    let c = sapphire().c;
    assert_eq!(rotate_stiffness(&c, &Matrix3::identity()).unwrap(), c);

    let rz = rotation_about_axis(&Vector3::z(), PI);
    let got = rotate_stiffness(&c, &rz).unwrap();
    assert!((got - rotate_loop(&c, &rz)).amax() < 1e-9 * c.amax());
    // Trigonal symmetry: a half turn about c flips the sign of c14 and c56-type terms only.
    assert!((got - c).amax() > 1e9);
    assert!((got[(0, 3)] + c[(0, 3)]).abs() < 1e-6 * c.amax());
    let r3 = rotation_about_axis(&Vector3::z(), 2.0 * PI / 3.0);
    assert!((rotate_stiffness(&c, &r3).unwrap() - c).amax() < 1e-9 * c.amax());

    let r1 = rotation_about_axis(&Vector3::new(1.0, 2.0, 3.0), 0.4);
    let r2 = rotation_about_axis(&Vector3::new(-2.0, 0.5, 1.0), 1.1);
    let twice = rotate_stiffness(&rotate_stiffness(&c, &r1).unwrap(), &r2).unwrap();
    let once = rotate_stiffness(&c, &(r2 * r1)).unwrap();
    assert!((twice - once).amax() < 1e-9 * c.amax());
    assert!((once - rotate_loop(&c, &(r2 * r1))).amax() < 1e-9 * c.amax());

    let skew = Matrix3::new(1.0, 0.1, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
    assert!(matches!(rotate_stiffness(&c, &skew), Err(Error::NonOrthogonal(_))));
}

#[test]
fn splitting_per_degree() {
    let s = sapphire();
    let w0 = 2.0 * PI * 5.0e9;
    let per_deg = shear_splitting(&s, w0, 1f64.to_radians(), 0.0).unwrap() / (2.0 * PI);
    assert!((per_deg / 30e6 - 1.0).abs() < 0.10, "{per_deg}");
    let small = shear_splitting(&s, w0, 0.15f64.to_radians(), 0.0).unwrap() / (2.0 * PI);
    assert!((small / 4e6 - 1.0).abs() < 0.15, "{small}");
    assert_eq!(shear_splitting(&s, w0, 0.0, 0.3).unwrap(), 0.0);
    assert!(shear_splitting(&s, w0, 0.2, 0.0).is_err());
    assert!(shear_splitting(&s, w0, -0.01, 0.0).is_err());
}

#[test]
fn perturbative_residual_is_second_order() {
    let s = sapphire();
    let w0 = 2.0 * PI * 5.0e9;
    for deg in [0.05f64, 0.1, 0.2] {
        let dt = deg.to_radians();
        let pert = shear_splitting(&s, w0, dt, 0.0).unwrap();
        let num = shear_splitting_numeric(&s, w0, dt, 0.0).unwrap();
        let r = (num - pert).abs() / pert;
        assert!(r < dt, "Δθ={deg}°: residual {r}");
    }
}

#[test]
fn azimuthal_dependence_enters_at_second_order() {
    // Off φ = 0 the relative residual is ∝ Δθ·sin3φ: the absolute residual halves
    // twice as fast as the splitting itself when Δθ halves.
    let s = sapphire();
    let w0 = 2.0 * PI * 5.0e9;
    for phi in [0.4, PI / 6.0, 1.3, 2.9] {
        let resid = |deg: f64| {
            let dt = deg.to_radians();
            shear_splitting_numeric(&s, w0, dt, phi).unwrap() - shear_splitting(&s, w0, dt, phi).unwrap()
        };
        let ratio = resid(0.2) / resid(0.1);
        assert!((ratio - 4.0).abs() < 0.05, "φ={phi}: {ratio}");
        let rel = resid(0.2).abs() / shear_splitting(&s, w0, 0.2f64.to_radians(), phi).unwrap();
        assert!(rel < 2.0 * 0.2f64.to_radians(), "φ={phi}: {rel}");
    }
}

proptest! {
    #[test]
    fn christoffel_symmetric_and_positive(theta in 0.0f64..PI, phi in 0.0f64..(2.0 * PI), which in 0usize..2) {
        let m = builtin_preset(["sapphire", "aln"][which]).unwrap();
        let g = christoffel_matrix(&m, PropagationDirection::new(theta, phi).unwrap()).unwrap();
        prop_assert!((g - g.transpose()).amax() <= 1e-12 * g.amax());
        let ev = SymmetricEigen::new(g).eigenvalues;
        prop_assert!(ev.iter().all(|&l| l > 0.0));
    }

    #[test]
    fn splitting_is_linear(dt in 0.0f64..0.049, phi in 0.0f64..6.0) {
        let s = sapphire();
        let a = shear_splitting(&s, 3.0e10, dt, phi).unwrap();
        let b = shear_splitting(&s, 3.0e10, 2.0 * dt, phi).unwrap();
        prop_assert_eq!(b, 2.0 * a);
    }

    #[test]
    fn tilt_rotation_is_orthogonal(dt in 0.0f64..0.1, phi in 0.0f64..6.3) {
        let r = tilt_rotation(dt, phi);
        prop_assert!((r.transpose() * r - Matrix3::identity()).amax() < 1e-14);
        let c = r * Vector3::z();
        prop_assert!((c.z - dt.cos()).abs() < 1e-14);
    }
}
