//! Bulk waves in anisotropic crystals: Christoffel matrix, velocity surfaces,
//! stiffness rotation and the shear splitting caused by a tilted c-axis.

use nalgebra::{Matrix3, Matrix6, Vector3};

use crate::error::{Error, Result};
use crate::materials::MaterialTensorSet;

pub type Tensor4 = [[[[f64; 3]; 3]; 3]; 3];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationDirection {
    /// Polar angle from z (rad).
    pub theta: f64,
    /// Azimuth from x (rad).
    pub phi: f64,
}

impl PropagationDirection {
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !(0.0..=std::f64::consts::PI).contains(&theta) || !phi.is_finite() {
            return Err(Error::InvalidInput(format!(
                "theta must lie in [0, π], got {theta}"
            )));
        }
        Ok(Self { theta, phi })
    }

    pub fn z() -> Self {
        Self { theta: 0.0, phi: 0.0 }
    }

    pub fn unit_vector(&self) -> Vector3<f64> {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        Vector3::new(st * cp, st * sp, ct)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branch {
    /// Phase velocity (m/s).
    pub velocity: f64,
    pub polarization: Vector3<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizedVelocities {
    pub branches: [Branch; 3],
}

impl PolarizedVelocities {
    pub fn velocities(&self) -> [f64; 3] {
        self.branches.map(|b| b.velocity)
    }
}

/// Voigt index of the symmetric pair (i, j).
pub fn voigt(i: usize, j: usize) -> usize {
    match (i, j) {
        (0, 0) => 0,
        (1, 1) => 1,
        (2, 2) => 2,
        (1, 2) | (2, 1) => 3,
        (0, 2) | (2, 0) => 4,
        _ => 5,
    }
}

pub fn full_tensor(c: &Matrix6<f64>) -> Tensor4 {
    let mut t = [[[[0.0; 3]; 3]; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    t[i][j][k][l] = c[(voigt(i, j), voigt(k, l))];
                }
            }
        }
    }
    t
}

pub fn voigt_from_tensor(t: &Tensor4) -> Matrix6<f64> {
    const PAIRS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1)];
    Matrix6::from_fn(|a, b| {
        let (i, j) = PAIRS[a];
        let (k, l) = PAIRS[b];
        t[i][j][k][l]
    })
}

/// `M_il = c_ijkl n_j n_k / ρ` for an arbitrary (not necessarily unit) direction.
pub fn christoffel_from_vector(c: &Matrix6<f64>, rho: f64, n: &Vector3<f64>) -> Result<Matrix3<f64>> {
    let norm = n.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::ZeroDirection);
    }
    let n = n / norm;
    let t = full_tensor(c);
    let mut m = Matrix3::zeros();
    for i in 0..3 {
        for l in 0..3 {
            let mut s = 0.0;
            for j in 0..3 {
                for k in 0..3 {
                    s += t[i][j][k][l] * n[j] * n[k];
                }
            }
            m[(i, l)] = s / rho;
        }
    }
    Ok(0.5 * (m + m.transpose()))
}

pub fn christoffel_matrix(mat: &MaterialTensorSet, dir: PropagationDirection) -> Result<Matrix3<f64>> {
    christoffel_from_vector(&mat.c, mat.rho, &dir.unit_vector())
}

/// Eigen-decomposition of a symmetric 3×3 matrix, eigenvalues descending.
///
/// Closed-form trigonometric solution when the spectrum is well separated,
/// cyclic Jacobi otherwise. Degenerate pairs get the basis obtained by
/// Gram–Schmidt against x̂ then ŷ.
pub fn sym_eigen3(a: &Matrix3<f64>) -> ([f64; 3], [Vector3<f64>; 3]) {
    let scale = a.amax();
    if scale == 0.0 {
        return ([0.0; 3], [Vector3::x(), Vector3::y(), Vector3::z()]);
    }
    let vals = analytic_eigenvalues(a);
    let gap = (vals[0] - vals[1]).abs().min((vals[1] - vals[2]).abs());
    let (vals, mut vecs) = if gap > 1e-6 * scale {
        let v0 = null_vector(a, vals[0]);
        let v2 = null_vector(a, vals[2]);
        let v2 = (v2 - v0 * v0.dot(&v2)).normalize();
        let v1 = v2.cross(&v0);
        (vals, [v0, v1, v2])
    } else {
        jacobi_eigen3(a)
    };
    regauge_degenerate(&vals, &mut vecs, scale);
    for v in vecs.iter_mut() {
        fix_sign(v);
    }
    (vals, vecs)
}

fn analytic_eigenvalues(a: &Matrix3<f64>) -> [f64; 3] {
    let p1 = a[(0, 1)].powi(2) + a[(0, 2)].powi(2) + a[(1, 2)].powi(2);
    let q = a.trace() / 3.0;
    let p2 = (a[(0, 0)] - q).powi(2) + (a[(1, 1)] - q).powi(2) + (a[(2, 2)] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    if p == 0.0 {
        return [q; 3];
    }
    let b = (a - Matrix3::identity() * q) / p;
    let r = (b.determinant() / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let l0 = q + 2.0 * p * phi.cos();
    let l2 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::FRAC_PI_3).cos();
    [l0, 3.0 * q - l0 - l2, l2]
}

fn null_vector(a: &Matrix3<f64>, lambda: f64) -> Vector3<f64> {
    let m = a - Matrix3::identity() * lambda;
    let rows = [m.row(0).transpose(), m.row(1).transpose(), m.row(2).transpose()];
    let cands = [
        rows[0].cross(&rows[1]),
        rows[0].cross(&rows[2]),
        rows[1].cross(&rows[2]),
    ];
    let best = cands
        .iter()
        .copied()
        .max_by(|x, y| x.norm_squared().total_cmp(&y.norm_squared()))
        .unwrap();
    best.normalize()
}

fn jacobi_eigen3(a: &Matrix3<f64>) -> ([f64; 3], [Vector3<f64>; 3]) {
    let mut m = *a;
    let mut v = Matrix3::<f64>::identity();
    let norm = a.norm();
    for _ in 0..50 {
        let off = m[(0, 1)].powi(2) + m[(0, 2)].powi(2) + m[(1, 2)].powi(2);
        if off.sqrt() <= 1e-16 * norm {
            break;
        }
        for &(p, q) in &[(0usize, 1usize), (0, 2), (1, 2)] {
            if m[(p, q)] == 0.0 {
                continue;
            }
            let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * m[(p, q)]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            let mut r = Matrix3::identity();
            r[(p, p)] = c;
            r[(q, q)] = c;
            r[(p, q)] = s;
            r[(q, p)] = -s;
            m = r.transpose() * m * r;
            v *= r;
        }
    }
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&i, &j| m[(j, j)].total_cmp(&m[(i, i)]));
    let vals = idx.map(|i| m[(i, i)]);
    let vecs = idx.map(|i| v.column(i).into_owned().normalize());
    (vals, vecs)
}

fn regauge_degenerate(vals: &[f64; 3], vecs: &mut [Vector3<f64>; 3], scale: f64) {
    let tol = 1e-9 * scale;
    let d01 = (vals[0] - vals[1]).abs() <= tol;
    let d12 = (vals[1] - vals[2]).abs() <= tol;
    if d01 && d12 {
        *vecs = [Vector3::x(), Vector3::y(), Vector3::z()];
        return;
    }
    let (i, j, other) = if d01 {
        (0, 1, 2)
    } else if d12 {
        (1, 2, 0)
    } else {
        return;
    };
    let n = vecs[other];
    let project = |u: Vector3<f64>| u - n * n.dot(&u);
    let mut e1 = project(Vector3::x());
    if e1.norm() < 0.1 {
        e1 = project(Vector3::y());
    }
    let e1 = e1.normalize();
    let mut e2 = project(Vector3::y());
    e2 -= e1 * e1.dot(&e2);
    if e2.norm() < 0.1 {
        e2 = n.cross(&e1);
    }
    vecs[i] = e1;
    vecs[j] = e2.normalize();
}

fn fix_sign(v: &mut Vector3<f64>) {
    let k = v.iamax();
    if v[k] < 0.0 {
        *v = -*v;
    }
}

pub fn polarized_velocities(mat: &MaterialTensorSet, dir: PropagationDirection) -> Result<PolarizedVelocities> {
    let m = christoffel_matrix(mat, dir)?;
    branches_of(&m)
}

fn branches_of(m: &Matrix3<f64>) -> Result<PolarizedVelocities> {
    let (vals, vecs) = sym_eigen3(m);
    if vals.iter().any(|&l| l <= 0.0) {
        return Err(Error::InvalidInput(
            "Christoffel matrix is not positive definite".into(),
        ));
    }
    Ok(PolarizedVelocities {
        branches: [0, 1, 2].map(|i| Branch {
            velocity: vals[i].sqrt(),
            polarization: vecs[i],
        }),
    })
}

/// Velocities on `theta_samples` evenly spaced polar angles in [0, π] at fixed azimuth.
///
/// Branches keep their identity from sample to sample by polarization overlap,
/// so the returned order is not necessarily descending in velocity.
pub fn velocity_surface(
    mat: &MaterialTensorSet,
    phi: f64,
    theta_samples: usize,
) -> Result<Vec<PolarizedVelocities>> {
    if theta_samples < 2 {
        return Err(Error::InvalidInput("need at least two theta samples".into()));
    }
    let mut out: Vec<PolarizedVelocities> = Vec::with_capacity(theta_samples);
    for s in 0..theta_samples {
        let theta = std::f64::consts::PI * s as f64 / (theta_samples - 1) as f64;
        let cur = polarized_velocities(mat, PropagationDirection::new(theta, phi)?)?;
        let next = match out.last() {
            None => cur,
            Some(prev) => track(prev, &cur),
        };
        out.push(next);
    }
    // A degenerate first sample has an arbitrary shear basis; take the one its neighbour selects.
    let first = align_degenerate(&out[1], &out[0]);
    out[0] = first;
    Ok(out)
}

/// Within any degenerate pair of `cur`, rotate the basis to follow `reference`.
fn align_degenerate(reference: &PolarizedVelocities, cur: &PolarizedVelocities) -> PolarizedVelocities {
    let mut out = *cur;
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let (vi, vj) = (cur.branches[i].velocity, cur.branches[j].velocity);
        if (vi - vj).abs() > 1e-9 * vi.max(vj) {
            continue;
        }
        let (bi, bj) = (cur.branches[i].polarization, cur.branches[j].polarization);
        let project = |v: Vector3<f64>| bi * bi.dot(&v) + bj * bj.dot(&v);
        let ui = project(reference.branches[i].polarization);
        if ui.norm() < 1e-6 {
            continue;
        }
        let ui = ui.normalize();
        // In-plane complement of ui, signed to follow the reference.
        let mut uj = bj * bi.dot(&ui) - bi * bj.dot(&ui);
        if uj.dot(&reference.branches[j].polarization) < 0.0 {
            uj = -uj;
        }
        out.branches[i].polarization = ui;
        out.branches[j].polarization = uj;
    }
    out
}

fn track(prev: &PolarizedVelocities, cur: &PolarizedVelocities) -> PolarizedVelocities {
    const PERMS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let overlap = |p: &[usize; 3]| -> f64 {
        (0..3)
            .map(|i| prev.branches[i].polarization.dot(&cur.branches[p[i]].polarization).abs())
            .sum()
    };
    let mut best = PERMS[0];
    let mut best_score = overlap(&best);
    for p in &PERMS[1..] {
        let s = overlap(p);
        if s > best_score + 1e-12 {
            best = *p;
            best_score = s;
        }
    }
    let branches = [0, 1, 2].map(|i| {
        let mut b = cur.branches[best[i]];
        if b.polarization.dot(&prev.branches[i].polarization) < 0.0 {
            b.polarization = -b.polarization;
        }
        b
    });
    align_degenerate(prev, &PolarizedVelocities { branches })
}

/// Rotate a Voigt stiffness: `c'_ijkl = R_ip R_jq R_kr R_ls c_pqrs`.
pub fn rotate_stiffness(c: &Matrix6<f64>, r: &Matrix3<f64>) -> Result<Matrix6<f64>> {
    let dev = (r.transpose() * r - Matrix3::identity()).amax();
    if !(dev <= 1e-9) {
        return Err(Error::NonOrthogonal(dev));
    }
    if *r == Matrix3::identity() {
        return Ok(*c);
    }
    let t = full_tensor(c);
    // Contract one index at a time (O(3^5) per stage).
    let mut a = [[[[0.0; 3]; 3]; 3]; 3];
    for i in 0..3 {
        for q in 0..3 {
            for rr in 0..3 {
                for s in 0..3 {
                    a[i][q][rr][s] = (0..3).map(|p| r[(i, p)] * t[p][q][rr][s]).sum();
                }
            }
        }
    }
    let mut b = [[[[0.0; 3]; 3]; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for rr in 0..3 {
                for s in 0..3 {
                    b[i][j][rr][s] = (0..3).map(|q| r[(j, q)] * a[i][q][rr][s]).sum();
                }
            }
        }
    }
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                for s in 0..3 {
                    a[i][j][k][s] = (0..3).map(|rr| r[(k, rr)] * b[i][j][rr][s]).sum();
                }
            }
        }
    }
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    b[i][j][k][l] = (0..3).map(|s| r[(l, s)] * a[i][j][k][s]).sum();
                }
            }
        }
    }
    let out = voigt_from_tensor(&b);
    Ok(0.5 * (out + out.transpose()))
}

/// Rodrigues rotation by `angle` about `axis`.
pub fn rotation_about_axis(axis: &Vector3<f64>, angle: f64) -> Matrix3<f64> {
    let k = axis.normalize();
    let kx = Matrix3::new(0.0, -k.z, k.y, k.z, 0.0, -k.x, -k.y, k.x, 0.0);
    Matrix3::identity() + kx * angle.sin() + kx * kx * (1.0 - angle.cos())
}

/// Rotation that tips the crystal c-axis from ẑ by `delta_theta` toward azimuth `phi`.
pub fn tilt_rotation(delta_theta: f64, phi: f64) -> Matrix3<f64> {
    let axis = Vector3::new(-phi.sin(), phi.cos(), 0.0);
    rotation_about_axis(&axis, delta_theta)
}

fn check_tilt(delta_theta: f64) -> Result<()> {
    if !(0.0..0.1).contains(&delta_theta) {
        return Err(Error::InvalidInput(format!(
            "tilt must satisfy 0 ≤ Δθ < 0.1 rad, got {delta_theta}"
        )));
    }
    Ok(())
}

/// First-order splitting of the two shear standing-wave ladders,
/// `Δω = ω₀ Δθ · 2|c14|/c44` (rad/s).
pub fn shear_splitting(mat: &MaterialTensorSet, omega0: f64, delta_theta: f64, _phi: f64) -> Result<f64> {
    check_tilt(delta_theta)?;
    let (c14, c44) = (mat.c[(0, 3)], mat.c[(3, 3)]);
    Ok(omega0 * delta_theta * 2.0 * c14.abs() / c44)
}

/// Splitting from diagonalizing the Christoffel matrix of the tilted crystal
/// along ẑ, `Δω = ω₀ (v_a − v_b)/v_sh`.
pub fn shear_splitting_numeric(mat: &MaterialTensorSet, omega0: f64, delta_theta: f64, phi: f64) -> Result<f64> {
    check_tilt(delta_theta)?;
    let v_sh = (mat.c[(3, 3)] / mat.rho).sqrt();
    let c = rotate_stiffness(&mat.c, &tilt_rotation(delta_theta, phi))?;
    let m = christoffel_from_vector(&c, mat.rho, &Vector3::z())?;
    let pv = branches_of(&m)?;
    let v = pv.velocities();
    Ok(omega0 * (v[1] - v[2]) / v_sh)
}
