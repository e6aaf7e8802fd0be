//! Exact-in-basis differential operators and dealiased nonlinear operators.
//!
//! Derivatives are diagonal per mode (`∂_z` maps a cosine series to the sine
//! series at the same `m` and back), so curl, divergence, gradient and the
//! Laplacian are exact. Nonlinear products are formed pointwise on the
//! collocation grid and truncated by the two-thirds rule, which makes the
//! retained coefficients of a quadratic product exact and lets discrete
//! calculus identities (div∘curl = 0, the commutator definition, energy
//! skew symmetry) hold to rounding.

use crate::fields::{
    l2_inner, l2_norm, trace_max, Face, Grid, Parity, PhysScalar, ScalarField, VectorField,
    VectorKind, Workspace, TAU,
};
use crate::{Error, Result};
use rustfft::num_complex::Complex64;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Spectral partial derivative along one axis.
pub fn derivative(f: &ScalarField, axis: Axis) -> ScalarField {
    let grid = f.grid();
    match axis {
        Axis::X => {
            let mut out = f.clone();
            for kx in 0..grid.kx_len() {
                let factor = Complex64::new(0.0, TAU * kx as f64);
                for kyi in 0..grid.ny() {
                    for m in 0..grid.m_len() {
                        let idx = grid.spec_idx(kx, kyi, m);
                        out.coeffs_mut()[idx] = f.coeffs()[idx] * factor;
                    }
                }
            }
            out
        }
        Axis::Y => {
            let mut out = f.clone();
            for kx in 0..grid.kx_len() {
                for kyi in 0..grid.ny() {
                    let factor = Complex64::new(0.0, TAU * grid.ky_freq(kyi) as f64);
                    for m in 0..grid.m_len() {
                        let idx = grid.spec_idx(kx, kyi, m);
                        out.coeffs_mut()[idx] = f.coeffs()[idx] * factor;
                    }
                }
            }
            out
        }
        Axis::Z => {
            // cos(mπz) → -mπ sin(mπz); sin(mπz) → mπ cos(mπz)
            let mut out = ScalarField::zeros(grid, f.parity().flip());
            let sign = match f.parity() {
                Parity::EvenZ => -1.0,
                Parity::OddZ => 1.0,
            };
            for kx in 0..grid.kx_len() {
                for kyi in 0..grid.ny() {
                    for m in 0..grid.m_len() {
                        let c = f.at(kx, kyi, m);
                        if c.re == 0.0 && c.im == 0.0 {
                            continue;
                        }
                        out.set(kx, kyi, m, c * (sign * m as f64 * PI));
                    }
                }
            }
            out
        }
    }
}

/// Gradient of a scalar. Even input gives a velocity-pattern vector, odd
/// input a vorticity-pattern one.
pub fn gradient(f: &ScalarField) -> VectorField {
    VectorField::from_components([
        derivative(f, Axis::X),
        derivative(f, Axis::Y),
        derivative(f, Axis::Z),
    ])
}

/// Spectral divergence.
pub fn divergence(v: &VectorField) -> ScalarField {
    let dx = derivative(v.comp(0), Axis::X);
    let dy = derivative(v.comp(1), Axis::Y);
    let dz = derivative(v.comp(2), Axis::Z);
    dx.add(&dy).add(&dz)
}

/// Spectral curl. Maps velocity-pattern fields to vorticity-pattern ones
/// and back.
pub fn curl(v: &VectorField) -> VectorField {
    let c0 = derivative(v.comp(2), Axis::Y).sub(&derivative(v.comp(1), Axis::Z));
    let c1 = derivative(v.comp(0), Axis::Z).sub(&derivative(v.comp(2), Axis::X));
    let c2 = derivative(v.comp(1), Axis::X).sub(&derivative(v.comp(0), Axis::Y));
    VectorField::from_components([c0, c1, c2])
}

/// Per-mode Laplacian multiplier `-((2πkx)² + (2πky)² + (mπ)²)`.
pub fn laplacian_scalar(f: &ScalarField) -> ScalarField {
    let grid = f.grid();
    let mut out = f.clone();
    for kx in 0..grid.kx_len() {
        let x = (TAU * kx as f64).powi(2);
        for kyi in 0..grid.ny() {
            let y = (TAU * grid.ky_freq(kyi) as f64).powi(2);
            for m in 0..grid.m_len() {
                let z = (PI * m as f64).powi(2);
                let idx = grid.spec_idx(kx, kyi, m);
                out.coeffs_mut()[idx] = f.coeffs()[idx] * (-(x + y + z));
            }
        }
    }
    out
}

pub fn laplacian(v: &VectorField) -> VectorField {
    VectorField::from_components([
        laplacian_scalar(v.comp(0)),
        laplacian_scalar(v.comp(1)),
        laplacian_scalar(v.comp(2)),
    ])
}

/// Leray projection: subtract the gradient part per mode, leaving the
/// divergence-free component. Idempotent; parity-typed output; in this
/// basis the projected field keeps `v·n = 0` on the walls.
pub fn leray_project(v: &VectorField) -> VectorField {
    let grid = v.grid();
    let d = divergence(v);
    // solve Δp = div v, then subtract ∇p
    let mut p = ScalarField::zeros(grid, d.parity());
    for kx in 0..grid.kx_len() {
        let x = (TAU * kx as f64).powi(2);
        for kyi in 0..grid.ny() {
            let y = (TAU * grid.ky_freq(kyi) as f64).powi(2);
            for m in 0..grid.m_len() {
                let z = (PI * m as f64).powi(2);
                let k2 = x + y + z;
                if k2 == 0.0 {
                    continue; // mean of the divergence is structurally zero
                }
                let c = d.at(kx, kyi, m);
                if c.re == 0.0 && c.im == 0.0 {
                    continue;
                }
                p.set(kx, kyi, m, -c / k2);
            }
        }
    }
    v.sub(&gradient(&p))
}

/// Two-thirds dealiasing switches, per direction. Convergence studies keep
/// all three on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DealiasPolicy {
    pub x: bool,
    pub y: bool,
    pub z: bool,
}

impl Default for DealiasPolicy {
    fn default() -> Self {
        DealiasPolicy { x: true, y: true, z: true }
    }
}

impl DealiasPolicy {
    pub const OFF: DealiasPolicy = DealiasPolicy { x: false, y: false, z: false };

    /// Keep a mode? Cutoffs are 2/3 of the per-direction Nyquist mode
    /// (`nx/2`, `ny/2` and `nz` on the mirror-extended z-grid).
    pub fn keep(&self, grid: Grid, kx: usize, kyi: usize, m: usize) -> bool {
        if self.x && kx > grid.nx() / 3 {
            return false;
        }
        if self.y && grid.ky_freq(kyi).unsigned_abs() as usize > grid.ny() / 3 {
            return false;
        }
        if self.z && m > 2 * grid.nz() / 3 {
            return false;
        }
        true
    }
}

/// Truncate a vector field in place; returns the fraction of L² energy
/// removed. Fractions above `1e-6` signal under-resolution.
pub fn dealias(v: &mut VectorField, policy: DealiasPolicy) -> f64 {
    let grid = v.grid();
    let mut kept = 0.0f64;
    let mut cut = 0.0f64;
    for c in 0..3 {
        let parity = v.comp(c).parity();
        let f = v.comp_mut(c);
        for kx in 0..grid.kx_len() {
            let wk = if kx == 0 { 1.0 } else { 2.0 };
            for kyi in 0..grid.ny() {
                for m in 0..grid.m_len() {
                    let idx = grid.spec_idx(kx, kyi, m);
                    let cc = f.coeffs()[idx];
                    let mag = cc.norm_sqr();
                    if mag == 0.0 {
                        continue;
                    }
                    let wm = if parity == Parity::EvenZ && m == 0 { 1.0 } else { 0.5 };
                    if policy.keep(grid, kx, kyi, m) {
                        kept += wk * wm * mag;
                    } else {
                        cut += wk * wm * mag;
                        f.coeffs_mut()[idx] = Complex64::new(0.0, 0.0);
                    }
                }
            }
        }
    }
    let total = kept + cut;
    if total > 0.0 {
        cut / total
    } else {
        0.0
    }
}

/// `(u·∇)v` formed pseudo-spectrally, truncated by the policy. `u` must be
/// velocity-pattern (otherwise products straddle parities); `v` may carry
/// any componentwise parities and the output inherits them.
pub fn advect(u: &VectorField, v: &VectorField, policy: DealiasPolicy, ws: &mut Workspace) -> Result<VectorField> {
    advect_with_fraction(u, v, policy, ws).map(|(w, _)| w)
}

/// As [`advect`], also returning the truncated energy fraction.
pub fn advect_with_fraction(
    u: &VectorField,
    v: &VectorField,
    policy: DealiasPolicy,
    ws: &mut Workspace,
) -> Result<(VectorField, f64)> {
    if u.kind() != Some(VectorKind::Velocity) {
        return Err(Error::Parity(
            "advecting field must have velocity parity (tangential even, normal odd)".into(),
        ));
    }
    let grid = u.grid();
    let phys_u: [PhysScalar; 3] = [
        ws.to_physical(u.comp(0)),
        ws.to_physical(u.comp(1)),
        ws.to_physical(u.comp(2)),
    ];
    let mut comps: Vec<ScalarField> = Vec::with_capacity(3);
    for b in 0..3 {
        let dx = ws.to_physical(&derivative(v.comp(b), Axis::X));
        let dy = ws.to_physical(&derivative(v.comp(b), Axis::Y));
        let dz = ws.to_physical(&derivative(v.comp(b), Axis::Z));
        let mut prod = PhysScalar::zeros(grid);
        for (idx, w) in prod.values_mut().iter_mut().enumerate() {
            *w = phys_u[0].values()[idx] * dx.values()[idx]
                + phys_u[1].values()[idx] * dy.values()[idx]
                + phys_u[2].values()[idx] * dz.values()[idx];
        }
        comps.push(ws.to_spectral(&prod, v.comp(b).parity())?);
    }
    let mut out = VectorField::from_components([
        comps[0].clone(),
        comps[1].clone(),
        comps[2].clone(),
    ]);
    let fraction = dealias(&mut out, policy);
    Ok((out, fraction))
}

/// Curl commutator `F(Du,Dv) = ∇×((u·∇)v) − (u·∇)(∇×v)`; velocity-pattern
/// inputs, vorticity-pattern output.
pub fn curl_commutator(
    u: &VectorField,
    v: &VectorField,
    policy: DealiasPolicy,
    ws: &mut Workspace,
) -> Result<VectorField> {
    if v.kind() != Some(VectorKind::Velocity) {
        return Err(Error::Parity("curl commutator needs a velocity-pattern second argument".into()));
    }
    let a = curl(&advect(u, v, policy, ws)?);
    let b = advect(u, &curl(v), policy, ws)?;
    Ok(a.sub(&b))
}

/// Wall residual of the alternating trace pattern of `(u·∇)v`: the normal
/// part of `∂_n^j (u·∇)v` for even `j`, the tangential part for odd `j`.
pub fn advection_trace_residual(
    u: &VectorField,
    v: &VectorField,
    j: usize,
    policy: DealiasPolicy,
    ws: &mut Workspace,
) -> Result<f64> {
    let w = advect(u, v, policy, ws)?;
    let mut worst = 0.0f64;
    let comps: &[usize] = if j % 2 == 0 { &[2] } else { &[0, 1] };
    for &c in comps {
        for face in Face::BOTH {
            worst = worst.max(trace_max(w.comp(c), face, j, ws));
        }
    }
    Ok(worst)
}

/// `∫ (u·∇)v · v`, normalized by `‖u‖ ‖v‖²`. Zero (to rounding) for
/// divergence-free velocity-pattern `u`.
pub fn skew_symmetry_residual(
    u: &VectorField,
    v: &VectorField,
    policy: DealiasPolicy,
    ws: &mut Workspace,
) -> Result<f64> {
    let adv = advect(u, v, policy, ws)?;
    let denom = l2_norm(u) * l2_norm(v).powi(2);
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok(l2_inner(&adv, v).abs() / denom)
}

/// `∫ (H·∇)a · b + ∫ (H·∇)b · a`, normalized by `‖H‖ ‖a‖ ‖b‖`. Zero (to
/// rounding) when `H` is divergence-free with `H·n = 0` on the walls.
pub fn coupling_residual(
    h: &VectorField,
    a: &VectorField,
    b: &VectorField,
    policy: DealiasPolicy,
    ws: &mut Workspace,
) -> Result<f64> {
    let ha = advect(h, a, policy, ws)?;
    let hb = advect(h, b, policy, ws)?;
    let denom = l2_norm(h) * l2_norm(a) * l2_norm(b);
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok((l2_inner(&ha, b) + l2_inner(&hb, a)).abs() / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{random_field, Grid, Parity, PhysScalar, ScalarField, VectorField, VectorKind};
    use rustfft::num_complex::Complex64;

    fn grid() -> Grid {
        Grid::new(8, 8, 8).unwrap()
    }

    fn shear(grid: Grid) -> VectorField {
        // u = (cos(πz), 0, 0)
        let mut v = VectorField::zeros(grid, VectorKind::Velocity);
        v.comp_mut(0).set(0, 0, 1, Complex64::new(1.0, 0.0));
        v
    }

    #[test]
    fn curl_of_shear_is_minus_pi_sine() {
        // ω = (0, ∂_z u₁, 0) = (0, -π sin(πz), 0)
        let g = grid();
        let w = curl(&shear(g));
        assert_eq!(w.kind(), Some(VectorKind::Vorticity));
        assert!((w.comp(1).at(0, 0, 1) - Complex64::new(-PI, 0.0)).norm() < 1e-13);
        assert!(w.comp(0).max_abs() < 1e-14);
        assert!(w.comp(2).max_abs() < 1e-14);
    }

    #[test]
    fn curl_of_gradient_vanishes() {
        let g = grid();
        let mut ws = Workspace::new(g);
        let s = ws
            .to_spectral(
                &PhysScalar::from_fn(g, |x, _, z| (TAU * x).sin() * (PI * z).cos()),
                Parity::EvenZ,
            )
            .unwrap();
        let cg = curl(&gradient(&s));
        assert!(cg.max_abs() < 1e-12);
    }

    #[test]
    fn divergence_of_curl_vanishes() {
        let g = grid();
        let v = random_field(g, VectorKind::Velocity, 3.0, 3);
        assert!(divergence(&curl(&v)).max_abs() < 1e-12 * v.max_abs().max(1.0));
    }

    #[test]
    fn divergence_analytic_values() {
        let g = grid();
        let mut ws = Workspace::new(g);
        // v = (sin(2πx), 0, 0) → div v = 2π cos(2πx)
        let mut v = VectorField::zeros(g, VectorKind::Velocity);
        *v.comp_mut(0) = ws
            .to_spectral(&PhysScalar::from_fn(g, |x, _, _| (TAU * x).sin()), Parity::EvenZ)
            .unwrap();
        let d = divergence(&v);
        let dp = ws.to_physical(&d);
        for i in 0..g.nx() {
            let x = i as f64 / g.nx() as f64;
            assert!((dp.at(i, 0, 0) - TAU * (TAU * x).cos()).abs() < 1e-12);
        }
        // v = (0, 0, sin(πz)) → div v = π cos(πz)
        let mut v = VectorField::zeros(g, VectorKind::Velocity);
        v.comp_mut(2).set(0, 0, 1, Complex64::new(1.0, 0.0));
        let d = divergence(&v);
        assert!((d.at(0, 0, 1) - Complex64::new(PI, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn laplacian_eigenfunctions() {
        let g = grid();
        let mut ws = Workspace::new(g);
        // cos(πz) → -π² cos(πz)
        let mut f = ScalarField::zeros(g, Parity::EvenZ);
        f.set(0, 0, 1, Complex64::new(1.0, 0.0));
        let lf = laplacian_scalar(&f);
        assert!((lf.at(0, 0, 1) - Complex64::new(-PI * PI, 0.0)).norm() < 1e-12);
        // sin(2πx)sin(πz) → -(4π² + π²) sin(2πx)sin(πz)
        let s = ws
            .to_spectral(
                &PhysScalar::from_fn(g, |x, _, z| (TAU * x).sin() * (PI * z).sin()),
                Parity::OddZ,
            )
            .unwrap();
        let ls = laplacian_scalar(&s);
        let expect = -(TAU * TAU + PI * PI);
        let ratio = ls.mode(1, 0, 1) / s.mode(1, 0, 1);
        assert!((ratio - Complex64::new(expect, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn leray_fixes_divergence_free_and_kills_gradients() {
        let g = grid();
        let v = random_field(g, VectorKind::Velocity, 3.0, 9);
        let pv = leray_project(&v);
        assert!(pv.sub(&v).max_abs() < 1e-12 * v.max_abs());
        // pure gradient of sin(2πx)cos(πz) projects to zero
        let mut ws = Workspace::new(g);
        let s = ws
            .to_spectral(
                &PhysScalar::from_fn(g, |x, _, z| (TAU * x).sin() * (PI * z).cos()),
                Parity::EvenZ,
            )
            .unwrap();
        let gr = gradient(&s);
        assert!(leray_project(&gr).max_abs() < 1e-12 * gr.max_abs());
        // idempotence on a non-solenoidal field
        let mut raw = random_field(g, VectorKind::Velocity, 3.0, 13);
        raw.axpy(0.5, &gr);
        let p1 = leray_project(&raw);
        let p2 = leray_project(&p1);
        assert!(p2.sub(&p1).max_abs() < 1e-12 * p1.max_abs());
        assert!(divergence(&p1).max_abs() < 1e-12 * p1.max_abs());
    }

    #[test]
    fn leray_matches_per_mode_least_squares_oracle() {
        // Independent route: per mode, remove the least-squares multiple of
        // the gradient direction g = (i·2πkx, i·2πky, ±mπ in the paired
        // z-slot). For velocity parity the z-slot pairing takes cos-series
        // pressure p_m to a -mπ p_m sine coefficient.
        let g = grid();
        let v = {
            let mut raw = random_field(g, VectorKind::Velocity, 3.0, 21);
            let mut ws = Workspace::new(g);
            let s = ws
                .to_spectral(
                    &PhysScalar::from_fn(g, |x, y, z| {
                        (TAU * x).sin() * (PI * z).cos() + 0.4 * (TAU * y).cos()
                    }),
                    Parity::EvenZ,
                )
                .unwrap();
            raw.axpy(0.7, &gradient(&s));
            raw
        };
        let pv = leray_project(&v);
        let mut worst = 0.0f64;
        for kx in 0..g.kx_len() {
            let gx = Complex64::new(0.0, TAU * kx as f64);
            for kyi in 0..g.ny() {
                let gy = Complex64::new(0.0, TAU * g.ky_freq(kyi) as f64);
                for m in 0..g.m_len() {
                    let gz = Complex64::new(-(m as f64) * PI, 0.0);
                    let k2 = gx.norm_sqr() + gy.norm_sqr() + gz.norm_sqr();
                    if k2 == 0.0 {
                        continue;
                    }
                    let vv = [v.comp(0).at(kx, kyi, m), v.comp(1).at(kx, kyi, m), v.comp(2).at(kx, kyi, m)];
                    let t = (gx.conj() * vv[0] + gy.conj() * vv[1] + gz.conj() * vv[2]) / k2;
                    let want = [vv[0] - t * gx, vv[1] - t * gy, vv[2] - t * gz];
                    for c in 0..3 {
                        worst = worst.max((pv.comp(c).at(kx, kyi, m) - want[c]).norm());
                    }
                }
            }
        }
        assert!(worst < 1e-10 * v.max_abs(), "lsq mismatch {worst}");
    }

    #[test]
    fn unidirectional_shear_self_advection_vanishes() {
        let g = grid();
        let mut ws = Workspace::new(g);
        let u = shear(g);
        let a = advect(&u, &u, DealiasPolicy::default(), &mut ws).unwrap();
        assert!(a.max_abs() < 1e-13);
    }

    #[test]
    fn advection_output_is_normal_to_walls() {
        // Hypotheses for "(u·∇)v is normal to the boundary": u with zero
        // wall-normal component, v with zero wall-tangential components,
        // i.e. u velocity-pattern and v vorticity-pattern here.
        let g = grid();
        let mut ws = Workspace::new(g);
        let u = random_field(g, VectorKind::Velocity, 4.0, 31);
        let v = random_field(g, VectorKind::Vorticity, 4.0, 32);
        let a = advect(&u, &v, DealiasPolicy::default(), &mut ws).unwrap();
        for c in [0usize, 1] {
            for face in Face::BOTH {
                assert!(trace_max(a.comp(c), face, 0, &mut ws) < 1e-10);
            }
        }
        // For velocity-pattern u, v the statement that holds is the normal
        // one: (u·∇)v · n = 0 on the walls.
        let v = random_field(g, VectorKind::Velocity, 4.0, 33);
        let a = advect(&u, &v, DealiasPolicy::default(), &mut ws).unwrap();
        for face in Face::BOTH {
            assert!(trace_max(a.comp(2), face, 0, &mut ws) < 1e-10);
        }
    }

    #[test]
    fn advection_matches_finite_difference_oracle() {
        // Small-grid fields evaluated on a fine grid; 4th-order centered
        // differences give an independent advection value. The comparison
        // is dominated by the small-grid truncation of the product tail.
        let gc = Grid::new(8, 8, 8).unwrap();
        let mut wsc = Workspace::new(gc);
        let u = random_field(gc, VectorKind::Velocity, 5.0, 41);
        let v = random_field(gc, VectorKind::Velocity, 5.0, 42);
        let a = advect(&u, &v, DealiasPolicy::default(), &mut wsc).unwrap();

        let gf = Grid::new(64, 64, 64).unwrap();
        let mut wsf = Workspace::new(gf);
        let lift = |f: &ScalarField| {
            let mut out = ScalarField::zeros(gf, f.parity());
            for kx in 0..gc.kx_len() {
                for kyi in 0..gc.ny() {
                    let ky = gc.ky_freq(kyi);
                    let kyf = if ky >= 0 { ky as usize } else { (gf.ny() as i64 + ky) as usize };
                    for m in 0..gc.m_len() {
                        out.set(kx, kyf, m, f.at(kx, kyi, m));
                    }
                }
            }
            out
        };
        let uf: Vec<PhysScalar> = (0..3).map(|c| wsf.to_physical(&lift(u.comp(c)))).collect();
        let vf: Vec<PhysScalar> = (0..3).map(|c| wsf.to_physical(&lift(v.comp(c)))).collect();

        // 4th-order stencil (f(-2) - 8f(-1) + 8f(+1) - f(+2)) / 12h with
        // parity-reflected z indices
        let n = 64usize;
        let h = 1.0 / n as f64;
        let zref = |k: i64, parity: Parity| -> (usize, f64) {
            let period = 2 * n as i64;
            let mut kk = k.rem_euclid(period);
            let mut s = 1.0;
            if kk > n as i64 {
                kk = period - kk;
                if parity == Parity::OddZ {
                    s = -1.0;
                }
            }
            (kk as usize, s)
        };
        let mut fd = [PhysScalar::zeros(gf), PhysScalar::zeros(gf), PhysScalar::zeros(gf)];
        for i in 0..n {
            for j in 0..n {
                for k in 0..=n {
                    for b in 0..3 {
                        let vb = &vf[b];
                        let parity = v.comp(b).parity();
                        let dx = (vb.at((i + n - 2) % n, j, k) - 8.0 * vb.at((i + n - 1) % n, j, k)
                            + 8.0 * vb.at((i + 1) % n, j, k)
                            - vb.at((i + 2) % n, j, k))
                            / (12.0 * h);
                        let dy = (vb.at(i, (j + n - 2) % n, k) - 8.0 * vb.at(i, (j + n - 1) % n, k)
                            + 8.0 * vb.at(i, (j + 1) % n, k)
                            - vb.at(i, (j + 2) % n, k))
                            / (12.0 * h);
                        let mut dz = 0.0;
                        for (off, w) in [(-2i64, 1.0), (-1, -8.0), (1, 8.0), (2, -1.0)] {
                            let (kk, s) = zref(k as i64 + off, parity);
                            dz += w * s * vb.at(i, j, kk);
                        }
                        dz /= 12.0 * h;
                        let idx = gf.phys_idx(i, j, k);
                        fd[b].values_mut()[idx] = uf[0].at(i, j, k) * dx
                            + uf[1].at(i, j, k) * dy
                            + uf[2].at(i, j, k) * dz;
                    }
                }
            }
        }
        // Compare on the coarse grid's retained band, where the dealiased
        // product coefficients are exact: project the oracle there too.
        let mut worst = 0.0f64;
        let scale = a.max_abs();
        for b in 0..3 {
            let oracle = wsf.to_spectral(&fd[b], a.comp(b).parity()).unwrap();
            for kx in 0..gc.kx_len() {
                for kyi in 0..gc.ny() {
                    let ky = gc.ky_freq(kyi);
                    let kyf = if ky >= 0 { ky as usize } else { (gf.ny() as i64 + ky) as usize };
                    for m in 0..gc.m_len() {
                        if !DealiasPolicy::default().keep(gc, kx, kyi, m) {
                            continue;
                        }
                        worst = worst.max((oracle.at(kx, kyf, m) - a.comp(b).at(kx, kyi, m)).norm());
                    }
                }
            }
        }
        assert!(worst / scale < 1e-2, "fd oracle mismatch {worst}");
    }

    #[test]
    fn commutator_definition_and_trivial_case() {
        let g = grid();
        let mut ws = Workspace::new(g);
        let policy = DealiasPolicy::default();
        let u = shear(g);
        let f_shear = curl_commutator(&u, &u, policy, &mut ws).unwrap();
        assert!(f_shear.max_abs() < 1e-12);

        let u = random_field(g, VectorKind::Velocity, 4.0, 51);
        let v = random_field(g, VectorKind::Velocity, 4.0, 52);
        let f = curl_commutator(&u, &v, policy, &mut ws).unwrap();
        assert_eq!(f.kind(), Some(VectorKind::Vorticity));
        let two_ways = curl(&advect(&u, &v, policy, &mut ws).unwrap())
            .sub(&advect(&u, &curl(&v), policy, &mut ws).unwrap());
        assert!(f.sub(&two_ways).max_abs() < 1e-12 * f.max_abs().max(1.0));
        // even normal derivatives of F are tangent-free on the walls
        for twoj in [0usize, 2] {
            for c in [0usize, 1] {
                for face in Face::BOTH {
                    assert!(trace_max(f.comp(c), face, twoj, &mut ws) < 1e-10);
                }
            }
        }
    }

    #[test]
    fn advection_trace_alternation_and_negative_control() {
        let g = grid();
        let mut ws = Workspace::new(g);
        let policy = DealiasPolicy::default();
        let u = random_field(g, VectorKind::Velocity, 4.0, 61);
        let v = random_field(g, VectorKind::Velocity, 4.0, 62);
        for j in 0..=3 {
            let r = advection_trace_residual(&u, &v, j, policy, &mut ws).unwrap();
            assert!(r < 1e-10, "j = {j}: {r}");
        }
        // wrong parity: a vorticity-pattern v has an even normal component
        let bad = random_field(g, VectorKind::Vorticity, 4.0, 63);
        let r = advection_trace_residual(&u, &bad, 0, policy, &mut ws).unwrap();
        assert!(r > 1e-2, "negative control too small: {r}");
    }

    #[test]
    fn energy_form_identities() {
        let g = grid();
        let mut ws = Workspace::new(g);
        let policy = DealiasPolicy::default();
        let u = random_field(g, VectorKind::Velocity, 4.0, 71);
        let v = random_field(g, VectorKind::Velocity, 4.0, 72);
        assert!(skew_symmetry_residual(&u, &v, policy, &mut ws).unwrap() < 1e-10);
        let h = random_field(g, VectorKind::Velocity, 4.0, 73);
        let a = random_field(g, VectorKind::Vorticity, 4.0, 74);
        let b = random_field(g, VectorKind::Vorticity, 4.0, 75);
        assert!(coupling_residual(&h, &a, &b, policy, &mut ws).unwrap() < 1e-10);
        // negative control: skip the projection so div H ≠ 0
        let mut bad = random_field(g, VectorKind::Velocity, 4.0, 76);
        let mut s = ScalarField::zeros(g, Parity::EvenZ);
        s.set_mode(1, 0, 1, Complex64::new(0.4, 0.1));
        bad.axpy(1.0, &gradient(&s));
        let r = coupling_residual(&bad, &a, &b, policy, &mut ws).unwrap();
        assert!(r > 1e-2, "coupling control too small: {r}");
    }
}
