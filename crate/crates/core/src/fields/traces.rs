//! Wall traces `∂_n^j v` and trace-class membership residuals.
//!
//! `∂_n` is the outward normal derivative: `-∂_z` at `z = 0`, `+∂_z` at
//! `z = 1`. For a cosine component every odd-order trace, and for a sine
//! component every even-order trace, is identically the empty sum - those
//! paths return exact zeros without transforming anything.

use super::{Face, ScalarField, VectorField, Workspace};
use crate::fields::Parity;
use crate::operators::divergence;
use rustfft::num_complex::Complex64;
use std::f64::consts::PI;

/// Physical wall samples of one normal-derivative trace.
#[derive(Debug, Clone)]
pub struct BoundaryTrace {
    pub face: Face,
    pub order: usize,
    /// `nx × ny` samples, x-major.
    pub values: Vec<f64>,
}

/// cos(jπ/2) pattern for the surviving trace factor, or `None` when the
/// trace is structurally zero.
fn trace_factor(parity: Parity, j: usize) -> Option<f64> {
    match parity {
        // ∂_z^j cos(mπz) = (mπ)^j cos(mπz + jπ/2)
        Parity::EvenZ => match j % 4 {
            0 => Some(1.0),
            2 => Some(-1.0),
            _ => None,
        },
        // ∂_z^j sin(mπz) = (mπ)^j sin(mπz + jπ/2)
        Parity::OddZ => match j % 4 {
            1 => Some(1.0),
            3 => Some(-1.0),
            _ => None,
        },
    }
}

/// Plane coefficients of `∂_n^j f` on a wall, or `None` when identically 0.
fn trace_coeffs(f: &ScalarField, face: Face, j: usize) -> Option<Vec<Complex64>> {
    let grid = f.grid();
    let base = trace_factor(f.parity(), j)?;
    // normal orientation: ∂_n = -∂_z at z = 0
    let orient = match face {
        Face::Z0 => {
            if j % 2 == 1 {
                -1.0
            } else {
                1.0
            }
        }
        Face::Z1 => 1.0,
    };
    let mut out = vec![Complex64::new(0.0, 0.0); grid.kx_len() * grid.ny()];
    for kx in 0..grid.kx_len() {
        for kyi in 0..grid.ny() {
            let mut acc = Complex64::new(0.0, 0.0);
            for m in 0..grid.m_len() {
                let c = f.at(kx, kyi, m);
                if c.re == 0.0 && c.im == 0.0 {
                    continue;
                }
                let alt = match face {
                    Face::Z0 => 1.0,
                    Face::Z1 => {
                        if m % 2 == 0 {
                            1.0
                        } else {
                            -1.0
                        }
                    }
                };
                acc += c * (m as f64 * PI).powi(j as i32) * alt;
            }
            out[kx * grid.ny() + kyi] = acc * (base * orient);
        }
    }
    Some(out)
}

/// Wall samples of `∂_n^j` of one component.
pub fn boundary_trace(f: &ScalarField, face: Face, j: usize, ws: &mut Workspace) -> BoundaryTrace {
    let grid = f.grid();
    let values = match trace_coeffs(f, face, j) {
        Some(coeffs) => ws.synthesize_plane(&coeffs),
        None => vec![0.0; grid.nx() * grid.ny()],
    };
    BoundaryTrace { face, order: j, values }
}

/// Max wall magnitude of `∂_n^j` of one component.
pub fn trace_max(f: &ScalarField, face: Face, j: usize, ws: &mut Workspace) -> f64 {
    match trace_coeffs(f, face, j) {
        Some(coeffs) => ws
            .synthesize_plane(&coeffs)
            .iter()
            .fold(0.0f64, |a, v| a.max(v.abs())),
        None => 0.0,
    }
}

/// Defining conditions of the trace class with superscript `k ≥ -1`:
///
/// * every class sits inside the divergence-free space;
/// * `k = -1`: the normal component vanishes on the walls;
/// * `k = 0`: the tangential components vanish on the walls;
/// * `k = 2K ≥ 2`: `∂_n^{2j} v_τ = 0` on the walls for `j = 0..=K`;
/// * `k = 2K+1 ≥ 1`: `v_n = 0` and `∂_n^{2j+1} v_τ = 0` for `j = 0..=K`.
///
/// Returns the largest violation relative to the field's largest
/// coefficient magnitude; 0 means membership.
pub fn vk_membership_residual(v: &VectorField, k: i32, ws: &mut Workspace) -> f64 {
    assert!(k >= -1, "trace classes start at k = -1");
    let scale = v.max_abs();
    if scale == 0.0 {
        return 0.0;
    }
    let mut worst = divergence(v).max_abs();
    let mut check = |comp: usize, j: usize, ws: &mut Workspace| {
        for face in Face::BOTH {
            let t = trace_max(v.comp(comp), face, j, ws);
            if t > worst {
                worst = t;
            }
        }
    };
    if k == -1 {
        check(2, 0, ws);
    } else if k == 0 {
        check(0, 0, ws);
        check(1, 0, ws);
    } else if k % 2 == 1 {
        check(2, 0, ws);
        let kk = (k as usize - 1) / 2;
        for j in 0..=kk {
            check(0, 2 * j + 1, ws);
            check(1, 2 * j + 1, ws);
        }
    } else {
        let kk = k as usize / 2;
        for j in 0..=kk {
            check(0, 2 * j, ws);
            check(1, 2 * j, ws);
        }
    }
    worst / scale
}
