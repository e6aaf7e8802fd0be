//! Exact L² inner products and Sobolev norms from spectral coefficients.
//!
//! With unit box volume, `∫_Q |e^{2πi(kx·x+ky·y)}|² cos²(mπz) dV` is 1 for
//! `m = 0` and 1/2 otherwise (1/2 for every sine mode), and stored `kx > 0`
//! modes stand for a conjugate pair, so coefficient sums give integrals
//! without quadrature. `‖v‖²_{H^s} = Σ_{|α| ≤ s} ‖∂^α v‖²_{L²}` including
//! mixed derivatives, which is diagonal in the basis.

use super::{Grid, Parity, ScalarField, VectorField, TAU};
use std::f64::consts::PI;

#[inline]
fn mode_weight(_grid: Grid, parity: Parity, kx: usize, m: usize) -> f64 {
    let wk = if kx == 0 { 1.0 } else { 2.0 };
    let wm = if parity == Parity::EvenZ && m == 0 { 1.0 } else { 0.5 };
    wk * wm
}

/// L² inner product of two scalar fields of matching parity.
pub fn l2_inner_scalar(a: &ScalarField, b: &ScalarField) -> f64 {
    assert_eq!(a.parity(), b.parity(), "inner product needs matching parity");
    assert_eq!(a.grid(), b.grid());
    let grid = a.grid();
    let mut acc = 0.0;
    for kx in 0..grid.kx_len() {
        for kyi in 0..grid.ny() {
            for m in 0..grid.m_len() {
                let ca = a.at(kx, kyi, m);
                let cb = b.at(kx, kyi, m);
                let re = ca.re * cb.re + ca.im * cb.im;
                acc += mode_weight(grid, a.parity(), kx, m) * re;
            }
        }
    }
    acc
}

pub fn l2_norm_scalar(a: &ScalarField) -> f64 {
    l2_inner_scalar(a, a).max(0.0).sqrt()
}

/// L² inner product of two vector fields (componentwise matching parity).
pub fn l2_inner(a: &VectorField, b: &VectorField) -> f64 {
    (0..3).map(|c| l2_inner_scalar(a.comp(c), b.comp(c))).sum()
}

pub fn l2_norm(a: &VectorField) -> f64 {
    l2_inner(a, a).max(0.0).sqrt()
}

/// Per-mode multiplier `Σ_{a+b+c ≤ s} X^a Y^b Z^c` with `X = (2πkx)²` etc.
fn sobolev_factor(s: usize, x: f64, y: f64, z: f64) -> f64 {
    let mut acc = 0.0;
    let mut xa = 1.0;
    for a in 0..=s {
        let mut yb = 1.0;
        for b in 0..=s - a {
            let mut zc = 1.0;
            for _ in 0..=s - a - b {
                acc += xa * yb * zc;
                zc *= z;
            }
            yb *= y;
        }
        xa *= x;
    }
    acc
}

/// `H^s` norm of a scalar field, exact in the basis.
pub fn sobolev_norm_scalar(f: &ScalarField, s: usize) -> f64 {
    let grid = f.grid();
    let mut acc = 0.0;
    for kx in 0..grid.kx_len() {
        let x = (TAU * kx as f64).powi(2);
        for kyi in 0..grid.ny() {
            let y = (TAU * grid.ky_freq(kyi) as f64).powi(2);
            for m in 0..grid.m_len() {
                let z = (PI * m as f64).powi(2);
                let c = f.at(kx, kyi, m);
                let mag = c.re * c.re + c.im * c.im;
                if mag == 0.0 {
                    continue;
                }
                acc += mode_weight(grid, f.parity(), kx, m) * sobolev_factor(s, x, y, z) * mag;
            }
        }
    }
    acc.max(0.0).sqrt()
}

/// `H^s` norm of a vector field: `(Σ_{|α|≤s} ‖∂^α v‖²_{L²})^{1/2}`.
pub fn sobolev_norm(v: &VectorField, s: usize) -> f64 {
    (0..3)
        .map(|c| sobolev_norm_scalar(v.comp(c), s).powi(2))
        .sum::<f64>()
        .max(0.0)
        .sqrt()
}
