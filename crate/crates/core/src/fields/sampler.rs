//! Deterministic divergence-free test-field sampler.
//!
//! Coefficients are drawn per mode from a hash of `(seed, component, mode)`,
//! so the same seed yields bit-identical fields and refining the grid only
//! adds new high modes - coarse-grid coefficients are unchanged, which makes
//! norm refinement studies meaningful.

use super::{Grid, ScalarField, VectorField, VectorKind};
use crate::operators::{leray_project, DealiasPolicy};
use rustfft::num_complex::Complex64;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Uniform in [-1, 1).
fn unit(x: u64) -> f64 {
    (x >> 11) as f64 / (1u64 << 52) as f64 - 1.0
}

fn draw(seed: u64, comp: usize, kx: i64, ky: i64, m: usize) -> Complex64 {
    let mut state = seed
        ^ (comp as u64).wrapping_mul(0xa076_1d64_78bd_642f)
        ^ (kx as u64).wrapping_mul(0xe703_7ed1_a0b4_28db)
        ^ (ky as u64).wrapping_mul(0x8ebc_6af0_9c88_c6e3)
        ^ (m as u64).wrapping_mul(0x5895_58cb_b624_4d39);
    let re = unit(splitmix64(&mut state));
    let im = unit(splitmix64(&mut state));
    Complex64::new(re, im)
}

/// Deterministic random field: divergence-free after projection, unit L²
/// norm, coefficients decaying like `(1 + |k|²)^{-decay/2}`. Modes outside
/// the two-thirds band stay empty, so sampled fields are dealias-ready and
/// quadratic products of them keep exact retained coefficients.
pub fn random_field(grid: Grid, kind: VectorKind, decay: f64, seed: u64) -> VectorField {
    assert!(decay > 2.0, "decay must exceed 2 so desk-scale norms resolve");
    let band = DealiasPolicy::default();
    let mut v = VectorField::zeros(grid, kind);
    for (comp, parity) in kind.parities().into_iter().enumerate() {
        let f: &mut ScalarField = v.comp_mut(comp);
        for kx in 0..grid.kx_len() {
            for kyi in 0..grid.ny() {
                let ky = grid.ky_freq(kyi);
                if kx == 0 && ky < 0 {
                    continue; // filled by conjugate symmetry
                }
                for m in 0..grid.m_len() {
                    if grid.forced_zero(parity, kx, kyi, m) || !band.keep(grid, kx, kyi, m) {
                        continue;
                    }
                    let k2 = (kx * kx) as f64 + (ky * ky) as f64 + (m * m) as f64;
                    let amp = (1.0 + k2).powf(-decay / 2.0);
                    let mut c = draw(seed, comp, kx as i64, ky, m) * amp;
                    if kx == 0 && ky == 0 {
                        c = Complex64::new(c.re, 0.0);
                    }
                    f.set_mode(kx as i64, ky, m, c);
                }
            }
        }
    }
    let v = leray_project(&v);
    let norm = super::l2_norm(&v);
    if norm > 0.0 {
        v.scale(1.0 / norm)
    } else {
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{sobolev_norm, Grid, VectorKind};
    use crate::operators::divergence;

    #[test]
    fn same_seed_is_bit_identical() {
        let grid = Grid::new(8, 8, 8).unwrap();
        let a = random_field(grid, VectorKind::Velocity, 4.0, 7);
        let b = random_field(grid, VectorKind::Velocity, 4.0, 7);
        assert!(a.bits_eq(&b));
        let c = random_field(grid, VectorKind::Velocity, 4.0, 8);
        assert!(!a.bits_eq(&c));
    }

    #[test]
    fn output_is_divergence_free() {
        let grid = Grid::new(8, 8, 8).unwrap();
        for kind in [VectorKind::Velocity, VectorKind::Vorticity] {
            let v = random_field(grid, kind, 4.0, 11);
            assert!(divergence(&v).max_abs() < 1e-12 * v.max_abs());
        }
    }

    #[test]
    fn h3_norm_is_refinement_converged_with_decay_4() {
        let coarse = Grid::new(16, 16, 16).unwrap();
        let fine = Grid::new(16, 16, 32).unwrap();
        let a = random_field(coarse, VectorKind::Velocity, 4.0, 5);
        let b = random_field(fine, VectorKind::Velocity, 4.0, 5);
        let na = sobolev_norm(&a, 3);
        let nb = sobolev_norm(&b, 3);
        assert!(na.is_finite() && nb.is_finite());
        assert!((na - nb).abs() / nb < 0.01, "H³: {na} vs {nb}");
    }
}
