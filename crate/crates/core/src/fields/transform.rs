//! Transforms between spectral coefficients and collocation samples.
//!
//! A field is synthesized on the mirror-extended periodic box
//! `[0,1]² × [0,2)` (even extension for cosine series, odd for sine), where
//! it is an ordinary triply periodic function. Conjugate symmetry is kept
//! implicit throughout: the x direction uses real-to-complex transforms
//! over the stored half spectrum `kx = 0..=nx/2`, and the y/z passes only
//! ever touch the `nz + 1` physical levels - the mirrored levels exist
//! only inside the z transform itself.

use super::{Grid, Parity, PhysScalar, ScalarField};
use crate::{Error, Result};
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Relative wall-value tolerance accepted when encoding odd-parity samples.
const ODD_WALL_TOL: f64 = 1e-10;

/// FFT plans and scratch for one grid. One workspace per worker; fields are
/// immutable and may be shared freely across workspaces.
pub struct Workspace {
    grid: Grid,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
    fwd_z: Arc<dyn Fft<f64>>,
    inv_z: Arc<dyn Fft<f64>>,
    /// half spectrum in x: (nx/2+1) × ny × nz_ext
    ext: Vec<Complex64>,
    pencil: Vec<Complex64>,
    pencil_x: Vec<Complex64>,
    real_x: Vec<f64>,
    scratch: Vec<Complex64>,
    scratch_x: Vec<Complex64>,
}

impl Workspace {
    pub fn new(grid: Grid) -> Self {
        let mut planner = FftPlanner::new();
        let mut rplanner = RealFftPlanner::new();
        let r2c = rplanner.plan_fft_forward(grid.nx());
        let c2r = rplanner.plan_fft_inverse(grid.nx());
        let fwd_y = planner.plan_fft_forward(grid.ny());
        let inv_y = planner.plan_fft_inverse(grid.ny());
        let fwd_z = planner.plan_fft_forward(grid.nz_ext());
        let inv_z = planner.plan_fft_inverse(grid.nz_ext());
        let scratch_len = [&fwd_y, &inv_y, &fwd_z, &inv_z]
            .iter()
            .map(|f| f.get_inplace_scratch_len())
            .max()
            .unwrap_or(0);
        let scratch_x_len = r2c
            .get_scratch_len()
            .max(c2r.get_scratch_len());
        Workspace {
            grid,
            r2c,
            c2r,
            fwd_y,
            inv_y,
            fwd_z,
            inv_z,
            ext: vec![Complex64::new(0.0, 0.0); grid.kx_len() * grid.ny() * grid.nz_ext()],
            pencil: vec![Complex64::new(0.0, 0.0); grid.ny()],
            pencil_x: vec![Complex64::new(0.0, 0.0); grid.kx_len()],
            real_x: vec![0.0; grid.nx()],
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            scratch_x: vec![Complex64::new(0.0, 0.0); scratch_x_len],
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    #[inline]
    fn ext_base(&self, kx: usize, kyi: usize) -> usize {
        (kx * self.grid.ny() + kyi) * self.grid.nz_ext()
    }

    fn fft_z(&mut self, forward: bool) {
        let n = self.grid.nz_ext();
        let plan = if forward { &self.fwd_z } else { &self.inv_z };
        for p in 0..self.grid.kx_len() * self.grid.ny() {
            plan.process_with_scratch(&mut self.ext[p * n..(p + 1) * n], &mut self.scratch);
        }
    }

    /// y-pass over the physical z levels only (`k ≤ nz`).
    fn fft_y_levels(&mut self, forward: bool) {
        let (kx_len, ny, nz_ext) = (self.grid.kx_len(), self.grid.ny(), self.grid.nz_ext());
        let plan = if forward { &self.fwd_y } else { &self.inv_y };
        for kx in 0..kx_len {
            for k in 0..self.grid.z_levels() {
                let base = (kx * ny) * nz_ext + k;
                for j in 0..ny {
                    self.pencil[j] = self.ext[base + j * nz_ext];
                }
                plan.process_with_scratch(&mut self.pencil[..ny], &mut self.scratch);
                for j in 0..ny {
                    self.ext[base + j * nz_ext] = self.pencil[j];
                }
            }
        }
    }

    /// Evaluate a spectral field on the collocation grid. Exact inverse of
    /// [`Workspace::to_spectral`] on the representable band.
    pub fn to_physical(&mut self, field: &ScalarField) -> PhysScalar {
        let grid = self.grid;
        assert_eq!(field.grid(), grid, "field and workspace grid differ");
        let (ny, nz) = (grid.ny(), grid.nz());
        let nz_ext = grid.nz_ext();
        for v in &mut self.ext {
            *v = Complex64::new(0.0, 0.0);
        }
        let parity = field.parity();
        for kx in 0..grid.kx_len() {
            for kyi in 0..ny {
                let base = self.ext_base(kx, kyi);
                for m in 0..grid.m_len() {
                    if grid.forced_zero(parity, kx, kyi, m) {
                        continue;
                    }
                    let c = field.at(kx, kyi, m);
                    if c.re == 0.0 && c.im == 0.0 {
                        continue;
                    }
                    match parity {
                        Parity::EvenZ => {
                            if m == 0 {
                                self.ext[base] += c;
                            } else {
                                let half = 0.5 * c;
                                self.ext[base + m] += half;
                                self.ext[base + (nz_ext - m)] += half;
                            }
                        }
                        Parity::OddZ => {
                            // sin(mπz) = -i/2 e^{imπz} + i/2 e^{-imπz}
                            let half = Complex64::new(0.0, -0.5) * c;
                            self.ext[base + m] += half;
                            self.ext[base + (nz_ext - m)] -= half;
                        }
                    }
                }
            }
        }
        self.fft_z(false);
        self.fft_y_levels(false);
        let mut out = PhysScalar::zeros(grid);
        for j in 0..ny {
            for k in 0..=nz {
                for kx in 0..grid.kx_len() {
                    self.pencil_x[kx] = self.ext[self.ext_base(kx, j) + k];
                }
                // the completion assumes real DC/Nyquist bins
                self.pencil_x[0].im = 0.0;
                let last = grid.kx_len() - 1;
                self.pencil_x[last] = Complex64::new(self.pencil_x[last].re, 0.0);
                self.c2r
                    .process_with_scratch(&mut self.pencil_x, &mut self.real_x, &mut self.scratch_x)
                    .expect("c2r sizes are fixed by the grid");
                for i in 0..grid.nx() {
                    out.values_mut()[grid.phys_idx(i, j, k)] = self.real_x[i];
                }
            }
        }
        out
    }

    /// Encode collocation samples as a parity-typed spectral field.
    ///
    /// Odd-parity samples must vanish on the walls up to `1e-10` relative;
    /// anything else means the samples do not belong to the sine class.
    pub fn to_spectral(&mut self, samples: &PhysScalar, parity: Parity) -> Result<ScalarField> {
        let grid = self.grid;
        if samples.values().len() != grid.phys_len() {
            return Err(Error::ShapeMismatch {
                expected: grid.phys_len(),
                got: samples.values().len(),
            });
        }
        let (nx, ny, nz) = (grid.nx(), grid.ny(), grid.nz());
        let nz_ext = grid.nz_ext();
        if parity == Parity::OddZ {
            let scale = samples.max_abs().max(1.0);
            let mut wall = 0.0f64;
            for i in 0..nx {
                for j in 0..ny {
                    wall = wall.max(samples.at(i, j, 0).abs());
                    wall = wall.max(samples.at(i, j, nz).abs());
                }
            }
            if wall > ODD_WALL_TOL * scale {
                return Err(Error::OddBoundary {
                    max: wall,
                    tol: ODD_WALL_TOL * scale,
                });
            }
        }
        // x: real-to-complex per (j, k) pencil
        for j in 0..ny {
            for k in 0..=nz {
                for i in 0..nx {
                    self.real_x[i] = samples.values()[grid.phys_idx(i, j, k)];
                }
                self.r2c
                    .process_with_scratch(&mut self.real_x, &mut self.pencil_x, &mut self.scratch_x)
                    .expect("r2c sizes are fixed by the grid");
                for kx in 0..grid.kx_len() {
                    let base = self.ext_base(kx, j);
                    self.ext[base + k] = self.pencil_x[kx];
                }
            }
        }
        self.fft_y_levels(true);
        // mirror-extend in z (pointwise in (kx, ky) by linearity)
        let sign = match parity {
            Parity::EvenZ => 1.0,
            Parity::OddZ => -1.0,
        };
        for kx in 0..grid.kx_len() {
            for kyi in 0..ny {
                let base = self.ext_base(kx, kyi);
                for k in nz + 1..nz_ext {
                    self.ext[base + k] = sign * self.ext[base + (nz_ext - k)];
                }
            }
        }
        self.fft_z(true);
        let norm = 1.0 / (nx as f64 * ny as f64 * nz_ext as f64);
        let mut out = ScalarField::zeros(grid, parity);
        for kx in 0..grid.kx_len() {
            for kyi in 0..ny {
                let base = self.ext_base(kx, kyi);
                for m in 0..grid.m_len() {
                    if grid.forced_zero(parity, kx, kyi, m) {
                        continue;
                    }
                    let c = match parity {
                        Parity::EvenZ => {
                            if m == 0 {
                                self.ext[base] * norm
                            } else {
                                (self.ext[base + m] + self.ext[base + (nz_ext - m)]) * norm
                            }
                        }
                        Parity::OddZ => {
                            Complex64::new(0.0, 1.0)
                                * (self.ext[base + m] - self.ext[base + (nz_ext - m)])
                                * norm
                        }
                    };
                    out.set(kx, kyi, m, c);
                }
            }
        }
        symmetrize_kx0(&mut out);
        Ok(out)
    }

    /// Synthesize real `nx × ny` wall samples from half-spectrum plane
    /// coefficients (used for boundary traces).
    pub fn synthesize_plane(&mut self, coeffs: &[Complex64]) -> Vec<f64> {
        synthesize_plane(self.grid.nx(), self.grid.ny(), coeffs)
    }
}

/// Restore exact conjugate symmetry on the `kx = 0` plane.
fn symmetrize_kx0(field: &mut ScalarField) {
    let grid = field.grid();
    let ny = grid.ny();
    for m in 0..grid.m_len() {
        let c = field.at(0, 0, m);
        field.set(0, 0, m, Complex64::new(c.re, 0.0));
        for kyi in 1..ny / 2 {
            let kyj = ny - kyi;
            let a = field.at(0, kyi, m);
            let b = field.at(0, kyj, m);
            let avg = 0.5 * (a + b.conj());
            field.set(0, kyi, m, avg);
            field.set(0, kyj, m, avg.conj());
        }
    }
}

/// Inverse 2-D transform of half-spectrum plane coefficients (`(nx/2+1) × ny`,
/// ky-major within each kx row) to real `nx × ny` samples.
pub fn synthesize_plane(nx: usize, ny: usize, coeffs: &[Complex64]) -> Vec<f64> {
    assert_eq!(coeffs.len(), (nx / 2 + 1) * ny);
    let mut plane = vec![Complex64::new(0.0, 0.0); nx * ny];
    for kx in 0..=nx / 2 {
        if kx == nx / 2 {
            continue;
        }
        for kyi in 0..ny {
            if kyi == ny / 2 {
                continue;
            }
            let c = coeffs[kx * ny + kyi];
            plane[kx * ny + kyi] += c;
            if kx > 0 {
                plane[(nx - kx) * ny + (ny - kyi) % ny] += c.conj();
            }
        }
    }
    let mut planner = FftPlanner::new();
    let inv_y = planner.plan_fft_inverse(ny);
    let inv_x = planner.plan_fft_inverse(nx);
    for i in 0..nx {
        inv_y.process(&mut plane[i * ny..(i + 1) * ny]);
    }
    let mut pencil = vec![Complex64::new(0.0, 0.0); nx];
    for j in 0..ny {
        for i in 0..nx {
            pencil[i] = plane[i * ny + j];
        }
        inv_x.process(&mut pencil);
        for i in 0..nx {
            plane[i * ny + j] = pencil[i];
        }
    }
    plane.iter().map(|c| c.re).collect()
}

/// Forward 2-D transform of real `nx × ny` samples to half-spectrum plane
/// coefficients. Inverse of [`synthesize_plane`] on the representable band.
pub fn analyze_plane(nx: usize, ny: usize, values: &[f64]) -> Vec<Complex64> {
    assert_eq!(values.len(), nx * ny);
    let mut plane: Vec<Complex64> = values.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    let mut planner = FftPlanner::new();
    let fwd_y = planner.plan_fft_forward(ny);
    let fwd_x = planner.plan_fft_forward(nx);
    for i in 0..nx {
        fwd_y.process(&mut plane[i * ny..(i + 1) * ny]);
    }
    let mut pencil = vec![Complex64::new(0.0, 0.0); nx];
    for j in 0..ny {
        for i in 0..nx {
            pencil[i] = plane[i * ny + j];
        }
        fwd_x.process(&mut pencil);
        for i in 0..nx {
            plane[i * ny + j] = pencil[i];
        }
    }
    let norm = 1.0 / (nx as f64 * ny as f64);
    let mut out = vec![Complex64::new(0.0, 0.0); (nx / 2 + 1) * ny];
    for kx in 0..=nx / 2 {
        if kx == nx / 2 {
            continue;
        }
        for kyi in 0..ny {
            if kyi == ny / 2 {
                continue;
            }
            out[kx * ny + kyi] = plane[kx * ny + kyi] * norm;
        }
    }
    // keep the kx = 0 row self-conjugate
    for kyi in 1..ny / 2 {
        let a = out[kyi];
        let b = out[ny - kyi];
        let avg = 0.5 * (a + b.conj());
        out[kyi] = avg;
        out[ny - kyi] = avg.conj();
    }
    out[0] = Complex64::new(out[0].re, 0.0);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{Grid, Parity, PhysScalar, TAU};
    use std::f64::consts::PI;

    #[test]
    fn cosine_basis_function_maps_to_single_coefficient() {
        let grid = Grid::new(8, 8, 8).unwrap();
        let mut ws = Workspace::new(grid);
        let samples = PhysScalar::from_fn(grid, |_, _, z| (PI * z).cos());
        let f = ws.to_spectral(&samples, Parity::EvenZ).unwrap();
        assert!((f.at(0, 0, 1) - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        let mut off = 0.0f64;
        for kx in 0..grid.kx_len() {
            for kyi in 0..grid.ny() {
                for m in 0..grid.m_len() {
                    if (kx, kyi, m) != (0, 0, 1) {
                        off = off.max(f.at(kx, kyi, m).norm());
                    }
                }
            }
        }
        assert!(off < 1e-12);
    }

    #[test]
    fn sine_basis_function_lands_on_expected_modes() {
        let grid = Grid::new(8, 8, 8).unwrap();
        let mut ws = Workspace::new(grid);
        let samples = PhysScalar::from_fn(grid, |x, _, z| (TAU * x).sin() * (PI * z).sin());
        let f = ws.to_spectral(&samples, Parity::OddZ).unwrap();
        // sin(2πx) = -i/2 e^{2πix} + i/2 e^{-2πix}: stored mode (1, 0) = -i/2
        assert!((f.mode(1, 0, 1) - Complex64::new(0.0, -0.5)).norm() < 1e-12);
        assert!((f.mode(-1, 0, 1) - Complex64::new(0.0, 0.5)).norm() < 1e-12);
        let mut off = 0.0f64;
        for kx in 0..grid.kx_len() {
            for kyi in 0..grid.ny() {
                for m in 0..grid.m_len() {
                    if (kx, kyi) != (1, 0) {
                        off = off.max(f.at(kx, kyi, m).norm());
                    }
                }
            }
        }
        assert!(off < 1e-12);
    }

    #[test]
    fn roundtrip_on_band_limited_field() {
        let grid = Grid::new(8, 8, 8).unwrap();
        let mut ws = Workspace::new(grid);
        let f = crate::fields::random_field(grid, crate::fields::VectorKind::Velocity, 3.0, 99);
        for c in 0..3 {
            let phys = ws.to_physical(f.comp(c));
            let back = ws.to_spectral(&phys, f.comp(c).parity()).unwrap();
            assert!(back.sub(f.comp(c)).max_abs() < 1e-12 * f.max_abs().max(1.0));
            let phys2 = ws.to_physical(&back);
            let worst = phys
                .values()
                .iter()
                .zip(phys2.values())
                .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
            assert!(worst < 1e-12 * phys.max_abs().max(1.0));
        }
    }

    #[test]
    fn roundtrip_at_study_scale() {
        let grid = Grid::new(32, 32, 32).unwrap();
        let mut ws = Workspace::new(grid);
        let f = crate::fields::random_field(grid, crate::fields::VectorKind::Velocity, 4.0, 1);
        let phys = ws.to_physical(f.comp(0));
        let back = ws.to_spectral(&phys, f.comp(0).parity()).unwrap();
        assert!(back.sub(f.comp(0)).max_abs() < 1e-12 * f.max_abs());
    }

    #[test]
    fn odd_samples_with_wall_values_are_rejected() {
        let grid = Grid::new(8, 8, 8).unwrap();
        let mut ws = Workspace::new(grid);
        let samples = PhysScalar::from_fn(grid, |_, _, z| (PI * z).cos());
        assert!(matches!(
            ws.to_spectral(&samples, Parity::OddZ),
            Err(crate::Error::OddBoundary { .. })
        ));
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let grid = Grid::new(8, 8, 8).unwrap();
        let other = Grid::new(8, 8, 4).unwrap();
        let mut ws = Workspace::new(grid);
        let samples = PhysScalar::zeros(other);
        assert!(matches!(
            ws.to_spectral(&samples, Parity::EvenZ),
            Err(crate::Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn plane_roundtrip() {
        let (nx, ny) = (8, 8);
        let vals: Vec<f64> = (0..nx * ny)
            .map(|t| {
                let (i, j) = (t / ny, t % ny);
                let (x, y) = (i as f64 / nx as f64, j as f64 / ny as f64);
                (TAU * x).sin() + 0.3 * (TAU * 2.0 * y).cos() + 0.1 * (TAU * (x + 3.0 * y)).cos()
            })
            .collect();
        let coeffs = analyze_plane(nx, ny, &vals);
        let back = synthesize_plane(nx, ny, &coeffs);
        for (a, b) in vals.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
