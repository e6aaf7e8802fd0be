//! Parity-typed spectral fields on `Q = [0,1]²_per × (0,1)`.
//!
//! A scalar field is stored as Fourier modes `e^{2πi(kx·x + ky·y)}` in the
//! periodic directions times a half-range cosine (`EvenZ`) or sine (`OddZ`)
//! series in z. The z-series is equivalent to an even/odd mirror extension
//! to `[0,2)`, so transforms reduce to ordinary periodic FFTs and every
//! derivative is diagonal in the basis.
//!
//! Conjugate symmetry in `(kx, ky)` is stored implicitly: only `kx ≥ 0` is
//! kept and the `kx = 0` plane is kept self-conjugate. The exposed API
//! always presents real fields.

mod norms;
mod sampler;
mod snapshot;
mod traces;
mod transform;

pub use norms::{l2_inner, l2_inner_scalar, l2_norm, l2_norm_scalar, sobolev_norm, sobolev_norm_scalar};
pub use sampler::random_field;
pub use snapshot::{read_snapshot, write_snapshot, Snapshot};
pub use traces::{boundary_trace, trace_max, vk_membership_residual, BoundaryTrace};
pub use transform::{analyze_plane, synthesize_plane, Workspace};

/// Complex coefficient type used throughout (re-exported for callers).
pub use rustfft::num_complex::Complex64;

use crate::{Error, Result};

/// Relative tolerance for quantities that are exact zeros in the basis.
pub const ZERO_TOL: f64 = 1e-12;

/// 2π, the fundamental x/y wavenumber scale.
pub const TAU: f64 = std::f64::consts::TAU;

/// Highest Sobolev order with meaningful resolution at desk scale.
pub const S_MAX: usize = 4;

/// Mode counts for the box `[0,1]²_per × (0,1)`. All edge lengths are 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    nx: usize,
    ny: usize,
    nz: usize,
}

impl Grid {
    /// Build a grid. `nx`, `ny` must be even and ≥ 4; `nz ≥ 2`.
    pub fn new(nx: usize, ny: usize, nz: usize) -> Result<Self> {
        if nx % 2 != 0 || ny % 2 != 0 {
            return Err(Error::GridSize(format!(
                "nx, ny must be even (got {nx}, {ny})"
            )));
        }
        if nx < 4 || ny < 4 {
            return Err(Error::GridSize(format!(
                "nx, ny must be at least 4 (got {nx}, {ny})"
            )));
        }
        if nz < 2 {
            return Err(Error::GridSize(format!("nz must be at least 2 (got {nz})")));
        }
        Ok(Grid { nx, ny, nz })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn nz(&self) -> usize {
        self.nz
    }

    /// Stored kx slots: `0..=nx/2` (the Nyquist slot is forced to zero).
    pub fn kx_len(&self) -> usize {
        self.nx / 2 + 1
    }

    /// Stored z-series slots: `0..=nz` (the `m = nz` slot is forced to zero).
    pub fn m_len(&self) -> usize {
        self.nz + 1
    }

    /// Number of physical z-levels `z_k = k/nz`, `k = 0..=nz`.
    pub fn z_levels(&self) -> usize {
        self.nz + 1
    }

    /// Length of the mirror-extended periodic z-grid.
    pub fn nz_ext(&self) -> usize {
        2 * self.nz
    }

    /// Total stored spectral slots per scalar field.
    pub fn spec_len(&self) -> usize {
        self.kx_len() * self.ny * self.m_len()
    }

    /// Total collocation points per scalar field (`nx × ny × (nz+1)`).
    pub fn phys_len(&self) -> usize {
        self.nx * self.ny * self.z_levels()
    }

    /// Signed y-frequency for a stored ky index.
    pub fn ky_freq(&self, kyi: usize) -> i64 {
        if kyi <= self.ny / 2 {
            kyi as i64
        } else {
            kyi as i64 - self.ny as i64
        }
    }

    /// Slots that are structurally zero for the given parity: the kx and ky
    /// Nyquist planes, the `m = nz` slot, and `m = 0` for sine series.
    pub fn forced_zero(&self, parity: Parity, kx: usize, kyi: usize, m: usize) -> bool {
        kx == self.nx / 2 || kyi == self.ny / 2 || m == self.nz || (parity == Parity::OddZ && m == 0)
    }

    #[inline]
    pub fn spec_idx(&self, kx: usize, kyi: usize, m: usize) -> usize {
        (kx * self.ny + kyi) * self.m_len() + m
    }

    #[inline]
    pub fn phys_idx(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.ny + j) * self.z_levels() + k
    }
}

/// z-series parity of one scalar component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    /// Cosine series `cos(mπz)`: even mirror extension.
    EvenZ,
    /// Sine series `sin(mπz)`: odd mirror extension, no `m = 0` term.
    OddZ,
}

impl Parity {
    pub fn flip(self) -> Parity {
        match self {
            Parity::EvenZ => Parity::OddZ,
            Parity::OddZ => Parity::EvenZ,
        }
    }
}

/// Componentwise parity pattern of a vector field.
///
/// `Velocity` is the pattern of u, H and the layer lift v^ε: tangential
/// components even, normal component odd, so `v·n = 0` and all odd-order
/// normal derivatives of `v_τ` vanish at the walls identically. `Vorticity`
/// is the curl pattern with the roles reversed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VectorKind {
    Velocity,
    Vorticity,
}

impl VectorKind {
    pub fn parities(self) -> [Parity; 3] {
        match self {
            VectorKind::Velocity => [Parity::EvenZ, Parity::EvenZ, Parity::OddZ],
            VectorKind::Vorticity => [Parity::OddZ, Parity::OddZ, Parity::EvenZ],
        }
    }

    pub fn flip(self) -> VectorKind {
        match self {
            VectorKind::Velocity => VectorKind::Vorticity,
            VectorKind::Vorticity => VectorKind::Velocity,
        }
    }
}

/// One of the two walls.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Face {
    Z0,
    Z1,
}

impl Face {
    pub const BOTH: [Face; 2] = [Face::Z0, Face::Z1];
}

/// Scalar field in spectral form.
#[derive(Debug, Clone)]
pub struct ScalarField {
    grid: Grid,
    parity: Parity,
    coeffs: Vec<Complex64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid, parity: Parity) -> Self {
        ScalarField {
            grid,
            parity,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.spec_len()],
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    #[inline]
    pub fn at(&self, kx: usize, kyi: usize, m: usize) -> Complex64 {
        self.coeffs[self.grid.spec_idx(kx, kyi, m)]
    }

    /// Set a stored coefficient. Writes to structurally zero slots are
    /// silently dropped so fields cannot leave the representable band.
    pub fn set(&mut self, kx: usize, kyi: usize, m: usize, c: Complex64) {
        if self.grid.forced_zero(self.parity, kx, kyi, m) {
            return;
        }
        let idx = self.grid.spec_idx(kx, kyi, m);
        self.coeffs[idx] = c;
    }

    /// Signed-mode access: `mode(-kx, -ky, m) = conj(mode(kx, ky, m))`.
    pub fn mode(&self, kx: i64, ky: i64, m: usize) -> Complex64 {
        let (kx, ky, conj) = if kx < 0 || (kx == 0 && ky < 0) {
            (-kx, -ky, true)
        } else {
            (kx, ky, false)
        };
        let kyi = if ky >= 0 { ky as usize } else { (self.grid.ny as i64 + ky) as usize };
        let c = self.at(kx as usize, kyi, m);
        if conj {
            c.conj()
        } else {
            c
        }
    }

    /// Set a mode given a signed (kx, ky). For `kx = 0` the conjugate slot
    /// is written as well so the field stays real.
    pub fn set_mode(&mut self, kx: i64, ky: i64, m: usize, c: Complex64) {
        let (kx, ky, c) = if kx < 0 || (kx == 0 && ky < 0) {
            (-kx, -ky, c.conj())
        } else {
            (kx, ky, c)
        };
        let ny = self.grid.ny as i64;
        let kyi = if ky >= 0 { ky as usize } else { (ny + ky) as usize };
        self.set(kx as usize, kyi, m, c);
        if kx == 0 {
            if kyi == 0 {
                let idx = self.grid.spec_idx(0, 0, m);
                self.coeffs[idx] = Complex64::new(c.re, 0.0);
            } else {
                self.set(0, self.grid.ny - kyi, m, c.conj());
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0f64, |a, c| a.max(c.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn scale(&self, a: f64) -> Self {
        let mut out = self.clone();
        for c in &mut out.coeffs {
            *c *= a;
        }
        out
    }

    pub fn add(&self, other: &ScalarField) -> Self {
        debug_assert_eq!(self.parity, other.parity);
        let mut out = self.clone();
        for (c, o) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *c += o;
        }
        out
    }

    pub fn sub(&self, other: &ScalarField) -> Self {
        debug_assert_eq!(self.parity, other.parity);
        let mut out = self.clone();
        for (c, o) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *c -= o;
        }
        out
    }

    /// `self += a * other`, in place.
    pub fn axpy(&mut self, a: f64, other: &ScalarField) {
        debug_assert_eq!(self.parity, other.parity);
        for (c, o) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *c += a * o;
        }
    }

    /// Multiply each coefficient by a per-slot real factor.
    pub fn mul_factors(&self, factors: &[f64]) -> Self {
        debug_assert_eq!(factors.len(), self.coeffs.len());
        let mut out = self.clone();
        for (c, f) in out.coeffs.iter_mut().zip(factors) {
            *c *= *f;
        }
        out
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn bits_eq(&self, other: &ScalarField) -> bool {
        self.parity == other.parity
            && self.coeffs.len() == other.coeffs.len()
            && self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .all(|(a, b)| a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits())
    }
}

/// Three-component spectral field with one parity per component.
#[derive(Debug, Clone)]
pub struct VectorField {
    comps: [ScalarField; 3],
}

impl VectorField {
    pub fn zeros(grid: Grid, kind: VectorKind) -> Self {
        let p = kind.parities();
        VectorField {
            comps: [
                ScalarField::zeros(grid, p[0]),
                ScalarField::zeros(grid, p[1]),
                ScalarField::zeros(grid, p[2]),
            ],
        }
    }

    pub fn from_components(comps: [ScalarField; 3]) -> Self {
        debug_assert_eq!(comps[0].grid(), comps[1].grid());
        debug_assert_eq!(comps[0].grid(), comps[2].grid());
        VectorField { comps }
    }

    pub fn grid(&self) -> Grid {
        self.comps[0].grid()
    }

    pub fn comp(&self, i: usize) -> &ScalarField {
        &self.comps[i]
    }

    pub fn comp_mut(&mut self, i: usize) -> &mut ScalarField {
        &mut self.comps[i]
    }

    pub fn comps(&self) -> &[ScalarField; 3] {
        &self.comps
    }

    /// The parity pattern, when it matches one of the two named kinds.
    pub fn kind(&self) -> Option<VectorKind> {
        let p = [self.comps[0].parity(), self.comps[1].parity(), self.comps[2].parity()];
        if p == VectorKind::Velocity.parities() {
            Some(VectorKind::Velocity)
        } else if p == VectorKind::Vorticity.parities() {
            Some(VectorKind::Vorticity)
        } else {
            None
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().map(|c| c.max_abs()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().all(|c| c.is_finite())
    }

    pub fn scale(&self, a: f64) -> Self {
        VectorField {
            comps: [self.comps[0].scale(a), self.comps[1].scale(a), self.comps[2].scale(a)],
        }
    }

    pub fn add(&self, other: &VectorField) -> Self {
        VectorField {
            comps: [
                self.comps[0].add(&other.comps[0]),
                self.comps[1].add(&other.comps[1]),
                self.comps[2].add(&other.comps[2]),
            ],
        }
    }

    pub fn sub(&self, other: &VectorField) -> Self {
        VectorField {
            comps: [
                self.comps[0].sub(&other.comps[0]),
                self.comps[1].sub(&other.comps[1]),
                self.comps[2].sub(&other.comps[2]),
            ],
        }
    }

    pub fn axpy(&mut self, a: f64, other: &VectorField) {
        for (c, o) in self.comps.iter_mut().zip(&other.comps) {
            c.axpy(a, o);
        }
    }

    pub fn mul_factors(&self, factors: &[f64]) -> Self {
        VectorField {
            comps: [
                self.comps[0].mul_factors(factors),
                self.comps[1].mul_factors(factors),
                self.comps[2].mul_factors(factors),
            ],
        }
    }

    pub fn bits_eq(&self, other: &VectorField) -> bool {
        self.comps.iter().zip(&other.comps).all(|(a, b)| a.bits_eq(b))
    }
}

/// Real samples on the `nx × ny × (nz+1)` collocation grid.
#[derive(Debug, Clone)]
pub struct PhysScalar {
    grid: Grid,
    values: Vec<f64>,
}

impl PhysScalar {
    pub fn zeros(grid: Grid) -> Self {
        PhysScalar {
            grid,
            values: vec![0.0; grid.phys_len()],
        }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.phys_len() {
            return Err(Error::ShapeMismatch {
                expected: grid.phys_len(),
                got: values.len(),
            });
        }
        Ok(PhysScalar { grid, values })
    }

    /// Sample an `f(x, y, z)` on the collocation points.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let mut values = vec![0.0; grid.phys_len()];
        for i in 0..grid.nx() {
            let x = i as f64 / grid.nx() as f64;
            for j in 0..grid.ny() {
                let y = j as f64 / grid.ny() as f64;
                for k in 0..grid.z_levels() {
                    let z = k as f64 / grid.nz() as f64;
                    values[grid.phys_idx(i, j, k)] = f(x, y, z);
                }
            }
        }
        PhysScalar { grid, values }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.grid.phys_idx(i, j, k)]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }
}
