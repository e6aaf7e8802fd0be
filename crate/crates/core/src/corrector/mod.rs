//! Constructive boundary layer.
//!
//! Given tangential wall data `h_τ` on both walls and a layer parameter
//! `ε`, build
//!
//! * a profile `φ` with `φ(0) = 1`, `φ(1) = φ'(1) = 0` and vanishing
//!   moments `∫₀¹ t^j φ dt = 0` for `j = 0..=2k` - one moment beyond the
//!   minimum needed for the tangential components, so that the normal
//!   component of the curl field also vanishes identically between the
//!   layers;
//! * the divergence-free lift `ψ^ε` with `ψ_τ = h_τ(0)φ^ε(z) +
//!   h_τ(1)φ^ε(1-z)`, `φ^ε(z) = φ(z/√ε)`, and `ψ₃ = -∫₀^z ∇_τ·ψ_τ`;
//! * `χ^ε = F^{2k}(ψ^ε)` where `F` is the antiderivative from 0, so that
//!   `∂_n^{2k} χ_τ = h_τ` and `∂_n^{2k} χ_n = 0` on the walls and `χ ≡ 0`
//!   for `√ε ≤ z ≤ 1-√ε`.
//!
//! Everything is stored factorized: per 2-D Fourier mode of the wall data,
//! a complex weight for the near-wall piece and one for the far-wall piece,
//! times one shared family of exact antiderivatives/derivatives of `φ`
//! ("levels"). The profile and its whole integral chain are solved in exact
//! i128 rational arithmetic, so the piecewise-polynomial z-representation
//! (breakpoints 0, √ε, 1-√ε, 1) has a middle piece that is exactly zero,
//! and layer norms can be measured without aliasing error.

mod elliptic;
mod scaling;

pub use elliptic::{solve_corrector_elliptic, EllipticSolution, ZSeries, ZSeriesKind, ZSeriesVector};
pub use scaling::{layer_lp_norm, measure_scaling, ScalingFit, ScalingPoint, ScalingQuantity};

use crate::fields::{analyze_plane, synthesize_plane, Face, TAU};
use crate::{Error, Result};
use rustfft::num_complex::Complex64;
use std::sync::Arc;

// ---------------------------------------------------------------------
// exact rational arithmetic (small systems only)
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Rat {
    n: i128,
    d: i128,
}

fn gcd(mut a: i128, mut b: i128) -> i128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a.abs().max(1)
}

impl Rat {
    const ZERO: Rat = Rat { n: 0, d: 1 };
    const ONE: Rat = Rat { n: 1, d: 1 };

    fn new(n: i128, d: i128) -> Option<Rat> {
        if d == 0 {
            return None;
        }
        let s = if d < 0 { -1 } else { 1 };
        let g = gcd(n, d);
        Some(Rat {
            n: s * n / g,
            d: s * d / g,
        })
    }

    fn add(self, o: Rat) -> Option<Rat> {
        let n = self.n.checked_mul(o.d)?.checked_add(o.n.checked_mul(self.d)?)?;
        Rat::new(n, self.d.checked_mul(o.d)?)
    }

    fn sub(self, o: Rat) -> Option<Rat> {
        self.add(Rat { n: -o.n, d: o.d })
    }

    fn mul(self, o: Rat) -> Option<Rat> {
        // cross-reduce first to keep magnitudes down
        let g1 = gcd(self.n, o.d);
        let g2 = gcd(o.n, self.d);
        Rat::new(
            (self.n / g1).checked_mul(o.n / g2)?,
            (self.d / g2).checked_mul(o.d / g1)?,
        )
    }

    fn div(self, o: Rat) -> Option<Rat> {
        if o.n == 0 {
            return None;
        }
        self.mul(Rat { n: o.d, d: o.n })
    }

    fn is_zero(self) -> bool {
        self.n == 0
    }

    fn to_f64(self) -> f64 {
        self.n as f64 / self.d as f64
    }
}

fn overflow() -> Error {
    Error::Singular("rational arithmetic overflow in profile construction".into())
}

/// Exact Gaussian elimination with partial (nonzero) pivoting.
fn solve_exact(mut a: Vec<Vec<Rat>>, mut b: Vec<Rat>) -> Result<Vec<Rat>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .find(|&r| !a[r][col].is_zero())
            .ok_or_else(|| Error::Singular("profile system is singular".into()))?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let p = a[col][col];
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].div(p).ok_or_else(overflow)?;
            for c in col..n {
                let t = f.mul(a[col][c]).ok_or_else(overflow)?;
                a[r][c] = a[r][c].sub(t).ok_or_else(overflow)?;
            }
            let t = f.mul(b[col]).ok_or_else(overflow)?;
            b[r] = b[r].sub(t).ok_or_else(overflow)?;
        }
    }
    (0..n)
        .map(|i| b[i].div(a[i][i]).ok_or_else(overflow))
        .collect()
}

fn rat_antiderivative(p: &[Rat]) -> Result<Vec<Rat>> {
    let mut out = vec![Rat::ZERO; p.len() + 1];
    for (i, c) in p.iter().enumerate() {
        out[i + 1] = c.div(Rat { n: i as i128 + 1, d: 1 }).ok_or_else(overflow)?;
    }
    Ok(out)
}

fn rat_derivative(p: &[Rat]) -> Vec<Rat> {
    if p.len() <= 1 {
        return vec![Rat::ZERO];
    }
    (1..p.len())
        .map(|i| Rat {
            n: p[i].n * i as i128,
            d: p[i].d,
        })
        .collect()
}

fn rat_eval_at_1(p: &[Rat]) -> Result<Rat> {
    let mut acc = Rat::ZERO;
    for c in p {
        acc = acc.add(*c).ok_or_else(overflow)?;
    }
    Ok(acc)
}

fn solve_profile_exact(k: usize) -> Result<Vec<Rat>> {
    if k < 1 {
        return Err(Error::Validation {
            key: "corrector.k".into(),
            msg: "layer order k must be at least 1".into(),
        });
    }
    // unknowns: coefficients of degree 2k+3; conditions: p(0)=1, p(1)=0,
    // p'(1)=0, raw moments ∫ t^j p = 0 for j = 0..=2k
    let n = 2 * k + 4;
    let mut a = vec![vec![Rat::ZERO; n]; n];
    let mut b = vec![Rat::ZERO; n];
    a[0][0] = Rat::ONE;
    b[0] = Rat::ONE;
    for i in 0..n {
        a[1][i] = Rat::ONE;
        a[2][i] = Rat { n: i as i128, d: 1 };
    }
    for j in 0..=2 * k {
        for i in 0..n {
            a[3 + j][i] = Rat {
                n: 1,
                d: (i + j + 1) as i128,
            };
        }
    }
    solve_exact(a, b)
}

// ---------------------------------------------------------------------
// profile and iterated integrals
// ---------------------------------------------------------------------

/// Layer profile: a single polynomial piece on `[0,1]`, zero beyond.
#[derive(Debug, Clone)]
pub struct Profile {
    k: usize,
    coeffs: Vec<f64>,
}

impl Profile {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, z: f64) -> f64 {
        if z >= 1.0 {
            return 0.0;
        }
        horner(&self.coeffs, z)
    }
}

fn horner(c: &[f64], t: f64) -> f64 {
    let mut acc = 0.0;
    for &ci in c.iter().rev() {
        acc = acc * t + ci;
    }
    acc
}

/// Solve the profile constraints exactly and round to f64 (the solutions
/// are integers for k ≤ 4).
pub fn build_profile(k: usize) -> Result<Profile> {
    let exact = solve_profile_exact(k)?;
    Ok(Profile {
        k,
        coeffs: exact.into_iter().map(Rat::to_f64).collect(),
    })
}

/// `F^j(φ)`: the j-fold antiderivative from 0 of a profile. For
/// `z ≥ 1` the value is a polynomial in the moments of `φ`, identically
/// zero while `j ≤ 2k+1`.
pub struct IteratedIntegral {
    j: usize,
    poly: Vec<f64>,
    tail: Vec<f64>,
}

impl IteratedIntegral {
    pub fn order(&self) -> usize {
        self.j
    }

    pub fn eval(&self, z: f64) -> f64 {
        if z < 1.0 {
            horner(&self.poly, z)
        } else {
            horner(&self.tail, z)
        }
    }
}

pub fn iterated_integral(profile: &Profile, j: usize) -> Result<IteratedIntegral> {
    let exact = solve_profile_exact(profile.k)?;
    let mut cur = exact;
    let mut tail = vec![Rat::ZERO];
    for _ in 0..j {
        cur = rat_antiderivative(&cur)?;
        let mut nt = rat_antiderivative(&tail)?;
        // continuity at z = 1: tail(1) must equal the in-piece value there
        let shift = rat_eval_at_1(&cur)?.sub(rat_eval_at_1(&nt)?).ok_or_else(overflow)?;
        nt[0] = nt[0].add(shift).ok_or_else(overflow)?;
        tail = nt;
    }
    Ok(IteratedIntegral {
        j,
        poly: cur.iter().map(|r| r.to_f64()).collect(),
        tail: tail.iter().map(|r| r.to_f64()).collect(),
    })
}

// ---------------------------------------------------------------------
// the shared level chain
// ---------------------------------------------------------------------

/// Exact antiderivative/derivative family of one profile.
///
/// Level `ℓ ≥ 0` is `F^ℓ(φ)` restricted to `[0,1]`; level `ℓ < 0` is the
/// `|ℓ|`-th derivative. Values at 1 are exactly zero for `1 ≤ ℓ ≤ 2k+1`
/// (the moment conditions), which is what keeps every layer quantity
/// identically zero between the walls.
#[derive(Debug)]
pub struct ChainTable {
    k: usize,
    min_level: i32,
    polys: Vec<Vec<f64>>,
    at0: Vec<f64>,
}

impl ChainTable {
    pub fn new(k: usize) -> Result<Arc<ChainTable>> {
        let base = solve_profile_exact(k)?;
        let min_level = -4i32;
        let max_level = (2 * k + 1) as i32;
        let mut by_level: Vec<Vec<Rat>> = Vec::new();
        let mut cur = base.clone();
        for _ in 0..(-min_level) {
            cur = rat_derivative(&cur);
            by_level.insert(0, cur.clone());
        }
        by_level.push(base.clone());
        let mut cur = base;
        for l in 1..=max_level {
            cur = rat_antiderivative(&cur)?;
            let v1 = rat_eval_at_1(&cur)?;
            debug_assert!(v1.is_zero(), "chain endpoint must vanish at level {l}");
            if !v1.is_zero() {
                return Err(Error::Singular(format!(
                    "profile moments do not close the chain at level {l}"
                )));
            }
            by_level.push(cur.clone());
        }
        // reorder: index 0 .. corresponds to min_level..=max_level
        let mut polys = Vec::with_capacity(by_level.len());
        let mut at0 = Vec::with_capacity(by_level.len());
        for p in by_level {
            at0.push(p.first().copied().unwrap_or(Rat::ZERO).to_f64());
            polys.push(p.into_iter().map(|r| r.to_f64()).collect());
        }
        Ok(Arc::new(ChainTable {
            k,
            min_level,
            polys,
            at0,
        }))
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn min_level(&self) -> i32 {
        self.min_level
    }

    pub fn max_level(&self) -> i32 {
        (2 * self.k + 1) as i32
    }

    fn idx(&self, level: i32) -> usize {
        assert!(
            level >= self.min_level && level <= self.max_level(),
            "chain level {level} out of range"
        );
        (level - self.min_level) as usize
    }

    /// `C_ℓ(t)` for `t ∈ [0,1]`; zero beyond for derivative levels and by
    /// the moment conditions for antiderivative levels `ℓ ≤ 2k+1`.
    pub fn eval(&self, level: i32, t: f64) -> f64 {
        if !(0.0..1.0).contains(&t) {
            return 0.0;
        }
        horner(&self.polys[self.idx(level)], t)
    }

    pub fn value_at_0(&self, level: i32) -> f64 {
        self.at0[self.idx(level)]
    }

    pub fn poly(&self, level: i32) -> &[f64] {
        &self.polys[self.idx(level)]
    }
}

// ---------------------------------------------------------------------
// wall data and layer fields
// ---------------------------------------------------------------------

/// Tangential wall data samples on both walls: `nx × ny` 2-vectors each.
#[derive(Debug, Clone)]
pub struct BoundaryData {
    nx: usize,
    ny: usize,
    pub face0: Vec<[f64; 2]>,
    pub face1: Vec<[f64; 2]>,
}

impl BoundaryData {
    pub fn new(nx: usize, ny: usize, face0: Vec<[f64; 2]>, face1: Vec<[f64; 2]>) -> Result<Self> {
        if face0.len() != nx * ny || face1.len() != nx * ny {
            return Err(Error::ShapeMismatch {
                expected: nx * ny,
                got: face0.len().min(face1.len()),
            });
        }
        Ok(BoundaryData { nx, ny, face0, face1 })
    }

    pub fn from_fn(
        nx: usize,
        ny: usize,
        f0: impl Fn(f64, f64) -> [f64; 2],
        f1: impl Fn(f64, f64) -> [f64; 2],
    ) -> Self {
        let sample = |f: &dyn Fn(f64, f64) -> [f64; 2]| {
            let mut out = Vec::with_capacity(nx * ny);
            for i in 0..nx {
                for j in 0..ny {
                    out.push(f(i as f64 / nx as f64, j as f64 / ny as f64));
                }
            }
            out
        };
        BoundaryData {
            nx,
            ny,
            face0: sample(&f0),
            face1: sample(&f1),
        }
    }

    pub fn constant(nx: usize, ny: usize, h0: [f64; 2], h1: [f64; 2]) -> Self {
        BoundaryData {
            nx,
            ny,
            face0: vec![h0; nx * ny],
            face1: vec![h1; nx * ny],
        }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn scale(&self, a: f64) -> Self {
        let s = |v: &Vec<[f64; 2]>| v.iter().map(|t| [a * t[0], a * t[1]]).collect();
        BoundaryData {
            nx: self.nx,
            ny: self.ny,
            face0: s(&self.face0),
            face1: s(&self.face1),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.face0
            .iter()
            .chain(&self.face1)
            .flat_map(|t| t.iter())
            .fold(0.0f64, |a, v| a.max(v.abs()))
    }
}

/// Band-limited wall data with nonzero tangential divergence on both walls,
/// used as the default for scaling studies.
pub fn default_boundary_data(nx: usize, ny: usize) -> BoundaryData {
    BoundaryData::from_fn(
        nx,
        ny,
        |x, y| {
            [
                (TAU * x).sin() + 0.4 * (TAU * y).cos(),
                (TAU * x).cos() + 0.3 * (TAU * y).sin(),
            ]
        },
        |x, y| {
            [
                0.7 * (TAU * x).cos() - 0.2 * (TAU * y).sin(),
                0.5 * (TAU * x).sin() + 0.6 * (TAU * y).cos(),
            ]
        },
    )
}

/// One scalar layer quantity: per 2-D Fourier mode, a complex weight on the
/// near-wall profile and one on the far-wall profile at a common chain
/// level. The middle piece is identically zero.
#[derive(Debug, Clone)]
pub struct LayerScalar {
    nx: usize,
    ny: usize,
    eps: f64,
    level: i32,
    chain: Arc<ChainTable>,
    w_near: Vec<Complex64>,
    w_far: Vec<Complex64>,
}

impl LayerScalar {
    fn zero_weights(nx: usize, ny: usize) -> Vec<Complex64> {
        vec![Complex64::new(0.0, 0.0); (nx / 2 + 1) * ny]
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn level(&self) -> i32 {
        self.level
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn chain(&self) -> &Arc<ChainTable> {
        &self.chain
    }

    pub fn weights(&self) -> (&[Complex64], &[Complex64]) {
        (&self.w_near, &self.w_far)
    }

    fn ky_freq(&self, kyi: usize) -> i64 {
        if kyi <= self.ny / 2 {
            kyi as i64
        } else {
            kyi as i64 - self.ny as i64
        }
    }

    /// Antiderivative from 0 in z. Valid while the target level keeps the
    /// vanishing-endpoint property (`level + 1 ≤ 2k + 1`).
    pub fn integrate(&self) -> LayerScalar {
        assert!(
            self.level + 1 <= self.chain.max_level(),
            "integration beyond the closed chain"
        );
        LayerScalar {
            level: self.level + 1,
            ..self.clone()
        }
    }

    /// z-derivative.
    pub fn d_z(&self) -> LayerScalar {
        LayerScalar {
            level: self.level - 1,
            ..self.clone()
        }
    }

    pub fn d_x(&self) -> LayerScalar {
        let mut out = self.clone();
        for kx in 0..=self.nx / 2 {
            let f = Complex64::new(0.0, TAU * kx as f64);
            for kyi in 0..self.ny {
                let idx = kx * self.ny + kyi;
                out.w_near[idx] *= f;
                out.w_far[idx] *= f;
            }
        }
        out
    }

    pub fn d_y(&self) -> LayerScalar {
        let mut out = self.clone();
        for kx in 0..=self.nx / 2 {
            for kyi in 0..self.ny {
                let f = Complex64::new(0.0, TAU * self.ky_freq(kyi) as f64);
                let idx = kx * self.ny + kyi;
                out.w_near[idx] *= f;
                out.w_far[idx] *= f;
            }
        }
        out
    }

    pub fn scale(&self, a: f64) -> LayerScalar {
        let mut out = self.clone();
        for w in out.w_near.iter_mut().chain(out.w_far.iter_mut()) {
            *w *= a;
        }
        out
    }

    /// Weighted sum of equal-level layer scalars.
    pub fn lin(terms: &[(&LayerScalar, f64)]) -> LayerScalar {
        let first = terms[0].0;
        let mut out = LayerScalar {
            w_near: Self::zero_weights(first.nx, first.ny),
            w_far: Self::zero_weights(first.nx, first.ny),
            ..first.clone()
        };
        for (f, a) in terms {
            assert_eq!(f.level, first.level, "layer sums need equal levels");
            for (o, w) in out.w_near.iter_mut().zip(&f.w_near) {
                *o += *a * w;
            }
            for (o, w) in out.w_far.iter_mut().zip(&f.w_far) {
                *o += *a * w;
            }
        }
        out
    }

    /// Plane coefficients of the wall value.
    pub fn wall_coeffs(&self, face: Face) -> Vec<Complex64> {
        let c0 = self.chain.value_at_0(self.level);
        let amp = self.eps.sqrt().powi(self.level) * c0;
        match face {
            Face::Z0 => self.w_near.iter().map(|w| w * amp).collect(),
            Face::Z1 => {
                let sign = if self.level.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                self.w_far.iter().map(|w| w * (sign * amp)).collect()
            }
        }
    }

    /// Max wall magnitude.
    pub fn wall_max(&self, face: Face) -> f64 {
        let coeffs = self.wall_coeffs(face);
        synthesize_plane(self.nx, self.ny, &coeffs)
            .iter()
            .fold(0.0f64, |a, v| a.max(v.abs()))
    }

    /// Real near/far weight planes (`nx × ny` each).
    pub fn physical_weights(&self) -> (Vec<f64>, Vec<f64>) {
        (
            synthesize_plane(self.nx, self.ny, &self.w_near),
            synthesize_plane(self.nx, self.ny, &self.w_far),
        )
    }

    /// Scaled profile value multiplying the near (or far) weight at height
    /// z. Zero outside the respective layer and, for antiderivative levels,
    /// exactly zero between the layers by the moment conditions.
    pub fn profile_value(&self, near: bool, z: f64) -> f64 {
        let sq = self.eps.sqrt();
        let amp = sq.powi(self.level);
        if near {
            if z >= sq {
                return 0.0;
            }
            amp * self.chain.eval(self.level, z / sq)
        } else {
            if z <= 1.0 - sq {
                return 0.0;
            }
            let sign = if self.level.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            sign * amp * self.chain.eval(self.level, (1.0 - z) / sq)
        }
    }

    /// Coarse upper-scale estimate: max weight magnitude times the profile
    /// peak, sampled.
    pub fn sup_estimate(&self) -> f64 {
        let (wn, wf) = self.physical_weights();
        let mn = wn.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let mf = wf.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let amp = self.eps.sqrt().powi(self.level);
        let mut peak = 0.0f64;
        for i in 0..=64 {
            let t = i as f64 / 64.0;
            peak = peak.max(self.chain.eval(self.level, t).abs());
        }
        (mn.max(mf)) * amp * peak
    }
}

/// Three layer components sharing one wall-data grid.
#[derive(Debug, Clone)]
pub struct LayerVector {
    pub comps: [LayerScalar; 3],
}

impl LayerVector {
    /// Max divergence magnitude over sampled layer heights, relative to the
    /// field's scale.
    pub fn divergence_residual(&self) -> f64 {
        let dx = self.comps[0].d_x();
        let dy = self.comps[1].d_y();
        let dz = self.comps[2].d_z();
        let div = LayerScalar::lin(&[(&dx, 1.0), (&dy, 1.0), (&dz, 1.0)]);
        let scale = self
            .comps
            .iter()
            .map(|c| c.sup_estimate())
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        // the divergence sits one level below the components; weigh
        // accordingly so the residual is relative to the gradient scale
        let dscale = scale / self.comps[0].eps().sqrt();
        div.sup_estimate() / dscale.max(f64::MIN_POSITIVE)
    }

    pub fn sup_estimate(&self) -> f64 {
        self.comps.iter().map(|c| c.sup_estimate()).fold(0.0, f64::max)
    }
}

// ---------------------------------------------------------------------
// the bundle
// ---------------------------------------------------------------------

/// The assembled boundary layer: lift `ψ^ε` and curl field `χ^ε`, plus the
/// wall-data modes they were built from.
#[derive(Debug)]
pub struct CorrectorBundle {
    pub eps: f64,
    pub k: usize,
    pub profile: Profile,
    chain: Arc<ChainTable>,
    hhat0: Vec<[Complex64; 2]>,
    hhat1: Vec<[Complex64; 2]>,
    pub psi: LayerVector,
    pub chi: LayerVector,
}

/// Build `ψ^ε` and `χ^ε = F^{2k}(ψ^ε)` from wall data.
pub fn build_boundary_layer(h: &BoundaryData, eps: f64, k: usize) -> Result<CorrectorBundle> {
    if !(eps > 0.0 && eps < 0.25) {
        return Err(Error::LayerOverlap { eps });
    }
    let profile = build_profile(k)?;
    let chain = ChainTable::new(k)?;
    let (nx, ny) = (h.nx(), h.ny());
    let split = |v: &Vec<[f64; 2]>, c: usize| -> Vec<f64> { v.iter().map(|t| t[c]).collect() };
    let hhat = |v: &Vec<[f64; 2]>| -> Vec<[Complex64; 2]> {
        let a = analyze_plane(nx, ny, &split(v, 0));
        let b = analyze_plane(nx, ny, &split(v, 1));
        a.into_iter().zip(b).map(|(p, q)| [p, q]).collect()
    };
    let hhat0 = hhat(&h.face0);
    let hhat1 = hhat(&h.face1);

    let base = |c: usize| -> LayerScalar {
        LayerScalar {
            nx,
            ny,
            eps,
            level: 0,
            chain: Arc::clone(&chain),
            w_near: hhat0.iter().map(|t| t[c]).collect(),
            w_far: hhat1.iter().map(|t| t[c]).collect(),
        }
    };
    let psi1 = base(0);
    let psi2 = base(1);
    // ψ₃ = -∫₀^z ∇_τ·ψ_τ, divergence-free by construction
    let div_tau = LayerScalar::lin(&[(&psi1.d_x(), 1.0), (&psi2.d_y(), 1.0)]);
    let psi3 = div_tau.integrate().scale(-1.0);
    let psi = LayerVector {
        comps: [psi1, psi2, psi3],
    };
    let mut chi_comps = psi.comps.clone();
    for _ in 0..2 * k {
        for c in &mut chi_comps {
            *c = c.integrate();
        }
    }
    let chi = LayerVector { comps: chi_comps };
    Ok(CorrectorBundle {
        eps,
        k,
        profile,
        chain,
        hhat0,
        hhat1,
        psi,
        chi,
    })
}

impl CorrectorBundle {
    pub fn chain(&self) -> &Arc<ChainTable> {
        &self.chain
    }

    pub fn wall_modes(&self) -> (&[[Complex64; 2]], &[[Complex64; 2]]) {
        (&self.hhat0, &self.hhat1)
    }

    /// Max mismatch of `∂_n^{2k} χ_τ` against the wall data, over both
    /// walls, relative to the data's magnitude.
    pub fn chi_tangential_trace_residual(&self) -> f64 {
        let scale = self
            .hhat0
            .iter()
            .chain(&self.hhat1)
            .flat_map(|t| t.iter())
            .fold(0.0f64, |a, c| a.max(c.norm()))
            .max(f64::MIN_POSITIVE);
        let mut worst = 0.0f64;
        for c in 0..2 {
            let mut d = self.chi.comps[c].clone();
            for _ in 0..2 * self.k {
                d = d.d_z();
            }
            for face in Face::BOTH {
                let got = d.wall_coeffs(face);
                let want: Vec<Complex64> = match face {
                    Face::Z0 => self.hhat0.iter().map(|t| t[c]).collect(),
                    Face::Z1 => self.hhat1.iter().map(|t| t[c]).collect(),
                };
                for (g, w) in got.iter().zip(&want) {
                    worst = worst.max((g - w).norm());
                }
            }
        }
        worst / scale
    }

    /// Max wall magnitude of `∂_n^{2k} χ_n` (must vanish), relative to the
    /// wall-data magnitude.
    pub fn chi_normal_trace_residual(&self) -> f64 {
        let scale = self
            .hhat0
            .iter()
            .chain(&self.hhat1)
            .flat_map(|t| t.iter())
            .fold(0.0f64, |a, c| a.max(c.norm()))
            .max(f64::MIN_POSITIVE);
        let mut d = self.chi.comps[2].clone();
        for _ in 0..2 * self.k {
            d = d.d_z();
        }
        let worst = Face::BOTH
            .into_iter()
            .map(|f| d.wall_max(f))
            .fold(0.0, f64::max);
        worst / scale
    }
}
