//! Pseudo-spectral solver and verification lab for the 3-D incompressible
//! viscous and ideal MHD equations on `[0,1]²` (periodic in x, y) × `(0,1)`
//! with slip-without-friction walls at `z = 0` and `z = 1`.
//!
//! Fields are stored as Fourier modes in x, y and half-range cosine/sine
//! series in z. Tangential components of velocity-like fields carry cosine
//! (even) series and the normal component a sine (odd) series, so the wall
//! conditions `u·n = 0`, `∂_n u_τ = 0` - and every higher-order condition of
//! the same alternating pattern - hold exactly as parity constraints rather
//! than being enforced numerically.
//!
//! The crate is organised along the pipeline it verifies:
//!
//! * [`fields`] - grids, parity-typed spectral fields, transforms, Sobolev
//!   norms, wall traces, trace-class membership residuals, snapshot files.
//! * [`operators`] - exact-in-basis curl/div/grad/Laplacian, Leray
//!   projection, dealiased advection and the curl commutator
//!   `F(Du,Dv) = ∇×((u·∇)v) − (u·∇)(∇×v)`.
//! * [`corrector`] - the constructive boundary layer: a moment-vanishing
//!   profile, iterated integrals, the divergence-free lift, an elliptic
//!   solve for its vector potential, and layer-norm scaling measurements.
//! * [`solver`] - RK4 time stepping with exact integrating-factor diffusion,
//!   energy/enstrophy/membership diagnostics and a blow-up guard.
//! * [`harness`] - config parsing, vanishing-viscosity convergence studies,
//!   log-log rate fitting, corrector scaling studies and identity batches.

pub mod corrector;
pub mod fields;
pub mod harness;
pub mod operators;
pub mod solver;

mod error;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
