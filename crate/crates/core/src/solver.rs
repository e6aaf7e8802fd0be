//! Time integration of the viscous and ideal MHD systems in velocity form.
//!
//! The pressure never appears: the Leray projection removes the gradient
//! part of the momentum nonlinearity per mode. Diffusion is applied as an
//! exact per-mode integrating factor inside a classical RK4 sweep, so
//! `ν → 0` degenerates continuously to the ideal stepper along the
//! identical nonlinear path. Every operation is parity-closed, so the wall
//! conditions survive time stepping exactly; the projection after each
//! step only cleans rounding-level divergence.

use crate::fields::{
    l2_inner, l2_norm, random_field, read_snapshot, sobolev_norm, vk_membership_residual, Grid,
    VectorField, VectorKind, Workspace, TAU,
};
use crate::operators::{
    advect_with_fraction, curl, curl_commutator, dealias, laplacian, leray_project, DealiasPolicy,
};
use crate::{Error, Result};
use rustfft::num_complex::Complex64;
use std::f64::consts::PI;
use std::path::PathBuf;

/// Physical and numerical parameters of one run.
#[derive(Debug, Clone)]
pub struct PhysParams {
    pub nu: f64,
    pub mu: f64,
    pub t_final: f64,
    pub dt: f64,
    pub dealias: DealiasPolicy,
    /// Sobolev orders recorded in the diagnostics.
    pub norm_track: Vec<usize>,
    /// Advective CFL bound on `max|u|·N·Δt`.
    pub cfl_safety: f64,
    /// Blow-up guard: halt when the top tracked norm exceeds this multiple
    /// of its initial value.
    pub guard_threshold: f64,
}

impl PhysParams {
    pub fn new(nu: f64, mu: f64, t_final: f64, dt: f64) -> Self {
        PhysParams {
            nu,
            mu,
            t_final,
            dt,
            dealias: DealiasPolicy::default(),
            norm_track: vec![1, 2, 3],
            cfl_safety: 0.5,
            guard_threshold: 1e3,
        }
    }

    pub fn is_ideal(&self) -> bool {
        self.nu == 0.0 && self.mu == 0.0
    }
}

/// One snapshot of either system: time plus the velocity/magnetic pair.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub t: f64,
    pub velocity: VectorField,
    pub magnetic: VectorField,
}

impl FlowState {
    pub fn new(t: f64, velocity: VectorField, magnetic: VectorField) -> Self {
        debug_assert_eq!(velocity.kind(), Some(VectorKind::Velocity));
        debug_assert_eq!(magnetic.kind(), Some(VectorKind::Velocity));
        FlowState { t, velocity, magnetic }
    }

    pub fn grid(&self) -> Grid {
        self.velocity.grid()
    }

    /// Worst trace-class residual of the pair (class V¹).
    pub fn invariant_residual(&self, ws: &mut Workspace) -> f64 {
        vk_membership_residual(&self.velocity, 1, ws)
            .max(vk_membership_residual(&self.magnetic, 1, ws))
    }
}

/// One right-hand-side evaluation.
pub struct RhsEval {
    pub du: VectorField,
    pub dh: VectorField,
    /// `max|u₁|·nx + max|u₂|·ny + max|u₃|·2nz`; multiply by Δt for the
    /// CFL number.
    pub cfl_rate: f64,
    /// Largest truncated-energy fraction across the four products.
    pub dealias_fraction: f64,
}

/// Nonlinear tendencies only: `P[-(u·∇)u + (H·∇)H]` and
/// `-(u·∇)H + (H·∇)u`. This is what the RK4 stages see; the diffusion is
/// applied exactly by the integrating factor.
fn rhs_nonlinear(state: &FlowState, params: &PhysParams, ws: &mut Workspace) -> Result<RhsEval> {
    let grid = state.grid();
    let u = &state.velocity;
    let b = &state.magnetic;
    let policy = params.dealias;
    let (adv_uu, f1) = advect_with_fraction(u, u, policy, ws)?;
    let (adv_bb, f2) = advect_with_fraction(b, b, policy, ws)?;
    let (adv_ub, f3) = advect_with_fraction(u, b, policy, ws)?;
    let (adv_bu, f4) = advect_with_fraction(b, u, policy, ws)?;
    let du = leray_project(&adv_bb.sub(&adv_uu));
    let dh = adv_bu.sub(&adv_ub);
    let cfl_rate = {
        let mx = ws.to_physical(u.comp(0)).max_abs() * grid.nx() as f64;
        let my = ws.to_physical(u.comp(1)).max_abs() * grid.ny() as f64;
        let mz = ws.to_physical(u.comp(2)).max_abs() * grid.nz_ext() as f64;
        mx + my + mz
    };
    Ok(RhsEval {
        du,
        dh,
        cfl_rate,
        dealias_fraction: f1.max(f2).max(f3).max(f4),
    })
}

/// `du/dt = P[-(u·∇)u + (H·∇)H] + νΔu`,
/// `dH/dt = -(u·∇)H + (H·∇)u + μΔH` (divergence-free without projection).
pub fn rhs_viscous(state: &FlowState, params: &PhysParams, ws: &mut Workspace) -> Result<RhsEval> {
    let mut rhs = rhs_nonlinear(state, params, ws)?;
    if params.nu != 0.0 {
        rhs.du.axpy(params.nu, &laplacian(&state.velocity));
    }
    if params.mu != 0.0 {
        rhs.dh.axpy(params.mu, &laplacian(&state.magnetic));
    }
    Ok(rhs)
}

/// `⟨u, du⟩ + ⟨H, dH⟩ + ν‖ω‖² + μ‖ζ‖²` relative to the size of its terms;
/// zero is the discrete energy law.
pub fn energy_balance_residual(state: &FlowState, rhs: &RhsEval, params: &PhysParams) -> f64 {
    let omega = curl(&state.velocity);
    let zeta = curl(&state.magnetic);
    let drain = params.nu * l2_inner(&omega, &omega) + params.mu * l2_inner(&zeta, &zeta);
    let flux = l2_inner(&state.velocity, &rhs.du) + l2_inner(&state.magnetic, &rhs.dh);
    let scale = drain.abs()
        + l2_norm(&state.velocity) * l2_norm(&rhs.du)
        + l2_norm(&state.magnetic) * l2_norm(&rhs.dh);
    if scale == 0.0 {
        return 0.0;
    }
    (flux + drain).abs() / scale
}

fn diffusion_factors(grid: Grid, coef: f64, dt_half: f64) -> Vec<f64> {
    let mut out = vec![1.0; grid.spec_len()];
    if coef == 0.0 {
        return out;
    }
    for kx in 0..grid.kx_len() {
        let x = (TAU * kx as f64).powi(2);
        for kyi in 0..grid.ny() {
            let y = (TAU * grid.ky_freq(kyi) as f64).powi(2);
            for m in 0..grid.m_len() {
                let z = (PI * m as f64).powi(2);
                out[grid.spec_idx(kx, kyi, m)] = (-coef * (x + y + z) * dt_half).exp();
            }
        }
    }
    out
}

/// Info from one accepted step.
#[derive(Debug, Clone, Copy)]
pub struct StepInfo {
    pub cfl: f64,
    pub dealias_fraction: f64,
}

/// Fixed-step integrator: RK4 on the nonlinear terms with exact
/// integrating-factor diffusion per mode.
pub struct Stepper {
    params: PhysParams,
    half_u: Vec<f64>,
    full_u: Vec<f64>,
    half_b: Vec<f64>,
    full_b: Vec<f64>,
    pub ws: Workspace,
}

impl Stepper {
    pub fn new(grid: Grid, params: PhysParams) -> Self {
        let half_u = diffusion_factors(grid, params.nu, params.dt / 2.0);
        let half_b = diffusion_factors(grid, params.mu, params.dt / 2.0);
        let full_u = half_u.iter().map(|f| f * f).collect();
        let full_b = half_b.iter().map(|f| f * f).collect();
        Stepper {
            params,
            half_u,
            full_u,
            half_b,
            full_b,
            ws: Workspace::new(grid),
        }
    }

    pub fn ideal(grid: Grid, t_final: f64, dt: f64) -> Self {
        Stepper::new(grid, PhysParams::new(0.0, 0.0, t_final, dt))
    }

    pub fn params(&self) -> &PhysParams {
        &self.params
    }

    /// Advance one Δt. Exact for pure diffusion; the ideal system runs the
    /// identical path with unit factors.
    pub fn step(&mut self, state: &FlowState) -> Result<(FlowState, StepInfo)> {
        let h = self.params.dt;
        let a = rhs_nonlinear(state, &self.params, &mut self.ws)?;
        let cfl = a.cfl_rate * h;
        if cfl > self.params.cfl_safety {
            return Err(Error::CflViolation {
                cfl,
                limit: self.params.cfl_safety,
                t: state.t,
            });
        }
        let mut frac = a.dealias_fraction;

        // stage 2 input: E(u + h/2·a)
        let mut su = state.velocity.clone();
        su.axpy(h / 2.0, &a.du);
        let mut sb = state.magnetic.clone();
        sb.axpy(h / 2.0, &a.dh);
        let s2 = FlowState {
            t: state.t + h / 2.0,
            velocity: su.mul_factors(&self.half_u),
            magnetic: sb.mul_factors(&self.half_b),
        };
        let b = rhs_nonlinear(&s2, &self.params, &mut self.ws)?;
        frac = frac.max(b.dealias_fraction);

        // stage 3 input: E·u + h/2·b
        let mut su = state.velocity.mul_factors(&self.half_u);
        su.axpy(h / 2.0, &b.du);
        let mut sb = state.magnetic.mul_factors(&self.half_b);
        sb.axpy(h / 2.0, &b.dh);
        let s3 = FlowState {
            t: state.t + h / 2.0,
            velocity: su,
            magnetic: sb,
        };
        let c = rhs_nonlinear(&s3, &self.params, &mut self.ws)?;
        frac = frac.max(c.dealias_fraction);

        // stage 4 input: E²·u + h·E·c
        let mut su = state.velocity.mul_factors(&self.full_u);
        su.axpy(h, &c.du.mul_factors(&self.half_u));
        let mut sb = state.magnetic.mul_factors(&self.full_b);
        sb.axpy(h, &c.dh.mul_factors(&self.half_b));
        let s4 = FlowState {
            t: state.t + h,
            velocity: su,
            magnetic: sb,
        };
        let d = rhs_nonlinear(&s4, &self.params, &mut self.ws)?;
        frac = frac.max(d.dealias_fraction);

        // u' = E²u + h/6 (E²a + 2E(b + c) + d)
        let mut u_new = state.velocity.mul_factors(&self.full_u);
        u_new.axpy(h / 6.0, &a.du.mul_factors(&self.full_u));
        u_new.axpy(h / 3.0, &b.du.add(&c.du).mul_factors(&self.half_u));
        u_new.axpy(h / 6.0, &d.du);
        let mut b_new = state.magnetic.mul_factors(&self.full_b);
        b_new.axpy(h / 6.0, &a.dh.mul_factors(&self.full_b));
        b_new.axpy(h / 3.0, &b.dh.add(&c.dh).mul_factors(&self.half_b));
        b_new.axpy(h / 6.0, &d.dh);

        let next = FlowState {
            t: state.t + h,
            velocity: leray_project(&u_new),
            magnetic: leray_project(&b_new),
        };
        Ok((next, StepInfo { cfl, dealias_fraction: frac }))
    }
}

/// L² residuals of the two curl equations, with `∂_t` taken from the
/// velocity-form right-hand side. The curl of the momentum equation must
/// reproduce the vorticity equation - an identity of the discretization,
/// so the residual is rounding-level.
pub fn vorticity_residual(
    state: &FlowState,
    params: &PhysParams,
    ws: &mut Workspace,
) -> Result<(f64, f64)> {
    let rhs = rhs_viscous(state, params, ws)?;
    vorticity_residual_from(state, &rhs, params, ws)
}

/// As [`vorticity_residual`], reusing an existing RHS evaluation.
pub fn vorticity_residual_from(
    state: &FlowState,
    rhs: &RhsEval,
    params: &PhysParams,
    ws: &mut Workspace,
) -> Result<(f64, f64)> {
    let dt_omega = curl(&rhs.du);
    let dt_zeta = curl(&rhs.dh);
    vorticity_residual_given_dt(state, &dt_omega, &dt_zeta, params, ws)
}

/// Residuals with caller-supplied `∂_t ω`, `∂_t ζ` (e.g. finite
/// differences of recorded states).
pub fn vorticity_residual_given_dt(
    state: &FlowState,
    dt_omega: &VectorField,
    dt_zeta: &VectorField,
    params: &PhysParams,
    ws: &mut Workspace,
) -> Result<(f64, f64)> {
    let policy = params.dealias;
    let u = &state.velocity;
    let b = &state.magnetic;
    let omega = curl(u);
    let zeta = curl(b);
    let adv = |a: &VectorField, v: &VectorField, ws: &mut Workspace| -> Result<VectorField> {
        Ok(advect_with_fraction(a, v, policy, ws)?.0)
    };
    let f_uu = curl_commutator(u, u, policy, ws)?;
    let f_bb = curl_commutator(b, b, policy, ws)?;
    let f_ub = curl_commutator(u, b, policy, ws)?;
    let f_bu = curl_commutator(b, u, policy, ws)?;

    // ∂_t ω - νΔω + (u·∇)ω - (H·∇)ζ + F(Du,Du) - F(DH,DH) = 0
    let mut r = dt_omega.clone();
    r.axpy(-params.nu, &laplacian(&omega));
    r.axpy(1.0, &adv(u, &omega, ws)?);
    r.axpy(-1.0, &adv(b, &zeta, ws)?);
    r.axpy(1.0, &f_uu);
    r.axpy(-1.0, &f_bb);
    let scale_o = l2_norm(dt_omega)
        + params.nu * l2_norm(&laplacian(&omega))
        + l2_norm(&f_uu)
        + l2_norm(&f_bb)
        + 1e-300;
    let r_omega = l2_norm(&r) / scale_o;

    // ∂_t ζ - μΔζ + (u·∇)ζ - (H·∇)ω + F(Du,DH) - F(DH,Du) = 0
    let mut r = dt_zeta.clone();
    r.axpy(-params.mu, &laplacian(&zeta));
    r.axpy(1.0, &adv(u, &zeta, ws)?);
    r.axpy(-1.0, &adv(b, &omega, ws)?);
    r.axpy(1.0, &f_ub);
    r.axpy(-1.0, &f_bu);
    let scale_z = l2_norm(dt_zeta)
        + params.mu * l2_norm(&laplacian(&zeta))
        + l2_norm(&f_ub)
        + l2_norm(&f_bu)
        + 1e-300;
    let r_zeta = l2_norm(&r) / scale_z;
    Ok((r_omega, r_zeta))
}

// ---------------------------------------------------------------------
// whole runs
// ---------------------------------------------------------------------

/// Initial-data library.
#[derive(Debug, Clone)]
pub enum InitKind {
    /// `u = (A cos(πz), 0, 0)`, `H = 0`: exact decaying-shear solution.
    Shear { amplitude: f64 },
    /// Independent divergence-free random fields for u and H.
    Random { seed: u64, amplitude: f64, decay: f64 },
    /// `u = H`, a steady state of both systems when ν = μ.
    Elsasser { seed: u64, amplitude: f64, decay: f64 },
    /// Restart from a snapshot file holding fields "u" and "H".
    SnapshotFile(PathBuf),
}

pub fn initial_state(grid: Grid, init: &InitKind) -> Result<FlowState> {
    match init {
        InitKind::Shear { amplitude } => {
            let mut u = VectorField::zeros(grid, VectorKind::Velocity);
            u.comp_mut(0).set(0, 0, 1, Complex64::new(*amplitude, 0.0));
            let b = VectorField::zeros(grid, VectorKind::Velocity);
            Ok(FlowState::new(0.0, u, b))
        }
        InitKind::Random { seed, amplitude, decay } => {
            let u = random_field(grid, VectorKind::Velocity, *decay, *seed).scale(*amplitude);
            let b = random_field(grid, VectorKind::Velocity, *decay, seed ^ 0x9e3779b97f4a7c15)
                .scale(*amplitude);
            Ok(FlowState::new(0.0, u, b))
        }
        InitKind::Elsasser { seed, amplitude, decay } => {
            let u = random_field(grid, VectorKind::Velocity, *decay, *seed).scale(*amplitude);
            Ok(FlowState::new(0.0, u.clone(), u))
        }
        InitKind::SnapshotFile(path) => {
            let snap = read_snapshot(path)?;
            let find = |name: &str| -> Result<VectorField> {
                snap.fields
                    .iter()
                    .find(|(n, _)| n == name)
                    .map(|(_, f)| f.clone())
                    .ok_or_else(|| Error::Snapshot(format!("snapshot lacks field `{name}`")))
            };
            let mut u = find("u")?;
            let mut b = find("H")?;
            if u.grid() != grid || b.grid() != grid {
                return Err(Error::Snapshot("snapshot grid differs from config grid".into()));
            }
            // restart data re-enters the dealiased band
            dealias(&mut u, DealiasPolicy::default());
            dealias(&mut b, DealiasPolicy::default());
            Ok(FlowState::new(snap.time, u, b))
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub grid: Grid,
    pub params: PhysParams,
    pub init: InitKind,
    pub record_interval: f64,
}

/// One diagnostics record.
#[derive(Debug, Clone)]
pub struct DiagRow {
    pub t: f64,
    pub e_kin: f64,
    pub e_mag: f64,
    pub enstrophy_u: f64,
    pub enstrophy_h: f64,
    /// `‖u‖_{H^s} + ‖H‖_{H^s}` per tracked s
    pub norms: Vec<f64>,
    pub res_omega: f64,
    pub res_zeta: f64,
    pub vk_u: f64,
    pub vk_h: f64,
    pub energy_balance: f64,
    pub cross_helicity: f64,
    pub cfl: f64,
    pub dealias_fraction: f64,
}

#[derive(Debug, Clone)]
pub struct Diagnostics {
    pub norm_track: Vec<usize>,
    pub rows: Vec<DiagRow>,
}

impl Diagnostics {
    pub fn header(&self) -> String {
        let mut cols = vec![
            "t".to_string(),
            "e_kin".into(),
            "e_mag".into(),
            "enstrophy_u".into(),
            "enstrophy_h".into(),
        ];
        for s in &self.norm_track {
            cols.push(format!("h{s}"));
        }
        cols.extend(
            [
                "res_omega",
                "res_zeta",
                "vk_u",
                "vk_h",
                "energy_balance",
                "cross_helicity",
                "cfl",
                "dealias_fraction",
            ]
            .map(String::from),
        );
        cols.join(",")
    }

    pub fn to_csv(&self) -> String {
        use crate::harness::fmt_f64 as f;
        let mut out = self.header();
        out.push('\n');
        for r in &self.rows {
            let mut cols = vec![f(r.t), f(r.e_kin), f(r.e_mag), f(r.enstrophy_u), f(r.enstrophy_h)];
            for n in &r.norms {
                cols.push(f(*n));
            }
            cols.extend([
                f(r.res_omega),
                f(r.res_zeta),
                f(r.vk_u),
                f(r.vk_h),
                f(r.energy_balance),
                f(r.cross_helicity),
                f(r.cfl),
                f(r.dealias_fraction),
            ]);
            out.push_str(&cols.join(","));
            out.push('\n');
        }
        out
    }
}

fn diag_row(
    state: &FlowState,
    params: &PhysParams,
    ws: &mut Workspace,
    info: StepInfo,
) -> Result<DiagRow> {
    let u = &state.velocity;
    let b = &state.magnetic;
    let omega = curl(u);
    let zeta = curl(b);
    let rhs = rhs_viscous(state, params, ws)?;
    let (res_omega, res_zeta) = vorticity_residual_from(state, &rhs, params, ws)?;
    Ok(DiagRow {
        t: state.t,
        e_kin: 0.5 * l2_inner(u, u),
        e_mag: 0.5 * l2_inner(b, b),
        enstrophy_u: l2_inner(&omega, &omega),
        enstrophy_h: l2_inner(&zeta, &zeta),
        norms: params
            .norm_track
            .iter()
            .map(|&s| sobolev_norm(u, s) + sobolev_norm(b, s))
            .collect(),
        res_omega,
        res_zeta,
        vk_u: vk_membership_residual(u, 1, ws),
        vk_h: vk_membership_residual(b, 1, ws),
        energy_balance: energy_balance_residual(state, &rhs, params),
        cross_helicity: l2_inner(u, b),
        cfl: info.cfl,
        dealias_fraction: info.dealias_fraction,
    })
}

/// Step to `t_final`, recording diagnostics every `record_interval` and
/// handing each recorded state to the observer as (record index, state).
/// The blow-up guard and finiteness are checked at record points.
/// Deterministic given the config.
pub fn run(cfg: &RunConfig, mut observer: impl FnMut(usize, &FlowState)) -> Result<Diagnostics> {
    let params = &cfg.params;
    let steps_f = params.t_final / params.dt;
    let steps = steps_f.round() as usize;
    if steps == 0 || (steps_f - steps as f64).abs() > 1e-8 * steps_f.max(1.0) {
        return Err(Error::Validation {
            key: "time.dt".into(),
            msg: format!(
                "final time {} is not an integer number of steps of {}",
                params.t_final, params.dt
            ),
        });
    }
    let record_every = ((cfg.record_interval / params.dt).round() as usize).max(1);
    let mut stepper = Stepper::new(cfg.grid, params.clone());
    let mut state = initial_state(cfg.grid, &cfg.init)?;
    let mut rows = Vec::new();
    let mut record_idx = 0usize;
    let quiet = StepInfo { cfl: 0.0, dealias_fraction: 0.0 };
    let first = diag_row(&state, params, &mut stepper.ws, quiet)?;
    let guard_norm0 = first.norms.last().copied().unwrap_or(0.0);
    rows.push(first);
    observer(record_idx, &state);
    record_idx += 1;
    let mut info = quiet;
    for step in 1..=steps {
        let (next, i) = stepper.step(&state)?;
        info.cfl = info.cfl.max(i.cfl);
        info.dealias_fraction = info.dealias_fraction.max(i.dealias_fraction);
        state = next;
        if step % record_every == 0 || step == steps {
            if !state.velocity.is_finite() || !state.magnetic.is_finite() {
                return Err(Error::BlowUp {
                    norm: f64::NAN,
                    threshold: params.guard_threshold * guard_norm0,
                    t: state.t,
                });
            }
            let row = diag_row(&state, params, &mut stepper.ws, info)?;
            let guard_norm = row.norms.last().copied().unwrap_or(0.0);
            if guard_norm0 > 0.0 && !(guard_norm <= params.guard_threshold * guard_norm0) {
                return Err(Error::BlowUp {
                    norm: guard_norm,
                    threshold: params.guard_threshold * guard_norm0,
                    t: state.t,
                });
            }
            rows.push(row);
            observer(record_idx, &state);
            record_idx += 1;
            info = quiet;
        }
    }
    Ok(Diagnostics {
        norm_track: params.norm_track.clone(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shear_state(grid: Grid, amp: f64) -> FlowState {
        initial_state(grid, &InitKind::Shear { amplitude: amp }).unwrap()
    }

    #[test]
    fn rhs_on_shear_is_pure_diffusion() {
        let grid = Grid::new(16, 16, 16).unwrap();
        let mut ws = Workspace::new(grid);
        let params = PhysParams::new(0.1, 0.0, 1.0, 1e-3);
        let state = shear_state(grid, 1.0);
        let rhs = rhs_viscous(&state, &params, &mut ws).unwrap();
        // du/dt = -0.1 π² cos(πz) ê₁
        let want = -0.1 * PI * PI;
        let got = rhs.du.comp(0).at(0, 0, 1);
        assert!((got - Complex64::new(want, 0.0)).norm() < 1e-12);
        let mut rest = rhs.du.clone();
        rest.comp_mut(0).set(0, 0, 1, Complex64::new(0.0, 0.0));
        assert!(rest.max_abs() < 1e-13);
        assert!(rhs.dh.max_abs() < 1e-13);
    }

    #[test]
    fn rhs_energy_balance_on_random_state() {
        let grid = Grid::new(16, 16, 16).unwrap();
        let mut ws = Workspace::new(grid);
        let params = PhysParams::new(0.02, 0.01, 1.0, 1e-3);
        let state = initial_state(
            grid,
            &InitKind::Random { seed: 5, amplitude: 0.3, decay: 4.0 },
        )
        .unwrap();
        let rhs = rhs_viscous(&state, &params, &mut ws).unwrap();
        let r = energy_balance_residual(&state, &rhs, &params);
        assert!(r < 1e-8, "balance residual {r}");
        // both tendencies stay divergence-free
        assert!(crate::operators::divergence(&rhs.du).max_abs() < 1e-10 * rhs.du.max_abs());
        assert!(crate::operators::divergence(&rhs.dh).max_abs() < 1e-10 * rhs.dh.max_abs());
    }

    #[test]
    fn elsasser_pair_cancels_exactly() {
        let grid = Grid::new(8, 8, 8).unwrap();
        let mut ws = Workspace::new(grid);
        let state = initial_state(
            grid,
            &InitKind::Elsasser { seed: 3, amplitude: 0.4, decay: 4.0 },
        )
        .unwrap();
        // ν = μ = 0: both tendencies vanish identically
        let params = PhysParams::new(0.0, 0.0, 1.0, 1e-3);
        let rhs = rhs_viscous(&state, &params, &mut ws).unwrap();
        assert_eq!(rhs.du.max_abs(), 0.0);
        assert_eq!(rhs.dh.max_abs(), 0.0);
        // ν = μ > 0: du = dH = νΔu
        let params = PhysParams::new(0.05, 0.05, 1.0, 1e-3);
        let rhs = rhs_viscous(&state, &params, &mut ws).unwrap();
        assert!(rhs.du.sub(&rhs.dh).max_abs() < 1e-15);
    }

    #[test]
    fn decaying_shear_matches_closed_form() {
        let grid = Grid::new(16, 16, 16).unwrap();
        let nu = 0.1;
        let mut stepper = Stepper::new(grid, PhysParams::new(nu, 0.0, 0.1, 1e-3));
        let mut state = shear_state(grid, 1.0);
        for _ in 0..100 {
            state = stepper.step(&state).unwrap().0;
        }
        let want = (-nu * PI * PI * 0.1f64).exp();
        let got = state.velocity.comp(0).at(0, 0, 1);
        assert!(
            (got - Complex64::new(want, 0.0)).norm() < 1e-12,
            "shear decay error {:e}",
            (got - Complex64::new(want, 0.0)).norm()
        );
    }

    #[test]
    fn elsasser_steady_state_is_stationary() {
        let grid = Grid::new(8, 8, 8).unwrap();
        let state0 = initial_state(
            grid,
            &InitKind::Elsasser { seed: 9, amplitude: 0.3, decay: 4.0 },
        )
        .unwrap();
        let mut stepper = Stepper::ideal(grid, 1.0, 1e-3);
        let mut state = state0.clone();
        for _ in 0..20 {
            state = stepper.step(&state).unwrap().0;
        }
        assert!(state.velocity.sub(&state0.velocity).max_abs() < 1e-12);
        assert!(state.velocity.sub(&state.magnetic).max_abs() < 1e-12);
    }

    #[test]
    fn u_equals_h_symmetry_survives_matched_diffusivities() {
        let grid = Grid::new(8, 8, 8).unwrap();
        let state0 = initial_state(
            grid,
            &InitKind::Elsasser { seed: 10, amplitude: 0.3, decay: 4.0 },
        )
        .unwrap();
        let mut stepper = Stepper::new(grid, PhysParams::new(0.03, 0.03, 1.0, 1e-3));
        let mut state = state0;
        for _ in 0..50 {
            state = stepper.step(&state).unwrap().0;
            assert!(state.velocity.sub(&state.magnetic).max_abs() < 1e-12);
        }
    }

    #[test]
    fn integrator_self_convergence_is_fourth_order() {
        let grid = Grid::new(8, 8, 8).unwrap();
        let init = InitKind::Random { seed: 21, amplitude: 0.5, decay: 4.0 };
        let t_end = 0.08;
        let run_dt = |dt: f64| -> FlowState {
            let mut stepper = Stepper::new(grid, PhysParams::new(0.01, 0.005, t_end, dt));
            let mut state = initial_state(grid, &init).unwrap();
            let n = (t_end / dt).round() as usize;
            for _ in 0..n {
                state = stepper.step(&state).unwrap().0;
            }
            state
        };
        let reference = run_dt(1e-3 / 8.0);
        let err = |s: &FlowState| {
            l2_norm(&s.velocity.sub(&reference.velocity))
                + l2_norm(&s.magnetic.sub(&reference.magnetic))
        };
        let e1 = err(&run_dt(1e-3));
        let e2 = err(&run_dt(5e-4));
        let order = (e1 / e2).log2();
        assert!(order >= 3.8, "observed order {order} (e1 = {e1:e}, e2 = {e2:e})");
    }

    #[test]
    fn ideal_run_is_time_reversible() {
        let grid = Grid::new(8, 8, 8).unwrap();
        let state0 = initial_state(
            grid,
            &InitKind::Random { seed: 33, amplitude: 0.2, decay: 4.0 },
        )
        .unwrap();
        let mut stepper = Stepper::ideal(grid, 1.0, 5e-4);
        let mut state = state0.clone();
        for _ in 0..100 {
            state = stepper.step(&state).unwrap().0;
        }
        // reverse: negate both fields, march forward, negate back
        let mut back = FlowState::new(0.0, state.velocity.scale(-1.0), state.magnetic.scale(-1.0));
        for _ in 0..100 {
            back = stepper.step(&back).unwrap().0;
        }
        let diff = l2_norm(&back.velocity.scale(-1.0).sub(&state0.velocity))
            + l2_norm(&back.magnetic.scale(-1.0).sub(&state0.magnetic));
        assert!(diff < 1e-6, "reversal error {diff:e}");
    }

    #[test]
    fn vorticity_residuals_vanish_for_rhs_time_derivative() {
        let grid = Grid::new(16, 16, 16).unwrap();
        let mut ws = Workspace::new(grid);
        let params = PhysParams::new(0.02, 0.01, 1.0, 1e-3);
        let state = initial_state(
            grid,
            &InitKind::Random { seed: 40, amplitude: 0.3, decay: 4.0 },
        )
        .unwrap();
        let (ro, rz) = vorticity_residual(&state, &params, &mut ws).unwrap();
        assert!(ro < 1e-8, "omega residual {ro}");
        assert!(rz < 1e-8, "zeta residual {rz}");
        // H = 0 reduces to the hydrodynamic vorticity equation
        let ns = FlowState::new(
            0.0,
            state.velocity.clone(),
            VectorField::zeros(grid, VectorKind::Velocity),
        );
        let (ro, rz) = vorticity_residual(&ns, &params, &mut ws).unwrap();
        assert!(ro < 1e-8 && rz < 1e-8);
    }

    #[test]
    fn finite_difference_time_derivative_converges_at_fourth_order() {
        let grid = Grid::new(8, 8, 8).unwrap();
        let init = InitKind::Random { seed: 55, amplitude: 0.3, decay: 4.0 };
        let residual_at = |dt: f64| -> f64 {
            let p = PhysParams::new(0.01, 0.01, 1.0, dt);
            let mut stepper = Stepper::new(grid, p.clone());
            let mut states = vec![initial_state(grid, &init).unwrap()];
            for _ in 0..4 {
                let last = states.last().unwrap().clone();
                states.push(stepper.step(&last).unwrap().0);
            }
            // 4th-order centered ∂_t at the middle state
            let fd = |pick: &dyn Fn(&FlowState) -> &VectorField| -> VectorField {
                let mut acc = pick(&states[0]).scale(1.0 / (12.0 * dt));
                acc.axpy(-8.0 / (12.0 * dt), pick(&states[1]));
                acc.axpy(8.0 / (12.0 * dt), pick(&states[3]));
                acc.axpy(-1.0 / (12.0 * dt), pick(&states[4]));
                acc
            };
            let dt_omega = curl(&fd(&|s| &s.velocity));
            let dt_zeta = curl(&fd(&|s| &s.magnetic));
            let (ro, rz) =
                vorticity_residual_given_dt(&states[2], &dt_omega, &dt_zeta, &p, &mut stepper.ws)
                    .unwrap();
            ro.max(rz)
        };
        let r1 = residual_at(2e-3);
        let r2 = residual_at(1e-3);
        let order = (r1 / r2).log2();
        assert!(order > 3.5, "fd residual order {order} ({r1:e} vs {r2:e})");
    }

    #[test]
    fn run_records_and_guard() {
        let grid = Grid::new(8, 8, 8).unwrap();
        let mut params = PhysParams::new(0.01, 0.01, 0.02, 1e-3);
        params.norm_track = vec![1, 3];
        let cfg = RunConfig {
            grid,
            params,
            init: InitKind::Random { seed: 4, amplitude: 0.2, decay: 4.0 },
            record_interval: 5e-3,
        };
        let mut seen = Vec::new();
        let diag = run(&cfg, |i, s| seen.push((i, s.t))).unwrap();
        assert_eq!(diag.rows.len(), 5); // t = 0 plus 4 records
        assert_eq!(seen.len(), 5);
        assert!(diag.rows.iter().all(|r| r.vk_u < 1e-10 && r.vk_h < 1e-10));
        // identical config reruns bit-identically
        let diag2 = run(&cfg, |_, _| {}).unwrap();
        assert_eq!(diag.to_csv(), diag2.to_csv());
        // guard trips on a tiny threshold
        let mut cfg2 = cfg.clone();
        cfg2.params.guard_threshold = 1e-6;
        assert!(matches!(run(&cfg2, |_, _| {}), Err(Error::BlowUp { .. })));
    }

    #[test]
    fn decaying_shear_diagnostics_reproduce_the_energy_curve() {
        // E(t) = ¼ e^{-2νπ²t} for unit-amplitude shear
        let grid = Grid::new(16, 16, 16).unwrap();
        let nu = 0.1;
        let cfg = RunConfig {
            grid,
            params: PhysParams::new(nu, 0.0, 0.1, 1e-3),
            init: InitKind::Shear { amplitude: 1.0 },
            record_interval: 1e-2,
        };
        let diag = run(&cfg, |_, _| {}).unwrap();
        for row in &diag.rows {
            let want = 0.25 * (-2.0 * nu * PI * PI * row.t).exp();
            assert!(
                (row.e_kin - want).abs() < 1e-8,
                "t = {}: {} vs {}",
                row.t,
                row.e_kin,
                want
            );
            assert_eq!(row.e_mag, 0.0);
        }
    }

    #[test]
    fn cfl_violation_is_reported() {
        let grid = Grid::new(8, 8, 8).unwrap();
        let mut stepper = Stepper::new(grid, PhysParams::new(0.0, 0.0, 1.0, 0.5));
        let state = shear_state(grid, 1.0);
        assert!(matches!(stepper.step(&state), Err(Error::CflViolation { .. })));
    }

    #[test]
    fn ideal_energy_and_cross_helicity_drift() {
        let grid = Grid::new(8, 8, 8).unwrap();
        let init = InitKind::Random { seed: 77, amplitude: 0.2, decay: 4.0 };
        let mut stepper = Stepper::ideal(grid, 0.1, 1e-3);
        let mut state = initial_state(grid, &init).unwrap();
        let e0 = 0.5
            * (l2_inner(&state.velocity, &state.velocity)
                + l2_inner(&state.magnetic, &state.magnetic));
        let cross0 = l2_inner(&state.velocity, &state.magnetic);
        for _ in 0..100 {
            state = stepper.step(&state).unwrap().0;
        }
        let e1 = 0.5
            * (l2_inner(&state.velocity, &state.velocity)
                + l2_inner(&state.magnetic, &state.magnetic));
        let cross1 = l2_inner(&state.velocity, &state.magnetic);
        assert!((e1 - e0).abs() / e0 < 1e-9, "drift {:e}", (e1 - e0).abs() / e0);
        assert!((cross1 - cross0).abs() / cross0.abs().max(1e-3) < 1e-6);
    }

    #[test]
    fn snapshot_restart_roundtrip() {
        let grid = Grid::new(8, 8, 8).unwrap();
        let state = initial_state(
            grid,
            &InitKind::Random { seed: 88, amplitude: 0.2, decay: 4.0 },
        )
        .unwrap();
        let dir = std::env::temp_dir().join("slipmhd_solver_snap");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("restart.snap");
        crate::fields::write_snapshot(
            &path,
            0.5,
            &[("u", &state.velocity), ("H", &state.magnetic)],
        )
        .unwrap();
        let restored = initial_state(grid, &InitKind::SnapshotFile(path.clone())).unwrap();
        assert_eq!(restored.t, 0.5);
        assert!(restored.velocity.bits_eq(&state.velocity));
        std::fs::remove_file(&path).ok();
    }
}
