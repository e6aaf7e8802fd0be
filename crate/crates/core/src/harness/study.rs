//! Vanishing-viscosity convergence studies.
//!
//! One ideal reference run (ν = μ = 0) shares its recorded states
//! read-only with every viscous sweep member; members run concurrently,
//! each computing the sup-in-time Sobolev differences against the
//! reference. Fitted log-log slopes quantify the convergence rate; the
//! top-order block reports monotonicity and the wall-compatibility norms
//! without asserting a rate.

use super::{fit_rate, fmt_f64, Fit};
use crate::fields::{sobolev_norm, trace_max, Face, VectorField, Workspace};
use crate::operators::curl;
use crate::solver::{run, Diagnostics, FlowState, RunConfig};
use crate::{Error, Result};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

#[derive(Debug, Clone)]
pub struct StudyConfig {
    /// Shared run setup; its ν, μ are ignored (the reference uses 0, the
    /// members use the sweep values).
    pub base: RunConfig,
    /// (ν, μ) pairs, largest first.
    pub sweep: Vec<(f64, f64)>,
    /// Sobolev orders compared (the last doubles as the probe order).
    pub norms: Vec<usize>,
    /// Half-open index window of sweep points entering the fits.
    pub fit_window: (usize, usize),
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sweep.len() < 4 {
            return Err(Error::Validation {
                key: "sweep.count".into(),
                msg: format!("a sweep needs at least 4 points (got {})", self.sweep.len()),
            });
        }
        if self.norms.is_empty() {
            return Err(Error::Validation {
                key: "norms.track".into(),
                msg: "need at least one Sobolev order".into(),
            });
        }
        let (a, b) = self.fit_window;
        if a + 3 > b || b > self.sweep.len() {
            return Err(Error::Validation {
                key: "study.fit_window".into(),
                msg: format!("window {a}..{b} must hold ≥ 3 of {} points", self.sweep.len()),
            });
        }
        if self.base.grid.nz() < 4 || self.base.grid.nx() < 4 {
            return Err(Error::Validation {
                key: "grid.nz".into(),
                msg: "convergence studies need all mode counts ≥ 4".into(),
            });
        }
        Ok(())
    }
}

/// One sweep member's measurements.
#[derive(Debug, Clone)]
pub struct MemberRow {
    pub nu: f64,
    pub mu: f64,
    /// sup over recorded times of `‖u-u⁰‖_{H^s} + ‖H-H⁰‖_{H^s}`, per order
    pub sup_errors: Vec<f64>,
    /// sup over record pairs of the first-difference time derivative of
    /// the H¹ error - the time-derivative convergence diagnostic
    /// (reported, never asserted)
    pub dt_sup_error: f64,
    /// layer resolvedness `nz·√ν` (≥ 1 means the viscous scale is gridded)
    pub resolution_ratio: f64,
    pub max_energy_balance: f64,
    pub max_vk: f64,
    pub max_res_omega: f64,
    pub max_res_zeta: f64,
    pub max_dealias_fraction: f64,
}

/// Top-order (H^{2k+1}) block: qualitative statements only.
#[derive(Debug, Clone)]
pub struct ProbeBlock {
    pub s: usize,
    pub strictly_decreasing: bool,
    pub slope: f64,
    pub r2: f64,
    /// max over reference records and walls of `|∂_n^{2k} ω⁰_τ|`
    pub face_norm_omega: f64,
    /// same for ζ⁰ = ∇×H⁰
    pub face_norm_zeta: f64,
}

#[derive(Debug)]
pub struct RateReport {
    pub norms: Vec<usize>,
    pub members: Vec<MemberRow>,
    /// per-order log-log fits of sup error against ν
    pub fits: Vec<Fit>,
    pub probe: Option<ProbeBlock>,
    pub reference_diag: Diagnostics,
    pub record_count: usize,
    pub fit_window: (usize, usize),
}

impl RateReport {
    /// Largest-ν error over smallest-ν error for one tracked order.
    pub fn error_ratio(&self, s: usize) -> Option<f64> {
        let idx = self.norms.iter().position(|&n| n == s)?;
        let first = self.members.first()?.sup_errors[idx];
        let last = self.members.last()?.sup_errors[idx];
        Some(first / last)
    }

    /// Errors nonincreasing along the descending-ν sweep; a violation at
    /// desk scale flags a resolution problem.
    pub fn monotone_in_nu(&self, s: usize) -> Option<bool> {
        let idx = self.norms.iter().position(|&n| n == s)?;
        Some(
            self.members
                .windows(2)
                .all(|w| w[1].sup_errors[idx] <= w[0].sup_errors[idx]),
        )
    }

    pub fn fit_for(&self, s: usize) -> Option<&Fit> {
        let idx = self.norms.iter().position(|&n| n == s)?;
        self.fits.get(idx)
    }

    /// CSV rows `(nu, mu, s, sup_error)`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("nu,mu,s,sup_error\n");
        for m in &self.members {
            for (i, s) in self.norms.iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    fmt_f64(m.nu),
                    fmt_f64(m.mu),
                    s,
                    fmt_f64(m.sup_errors[i])
                ));
            }
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "convergence study: {} members, {} records each, fit window {}..{}\n",
            self.members.len(),
            self.record_count,
            self.fit_window.0,
            self.fit_window.1
        ));
        for m in &self.members {
            out.push_str(&format!(
                "  nu = {:<10} resolution nz*sqrt(nu) = {:.2}  balance <= {:.2e}  vk <= {:.2e}  dealias <= {:.2e}\n",
                fmt_f64(m.nu),
                m.resolution_ratio,
                m.max_energy_balance,
                m.max_vk,
                m.max_dealias_fraction
            ));
        }
        for (i, s) in self.norms.iter().enumerate() {
            let f = &self.fits[i];
            let ratio = self.error_ratio(*s).unwrap_or(f64::NAN);
            let flag = if self.monotone_in_nu(*s) == Some(true) {
                ""
            } else {
                "  [non-monotone: resolution problem]"
            };
            out.push_str(&format!(
                "  H{s}: slope = {:.3}  r2 = {:.5}  error ratio (largest/smallest nu) = {:.2}{flag}\n",
                f.slope, f.r2, ratio
            ));
        }
        if let Some(p) = &self.probe {
            out.push_str(&format!(
                "  top-order H{} probe: strictly decreasing = {}  slope = {:.3} (reported, not asserted)\n",
                p.s, p.strictly_decreasing, p.slope
            ));
            out.push_str(&format!(
                "    wall-compatibility norms of the reference: |d_n^2 omega_tau| <= {:.2e}, |d_n^2 zeta_tau| <= {:.2e}\n",
                p.face_norm_omega, p.face_norm_zeta
            ));
        }
        let dt_pts: Vec<(f64, f64)> = self
            .members
            .iter()
            .filter(|m| m.dt_sup_error > 0.0)
            .map(|m| (m.nu, m.dt_sup_error))
            .collect();
        if let Ok(f) = super::fit_rate(&dt_pts) {
            out.push_str(&format!(
                "  time-derivative H1 error (first differences): slope = {:.3} (reported only)\n",
                f.slope
            ));
        }
        out
    }
}

fn member_config(base: &RunConfig, nu: f64, mu: f64) -> RunConfig {
    let mut cfg = base.clone();
    cfg.params.nu = nu;
    cfg.params.mu = mu;
    cfg
}

/// Run the reference and every sweep member, align recorded times, compute
/// sup-in-time Sobolev differences, and fit `log error` against `log ν`.
/// Up to `jobs` members run concurrently; results are assembled in sweep
/// order, so the report does not depend on the worker count.
pub fn convergence_study(cfg: &StudyConfig, jobs: usize) -> Result<RateReport> {
    cfg.validate()?;
    let reference = member_config(&cfg.base, 0.0, 0.0);
    let mut ref_states: Vec<FlowState> = Vec::new();
    let reference_diag = run(&reference, |_, s| ref_states.push(s.clone()))?;
    let record_count = ref_states.len();

    let n_members = cfg.sweep.len();
    let results: Vec<Mutex<Option<Result<MemberRow>>>> =
        (0..n_members).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let jobs = jobs.max(1).min(n_members);
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::SeqCst);
                if idx >= n_members {
                    break;
                }
                let (nu, mu) = cfg.sweep[idx];
                let row = run_member(cfg, nu, mu, &ref_states);
                *results[idx].lock().unwrap() = Some(row);
            });
        }
    });
    let mut members = Vec::with_capacity(n_members);
    for cell in results {
        members.push(cell.into_inner().unwrap().expect("worker finished")?);
    }

    let (wa, wb) = cfg.fit_window;
    let mut fits = Vec::with_capacity(cfg.norms.len());
    for i in 0..cfg.norms.len() {
        let pts: Vec<(f64, f64)> = members[wa..wb]
            .iter()
            .map(|m| (m.nu, m.sup_errors[i]))
            .collect();
        fits.push(fit_rate(&pts)?);
    }

    let probe = build_probe(cfg, &members, &fits, &ref_states)?;
    Ok(RateReport {
        norms: cfg.norms.clone(),
        members,
        fits,
        probe,
        reference_diag,
        record_count,
        fit_window: cfg.fit_window,
    })
}

fn run_member(
    cfg: &StudyConfig,
    nu: f64,
    mu: f64,
    ref_states: &[FlowState],
) -> Result<MemberRow> {
    let member = member_config(&cfg.base, nu, mu);
    let mut sup = vec![0.0f64; cfg.norms.len()];
    let mut dt_sup = 0.0f64;
    let mut prev: Option<(f64, VectorField, VectorField)> = None;
    let mut align_err: Option<String> = None;
    let diag = run(&member, |idx, state| {
        let Some(reference) = ref_states.get(idx) else {
            align_err = Some(format!("record {idx} has no reference partner"));
            return;
        };
        if (reference.t - state.t).abs() > 1e-9 {
            align_err = Some(format!(
                "record {idx} time mismatch: {} vs {}",
                state.t, reference.t
            ));
            return;
        }
        let du = state.velocity.sub(&reference.velocity);
        let db = state.magnetic.sub(&reference.magnetic);
        for (i, &s) in cfg.norms.iter().enumerate() {
            let e = sobolev_norm(&du, s) + sobolev_norm(&db, s);
            if e > sup[i] {
                sup[i] = e;
            }
        }
        if let Some((t0, pu, pb)) = &prev {
            let h = state.t - t0;
            if h > 0.0 {
                let e = (sobolev_norm(&du.sub(pu), 1) + sobolev_norm(&db.sub(pb), 1)) / h;
                dt_sup = dt_sup.max(e);
            }
        }
        prev = Some((state.t, du, db));
    })?;
    if let Some(msg) = align_err {
        return Err(Error::Validation {
            key: "output.record_interval".into(),
            msg,
        });
    }
    let fold = |pick: &dyn Fn(&crate::solver::DiagRow) -> f64| {
        diag.rows.iter().map(pick).fold(0.0f64, f64::max)
    };
    Ok(MemberRow {
        nu,
        mu,
        sup_errors: sup,
        dt_sup_error: dt_sup,
        resolution_ratio: cfg.base.grid.nz() as f64 * nu.sqrt(),
        max_energy_balance: fold(&|r| r.energy_balance),
        max_vk: fold(&|r| r.vk_u.max(r.vk_h)),
        max_res_omega: fold(&|r| r.res_omega),
        max_res_zeta: fold(&|r| r.res_zeta),
        max_dealias_fraction: fold(&|r| r.dealias_fraction),
    })
}

fn build_probe(
    cfg: &StudyConfig,
    members: &[MemberRow],
    fits: &[Fit],
    ref_states: &[FlowState],
) -> Result<Option<ProbeBlock>> {
    let Some((idx, &s)) = cfg.norms.iter().enumerate().max_by_key(|(_, &s)| s) else {
        return Ok(None);
    };
    if s < 3 {
        return Ok(None);
    }
    let strictly_decreasing = members
        .windows(2)
        .all(|w| w[1].sup_errors[idx] < w[0].sup_errors[idx]);
    // wall-compatibility norms of the reference vorticity fields at the
    // order 2k = s - 1
    let order = s - 1;
    let mut ws = Workspace::new(cfg.base.grid);
    let face_norm = |field: &dyn Fn(&FlowState) -> VectorField, ws: &mut Workspace| -> f64 {
        let mut worst = 0.0f64;
        for state in ref_states {
            let w = field(state);
            for c in [0usize, 1] {
                for face in Face::BOTH {
                    worst = worst.max(trace_max(w.comp(c), face, order, ws));
                }
            }
        }
        worst
    };
    let face_norm_omega = face_norm(&|st| curl(&st.velocity), &mut ws);
    let face_norm_zeta = face_norm(&|st| curl(&st.magnetic), &mut ws);
    Ok(Some(ProbeBlock {
        s,
        strictly_decreasing,
        slope: fits[idx].slope,
        r2: fits[idx].r2,
        face_norm_omega,
        face_norm_zeta,
    }))
}

/// The top-order probe of an existing report (present when the tracked
/// norms end at an order ≥ 3).
pub fn h2kp1_probe(report: &RateReport) -> Result<&ProbeBlock> {
    report.probe.as_ref().ok_or_else(|| Error::Validation {
        key: "norms.track".into(),
        msg: "the study tracked no order ≥ 3, so there is no top-order probe".into(),
    })
}
