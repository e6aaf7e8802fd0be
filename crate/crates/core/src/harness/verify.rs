//! Batched verification of the function-space identities on random parity
//! fields, with negative controls that break each hypothesis.
//!
//! Positive checks must sit at rounding level; the controls confirm the
//! identities carry information (feed a field of the wrong trace class, or
//! drop the divergence-free hypothesis, and the residual is order one).

use super::fmt_f64;
use crate::fields::{
    boundary_trace, random_field, trace_max, vk_membership_residual, Face, Grid, VectorKind,
    Workspace,
};
use crate::operators::{
    advect, coupling_residual, curl, gradient, skew_symmetry_residual, advection_trace_residual,
    DealiasPolicy,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckKind {
    Positive,
    NegativeControl,
}

#[derive(Debug, Clone)]
pub struct CheckRow {
    pub name: String,
    pub kind: CheckKind,
    /// worst value across samples (max for positives, min for controls)
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub samples: usize,
    pub seed: u64,
    pub rows: Vec<CheckRow>,
}

impl VerifyReport {
    pub fn positive_max(&self) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.kind == CheckKind::Positive)
            .map(|r| r.value)
            .fold(0.0, f64::max)
    }

    pub fn negative_min(&self) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.kind == CheckKind::NegativeControl)
            .map(|r| r.value)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("check,kind,value\n");
        for r in &self.rows {
            let kind = match r.kind {
                CheckKind::Positive => "positive",
                CheckKind::NegativeControl => "negative_control",
            };
            out.push_str(&format!("{},{},{}\n", r.name, kind, fmt_f64(r.value)));
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut out = format!(
            "identity batch: {} samples, seed {}\n  worst positive residual: {:.3e}\n  weakest negative control: {:.3e}\n",
            self.samples,
            self.seed,
            self.positive_max(),
            self.negative_min()
        );
        for r in &self.rows {
            let tag = match r.kind {
                CheckKind::Positive => "ok ",
                CheckKind::NegativeControl => "ctl",
            };
            out.push_str(&format!("  [{tag}] {:<28} {:.3e}\n", r.name, r.value));
        }
        out
    }
}

/// Run every identity check on `samples ≥ 10` random parity fields.
/// Deterministic given the seed.
pub fn verify_spaces(
    grid: Grid,
    samples: usize,
    seed: u64,
    policy: DealiasPolicy,
) -> Result<VerifyReport> {
    if samples < 10 {
        return Err(Error::Validation {
            key: "verify.samples".into(),
            msg: format!("need at least 10 samples (got {samples})"),
        });
    }
    let mut ws = Workspace::new(grid);
    let mut pos: Vec<(&'static str, f64)> = Vec::new();
    let mut neg: Vec<(&'static str, f64)> = Vec::new();
    let push = |acc: &mut Vec<(&'static str, f64)>, name: &'static str, v: f64, maxing: bool| {
        if let Some(row) = acc.iter_mut().find(|(n, _)| *n == name) {
            row.1 = if maxing { row.1.max(v) } else { row.1.min(v) };
        } else {
            acc.push((name, v));
        }
    };
    for i in 0..samples as u64 {
        let sd = seed.wrapping_add(i.wrapping_mul(0x9e3779b97f4a7c15));
        let u = random_field(grid, VectorKind::Velocity, 4.0, sd ^ 1);
        let v = random_field(grid, VectorKind::Velocity, 4.0, sd ^ 2);
        let h = random_field(grid, VectorKind::Velocity, 4.0, sd ^ 3);
        let wv = random_field(grid, VectorKind::Vorticity, 4.0, sd ^ 4);
        let av = random_field(grid, VectorKind::Vorticity, 4.0, sd ^ 5);
        let bv = random_field(grid, VectorKind::Vorticity, 4.0, sd ^ 6);

        // trace-class membership
        for k in [-1i32, 1, 3] {
            let r = vk_membership_residual(&u, k, &mut ws);
            push(&mut pos, "membership_velocity", r, true);
        }
        for k in [0i32, 2] {
            let r = vk_membership_residual(&wv, k, &mut ws);
            push(&mut pos, "membership_vorticity", r, true);
        }
        // alternating trace pattern of (u·∇)v, j = 0..=2k+1 at k = 1
        for j in 0..=3usize {
            let r = advection_trace_residual(&u, &v, j, policy, &mut ws)?;
            let name: &'static str = match j {
                0 => "advect_trace_j0",
                1 => "advect_trace_j1",
                2 => "advect_trace_j2",
                _ => "advect_trace_j3",
            };
            push(&mut pos, name, r, true);
        }
        // one past the asserted order, reported with the positives
        let r = advection_trace_residual(&u, &v, 4, policy, &mut ws)?;
        push(&mut pos, "advect_trace_j4_reported", r, true);

        // commutator wall traces: ∂_n^{2j} F(Du,Dv) × n for 2j ≤ 2
        let f = crate::operators::curl_commutator(&u, &v, policy, &mut ws)?;
        for twoj in [0usize, 2] {
            let mut worst = 0.0f64;
            for c in [0usize, 1] {
                for face in Face::BOTH {
                    worst = worst.max(trace_max(f.comp(c), face, twoj, &mut ws));
                }
            }
            let name: &'static str = if twoj == 0 { "commutator_trace_j0" } else { "commutator_trace_j2" };
            push(&mut pos, name, worst, true);
        }

        // wall product ∂_n v · v for both parity patterns
        for (name, field) in [("wall_product_velocity", &u), ("wall_product_vorticity", &wv)] {
            let mut worst = 0.0f64;
            for face in Face::BOTH {
                let mut plane = vec![0.0f64; grid.nx() * grid.ny()];
                for c in 0..3 {
                    let t1 = boundary_trace(field.comp(c), face, 1, &mut ws);
                    let t0 = boundary_trace(field.comp(c), face, 0, &mut ws);
                    for (p, (a, b)) in plane.iter_mut().zip(t1.values.iter().zip(&t0.values)) {
                        *p += a * b;
                    }
                }
                worst = worst.max(plane.iter().fold(0.0f64, |a, v| a.max(v.abs())));
            }
            push(&mut pos, name, worst, true);
        }

        // coupling cancellation and energy skew symmetry
        push(
            &mut pos,
            "coupling_vorticity_pair",
            coupling_residual(&h, &av, &bv, policy, &mut ws)?,
            true,
        );
        push(
            &mut pos,
            "coupling_velocity_pair",
            coupling_residual(&h, &u, &v, policy, &mut ws)?,
            true,
        );
        push(
            &mut pos,
            "energy_skew_symmetry",
            skew_symmetry_residual(&u, &v, policy, &mut ws)?,
            true,
        );

        // --- negative controls ---
        // wrong trace class: a vorticity-pattern field has a live normal
        // component on the walls
        push(
            &mut neg,
            "control_membership",
            vk_membership_residual(&wv, -1, &mut ws),
            false,
        );
        push(
            &mut neg,
            "control_advect_trace_j0",
            advection_trace_residual(&u, &wv, 0, policy, &mut ws)?,
            false,
        );
        // commutator of a wrong-class second argument: assembled from its
        // definition since the typed operator rejects it
        {
            let a = curl(&advect(&u, &wv, policy, &mut ws)?);
            let b = advect(&u, &curl(&wv), policy, &mut ws)?;
            let fbad = a.sub(&b);
            let mut worst = 0.0f64;
            for c in [0usize, 1] {
                for face in Face::BOTH {
                    worst = worst.max(trace_max(fbad.comp(c), face, 0, &mut ws));
                }
            }
            push(&mut neg, "control_commutator_trace", worst, false);
        }
        // drop the divergence-free hypothesis of the coupling identity
        {
            let mut hbad = h.clone();
            hbad.axpy(1.0, &gradient(v.comp(0)));
            push(
                &mut neg,
                "control_coupling_divergence",
                coupling_residual(&hbad, &av, &bv, policy, &mut ws)?,
                false,
            );
        }
    }
    // Every representable parity field satisfies the wall-product identity
    // structurally, so its control leaves the basis: for v₃(z) = 1 + z the
    // product ∂_n v₃ · v₃ at z = 0 is finite-difference evaluated.
    {
        let probe = |z: f64| 1.0 + z;
        let hstep = 1e-6;
        let d = (probe(hstep) - probe(0.0)) / hstep;
        neg.push(("control_wall_product_nonparity", (d * probe(0.0)).abs()));
    }

    let mut rows: Vec<CheckRow> = pos
        .into_iter()
        .map(|(name, value)| CheckRow {
            name: name.into(),
            kind: CheckKind::Positive,
            value,
        })
        .collect();
    rows.extend(neg.into_iter().map(|(name, value)| CheckRow {
        name: name.into(),
        kind: CheckKind::NegativeControl,
        value,
    }));
    Ok(VerifyReport { samples, seed, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batch_separates_identities_from_controls() {
        let grid = Grid::new(8, 8, 8).unwrap();
        let report = verify_spaces(grid, 10, 11, DealiasPolicy::default()).unwrap();
        assert!(report.positive_max() < 1e-9, "positives {:e}", report.positive_max());
        assert!(report.negative_min() > 1e-2, "controls {:e}", report.negative_min());
    }

    #[test]
    fn deterministic_given_seed() {
        let grid = Grid::new(8, 8, 8).unwrap();
        let a = verify_spaces(grid, 10, 5, DealiasPolicy::default()).unwrap();
        let b = verify_spaces(grid, 10, 5, DealiasPolicy::default()).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        let c = verify_spaces(grid, 10, 6, DealiasPolicy::default()).unwrap();
        assert_ne!(a.to_csv(), c.to_csv());
    }

    #[test]
    fn small_batches_are_rejected() {
        let grid = Grid::new(8, 8, 8).unwrap();
        assert!(matches!(
            verify_spaces(grid, 9, 1, DealiasPolicy::default()),
            Err(Error::Validation { .. })
        ));
    }
}
