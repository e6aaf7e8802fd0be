//! Corrector scaling study: drive the layer-norm sweeps across the
//! (quantity, p, i) table and compare fitted exponents against the
//! estimates.

use super::fmt_f64;
use crate::corrector::{measure_scaling, BoundaryData, ScalingFit, ScalingQuantity};
use crate::Result;

#[derive(Debug, Clone, Copy)]
pub struct CorrectorCase {
    pub quantity: ScalingQuantity,
    pub p: u32,
    pub i: u32,
}

/// The sampled (p, i) table: weighted tangential and normal norms plus the
/// unweighted one, for p ∈ {1, 2, 4}.
pub fn default_cases() -> Vec<CorrectorCase> {
    let mut cases = Vec::new();
    for p in [1u32, 2, 4] {
        for i in [1u32, 2] {
            cases.push(CorrectorCase {
                quantity: ScalingQuantity::TangentialTopDerivative,
                p,
                i,
            });
        }
        for i in [0u32, 1] {
            cases.push(CorrectorCase {
                quantity: ScalingQuantity::NormalTopDerivative,
                p,
                i,
            });
        }
        cases.push(CorrectorCase {
            quantity: ScalingQuantity::UnweightedTopDerivative,
            p,
            i: 0,
        });
    }
    cases
}

#[derive(Debug)]
pub struct CaseResult {
    pub case: CorrectorCase,
    pub fit: ScalingFit,
    pub expected: f64,
    pub pass: bool,
}

#[derive(Debug)]
pub struct CorrectorReport {
    pub k: usize,
    pub tolerance: f64,
    pub results: Vec<CaseResult>,
}

impl CorrectorReport {
    pub fn all_pass(&self) -> bool {
        self.results.iter().all(|r| r.pass)
    }

    /// CSV rows `(case, epsilon, p, i, order, norm)`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("case,epsilon,p,i,order,norm\n");
        for r in &self.results {
            let order = r.case.quantity.derivative_order(self.k);
            for pt in &r.fit.points {
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    r.case.quantity.label(),
                    fmt_f64(pt.eps),
                    r.case.p,
                    r.case.i,
                    order,
                    fmt_f64(pt.norm)
                ));
            }
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut out = format!(
            "corrector scaling, k = {}, tolerance {} on {} cases\n",
            self.k,
            self.tolerance,
            self.results.len()
        );
        for r in &self.results {
            out.push_str(&format!(
                "  {:<11} p = {}  i = {}  expected {:+.3}  fitted {:+.4}  r2 = {:.5}  {}\n",
                r.case.quantity.label(),
                r.case.p,
                r.case.i,
                r.expected,
                r.fit.slope,
                r.fit.r2,
                if r.pass { "pass" } else { "FAIL" }
            ));
        }
        out
    }
}

/// Measure every case over one ε sweep.
pub fn corrector_scaling_study(
    h: &BoundaryData,
    k: usize,
    eps_sweep: &[f64],
    cases: &[CorrectorCase],
    tolerance: f64,
) -> Result<CorrectorReport> {
    let mut results = Vec::with_capacity(cases.len());
    for case in cases {
        let fit = measure_scaling(h, k, case.quantity, case.p, case.i, eps_sweep)?;
        let expected = case.quantity.expected_exponent(case.p, case.i);
        let pass = (fit.slope - expected).abs() <= tolerance;
        results.push(CaseResult {
            case: *case,
            fit,
            expected,
            pass,
        });
    }
    Ok(CorrectorReport {
        k,
        tolerance,
        results,
    })
}
