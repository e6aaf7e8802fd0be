//! Layer-norm scaling measurements.
//!
//! The layer estimates bound weighted L^p norms of top normal
//! derivatives of the curl field by powers of ε:
//!
//! * `‖z^i(1-z)^i ∂_n^{2k+1} χ_τ‖_{L^p} ~ ε^{1/(2p) + (i-1)/2}`
//! * `‖z^i(1-z)^i ∂_n^{2k}   χ_n‖_{L^p} ~ ε^{1/(2p) + (i+1)/2}`
//! * `‖∂_n^{2k} χ‖_{L^p}              ~ ε^{1/(2p)}`
//!
//! Norms are measured by per-collocation-point quadrature of the exact
//! piecewise-polynomial z-profiles over the two layers (the interior is
//! identically zero), then fitted log-log against ε.

use super::{build_boundary_layer, BoundaryData, LayerScalar};
use crate::harness::fit_rate;
use crate::{Error, Result};

/// Which layer norm a sweep measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalingQuantity {
    /// `z^i(1-z)^i ∂_n^{2k+1} χ_τ` (tangential 2-vector)
    TangentialTopDerivative,
    /// `z^i(1-z)^i ∂_n^{2k} χ_n`
    NormalTopDerivative,
    /// `∂_n^{2k} χ` (all three components, no weight)
    UnweightedTopDerivative,
}

impl ScalingQuantity {
    /// Exponent the estimate predicts for the fitted slope.
    pub fn expected_exponent(self, p: u32, i: u32) -> f64 {
        let base = 1.0 / (2.0 * p as f64);
        match self {
            ScalingQuantity::TangentialTopDerivative => base + (i as f64 - 1.0) / 2.0,
            ScalingQuantity::NormalTopDerivative => base + (i as f64 + 1.0) / 2.0,
            ScalingQuantity::UnweightedTopDerivative => base,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ScalingQuantity::TangentialTopDerivative => "tangential",
            ScalingQuantity::NormalTopDerivative => "normal",
            ScalingQuantity::UnweightedTopDerivative => "unweighted",
        }
    }

    /// Derivative order applied to χ, for reporting.
    pub fn derivative_order(self, k: usize) -> usize {
        match self {
            ScalingQuantity::TangentialTopDerivative => 2 * k + 1,
            _ => 2 * k,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ScalingPoint {
    pub eps: f64,
    pub norm: f64,
}

#[derive(Debug, Clone)]
pub struct ScalingFit {
    pub quantity: ScalingQuantity,
    pub p: u32,
    pub weight_i: u32,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: Vec<ScalingPoint>,
}

const PANELS: usize = 32;
const GL_NODES: [f64; 8] = [
    -0.9602898564975363,
    -0.7966664774136267,
    -0.5255324099163290,
    -0.1834346424956498,
    0.1834346424956498,
    0.5255324099163290,
    0.7966664774136267,
    0.9602898564975363,
];
const GL_WEIGHTS: [f64; 8] = [
    0.1012285362903763,
    0.2223810344533745,
    0.3137066458778873,
    0.3626837833783620,
    0.3626837833783620,
    0.3137066458778873,
    0.2223810344533745,
    0.1012285362903763,
];

/// Weighted L^p norm over the box of the pointwise Euclidean magnitude of
/// equal-grid layer scalars, with weight `(z(1-z))^i`.
pub fn layer_lp_norm(fields: &[&LayerScalar], p: u32, weight_i: u32) -> f64 {
    assert!(!fields.is_empty());
    let nx = fields[0].nx();
    let ny = fields[0].ny();
    let eps = fields[0].eps();
    let sq = eps.sqrt();
    let planes: Vec<(Vec<f64>, Vec<f64>)> = fields.iter().map(|f| f.physical_weights()).collect();
    // profile samples on the panel×node grid, shared by every (x, y)
    let n_nodes = PANELS * GL_NODES.len();
    let mut t_nodes = Vec::with_capacity(n_nodes);
    let mut t_weights = Vec::with_capacity(n_nodes);
    for panel in 0..PANELS {
        let a = panel as f64 / PANELS as f64;
        let b = (panel + 1) as f64 / PANELS as f64;
        for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
            t_nodes.push(0.5 * (a + b) + 0.5 * (b - a) * x);
            t_weights.push(0.5 * (b - a) * w);
        }
    }
    let profile: Vec<Vec<f64>> = fields
        .iter()
        .map(|f| {
            let amp = sq.powi(f.level());
            t_nodes
                .iter()
                .map(|&t| amp * f.chain().eval(f.level(), t))
                .collect()
        })
        .collect();
    let pw = |z: f64| -> f64 {
        if weight_i == 0 {
            1.0
        } else {
            (z * (1.0 - z)).powi(weight_i as i32).powi(p as i32)
        }
    };
    let mut total = 0.0f64;
    for xy in 0..nx * ny {
        for (near, zmap) in [(true, 0usize), (false, 1usize)] {
            let mut acc = 0.0;
            for (n_idx, (&t, &tw)) in t_nodes.iter().zip(&t_weights).enumerate() {
                let z = if zmap == 0 { sq * t } else { 1.0 - sq * t };
                let mut mag2 = 0.0;
                for (f_idx, pr) in profile.iter().enumerate() {
                    let w = if near { &planes[f_idx].0 } else { &planes[f_idx].1 };
                    let val = w[xy] * pr[n_idx];
                    mag2 += val * val;
                }
                acc += tw * pw(z) * mag2.powf(p as f64 / 2.0);
            }
            total += sq * acc;
        }
    }
    (total / (nx * ny) as f64).powf(1.0 / p as f64)
}

/// Sweep ε, measure one layer norm, and fit the log-log slope.
pub fn measure_scaling(
    h: &BoundaryData,
    k: usize,
    quantity: ScalingQuantity,
    p: u32,
    weight_i: u32,
    eps_sweep: &[f64],
) -> Result<ScalingFit> {
    if !matches!(p, 1 | 2 | 4) {
        return Err(Error::Validation {
            key: "corrector.p".into(),
            msg: format!("p must be one of 1, 2, 4 (got {p})"),
        });
    }
    if weight_i > 2 {
        return Err(Error::Validation {
            key: "corrector.i".into(),
            msg: format!("weight exponent i must be 0, 1 or 2 (got {weight_i})"),
        });
    }
    if quantity == ScalingQuantity::UnweightedTopDerivative && weight_i != 0 {
        return Err(Error::Validation {
            key: "corrector.i".into(),
            msg: "the unweighted norm takes i = 0".into(),
        });
    }
    if eps_sweep.len() < 5 {
        return Err(Error::FitData(format!(
            "eps sweep needs at least 5 points (got {})",
            eps_sweep.len()
        )));
    }
    let mut sweep = eps_sweep.to_vec();
    sweep.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut points = Vec::with_capacity(sweep.len());
    for &eps in &sweep {
        let bundle = build_boundary_layer(h, eps, k)?;
        let d = |f: &LayerScalar, times: usize| -> LayerScalar {
            let mut out = f.clone();
            for _ in 0..times {
                out = out.d_z();
            }
            out
        };
        let norm = match quantity {
            ScalingQuantity::TangentialTopDerivative => {
                let f0 = d(&bundle.chi.comps[0], 2 * k + 1);
                let f1 = d(&bundle.chi.comps[1], 2 * k + 1);
                layer_lp_norm(&[&f0, &f1], p, weight_i)
            }
            ScalingQuantity::NormalTopDerivative => {
                let f = d(&bundle.chi.comps[2], 2 * k);
                layer_lp_norm(&[&f], p, weight_i)
            }
            ScalingQuantity::UnweightedTopDerivative => {
                let f0 = d(&bundle.chi.comps[0], 2 * k);
                let f1 = d(&bundle.chi.comps[1], 2 * k);
                let f2 = d(&bundle.chi.comps[2], 2 * k);
                layer_lp_norm(&[&f0, &f1, &f2], p, weight_i)
            }
        };
        if !(norm > 1e-300) {
            return Err(Error::FitData(
                "layer norm vanished: wall data may lack tangential variation".into(),
            ));
        }
        points.push(ScalingPoint { eps, norm });
    }
    // norms must move monotonically with ε (the direction depends on the
    // exponent's sign); anything else signals a construction bug
    let decreasing = points.windows(2).all(|w| w[1].norm < w[0].norm);
    let increasing = points.windows(2).all(|w| w[1].norm > w[0].norm);
    if !(decreasing || increasing) {
        return Err(Error::NonMonotone(
            "layer norms are not monotone across the eps sweep".into(),
        ));
    }
    let fit = fit_rate(
        &points
            .iter()
            .map(|pt| (pt.eps, pt.norm))
            .collect::<Vec<_>>(),
    )?;
    Ok(ScalingFit {
        quantity,
        p,
        weight_i,
        slope: fit.slope,
        intercept: fit.intercept,
        r2: fit.r2,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corrector::default_boundary_data;

    fn geometric_sweep(high: f64, low: f64, n: usize) -> Vec<f64> {
        let ratio = (low / high).powf(1.0 / (n - 1) as f64);
        (0..n).map(|i| high * ratio.powi(i as i32)).collect()
    }

    #[test]
    fn tangential_slope_matches_quarter_at_p2_i1() {
        let h = default_boundary_data(8, 8);
        let sweep = geometric_sweep(1e-2, 1e-4, 7);
        let fit = measure_scaling(&h, 1, ScalingQuantity::TangentialTopDerivative, 2, 1, &sweep)
            .unwrap();
        assert!((fit.slope - 0.25).abs() < 0.05, "slope {}", fit.slope);
        assert!(fit.r2 > 0.999);
    }

    #[test]
    fn normal_slope_matches_three_quarters_at_p2_i0() {
        let h = default_boundary_data(8, 8);
        let sweep = geometric_sweep(1e-2, 1e-4, 7);
        let fit =
            measure_scaling(&h, 1, ScalingQuantity::NormalTopDerivative, 2, 0, &sweep).unwrap();
        assert!((fit.slope - 0.75).abs() < 0.05, "slope {}", fit.slope);
    }

    #[test]
    fn unweighted_l2_slope_matches_quarter() {
        let h = default_boundary_data(8, 8);
        let sweep = geometric_sweep(1e-2, 1e-4, 7);
        let fit =
            measure_scaling(&h, 1, ScalingQuantity::UnweightedTopDerivative, 2, 0, &sweep).unwrap();
        assert!((fit.slope - 0.25).abs() < 0.05, "slope {}", fit.slope);
    }

    #[test]
    fn short_sweeps_and_bad_parameters_are_rejected() {
        let h = default_boundary_data(8, 8);
        assert!(matches!(
            measure_scaling(&h, 1, ScalingQuantity::TangentialTopDerivative, 2, 1, &[1e-2, 1e-3]),
            Err(Error::FitData(_))
        ));
        assert!(matches!(
            measure_scaling(
                &h,
                1,
                ScalingQuantity::TangentialTopDerivative,
                3,
                1,
                &geometric_sweep(1e-2, 1e-4, 5)
            ),
            Err(Error::Validation { .. })
        ));
    }
}
