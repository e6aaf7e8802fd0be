//! Log-log least squares.

use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct Fit {
    /// slope of `ln y` against `ln x`
    pub slope: f64,
    /// intercept in log space: `ln y = slope·ln x + intercept`
    pub intercept: f64,
    /// coefficient of determination of the log-space fit
    pub r2: f64,
}

/// Ordinary least squares on `(ln x, ln y)`. Needs at least 3 strictly
/// positive points. Scale-invariant in y: rescaling y moves the intercept,
/// never the slope.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<Fit> {
    if points.len() < 3 {
        return Err(Error::FitData(format!(
            "need at least 3 points (got {})",
            points.len()
        )));
    }
    if let Some((x, y)) = points.iter().find(|(x, y)| !(*x > 0.0) || !(*y > 0.0)) {
        return Err(Error::FitData(format!(
            "log-log fit needs positive data (got ({x}, {y}))"
        )));
    }
    let n = points.len() as f64;
    let logs: Vec<(f64, f64)> = points.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let sx: f64 = logs.iter().map(|(x, _)| x).sum();
    let sy: f64 = logs.iter().map(|(_, y)| y).sum();
    let sxx: f64 = logs.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = logs.iter().map(|(x, y)| x * y).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return Err(Error::FitData("all x values coincide".into()));
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let mean_y = sy / n;
    let ss_tot: f64 = logs.iter().map(|(_, y)| (y - mean_y).powi(2)).sum();
    let ss_res: f64 = logs
        .iter()
        .map(|(x, y)| (y - (slope * x + intercept)).powi(2))
        .sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(Fit { slope, intercept, r2 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let pts: Vec<(f64, f64)> = (1..=6).map(|i| (i as f64, (i as f64).powi(2))).collect();
        let f = fit_rate(&pts).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_data_has_zero_slope() {
        let pts: Vec<(f64, f64)> = (1..=5).map(|i| (i as f64, 5.0)).collect();
        let f = fit_rate(&pts).unwrap();
        assert!(f.slope.abs() < 1e-12);
    }

    #[test]
    fn noisy_quarter_power() {
        // deterministic ±1% ripple around y = x^{1/4}
        let pts: Vec<(f64, f64)> = (0..8)
            .map(|i| {
                let x = 10f64.powf(-2.0 - 0.25 * i as f64);
                let noise = 1.0 + 0.01 * if i % 2 == 0 { 1.0 } else { -1.0 };
                (x, x.powf(0.25) * noise)
            })
            .collect();
        let f = fit_rate(&pts).unwrap();
        assert!((f.slope - 0.25).abs() < 0.02, "slope {}", f.slope);
    }

    #[test]
    fn scale_invariance_of_the_slope() {
        let pts: Vec<(f64, f64)> = (1..=5).map(|i| (i as f64, (i as f64).powf(1.3))).collect();
        let scaled: Vec<(f64, f64)> = pts.iter().map(|(x, y)| (*x, 77.0 * y)).collect();
        let a = fit_rate(&pts).unwrap();
        let b = fit_rate(&scaled).unwrap();
        assert!((a.slope - b.slope).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(fit_rate(&[(1.0, 1.0), (2.0, 2.0)]).is_err());
        assert!(fit_rate(&[(1.0, 1.0), (2.0, 2.0), (3.0, -1.0)]).is_err());
    }
}
