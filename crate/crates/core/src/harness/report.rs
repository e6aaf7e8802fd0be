//! Report formatting helpers.

/// Shortest round-trippable decimal form of an f64; deterministic across
/// platforms, so identical studies emit byte-identical CSVs.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    format!("{x:?}")
}
