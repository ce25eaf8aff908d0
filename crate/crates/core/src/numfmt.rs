//! Float formatting for data files.

/// Formats a float with 17 significant digits in scientific notation.
///
/// 17 significant decimal digits are enough to round-trip any `f64`, and the
/// fixed width keeps data files byte-deterministic across platforms and
/// thread counts.
pub fn sig17(x: f64) -> String {
    format!("{x:.16e}")
}
