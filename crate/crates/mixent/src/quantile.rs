//! Linear-interpolation sample quantiles.

use crate::error::{Error, Result};

/// Type-7 quantile of an ascending-sorted sample.
///
/// The quantile at `q` interpolates linearly at fractional index
/// `h = (n - 1) q`, so `q = 0` returns the minimum and `q = 1` the maximum.
/// This is the convention used by the summaries this crate is compared
/// against.
pub fn quantile(sorted_values: &[f64], q: f64) -> Result<f64> {
    if sorted_values.is_empty() {
        return Err(Error::EmptyInput("quantile of empty sample"));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::domain("q", "in [0, 1]", q));
    }
    let n = sorted_values.len();
    let h = (n - 1) as f64 * q;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 >= n || frac == 0.0 {
        return Ok(sorted_values[lo.min(n - 1)]);
    }
    Ok(sorted_values[lo] + frac * (sorted_values[lo + 1] - sorted_values[lo]))
}
