//! Calibration of the Dirichlet concentration used by the weighted
//! likelihood bootstrap.
//!
//! The target: rescaled weights should assign, on average, a median
//! contribution per observation equal to `1 - e^{-1} = 0.6321`, the limiting
//! probability that resampling with replacement includes a given observation
//! at least once. Solving `E[median(w / alpha)] = 0.6321` over alpha by
//! bisection yields approximately `0.8137`.

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::weights::expected_median_scaled;

/// Target and Monte Carlo settings for [`calibrate_alpha`].
#[derive(Debug, Clone)]
pub struct CalibrationTarget {
    /// Desired expected median of the rescaled weights, in (0, 1).
    pub target_median: f64,
    /// Weight-vector length per Monte Carlo replicate.
    pub n: usize,
    /// Number of Monte Carlo replicates per objective evaluation.
    pub n_mc: usize,
    /// Bisection bracket for alpha.
    pub bracket: (f64, f64),
    /// Absolute resolution of the returned alpha.
    pub tol: f64,
}

impl Default for CalibrationTarget {
    fn default() -> Self {
        CalibrationTarget {
            target_median: 1.0 - (-1.0f64).exp(),
            n: 1000,
            n_mc: 4000,
            bracket: (0.5, 1.5),
            tol: 1e-3,
        }
    }
}

impl CalibrationTarget {
    pub fn validate(&self) -> Result<()> {
        if !(self.target_median > 0.0 && self.target_median < 1.0) {
            return Err(Error::domain(
                "target_median",
                "in (0, 1)",
                self.target_median,
            ));
        }
        let (lo, hi) = self.bracket;
        if !(lo > 0.0 && lo < hi) {
            return Err(Error::InvalidConfig(format!(
                "bracket must satisfy 0 < lo < hi, got ({lo}, {hi})"
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::domain("tol", "> 0", self.tol));
        }
        if self.n < 2 || self.n_mc == 0 {
            return Err(Error::InvalidConfig(format!(
                "calibration needs n >= 2 and n_mc >= 1, got n = {}, n_mc = {}",
                self.n, self.n_mc
            )));
        }
        Ok(())
    }
}

/// Find the Dirichlet concentration whose rescaled weights have expected
/// median equal to `target.target_median`.
///
/// The objective is evaluated by Monte Carlo with common random numbers:
/// every evaluation reuses the substreams of `rng`, so the realized objective
/// is a deterministic, effectively smooth function of alpha and bisection is
/// reliable. The result is reproducible to full precision for a given stream.
pub fn calibrate_alpha(target: &CalibrationTarget, rng: &RngStream) -> Result<f64> {
    target.validate()?;
    let (mut lo, mut hi) = target.bracket;
    let eval = |alpha: f64| expected_median_scaled(alpha, target.n, target.n_mc, rng);
    let g_lo = eval(lo)? - target.target_median;
    let g_hi = eval(hi)? - target.target_median;
    // The objective is increasing in alpha; require a sign change.
    if g_lo > 0.0 || g_hi < 0.0 {
        return Err(Error::NoBracket { lo, hi });
    }
    while hi - lo > target.tol {
        let mid = 0.5 * (lo + hi);
        let g_mid = eval(mid)? - target.target_median;
        if g_mid < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Evaluate the calibration objective on a grid, for plotting the
/// expected-median curve alongside the root.
pub fn median_curve(
    alphas: &[f64],
    n: usize,
    n_mc: usize,
    rng: &RngStream,
) -> Result<Vec<(f64, f64)>> {
    alphas
        .iter()
        .map(|&a| Ok((a, expected_median_scaled(a, n, n_mc, rng)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick_target(target_median: f64) -> CalibrationTarget {
        CalibrationTarget {
            target_median,
            n: 500,
            n_mc: 1200,
            bracket: (0.3, 4.5),
            tol: 1e-3,
        }
    }

    #[test]
    fn recovers_unit_alpha_for_exponential_median() {
        // Exponential(1) has median ln 2, so targeting ln 2 returns alpha = 1.
        let rng = RngStream::new(61, 0);
        let a = calibrate_alpha(&quick_target(std::f64::consts::LN_2), &rng).unwrap();
        assert!((a - 1.0).abs() < 0.015, "got {a}");
    }

    #[test]
    fn default_target_is_near_published_value() {
        let rng = RngStream::new(61, 1);
        let a = calibrate_alpha(&CalibrationTarget::default(), &rng).unwrap();
        assert!((a - 0.8137).abs() < 0.01, "got {a}");
    }

    #[test]
    fn fixed_point_consistency_at_alpha_four() {
        // Calibrating to the objective's own value at 4 must return 4.
        let rng = RngStream::new(61, 2);
        let value = expected_median_scaled(4.0, 500, 1200, &rng).unwrap();
        let a = calibrate_alpha(&quick_target(value), &rng).unwrap();
        assert!((a - 4.0).abs() < 0.05, "got {a}");
    }

    #[test]
    fn deterministic_given_stream() {
        let rng = RngStream::new(8, 4);
        let t = quick_target(0.6321205588285577);
        let a = calibrate_alpha(&t, &rng).unwrap();
        let b = calibrate_alpha(&t, &rng).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bracket_without_sign_change_errors() {
        let rng = RngStream::new(8, 5);
        let mut t = quick_target(0.95);
        t.bracket = (0.3, 0.6); // objective stays below 0.95 here
        assert!(matches!(
            calibrate_alpha(&t, &rng),
            Err(Error::NoBracket { .. })
        ));
    }

    #[test]
    fn invalid_targets_are_rejected() {
        let rng = RngStream::new(8, 6);
        let mut t = CalibrationTarget::default();
        t.bracket = (1.5, 0.5);
        assert!(calibrate_alpha(&t, &rng).is_err());
        let mut t = CalibrationTarget::default();
        t.target_median = 1.2;
        assert!(calibrate_alpha(&t, &rng).is_err());
    }
}
