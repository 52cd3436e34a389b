//! Per-observation resampling weights.
//!
//! Two schemes cover the bootstrap variants in this crate. Classical
//! resampling with replacement is equivalent to integer multinomial count
//! weights. The weighted likelihood bootstrap instead draws continuous
//! weights from a symmetric Dirichlet, generated as independent
//! Gamma(alpha, 1) variables and rescaled by their sample mean so they sum
//! to the number of observations.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{GammaUnitRate, RngStream};

/// Declared normalization of a weight vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// Weights sum to one (points on the simplex).
    SumToOne,
    /// Weights sum to the number of observations.
    SumToN,
    /// No constraint on the sum.
    Raw,
}

/// Nonnegative per-observation weights with a declared normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    values: Vec<f64>,
    normalization: Normalization,
}

impl WeightVector {
    pub fn new(values: Vec<f64>, normalization: Normalization) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput("weight vector"));
        }
        let mut sum = 0.0;
        for &w in &values {
            if !(w >= 0.0) {
                return Err(Error::domain("weight", ">= 0", w));
            }
            sum += w;
        }
        if !(sum > 0.0) {
            return Err(Error::domain("weight sum", "> 0", sum));
        }
        let n = values.len() as f64;
        match normalization {
            Normalization::SumToOne if (sum - 1.0).abs() > 1e-12 => {
                return Err(Error::InvalidConfig(format!(
                    "weights declared sum-to-one but sum to {sum}"
                )));
            }
            Normalization::SumToN if (sum - n).abs() > 1e-9 * n => {
                return Err(Error::InvalidConfig(format!(
                    "weights declared sum-to-n but sum to {sum} (n = {n})"
                )));
            }
            _ => {}
        }
        Ok(WeightVector {
            values,
            normalization,
        })
    }

    /// Unit weights (the unweighted case): all ones, summing to `n`.
    pub fn unit(n: usize) -> Self {
        WeightVector {
            values: vec![1.0; n],
            normalization: Normalization::SumToN,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// The same weights rescaled to another normalization convention.
    pub fn renormalized(&self, normalization: Normalization) -> WeightVector {
        let sum = self.sum();
        let scale = match normalization {
            Normalization::SumToOne => 1.0 / sum,
            Normalization::SumToN => self.values.len() as f64 / sum,
            Normalization::Raw => 1.0,
        };
        WeightVector {
            values: self.values.iter().map(|w| w * scale).collect(),
            normalization,
        }
    }
}

/// How resampling weights are generated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightScheme {
    /// Counts from n equiprobable draws with replacement.
    MultinomialBs,
    /// Symmetric Dirichlet weights via Gamma(alpha, 1) draws rescaled by
    /// their sample mean.
    DirichletWlb { alpha: f64 },
}

/// Generate one weight vector of length `n` under `scheme`.
pub fn gen_weights<R: Rng + ?Sized>(
    scheme: WeightScheme,
    n: usize,
    rng: &mut R,
) -> Result<WeightVector> {
    if n == 0 {
        return Err(Error::EmptyInput("weights of length zero"));
    }
    match scheme {
        WeightScheme::MultinomialBs => {
            let mut counts = vec![0.0f64; n];
            for _ in 0..n {
                counts[rng.random_range(0..n)] += 1.0;
            }
            WeightVector::new(counts, Normalization::Raw)
        }
        WeightScheme::DirichletWlb { alpha } => {
            let gamma = GammaUnitRate::new(alpha)?;
            let mut raw: Vec<f64> = (0..n).map(|_| gamma.sample(rng)).collect();
            let mut sum: f64 = raw.iter().sum();
            // Underflow to an all-zero vector is possible only at extreme
            // shapes; redraw rather than divide by zero.
            while !(sum > 0.0) {
                raw = (0..n).map(|_| gamma.sample(rng)).collect();
                sum = raw.iter().sum();
            }
            let mean = sum / n as f64;
            for w in &mut raw {
                *w /= mean;
            }
            WeightVector::new(raw, Normalization::SumToN)
        }
    }
}

/// Monte Carlo estimate of the expected sample median of Gamma(alpha, 1)
/// weights rescaled by their known mean alpha.
///
/// This is the calibration objective: the returned value is the average,
/// over `n_mc` replicates, of the median of `n` draws of `w / alpha`.
/// Replicates use substreams indexed from `rng`, so the estimate depends
/// only on the stream identity, which gives common random numbers across
/// calls with different `alpha`.
pub fn expected_median_scaled(
    alpha: f64,
    n: usize,
    n_mc: usize,
    rng: &RngStream,
) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::domain("alpha", "> 0", alpha));
    }
    if n < 2 {
        return Err(Error::InvalidConfig(format!(
            "median of fewer than 2 weights (n = {n})"
        )));
    }
    if n_mc == 0 {
        return Err(Error::InvalidConfig("n_mc must be >= 1".into()));
    }
    let gamma = GammaUnitRate::new(alpha)?;
    let total: f64 = (0..n_mc)
        .into_par_iter()
        .map(|j| {
            let mut local = rng.substream(j as u64);
            let mut draws: Vec<f64> = (0..n).map(|_| gamma.sample(&mut local) / alpha).collect();
            sample_median(&mut draws)
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    Ok(total / n_mc as f64)
}

/// Median with the even-length convention: mean of the two central order
/// statistics.
fn sample_median(values: &mut [f64]) -> f64 {
    let n = values.len();
    let mid = n / 2;
    let (_, upper, _) = values.select_nth_unstable_by(mid, |a, b| a.partial_cmp(b).unwrap());
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower = values[..mid]
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_weights_sum_to_n() {
        let w = WeightVector::unit(7);
        assert_eq!(w.sum(), 7.0);
        assert_eq!(w.normalization(), Normalization::SumToN);
    }

    #[test]
    fn rejects_negative_and_all_zero() {
        assert!(WeightVector::new(vec![1.0, -0.1], Normalization::Raw).is_err());
        assert!(WeightVector::new(vec![0.0, 0.0], Normalization::Raw).is_err());
        assert!(WeightVector::new(vec![], Normalization::Raw).is_err());
    }

    #[test]
    fn normalization_declarations_are_checked() {
        assert!(WeightVector::new(vec![0.5, 0.5], Normalization::SumToOne).is_ok());
        assert!(WeightVector::new(vec![0.5, 0.6], Normalization::SumToOne).is_err());
        assert!(WeightVector::new(vec![1.5, 0.5], Normalization::SumToN).is_ok());
        assert!(WeightVector::new(vec![1.5, 1.5], Normalization::SumToN).is_err());
    }

    #[test]
    fn multinomial_singleton() {
        let mut rng = RngStream::new(1, 0);
        let w = gen_weights(WeightScheme::MultinomialBs, 1, &mut rng).unwrap();
        assert_eq!(w.values(), &[1.0]);
    }

    #[test]
    fn multinomial_counts_sum_to_n_and_are_integers() {
        let mut rng = RngStream::new(5, 0);
        for n in [2, 17, 250] {
            let w = gen_weights(WeightScheme::MultinomialBs, n, &mut rng).unwrap();
            assert_eq!(w.sum(), n as f64);
            assert!(w.values().iter().all(|&c| c >= 0.0 && c.fract() == 0.0));
        }
    }

    #[test]
    fn multinomial_zero_fraction_matches_limit() {
        // P(count_i = 0) = (1 - 1/n)^n -> e^{-1}; equivalently the inclusion
        // probability tends to 1 - e^{-1}.
        let mut rng = RngStream::new(99, 0);
        let n = 1000;
        let reps = 1000;
        let mut zeros = 0usize;
        for _ in 0..reps {
            let w = gen_weights(WeightScheme::MultinomialBs, n, &mut rng).unwrap();
            zeros += w.values().iter().filter(|&&c| c == 0.0).count();
        }
        let frac = zeros as f64 / (n * reps) as f64;
        assert!(
            (frac - 0.3679).abs() < 0.03,
            "zero-count fraction was {frac}"
        );
    }

    #[test]
    fn dirichlet_weights_sum_to_n() {
        let mut rng = RngStream::new(11, 0);
        for alpha in [0.8137, 1.0, 4.0] {
            let w = gen_weights(WeightScheme::DirichletWlb { alpha }, 53, &mut rng).unwrap();
            assert!((w.sum() - 53.0).abs() < 1e-9 * 53.0);
            assert_eq!(w.normalization(), Normalization::SumToN);
        }
    }

    #[test]
    fn dirichlet_rejects_bad_alpha() {
        let mut rng = RngStream::new(11, 0);
        assert!(gen_weights(WeightScheme::DirichletWlb { alpha: 0.0 }, 5, &mut rng).is_err());
        assert!(gen_weights(WeightScheme::DirichletWlb { alpha: -1.0 }, 5, &mut rng).is_err());
    }

    #[test]
    fn gen_weights_rejects_n_zero() {
        let mut rng = RngStream::new(11, 0);
        assert!(gen_weights(WeightScheme::MultinomialBs, 0, &mut rng).is_err());
    }

    #[test]
    fn dirichlet_first_coordinate_matches_beta_moments() {
        // Normalized to the simplex, coordinate 1 is Beta(a, (n-1)a):
        // mean 1/n, variance (n-1) / (n^2 (n a + 1)).
        let alpha = 0.8137;
        let n = 50;
        let reps = 20_000;
        let mut rng = RngStream::new(2024, 0);
        let mut sum = 0.0;
        for _ in 0..reps {
            let w = gen_weights(WeightScheme::DirichletWlb { alpha }, n, &mut rng).unwrap();
            sum += w.renormalized(Normalization::SumToOne).values()[0];
        }
        let mean = sum / reps as f64;
        let var_beta = (n as f64 - 1.0) / ((n * n) as f64 * (n as f64 * alpha + 1.0));
        let se = (var_beta / reps as f64).sqrt();
        assert!(
            (mean - 1.0 / n as f64).abs() < 3.0 * se,
            "first-coordinate mean {mean} vs {} (se {se})",
            1.0 / n as f64
        );
    }

    #[test]
    fn expected_median_scaled_reference_points() {
        let rng = RngStream::new(7, 0);
        // Exponential(1): median is ln 2.
        let m1 = expected_median_scaled(1.0, 1000, 2000, &rng).unwrap();
        assert!((m1 - 0.6931).abs() < 0.01, "alpha=1 gave {m1}");
        let m2 = expected_median_scaled(0.8137, 1000, 2000, &rng).unwrap();
        assert!((m2 - 0.6321).abs() < 0.01, "alpha=0.8137 gave {m2}");
        // median/mean of Gamma(4,1) is 3.6721/4 = 0.918.
        let m3 = expected_median_scaled(4.0, 1000, 2000, &rng).unwrap();
        assert!(m3 > 0.85, "alpha=4 gave {m3}");
    }

    #[test]
    fn expected_median_scaled_is_increasing_in_alpha() {
        let rng = RngStream::new(31, 0);
        let grid = [0.25, 0.5, 0.8137, 1.0, 2.0, 4.0];
        let vals: Vec<f64> = grid
            .iter()
            .map(|&a| expected_median_scaled(a, 500, 1500, &rng).unwrap())
            .collect();
        // Roughly 3 standard errors of separation at this Monte Carlo size.
        for pair in vals.windows(2) {
            assert!(
                pair[1] > pair[0] + 0.003,
                "not increasing: {vals:?} on grid {grid:?}"
            );
        }
    }

    #[test]
    fn expected_median_scaled_is_deterministic_per_stream() {
        let rng = RngStream::new(123, 9);
        let a = expected_median_scaled(0.9, 200, 500, &rng).unwrap();
        let b = expected_median_scaled(0.9, 200, 500, &rng).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(sample_median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(sample_median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
