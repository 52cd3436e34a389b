//! Bootstrap resampling of the entropy estimator.
//!
//! Three replicate mechanisms share one orchestration: resampling rows with
//! replacement (nonparametric), simulating synthetic data from the fitted
//! mixture (parametric), and reweighting the original likelihood with
//! Dirichlet draws (weighted likelihood bootstrap). Each replicate refits the
//! mixture, holding the selected (structure, G) fixed, and re-evaluates the
//! entropy on its own replicate sample or weights.
//!
//! Refits warm-start from the base model's parameters. On collapse a
//! replicate retries from up to three fresh seedings, then drops one
//! component at a time; replicates that needed any fallback are kept and
//! counted rather than discarded.

use rayon::prelude::*;
use serde::Serialize;

use crate::entropy::{entropy_estimate, weighted_entropy_estimate};
use crate::error::{Error, Result};
use crate::gmm::{fit_em, fit_em_from, FitConfig, MixtureModel};
use crate::linalg::Matrix;
use crate::quantile::quantile;
use crate::rng::RngStream;
use crate::weights::{gen_weights, WeightScheme, WeightVector};

/// Replicate-generation mechanism.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BootstrapMethod {
    /// Resample n rows with replacement and refit.
    Nonparametric,
    /// Simulate n points from the fitted mixture and refit.
    Parametric,
    /// Refit the original data under Dirichlet weights with the given
    /// concentration.
    Wlb { alpha: f64 },
}

impl BootstrapMethod {
    pub fn validate(&self) -> Result<()> {
        if let BootstrapMethod::Wlb { alpha } = self {
            if !(*alpha > 0.0) {
                return Err(Error::domain("alpha", "> 0", *alpha));
            }
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        match self {
            BootstrapMethod::Nonparametric => "BS".into(),
            BootstrapMethod::Parametric => "PB".into(),
            BootstrapMethod::Wlb { alpha } => format!("WLB({alpha})"),
        }
    }

    /// Stable tag for deriving method-specific random substreams.
    pub(crate) fn stream_tag(&self) -> u64 {
        match self {
            BootstrapMethod::Nonparametric => 1,
            BootstrapMethod::Parametric => 2,
            BootstrapMethod::Wlb { alpha } => 3 ^ alpha.to_bits().rotate_left(17),
        }
    }
}

/// Interval construction rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalKind {
    Percentile,
    CenteredPercentile,
}

/// A two-sided interval at a nominal level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntervalEstimate {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub kind: IntervalKind,
}

/// Replicate entropy values around a point estimate.
#[derive(Debug, Clone)]
pub struct BootstrapDistribution {
    point_estimate: f64,
    replicates: Vec<f64>,
    method: BootstrapMethod,
    n_collapsed_retries: usize,
}

impl BootstrapDistribution {
    pub fn new(
        point_estimate: f64,
        replicates: Vec<f64>,
        method: BootstrapMethod,
        n_collapsed_retries: usize,
    ) -> Result<Self> {
        if replicates.is_empty() {
            return Err(Error::EmptyInput("bootstrap distribution with no replicates"));
        }
        if !replicates.iter().all(|v| v.is_finite()) {
            return Err(Error::Bootstrap("non-finite replicate value".into()));
        }
        Ok(BootstrapDistribution {
            point_estimate,
            replicates,
            method,
            n_collapsed_retries,
        })
    }

    pub fn point_estimate(&self) -> f64 {
        self.point_estimate
    }

    /// Replicates in replicate-index order.
    pub fn replicates(&self) -> &[f64] {
        &self.replicates
    }

    pub fn n_replicates(&self) -> usize {
        self.replicates.len()
    }

    pub fn method(&self) -> BootstrapMethod {
        self.method
    }

    pub fn n_collapsed_retries(&self) -> usize {
        self.n_collapsed_retries
    }

    /// Mean replicate value minus the point estimate.
    pub fn bias(&self) -> f64 {
        let mean: f64 = self.replicates.iter().sum::<f64>() / self.replicates.len() as f64;
        mean - self.point_estimate
    }

    /// Sample standard deviation of the replicates, divisor B - 1.
    pub fn se(&self) -> Result<f64> {
        let b = self.replicates.len();
        if b < 2 {
            return Err(Error::InvalidConfig(
                "standard error needs at least 2 replicates".into(),
            ));
        }
        let mean: f64 = self.replicates.iter().sum::<f64>() / b as f64;
        let ss: f64 = self.replicates.iter().map(|v| (v - mean).powi(2)).sum();
        Ok((ss / (b - 1) as f64).sqrt())
    }

    fn tail_quantiles(&self, level: f64) -> Result<(f64, f64)> {
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::domain("level", "in (0, 1)", level));
        }
        let mut sorted = self.replicates.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let tail = (1.0 - level) / 2.0;
        let lo = quantile(&sorted, tail)?;
        let hi = quantile(&sorted, 1.0 - tail)?;
        Ok((lo, hi))
    }

    /// Interval straight from the replicate quantiles.
    pub fn percentile_interval(&self, level: f64) -> Result<IntervalEstimate> {
        let (lo, hi) = self.tail_quantiles(level)?;
        Ok(IntervalEstimate {
            lower: lo,
            upper: hi,
            level,
            kind: IntervalKind::Percentile,
        })
    }

    /// Percentile interval reflected about the point estimate:
    /// `[2 H - q_hi, 2 H - q_lo]`.
    pub fn centered_percentile_interval(&self, level: f64) -> Result<IntervalEstimate> {
        let (lo, hi) = self.tail_quantiles(level)?;
        Ok(IntervalEstimate {
            lower: 2.0 * self.point_estimate - hi,
            upper: 2.0 * self.point_estimate - lo,
            level,
            kind: IntervalKind::CenteredPercentile,
        })
    }

    /// One replicate per row, headed CSV.
    pub fn replicates_csv(&self) -> String {
        let mut out = String::from("replicate,entropy\n");
        for (i, v) in self.replicates.iter().enumerate() {
            out.push_str(&format!("{},{:.17e}\n", i, v));
        }
        out
    }

    /// JSON summary with bias, SE, and both interval kinds at each level.
    pub fn summary_json(&self, levels: &[f64]) -> Result<serde_json::Value> {
        let mut intervals = Vec::new();
        for &level in levels {
            intervals.push(serde_json::json!({
                "level": level,
                "percentile": self.percentile_interval(level)?,
                "centered_percentile": self.centered_percentile_interval(level)?,
            }));
        }
        Ok(serde_json::json!({
            "method": self.method.label(),
            "point_estimate": self.point_estimate,
            "n_replicates": self.replicates.len(),
            "bias": self.bias(),
            "se": self.se()?,
            "n_collapsed_retries": self.n_collapsed_retries,
            "intervals": intervals,
        }))
    }
}

/// Free-function forms of the summary statistics.
pub fn bootstrap_bias(dist: &BootstrapDistribution) -> f64 {
    dist.bias()
}

pub fn bootstrap_se(dist: &BootstrapDistribution) -> Result<f64> {
    dist.se()
}

/// Refit at the base model's (structure, G) with collapse fallbacks.
/// Returns the refit and whether any fallback was needed.
pub(crate) fn refit_with_fallback(
    base: &MixtureModel,
    data: &Matrix,
    w: &WeightVector,
    config: &FitConfig,
    rng: &RngStream,
) -> Result<(MixtureModel, bool)> {
    if let Ok(model) = fit_em_from(data, w, base, config) {
        return Ok((model, false));
    }
    let single_init = FitConfig {
        n_init: 1,
        ..config.clone()
    };
    for attempt in 0..3u64 {
        let attempt_rng = rng.substream(0x5EED + attempt);
        if let Ok(model) = fit_em(data, w, base.n_components(), base.structure(), &single_init, &attempt_rng) {
            return Ok((model, true));
        }
    }
    let mut g = base.n_components();
    while g > 1 {
        g -= 1;
        let fallback_rng = rng.substream(0xD0_00 + g as u64);
        if let Ok(model) = fit_em(data, w, g, base.structure(), config, &fallback_rng) {
            return Ok((model, true));
        }
    }
    Err(Error::Bootstrap(
        "replicate refit failed at every fallback".into(),
    ))
}

/// One replicate's entropy under `method`; the flag records fallback use.
pub(crate) fn replicate_entropy(
    data: &Matrix,
    base: &MixtureModel,
    method: BootstrapMethod,
    config: &FitConfig,
    rng: &RngStream,
) -> Result<(f64, bool)> {
    let n = data.n_rows();
    match method {
        BootstrapMethod::Nonparametric => {
            let mut draw_rng = rng.substream(0);
            let indices: Vec<usize> = (0..n)
                .map(|_| rand::Rng::random_range(&mut draw_rng, 0..n))
                .collect();
            let resampled = data.select_rows(&indices);
            let (model, fell_back) =
                refit_with_fallback(base, &resampled, &WeightVector::unit(n), config, rng)?;
            Ok((entropy_estimate(&model, &resampled)?, fell_back))
        }
        BootstrapMethod::Parametric => {
            let mut draw_rng = rng.substream(0);
            let synthetic = base.sample(n, &mut draw_rng)?;
            let (model, fell_back) =
                refit_with_fallback(base, &synthetic, &WeightVector::unit(n), config, rng)?;
            Ok((entropy_estimate(&model, &synthetic)?, fell_back))
        }
        BootstrapMethod::Wlb { alpha } => {
            let mut draw_rng = rng.substream(0);
            let w = gen_weights(WeightScheme::DirichletWlb { alpha }, n, &mut draw_rng)?;
            wlb_replicate(data, base, &w, config, rng)
        }
    }
}

/// Weighted-likelihood replicate with the weights supplied explicitly, so
/// degenerate weightings are directly testable.
pub(crate) fn wlb_replicate(
    data: &Matrix,
    base: &MixtureModel,
    w: &WeightVector,
    config: &FitConfig,
    rng: &RngStream,
) -> Result<(f64, bool)> {
    let (model, fell_back) = refit_with_fallback(base, data, w, config, rng)?;
    Ok((weighted_entropy_estimate(&model, data, w)?, fell_back))
}

/// Generate `n_replicates` bootstrap entropies for `base_model` on `data`.
///
/// Replicates use substreams indexed by replicate number, so results are
/// independent of thread scheduling. Fails when more than 10% of replicates
/// cannot be refit even after fallbacks.
pub fn bootstrap_entropy(
    data: &Matrix,
    base_model: &MixtureModel,
    method: BootstrapMethod,
    n_replicates: usize,
    config: &FitConfig,
    rng: &RngStream,
) -> Result<BootstrapDistribution> {
    method.validate()?;
    if n_replicates == 0 {
        return Err(Error::InvalidConfig("need at least 1 replicate".into()));
    }
    if data.n_cols() != base_model.dim() {
        return Err(Error::DimensionMismatch {
            expected: base_model.dim(),
            got: data.n_cols(),
            context: "data dimension vs base model",
        });
    }
    let point_estimate = entropy_estimate(base_model, data)?;

    let outcomes: Vec<Result<(f64, bool)>> = (0..n_replicates)
        .into_par_iter()
        .map(|b| replicate_entropy(data, base_model, method, config, &rng.substream(b as u64)))
        .collect();

    let mut replicates = Vec::with_capacity(n_replicates);
    let mut n_collapsed_retries = 0usize;
    let mut n_failed = 0usize;
    let mut last_failure = String::new();
    for outcome in outcomes {
        match outcome {
            Ok((value, fell_back)) => {
                replicates.push(value);
                if fell_back {
                    n_collapsed_retries += 1;
                }
            }
            Err(e) => {
                n_failed += 1;
                last_failure = e.to_string();
            }
        }
    }
    if n_failed * 10 > n_replicates {
        return Err(Error::Bootstrap(format!(
            "{n_failed} of {n_replicates} replicates failed irrecoverably; last: {last_failure}"
        )));
    }
    if replicates.is_empty() {
        return Err(Error::Bootstrap(format!(
            "all replicates failed; last: {last_failure}"
        )));
    }
    BootstrapDistribution::new(point_estimate, replicates, method, n_collapsed_retries)
}
