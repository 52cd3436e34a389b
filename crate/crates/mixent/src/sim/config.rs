//! Declarative experiment-grid configuration.

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::gmm::FitConfig;
use crate::resample::BootstrapMethod;

use super::TrueDistribution;

/// A fully resolved experiment grid.
#[derive(Debug, Clone)]
pub struct ExperimentGrid {
    pub distributions: Vec<TrueDistribution>,
    /// Expanded methods: one entry per bootstrap variant (wlb expands over
    /// its alpha list).
    pub methods: Vec<BootstrapMethod>,
    pub sizes: Vec<usize>,
    pub n_reps: usize,
    pub n_boot: usize,
    pub seed: u64,
    pub levels: Vec<f64>,
    pub g_max: usize,
    pub n_init: usize,
}

impl ExperimentGrid {
    pub fn fit_config(&self, d: usize) -> FitConfig {
        FitConfig {
            g_range: (1..=self.g_max).collect(),
            n_init: self.n_init,
            ..FitConfig::for_dim(d)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.distributions.is_empty() || self.methods.is_empty() || self.sizes.is_empty() {
            return Err(Error::InvalidConfig(
                "grid needs nonempty distributions, methods, and sizes".into(),
            ));
        }
        if self.n_reps == 0 || self.n_boot == 0 || self.g_max == 0 || self.n_init == 0 {
            return Err(Error::InvalidConfig(
                "n_reps, B, g_max, and n_init must all be >= 1".into(),
            ));
        }
        for d in &self.distributions {
            d.validate()?;
        }
        for m in &self.methods {
            m.validate()?;
        }
        for &level in &self.levels {
            if !(level > 0.0 && level < 1.0) {
                return Err(Error::domain("level", "in (0, 1)", level));
            }
        }
        Ok(())
    }
}

fn default_alphas() -> Vec<f64> {
    vec![1.0, 4.0, 0.8137]
}

fn default_levels() -> Vec<f64> {
    vec![0.95]
}

fn default_g_max() -> usize {
    5
}

fn default_n_init() -> usize {
    5
}

/// On-disk form: flat keys with typed arrays.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GridFile {
    distributions: Vec<String>,
    methods: Vec<String>,
    #[serde(default = "default_alphas")]
    alphas: Vec<f64>,
    sizes: Vec<usize>,
    n_reps: usize,
    #[serde(rename = "B")]
    n_boot: usize,
    seed: u64,
    #[serde(default = "default_levels")]
    levels: Vec<f64>,
    #[serde(default = "default_g_max")]
    g_max: usize,
    #[serde(default = "default_n_init")]
    n_init: usize,
}

/// The six benchmark generators, by config tag.
pub(crate) fn distribution_from_tag(tag: &str) -> Result<TrueDistribution> {
    match tag {
        "gaussian" => Ok(TrueDistribution::Gaussian {
            mu: 0.0,
            sigma: 1.0,
        }),
        "t" => Ok(TrueDistribution::StudentT { df: 3.0 }),
        "mixed_gaussian" => Ok(TrueDistribution::MixedGaussian {
            mu: 2.0,
            sigma: 1.0,
        }),
        "laplace" => Ok(TrueDistribution::Laplace { mu: 0.0, beta: 2.0 }),
        "bivariate_gaussian" => Ok(TrueDistribution::BivariateGaussian {
            mean: [0.0, 0.0],
            cov: [[1.0, 0.8], [0.8, 2.0]],
        }),
        "chisq" => Ok(TrueDistribution::IndepChiSq { df: 5.0, d: 10 }),
        other => Err(Error::InvalidConfig(format!(
            "unknown distribution tag '{other}' (expected one of: gaussian, t, \
             mixed_gaussian, laplace, bivariate_gaussian, chisq)"
        ))),
    }
}

/// Parse a grid from flat TOML key/value text.
pub fn parse_grid_toml(text: &str) -> Result<ExperimentGrid> {
    let file: GridFile = toml::from_str(text)
        .map_err(|e| Error::InvalidConfig(format!("config parse error: {e}")))?;
    let distributions = file
        .distributions
        .iter()
        .map(|t| distribution_from_tag(t))
        .collect::<Result<Vec<_>>>()?;
    let mut methods = Vec::new();
    for tag in &file.methods {
        match tag.as_str() {
            "bs" => methods.push(BootstrapMethod::Nonparametric),
            "pb" => methods.push(BootstrapMethod::Parametric),
            "wlb" => {
                if file.alphas.is_empty() {
                    return Err(Error::InvalidConfig(
                        "method 'wlb' requires a nonempty alphas array".into(),
                    ));
                }
                for &alpha in &file.alphas {
                    methods.push(BootstrapMethod::Wlb { alpha });
                }
            }
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown method tag '{other}' (expected bs, pb, or wlb)"
                )));
            }
        }
    }
    let grid = ExperimentGrid {
        distributions,
        methods,
        sizes: file.sizes,
        n_reps: file.n_reps,
        n_boot: file.n_boot,
        seed: file.seed,
        levels: file.levels,
        g_max: file.g_max,
        n_init: file.n_init,
    };
    grid.validate()?;
    Ok(grid)
}
