//! Experiment execution: one (distribution, method, n) cell or a whole grid.

use rayon::prelude::*;

use crate::entropy::entropy_estimate;
use crate::error::{Error, Result};
use crate::gmm::{select_model, FitConfig};
use crate::resample::{bootstrap_entropy, BootstrapMethod};
use crate::rng::RngStream;
use crate::weights::WeightVector;

use super::config::ExperimentGrid;
use super::{sample, true_entropy, TrueDistribution};

const TAG_DATA: u64 = 0x11;
const TAG_FIT: u64 = 0x22;
const TAG_BOOT: u64 = 0x33;

/// Aggregates for one (distribution, method, n, level) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub distribution: String,
    pub method: String,
    pub n: usize,
    pub level: f64,
    pub n_reps: usize,
    pub n_boot: usize,
    pub true_entropy: f64,
    pub mean_estimate: f64,
    pub mean_bias: f64,
    pub mean_se: f64,
    pub mean_perc_interval: (f64, f64),
    pub coverage_perc: f64,
    pub mean_cperc_interval: (f64, f64),
    pub coverage_cperc: f64,
    /// Mean absolute bias over mean standard error.
    pub bias_se_ratio: f64,
    /// Total bootstrap replicates that needed a collapse fallback.
    pub n_collapsed: usize,
}

/// One cell failure, kept so a grid run can flush partial results.
#[derive(Debug, Clone)]
pub struct CellFailure {
    pub distribution: String,
    pub method: String,
    pub n: usize,
    pub level: f64,
    pub message: String,
}

/// Either a finished cell or its failure record.
#[derive(Debug, Clone)]
pub enum CellOutcome {
    Ok(SimulationResult),
    Failed(CellFailure),
}

struct LevelRep {
    perc: (f64, f64),
    cperc: (f64, f64),
}

struct MethodRep {
    bias: f64,
    se: f64,
    collapsed: usize,
    levels: Vec<LevelRep>,
}

struct RepOutcome {
    estimate: f64,
    methods: Vec<MethodRep>,
}

/// Run `n_reps` simulation replicates for one distribution and sample size,
/// sharing the sampled data and the BIC-selected base model across all
/// `methods`. Data and base-fit substreams do not depend on the method, so
/// the estimate column is identical across methods, as in a side-by-side
/// comparison on common replicates.
#[allow(clippy::too_many_arguments)]
pub(crate) fn run_cell_group(
    dist: &TrueDistribution,
    methods: &[BootstrapMethod],
    n: usize,
    n_reps: usize,
    n_boot: usize,
    levels: &[f64],
    config: &FitConfig,
    rng: &RngStream,
) -> Result<Vec<SimulationResult>> {
    dist.validate()?;
    for m in methods {
        m.validate()?;
    }
    if n_reps == 0 || n_boot == 0 || methods.is_empty() || levels.is_empty() {
        return Err(Error::InvalidConfig(
            "cell needs n_reps >= 1, B >= 1, and nonempty methods/levels".into(),
        ));
    }
    for &level in levels {
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::domain("level", "in (0, 1)", level));
        }
    }
    let truth = true_entropy(dist)?;

    let reps: Vec<RepOutcome> = (0..n_reps)
        .into_par_iter()
        .map(|r| -> Result<RepOutcome> {
            let rep_rng = rng.substream(r as u64);
            let mut data_rng = rep_rng.substream(TAG_DATA);
            let data = sample(dist, n, &mut data_rng);
            let unit = WeightVector::unit(n);
            let base = select_model(&data, &unit, config, &rep_rng.substream(TAG_FIT))?;
            let estimate = entropy_estimate(&base, &data)?;

            let mut per_method = Vec::with_capacity(methods.len());
            for method in methods {
                let boot_rng = rep_rng.substream(TAG_BOOT ^ method.stream_tag());
                let boot =
                    bootstrap_entropy(&data, &base, *method, n_boot, config, &boot_rng)?;
                let mut level_rows = Vec::with_capacity(levels.len());
                for &level in levels {
                    let p = boot.percentile_interval(level)?;
                    let c = boot.centered_percentile_interval(level)?;
                    level_rows.push(LevelRep {
                        perc: (p.lower, p.upper),
                        cperc: (c.lower, c.upper),
                    });
                }
                // B = 1 smoke runs have no standard error.
                let se = if boot.n_replicates() >= 2 {
                    boot.se()?
                } else {
                    f64::NAN
                };
                per_method.push(MethodRep {
                    bias: boot.bias(),
                    se,
                    collapsed: boot.n_collapsed_retries(),
                    levels: level_rows,
                });
            }
            Ok(RepOutcome {
                estimate,
                methods: per_method,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mean_estimate = reps.iter().map(|r| r.estimate).sum::<f64>() / n_reps as f64;
    let mut results = Vec::with_capacity(methods.len() * levels.len());
    for (mi, method) in methods.iter().enumerate() {
        let mean_bias = reps.iter().map(|r| r.methods[mi].bias).sum::<f64>() / n_reps as f64;
        let mean_abs_bias =
            reps.iter().map(|r| r.methods[mi].bias.abs()).sum::<f64>() / n_reps as f64;
        let mean_se = reps.iter().map(|r| r.methods[mi].se).sum::<f64>() / n_reps as f64;
        let n_collapsed = reps.iter().map(|r| r.methods[mi].collapsed).sum();
        for (li, &level) in levels.iter().enumerate() {
            let mut perc_lo = 0.0;
            let mut perc_hi = 0.0;
            let mut cperc_lo = 0.0;
            let mut cperc_hi = 0.0;
            let mut cover_p = 0usize;
            let mut cover_c = 0usize;
            for rep in &reps {
                let row = &rep.methods[mi].levels[li];
                perc_lo += row.perc.0;
                perc_hi += row.perc.1;
                cperc_lo += row.cperc.0;
                cperc_hi += row.cperc.1;
                if row.perc.0 <= truth && truth <= row.perc.1 {
                    cover_p += 1;
                }
                if row.cperc.0 <= truth && truth <= row.cperc.1 {
                    cover_c += 1;
                }
            }
            let nf = n_reps as f64;
            results.push(SimulationResult {
                distribution: dist.label(),
                method: method.label(),
                n,
                level,
                n_reps,
                n_boot,
                true_entropy: truth,
                mean_estimate,
                mean_bias,
                mean_se,
                mean_perc_interval: (perc_lo / nf, perc_hi / nf),
                coverage_perc: cover_p as f64 / nf,
                mean_cperc_interval: (cperc_lo / nf, cperc_hi / nf),
                coverage_cperc: cover_c as f64 / nf,
                bias_se_ratio: mean_abs_bias / mean_se,
                n_collapsed,
            });
        }
    }
    Ok(results)
}

/// Run one (distribution, method, n) cell at a single interval level.
#[allow(clippy::too_many_arguments)]
pub fn run_cell(
    dist: &TrueDistribution,
    method: BootstrapMethod,
    n: usize,
    n_reps: usize,
    n_boot: usize,
    level: f64,
    config: &FitConfig,
    rng: &RngStream,
) -> Result<SimulationResult> {
    let mut results = run_cell_group(dist, &[method], n, n_reps, n_boot, &[level], config, rng)?;
    Ok(results.remove(0))
}

/// Run the full experiment grid.
///
/// Cell randomness is indexed by (distribution, size) position, and replicate
/// randomness by replicate number, so outputs are invariant to execution
/// order and thread count. Cell failures become failure rows instead of
/// aborting the run.
pub fn run_matrix(grid: &ExperimentGrid) -> Vec<CellOutcome> {
    let master = RngStream::new(grid.seed, 0);
    let mut outcomes = Vec::new();
    for (di, dist) in grid.distributions.iter().enumerate() {
        let config = grid.fit_config(dist.dim());
        for (ni, &n) in grid.sizes.iter().enumerate() {
            let cell_rng = master.substream(((di as u64) << 20) | ni as u64);
            match run_cell_group(
                dist,
                &grid.methods,
                n,
                grid.n_reps,
                grid.n_boot,
                &grid.levels,
                &config,
                &cell_rng,
            ) {
                Ok(results) => outcomes.extend(results.into_iter().map(CellOutcome::Ok)),
                Err(e) => {
                    for method in &grid.methods {
                        for &level in &grid.levels {
                            outcomes.push(CellOutcome::Failed(CellFailure {
                                distribution: dist.label(),
                                method: method.label(),
                                n,
                                level,
                                message: e.to_string(),
                            }));
                        }
                    }
                }
            }
        }
    }
    // Group rows the way the summary tables read: distribution, then method,
    // then sample size.
    let dist_index = |label: &str| {
        grid.distributions
            .iter()
            .position(|d| d.label() == label)
            .unwrap_or(usize::MAX)
    };
    let method_index = |label: &str| {
        grid.methods
            .iter()
            .position(|m| m.label() == label)
            .unwrap_or(usize::MAX)
    };
    outcomes.sort_by_key(|o| match o {
        CellOutcome::Ok(r) => (dist_index(&r.distribution), method_index(&r.method), r.n),
        CellOutcome::Failed(f) => (dist_index(&f.distribution), method_index(&f.method), f.n),
    });
    outcomes
}
