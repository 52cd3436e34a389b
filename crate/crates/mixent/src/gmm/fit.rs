//! EM fitting and model selection.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::RngStream;
use crate::weights::WeightVector;

use super::{
    build_caches, e_step_into, m_step_core, CovarianceStructure, EStepWorkspace, FittedParams,
    MixtureModel, Responsibilities,
};

/// Knobs for EM fitting and BIC selection.
#[derive(Debug, Clone)]
pub struct FitConfig {
    pub max_iter: usize,
    /// Relative log-likelihood change declaring convergence.
    pub tol: f64,
    /// Random restarts per (G, structure) fit.
    pub n_init: usize,
    /// Covariance eigenvalue floor; `None` derives 1e-8 times the mean
    /// per-coordinate data variance.
    pub reg_floor: Option<f64>,
    /// Candidate component counts for [`select_model`].
    pub g_range: Vec<usize>,
    /// Candidate covariance structures for [`select_model`].
    pub structures: Vec<CovarianceStructure>,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            max_iter: 500,
            tol: 1e-6,
            n_init: 5,
            reg_floor: None,
            g_range: (1..=5).collect(),
            structures: vec![
                CovarianceStructure::UnivariateEqual,
                CovarianceStructure::UnivariateVarying,
            ],
        }
    }
}

impl FitConfig {
    /// Default candidate set for data of dimension `d`.
    pub fn for_dim(d: usize) -> Self {
        let structures = if d == 1 {
            vec![
                CovarianceStructure::UnivariateEqual,
                CovarianceStructure::UnivariateVarying,
            ]
        } else {
            vec![
                CovarianceStructure::SphericalEqual,
                CovarianceStructure::SphericalVarying,
                CovarianceStructure::DiagonalVarying,
                CovarianceStructure::FullEqual,
                CovarianceStructure::FullVarying,
            ]
        };
        FitConfig {
            structures,
            ..FitConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iter < 1 {
            return Err(Error::InvalidConfig("max_iter must be >= 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::domain("tol", "> 0", self.tol));
        }
        if self.n_init < 1 {
            return Err(Error::InvalidConfig("n_init must be >= 1".into()));
        }
        if let Some(f) = self.reg_floor {
            if !(f >= 0.0) {
                return Err(Error::domain("reg_floor", ">= 0", f));
            }
        }
        Ok(())
    }

    pub(crate) fn resolve_reg_floor(&self, data: &Matrix) -> f64 {
        if let Some(f) = self.reg_floor {
            return f;
        }
        let n = data.n_rows();
        let d = data.n_cols();
        if n == 0 || d == 0 {
            return 0.0;
        }
        let mut total_var = 0.0;
        for j in 0..d {
            let mut sum = 0.0;
            for i in 0..n {
                sum += data.get(i, j);
            }
            let mean = sum / n as f64;
            let mut ss = 0.0;
            for i in 0..n {
                let dev = data.get(i, j) - mean;
                ss += dev * dev;
            }
            total_var += ss / n as f64;
        }
        1e-8 * total_var / d as f64
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-means++ seeding: the first center is uniform, each next center is drawn
/// with probability proportional to its squared distance from the chosen set.
/// Fails with `Collapsed` when the data cannot support `g` distinct centers.
fn kmeanspp_centers<R: Rng + ?Sized>(data: &Matrix, g: usize, rng: &mut R) -> Result<Vec<usize>> {
    let n = data.n_rows();
    let mut centers = Vec::with_capacity(g);
    centers.push(rng.random_range(0..n));
    let mut dist2: Vec<f64> = (0..n)
        .map(|i| squared_distance(data.row(i), data.row(centers[0])))
        .collect();
    while centers.len() < g {
        let total: f64 = dist2.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Collapsed);
        }
        let mut target = rng.random::<f64>() * total;
        let mut chosen = n - 1;
        for (i, &d2) in dist2.iter().enumerate() {
            target -= d2;
            if target <= 0.0 {
                chosen = i;
                break;
            }
        }
        centers.push(chosen);
        for i in 0..n {
            let d2 = squared_distance(data.row(i), data.row(chosen));
            if d2 < dist2[i] {
                dist2[i] = d2;
            }
        }
    }
    Ok(centers)
}

fn nearest_center_labels(data: &Matrix, centers: &[usize]) -> Vec<usize> {
    (0..data.n_rows())
        .map(|i| {
            let x = data.row(i);
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (k, &c) in centers.iter().enumerate() {
                let d2 = squared_distance(x, data.row(c));
                if d2 < best_d {
                    best_d = d2;
                    best = k;
                }
            }
            best
        })
        .collect()
}

/// One EM attempt from explicit starting parameters: returns the final
/// parameters together with the weighted log-likelihood they attain.
fn em_iterate(
    data: &Matrix,
    w: &[f64],
    start: FittedParams,
    structure: CovarianceStructure,
    reg_floor: f64,
    config: &FitConfig,
) -> Result<(FittedParams, f64)> {
    let n = data.n_rows();
    let g = start.weights.len();
    let mut ws = EStepWorkspace::new(n, g, data.n_cols());

    let mut caches = build_caches(&start.weights, &start.means, &start.covariances)?;
    e_step_into(&caches, data, &mut ws);
    let mut wll = weighted_sum(&ws.point_loglik, w);
    if !wll.is_finite() {
        return Err(Error::Collapsed);
    }

    let mut params = start;
    for _ in 0..config.max_iter {
        params = m_step_core(&ws.resp, data, w, structure, reg_floor)?;
        caches = build_caches(&params.weights, &params.means, &params.covariances)
            .map_err(|_| Error::Collapsed)?;
        e_step_into(&caches, data, &mut ws);
        let wll_new = weighted_sum(&ws.point_loglik, w);
        if !wll_new.is_finite() {
            return Err(Error::Collapsed);
        }
        let done = (wll_new - wll).abs() <= config.tol * (1.0 + wll_new.abs());
        wll = wll_new;
        if done {
            break;
        }
    }
    Ok((params, wll))
}

fn weighted_sum(values: &[f64], w: &[f64]) -> f64 {
    values.iter().zip(w).map(|(v, wi)| v * wi).sum()
}

fn validate_fit_inputs(data: &Matrix, w: &WeightVector, g: usize) -> Result<()> {
    let n = data.n_rows();
    if n == 0 || data.n_cols() == 0 {
        return Err(Error::EmptyInput("empty data matrix"));
    }
    if !data.is_finite() {
        return Err(Error::DegenerateData("non-finite data values".into()));
    }
    if w.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: w.len(),
            context: "weight vector length",
        });
    }
    if g == 0 {
        return Err(Error::InvalidConfig("G must be >= 1".into()));
    }
    if n <= g {
        return Err(Error::InvalidConfig(format!(
            "need more observations than components (n = {n}, G = {g})"
        )));
    }
    Ok(())
}

/// Fit a G-component mixture with per-observation weights by EM.
///
/// Runs `config.n_init` k-means++-seeded starts (a single deterministic start
/// when G = 1) and keeps the fit with the highest weighted log-likelihood.
/// The model's `loglik` is that weighted value; BIC uses the raw observation
/// count in its penalty.
pub fn fit_em(
    data: &Matrix,
    w: &WeightVector,
    g: usize,
    structure: CovarianceStructure,
    config: &FitConfig,
    rng: &RngStream,
) -> Result<MixtureModel> {
    validate_fit_inputs(data, w, g)?;
    config.validate()?;
    let reg_floor = config.resolve_reg_floor(data);
    let n = data.n_rows();

    let n_attempts = if g == 1 { 1 } else { config.n_init };
    let mut best: Option<(FittedParams, f64)> = None;
    let mut last_err: Option<Error> = None;
    for attempt in 0..n_attempts {
        let mut attempt_rng = rng.substream(attempt as u64);
        let outcome = (|| {
            let labels = if g == 1 {
                vec![0; n]
            } else {
                let centers = kmeanspp_centers(data, g, &mut attempt_rng)?;
                nearest_center_labels(data, &centers)
            };
            let hard = Responsibilities::one_hot(n, g, &labels);
            let start = m_step_core(hard.matrix(), data, w.values(), structure, reg_floor)?;
            em_iterate(data, w.values(), start, structure, reg_floor, config)
        })();
        match outcome {
            Ok((params, wll)) => {
                if best.as_ref().map_or(true, |(_, b)| wll > *b) {
                    best = Some((params, wll));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }

    match best {
        Some((params, wll)) => MixtureModel::new(
            params.weights,
            params.means,
            params.covariances,
            structure,
            wll,
            n,
        ),
        None => Err(Error::AllInitsFailed(format!(
            "G = {g}, structure = {}: {}",
            structure.label(),
            last_err.map_or_else(|| "no attempts ran".into(), |e| e.to_string())
        ))),
    }
}

/// EM from an existing model's parameters (used by bootstrap refits, which
/// perturb the data or weights only slightly).
pub(crate) fn fit_em_from(
    data: &Matrix,
    w: &WeightVector,
    init: &MixtureModel,
    config: &FitConfig,
) -> Result<MixtureModel> {
    validate_fit_inputs(data, w, init.n_components())?;
    if data.n_cols() != init.dim() {
        return Err(Error::DimensionMismatch {
            expected: init.dim(),
            got: data.n_cols(),
            context: "data dimension vs warm-start model",
        });
    }
    let reg_floor = config.resolve_reg_floor(data);
    let start = FittedParams {
        weights: init.weights().to_vec(),
        means: init.means().to_vec(),
        covariances: init.covariances().to_vec(),
    };
    let (params, wll) = em_iterate(
        data,
        w.values(),
        start,
        init.structure(),
        reg_floor,
        config,
    )?;
    MixtureModel::new(
        params.weights,
        params.means,
        params.covariances,
        init.structure(),
        wll,
        data.n_rows(),
    )
}

/// Fit every candidate (G, structure) pair and return the highest-BIC model.
///
/// Ties break toward fewer parameters, then fewer components. Candidates that
/// fail to fit are skipped; the error propagates only when every candidate
/// fails.
pub fn select_model(
    data: &Matrix,
    w: &WeightVector,
    config: &FitConfig,
    rng: &RngStream,
) -> Result<MixtureModel> {
    if config.g_range.is_empty() || config.structures.is_empty() {
        return Err(Error::InvalidConfig(
            "selection needs nonempty g_range and structures".into(),
        ));
    }
    let n = data.n_rows();
    let d = data.n_cols();
    let mut best: Option<MixtureModel> = None;
    let mut last_err: Option<Error> = None;
    for (si, &structure) in config.structures.iter().enumerate() {
        for (gi, &g) in config.g_range.iter().enumerate() {
            if !candidate_allowed(d, n, g, structure) {
                continue;
            }
            let tag = (si * config.g_range.len() + gi) as u64;
            let candidate_rng = rng.substream(tag);
            match fit_em(data, w, g, structure, config, &candidate_rng) {
                Ok(model) => {
                    let better = match &best {
                        None => true,
                        Some(b) => {
                            (model.bic(), b.n_params(), b.n_components())
                                > (b.bic(), model.n_params(), model.n_components())
                        }
                    };
                    if better {
                        best = Some(model);
                    }
                }
                Err(e) => last_err = Some(e),
            }
        }
    }
    best.ok_or_else(|| {
        Error::AllInitsFailed(format!(
            "every (G, structure) candidate failed; last error: {}",
            last_err.map_or_else(|| "none attempted".into(), |e| e.to_string())
        ))
    })
}

fn candidate_allowed(d: usize, n: usize, g: usize, structure: CovarianceStructure) -> bool {
    if g == 0 || n <= g {
        return false;
    }
    if structure.is_univariate_only() && d != 1 {
        return false;
    }
    // Per-component full covariances outgrow the small-sample settings in
    // high dimension; cap their component count there.
    if structure == CovarianceStructure::FullVarying && d >= 10 && g > 3 {
        return false;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gmm::e_step;
    use crate::sim::{sample, TrueDistribution};
    use crate::weights::{gen_weights, Normalization, WeightScheme};

    fn gaussian_data(n: usize, seed: u64) -> Matrix {
        let mut rng = RngStream::new(seed, 0);
        sample(
            &TrueDistribution::Gaussian {
                mu: 0.0,
                sigma: 1.0,
            },
            n,
            &mut rng,
        )
    }

    fn two_cluster_data(n: usize, seed: u64) -> Matrix {
        let mut rng = RngStream::new(seed, 0);
        sample(
            &TrueDistribution::MixedGaussian {
                mu: 4.0,
                sigma: 1.0,
            },
            n,
            &mut rng,
        )
    }

    #[test]
    fn single_component_matches_weighted_moments() {
        let data = gaussian_data(500, 3);
        let mut wrng = RngStream::new(9, 0);
        let w = gen_weights(WeightScheme::DirichletWlb { alpha: 1.0 }, 500, &mut wrng).unwrap();
        let model = fit_em(
            &data,
            &w,
            1,
            CovarianceStructure::UnivariateVarying,
            &FitConfig::default(),
            &RngStream::new(1, 1),
        )
        .unwrap();
        let sw = w.sum();
        let mean: f64 = (0..500).map(|i| w.values()[i] * data.get(i, 0)).sum::<f64>() / sw;
        let var: f64 = (0..500)
            .map(|i| w.values()[i] * (data.get(i, 0) - mean).powi(2))
            .sum::<f64>()
            / sw;
        assert!((model.means()[0][0] - mean).abs() < 1e-9);
        assert!((model.covariances()[0].get(0, 0) - var).abs() < 1e-9);
    }

    #[test]
    fn recovers_separated_cluster_means() {
        let data = two_cluster_data(1000, 21);
        let model = fit_em(
            &data,
            &WeightVector::unit(1000),
            2,
            CovarianceStructure::UnivariateVarying,
            &FitConfig::default(),
            &RngStream::new(2, 0),
        )
        .unwrap();
        let mut mus: Vec<f64> = model.means().iter().map(|m| m[0]).collect();
        mus.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((mus[0] + 4.0).abs() < 0.1, "low mean {}", mus[0]);
        assert!((mus[1] - 4.0).abs() < 0.1, "high mean {}", mus[1]);
    }

    #[test]
    fn weighted_loglik_is_monotone_over_iterations() {
        // Run EM manually and track the weighted log-likelihood path.
        let data = two_cluster_data(300, 33);
        let w = {
            let mut wrng = RngStream::new(5, 5);
            gen_weights(WeightScheme::DirichletWlb { alpha: 0.8137 }, 300, &mut wrng).unwrap()
        };
        let reg_floor = FitConfig::default().resolve_reg_floor(&data);
        let mut rng = RngStream::new(7, 7);
        let centers = kmeanspp_centers(&data, 2, &mut rng).unwrap();
        let labels = nearest_center_labels(&data, &centers);
        let hard = Responsibilities::one_hot(300, 2, &labels);
        let mut params = m_step_core(
            hard.matrix(),
            &data,
            w.values(),
            CovarianceStructure::UnivariateVarying,
            reg_floor,
        )
        .unwrap();
        let mut ws = EStepWorkspace::new(300, 2, 1);
        let mut caches = build_caches(&params.weights, &params.means, &params.covariances).unwrap();
        e_step_into(&caches, &data, &mut ws);
        let mut prev = weighted_sum(&ws.point_loglik, w.values());
        for _ in 0..60 {
            params = m_step_core(
                &ws.resp,
                &data,
                w.values(),
                CovarianceStructure::UnivariateVarying,
                reg_floor,
            )
            .unwrap();
            caches = build_caches(&params.weights, &params.means, &params.covariances).unwrap();
            e_step_into(&caches, &data, &mut ws);
            let cur = weighted_sum(&ws.point_loglik, w.values());
            assert!(
                cur >= prev - 1e-8 * (1.0 + prev.abs()),
                "weighted loglik decreased: {prev} -> {cur}"
            );
            prev = cur;
        }
    }

    #[test]
    fn weight_scaling_leaves_parameters_unchanged() {
        let data = two_cluster_data(400, 55);
        let base = WeightVector::unit(400);
        let scaled = WeightVector::new(vec![3.7; 400], Normalization::Raw).unwrap();
        let cfg = FitConfig::default();
        let rng = RngStream::new(4, 4);
        let m1 = fit_em(
            &data,
            &base,
            2,
            CovarianceStructure::UnivariateVarying,
            &cfg,
            &rng,
        )
        .unwrap();
        let m2 = fit_em(
            &data,
            &scaled,
            2,
            CovarianceStructure::UnivariateVarying,
            &cfg,
            &rng,
        )
        .unwrap();
        for k in 0..2 {
            assert!((m1.means()[k][0] - m2.means()[k][0]).abs() < 1e-9);
            assert!(
                (m1.covariances()[k].get(0, 0) - m2.covariances()[k].get(0, 0)).abs() < 1e-9
            );
            assert!((m1.weights()[k] - m2.weights()[k]).abs() < 1e-11);
        }
        // Log-likelihood scales by the weight factor.
        assert!((m2.loglik() - 3.7 * m1.loglik()).abs() < 1e-6 * m1.loglik().abs());
    }

    #[test]
    fn multinomial_count_weights_equal_expanded_data_loglik() {
        let data = gaussian_data(120, 77);
        let mut wrng = RngStream::new(6, 6);
        let counts = gen_weights(WeightScheme::MultinomialBs, 120, &mut wrng).unwrap();
        let cfg = FitConfig::default();
        let model = fit_em(
            &data,
            &counts,
            2,
            CovarianceStructure::UnivariateVarying,
            &cfg,
            &RngStream::new(8, 8),
        )
        .unwrap();

        // Expand rows by their counts and evaluate the unweighted likelihood
        // at the same parameters.
        let mut rows = Vec::new();
        for (i, &c) in counts.values().iter().enumerate() {
            for _ in 0..c as usize {
                rows.push(data.row(i).to_vec());
            }
        }
        let expanded = Matrix::from_rows(&rows).unwrap();
        let (_, expanded_ll) = e_step(&model, &expanded).unwrap();
        assert!(
            (model.loglik() - expanded_ll).abs() <= 1e-9 * (1.0 + expanded_ll.abs()),
            "weighted {} vs expanded {}",
            model.loglik(),
            expanded_ll
        );
    }

    #[test]
    fn fit_requires_more_points_than_components() {
        let data = gaussian_data(3, 1);
        assert!(fit_em(
            &data,
            &WeightVector::unit(3),
            3,
            CovarianceStructure::UnivariateVarying,
            &FitConfig::default(),
            &RngStream::new(0, 0),
        )
        .is_err());
    }

    #[test]
    fn constant_data_is_degenerate() {
        let data = Matrix::from_rows(&vec![vec![2.5]; 50]).unwrap();
        let err = fit_em(
            &data,
            &WeightVector::unit(50),
            1,
            CovarianceStructure::UnivariateVarying,
            &FitConfig::default(),
            &RngStream::new(0, 0),
        )
        .unwrap_err();
        assert!(matches!(err, Error::AllInitsFailed(_)), "got {err:?}");
    }

    #[test]
    fn selection_returns_single_candidate_unconditionally() {
        let data = gaussian_data(80, 10);
        let cfg = FitConfig {
            g_range: vec![2],
            structures: vec![CovarianceStructure::UnivariateEqual],
            ..FitConfig::default()
        };
        let model =
            select_model(&data, &WeightVector::unit(80), &cfg, &RngStream::new(3, 3)).unwrap();
        assert_eq!(model.n_components(), 2);
        assert_eq!(model.structure(), CovarianceStructure::UnivariateEqual);
    }

    #[test]
    fn selection_prefers_one_component_for_gaussian_data() {
        let mut picks_g1 = 0;
        for rep in 0..20 {
            let data = gaussian_data(1000, 100 + rep);
            let model = select_model(
                &data,
                &WeightVector::unit(1000),
                &FitConfig::default(),
                &RngStream::new(50 + rep, 0),
            )
            .unwrap();
            if model.n_components() == 1 {
                picks_g1 += 1;
            }
        }
        assert!(picks_g1 >= 18, "G=1 picked only {picks_g1}/20 times");
    }

    #[test]
    fn selection_finds_two_modes_in_bimodal_data() {
        let mut picks_g2 = 0;
        for rep in 0..10 {
            let mut rng = RngStream::new(400 + rep, 0);
            let data = sample(
                &TrueDistribution::MixedGaussian {
                    mu: 2.0,
                    sigma: 1.0,
                },
                1000,
                &mut rng,
            );
            let model = select_model(
                &data,
                &WeightVector::unit(1000),
                &FitConfig::default(),
                &RngStream::new(500 + rep, 0),
            )
            .unwrap();
            if model.n_components() >= 2 {
                picks_g2 += 1;
            }
        }
        assert!(picks_g2 >= 6, "G>=2 picked only {picks_g2}/10 times");
    }

    #[test]
    fn selection_is_deterministic_given_stream() {
        let data = two_cluster_data(300, 9);
        let rng = RngStream::new(77, 7);
        let cfg = FitConfig::default();
        let a = select_model(&data, &WeightVector::unit(300), &cfg, &rng).unwrap();
        let b = select_model(&data, &WeightVector::unit(300), &cfg, &rng).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn permuting_rows_keeps_selected_bic() {
        let data = two_cluster_data(300, 13);
        let perm: Vec<usize> = (0..300).rev().collect();
        let permuted = data.select_rows(&perm);
        let cfg = FitConfig::default();
        let a = select_model(
            &data,
            &WeightVector::unit(300),
            &cfg,
            &RngStream::new(1, 2),
        )
        .unwrap();
        let b = select_model(
            &permuted,
            &WeightVector::unit(300),
            &cfg,
            &RngStream::new(1, 2),
        )
        .unwrap();
        assert!(
            (a.bic() - b.bic()).abs() < 1e-6 * (1.0 + a.bic().abs()),
            "BIC changed under permutation: {} vs {}",
            a.bic(),
            b.bic()
        );
    }

    #[test]
    fn warm_start_refit_converges() {
        let data = two_cluster_data(400, 99);
        let cfg = FitConfig::default();
        let base = fit_em(
            &data,
            &WeightVector::unit(400),
            2,
            CovarianceStructure::UnivariateVarying,
            &cfg,
            &RngStream::new(11, 0),
        )
        .unwrap();
        let mut wrng = RngStream::new(12, 0);
        let w = gen_weights(WeightScheme::DirichletWlb { alpha: 0.8137 }, 400, &mut wrng).unwrap();
        let refit = fit_em_from(&data, &w, &base, &cfg).unwrap();
        assert_eq!(refit.n_components(), 2);
        assert_eq!(refit.structure(), base.structure());
        // Perturbed weights move parameters only modestly.
        let mut base_mus: Vec<f64> = base.means().iter().map(|m| m[0]).collect();
        let mut refit_mus: Vec<f64> = refit.means().iter().map(|m| m[0]).collect();
        base_mus.sort_by(|a, b| a.partial_cmp(b).unwrap());
        refit_mus.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in base_mus.iter().zip(&refit_mus) {
            assert!((a - b).abs() < 0.5, "warm refit jumped: {a} vs {b}");
        }
    }

    #[test]
    fn full_varying_capped_in_high_dimension() {
        assert!(candidate_allowed(
            10,
            100,
            3,
            CovarianceStructure::FullVarying
        ));
        assert!(!candidate_allowed(
            10,
            100,
            4,
            CovarianceStructure::FullVarying
        ));
        assert!(candidate_allowed(
            2,
            100,
            5,
            CovarianceStructure::FullVarying
        ));
        assert!(!candidate_allowed(
            2,
            100,
            5,
            CovarianceStructure::UnivariateEqual
        ));
    }
}
