//! Gaussian mixture models with weighted EM fitting and BIC selection.
//!
//! Covariances follow a declared [`CovarianceStructure`]: equal or varying
//! across components, and spherical, diagonal, or full within a component
//! (with dedicated tags for the univariate case). The M-step projects the
//! weighted scatter onto the declared structure, so fitted models satisfy it
//! exactly.

mod fit;

pub use fit::{fit_em, select_model, FitConfig};
pub(crate) use fit::fit_em_from;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky_lower, Matrix};
use crate::weights::WeightVector;

const LN_2_PI: f64 = 1.837_877_066_409_345_5;

/// Constraint family for component covariance matrices.
///
/// `Equal` tags share one matrix across all components; `Varying` tags give
/// each component its own. Spherical and diagonal tags constrain the shape
/// within a component. The univariate tags are the d = 1 specializations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceStructure {
    UnivariateEqual,
    UnivariateVarying,
    SphericalEqual,
    SphericalVarying,
    DiagonalVarying,
    FullEqual,
    FullVarying,
}

impl CovarianceStructure {
    /// Free covariance parameters contributed by this structure.
    pub fn n_cov_params(&self, d: usize, g: usize) -> usize {
        match self {
            CovarianceStructure::UnivariateEqual | CovarianceStructure::SphericalEqual => 1,
            CovarianceStructure::UnivariateVarying | CovarianceStructure::SphericalVarying => g,
            CovarianceStructure::DiagonalVarying => g * d,
            CovarianceStructure::FullEqual => d * (d + 1) / 2,
            CovarianceStructure::FullVarying => g * d * (d + 1) / 2,
        }
    }

    pub fn is_univariate_only(&self) -> bool {
        matches!(
            self,
            CovarianceStructure::UnivariateEqual | CovarianceStructure::UnivariateVarying
        )
    }

    fn is_equal_across_components(&self) -> bool {
        matches!(
            self,
            CovarianceStructure::UnivariateEqual
                | CovarianceStructure::SphericalEqual
                | CovarianceStructure::FullEqual
        )
    }

    fn is_diagonal(&self) -> bool {
        matches!(
            self,
            CovarianceStructure::UnivariateEqual
                | CovarianceStructure::UnivariateVarying
                | CovarianceStructure::SphericalEqual
                | CovarianceStructure::SphericalVarying
                | CovarianceStructure::DiagonalVarying
        )
    }

    fn is_spherical(&self) -> bool {
        matches!(
            self,
            CovarianceStructure::SphericalEqual | CovarianceStructure::SphericalVarying
        )
    }

    pub fn label(&self) -> &'static str {
        match self {
            CovarianceStructure::UnivariateEqual => "univariate_equal",
            CovarianceStructure::UnivariateVarying => "univariate_varying",
            CovarianceStructure::SphericalEqual => "spherical_equal",
            CovarianceStructure::SphericalVarying => "spherical_varying",
            CovarianceStructure::DiagonalVarying => "diagonal_varying",
            CovarianceStructure::FullEqual => "full_equal",
            CovarianceStructure::FullVarying => "full_varying",
        }
    }
}

/// Total free parameters: mixing weights, means, and covariance terms.
pub fn n_free_params(structure: CovarianceStructure, d: usize, g: usize) -> usize {
    (g - 1) + g * d + structure.n_cov_params(d, g)
}

/// A fitted G-component Gaussian mixture. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureModel {
    d: usize,
    g: usize,
    weights: Vec<f64>,
    means: Vec<Vec<f64>>,
    covariances: Vec<Matrix>,
    structure: CovarianceStructure,
    loglik: f64,
    n_params: usize,
    bic: f64,
}

impl MixtureModel {
    /// Build and validate a model; `n_obs` is the observation count that
    /// enters the BIC penalty (the raw count, also under weighted fits).
    pub fn new(
        weights: Vec<f64>,
        means: Vec<Vec<f64>>,
        covariances: Vec<Matrix>,
        structure: CovarianceStructure,
        loglik: f64,
        n_obs: usize,
    ) -> Result<Self> {
        let g = weights.len();
        let d = means.first().map(|m| m.len()).unwrap_or(0);
        let n_params = n_free_params(structure, d, g);
        let bic = 2.0 * loglik - n_params as f64 * (n_obs as f64).ln();
        Self::from_parts(weights, means, covariances, structure, loglik, n_params, bic)
    }

    pub(crate) fn from_parts(
        weights: Vec<f64>,
        means: Vec<Vec<f64>>,
        covariances: Vec<Matrix>,
        structure: CovarianceStructure,
        loglik: f64,
        n_params: usize,
        bic: f64,
    ) -> Result<Self> {
        let g = weights.len();
        if g == 0 {
            return Err(Error::EmptyInput("mixture with no components"));
        }
        if means.len() != g || covariances.len() != g {
            return Err(Error::DimensionMismatch {
                expected: g,
                got: means.len().min(covariances.len()),
                context: "component count across weights/means/covariances",
            });
        }
        let d = means[0].len();
        if d == 0 {
            return Err(Error::EmptyInput("zero-dimensional mean"));
        }
        let mut total = 0.0;
        for &p in &weights {
            if !(p > 0.0) {
                return Err(Error::domain("mixing weight", "> 0", p));
            }
            total += p;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConfig(format!(
                "mixing weights sum to {total}, expected 1"
            )));
        }
        if !loglik.is_finite() {
            return Err(Error::domain("loglik", "finite", loglik));
        }
        for m in &means {
            if m.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: m.len(),
                    context: "mean length",
                });
            }
            if !m.iter().all(|v| v.is_finite()) {
                return Err(Error::DegenerateData("non-finite component mean".into()));
            }
        }
        let model = MixtureModel {
            d,
            g,
            weights,
            means,
            covariances,
            structure,
            loglik,
            n_params,
            bic,
        };
        model.check_structure()?;
        // Every covariance must factor.
        model.caches()?;
        Ok(model)
    }

    fn check_structure(&self) -> Result<()> {
        let s = self.structure;
        if s.is_univariate_only() && self.d != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: self.d,
                context: "univariate covariance structure",
            });
        }
        for cov in &self.covariances {
            if cov.n_rows() != self.d || cov.n_cols() != self.d {
                return Err(Error::DimensionMismatch {
                    expected: self.d,
                    got: cov.n_rows(),
                    context: "covariance order",
                });
            }
            if s.is_diagonal() {
                for i in 0..self.d {
                    for j in 0..self.d {
                        if i != j && cov.get(i, j) != 0.0 {
                            return Err(Error::InvalidConfig(format!(
                                "structure {} requires zero off-diagonals",
                                s.label()
                            )));
                        }
                    }
                }
            }
            if s.is_spherical() {
                let v = cov.get(0, 0);
                if (1..self.d).any(|j| cov.get(j, j) != v) {
                    return Err(Error::InvalidConfig(format!(
                        "structure {} requires a common variance on the diagonal",
                        s.label()
                    )));
                }
            }
        }
        if s.is_equal_across_components() {
            let first = &self.covariances[0];
            if self.covariances.iter().any(|c| c != first) {
                return Err(Error::InvalidConfig(format!(
                    "structure {} requires identical covariances across components",
                    s.label()
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn n_components(&self) -> usize {
        self.g
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> &[Vec<f64>] {
        &self.means
    }

    pub fn covariances(&self) -> &[Matrix] {
        &self.covariances
    }

    pub fn structure(&self) -> CovarianceStructure {
        self.structure
    }

    pub fn loglik(&self) -> f64 {
        self.loglik
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn bic(&self) -> f64 {
        self.bic
    }

    /// Draw `n` i.i.d. points from the mixture.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Matrix> {
        let caches = self.caches()?;
        let mut out = Matrix::zeros(n, self.d);
        let mut z = vec![0.0; self.d];
        for i in 0..n {
            let u: f64 = rng.random();
            let mut k = 0;
            let mut cum = self.weights[0];
            while u > cum && k + 1 < self.g {
                k += 1;
                cum += self.weights[k];
            }
            for zj in z.iter_mut() {
                *zj = StandardNormal.sample(rng);
            }
            let row = out.row_mut(i);
            let chol = &caches[k].chol;
            for j in 0..self.d {
                let mut acc = self.means[k][j];
                for (l, zl) in z.iter().enumerate().take(j + 1) {
                    acc += chol.get(j, l) * zl;
                }
                row[j] = acc;
            }
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        let mirror = ModelJson {
            d: self.d,
            g: self.g,
            structure: self.structure,
            weights: self.weights.clone(),
            means: self.means.clone(),
            covariances: self
                .covariances
                .iter()
                .map(|c| c.as_slice().to_vec())
                .collect(),
            loglik: self.loglik,
            n_params: self.n_params,
            bic: self.bic,
        };
        Ok(serde_json::to_string_pretty(&mirror)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mirror: ModelJson = serde_json::from_str(text)?;
        let covariances = mirror
            .covariances
            .into_iter()
            .map(|flat| Matrix::from_row_major(mirror.d, mirror.d, flat))
            .collect::<Result<Vec<_>>>()?;
        if mirror.n_params != n_free_params(mirror.structure, mirror.d, mirror.g) {
            return Err(Error::InvalidConfig(format!(
                "stored n_params {} does not match structure {}",
                mirror.n_params,
                mirror.structure.label()
            )));
        }
        Self::from_parts(
            mirror.weights,
            mirror.means,
            covariances,
            mirror.structure,
            mirror.loglik,
            mirror.n_params,
            mirror.bic,
        )
    }

    pub(crate) fn caches(&self) -> Result<Vec<ComponentCache>> {
        build_caches(&self.weights, &self.means, &self.covariances)
    }
}

/// Serialized form with row-major covariance buffers and stable field names.
#[derive(Serialize, Deserialize)]
struct ModelJson {
    d: usize,
    g: usize,
    structure: CovarianceStructure,
    weights: Vec<f64>,
    means: Vec<Vec<f64>>,
    covariances: Vec<Vec<f64>>,
    loglik: f64,
    n_params: usize,
    bic: f64,
}

/// Conditional component-membership probabilities, one row per observation.
#[derive(Debug, Clone)]
pub struct Responsibilities {
    z: Matrix,
}

impl Responsibilities {
    pub fn from_matrix(z: Matrix) -> Result<Self> {
        for i in 0..z.n_rows() {
            let row = z.row(i);
            let mut sum = 0.0;
            for &v in row {
                if !(0.0..=1.0 + 1e-12).contains(&v) {
                    return Err(Error::domain("responsibility", "in [0, 1]", v));
                }
                sum += v;
            }
            if (sum - 1.0).abs() > 1e-10 {
                return Err(Error::InvalidConfig(format!(
                    "responsibility row {i} sums to {sum}"
                )));
            }
        }
        Ok(Responsibilities { z })
    }

    pub(crate) fn one_hot(n: usize, g: usize, labels: &[usize]) -> Self {
        let mut z = Matrix::zeros(n, g);
        for (i, &k) in labels.iter().enumerate() {
            z.set(i, k, 1.0);
        }
        Responsibilities { z }
    }

    pub fn n_obs(&self) -> usize {
        self.z.n_rows()
    }

    pub fn n_components(&self) -> usize {
        self.z.n_cols()
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.z.get(i, k)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.z
    }
}

/// Per-component quantities reused across density evaluations.
pub(crate) struct ComponentCache {
    pub log_weight: f64,
    pub mean: Vec<f64>,
    pub chol: Matrix,
    pub inv_diag: Vec<f64>,
    pub log_norm: f64,
}

impl ComponentCache {
    pub fn new(weight: f64, mean: &[f64], cov: &Matrix) -> Result<Self> {
        let d = mean.len();
        let chol = cholesky_lower(cov).ok_or(Error::NotPositiveDefinite)?;
        let half_log_det: f64 = (0..d).map(|j| chol.get(j, j).ln()).sum();
        let inv_diag: Vec<f64> = (0..d).map(|j| 1.0 / chol.get(j, j)).collect();
        Ok(ComponentCache {
            log_weight: weight.ln(),
            mean: mean.to_vec(),
            chol,
            inv_diag,
            log_norm: -0.5 * d as f64 * LN_2_PI - half_log_det,
        })
    }

    /// `log phi(x; mean, cov)`; `scratch` must have length >= d.
    #[inline]
    pub fn log_density(&self, x: &[f64], scratch: &mut [f64]) -> f64 {
        let d = self.mean.len();
        let mut quad = 0.0;
        for i in 0..d {
            let mut s = x[i] - self.mean[i];
            let li = self.chol.row(i);
            for (k, yk) in scratch.iter().enumerate().take(i) {
                s -= li[k] * yk;
            }
            let y = s * self.inv_diag[i];
            scratch[i] = y;
            quad += y * y;
        }
        self.log_norm - 0.5 * quad
    }

    /// Entropy of the component's Gaussian: d/2 (1 + ln 2 pi) + 1/2 ln|cov|.
    pub fn gaussian_entropy(&self) -> f64 {
        let d = self.mean.len() as f64;
        let half_log_det = -self.log_norm - 0.5 * d * LN_2_PI;
        0.5 * d * (1.0 + LN_2_PI) + half_log_det
    }
}

pub(crate) fn build_caches(
    weights: &[f64],
    means: &[Vec<f64>],
    covariances: &[Matrix],
) -> Result<Vec<ComponentCache>> {
    weights
        .iter()
        .zip(means)
        .zip(covariances)
        .map(|((&w, m), c)| ComponentCache::new(w, m, c))
        .collect()
}

/// Workspace for repeated E-steps without reallocation.
pub(crate) struct EStepWorkspace {
    pub resp: Matrix,
    pub point_loglik: Vec<f64>,
    scratch: Vec<f64>,
}

impl EStepWorkspace {
    pub fn new(n: usize, g: usize, d: usize) -> Self {
        EStepWorkspace {
            resp: Matrix::zeros(n, g),
            point_loglik: vec![0.0; n],
            scratch: vec![0.0; d],
        }
    }
}

/// Fill responsibilities and per-point mixture log-densities, in log space.
pub(crate) fn e_step_into(caches: &[ComponentCache], data: &Matrix, ws: &mut EStepWorkspace) {
    let g = caches.len();
    for i in 0..data.n_rows() {
        let x = data.row(i);
        let row = ws.resp.row_mut(i);
        let mut max = f64::NEG_INFINITY;
        for (k, cache) in caches.iter().enumerate() {
            let a = cache.log_weight + cache.log_density(x, &mut ws.scratch);
            row[k] = a;
            if a > max {
                max = a;
            }
        }
        let mut sum = 0.0;
        for item in row.iter_mut().take(g) {
            let e = (*item - max).exp();
            *item = e;
            sum += e;
        }
        for item in row.iter_mut().take(g) {
            *item /= sum;
        }
        ws.point_loglik[i] = max + sum.ln();
    }
}

/// Responsibilities and observed-data log-likelihood under `model`.
///
/// The returned log-likelihood is unweighted: `sum_i log f(x_i)`. Weighted
/// fits weight these per-point terms inside [`fit_em`].
pub fn e_step(model: &MixtureModel, data: &Matrix) -> Result<(Responsibilities, f64)> {
    if data.n_cols() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: data.n_cols(),
            context: "data dimension vs model",
        });
    }
    if data.n_rows() == 0 {
        return Err(Error::EmptyInput("E-step on empty data"));
    }
    let caches = model.caches()?;
    let mut ws = EStepWorkspace::new(data.n_rows(), model.n_components(), model.dim());
    e_step_into(&caches, data, &mut ws);
    let loglik = ws.point_loglik.iter().sum();
    Ok((Responsibilities { z: ws.resp }, loglik))
}

/// Parameters produced by one weighted M-step.
#[derive(Debug, Clone)]
pub struct FittedParams {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub covariances: Vec<Matrix>,
}

/// Maximize the weighted complete-data log-likelihood given responsibilities.
///
/// Closed forms: `pi_k = sum_i w_i z_ik / sum_i w_i`, means are
/// `w z`-weighted averages, and covariances come from the weighted scatter
/// projected onto `structure`. Components whose effective mass or variance
/// falls below the floor signal [`Error::Collapsed`] so callers can restart.
pub fn m_step_weighted(
    resp: &Responsibilities,
    data: &Matrix,
    w: &WeightVector,
    structure: CovarianceStructure,
    reg_floor: f64,
) -> Result<FittedParams> {
    let n = data.n_rows();
    if resp.n_obs() != n || w.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: resp.n_obs().min(w.len()),
            context: "rows across data/responsibilities/weights",
        });
    }
    m_step_core(resp.matrix(), data, w.values(), structure, reg_floor)
}

pub(crate) fn m_step_core(
    z: &Matrix,
    data: &Matrix,
    w: &[f64],
    structure: CovarianceStructure,
    reg_floor: f64,
) -> Result<FittedParams> {
    let n = data.n_rows();
    let d = data.n_cols();
    let g = z.n_cols();
    if structure.is_univariate_only() && d != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: d,
            context: "univariate covariance structure",
        });
    }

    let w_total: f64 = w.iter().sum();
    let mass_floor = 1e-10 * w_total;

    let mut mass = vec![0.0; g];
    let mut means = vec![vec![0.0; d]; g];
    for i in 0..n {
        let wi = w[i];
        if wi == 0.0 {
            continue;
        }
        let x = data.row(i);
        let zr = z.row(i);
        for k in 0..g {
            let wz = wi * zr[k];
            if wz == 0.0 {
                continue;
            }
            mass[k] += wz;
            let mk = &mut means[k];
            for j in 0..d {
                mk[j] += wz * x[j];
            }
        }
    }
    for k in 0..g {
        if !(mass[k] > mass_floor) {
            return Err(Error::Collapsed);
        }
        for j in 0..d {
            means[k][j] /= mass[k];
        }
    }

    let mut scatter: Vec<Matrix> = (0..g).map(|_| Matrix::zeros(d, d)).collect();
    let mut dev = vec![0.0; d];
    for i in 0..n {
        let wi = w[i];
        if wi == 0.0 {
            continue;
        }
        let x = data.row(i);
        let zr = z.row(i);
        for k in 0..g {
            let wz = wi * zr[k];
            if wz == 0.0 {
                continue;
            }
            let mk = &means[k];
            for j in 0..d {
                dev[j] = x[j] - mk[j];
            }
            let sk = &mut scatter[k];
            for r in 0..d {
                let wzr = wz * dev[r];
                for c in 0..=r {
                    let v = sk.get(r, c) + wzr * dev[c];
                    sk.set(r, c, v);
                }
            }
        }
    }
    for sk in &mut scatter {
        for r in 0..d {
            for c in 0..r {
                let v = sk.get(r, c);
                sk.set(c, r, v);
            }
        }
    }

    let weights: Vec<f64> = mass.iter().map(|&m| m / w_total).collect();
    let covariances = project_covariances(&scatter, &mass, w_total, d, structure, reg_floor)?;
    Ok(FittedParams {
        weights,
        means,
        covariances,
    })
}

/// Turn per-component scatter matrices into covariances that satisfy the
/// declared structure exactly (shared matrices are clones of one result;
/// diagonal tags zero the off-diagonal by construction).
fn project_covariances(
    scatter: &[Matrix],
    mass: &[f64],
    w_total: f64,
    d: usize,
    structure: CovarianceStructure,
    reg_floor: f64,
) -> Result<Vec<Matrix>> {
    let g = scatter.len();
    let check_var = |v: f64| -> Result<f64> {
        if !v.is_finite() || v <= reg_floor {
            Err(Error::Collapsed)
        } else {
            Ok(v)
        }
    };
    match structure {
        CovarianceStructure::UnivariateEqual | CovarianceStructure::SphericalEqual => {
            let trace: f64 = scatter.iter().map(|s| (0..d).map(|j| s.get(j, j)).sum::<f64>()).sum();
            let var = check_var(trace / (d as f64 * w_total))?;
            let shared = Matrix::scaled_identity(d, var);
            Ok(vec![shared; g])
        }
        CovarianceStructure::UnivariateVarying | CovarianceStructure::SphericalVarying => (0..g)
            .map(|k| {
                let trace: f64 = (0..d).map(|j| scatter[k].get(j, j)).sum();
                let var = check_var(trace / (d as f64 * mass[k]))?;
                Ok(Matrix::scaled_identity(d, var))
            })
            .collect(),
        CovarianceStructure::DiagonalVarying => (0..g)
            .map(|k| {
                let mut cov = Matrix::zeros(d, d);
                for j in 0..d {
                    cov.set(j, j, check_var(scatter[k].get(j, j) / mass[k])?);
                }
                Ok(cov)
            })
            .collect(),
        CovarianceStructure::FullEqual => {
            let mut pooled = Matrix::zeros(d, d);
            for s in scatter {
                for r in 0..d {
                    for c in 0..d {
                        pooled.set(r, c, pooled.get(r, c) + s.get(r, c));
                    }
                }
            }
            for r in 0..d {
                for c in 0..d {
                    pooled.set(r, c, pooled.get(r, c) / w_total);
                }
            }
            check_full(&pooled, reg_floor)?;
            Ok(vec![pooled; g])
        }
        CovarianceStructure::FullVarying => (0..g)
            .map(|k| {
                let mut cov = scatter[k].clone();
                for r in 0..d {
                    for c in 0..d {
                        cov.set(r, c, cov.get(r, c) / mass[k]);
                    }
                }
                check_full(&cov, reg_floor)?;
                Ok(cov)
            })
            .collect(),
    }
}

/// A full covariance is accepted only if it factors and its Cholesky diagonal
/// stays above the floor; anything weaker counts as a collapse.
fn check_full(cov: &Matrix, reg_floor: f64) -> Result<()> {
    if !cov.is_finite() {
        return Err(Error::Collapsed);
    }
    let l = cholesky_lower(cov).ok_or(Error::Collapsed)?;
    for j in 0..cov.n_rows() {
        let pivot = l.get(j, j);
        if !(pivot * pivot > reg_floor) {
            return Err(Error::Collapsed);
        }
    }
    Ok(())
}
