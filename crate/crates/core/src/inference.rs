//! Wald-type tests for `H mu = c`: asymptotic and studentized permutation
//! calibrations of the global test, Monte-Carlo calibrated multiple tests,
//! Bonferroni baselines, adjusted p-values and confidence intervals.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use serde::Serialize;

use crate::contrasts::ContrastSpec;
use crate::error::{Error, Result};
use crate::estimators::{GroupSample, PooledSample, RmtlSummary};
use crate::numerics::{
    chi2_quantile_upper, chi2_sf, map_indices, RngStream, SymMatrix, DEFAULT_EIGEN_TOL,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Method {
    #[serde(rename = "asymptotic")]
    Asymptotic,
    #[serde(rename = "permutation")]
    Permutation,
    /// Monte-Carlo calibrated multiple asymptotic tests.
    #[serde(rename = "multiple")]
    Multiple,
    #[serde(rename = "asymptotic-bonf")]
    AsymptoticBonferroni,
    #[serde(rename = "permutation-bonf")]
    PermutationBonferroni,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Asymptotic => "asymptotic",
            Method::Permutation => "permutation",
            Method::Multiple => "multiple",
            Method::AsymptoticBonferroni => "asymptotic-bonf",
            Method::PermutationBonferroni => "permutation-bonf",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "asymptotic" => Ok(Method::Asymptotic),
            "permutation" => Ok(Method::Permutation),
            "multiple" => Ok(Method::Multiple),
            "asymptotic-bonf" | "asymptotic_bonf" => Ok(Method::AsymptoticBonferroni),
            "permutation-bonf" | "permutation_bonf" => Ok(Method::PermutationBonferroni),
            other => Err(Error::domain(format!(
                "unknown method `{other}` (expected asymptotic, permutation, multiple, asymptotic-bonf or permutation-bonf)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InferenceWarning {
    /// `rank(H)` differs from `rank(H Sigma H^T)`; thresholds use `rank(H)`.
    RankMismatch {
        block: Option<usize>,
        hypothesis_rank: usize,
        covariance_rank: usize,
    },
    /// The Monte-Carlo grid `{0, 1/B, ...}` admits no positive local level,
    /// so nothing can be rejected; `B` is too small for the family.
    ZeroLocalLevel { replicates: usize, hypotheses: usize },
}

impl std::fmt::Display for InferenceWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InferenceWarning::RankMismatch {
                block,
                hypothesis_rank,
                covariance_rank,
            } => {
                if let Some(b) = block {
                    write!(f, "block {}: ", b + 1)?;
                }
                write!(
                    f,
                    "rank(H) = {hypothesis_rank} but rank(H Sigma H^T) = {covariance_rank}; chi-squared thresholds use rank(H)"
                )
            }
            InferenceWarning::ZeroLocalLevel { replicates, hypotheses } => write!(
                f,
                "local level is 0 with B = {replicates} for {hypotheses} hypotheses; no hypothesis can be rejected, increase B"
            ),
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    Ok(())
}

fn check_replicates(b: usize) -> Result<()> {
    if b == 0 {
        return Err(Error::domain("number of resampling replicates must be at least 1"));
    }
    Ok(())
}

/// Rank of a (not necessarily square) matrix via its Gram matrix.
pub fn matrix_rank(h: &DMatrix<f64>) -> usize {
    SymMatrix::new(h * h.transpose())
        .expect("Gram matrix is square")
        .numeric_rank(DEFAULT_EIGEN_TOL)
}

/// Precomputed pieces of `n (H x)^T (H Sigma H^T)^+ (H x)` for one block.
#[derive(Debug, Clone)]
struct QuadraticForm {
    h: DMatrix<f64>,
    pinv: DMatrix<f64>,
    covariance_rank: usize,
}

impl QuadraticForm {
    fn new(h: DMatrix<f64>, sigma: &SymMatrix) -> Result<Self> {
        let middle = sigma.congruence(&h)?;
        let (pinv, covariance_rank) = middle.pseudo_inverse_with_rank(DEFAULT_EIGEN_TOL);
        Ok(QuadraticForm {
            h,
            pinv: pinv.into_matrix(),
            covariance_rank,
        })
    }

    fn eval(&self, x: &DVector<f64>) -> f64 {
        let d = &self.h * x;
        let v = (d.transpose() * &self.pinv * &d)[(0, 0)];
        v.max(0.0)
    }
}

/// `W_n(H, c) = n (H mu - c)^T (H Sigma H^T)^+ (H mu - c)` together with
/// `rank(H Sigma H^T)`.
pub fn wald_statistic(summary: &RmtlSummary, h: &DMatrix<f64>, c: &DVector<f64>) -> Result<(f64, usize)> {
    if h.ncols() != summary.dim() {
        return Err(Error::Dimension(format!(
            "H has {} columns but the estimate has {} entries",
            h.ncols(),
            summary.dim()
        )));
    }
    if c.len() != h.nrows() {
        return Err(Error::Dimension(format!("c has length {} but H has {} rows", c.len(), h.nrows())));
    }
    let form = QuadraticForm::new(h.clone(), &summary.sigma_hat)?;
    let mu = DVector::from_column_slice(&summary.mu_hat);
    let d = h * mu - c;
    let v = (d.transpose() * &form.pinv * &d)[(0, 0)];
    Ok((((summary.total_size as f64) * v).max(0.0), form.covariance_rank))
}

/// Half-width of the interval for a one-row `H`: `sqrt(H Sigma H^T / n * q)`.
fn half_width(summary: &RmtlSummary, h: &DMatrix<f64>, critical: f64) -> Result<f64> {
    let var = summary.sigma_hat.congruence(h)?.get(0, 0) / summary.total_size as f64;
    let hw = (var.max(0.0) * critical).sqrt();
    Ok(if var <= 0.0 || critical == 0.0 { 0.0 } else { hw })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Interval `H mu ± sqrt(H Sigma H^T / n * critical)` for a one-row `H`.
/// With `critical = q^pi_{1-alpha}` this is the permutation interval; with
/// `chi2_{1, 1-alpha}` the asymptotic one.
pub fn permutation_ci(summary: &RmtlSummary, critical: f64, h: &DMatrix<f64>) -> Result<Interval> {
    if h.nrows() != 1 {
        return Err(Error::Dimension(format!(
            "confidence intervals need a one-row H, got {} rows; use confidence_region_contains",
            h.nrows()
        )));
    }
    if h.ncols() != summary.dim() {
        return Err(Error::Dimension("H width does not match the estimate".into()));
    }
    if !(critical >= 0.0) {
        return Err(Error::domain(format!("critical value must be nonnegative, got {critical}")));
    }
    let estimate = (h * DVector::from_column_slice(&summary.mu_hat))[0];
    let hw = half_width(summary, h, critical)?;
    Ok(Interval {
        estimate,
        lower: estimate - hw,
        upper: estimate + hw,
    })
}

pub fn asymptotic_ci(summary: &RmtlSummary, alpha: f64, h: &DMatrix<f64>) -> Result<Interval> {
    check_alpha(alpha)?;
    permutation_ci(summary, chi2_quantile_upper(1, alpha)?, h)
}

/// Membership in the confidence region `{xi : W_n(H, xi) <= critical}`.
pub fn confidence_region_contains(summary: &RmtlSummary, h: &DMatrix<f64>, xi: &DVector<f64>, critical: f64) -> Result<bool> {
    Ok(wald_statistic(summary, h, xi)?.0 <= critical)
}

#[derive(Debug, Clone, Serialize)]
pub struct GlobalTestResult {
    pub method: Method,
    pub statistic: f64,
    /// Degrees of freedom, `rank(H)`.
    pub rank: usize,
    pub covariance_rank: usize,
    pub critical_value: f64,
    pub p_value: f64,
    pub rejected: bool,
    pub alpha: f64,
    pub replicates: Option<usize>,
    pub warnings: Vec<InferenceWarning>,
}

fn rank_warning(block: Option<usize>, hypothesis_rank: usize, covariance_rank: usize) -> Option<InferenceWarning> {
    (hypothesis_rank != covariance_rank).then_some(InferenceWarning::RankMismatch {
        block,
        hypothesis_rank,
        covariance_rank,
    })
}

/// Global test with the `chi2_{rank(H), 1-alpha}` threshold.
pub fn asymptotic_global_test(summary: &RmtlSummary, spec: &ContrastSpec, alpha: f64) -> Result<GlobalTestResult> {
    check_alpha(alpha)?;
    let (statistic, covariance_rank) = wald_statistic(summary, &spec.matrix, &spec.offset)?;
    if covariance_rank == 0 {
        return Err(Error::DegenerateTest(
            "H Sigma H^T is zero; the data carry no information on H mu".into(),
        ));
    }
    let rank = matrix_rank(&spec.matrix);
    let critical_value = chi2_quantile_upper(rank, alpha)?;
    Ok(GlobalTestResult {
        method: Method::Asymptotic,
        statistic,
        rank,
        covariance_rank,
        critical_value,
        p_value: chi2_sf(rank, statistic)?,
        rejected: statistic > critical_value,
        alpha,
        replicates: None,
        warnings: rank_warning(None, rank, covariance_rank).into_iter().collect(),
    })
}

/// Index of the `ceil((1 - alpha)(B + 1))`-th order statistic (1-based),
/// capped at `B`.
fn permutation_order_index(alpha: f64, replicates: usize) -> usize {
    let x = (1.0 - alpha) * (replicates as f64 + 1.0);
    ((x - 1e-9).ceil() as usize).clamp(1, replicates)
}

/// Permutation quantile `q^pi_{1-alpha}` of the replicate statistics.
pub fn permutation_quantile(statistics: &[f64], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_replicates(statistics.len())?;
    let mut sorted = statistics.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted[permutation_order_index(alpha, sorted.len()) - 1])
}

/// `(1 + #{W_b >= observed}) / (B + 1)`.
pub fn permutation_p_value(statistics: &[f64], observed: f64) -> f64 {
    let exceed = statistics.iter().filter(|&&w| w >= observed).count();
    (1 + exceed) as f64 / (statistics.len() + 1) as f64
}

/// Permutation statistics `W^pi(H_l, 0)` for every block, one row per
/// replicate. Replicate `b` shuffles the pooled observations with stream
/// `stream.child(b)` and splits them back into the original group sizes.
fn permutation_statistics(pooled: &PooledSample, blocks: &[DMatrix<f64>], tau: f64, replicates: usize, stream: RngStream) -> Result<Vec<Vec<f64>>> {
    let rows: Vec<Result<Vec<f64>>> = map_indices(replicates, |b| {
        let mut labels = pooled.labels().to_vec();
        labels.shuffle(&mut stream.child(b as u64).generator());
        let summary = pooled.summarize(&labels, tau);
        let mu = DVector::from_column_slice(&summary.mu_hat);
        let n = summary.total_size as f64;
        blocks
            .iter()
            .map(|h| Ok(n * QuadraticForm::new(h.clone(), &summary.sigma_hat)?.eval(&mu)))
            .collect()
    });
    rows.into_iter().collect()
}

fn check_samples(samples: &[GroupSample], spec: &ContrastSpec) -> Result<()> {
    let causes = samples
        .first()
        .ok_or_else(|| Error::domain("at least one group is required"))?
        .causes();
    spec.validate(samples.len(), causes)
}

/// Studentized permutation test of `H mu = c`.
pub fn permutation_global_test(samples: &[GroupSample], spec: &ContrastSpec, tau: f64, alpha: f64, replicates: usize, stream: RngStream) -> Result<GlobalTestResult> {
    check_alpha(alpha)?;
    check_replicates(replicates)?;
    check_samples(samples, spec)?;
    let observed = crate::estimators::fit_all(samples, tau)?;
    let (statistic, covariance_rank) = wald_statistic(&observed, &spec.matrix, &spec.offset)?;
    let pooled = PooledSample::new(samples)?;
    let stats: Vec<f64> = permutation_statistics(&pooled, std::slice::from_ref(&spec.matrix), tau, replicates, stream)?
        .into_iter()
        .map(|row| row[0])
        .collect();
    let critical_value = permutation_quantile(&stats, alpha)?;
    let rank = matrix_rank(&spec.matrix);
    Ok(GlobalTestResult {
        method: Method::Permutation,
        statistic,
        rank,
        covariance_rank,
        critical_value,
        p_value: permutation_p_value(&stats, statistic),
        rejected: statistic > critical_value,
        alpha,
        replicates: Some(replicates),
        warnings: rank_warning(None, rank, covariance_rank).into_iter().collect(),
    })
}

/// Monte-Carlo calibration of the common local level.
#[derive(Debug, Clone, Serialize)]
pub struct LocalLevel {
    pub beta: f64,
    pub alpha: f64,
    pub replicates: usize,
    /// `rank(H_l Sigma H_l^T)` per block.
    pub covariance_ranks: Vec<usize>,
    /// Per-replicate minimum marginal p-value, sorted ascending.
    #[serde(skip)]
    pub min_p_values: Vec<f64>,
    /// Per-replicate block statistics `T_l^(b)`, replicate-major.
    #[serde(skip)]
    pub statistics: Vec<Vec<f64>>,
}

impl LocalLevel {
    /// `FWER_n(beta) = #{b : min_l p_l^(b) < beta} / B`.
    pub fn fwer(&self, beta: f64) -> f64 {
        self.count_below(beta) as f64 / self.replicates as f64
    }

    fn count_below(&self, beta: f64) -> usize {
        self.min_p_values.partition_point(|&p| p < beta)
    }

    /// Single-step min-p adjusted p-value `#{b : min_l p_l^(b) <= p} / B`.
    pub fn adjusted_p_value(&self, p: f64) -> f64 {
        self.min_p_values.partition_point(|&q| q <= p) as f64 / self.replicates as f64
    }
}

/// Calibrates `beta_n(alpha) = max{beta in {0, 1/B, .., (B-1)/B} : FWER_n(beta) <= alpha}`
/// from `B` Gaussian draws `Sigma^{1/2} Y^(b)`.
pub fn local_level(summary: &RmtlSummary, spec: &ContrastSpec, alpha: f64, replicates: usize, stream: RngStream) -> Result<LocalLevel> {
    check_alpha(alpha)?;
    check_replicates(replicates)?;
    let forms = (0..spec.block_count())
        .map(|l| QuadraticForm::new(spec.block_matrix(l), &summary.sigma_hat))
        .collect::<Result<Vec<_>>>()?;
    if forms.iter().all(|f| f.covariance_rank == 0) {
        return Err(Error::DegenerateTest("every block has H_l Sigma H_l^T = 0".into()));
    }
    let root = summary.sigma_hat.psd_sqrt(1e-8)?.into_matrix();
    let dim = summary.dim();

    let draws: Vec<(Vec<f64>, f64)> = map_indices(replicates, |b| {
        let y = DVector::from_vec(stream.child(b as u64).standard_normal_vector(dim));
        let z = &root * y;
        let mut min_p = 1.0f64;
        let stats = forms
            .iter()
            .map(|f| {
                let t = f.eval(&z);
                if f.covariance_rank > 0 {
                    let p = chi2_sf(f.covariance_rank, t).expect("positive df");
                    min_p = min_p.min(p);
                }
                t
            })
            .collect();
        (stats, min_p)
    });
    let (statistics, mut min_p_values): (Vec<Vec<f64>>, Vec<f64>) = draws.into_iter().unzip();
    min_p_values.sort_by(f64::total_cmp);

    let mut level = LocalLevel {
        beta: 0.0,
        alpha,
        replicates,
        covariance_ranks: forms.iter().map(|f| f.covariance_rank).collect(),
        min_p_values,
        statistics,
    };
    let allowed = (alpha * replicates as f64 + 1e-9).floor() as usize;
    // FWER_n(j / B) is nondecreasing in j: binary search for the last j
    // with count <= allowed.
    let (mut lo, mut hi) = (0usize, replicates - 1);
    while lo < hi {
        let mid = lo + (hi - lo).div_ceil(2);
        if level.count_below(mid as f64 / replicates as f64) <= allowed {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    level.beta = lo as f64 / replicates as f64;
    Ok(level)
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockResult {
    pub label: String,
    pub statistic: f64,
    pub rank: usize,
    pub covariance_rank: usize,
    pub critical_value: f64,
    /// Unadjusted p-value of the block.
    pub p_value: f64,
    pub adjusted_p_value: f64,
    pub rejected: bool,
    /// `H_l mu_hat`.
    pub estimate: Vec<f64>,
    /// Simultaneous interval, for one-row blocks.
    pub interval: Option<Interval>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MultipleTestResult {
    pub method: Method,
    pub alpha: f64,
    /// Common local level: `beta_n(alpha)` or `alpha / L`.
    pub local_level: f64,
    pub replicates: Option<usize>,
    pub blocks: Vec<BlockResult>,
    pub warnings: Vec<InferenceWarning>,
}

impl MultipleTestResult {
    pub fn any_rejected(&self) -> bool {
        self.blocks.iter().any(|b| b.rejected)
    }
}

fn block_estimate(summary: &RmtlSummary, h: &DMatrix<f64>) -> Vec<f64> {
    (h * DVector::from_column_slice(&summary.mu_hat)).iter().copied().collect()
}

fn block_interval(summary: &RmtlSummary, h: &DMatrix<f64>, critical: f64) -> Result<Option<Interval>> {
    if h.nrows() != 1 {
        return Ok(None);
    }
    if critical.is_infinite() {
        let estimate = block_estimate(summary, h)[0];
        return Ok(Some(Interval {
            estimate,
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
        }));
    }
    permutation_ci(summary, critical, h).map(Some)
}

/// Multiple asymptotic Wald-type tests at the calibrated local level
/// `beta_n(alpha)`, with min-p adjusted p-values and simultaneous intervals.
pub fn multiple_asymptotic_test(summary: &RmtlSummary, spec: &ContrastSpec, alpha: f64, replicates: usize, stream: RngStream) -> Result<MultipleTestResult> {
    spec.validate(summary.groups(), summary.causes)?;
    let level = local_level(summary, spec, alpha, replicates, stream)?;
    let beta = level.beta;
    let mut warnings = Vec::new();
    if beta == 0.0 {
        warnings.push(InferenceWarning::ZeroLocalLevel {
            replicates,
            hypotheses: spec.block_count(),
        });
    }
    let mut blocks = Vec::with_capacity(spec.block_count());
    for l in 0..spec.block_count() {
        let h = spec.block_matrix(l);
        let (statistic, covariance_rank) = wald_statistic(summary, &h, &spec.block_offset(l))?;
        let rank = matrix_rank(&h);
        warnings.extend(rank_warning(Some(l), rank, covariance_rank));
        let critical_value = chi2_quantile_upper(rank, beta)?;
        let p_value = chi2_sf(rank, statistic)?;
        let interval = block_interval(summary, &h, chi2_quantile_upper(1, beta)?)?;
        blocks.push(BlockResult {
            label: spec.labels[l].clone(),
            statistic,
            rank,
            covariance_rank,
            critical_value,
            p_value,
            adjusted_p_value: level.adjusted_p_value(p_value),
            rejected: statistic > critical_value,
            estimate: block_estimate(summary, &h),
            interval,
        });
    }
    Ok(MultipleTestResult {
        method: Method::Multiple,
        alpha,
        local_level: beta,
        replicates: Some(replicates),
        blocks,
        warnings,
    })
}

/// Each block tested by the global asymptotic test at level `alpha / L`.
pub fn bonferroni_asymptotic(summary: &RmtlSummary, spec: &ContrastSpec, alpha: f64) -> Result<MultipleTestResult> {
    check_alpha(alpha)?;
    spec.validate(summary.groups(), summary.causes)?;
    let count = spec.block_count();
    let local = alpha / count as f64;
    let mut warnings = Vec::new();
    let mut blocks = Vec::with_capacity(count);
    for l in 0..count {
        let h = spec.block_matrix(l);
        let (statistic, covariance_rank) = wald_statistic(summary, &h, &spec.block_offset(l))?;
        let rank = matrix_rank(&h);
        warnings.extend(rank_warning(Some(l), rank, covariance_rank));
        let critical_value = chi2_quantile_upper(rank, local)?;
        let p_value = if covariance_rank == 0 { 1.0 } else { chi2_sf(rank, statistic)? };
        blocks.push(BlockResult {
            label: spec.labels[l].clone(),
            statistic,
            rank,
            covariance_rank,
            critical_value,
            p_value,
            adjusted_p_value: (count as f64 * p_value).min(1.0),
            rejected: covariance_rank > 0 && statistic > critical_value,
            estimate: block_estimate(summary, &h),
            interval: block_interval(summary, &h, chi2_quantile_upper(1, local)?)?,
        });
    }
    Ok(MultipleTestResult {
        method: Method::AsymptoticBonferroni,
        alpha,
        local_level: local,
        replicates: None,
        blocks,
        warnings,
    })
}

/// Each block tested by the studentized permutation test at level
/// `alpha / L`; one shared permutation stream evaluates every block.
pub fn bonferroni_permutation(samples: &[GroupSample], spec: &ContrastSpec, tau: f64, alpha: f64, replicates: usize, stream: RngStream) -> Result<MultipleTestResult> {
    check_alpha(alpha)?;
    check_replicates(replicates)?;
    check_samples(samples, spec)?;
    let summary = crate::estimators::fit_all(samples, tau)?;
    let count = spec.block_count();
    let local = alpha / count as f64;
    let matrices: Vec<DMatrix<f64>> = (0..count).map(|l| spec.block_matrix(l)).collect();
    let pooled = PooledSample::new(samples)?;
    let stats = permutation_statistics(&pooled, &matrices, tau, replicates, stream)?;

    let mut warnings = Vec::new();
    let mut blocks = Vec::with_capacity(count);
    for (l, h) in matrices.iter().enumerate() {
        let (statistic, covariance_rank) = wald_statistic(&summary, h, &spec.block_offset(l))?;
        let rank = matrix_rank(h);
        warnings.extend(rank_warning(Some(l), rank, covariance_rank));
        let column: Vec<f64> = stats.iter().map(|row| row[l]).collect();
        let critical_value = permutation_quantile(&column, local)?;
        let p_value = permutation_p_value(&column, statistic);
        blocks.push(BlockResult {
            label: spec.labels[l].clone(),
            statistic,
            rank,
            covariance_rank,
            critical_value,
            p_value,
            adjusted_p_value: (count as f64 * p_value).min(1.0),
            rejected: statistic > critical_value,
            estimate: block_estimate(&summary, h),
            interval: block_interval(&summary, h, critical_value)?,
        });
    }
    Ok(MultipleTestResult {
        method: Method::PermutationBonferroni,
        alpha,
        local_level: local,
        replicates: Some(replicates),
        blocks,
        warnings,
    })
}
