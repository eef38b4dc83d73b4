//! Tie-aware nonparametric estimation per group: Nelson-Aalen,
//! Kaplan-Meier and Aalen-Johansen estimators, restricted mean time lost and
//! its covariance, stacked over groups.

mod risk_table;

use nalgebra::DMatrix;
use serde::Serialize;

pub use risk_table::{build_risk_table, GroupSample, RiskTable};

use crate::error::{Error, Result};
use crate::numerics::{StepFunction, SymMatrix};

/// Conditions under which the covariance estimate is unreliable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FitWarning {
    /// Nobody is at risk at the horizon: survival and censoring beyond the
    /// last observation cannot be checked to be positive.
    NoneAtRiskAtHorizon,
    /// The last observation is censored before the horizon; curves are
    /// carried forward to the horizon.
    CarriedForwardToHorizon { last_time: f64 },
    /// No event of this cause before the horizon; its covariance row is zero.
    NoEventsBeforeHorizon { cause: usize },
}

impl std::fmt::Display for FitWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FitWarning::NoneAtRiskAtHorizon => write!(f, "no observation at risk at the horizon"),
            FitWarning::CarriedForwardToHorizon { last_time } => write!(
                f,
                "last observation (t = {last_time}) is censored before the horizon; estimates carried forward"
            ),
            FitWarning::NoEventsBeforeHorizon { cause } => {
                write!(f, "no events of cause {cause} before the horizon; covariance is singular")
            }
        }
    }
}

fn check_cause(rt: &RiskTable, cause: usize) -> Result<()> {
    if cause == 0 || cause > rt.causes() {
        return Err(Error::domain(format!(
            "cause {cause} outside 1..={}",
            rt.causes()
        )));
    }
    Ok(())
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::domain(format!("horizon tau must be positive and finite, got {tau}")));
    }
    Ok(())
}

/// Cause-specific Nelson-Aalen estimator (`cause` is 1-based).
pub fn nelson_aalen(rt: &RiskTable, cause: usize) -> Result<StepFunction> {
    check_cause(rt, cause)?;
    let mut acc = 0.0;
    let points = rt
        .times()
        .iter()
        .zip(rt.at_risk())
        .zip(rt.events_of(cause))
        .filter(|(_, d)| *d > 0)
        .map(|((&t, &y), d)| {
            acc += d as f64 / y as f64;
            (t, acc)
        })
        .collect();
    Ok(StepFunction::from_sorted(0.0, points))
}

/// All-cause Nelson-Aalen estimator.
pub fn nelson_aalen_all(rt: &RiskTable) -> StepFunction {
    let mut acc = 0.0;
    let points = (0..rt.len())
        .filter(|&j| rt.total_events(j) > 0)
        .map(|j| {
            acc += rt.total_events(j) as f64 / rt.at_risk()[j] as f64;
            (rt.times()[j], acc)
        })
        .collect();
    StepFunction::from_sorted(0.0, points)
}

/// Kaplan-Meier estimator as the product integral of the all-cause hazard.
pub fn kaplan_meier(rt: &RiskTable) -> StepFunction {
    let mut s = 1.0;
    let points = (0..rt.len())
        .filter(|&j| rt.total_events(j) > 0)
        .map(|j| {
            s *= 1.0 - rt.total_events(j) as f64 / rt.at_risk()[j] as f64;
            (rt.times()[j], s)
        })
        .collect();
    StepFunction::from_sorted(1.0, points)
}

/// Aalen-Johansen estimator of the cumulative incidence of `cause`.
pub fn aalen_johansen(rt: &RiskTable, cause: usize) -> Result<StepFunction> {
    check_cause(rt, cause)?;
    let mut s_prev = 1.0;
    let mut f = 0.0;
    let mut points = Vec::new();
    for j in 0..rt.len() {
        let d_all = rt.total_events(j);
        if d_all == 0 {
            continue;
        }
        let y = rt.at_risk()[j] as f64;
        let d = rt.event_row(j)[cause - 1];
        if d > 0 {
            f += s_prev * d as f64 / y;
            points.push((rt.times()[j], f));
        }
        s_prev *= 1.0 - d_all as f64 / y;
    }
    Ok(StepFunction::from_sorted(0.0, points))
}

/// Restricted mean time lost: area under a cumulative incidence function on
/// `[0, tau]`.
pub fn rmtl(cif: &StepFunction, tau: f64) -> Result<f64> {
    check_tau(tau)?;
    cif.integrate(0.0, tau)
}

/// RMTL vector and covariance `Sigma_i` of one group, computed in a single
/// pass over the event times up to `tau`.
///
/// `Sigma_i[m, l] = sum_u K_m(u)^T dSigma(u) K_l(u)` where `dSigma(u)` is the
/// multinomial covariance `n/Y (diag(p) - p p^T)` of the hazard increments
/// `p = dA_{.}(u)`, and the kernel of cause `m` at cause `m'` is
/// `1{m'=m} (tau - u) S(u-) - g_m(u) / (1 - dA(u))` with
/// `g_m(u) = int_u^tau F_m - (tau - u) F_m(u)`.
pub(crate) fn rmtl_moments(rt: &RiskTable, tau: f64) -> (Vec<f64>, SymMatrix) {
    let m_causes = rt.causes();
    let n = rt.size() as f64;

    // Event times up to the horizon, with S(u-), hazard increments and CIF
    // increments.
    struct Step {
        t: f64,
        y: f64,
        s_prev: f64,
        total: f64,
    }
    let mut steps: Vec<Step> = Vec::new();
    let mut hazard: Vec<f64> = Vec::new();
    let mut cif_jump: Vec<f64> = Vec::new();
    let mut s_prev = 1.0;
    for j in 0..rt.len() {
        let t = rt.times()[j];
        if t > tau {
            break;
        }
        let d_all = rt.total_events(j);
        if d_all == 0 {
            continue;
        }
        let y = rt.at_risk()[j] as f64;
        for &d in rt.event_row(j) {
            let p = d as f64 / y;
            hazard.push(p);
            cif_jump.push(s_prev * p);
        }
        let total = d_all as f64 / y;
        steps.push(Step { t, y, s_prev, total });
        s_prev *= 1.0 - total;
    }

    let mut mu = vec![0.0; m_causes];
    for (row, st) in steps.iter().enumerate() {
        for m in 0..m_causes {
            mu[m] += (tau - st.t) * cif_jump[row * m_causes + m];
        }
    }

    // g_m(u_j) = sum over later event times of (tau - t) dF_m(t).
    let mut tail = vec![0.0; m_causes];
    let mut cov = DMatrix::<f64>::zeros(m_causes, m_causes);
    let mut b = vec![0.0; m_causes];
    for (row, st) in steps.iter().enumerate().rev() {
        let p = &hazard[row * m_causes..(row + 1) * m_causes];
        let a = (tau - st.t) * st.s_prev;
        let keep = 1.0 - st.total;
        for m in 0..m_causes {
            // The indirect term multiplies a zero-variance direction when the
            // whole risk set fails.
            b[m] = if keep > 0.0 { tail[m] / keep } else { 0.0 };
        }
        let scale = n / st.y;
        let pq = st.total * keep;
        for m in 0..m_causes {
            for l in 0..=m {
                let v = if m == l { p[m] - p[m] * p[l] } else { -p[m] * p[l] };
                let term = a * a * v - a * keep * (p[m] * b[l] + b[m] * p[l]) + pq * b[m] * b[l];
                cov[(m, l)] += scale * term;
            }
        }
        for m in 0..m_causes {
            tail[m] += (tau - st.t) * cif_jump[row * m_causes + m];
        }
    }
    for m in 0..m_causes {
        for l in 0..m {
            cov[(l, m)] = cov[(m, l)];
        }
    }
    (mu, SymMatrix::new(cov).expect("square by construction"))
}

/// Covariance matrix `Sigma_i` (M x M) of `sqrt(n_i) (mu_hat_i - mu_i)`.
pub fn group_covariance(rt: &RiskTable, tau: f64) -> Result<SymMatrix> {
    check_tau(tau)?;
    Ok(rmtl_moments(rt, tau).1)
}

fn horizon_warnings(rt: &RiskTable, tau: f64) -> Vec<FitWarning> {
    let mut warnings = Vec::new();
    if rt.at_risk_at(tau) == 0 {
        warnings.push(FitWarning::NoneAtRiskAtHorizon);
        let last = rt.len() - 1;
        if rt.censored()[last] > 0 && rt.total_events(last) == 0 {
            warnings.push(FitWarning::CarriedForwardToHorizon {
                last_time: rt.times()[last],
            });
        }
    }
    for cause in 1..=rt.causes() {
        let any = (0..rt.len()).any(|j| rt.times()[j] < tau && rt.event_row(j)[cause - 1] > 0);
        if !any {
            warnings.push(FitWarning::NoEventsBeforeHorizon { cause });
        }
    }
    warnings
}

/// Full per-group fit.
#[derive(Debug, Clone, Serialize)]
pub struct GroupFit {
    pub nelson_aalen: Vec<StepFunction>,
    pub nelson_aalen_all: StepFunction,
    pub kaplan_meier: StepFunction,
    pub cifs: Vec<StepFunction>,
    pub rmtl: Vec<f64>,
    pub covariance: SymMatrix,
    pub tau: f64,
    pub size: usize,
    pub warnings: Vec<FitWarning>,
}

pub fn fit_group(sample: &GroupSample, tau: f64) -> Result<GroupFit> {
    check_tau(tau)?;
    let rt = RiskTable::from_sample(sample);
    let causes = 1..=rt.causes();
    let nelson_aalen = causes.clone().map(|m| nelson_aalen(&rt, m)).collect::<Result<Vec<_>>>()?;
    let cifs = causes.map(|m| aalen_johansen(&rt, m)).collect::<Result<Vec<_>>>()?;
    let (rmtl, covariance) = rmtl_moments(&rt, tau);
    Ok(GroupFit {
        nelson_aalen,
        nelson_aalen_all: nelson_aalen_all(&rt),
        kaplan_meier: kaplan_meier(&rt),
        cifs,
        rmtl,
        covariance,
        tau,
        size: rt.size(),
        warnings: horizon_warnings(&rt, tau),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupWarning {
    /// 0-based group index.
    pub group: usize,
    pub warning: FitWarning,
}

/// Stacked estimates over `k` groups.
///
/// `mu_hat` is ordered group-major, `(mu_11, .., mu_1M, mu_21, .., mu_kM)`,
/// and `sigma_hat` is the direct sum of `(n / n_i) Sigma_i`.
#[derive(Debug, Clone, Serialize)]
pub struct RmtlSummary {
    pub mu_hat: Vec<f64>,
    pub sigma_hat: SymMatrix,
    pub group_covariances: Vec<SymMatrix>,
    pub group_sizes: Vec<usize>,
    pub total_size: usize,
    pub tau: f64,
    pub causes: usize,
    pub warnings: Vec<GroupWarning>,
}

impl RmtlSummary {
    pub(crate) fn from_moments(moments: Vec<(Vec<f64>, SymMatrix)>, sizes: Vec<usize>, tau: f64, causes: usize) -> Self {
        let n: usize = sizes.iter().sum();
        let mu_hat = moments.iter().flat_map(|(mu, _)| mu.iter().copied()).collect();
        let group_covariances: Vec<SymMatrix> = moments.into_iter().map(|(_, c)| c).collect();
        let scaled: Vec<SymMatrix> = group_covariances
            .iter()
            .zip(&sizes)
            .map(|(c, &ni)| c.scaled(n as f64 / ni as f64))
            .collect();
        RmtlSummary {
            mu_hat,
            sigma_hat: SymMatrix::block_diagonal(&scaled),
            group_covariances,
            group_sizes: sizes,
            total_size: n,
            tau,
            causes,
            warnings: Vec::new(),
        }
    }

    pub fn groups(&self) -> usize {
        self.group_sizes.len()
    }

    pub fn dim(&self) -> usize {
        self.mu_hat.len()
    }

    /// Estimate for group `group` (0-based) and cause `cause` (1-based).
    pub fn mu(&self, group: usize, cause: usize) -> f64 {
        self.mu_hat[group * self.causes + cause - 1]
    }

    /// Estimated standard error of `mu(group, cause)`.
    pub fn standard_error(&self, group: usize, cause: usize) -> f64 {
        let c = &self.group_covariances[group];
        (c.get(cause - 1, cause - 1) / self.group_sizes[group] as f64).max(0.0).sqrt()
    }
}

fn check_common_causes(samples: &[GroupSample]) -> Result<usize> {
    let first = samples
        .first()
        .ok_or_else(|| Error::domain("at least one group is required"))?
        .causes();
    if samples.iter().any(|s| s.causes() != first) {
        return Err(Error::Dimension("groups disagree on the number of event types".into()));
    }
    Ok(first)
}

/// Fits every group and stacks the results.
pub fn fit_all(samples: &[GroupSample], tau: f64) -> Result<RmtlSummary> {
    check_tau(tau)?;
    let causes = check_common_causes(samples)?;
    let mut moments = Vec::with_capacity(samples.len());
    let mut warnings = Vec::new();
    for (group, s) in samples.iter().enumerate() {
        let rt = RiskTable::from_sample(s);
        warnings.extend(
            horizon_warnings(&rt, tau)
                .into_iter()
                .map(|warning| GroupWarning { group, warning }),
        );
        moments.push(rmtl_moments(&rt, tau));
    }
    let mut summary = RmtlSummary::from_moments(moments, samples.iter().map(GroupSample::len).collect(), tau, causes);
    summary.warnings = warnings;
    Ok(summary)
}

/// Pooled observations sorted once by time, so that any reassignment of
/// group labels yields per-group risk tables without re-sorting.
#[derive(Debug, Clone)]
pub(crate) struct PooledSample {
    sorted: Vec<(f64, u32)>,
    /// Group label of each sorted observation in the original data.
    labels: Vec<usize>,
    sizes: Vec<usize>,
    causes: usize,
}

impl PooledSample {
    pub(crate) fn new(samples: &[GroupSample]) -> Result<Self> {
        let causes = check_common_causes(samples)?;
        let mut tagged: Vec<(f64, u32, usize)> = samples
            .iter()
            .enumerate()
            .flat_map(|(g, s)| s.observations().map(move |(t, d)| (t, d, g)))
            .collect();
        tagged.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(PooledSample {
            sorted: tagged.iter().map(|&(t, d, _)| (t, d)).collect(),
            labels: tagged.iter().map(|&(_, _, g)| g).collect(),
            sizes: samples.iter().map(GroupSample::len).collect(),
            causes,
        })
    }

    pub(crate) fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Summary for the grouping given by `labels` (one per sorted
    /// observation); group sizes must match the original ones.
    pub(crate) fn summarize(&self, labels: &[usize], tau: f64) -> RmtlSummary {
        let moments = (0..self.sizes.len())
            .map(|g| {
                let rt = RiskTable::from_sorted(
                    self.sorted
                        .iter()
                        .zip(labels)
                        .filter(|(_, &l)| l == g)
                        .map(|(&obs, _)| obs),
                    self.causes,
                );
                rmtl_moments(&rt, tau)
            })
            .collect();
        RmtlSummary::from_moments(moments, self.sizes.clone(), tau, self.causes)
    }
}
