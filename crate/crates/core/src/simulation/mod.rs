//! Scenario-driven data generation and type-I error / power studies.
//!
//! Event times follow a per-group law, causes are drawn from a fixed
//! multinomial independently of the event and censoring times, so that
//! `F_im = p_m (1 - S_i)` and the RMTL targets are `p_m (tau - RMST_i)`.
//! A shift `delta` rescales the time axis of one group until its restricted
//! mean survival time is `delta` below that of group 1.

mod laws;

use std::io::Write;

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use laws::{calibrate_time_scale, CensoringLaw, EventLaw};

use crate::contrasts::{expand, ContrastFamily, ContrastSpec, ExpansionMode};
use crate::error::{Error, Result};
use crate::estimators::{fit_all, GroupSample};
use crate::inference::{
    asymptotic_global_test, bonferroni_asymptotic, bonferroni_permutation, multiple_asymptotic_test,
    permutation_global_test, Method,
};
use crate::numerics::{chi2_quantile, map_indices, RngStream};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

fn default_alpha() -> f64 {
    0.05
}
fn default_factor() -> usize {
    1
}
fn default_resamples() -> usize {
    999
}
fn default_replications() -> usize {
    1000
}
fn default_coverage() -> f64 {
    0.99
}

/// Data-generating scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    /// One law per group, or a single law shared by all groups.
    pub event_laws: Vec<EventLaw>,
    /// One law per group, or a single law shared by all groups.
    pub censoring_laws: Vec<CensoringLaw>,
    pub cause_probabilities: Vec<f64>,
    /// Restricted mean survival time of `shifted_group` is set to that of
    /// group 1 minus `delta`. Absent: laws are used as given.
    #[serde(default)]
    pub delta: Option<f64>,
    /// 1-based group receiving the shift; defaults to the last group.
    #[serde(default)]
    pub shifted_group: Option<usize>,
    pub sample_sizes: Vec<usize>,
    /// Multiplier `K` applied to every sample size.
    #[serde(default = "default_factor")]
    pub size_factor: usize,
    pub tau: f64,
    /// Round event times up to the next integer.
    #[serde(default)]
    pub discrete_rounding: bool,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Permutation and Monte-Carlo replicates per analysis.
    #[serde(default = "default_resamples")]
    pub resamples: usize,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub master_seed: u64,
}

impl ScenarioConfig {
    pub fn groups(&self) -> usize {
        self.sample_sizes.len()
    }

    pub fn causes(&self) -> usize {
        self.cause_probabilities.len()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.groups();
        if k == 0 {
            return Err(Error::config("sample_sizes", "at least one group is required"));
        }
        if let Some((i, n)) = self.sample_sizes.iter().enumerate().find(|(_, n)| **n < 2) {
            return Err(Error::config(format!("sample_sizes[{i}]"), format!("group size must be at least 2, got {n}")));
        }
        if self.size_factor == 0 {
            return Err(Error::config("size_factor", "must be at least 1"));
        }
        for (name, len) in [("event_laws", self.event_laws.len()), ("censoring_laws", self.censoring_laws.len())] {
            if len != 1 && len != k {
                return Err(Error::config(name, format!("expected 1 or {k} entries, got {len}")));
            }
        }
        for (i, law) in self.event_laws.iter().enumerate() {
            law.validate(&format!("event_laws[{i}]"))?;
        }
        for (i, law) in self.censoring_laws.iter().enumerate() {
            law.validate(&format!("censoring_laws[{i}]"))?;
        }
        if self.cause_probabilities.is_empty() {
            return Err(Error::config("cause_probabilities", "at least one cause is required"));
        }
        if let Some((i, p)) = self.cause_probabilities.iter().enumerate().find(|(_, p)| !(**p > 0.0)) {
            return Err(Error::config(format!("cause_probabilities[{i}]"), format!("must be positive, got {p}")));
        }
        let total: f64 = self.cause_probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::config("cause_probabilities", format!("must sum to 1, got {total}")));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::config("tau", format!("must be positive, got {}", self.tau)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::config("alpha", format!("must lie in (0, 1), got {}", self.alpha)));
        }
        if self.resamples == 0 {
            return Err(Error::config("resamples", "must be at least 1"));
        }
        if self.replications == 0 {
            return Err(Error::config("replications", "must be at least 1"));
        }
        if let Some(g) = self.shifted_group {
            if g == 0 || g > k {
                return Err(Error::config("shifted_group", format!("must lie in 1..={k}, got {g}")));
            }
        }
        if let Some(d) = self.delta {
            if !d.is_finite() {
                return Err(Error::config("delta", "must be finite"));
            }
        }
        Ok(())
    }
}

/// Validated scenario with the shift applied.
#[derive(Debug, Clone)]
pub struct Scenario {
    config: ScenarioConfig,
    event_laws: Vec<EventLaw>,
    censoring_laws: Vec<CensoringLaw>,
}

impl Scenario {
    pub fn new(config: ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let k = config.groups();
        let broadcast = |v: &[EventLaw]| if v.len() == 1 { vec![v[0].clone(); k] } else { v.to_vec() };
        let mut event_laws = broadcast(&config.event_laws);
        let censoring_laws = if config.censoring_laws.len() == 1 {
            vec![config.censoring_laws[0].clone(); k]
        } else {
            config.censoring_laws.clone()
        };
        if let Some(delta) = config.delta {
            let g = config.shifted_group.unwrap_or(k) - 1;
            let rounded = config.discrete_rounding;
            let reference = event_laws[0].restricted_mean(config.tau, rounded);
            let c = calibrate_time_scale(&event_laws[g], config.tau, rounded, reference - delta)?;
            event_laws[g] = event_laws[g].time_scaled(c);
        }
        Ok(Scenario {
            config,
            event_laws,
            censoring_laws,
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    /// Event-time laws after the shift.
    pub fn event_laws(&self) -> &[EventLaw] {
        &self.event_laws
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        self.config.sample_sizes.iter().map(|n| n * self.config.size_factor).collect()
    }

    /// Restricted mean survival time of each group's (possibly rounded) law.
    pub fn restricted_mean_survival(&self) -> Vec<f64> {
        self.event_laws
            .iter()
            .map(|l| l.restricted_mean(self.config.tau, self.config.discrete_rounding))
            .collect()
    }

    /// True RMTL vector, group-major: `mu_im = p_m (tau - RMST_i)`.
    pub fn target_rmtl(&self) -> Vec<f64> {
        self.restricted_mean_survival()
            .into_iter()
            .flat_map(|rmst| {
                self.config
                    .cause_probabilities
                    .iter()
                    .map(move |p| p * (self.config.tau - rmst))
            })
            .collect()
    }

    fn draw_cause<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (m, p) in self.config.cause_probabilities.iter().enumerate() {
            acc += p;
            if u < acc {
                return m as u32 + 1;
            }
        }
        self.config.causes() as u32
    }

    pub fn generate<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<GroupSample>> {
        let causes = self.config.causes();
        self.group_sizes()
            .into_iter()
            .enumerate()
            .map(|(g, n)| {
                let mut times = Vec::with_capacity(n);
                let mut statuses = Vec::with_capacity(n);
                for _ in 0..n {
                    let mut t = self.event_laws[g].sample(rng);
                    if self.config.discrete_rounding {
                        t = t.ceil();
                    }
                    let cause = self.draw_cause(rng);
                    let c = self.censoring_laws[g].sample(rng);
                    if t <= c {
                        times.push(t);
                        statuses.push(cause);
                    } else {
                        times.push(c);
                        statuses.push(0);
                    }
                }
                GroupSample::new(times, statuses, causes)
            })
            .collect()
    }
}

/// Draws one dataset.
pub fn generate_dataset(scenario: &Scenario, stream: RngStream) -> Result<Vec<GroupSample>> {
    scenario.generate(&mut stream.generator())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinomialBand {
    pub level: f64,
    pub lower: f64,
    pub upper: f64,
    /// Two-sided normal quantile used; absent for a fixed band.
    pub z: Option<f64>,
}

impl BinomialBand {
    pub fn contains(&self, rate: f64) -> bool {
        rate >= self.lower && rate <= self.upper
    }

    /// Normal quantile that reproduces a band of half-width `half_width`.
    pub fn implied_z(level: f64, replications: usize, half_width: f64) -> f64 {
        half_width / (level * (1.0 - level) / replications as f64).sqrt()
    }
}

/// Normal-approximation band `level ± z sqrt(level (1 - level) / R)` with
/// `z` the two-sided quantile for `coverage`.
pub fn binomial_band(level: f64, replications: usize, coverage: f64) -> Result<BinomialBand> {
    if replications == 0 {
        return Err(Error::domain("replications must be at least 1"));
    }
    if !(level > 0.0 && level < 1.0) || !(coverage > 0.0 && coverage < 1.0) {
        return Err(Error::domain("level and coverage must lie in (0, 1)"));
    }
    // P(|Z| <= z) = coverage  <=>  z^2 is the chi2_1 quantile
    let z = chi2_quantile(1, coverage)?.sqrt();
    let half = z * (level * (1.0 - level) / replications as f64).sqrt();
    Ok(BinomialBand {
        level,
        lower: (level - half).max(0.0),
        upper: (level + half).min(1.0),
        z: Some(z),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandConfig {
    #[serde(default = "default_coverage")]
    pub coverage: f64,
    /// Fixed `[lower, upper]` band overriding the computed one.
    #[serde(default)]
    pub fixed: Option<[f64; 2]>,
}

impl Default for BandConfig {
    fn default() -> Self {
        BandConfig {
            coverage: default_coverage(),
            fixed: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeChoice {
    AllEvents,
    PerEvent,
}

impl From<ModeChoice> for ExpansionMode {
    fn from(m: ModeChoice) -> Self {
        match m {
            ModeChoice::AllEvents => ExpansionMode::AllEvents,
            ModeChoice::PerEvent => ExpansionMode::PerEvent,
        }
    }
}

fn default_methods() -> Vec<String> {
    vec!["multiple".into(), "asymptotic-bonf".into(), "permutation-bonf".into()]
}

/// A scenario plus the testing procedures to evaluate on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub scenario: ScenarioConfig,
    #[serde(default = "default_methods")]
    pub methods: Vec<String>,
    pub contrast: ContrastFamily,
    pub mode: ModeChoice,
    #[serde(default)]
    pub band: BandConfig,
}

impl StudyConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: StudyConfig = toml::from_str(text).map_err(|e| {
            let path = e
                .span()
                .map(|s| format!("bytes {}..{}", s.start, s.end))
                .unwrap_or_else(|| "<root>".into());
            Error::config(path, e.message().to_string())
        })?;
        cfg.parsed_methods()?;
        cfg.scenario.validate()?;
        Ok(cfg)
    }

    pub fn parsed_methods(&self) -> Result<Vec<Method>> {
        if self.methods.is_empty() {
            return Err(Error::config("methods", "at least one method is required"));
        }
        self.methods
            .iter()
            .enumerate()
            .map(|(i, m)| {
                m.parse::<Method>()
                    .map_err(|e| Error::config(format!("methods[{i}]"), e.to_string()))
            })
            .collect()
    }

    pub fn contrast_spec(&self) -> Result<ContrastSpec> {
        let group = self.contrast.build(self.scenario.groups())?;
        expand(&group, self.scenario.causes(), &self.mode.into())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodSummary {
    pub method: Method,
    /// Rate of at least one rejection: the FWER under the global null,
    /// the global power otherwise.
    pub any_rejection_rate: f64,
    /// Rate of at least one rejection among true local nulls.
    pub fwer: Option<f64>,
    pub fwer_within_band: Option<bool>,
    /// Rejection rate per hypothesis (a single global entry for global
    /// methods).
    pub rejection_rates: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StudyMetadata {
    pub crate_version: &'static str,
    pub replications: usize,
    pub resamples_per_analysis: usize,
    pub group_sizes: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StudyReport {
    pub schema_version: u32,
    pub scenario: String,
    pub contrast: ContrastFamily,
    pub mode: ModeChoice,
    pub alpha: f64,
    pub band: BinomialBand,
    pub hypotheses: Vec<String>,
    pub true_null: Vec<bool>,
    pub target_rmtl: Vec<f64>,
    pub methods: Vec<MethodSummary>,
    pub metadata: StudyMetadata,
}

impl StudyReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Long-format table: one row per method and hypothesis, plus an `any`
    /// row per method.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(["method", "hypothesis", "true_null", "rejection_rate"]).map_err(csv_err)?;
        for m in &self.methods {
            w.write_record([
                m.method.name().to_string(),
                "any".into(),
                self.true_null.iter().all(|&t| t).to_string(),
                m.any_rejection_rate.to_string(),
            ])
            .map_err(csv_err)?;
            if m.rejection_rates.len() == self.hypotheses.len() {
                for ((h, t), r) in self.hypotheses.iter().zip(&self.true_null).zip(&m.rejection_rates) {
                    w.write_record([m.method.name().to_string(), h.clone(), t.to_string(), r.to_string()])
                        .map_err(csv_err)?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Per-block rejection decisions of one method on one dataset.
fn decisions(method: Method, samples: &[GroupSample], spec: &ContrastSpec, cfg: &ScenarioConfig, stream: RngStream) -> Result<Vec<bool>> {
    let tau = cfg.tau;
    let alpha = cfg.alpha;
    Ok(match method {
        Method::Asymptotic => {
            let summary = fit_all(samples, tau)?;
            vec![asymptotic_global_test(&summary, spec, alpha)?.rejected]
        }
        Method::Permutation => vec![permutation_global_test(samples, spec, tau, alpha, cfg.resamples, stream)?.rejected],
        Method::Multiple => {
            let summary = fit_all(samples, tau)?;
            multiple_asymptotic_test(&summary, spec, alpha, cfg.resamples, stream)?
                .blocks
                .iter()
                .map(|b| b.rejected)
                .collect()
        }
        Method::AsymptoticBonferroni => {
            let summary = fit_all(samples, tau)?;
            bonferroni_asymptotic(&summary, spec, alpha)?
                .blocks
                .iter()
                .map(|b| b.rejected)
                .collect()
        }
        Method::PermutationBonferroni => bonferroni_permutation(samples, spec, tau, alpha, cfg.resamples, stream)?
            .blocks
            .iter()
            .map(|b| b.rejected)
            .collect(),
    })
}

fn is_global(method: Method) -> bool {
    matches!(method, Method::Asymptotic | Method::Permutation)
}

/// Runs every method on `replications` independent datasets. Replication
/// `r` draws its data from stream `(master_seed, r)` and method `j` uses the
/// child stream `j + 1` of it, so the report is a pure function of the
/// configuration.
pub fn run_study(cfg: &StudyConfig) -> Result<StudyReport> {
    let methods = cfg.parsed_methods()?;
    let scenario = Scenario::new(cfg.scenario.clone())?;
    let sc = scenario.config();
    let spec = cfg.contrast_spec()?;
    spec.validate(sc.groups(), sc.causes())?;

    let targets = DVector::from_vec(scenario.target_rmtl());
    let tol = 1e-9 * (1.0 + sc.tau);
    let true_null: Vec<bool> = (0..spec.block_count())
        .map(|l| {
            let gap = spec.block_matrix(l) * &targets - spec.block_offset(l);
            gap.iter().all(|v| v.abs() <= tol)
        })
        .collect();

    let outcomes: Vec<Result<Vec<Vec<bool>>>> = map_indices(sc.replications, |r| {
        let stream = RngStream::new(sc.master_seed, r as u64);
        let samples = generate_dataset(&scenario, stream)?;
        methods
            .iter()
            .enumerate()
            .map(|(j, &m)| decisions(m, &samples, &spec, sc, stream.child(j as u64 + 1)))
            .collect::<Result<Vec<_>>>()
    });
    let mut per_replication = Vec::with_capacity(sc.replications);
    for (r, outcome) in outcomes.into_iter().enumerate() {
        per_replication.push(outcome.map_err(|e| Error::Replication {
            replication: r,
            source: Box::new(e),
        })?);
    }

    let band = match cfg.band.fixed {
        Some([lower, upper]) => BinomialBand {
            level: sc.alpha,
            lower,
            upper,
            z: None,
        },
        None => binomial_band(sc.alpha, sc.replications, cfg.band.coverage)?,
    };
    let reps = sc.replications as f64;
    let summaries = methods
        .iter()
        .enumerate()
        .map(|(j, &method)| {
            let global = is_global(method);
            let width = if global { 1 } else { spec.block_count() };
            let mut counts = vec![0usize; width];
            let mut any = 0usize;
            let mut false_rejection = 0usize;
            for rep in &per_replication {
                let d = &rep[j];
                for (c, &x) in counts.iter_mut().zip(d) {
                    *c += x as usize;
                }
                let rejected_any = d.iter().any(|&x| x);
                any += rejected_any as usize;
                let false_any = if global {
                    rejected_any && true_null.iter().all(|&t| t)
                } else {
                    d.iter().zip(&true_null).any(|(&x, &t)| x && t)
                };
                false_rejection += false_any as usize;
            }
            let has_true_null = if global {
                true_null.iter().all(|&t| t)
            } else {
                true_null.iter().any(|&t| t)
            };
            let fwer = has_true_null.then_some(false_rejection as f64 / reps);
            MethodSummary {
                method,
                any_rejection_rate: any as f64 / reps,
                fwer,
                fwer_within_band: fwer.map(|f| band.contains(f)),
                rejection_rates: counts.iter().map(|&c| c as f64 / reps).collect(),
            }
        })
        .collect();

    Ok(StudyReport {
        schema_version: REPORT_SCHEMA_VERSION,
        scenario: sc.name.clone(),
        contrast: cfg.contrast,
        mode: cfg.mode,
        alpha: sc.alpha,
        band,
        hypotheses: spec.labels.clone(),
        true_null,
        target_rmtl: targets.iter().copied().collect(),
        methods: summaries,
        metadata: StudyMetadata {
            crate_version: env!("CARGO_PKG_VERSION"),
            replications: sc.replications,
            resamples_per_analysis: sc.resamples,
            group_sizes: scenario.group_sizes(),
        },
    })
}

/// Cause probabilities used by the built-in presets.
pub const PRESET_CAUSE_PROBABILITIES: [f64; 3] = [0.33, 0.25, 0.42];

/// Names of the built-in study presets.
pub const PRESETS: [&str; 6] = [
    "exp-null",
    "exp-alt",
    "exp-null-unbalanced",
    "exp-alt-unbalanced",
    "weibull-shape-null",
    "discrete-exp-null",
];

/// Built-in study presets. Law parameters are repository choices: four
/// groups, exponential or Weibull event times with horizon 10, uniform
/// censoring, three causes.
pub fn preset(name: &str) -> Option<StudyConfig> {
    let balanced = vec![60, 60, 60, 60];
    let unbalanced = vec![128, 44, 52, 16];
    let exp = EventLaw::Exponential { rate: 0.1 };
    let (sizes, delta, laws, rounding) = match name {
        "exp-null" => (balanced, 0.0, vec![exp], false),
        "exp-alt" => (balanced, 1.5, vec![exp], false),
        "exp-null-unbalanced" => (unbalanced, 0.0, vec![exp], false),
        "exp-alt-unbalanced" => (unbalanced, 1.5, vec![exp], false),
        "weibull-shape-null" => (
            unbalanced,
            0.0,
            vec![
                exp.clone(),
                exp.clone(),
                exp,
                EventLaw::Weibull { shape: 2.0, scale: 12.0 },
            ],
            false,
        ),
        "discrete-exp-null" => (balanced, 0.0, vec![exp], true),
        _ => return None,
    };
    Some(StudyConfig {
        scenario: ScenarioConfig {
            name: name.to_string(),
            event_laws: laws,
            censoring_laws: vec![CensoringLaw::Uniform { lower: 0.0, upper: 30.0 }],
            cause_probabilities: PRESET_CAUSE_PROBABILITIES.to_vec(),
            delta: Some(delta),
            shifted_group: None,
            sample_sizes: sizes,
            size_factor: 1,
            tau: 10.0,
            discrete_rounding: rounding,
            alpha: 0.05,
            resamples: 999,
            replications: 1000,
            master_seed: 1,
        },
        methods: default_methods(),
        contrast: ContrastFamily::Dunnett,
        mode: ModeChoice::PerEvent,
        band: BandConfig::default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::fit_all;

    fn small_config() -> StudyConfig {
        let mut cfg = preset("exp-null").unwrap();
        cfg.scenario.replications = 6;
        cfg.scenario.resamples = 49;
        cfg.scenario.sample_sizes = vec![20, 20, 20, 20];
        cfg
    }

    #[test]
    fn no_censoring_means_all_events() {
        let mut cfg = small_config().scenario;
        cfg.censoring_laws = vec![CensoringLaw::None];
        let s = Scenario::new(cfg).unwrap();
        let data = generate_dataset(&s, RngStream::new(1, 0)).unwrap();
        assert!(data.iter().all(|g| g.statuses().iter().all(|&d| d >= 1)));
    }

    #[test]
    fn single_cause() {
        let mut cfg = small_config().scenario;
        cfg.cause_probabilities = vec![1.0];
        cfg.censoring_laws = vec![CensoringLaw::None];
        let s = Scenario::new(cfg).unwrap();
        let data = generate_dataset(&s, RngStream::new(1, 0)).unwrap();
        assert!(data.iter().all(|g| g.statuses().iter().all(|&d| d == 1)));
    }

    #[test]
    fn empirical_cif_matches_closed_form() {
        let mut cfg = small_config().scenario;
        cfg.event_laws = vec![EventLaw::Exponential { rate: 0.2 }];
        cfg.sample_sizes = vec![20_000];
        cfg.delta = None;
        let s = Scenario::new(cfg).unwrap();
        let data = generate_dataset(&s, RngStream::new(4, 0)).unwrap();
        let fit = crate::estimators::fit_group(&data[0], 10.0).unwrap();
        for (m, p) in PRESET_CAUSE_PROBABILITIES.iter().enumerate() {
            for &t in &[2.0, 5.0, 8.0] {
                let truth = p * (1.0 - (-0.2f64 * t).exp());
                assert!((fit.cifs[m].eval(t) - truth).abs() < 0.015, "cause {} t {t}", m + 1);
            }
        }
    }

    #[test]
    fn targets_sum_to_tau_minus_rmst() {
        let s = Scenario::new(preset("exp-alt").unwrap().scenario).unwrap();
        let targets = s.target_rmtl();
        let rmst = s.restricted_mean_survival();
        for g in 0..4 {
            let sum: f64 = targets[g * 3..g * 3 + 3].iter().sum();
            assert!((sum - (10.0 - rmst[g])).abs() < 1e-12);
        }
        for m in 0..3 {
            let diff = targets[9 + m] - targets[m];
            assert!((diff - PRESET_CAUSE_PROBABILITIES[m] * 1.5).abs() < 1e-9);
        }
    }

    #[test]
    fn large_sample_estimates_match_targets() {
        let mut cfg = preset("weibull-shape-null").unwrap().scenario;
        cfg.size_factor = 40;
        let s = Scenario::new(cfg).unwrap();
        let data = generate_dataset(&s, RngStream::new(8, 0)).unwrap();
        let summary = fit_all(&data, 10.0).unwrap();
        for (i, t) in s.target_rmtl().iter().enumerate() {
            let g = i / 3;
            let se = summary.standard_error(g, i % 3 + 1);
            assert!((summary.mu_hat[i] - t).abs() < 4.0 * se, "entry {i}");
        }
    }

    #[test]
    fn band_examples() {
        let b = binomial_band(0.05, 2000, 0.99).unwrap();
        assert!((b.lower - 0.0374).abs() < 1e-4 && (b.upper - 0.0626).abs() < 1e-4);
        let b = binomial_band(0.05, 1_000_000_000, 0.99).unwrap();
        assert!(b.upper - b.lower < 1e-4);
        // the band [0.037, 0.064] at 5000 replications
        let z = BinomialBand::implied_z(0.05, 5000, (0.064 - 0.037) / 2.0);
        assert!(z > 4.0 && z < 4.5, "z {z}");
        assert!(binomial_band(0.05, 0, 0.99).is_err());
        // few replications: the band is clipped to probabilities
        let b = binomial_band(0.05, 20, 0.99).unwrap();
        assert_eq!(b.lower, 0.0);
        assert!(b.upper < 1.0);
    }

    #[test]
    fn study_is_reproducible() {
        let cfg = small_config();
        let a = run_study(&cfg).unwrap().to_json().unwrap();
        let b = run_study(&cfg).unwrap().to_json().unwrap();
        assert_eq!(a, b);
        let report = run_study(&cfg).unwrap();
        assert_eq!(report.hypotheses.len(), 9);
        assert!(report.true_null.iter().all(|&t| t));
        assert_eq!(report.methods.len(), 3);
        let mut csv = Vec::new();
        report.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text.lines().count(), 1 + 3 * 10);
    }

    #[test]
    fn alternative_marks_false_nulls() {
        let mut cfg = small_config();
        cfg.scenario.delta = Some(1.5);
        let report = run_study(&cfg).unwrap();
        // Dunnett per-event: only the g4-g1 rows are false
        let false_rows: Vec<&String> = report
            .hypotheses
            .iter()
            .zip(&report.true_null)
            .filter(|(_, &t)| !t)
            .map(|(h, _)| h)
            .collect();
        assert_eq!(false_rows.len(), 3);
        assert!(false_rows.iter().all(|h| h.starts_with("g4-g1")));
    }

    #[test]
    fn config_parsing_and_validation() {
        let text = r#"
            methods = ["multiple", "permutation-bonf"]
            contrast = "tukey"
            mode = "all_events"

            [scenario]
            name = "toml"
            event_laws = [{ law = "exponential", rate = 0.1 }]
            censoring_laws = [{ law = "uniform", lower = 0.0, upper = 30.0 }]
            cause_probabilities = [0.5, 0.5]
            sample_sizes = [10, 10, 10]
            tau = 10.0
            replications = 3
            resamples = 19
        "#;
        let cfg = StudyConfig::from_toml(text).unwrap();
        assert_eq!(cfg.contrast, ContrastFamily::Tukey);
        assert_eq!(cfg.scenario.alpha, 0.05);
        let bad = text.replace("exponential", "gamma");
        assert!(matches!(StudyConfig::from_toml(&bad), Err(Error::Config { .. })));
        let bad = text.replace("[0.5, 0.5]", "[0.5, 0.6]");
        match StudyConfig::from_toml(&bad) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "cause_probabilities"),
            other => panic!("{other:?}"),
        }
        let bad = text.replace("\"multiple\"", "\"bootstrap\"");
        match StudyConfig::from_toml(&bad) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "methods[0]"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn presets_are_valid() {
        for name in PRESETS {
            let cfg = preset(name).unwrap();
            Scenario::new(cfg.scenario.clone()).unwrap();
            cfg.contrast_spec().unwrap();
        }
        assert!(preset("nope").is_none());
    }
}
