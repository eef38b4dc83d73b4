//! Browser bindings. Every export takes and returns JSON strings so the page
//! needs no generated type definitions beyond `string`.

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use rmtl_core::contrasts::ContrastFamily;
use rmtl_core::estimators::{fit_group, GroupFit};
use rmtl_core::inference::Method;
use rmtl_core::io::{analyze, emit_csv, read_csv, AnalysisRequest, ContrastChoice, Dataset};
use rmtl_core::numerics::RngStream;
use rmtl_core::simulation::{generate_dataset, preset, run_study, Scenario};

#[derive(Serialize)]
struct Curve {
    times: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Serialize)]
struct GroupCurves {
    label: String,
    size: usize,
    /// One cumulative incidence curve per event type, each starting at 0.
    cifs: Vec<Curve>,
    survival: Curve,
    rmtl: Vec<f64>,
    standard_errors: Vec<f64>,
    warnings: Vec<String>,
}

#[derive(Serialize)]
struct CurvesResponse {
    tau: f64,
    causes: usize,
    groups: Vec<GroupCurves>,
}

fn curve(f: &rmtl_core::numerics::StepFunction) -> Curve {
    let mut times = vec![0.0];
    let mut values = vec![f.eval(0.0)];
    for &t in f.jump_times() {
        times.push(t);
        values.push(f.eval(t));
    }
    Curve { times, values }
}

fn group_curves(label: &str, fit: &GroupFit) -> GroupCurves {
    let n = fit.size as f64;
    GroupCurves {
        label: label.to_owned(),
        size: fit.size,
        cifs: fit.cifs.iter().map(curve).collect(),
        survival: curve(&fit.kaplan_meier),
        rmtl: fit.rmtl.clone(),
        standard_errors: (0..fit.rmtl.len())
            .map(|m| (fit.covariance.get(m, m).max(0.0) / n).sqrt())
            .collect(),
        warnings: fit.warnings.iter().map(|w| w.to_string()).collect(),
    }
}

fn parse(csv: &str) -> Result<Dataset, String> {
    read_csv(csv.as_bytes()).map_err(|e| e.to_string())
}

/// Cumulative incidence and survival curves plus RMTLs per group.
pub fn curves_json(csv: &str, tau: f64) -> Result<String, String> {
    let data = parse(csv)?;
    let groups = data
        .labels
        .iter()
        .zip(&data.samples)
        .map(|(label, s)| fit_group(s, tau).map(|fit| group_curves(label, &fit)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let response = CurvesResponse {
        tau,
        causes: data.causes(),
        groups,
    };
    serde_json::to_string(&response).map_err(|e| e.to_string())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AnalyzeOptions {
    tau: f64,
    #[serde(default = "default_alpha")]
    alpha: f64,
    #[serde(default = "default_method")]
    method: String,
    #[serde(default = "default_contrast")]
    contrast: String,
    /// Custom contrast file contents; overrides `contrast`.
    #[serde(default)]
    contrast_text: Option<String>,
    #[serde(default)]
    per_event: bool,
    #[serde(default = "default_resamples")]
    resamples: usize,
    #[serde(default = "default_seed")]
    seed: u64,
}

fn default_alpha() -> f64 {
    0.05
}
fn default_method() -> String {
    "multiple".into()
}
fn default_contrast() -> String {
    "dunnett".into()
}
fn default_resamples() -> usize {
    999
}
fn default_seed() -> u64 {
    1
}

#[derive(Serialize)]
struct AnalyzeResponse {
    report: serde_json::Value,
    table: String,
}

/// Full analysis; returns the JSON report and its table rendering.
pub fn analyze_json(csv: &str, options: &str) -> Result<String, String> {
    let opts: AnalyzeOptions = serde_json::from_str(options).map_err(|e| format!("options: {e}"))?;
    let data = parse(csv)?;
    let contrast = match opts.contrast_text {
        Some(text) => ContrastChoice::Custom(text),
        None => ContrastChoice::Family(opts.contrast.parse::<ContrastFamily>().map_err(|e| e.to_string())?),
    };
    let request = AnalysisRequest {
        tau: opts.tau,
        alpha: opts.alpha,
        method: opts.method.parse::<Method>().map_err(|e| e.to_string())?,
        contrast,
        per_event: opts.per_event,
        causes: None,
        resamples: opts.resamples,
        seed: opts.seed,
    };
    let report = analyze(&request, &data).map_err(|e| e.to_string())?;
    let response = AnalyzeResponse {
        report: serde_json::to_value(&report).map_err(|e| e.to_string())?,
        table: report.to_table(),
    };
    serde_json::to_string(&response).map_err(|e| e.to_string())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateOptions {
    preset: String,
    replications: usize,
    resamples: usize,
    #[serde(default = "default_seed")]
    seed: u64,
    #[serde(default)]
    methods: Option<Vec<String>>,
}

/// Small simulation study from a preset: rejection rates and the binomial
/// band around the nominal level.
pub fn simulate_json(options: &str) -> Result<String, String> {
    let opts: SimulateOptions = serde_json::from_str(options).map_err(|e| format!("options: {e}"))?;
    let mut cfg = preset(&opts.preset).ok_or_else(|| format!("unknown preset `{}`", opts.preset))?;
    cfg.scenario.replications = opts.replications;
    cfg.scenario.resamples = opts.resamples;
    cfg.scenario.master_seed = opts.seed;
    if let Some(m) = opts.methods {
        cfg.methods = m;
    }
    let report = run_study(&cfg).map_err(|e| e.to_string())?;
    report.to_json().map_err(|e| e.to_string())
}

/// One simulated dataset from a preset as CSV, to seed the demo page.
pub fn example_csv_text(preset_name: &str, seed: u64) -> Result<String, String> {
    let cfg = preset(preset_name).ok_or_else(|| format!("unknown preset `{preset_name}`"))?;
    let scenario = Scenario::new(cfg.scenario).map_err(|e| e.to_string())?;
    let samples = generate_dataset(&scenario, RngStream::new(seed, 0)).map_err(|e| e.to_string())?;
    let labels = (1..=samples.len()).map(|i| format!("g{i}")).collect();
    let mut buf = Vec::new();
    emit_csv(&Dataset { labels, samples }, &mut buf).map_err(|e| e.to_string())?;
    String::from_utf8(buf).map_err(|e| e.to_string())
}

fn js(r: Result<String, String>) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn cif_curves(csv: &str, tau: f64) -> Result<String, JsValue> {
    js(curves_json(csv, tau))
}

#[wasm_bindgen]
pub fn run_analysis(csv: &str, options: &str) -> Result<String, JsValue> {
    js(analyze_json(csv, options))
}

#[wasm_bindgen]
pub fn run_simulation(options: &str) -> Result<String, JsValue> {
    js(simulate_json(options))
}

#[wasm_bindgen]
pub fn example_csv(preset_name: &str, seed: u64) -> Result<String, JsValue> {
    js(example_csv_text(preset_name, seed))
}
