//! CSV ingestion, contrast files and the analysis report.
//!
//! Input CSV files carry the header `group,time,status`. Groups are ordered
//! lexicographically by label; that order defines the group index used by
//! every contrast, and the report echoes the mapping.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::contrasts::{expand, ContrastFamily, ContrastSpec, ExpansionMode};
use crate::error::{Error, Result};
use crate::estimators::{fit_all, GroupSample, GroupWarning, RmtlSummary};
use crate::inference::{
    asymptotic_global_test, bonferroni_asymptotic, bonferroni_permutation, multiple_asymptotic_test,
    permutation_global_test, GlobalTestResult, Method, MultipleTestResult,
};
use crate::numerics::{RngStream, SymMatrix};

pub const ANALYSIS_SCHEMA_VERSION: u32 = 1;

/// Samples together with their group labels, in index order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub labels: Vec<String>,
    pub samples: Vec<GroupSample>,
}

impl Dataset {
    pub fn groups(&self) -> usize {
        self.samples.len()
    }

    pub fn causes(&self) -> usize {
        self.samples.first().map_or(0, |s| s.causes())
    }
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line());
    match line {
        Some(l) => Error::input(format!("line {l}: {e}")),
        None => Error::input(e.to_string()),
    }
}

/// Parses `group,time,status` records. The number of event types is the
/// largest status found.
pub fn read_csv<R: Read>(reader: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers().map_err(csv_error)?.iter().map(str::to_owned).collect();
    if header != ["group", "time", "status"] {
        return Err(Error::input(format!(
            "line 1: expected header `group,time,status`, found `{}`",
            header.join(",")
        )));
    }
    let mut groups: BTreeMap<String, (Vec<f64>, Vec<u32>)> = BTreeMap::new();
    let mut max_status = 0;
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize, name: &str| -> Result<&str> {
            match record.get(i) {
                Some(v) if !v.is_empty() => Ok(v),
                _ => Err(Error::input(format!("line {line}: missing {name}"))),
            }
        };
        let group = field(0, "group")?.to_owned();
        let time: f64 = field(1, "time")?
            .parse()
            .map_err(|_| Error::input(format!("line {line}: time `{}` is not a number", &record[1])))?;
        if !(time >= 0.0 && time.is_finite()) {
            return Err(Error::input(format!("line {line}: time {time} must be finite and nonnegative")));
        }
        let status: u32 = field(2, "status")?.parse().map_err(|_| {
            Error::input(format!("line {line}: status `{}` is not a nonnegative integer", &record[2]))
        })?;
        max_status = max_status.max(status);
        let entry = groups.entry(group).or_default();
        entry.0.push(time);
        entry.1.push(status);
    }
    if groups.is_empty() {
        return Err(Error::input("no data rows"));
    }
    if max_status == 0 {
        return Err(Error::input("no events in any group: status is 0 throughout, nothing to estimate"));
    }
    let causes = max_status as usize;
    let mut labels = Vec::with_capacity(groups.len());
    let mut samples = Vec::with_capacity(groups.len());
    for (label, (times, statuses)) in groups {
        if times.len() < 2 {
            return Err(Error::input(format!("group `{label}` has {} row(s); at least 2 are required", times.len())));
        }
        samples.push(GroupSample::new(times, statuses, causes)?);
        labels.push(label);
    }
    Ok(Dataset { labels, samples })
}

pub fn ingest_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)
        .map_err(|e| Error::input(format!("cannot open {}: {e}", path.display())))?;
    read_csv(std::io::BufReader::new(file))
}

/// Writes samples as `group,time,status`. Times use the shortest decimal
/// that parses back to the same value, so reading the output reproduces the
/// dataset exactly.
pub fn emit_csv<W: Write>(dataset: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(["group", "time", "status"]).map_err(err)?;
    for (label, sample) in dataset.labels.iter().zip(&dataset.samples) {
        for (t, d) in sample.observations() {
            w.write_record([label.clone(), t.to_string(), d.to_string()]).map_err(err)?;
        }
    }
    w.flush()?;
    Ok(())
}

struct RawBlock {
    label: Option<String>,
    rows: Vec<Vec<f64>>,
    offset: Option<Vec<f64>>,
    line: usize,
}

fn parse_numbers(text: &str, line: usize) -> Result<Vec<f64>> {
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::input(format!("contrast file line {line}: `{t}` is not a finite number")))
        })
        .collect()
}

fn group_rows(rows: &[Vec<f64>], causes: usize, cause: usize) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|r| {
            let mut out = vec![0.0; r.len() * causes];
            for (g, v) in r.iter().enumerate() {
                out[g * causes + cause - 1] = *v;
            }
            out
        })
        .collect()
}

/// Parses a plain-text contrast file.
///
/// Each non-empty line holds one row of numbers (whitespace or comma
/// separated). Blank lines separate blocks. Inside a block, `@ text` sets
/// the label and `c: ...` the offset; `#` starts a comment. Rows of width
/// `k` are group-level and expanded over event types according to `mode`;
/// rows of width `k * causes` are used as written.
pub fn parse_contrast(text: &str, k: usize, causes: usize, mode: &ExpansionMode) -> Result<ContrastSpec> {
    let mut blocks: Vec<RawBlock> = Vec::new();
    let mut current: Option<RawBlock> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            if raw.trim().is_empty() {
                blocks.extend(current.take());
            }
            continue;
        }
        let block = current.get_or_insert_with(|| RawBlock {
            label: None,
            rows: Vec::new(),
            offset: None,
            line,
        });
        if let Some(label) = content.strip_prefix('@') {
            block.label = Some(label.trim().to_owned());
        } else if let Some(rest) = content.strip_prefix("c:") {
            block.offset = Some(parse_numbers(rest, line)?);
        } else {
            let row = parse_numbers(content, line)?;
            if row.len() != k && row.len() != k * causes {
                return Err(Error::input(format!(
                    "contrast file line {line}: row has {} entries, expected {k} (per group) or {} (per group and cause)",
                    row.len(),
                    k * causes
                )));
            }
            block.rows.push(row);
        }
    }
    blocks.extend(current.take());
    if blocks.is_empty() {
        return Err(Error::input("contrast file contains no rows"));
    }

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut offsets: Vec<f64> = Vec::new();
    let mut ranges = Vec::new();
    let mut labels = Vec::new();
    for (b, block) in blocks.into_iter().enumerate() {
        let label = block.label.unwrap_or_else(|| format!("block {}", b + 1));
        let Some(first) = block.rows.first() else {
            return Err(Error::input(format!("contrast file line {}: block has no rows", block.line)));
        };
        let width = first.len();
        if block.rows.iter().any(|r| r.len() != width) {
            return Err(Error::input(format!("contrast file line {}: rows of a block differ in width", block.line)));
        }
        let r = block.rows.len();
        let offset = block.offset.unwrap_or_else(|| vec![0.0; r]);
        if offset.len() != r {
            return Err(Error::input(format!(
                "contrast file line {}: offset has {} entries for {r} rows",
                block.line,
                offset.len()
            )));
        }
        let mut push = |new_rows: Vec<Vec<f64>>, new_offset: Vec<f64>, label: String| {
            ranges.push(rows.len()..rows.len() + new_rows.len());
            rows.extend(new_rows);
            offsets.extend(new_offset);
            labels.push(label);
        };
        if width == k * causes && (width != k || causes == 1) {
            push(block.rows, offset, label);
            continue;
        }
        match mode {
            ExpansionMode::AllEvents => {
                // rows ordered cause-major within the block
                let mut all = Vec::new();
                let mut off = Vec::new();
                for m in 1..=causes {
                    all.extend(group_rows(&block.rows, causes, m));
                    off.extend_from_slice(&offset);
                }
                push(all, off, label);
            }
            ExpansionMode::PerEvent | ExpansionMode::SelectedEvents(_) => {
                let selected: Vec<usize> = match mode {
                    ExpansionMode::SelectedEvents(list) => list.clone(),
                    _ => (1..=causes).collect(),
                };
                for m in selected {
                    if m == 0 || m > causes {
                        return Err(Error::domain(format!("selected cause {m} outside 1..={causes}")));
                    }
                    push(group_rows(&block.rows, causes, m), offset.clone(), format!("{label} [cause {m}]"));
                }
            }
        }
    }
    let n = rows.len();
    let width = k * causes;
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    let spec = ContrastSpec {
        matrix: DMatrix::from_row_slice(n, width, &flat),
        offset: DVector::from_vec(offsets),
        blocks: ranges,
        labels,
    };
    spec.validate(k, causes)?;
    Ok(spec)
}

#[derive(Debug, Clone, PartialEq)]
pub enum ContrastChoice {
    Family(ContrastFamily),
    /// Contents of a contrast file.
    Custom(String),
}

/// Parameters of one analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisRequest {
    pub tau: f64,
    pub alpha: f64,
    pub method: Method,
    pub contrast: ContrastChoice,
    pub per_event: bool,
    /// Restrict per-event hypotheses to these (1-based) causes.
    pub causes: Option<Vec<usize>>,
    pub resamples: usize,
    pub seed: u64,
}

impl AnalysisRequest {
    pub fn new(tau: f64) -> Self {
        AnalysisRequest {
            tau,
            alpha: 0.05,
            method: Method::Multiple,
            contrast: ContrastChoice::Family(ContrastFamily::Dunnett),
            per_event: false,
            causes: None,
            resamples: 1999,
            seed: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::domain(format!("tau must be positive, got {}", self.tau)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::domain(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.resamples == 0 {
            return Err(Error::domain("the number of resamples must be at least 1"));
        }
        Ok(())
    }

    pub fn mode(&self) -> ExpansionMode {
        match (&self.causes, self.per_event) {
            (Some(list), _) => ExpansionMode::SelectedEvents(list.clone()),
            (None, true) => ExpansionMode::PerEvent,
            (None, false) => ExpansionMode::AllEvents,
        }
    }

    fn contrast_spec(&self, k: usize, causes: usize) -> Result<ContrastSpec> {
        match &self.contrast {
            ContrastChoice::Family(f) => {
                let spec = expand(&f.build(k)?, causes, &self.mode())?;
                spec.validate(k, causes)?;
                Ok(spec)
            }
            ContrastChoice::Custom(text) => parse_contrast(text, k, causes, &self.mode()),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GroupEntry {
    pub index: usize,
    pub label: String,
    pub size: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateRow {
    pub group: usize,
    pub label: String,
    pub cause: usize,
    pub rmtl: f64,
    /// `sqrt(Sigma_ii / n)`.
    pub standard_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Settings {
    pub tau: f64,
    pub alpha: f64,
    pub method: Method,
    pub contrast: String,
    pub per_event: bool,
    pub causes: Option<Vec<usize>>,
    pub resamples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub schema_version: u32,
    pub groups: Vec<GroupEntry>,
    pub causes: usize,
    pub total_size: usize,
    pub estimates: Vec<EstimateRow>,
    pub sigma_hat: SymMatrix,
    /// Absent for a single group, where nothing can be compared.
    pub contrast: Option<ContrastSpec>,
    pub global_test: Option<GlobalTestResult>,
    pub multiple_test: Option<MultipleTestResult>,
    pub warnings: Vec<String>,
    pub settings: Settings,
}

fn describe_fit_warning(labels: &[String], w: &GroupWarning) -> String {
    format!("group `{}`: {}", labels[w.group], w.warning)
}

/// Fits every group and runs the requested test. With a single group only
/// the estimates are reported.
pub fn analyze(request: &AnalysisRequest, dataset: &Dataset) -> Result<AnalysisReport> {
    request.validate()?;
    let summary = fit_all(&dataset.samples, request.tau)?;
    let k = dataset.groups();
    let causes = dataset.causes();
    let mut warnings: Vec<String> = summary
        .warnings
        .iter()
        .map(|w| describe_fit_warning(&dataset.labels, w))
        .collect();

    let (contrast, global_test, multiple_test) = if k < 2 {
        warnings.push("single group: estimation only, no hypotheses tested".into());
        (None, None, None)
    } else {
        let spec = request.contrast_spec(k, causes)?;
        let stream = RngStream::new(request.seed, 0);
        let (alpha, b, tau) = (request.alpha, request.resamples, request.tau);
        let (global, multiple) = match request.method {
            Method::Asymptotic => (Some(asymptotic_global_test(&summary, &spec, alpha)?), None),
            Method::Permutation => (
                Some(permutation_global_test(&dataset.samples, &spec, tau, alpha, b, stream)?),
                None,
            ),
            Method::Multiple => (None, Some(multiple_asymptotic_test(&summary, &spec, alpha, b, stream)?)),
            Method::AsymptoticBonferroni => (None, Some(bonferroni_asymptotic(&summary, &spec, alpha)?)),
            Method::PermutationBonferroni => (
                None,
                Some(bonferroni_permutation(&dataset.samples, &spec, tau, alpha, b, stream)?),
            ),
        };
        for w in global.iter().flat_map(|g| &g.warnings).chain(multiple.iter().flat_map(|m| &m.warnings)) {
            warnings.push(w.to_string());
        }
        (Some(spec), global, multiple)
    };

    Ok(AnalysisReport {
        schema_version: ANALYSIS_SCHEMA_VERSION,
        groups: dataset
            .labels
            .iter()
            .zip(&summary.group_sizes)
            .enumerate()
            .map(|(i, (label, &size))| GroupEntry {
                index: i + 1,
                label: label.clone(),
                size,
            })
            .collect(),
        causes,
        total_size: summary.total_size,
        estimates: estimate_rows(&summary, &dataset.labels),
        sigma_hat: summary.sigma_hat.clone(),
        contrast,
        global_test,
        multiple_test,
        warnings,
        settings: Settings {
            tau: request.tau,
            alpha: request.alpha,
            method: request.method,
            contrast: match &request.contrast {
                ContrastChoice::Family(f) => f.name().to_owned(),
                ContrastChoice::Custom(_) => "custom".to_owned(),
            },
            per_event: request.per_event,
            causes: request.causes.clone(),
            resamples: request.resamples,
            seed: request.seed,
        },
    })
}

fn estimate_rows(summary: &RmtlSummary, labels: &[String]) -> Vec<EstimateRow> {
    (0..summary.groups())
        .flat_map(|g| {
            (1..=summary.causes).map(move |m| EstimateRow {
                group: g + 1,
                label: labels[g].clone(),
                cause: m,
                rmtl: summary.mu(g, m),
                standard_error: summary.standard_error(g, m),
            })
        })
        .collect()
}

fn table(out: &mut String, header: &[&str], rows: &[Vec<String>]) {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |out: &mut String, cells: Vec<&str>| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        let _ = writeln!(out, "  {}", parts.join("  ").trim_end());
    };
    line(out, header.to_vec());
    for row in rows {
        line(out, row.iter().map(String::as_str).collect());
    }
}

fn fmt_p(p: f64) -> String {
    if p < 1e-4 {
        format!("{p:.2e}")
    } else {
        format!("{p:.4}")
    }
}

impl AnalysisReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Aligned plain-text rendering.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        if !self.warnings.is_empty() {
            let _ = writeln!(out, "WARNINGS");
            for w in &self.warnings {
                let _ = writeln!(out, "  ! {w}");
            }
            out.push('\n');
        }
        let s = &self.settings;
        let _ = writeln!(
            out,
            "tau = {}   alpha = {}   method = {}   contrast = {}   n = {}",
            s.tau,
            s.alpha,
            s.method.name(),
            s.contrast,
            self.total_size
        );
        out.push('\n');
        let _ = writeln!(out, "Groups");
        let rows: Vec<Vec<String>> = self
            .groups
            .iter()
            .map(|g| vec![g.index.to_string(), g.label.clone(), g.size.to_string()])
            .collect();
        table(&mut out, &["index", "label", "n"], &rows);
        out.push('\n');
        let _ = writeln!(out, "Restricted mean time lost");
        let rows: Vec<Vec<String>> = self
            .estimates
            .iter()
            .map(|e| {
                vec![
                    e.label.clone(),
                    e.cause.to_string(),
                    format!("{:.4}", e.rmtl),
                    format!("{:.4}", e.standard_error),
                ]
            })
            .collect();
        table(&mut out, &["group", "cause", "rmtl", "se"], &rows);
        if let Some(g) = &self.global_test {
            out.push('\n');
            let _ = writeln!(out, "Global test ({})", g.method.name());
            let _ = writeln!(
                out,
                "  W = {:.4}   rank = {}   critical = {:.4}   p = {}   {}",
                g.statistic,
                g.rank,
                g.critical_value,
                fmt_p(g.p_value),
                if g.rejected { "REJECTED" } else { "not rejected" }
            );
        }
        if let Some(m) = &self.multiple_test {
            out.push('\n');
            let _ = writeln!(out, "Multiple tests ({}, local level {:.5})", m.method.name(), m.local_level);
            let rows: Vec<Vec<String>> = m
                .blocks
                .iter()
                .map(|b| {
                    let interval = b
                        .interval
                        .map(|i| format!("{:.4} [{:.4}, {:.4}]", i.estimate, i.lower, i.upper))
                        .unwrap_or_else(|| "-".into());
                    vec![
                        b.label.clone(),
                        format!("{:.4}", b.statistic),
                        b.rank.to_string(),
                        fmt_p(b.p_value),
                        fmt_p(b.adjusted_p_value),
                        if b.rejected { "yes" } else { "no" }.into(),
                        interval,
                    ]
                })
                .collect();
            table(&mut out, &["hypothesis", "W", "rank", "p", "adj. p", "reject", "estimate [simultaneous CI]"], &rows);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "group,time,status\nb,1,1\nb,2,0\na,3,2\na,4,1\nb,5,2\n";

    #[test]
    fn groups_in_lexicographic_order() {
        let d = read_csv(SMALL.as_bytes()).unwrap();
        assert_eq!(d.labels, ["a", "b"]);
        assert_eq!(d.causes(), 2);
        assert_eq!(d.samples[1].times(), &[1.0, 2.0, 5.0]);
    }

    #[test]
    fn rejects_bad_input() {
        let cases = [
            ("group,time\na,1\n", "header"),
            ("group,time,status\na,1,1\na,x,1\nb,1,1\nb,2,0\n", "line 3"),
            ("group,time,status\na,1,1\na,-1,1\nb,1,1\nb,2,0\n", "line 3"),
            ("group,time,status\na,1,1\na,2,-1\nb,1,1\nb,2,0\n", "line 3"),
            ("group,time,status\na,1,1\na,,1\n", "missing time"),
            ("group,time,status\na,1,1\na,2,1\nb,1,1\n", "group `b`"),
            ("group,time,status\na,1,0\na,2,0\n", "no events"),
        ];
        for (text, needle) in cases {
            let e = read_csv(text.as_bytes()).unwrap_err();
            assert!(e.is_input_error());
            assert!(e.to_string().contains(needle), "{needle}: {e}");
        }
    }

    #[test]
    fn single_group_is_estimation_only() {
        let d = read_csv("group,time,status\nx,1,1\nx,2,0\nx,3,1\n".as_bytes()).unwrap();
        let r = analyze(&AnalysisRequest::new(3.0), &d).unwrap();
        assert!(r.contrast.is_none() && r.global_test.is_none() && r.multiple_test.is_none());
        assert_eq!(r.estimates.len(), 1);
    }

    #[test]
    fn csv_round_trip() {
        let d = read_csv("group,time,status\nb,0.1,1\nb,2.000000001,0\na,1e-7,2\na,3.3333333333333335,1\n".as_bytes()).unwrap();
        let mut buf = Vec::new();
        emit_csv(&d, &mut buf).unwrap();
        assert_eq!(read_csv(buf.as_slice()).unwrap(), d);
    }

    #[test]
    fn contrast_file_group_level() {
        let text = "# two comparisons\n@ first\n-1 1 0\n\n@ second\n-1 0 1\nc: 0.5\n";
        let spec = parse_contrast(text, 3, 2, &ExpansionMode::PerEvent).unwrap();
        assert_eq!(spec.labels, ["first [cause 1]", "first [cause 2]", "second [cause 1]", "second [cause 2]"]);
        assert_eq!(spec.matrix.row(1).iter().copied().collect::<Vec<_>>(), [0.0, -1.0, 0.0, 1.0, 0.0, 0.0]);
        assert_eq!(spec.offset.as_slice(), &[0.0, 0.0, 0.5, 0.5]);
        let all = parse_contrast(text, 3, 2, &ExpansionMode::AllEvents).unwrap();
        assert_eq!(all.blocks, vec![0..2, 2..4]);
        assert_eq!(all.labels, ["first", "second"]);
    }

    #[test]
    fn contrast_file_full_width() {
        let text = "-1, 0, 1, 0\n0 -1 0 1\n";
        let spec = parse_contrast(text, 2, 2, &ExpansionMode::PerEvent).unwrap();
        assert_eq!(spec.blocks, vec![0..2]);
        assert_eq!(spec.labels, ["block 1"]);
    }

    #[test]
    fn contrast_file_errors() {
        assert!(parse_contrast("1 2 3\n", 2, 2, &ExpansionMode::AllEvents).is_err());
        assert!(parse_contrast("1 x\n", 2, 1, &ExpansionMode::AllEvents).is_err());
        assert!(parse_contrast("", 2, 1, &ExpansionMode::AllEvents).is_err());
        assert!(matches!(
            parse_contrast("1 1\n", 2, 1, &ExpansionMode::AllEvents),
            Err(Error::Contrast(_))
        ));
        assert!(parse_contrast("-1 1\nc: 1 2\n", 2, 1, &ExpansionMode::AllEvents).is_err());
    }

    #[test]
    fn analysis_is_deterministic() {
        let mut text = String::from("group,time,status\n");
        for i in 0..40 {
            let g = ["ctl", "trt"][i % 2];
            let _ = writeln!(text, "{g},{},{}", (i * 7 % 13) as f64 + 0.5, i % 3);
        }
        let d = read_csv(text.as_bytes()).unwrap();
        let mut req = AnalysisRequest::new(10.0);
        req.method = Method::PermutationBonferroni;
        req.per_event = true;
        req.resamples = 99;
        let a = analyze(&req, &d).unwrap();
        assert_eq!(a.to_json().unwrap(), analyze(&req, &d).unwrap().to_json().unwrap());
        assert_eq!(a.multiple_test.as_ref().unwrap().blocks.len(), 2);
        assert!(a.to_table().contains("g2-g1 [cause 2]"));
    }
}
