//! Hypothesis matrices `H`, offsets `c` and their partition into local
//! blocks.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::numerics::{SymMatrix, DEFAULT_EIGEN_TOL};

const CONTRAST_TOL: f64 = 1e-12;

/// A single invariant violated by a [`ContrastSpec`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Dimension { expected_cols: usize, found_cols: usize },
    OffsetLength { rows: usize, offset_len: usize },
    ZeroMatrix,
    /// `H (1_k ⊗ e_m)` is nonzero at `row`.
    NotAContrast { row: usize, cause: usize, value: f64 },
    RankZeroBlock { block: usize },
    BlockPartition { message: String },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::Dimension { expected_cols, found_cols } => {
                write!(f, "H has {found_cols} columns, expected k*M = {expected_cols}")
            }
            Violation::OffsetLength { rows, offset_len } => {
                write!(f, "offset c has length {offset_len}, H has {rows} rows")
            }
            Violation::ZeroMatrix => write!(f, "H is the zero matrix"),
            Violation::NotAContrast { row, cause, value } => write!(
                f,
                "row {} does not sum to zero over groups for cause {} (sum = {value})",
                row + 1,
                cause
            ),
            Violation::RankZeroBlock { block } => write!(f, "block {} has rank 0", block + 1),
            Violation::BlockPartition { message } => write!(f, "block partition: {message}"),
        }
    }
}

/// Group-level contrast rows (one row per comparison, one column per group)
/// with a label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupContrast {
    pub matrix: DMatrix<f64>,
    pub labels: Vec<String>,
}

impl GroupContrast {
    pub fn groups(&self) -> usize {
        self.matrix.ncols()
    }
}

/// Many-to-one comparisons against group 1: `[-1_{k-1}, I_{k-1}]`.
pub fn dunnett(k: usize) -> Result<GroupContrast> {
    if k < 2 {
        return Err(Error::domain(format!("Dunnett contrasts need k >= 2, got {k}")));
    }
    let mut h = DMatrix::zeros(k - 1, k);
    for r in 0..k - 1 {
        h[(r, 0)] = -1.0;
        h[(r, r + 1)] = 1.0;
    }
    let labels = (2..=k).map(|j| format!("g{j}-g1")).collect();
    Ok(GroupContrast { matrix: h, labels })
}

/// All pairwise comparisons `(i, j)`, `i < j`, ordered by `i` then `j`.
pub fn tukey(k: usize) -> Result<GroupContrast> {
    if k < 2 {
        return Err(Error::domain(format!("Tukey contrasts need k >= 2, got {k}")));
    }
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).collect();
    let mut h = DMatrix::zeros(pairs.len(), k);
    for (r, &(i, j)) in pairs.iter().enumerate() {
        h[(r, i)] = -1.0;
        h[(r, j)] = 1.0;
    }
    let labels = pairs.iter().map(|(i, j)| format!("g{}-g{}", j + 1, i + 1)).collect();
    Ok(GroupContrast { matrix: h, labels })
}

/// Main effects A and B and their interaction in a 2x2 design with groups
/// ordered (A1 B1, A1 B2, A2 B1, A2 B2).
pub fn factorial_2x2() -> GroupContrast {
    let h_a = [1.0, 1.0, -1.0, -1.0];
    let h_b = [1.0, -1.0, 1.0, -1.0];
    let h_ab: Vec<f64> = h_a.iter().zip(&h_b).map(|(a, b)| a * b).collect();
    let mut rows = Vec::with_capacity(12);
    rows.extend_from_slice(&h_a);
    rows.extend_from_slice(&h_b);
    rows.extend_from_slice(&h_ab);
    GroupContrast {
        matrix: DMatrix::from_row_slice(3, 4, &rows),
        labels: vec!["A".into(), "B".into(), "AB".into()],
    }
}

/// Built-in group-level contrast families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
pub enum ContrastFamily {
    #[serde(rename = "dunnett")]
    Dunnett,
    #[serde(rename = "tukey")]
    Tukey,
    #[serde(rename = "2x2")]
    Factorial2x2,
}

impl ContrastFamily {
    pub fn build(self, k: usize) -> Result<GroupContrast> {
        match self {
            ContrastFamily::Dunnett => dunnett(k),
            ContrastFamily::Tukey => tukey(k),
            ContrastFamily::Factorial2x2 if k == 4 => Ok(factorial_2x2()),
            ContrastFamily::Factorial2x2 => Err(Error::domain(format!("the 2x2 design needs exactly 4 groups, got {k}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ContrastFamily::Dunnett => "dunnett",
            ContrastFamily::Tukey => "tukey",
            ContrastFamily::Factorial2x2 => "2x2",
        }
    }
}

impl std::str::FromStr for ContrastFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dunnett" => Ok(ContrastFamily::Dunnett),
            "tukey" => Ok(ContrastFamily::Tukey),
            "2x2" => Ok(ContrastFamily::Factorial2x2),
            other => Err(Error::domain(format!("unknown contrast `{other}` (expected dunnett, tukey or 2x2)"))),
        }
    }
}

/// How group-level rows are expanded over event types.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExpansionMode {
    /// Block `l` is `h_l ⊗ I_M`.
    AllEvents,
    /// One single-row block `h_l ⊗ e_m^T` per `(l, m)`.
    PerEvent,
    /// Like `PerEvent`, restricted to the listed (1-based) causes.
    SelectedEvents(Vec<usize>),
}

/// Hypothesis matrix, offset and block partition.
#[derive(Debug, Clone, PartialEq)]
pub struct ContrastSpec {
    pub matrix: DMatrix<f64>,
    pub offset: DVector<f64>,
    pub blocks: Vec<Range<usize>>,
    pub labels: Vec<String>,
}

#[derive(Serialize)]
struct ContrastBlockView<'a> {
    label: &'a str,
    rows: Vec<Vec<f64>>,
    offset: Vec<f64>,
}

impl Serialize for ContrastSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let blocks: Vec<ContrastBlockView> = self
            .blocks
            .iter()
            .zip(&self.labels)
            .map(|(range, label)| ContrastBlockView {
                label,
                rows: range
                    .clone()
                    .map(|r| self.matrix.row(r).iter().copied().collect())
                    .collect(),
                offset: range.clone().map(|r| self.offset[r]).collect(),
            })
            .collect();
        blocks.serialize(serializer)
    }
}

impl ContrastSpec {
    /// A spec whose whole matrix forms a single block.
    pub fn single_block(matrix: DMatrix<f64>, offset: Option<DVector<f64>>, label: impl Into<String>) -> Self {
        let rows = matrix.nrows();
        ContrastSpec {
            offset: offset.unwrap_or_else(|| DVector::zeros(rows)),
            matrix,
            #[allow(clippy::single_range_in_vec_init)]
            blocks: vec![0..rows],
            labels: vec![label.into()],
        }
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_matrix(&self, block: usize) -> DMatrix<f64> {
        let r = &self.blocks[block];
        self.matrix.rows(r.start, r.len()).into_owned()
    }

    pub fn block_offset(&self, block: usize) -> DVector<f64> {
        let r = &self.blocks[block];
        self.offset.rows(r.start, r.len()).into_owned()
    }

    /// Block `block` as a standalone single-block spec.
    pub fn block(&self, block: usize) -> ContrastSpec {
        ContrastSpec::single_block(self.block_matrix(block), Some(self.block_offset(block)), self.labels[block].clone())
    }

    pub fn with_offset(mut self, offset: DVector<f64>) -> Result<Self> {
        if offset.len() != self.rows() {
            return Err(Error::Contrast(vec![Violation::OffsetLength {
                rows: self.rows(),
                offset_len: offset.len(),
            }]));
        }
        self.offset = offset;
        Ok(self)
    }

    /// Checks dimensions, nonzero `H`, the contrast property over groups
    /// and positive rank of every block. All violations are reported.
    pub fn validate(&self, k: usize, causes: usize) -> Result<()> {
        let mut found = Vec::new();
        let h = &self.matrix;
        if h.ncols() != k * causes {
            found.push(Violation::Dimension {
                expected_cols: k * causes,
                found_cols: h.ncols(),
            });
            return Err(Error::Contrast(found));
        }
        if self.offset.len() != h.nrows() {
            found.push(Violation::OffsetLength {
                rows: h.nrows(),
                offset_len: self.offset.len(),
            });
        }
        if h.nrows() == 0 || h.iter().all(|v| *v == 0.0) {
            found.push(Violation::ZeroMatrix);
        }
        for row in 0..h.nrows() {
            for cause in 1..=causes {
                let sum: f64 = (0..k).map(|g| h[(row, g * causes + cause - 1)]).sum();
                let scale = (0..k).map(|g| h[(row, g * causes + cause - 1)].abs()).sum::<f64>().max(1.0);
                if sum.abs() > CONTRAST_TOL * scale {
                    found.push(Violation::NotAContrast { row, cause, value: sum });
                }
            }
        }
        let mut next = 0;
        for (b, range) in self.blocks.iter().enumerate() {
            if range.start != next || range.end <= range.start {
                found.push(Violation::BlockPartition {
                    message: format!("block {} covers rows {}..{} but row {} was expected next", b + 1, range.start + 1, range.end, next + 1),
                });
                break;
            }
            next = range.end;
        }
        if next != h.nrows() && !found.iter().any(|v| matches!(v, Violation::BlockPartition { .. })) {
            found.push(Violation::BlockPartition {
                message: format!("blocks cover {next} of {} rows", h.nrows()),
            });
        }
        if self.labels.len() != self.blocks.len() {
            found.push(Violation::BlockPartition {
                message: format!("{} labels for {} blocks", self.labels.len(), self.blocks.len()),
            });
        }
        if found.is_empty() {
            for b in 0..self.blocks.len() {
                let hb = self.block_matrix(b);
                let gram = SymMatrix::new(&hb * hb.transpose()).expect("square");
                if gram.numeric_rank(DEFAULT_EIGEN_TOL) == 0 {
                    found.push(Violation::RankZeroBlock { block: b });
                }
            }
        }
        if found.is_empty() {
            Ok(())
        } else {
            Err(Error::Contrast(found))
        }
    }
}

/// Kronecker-expands group-level rows over `causes` event types.
pub fn expand(group: &GroupContrast, causes: usize, mode: &ExpansionMode) -> Result<ContrastSpec> {
    if causes == 0 {
        return Err(Error::domain("number of event types must be at least 1"));
    }
    let k = group.groups();
    let width = k * causes;
    let selected: Vec<usize> = match mode {
        ExpansionMode::AllEvents | ExpansionMode::PerEvent => (1..=causes).collect(),
        ExpansionMode::SelectedEvents(list) => {
            if list.is_empty() {
                return Err(Error::domain("no event types selected"));
            }
            if let Some(bad) = list.iter().find(|&&m| m == 0 || m > causes) {
                return Err(Error::domain(format!("selected cause {bad} outside 1..={causes}")));
            }
            list.clone()
        }
    };
    let row_for = |l: usize, m: usize| -> Vec<f64> {
        let mut row = vec![0.0; width];
        for g in 0..k {
            row[g * causes + m - 1] = group.matrix[(l, g)];
        }
        row
    };
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut blocks = Vec::new();
    let mut labels = Vec::new();
    for l in 0..group.matrix.nrows() {
        match mode {
            ExpansionMode::AllEvents => {
                let start = rows.len();
                rows.extend((1..=causes).map(|m| row_for(l, m)));
                blocks.push(start..rows.len());
                labels.push(group.labels[l].clone());
            }
            _ => {
                for &m in &selected {
                    blocks.push(rows.len()..rows.len() + 1);
                    rows.push(row_for(l, m));
                    labels.push(format!("{} [cause {m}]", group.labels[l]));
                }
            }
        }
    }
    let r = rows.len();
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Ok(ContrastSpec {
        matrix: DMatrix::from_row_slice(r, width, &flat),
        offset: DVector::zeros(r),
        blocks,
        labels,
    })
}
