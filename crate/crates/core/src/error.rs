use std::path::PathBuf;

use thiserror::Error;

use crate::diffusion::ScoreMatrix;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Structural problems in binary payloads or graph entry lists.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormatError {
    #[error("bad magic {found:?}, expected {expected:?}")]
    BadMagic { found: [u8; 4], expected: [u8; 4] },
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),
    #[error("truncated payload: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("{0} trailing bytes after payload")]
    TrailingBytes(usize),
    #[error("declared size overflows")]
    SizeOverflow,
    #[error("{n} nodes but only {nnz} stored entries; isolated nodes are not allowed")]
    IsolatedNodes { n: u64, nnz: u64 },
    #[error("empty dimension: {rows}x{dim}")]
    EmptyDimension { rows: usize, dim: usize },
    #[error("non-finite value at position {0}")]
    NonFinite(usize),
    #[error("index {index} out of range for {n} nodes")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("diagonal entry at node {0}")]
    DiagonalEntry(usize),
    #[error("negative weight {w} on ({i}, {j})")]
    NegativeWeight { i: usize, j: usize, w: f32 },
    #[error("entry ({i}, {j}) has no symmetric counterpart of equal weight")]
    Asymmetric { i: usize, j: usize },
    #[error("entries not strictly sorted at position {0}")]
    Unsorted(usize),
}

/// Problems with a labeled-node list.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabelIssue {
    #[error("duplicate id {0}")]
    DuplicateId(usize),
    #[error("negative class {0}")]
    NegativeClass(i64),
    #[error("id {id} out of range for {n} nodes")]
    IdOutOfRange { id: usize, n: usize },
    #[error("class {class} out of range for {classes} classes")]
    ClassOutOfRange { class: usize, classes: usize },
    #[error("at least two classes required, got {0}")]
    TooFewClasses(usize),
    #[error("no labeled nodes")]
    Empty,
    #[error("malformed line: {0}")]
    Malformed(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("{}{issue}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Labels { line: Option<usize>, issue: LabelIssue },
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("k = {k} must satisfy 1 <= k < n = {n}")]
    InvalidK { k: usize, n: usize },
    #[error("row {0} has zero norm under the cosine metric")]
    ZeroNormRow(usize),
    #[error("node {0} is isolated (zero degree)")]
    IsolatedNode(usize),
    #[error("dense solve capped at {cap} nodes, got {n}; use the iterative solver")]
    DenseCapExceeded { n: usize, cap: usize },
    #[error("linear system is singular")]
    Singular,
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        last: Box<ScoreMatrix>,
    },
    #[error("class {0} has no labeled nodes")]
    MissingClass(usize),
    #[error("constraint set needs both signs: {0}")]
    EmptyConstraintSide(&'static str),
    #[error("zero denominator in ratio energy")]
    ZeroDenominator,
    #[error("l1 solver failure: {reason}")]
    SolverFailure { reason: String, trace: Vec<f64> },
    #[error("empty input")]
    EmptyInput,
    #[error("extractor failure: {0}")]
    Extractor(String),
    #[error("extractor returned {found} rows, expected {expected}")]
    RowCountMismatch { expected: usize, found: usize },
    #[error("config: {0}")]
    Config(String),
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn labels(issue: LabelIssue) -> Self {
        Error::Labels { line: None, issue }
    }

    /// Tag an error with the pipeline stage that produced it.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Innermost error, skipping stage tags.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}
