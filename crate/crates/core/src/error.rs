use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty sequence")]
    EmptySequence,
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("truncated")]
    Truncated,
    #[error("desync")]
    Desync,
    #[error("corrupt frame")]
    CorruptFrame,

    #[error("window larger than sequence")]
    WindowTooLarge,
    #[error("degenerate split: {0}")]
    DegenerateSplit(String),
    #[error("invalid split spec: {0}")]
    InvalidSplit(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("missing sequence file row {row}: {path}")]
    MissingSequenceFile { row: usize, path: PathBuf },
    #[error("duplicate id {0}")]
    DuplicateId(String),
    #[error("malformed CSV {path} line {line}: {message}")]
    MalformedCsv { path: PathBuf, line: u64, message: String },
    #[error("I/O error on {path}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("diverged: non-finite loss on batch {batch_ids:?}")]
    Diverged { batch_ids: Vec<String> },
    #[error("training failed: {0}")]
    TrainingFailed(String),
    #[error("class-list mismatch: {0}")]
    ClassListMismatch(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invalid checkpoint: {0}")]
    Checkpoint(String),

    #[error("missing template for glyph {0:?}")]
    MissingTemplate(char),
    #[error("degenerate template: {0}")]
    DegenerateTemplate(String),
    #[error("template file line {line}: {message}")]
    TemplateSyntax { line: usize, message: String },
    #[error("path too short: need at least 3 points, got {0}")]
    PathTooShort(usize),

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("invalid config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn csv(path: &std::path::Path, e: csv::Error) -> Self {
        let line = e.position().map_or(0, |p| p.line());
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::MalformedCsv { path: path.to_path_buf(), line, message: format!("{other:?}") },
        }
    }
}
