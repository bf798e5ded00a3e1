//! Case loading, diagnosis matching, metrics, reports and benchmark runs.

mod bench;
mod cases;
mod matching;
mod metrics;

pub use bench::{diagnosis_name, run_benchmark, BenchmarkContext, BenchmarkOptions, BenchmarkOutcome, JournalEntry, Method};
pub use cases::{load_cases_from_str, load_public_cases, CaseFormat, LoadedCases, MIN_PHENOTYPES};
pub use matching::{normalize_diagnosis, MatchRule, Verdict};
pub use metrics::{
    compute_metrics, emit_report, median_rank, parse_report_csv, parse_report_text, render_report, CsvRow, EvalReport,
    MedianRank, MethodReport, PredictionRecord, ReportFormat, CSV_HEADER, HIT_KS,
};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("unknown format {0:?}")]
    UnknownFormat(String),

    #[error("no cases left to evaluate")]
    NoCases,

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("case {0} appears more than once")]
    DuplicateRecord(String),

    #[error("case {0} has no gold diagnosis")]
    MissingGold(String),

    #[error("{0}")]
    Report(String),

    #[error(transparent)]
    Retrieval(#[from] crate::retrieval::RetrievalError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
