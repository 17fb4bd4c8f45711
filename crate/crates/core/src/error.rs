use thiserror::Error;

use crate::construction::FrequencyReport;
use crate::series::Violation;

#[derive(Debug, Error)]
pub enum SeriesError {
    #[error("not admissible: {}", join(.0))]
    NotAdmissible(Vec<Violation>),
    #[error("cannot parse `{0}`")]
    Parse(String),
    #[error("negative coefficient at exponent {0}")]
    NegativeElementCoefficient(i64),
    #[error("tail mass still above threshold after {0} terms")]
    TruncationLimit(u32),
}

fn join<T: std::fmt::Display>(items: &[T]) -> String {
    items.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Error)]
pub enum ConstructionError {
    #[error("invalid parameters: {}", join(.0))]
    Invalid(Vec<crate::construction::ParamViolation>),
    #[error("stage range {base}..={top} outside 1..={max}")]
    StageRange { base: usize, top: usize, max: usize },
    #[error("spacer distribution must have total mass 1, got {0}")]
    NotNormalized(String),
    #[error("{0}")]
    Series(#[from] SeriesError),
    #[error("frequency window order {max_m} needs more than {len} spacers")]
    WindowTooLong { max_m: usize, len: usize },
    #[error("stage {stage}: frequencies still off at r = {r}")]
    Generation { stage: usize, r: usize, report: Box<FrequencyReport> },
    #[error("need at least {0} stages")]
    TooFewStages(usize),
    #[error("copy count exceeds {0}")]
    TooManyCopies(u128),
    #[error("malformed parameter file: {0}")]
    Format(String),
}

#[derive(Debug, Error)]
pub enum WeakError {
    #[error("support radius {radius} must stay below a quarter of the window {window}")]
    SupportTooWide { radius: u64, window: String },
    #[error("shift {0} leaves the window")]
    ShiftOutsideWindow(String),
    #[error("test set `{0}` is empty or references labels outside the base tower")]
    BadTestSet(String),
    #[error("no gap shift found after {0} attempts")]
    GapSamplingExhausted(usize),
    #[error("{0}")]
    Construction(#[from] ConstructionError),
}
