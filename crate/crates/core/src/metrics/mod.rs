//! Schedules, the five student-level metrics, and the rescheduling score.

mod report;
mod schedule;
mod score;

pub use report::{evaluate, MetricsReport};
pub use schedule::{read_schedule, schedule_to_csv_string, write_schedule, ExamSchedule, UNASSIGNED};
pub use score::{conflict_count, context_counts, score, score_individual, MetricWeights};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("exam `{0}` has no slot")]
    MissingExam(String),
    #[error("exam `{exam}` is in slot {slot}, outside a calendar of {len} slots")]
    SlotOutOfRange { exam: String, slot: usize, len: usize },
    #[error("exam `{exam}` is in unavailable slot {slot}")]
    UnavailableSlot { exam: String, slot: usize },
    #[error("schedule covers {schedule} exams but the enrollment has {table}")]
    ExamCount { schedule: usize, table: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
