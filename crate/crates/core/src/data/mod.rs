//! Enrollment and calendar inputs, co-enrollment statistics and the conflict graph.

mod calendar;
mod enrollment;
mod stats;

pub use calendar::{build_calendar, CalendarConfig, DayConfig, Slot, SlotCalendar, DEFAULT_SLOTS_PER_DAY};
pub use enrollment::{parse_enrollment, parse_enrollment_reader, write_enrollment, EnrollmentTable};
pub use stats::{build_conflict_graph, compute_stats, CoenrollmentStats, ConflictGraph, Triple};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("input contains no records")]
    Empty,
    #[error("calendar: {0}")]
    Calendar(String),
    #[error("statistics: {0}")]
    Stats(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
