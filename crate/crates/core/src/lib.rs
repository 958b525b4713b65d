//! Final exam scheduling.
//!
//! Exams are grouped into blocks, blocks are sequenced into time slots, and
//! the resulting schedule is refined with integer-programming local search.
//! A layer-by-layer matheuristic and its hybrid with block sequencing are
//! provided as alternatives, together with an evaluator for the five
//! student-level conflict metrics.

pub mod assign;
pub mod data;
pub mod layer_cake;
pub mod local_search;
pub mod metrics;
pub mod mip;
pub mod nottingham;
pub mod pipeline;
pub mod report;
pub mod schedule_ip;
pub mod sequencing;
pub mod synth;
