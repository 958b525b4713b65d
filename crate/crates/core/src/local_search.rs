//! Post-processing: repeatedly reschedule the exams with the densest bad
//! events while everything else stays put.

use std::time::{Duration, Instant};

use crate::data::CoenrollmentStats;
use crate::metrics::{conflict_count, score, score_individual, ExamSchedule, MetricWeights};
use crate::mip::{Backend, SolveLimits};
use crate::schedule_ip::{solve_schedule_ip, ScheduleIpError, ScheduleIpInstance, ZetaPenalty};

#[derive(Debug, Clone)]
pub struct LocalSearchConfig {
    /// Exams rescheduled per iteration.
    pub n: usize,
    /// Index advance after a rejected window.
    pub f_step: usize,
    /// Index retreat after an accepted window.
    pub b_step: usize,
    /// Total budget. Converted to solver nodes at `nodes_per_second` when the
    /// backend reports nodes; the wall clock is checked at four times this.
    pub time_limit: Duration,
    pub nodes_per_second: u64,
    /// Limit for each rescheduling solve.
    pub ip_limits: SolveLimits,
    pub weights: MetricWeights,
    pub zeta: Option<ZetaPenalty>,
}

impl LocalSearchConfig {
    pub fn with_window(n: usize) -> Self {
        let n = n.max(1);
        Self {
            n,
            f_step: ((0.4 * n as f64).round() as usize).max(1),
            b_step: (0.2 * n as f64).round() as usize,
            ..Self::default()
        }
    }
}

impl Default for LocalSearchConfig {
    fn default() -> Self {
        Self {
            n: 25,
            f_step: 10,
            b_step: 5,
            time_limit: Duration::from_secs(600),
            nodes_per_second: 2_000,
            ip_limits: SolveLimits::seconds(30.0),
            weights: MetricWeights::default(),
            zeta: None,
        }
    }
}

/// Exams by descending bad-event density: own score over exam size.
/// Empty exams go last.
pub fn sort_by_density(stats: &CoenrollmentStats, w: &MetricWeights, s: &ExamSchedule) -> Vec<usize> {
    let slots = s.slots();
    let density: Vec<f64> = (0..slots.len())
        .map(|e| match (s.slot(e), stats.size(e)) {
            (Some(x), q) if q > 0 => score_individual(stats, w, slots, e, x) / f64::from(q),
            _ => 0.0,
        })
        .collect();
    let mut order: Vec<usize> = (0..slots.len()).collect();
    order.sort_by(|&a, &b| {
        (stats.size(a) == 0)
            .cmp(&(stats.size(b) == 0))
            .then(density[b].total_cmp(&density[a]))
            .then(a.cmp(&b))
    });
    order
}

#[derive(Debug, Clone)]
pub struct PostProcessResult {
    pub schedule: ExamSchedule,
    pub initial_score: f64,
    pub final_score: f64,
    pub iterations: usize,
    pub accepted: usize,
}

/// Improve `base` by windowed rescheduling over `slots`. The score never
/// increases and the conflict count never rises.
pub fn post_process(
    stats: &CoenrollmentStats,
    base: &ExamSchedule,
    slots: &[usize],
    cfg: &LocalSearchConfig,
    backend: &dyn Backend,
) -> Result<PostProcessResult, ScheduleIpError> {
    let start = Instant::now();
    let node_budget = (cfg.time_limit.as_secs_f64() * cfg.nodes_per_second as f64).ceil() as u64;
    let wall_limit = cfg.time_limit.saturating_mul(4);
    let mut nodes_used = 0u64;
    let mut sched = base.clone();
    let initial_score = score(stats, &cfg.weights, &sched);
    let mut best_score = initial_score;
    let mut conflicts = conflict_count(stats, &sched);
    let num = sched.num_exams();
    let (mut i, mut iterations, mut accepted) = (0usize, 0usize, 0usize);
    while i < num {
        if nodes_used >= node_budget || start.elapsed() >= wall_limit {
            log::info!("post-process: budget exhausted after {iterations} iterations");
            break;
        }
        let order = sort_by_density(stats, &cfg.weights, &sched);
        let window: Vec<usize> = order[i..(i + cfg.n).min(num)].to_vec();
        let inst = ScheduleIpInstance::new(stats, &sched, window.clone(), slots.to_vec(), &cfg.weights, cfg.zeta.as_ref())?;
        let current: Vec<usize> = window.iter().map(|&e| sched.slots()[e]).collect();
        let warm = current.iter().all(|s| inst.slots.binary_search(s).is_ok()).then_some(current.as_slice());
        let r = solve_schedule_ip(&inst, warm, &cfg.ip_limits, backend)?;
        nodes_used += r.nodes.max(1);
        let mut candidate = sched.clone();
        for (&e, &s) in window.iter().zip(&r.slots) {
            candidate.assign(e, s);
        }
        let new_score = score(stats, &cfg.weights, &candidate);
        let new_conflicts = conflict_count(stats, &candidate);
        let ok = new_score < best_score && new_conflicts <= conflicts;
        iterations += 1;
        log::debug!("{iterations},{i},{new_score},{ok}");
        if ok {
            sched = candidate;
            best_score = new_score;
            conflicts = new_conflicts;
            accepted += 1;
            i = i.saturating_sub(cfg.b_step);
        } else {
            i += cfg.f_step;
        }
    }
    log::info!(
        "post-process: {iterations} iterations, {accepted} accepted, score {initial_score} -> {best_score}"
    );
    Ok(PostProcessResult { schedule: sched, initial_score, final_score: best_score, iterations, accepted })
}
