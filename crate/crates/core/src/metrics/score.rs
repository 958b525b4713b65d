use serde::{Deserialize, Serialize};

use super::{ExamSchedule, UNASSIGNED};
use crate::data::CoenrollmentStats;

/// Weights for the weighted metric score and for the rescheduling objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricWeights {
    pub conflict_w: f64,
    pub triple_w: f64,
    pub b2b_w: f64,
    pub two24_w: f64,
    pub three4_w: f64,
    /// Evening-to-morning back-to-back multiplier.
    pub gamma1: f64,
    /// Multiplier for all other back-to-backs.
    pub gamma2: f64,
    /// Conflict weight relative to back-to-backs when rescheduling.
    pub lambda1: f64,
    /// Two-in-24 weight relative to back-to-backs when rescheduling.
    pub lambda2: f64,
}

impl Default for MetricWeights {
    fn default() -> Self {
        Self {
            conflict_w: 1000.0,
            triple_w: 10.0,
            b2b_w: 1.0,
            two24_w: 0.5,
            three4_w: 5.0,
            gamma1: 1.0,
            gamma2: 1.0,
            lambda1: 1000.0,
            lambda2: 0.5,
        }
    }
}

impl MetricWeights {
    /// Parse `key=value` pairs separated by commas. Keys: conflict, triple,
    /// b2b, two24, three4, gamma1, gamma2, lambda1, lambda2. Setting
    /// `conflict` or `two24` also sets `lambda1` or `lambda2` unless those
    /// are given explicitly.
    pub fn parse(spec: &str) -> Result<Self, String> {
        let mut w = Self::default();
        let (mut l1, mut l2) = (None, None);
        for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part.split_once('=').ok_or_else(|| format!("expected key=value, got `{part}`"))?;
            let v: f64 = v.trim().parse().map_err(|_| format!("bad number in `{part}`"))?;
            if !(v >= 0.0 && v.is_finite()) {
                return Err(format!("weight `{k}` must be a nonnegative number"));
            }
            match k.trim() {
                "conflict" => w.conflict_w = v,
                "triple" => w.triple_w = v,
                "b2b" => w.b2b_w = v,
                "two24" => w.two24_w = v,
                "three4" => w.three4_w = v,
                "gamma1" => w.gamma1 = v,
                "gamma2" => w.gamma2 = v,
                "lambda1" => l1 = Some(v),
                "lambda2" => l2 = Some(v),
                other => return Err(format!("unknown weight `{other}`")),
            }
        }
        w.lambda1 = l1.unwrap_or(w.conflict_w / w.b2b_w.max(f64::MIN_POSITIVE));
        w.lambda2 = l2.unwrap_or(w.two24_w / w.b2b_w.max(f64::MIN_POSITIVE));
        Ok(w)
    }
}

/// Slot-distance bucket for a pair: 0 same slot, 1 adjacent, 2 two apart.
fn distance(a: usize, b: usize) -> Option<usize> {
    let d = a.abs_diff(b);
    (d <= 2).then_some(d)
}

/// Raw pair counts (same slot, adjacent, two apart) between `e` placed at
/// `s` and every other placed exam.
pub fn context_counts(stats: &CoenrollmentStats, slots: &[usize], e: usize, s: usize) -> [u64; 3] {
    let mut out = [0u64; 3];
    for &(f, c) in stats.neighbors(e) {
        let sf = slots[f];
        if sf == UNASSIGNED {
            continue;
        }
        if let Some(d) = distance(s, sf) {
            out[d] += u64::from(c);
        }
    }
    out
}

/// `lambda1 * conflicts + b2b + lambda2 * two-apart` between `e` at `s` and
/// every other placed exam. Unassigned exams are ignored.
pub fn score_individual(stats: &CoenrollmentStats, w: &MetricWeights, slots: &[usize], e: usize, s: usize) -> f64 {
    let [c0, c1, c2] = context_counts(stats, slots, e, s);
    w.lambda1 * c0 as f64 + c1 as f64 + w.lambda2 * c2 as f64
}

/// Sum of [`score_individual`] over all placed exams, so every pair event
/// is counted from both ends.
pub fn score(stats: &CoenrollmentStats, w: &MetricWeights, s: &ExamSchedule) -> f64 {
    let slots = s.slots();
    (0..slots.len())
        .filter(|&e| slots[e] != UNASSIGNED)
        .map(|e| score_individual(stats, w, slots, e, slots[e]))
        .sum()
}

/// Co-enrolled students sharing a slot, over placed exams.
pub fn conflict_count(stats: &CoenrollmentStats, s: &ExamSchedule) -> u64 {
    let slots = s.slots();
    stats
        .pairs()
        .filter(|&(i, j, _)| slots[i] != UNASSIGNED && slots[i] == slots[j])
        .map(|(_, _, c)| u64::from(c))
        .sum()
}
