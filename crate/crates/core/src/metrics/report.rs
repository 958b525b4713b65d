use serde::{Deserialize, Serialize};

use super::{ExamSchedule, MetricWeights, MetricsError};
use crate::data::{EnrollmentTable, SlotCalendar};

/// Student-event counts for one schedule.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricsReport {
    pub conflicts: u64,
    pub triples: u64,
    pub triples_same_day: u64,
    pub triples_24hr: u64,
    pub b2b: u64,
    pub b2b_evening_morning: u64,
    pub b2b_other: u64,
    pub two_in_24: u64,
    pub three_in_4: u64,
    pub reschedules: u64,
    pub weighted_score: f64,
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    fn finish(mut self, w: &MetricWeights) -> Self {
        self.triples = self.triples_same_day + self.triples_24hr;
        self.b2b = self.b2b_evening_morning + self.b2b_other;
        self.reschedules = self.conflicts + self.triples;
        self.weighted_score = w.conflict_w * self.conflicts as f64
            + w.triple_w * self.triples as f64
            + w.b2b_w * (w.gamma1 * self.b2b_evening_morning as f64 + w.gamma2 * self.b2b_other as f64)
            + w.two24_w * self.two_in_24 as f64
            + w.three4_w * self.three_in_4 as f64;
        self
    }
}

/// Count one student's events given how many of their exams sit in each slot.
/// `consumed` is scratch of length `2 * per_slot.len()`, all false on entry and exit.
fn student_events(per_slot: &[u32], cal: &SlotCalendar, consumed: &mut [bool], r: &mut MetricsReport) {
    let n = per_slot.len();
    let occ = |s: usize| s < n && per_slot[s] > 0;
    for &m in per_slot {
        r.conflicts += u64::from(m) * u64::from(m.saturating_sub(1)) / 2;
    }
    // c1[s]: pair (s, s+1) lies in a counted triple; c2[s]: pair (s, s+2)
    let (c1, c2) = consumed.split_at_mut(n);
    for s in 0..n.saturating_sub(2) {
        if occ(s) && occ(s + 1) && occ(s + 2) {
            if cal.same_day(s, s + 2) {
                r.triples_same_day += 1;
            } else {
                r.triples_24hr += 1;
            }
            c1[s] = true;
            c1[s + 1] = true;
            c2[s] = true;
        }
    }
    for s in 0..n.saturating_sub(1) {
        if occ(s) && occ(s + 1) && !c1[s] {
            if cal.is_evening_morning(s) {
                r.b2b_evening_morning += 1;
            } else {
                r.b2b_other += 1;
            }
        }
        if occ(s) && occ(s + 2) && !c2[s] {
            r.two_in_24 += 1;
        }
        if occ(s) && occ(s + 3) && (occ(s + 1) != occ(s + 2)) {
            r.three_in_4 += 1;
        }
    }
    c1.fill(false);
    c2.fill(false);
}

/// Evaluate a complete schedule student by student.
pub fn evaluate(
    s: &ExamSchedule,
    t: &EnrollmentTable,
    cal: &SlotCalendar,
    weights: &MetricWeights,
) -> Result<MetricsReport, MetricsError> {
    if s.num_exams() != t.num_exams() {
        return Err(MetricsError::ExamCount { schedule: s.num_exams(), table: t.num_exams() });
    }
    for e in 0..s.num_exams() {
        match s.slot(e) {
            None => return Err(MetricsError::MissingExam(t.exam_id(e).into())),
            Some(x) if x >= cal.len() => {
                return Err(MetricsError::SlotOutOfRange { exam: t.exam_id(e).into(), slot: x, len: cal.len() })
            }
            _ => {}
        }
    }
    let mut r = MetricsReport::default();
    let mut per_slot = vec![0u32; cal.len()];
    let mut consumed = vec![false; 2 * cal.len()];
    for roster in t.rosters() {
        for &e in roster {
            per_slot[s.slots()[e]] += 1;
        }
        student_events(&per_slot, cal, &mut consumed, &mut r);
        for &e in roster {
            per_slot[s.slots()[e]] = 0;
        }
    }
    Ok(r.finish(weights))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_student(slots: &[usize], cal: &SlotCalendar) -> MetricsReport {
        let exams: Vec<String> = (0..slots.len()).map(|i| format!("e{i}")).collect();
        let t = EnrollmentTable::from_records(exams.iter().map(|e| ("A", e.as_str())));
        evaluate(&ExamSchedule::new(slots.to_vec()), &t, cal, &MetricWeights::default()).unwrap()
    }

    #[test]
    fn same_day_triple_consumes_pairs() {
        let r = one_student(&[0, 1, 2], &SlotCalendar::uniform(2, 3));
        assert_eq!((r.triples, r.triples_same_day, r.b2b, r.two_in_24, r.three_in_4), (1, 1, 0, 0, 0));
    }

    #[test]
    fn evening_then_morning() {
        let r = one_student(&[2, 3], &SlotCalendar::uniform(2, 3));
        assert_eq!((r.b2b, r.b2b_evening_morning, r.triples, r.two_in_24, r.conflicts), (1, 1, 0, 0, 0));
    }

    #[test]
    fn two_apart() {
        let r = one_student(&[0, 2], &SlotCalendar::uniform(2, 3));
        assert_eq!((r.two_in_24, r.b2b, r.triples, r.three_in_4), (1, 0, 0, 0));
    }

    #[test]
    fn conflicts_count_pairs_per_slot() {
        let r = one_student(&[4, 4, 4], &SlotCalendar::uniform(2, 3));
        assert_eq!(r.conflicts, 3);
        assert_eq!(r.reschedules, 3);
        assert_eq!(r.weighted_score, 3000.0);
    }

    #[test]
    fn four_in_a_row_is_two_triples() {
        let r = one_student(&[0, 1, 2, 3], &SlotCalendar::uniform(2, 3));
        assert_eq!((r.triples_same_day, r.triples_24hr, r.b2b, r.two_in_24), (1, 1, 0, 0));
    }

    #[test]
    fn three_in_four_patterns() {
        let cal = SlotCalendar::uniform(3, 3);
        let r = one_student(&[0, 1, 3], &cal);
        assert_eq!((r.three_in_4, r.b2b, r.two_in_24), (1, 1, 1));
        let r = one_student(&[0, 2, 3], &cal);
        assert_eq!((r.three_in_4, r.b2b, r.two_in_24), (1, 1, 1));
    }

    #[test]
    fn missing_exam_named() {
        let t = EnrollmentTable::from_records([("A", "x"), ("A", "y")]);
        let s = ExamSchedule::new(vec![0, super::super::UNASSIGNED]);
        let err = evaluate(&s, &t, &SlotCalendar::uniform(1, 3), &MetricWeights::default()).unwrap_err();
        assert_eq!(err.to_string(), "exam `y` has no slot");
    }

    #[test]
    fn json_keys() {
        let v: serde_json::Value = serde_json::from_str(&MetricsReport::default().to_json()).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(|k| k.as_str()).collect();
        assert_eq!(keys.len(), 11);
        for k in ["conflicts", "triples_24hr", "b2b_evening_morning", "two_in_24", "three_in_4", "reschedules", "weighted_score"] {
            assert!(keys.contains(&k), "{k}");
        }
    }
}
