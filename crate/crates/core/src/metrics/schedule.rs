use std::io::{Read, Write};

use serde::Deserialize;

use super::MetricsError;
use crate::data::{EnrollmentTable, SlotCalendar};

/// Marker for an exam with no slot yet.
pub const UNASSIGNED: usize = usize::MAX;

/// Exam index to slot index. Built incrementally by the layered solvers, so
/// entries may be [`UNASSIGNED`] until the schedule is complete.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ExamSchedule {
    slots: Vec<usize>,
    draft: bool,
}

impl ExamSchedule {
    pub fn new(slots: Vec<usize>) -> Self {
        Self { slots, draft: false }
    }

    pub fn unassigned(num_exams: usize) -> Self {
        Self::new(vec![UNASSIGNED; num_exams])
    }

    /// Mark as a draft: unavailable slots are then tolerated by [`ExamSchedule::validate`].
    pub fn into_draft(mut self) -> Self {
        self.draft = true;
        self
    }

    pub fn finalized(mut self) -> Self {
        self.draft = false;
        self
    }

    pub fn is_draft(&self) -> bool {
        self.draft
    }

    pub fn num_exams(&self) -> usize {
        self.slots.len()
    }

    pub fn slot(&self, e: usize) -> Option<usize> {
        self.slots.get(e).copied().filter(|&s| s != UNASSIGNED)
    }

    pub fn slots(&self) -> &[usize] {
        &self.slots
    }

    pub fn assign(&mut self, e: usize, s: usize) {
        self.slots[e] = s;
    }

    pub fn unassign(&mut self, e: usize) {
        self.slots[e] = UNASSIGNED;
    }

    pub fn is_complete(&self) -> bool {
        self.slots.iter().all(|&s| s != UNASSIGNED)
    }

    pub fn first_unassigned(&self) -> Option<usize> {
        self.slots.iter().position(|&s| s == UNASSIGNED)
    }

    /// Exams per slot, over `num_slots` slots.
    pub fn exams_by_slot(&self, num_slots: usize) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); num_slots];
        for (e, &s) in self.slots.iter().enumerate() {
            if s < num_slots {
                out[s].push(e);
            }
        }
        out
    }

    /// Sorted list of slots holding at least one exam.
    pub fn occupied_slots(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.slots.iter().copied().filter(|&s| s != UNASSIGNED).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Completeness, range, and (unless draft) availability checks.
    pub fn validate(&self, calendar: &SlotCalendar, exam_name: impl Fn(usize) -> String) -> Result<(), MetricsError> {
        for (e, &s) in self.slots.iter().enumerate() {
            if s == UNASSIGNED {
                return Err(MetricsError::MissingExam(exam_name(e)));
            }
            if s >= calendar.len() {
                return Err(MetricsError::SlotOutOfRange { exam: exam_name(e), slot: s, len: calendar.len() });
            }
            if !self.draft && !calendar.is_available(s) {
                return Err(MetricsError::UnavailableSlot { exam: exam_name(e), slot: s });
            }
        }
        Ok(())
    }
}

/// Write `exam_id,slot_index` rows sorted by exam id.
pub fn write_schedule<W: Write>(s: &ExamSchedule, t: &EnrollmentTable, out: W) -> Result<(), MetricsError> {
    let mut rows: Vec<(&str, usize)> = (0..s.num_exams())
        .map(|e| s.slot(e).map(|x| (t.exam_id(e), x)).ok_or_else(|| MetricsError::MissingExam(t.exam_id(e).into())))
        .collect::<Result<_, _>>()?;
    rows.sort_unstable();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["exam_id", "slot_index"])?;
    for (id, slot) in rows {
        w.write_record([id, &slot.to_string()])?;
    }
    w.flush().map_err(|e| MetricsError::Io(e.to_string()))?;
    Ok(())
}

pub fn schedule_to_csv_string(s: &ExamSchedule, t: &EnrollmentTable) -> Result<String, MetricsError> {
    let mut buf = Vec::new();
    write_schedule(s, t, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

#[derive(Deserialize)]
struct Row {
    exam_id: String,
    slot_index: usize,
}

/// Read a schedule CSV against the exam index of `t`. Exams absent from the
/// file stay unassigned; ids unknown to `t` are an error.
pub fn read_schedule<R: Read>(t: &EnrollmentTable, input: R) -> Result<ExamSchedule, MetricsError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["exam_id", "slot_index"] {
        return Err(MetricsError::Parse { line: 1, message: "expected header `exam_id,slot_index`".into() });
    }
    let mut s = ExamSchedule::unassigned(t.num_exams());
    for (i, row) in rdr.deserialize::<Row>().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| MetricsError::Parse { line, message: e.to_string() })?;
        let e = t
            .exam_index(&row.exam_id)
            .ok_or_else(|| MetricsError::Parse { line, message: format!("unknown exam `{}`", row.exam_id) })?;
        s.assign(e, row.slot_index);
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_sorted_by_id() {
        let t = EnrollmentTable::from_records([("s1", "b"), ("s1", "a"), ("s2", "c")]);
        let s = ExamSchedule::new(vec![4, 1, 0]);
        let text = schedule_to_csv_string(&s, &t).unwrap();
        assert_eq!(text, "exam_id,slot_index\na,1\nb,4\nc,0\n");
        assert_eq!(read_schedule(&t, text.as_bytes()).unwrap(), s);
    }

    #[test]
    fn unknown_exam_rejected() {
        let t = EnrollmentTable::from_records([("s1", "a")]);
        let err = read_schedule(&t, "exam_id,slot_index\nzz,0\n".as_bytes()).unwrap_err();
        assert!(matches!(err, MetricsError::Parse { line: 2, .. }));
    }

    #[test]
    fn validate_flags_unavailable_unless_draft() {
        let cal = SlotCalendar::with_excluded(2, 3, &[1]).unwrap();
        let s = ExamSchedule::new(vec![1]);
        assert!(matches!(s.validate(&cal, |e| e.to_string()), Err(MetricsError::UnavailableSlot { .. })));
        assert!(s.into_draft().validate(&cal, |e| e.to_string()).is_ok());
    }
}
