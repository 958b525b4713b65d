use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use super::DataError;

/// Student to exam incidence table.
///
/// Identifiers are opaque strings. Dense indices are handed out in first-seen
/// order so that every derived structure is reproducible for a given input
/// file.
#[derive(Debug, Clone, Default)]
pub struct EnrollmentTable {
    students: Vec<String>,
    exams: Vec<String>,
    exam_lookup: HashMap<String, usize>,
    student_lookup: HashMap<String, usize>,
    // Sorted, deduplicated exam indices per student.
    rosters: Vec<Vec<usize>>,
}

impl EnrollmentTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Build a table from `(student, exam)` pairs. Duplicates collapse.
    pub fn from_records<I, S, E>(records: I) -> Self
    where
        I: IntoIterator<Item = (S, E)>,
        S: AsRef<str>,
        E: AsRef<str>,
    {
        let mut table = Self::new();
        for (s, e) in records {
            table.insert(s.as_ref(), e.as_ref());
        }
        table
    }

    /// Register an exam even if no student takes it.
    pub fn add_exam(&mut self, exam: &str) -> usize {
        if let Some(&idx) = self.exam_lookup.get(exam) {
            return idx;
        }
        let idx = self.exams.len();
        self.exams.push(exam.to_string());
        self.exam_lookup.insert(exam.to_string(), idx);
        idx
    }

    /// Insert one enrollment record; returns `false` when it was already present.
    pub fn insert(&mut self, student: &str, exam: &str) -> bool {
        let s = match self.student_lookup.get(student) {
            Some(&idx) => idx,
            None => {
                let idx = self.students.len();
                self.students.push(student.to_string());
                self.student_lookup.insert(student.to_string(), idx);
                self.rosters.push(Vec::new());
                idx
            }
        };
        let e = self.add_exam(exam);
        let roster = &mut self.rosters[s];
        match roster.binary_search(&e) {
            Ok(_) => false,
            Err(pos) => {
                roster.insert(pos, e);
                true
            }
        }
    }

    pub fn num_students(&self) -> usize {
        self.students.len()
    }

    pub fn num_exams(&self) -> usize {
        self.exams.len()
    }

    pub fn num_records(&self) -> usize {
        self.rosters.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.num_records() == 0
    }

    pub fn exam_id(&self, idx: usize) -> &str {
        &self.exams[idx]
    }

    pub fn exam_ids(&self) -> &[String] {
        &self.exams
    }

    pub fn student_id(&self, idx: usize) -> &str {
        &self.students[idx]
    }

    pub fn exam_index(&self, id: &str) -> Option<usize> {
        self.exam_lookup.get(id).copied()
    }

    /// Exams taken by student `idx`, sorted by exam index.
    pub fn roster(&self, idx: usize) -> &[usize] {
        &self.rosters[idx]
    }

    pub fn rosters(&self) -> impl Iterator<Item = &[usize]> {
        self.rosters.iter().map(Vec::as_slice)
    }

    /// All `(student, exam)` index pairs.
    pub fn records(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.rosters
            .iter()
            .enumerate()
            .flat_map(|(s, r)| r.iter().map(move |&e| (s, e)))
    }

    /// Number of students per exam.
    pub fn exam_sizes(&self) -> Vec<u32> {
        let mut sizes = vec![0u32; self.exams.len()];
        for r in &self.rosters {
            for &e in r {
                sizes[e] += 1;
            }
        }
        sizes
    }
}

/// Read an enrollment CSV with header `student_id,exam_id`.
pub fn parse_enrollment(path: impl AsRef<Path>) -> Result<EnrollmentTable, DataError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_enrollment_reader(file)
}

pub fn parse_enrollment_reader<R: Read>(reader: R) -> Result<EnrollmentTable, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| DataError::Parse { line: 1, message: e.to_string() })?
        .clone();
    if headers.len() == 0 || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(DataError::Empty);
    }
    if headers.len() != 2 || &headers[0] != "student_id" || &headers[1] != "exam_id" {
        return Err(DataError::Parse {
            line: 1,
            message: format!("expected header `student_id,exam_id`, found `{}`", headers.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut table = EnrollmentTable::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| DataError::Parse { line, message: e.to_string() })?;
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rec.len() != 2 {
            return Err(DataError::Parse {
                line,
                message: format!("expected 2 fields, found {}", rec.len()),
            });
        }
        if rec[0].is_empty() || rec[1].is_empty() {
            return Err(DataError::Parse { line, message: "empty identifier".into() });
        }
        table.insert(&rec[0], &rec[1]);
    }
    if table.is_empty() {
        return Err(DataError::Empty);
    }
    log::info!(
        "enrollment: {} students, {} exams, {} records",
        table.num_students(),
        table.num_exams(),
        table.num_records()
    );
    Ok(table)
}

/// Write the table back out as `student_id,exam_id` CSV.
pub fn write_enrollment<W: std::io::Write>(table: &EnrollmentTable, out: W) -> Result<(), DataError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["student_id", "exam_id"])?;
    for (s, e) in table.records() {
        w.write_record([table.student_id(s), table.exam_id(e)])?;
    }
    w.flush().map_err(|source| DataError::Io { path: "<writer>".into(), source })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_collapse() {
        let csv = "student_id,exam_id\nA,e1\nA,e2\nA,e1\n";
        let t = parse_enrollment_reader(csv.as_bytes()).unwrap();
        assert_eq!(t.num_students(), 1);
        assert_eq!(t.num_exams(), 2);
        assert_eq!(t.num_records(), 2);
    }

    #[test]
    fn three_students_two_exams_each() {
        let csv = "student_id,exam_id\nA,e1\nA,e2\nB,e2\nB,e3\nC,e1\nC,e3\n";
        let t = parse_enrollment_reader(csv.as_bytes()).unwrap();
        assert_eq!(t.num_students(), 3);
        assert_eq!(t.num_records(), 6);
        assert_eq!(t.exam_sizes(), vec![2, 2, 2]);
    }

    #[test]
    fn first_seen_order() {
        let t = EnrollmentTable::from_records([("z", "b"), ("y", "a"), ("z", "a")]);
        assert_eq!(t.exam_ids(), &["b".to_string(), "a".to_string()]);
        assert_eq!(t.roster(0), &[0, 1]);
    }

    #[test]
    fn malformed_row_reports_line() {
        let csv = "student_id,exam_id\nA,e1\nB,e2,extra\n";
        match parse_enrollment_reader(csv.as_bytes()) {
            Err(DataError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_inputs_rejected() {
        assert!(matches!(parse_enrollment_reader("".as_bytes()), Err(DataError::Empty)));
        assert!(matches!(
            parse_enrollment_reader("student_id,exam_id\n".as_bytes()),
            Err(DataError::Empty)
        ));
    }

    #[test]
    fn wrong_header_rejected() {
        let csv = "student,exam\nA,e1\n";
        assert!(matches!(parse_enrollment_reader(csv.as_bytes()), Err(DataError::Parse { line: 1, .. })));
    }
}
