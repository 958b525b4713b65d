//! Per-slot load summaries as CSV and a standalone SVG bar chart.

use std::fmt::Write as _;
use std::io::Write;

use crate::data::{EnrollmentTable, SlotCalendar};
use crate::metrics::ExamSchedule;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotLoad {
    pub slot: usize,
    pub exams: usize,
    pub students: u64,
}

/// One row per calendar slot, empty slots included. `students` counts
/// student-exam pairs.
pub fn slot_loads(s: &ExamSchedule, t: &EnrollmentTable, cal: &SlotCalendar) -> Vec<SlotLoad> {
    let sizes = t.exam_sizes();
    let mut rows: Vec<SlotLoad> = (0..cal.len()).map(|slot| SlotLoad { slot, exams: 0, students: 0 }).collect();
    for (e, &slot) in s.slots().iter().enumerate() {
        if let Some(r) = rows.get_mut(slot) {
            r.exams += 1;
            r.students += u64::from(sizes[e]);
        }
    }
    rows
}

pub fn write_loads_csv<W: Write>(rows: &[SlotLoad], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["slot", "exams", "students"])?;
    for r in rows {
        w.write_record([r.slot.to_string(), r.exams.to_string(), r.students.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

const BAR: f64 = 22.0;
const GAP: f64 = 6.0;
const PANEL: f64 = 160.0;
const LEFT: f64 = 60.0;
const TOP: f64 = 30.0;

/// Two stacked bar panels, exams per slot above and students per slot
/// below, with day separators and slot labels.
pub fn render_svg(rows: &[SlotLoad], cal: &SlotCalendar) -> String {
    let width = LEFT + rows.len() as f64 * (BAR + GAP) + 20.0;
    let height = TOP + 2.0 * (PANEL + 50.0) + 40.0;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="10">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let panels: [(&str, &str, Vec<f64>); 2] = [
        ("Exams per slot", "#4c72b0", rows.iter().map(|r| r.exams as f64).collect()),
        ("Students per slot", "#dd8452", rows.iter().map(|r| r.students as f64).collect()),
    ];
    for (k, (title, colour, values)) in panels.iter().enumerate() {
        let base = TOP + k as f64 * (PANEL + 50.0) + PANEL;
        let max = values.iter().copied().fold(0.0, f64::max).max(1.0);
        let _ = writeln!(svg, r#"<text x="{LEFT}" y="{:.1}" font-size="12" font-weight="bold">{title}</text>"#, base - PANEL - 8.0);
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{max}</text>"#, LEFT - 6.0, base - PANEL + 4.0);
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{base:.1}" text-anchor="end">0</text>"#, LEFT - 6.0);
        let _ = writeln!(
            svg,
            r##"<line x1="{LEFT}" y1="{base:.1}" x2="{:.1}" y2="{base:.1}" stroke="#333"/>"##,
            width - 20.0
        );
        for (i, v) in values.iter().enumerate() {
            let h = v / max * PANEL;
            let x = LEFT + i as f64 * (BAR + GAP);
            let _ = writeln!(
                svg,
                r#"<rect class="bar" x="{x:.1}" y="{:.1}" width="{BAR}" height="{h:.1}" fill="{colour}"><title>slot {i}: {v}</title></rect>"#,
                base - h
            );
            if i > 0 && cal.day(i) != cal.day(i - 1) {
                let lx = x - GAP / 2.0;
                let _ = writeln!(
                    svg,
                    r##"<line x1="{lx:.1}" y1="{:.1}" x2="{lx:.1}" y2="{base:.1}" stroke="#bbb" stroke-dasharray="3,3"/>"##,
                    base - PANEL
                );
            }
            if k == 1 {
                let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{i}</text>"#, x + BAR / 2.0, base + 14.0);
            }
        }
    }
    svg.push_str("</svg>\n");
    svg
}
