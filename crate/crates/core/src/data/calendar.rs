use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::DataError;

pub const DEFAULT_SLOTS_PER_DAY: usize = 3;
const DEFAULT_LABELS: [&str; 3] = ["9am", "2pm", "7pm"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DayConfig {
    pub date: String,
    pub slots: Vec<String>,
}

/// Calendar input as read from JSON: `{"days": [{"date", "slots": [...]}], "excluded": [...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CalendarConfig {
    pub days: Vec<DayConfig>,
    #[serde(default)]
    pub excluded: Vec<usize>,
    #[serde(default = "default_slots_per_day")]
    pub slots_per_day: usize,
}

fn default_slots_per_day() -> usize {
    DEFAULT_SLOTS_PER_DAY
}

impl CalendarConfig {
    /// `days` full days of `per_day` slots, labelled 9am/2pm/7pm when three per day.
    pub fn uniform(days: usize, per_day: usize) -> Self {
        let days = (0..days)
            .map(|d| DayConfig {
                date: format!("day{}", d + 1),
                slots: (0..per_day)
                    .map(|s| {
                        if per_day == DEFAULT_LABELS.len() {
                            DEFAULT_LABELS[s].to_string()
                        } else {
                            format!("p{}", s + 1)
                        }
                    })
                    .collect(),
            })
            .collect();
        Self { days, excluded: Vec::new(), slots_per_day: per_day }
    }

    pub fn with_excluded(mut self, excluded: impl IntoIterator<Item = usize>) -> Self {
        self.excluded = excluded.into_iter().collect();
        self
    }

    pub fn from_json_str(s: &str) -> Result<Self, DataError> {
        serde_json::from_str(s).map_err(|e| DataError::Calendar(format!("invalid calendar JSON: {e}")))
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, DataError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| DataError::Io { path: path.display().to_string(), source })?;
        Self::from_json_str(&text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Slot {
    pub day: usize,
    pub label: String,
    pub available: bool,
}

/// Ordered exam slots grouped into days. Slot indices advance in real time
/// across excluded slots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SlotCalendar {
    slots: Vec<Slot>,
    slots_per_day: usize,
    // position of each slot within its day
    positions: Vec<usize>,
    day_len: Vec<usize>,
}

pub fn build_calendar(cfg: &CalendarConfig) -> Result<SlotCalendar, DataError> {
    if cfg.slots_per_day == 0 {
        return Err(DataError::Calendar("slots_per_day must be positive".into()));
    }
    if cfg.days.is_empty() {
        return Err(DataError::Calendar("calendar has no days".into()));
    }
    let mut slots = Vec::new();
    let mut positions = Vec::new();
    let mut day_len = Vec::new();
    for (d, day) in cfg.days.iter().enumerate() {
        if day.slots.is_empty() {
            return Err(DataError::Calendar(format!("day {} ({}) has no slots", d, day.date)));
        }
        if day.slots.len() > cfg.slots_per_day {
            return Err(DataError::Calendar(format!(
                "day {} ({}) has {} slots, more than slots_per_day = {}",
                d,
                day.date,
                day.slots.len(),
                cfg.slots_per_day
            )));
        }
        let mut seen = HashSet::new();
        for (p, label) in day.slots.iter().enumerate() {
            if !seen.insert(label.as_str()) {
                return Err(DataError::Calendar(format!("duplicate slot `{label}` on {}", day.date)));
            }
            slots.push(Slot { day: d, label: format!("{} {}", day.date, label), available: true });
            positions.push(p);
        }
        day_len.push(day.slots.len());
    }
    let mut seen = HashSet::new();
    for &x in &cfg.excluded {
        if !seen.insert(x) {
            return Err(DataError::Calendar(format!("duplicate excluded slot index {x}")));
        }
        if x >= slots.len() {
            return Err(DataError::Calendar(format!(
                "excluded slot index {x} out of range (calendar has {} slots)",
                slots.len()
            )));
        }
        slots[x].available = false;
    }
    if slots.iter().all(|s| !s.available) {
        return Err(DataError::Calendar("no available slots".into()));
    }
    Ok(SlotCalendar { slots, slots_per_day: cfg.slots_per_day, positions, day_len })
}

impl SlotCalendar {
    /// Shorthand for `build_calendar(&CalendarConfig::uniform(days, per_day))`.
    pub fn uniform(days: usize, per_day: usize) -> Self {
        build_calendar(&CalendarConfig::uniform(days, per_day)).expect("uniform calendar is valid")
    }

    pub fn with_excluded(days: usize, per_day: usize, excluded: &[usize]) -> Result<Self, DataError> {
        build_calendar(&CalendarConfig::uniform(days, per_day).with_excluded(excluded.iter().copied()))
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn slots_per_day(&self) -> usize {
        self.slots_per_day
    }

    pub fn num_days(&self) -> usize {
        self.day_len.len()
    }

    pub fn day(&self, s: usize) -> usize {
        self.slots[s].day
    }

    pub fn label(&self, s: usize) -> &str {
        &self.slots[s].label
    }

    pub fn is_available(&self, s: usize) -> bool {
        self.slots.get(s).is_some_and(|x| x.available)
    }

    pub fn available_slots(&self) -> Vec<usize> {
        (0..self.len()).filter(|&s| self.slots[s].available).collect()
    }

    pub fn num_available(&self) -> usize {
        self.slots.iter().filter(|s| s.available).count()
    }

    pub fn same_day(&self, a: usize, b: usize) -> bool {
        self.slots[a].day == self.slots[b].day
    }

    pub fn is_first_of_day(&self, s: usize) -> bool {
        self.positions[s] == 0
    }

    pub fn is_last_of_day(&self, s: usize) -> bool {
        self.positions[s] + 1 == self.day_len[self.slots[s].day]
    }

    /// `(s, s+1)` runs from the last slot of one day to the first slot of the next.
    pub fn is_evening_morning(&self, s: usize) -> bool {
        s + 1 < self.len()
            && self.is_last_of_day(s)
            && self.is_first_of_day(s + 1)
            && self.day(s + 1) == self.day(s) + 1
    }

    /// Copy of this calendar with a different availability pattern.
    pub fn restricted_to(&self, available: &[usize]) -> Result<Self, DataError> {
        let mut out = self.clone();
        for s in out.slots.iter_mut() {
            s.available = false;
        }
        for &s in available {
            if s >= out.len() {
                return Err(DataError::Calendar(format!("slot {s} out of range")));
            }
            out.slots[s].available = true;
        }
        if out.slots.iter().all(|s| !s.available) {
            return Err(DataError::Calendar("no available slots".into()));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eight_days_no_exclusions() {
        let c = SlotCalendar::uniform(8, 3);
        assert_eq!(c.len(), 24);
        assert_eq!(c.num_available(), 24);
    }

    #[test]
    fn excluded_three_and_four() {
        let c = SlotCalendar::with_excluded(8, 3, &[3, 4]).unwrap();
        assert_eq!(c.len(), 24);
        assert_eq!(c.num_available(), 22);
        assert!(!c.is_available(3) && !c.is_available(4));
    }

    #[test]
    fn partial_last_day() {
        let mut cfg = CalendarConfig::uniform(9, 3);
        cfg.days[8].slots.truncate(1);
        let c = build_calendar(&cfg).unwrap();
        assert_eq!(c.len(), 25);
        assert_eq!(build_calendar(&CalendarConfig::uniform(9, 3)).unwrap().len(), 27);
        assert!(c.is_evening_morning(23));
        assert!(c.is_last_of_day(24));
    }

    #[test]
    fn exclusion_errors() {
        assert!(SlotCalendar::with_excluded(2, 3, &[6]).is_err());
        assert!(SlotCalendar::with_excluded(2, 3, &[1, 1]).is_err());
        assert!(SlotCalendar::with_excluded(1, 3, &[0, 1, 2]).is_err());
    }

    #[test]
    fn duplicate_slot_label_rejected() {
        let cfg = CalendarConfig {
            days: vec![DayConfig { date: "d".into(), slots: vec!["9am".into(), "9am".into()] }],
            excluded: vec![],
            slots_per_day: 3,
        };
        assert!(build_calendar(&cfg).is_err());
    }

    #[test]
    fn json_roundtrip_defaults() {
        let cfg = CalendarConfig::from_json_str(
            r#"{"days":[{"date":"Dec 9","slots":["9am","2pm","7pm"]},{"date":"Dec 10","slots":["9am"]}],"excluded":[2]}"#,
        )
        .unwrap();
        let c = build_calendar(&cfg).unwrap();
        assert_eq!(c.len(), 4);
        assert_eq!(c.slots_per_day(), 3);
        assert_eq!(c.label(3), "Dec 10 9am");
        assert!(c.is_evening_morning(2));
        assert!(!c.is_evening_morning(1));
    }
}
