//! Seeded synthetic enrollments with departmental clustering.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::EnrollmentTable;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub num_exams: usize,
    pub num_students: usize,
    /// Number of departments; exams are dealt to them round-robin.
    pub clusters: usize,
    /// Exams per student, inclusive range.
    pub min_load: usize,
    pub max_load: usize,
    /// Probability that a pick comes from the student's home department.
    pub p_home: f64,
    /// Popularity falls off as `rank^-skew` within a department.
    pub skew: f64,
    pub seed: u64,
}

impl SynthConfig {
    pub fn semester(num_exams: usize, num_students: usize, seed: u64) -> Self {
        Self {
            num_exams,
            num_students,
            clusters: (num_exams / 25).max(1),
            min_load: 3,
            max_load: 5,
            p_home: 0.7,
            skew: 0.9,
            seed,
        }
    }

    pub fn tiny(num_exams: usize, num_students: usize, seed: u64) -> Self {
        Self { clusters: 2, min_load: 1, max_load: num_exams.min(4), ..Self::semester(num_exams, num_students, seed) }
    }
}

/// Generate a table with exam ids `E0000..` and student ids `S00000..`.
/// Every exam is registered even if nobody picks it.
pub fn generate(cfg: &SynthConfig) -> EnrollmentTable {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut table = EnrollmentTable::new();
    for e in 0..cfg.num_exams {
        table.add_exam(&exam_id(e));
    }
    if cfg.num_exams == 0 {
        return table;
    }
    let clusters = cfg.clusters.clamp(1, cfg.num_exams);
    let members: Vec<Vec<usize>> = (0..clusters).map(|c| (c..cfg.num_exams).step_by(clusters).collect()).collect();
    let weight = |rank: usize| 1.0 / ((rank + 1) as f64).powf(cfg.skew);
    let local: Vec<WeightedIndex<f64>> =
        members.iter().map(|m| WeightedIndex::new((0..m.len()).map(weight)).expect("nonempty cluster")).collect();
    let global = WeightedIndex::new((0..cfg.num_exams).map(|e| weight(e / clusters))).expect("exams exist");
    for s in 0..cfg.num_students {
        let home = rng.gen_range(0..clusters);
        let load = rng.gen_range(cfg.min_load..=cfg.max_load.max(cfg.min_load)).min(cfg.num_exams);
        let mut picked: Vec<usize> = Vec::with_capacity(load);
        let mut tries = 0;
        while picked.len() < load && tries < 50 * load {
            tries += 1;
            let e = if rng.gen_bool(cfg.p_home) {
                members[home][local[home].sample(&mut rng)]
            } else {
                global.sample(&mut rng)
            };
            if !picked.contains(&e) {
                picked.push(e);
            }
        }
        let sid = format!("S{s:05}");
        for e in picked {
            table.insert(&sid, &exam_id(e));
        }
    }
    table
}

fn exam_id(e: usize) -> String {
    format!("E{e:04}")
}
