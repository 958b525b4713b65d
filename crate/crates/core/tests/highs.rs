#![cfg(feature = "highs")]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use examsched::assign::{solve_max_clique, solve_min_conflict, solve_zero_conflict};
use examsched::data::{build_conflict_graph, compute_stats, EnrollmentTable};
use examsched::mip::{make_backend, BackendKind, OracleBackend, SolveLimits, SolveStatus};

fn random_table(seed: u64, exams: usize, students: usize) -> EnrollmentTable {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let mut t = EnrollmentTable::new();
    for e in 0..exams {
        t.add_exam(&format!("e{e}"));
    }
    for s in 0..students {
        for _ in 0..r.gen_range(1..=3) {
            let e = r.gen_range(0..exams);
            t.insert(&format!("s{s}"), &format!("e{e}"));
        }
    }
    t
}

#[test]
fn highs_agrees_with_oracle_on_small_models() {
    let highs = make_backend(BackendKind::External).unwrap();
    let oracle = OracleBackend::default();
    let lim = SolveLimits::seconds(60.0);
    for seed in 0..6 {
        let st = compute_stats(&random_table(seed, 9, 25));
        let g = build_conflict_graph(&st);
        let a = solve_max_clique(&g, &lim, highs.as_ref()).unwrap();
        let b = solve_max_clique(&g, &lim, &oracle).unwrap();
        assert_eq!(a.status, SolveStatus::Optimal);
        assert_eq!(a.members.len(), b.members.len(), "seed {seed}");
        let a = solve_min_conflict(&st, 3, &lim, highs.as_ref()).unwrap();
        let b = solve_min_conflict(&st, 3, &lim, &oracle).unwrap();
        assert_eq!(a.within_block_conflicts, b.within_block_conflicts, "seed {seed}");
        let clique = clique_size(&st);
        assert!(solve_zero_conflict(&st, clique - 1, &lim, highs.as_ref()).is_err());
    }
}

fn clique_size(st: &examsched::data::CoenrollmentStats) -> usize {
    let g = build_conflict_graph(st);
    solve_max_clique(&g, &SolveLimits::seconds(60.0), &OracleBackend::default()).unwrap().members.len()
}
