//! Acceptance criteria 1-7. Each criterion prints one PASS/FAIL line; the
//! binary exits nonzero if any criterion that can run here fails.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use examsched::assign::{solve_max_clique, solve_min_conflict};
use examsched::data::{
    build_calendar, build_conflict_graph, compute_stats, CalendarConfig, DayConfig, EnrollmentTable, SlotCalendar,
};
use examsched::layer_cake::{hybrid_pipeline, HybridConfig};
use examsched::local_search::{post_process, LocalSearchConfig};
use examsched::metrics::{evaluate, schedule_to_csv_string, ExamSchedule, MetricWeights, MetricsReport};
use examsched::mip::{verify_assignment, OracleBackend, SolveLimits};
use examsched::nottingham::{self, NottinghamConfig, NottinghamInstance, Sidecar, Variant};
use examsched::pipeline::{run_pipeline, Method, PipelineConfig, StageLimits};
use examsched::sequencing::{
    sequencing_model, solve_sequencing, windows_from_days, SeqWeights, SequencingInstance, ThreeInFourMode,
};
use examsched::synth::{generate, SynthConfig};

enum Verdict {
    Pass(String),
    Fail(String),
    /// Cannot run in this environment; reported as FAIL but not fatal.
    Unavailable(String),
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Calendar whose days hold the given slot counts.
fn ragged_calendar(day_lens: &[usize]) -> SlotCalendar {
    let labels = ["am", "pm", "eve"];
    let cfg = CalendarConfig {
        days: day_lens
            .iter()
            .enumerate()
            .map(|(d, &n)| DayConfig { date: format!("d{d}"), slots: labels[..n].iter().map(|s| s.to_string()).collect() })
            .collect(),
        excluded: Vec::new(),
        slots_per_day: 3,
    };
    build_calendar(&cfg).unwrap()
}

/// Day index and within-day position of every slot, from the day lengths.
fn grid(day_lens: &[usize]) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for (d, &n) in day_lens.iter().enumerate() {
        for p in 0..n {
            out.push((d, p, n));
        }
    }
    out
}

fn random_table(r: &mut ChaCha8Rng, students: usize, exams: usize, max_load: usize) -> EnrollmentTable {
    let mut t = EnrollmentTable::new();
    for e in 0..exams {
        t.add_exam(&format!("x{e}"));
    }
    let ids: Vec<usize> = (0..exams).collect();
    for s in 0..students {
        let load = r.gen_range(1..=max_load.min(exams));
        for &e in ids.choose_multiple(r, load) {
            t.insert(&format!("s{s}"), &format!("x{e}"));
        }
    }
    t
}

// ---------------------------------------------------------------- criterion 1

/// Brute-force window scanner over each student's list of exam slots.
fn scan_metrics(t: &EnrollmentTable, slots: &[usize], day_lens: &[usize], w: &MetricWeights) -> MetricsReport {
    let g = grid(day_lens);
    let n = g.len();
    let mut r = MetricsReport::default();
    for roster in t.rosters() {
        let mine: Vec<usize> = roster.iter().map(|&e| slots[e]).collect();
        for a in 0..mine.len() {
            for b in a + 1..mine.len() {
                if mine[a] == mine[b] {
                    r.conflicts += 1;
                }
            }
        }
        let has = |s: usize| mine.contains(&s);
        let mut used = std::collections::HashSet::new();
        for s in 0..n {
            if s + 2 < n && has(s) && has(s + 1) && has(s + 2) {
                if g[s].0 == g[s + 2].0 {
                    r.triples_same_day += 1;
                } else {
                    r.triples_24hr += 1;
                }
                used.insert((s, s + 1));
                used.insert((s + 1, s + 2));
                used.insert((s, s + 2));
            }
        }
        for a in 0..n {
            for b in a + 1..n.min(a + 4) {
                if !(has(a) && has(b)) {
                    continue;
                }
                match b - a {
                    1 if !used.contains(&(a, b)) => {
                        let evening = g[a].1 + 1 == g[a].2 && g[b].1 == 0 && g[b].0 == g[a].0 + 1;
                        if evening {
                            r.b2b_evening_morning += 1;
                        } else {
                            r.b2b_other += 1;
                        }
                    }
                    2 if !used.contains(&(a, b)) => r.two_in_24 += 1,
                    3 if has(a + 1) ^ has(a + 2) => r.three_in_4 += 1,
                    _ => {}
                }
            }
        }
    }
    r.triples = r.triples_same_day + r.triples_24hr;
    r.b2b = r.b2b_evening_morning + r.b2b_other;
    r.reschedules = r.conflicts + r.triples;
    r.weighted_score = w.conflict_w * r.conflicts as f64
        + w.triple_w * r.triples as f64
        + w.b2b_w * (w.gamma1 * r.b2b_evening_morning as f64 + w.gamma2 * r.b2b_other as f64)
        + w.two24_w * r.two_in_24 as f64
        + w.three4_w * r.three_in_4 as f64;
    r
}

fn criterion1() -> Verdict {
    let start = Instant::now();
    let mut r = rng(1);
    for case in 0..200 {
        let days = r.gen_range(1..=4);
        let day_lens: Vec<usize> = (0..days).map(|_| r.gen_range(1..=3)).collect();
        let n: usize = day_lens.iter().sum();
        let cal = ragged_calendar(&day_lens);
        let (ns, ne) = (r.gen_range(1..=50), r.gen_range(1..=12));
        let t = random_table(&mut r, ns, ne, 6);
        let slots: Vec<usize> = (0..t.num_exams()).map(|_| r.gen_range(0..n)).collect();
        let w = MetricWeights {
            gamma1: r.gen_range(0..4) as f64,
            gamma2: r.gen_range(0..4) as f64,
            ..MetricWeights::default()
        };
        let got = evaluate(&ExamSchedule::new(slots.clone()), &t, &cal, &w).unwrap();
        let want = scan_metrics(&t, &slots, &day_lens, &w);
        if got != want {
            return Verdict::Fail(format!("case {case}: evaluate {got:?} vs scanner {want:?}"));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= 30.0 {
        return Verdict::Fail(format!("200 instances matched but took {secs:.1}s"));
    }
    Verdict::Pass(format!("200/200 instances match on every field ({secs:.2}s)"))
}

// ---------------------------------------------------------------- criterion 2

fn enumerate_min_conflict(n: usize, pairs: &[(usize, usize, u32)], k: usize) -> u64 {
    let mut blocks = vec![0usize; n];
    let mut best = u64::MAX;
    loop {
        let cost: u64 = pairs.iter().filter(|&&(i, j, _)| blocks[i] == blocks[j]).map(|&(_, _, c)| u64::from(c)).sum();
        best = best.min(cost);
        let mut p = 0;
        while p < n {
            blocks[p] += 1;
            if blocks[p] < k {
                break;
            }
            blocks[p] = 0;
            p += 1;
        }
        if p == n {
            return best;
        }
    }
}

fn enumerate_clique(n: usize, adj: &[Vec<bool>]) -> usize {
    let mut best = 0;
    for mask in 0u32..(1 << n) {
        let members: Vec<usize> = (0..n).filter(|&v| mask & (1 << v) != 0).collect();
        if members.len() > best && members.iter().all(|&a| members.iter().all(|&b| a == b || adj[a][b])) {
            best = members.len();
        }
    }
    best
}

fn criterion2() -> Verdict {
    let start = Instant::now();
    let be = OracleBackend::default();
    let limits = SolveLimits::seconds(60.0);
    let mut r = rng(2);
    for case in 0..50 {
        let n = r.gen_range(2..=10);
        let ns = r.gen_range(3..=20);
        let t = random_table(&mut r, ns, n, 3);
        let st = compute_stats(&t);
        let pairs: Vec<(usize, usize, u32)> = st.pairs().collect();
        for k in 2..=4 {
            let got = match solve_min_conflict(&st, k, &limits, &be) {
                Ok(ba) => ba.within_block_conflicts,
                Err(e) => return Verdict::Fail(format!("case {case} k={k}: {e}")),
            };
            let want = enumerate_min_conflict(n, &pairs, k);
            if got != want {
                return Verdict::Fail(format!("case {case} k={k}: solver {got}, enumeration {want}"));
            }
        }
        let mut adj = vec![vec![false; n]; n];
        for &(i, j, _) in &pairs {
            adj[i][j] = true;
            adj[j][i] = true;
        }
        let g = build_conflict_graph(&st);
        let got = match solve_max_clique(&g, &limits, &be) {
            Ok(c) => c.members.len(),
            Err(e) => return Verdict::Fail(format!("case {case} clique: {e}")),
        };
        let want = enumerate_clique(n, &adj);
        if got != want {
            return Verdict::Fail(format!("case {case}: clique {got}, enumeration {want}"));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= 300.0 {
        return Verdict::Fail(format!("all objectives matched but took {secs:.1}s"));
    }
    Verdict::Pass(format!("50/50 instances, k in 2..=4 and max clique, equal enumeration ({secs:.1}s)"))
}

// ---------------------------------------------------------------- criterion 3

struct SeqOracle {
    k: usize,
    p: Vec<Vec<u64>>,
    t: BTreeMap<[usize; 3], u64>,
    grid: Vec<(usize, usize, usize)>,
    w: SeqWeights,
    mode: ThreeInFourMode,
}

impl SeqOracle {
    fn pair(&self, a: usize, b: usize) -> u64 {
        if a < self.k && b < self.k {
            self.p[a][b]
        } else {
            0
        }
    }

    fn triple(&self, a: usize, b: usize, c: usize) -> u64 {
        let mut key = [a, b, c];
        key.sort_unstable();
        self.t.get(&key).copied().unwrap_or(0)
    }

    fn is_triple_window(&self, s: usize) -> bool {
        s + 2 < self.grid.len() && self.grid[s + 2].0 <= self.grid[s].0 + 1
    }

    /// Non-cyclic recount of the sequencing objective for a slot order.
    fn cost(&self, at: &[usize]) -> f64 {
        let n = at.len();
        let g = &self.grid;
        let mut total = 0.0;
        for s in 0..n.saturating_sub(1) {
            let evening = g[s].1 + 1 == g[s].2 && g[s + 1].1 == 0;
            let gamma = if evening { self.w.gamma1 } else { self.w.gamma2 };
            total += gamma * self.pair(at[s], at[s + 1]) as f64;
        }
        for s in 0..n {
            if self.is_triple_window(s) {
                let weight = if g[s].0 == g[s + 2].0 { self.w.alpha } else { self.w.beta };
                total += weight * self.triple(at[s], at[s + 1], at[s + 2]) as f64;
            }
        }
        for s in 0..n.saturating_sub(3) {
            if self.is_triple_window(s) && self.is_triple_window(s + 1) {
                let (i, j, l, m) = (at[s], at[s + 1], at[s + 2], at[s + 3]);
                let t = match self.mode {
                    ThreeInFourMode::Corrected => self.triple(i, j, m) + self.triple(i, l, m),
                    ThreeInFourMode::AsPrinted => self.triple(i, j, l) + self.triple(i, l, m),
                };
                total += self.w.delta * t as f64;
            }
        }
        total
    }

    fn best(&self, n: usize) -> f64 {
        fn rec(o: &SeqOracle, at: &mut Vec<usize>, used: &mut Vec<bool>, best: &mut f64) {
            if at.len() == used.len() {
                *best = best.min(o.cost(at));
                return;
            }
            for b in 0..used.len() {
                if !used[b] {
                    used[b] = true;
                    at.push(b);
                    rec(o, at, used, best);
                    at.pop();
                    used[b] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        rec(self, &mut Vec::new(), &mut vec![false; n], &mut best);
        best
    }
}

fn criterion3() -> Verdict {
    let start = Instant::now();
    let be = OracleBackend::default();
    let mut r = rng(3);
    let mut statuses = BTreeMap::new();
    for case in 0..30 {
        let k = r.gen_range(2..=6);
        let n: usize = (k + r.gen_range(0..=2)).max(3);
        let day_lens: Vec<usize> = (0..n.div_ceil(3)).map(|d| (n - 3 * d).min(3)).collect();
        let cal = ragged_calendar(&day_lens);
        let mut inst = SequencingInstance::empty(n, k, windows_from_days(&cal));
        inst.weights = SeqWeights {
            alpha: r.gen_range(0..12) as f64,
            beta: r.gen_range(0..12) as f64,
            gamma1: r.gen_range(0..3) as f64,
            gamma2: r.gen_range(0..3) as f64,
            delta: r.gen_range(0..6) as f64,
        };
        inst.mode = if r.gen_bool(0.5) { ThreeInFourMode::Corrected } else { ThreeInFourMode::AsPrinted };
        let mut oracle = SeqOracle {
            k,
            p: vec![vec![0; k]; k],
            t: BTreeMap::new(),
            grid: grid(&day_lens),
            w: inst.weights,
            mode: inst.mode,
        };
        for i in 0..k {
            for j in i + 1..k {
                let c = if r.gen_bool(0.7) { r.gen_range(0..20) } else { 0 };
                inst.set_pair(i, j, c);
                oracle.p[i][j] = c;
                oracle.p[j][i] = c;
                for l in j + 1..k {
                    if r.gen_bool(0.4) {
                        let c = r.gen_range(1..6);
                        inst.set_triple(i, j, l, c);
                        oracle.t.insert([i, j, l], c);
                    }
                }
            }
        }
        let seq = match solve_sequencing(&inst, None, &SolveLimits::seconds(60.0), &be) {
            Ok(s) => s,
            Err(e) => return Verdict::Fail(format!("case {case}: {e}")),
        };
        *statuses.entry(format!("{:?}", seq.status)).or_insert(0) += 1;
        let recount = oracle.cost(&seq.block_at_slot);
        let want = oracle.best(n);
        if (seq.objective - want).abs() > 1e-9 || (recount - want).abs() > 1e-9 {
            return Verdict::Fail(format!(
                "case {case} (k={k}, {n} slots): solver {} (recount {recount}), permutation minimum {want}",
                seq.objective
            ));
        }
        let sm = sequencing_model(&inst).unwrap();
        let a = sm.encode(&seq.block_at_slot);
        if !verify_assignment(&sm.model, &a).unwrap().feasible || sm.decode(&a) != seq.block_at_slot {
            return Verdict::Fail(format!("case {case}: solution violates the model"));
        }
        let x = |i: usize, j: usize, l: usize, s: usize| sm.x(i, j, l, s).is_some_and(|v| a[v.index()]) as u32;
        for j in 0..n {
            for l in 0..n {
                for s in 0..n {
                    let lhs: u32 = (0..n).map(|i| x(i, j, l, s)).sum();
                    let rhs: u32 = (0..n).map(|m| x(j, l, m, (s + 1) % n)).sum();
                    if lhs != rhs {
                        return Verdict::Fail(format!("case {case}: cyclic consistency fails at ({j},{l},{s})"));
                    }
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= 600.0 {
        return Verdict::Fail(format!("all matched but took {secs:.1}s"));
    }
    Verdict::Pass(format!("30/30 equal the permutation minimum, cyclic consistency holds; statuses {statuses:?} ({secs:.1}s)"))
}

// ---------------------------------------------------------------- criterion 4

/// Get_Score recomputed from ordered exam pairs.
fn get_score(pairs: &[(usize, usize, u32)], slots: &[usize], w: &MetricWeights) -> f64 {
    let mut total = 0.0;
    for &(i, j, c) in pairs {
        let c = f64::from(c);
        total += 2.0
            * match slots[i].abs_diff(slots[j]) {
                0 => w.lambda1 * c,
                1 => c,
                2 => w.lambda2 * c,
                _ => 0.0,
            };
    }
    total
}

fn conflicts(pairs: &[(usize, usize, u32)], slots: &[usize]) -> u64 {
    pairs.iter().filter(|&&(i, j, _)| slots[i] == slots[j]).map(|&(_, _, c)| u64::from(c)).sum()
}

fn criterion4() -> Verdict {
    let start = Instant::now();
    let be = OracleBackend::default();
    let w = MetricWeights::default();
    let mut r = rng(4);
    for case in 0..100 {
        let n_slots = r.gen_range(4..=15);
        let (ns, ne) = (r.gen_range(10..=150), r.gen_range(4..=40));
        let t = random_table(&mut r, ns, ne, 5);
        let st = compute_stats(&t);
        let pairs: Vec<_> = st.pairs().collect();
        let base: Vec<usize> = (0..t.num_exams()).map(|_| r.gen_range(0..n_slots)).collect();
        let cfg = LocalSearchConfig {
            time_limit: Duration::from_secs(2),
            ip_limits: SolveLimits::seconds(10.0).with_nodes(300),
            ..LocalSearchConfig::with_window(r.gen_range(3..=12))
        };
        let slots: Vec<usize> = (0..n_slots).collect();
        let res = match post_process(&st, &ExamSchedule::new(base.clone()), &slots, &cfg, &be) {
            Ok(res) => res,
            Err(e) => return Verdict::Fail(format!("case {case}: {e}")),
        };
        let out = res.schedule.slots();
        let (before, after) = (get_score(&pairs, &base, &w), get_score(&pairs, out, &w));
        if after > before + 1e-9 {
            return Verdict::Fail(format!("case {case}: score rose {before} -> {after}"));
        }
        if conflicts(&pairs, out) > conflicts(&pairs, &base) {
            return Verdict::Fail(format!("case {case}: conflicts rose"));
        }
        if out.iter().any(|&s| s >= n_slots) {
            return Verdict::Fail(format!("case {case}: exam left unplaced"));
        }
    }
    let mut hits = 0;
    for _ in 0..20 {
        let n_exams = r.gen_range(2..=4);
        let n_slots = r.gen_range(3..=6);
        let ns = r.gen_range(2..=12);
        let t = random_table(&mut r, ns, n_exams, n_exams);
        let st = compute_stats(&t);
        let pairs: Vec<_> = st.pairs().collect();
        let mut best = f64::INFINITY;
        let mut cur = vec![0usize; n_exams];
        'all: loop {
            best = best.min(get_score(&pairs, &cur, &w));
            for p in 0..n_exams {
                cur[p] += 1;
                if cur[p] < n_slots {
                    continue 'all;
                }
                cur[p] = 0;
            }
            break;
        }
        let base: Vec<usize> = (0..n_exams).map(|_| r.gen_range(0..n_slots)).collect();
        let slots: Vec<usize> = (0..n_slots).collect();
        let cfg = LocalSearchConfig { time_limit: Duration::from_secs(10), ..LocalSearchConfig::default() };
        let res = post_process(&st, &ExamSchedule::new(base), &slots, &cfg, &be).unwrap();
        if (get_score(&pairs, res.schedule.slots(), &w) - best).abs() < 1e-9 {
            hits += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let line = format!("100/100 monotone with no new conflicts; tiny optimum reached in {hits}/20 ({secs:.1}s)");
    if hits * 5 >= 20 * 4 {
        Verdict::Pass(line)
    } else {
        Verdict::Fail(line)
    }
}

// ---------------------------------------------------------------- criterion 5

fn criterion5() -> Verdict {
    let start = Instant::now();
    let be = OracleBackend::default();
    let cal = SlotCalendar::uniform(8, 3);
    let limits = SolveLimits::seconds(60.0).with_nodes(400);
    let mut cfg = HybridConfig::default();
    cfg.layer_cake.layer_limits = limits.clone();
    cfg.sequencing_limits = limits.clone();
    cfg.local_search.ip_limits = limits;
    cfg.local_search.time_limit = Duration::from_secs(15);
    let mut r = rng(5);
    let mut worst = Duration::ZERO;
    let mut layers = 0;
    for case in 0..50 {
        let t0 = Instant::now();
        let ne = r.gen_range(300..=600);
        let ns = r.gen_range(5_000..=15_000);
        let t = generate(&SynthConfig::semester(ne, ns, 500 + case));
        let st = compute_stats(&t);
        let res = match hybrid_pipeline(&st, &cal, &cfg, &be) {
            Ok(res) => res,
            Err(e) => return Verdict::Fail(format!("case {case}: {e}")),
        };
        for (what, s) in [("layer-cake", &res.layer_cake.schedule), ("hybrid", res.schedule())] {
            if s.num_exams() != ne || s.slots().iter().any(|&x| x >= cal.len()) {
                return Verdict::Fail(format!("case {case}: {what} schedule does not place every exam once"));
            }
        }
        for l in &res.layer_cake.layers {
            if l.objective > l.warm_objective + 1e-6 {
                return Verdict::Fail(format!("case {case} layer {}: {} > warm start {}", l.index, l.objective, l.warm_objective));
            }
        }
        layers += res.layer_cake.layers.len();
        let w = MetricWeights::default();
        let lc = evaluate(&res.layer_cake.schedule, &t, &cal, &w).unwrap().conflicts;
        let hy = evaluate(res.schedule(), &t, &cal, &w).unwrap().conflicts;
        if hy > lc {
            return Verdict::Fail(format!("case {case}: hybrid {hy} conflicts, layer-cake {lc}"));
        }
        worst = worst.max(t0.elapsed());
        if t0.elapsed() > Duration::from_secs(1800) {
            return Verdict::Fail(format!("case {case} exceeded 30 min"));
        }
    }
    Verdict::Pass(format!(
        "50/50 complete, {layers} layers all at or below warm start, hybrid conflicts <= layer-cake; slowest {:.1}s, total {:.0}s",
        worst.as_secs_f64(),
        start.elapsed().as_secs_f64()
    ))
}

// ---------------------------------------------------------------- criterion 6

fn criterion6() -> Verdict {
    let Some(dir) = std::env::var_os("NOTTINGHAM_DIR").map(PathBuf::from) else {
        return Verdict::Unavailable("NOTTINGHAM_DIR not set; the Nottingham instance is not available here".into());
    };
    let (crs, stu) = (dir.join("nott.crs"), dir.join("nott.stu"));
    let data = match nottingham::parse_toronto(&crs, &stu) {
        Ok(d) => d,
        Err(e) => return Verdict::Unavailable(format!("cannot read {}: {e}", dir.display())),
    };
    let side = match dir.join("sidecar.json") {
        p if p.exists() => Sidecar::from_path(&p).unwrap(),
        _ => Sidecar::default(),
    };
    let be = OracleBackend::default();
    let cfg = NottinghamConfig { post_time: Duration::from_secs(1800), ..NottinghamConfig::default() };
    let mut notes = Vec::new();
    for slots in [23usize, 26] {
        let cal = ragged_calendar(&(0..slots.div_ceil(3)).map(|d| (slots - 3 * d).min(3)).collect::<Vec<_>>());
        let inst = NottinghamInstance::new(&data.table, &side, cal, Variant::A, Default::default()).unwrap();
        let res = match nottingham::adapt_and_solve(&inst, &cfg, &be) {
            Ok(res) => res,
            Err(e) => return Verdict::Fail(format!("{slots} slots: {e}")),
        };
        let st = compute_stats(&data.table);
        let s = res.schedule.slots();
        let clash = st.pairs().any(|(i, j, _)| s[i] == s[j]);
        let mut load = vec![0u64; slots];
        for (e, &x) in s.iter().enumerate() {
            load[x] += u64::from(st.size(e));
        }
        let max_load = load.iter().copied().max().unwrap_or(0);
        if clash || max_load > u64::from(inst.capacity) {
            return Verdict::Fail(format!("{slots} slots: clash={clash}, max load {max_load}"));
        }
        if slots == 26 && res.objective > 53.0 {
            return Verdict::Fail(format!("26 slots feasible but variant-a objective {} > 53", res.objective));
        }
        notes.push(format!("{slots} slots objective {}", res.objective));
    }
    Verdict::Pass(notes.join(", "))
}

// ---------------------------------------------------------------- criterion 7

fn criterion7() -> Verdict {
    let t = generate(&SynthConfig::semester(80, 1200, 7));
    // largest clique is 22, so 24 slots admit a zero-conflict assignment
    let cal = SlotCalendar::uniform(8, 3);
    let be = OracleBackend::default();
    let lim = SolveLimits::seconds(30.0).with_nodes(400);
    for method in [Method::Gts, Method::Gtsp, Method::ZeroGtsp, Method::Layercake, Method::Hybrid] {
        let cfg = PipelineConfig {
            method,
            layer_n2: 1500,
            seed: 42,
            limits: StageLimits {
                assign: lim.clone(),
                sequence: lim.clone(),
                post_total: Duration::from_secs(3),
                post_window: lim.clone(),
                layer: lim.clone(),
            },
            ..PipelineConfig::default()
        };
        let mut outputs = Vec::new();
        for _ in 0..2 {
            match run_pipeline(&cfg, &t, &cal, &be) {
                Ok(o) => outputs.push(schedule_to_csv_string(&o.schedule, &t).unwrap()),
                Err(e) => return Verdict::Fail(format!("{method}: {e}")),
            }
        }
        if outputs[0] != outputs[1] {
            return Verdict::Fail(format!("{method}: schedule CSVs differ between runs"));
        }
    }
    Verdict::Pass("gts, gtsp, zero-gtsp, layercake, hybrid each byte-identical over two runs".into())
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 7] = [
        ("metrics match brute-force scanner", criterion1),
        ("assignment and clique match enumeration", criterion2),
        ("sequencing matches permutation minimum", criterion3),
        ("post-processing contract", criterion4),
        ("layer-cake completeness", criterion5),
        ("nottingham feasibility", criterion6),
        ("determinism", criterion7),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut fatal = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        if only.is_some_and(|o| o != i + 1) {
            continue;
        }
        match f() {
            Verdict::Pass(msg) => println!("PASS criterion {}: {name}: {msg}", i + 1),
            Verdict::Fail(msg) => {
                println!("FAIL criterion {}: {name}: {msg}", i + 1);
                fatal += 1;
            }
            Verdict::Unavailable(msg) => println!("FAIL criterion {}: {name}: not run: {msg}", i + 1),
        }
    }
    if fatal > 0 {
        std::process::exit(1);
    }
}
