//! Capacitated benchmark adapter: Toronto-format input, coincident-exam
//! merging, hard zero-conflict and capacity rows, soft allowed-slot,
//! precedence and non-overlap constraints, and the same-day / overnight
//! back-to-back objectives.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, BufReader, Read};
use std::path::Path;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{compute_stats, CoenrollmentStats, EnrollmentTable, SlotCalendar};
use crate::metrics::ExamSchedule;
use crate::mip::{self, Backend, MipError, MipModel, Sense, SolveLimits, SolveStatus, VarId};

pub const DEFAULT_CAPACITY: u32 = 1550;

#[derive(Debug, Error)]
pub enum NottinghamError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{file} line {line}: {message}")]
    Parse { file: &'static str, line: usize, message: String },
    #[error("sidecar: {0}")]
    Sidecar(String),
    #[error("precedence constraints contain a cycle through exam `{0}`")]
    Cyclic(String),
    #[error("no schedule with zero conflicts and capacity {capacity} found in {slots} slots")]
    Infeasible { slots: usize, capacity: u32 },
    #[error(transparent)]
    Mip(#[from] MipError),
}

/// Parsed `.crs`/`.stu` pair.
#[derive(Debug, Clone)]
pub struct TorontoData {
    pub table: EnrollmentTable,
    /// Declared enrollment per exam, in `.crs` order.
    pub declared: Vec<(String, u32)>,
    /// `(exam, declared, derived)` where the two disagree.
    pub mismatches: Vec<(String, u32, u32)>,
}

pub fn parse_toronto(crs: impl AsRef<Path>, stu: impl AsRef<Path>) -> Result<TorontoData, NottinghamError> {
    let open = |p: &Path| {
        std::fs::File::open(p).map_err(|source| NottinghamError::Io { path: p.display().to_string(), source })
    };
    parse_toronto_readers(open(crs.as_ref())?, open(stu.as_ref())?)
}

/// `.crs`: `exam_id enrollment` per line. `.stu`: one student's exam ids per
/// line; blank lines are skipped. Students are named by line number.
pub fn parse_toronto_readers(crs: impl Read, stu: impl Read) -> Result<TorontoData, NottinghamError> {
    let io = |source| NottinghamError::Io { path: "<input>".into(), source };
    let mut table = EnrollmentTable::new();
    let mut declared = Vec::new();
    for (i, line) in BufReader::new(crs).lines().enumerate() {
        let line = line.map_err(io)?;
        let mut it = line.split_whitespace();
        let Some(id) = it.next() else { continue };
        let id = normalize_id(id);
        let n = it
            .next()
            .ok_or_else(|| NottinghamError::Parse { file: "crs", line: i + 1, message: "missing enrollment".into() })?
            .parse::<u32>()
            .map_err(|e| NottinghamError::Parse { file: "crs", line: i + 1, message: e.to_string() })?;
        table.add_exam(&id);
        declared.push((id, n));
    }
    for (i, line) in BufReader::new(stu).lines().enumerate() {
        let line = line.map_err(io)?;
        let student = format!("s{}", i + 1);
        for id in line.split_whitespace() {
            table.insert(&student, &normalize_id(id));
        }
    }
    let sizes = table.exam_sizes();
    let mismatches: Vec<(String, u32, u32)> = declared
        .iter()
        .filter_map(|(id, n)| {
            let got = sizes[table.exam_index(id).expect("registered")];
            (got != *n).then(|| (id.clone(), *n, got))
        })
        .collect();
    if !mismatches.is_empty() {
        log::warn!("{} exams differ from their declared enrollment, e.g. {:?}", mismatches.len(), mismatches[0]);
    }
    Ok(TorontoData { table, declared, mismatches })
}

/// Ids are numeric with varying zero padding between files.
fn normalize_id(id: &str) -> String {
    match id.trim_start_matches('0') {
        "" if !id.is_empty() => "0".into(),
        t if id.bytes().all(|b| b.is_ascii_digit()) => t.into(),
        _ => id.into(),
    }
}

/// Auxiliary constraints keyed by exam id.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sidecar {
    pub allowed: BTreeMap<String, Vec<usize>>,
    pub precedence: Vec<(String, String)>,
    pub groups: Vec<Vec<String>>,
    pub coincident: Vec<Vec<String>>,
    pub capacity: Option<u32>,
}

impl Sidecar {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, NottinghamError> {
        let p = path.as_ref();
        let text = std::fs::read_to_string(p)
            .map_err(|source| NottinghamError::Io { path: p.display().to_string(), source })?;
        serde_json::from_str(&text).map_err(|e| NottinghamError::Sidecar(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Same-day back-to-backs only.
    A,
    /// Weighted same-day and overnight back-to-backs.
    B,
}

impl std::str::FromStr for Variant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "a" | "A" => Ok(Self::A),
            "b" | "B" => Ok(Self::B),
            other => Err(format!("unknown variant `{other}`")),
        }
    }
}

/// Weights for variant b.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdjacencyWeights {
    pub same_day: f64,
    pub overnight: f64,
}

impl Default for AdjacencyWeights {
    fn default() -> Self {
        Self { same_day: 3.0, overnight: 1.0 }
    }
}

/// Weight of two exams sharing students at slots `a` and `b`.
pub fn adjacency_weight(cal: &SlotCalendar, variant: Variant, w: &AdjacencyWeights, a: usize, b: usize) -> f64 {
    if a.abs_diff(b) != 1 {
        return 0.0;
    }
    let lo = a.min(b);
    match (variant, cal.same_day(lo, lo + 1)) {
        (Variant::A, true) => 1.0,
        (Variant::A, false) => 0.0,
        (Variant::B, true) => w.same_day,
        (Variant::B, false) => w.overnight,
    }
}

/// Objective of a complete schedule: co-enrolled students in adjacent slots,
/// weighted per variant.
pub fn nottingham_objective(
    stats: &CoenrollmentStats,
    cal: &SlotCalendar,
    s: &ExamSchedule,
    variant: Variant,
    w: &AdjacencyWeights,
) -> f64 {
    let slots = s.slots();
    stats.pairs().map(|(i, j, c)| f64::from(c) * adjacency_weight(cal, variant, w, slots[i], slots[j])).sum()
}

/// Instance after coincident merging, indexed by merged exam.
#[derive(Debug, Clone)]
pub struct NottinghamInstance {
    pub merged: EnrollmentTable,
    pub stats: CoenrollmentStats,
    /// Merged index of each original exam.
    pub rep: Vec<usize>,
    pub calendar: SlotCalendar,
    pub capacity: u32,
    /// Permitted slots per merged exam; `None` means all.
    pub allowed: Vec<Option<Vec<bool>>>,
    pub precedence: Vec<(usize, usize)>,
    pub groups: Vec<Vec<usize>>,
    pub variant: Variant,
    pub weights: AdjacencyWeights,
}

impl NottinghamInstance {
    pub fn new(
        table: &EnrollmentTable,
        side: &Sidecar,
        calendar: SlotCalendar,
        variant: Variant,
        weights: AdjacencyWeights,
    ) -> Result<Self, NottinghamError> {
        let idx = |id: &str| table.exam_index(id).ok_or_else(|| NottinghamError::Sidecar(format!("unknown exam `{id}`")));
        let mut parent: Vec<usize> = (0..table.num_exams()).collect();
        for group in &side.coincident {
            let Some(first) = group.first() else { continue };
            let root = idx(first)?;
            for id in &group[1..] {
                let e = idx(id)?;
                let (a, b) = (find(&mut parent, root), find(&mut parent, e));
                parent[b.max(a)] = a.min(b);
            }
        }
        let mut merged = EnrollmentTable::new();
        let mut rep = vec![0; table.num_exams()];
        for (e, r) in rep.iter_mut().enumerate() {
            let root = find(&mut parent, e);
            *r = merged.add_exam(table.exam_id(root));
        }
        for (s, e) in table.records() {
            merged.insert(table.student_id(s), table.exam_id(find(&mut parent, e)));
        }
        let stats = compute_stats(&merged);
        let n = merged.num_exams();
        let ns = calendar.len();
        let mut allowed: Vec<Option<Vec<bool>>> = vec![None; n];
        for (id, slots) in &side.allowed {
            let m = rep[idx(id)?];
            let mut mask = vec![false; ns];
            for &s in slots {
                if s >= ns {
                    return Err(NottinghamError::Sidecar(format!("exam `{id}` allows slot {s} of {ns}")));
                }
                mask[s] = true;
            }
            let cur = allowed[m].get_or_insert_with(|| vec![true; ns]);
            for (c, k) in cur.iter_mut().zip(mask) {
                *c &= k;
            }
        }
        let mut precedence = Vec::new();
        for (a, b) in &side.precedence {
            precedence.push((rep[idx(a)?], rep[idx(b)?]));
        }
        precedence.sort_unstable();
        precedence.dedup();
        if let Some(e) = cycle_member(n, &precedence) {
            return Err(NottinghamError::Cyclic(merged.exam_id(e).into()));
        }
        let mut groups = Vec::new();
        for g in &side.groups {
            let mut members = g.iter().map(|id| idx(id).map(|e| rep[e])).collect::<Result<Vec<_>, _>>()?;
            members.sort_unstable();
            members.dedup();
            if members.len() > 1 {
                groups.push(members);
            }
        }
        Ok(Self {
            merged,
            stats,
            rep,
            calendar,
            capacity: side.capacity.unwrap_or(DEFAULT_CAPACITY),
            allowed,
            precedence,
            groups,
            variant,
            weights,
        })
    }

    pub fn num_exams(&self) -> usize {
        self.stats.num_exams()
    }

    pub fn num_slots(&self) -> usize {
        self.calendar.len()
    }

    fn adj(&self, a: usize, b: usize) -> f64 {
        adjacency_weight(&self.calendar, self.variant, &self.weights, a, b)
    }

    /// Expand merged slots to the original exams.
    pub fn expand(&self, merged_slots: &[usize]) -> ExamSchedule {
        ExamSchedule::new(self.rep.iter().map(|&m| merged_slots[m]).collect())
    }

    pub fn objective(&self, slots: &[usize]) -> f64 {
        self.stats.pairs().map(|(i, j, c)| f64::from(c) * self.adj(slots[i], slots[j])).sum()
    }

    /// Broken allowed-slot, precedence and non-overlap constraints.
    pub fn soft_violations(&self, slots: &[usize]) -> u64 {
        let mut v = 0;
        for (e, a) in self.allowed.iter().enumerate() {
            if a.as_ref().is_some_and(|m| !m[slots[e]]) {
                v += 1;
            }
        }
        v += self.precedence.iter().filter(|&&(a, b)| slots[a] >= slots[b]).count() as u64;
        for g in &self.groups {
            let mut per: HashMap<usize, u64> = HashMap::new();
            for &e in g {
                *per.entry(slots[e]).or_insert(0) += 1;
            }
            v += per.values().map(|&k| k - 1).sum::<u64>();
        }
        v
    }

    pub fn loads(&self, slots: &[usize]) -> Vec<u64> {
        let mut load = vec![0u64; self.num_slots()];
        for (e, &s) in slots.iter().enumerate() {
            load[s] += u64::from(self.stats.size(e));
        }
        load
    }

    pub fn conflicts(&self, slots: &[usize]) -> u64 {
        self.stats.pairs().filter(|&(i, j, _)| slots[i] == slots[j]).map(|(_, _, c)| u64::from(c)).sum()
    }

    pub fn is_hard_feasible(&self, slots: &[usize]) -> bool {
        self.conflicts(slots) == 0 && self.loads(slots).iter().all(|&l| l <= u64::from(self.capacity))
    }

    /// Objective plus `soft_weight` per soft violation.
    pub fn penalized(&self, slots: &[usize], soft_weight: f64) -> f64 {
        self.objective(slots) + soft_weight * self.soft_violations(slots) as f64
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

fn cycle_member(n: usize, arcs: &[(usize, usize)]) -> Option<usize> {
    let mut indeg = vec![0usize; n];
    let mut out = vec![Vec::new(); n];
    for &(a, b) in arcs {
        out[a].push(b);
        indeg[b] += 1;
    }
    let mut stack: Vec<usize> = (0..n).filter(|&e| indeg[e] == 0).collect();
    let mut seen = 0;
    while let Some(e) = stack.pop() {
        seen += 1;
        for &f in &out[e] {
            indeg[f] -= 1;
            if indeg[f] == 0 {
                stack.push(f);
            }
        }
    }
    (seen < n).then(|| (0..n).find(|&e| indeg[e] > 0).expect("cycle"))
}

/// Incremental view used by construction and descent.
struct State<'a> {
    inst: &'a NottinghamInstance,
    soft_weight: f64,
    slots: Vec<usize>,
    load: Vec<u64>,
    prec: Vec<Vec<(usize, bool)>>,
    group_of: Vec<Vec<usize>>,
}

impl<'a> State<'a> {
    fn new(inst: &'a NottinghamInstance, soft_weight: f64, slots: Vec<usize>) -> Self {
        let mut load = vec![0u64; inst.num_slots()];
        for (e, &s) in slots.iter().enumerate() {
            if s != usize::MAX {
                load[s] += u64::from(inst.stats.size(e));
            }
        }
        let mut prec = vec![Vec::new(); inst.num_exams()];
        for &(a, b) in &inst.precedence {
            prec[a].push((b, true));
            prec[b].push((a, false));
        }
        let mut group_of = vec![Vec::new(); inst.num_exams()];
        for (g, members) in inst.groups.iter().enumerate() {
            for &e in members {
                group_of[e].push(g);
            }
        }
        Self { inst, soft_weight, slots, load, prec, group_of }
    }

    fn fits(&self, e: usize, s: usize) -> bool {
        let inst = self.inst;
        let cur = if self.slots[e] == s { u64::from(inst.stats.size(e)) } else { 0 };
        self.load[s] - cur + u64::from(inst.stats.size(e)) <= u64::from(inst.capacity)
            && inst.stats.neighbors(e).iter().all(|&(f, _)| self.slots[f] != s)
    }

    /// Everything in the penalized objective that involves `e` at `s`,
    /// against currently placed exams.
    fn cost(&self, e: usize, s: usize) -> f64 {
        let inst = self.inst;
        let mut c = 0.0;
        for &(f, n) in inst.stats.neighbors(e) {
            let sf = self.slots[f];
            if sf != usize::MAX {
                c += f64::from(n) * inst.adj(s, sf);
            }
        }
        let mut soft = 0u64;
        if inst.allowed[e].as_ref().is_some_and(|m| !m[s]) {
            soft += 1;
        }
        for &(f, before) in &self.prec[e] {
            let sf = self.slots[f];
            if sf != usize::MAX && ((before && s >= sf) || (!before && sf >= s)) {
                soft += 1;
            }
        }
        for &g in &self.group_of[e] {
            if inst.groups[g].iter().any(|&f| f != e && self.slots[f] == s) {
                soft += 1;
            }
        }
        c + self.soft_weight * soft as f64
    }

    fn place(&mut self, e: usize, s: usize) {
        let q = u64::from(self.inst.stats.size(e));
        if self.slots[e] != usize::MAX {
            self.load[self.slots[e]] -= q;
        }
        self.slots[e] = s;
        self.load[s] += q;
    }

    /// Move single exams to cheaper feasible slots until nothing improves.
    fn descend(&mut self, rounds: usize) {
        for _ in 0..rounds {
            let mut moved = false;
            for e in 0..self.slots.len() {
                let cur = self.slots[e];
                let here = self.cost(e, cur);
                let best = (0..self.inst.num_slots())
                    .filter(|&s| s != cur && self.fits(e, s))
                    .map(|s| (s, self.cost(e, s)))
                    .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
                if let Some((s, c)) = best {
                    if c < here - 1e-9 {
                        self.place(e, s);
                        moved = true;
                    }
                }
            }
            if !moved {
                break;
            }
        }
    }
}

/// Greedy feasible construction: most constrained exam first, cheapest
/// feasible slot. `None` when some exam has no feasible slot left.
pub fn construct(inst: &NottinghamInstance, soft_weight: f64) -> Option<Vec<usize>> {
    let n = inst.num_exams();
    let mut st = State::new(inst, soft_weight, vec![usize::MAX; n]);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&e| {
        let allowed = inst.allowed[e].as_ref().map_or(usize::MAX, |m| m.iter().filter(|&&b| b).count());
        (allowed, std::cmp::Reverse(inst.stats.neighbors(e).len()), std::cmp::Reverse(inst.stats.size(e)), e)
    });
    for e in order {
        let s = (0..inst.num_slots())
            .filter(|&s| st.fits(e, s))
            .min_by(|&a, &b| st.cost(e, a).total_cmp(&st.cost(e, b)).then(a.cmp(&b)))?;
        st.place(e, s);
    }
    Some(st.slots)
}

/// Model over `movable` with everything else held at `current`. Returns the
/// model and the number of slot variables (`movable.len() * |S|`, first).
pub fn window_model(
    inst: &NottinghamInstance,
    current: &[usize],
    movable: &[usize],
    soft_weight: f64,
) -> Result<MipModel, NottinghamError> {
    let ns = inst.num_slots();
    let mut pos = vec![usize::MAX; inst.num_exams()];
    for (p, &e) in movable.iter().enumerate() {
        pos[e] = p;
    }
    let fixed = |e: usize| pos[e] == usize::MAX;
    let mut ctx_slots = current.to_vec();
    for &e in movable {
        ctx_slots[e] = usize::MAX;
    }
    let st = State::new(inst, soft_weight, ctx_slots);
    let mut m = MipModel::new("nottingham");
    for &e in movable {
        for s in 0..ns {
            let v = m.add_var(format!("x[{},{s}]", inst.merged.exam_id(e)), st.cost(e, s));
            if inst.stats.neighbors(e).iter().any(|&(f, _)| fixed(f) && current[f] == s) {
                m.fix(v, false);
            }
        }
    }
    let x = |p: usize, s: usize| VarId((p * ns + s) as u32);
    for p in 0..movable.len() {
        m.add_constraint(format!("one[{p}]"), (0..ns).map(|s| (x(p, s), 1)).collect(), Sense::Eq, 1)?;
    }
    for s in 0..ns {
        let room = i64::from(inst.capacity) - st.load[s] as i64;
        let terms: Vec<(VarId, i64)> =
            movable.iter().enumerate().map(|(p, &e)| (x(p, s), i64::from(inst.stats.size(e)))).collect();
        m.add_constraint(format!("cap[{s}]"), terms, Sense::Le, room)?;
    }
    for (p, &e) in movable.iter().enumerate() {
        for &(f, c) in inst.stats.neighbors(e) {
            let q = pos[f];
            if q == usize::MAX || q <= p {
                continue;
            }
            for s in 0..ns {
                m.add_constraint(format!("apart[{p},{q},{s}]"), vec![(x(p, s), 1), (x(q, s), 1)], Sense::Le, 1)?;
            }
            for s in 0..ns.saturating_sub(1) {
                let w = inst.adj(s, s + 1);
                if w == 0.0 {
                    continue;
                }
                for (a, b) in [(p, q), (q, p)] {
                    let z = m.add_var(format!("z[{a},{b},{s}]"), f64::from(c) * w);
                    m.add_constraint(format!("adj[{a},{b},{s}]"), vec![(x(a, s), 1), (x(b, s + 1), 1), (z, -1)], Sense::Le, 1)?;
                }
            }
        }
    }
    let big = ns as i64;
    for &(a, b) in &inst.precedence {
        let (pa, pb) = (pos[a], pos[b]);
        if pa == usize::MAX || pb == usize::MAX {
            continue;
        }
        let v = m.add_var(format!("late[{a},{b}]"), soft_weight);
        let mut terms: Vec<(VarId, i64)> = Vec::with_capacity(2 * ns);
        for s in 1..ns {
            terms.push((x(pa, s), s as i64));
            terms.push((x(pb, s), -(s as i64)));
        }
        terms.push((v, -big));
        m.add_constraint(format!("before[{a},{b}]"), terms, Sense::Le, -1)?;
    }
    for (g, members) in inst.groups.iter().enumerate() {
        let mv: Vec<usize> = members.iter().map(|&e| pos[e]).filter(|&p| p != usize::MAX).collect();
        if mv.len() < 2 {
            continue;
        }
        for s in 0..ns {
            // a fixed member already in `s` is priced into the slot costs
            if members.iter().any(|&e| fixed(e) && current[e] == s) {
                continue;
            }
            let mut terms: Vec<(VarId, i64)> = mv.iter().map(|&p| (x(p, s), 1)).collect();
            for k in 1..mv.len() {
                let v = m.add_var(format!("share[{g},{s},{k}]"), soft_weight);
                terms.push((v, -1));
            }
            m.add_constraint(format!("group[{g},{s}]"), terms, Sense::Le, 1)?;
        }
    }
    Ok(m)
}

fn encode_window(m: &MipModel, inst: &NottinghamInstance, slots: &[usize], movable: &[usize]) -> Vec<bool> {
    let ns = inst.num_slots();
    let mut a = vec![false; m.num_vars()];
    for (p, &e) in movable.iter().enumerate() {
        a[p * ns + slots[e]] = true;
    }
    // auxiliary variables at the smallest values their rows allow
    let first_aux = movable.len() * ns;
    for c in m.constraints() {
        let aux: Vec<VarId> = c.terms.iter().filter(|(v, _)| v.index() >= first_aux).map(|&(v, _)| v).collect();
        for v in aux {
            if !c.is_satisfied(&a) {
                a[v.index()] = true;
            }
        }
    }
    a
}

#[derive(Debug, Clone)]
pub struct NottinghamConfig {
    pub soft_weight: f64,
    pub assign_limits: SolveLimits,
    /// Total budget for windowed improvement.
    pub post_time: Duration,
    pub window: usize,
    pub window_limits: SolveLimits,
    /// Largest full model handed to the solver, in variables.
    pub max_model_vars: usize,
}

impl Default for NottinghamConfig {
    fn default() -> Self {
        Self {
            soft_weight: 100.0,
            assign_limits: SolveLimits::seconds(36_000.0),
            post_time: Duration::from_secs(1800),
            window: 25,
            window_limits: SolveLimits::seconds(60.0),
            max_model_vars: 2_000_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NottinghamResult {
    /// Slot per original exam.
    pub schedule: ExamSchedule,
    pub merged_slots: Vec<usize>,
    pub objective: f64,
    pub soft_violations: u64,
    pub max_load: u64,
    pub assign_status: SolveStatus,
    pub windows_accepted: usize,
}

fn solve_window(
    inst: &NottinghamInstance,
    slots: &[usize],
    movable: &[usize],
    cfg: &NottinghamConfig,
    limits: &SolveLimits,
    backend: &dyn Backend,
) -> Result<(Option<Vec<usize>>, SolveStatus, u64), NottinghamError> {
    let ns = inst.num_slots();
    let mut m = window_model(inst, slots, movable, cfg.soft_weight)?;
    let warm = encode_window(&m, inst, slots, movable);
    if mip::verify_assignment(&m, &warm)?.feasible {
        m.set_warm_start(warm)?;
    }
    let r = mip::solve(&m, limits, backend)?;
    let Some(a) = r.assignment else { return Ok((None, r.status, r.nodes)) };
    let mut out = slots.to_vec();
    for (p, &e) in movable.iter().enumerate() {
        out[e] = (0..ns).find(|&s| a[p * ns + s]).expect("one slot");
    }
    Ok((Some(out), r.status, r.nodes))
}

/// Zero-conflict assignment with slots standing in for ordered blocks,
/// followed by windowed improvement. Zero conflicts and capacity hold in
/// every returned schedule.
pub fn adapt_and_solve(
    inst: &NottinghamInstance,
    cfg: &NottinghamConfig,
    backend: &dyn Backend,
) -> Result<NottinghamResult, NottinghamError> {
    let n = inst.num_exams();
    let infeasible = || NottinghamError::Infeasible { slots: inst.num_slots(), capacity: inst.capacity };
    if (0..n).any(|e| inst.stats.size(e) > inst.capacity) {
        return Err(infeasible());
    }
    let all: Vec<usize> = (0..n).collect();
    let mut slots = construct(inst, cfg.soft_weight).map(|s| {
        let mut st = State::new(inst, cfg.soft_weight, s);
        st.descend(50);
        st.slots
    });
    let mut assign_status = SolveStatus::Feasible;
    let vars_estimate = n * inst.num_slots() + 2 * inst.stats.num_pairs() * inst.num_slots();
    if slots.is_none() || vars_estimate <= cfg.max_model_vars {
        let current = slots.clone().unwrap_or_else(|| vec![0; n]);
        let (found, status, _) = solve_window(inst, &current, &all, cfg, &cfg.assign_limits, backend)?;
        assign_status = status;
        if let Some(f) = found {
            if slots.as_ref().is_none_or(|s| inst.penalized(&f, cfg.soft_weight) <= inst.penalized(s, cfg.soft_weight)) {
                slots = Some(f);
            }
        }
    } else {
        log::info!("nottingham: full model too large ({vars_estimate} variables), using the constructed start");
    }
    let mut slots = slots.ok_or_else(infeasible)?;
    debug_assert!(inst.is_hard_feasible(&slots));

    let start = Instant::now();
    let node_budget = (cfg.post_time.as_secs_f64() * 2000.0) as u64;
    let mut nodes = 0u64;
    let (f_step, b_step) = (((0.4 * cfg.window as f64).round() as usize).max(1), (0.2 * cfg.window as f64).round() as usize);
    let mut best = inst.penalized(&slots, cfg.soft_weight);
    let (mut i, mut accepted) = (0usize, 0usize);
    while i < n && nodes < node_budget && start.elapsed() < cfg.post_time.saturating_mul(4) {
        let st = State::new(inst, cfg.soft_weight, slots.clone());
        let density: Vec<f64> =
            (0..n).map(|e| st.cost(e, slots[e]) / f64::from(inst.stats.size(e).max(1))).collect();
        let mut order = all.clone();
        order.sort_by(|&a, &b| density[b].total_cmp(&density[a]).then(a.cmp(&b)));
        let window = &order[i..(i + cfg.window).min(n)];
        let (found, _, used) = solve_window(inst, &slots, window, cfg, &cfg.window_limits, backend)?;
        nodes += used.max(1);
        match found {
            Some(f) if inst.is_hard_feasible(&f) && inst.penalized(&f, cfg.soft_weight) < best => {
                best = inst.penalized(&f, cfg.soft_weight);
                slots = f;
                accepted += 1;
                i = i.saturating_sub(b_step);
            }
            _ => i += f_step,
        }
    }
    let objective = inst.objective(&slots);
    log::info!("nottingham: objective {objective}, {accepted} windows accepted");
    Ok(NottinghamResult {
        schedule: inst.expand(&slots),
        objective,
        soft_violations: inst.soft_violations(&slots),
        max_load: inst.loads(&slots).into_iter().max().unwrap_or(0),
        merged_slots: slots,
        assign_status,
        windows_accepted: accepted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mip::OracleBackend;

    fn toronto(crs: &str, stu: &str) -> TorontoData {
        parse_toronto_readers(crs.as_bytes(), stu.as_bytes()).unwrap()
    }

    #[test]
    fn two_students_two_pairs() {
        let d = toronto("1 1\n2 2\n3 1\n", "1 2\n\n2 3\n");
        let st = compute_stats(&d.table);
        let i = |id: &str| d.table.exam_index(id).unwrap();
        assert_eq!(st.pair(i("1"), i("2")), 1);
        assert_eq!(st.pair(i("2"), i("3")), 1);
        assert_eq!(st.pair(i("1"), i("3")), 0);
        assert_eq!(d.table.num_students(), 2);
        assert!(d.mismatches.is_empty());
    }

    #[test]
    fn padded_ids_and_mismatch() {
        let d = toronto("0001 5\n0002 1\n", "1 02\n");
        assert_eq!(d.table.num_exams(), 2);
        assert_eq!(d.mismatches, vec![("1".to_string(), 5, 1)]);
    }

    #[test]
    fn objective_by_variant() {
        let t = EnrollmentTable::from_records([("a", "x"), ("a", "y"), ("b", "x"), ("b", "y")]);
        let st = compute_stats(&t);
        let cal = SlotCalendar::uniform(2, 3);
        let w = AdjacencyWeights::default();
        let same = ExamSchedule::new(vec![0, 1]);
        assert_eq!(nottingham_objective(&st, &cal, &same, Variant::A, &w), 2.0);
        assert_eq!(nottingham_objective(&st, &cal, &same, Variant::B, &w), 6.0);
        let night = ExamSchedule::new(vec![2, 3]);
        assert_eq!(nottingham_objective(&st, &cal, &night, Variant::A, &w), 0.0);
        assert_eq!(nottingham_objective(&st, &cal, &night, Variant::B, &w), 2.0);
        let apart = ExamSchedule::new(vec![0, 5]);
        assert_eq!(nottingham_objective(&st, &cal, &apart, Variant::B, &w), 0.0);
    }

    #[test]
    fn coincident_exams_merge() {
        let t = EnrollmentTable::from_records([("a", "x"), ("a", "x2"), ("a", "y"), ("b", "x"), ("b", "x2")]);
        let side = Sidecar { coincident: vec![vec!["x".into(), "x2".into()]], ..Sidecar::default() };
        let inst = NottinghamInstance::new(&t, &side, SlotCalendar::uniform(1, 3), Variant::A, AdjacencyWeights::default()).unwrap();
        assert_eq!(inst.num_exams(), 2);
        assert_eq!(inst.rep[0], inst.rep[1]);
        assert_eq!(inst.stats.size(inst.rep[0]), 2);
        let sched = inst.expand(&[0, 2]);
        assert_eq!(sched.slots()[0], sched.slots()[1]);
    }

    #[test]
    fn cyclic_precedence_rejected() {
        let t = EnrollmentTable::from_records([("a", "x"), ("b", "y")]);
        let side = Sidecar { precedence: vec![("x".into(), "y".into()), ("y".into(), "x".into())], ..Sidecar::default() };
        let err = NottinghamInstance::new(&t, &side, SlotCalendar::uniform(1, 3), Variant::A, AdjacencyWeights::default());
        assert!(matches!(err, Err(NottinghamError::Cyclic(_))));
    }

    /// Four exams of 900/800/700/600 own students, capacity 1550, three
    /// slots in one day. E0/E1 and E2/E3 share students.
    fn capacitated_toy() -> NottinghamInstance {
        let mut recs = Vec::new();
        let sizes = [900, 800, 700, 600];
        for (e, &q) in sizes.iter().enumerate() {
            for s in 0..q {
                recs.push((format!("e{e}s{s}"), format!("E{e}")));
            }
        }
        for s in 0..40 {
            recs.push((format!("e0s{s}"), "E1".to_string()));
        }
        for s in 0..10 {
            recs.push((format!("e2s{s}"), "E3".to_string()));
        }
        // shared students bring E1 to 840 and E3 to 610
        let t = EnrollmentTable::from_records(recs);
        NottinghamInstance::new(&t, &Sidecar::default(), SlotCalendar::uniform(1, 3), Variant::A, AdjacencyWeights::default())
            .unwrap()
    }

    #[test]
    fn toy_matches_enumeration() {
        let inst = capacitated_toy();
        let mut best = f64::INFINITY;
        for code in 0..81usize {
            let s: Vec<usize> = (0..4).map(|k| code / 3usize.pow(k) % 3).collect();
            if inst.is_hard_feasible(&s) {
                best = best.min(inst.objective(&s));
            }
        }
        assert!(best.is_finite());
        let cfg = NottinghamConfig { assign_limits: SolveLimits::unlimited(), ..NottinghamConfig::default() };
        let r = adapt_and_solve(&inst, &cfg, &OracleBackend::default()).unwrap();
        assert!(inst.is_hard_feasible(&r.merged_slots));
        assert_eq!(r.objective, best);
        assert!(r.max_load <= 1550);
    }

    #[test]
    fn too_few_slots_is_infeasible() {
        let t = EnrollmentTable::from_records([("a", "x"), ("a", "y"), ("a", "z")]);
        let inst = NottinghamInstance::new(&t, &Sidecar::default(), SlotCalendar::uniform(1, 2), Variant::A, AdjacencyWeights::default())
            .unwrap();
        let cfg = NottinghamConfig { assign_limits: SolveLimits::unlimited(), ..NottinghamConfig::default() };
        assert!(matches!(adapt_and_solve(&inst, &cfg, &OracleBackend::default()), Err(NottinghamError::Infeasible { .. })));
    }

    #[test]
    fn soft_constraints_counted() {
        let t = EnrollmentTable::from_records([("a", "x"), ("b", "y"), ("c", "z")]);
        let side = Sidecar {
            allowed: BTreeMap::from([("x".to_string(), vec![0])]),
            precedence: vec![("y".into(), "z".into())],
            groups: vec![vec!["x".into(), "y".into(), "z".into()]],
            ..Sidecar::default()
        };
        let inst = NottinghamInstance::new(&t, &side, SlotCalendar::uniform(1, 3), Variant::A, AdjacencyWeights::default()).unwrap();
        // x outside its slot, y not before z, three in one slot
        assert_eq!(inst.soft_violations(&[1, 1, 1]), 1 + 1 + 2);
        assert_eq!(inst.soft_violations(&[0, 1, 2]), 0);
        let cfg = NottinghamConfig { assign_limits: SolveLimits::unlimited(), ..NottinghamConfig::default() };
        let r = adapt_and_solve(&inst, &cfg, &OracleBackend::default()).unwrap();
        assert_eq!(r.soft_violations, 0);
    }
}
