//! Grouping exams into blocks: minimum-conflict and zero-conflict
//! assignment, the max-clique lower bound, and blocks read off a schedule.

use std::io::{Read, Write};

use serde::Deserialize;
use thiserror::Error;

use crate::data::{CoenrollmentStats, ConflictGraph, EnrollmentTable};
use crate::metrics::ExamSchedule;
use crate::mip::{self, Backend, MipError, MipModel, Sense, SolveLimits, SolveStatus, VarId};

#[derive(Debug, Error)]
pub enum AssignError {
    #[error("block count must be at least 1")]
    ZeroBlocks,
    #[error("{k} blocks requested but only {slots} slots are available")]
    TooManyBlocks { k: usize, slots: usize },
    #[error("no zero-conflict assignment into {k} blocks exists")]
    Infeasible { k: usize },
    #[error("{model}: solver stopped with status {status:?} and no incumbent")]
    NoIncumbent { model: String, status: SolveStatus },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Mip(#[from] MipError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Exam to block map over blocks `0..k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockAssignment {
    pub k: usize,
    pub blocks: Vec<usize>,
    /// Co-enrolled students sharing a block.
    pub within_block_conflicts: u64,
    /// Co-enrolled students in blocks `b` and `b + 1`.
    pub neighbor_path_cost: u64,
    pub status: SolveStatus,
}

impl BlockAssignment {
    /// Wrap a raw map and recompute both cost fields.
    pub fn from_blocks(stats: &CoenrollmentStats, k: usize, blocks: Vec<usize>, status: SolveStatus) -> Self {
        let (within, path) = block_costs(stats, &blocks);
        Self { k, blocks, within_block_conflicts: within, neighbor_path_cost: path, status }
    }

    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (e, &b) in self.blocks.iter().enumerate() {
            out[b].push(e);
        }
        out
    }
}

fn block_costs(stats: &CoenrollmentStats, blocks: &[usize]) -> (u64, u64) {
    let mut within = 0;
    let mut path = 0;
    for (i, j, c) in stats.pairs() {
        match blocks[i].abs_diff(blocks[j]) {
            0 => within += u64::from(c),
            1 => path += u64::from(c),
            _ => {}
        }
    }
    (within, path)
}

/// Reject `k` outside `1..=available_slots`.
pub fn check_block_count(k: usize, available_slots: usize) -> Result<(), AssignError> {
    if k == 0 {
        return Err(AssignError::ZeroBlocks);
    }
    if k > available_slots {
        return Err(AssignError::TooManyBlocks { k, slots: available_slots });
    }
    Ok(())
}

/// Exams sorted by size descending, ties by index.
fn by_size_desc(stats: &CoenrollmentStats) -> Vec<usize> {
    let mut order: Vec<usize> = (0..stats.num_exams()).collect();
    order.sort_by_key(|&e| (std::cmp::Reverse(stats.size(e)), e));
    order
}

/// A built assignment model with its variable layout.
pub struct AssignmentModel {
    pub model: MipModel,
    k: usize,
    n: usize,
}

impl AssignmentModel {
    pub fn x(&self, e: usize, b: usize) -> VarId {
        VarId((e * self.k + b) as u32)
    }

    fn decode(&self, a: &[bool]) -> Vec<usize> {
        (0..self.n).map(|e| (0..self.k).find(|&b| a[self.x(e, b).index()]).expect("one block per exam")).collect()
    }
}

fn add_assignment_vars(m: &mut MipModel, n: usize, k: usize) -> Result<(), MipError> {
    for e in 0..n {
        for b in 0..k {
            m.add_var(format!("x[{e},{b}]"), 0.0);
        }
    }
    for e in 0..n {
        let terms = (0..k).map(|b| (VarId((e * k + b) as u32), 1)).collect();
        m.add_constraint(format!("one_block[{e}]"), terms, Sense::Eq, 1)?;
    }
    Ok(())
}

/// Pair-linked min-conflict model. The `p`-th largest exam is restricted to
/// blocks `0..=p`, which removes block relabelings without losing optima.
pub fn min_conflict_model(stats: &CoenrollmentStats, k: usize) -> Result<AssignmentModel, AssignError> {
    if k == 0 {
        return Err(AssignError::ZeroBlocks);
    }
    let n = stats.num_exams();
    let mut m = MipModel::new(format!("min_conflict_k{k}"));
    add_assignment_vars(&mut m, n, k)?;
    for (i, j, c) in stats.pairs() {
        let y = m.add_var(format!("y[{i},{j}]"), f64::from(c));
        for b in 0..k {
            let (xi, xj) = (VarId((i * k + b) as u32), VarId((j * k + b) as u32));
            m.add_constraint(format!("link[{i},{j},{b}]"), vec![(xi, 1), (xj, 1), (y, -1)], Sense::Le, 1)?;
        }
    }
    for (p, &e) in by_size_desc(stats).iter().enumerate() {
        for b in (p + 1)..k {
            m.fix(VarId((e * k + b) as u32), false);
        }
    }
    Ok(AssignmentModel { model: m, k, n })
}

/// Greedy warm start: largest exams first, each into the block adding the
/// fewest conflicts (lowest index on ties).
fn greedy_min_conflict(stats: &CoenrollmentStats, k: usize) -> Vec<usize> {
    let mut blocks = vec![usize::MAX; stats.num_exams()];
    let mut opened = 0;
    for e in by_size_desc(stats) {
        let mut cost = vec![0u64; k];
        for &(f, c) in stats.neighbors(e) {
            if blocks[f] != usize::MAX {
                cost[blocks[f]] += u64::from(c);
            }
        }
        let limit = (opened + 1).min(k);
        let b = (0..limit).min_by_key(|&b| (cost[b], b)).expect("k >= 1");
        opened = opened.max(b + 1);
        blocks[e] = b;
    }
    blocks
}

fn pair_warm_start(stats: &CoenrollmentStats, k: usize, blocks: &[usize], linked: impl Fn(usize, usize) -> bool) -> Vec<bool> {
    let n = stats.num_exams();
    let mut ws = vec![false; n * k];
    for (e, &b) in blocks.iter().enumerate() {
        ws[e * k + b] = true;
    }
    for (i, j, _) in stats.pairs() {
        ws.push(linked(blocks[i], blocks[j]));
    }
    ws
}

pub fn solve_min_conflict(
    stats: &CoenrollmentStats,
    k: usize,
    limits: &SolveLimits,
    backend: &dyn Backend,
) -> Result<BlockAssignment, AssignError> {
    let mut am = min_conflict_model(stats, k)?;
    let greedy = greedy_min_conflict(stats, k);
    am.model.set_warm_start(pair_warm_start(stats, k, &greedy, |a, b| a == b))?;
    let r = mip::solve(&am.model, limits, backend)?;
    let a = r.assignment.as_ref().ok_or_else(|| AssignError::NoIncumbent {
        model: am.model.name().into(),
        status: r.status,
    })?;
    let blocks = am.decode(a);
    log::info!("min-conflict k={k}: status {:?}, objective {:?}, bound {}", r.status, r.objective, r.bound);
    Ok(BlockAssignment::from_blocks(stats, k, blocks, r.status))
}

/// Zero-conflict model with the neighbor-path objective over blocks `b, b+1`.
pub fn zero_conflict_model(stats: &CoenrollmentStats, k: usize) -> Result<AssignmentModel, AssignError> {
    if k == 0 {
        return Err(AssignError::ZeroBlocks);
    }
    let n = stats.num_exams();
    let mut m = MipModel::new(format!("zero_conflict_k{k}"));
    add_assignment_vars(&mut m, n, k)?;
    let x = |e: usize, b: usize| VarId((e * k + b) as u32);
    for (i, j, c) in stats.pairs() {
        for b in 0..k {
            m.add_constraint(format!("apart[{i},{j},{b}]"), vec![(x(i, b), 1), (x(j, b), 1)], Sense::Le, 1)?;
        }
        if k >= 2 {
            let z = m.add_var(format!("z[{i},{j}]"), f64::from(c));
            for b in 0..k - 1 {
                m.add_constraint(
                    format!("next[{i},{j},{b}]"),
                    vec![(x(i, b), 1), (x(j, b + 1), 1), (z, -1)],
                    Sense::Le,
                    1,
                )?;
                m.add_constraint(
                    format!("next[{j},{i},{b}]"),
                    vec![(x(j, b), 1), (x(i, b + 1), 1), (z, -1)],
                    Sense::Le,
                    1,
                )?;
            }
        }
    }
    Ok(AssignmentModel { model: m, k, n })
}

/// Saturation-degree greedy coloring with at most `k` colors.
fn greedy_coloring(stats: &CoenrollmentStats, k: usize) -> Option<Vec<usize>> {
    let n = stats.num_exams();
    let mut color = vec![usize::MAX; n];
    let mut forbidden = vec![vec![false; k]; n];
    let mut saturation = vec![0usize; n];
    for _ in 0..n {
        let e = (0..n)
            .filter(|&e| color[e] == usize::MAX)
            .max_by_key(|&e| (saturation[e], stats.neighbors(e).len(), std::cmp::Reverse(e)))?;
        let b = (0..k).find(|&b| !forbidden[e][b])?;
        color[e] = b;
        for &(f, _) in stats.neighbors(e) {
            if !forbidden[f][b] {
                forbidden[f][b] = true;
                saturation[f] += 1;
            }
        }
    }
    Some(color)
}

pub fn solve_zero_conflict(
    stats: &CoenrollmentStats,
    k: usize,
    limits: &SolveLimits,
    backend: &dyn Backend,
) -> Result<BlockAssignment, AssignError> {
    let mut am = zero_conflict_model(stats, k)?;
    if let Some(colors) = greedy_coloring(stats, k) {
        let ws = if k >= 2 {
            pair_warm_start(stats, k, &colors, |a, b| a.abs_diff(b) == 1)
        } else {
            pair_warm_start(stats, k, &colors, |_, _| false)[..stats.num_exams() * k].to_vec()
        };
        am.model.set_warm_start(ws)?;
    }
    let r = mip::solve(&am.model, limits, backend)?;
    log::info!("zero-conflict k={k}: status {:?}, objective {:?}", r.status, r.objective);
    match (&r.assignment, r.status) {
        (Some(a), _) => Ok(BlockAssignment::from_blocks(stats, k, am.decode(a), r.status)),
        (None, SolveStatus::Infeasible) => Err(AssignError::Infeasible { k }),
        (None, status) => Err(AssignError::NoIncumbent { model: am.model.name().into(), status }),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaxClique {
    pub members: Vec<usize>,
    pub status: SolveStatus,
    /// Proven upper bound on the clique number.
    pub upper_bound: usize,
}

impl MaxClique {
    /// Fewest blocks that can possibly avoid all conflicts.
    pub fn lower_bound_on_blocks(&self) -> usize {
        self.members.len()
    }
}

/// `max sum x` as `min -sum x`; choosing `e` excludes all its non-neighbors.
pub fn max_clique_model(g: &ConflictGraph) -> Result<MipModel, MipError> {
    let n = g.num_vertices();
    let mut m = MipModel::new("max_clique");
    let xs: Vec<VarId> = (0..n).map(|e| m.add_var(format!("x[{e}]"), -1.0)).collect();
    for e in 0..n {
        let nn = g.non_neighbors(e);
        if nn.is_empty() {
            continue;
        }
        let h = nn.len() as i64;
        let mut terms: Vec<(VarId, i64)> = nn.iter().map(|&f| (xs[f], 1)).collect();
        terms.push((xs[e], h));
        m.add_constraint(format!("non_neighbors[{e}]"), terms, Sense::Le, h)?;
    }
    Ok(m)
}

fn greedy_clique(g: &ConflictGraph) -> Vec<usize> {
    let mut order: Vec<usize> = (0..g.num_vertices()).collect();
    order.sort_by_key(|&e| (std::cmp::Reverse(g.degree(e)), e));
    let mut best: Vec<usize> = Vec::new();
    // try each of the first few seeds, keep the largest
    for &seed in order.iter().take(16) {
        let mut clique = vec![seed];
        for &v in &order {
            if v != seed && clique.iter().all(|&u| g.is_adjacent(u, v)) {
                clique.push(v);
            }
        }
        if clique.len() > best.len() {
            best = clique;
        }
    }
    best
}

pub fn solve_max_clique(g: &ConflictGraph, limits: &SolveLimits, backend: &dyn Backend) -> Result<MaxClique, AssignError> {
    let n = g.num_vertices();
    if n == 0 {
        return Ok(MaxClique { members: Vec::new(), status: SolveStatus::Optimal, upper_bound: 0 });
    }
    let mut m = max_clique_model(g)?;
    let mut ws = vec![false; n];
    for v in greedy_clique(g) {
        ws[v] = true;
    }
    m.set_warm_start(ws)?;
    let r = mip::solve(&m, limits, backend)?;
    let a = r.assignment.as_ref().ok_or_else(|| AssignError::NoIncumbent { model: m.name().into(), status: r.status })?;
    let mut members: Vec<usize> = (0..n).filter(|&e| a[e]).collect();
    members.sort_unstable();
    debug_assert!(g.is_clique(&members));
    let upper_bound = if r.status == SolveStatus::Optimal {
        members.len()
    } else {
        ((-r.bound) + 1e-6).floor().max(members.len() as f64) as usize
    };
    Ok(MaxClique { members, status: r.status, upper_bound: upper_bound.min(n) })
}

/// Read blocks off a schedule: one block per occupied slot, numbered in slot
/// order. Also returns the slot each block came from.
pub fn blocks_from_schedule(stats: &CoenrollmentStats, s: &ExamSchedule) -> (BlockAssignment, Vec<usize>) {
    let occupied = s.occupied_slots();
    let blocks = s.slots().iter().map(|slot| occupied.binary_search(slot).expect("slot is occupied")).collect();
    (BlockAssignment::from_blocks(stats, occupied.len(), blocks, SolveStatus::Feasible), occupied)
}

pub fn write_blocks<W: Write>(ba: &BlockAssignment, t: &EnrollmentTable, out: W) -> Result<(), AssignError> {
    let mut rows: Vec<(&str, usize)> = ba.blocks.iter().enumerate().map(|(e, &b)| (t.exam_id(e), b)).collect();
    rows.sort_unstable();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["exam_id", "block"])?;
    for (id, b) in rows {
        w.write_record([id, &b.to_string()])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[derive(Deserialize)]
struct BlockRow {
    exam_id: String,
    block: usize,
}

/// Read `exam_id,block` rows; every exam of `t` must appear.
pub fn read_blocks<R: Read>(stats: &CoenrollmentStats, t: &EnrollmentTable, input: R) -> Result<BlockAssignment, AssignError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let mut blocks = vec![usize::MAX; t.num_exams()];
    for (i, row) in rdr.deserialize::<BlockRow>().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| AssignError::Parse { line, message: e.to_string() })?;
        let e = t
            .exam_index(&row.exam_id)
            .ok_or_else(|| AssignError::Parse { line, message: format!("unknown exam `{}`", row.exam_id) })?;
        blocks[e] = row.block;
    }
    if let Some(e) = blocks.iter().position(|&b| b == usize::MAX) {
        return Err(AssignError::Parse { line: 0, message: format!("exam `{}` has no block", t.exam_id(e)) });
    }
    let k = blocks.iter().max().map_or(0, |&b| b + 1);
    Ok(BlockAssignment::from_blocks(stats, k, blocks, SolveStatus::Feasible))
}
