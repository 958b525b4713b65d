//! Placing blocks into time slots with the four-index cyclic sequencing
//! model. Slots left without a real block receive a virtual (empty) block.

use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assign::BlockAssignment;
use crate::data::{CoenrollmentStats, SlotCalendar};
use crate::metrics::{ExamSchedule, MetricWeights};
use crate::mip::{self, Backend, MipError, MipModel, Sense, SolveLimits, SolveStatus, VarId};

#[derive(Debug, Error)]
pub enum SequencingError {
    #[error("window sets need 3 slots per day, calendar has {0}")]
    SlotsPerDay(usize),
    #[error("{k} real blocks do not fit in {available} available slots")]
    TooManyBlocks { k: usize, available: usize },
    #[error("front-loading infeasible: {large} large blocks, {early} early available slots")]
    FrontLoadInfeasible { large: usize, early: usize },
    #[error("sequencing model infeasible")]
    Infeasible,
    #[error("sequencing: solver stopped with status {0:?} and no incumbent")]
    NoIncumbent(SolveStatus),
    #[error("sequence has {seq} real blocks, assignment has {assignment}")]
    BlockMismatch { seq: usize, assignment: usize },
    #[error(transparent)]
    Mip(#[from] MipError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Penalized window start indices, as membership flags per slot. No window
/// wraps past the last slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Windows {
    pub triple_day: Vec<bool>,
    pub triple_24hr: Vec<bool>,
    pub b2b_evemorn: Vec<bool>,
    pub b2b_other: Vec<bool>,
}

impl Windows {
    pub fn len(&self) -> usize {
        self.triple_day.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triple_day.is_empty()
    }

    pub fn triple_slot(&self, s: usize) -> bool {
        s < self.len() && (self.triple_day[s] || self.triple_24hr[s])
    }

    pub fn indices(flags: &[bool]) -> Vec<usize> {
        flags.iter().enumerate().filter(|(_, &f)| f).map(|(s, _)| s).collect()
    }
}

/// Window sets for a three-slot-per-day calendar.
pub fn build_windows(cal: &SlotCalendar) -> Result<Windows, SequencingError> {
    if cal.slots_per_day() != 3 {
        return Err(SequencingError::SlotsPerDay(cal.slots_per_day()));
    }
    Ok(windows_from_days(cal))
}

/// Window sets from the calendar's day structure, any day length. A 3-window
/// is same-day when it stays in one day and 24-hour when it ends on the
/// next day.
pub fn windows_from_days(cal: &SlotCalendar) -> Windows {
    let n = cal.len();
    let mut w = Windows {
        triple_day: vec![false; n],
        triple_24hr: vec![false; n],
        b2b_evemorn: vec![false; n],
        b2b_other: vec![false; n],
    };
    for s in 0..n {
        if s + 2 < n {
            if cal.same_day(s, s + 2) {
                w.triple_day[s] = true;
            } else if cal.day(s + 2) == cal.day(s) + 1 {
                w.triple_24hr[s] = true;
            }
        }
        if s + 1 < n {
            if cal.is_evening_morning(s) {
                w.b2b_evemorn[s] = true;
            } else {
                w.b2b_other[s] = true;
            }
        }
    }
    w
}

/// Coefficient on four-in-a-row patterns `(i, j, l, m)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThreeInFourMode {
    /// `t(i,j,m) + t(i,l,m)`: the two genuine 3-in-4 patterns.
    #[default]
    Corrected,
    /// `t(i,j,l) + t(i,l,m)`, as the formula is usually printed.
    AsPrinted,
}

impl std::str::FromStr for ThreeInFourMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "corrected" => Ok(Self::Corrected),
            "as-printed" | "as_printed" => Ok(Self::AsPrinted),
            other => Err(format!("unknown 3-in-4 mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeqWeights {
    /// Same-day triple.
    pub alpha: f64,
    /// Triple across a day boundary.
    pub beta: f64,
    /// Evening-morning back-to-back.
    pub gamma1: f64,
    /// Other back-to-back.
    pub gamma2: f64,
    /// Three in four slots.
    pub delta: f64,
}

impl From<&MetricWeights> for SeqWeights {
    fn from(w: &MetricWeights) -> Self {
        Self {
            alpha: w.triple_w,
            beta: w.triple_w,
            gamma1: w.b2b_w * w.gamma1,
            gamma2: w.b2b_w * w.gamma2,
            delta: w.three4_w,
        }
    }
}

impl Default for SeqWeights {
    fn default() -> Self {
        (&MetricWeights::default()).into()
    }
}

fn key3(a: usize, b: usize, c: usize) -> [u32; 3] {
    let mut k = [a as u32, b as u32, c as u32];
    k.sort_unstable();
    k
}

/// Blocks `0..k` are real, `k..num_slots` virtual.
#[derive(Debug, Clone)]
pub struct SequencingInstance {
    pub num_slots: usize,
    pub k: usize,
    /// Dense `k x k` block pair counts.
    pub p: Vec<Vec<u64>>,
    /// Block triple counts keyed by sorted block triple.
    pub t: HashMap<[u32; 3], u64>,
    pub windows: Windows,
    pub weights: SeqWeights,
    pub mode: ThreeInFourMode,
    /// Slots that must hold a virtual block.
    pub excluded: Vec<bool>,
    /// Real blocks that must start in an early slot.
    pub large: Vec<bool>,
    /// Slots counting as early.
    pub early: Vec<bool>,
}

/// Front-loading settings shared by sequencing and rescheduling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrontLoad {
    /// Exams with at least this many students are large.
    pub size_cutoff: u32,
    /// Slots with index below this are early.
    pub slot_cutoff: usize,
}

impl Default for FrontLoad {
    fn default() -> Self {
        Self { size_cutoff: 300, slot_cutoff: 23 }
    }
}

impl FrontLoad {
    pub fn is_large(&self, size: u32) -> bool {
        size >= self.size_cutoff
    }

    pub fn is_early(&self, s: usize) -> bool {
        s < self.slot_cutoff
    }
}

impl SequencingInstance {
    /// Instance with no penalties, no exclusions, and no front-loading.
    pub fn empty(num_slots: usize, k: usize, windows: Windows) -> Self {
        Self {
            num_slots,
            k,
            p: vec![vec![0; k]; k],
            t: HashMap::new(),
            windows,
            weights: SeqWeights::default(),
            mode: ThreeInFourMode::Corrected,
            excluded: vec![false; num_slots],
            large: vec![false; k],
            early: vec![true; num_slots],
        }
    }

    /// Aggregate exam counts to blocks and read windows and exclusions off
    /// the calendar.
    pub fn from_assignment(
        stats: &CoenrollmentStats,
        ba: &BlockAssignment,
        cal: &SlotCalendar,
        windows: Windows,
        weights: SeqWeights,
        front_load: Option<FrontLoad>,
    ) -> Self {
        let k = ba.k;
        let mut inst = Self::empty(cal.len(), k, windows);
        inst.weights = weights;
        for (i, j, c) in stats.pairs() {
            let (a, b) = (ba.blocks[i], ba.blocks[j]);
            if a != b {
                inst.p[a][b] += u64::from(c);
                inst.p[b][a] += u64::from(c);
            }
        }
        for (tr, c) in stats.triples() {
            let [a, b, d] = tr.map(|e| ba.blocks[e as usize]);
            if a != b && b != d && a != d {
                *inst.t.entry(key3(a, b, d)).or_insert(0) += u64::from(c);
            }
        }
        inst.excluded = (0..cal.len()).map(|s| !cal.is_available(s)).collect();
        if let Some(fl) = front_load {
            for (e, &b) in ba.blocks.iter().enumerate() {
                if fl.is_large(stats.size(e)) {
                    inst.large[b] = true;
                }
            }
            inst.early = (0..cal.len()).map(|s| fl.is_early(s)).collect();
        }
        inst
    }

    pub fn set_pair(&mut self, i: usize, j: usize, c: u64) {
        self.p[i][j] = c;
        self.p[j][i] = c;
    }

    pub fn set_triple(&mut self, i: usize, j: usize, l: usize, c: u64) {
        self.t.insert(key3(i, j, l), c);
    }

    pub fn pair(&self, i: usize, j: usize) -> u64 {
        if i < self.k && j < self.k {
            self.p[i][j]
        } else {
            0
        }
    }

    pub fn triple(&self, i: usize, j: usize, l: usize) -> u64 {
        if i < self.k && j < self.k && l < self.k && i != j && j != l && i != l {
            self.t.get(&key3(i, j, l)).copied().unwrap_or(0)
        } else {
            0
        }
    }

    fn is_real(&self, b: usize) -> bool {
        b < self.k
    }

    fn front_loading_active(&self) -> bool {
        self.large.iter().any(|&l| l) && self.early.iter().any(|&e| !e)
    }

    /// Cost of the triple-window variable `x[i,j,l,s]`.
    pub fn x_cost(&self, i: usize, j: usize, l: usize, s: usize) -> f64 {
        let w = &self.weights;
        let mut c = 0.0;
        let pij = self.pair(i, j) as f64;
        if self.windows.b2b_evemorn[s] {
            c += w.gamma1 * pij;
        }
        if self.windows.b2b_other[s] {
            c += w.gamma2 * pij;
        }
        let tijl = self.triple(i, j, l) as f64;
        if self.windows.triple_day[s] {
            c += w.alpha * tijl;
        }
        if self.windows.triple_24hr[s] {
            c += w.beta * tijl;
        }
        c
    }

    /// Cost of the four-in-a-row variable `z[i,j,l,m]`.
    pub fn z_cost(&self, i: usize, j: usize, l: usize, m: usize) -> f64 {
        let t = match self.mode {
            ThreeInFourMode::Corrected => self.triple(i, j, m) + self.triple(i, l, m),
            ThreeInFourMode::AsPrinted => self.triple(i, j, l) + self.triple(i, l, m),
        };
        self.weights.delta * t as f64
    }

    /// Objective of a slot-to-block permutation, recounted directly.
    pub fn permutation_cost(&self, at: &[usize]) -> f64 {
        let n = self.num_slots;
        let nxt = |s: usize, d: usize| at[(s + d) % n];
        let mut total = 0.0;
        if n >= 3 {
            for s in 0..n {
                total += self.x_cost(at[s], nxt(s, 1), nxt(s, 2), s);
            }
            for s in 0..n {
                if self.windows.triple_slot(s) && self.windows.triple_slot((s + 1) % n) && n >= 4 {
                    total += self.z_cost(at[s], nxt(s, 1), nxt(s, 2), nxt(s, 3));
                }
            }
        } else {
            // no room for triples; back-to-back windows only
            for s in 0..n.saturating_sub(1) {
                let pij = self.pair(at[s], at[s + 1]) as f64;
                if self.windows.b2b_evemorn[s] {
                    total += self.weights.gamma1 * pij;
                }
                if self.windows.b2b_other[s] {
                    total += self.weights.gamma2 * pij;
                }
            }
        }
        total
    }

    /// Hard constraints on a slot-to-block permutation (virtual order excluded).
    pub fn permutation_feasible(&self, at: &[usize]) -> bool {
        at.len() == self.num_slots
            && at.iter().enumerate().all(|(s, &b)| {
                !(self.is_real(b) && self.excluded[s])
                    && !(self.is_real(b) && self.large[b] && self.front_loading_active() && !self.early[s])
            })
    }

    fn validate(&self) -> Result<(), SequencingError> {
        let available = self.excluded.iter().filter(|&&x| !x).count();
        if self.k > available || self.k > self.num_slots {
            return Err(SequencingError::TooManyBlocks { k: self.k, available });
        }
        if self.front_loading_active() {
            let large = self.large.iter().filter(|&&l| l).count();
            let early = (0..self.num_slots).filter(|&s| self.early[s] && !self.excluded[s]).count();
            if large > early {
                return Err(SequencingError::FrontLoadInfeasible { large, early });
            }
        }
        Ok(())
    }
}

/// Block-to-slot bijection over real and virtual blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSequence {
    pub k: usize,
    pub slot_of_block: Vec<usize>,
    pub block_at_slot: Vec<usize>,
    pub objective: f64,
    pub status: SolveStatus,
}

impl BlockSequence {
    pub fn from_slot_order(inst: &SequencingInstance, block_at_slot: Vec<usize>, status: SolveStatus) -> Self {
        let mut slot_of_block = vec![0; block_at_slot.len()];
        for (s, &b) in block_at_slot.iter().enumerate() {
            slot_of_block[b] = s;
        }
        let objective = inst.permutation_cost(&block_at_slot);
        Self { k: inst.k, slot_of_block, block_at_slot, objective, status }
    }

    pub fn is_virtual(&self, b: usize) -> bool {
        b >= self.k
    }
}

/// Variable layout of the four-index model.
pub struct SequencingModel {
    pub model: MipModel,
    n: usize,
    // dense (i, j, l, s) -> variable index, u32::MAX where not created
    x_index: Vec<u32>,
}

impl SequencingModel {
    pub fn x(&self, i: usize, j: usize, l: usize, s: usize) -> Option<VarId> {
        let n = self.n;
        let v = self.x_index[((i * n + j) * n + l) * n + s];
        (v != u32::MAX).then_some(VarId(v))
    }

    /// Slot-to-block order read from the first index of each active `x`.
    pub fn decode(&self, a: &[bool]) -> Vec<usize> {
        let n = self.n;
        let mut at = vec![usize::MAX; n];
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    for s in 0..n {
                        if let Some(v) = self.x(i, j, l, s) {
                            if a[v.index()] {
                                at[s] = i;
                            }
                        }
                    }
                }
            }
        }
        at
    }

    /// Full assignment for a slot-to-block order; `y` and `z` set tight.
    pub fn encode(&self, at: &[usize]) -> Vec<bool> {
        let n = self.n;
        let mut a = vec![false; self.model.num_vars()];
        for s in 0..n {
            if let Some(v) = self.x(at[s], at[(s + 1) % n], at[(s + 2) % n], s) {
                a[v.index()] = true;
            }
        }
        // y and z rows are equalities and lower bounds on x; settle them in order
        for c in self.model.constraints() {
            if c.name.starts_with("y_def") {
                let (y, _) = c.terms[0];
                a[y.index()] = c.terms[1..].iter().any(|&(v, _)| a[v.index()]);
            }
        }
        for c in self.model.constraints() {
            if c.name.starts_with("z_link") {
                let (z, _) = c.terms[0];
                a[z.index()] = c.terms[1..].iter().all(|&(v, _)| a[v.index()]);
            }
        }
        a
    }
}

/// Build the four-index model. Only pairwise-distinct triples get an `x`
/// variable, and `z` (with its `y` terms) exists only where it carries cost.
pub fn sequencing_model(inst: &SequencingInstance) -> Result<SequencingModel, SequencingError> {
    let n = inst.num_slots;
    let mut m = MipModel::new("block_sequencing");
    let mut x_index = vec![u32::MAX; n * n * n * n];
    let at = |i: usize, j: usize, l: usize, s: usize| ((i * n + j) * n + l) * n + s;
    let mut first: Vec<Vec<(VarId, i64)>> = vec![Vec::new(); n];
    let mut second: Vec<Vec<(VarId, i64)>> = vec![Vec::new(); n];
    let mut third: Vec<Vec<(VarId, i64)>> = vec![Vec::new(); n];
    let mut by_slot: Vec<Vec<(VarId, i64)>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in (0..n).filter(|&j| j != i) {
            for l in (0..n).filter(|&l| l != i && l != j) {
                for s in 0..n {
                    let v = m.add_var(format!("x[{i},{j},{l},{s}]"), inst.x_cost(i, j, l, s));
                    x_index[at(i, j, l, s)] = v.0;
                    first[i].push((v, 1));
                    second[j].push((v, 1));
                    third[l].push((v, 1));
                    by_slot[s].push((v, 1));
                    if inst.is_real(i) && inst.excluded[s] {
                        m.fix(v, false);
                    }
                }
            }
        }
    }
    let xv = |i: usize, j: usize, l: usize, s: usize| VarId(x_index[at(i, j, l, s)]);
    for (b, terms) in first.into_iter().enumerate() {
        m.add_constraint(format!("first[{b}]"), terms, Sense::Eq, 1)?;
    }
    for (b, terms) in second.into_iter().enumerate() {
        m.add_constraint(format!("second[{b}]"), terms, Sense::Eq, 1)?;
    }
    for (b, terms) in third.into_iter().enumerate() {
        m.add_constraint(format!("third[{b}]"), terms, Sense::Eq, 1)?;
    }
    for (s, terms) in by_slot.into_iter().enumerate() {
        m.add_constraint(format!("slot[{s}]"), terms, Sense::Eq, 1)?;
    }
    // cyclic continuity: (., j, l) at s continues as (j, l, .) at s + 1
    for j in 0..n {
        for l in (0..n).filter(|&l| l != j) {
            for s in 0..n {
                let ns = (s + 1) % n;
                let mut terms: Vec<(VarId, i64)> = Vec::with_capacity(2 * n);
                terms.extend((0..n).filter(|&i| i != j && i != l).map(|i| (xv(i, j, l, s), 1)));
                terms.extend((0..n).filter(|&q| q != j && q != l).map(|q| (xv(j, l, q, ns), -1)));
                m.add_constraint(format!("continuity[{j},{l},{s}]"), terms, Sense::Eq, 0)?;
            }
        }
    }
    // four-in-a-row penalties
    let triple_slots: Vec<usize> = (0..n).filter(|&s| inst.windows.triple_slot(s)).collect();
    let mut y_vars: HashMap<(usize, usize, usize), VarId> = HashMap::new();
    let mut y_of = |m: &mut MipModel, i: usize, j: usize, l: usize| -> Result<VarId, MipError> {
        if let Some(&y) = y_vars.get(&(i, j, l)) {
            return Ok(y);
        }
        let y = m.add_var(format!("y[{i},{j},{l}]"), 0.0);
        let mut terms = vec![(y, 1)];
        terms.extend(triple_slots.iter().map(|&s| (xv(i, j, l, s), -1)));
        m.add_constraint(format!("y_def[{i},{j},{l}]"), terms, Sense::Eq, 0)?;
        y_vars.insert((i, j, l), y);
        Ok(y)
    };
    if n >= 4 && inst.weights.delta > 0.0 && !triple_slots.is_empty() {
        let k = inst.k;
        for i in 0..k {
            for j in (0..n).filter(|&j| j != i) {
                for l in (0..n).filter(|&l| l != i && l != j) {
                    for mm in (0..n).filter(|&q| q != i && q != j && q != l) {
                        let c = inst.z_cost(i, j, l, mm);
                        if c <= 0.0 {
                            continue;
                        }
                        let y1 = y_of(&mut m, i, j, l)?;
                        let y2 = y_of(&mut m, j, l, mm)?;
                        let z = m.add_var(format!("z[{i},{j},{l},{mm}]"), c);
                        m.add_constraint(
                            format!("z_link[{i},{j},{l},{mm}]"),
                            vec![(z, 1), (y1, -1), (y2, -1)],
                            Sense::Ge,
                            -1,
                        )?;
                    }
                }
            }
        }
    }
    if inst.front_loading_active() {
        for i in (0..inst.k).filter(|&i| inst.large[i]) {
            let mut terms = Vec::new();
            for j in (0..n).filter(|&j| j != i) {
                for l in (0..n).filter(|&l| l != i && l != j) {
                    for s in (0..n).filter(|&s| inst.early[s]) {
                        terms.push((xv(i, j, l, s), 1));
                    }
                }
            }
            m.add_constraint(format!("front_load[{i}]"), terms, Sense::Eq, 1)?;
        }
    }
    // virtual blocks are interchangeable: keep them in slot order
    let slot_expr = |b: usize, sign: i64| -> Vec<(VarId, i64)> {
        let mut terms = Vec::new();
        for j in (0..n).filter(|&j| j != b) {
            for l in (0..n).filter(|&l| l != b && l != j) {
                for s in 1..n {
                    terms.push((xv(b, j, l, s), sign * s as i64));
                }
            }
        }
        terms
    };
    for v in inst.k..n.saturating_sub(1) {
        let mut terms = slot_expr(v + 1, 1);
        terms.extend(slot_expr(v, -1));
        m.add_constraint(format!("virtual_order[{v}]"), terms, Sense::Ge, 1)?;
    }
    Ok(SequencingModel { model: m, n, x_index })
}

/// Feasible starting order: large real blocks in the earliest usable early
/// slots, other real blocks in the remaining available slots, virtual
/// blocks last.
fn initial_order(inst: &SequencingInstance) -> Vec<usize> {
    let n = inst.num_slots;
    let mut at = vec![usize::MAX; n];
    let mut usable: Vec<usize> = (0..n).filter(|&s| !inst.excluded[s]).collect();
    let fl = inst.front_loading_active();
    for b in (0..inst.k).filter(|&b| fl && inst.large[b]) {
        let pos = usable.iter().position(|&s| inst.early[s]).expect("validated");
        at[usable.remove(pos)] = b;
    }
    let mut rest = usable.into_iter();
    for b in (0..inst.k).filter(|&b| !(fl && inst.large[b])) {
        at[rest.next().expect("validated")] = b;
    }
    let mut v = inst.k;
    for slot in at.iter_mut().filter(|b| **b == usize::MAX) {
        *slot = v;
        v += 1;
    }
    at
}

/// Relabel virtual blocks so they appear in increasing slot order.
fn canonical_virtual(inst: &SequencingInstance, at: &mut [usize]) {
    let mut v = inst.k;
    for b in at.iter_mut() {
        if *b >= inst.k {
            *b = v;
            v += 1;
        }
    }
}

/// Pairwise-swap descent on the recounted objective.
fn improve_by_swaps(inst: &SequencingInstance, at: &mut [usize], max_rounds: usize) {
    let n = at.len();
    let mut best = inst.permutation_cost(at);
    for _ in 0..max_rounds {
        let mut improved = false;
        for a in 0..n {
            for b in a + 1..n {
                if at[a] >= inst.k && at[b] >= inst.k {
                    continue;
                }
                at.swap(a, b);
                if inst.permutation_feasible(at) {
                    let c = inst.permutation_cost(at);
                    if c < best - 1e-9 {
                        best = c;
                        improved = true;
                        continue;
                    }
                }
                at.swap(a, b);
            }
        }
        if !improved {
            break;
        }
    }
    canonical_virtual(inst, at);
}

fn permutations(items: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == items.len() {
        out.push(items.clone());
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permutations(items, k + 1, out);
        items.swap(k, i);
    }
}

/// Solve the sequencing model. `initial` is an optional slot-to-block order
/// used as a warm start after swap descent; otherwise a constructed order is
/// used. Fewer than three slots are enumerated directly.
pub fn solve_sequencing(
    inst: &SequencingInstance,
    initial: Option<&[usize]>,
    limits: &SolveLimits,
    backend: &dyn Backend,
) -> Result<BlockSequence, SequencingError> {
    inst.validate()?;
    let n = inst.num_slots;
    if n < 3 {
        let mut all = Vec::new();
        permutations(&mut (0..n).collect::<Vec<_>>(), 0, &mut all);
        let best = all
            .into_iter()
            .filter(|at| inst.permutation_feasible(at))
            .min_by(|a, b| inst.permutation_cost(a).total_cmp(&inst.permutation_cost(b)))
            .ok_or(SequencingError::Infeasible)?;
        return Ok(BlockSequence::from_slot_order(inst, best, SolveStatus::Optimal));
    }
    let mut start = match initial {
        Some(order) if inst.permutation_feasible(order) => {
            let mut o = order.to_vec();
            canonical_virtual(inst, &mut o);
            o
        }
        _ => initial_order(inst),
    };
    improve_by_swaps(inst, &mut start, 50);
    let mut sm = sequencing_model(inst)?;
    let ws = sm.encode(&start);
    sm.model.set_warm_start(ws)?;
    log::info!(
        "sequencing: {} slots, {} real blocks, {} variables, {} rows",
        n,
        inst.k,
        sm.model.num_vars(),
        sm.model.num_constraints()
    );
    let r = mip::solve(&sm.model, limits, backend)?;
    let a = match (&r.assignment, r.status) {
        (Some(a), _) => a,
        (None, SolveStatus::Infeasible) => return Err(SequencingError::Infeasible),
        (None, status) => return Err(SequencingError::NoIncumbent(status)),
    };
    let order = sm.decode(a);
    let seq = BlockSequence::from_slot_order(inst, order, r.status);
    log::info!("sequencing: status {:?}, objective {}", r.status, seq.objective);
    Ok(seq)
}

/// Compose exam-to-block with block-to-slot. The result is a draft.
pub fn apply_sequence(seq: &BlockSequence, ba: &BlockAssignment) -> Result<ExamSchedule, SequencingError> {
    if seq.k != ba.k {
        return Err(SequencingError::BlockMismatch { seq: seq.k, assignment: ba.k });
    }
    Ok(ExamSchedule::new(ba.blocks.iter().map(|&b| seq.slot_of_block[b]).collect()).into_draft())
}

pub fn write_sequence<W: Write>(seq: &BlockSequence, out: W) -> Result<(), SequencingError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["block", "slot", "virtual"])?;
    for (b, &s) in seq.slot_of_block.iter().enumerate() {
        w.write_record([b.to_string(), s.to_string(), seq.is_virtual(b).to_string()])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
