//! Rescheduling a subset of exams into a set of slots with everything else
//! held fixed. Shared by post-processing and the layered construction.

use thiserror::Error;

use crate::data::CoenrollmentStats;
use crate::metrics::{context_counts, ExamSchedule, MetricWeights, UNASSIGNED};
use crate::mip::{self, Backend, MipError, MipModel, Sense, SolveLimits, SolveStatus, VarId};
use crate::sequencing::FrontLoad;

#[derive(Debug, Error)]
pub enum ScheduleIpError {
    #[error("no slots to schedule into")]
    NoSlots,
    #[error("warm start places exam {exam} in slot {slot}, which is not offered")]
    WarmStartSlot { exam: usize, slot: usize },
    #[error("rescheduling: solver stopped with status {0:?} and no incumbent")]
    NoIncumbent(SolveStatus),
    #[error(transparent)]
    Mip(#[from] MipError),
}

/// Per-slot front-loading penalty: zero before `slot_cutoff`, then
/// `300 * lambda1 * (s - slot_cutoff + 1)`.
pub fn default_zeta(num_slots: usize, slot_cutoff: usize, lambda1: f64) -> Vec<f64> {
    (0..num_slots)
        .map(|s| if s >= slot_cutoff { 300.0 * lambda1 * (s - slot_cutoff + 1) as f64 } else { 0.0 })
        .collect()
}

/// Front-loading for the rescheduling objective: large exams pay `zeta[s]`
/// in any slot at or beyond the cutoff.
#[derive(Debug, Clone, PartialEq)]
pub struct ZetaPenalty {
    pub front_load: FrontLoad,
    /// Indexed by calendar slot.
    pub zeta: Vec<f64>,
}

impl ZetaPenalty {
    pub fn standard(front_load: FrontLoad, num_slots: usize, lambda1: f64) -> Self {
        Self { front_load, zeta: default_zeta(num_slots, front_load.slot_cutoff, lambda1) }
    }

    pub fn penalty(&self, size: u32, s: usize) -> f64 {
        if self.front_load.is_large(size) && !self.front_load.is_early(s) {
            self.zeta.get(s).copied().unwrap_or(0.0)
        } else {
            0.0
        }
    }
}

/// One rescheduling problem. Exams and slots are referred to by position in
/// `movable` and `slots`.
#[derive(Debug, Clone)]
pub struct ScheduleIpInstance {
    pub movable: Vec<usize>,
    /// Offered calendar slots, ascending.
    pub slots: Vec<usize>,
    /// `[same slot, adjacent, two apart]` counts against fixed exams, per
    /// (movable, offered slot), row-major.
    pub context: Vec<[u64; 3]>,
    /// Front-loading penalty per (movable, offered slot), row-major.
    pub penalty: Vec<f64>,
    /// Co-enrollment among movable exams, by position.
    pub pairs: Vec<(usize, usize, u32)>,
    pub lambda1: f64,
    pub lambda2: f64,
}

/// Context counts for every movable exam and offered slot against all
/// assigned exams outside `movable`.
pub fn build_context(stats: &CoenrollmentStats, sched: &ExamSchedule, movable: &[usize], slots: &[usize]) -> Vec<[u64; 3]> {
    let mut fixed = sched.slots().to_vec();
    for &e in movable {
        fixed[e] = UNASSIGNED;
    }
    let mut out = Vec::with_capacity(movable.len() * slots.len());
    for &e in movable {
        for &s in slots {
            out.push(context_counts(stats, &fixed, e, s));
        }
    }
    out
}

impl ScheduleIpInstance {
    pub fn new(
        stats: &CoenrollmentStats,
        sched: &ExamSchedule,
        movable: Vec<usize>,
        mut slots: Vec<usize>,
        weights: &MetricWeights,
        zeta: Option<&ZetaPenalty>,
    ) -> Result<Self, ScheduleIpError> {
        slots.sort_unstable();
        slots.dedup();
        if slots.is_empty() {
            return Err(ScheduleIpError::NoSlots);
        }
        let context = build_context(stats, sched, &movable, &slots);
        let penalty = movable
            .iter()
            .flat_map(|&e| slots.iter().map(move |&s| zeta.map_or(0.0, |z| z.penalty(stats.size(e), s))))
            .collect();
        let mut pos = std::collections::HashMap::new();
        for (p, &e) in movable.iter().enumerate() {
            pos.insert(e, p);
        }
        let mut pairs = Vec::new();
        for (p, &e) in movable.iter().enumerate() {
            for &(f, c) in stats.neighbors(e) {
                if let Some(&q) = pos.get(&f) {
                    if p < q {
                        pairs.push((p, q, c));
                    }
                }
            }
        }
        pairs.sort_unstable();
        Ok(Self { movable, slots, context, penalty, pairs, lambda1: weights.lambda1, lambda2: weights.lambda2 })
    }

    fn ns(&self) -> usize {
        self.slots.len()
    }

    /// Objective cost of placing movable `p` at offered slot `q`, context only.
    pub fn placement_cost(&self, p: usize, q: usize) -> f64 {
        let [c0, c1, c2] = self.context[p * self.ns() + q];
        self.lambda1 * c0 as f64 + c1 as f64 + self.lambda2 * c2 as f64 + self.penalty[p * self.ns() + q]
    }

    /// Objective of an assignment given as calendar slots per movable exam,
    /// computed directly.
    pub fn objective_of(&self, slot_of: &[usize]) -> f64 {
        let q_of = |s: usize| self.slots.binary_search(&s).expect("offered slot");
        let mut total: f64 = slot_of.iter().enumerate().map(|(p, &s)| self.placement_cost(p, q_of(s))).sum();
        for &(a, b, c) in &self.pairs {
            total += self.pair_cost(slot_of[a].abs_diff(slot_of[b]), c);
        }
        total
    }

    fn pair_cost(&self, d: usize, c: u32) -> f64 {
        let c = f64::from(c);
        match d {
            0 => self.lambda1 * c,
            1 => c,
            2 => self.lambda2 * c,
            _ => 0.0,
        }
    }

    /// Move single exams to their cheapest slot until no move helps or
    /// `rounds` passes are done. Returns whether anything moved.
    pub fn improve_by_moves(&self, slot_of: &mut [usize], rounds: usize) -> bool {
        let mut adj = vec![Vec::new(); self.movable.len()];
        for &(a, b, c) in &self.pairs {
            adj[a].push((b, c));
            adj[b].push((a, c));
        }
        let mut moved_any = false;
        for _ in 0..rounds {
            let mut moved = false;
            for p in 0..self.movable.len() {
                let cost = |q: usize| {
                    let s = self.slots[q];
                    self.placement_cost(p, q)
                        + adj[p].iter().map(|&(o, c)| self.pair_cost(s.abs_diff(slot_of[o]), c)).sum::<f64>()
                };
                let cur = self.slots.binary_search(&slot_of[p]).expect("offered slot");
                let (best, best_cost) = (0..self.ns())
                    .map(|q| (q, cost(q)))
                    .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
                    .expect("slots exist");
                if best_cost < cost(cur) - 1e-9 {
                    slot_of[p] = self.slots[best];
                    moved = true;
                }
            }
            moved_any |= moved;
            if !moved {
                break;
            }
        }
        moved_any
    }

    pub fn build_model(&self) -> Result<(MipModel, usize), MipError> {
        let (n, ns) = (self.movable.len(), self.ns());
        let mut m = MipModel::new("schedule_ip");
        for p in 0..n {
            for q in 0..ns {
                m.add_var(format!("x[{},{}]", self.movable[p], self.slots[q]), self.placement_cost(p, q));
            }
        }
        let x = |p: usize, q: usize| VarId((p * ns + q) as u32);
        for p in 0..n {
            m.add_constraint(format!("one_slot[{}]", self.movable[p]), (0..ns).map(|q| (x(p, q), 1)).collect(), Sense::Eq, 1)?;
        }
        // offered slot pairs at distance 1 and 2
        let gap = |d: usize| -> Vec<(usize, usize)> {
            (0..ns)
                .filter_map(|q| self.slots.binary_search(&(self.slots[q] + d)).ok().map(|r| (q, r)))
                .collect()
        };
        let (gap1, gap2) = (gap(1), gap(2));
        for &(a, b, c) in &self.pairs {
            let (ea, eb) = (self.movable[a], self.movable[b]);
            let c = f64::from(c);
            let y = m.add_var(format!("y[{ea},{eb}]"), self.lambda1 * c);
            for q in 0..ns {
                m.add_constraint(format!("same[{ea},{eb},{q}]"), vec![(x(a, q), 1), (x(b, q), 1), (y, -1)], Sense::Le, 1)?;
            }
            for (name, d, cost, gaps) in [("z", 1, c, &gap1), ("w", 2, self.lambda2 * c, &gap2)] {
                if gaps.is_empty() || cost <= 0.0 {
                    continue;
                }
                let v = m.add_var(format!("{name}[{ea},{eb}]"), cost);
                for &(q, r) in gaps.iter() {
                    for (u, w) in [(a, b), (b, a)] {
                        m.add_constraint(
                            format!("{name}_link[{},{},{q}+{d}]", self.movable[u], self.movable[w]),
                            vec![(x(u, q), 1), (x(w, r), 1), (v, -1)],
                            Sense::Le,
                            1,
                        )?;
                    }
                }
            }
        }
        Ok((m, n * ns))
    }

    fn encode(&self, m: &MipModel, slot_of: &[usize]) -> Result<Vec<bool>, ScheduleIpError> {
        let ns = self.ns();
        let mut a = vec![false; m.num_vars()];
        let mut qs = Vec::with_capacity(slot_of.len());
        for (p, &s) in slot_of.iter().enumerate() {
            let q = self
                .slots
                .binary_search(&s)
                .map_err(|_| ScheduleIpError::WarmStartSlot { exam: self.movable[p], slot: s })?;
            a[p * ns + q] = true;
            qs.push(q);
        }
        // pair variables are the minimum values their rows allow
        for c in m.constraints().iter().skip(self.movable.len()) {
            let (last, _) = *c.terms.last().expect("link row");
            if c.terms[..c.terms.len() - 1].iter().all(|&(v, _)| a[v.index()]) {
                a[last.index()] = true;
            }
        }
        Ok(a)
    }
}

#[derive(Debug, Clone)]
pub struct ScheduleIpResult {
    /// Calendar slot per movable exam.
    pub slots: Vec<usize>,
    pub objective: f64,
    pub warm_objective: Option<f64>,
    pub status: SolveStatus,
    pub nodes: u64,
}

/// Solve a rescheduling instance. The warm start, given as calendar slots per
/// movable exam, is first improved by single-exam moves and then handed to
/// the solver, so the result is never worse than it.
pub fn solve_schedule_ip(
    inst: &ScheduleIpInstance,
    warm_start: Option<&[usize]>,
    limits: &SolveLimits,
    backend: &dyn Backend,
) -> Result<ScheduleIpResult, ScheduleIpError> {
    if inst.movable.is_empty() {
        return Ok(ScheduleIpResult { slots: Vec::new(), objective: 0.0, warm_objective: Some(0.0), status: SolveStatus::Optimal, nodes: 0 });
    }
    let (mut m, num_x) = inst.build_model()?;
    let mut warm_objective = None;
    if let Some(ws) = warm_start {
        inst.encode(&m, ws)?;
        warm_objective = Some(inst.objective_of(ws));
        let mut polished = ws.to_vec();
        inst.improve_by_moves(&mut polished, 50);
        m.set_warm_start(inst.encode(&m, &polished)?)?;
    }
    let r = mip::solve(&m, limits, backend)?;
    let a = r.assignment.as_ref().ok_or(ScheduleIpError::NoIncumbent(r.status))?;
    let ns = inst.ns();
    let slots: Vec<usize> = (0..inst.movable.len())
        .map(|p| (0..ns).find(|&q| a[p * ns + q]).map(|q| inst.slots[q]).expect("one slot per exam"))
        .collect();
    debug_assert!(num_x == inst.movable.len() * ns);
    let objective = inst.objective_of(&slots);
    Ok(ScheduleIpResult { slots, objective, warm_objective, status: r.status, nodes: r.nodes })
}
