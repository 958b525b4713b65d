//! Exact branch-and-bound for pure binary programs.
//!
//! Depth-first search with bound propagation on every row, n-ary branching on
//! set-partitioning rows (`sum x = 1` with unit coefficients), probing-based
//! child ordering, and an objective bound that adds the cheapest remaining
//! member of a family of disjoint nonnegative-cost partition rows. All work
//! is deterministic: the node budget, not the clock, decides where a limited
//! search stops (the wall-clock limit is a backstop).

use std::time::{Duration, Instant};

use super::model::{MipModel, Sense};
use super::{SolveResult, SolveStatus};

const FREE: i8 = -1;
const PROBE_MAX: usize = 256;
const GROUP_BOUND_MAX_MEMBERS: usize = 50_000;

#[derive(Debug, Clone, Copy, Default)]
pub struct SearchLimits {
    pub node_limit: Option<u64>,
    pub time_limit: Option<Duration>,
}

struct Row {
    terms: Vec<(u32, i64)>,
    rhs: i64,
    max_abs: i64,
}

#[derive(Clone, Copy)]
enum Decision {
    One(u32),
    Val(u32, bool),
}

struct Frame {
    trail_len: usize,
    children: Vec<Decision>,
    next: usize,
    cursor: usize,
}

enum Branch {
    Leaf,
    Children(Vec<Decision>, usize),
    Dead,
}

struct Search<'a> {
    model: &'a MipModel,
    cost: &'a [f64],
    rows: Vec<Row>,
    col_rows: Vec<Vec<(u32, i64)>>,
    min_act: Vec<i64>,
    dom: Vec<i8>,
    trail: Vec<u32>,
    obj_lb: f64,
    groups: Vec<Vec<u32>>,
    col_groups: Vec<Vec<u32>>,
    group_free: Vec<u32>,
    group_ones: Vec<u32>,
    bound_groups: Vec<u32>,
    queue: Vec<u32>,
    in_queue: Vec<bool>,
    warm: Option<&'a [bool]>,
    best: Option<(f64, Vec<bool>)>,
    nodes: u64,
}

fn improves(value: f64, best: f64) -> bool {
    value < best - 1e-9 * best.abs().max(1.0)
}

impl<'a> Search<'a> {
    fn new(model: &'a MipModel) -> Self {
        let n = model.num_vars();
        let mut rows = Vec::new();
        let mut groups = Vec::new();
        for c in model.constraints() {
            let le = |sign: i64, rhs: i64| {
                let terms: Vec<(u32, i64)> =
                    c.terms.iter().filter(|t| t.1 != 0).map(|&(v, a)| (v.0, sign * a)).collect();
                let max_abs = terms.iter().map(|t| t.1.abs()).max().unwrap_or(0);
                Row { terms, rhs, max_abs }
            };
            match c.sense {
                Sense::Le => rows.push(le(1, c.rhs)),
                Sense::Ge => rows.push(le(-1, -c.rhs)),
                Sense::Eq => {
                    rows.push(le(1, c.rhs));
                    rows.push(le(-1, -c.rhs));
                    if c.rhs == 1 && !c.terms.is_empty() && c.terms.iter().all(|t| t.1 == 1) {
                        let mut members: Vec<u32> = c.terms.iter().map(|t| t.0 .0).collect();
                        members.sort_unstable();
                        members.dedup();
                        if members.len() == c.terms.len() {
                            groups.push(members);
                        }
                    }
                }
            }
        }
        let mut col_rows = vec![Vec::new(); n];
        for (r, row) in rows.iter().enumerate() {
            for &(j, a) in &row.terms {
                col_rows[j as usize].push((r as u32, a));
            }
        }
        let mut col_groups = vec![Vec::new(); n];
        for (g, members) in groups.iter().enumerate() {
            for &j in members {
                col_groups[j as usize].push(g as u32);
            }
        }
        let cost = model.objective();
        // disjoint partition rows whose members all have nonnegative cost
        let mut used = vec![false; n];
        let mut bound_groups = Vec::new();
        let mut members_total = 0;
        for (g, members) in groups.iter().enumerate() {
            if members.iter().all(|&j| !used[j as usize] && cost[j as usize] >= 0.0)
                && members.iter().any(|&j| cost[j as usize] > 0.0)
                && members_total + members.len() <= GROUP_BOUND_MAX_MEMBERS
            {
                members_total += members.len();
                for &j in members {
                    used[j as usize] = true;
                }
                bound_groups.push(g as u32);
            }
        }
        let min_act = rows.iter().map(|r| r.terms.iter().map(|t| t.1.min(0)).sum()).collect();
        let obj_lb = model.objective_offset() + cost.iter().map(|&c| c.min(0.0)).sum::<f64>();
        let group_free = groups.iter().map(|g| g.len() as u32).collect();
        let ng = groups.len();
        let nr = rows.len();
        Search {
            model,
            cost,
            rows,
            col_rows,
            min_act,
            dom: vec![FREE; n],
            trail: Vec::new(),
            obj_lb,
            groups,
            col_groups,
            group_free,
            group_ones: vec![0; ng],
            bound_groups,
            queue: Vec::new(),
            in_queue: vec![false; nr],
            warm: model.warm_start(),
            best: None,
            nodes: 0,
        }
    }

    fn fix(&mut self, j: u32, val: bool) {
        let ju = j as usize;
        debug_assert_eq!(self.dom[ju], FREE);
        self.dom[ju] = val as i8;
        self.trail.push(j);
        for k in 0..self.col_rows[ju].len() {
            let (r, a) = self.col_rows[ju][k];
            let delta = if val { a.max(0) } else { (-a).max(0) };
            if delta > 0 {
                self.min_act[r as usize] += delta;
                if !self.in_queue[r as usize] {
                    self.in_queue[r as usize] = true;
                    self.queue.push(r);
                }
            }
        }
        let c = self.cost[ju];
        self.obj_lb += if val { c } else { 0.0 } - c.min(0.0);
        for &g in &self.col_groups[ju] {
            self.group_free[g as usize] -= 1;
            if val {
                self.group_ones[g as usize] += 1;
            }
        }
    }

    fn undo_to(&mut self, len: usize) {
        while self.trail.len() > len {
            let j = self.trail.pop().unwrap();
            let ju = j as usize;
            let val = self.dom[ju] == 1;
            for &(r, a) in &self.col_rows[ju] {
                let delta = if val { a.max(0) } else { (-a).max(0) };
                self.min_act[r as usize] -= delta;
            }
            let c = self.cost[ju];
            self.obj_lb -= if val { c } else { 0.0 } - c.min(0.0);
            for &g in &self.col_groups[ju] {
                self.group_free[g as usize] += 1;
                if val {
                    self.group_ones[g as usize] -= 1;
                }
            }
            self.dom[ju] = FREE;
        }
    }

    fn clear_queue(&mut self) {
        for r in self.queue.drain(..) {
            self.in_queue[r as usize] = false;
        }
    }

    fn propagate(&mut self) -> bool {
        while let Some(r) = self.queue.pop() {
            let ru = r as usize;
            self.in_queue[ru] = false;
            let slack = self.rows[ru].rhs - self.min_act[ru];
            if slack < 0 {
                self.clear_queue();
                return false;
            }
            if self.rows[ru].max_abs <= slack {
                continue;
            }
            for k in 0..self.rows[ru].terms.len() {
                let (j, a) = self.rows[ru].terms[k];
                if self.dom[j as usize] == FREE && a.abs() > slack {
                    self.fix(j, a < 0);
                }
            }
        }
        true
    }

    fn bound(&self) -> f64 {
        let mut b = self.obj_lb;
        for &g in &self.bound_groups {
            if self.group_ones[g as usize] > 0 {
                continue;
            }
            let cheapest = self.groups[g as usize]
                .iter()
                .filter(|&&j| self.dom[j as usize] == FREE)
                .map(|&j| self.cost[j as usize])
                .fold(f64::INFINITY, f64::min);
            if cheapest.is_finite() {
                b += cheapest;
            }
        }
        b
    }

    fn pruned(&self, bound: f64) -> bool {
        match &self.best {
            Some((best, _)) => !improves(bound, *best),
            None => false,
        }
    }

    fn record_leaf(&mut self) {
        let a: Vec<bool> = self.dom.iter().map(|&d| d == 1).collect();
        let value = self.model.objective_value(&a);
        let better = match &self.best {
            Some((best, _)) => improves(value, *best),
            None => true,
        };
        if better {
            self.best = Some((value, a));
        }
    }

    fn select(&mut self, cursor: usize) -> Branch {
        let mut chosen: Option<usize> = None;
        for g in 0..self.groups.len() {
            if self.group_ones[g] == 0 {
                let free = self.group_free[g];
                if free == 0 {
                    return Branch::Dead;
                }
                if chosen.is_none_or(|c| free < self.group_free[c]) {
                    chosen = Some(g);
                }
            }
        }
        if let Some(g) = chosen {
            let members: Vec<u32> =
                self.groups[g].iter().copied().filter(|&j| self.dom[j as usize] == FREE).collect();
            let warm = self.warm;
            let warm_member = move |j: u32| warm.is_some_and(|w| w[j as usize]);
            let mut keyed: Vec<(f64, bool, u32)> = Vec::with_capacity(members.len());
            if members.len() <= PROBE_MAX {
                let len = self.trail.len();
                for &j in &members {
                    self.fix(j, true);
                    let ok = self.propagate();
                    let lb = self.obj_lb;
                    self.undo_to(len);
                    if ok && !self.pruned(lb) {
                        keyed.push((lb, !warm_member(j), j));
                    }
                }
            } else {
                for &j in &members {
                    keyed.push((self.cost[j as usize], !warm_member(j), j));
                }
            }
            if keyed.is_empty() {
                return Branch::Dead;
            }
            keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
            return Branch::Children(keyed.into_iter().map(|k| Decision::One(k.2)).collect(), cursor);
        }
        let mut j = cursor;
        while j < self.dom.len() && self.dom[j] != FREE {
            j += 1;
        }
        if j == self.dom.len() {
            return Branch::Leaf;
        }
        let first = match self.warm {
            Some(w) => w[j],
            None => self.cost[j] < 0.0,
        };
        Branch::Children(vec![Decision::Val(j as u32, first), Decision::Val(j as u32, !first)], j + 1)
    }

    fn apply(&mut self, d: Decision) {
        match d {
            Decision::One(j) => self.fix(j, true),
            Decision::Val(j, v) => self.fix(j, v),
        }
    }
}

pub(crate) fn branch_and_bound(model: &MipModel, limits: &SearchLimits) -> SolveResult {
    let start = Instant::now();
    let mut s = Search::new(model);

    let finish = |s: Search, status_if_done: bool, root_bound: f64| -> SolveResult {
        let wall_time = start.elapsed();
        let nodes = s.nodes;
        match s.best {
            Some((obj, a)) => SolveResult {
                status: if status_if_done { SolveStatus::Optimal } else { SolveStatus::Feasible },
                bound: if status_if_done { obj } else { root_bound.min(obj) },
                objective: Some(obj),
                assignment: Some(a),
                wall_time,
                nodes,
            },
            None => SolveResult {
                status: if status_if_done { SolveStatus::Infeasible } else { SolveStatus::TimeLimitNoSolution },
                bound: if status_if_done { f64::INFINITY } else { root_bound },
                objective: None,
                assignment: None,
                wall_time,
                nodes,
            },
        }
    };

    if let Some(w) = model.warm_start() {
        if model.constraints().iter().all(|c| c.is_satisfied(w))
            && model.fixings().iter().zip(w).all(|(f, &v)| f.is_none_or(|x| x == v))
        {
            s.best = Some((model.objective_value(w), w.to_vec()));
        }
    }

    for (j, f) in model.fixings().iter().enumerate() {
        if let Some(v) = *f {
            s.fix(j as u32, v);
        }
    }
    for r in 0..s.rows.len() {
        if !s.in_queue[r] {
            s.in_queue[r] = true;
            s.queue.push(r as u32);
        }
    }
    if !s.propagate() {
        return finish(s, true, f64::INFINITY);
    }
    let root_bound = s.bound();
    if s.pruned(root_bound) {
        return finish(s, true, root_bound);
    }

    let mut stack: Vec<Frame> = Vec::new();
    match s.select(0) {
        Branch::Leaf => {
            s.record_leaf();
            return finish(s, true, root_bound);
        }
        Branch::Dead => return finish(s, true, root_bound),
        Branch::Children(children, cursor) => {
            stack.push(Frame { trail_len: s.trail.len(), children, next: 0, cursor })
        }
    }

    let mut stopped = false;
    while let Some(frame) = stack.last_mut() {
        if frame.next >= frame.children.len() {
            stack.pop();
            continue;
        }
        let child = frame.children[frame.next];
        frame.next += 1;
        let (trail_len, cursor) = (frame.trail_len, frame.cursor);
        s.undo_to(trail_len);

        s.nodes += 1;
        if limits.node_limit.is_some_and(|n| s.nodes > n)
            || (s.nodes % 64 == 0 && limits.time_limit.is_some_and(|t| start.elapsed() >= t))
        {
            stopped = true;
            break;
        }

        s.apply(child);
        if !s.propagate() {
            continue;
        }
        if s.pruned(s.bound()) {
            continue;
        }
        match s.select(cursor) {
            Branch::Leaf => s.record_leaf(),
            Branch::Dead => {}
            Branch::Children(children, cursor) => {
                stack.push(Frame { trail_len: s.trail.len(), children, next: 0, cursor })
            }
        }
    }
    finish(s, !stopped, root_bound)
}
