//! Solver-agnostic binary programs, a pluggable backend contract, and the
//! built-in exact solver used as an oracle.

mod lp;
mod model;
mod oracle;

#[cfg(feature = "highs")]
mod highs_backend;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use lp::write_lp;
pub use model::{LinearConstraint, MipModel, Sense, VarId};
pub use oracle::SearchLimits;

/// Largest number of free variables `exact_mini_solve` accepts without override.
pub const EXACT_SIZE_GUARD: usize = 25;

#[derive(Debug, Error)]
pub enum MipError {
    #[error("constraint `{constraint}` references undeclared variable {var}")]
    UnknownVariable { constraint: String, var: u32 },
    #[error("assignment has {found} values, model has {expected} variables")]
    AssignmentLength { expected: usize, found: usize },
    #[error("warm start contradicts fixing of `{0}`")]
    WarmStartViolatesFixing(String),
    #[error("model has {free} free variables, above the exact-solver guard of {guard}")]
    SizeGuard { free: usize, guard: usize },
    #[error("solver backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("solver backend failed: {0}")]
    Backend(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Feasible,
    Infeasible,
    TimeLimitNoSolution,
}

impl SolveStatus {
    pub fn has_solution(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::Feasible)
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub assignment: Option<Vec<bool>>,
    pub objective: Option<f64>,
    pub bound: f64,
    pub wall_time: Duration,
    pub nodes: u64,
}

impl SolveResult {
    pub fn value(&self, var: VarId) -> bool {
        self.assignment.as_ref().is_some_and(|a| a[var.index()])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Violation {
    Constraint(usize),
    Fixing(VarId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verification {
    pub feasible: bool,
    pub violated: Vec<Violation>,
}

/// Check an assignment against every row and fixing, in exact integer arithmetic.
pub fn verify_assignment(m: &MipModel, a: &[bool]) -> Result<Verification, MipError> {
    if a.len() != m.num_vars() {
        return Err(MipError::AssignmentLength { expected: m.num_vars(), found: a.len() });
    }
    let mut violated: Vec<Violation> = m
        .constraints()
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_satisfied(a))
        .map(|(i, _)| Violation::Constraint(i))
        .collect();
    violated.extend(
        m.fixings()
            .iter()
            .enumerate()
            .filter(|&(i, f)| f.is_some_and(|v| v != a[i]))
            .map(|(i, _)| Violation::Fixing(VarId(i as u32))),
    );
    Ok(Verification { feasible: violated.is_empty(), violated })
}

/// Solve to proven optimality by branch and bound. Refuses models with more
/// than [`EXACT_SIZE_GUARD`] free variables unless `allow_large` is set.
pub fn exact_mini_solve(m: &MipModel) -> Result<SolveResult, MipError> {
    exact_mini_solve_with(m, false)
}

pub fn exact_mini_solve_with(m: &MipModel, allow_large: bool) -> Result<SolveResult, MipError> {
    let free = m.num_free();
    if !allow_large && free > EXACT_SIZE_GUARD {
        return Err(MipError::SizeGuard { free, guard: EXACT_SIZE_GUARD });
    }
    Ok(oracle::branch_and_bound(m, &SearchLimits::default()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveLimits {
    pub time_limit: Option<Duration>,
    /// Deterministic work budget; backends that cannot honor it ignore it.
    pub node_limit: Option<u64>,
}

impl SolveLimits {
    pub fn unlimited() -> Self {
        Self { time_limit: None, node_limit: None }
    }

    pub fn seconds(secs: f64) -> Self {
        Self { time_limit: Some(Duration::from_secs_f64(secs.max(0.0))), node_limit: None }
    }

    pub fn with_nodes(mut self, nodes: u64) -> Self {
        self.node_limit = Some(nodes);
        self
    }
}

pub trait Backend: Send + Sync {
    fn name(&self) -> &'static str;
    fn solve(&self, model: &MipModel, limits: &SolveLimits) -> Result<SolveResult, MipError>;
}

/// The built-in branch and bound. Without an explicit node limit, the time
/// limit is converted to a node budget at `nodes_per_second`, so results
/// depend only on the model and the limit, never on machine speed.
#[derive(Debug, Clone, Copy)]
pub struct OracleBackend {
    pub nodes_per_second: u64,
}

impl Default for OracleBackend {
    fn default() -> Self {
        Self { nodes_per_second: 2_000 }
    }
}

impl Backend for OracleBackend {
    fn name(&self) -> &'static str {
        "oracle"
    }

    fn solve(&self, model: &MipModel, limits: &SolveLimits) -> Result<SolveResult, MipError> {
        let node_limit = limits.node_limit.or_else(|| {
            limits.time_limit.map(|t| ((t.as_secs_f64() * self.nodes_per_second as f64).ceil() as u64).max(1))
        });
        // the clock only backstops runaway nodes; allow generous slack
        let time_limit = limits.time_limit.map(|t| t.saturating_mul(4).max(Duration::from_secs(1)));
        Ok(oracle::branch_and_bound(model, &SearchLimits { node_limit, time_limit }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    #[default]
    Oracle,
    External,
}

impl std::str::FromStr for BackendKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "oracle" => Ok(BackendKind::Oracle),
            "external" | "highs" => Ok(BackendKind::External),
            other => Err(format!("unknown backend `{other}` (expected oracle or external)")),
        }
    }
}

impl std::fmt::Display for BackendKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BackendKind::Oracle => "oracle",
            BackendKind::External => "external",
        })
    }
}

/// Environment variable consulted for the default backend.
pub const BACKEND_ENV: &str = "EXAMSCHED_BACKEND";

impl BackendKind {
    pub fn from_env() -> Result<Self, MipError> {
        match std::env::var(BACKEND_ENV) {
            Ok(v) if !v.is_empty() => v.parse().map_err(MipError::BackendUnavailable),
            _ => Ok(BackendKind::Oracle),
        }
    }
}

pub fn make_backend(kind: BackendKind) -> Result<Box<dyn Backend>, MipError> {
    match kind {
        BackendKind::Oracle => Ok(Box::new(OracleBackend::default())),
        #[cfg(feature = "highs")]
        BackendKind::External => Ok(Box::new(highs_backend::HighsBackend)),
        #[cfg(not(feature = "highs"))]
        BackendKind::External => Err(MipError::BackendUnavailable(
            "built without the `highs` feature; rebuild with --features highs".into(),
        )),
    }
}

/// Solve through `backend`, then check the answer independently and keep the
/// warm start whenever the backend returns nothing better.
pub fn solve(m: &MipModel, limits: &SolveLimits, backend: &dyn Backend) -> Result<SolveResult, MipError> {
    let mut result = backend.solve(m, limits)?;
    if let Some(a) = &result.assignment {
        let check = verify_assignment(m, a)?;
        if !check.feasible {
            return Err(MipError::Backend(format!(
                "{} returned an assignment violating {} constraint(s)",
                backend.name(),
                check.violated.len()
            )));
        }
        result.objective = Some(m.objective_value(a));
    }
    if let Some(ws) = m.warm_start() {
        if verify_assignment(m, ws)?.feasible {
            let ws_obj = m.objective_value(ws);
            let keep_warm = match result.objective {
                Some(obj) => obj > ws_obj,
                None => true,
            };
            if keep_warm {
                if result.status == SolveStatus::Infeasible {
                    log::warn!("{}: backend reported infeasible but the warm start is feasible", m.name());
                }
                result.status = SolveStatus::Feasible;
                result.assignment = Some(ws.to_vec());
                result.objective = Some(ws_obj);
                result.bound = result.bound.min(ws_obj);
            }
        }
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oracle() -> OracleBackend {
        OracleBackend::default()
    }

    #[test]
    fn single_variable_min() {
        let mut m = MipModel::new("t");
        let x = m.add_var("x", 1.0);
        let r = solve(&m, &SolveLimits::unlimited(), &oracle()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!(!r.value(x));
        assert_eq!(r.objective, Some(0.0));
        let r = exact_mini_solve(&m).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
    }

    #[test]
    fn contradictory_equalities_infeasible() {
        let mut m = MipModel::new("t");
        let x = m.add_var("x", 1.0);
        m.add_constraint("one", vec![(x, 1)], Sense::Eq, 1).unwrap();
        m.add_constraint("zero", vec![(x, 1)], Sense::Eq, 0).unwrap();
        assert_eq!(solve(&m, &SolveLimits::unlimited(), &oracle()).unwrap().status, SolveStatus::Infeasible);
        assert_eq!(exact_mini_solve(&m).unwrap().status, SolveStatus::Infeasible);
    }

    #[test]
    fn all_fixed_model() {
        let mut m = MipModel::new("t");
        let x = m.add_var("x", 2.0);
        let y = m.add_var("y", 3.0);
        m.add_constraint("c", vec![(x, 1), (y, 1)], Sense::Le, 1).unwrap();
        m.fix(x, true);
        m.fix(y, false);
        let r = exact_mini_solve(&m).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert_eq!(r.objective, Some(2.0));
        m.fix(y, true);
        assert_eq!(exact_mini_solve(&m).unwrap().status, SolveStatus::Infeasible);
    }

    #[test]
    fn verify_reports_violations() {
        let mut m = MipModel::new("t");
        let x = m.add_var("x", 0.0);
        let y = m.add_var("y", 0.0);
        m.add_constraint("sum", vec![(x, 1), (y, 1)], Sense::Eq, 1).unwrap();
        m.add_constraint("le", vec![(x, 1)], Sense::Le, 1).unwrap();
        assert_eq!(
            verify_assignment(&m, &[true, false]).unwrap(),
            Verification { feasible: true, violated: vec![] }
        );
        let v = verify_assignment(&m, &[true, true]).unwrap();
        assert!(!v.feasible);
        assert_eq!(v.violated, vec![Violation::Constraint(0)]);
        assert!(matches!(verify_assignment(&m, &[true]), Err(MipError::AssignmentLength { .. })));
    }

    #[test]
    fn unknown_variable_rejected() {
        let mut m = MipModel::new("t");
        assert!(m.add_constraint("c", vec![(VarId(3), 1)], Sense::Le, 1).is_err());
    }

    #[test]
    fn size_guard() {
        let mut m = MipModel::new("t");
        for i in 0..30 {
            m.add_var(format!("x{i}"), 1.0);
        }
        assert!(matches!(exact_mini_solve(&m), Err(MipError::SizeGuard { .. })));
        assert_eq!(exact_mini_solve_with(&m, true).unwrap().status, SolveStatus::Optimal);
    }

    #[test]
    fn warm_start_is_kept_when_search_is_cut_short() {
        let mut m = MipModel::new("t");
        let vars: Vec<VarId> = (0..12).map(|i| m.add_var(format!("x{i}"), (i % 5) as f64 + 1.0)).collect();
        m.add_constraint("pick4", vars.iter().map(|&v| (v, 1)).collect(), Sense::Ge, 4).unwrap();
        let mut ws = vec![false; 12];
        for i in [0, 5, 10, 1] {
            ws[i] = true;
        }
        let ws_obj = m.objective_value(&ws);
        m.set_warm_start(ws).unwrap();
        let r = solve(&m, &SolveLimits::unlimited().with_nodes(1), &oracle()).unwrap();
        assert!(r.objective.unwrap() <= ws_obj);
        let full = solve(&m, &SolveLimits::unlimited(), &oracle()).unwrap();
        assert_eq!(full.status, SolveStatus::Optimal);
        // costs cycle 1..=5; the four cheapest are 1, 1, 1, 2
        assert_eq!(full.objective, Some(5.0));
    }

    #[test]
    fn warm_start_must_respect_fixings() {
        let mut m = MipModel::new("t");
        let x = m.add_var("x", 1.0);
        m.fix(x, true);
        assert!(m.set_warm_start(vec![false]).is_err());
    }

    #[test]
    fn backend_kind_parsing() {
        assert_eq!("oracle".parse::<BackendKind>().unwrap(), BackendKind::Oracle);
        assert_eq!("external".parse::<BackendKind>().unwrap(), BackendKind::External);
        assert!("gurobi".parse::<BackendKind>().is_err());
    }
}
