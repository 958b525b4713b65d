use std::time::Instant;

use highs::{HighsModelStatus, RowProblem, Sense as HSense};

use super::model::{MipModel, Sense};
use super::{Backend, MipError, SolveLimits, SolveResult, SolveStatus};

/// HiGHS linked in-process.
#[derive(Debug, Clone, Copy, Default)]
pub struct HighsBackend;

impl Backend for HighsBackend {
    fn name(&self) -> &'static str {
        "highs"
    }

    fn solve(&self, m: &MipModel, limits: &SolveLimits) -> Result<SolveResult, MipError> {
        let start = Instant::now();
        let mut pb = RowProblem::default();
        let cols: Vec<_> = (0..m.num_vars())
            .map(|i| {
                let c = m.objective()[i];
                match m.fixings()[i] {
                    Some(v) => pb.add_integer_column(c, (v as u8 as f64)..=(v as u8 as f64)),
                    None => pb.add_integer_column(c, 0.0..=1.0),
                }
            })
            .collect();
        for c in m.constraints() {
            let terms: Vec<_> = c.terms.iter().map(|&(v, a)| (cols[v.index()], a as f64)).collect();
            let rhs = c.rhs as f64;
            match c.sense {
                Sense::Le => pb.add_row(..=rhs, terms),
                Sense::Ge => pb.add_row(rhs.., terms),
                Sense::Eq => pb.add_row(rhs..=rhs, terms),
            }
        }
        let mut model = pb.try_optimise(HSense::Minimise).map_err(|e| MipError::Backend(format!("{e:?}")))?;
        model.make_quiet();
        model.set_option("threads", 1);
        model.set_option("random_seed", 0);
        if let Some(t) = limits.time_limit {
            model.set_option("time_limit", t.as_secs_f64());
        }
        if let Some(ws) = m.warm_start() {
            let vals: Vec<f64> = ws.iter().map(|&b| b as u8 as f64).collect();
            model
                .try_set_solution(Some(&vals), None, None, None)
                .map_err(|e| MipError::Backend(format!("warm start rejected: {e:?}")))?;
        }
        let solved = model.try_solve().map_err(|e| MipError::Backend(format!("{e:?}")))?;
        let status = solved.status();
        let values = solved.get_solution();
        let cols = values.columns();
        let has_point = cols.len() == m.num_vars() && cols.iter().all(|v| v.is_finite());
        let assignment: Option<Vec<bool>> = has_point.then(|| cols.iter().map(|&v| v > 0.5).collect());
        let assignment = assignment.filter(|a| super::verify_assignment(m, a).is_ok_and(|v| v.feasible));
        let objective = assignment.as_ref().map(|a| m.objective_value(a));
        let status = match (status, &assignment) {
            (HighsModelStatus::Optimal, Some(_)) => SolveStatus::Optimal,
            (HighsModelStatus::Infeasible, _) => SolveStatus::Infeasible,
            (_, Some(_)) => SolveStatus::Feasible,
            (HighsModelStatus::ReachedTimeLimit, None) | (HighsModelStatus::ReachedIterationLimit, None) => {
                SolveStatus::TimeLimitNoSolution
            }
            (other, None) => return Err(MipError::Backend(format!("HiGHS finished with status {other:?}"))),
        };
        let bound = match (status, objective) {
            (SolveStatus::Optimal, Some(o)) => o,
            (_, Some(o)) => o - solved.mip_gap().abs() * o.abs(),
            (SolveStatus::Infeasible, None) => f64::INFINITY,
            _ => f64::NEG_INFINITY,
        };
        Ok(SolveResult { status, assignment, objective, bound, wall_time: start.elapsed(), nodes: 0 })
    }
}
