use std::fmt;

use super::MipError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub u32);

impl VarId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub name: String,
    pub terms: Vec<(VarId, i64)>,
    pub sense: Sense,
    pub rhs: i64,
}

impl LinearConstraint {
    pub fn activity(&self, a: &[bool]) -> i64 {
        self.terms.iter().filter(|(v, _)| a[v.index()]).map(|&(_, c)| c).sum()
    }

    pub fn is_satisfied(&self, a: &[bool]) -> bool {
        let act = self.activity(a);
        match self.sense {
            Sense::Le => act <= self.rhs,
            Sense::Eq => act == self.rhs,
            Sense::Ge => act >= self.rhs,
        }
    }
}

/// Binary integer program: minimize `c·x + offset` subject to integer linear rows.
#[derive(Debug, Clone, Default)]
pub struct MipModel {
    name: String,
    var_names: Vec<String>,
    objective: Vec<f64>,
    objective_offset: f64,
    constraints: Vec<LinearConstraint>,
    fixed: Vec<Option<bool>>,
    warm_start: Option<Vec<bool>>,
}

impl MipModel {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), ..Self::default() }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn add_var(&mut self, name: impl Into<String>, cost: f64) -> VarId {
        let id = VarId(self.var_names.len() as u32);
        self.var_names.push(name.into());
        self.objective.push(cost);
        self.fixed.push(None);
        if let Some(ws) = self.warm_start.as_mut() {
            ws.push(false);
        }
        id
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(VarId, i64)>,
        sense: Sense,
        rhs: i64,
    ) -> Result<usize, MipError> {
        let name = name.into();
        if let Some((v, _)) = terms.iter().find(|(v, _)| v.index() >= self.var_names.len()) {
            return Err(MipError::UnknownVariable { constraint: name, var: v.0 });
        }
        self.constraints.push(LinearConstraint { name, terms, sense, rhs });
        Ok(self.constraints.len() - 1)
    }

    pub fn add_objective_offset(&mut self, offset: f64) {
        self.objective_offset += offset;
    }

    pub fn set_cost(&mut self, var: VarId, cost: f64) {
        self.objective[var.index()] = cost;
    }

    pub fn fix(&mut self, var: VarId, value: bool) {
        self.fixed[var.index()] = Some(value);
    }

    /// Install a full warm-start assignment. It must respect every fixing.
    pub fn set_warm_start(&mut self, assignment: Vec<bool>) -> Result<(), MipError> {
        if assignment.len() != self.num_vars() {
            return Err(MipError::AssignmentLength { expected: self.num_vars(), found: assignment.len() });
        }
        if let Some(i) = (0..self.num_vars()).find(|&i| self.fixed[i].is_some_and(|v| v != assignment[i])) {
            return Err(MipError::WarmStartViolatesFixing(self.var_names[i].clone()));
        }
        self.warm_start = Some(assignment);
        Ok(())
    }

    pub fn clear_warm_start(&mut self) {
        self.warm_start = None;
    }

    pub fn warm_start(&self) -> Option<&[bool]> {
        self.warm_start.as_deref()
    }

    pub fn num_vars(&self) -> usize {
        self.var_names.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn var_name(&self, var: VarId) -> &str {
        &self.var_names[var.index()]
    }

    pub fn var_names(&self) -> &[String] {
        &self.var_names
    }

    pub fn cost(&self, var: VarId) -> f64 {
        self.objective[var.index()]
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn objective_offset(&self) -> f64 {
        self.objective_offset
    }

    pub fn constraints(&self) -> &[LinearConstraint] {
        &self.constraints
    }

    pub fn fixed(&self, var: VarId) -> Option<bool> {
        self.fixed[var.index()]
    }

    pub fn fixings(&self) -> &[Option<bool>] {
        &self.fixed
    }

    pub fn num_free(&self) -> usize {
        self.fixed.iter().filter(|f| f.is_none()).count()
    }

    pub fn objective_value(&self, a: &[bool]) -> f64 {
        self.objective_offset
            + self.objective.iter().zip(a).filter(|(_, &x)| x).map(|(&c, _)| c).sum::<f64>()
    }
}
