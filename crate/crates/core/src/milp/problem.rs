use std::collections::HashMap;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VarKind {
    Binary,
    Continuous,
}

/// What a variable stands for in an encoding; only used for bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum VarRole {
    Value,
    Admit,
    DualUpper,
    DualLower,
    DualFree,
    Product,
    Gate,
    Rank,
    Witness,
    Mode,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ConstraintRole {
    Admit,
    Threshold,
    Pin,
    /// One robust inequality of the vertex encoding at (state, action).
    Vertex {
        state: usize,
        action: usize,
    },
    /// The dualized robust inequality at (state, action).
    DualRobust {
        state: usize,
        action: usize,
    },
    DualFeasibility,
    Linearization,
    Ranking,
    /// Lazily added cut forbidding a positive value inside an admitted trap.
    TrapCut,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
    pub role: VarRole,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Constraint {
    pub name: String,
    /// (coefficient, variable index), at most one entry per variable.
    pub terms: Vec<(f64, usize)>,
    pub sense: Sense,
    pub rhs: f64,
    pub role: ConstraintRole,
}

impl Constraint {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(c, v)| c * values[v]).sum()
    }

    /// Amount by which `values` violates the constraint (0 when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let a = self.activity(values);
        match self.sense {
            Sense::Le => (a - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - a).max(0.0),
            Sense::Eq => (a - self.rhs).abs(),
        }
    }
}

/// A maximization MILP.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MilpProblem {
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    pub objective: Vec<(f64, usize)>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

/// Keeps `[A-Za-z0-9_]`, replacing everything else by `_`.
pub fn sanitize_name(name: &str) -> String {
    let mut s: String = name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' }).collect();
    if s.is_empty() || s.starts_with(|c: char| c.is_ascii_digit()) {
        s.insert(0, 'v');
    }
    s
}

impl MilpProblem {
    pub fn new() -> Self {
        Self::default()
    }

    fn unique(&self, name: &str) -> String {
        let base = sanitize_name(name);
        if !self.index.contains_key(&base) {
            return base;
        }
        (2..).map(|i| format!("{base}_{i}")).find(|n| !self.index.contains_key(n)).unwrap()
    }

    pub fn add_var(&mut self, name: &str, kind: VarKind, lower: f64, upper: f64, role: VarRole) -> usize {
        let name = self.unique(name);
        let (lower, upper) = match kind {
            VarKind::Binary => (lower.max(0.0), upper.min(1.0)),
            VarKind::Continuous => (lower, upper),
        };
        let idx = self.variables.len();
        self.index.insert(name.clone(), idx);
        self.variables.push(Variable { name, kind, lower, upper, role });
        idx
    }

    pub fn binary(&mut self, name: &str, role: VarRole) -> usize {
        self.add_var(name, VarKind::Binary, 0.0, 1.0, role)
    }

    pub fn continuous(&mut self, name: &str, lower: f64, upper: f64, role: VarRole) -> usize {
        self.add_var(name, VarKind::Continuous, lower, upper, role)
    }

    /// Adds a constraint; repeated variables in `terms` are merged and zero
    /// coefficients dropped.
    pub fn add_constraint(
        &mut self,
        name: &str,
        terms: Vec<(f64, usize)>,
        sense: Sense,
        rhs: f64,
        role: ConstraintRole,
    ) -> usize {
        let mut merged: Vec<(f64, usize)> = Vec::with_capacity(terms.len());
        for (c, v) in terms {
            match merged.iter_mut().find(|t| t.1 == v) {
                Some(t) => t.0 += c,
                None => merged.push((c, v)),
            }
        }
        merged.retain(|t| t.0 != 0.0);
        let name = sanitize_name(name);
        self.constraints.push(Constraint { name, terms: merged, sense, rhs, role });
        self.constraints.len() - 1
    }

    pub fn set_objective(&mut self, terms: Vec<(f64, usize)>) {
        self.objective = terms;
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.iter().map(|&(c, v)| c * values[v]).sum()
    }

    /// Structural invariants: indices in range, finite coefficients, binary
    /// bounds inside [0, 1].
    pub fn check(&self) -> Result<(), String> {
        let n = self.variables.len();
        for v in &self.variables {
            if v.lower.is_nan() || v.upper.is_nan() || v.lower > v.upper {
                return Err(format!("variable {} has bounds [{}, {}]", v.name, v.lower, v.upper));
            }
            if v.kind == VarKind::Binary && (v.lower < 0.0 || v.upper > 1.0) {
                return Err(format!("binary {} has bounds outside [0, 1]", v.name));
            }
        }
        for c in &self.constraints {
            if !c.rhs.is_finite() {
                return Err(format!("constraint {} has a non-finite right-hand side", c.name));
            }
            for &(a, v) in &c.terms {
                if v >= n || !a.is_finite() {
                    return Err(format!("constraint {} has a bad term", c.name));
                }
            }
        }
        for &(a, v) in &self.objective {
            if v >= n || !a.is_finite() {
                return Err("objective has a bad term".into());
            }
        }
        Ok(())
    }

    /// First constraint, bound, or integrality requirement violated by more
    /// than `tol`, if any.
    pub fn first_violation(&self, values: &[f64], tol: f64) -> Option<String> {
        for (v, x) in self.variables.iter().zip(values) {
            if *x < v.lower - tol || *x > v.upper + tol {
                return Some(format!("bound of {}", v.name));
            }
            if v.kind == VarKind::Binary && (x - x.round()).abs() > tol {
                return Some(format!("integrality of {}", v.name));
            }
        }
        self.constraints.iter().find(|c| c.violation(values) > tol).map(|c| c.name.clone())
    }

    pub(crate) fn rebuild_index(&mut self) {
        self.index = self.variables.iter().enumerate().map(|(i, v)| (v.name.clone(), i)).collect();
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EncodingStats {
    pub binaries: usize,
    pub continuous: usize,
    pub constraints: usize,
    /// Robust inequalities of the vertex encoding or dualized ones.
    pub robust_constraints: usize,
    /// Constraints of the per-pair robust blocks (robust inequalities plus,
    /// for the dual encoding, dual feasibility and linearization).
    pub block_constraints: usize,
    /// Vertex encoding only: (state, action, vertex count).
    pub vertex_counts: Vec<(usize, usize, usize)>,
}

pub fn encoding_stats(problem: &MilpProblem) -> EncodingStats {
    let binaries = problem.variables.iter().filter(|v| v.kind == VarKind::Binary).count();
    let mut stats = EncodingStats {
        binaries,
        continuous: problem.variables.len() - binaries,
        constraints: problem.constraints.len(),
        ..Default::default()
    };
    for c in &problem.constraints {
        match c.role {
            ConstraintRole::Vertex { state, action } => {
                stats.robust_constraints += 1;
                match stats.vertex_counts.last_mut() {
                    Some(last) if last.0 == state && last.1 == action => last.2 += 1,
                    _ => stats.vertex_counts.push((state, action, 1)),
                }
            }
            ConstraintRole::DualRobust { .. } => stats.robust_constraints += 1,
            _ => {}
        }
        match c.role {
            ConstraintRole::Vertex { .. }
            | ConstraintRole::DualRobust { .. }
            | ConstraintRole::DualFeasibility
            | ConstraintRole::Linearization => stats.block_constraints += 1,
            _ => {}
        }
    }
    stats
}
