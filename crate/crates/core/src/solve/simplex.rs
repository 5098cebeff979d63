//! Dense bounded-variable simplex on the tableau B⁻¹[A | I].
//!
//! Every row gets a slack (`≤`: [0, ∞), `≥`: (−∞, 0], `=`: [0, 0]) so the
//! slack basis is always a valid start. Primal feasibility is reached by the
//! dual simplex with zero costs (every basis is dual feasible then), after
//! which the primal simplex optimizes the real objective. Branch-and-bound
//! clones an optimal tableau, fixes bounds, and re-optimizes with the dual
//! simplex.

use crate::error::SolveError;
use crate::milp::{MilpProblem, Sense};

/// Reduced costs and primal values within this are treated as zero/feasible.
const FEAS_TOL: f64 = 1e-9;
const OPT_TOL: f64 = 1e-9;
/// Step lengths below this count as degenerate pivots.
const DEGENERATE_STEP: f64 = 1e-12;
/// Recompute basic values and reduced costs from scratch this often.
const REFRESH_EVERY: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub(crate) struct Tableau {
    m: usize,
    n: usize,
    cols: usize,
    t: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    d: Vec<f64>,
    x: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    basis: Vec<usize>,
    /// Row of a basic variable, `usize::MAX` when nonbasic.
    row_of: Vec<usize>,
    pivot_tol: f64,
    pivots: usize,
    /// Pivots since values and reduced costs were last recomputed.
    stale: usize,
}

impl Tableau {
    pub(crate) fn new(problem: &MilpProblem, pivot_tol: f64) -> Self {
        let m = problem.constraints.len();
        let n = problem.variables.len();
        let cols = n + m;
        let mut t = vec![0.0; m * cols];
        let mut lo = Vec::with_capacity(cols);
        let mut hi = Vec::with_capacity(cols);
        let mut x = Vec::with_capacity(cols);
        for v in &problem.variables {
            lo.push(v.lower);
            hi.push(v.upper);
            x.push(if v.lower.is_finite() {
                v.lower
            } else if v.upper.is_finite() {
                v.upper
            } else {
                0.0
            });
        }
        let mut b = Vec::with_capacity(m);
        for (i, con) in problem.constraints.iter().enumerate() {
            for &(a, j) in &con.terms {
                t[i * cols + j] += a;
            }
            t[i * cols + n + i] = 1.0;
            let (l, u) = match con.sense {
                Sense::Le => (0.0, f64::INFINITY),
                Sense::Ge => (f64::NEG_INFINITY, 0.0),
                Sense::Eq => (0.0, 0.0),
            };
            lo.push(l);
            hi.push(u);
            b.push(con.rhs);
        }
        let mut c = vec![0.0; cols];
        for &(a, j) in &problem.objective {
            c[j] += a;
        }
        x.resize(cols, 0.0);
        let basis: Vec<usize> = (n..cols).collect();
        let mut row_of = vec![usize::MAX; cols];
        for (i, &j) in basis.iter().enumerate() {
            row_of[j] = i;
        }
        let mut tab = Tableau {
            m,
            n,
            cols,
            t,
            b,
            c,
            d: vec![0.0; cols],
            x,
            lo,
            hi,
            basis,
            row_of,
            pivot_tol,
            pivots: 0,
            stale: 0,
        };
        tab.refresh_values();
        tab
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.cols + j]
    }

    fn is_basic(&self, j: usize) -> bool {
        self.row_of[j] != usize::MAX
    }

    fn can_inc(&self, j: usize) -> bool {
        self.x[j] < self.hi[j]
    }

    fn can_dec(&self, j: usize) -> bool {
        self.x[j] > self.lo[j]
    }

    /// x_B = B⁻¹ b − Σ_{j nonbasic} (B⁻¹ a_j) x_j, with B⁻¹ read from the
    /// slack columns.
    fn refresh_values(&mut self) {
        let (n, cols) = (self.n, self.cols);
        let rhs: Vec<(usize, f64)> =
            self.b.iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(k, &v)| (n + k, v)).collect();
        let moved: Vec<(usize, f64)> =
            (0..cols).filter(|&j| self.row_of[j] == usize::MAX && self.x[j] != 0.0).map(|j| (j, self.x[j])).collect();
        for i in 0..self.m {
            let row = &self.t[i * cols..(i + 1) * cols];
            let mut v = 0.0;
            for &(j, bk) in &rhs {
                v += row[j] * bk;
            }
            for &(j, xj) in &moved {
                v -= row[j] * xj;
            }
            let bj = self.basis[i];
            self.x[bj] = v;
        }
    }

    fn refresh(&mut self) {
        self.refresh_values();
        self.refresh_costs();
        self.stale = 0;
    }

    fn refresh_costs(&mut self) {
        let cols = self.cols;
        self.d.copy_from_slice(&self.c);
        for i in 0..self.m {
            let cb = self.c[self.basis[i]];
            if cb == 0.0 {
                continue;
            }
            let row = &self.t[i * cols..(i + 1) * cols];
            for j in 0..cols {
                if row[j] != 0.0 {
                    self.d[j] -= cb * row[j];
                }
            }
        }
        for &j in &self.basis {
            self.d[j] = 0.0;
        }
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let cols = self.cols;
        let p = self.at(r, q);
        let start = r * cols;
        let mut nz = Vec::new();
        for j in 0..cols {
            let v = self.t[start + j];
            if v != 0.0 {
                self.t[start + j] = v / p;
                nz.push(j);
            }
        }
        self.t[start + q] = 1.0;
        let (before, rest) = self.t.split_at_mut(start);
        let (prow, after) = rest.split_at_mut(cols);
        let prow: &[f64] = prow;
        for chunk in before.chunks_mut(cols).chain(after.chunks_mut(cols)) {
            let f = chunk[q];
            if f == 0.0 {
                continue;
            }
            for &j in &nz {
                chunk[j] -= f * prow[j];
            }
            chunk[q] = 0.0;
        }
        let dq = self.d[q];
        if dq != 0.0 {
            for &j in &nz {
                self.d[j] -= dq * prow[j];
            }
            self.d[q] = 0.0;
        }
        let leaving = self.basis[r];
        self.row_of[leaving] = usize::MAX;
        self.basis[r] = q;
        self.row_of[q] = r;
        self.pivots += 1;
        self.stale += 1;
        if self.stale >= REFRESH_EVERY {
            self.refresh();
        }
    }

    fn iteration_cap(&self) -> usize {
        50 * (self.m + self.cols) + 10_000
    }

    fn bland_after(&self) -> usize {
        10 * (self.m + self.cols)
    }

    /// Dual simplex from a dual-feasible basis until primal feasibility.
    pub(crate) fn dual_simplex(&mut self) -> Result<LpStatus, SolveError> {
        let mut degenerate = 0usize;
        for _ in 0..self.iteration_cap() {
            let bland = degenerate > self.bland_after();
            // leaving row
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let j = self.basis[i];
                let v = self.x[j];
                let viol = (self.lo[j] - v).max(v - self.hi[j]);
                if viol > FEAS_TOL {
                    let better = match leave {
                        None => true,
                        Some((li, lv)) => {
                            if bland {
                                j < self.basis[li]
                            } else {
                                viol > lv
                            }
                        }
                    };
                    if better {
                        leave = Some((i, viol));
                    }
                }
            }
            let Some((r, _)) = leave else {
                return Ok(LpStatus::Optimal);
            };
            let jr = self.basis[r];
            let increase = self.x[jr] < self.lo[jr];
            let target = if increase { self.lo[jr] } else { self.hi[jr] };
            // entering column
            let mut enter: Option<(usize, f64, f64)> = None;
            for j in 0..self.cols {
                if self.is_basic(j) {
                    continue;
                }
                let a = self.at(r, j);
                if a.abs() < self.pivot_tol {
                    continue;
                }
                // x_r moves by −a per unit increase of x_j
                let ok = if increase {
                    (a < 0.0 && self.can_inc(j)) || (a > 0.0 && self.can_dec(j))
                } else {
                    (a > 0.0 && self.can_inc(j)) || (a < 0.0 && self.can_dec(j))
                };
                if !ok {
                    continue;
                }
                let ratio = self.d[j].abs() / a.abs();
                let better = match enter {
                    None => true,
                    Some((_, br, ba)) => {
                        if bland {
                            ratio < br - 1e-12
                        } else {
                            ratio < br - 1e-12 || (ratio <= br + 1e-12 && a.abs() > ba)
                        }
                    }
                };
                if better {
                    enter = Some((j, ratio, a.abs()));
                }
            }
            let Some((q, ratio, _)) = enter else {
                return Ok(LpStatus::Infeasible);
            };
            if ratio <= DEGENERATE_STEP {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            let a = self.at(r, q);
            let delta = (self.x[jr] - target) / a;
            self.shift(q, delta);
            self.x[jr] = target;
            self.pivot(r, q);
        }
        Err(SolveError::Numeric("dual simplex iteration limit".into()))
    }

    /// Moves nonbasic `q` by `delta` and updates the basic values.
    fn shift(&mut self, q: usize, delta: f64) {
        if delta == 0.0 {
            return;
        }
        self.x[q] += delta;
        for i in 0..self.m {
            let a = self.at(i, q);
            if a != 0.0 {
                let j = self.basis[i];
                self.x[j] -= a * delta;
            }
        }
    }

    /// Primal simplex from a primal-feasible basis.
    pub(crate) fn primal_simplex(&mut self) -> Result<LpStatus, SolveError> {
        let mut degenerate = 0usize;
        for _ in 0..self.iteration_cap() {
            let bland = degenerate > self.bland_after();
            let mut enter: Option<(usize, f64)> = None;
            for j in 0..self.cols {
                if self.is_basic(j) {
                    continue;
                }
                let dj = self.d[j];
                let ok = (dj > OPT_TOL && self.can_inc(j)) || (dj < -OPT_TOL && self.can_dec(j));
                if !ok {
                    continue;
                }
                if bland {
                    enter = Some((j, dj));
                    break;
                }
                if enter.is_none_or(|(_, bd)| dj.abs() > bd.abs()) {
                    enter = Some((j, dj));
                }
            }
            let Some((q, dq)) = enter else {
                return Ok(LpStatus::Optimal);
            };
            let dir = if dq > 0.0 { 1.0 } else { -1.0 };
            let mut step = self.hi[q] - self.lo[q];
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let a = self.at(i, q);
                if a.abs() < self.pivot_tol {
                    continue;
                }
                let j = self.basis[i];
                let rate = -a * dir;
                let limit = if rate < 0.0 { (self.x[j] - self.lo[j]) / -rate } else { (self.hi[j] - self.x[j]) / rate };
                if !limit.is_finite() && limit > 0.0 {
                    continue;
                }
                let limit = limit.max(0.0);
                let better = match leave {
                    None => limit < step,
                    Some((li, _)) => {
                        if limit < step - 1e-12 {
                            true
                        } else if limit <= step + 1e-12 {
                            if bland {
                                j < self.basis[li]
                            } else {
                                a.abs() > self.at(li, q).abs()
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    step = limit.min(step);
                    leave = Some((i, rate));
                }
            }
            if !step.is_finite() {
                return Ok(LpStatus::Unbounded);
            }
            if step <= DEGENERATE_STEP {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.shift(q, dir * step);
            match leave {
                Some((r, rate)) => {
                    let j = self.basis[r];
                    self.x[j] = if rate < 0.0 { self.lo[j] } else { self.hi[j] };
                    self.pivot(r, q);
                }
                None => {
                    // bound flip
                    self.x[q] = if dir > 0.0 { self.hi[q] } else { self.lo[q] };
                }
            }
        }
        Err(SolveError::Numeric("primal simplex iteration limit".into()))
    }

    /// Phase 1 (dual simplex, zero costs) then phase 2 (primal simplex).
    pub(crate) fn solve(&mut self) -> Result<LpStatus, SolveError> {
        self.d.iter_mut().for_each(|d| *d = 0.0);
        if self.dual_simplex()? == LpStatus::Infeasible {
            return Ok(LpStatus::Infeasible);
        }
        self.refresh_costs();
        self.reoptimize_primal()
    }

    fn reoptimize_primal(&mut self) -> Result<LpStatus, SolveError> {
        for _ in 0..4 {
            match self.primal_simplex()? {
                LpStatus::Optimal => {}
                other => return Ok(other),
            }
            if !self.has_primal_violation() {
                if self.has_dual_violation() {
                    continue;
                }
                return Ok(LpStatus::Optimal);
            }
            // drift left the basis slightly infeasible: repair with the dual
            // simplex, restarting from zero costs if dual feasibility was lost too
            let restart = self.has_dual_violation();
            if restart {
                self.d.iter_mut().for_each(|d| *d = 0.0);
            }
            if self.dual_simplex()? == LpStatus::Infeasible {
                return Ok(LpStatus::Infeasible);
            }
            if restart {
                self.refresh_costs();
            }
        }
        Err(SolveError::Numeric("simplex did not settle".into()))
    }

    fn has_primal_violation(&self) -> bool {
        self.basis.iter().any(|&j| self.x[j] < self.lo[j] - FEAS_TOL || self.x[j] > self.hi[j] + FEAS_TOL)
    }

    fn has_dual_violation(&self) -> bool {
        (0..self.cols).any(|j| {
            !self.is_basic(j) && ((self.d[j] > OPT_TOL && self.can_inc(j)) || (self.d[j] < -OPT_TOL && self.can_dec(j)))
        })
    }

    /// Fixes variable `j` to `v` in an optimal tableau. The basis stays dual
    /// feasible, so [`Tableau::reoptimize`] can continue with the dual simplex.
    pub(crate) fn fix(&mut self, j: usize, v: f64) {
        self.lo[j] = v;
        self.hi[j] = v;
        if !self.is_basic(j) {
            let delta = v - self.x[j];
            self.shift(j, delta);
            self.x[j] = v;
        }
    }

    pub(crate) fn reoptimize(&mut self) -> Result<LpStatus, SolveError> {
        if self.dual_simplex()? == LpStatus::Infeasible {
            return Ok(LpStatus::Infeasible);
        }
        self.reoptimize_primal()
    }

    /// Reduced cost of a nonbasic variable, `None` for basic ones.
    pub(crate) fn reduced_cost(&self, j: usize) -> Option<f64> {
        (!self.is_basic(j)).then(|| self.d[j])
    }

    pub(crate) fn is_fixed(&self, j: usize) -> bool {
        self.lo[j] == self.hi[j]
    }

    pub(crate) fn objective(&self) -> f64 {
        (0..self.n).map(|j| self.c[j] * self.x[j]).sum()
    }

    pub(crate) fn values(&self) -> Vec<f64> {
        self.x[..self.n].to_vec()
    }

    pub(crate) fn value(&self, j: usize) -> f64 {
        self.x[j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::{ConstraintRole, VarRole};

    fn lp(vars: &[(f64, f64)], cons: &[(&[f64], Sense, f64)], obj: &[f64]) -> MilpProblem {
        let mut p = MilpProblem::new();
        let ids: Vec<usize> =
            vars.iter().enumerate().map(|(i, &(l, u))| p.continuous(&format!("v{i}"), l, u, VarRole::Other)).collect();
        for (k, (coef, sense, rhs)) in cons.iter().enumerate() {
            let terms = coef.iter().zip(&ids).map(|(&c, &v)| (c, v)).collect();
            p.add_constraint(&format!("c{k}"), terms, *sense, *rhs, ConstraintRole::Other);
        }
        p.set_objective(obj.iter().zip(&ids).map(|(&c, &v)| (c, v)).collect());
        p
    }

    fn run(p: &MilpProblem) -> (LpStatus, f64, Vec<f64>) {
        let mut t = Tableau::new(p, 1e-9);
        let st = t.solve().unwrap();
        (st, t.objective(), t.values())
    }

    #[test]
    fn textbook_lp() {
        // max 3a + 5b, a ≤ 4, 2b ≤ 12, 3a + 2b ≤ 18 → 36 at (2, 6)
        let p = lp(
            &[(0.0, 100.0), (0.0, 100.0)],
            &[(&[1.0, 0.0], Sense::Le, 4.0), (&[0.0, 2.0], Sense::Le, 12.0), (&[3.0, 2.0], Sense::Le, 18.0)],
            &[3.0, 5.0],
        );
        let (st, obj, x) = run(&p);
        assert_eq!(st, LpStatus::Optimal);
        assert!((obj - 36.0).abs() < 1e-9);
        assert!((x[0] - 2.0).abs() < 1e-9 && (x[1] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn needs_phase_one() {
        // max −a − b, a + b ≥ 2, a − b = 0 → −2
        let p = lp(
            &[(0.0, 10.0), (0.0, 10.0)],
            &[(&[1.0, 1.0], Sense::Ge, 2.0), (&[1.0, -1.0], Sense::Eq, 0.0)],
            &[-1.0, -1.0],
        );
        let (st, obj, x) = run(&p);
        assert_eq!(st, LpStatus::Optimal);
        assert!((obj + 2.0).abs() < 1e-9);
        assert!((x[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let p = lp(&[(0.0, 10.0)], &[(&[1.0], Sense::Ge, 1.0), (&[1.0], Sense::Le, 0.0)], &[1.0]);
        assert_eq!(run(&p).0, LpStatus::Infeasible);
        let p = lp(&[(0.0, f64::INFINITY)], &[(&[-1.0], Sense::Le, 0.0)], &[1.0]);
        assert_eq!(run(&p).0, LpStatus::Unbounded);
    }

    #[test]
    fn equality_system_with_unique_solution() {
        let p = lp(
            &[(-10.0, 10.0), (-10.0, 10.0), (-10.0, 10.0)],
            &[
                (&[1.0, 1.0, 1.0], Sense::Eq, 6.0),
                (&[1.0, -1.0, 0.0], Sense::Eq, -1.0),
                (&[0.0, 2.0, -1.0], Sense::Eq, 1.0),
            ],
            &[0.0, 0.0, 0.0],
        );
        let (st, _, x) = run(&p);
        assert_eq!(st, LpStatus::Optimal);
        for (a, b) in x.iter().zip([1.0, 2.0, 3.0]) {
            assert!((a - b).abs() < 1e-9, "{x:?}");
        }
    }

    #[test]
    fn bound_flips_without_rows() {
        let p = lp(&[(-1.0, 2.0), (0.0, 3.0)], &[], &[1.0, -1.0]);
        let (st, obj, _) = run(&p);
        assert_eq!(st, LpStatus::Optimal);
        assert_eq!(obj, 2.0);
    }

    #[test]
    fn fixing_then_dual_reoptimization() {
        // max a + b, a + b ≤ 1.5; fix a = 1 → b = 0.5
        let p = lp(&[(0.0, 1.0), (0.0, 1.0)], &[(&[1.0, 1.0], Sense::Le, 1.5)], &[1.0, 1.0]);
        let mut t = Tableau::new(&p, 1e-9);
        assert_eq!(t.solve().unwrap(), LpStatus::Optimal);
        let mut child = t.clone();
        child.fix(0, 1.0);
        child.fix(1, 1.0);
        assert_eq!(child.reoptimize().unwrap(), LpStatus::Infeasible);
        let mut child = t.clone();
        child.fix(0, 0.0);
        assert_eq!(child.reoptimize().unwrap(), LpStatus::Optimal);
        assert!((child.objective() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_cycling_example() {
        // Beale's cycling example (as a maximization)
        let p = lp(
            &[(0.0, 1e3), (0.0, 1e3), (0.0, 1e3), (0.0, 1e3)],
            &[
                (&[0.25, -60.0, -0.04, 9.0], Sense::Le, 0.0),
                (&[0.5, -90.0, -0.02, 3.0], Sense::Le, 0.0),
                (&[0.0, 0.0, 1.0, 0.0], Sense::Le, 1.0),
            ],
            &[0.75, -150.0, 0.02, -6.0],
        );
        let (st, obj, _) = run(&p);
        assert_eq!(st, LpStatus::Optimal);
        assert!((obj - 0.05).abs() < 1e-9);
    }
}
