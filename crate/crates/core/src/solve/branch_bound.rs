//! Branch-and-bound over binaries.
//!
//! Open nodes are kept as lists of fixings and selected best-bound first.
//! A selected node is rebuilt from the root-optimal tableau and then dived:
//! the `1` child is re-optimized in place by the dual simplex while the `0`
//! child goes to the queue. Once an incumbent exists, nonbasic binaries whose
//! reduced cost exceeds the remaining gap are fixed for the subtree. Nodes
//! An optional root heuristic proposes binary values from the root LP point;
//! when they complete to a feasible point it becomes the first incumbent.
//! Nodes are explored sequentially, so the reported assignment is the first
//! incumbent attaining the optimum under this order.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use web_time::Instant;

use crate::error::SolveError;
use crate::milp::{MilpProblem, VarKind};
use crate::solve::simplex::{LpStatus, Tableau};
use crate::solve::{RootHeuristic, SolveResult, SolveStatus, SolverConfig, FEASIBILITY_TOL};

struct Node {
    bound: f64,
    seq: u64,
    fixings: Vec<(usize, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // max-heap: higher bound first, then lower sequence number
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound.total_cmp(&other.bound).then_with(|| other.seq.cmp(&self.seq))
    }
}

fn finish(status: SolveStatus, objective: f64, assignment: Vec<f64>, nodes: u64, start: Instant) -> SolveResult {
    SolveResult { status, objective, assignment, nodes, wall_seconds: start.elapsed().as_secs_f64() }
}

pub(crate) fn branch_and_bound(
    problem: &MilpProblem,
    cfg: &SolverConfig,
    heuristic: Option<RootHeuristic<'_>>,
) -> Result<SolveResult, SolveError> {
    problem.check().map_err(SolveError::Invalid)?;
    let start = Instant::now();
    let binaries: Vec<usize> =
        (0..problem.num_vars()).filter(|&j| problem.variables[j].kind == VarKind::Binary).collect();
    let integral_objective =
        problem.objective.iter().all(|&(c, v)| c.fract() == 0.0 && problem.variables[v].kind == VarKind::Binary);

    let mut root = Tableau::new(problem, cfg.pivot_tol);
    match root.solve()? {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Ok(finish(SolveStatus::Infeasible, f64::NAN, Vec::new(), 1, start)),
        LpStatus::Unbounded => return Ok(finish(SolveStatus::Unbounded, f64::INFINITY, Vec::new(), 1, start)),
    }

    let mut heap = BinaryHeap::new();
    let mut seq = 1u64;
    let mut nodes = 0u64;
    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    if let Some(h) = heuristic {
        if let Some(fix) = h(&root.values()) {
            let mut tab = root.clone();
            for &(j, v) in &fix {
                tab.fix(j, v);
            }
            if tab.reoptimize()? == LpStatus::Optimal {
                if let Some(t) = complete(tab, &binaries, cfg.int_tol, START_DFS_CAP)? {
                    if let Ok(assignment) = polish(problem, &root, &t, &binaries) {
                        incumbent = Some((problem.objective_value(&assignment), assignment));
                    }
                }
            }
        }
    }

    if cfg.prune {
        probe(&mut root, &binaries, &incumbent, integral_objective)?;
        if root.reoptimize()? == LpStatus::Infeasible {
            return Ok(match incumbent {
                Some((obj, asg)) => finish(SolveStatus::Optimal, obj, asg, 1, start),
                None => finish(SolveStatus::Infeasible, f64::NAN, Vec::new(), 1, start),
            });
        }
    }

    heap.push(Node { bound: root.objective(), seq: 0, fixings: Vec::new() });
    let dominated = |bound: f64, inc: &Option<(f64, Vec<f64>)>| -> bool {
        match inc {
            Some((best, _)) if cfg.prune => {
                bound <= best + 1e-9 || (integral_objective && (bound + 1e-6).floor() <= best + 1e-9)
            }
            _ => false,
        }
    };

    // an improving solution must exceed `best` by this much
    let improvement = |_best: f64| if integral_objective { 1.0 - 1e-6 } else { 1e-9 };

    while let Some(node) = heap.pop() {
        if dominated(node.bound, &incumbent) {
            continue;
        }
        let mut tab = root.clone();
        let mut fixings = node.fixings;
        let mut feasible = true;
        if !fixings.is_empty() {
            for &(j, v) in &fixings {
                tab.fix(j, v);
            }
            feasible = tab.reoptimize()? == LpStatus::Optimal;
        }
        // dive
        while feasible {
            let over_time = cfg.time_cap.is_some_and(|t| start.elapsed().as_secs_f64() > t);
            if nodes >= cfg.node_cap || over_time {
                let (obj, asg) = incumbent.unwrap_or((f64::NAN, Vec::new()));
                return Ok(finish(SolveStatus::CapExceeded, obj, asg, nodes, start));
            }
            nodes += 1;
            let obj = tab.objective();
            if dominated(obj, &incumbent) {
                break;
            }
            if let (Some((best, _)), true) = (&incumbent, cfg.prune) {
                let gap = obj - (best + improvement(*best));
                for &j in &binaries {
                    if tab.is_fixed(j) {
                        continue;
                    }
                    if let Some(d) = tab.reduced_cost(j) {
                        if d.abs() > gap + 1e-9 {
                            let v = tab.value(j);
                            tab.fix(j, v);
                            fixings.push((j, v));
                        }
                    }
                }
            }

            let Some(j) = most_fractional(&tab, &binaries, cfg.int_tol) else {
                let assignment = polish(problem, &root, &tab, &binaries)?;
                let value = problem.objective_value(&assignment);
                if incumbent.as_ref().is_none_or(|(best, _)| value > best + 1e-9) {
                    incumbent = Some((value, assignment));
                }
                break;
            };
            let mut zero = fixings.clone();
            zero.push((j, 0.0));
            heap.push(Node { bound: obj, seq, fixings: zero });
            seq += 1;
            fixings.push((j, 1.0));
            tab.fix(j, 1.0);
            feasible = tab.reoptimize()? == LpStatus::Optimal;
        }
    }

    Ok(match incumbent {
        Some((obj, asg)) => finish(SolveStatus::Optimal, obj, asg, nodes, start),
        None => finish(SolveStatus::Infeasible, f64::NAN, Vec::new(), nodes, start),
    })
}

/// Root probing: a binary whose `v` side is infeasible, or cannot improve on
/// the incumbent, is fixed to `1 − v` in the root tableau. Passes repeat
/// while they fix something.
fn probe(
    root: &mut Tableau,
    binaries: &[usize],
    incumbent: &Option<(f64, Vec<f64>)>,
    integral_objective: bool,
) -> Result<(), SolveError> {
    let hopeless = |bound: f64| match incumbent {
        Some((best, _)) => bound <= best + 1e-9 || (integral_objective && (bound + 1e-6).floor() <= best + 1e-9),
        None => false,
    };
    for _ in 0..PROBE_PASSES {
        let mut changed = false;
        for &j in binaries {
            if root.is_fixed(j) {
                continue;
            }
            for v in [1.0, 0.0] {
                let mut t = root.clone();
                t.fix(j, v);
                let dead = match t.reoptimize()? {
                    LpStatus::Optimal => hopeless(t.objective()),
                    _ => true,
                };
                if dead {
                    root.fix(j, 1.0 - v);
                    if root.reoptimize()? != LpStatus::Optimal {
                        return Ok(());
                    }
                    changed = true;
                    break;
                }
            }
        }
        if !changed {
            break;
        }
    }
    Ok(())
}

const PROBE_PASSES: usize = 3;

/// LP solves spent completing a heuristic start.
const START_DFS_CAP: usize = 2000;

fn most_fractional(tab: &Tableau, binaries: &[usize], int_tol: f64) -> Option<usize> {
    let mut branch: Option<(usize, f64)> = None;
    for &j in binaries {
        let v = tab.value(j);
        let frac = (v - v.round()).abs();
        if frac > int_tol && branch.is_none_or(|(_, f)| frac > f) {
            branch = Some((j, frac));
        }
    }
    branch.map(|(j, _)| j)
}

/// Depth-first search (`1` before `0`) for an integral point below `tab`,
/// giving up after `cap` LP solves.
fn complete(tab: Tableau, binaries: &[usize], int_tol: f64, cap: usize) -> Result<Option<Tableau>, SolveError> {
    let mut stack = vec![tab];
    let mut solves = 0;
    while let Some(t) = stack.pop() {
        let Some(j) = most_fractional(&t, binaries, int_tol) else {
            return Ok(Some(t));
        };
        if solves >= cap {
            break;
        }
        for v in [0.0, 1.0] {
            let mut c = t.clone();
            c.fix(j, v);
            solves += 1;
            if c.reoptimize()? == LpStatus::Optimal {
                stack.push(c);
            }
        }
    }
    Ok(None)
}

/// Rounds binaries of an integral LP point. When the rounding is not exact,
/// the continuous part is recomputed with every binary fixed, so the
/// assignment satisfies the constraints at the rounded values.
fn polish(problem: &MilpProblem, root: &Tableau, tab: &Tableau, binaries: &[usize]) -> Result<Vec<f64>, SolveError> {
    let mut values = tab.values();
    let exact = binaries.iter().all(|&j| values[j] == values[j].round());
    for &j in binaries {
        values[j] = values[j].round();
    }
    if !exact || problem.first_violation(&values, FEASIBILITY_TOL).is_some() {
        let mut fixed = root.clone();
        for &j in binaries {
            fixed.fix(j, values[j]);
        }
        if fixed.reoptimize()? == LpStatus::Optimal {
            values = fixed.values();
            for &j in binaries {
                values[j] = values[j].round();
            }
        }
    }
    match problem.first_violation(&values, FEASIBILITY_TOL) {
        Some(name) => Err(SolveError::Infeasible(name)),
        None => Ok(values),
    }
}
