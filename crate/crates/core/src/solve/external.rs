//! Adapter for solvers that read an LP file and write `<variable> <value>`
//! lines.
//!
//! The command template is run through `sh -c` after substituting
//! `{lp_file}` and `{sol_file}`. A solution file may carry a comment line
//! `# status: infeasible` (or `unbounded`) instead of values.

use std::fs;
use std::path::PathBuf;
use std::process::Command;
use std::sync::atomic::{AtomicU64, Ordering};
use web_time::Instant;

use crate::error::SolveError;
use crate::milp::{emit_lp, MilpProblem, VarKind};
use crate::solve::simplex::{LpStatus, Tableau};
use crate::solve::{SolveResult, SolveStatus, SolverConfig, FEASIBILITY_TOL};

/// Overrides the configured command template when set.
pub const SOLVER_CMD_ENV: &str = "IMDP_SYNTH_SOLVER_CMD";

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedSolution {
    pub assignment: Vec<f64>,
    pub warnings: Vec<String>,
    /// From a `# status: …` comment, if present.
    pub status: Option<SolveStatus>,
}

/// Reads `<variable> <value>` lines. Unknown variables are ignored; variables
/// without a line default to 0 and produce a warning.
pub fn parse_solution(text: &str, problem: &MilpProblem) -> Result<ParsedSolution, SolveError> {
    let mut assignment = vec![0.0; problem.num_vars()];
    let mut seen = vec![false; problem.num_vars()];
    let mut warnings = Vec::new();
    let mut status = None;
    for (no, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(st) = comment.trim().strip_prefix("status:") {
                status = Some(match st.trim() {
                    "optimal" => SolveStatus::Optimal,
                    "infeasible" => SolveStatus::Infeasible,
                    "unbounded" => SolveStatus::Unbounded,
                    _ => SolveStatus::CapExceeded,
                });
            }
            continue;
        }
        let malformed = || SolveError::MalformedSolution { line: no + 1, text: raw.to_string() };
        let mut toks = line.split_whitespace();
        let (Some(name), Some(value), None) = (toks.next(), toks.next(), toks.next()) else {
            return Err(malformed());
        };
        let value: f64 = value.parse().map_err(|_| malformed())?;
        if !value.is_finite() {
            return Err(malformed());
        }
        if let Some(j) = problem.var_index(name) {
            assignment[j] = value;
            seen[j] = true;
        }
    }
    if status.is_none_or(|s| s == SolveStatus::Optimal) {
        for (j, v) in problem.variables.iter().enumerate() {
            if !seen[j] {
                warnings.push(format!("no value for {}, using 0", v.name));
            }
        }
    }
    Ok(ParsedSolution { assignment, warnings, status })
}

fn scratch_dir() -> Result<PathBuf, SolveError> {
    static COUNTER: AtomicU64 = AtomicU64::new(0);
    let n = COUNTER.fetch_add(1, Ordering::Relaxed);
    let dir = std::env::temp_dir().join(format!("imdp-synth-{}-{n}", std::process::id()));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn quote(path: &std::path::Path) -> String {
    format!("'{}'", path.display().to_string().replace('\'', r"'\''"))
}

pub(crate) fn solve_external(
    problem: &MilpProblem,
    template: &str,
    cfg: &SolverConfig,
) -> Result<SolveResult, SolveError> {
    problem.check().map_err(SolveError::Invalid)?;
    let template = std::env::var(SOLVER_CMD_ENV).unwrap_or_else(|_| template.to_string());
    let start = Instant::now();
    let dir = scratch_dir()?;
    let result = run_in(&dir, problem, &template, cfg, start);
    let _ = fs::remove_dir_all(&dir);
    result
}

fn run_in(
    dir: &std::path::Path,
    problem: &MilpProblem,
    template: &str,
    cfg: &SolverConfig,
    start: Instant,
) -> Result<SolveResult, SolveError> {
    let lp_file = dir.join("problem.lp");
    let sol_file = dir.join("problem.sol");
    fs::write(&lp_file, emit_lp(problem))?;
    let cmd = template.replace("{lp_file}", &quote(&lp_file)).replace("{sol_file}", &quote(&sol_file));
    let out = Command::new("sh").arg("-c").arg(&cmd).output()?;
    if !out.status.success() {
        let stderr = String::from_utf8_lossy(&out.stderr);
        return Err(SolveError::External(format!("`{cmd}` exited with {}: {}", out.status, stderr.trim())));
    }
    let text =
        fs::read_to_string(&sol_file).map_err(|e| SolveError::External(format!("no solution file written: {e}")))?;
    let parsed = parse_solution(&text, problem)?;
    let finish = |status, objective, assignment| SolveResult {
        status,
        objective,
        assignment,
        nodes: 0,
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    match parsed.status {
        Some(SolveStatus::Infeasible) => return Ok(finish(SolveStatus::Infeasible, f64::NAN, Vec::new())),
        Some(SolveStatus::Unbounded) => return Ok(finish(SolveStatus::Unbounded, f64::INFINITY, Vec::new())),
        Some(SolveStatus::CapExceeded) => return Ok(finish(SolveStatus::CapExceeded, f64::NAN, Vec::new())),
        _ => {}
    }
    let mut values = parsed.assignment;
    for (j, v) in problem.variables.iter().enumerate() {
        if v.kind == VarKind::Binary {
            if (values[j] - values[j].round()).abs() > cfg.int_tol {
                return Err(SolveError::Infeasible(format!("integrality of {}", v.name)));
            }
            values[j] = values[j].round();
        }
    }
    if problem.first_violation(&values, FEASIBILITY_TOL).is_some() {
        // rounding the binaries can push big-M rows slightly out; recompute
        // the continuous part with the binaries fixed
        let mut tab = Tableau::new(problem, cfg.pivot_tol);
        for (j, v) in problem.variables.iter().enumerate() {
            if v.kind == VarKind::Binary {
                tab.fix(j, values[j]);
            }
        }
        if tab.solve()? == LpStatus::Optimal {
            let mut repaired = tab.values();
            for (j, v) in problem.variables.iter().enumerate() {
                if v.kind == VarKind::Binary {
                    repaired[j] = values[j];
                }
            }
            values = repaired;
        }
    }
    if let Some(name) = problem.first_violation(&values, FEASIBILITY_TOL) {
        return Err(SolveError::Infeasible(name));
    }
    let objective = problem.objective_value(&values);
    Ok(finish(SolveStatus::Optimal, objective, values))
}
