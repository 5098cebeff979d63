use std::fmt::Write as _;

use serde::Serialize;

use crate::bench::{gen_aca, gen_nav3, gen_obs, gen_sav, gen_wh, BenchmarkInstance};
use crate::error::BenchError;
use crate::io::fmt_num;
use crate::milp::EncodingKind;
use crate::synth::{synthesize, SynthConfig};

pub const SUITE_HEADER: [&str; 13] = [
    "domain",
    "params",
    "states",
    "transitions",
    "encoding",
    "binaries",
    "continuous",
    "constraints",
    "solve_seconds",
    "status",
    "beta",
    "norm_perm",
    "choice_perm",
];

/// A domain together with its generator parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Domain {
    Nav3 { eps: f64 },
    Obs { grid: usize, steps: usize, eps: f64, seed: u64 },
    Sav { grid: usize, eps: f64, seed: u64 },
    Aca { branch: usize, eps: f64, seed: u64 },
    Wh { segment_steps: usize, eps: f64 },
}

pub fn generate(domain: &Domain) -> Result<BenchmarkInstance, BenchError> {
    match *domain {
        Domain::Nav3 { eps } => {
            if !(0.0..=1.0).contains(&eps) {
                return Err(BenchError::Parameter(format!("epsilon {eps} outside [0, 1]")));
            }
            Ok(gen_nav3(eps))
        }
        Domain::Obs { grid, steps, eps, seed } => gen_obs(grid, steps, eps, seed),
        Domain::Sav { grid, eps, seed } => gen_sav(grid, eps, seed),
        Domain::Aca { branch, eps, seed } => gen_aca(branch, eps, seed),
        Domain::Wh { segment_steps, eps } => gen_wh(segment_steps, eps),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteRow {
    pub domain: String,
    pub params: String,
    pub states: usize,
    pub transitions: usize,
    pub encoding: EncodingKind,
    pub binaries: usize,
    pub continuous: usize,
    pub constraints: usize,
    /// Constraints in the per-pair robust blocks; the rest is shared by both
    /// encodings.
    pub block_constraints: usize,
    pub solve_seconds: f64,
    /// Solver status, `infeasible` when no robust multi-strategy exists, or
    /// `error`.
    pub status: String,
    pub beta: Option<usize>,
    pub norm_perm: Option<f64>,
    pub choice_perm: Option<f64>,
    pub error: Option<String>,
}

impl SuiteRow {
    fn failed(domain: &str, params: &str, encoding: EncodingKind, err: String) -> Self {
        SuiteRow {
            domain: domain.into(),
            params: params.into(),
            states: 0,
            transitions: 0,
            encoding,
            binaries: 0,
            continuous: 0,
            constraints: 0,
            block_constraints: 0,
            solve_seconds: 0.0,
            status: "error".into(),
            beta: None,
            norm_perm: None,
            choice_perm: None,
            error: Some(err),
        }
    }
}

/// Synthesizes every instance with every encoding. Failures are recorded in
/// the row and the suite moves on. Maximality checks are the caller's
/// business; `config.check_maximality` is honoured as given.
pub fn run_suite(domains: &[Domain], encodings: &[EncodingKind], config: &SynthConfig) -> Vec<SuiteRow> {
    let mut rows = Vec::new();
    for d in domains {
        let inst = match generate(d) {
            Ok(i) => i,
            Err(e) => {
                let name = format!("{d:?}");
                let domain = name.split_whitespace().next().unwrap_or("").to_lowercase();
                for &enc in encodings {
                    rows.push(SuiteRow::failed(&domain, &name, enc, e.to_string()));
                }
                continue;
            }
        };
        rows.extend(run_instance(&inst, encodings, config));
    }
    rows
}

/// Suite rows for one already generated instance.
pub fn run_instance(inst: &BenchmarkInstance, encodings: &[EncodingKind], config: &SynthConfig) -> Vec<SuiteRow> {
    let mut rows = Vec::new();
    for &enc in encodings {
        let mut row = SuiteRow::failed(&inst.domain, &inst.params, enc, String::new());
        row.states = inst.model.num_states();
        row.transitions = inst.model.num_transitions();
        match synthesize(&inst.model, &inst.spec, enc, config) {
            Ok(rep) => {
                row.binaries = rep.stats.binaries;
                row.continuous = rep.stats.continuous;
                row.constraints = rep.stats.constraints;
                row.block_constraints = rep.stats.block_constraints;
                row.solve_seconds = rep.solver.wall_seconds;
                row.error = None;
                match &rep.result {
                    Some(r) => {
                        row.status = rep.solver.status.to_string();
                        row.beta = Some(r.beta);
                        row.norm_perm = Some(r.normalized_permissiveness);
                        row.choice_perm = r.choice_state_permissiveness;
                    }
                    None => row.status = "infeasible".into(),
                }
            }
            Err(e) => row.error = Some(e.to_string()),
        }
        rows.push(row);
    }
    rows
}

fn opt_num(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

fn fields(r: &SuiteRow) -> [String; 13] {
    [
        r.domain.clone(),
        r.params.clone(),
        r.states.to_string(),
        r.transitions.to_string(),
        r.encoding.to_string(),
        r.binaries.to_string(),
        r.continuous.to_string(),
        r.constraints.to_string(),
        fmt_num(r.solve_seconds),
        r.status.clone(),
        r.beta.map(|b| b.to_string()).unwrap_or_default(),
        opt_num(r.norm_perm),
        opt_num(r.choice_perm),
    ]
}

pub fn suite_csv(rows: &[SuiteRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SUITE_HEADER).expect("in-memory write");
    for r in rows {
        w.write_record(fields(r)).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

/// Column-aligned text version of [`suite_csv`], with error messages listed
/// under the table.
pub fn suite_table(rows: &[SuiteRow]) -> String {
    let mut cells: Vec<[String; 13]> = vec![SUITE_HEADER.map(String::from)];
    for r in rows {
        let mut f = fields(r);
        f[8] = format!("{:.3}", r.solve_seconds);
        for i in [11, 12] {
            if let Some(v) = [r.norm_perm, r.choice_perm][i - 11] {
                f[i] = format!("{v:.4}");
            }
        }
        cells.push(f);
    }
    let widths: Vec<usize> = (0..13).map(|c| cells.iter().map(|r| r[c].len()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for row in &cells {
        let line: Vec<String> = row.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        writeln!(out, "{}", line.join("  ").trim_end()).unwrap();
    }
    for r in rows {
        if let Some(e) = &r.error {
            writeln!(out, "{} {} {}: {e}", r.domain, r.params, r.encoding).unwrap();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> SynthConfig {
        SynthConfig { check_maximality: false, ..SynthConfig::default() }
    }

    #[test]
    fn empty_suite() {
        let rows = run_suite(&[], &[EncodingKind::Vertex], &quick());
        assert!(rows.is_empty());
        assert_eq!(suite_csv(&rows), format!("{}\n", SUITE_HEADER.join(",")));
    }

    #[test]
    fn nav3_rows() {
        let rows = run_suite(&[Domain::Nav3 { eps: 0.1 }], &[EncodingKind::Vertex, EncodingKind::Dual], &quick());
        assert_eq!(rows.len(), 2);
        for r in &rows {
            assert_eq!(r.status, "optimal");
            assert_eq!(r.beta, Some(2));
            assert_eq!(r.norm_perm, Some(0.8));
            assert_eq!(r.choice_perm, Some(0.5));
        }
        // robust blocks differ, the rest of the encoding is shared
        assert_eq!(rows[0].constraints - rows[0].block_constraints, rows[1].constraints - rows[1].block_constraints);
        let csv = suite_csv(&rows);
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.lines().nth(1).unwrap().starts_with("nav3,eps=0.1,4,"));
        assert!(suite_table(&rows).lines().next().unwrap().starts_with("domain"));
    }

    #[test]
    fn errors_are_recorded() {
        let rows = run_suite(
            &[Domain::Obs { grid: 1, steps: 1, eps: 0.1, seed: 0 }, Domain::Nav3 { eps: 0.0 }],
            &[EncodingKind::Dual],
            &quick(),
        );
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].status, "error");
        assert!(rows[0].error.is_some());
        assert_eq!(rows[1].status, "optimal");
        assert!(suite_table(&rows).contains("obs"));
    }
}
