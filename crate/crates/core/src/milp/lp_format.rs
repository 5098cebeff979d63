//! CPLEX-style LP files: `Maximize`, `Subject To`, `Bounds`, `Binaries`,
//! `End`. The reader accepts what the writer produces (one constraint per
//! line) and is used for round-trip checks.

use std::fmt::Write as _;

use crate::io::fmt_num;
use crate::milp::problem::{sanitize_name, ConstraintRole, MilpProblem, Sense, VarKind, VarRole};

fn write_terms(out: &mut String, terms: &[(f64, usize)], problem: &MilpProblem) {
    for (i, &(c, v)) in terms.iter().enumerate() {
        let name = sanitize_name(&problem.variables[v].name);
        if c < 0.0 {
            let _ = write!(out, " - {} {name}", fmt_num(-c));
        } else if i == 0 {
            let _ = write!(out, " {} {name}", fmt_num(c));
        } else {
            let _ = write!(out, " + {} {name}", fmt_num(c));
        }
    }
}

fn bound(x: f64) -> String {
    if x == f64::INFINITY {
        "+inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        fmt_num(x)
    }
}

pub fn emit_lp(problem: &MilpProblem) -> String {
    let mut out = String::from("Maximize\n obj:");
    if problem.objective.is_empty() {
        if !problem.variables.is_empty() {
            let _ = write!(out, " 0 {}", sanitize_name(&problem.variables[0].name));
        }
    } else {
        write_terms(&mut out, &problem.objective, problem);
    }
    out.push_str("\nSubject To\n");
    for c in &problem.constraints {
        let _ = write!(out, " {}:", sanitize_name(&c.name));
        if c.terms.is_empty() {
            let _ = write!(out, " 0 {}", sanitize_name(&problem.variables[0].name));
        }
        write_terms(&mut out, &c.terms, problem);
        let op = match c.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        let _ = writeln!(out, " {op} {}", fmt_num(c.rhs));
    }
    out.push_str("Bounds\n");
    for v in &problem.variables {
        if v.kind == VarKind::Binary && v.lower == 0.0 && v.upper == 1.0 {
            continue;
        }
        let name = sanitize_name(&v.name);
        if v.lower == v.upper {
            let _ = writeln!(out, " {name} = {}", fmt_num(v.lower));
        } else if v.lower == f64::NEG_INFINITY && v.upper == f64::INFINITY {
            let _ = writeln!(out, " {name} free");
        } else {
            let _ = writeln!(out, " {} <= {name} <= {}", bound(v.lower), bound(v.upper));
        }
    }
    out.push_str("Binaries\n");
    for v in problem.variables.iter().filter(|v| v.kind == VarKind::Binary) {
        let _ = writeln!(out, " {}", sanitize_name(&v.name));
    }
    out.push_str("End\n");
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Section {
    None,
    Objective,
    Constraints,
    Bounds,
    Binaries,
}

fn parse_value(tok: &str) -> Result<f64, String> {
    match tok.to_ascii_lowercase().as_str() {
        "+inf" | "inf" | "+infinity" | "infinity" => Ok(f64::INFINITY),
        "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
        _ => tok.parse::<f64>().map_err(|_| format!("bad number `{tok}`")),
    }
}

/// Reads an LP file written by [`emit_lp`]. Variables are created in order of
/// first appearance; roles are lost.
pub fn parse_lp(text: &str) -> Result<MilpProblem, String> {
    let mut p = MilpProblem::new();
    let var = |p: &mut MilpProblem, name: &str| -> usize {
        match p.var_index(name) {
            Some(i) => i,
            None => p.continuous(name, 0.0, f64::INFINITY, VarRole::Other),
        }
    };
    let mut section = Section::None;
    let mut objective = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('\\') {
            continue;
        }
        let lower = line.to_ascii_lowercase();
        match lower.as_str() {
            "maximize" | "maximise" | "max" => {
                section = Section::Objective;
                continue;
            }
            "subject to" | "st" | "s.t." => {
                section = Section::Constraints;
                continue;
            }
            "bounds" => {
                section = Section::Bounds;
                continue;
            }
            "binaries" | "binary" => {
                section = Section::Binaries;
                continue;
            }
            "end" => break,
            _ => {}
        }
        let at = |msg: String| format!("line {}: {msg}", no + 1);
        match section {
            Section::None => return Err(at("content before the objective section".into())),
            Section::Objective | Section::Constraints => {
                let (name, body) = line.split_once(':').ok_or_else(|| at("missing name".into()))?;
                let toks: Vec<&str> = body.split_whitespace().collect();
                let mut terms = Vec::new();
                let mut i = 0;
                let mut sign = 1.0;
                let mut tail = None;
                while i < toks.len() {
                    match toks[i] {
                        "+" => sign = 1.0,
                        "-" => sign = -1.0,
                        "<=" | ">=" | "=" => {
                            tail = Some((toks[i], toks.get(i + 1).ok_or_else(|| at("missing rhs".into()))?));
                            break;
                        }
                        t => {
                            let c = parse_value(t).map_err(at)?;
                            let v = toks.get(i + 1).ok_or_else(|| at("missing variable".into()))?;
                            let idx = var(&mut p, v);
                            terms.push((sign * c, idx));
                            sign = 1.0;
                            i += 1;
                        }
                    }
                    i += 1;
                }
                if section == Section::Objective {
                    objective = terms;
                    continue;
                }
                let (op, rhs) = tail.ok_or_else(|| at("missing comparison".into()))?;
                let sense = match op {
                    "<=" => Sense::Le,
                    ">=" => Sense::Ge,
                    _ => Sense::Eq,
                };
                let rhs = parse_value(rhs).map_err(at)?;
                p.add_constraint(name.trim(), terms, sense, rhs, ConstraintRole::Other);
            }
            Section::Bounds => {
                let toks: Vec<&str> = line.split_whitespace().collect();
                match toks.as_slice() {
                    [lo, "<=", v, "<=", hi] => {
                        let idx = var(&mut p, v);
                        p.variables[idx].lower = parse_value(lo).map_err(at)?;
                        p.variables[idx].upper = parse_value(hi).map_err(at)?;
                    }
                    [v, "=", x] => {
                        let idx = var(&mut p, v);
                        let x = parse_value(x).map_err(at)?;
                        p.variables[idx].lower = x;
                        p.variables[idx].upper = x;
                    }
                    [v, "free"] => {
                        let idx = var(&mut p, v);
                        p.variables[idx].lower = f64::NEG_INFINITY;
                        p.variables[idx].upper = f64::INFINITY;
                    }
                    _ => return Err(at(format!("unsupported bound `{line}`"))),
                }
            }
            Section::Binaries => {
                for v in line.split_whitespace() {
                    let idx = var(&mut p, v);
                    let fixed = p.variables[idx].lower == p.variables[idx].upper;
                    let x = &mut p.variables[idx];
                    x.kind = VarKind::Binary;
                    if !fixed {
                        x.lower = 0.0;
                        x.upper = 1.0;
                    }
                }
            }
        }
    }
    p.set_objective(objective);
    p.rebuild_index();
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_binary_document() {
        let mut p = MilpProblem::new();
        let y = p.binary("y", VarRole::Admit);
        p.set_objective(vec![(1.0, y)]);
        let text = emit_lp(&p);
        assert_eq!(text, "Maximize\n obj: 1 y\nSubject To\nBounds\nBinaries\n y\nEnd\n");
    }

    #[test]
    fn free_dual_variable_bounds_line() {
        let mut p = MilpProblem::new();
        let l = p.continuous("lambda_0_f", -2.0, 2.0, VarRole::DualFree);
        p.add_constraint("c", vec![(1.0, l)], Sense::Ge, -1.5, ConstraintRole::Other);
        let text = emit_lp(&p);
        assert!(text.contains("\n -2 <= lambda_0_f <= 2\n"), "{text}");
        assert!(text.contains(" c: 1 lambda_0_f >= -1.5\n"));
    }

    #[test]
    fn round_trip() {
        let mut p = MilpProblem::new();
        let x = p.continuous("x_0", 0.0, 1.0, VarRole::Value);
        let y = p.binary("y_0_a", VarRole::Admit);
        let z = p.continuous("z", 0.5, 0.5, VarRole::Other);
        let w = p.binary("w", VarRole::Other);
        p.variables[w].lower = 1.0;
        p.add_constraint(
            "r",
            vec![(1.0, x), (-0.12000000000000001, z), (2.0, y)],
            Sense::Le,
            2.0,
            ConstraintRole::Other,
        );
        p.add_constraint("s", vec![(1.0, y), (1.0, w)], Sense::Eq, 1.0, ConstraintRole::Other);
        p.set_objective(vec![(1.0, y), (-3.0, x)]);
        let q = parse_lp(&emit_lp(&p)).unwrap();
        assert_eq!(q.variables.len(), 4);
        for v in &p.variables {
            let i = q.var_index(&v.name).unwrap();
            let u = &q.variables[i];
            assert_eq!((u.kind, u.lower, u.upper), (v.kind, v.lower, v.upper), "{}", v.name);
        }
        assert_eq!(q.constraints[0].terms[1].0, -0.12000000000000001);
        assert_eq!(q.constraints[1].sense, Sense::Eq);
        assert_eq!(q.objective.len(), 2);
        assert_eq!(emit_lp(&q).lines().count(), emit_lp(&p).lines().count());
    }
}
