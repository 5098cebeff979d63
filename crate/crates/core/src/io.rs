//! Plain-text model, specification, and strategy files.
//!
//! ```text
//! imdp 4
//! actions f m
//! initial 0
//! state 0 "s0"
//! label "goal" 3
//! trans 0 f 3 [0.68, 0.88]
//! trans 0 f 2 [0.12, 0.32]
//! reward 0 f 1
//! ```
//!
//! A bare number is a point interval. States without any `trans` line become
//! absorbing via the `loop` action.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::error::{ParseError, ParseErrorKind};
use crate::model::{validate_model, ImdpModel, ModelBuilder, MultiStrategy, Severity, Spec, SpecKind};

/// Shortest decimal that parses back to the same `f64` (never more than 17
/// significant digits). Integral values print without a fractional part.
pub fn fmt_num(x: f64) -> String {
    let s = format!("{x:?}");
    match s.strip_suffix(".0") {
        Some(t) => t.to_string(),
        None => s,
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Str(String),
    Open,
    Close,
    Comma,
}

fn err(line: usize, column: usize, kind: ParseErrorKind) -> ParseError {
    ParseError { line, column, kind }
}

fn syntax(line: usize, column: usize, msg: impl Into<String>) -> ParseError {
    err(line, column, ParseErrorKind::Syntax(msg.into()))
}

/// Splits one line into tokens with 1-based columns; `#` starts a comment
/// outside of quotes.
fn tokenize(line: &str, lineno: usize) -> Result<Vec<(usize, Tok)>, ParseError> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        match c {
            '#' => break,
            c if c.is_whitespace() => i += 1,
            '[' => {
                out.push((col, Tok::Open));
                i += 1;
            }
            ']' => {
                out.push((col, Tok::Close));
                i += 1;
            }
            ',' => {
                out.push((col, Tok::Comma));
                i += 1;
            }
            '"' => {
                let start = i + 1;
                let mut j = start;
                while j < chars.len() && chars[j] != '"' {
                    j += 1;
                }
                if j == chars.len() {
                    return Err(syntax(lineno, col, "unterminated string"));
                }
                out.push((col, Tok::Str(chars[start..j].iter().collect())));
                i = j + 1;
            }
            _ => {
                let start = i;
                while i < chars.len() && !chars[i].is_whitespace() && !"[],\"#".contains(chars[i]) {
                    i += 1;
                }
                out.push((col, Tok::Word(chars[start..i].iter().collect())));
            }
        }
    }
    Ok(out)
}

struct Line {
    no: usize,
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end_col: usize,
}

impl Line {
    fn col(&self) -> usize {
        self.toks.get(self.pos).map(|t| t.0).unwrap_or(self.end_col)
    }

    fn next(&mut self, what: &str) -> Result<(usize, Tok), ParseError> {
        match self.toks.get(self.pos) {
            Some(t) => {
                self.pos += 1;
                Ok(t.clone())
            }
            None => Err(syntax(self.no, self.end_col, format!("expected {what}"))),
        }
    }

    fn word(&mut self, what: &str) -> Result<(usize, String), ParseError> {
        match self.next(what)? {
            (c, Tok::Word(w)) => Ok((c, w)),
            (c, _) => Err(syntax(self.no, c, format!("expected {what}"))),
        }
    }

    fn string(&mut self, what: &str) -> Result<String, ParseError> {
        match self.next(what)? {
            (_, Tok::Str(s)) => Ok(s),
            (c, _) => Err(syntax(self.no, c, format!("expected quoted {what}"))),
        }
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        let (c, w) = self.word("number")?;
        parse_number(&w).ok_or_else(|| syntax(self.no, c, format!("invalid number `{w}`")))
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        let (c, t) = self.next(what)?;
        if t == tok {
            Ok(())
        } else {
            Err(syntax(self.no, c, format!("expected {what}")))
        }
    }

    fn done(&self) -> Result<(), ParseError> {
        if self.pos < self.toks.len() {
            Err(syntax(self.no, self.col(), "unexpected trailing input"))
        } else {
            Ok(())
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }
}

fn parse_number(w: &str) -> Option<f64> {
    let first = w.chars().next()?;
    if !(first.is_ascii_digit() || first == '.' || first == '-' || first == '+') {
        return None;
    }
    w.parse::<f64>().ok().filter(|x| x.is_finite())
}

struct States<'a> {
    n: usize,
    names: &'a BTreeMap<String, usize>,
}

impl States<'_> {
    fn resolve(&self, line: usize, col: usize, w: &str) -> Result<usize, ParseError> {
        if let Ok(i) = w.parse::<usize>() {
            if i < self.n {
                return Ok(i);
            }
        } else if let Some(&i) = self.names.get(w) {
            return Ok(i);
        }
        Err(err(line, col, ParseErrorKind::UndeclaredIdentifier(w.to_string())))
    }
}

pub fn parse_model(text: &str) -> Result<ImdpModel, ParseError> {
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let toks = tokenize(raw, i + 1)?;
        if !toks.is_empty() {
            lines.push(Line { no: i + 1, toks, pos: 0, end_col: raw.chars().count() + 1 });
        }
    }
    let mut it = lines.into_iter();
    let mut header = match it.next() {
        Some(l) => l,
        None => return Err(err(1, 1, ParseErrorKind::MissingHeader)),
    };
    match header.word("header")? {
        (_, w) if w == "imdp" => {}
        (c, _) => return Err(err(header.no, c, ParseErrorKind::MissingHeader)),
    }
    let n = {
        let (c, w) = header.word("state count")?;
        match w.parse::<usize>() {
            Ok(n) if n > 0 => n,
            _ => return Err(syntax(header.no, c, "state count must be a positive integer")),
        }
    };
    header.done()?;

    let mut builder = ModelBuilder::new(n, &[]);
    let mut declared_actions: BTreeMap<String, usize> = BTreeMap::new();
    let mut names: BTreeMap<String, usize> = BTreeMap::new();
    let mut seen_actions_line = false;
    let mut seen_initial = false;
    let mut triples: BTreeSet<(usize, usize, usize)> = BTreeSet::new();
    let mut row_line: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut rewards: BTreeMap<(usize, usize), (usize, usize)> = BTreeMap::new();

    for mut line in it {
        let (kc, kw) = line.word("keyword")?;
        let no = line.no;
        match kw.as_str() {
            "actions" => {
                if seen_actions_line {
                    return Err(syntax(no, kc, "duplicate actions line"));
                }
                seen_actions_line = true;
                while !line.at_end() {
                    let (c, a) = line.word("action label")?;
                    if declared_actions.contains_key(&a) {
                        return Err(syntax(no, c, format!("action `{a}` declared twice")));
                    }
                    let idx = builder.action(&a);
                    declared_actions.insert(a, idx);
                }
            }
            "initial" => {
                if seen_initial {
                    return Err(syntax(no, kc, "duplicate initial line"));
                }
                seen_initial = true;
                let (c, w) = line.word("state")?;
                let s = States { n, names: &names }.resolve(no, c, &w)?;
                builder.initial(s);
            }
            "state" => {
                let (c, w) = line.word("state index")?;
                let s = match w.parse::<usize>() {
                    Ok(s) if s < n => s,
                    _ => return Err(err(no, c, ParseErrorKind::UndeclaredIdentifier(w))),
                };
                let name = line.string("state name")?;
                if name.parse::<usize>().is_ok() || names.contains_key(&name) {
                    return Err(syntax(no, c, format!("state name \"{name}\" is numeric or already used")));
                }
                names.insert(name.clone(), s);
                builder.name(s, name);
            }
            "label" => {
                let name = line.string("label name")?;
                builder.empty_label(&name);
                while !line.at_end() {
                    let (c, w) = line.word("state")?;
                    let s = States { n, names: &names }.resolve(no, c, &w)?;
                    builder.label(&name, s);
                }
            }
            "trans" => {
                let states = States { n, names: &names };
                let (c, w) = line.word("state")?;
                let s = states.resolve(no, c, &w)?;
                let (ac, aw) = line.word("action")?;
                let a = *declared_actions
                    .get(&aw)
                    .ok_or_else(|| err(no, ac, ParseErrorKind::UndeclaredIdentifier(aw.clone())))?;
                let (tc, tw) = line.word("successor")?;
                let t = states.resolve(no, tc, &tw)?;
                let (lo, hi) = if line.toks.get(line.pos).map(|t| &t.1) == Some(&Tok::Open) {
                    line.pos += 1;
                    let lo = line.number()?;
                    line.expect(Tok::Comma, "`,`")?;
                    let hi = line.number()?;
                    line.expect(Tok::Close, "`]`")?;
                    (lo, hi)
                } else {
                    let p = line.number()?;
                    (p, p)
                };
                if !triples.insert((s, a, t)) {
                    return Err(err(no, kc, ParseErrorKind::DuplicateTransition));
                }
                row_line.entry((s, a)).or_insert(no);
                builder.interval(s, a, t, lo, hi);
            }
            "reward" => {
                let states = States { n, names: &names };
                let (c, w) = line.word("state")?;
                let s = states.resolve(no, c, &w)?;
                let (ac, aw) = line.word("action")?;
                let a = *declared_actions
                    .get(&aw)
                    .ok_or_else(|| err(no, ac, ParseErrorKind::UndeclaredIdentifier(aw.clone())))?;
                let vc = line.col();
                let v = line.number()?;
                if rewards.insert((s, a), (no, vc)).is_some() {
                    return Err(syntax(no, kc, "duplicate reward"));
                }
                builder.reward(s, a, v);
            }
            "imdp" => return Err(syntax(no, kc, "repeated header")),
            other => return Err(syntax(no, kc, format!("unknown keyword `{other}`"))),
        }
        line.done()?;
    }

    for (&(s, a), &(no, col)) in &rewards {
        if !builder.has_row(s, a) {
            return Err(err(no, col, ParseErrorKind::Invalid("reward for an action that is not enabled".into())));
        }
    }
    builder.close_with_self_loops();
    let model = builder.build_unchecked();
    if let Some(d) = validate_model(&model).into_iter().find(|d| d.severity == Severity::Error) {
        let no = match (d.state, d.action) {
            (Some(s), Some(a)) => row_line.get(&(s, a)).copied().unwrap_or(1),
            _ => 1,
        };
        return Err(err(no, 1, ParseErrorKind::Invalid(d.to_string())));
    }
    Ok(model)
}

/// Canonical text form; `parse_model` reads it back to an equal model.
pub fn write_model(model: &ImdpModel) -> String {
    let mut out = String::new();
    let n = model.num_states();
    let _ = writeln!(out, "imdp {n}");
    let _ = writeln!(out, "actions {}", model.actions().join(" "));
    let _ = writeln!(out, "initial {}", model.initial());
    for s in 0..n {
        if let Some(name) = model.state_name(s) {
            let _ = writeln!(out, "state {s} \"{name}\"");
        }
    }
    for (label, states) in model.labels() {
        let _ = write!(out, "label \"{label}\"");
        for s in states {
            let _ = write!(out, " {s}");
        }
        out.push('\n');
    }
    for s in 0..n {
        for c in model.choices(s) {
            let a = model.action_label(c.action);
            for t in &c.successors {
                if t.lower == t.upper {
                    let _ = writeln!(out, "trans {s} {a} {} {}", t.state, fmt_num(t.lower));
                } else {
                    let _ = writeln!(out, "trans {s} {a} {} [{}, {}]", t.state, fmt_num(t.lower), fmt_num(t.upper));
                }
            }
        }
    }
    for s in 0..n {
        for c in model.choices(s) {
            if c.reward != 0.0 {
                let _ = writeln!(out, "reward {s} {} {}", model.action_label(c.action), fmt_num(c.reward));
            }
        }
    }
    out
}

/// Parses `P>=p [F "label"]`, `P<=p …`, `R>=b …`, `R<=b …`.
pub fn parse_spec(text: &str, model: &ImdpModel) -> Result<Spec, ParseError> {
    let line = text.trim_end();
    let chars: Vec<char> = line.chars().collect();
    let mut i = 0;
    let skip_ws = |i: &mut usize| {
        while *i < chars.len() && chars[*i].is_whitespace() {
            *i += 1;
        }
    };
    skip_ws(&mut i);
    let reward = match chars.get(i) {
        Some('P') => false,
        Some('R') => true,
        _ => return Err(syntax(1, i + 1, "expected `P` or `R`")),
    };
    i += 1;
    let ge = match (chars.get(i), chars.get(i + 1)) {
        (Some('>'), Some('=')) => true,
        (Some('<'), Some('=')) => false,
        _ => return Err(syntax(1, i + 1, "expected `>=` or `<=`")),
    };
    i += 2;
    let num_col = i + 1;
    let start = i;
    while i < chars.len() && !chars[i].is_whitespace() && chars[i] != '[' {
        i += 1;
    }
    let word: String = chars[start..i].iter().collect();
    let threshold = parse_number(&word).ok_or_else(|| syntax(1, num_col, format!("invalid threshold `{word}`")))?;
    skip_ws(&mut i);
    if chars.get(i) != Some(&'[') {
        return Err(syntax(1, i + 1, "expected `[`"));
    }
    i += 1;
    skip_ws(&mut i);
    if chars.get(i) != Some(&'F') {
        return Err(syntax(1, i + 1, "expected `F`"));
    }
    i += 1;
    skip_ws(&mut i);
    let label_col = i + 1;
    if chars.get(i) != Some(&'"') {
        return Err(syntax(1, i + 1, "expected quoted label"));
    }
    i += 1;
    let ls = i;
    while i < chars.len() && chars[i] != '"' {
        i += 1;
    }
    if i == chars.len() {
        return Err(syntax(1, label_col, "unterminated string"));
    }
    let label: String = chars[ls..i].iter().collect();
    i += 1;
    skip_ws(&mut i);
    if chars.get(i) != Some(&']') {
        return Err(syntax(1, i + 1, "expected `]`"));
    }
    i += 1;
    skip_ws(&mut i);
    if i < chars.len() {
        return Err(syntax(1, i + 1, "unexpected trailing input"));
    }
    let kind = match (reward, ge) {
        (false, true) => SpecKind::ProbGe,
        (false, false) => SpecKind::ProbLe,
        (true, true) => SpecKind::RewGe,
        (true, false) => SpecKind::RewLe,
    };
    let in_range = if reward { threshold >= 0.0 } else { (0.0..=1.0).contains(&threshold) };
    if !in_range {
        return Err(err(1, num_col, ParseErrorKind::ThresholdOutOfRange));
    }
    let target = model.label(&label).ok_or_else(|| err(1, label_col, ParseErrorKind::UnknownLabel(label.clone())))?;
    if target.is_empty() {
        return Err(err(1, label_col, ParseErrorKind::Invalid(format!("label \"{label}\" has no states"))));
    }
    Ok(Spec { kind, threshold, target: target.clone(), label: Some(label) })
}

/// Reads `<state>: <action> <action> …` lines. States that are not listed
/// admit every enabled action.
pub fn parse_strategy(text: &str, model: &ImdpModel) -> Result<MultiStrategy, ParseError> {
    let names: BTreeMap<String, usize> =
        (0..model.num_states()).filter_map(|s| model.state_name(s).map(|n| (n.to_string(), s))).collect();
    let states = States { n: model.num_states(), names: &names };
    let mut sets: Vec<Option<Vec<usize>>> = vec![None; model.num_states()];
    for (i, raw) in text.lines().enumerate() {
        let no = i + 1;
        let body = raw.split('#').next().unwrap_or("");
        if body.trim().is_empty() {
            continue;
        }
        let Some(colon) = body.find(':') else {
            return Err(syntax(no, 1, "expected `<state>: <actions>`"));
        };
        let head = body[..colon].trim();
        let head_col = body.find(head).unwrap_or(0) + 1;
        let s = states.resolve(no, head_col, head)?;
        if sets[s].is_some() {
            return Err(syntax(no, head_col, format!("state `{head}` listed twice")));
        }
        let mut acts = Vec::new();
        let mut offset = colon + 1;
        for w in body[colon + 1..].split_whitespace() {
            let col = body[offset..].find(w).map(|p| p + offset).unwrap_or(offset) + 1;
            offset = col - 1 + w.len();
            let a = model
                .action_index(w)
                .ok_or_else(|| err(no, col, ParseErrorKind::UndeclaredIdentifier(w.to_string())))?;
            if model.choice(s, a).is_none() {
                return Err(err(no, col, ParseErrorKind::Invalid(format!("action `{w}` is not enabled at state {s}"))));
            }
            acts.push(a);
        }
        if acts.is_empty() {
            return Err(syntax(no, colon + 2, "state admits no action"));
        }
        sets[s] = Some(acts);
    }
    let full: Vec<Vec<usize>> =
        sets.into_iter().enumerate().map(|(s, set)| set.unwrap_or_else(|| model.enabled(s).collect())).collect();
    MultiStrategy::new(model, full).map_err(|e| err(1, 1, ParseErrorKind::Invalid(e.to_string())))
}

pub fn write_strategy(model: &ImdpModel, theta: &MultiStrategy) -> String {
    let mut out = String::new();
    for s in 0..model.num_states() {
        let acts: Vec<&str> = theta.admitted(s).iter().map(|&a| model.action_label(a)).collect();
        let _ = writeln!(out, "{s}: {}", acts.join(" "));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::nav3_model;
    use proptest::prelude::*;

    const NAV3: &str = "\
imdp 4
actions f m
label \"goal\" 3
trans 0 f 3 [0.68, 0.88]
trans 0 f 2 [0.12, 0.32]
trans 0 m 1 [0.8, 1]
trans 0 m 2 [0, 0.2]
trans 1 m 3 [0.8, 1]
trans 1 m 2 [0, 0.2]
";

    #[test]
    fn parses_nav3_document() {
        let m = parse_model(NAV3).unwrap();
        assert_eq!(m.num_states(), 4);
        assert_eq!(m.num_enabled_pairs(), 5);
        assert!(m.is_absorbing(2) && m.is_absorbing(3));
        assert_eq!(m.label("goal"), Some(&BTreeSet::from([3])));
    }

    #[test]
    fn empty_input_is_missing_header() {
        let e = parse_model("").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::MissingHeader);
        let e = parse_model("# only a comment\n\n").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::MissingHeader);
        assert_eq!(e.to_string(), "line 1, column 1: missing header");
    }

    #[test]
    fn undeclared_action() {
        let e = parse_model("imdp 4\ntrans 0 f 3 [0.68, 0.88]\n").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UndeclaredIdentifier("f".into()));
        assert_eq!((e.line, e.column), (2, 9));
    }

    #[test]
    fn duplicate_and_located_errors() {
        let e = parse_model("imdp 2\nactions a\ntrans 0 a 1 1\ntrans 0 a 1 1\n").unwrap_err();
        assert_eq!((e.line, e.kind), (4, ParseErrorKind::DuplicateTransition));
        let e = parse_model("imdp 2\nactions a\ntrans 0 a 1 [0.5 0.6]\n").unwrap_err();
        assert_eq!(e.line, 3);
        assert!(matches!(e.kind, ParseErrorKind::Syntax(_)));
        let e = parse_model("imdp 2\nactions a\ntrans 0 a 5 1\n").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UndeclaredIdentifier("5".into()));
        let e = parse_model("imdp 2\nactions a\ntrans 0 a 1 [0.2, 0.3]\n").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::Invalid(ref m) if m.contains("upper sum")), "{e}");
        assert_eq!(e.line, 3);
        let e = parse_model("imdp 2\nactions a\ntrans 0 a 1 1\nreward 1 a 2\n").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::Invalid(_)));
        let e = parse_model("imdp 2\nactions a\ntrans 0 a 1 nan\n").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::Syntax(_)));
    }

    #[test]
    fn round_trip_nav3() {
        let m = nav3_model(0.1);
        let text = write_model(&m);
        let back = parse_model(&text).unwrap();
        assert_eq!(back, m);
        let f = back.action_index("f").unwrap();
        let row = &back.choice(0, f).unwrap().successors;
        let up = row.iter().find(|s| s.state == 3).unwrap().upper;
        assert_eq!(up, 0.88);
    }

    #[test]
    fn point_interval_written_bare() {
        let mut b = ModelBuilder::new(2, &["a"]);
        b.interval(0, 0, 0, 0.1, 0.1).interval(0, 0, 1, 0.9, 0.9).close_with_self_loops();
        let m = b.build().unwrap();
        let text = write_model(&m);
        assert!(text.contains("trans 0 a 0 0.1\n"), "{text}");
        assert_eq!(parse_model(&text).unwrap(), m);
    }

    #[test]
    fn names_and_scientific_notation() {
        let text = "imdp 2\nactions go\nstate 0 \"start\"\nstate 1 \"end\"\ninitial start\nlabel \"done\" end\ntrans start go end [1e0, 1.0]\nreward start go 2.5e1\n";
        let m = parse_model(text).unwrap();
        assert_eq!(m.state_name(0), Some("start"));
        assert_eq!(m.choices(0)[0].reward, 25.0);
        assert_eq!(parse_model(&write_model(&m)).unwrap(), m);
    }

    #[test]
    fn spec_forms() {
        let m = nav3_model(0.1);
        let s = parse_spec("P>=0.65 [F \"goal\"]", &m).unwrap();
        assert_eq!((s.kind, s.threshold), (SpecKind::ProbGe, 0.65));
        assert_eq!(s.target, BTreeSet::from([3]));
        let s = parse_spec("R<=100 [F \"goal\"]", &m).unwrap();
        assert_eq!((s.kind, s.threshold), (SpecKind::RewLe, 100.0));
        assert_eq!(parse_spec("P<=0.5 [F \"goal\"]", &m).unwrap().kind, SpecKind::ProbLe);
        assert_eq!(parse_spec("R>=2 [ F \"goal\" ]", &m).unwrap().kind, SpecKind::RewGe);
        let e = parse_spec("P>=1.2 [F \"goal\"]", &m).unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::ThresholdOutOfRange);
        let e = parse_spec("P>=0.5 [F \"nowhere\"]", &m).unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnknownLabel("nowhere".into()));
        assert!(parse_spec("Q>=0.5 [F \"goal\"]", &m).is_err());
        assert!(parse_spec("P>=0.5 [G \"goal\"]", &m).is_err());
        assert!(parse_spec("R>=-1 [F \"goal\"]", &m).is_err());
    }

    #[test]
    fn strategy_files() {
        let m = nav3_model(0.1);
        let theta = parse_strategy("0: f\n", &m).unwrap();
        assert_eq!(theta.admitted(0), &[m.action_index("f").unwrap()]);
        assert_eq!(theta.admitted(1).len(), 1);
        assert_eq!(parse_strategy(&write_strategy(&m, &theta), &m).unwrap(), theta);
        let e = parse_strategy("0: fly\n", &m).unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UndeclaredIdentifier("fly".into()));
        assert!(parse_strategy("1: f\n", &m).is_err());
        assert!(parse_strategy("0 f\n", &m).is_err());
    }

    fn arb_model() -> impl Strategy<Value = ImdpModel> {
        (1usize..5, 1usize..3, any::<u64>()).prop_map(|(n, k, seed)| crate::bench::random_model(n, k, 3, seed, false))
    }

    proptest! {
        #[test]
        fn write_parse_round_trip(m in arb_model()) {
            let text = write_model(&m);
            prop_assert_eq!(parse_model(&text).unwrap(), m);
        }

        #[test]
        fn parser_is_total(text in "[ -~\n]{0,200}") {
            let _ = parse_model(&text);
        }

        #[test]
        fn parser_is_total_on_near_misses(lines in proptest::collection::vec(
            prop_oneof![
                Just("imdp 3".to_string()),
                Just("actions a b".to_string()),
                Just("trans 0 a 1 [0.2, 0.9]".to_string()),
                Just("trans 0 a 2 0.5".to_string()),
                Just("label \"g\" 2".to_string()),
                Just("reward 0 a 1".to_string()),
                "[a-z0-9 \\[\\],.\"]{0,20}",
            ], 0..8)) {
            let _ = parse_model(&lines.join("\n"));
        }
    }
}
