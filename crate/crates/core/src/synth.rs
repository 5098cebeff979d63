//! End-to-end synthesis: encode, solve, read the multi-strategy back, verify
//! it by robust value iteration, and check maximality.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;

use crate::error::{ModelError, SynthError, VerifyError};
use crate::io::fmt_num;
use crate::milp::{
    build_encoding, decision_pairs, encoding_stats, ConstraintRole, EncodeOptions, Encoding, EncodingKind,
    EncodingStats, Sense,
};
use crate::model::{
    choice_state_permissiveness, normalized_permissiveness, permissiveness, ImdpModel, MultiStrategy, Spec, SpecKind,
};
use crate::robust::{
    avoidable_forever, bellman_at, check_robust_satisfaction, is_possible, robust_value, spec_semantics,
    supportable_within, Objective, Verdict, ViConfig,
};
use crate::solve::{solve_with, Backend, SolveResult, SolveStatus, SolverConfig, FEASIBILITY_TOL};
use crate::uncertainty::Opt;

pub const DEFAULT_MAXIMALITY_BUDGET: usize = 14;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub solver: SolverConfig,
    pub encode: EncodeOptions,
    pub check_maximality: bool,
    /// Exhaustive maximality check only when Σ_s |α(s)| is at most this.
    pub maximality_budget: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            solver: SolverConfig::default(),
            encode: EncodeOptions::default(),
            check_maximality: true,
            maximality_budget: DEFAULT_MAXIMALITY_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Exhaustive {
    /// No multi-strategy admitting more decision pairs satisfies the spec.
    Confirmed {
        checked: usize,
    },
    /// A satisfying multi-strategy with more decision pairs exists.
    Refuted {
        beta: usize,
        strategy: MultiStrategy,
    },
    Skipped(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaximalityVerdict {
    /// A (state, action) whose addition keeps the spec satisfied, if any.
    pub augmentable: Option<(usize, usize)>,
    pub exhaustive: Exhaustive,
}

impl MaximalityVerdict {
    pub fn is_maximal(&self) -> bool {
        self.augmentable.is_none() && !matches!(self.exhaustive, Exhaustive::Refuted { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverStats {
    pub backend: String,
    pub status: SolveStatus,
    pub nodes: u64,
    pub wall_seconds: f64,
    /// Cuts added while solving without the gating block.
    pub trap_cuts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Synthesized {
    pub strategy: MultiStrategy,
    /// MILP objective: admitted decision pairs (non-target, non-absorbing states).
    pub objective: f64,
    /// Admitted decision pairs counted on the extracted strategy.
    pub beta: usize,
    /// Σ_s |θ(s)| over all states.
    pub permissiveness: usize,
    pub normalized_permissiveness: f64,
    pub choice_state_permissiveness: Option<f64>,
    pub verdict: Verdict,
    pub maximality: Option<MaximalityVerdict>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthesisReport {
    pub encoding: EncodingKind,
    pub spec: String,
    pub big_m: f64,
    pub stats: EncodingStats,
    pub solver: SolverStats,
    /// `None` when the MILP is infeasible: no robust multi-strategy exists.
    pub result: Option<Synthesized>,
    /// Model the strategy refers to (targets made absorbing).
    #[serde(skip)]
    pub model: ImdpModel,
}

impl SynthesisReport {
    pub fn is_infeasible(&self) -> bool {
        self.result.is_none()
    }
}

impl fmt::Display for SynthesisReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "spec: {}", self.spec)?;
        writeln!(
            f,
            "encoding: {} (binaries {}, continuous {}, constraints {}, big-M {})",
            self.encoding,
            self.stats.binaries,
            self.stats.continuous,
            self.stats.constraints,
            fmt_num(self.big_m)
        )?;
        writeln!(
            f,
            "solver: {} {} ({} nodes, {:.3} s)",
            self.solver.backend, self.solver.status, self.solver.nodes, self.solver.wall_seconds
        )?;
        let Some(r) = &self.result else {
            return writeln!(f, "result: no robust multi-strategy exists");
        };
        writeln!(f, "objective: {}", fmt_num(r.objective))?;
        writeln!(f, "beta: {}", r.beta)?;
        writeln!(f, "permissiveness: {}", r.permissiveness)?;
        writeln!(f, "normalized permissiveness: {}", fmt_num(r.normalized_permissiveness))?;
        match r.choice_state_permissiveness {
            Some(c) => writeln!(f, "choice-state permissiveness: {}", fmt_num(c))?,
            None => writeln!(f, "choice-state permissiveness: undefined")?,
        }
        writeln!(
            f,
            "verification: {} (value at initial state {})",
            if r.verdict.satisfied { "satisfied" } else { "violated" },
            fmt_num(r.verdict.witness)
        )?;
        if let Some(m) = &r.maximality {
            let single = match m.augmentable {
                None => "no single action can be added".to_string(),
                Some((s, a)) => {
                    format!("adding {} at {} keeps the spec", self.model.action_label(a), self.model.state_display(s))
                }
            };
            let exhaustive = match &m.exhaustive {
                Exhaustive::Confirmed { checked } => {
                    format!("confirmed over {checked} multi-strategies")
                }
                Exhaustive::Refuted { beta, .. } => format!("refuted, beta {beta} is achievable"),
                Exhaustive::Skipped(why) => format!("skipped ({why})"),
            };
            writeln!(f, "maximality: {single}; exhaustive {exhaustive}")?;
        }
        writeln!(f, "strategy:")?;
        for s in 0..self.model.num_states() {
            let acts: Vec<&str> = r.strategy.admitted(s).iter().map(|&a| self.model.action_label(a)).collect();
            writeln!(f, "  {}: {}", self.model.state_display(s), acts.join(" "))?;
        }
        Ok(())
    }
}

/// θ(s) = {a : y_s_a > 1 − tol} at decision states, all enabled actions
/// elsewhere.
pub fn extract_strategy(
    assignment: &[f64],
    model: &ImdpModel,
    encoding: &Encoding,
    int_tol: f64,
) -> Result<MultiStrategy, SynthError> {
    let mut sets: Vec<Option<Vec<usize>>> = vec![None; model.num_states()];
    for &(s, a, v) in &encoding.y {
        let set = sets[s].get_or_insert_with(Vec::new);
        if assignment.get(v).is_some_and(|&y| y > 1.0 - int_tol) {
            set.push(a);
        }
    }
    let mut admitted = Vec::with_capacity(model.num_states());
    for (s, set) in sets.into_iter().enumerate() {
        match set {
            Some(acts) if acts.is_empty() => return Err(SynthError::EmptyActionSet(s)),
            Some(acts) => admitted.push(acts),
            None => admitted.push(model.enabled(s).collect()),
        }
    }
    Ok(MultiStrategy::new(model, admitted)?)
}

/// Admitted pairs at non-target, non-absorbing states.
pub fn decision_beta(model: &ImdpModel, theta: &MultiStrategy, target: &BTreeSet<usize>) -> usize {
    decision_pairs(model, target).into_iter().filter(|&(s, a)| theta.admits(s, a)).count()
}

/// Two tiers: no single enabled action can be added without breaking the
/// spec, and, within `budget`, no multi-strategy with more admitted decision
/// pairs satisfies it.
pub fn check_maximality(
    model: &ImdpModel,
    spec: &Spec,
    theta: &MultiStrategy,
    budget: usize,
) -> Result<MaximalityVerdict, VerifyError> {
    let pairs = decision_pairs(model, &spec.target);
    let mut augmentable = None;
    for &(s, a) in &pairs {
        if theta.admits(s, a) {
            continue;
        }
        if check_robust_satisfaction(model, &theta.with_added(s, a), spec)?.satisfied {
            augmentable = Some((s, a));
            break;
        }
    }

    let size = model.num_enabled_pairs();
    if size > budget {
        let exhaustive = Exhaustive::Skipped(format!("{size} enabled pairs exceed the budget of {budget}"));
        return Ok(MaximalityVerdict { augmentable, exhaustive });
    }
    let beta = decision_beta(model, theta, &spec.target);
    // nonempty subsets of α(s) per decision state, as bit masks
    let states: BTreeSet<usize> = pairs.iter().map(|&(s, _)| s).collect();
    let states: Vec<usize> = states.into_iter().collect();
    let enabled: Vec<Vec<usize>> = states.iter().map(|&s| model.enabled(s).collect()).collect();
    let mut digits: Vec<u32> = vec![1; states.len()];
    let mut checked = 0usize;
    loop {
        let count: usize = digits.iter().map(|d| d.count_ones() as usize).sum();
        if count > beta {
            let mut admitted: Vec<Vec<usize>> = theta.sets().to_vec();
            for (k, &s) in states.iter().enumerate() {
                admitted[s] =
                    enabled[k].iter().enumerate().filter(|(i, _)| digits[k] >> i & 1 == 1).map(|(_, &a)| a).collect();
            }
            let candidate = MultiStrategy::new(model, admitted)?;
            checked += 1;
            if check_robust_satisfaction(model, &candidate, spec)?.satisfied {
                let exhaustive = Exhaustive::Refuted { beta: count, strategy: candidate };
                return Ok(MaximalityVerdict { augmentable, exhaustive });
            }
        }
        // odometer over masks 1..2^|α(s)|
        let mut k = 0;
        loop {
            if k == states.len() {
                return Ok(MaximalityVerdict { augmentable, exhaustive: Exhaustive::Confirmed { checked } });
            }
            digits[k] += 1;
            if digits[k] < 1 << enabled[k].len() {
                break;
            }
            digits[k] = 1;
            k += 1;
        }
    }
}

/// States reachable from the initial state through possible successors of
/// admitted actions.
fn reachable(model: &ImdpModel, theta: &MultiStrategy) -> Vec<bool> {
    let mut seen = vec![false; model.num_states()];
    let mut stack = vec![model.initial()];
    seen[model.initial()] = true;
    while let Some(s) = stack.pop() {
        for &a in theta.admitted(s) {
            let row = &model.choice(s, a).expect("admitted").successors;
            for (i, t) in row.iter().enumerate() {
                if !seen[t.state] && is_possible(row, i) {
                    seen[t.state] = true;
                    stack.push(t.state);
                }
            }
        }
    }
    seen
}

/// Starts from one action per decision state (the first optimal one in
/// `order`), optionally admits everything at states it does not reach, then
/// adds pairs in `order` whenever the spec still holds. Pairs at states that
/// stay unreachable are admitted at the end.
fn grow(
    model: &ImdpModel,
    pairs: &[(usize, usize, usize)],
    order: &[usize],
    gaps: &[f64],
    ok: &dyn Fn(&MultiStrategy) -> bool,
    admit_unreached_first: bool,
) -> Option<MultiStrategy> {
    let mut sets: Vec<Vec<usize>> = MultiStrategy::full(model).sets().to_vec();
    let mut chosen: HashMap<usize, usize> = HashMap::new();
    for &i in order.iter().filter(|&&i| gaps[i] <= GAP_TOL).chain(order) {
        chosen.entry(pairs[i].0).or_insert(pairs[i].1);
    }
    for (&s, &a) in &chosen {
        sets[s] = vec![a];
    }
    let mut theta = MultiStrategy::new(model, sets).ok()?;
    if !ok(&theta) {
        return None;
    }
    let admit_unreached = |theta: &MultiStrategy| {
        let seen = reachable(model, theta);
        let mut t = theta.clone();
        for &(s, a, _) in pairs {
            if !seen[s] {
                t = t.with_added(s, a);
            }
        }
        t
    };
    if admit_unreached_first {
        let t = admit_unreached(&theta);
        if ok(&t) {
            theta = t;
        }
    }
    for &i in order {
        let (s, a, _) = pairs[i];
        if theta.admits(s, a) {
            continue;
        }
        let t = theta.with_added(s, a);
        if ok(&t) {
            theta = t;
        }
    }
    let t = admit_unreached(&theta);
    if ok(&t) {
        theta = t;
    }
    Some(theta)
}

/// Q-value gaps below this count as optimal in [`greedy_start`].
const GAP_TOL: f64 = 1e-9;

/// Decision pairs beyond which no starting incumbent is searched for.
const GREEDY_PAIR_LIMIT: usize = 2000;

/// Admission values of a satisfying multi-strategy, used as a starting
/// incumbent: the better of two [`grow`] runs, ranking pairs by root LP
/// value or by how far they are from optimal for the opposite player.
/// Dropping a pair never lowers the robust value bounded by the spec.
fn greedy_start(model: &ImdpModel, spec: &Spec, encoding: &Encoding, lp: &[f64]) -> Option<Vec<(usize, f64)>> {
    let pairs = &encoding.y;
    if pairs.len() > GREEDY_PAIR_LIMIT {
        return None;
    }
    let ok = |t: &MultiStrategy| check_robust_satisfaction(model, t, spec).is_ok_and(|v| v.satisfied);
    let full = MultiStrategy::full(model);
    let (objective, player, adversary) = spec_semantics(spec.kind);
    let best_player = match player {
        Opt::Min => Opt::Max,
        Opt::Max => Opt::Min,
    };
    let best = robust_value(model, &full, objective, best_player, adversary, &spec.target, ViConfig::default()).ok()?;
    let mut scratch = Vec::new();
    let gaps: Vec<f64> = pairs
        .iter()
        .map(|&(s, a, _)| {
            let single = MultiStrategy::with_overrides(model, &[(s, &[a])]).expect("enabled action");
            let q = bellman_at(model, &single, objective, best_player, adversary, s, &best.values, &mut scratch);
            let gap = (q - best.values[s]).abs();
            if gap.is_nan() {
                0.0
            } else {
                gap
            }
        })
        .collect();
    let by_gap = |i: &usize, j: &usize| gaps[*i].total_cmp(&gaps[*j]);
    let by_lp = |i: &usize, j: &usize| lp[pairs[*j].2].total_cmp(&lp[pairs[*i].2]);
    let mut best: Option<MultiStrategy> = None;
    for (lp_first, admit_first) in [(true, true), (true, false), (false, true), (false, false)] {
        let mut order: Vec<usize> = (0..pairs.len()).collect();
        if lp_first {
            order.sort_by(|i, j| by_lp(i, j).then(by_gap(i, j)));
        } else {
            order.sort_by(|i, j| by_gap(i, j).then(by_lp(i, j)));
        }
        let Some(theta) = grow(model, pairs, &order, &gaps, &ok, admit_first) else {
            continue;
        };
        if best.as_ref().is_none_or(|b| permissiveness(model, &theta) > permissiveness(model, b)) {
            best = Some(theta);
        }
    }
    let theta = best?;
    Some(pairs.iter().map(|&(s, a, v)| (v, if theta.admits(s, a) { 1.0 } else { 0.0 })).collect())
}

/// Cuts `x_s + Σ y ≤ |y|` over the trap actions of the states that `s` can
/// be kept among, for every state `s` that has a positive value but lies in
/// a set where the admitted actions let the adversary avoid the target
/// forever. Each cut is valid for every satisfying multi-strategy with its
/// robust values.
fn trap_cuts(
    model: &ImdpModel,
    spec: &Spec,
    theta: &MultiStrategy,
    assignment: &[f64],
    encoding: &Encoding,
) -> Vec<(Vec<(f64, usize)>, f64)> {
    let n = model.num_states();
    let z = avoidable_forever(model, theta, &spec.target);
    let ymap: HashMap<(usize, usize), usize> = encoding.y.iter().map(|&(s, a, v)| ((s, a), v)).collect();
    let row = |s: usize, a: usize| &model.choice(s, a).expect("admitted").successors;
    let trap: Vec<Option<usize>> = (0..n)
        .map(|t| {
            if !z[t] {
                return None;
            }
            theta.admitted(t).iter().copied().find(|&b| supportable_within(row(t, b), |u| z[u]))
        })
        .collect();
    let mut cuts = Vec::new();
    for s in 0..n {
        if !z[s] || assignment[encoding.x[s]] <= FEASIBILITY_TOL {
            continue;
        }
        let mut inside = vec![false; n];
        inside[s] = true;
        let mut stack = vec![s];
        let mut terms = vec![(1.0, encoding.x[s])];
        while let Some(t) = stack.pop() {
            let b = trap[t].expect("trap states keep some action inside");
            if let Some(&v) = ymap.get(&(t, b)) {
                terms.push((1.0, v));
            }
            for u in row(t, b) {
                if z[u.state] && u.upper > 0.0 && !inside[u.state] {
                    inside[u.state] = true;
                    stack.push(u.state);
                }
            }
        }
        let rhs = (terms.len() - 1) as f64;
        cuts.push((terms, rhs));
    }
    cuts
}

/// Solves the encoding without its gating block, adding [`trap_cuts`] and
/// re-solving until the admitted strategy has no trap with positive value.
/// Returns the last result, the encoding it refers to, and the cut count.
fn solve_with_trap_cuts(
    model: &ImdpModel,
    spec: &Spec,
    kind: EncodingKind,
    config: &SynthConfig,
) -> Result<(SolveResult, Encoding, usize), SynthError> {
    let opts = EncodeOptions { gating: false, ..config.encode.clone() };
    let mut encoding = build_encoding(model, spec, kind, &opts)?;
    let mut start_values: Option<Option<Vec<(usize, f64)>>> = None;
    let mut cuts = 0usize;
    let mut nodes = 0u64;
    let mut seconds = 0.0;
    loop {
        let mut solver = config.solver.clone();
        solver.node_cap = config.solver.node_cap.saturating_sub(nodes).max(1);
        solver.time_cap = config.solver.time_cap.map(|t| (t - seconds).max(1e-3));
        let mut start =
            |lp: &[f64]| start_values.get_or_insert_with(|| greedy_start(model, spec, &encoding, lp)).clone();
        let mut res = solve_with(&encoding.problem, &solver, Some(&mut start))?;
        nodes += res.nodes;
        seconds += res.wall_seconds;
        res.nodes = nodes;
        res.wall_seconds = seconds;
        if res.status != SolveStatus::Optimal {
            return Ok((res, encoding, cuts));
        }
        let theta = extract_strategy(&res.assignment, model, &encoding, config.solver.int_tol)?;
        let new = trap_cuts(model, spec, &theta, &res.assignment, &encoding);
        if new.is_empty() {
            return Ok((res, encoding, cuts));
        }
        for (terms, rhs) in new {
            let name = format!("trap_{cuts}");
            encoding.problem.add_constraint(&name, terms, Sense::Le, rhs, ConstraintRole::TrapCut);
            cuts += 1;
        }
    }
}

/// Encodes, solves, extracts θ and verifies it.
///
/// With the built-in backend, a probability lower bound whose encoding needs
/// the gating block is solved without it, through [`solve_with_trap_cuts`];
/// the reported encoding statistics still describe the full encoding.
pub fn synthesize(
    model: &ImdpModel,
    spec: &Spec,
    kind: EncodingKind,
    config: &SynthConfig,
) -> Result<SynthesisReport, SynthError> {
    spec.check_against(model)?;
    let model = model.with_absorbing_targets(&spec.target).unwrap_or_else(|| model.clone());
    let full_encoding = build_encoding(&model, spec, kind, &config.encode)?;
    let stats = encoding_stats(&full_encoding.problem);
    let lazy = full_encoding.gated && spec.kind == SpecKind::ProbGe && config.solver.backend == Backend::Builtin;
    let (res, encoding, trap_cuts) = if lazy {
        solve_with_trap_cuts(&model, spec, kind, config)?
    } else {
        let mut start = |lp: &[f64]| greedy_start(&model, spec, &full_encoding, lp);
        let res = solve_with(&full_encoding.problem, &config.solver, Some(&mut start))?;
        (res, full_encoding, 0)
    };
    let solver = SolverStats {
        backend: match &config.solver.backend {
            Backend::Builtin => "builtin".into(),
            Backend::External(_) => "external".into(),
        },
        status: res.status,
        nodes: res.nodes,
        wall_seconds: res.wall_seconds,
        trap_cuts,
    };
    let mut report = SynthesisReport {
        encoding: kind,
        spec: spec.to_string(),
        big_m: encoding.big_m,
        stats,
        solver,
        result: None,
        model,
    };
    match res.status {
        SolveStatus::Optimal => {}
        SolveStatus::Infeasible => return Ok(report),
        SolveStatus::Unbounded => return Err(SynthError::Unbounded),
        SolveStatus::CapExceeded => {
            return Err(SynthError::CapExceeded(format!("stopped after {} nodes", res.nodes)));
        }
    }
    let model = &report.model;
    let theta = extract_strategy(&res.assignment, model, &encoding, config.solver.int_tol)?;
    let verdict = check_robust_satisfaction(model, &theta, spec)?;
    if !verdict.satisfied {
        return Err(SynthError::Unsound { witness: verdict.witness });
    }
    let beta = decision_beta(model, &theta, &spec.target);
    let maximality = if config.check_maximality {
        Some(check_maximality(model, spec, &theta, config.maximality_budget)?)
    } else {
        None
    };
    report.result = Some(Synthesized {
        objective: res.objective,
        beta,
        permissiveness: permissiveness(model, &theta),
        normalized_permissiveness: normalized_permissiveness(model, &theta),
        choice_state_permissiveness: choice_state_permissiveness(model, &theta, spec),
        verdict,
        maximality,
        strategy: theta,
    });
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub action: String,
    pub min_value: f64,
    pub max_value: f64,
}

/// Rounds grid points to 12 decimals so that `0.07` stays `0.07`.
pub fn epsilon_grid(start: f64, end: f64, step: f64) -> Vec<f64> {
    if !(step > 0.0) || end < start {
        return Vec::new();
    }
    let count = ((end - start) / step + 1e-9).floor() as usize + 1;
    (0..count).map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12).collect()
}

/// For every ε and every action enabled at the initial state: the reach
/// probability of `target` from the initial state with that action fixed
/// there, under the minimizing and under the maximizing resolution of the
/// intervals (other states use all their actions, resolved the same way).
pub fn sweep_epsilon<F>(
    template: F,
    target: &BTreeSet<usize>,
    actions: Option<&[String]>,
    grid: &[f64],
) -> Result<Vec<SweepRow>, SynthError>
where
    F: Fn(f64) -> Result<ImdpModel, ModelError>,
{
    let mut rows = Vec::new();
    for &eps in grid {
        let model = template(eps)?;
        let init = model.initial();
        for a in model.enabled(init) {
            let label = model.action_label(a).to_string();
            if actions.is_some_and(|list| !list.contains(&label)) {
                continue;
            }
            let theta = MultiStrategy::with_overrides(&model, &[(init, &[a])])?;
            let lo = robust_value(&model, &theta, Objective::Reach, Opt::Min, Opt::Min, target, ViConfig::default())?;
            let hi = robust_value(&model, &theta, Objective::Reach, Opt::Max, Opt::Max, target, ViConfig::default())?;
            rows.push(SweepRow { epsilon: eps, action: label, min_value: lo[init], max_value: hi[init] });
        }
    }
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["epsilon", "action", "min_value", "max_value"]).expect("in-memory write");
    for r in rows {
        w.write_record([fmt_num(r.epsilon), r.action.clone(), fmt_num(r.min_value), fmt_num(r.max_value)])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}
