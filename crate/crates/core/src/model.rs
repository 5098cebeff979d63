//! Interval MDPs, specifications, and (multi-)strategies.
//!
//! States and actions are dense indices. Every state carries at least one
//! [`Choice`]; absorbing states carry a single self-loop with the point
//! interval `[1, 1]`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::Serialize;

use crate::error::ModelError;

/// Label used for the self-loop action of absorbing states.
pub const LOOP_ACTION: &str = "loop";

/// Tolerance for the row-sum checks in [`validate_model`].
pub const SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Successor {
    pub state: usize,
    pub lower: f64,
    pub upper: f64,
}

impl Successor {
    pub fn new(state: usize, lower: f64, upper: f64) -> Self {
        Self { state, lower, upper }
    }

    pub fn point(state: usize, p: f64) -> Self {
        Self::new(state, p, p)
    }
}

/// One enabled action at a state: its interval row and immediate reward.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Choice {
    pub action: usize,
    pub successors: Vec<Successor>,
    pub reward: f64,
}

impl Choice {
    fn is_self_loop(&self, state: usize) -> bool {
        self.successors.len() == 1
            && self.successors[0].state == state
            && self.successors[0].lower == 1.0
            && self.successors[0].upper == 1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImdpModel {
    names: Vec<Option<String>>,
    initial: usize,
    actions: Vec<String>,
    choices: Vec<Vec<Choice>>,
    labels: BTreeMap<String, BTreeSet<usize>>,
}

impl ImdpModel {
    pub fn num_states(&self) -> usize {
        self.choices.len()
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn action_label(&self, action: usize) -> &str {
        &self.actions[action]
    }

    pub fn action_index(&self, label: &str) -> Option<usize> {
        self.actions.iter().position(|a| a == label)
    }

    pub fn state_name(&self, state: usize) -> Option<&str> {
        self.names[state].as_deref()
    }

    /// Display name, falling back to `s<index>`.
    pub fn state_display(&self, state: usize) -> String {
        match &self.names[state] {
            Some(n) => n.clone(),
            None => format!("s{state}"),
        }
    }

    pub fn labels(&self) -> &BTreeMap<String, BTreeSet<usize>> {
        &self.labels
    }

    pub fn label(&self, name: &str) -> Option<&BTreeSet<usize>> {
        self.labels.get(name)
    }

    /// Enabled choices of `state`, ordered by action index.
    pub fn choices(&self, state: usize) -> &[Choice] {
        &self.choices[state]
    }

    pub fn choice(&self, state: usize, action: usize) -> Option<&Choice> {
        self.choices[state].iter().find(|c| c.action == action)
    }

    /// α(s): enabled action indices in ascending order.
    pub fn enabled(&self, state: usize) -> impl Iterator<Item = usize> + '_ {
        self.choices[state].iter().map(|c| c.action)
    }

    pub fn num_enabled(&self, state: usize) -> usize {
        self.choices[state].len()
    }

    /// Σ_s |α(s)|.
    pub fn num_enabled_pairs(&self) -> usize {
        self.choices.iter().map(Vec::len).sum()
    }

    /// Number of listed successor triples over all enabled pairs.
    pub fn num_transitions(&self) -> usize {
        self.choices.iter().flat_map(|cs| cs.iter()).map(|c| c.successors.len()).sum()
    }

    /// A state whose only choice is the `[1, 1]` self-loop.
    pub fn is_absorbing(&self, state: usize) -> bool {
        let cs = &self.choices[state];
        cs.len() == 1 && cs[0].is_self_loop(state)
    }

    /// Returns a copy in which every state of `targets` is absorbing with a
    /// single zero-reward self-loop. Returns `None` when nothing changes.
    pub fn with_absorbing_targets(&self, targets: &BTreeSet<usize>) -> Option<ImdpModel> {
        if targets.iter().all(|&t| self.is_absorbing(t) && self.choices[t][0].reward == 0.0) {
            return None;
        }
        let mut model = self.clone();
        let loop_action = match model.action_index(LOOP_ACTION) {
            Some(a) => a,
            None => {
                model.actions.push(LOOP_ACTION.to_string());
                model.actions.len() - 1
            }
        };
        for &t in targets {
            let keep = model.is_absorbing(t) && model.choices[t][0].reward == 0.0;
            if !keep {
                model.choices[t] =
                    vec![Choice { action: loop_action, successors: vec![Successor::point(t, 1.0)], reward: 0.0 }];
            }
        }
        Some(model)
    }

    /// States reachable from the initial state through the admitted actions
    /// of `theta`, following edges with a positive upper bound.
    pub fn reachable_under(&self, theta: &MultiStrategy) -> Vec<bool> {
        let mut seen = vec![false; self.num_states()];
        let mut queue = VecDeque::from([self.initial]);
        seen[self.initial] = true;
        while let Some(s) = queue.pop_front() {
            for c in &self.choices[s] {
                if !theta.admits(s, c.action) {
                    continue;
                }
                for succ in &c.successors {
                    if succ.upper > 0.0 && !seen[succ.state] {
                        seen[succ.state] = true;
                        queue.push_back(succ.state);
                    }
                }
            }
        }
        seen
    }

    pub(crate) fn from_parts(
        names: Vec<Option<String>>,
        initial: usize,
        actions: Vec<String>,
        choices: Vec<Vec<Choice>>,
        labels: BTreeMap<String, BTreeSet<usize>>,
    ) -> Self {
        Self { names, initial, actions, choices, labels }
    }
}

/// Incremental construction of an [`ImdpModel`]. `build` sorts everything
/// into canonical order and runs [`validate_model`].
#[derive(Debug, Clone)]
pub struct ModelBuilder {
    names: Vec<Option<String>>,
    initial: usize,
    actions: Vec<String>,
    rows: BTreeMap<(usize, usize), Vec<Successor>>,
    rewards: BTreeMap<(usize, usize), f64>,
    labels: BTreeMap<String, BTreeSet<usize>>,
}

impl ModelBuilder {
    pub fn new(num_states: usize, actions: &[&str]) -> Self {
        Self {
            names: vec![None; num_states],
            initial: 0,
            actions: actions.iter().map(|a| a.to_string()).collect(),
            rows: BTreeMap::new(),
            rewards: BTreeMap::new(),
            labels: BTreeMap::new(),
        }
    }

    pub fn num_states(&self) -> usize {
        self.names.len()
    }

    pub fn action(&mut self, label: &str) -> usize {
        match self.actions.iter().position(|a| a == label) {
            Some(i) => i,
            None => {
                self.actions.push(label.to_string());
                self.actions.len() - 1
            }
        }
    }

    pub fn initial(&mut self, state: usize) -> &mut Self {
        self.initial = state;
        self
    }

    pub fn name(&mut self, state: usize, name: impl Into<String>) -> &mut Self {
        self.names[state] = Some(name.into());
        self
    }

    /// Adds `[lower, upper]` for `(state, action, succ)`. Repeated calls for
    /// the same successor add up the bounds.
    pub fn interval(&mut self, state: usize, action: usize, succ: usize, lower: f64, upper: f64) -> &mut Self {
        let row = self.rows.entry((state, action)).or_default();
        match row.iter_mut().find(|s| s.state == succ) {
            Some(s) => {
                s.lower += lower;
                s.upper += upper;
            }
            None => row.push(Successor::new(succ, lower, upper)),
        }
        self
    }

    pub fn has_row(&self, state: usize, action: usize) -> bool {
        self.rows.contains_key(&(state, action))
    }

    pub fn reward(&mut self, state: usize, action: usize, reward: f64) -> &mut Self {
        self.rewards.insert((state, action), reward);
        self
    }

    pub fn label(&mut self, name: &str, state: usize) -> &mut Self {
        self.labels.entry(name.to_string()).or_default().insert(state);
        self
    }

    pub fn empty_label(&mut self, name: &str) -> &mut Self {
        self.labels.entry(name.to_string()).or_default();
        self
    }

    /// Makes `state` absorbing with the `loop` action.
    pub fn absorbing(&mut self, state: usize) -> &mut Self {
        let a = self.action(LOOP_ACTION);
        self.rows.insert((state, a), vec![Successor::point(state, 1.0)]);
        self
    }

    /// Gives every state without any row the absorbing self-loop.
    pub fn close_with_self_loops(&mut self) -> &mut Self {
        let has_row: BTreeSet<usize> = self.rows.keys().map(|&(s, _)| s).collect();
        for s in 0..self.num_states() {
            if !has_row.contains(&s) {
                self.absorbing(s);
            }
        }
        self
    }

    /// Builds without validation.
    pub fn build_unchecked(&self) -> ImdpModel {
        let n = self.num_states();
        let mut choices: Vec<Vec<Choice>> = vec![Vec::new(); n];
        for (&(s, a), row) in &self.rows {
            let mut successors = row.clone();
            successors.sort_by_key(|x| x.state);
            let reward = self.rewards.get(&(s, a)).copied().unwrap_or(0.0);
            if s < n {
                choices[s].push(Choice { action: a, successors, reward });
            }
        }
        ImdpModel::from_parts(self.names.clone(), self.initial, self.actions.clone(), choices, self.labels.clone())
    }

    pub fn build(&self) -> Result<ImdpModel, ModelError> {
        let model = self.build_unchecked();
        let mut diags = validate_model(&model);
        for &(s, a) in self.rewards.keys() {
            if !self.rows.contains_key(&(s, a)) {
                diags.push(Diagnostic::error(
                    Some(s),
                    Some(a),
                    None,
                    "reward for an action that is not enabled".into(),
                ));
            }
        }
        if diags.iter().any(|d| d.severity == Severity::Error) {
            Err(ModelError::Invalid(diags))
        } else {
            Ok(model)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Severity {
    Error,
    Warning,
}

/// A located violation of a model invariant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub state: Option<usize>,
    pub action: Option<usize>,
    pub successor: Option<usize>,
    pub message: String,
}

impl Diagnostic {
    fn error(state: Option<usize>, action: Option<usize>, successor: Option<usize>, message: String) -> Self {
        Self { severity: Severity::Error, state, action, successor, message }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{sev}")?;
        if let Some(s) = self.state {
            write!(f, " at state {s}")?;
        }
        if let Some(a) = self.action {
            write!(f, ", action {a}")?;
        }
        if let Some(t) = self.successor {
            write!(f, ", successor {t}")?;
        }
        write!(f, ": {}", self.message)
    }
}

/// Checks every structural invariant of `model`. The model is usable by the
/// rest of the crate iff no diagnostic has [`Severity::Error`].
pub fn validate_model(model: &ImdpModel) -> Vec<Diagnostic> {
    let n = model.num_states();
    let mut out = Vec::new();
    if n == 0 {
        out.push(Diagnostic::error(None, None, None, "model has no states".into()));
        return out;
    }
    if model.initial >= n {
        out.push(Diagnostic::error(None, None, None, format!("initial state {} out of range", model.initial)));
    }
    for (label, states) in &model.labels {
        for &s in states {
            if s >= n {
                out.push(Diagnostic::error(Some(s), None, None, format!("label \"{label}\" references unknown state")));
            }
        }
        if states.is_empty() {
            out.push(Diagnostic {
                severity: Severity::Warning,
                state: None,
                action: None,
                successor: None,
                message: format!("label \"{label}\" is empty"),
            });
        }
    }
    for s in 0..n {
        let cs = &model.choices[s];
        if cs.is_empty() {
            out.push(Diagnostic::error(Some(s), None, None, "state has no enabled actions".into()));
        }
        let mut seen_actions = BTreeSet::new();
        for c in cs {
            let a = c.action;
            if a >= model.actions.len() {
                out.push(Diagnostic::error(Some(s), Some(a), None, "undeclared action".into()));
            }
            if !seen_actions.insert(a) {
                out.push(Diagnostic::error(Some(s), Some(a), None, "action enabled twice".into()));
            }
            if !(c.reward.is_finite() && c.reward >= 0.0) {
                out.push(Diagnostic::error(
                    Some(s),
                    Some(a),
                    None,
                    format!("reward {} is not a nonnegative number", c.reward),
                ));
            }
            let mut seen_succ = BTreeSet::new();
            let (mut lo_sum, mut hi_sum) = (0.0, 0.0);
            let mut any_positive = false;
            for t in &c.successors {
                let loc = (Some(s), Some(a), Some(t.state));
                if t.state >= n {
                    out.push(Diagnostic::error(loc.0, loc.1, loc.2, "successor out of range".into()));
                }
                if !seen_succ.insert(t.state) {
                    out.push(Diagnostic::error(loc.0, loc.1, loc.2, "duplicate successor".into()));
                }
                if !(t.lower.is_finite() && t.upper.is_finite()) {
                    out.push(Diagnostic::error(loc.0, loc.1, loc.2, "non-finite bound".into()));
                    continue;
                }
                if t.lower < 0.0 || t.upper > 1.0 {
                    out.push(Diagnostic::error(loc.0, loc.1, loc.2, "bound outside [0, 1]".into()));
                }
                if t.lower > t.upper {
                    out.push(Diagnostic::error(loc.0, loc.1, loc.2, "lower exceeds upper".into()));
                }
                lo_sum += t.lower;
                hi_sum += t.upper;
                any_positive |= t.upper > 0.0;
            }
            if !any_positive {
                out.push(Diagnostic::error(Some(s), Some(a), None, "no successor with positive upper bound".into()));
            }
            if lo_sum > 1.0 + SUM_TOL {
                out.push(Diagnostic::error(Some(s), Some(a), None, format!("lower sum {lo_sum} exceeds 1")));
            }
            if hi_sum < 1.0 - SUM_TOL {
                out.push(Diagnostic::error(Some(s), Some(a), None, format!("upper sum {hi_sum} is below 1")));
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum SpecKind {
    ProbGe,
    ProbLe,
    RewGe,
    RewLe,
}

impl SpecKind {
    pub fn is_reward(self) -> bool {
        matches!(self, SpecKind::RewGe | SpecKind::RewLe)
    }

    /// True for the `>=` forms, whose robust value is a double infimum.
    pub fn is_lower_bound(self) -> bool {
        matches!(self, SpecKind::ProbGe | SpecKind::RewGe)
    }
}

/// `P⋈p [F target]` or `R⋈b [F target]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spec {
    pub kind: SpecKind,
    pub threshold: f64,
    pub target: BTreeSet<usize>,
    pub label: Option<String>,
}

impl Spec {
    pub fn new(kind: SpecKind, threshold: f64, target: impl IntoIterator<Item = usize>) -> Result<Self, ModelError> {
        let target: BTreeSet<usize> = target.into_iter().collect();
        let spec = Spec { kind, threshold, target, label: None };
        spec.check()?;
        Ok(spec)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn check(&self) -> Result<(), ModelError> {
        let ok = if self.kind.is_reward() {
            self.threshold.is_finite() && self.threshold >= 0.0
        } else {
            (0.0..=1.0).contains(&self.threshold)
        };
        if !ok {
            return Err(ModelError::ThresholdOutOfRange(self.threshold));
        }
        if self.target.is_empty() {
            return Err(ModelError::EmptyTarget);
        }
        Ok(())
    }

    pub fn check_against(&self, model: &ImdpModel) -> Result<(), ModelError> {
        self.check()?;
        if let Some(&s) = self.target.iter().find(|&&s| s >= model.num_states()) {
            return Err(ModelError::UnknownState(s));
        }
        Ok(())
    }

    pub fn is_target(&self, state: usize) -> bool {
        self.target.contains(&state)
    }
}

impl fmt::Display for Spec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (op, cmp) = match self.kind {
            SpecKind::ProbGe => ("P", ">="),
            SpecKind::ProbLe => ("P", "<="),
            SpecKind::RewGe => ("R", ">="),
            SpecKind::RewLe => ("R", "<="),
        };
        write!(f, "{op}{cmp}{} [F ", self.threshold)?;
        match &self.label {
            Some(l) => write!(f, "\"{l}\"]"),
            None => {
                let states: Vec<String> = self.target.iter().map(|s| s.to_string()).collect();
                write!(f, "{{{}}}]", states.join(","))
            }
        }
    }
}

/// θ: a nonempty set of admitted actions per state, each a subset of α(s).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct MultiStrategy {
    admitted: Vec<Vec<usize>>,
}

impl MultiStrategy {
    /// Admits every enabled action.
    pub fn full(model: &ImdpModel) -> Self {
        Self { admitted: (0..model.num_states()).map(|s| model.enabled(s).collect()).collect() }
    }

    pub fn new(model: &ImdpModel, admitted: Vec<Vec<usize>>) -> Result<Self, ModelError> {
        if admitted.len() != model.num_states() {
            return Err(ModelError::StrategyShape { expected: model.num_states(), found: admitted.len() });
        }
        let mut sets = Vec::with_capacity(admitted.len());
        for (s, mut acts) in admitted.into_iter().enumerate() {
            acts.sort_unstable();
            acts.dedup();
            if acts.is_empty() {
                return Err(ModelError::EmptyAdmittedSet(s));
            }
            if let Some(&a) = acts.iter().find(|&&a| model.choice(s, a).is_none()) {
                return Err(ModelError::ActionNotEnabled { state: s, action: a });
            }
            sets.push(acts);
        }
        Ok(Self { admitted: sets })
    }

    /// Full θ except at the listed states, which admit exactly the given actions.
    pub fn with_overrides(model: &ImdpModel, overrides: &[(usize, &[usize])]) -> Result<Self, ModelError> {
        let mut sets: Vec<Vec<usize>> = (0..model.num_states()).map(|s| model.enabled(s).collect()).collect();
        for &(s, acts) in overrides {
            if s >= sets.len() {
                return Err(ModelError::UnknownState(s));
            }
            sets[s] = acts.to_vec();
        }
        Self::new(model, sets)
    }

    pub fn num_states(&self) -> usize {
        self.admitted.len()
    }

    pub fn admitted(&self, state: usize) -> &[usize] {
        &self.admitted[state]
    }

    pub fn admits(&self, state: usize, action: usize) -> bool {
        self.admitted[state].binary_search(&action).is_ok()
    }

    pub fn sets(&self) -> &[Vec<usize>] {
        &self.admitted
    }

    /// Copy with `action` added at `state` (no-op if already admitted).
    pub fn with_added(&self, state: usize, action: usize) -> Self {
        let mut out = self.clone();
        if let Err(pos) = out.admitted[state].binary_search(&action) {
            out.admitted[state].insert(pos, action);
        }
        out
    }

    /// Copy without `action` at `state`; `None` if that would leave the
    /// state with nothing admitted.
    pub fn with_removed(&self, state: usize, action: usize) -> Option<Self> {
        let pos = self.admitted[state].binary_search(&action).ok()?;
        if self.admitted[state].len() == 1 {
            return None;
        }
        let mut out = self.clone();
        out.admitted[state].remove(pos);
        Some(out)
    }
}

/// σ: one enabled action per state.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct DeterministicStrategy {
    pub choice: Vec<usize>,
}

impl DeterministicStrategy {
    pub fn as_multi(&self) -> MultiStrategy {
        MultiStrategy { admitted: self.choice.iter().map(|&a| vec![a]).collect() }
    }
}

/// β(θ) = Σ_s |θ(s)|.
pub fn permissiveness(_model: &ImdpModel, theta: &MultiStrategy) -> usize {
    theta.admitted.iter().map(Vec::len).sum()
}

/// β(θ) / Σ_s |α(s)|.
pub fn normalized_permissiveness(model: &ImdpModel, theta: &MultiStrategy) -> f64 {
    permissiveness(model, theta) as f64 / model.num_enabled_pairs() as f64
}

/// Same ratio as [`normalized_permissiveness`], restricted to non-target
/// states with at least two enabled actions that are reachable from the
/// initial state under `theta`. `None` when no such state exists.
pub fn choice_state_permissiveness(model: &ImdpModel, theta: &MultiStrategy, spec: &Spec) -> Option<f64> {
    let reach = model.reachable_under(theta);
    let (mut num, mut den) = (0usize, 0usize);
    for s in 0..model.num_states() {
        if reach[s] && !spec.is_target(s) && model.num_enabled(s) >= 2 {
            num += theta.admitted(s).len();
            den += model.num_enabled(s);
        }
    }
    (den > 0).then(|| num as f64 / den as f64)
}

pub const DEFAULT_STRATEGY_CAP: u128 = 1_000_000;

/// Number of deterministic strategies compliant with `theta`.
pub fn count_compliant(theta: &MultiStrategy) -> u128 {
    theta.admitted.iter().fold(1u128, |acc, s| acc.saturating_mul(s.len() as u128))
}

/// Iterates σ ◁ θ in lexicographic order of `(σ(0), σ(1), …)`.
pub fn compliant_strategies(theta: &MultiStrategy, cap: u128) -> Result<CompliantStrategies<'_>, ModelError> {
    let count = count_compliant(theta);
    if count > cap {
        return Err(ModelError::CapExceeded { count, cap });
    }
    Ok(CompliantStrategies { theta, digits: vec![0; theta.num_states()], done: false })
}

pub struct CompliantStrategies<'a> {
    theta: &'a MultiStrategy,
    digits: Vec<usize>,
    done: bool,
}

impl Iterator for CompliantStrategies<'_> {
    type Item = DeterministicStrategy;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let sets = &self.theta.admitted;
        let out = DeterministicStrategy { choice: self.digits.iter().enumerate().map(|(s, &d)| sets[s][d]).collect() };
        // odometer, last state fastest
        let mut i = self.digits.len();
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            self.digits[i] += 1;
            if self.digits[i] < sets[i].len() {
                break;
            }
            self.digits[i] = 0;
        }
        Some(out)
    }
}
