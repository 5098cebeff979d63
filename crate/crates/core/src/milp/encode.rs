//! MILP encodings whose optimal objective is the largest number of state-action
//! pairs a robust multi-strategy can admit.
//!
//! Both encodings share value variables `x_s`, admission binaries `y_s_a`, one
//! admission constraint per decision state, the threshold constraint, and pins
//! for target states. They differ in how the inner adversarial optimization
//! over 𝒫(s,a) is expressed: one inequality per polytope vertex, or the LP
//! dual of the inner problem with big-M linearization of `λ·y`.
//!
//! Reward specifications and lower-bounded reachability with avoidable end
//! components also get a gating block: per-state binaries (`c_s` coverage for
//! rewards, `pi_s` positivity for reachability), ranks `rho_s`, and witness
//! binaries `w_s_a_t` that certify progress towards the target.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{EncodeError, VerifyError};
use crate::milp::problem::{ConstraintRole, MilpProblem, Sense, VarKind, VarRole};
use crate::model::{ImdpModel, MultiStrategy, Spec, SpecKind, Successor};
use crate::robust::{
    almost_sure_mask, avoidable_forever, cannot_reach, is_possible, robust_value, Objective, ViConfig,
};
use crate::uncertainty::{enumerate_vertices, Opt};

/// Margin by which the upper bounds of the non-witness successors must fall
/// short of 1 for a row to be forced towards its witnesses. Larger than the
/// solver's feasibility tolerance so that a tolerated violation stays sound.
pub const PROGRESS_MARGIN: f64 = 1e-5;

pub const DEFAULT_VERTEX_CAP: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum EncodingKind {
    Vertex,
    Dual,
}

impl std::fmt::Display for EncodingKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EncodingKind::Vertex => "vertex",
            EncodingKind::Dual => "dual",
        })
    }
}

impl std::str::FromStr for EncodingKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "vertex" => Ok(EncodingKind::Vertex),
            "dual" => Ok(EncodingKind::Dual),
            _ => Err(format!("unknown encoding `{s}` (expected vertex or dual)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncodeOptions {
    /// Refuse vertex encodings with more robust constraints than this.
    pub vertex_cap: usize,
    /// Use this big-M instead of [`compute_big_m`].
    pub big_m: Option<f64>,
    /// Emit the gating block where it is needed. Without it a probability
    /// lower bound is only sound once trap cuts exclude every admitted trap.
    pub gating: bool,
}

impl Default for EncodeOptions {
    fn default() -> Self {
        Self { vertex_cap: DEFAULT_VERTEX_CAP, big_m: None, gating: true }
    }
}

/// A built MILP plus the handles needed to read a multi-strategy back.
#[derive(Debug, Clone)]
pub struct Encoding {
    pub problem: MilpProblem,
    pub kind: EncodingKind,
    pub big_m: f64,
    /// `x_s` per state.
    pub x: Vec<usize>,
    /// (state, action, variable index of `y_s_a`) per decision pair.
    pub y: Vec<(usize, usize, usize)>,
    /// Whether the gating/ranking block was emitted.
    pub gated: bool,
}

/// Pairs that get an admission binary: every enabled action of every
/// non-target state that is not absorbing.
pub fn decision_pairs(model: &ImdpModel, target: &BTreeSet<usize>) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for s in 0..model.num_states() {
        if target.contains(&s) || model.is_absorbing(s) {
            continue;
        }
        out.extend(model.enabled(s).map(|a| (s, a)));
    }
    out
}

/// M = 2 for probabilities. For rewards M = max(1.01·V + 1, 1.01·(V + r_max)),
/// where V is the largest robust max-max expected reward under the full
/// strategy and r_max the largest one-step reward; every state that can reach
/// the target at all must reach it almost surely under the full strategy.
/// The second term keeps `x_s ≥ Σ P x + r − M` slack for values up to V when
/// single rewards are large.
pub fn compute_big_m(model: &ImdpModel, spec: &Spec) -> Result<f64, EncodeError> {
    spec.check_against(model)?;
    if !spec.kind.is_reward() {
        return Ok(2.0);
    }
    let full = MultiStrategy::full(model);
    let sure = almost_sure_mask(model, &full, &spec.target);
    let dead = cannot_reach(model, &full, &spec.target);
    if let Some(s) = (0..model.num_states()).find(|&s| !sure[s] && !dead[s]) {
        return Err(VerifyError::Divergence(s).into());
    }
    let v = robust_value(model, &full, Objective::Reward, Opt::Max, Opt::Max, &spec.target, ViConfig::default())?;
    let vmax = v.values.iter().copied().filter(|x| x.is_finite()).fold(0.0, f64::max);
    let rmax = (0..model.num_states()).flat_map(|s| model.choices(s).iter().map(|c| c.reward)).fold(0.0, f64::max);
    Ok((1.01 * vmax + 1.0).max(1.01 * (vmax + rmax)))
}

pub fn build_vertex_encoding(model: &ImdpModel, spec: &Spec) -> Result<Encoding, EncodeError> {
    build_encoding(model, spec, EncodingKind::Vertex, &EncodeOptions::default())
}

pub fn build_dual_encoding(model: &ImdpModel, spec: &Spec) -> Result<Encoding, EncodeError> {
    build_encoding(model, spec, EncodingKind::Dual, &EncodeOptions::default())
}

fn pair_name(model: &ImdpModel, s: usize, a: usize) -> String {
    format!("{s}_{}", model.action_label(a))
}

pub fn build_encoding(
    model: &ImdpModel,
    spec: &Spec,
    kind: EncodingKind,
    opts: &EncodeOptions,
) -> Result<Encoding, EncodeError> {
    spec.check_against(model)?;
    let big_m = match opts.big_m {
        Some(m) => m,
        None => compute_big_m(model, spec)?,
    };
    let n = model.num_states();
    let target = &spec.target;
    let is_t = |s: usize| target.contains(&s);
    let reward = spec.kind.is_reward();
    let lower_bound = spec.kind.is_lower_bound();
    let full = MultiStrategy::full(model);
    let dead = cannot_reach(model, &full, target);
    let pairs = decision_pairs(model, target);

    // vertex lists first so that the cap is checked before anything is built
    let mut vertices = Vec::new();
    if kind == EncodingKind::Vertex {
        let mut total = 0usize;
        for &(s, a) in &pairs {
            let vs = enumerate_vertices(&model.choice(s, a).unwrap().successors)?;
            total += vs.len();
            if total > opts.vertex_cap {
                return Err(EncodeError::VertexExplosion(total));
            }
            vertices.push(vs);
        }
    }

    let mut p = MilpProblem::new();
    let x: Vec<usize> = (0..n)
        .map(|s| {
            let hi = if reward { big_m } else { 1.0 };
            let hi = if !reward && dead[s] && !is_t(s) { 0.0 } else { hi };
            p.continuous(&format!("x_{s}"), 0.0, hi, VarRole::Value)
        })
        .collect();
    let y: Vec<(usize, usize, usize)> = pairs
        .iter()
        .map(|&(s, a)| (s, a, p.binary(&format!("y_{}", pair_name(model, s, a)), VarRole::Admit)))
        .collect();
    p.set_objective(y.iter().map(|&(_, _, v)| (1.0, v)).collect());

    // admission, threshold, pins
    let mut i = 0;
    while i < y.len() {
        let s = y[i].0;
        let mut terms = Vec::new();
        while i < y.len() && y[i].0 == s {
            terms.push((1.0, y[i].2));
            i += 1;
        }
        p.add_constraint(&format!("admit_{s}"), terms, Sense::Ge, 1.0, ConstraintRole::Admit);
    }
    let init = model.initial();
    let sense = if lower_bound { Sense::Ge } else { Sense::Le };
    p.add_constraint("threshold", vec![(1.0, x[init])], sense, spec.threshold, ConstraintRole::Threshold);
    let pin = if reward { 0.0 } else { 1.0 };
    for &t in target {
        p.add_constraint(&format!("pin_{t}"), vec![(1.0, x[t])], Sense::Eq, pin, ConstraintRole::Pin);
    }

    // gating block
    let gated = opts.gating
        && if reward {
            let sure = almost_sure_mask(model, &full, target);
            (0..n).any(|s| !sure[s] && !is_t(s))
        } else {
            spec.kind == SpecKind::ProbGe && {
                let avoid = live_avoidable(model, target, &dead);
                (0..n).any(|s| avoid[s])
            }
        };
    let mut gate: Vec<Option<usize>> = vec![None; n];
    if gated {
        gate = add_gating(&mut p, model, spec, &x, &y, &dead);
    }

    // robust constraints
    let m = big_m;
    for (k, &(s, a, yv)) in y.iter().enumerate() {
        let c = model.choice(s, a).unwrap();
        let name = pair_name(model, s, a);
        // deactivation: M(1 − y), or M(2 − y − c_s) when coverage gates the state
        let mut deact = vec![(m, yv)];
        let mut slack = m;
        if let (true, Some(c)) = (reward, gate[s]) {
            deact.push((m, c));
            slack += m;
        }
        let r = if reward { c.reward } else { 0.0 };
        match kind {
            EncodingKind::Vertex => {
                for (j, v) in vertices[k].iter().enumerate() {
                    let mut terms = vec![(1.0, x[s])];
                    for (succ, &q) in c.successors.iter().zip(v) {
                        if q != 0.0 {
                            terms.push((-q, x[succ.state]));
                        }
                    }
                    let role = ConstraintRole::Vertex { state: s, action: a };
                    let cname = format!("robust_{name}_{j}");
                    if lower_bound {
                        // x_s ≤ Σ P x + r + M(…)
                        terms.extend(deact.iter().copied());
                        p.add_constraint(&cname, terms, Sense::Le, r + slack, role);
                    } else {
                        // x_s ≥ Σ P x + r − M(…)
                        terms.extend(deact.iter().map(|&(cf, v)| (-cf, v)));
                        p.add_constraint(&cname, terms, Sense::Ge, r - slack, role);
                    }
                }
            }
            EncodingKind::Dual => {
                add_dual_block(&mut p, &name, s, a, &c.successors, &x, yv, &deact, slack, r, m, lower_bound);
            }
        }
    }

    debug_assert!(p.check().is_ok());
    Ok(Encoding { problem: p, kind, big_m, x, y, gated })
}

#[allow(clippy::too_many_arguments)]
fn add_dual_block(
    p: &mut MilpProblem,
    name: &str,
    s: usize,
    a: usize,
    row: &[Successor],
    x: &[usize],
    yv: usize,
    deact: &[(f64, usize)],
    slack: f64,
    r: f64,
    m: f64,
    lower_bound: bool,
) {
    let mut uh = Vec::with_capacity(row.len());
    let mut ul = Vec::with_capacity(row.len());
    for t in row {
        uh.push(p.continuous(&format!("uh_{name}_{}", t.state), 0.0, m, VarRole::DualUpper));
        ul.push(p.continuous(&format!("ul_{name}_{}", t.state), 0.0, m, VarRole::DualLower));
    }
    let lam = p.continuous(&format!("lam_{name}"), -m, m, VarRole::DualFree);
    let eta = p.continuous(&format!("eta_{name}"), -m, m, VarRole::Product);
    let role = ConstraintRole::DualFeasibility;
    for (j, t) in row.iter().enumerate() {
        let cname = format!("dfeas_{name}_{}", t.state);
        if lower_bound {
            // λ − û + ǔ ≤ x_t
            p.add_constraint(
                &cname,
                vec![(1.0, lam), (-1.0, uh[j]), (1.0, ul[j]), (-1.0, x[t.state])],
                Sense::Le,
                0.0,
                role,
            );
        } else {
            // λ + û − ǔ ≥ x_t
            p.add_constraint(
                &cname,
                vec![(1.0, lam), (1.0, uh[j]), (-1.0, ul[j]), (-1.0, x[t.state])],
                Sense::Ge,
                0.0,
                role,
            );
        }
    }
    let robust = ConstraintRole::DualRobust { state: s, action: a };
    let mut terms = vec![(1.0, x[s]), (-1.0, eta)];
    if lower_bound {
        // x_s ≤ M(…) + η + Σ (P̌ ǔ − P̂ û) + r
        for (j, t) in row.iter().enumerate() {
            terms.push((t.upper, uh[j]));
            terms.push((-t.lower, ul[j]));
        }
        terms.extend(deact.iter().copied());
        p.add_constraint(&format!("robust_{name}"), terms, Sense::Le, r + slack, robust);
    } else {
        // x_s ≥ −M(…) + η + Σ (P̂ û − P̌ ǔ) + r
        for (j, t) in row.iter().enumerate() {
            terms.push((-t.upper, uh[j]));
            terms.push((t.lower, ul[j]));
        }
        terms.extend(deact.iter().map(|&(c, v)| (-c, v)));
        p.add_constraint(&format!("robust_{name}"), terms, Sense::Ge, r - slack, robust);
    }
    let lin = ConstraintRole::Linearization;
    // −M y ≤ η ≤ M y
    p.add_constraint(&format!("etaub_{name}"), vec![(1.0, eta), (-m, yv)], Sense::Le, 0.0, lin);
    p.add_constraint(&format!("etalb_{name}"), vec![(1.0, eta), (m, yv)], Sense::Ge, 0.0, lin);
    // λ − M(1 − y) ≤ η ≤ λ + M(1 − y)
    p.add_constraint(&format!("etalam1_{name}"), vec![(1.0, eta), (-1.0, lam), (-m, yv)], Sense::Ge, -m, lin);
    p.add_constraint(&format!("etalam2_{name}"), vec![(1.0, eta), (-1.0, lam), (m, yv)], Sense::Le, m, lin);
}

/// States outside the target and the dead set from which the full strategy
/// can stay among such states forever. Bottom components that miss the
/// target are either entirely dead or inside this set.
fn live_avoidable(model: &ImdpModel, target: &BTreeSet<usize>, dead: &[bool]) -> Vec<bool> {
    let exits: BTreeSet<usize> = (0..model.num_states()).filter(|&s| dead[s] || target.contains(&s)).collect();
    let avoid = avoidable_forever(model, &MultiStrategy::full(model), &exits);
    (0..model.num_states()).map(|s| avoid[s] && !exits.contains(&s)).collect()
}

/// Emits gate binaries, ranks, witnesses, and progress constraints. Returns
/// the gate variable per state (`None` where no gate is needed).
///
/// Ranks and witnesses are only emitted on [`live_avoidable`] states; other
/// live successors count as progress. For rewards, states that reach the target
/// almost surely under the full strategy are covered unconditionally.
fn add_gating(
    p: &mut MilpProblem,
    model: &ImdpModel,
    spec: &Spec,
    x: &[usize],
    y: &[(usize, usize, usize)],
    dead: &[bool],
) -> Vec<Option<usize>> {
    let n = model.num_states();
    let reward = spec.kind.is_reward();
    let is_t = |s: usize| spec.target.contains(&s);
    let full = MultiStrategy::full(model);
    let sure = almost_sure_mask(model, &full, &spec.target);
    let ranked = live_avoidable(model, &spec.target, dead);
    let rank_cap = ranked.iter().filter(|&&r| r).count() as f64;
    let role = ConstraintRole::Ranking;

    let mut gate: Vec<Option<usize>> = vec![None; n];
    let mut rho: Vec<Option<usize>> = vec![None; n];
    for s in 0..n {
        if is_t(s) {
            continue;
        }
        if reward && !sure[s] {
            let c = p.binary(&format!("c_{s}"), VarRole::Gate);
            if dead[s] {
                p.variables[c].upper = 0.0;
            }
            gate[s] = Some(c);
        } else if !reward && ranked[s] {
            let pi = p.binary(&format!("pi_{s}"), VarRole::Gate);
            // positive value needs progress
            p.add_constraint(&format!("pos_{s}"), vec![(1.0, x[s]), (-1.0, pi)], Sense::Le, 0.0, role);
            gate[s] = Some(pi);
        }
        if ranked[s] {
            rho[s] = Some(p.continuous(&format!("rho_{s}"), 0.0, rank_cap, VarRole::Rank));
        }
    }
    let init = model.initial();
    if reward {
        if let Some(c) = gate[init] {
            p.add_constraint("cover_init", vec![(1.0, c)], Sense::Eq, 1.0, role);
        }
    }

    for &(s, a, yv) in y {
        let Some(g) = gate[s] else { continue };
        if reward && dead[s] {
            continue;
        }
        let row = &model.choice(s, a).unwrap().successors;
        let name = pair_name(model, s, a);
        if reward {
            // coverage is closed under possible successors of admitted actions
            for (i, t) in row.iter().enumerate() {
                let Some(ct) = gate[t.state] else { continue };
                if t.state != s && is_possible(row, i) {
                    p.add_constraint(
                        &format!("close_{name}_{}", t.state),
                        vec![(1.0, ct), (-1.0, g), (-1.0, yv)],
                        Sense::Ge,
                        -1.0,
                        role,
                    );
                }
            }
        }
        if !ranked[s] {
            continue;
        }
        // witnesses: possible successors other than s that may carry progress
        let mut cand = Vec::new();
        for (i, t) in row.iter().enumerate() {
            if t.state == s || !is_possible(row, i) || dead[t.state] {
                continue;
            }
            let w = p.binary(&format!("w_{name}_{}", t.state), VarRole::Witness);
            if let Some(rt) = rho[t.state] {
                let gt = gate[t.state].expect("ranked states are gated");
                p.add_constraint(
                    &format!("wgate_{name}_{}", t.state),
                    vec![(1.0, w), (-1.0, gt)],
                    Sense::Le,
                    0.0,
                    role,
                );
                // w = 1 ⇒ ρ_t ≤ ρ_s − 1
                let link = vec![(-1.0, rho[s].unwrap()), (rank_cap + 1.0, w), (1.0, rt)];
                p.add_constraint(&format!("rank_{name}_{}", t.state), link, Sense::Le, rank_cap, role);
            }
            cand.push((i, w));
        }
        let l_wit: Vec<usize> = cand.iter().filter(|&&(i, _)| row[i].lower > 0.0).map(|&(_, w)| w).collect();
        let total_u: f64 = row.iter().map(|t| t.upper).sum();
        let cand_u: f64 = cand.iter().map(|&(i, _)| row[i].upper).sum();
        let u_mode = total_u - cand_u < 1.0 - PROGRESS_MARGIN;
        let u_terms = |extra: Vec<(f64, usize)>| {
            let mut terms: Vec<(f64, usize)> = cand.iter().map(|&(i, w)| (-row[i].upper, w)).collect();
            terms.extend(extra);
            terms
        };
        match (l_wit.is_empty(), u_mode) {
            (false, true) => {
                let mu = p.binary(&format!("mu_{name}"), VarRole::Mode);
                let mut l = vec![(1.0, mu), (-1.0, g), (-1.0, yv)];
                l.extend(l_wit.iter().map(|&w| (1.0, w)));
                p.add_constraint(&format!("lmode_{name}"), l, Sense::Ge, -1.0, role);
                // μ = 1 ⇒ the non-witness upper bounds cannot cover the unit mass
                p.add_constraint(
                    &format!("umode_{name}"),
                    u_terms(vec![(total_u, mu)]),
                    Sense::Le,
                    1.0 - PROGRESS_MARGIN,
                    role,
                );
            }
            (false, false) => {
                let mut l = vec![(-1.0, g), (-1.0, yv)];
                l.extend(l_wit.iter().map(|&w| (1.0, w)));
                p.add_constraint(&format!("lmode_{name}"), l, Sense::Ge, -1.0, role);
            }
            (true, true) => {
                p.add_constraint(
                    &format!("umode_{name}"),
                    u_terms(vec![(total_u, g), (total_u, yv)]),
                    Sense::Le,
                    1.0 - PROGRESS_MARGIN + total_u,
                    role,
                );
            }
            (true, false) => {
                p.add_constraint(&format!("stuck_{name}"), vec![(1.0, g), (1.0, yv)], Sense::Le, 1.0, role);
            }
        }
    }
    gate
}

/// LP over (λ, û, ǔ) whose optimum is the dual bound on the inner problem
/// of one row for fixed successor values `x` (indexed like the row), with
/// y = 1. For `Opt::Min` the optimum equals min_P Σ P x; for `Opt::Max` it
/// equals −max_P Σ P x (the dual is a minimization, negated to fit the
/// maximizing solver).
pub fn dual_block_lp(row: &[Successor], x: &[f64], inner: Opt, big_m: f64) -> MilpProblem {
    let mut p = MilpProblem::new();
    let lam = p.continuous("lam", -big_m, big_m, VarRole::DualFree);
    let mut obj = vec![(1.0, lam)];
    for (j, t) in row.iter().enumerate() {
        let uh = p.continuous(&format!("uh_{j}"), 0.0, big_m, VarRole::DualUpper);
        let ul = p.continuous(&format!("ul_{j}"), 0.0, big_m, VarRole::DualLower);
        match inner {
            Opt::Min => {
                p.add_constraint(
                    &format!("d_{j}"),
                    vec![(1.0, lam), (-1.0, uh), (1.0, ul)],
                    Sense::Le,
                    x[j],
                    ConstraintRole::DualFeasibility,
                );
                obj.push((-t.upper, uh));
                obj.push((t.lower, ul));
            }
            Opt::Max => {
                p.add_constraint(
                    &format!("d_{j}"),
                    vec![(1.0, lam), (1.0, uh), (-1.0, ul)],
                    Sense::Ge,
                    x[j],
                    ConstraintRole::DualFeasibility,
                );
                obj.push((t.upper, uh));
                obj.push((-t.lower, ul));
            }
        }
    }
    if inner == Opt::Max {
        for t in obj.iter_mut() {
            t.0 = -t.0;
        }
    }
    p.set_objective(obj);
    p
}

impl Encoding {
    pub fn num_binaries(&self) -> usize {
        self.problem.variables.iter().filter(|v| v.kind == VarKind::Binary).count()
    }
}
