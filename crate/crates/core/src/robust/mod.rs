//! Robust value iteration and the satisfaction check used to verify
//! synthesized multi-strategies.

mod brute_force;
mod qualitative;

pub use brute_force::{brute_force_robust_value, DEFAULT_BRUTE_FORCE_CAP};
pub use qualitative::{
    almost_sure_mask, almost_sure_reach_set, avoidable_forever, cannot_reach, is_possible, supportable_within, MASS_TOL,
};

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::VerifyError;
use crate::model::{ImdpModel, MultiStrategy, Spec, SpecKind};
use crate::uncertainty::{extremum_by_state, Opt};

/// Slack allowed when comparing a robust value with the threshold.
pub const SATISFACTION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Objective {
    Reach,
    Reward,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViConfig {
    pub epsilon: f64,
    pub max_iterations: usize,
}

impl Default for ViConfig {
    fn default() -> Self {
        Self { epsilon: 1e-12, max_iterations: 1_000_000 }
    }
}

/// One value per state. Reward vectors hold `f64::INFINITY` at states that
/// do not reach the target almost surely.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValueVector {
    pub values: Vec<f64>,
    pub objective: Objective,
    pub iterations: usize,
}

impl std::ops::Index<usize> for ValueVector {
    type Output = f64;
    fn index(&self, s: usize) -> &f64 {
        &self.values[s]
    }
}

/// Player and adversary directions plus objective that define the robust
/// value bounded by each specification kind.
pub fn spec_semantics(kind: SpecKind) -> (Objective, Opt, Opt) {
    match kind {
        SpecKind::ProbGe => (Objective::Reach, Opt::Min, Opt::Min),
        SpecKind::ProbLe => (Objective::Reach, Opt::Max, Opt::Max),
        SpecKind::RewGe => (Objective::Reward, Opt::Min, Opt::Min),
        SpecKind::RewLe => (Objective::Reward, Opt::Max, Opt::Max),
    }
}

/// One application of the robust Bellman operator at `s`.
pub fn bellman_at(
    model: &ImdpModel,
    theta: &MultiStrategy,
    objective: Objective,
    player: Opt,
    adversary: Opt,
    s: usize,
    x: &[f64],
    scratch: &mut Vec<usize>,
) -> f64 {
    let mut best = player.worst();
    for &a in theta.admitted(s) {
        let c = model.choice(s, a).expect("admitted action is enabled");
        let mut v = extremum_by_state(&c.successors, x, adversary, scratch);
        if objective == Objective::Reward {
            v += c.reward;
        }
        best = player.pick(best, v);
    }
    best
}

/// Fixed point of x_s ← opt_{a∈θ(s)} [r·(reward) + opt_{P∈𝒫(s,a)} Σ P·x]
/// with target states pinned, iterated synchronously from 0.
///
/// States whose value is known from graph analysis are pinned as well
/// (probability 0 and 1, infinite reward), which keeps end components from
/// slowing convergence.
pub fn robust_value(
    model: &ImdpModel,
    theta: &MultiStrategy,
    objective: Objective,
    player: Opt,
    adversary: Opt,
    target: &BTreeSet<usize>,
    cfg: ViConfig,
) -> Result<ValueVector, VerifyError> {
    let n = model.num_states();
    let mut fixed: Vec<Option<f64>> = vec![None; n];
    let pessimistic = player == Opt::Min && adversary == Opt::Min;
    match objective {
        Objective::Reach => {
            let zero =
                if pessimistic { avoidable_forever(model, theta, target) } else { cannot_reach(model, theta, target) };
            let one = if pessimistic { almost_sure_mask(model, theta, target) } else { vec![false; n] };
            for s in 0..n {
                if zero[s] {
                    fixed[s] = Some(0.0);
                } else if one[s] {
                    fixed[s] = Some(1.0);
                }
            }
        }
        Objective::Reward => {
            let sure = almost_sure_mask(model, theta, target);
            for s in 0..n {
                if !sure[s] {
                    fixed[s] = Some(f64::INFINITY);
                }
            }
        }
    }
    let pin = if objective == Objective::Reach { 1.0 } else { 0.0 };
    for &t in target {
        fixed[t] = Some(pin);
    }

    let mut x: Vec<f64> = fixed.iter().map(|f| f.unwrap_or(0.0)).collect();
    let mut next = x.clone();
    let mut scratch = Vec::new();
    for it in 1..=cfg.max_iterations {
        let mut delta: f64 = 0.0;
        for s in 0..n {
            if fixed[s].is_some() {
                continue;
            }
            let v = bellman_at(model, theta, objective, player, adversary, s, &x, &mut scratch);
            delta = delta.max((v - x[s]).abs());
            next[s] = v;
        }
        std::mem::swap(&mut x, &mut next);
        if delta < cfg.epsilon {
            return Ok(ValueVector { values: x, objective, iterations: it });
        }
    }
    Err(VerifyError::NoConvergence(cfg.max_iterations))
}

/// Robust value of the quantity bounded by `spec`, under `theta`.
pub fn spec_value(model: &ImdpModel, theta: &MultiStrategy, spec: &Spec) -> Result<ValueVector, VerifyError> {
    let (objective, player, adversary) = spec_semantics(spec.kind);
    robust_value(model, theta, objective, player, adversary, &spec.target, ViConfig::default())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub satisfied: bool,
    /// Robust value at the initial state.
    pub witness: f64,
    /// Reward kinds only: whether the initial state reaches the target
    /// almost surely.
    pub almost_sure: Option<bool>,
}

/// Decides (M, θ) ⊨_rob spec.
pub fn check_robust_satisfaction(
    model: &ImdpModel,
    theta: &MultiStrategy,
    spec: &Spec,
) -> Result<Verdict, VerifyError> {
    spec.check_against(model)?;
    let values = spec_value(model, theta, spec)?;
    let init = model.initial();
    let w = values[init];
    let almost_sure = spec.kind.is_reward().then(|| w.is_finite());
    let within = match spec.kind {
        SpecKind::ProbGe | SpecKind::RewGe => w >= spec.threshold - SATISFACTION_TOL,
        SpecKind::ProbLe | SpecKind::RewLe => w <= spec.threshold + SATISFACTION_TOL,
    };
    let satisfied = within && almost_sure != Some(false);
    Ok(Verdict { satisfied, witness: w, almost_sure })
}
