//! Exhaustive reference values: every compliant deterministic strategy
//! against every stationary choice of polytope vertices, each resulting
//! Markov chain solved exactly by Gaussian elimination.

use std::collections::BTreeSet;

use crate::error::{ModelError, VerifyError};
use crate::model::{compliant_strategies, count_compliant, ImdpModel, MultiStrategy, Spec};
use crate::robust::{spec_semantics, Objective, ValueVector};
use crate::uncertainty::enumerate_vertices;

pub const DEFAULT_BRUTE_FORCE_CAP: u128 = 10_000_000;

/// Pointwise inf (for `>=` kinds) or sup (for `<=` kinds) over all chains.
/// Reward values are infinite wherever some chain fails to reach the target
/// almost surely.
pub fn brute_force_robust_value(
    model: &ImdpModel,
    theta: &MultiStrategy,
    spec: &Spec,
    cap: u128,
) -> Result<ValueVector, VerifyError> {
    let n = model.num_states();
    let (objective, player, _) = spec_semantics(spec.kind);
    let target = &spec.target;

    // vertices of every admitted non-target pair
    // state → admitted action → vertex → (successor, probability)
    let mut verts: Vec<Vec<Vec<Vec<(usize, f64)>>>> = Vec::with_capacity(n);
    let mut bound = count_compliant(theta);
    for s in 0..n {
        let mut per_action: Vec<Vec<Vec<(usize, f64)>>> = Vec::new();
        if !target.contains(&s) {
            for &a in theta.admitted(s) {
                let row = &model.choice(s, a).expect("admitted").successors;
                let vs = enumerate_vertices(row)?;
                bound = bound.saturating_mul(vs.len() as u128);
                per_action.push(
                    vs.into_iter().map(|p| row.iter().zip(p).map(|(t, q)| (t.state, q)).collect::<Vec<_>>()).collect(),
                );
            }
        }
        verts.push(per_action);
    }
    if bound > cap {
        return Err(ModelError::CapExceeded { count: bound, cap }.into());
    }

    let mut best = vec![player.worst(); n];
    let mut void = vec![false; n];
    let mut chains = 0usize;
    for sigma in compliant_strategies(theta, cap)? {
        // index of σ(s) inside θ(s), and the vertex lists it selects
        let lists: Vec<&Vec<Vec<(usize, f64)>>> = (0..n)
            .filter(|s| !target.contains(s))
            .map(|s| {
                let k = theta.admitted(s).iter().position(|&a| a == sigma.choice[s]).unwrap();
                &verts[s][k]
            })
            .collect();
        let states: Vec<usize> = (0..n).filter(|s| !target.contains(s)).collect();
        let rewards: Vec<f64> = (0..n)
            .map(|s| if target.contains(&s) { 0.0 } else { model.choice(s, sigma.choice[s]).unwrap().reward })
            .collect();
        let mut digits = vec![0usize; lists.len()];
        loop {
            let mut rows: Vec<&[(usize, f64)]> = vec![&[]; n];
            for (i, &s) in states.iter().enumerate() {
                rows[s] = &lists[i][digits[i]];
            }
            let v = solve_chain(&rows, target, objective, &rewards);
            for s in 0..n {
                // one chain without almost-sure termination voids the reward value
                void[s] |= v[s].is_infinite();
                best[s] = player.pick(best[s], v[s]);
            }
            chains += 1;
            let mut i = digits.len();
            let mut done = true;
            while i > 0 {
                i -= 1;
                digits[i] += 1;
                if digits[i] < lists[i].len() {
                    done = false;
                    break;
                }
                digits[i] = 0;
            }
            if done {
                break;
            }
        }
    }
    if objective == Objective::Reward {
        for s in 0..n {
            if void[s] {
                best[s] = f64::INFINITY;
            }
        }
    }
    Ok(ValueVector { values: best, objective, iterations: chains })
}

/// Reachability probabilities or expected rewards of one Markov chain.
/// `rows[s]` lists (successor, probability); target rows are ignored.
fn solve_chain(rows: &[&[(usize, f64)]], target: &BTreeSet<usize>, objective: Objective, rewards: &[f64]) -> Vec<f64> {
    let n = rows.len();
    let is_t = |s: usize| target.contains(&s);
    let edges = |s: usize| rows[s].iter().filter(|&&(_, p)| p > 0.0).map(|&(t, _)| t);

    // states that can reach the target
    let mut reach: Vec<bool> = (0..n).map(is_t).collect();
    loop {
        let mut changed = false;
        for s in 0..n {
            if !reach[s] && edges(s).any(|t| reach[t]) {
                reach[s] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    // states that reach the target almost surely: cannot reach a dead state
    let mut doomed: Vec<bool> = reach.iter().map(|r| !r).collect();
    loop {
        let mut changed = false;
        for s in 0..n {
            if !doomed[s] && !is_t(s) && edges(s).any(|t| doomed[t]) {
                doomed[s] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let unknown: Vec<usize> =
        (0..n).filter(|&s| !is_t(s) && reach[s] && (objective == Objective::Reach || !doomed[s])).collect();
    let mut out = vec![0.0; n];
    for s in 0..n {
        out[s] = match objective {
            Objective::Reach if is_t(s) => 1.0,
            Objective::Reach => 0.0,
            Objective::Reward if is_t(s) => 0.0,
            Objective::Reward if doomed[s] => f64::INFINITY,
            Objective::Reward => 0.0,
        };
    }
    if unknown.is_empty() {
        return out;
    }
    // (I − P_UU) x_U = b
    let k = unknown.len();
    let mut pos = vec![usize::MAX; n];
    for (i, &s) in unknown.iter().enumerate() {
        pos[s] = i;
    }
    let mut a = vec![vec![0.0; k + 1]; k];
    for (i, &s) in unknown.iter().enumerate() {
        a[i][i] += 1.0;
        let mut b = if objective == Objective::Reward { rewards[s] } else { 0.0 };
        for &(t, p) in rows[s] {
            if p <= 0.0 {
                continue;
            }
            if pos[t] != usize::MAX {
                a[i][pos[t]] -= p;
            } else if objective == Objective::Reach && is_t(t) {
                b += p;
            }
        }
        a[i][k] = b;
    }
    for col in 0..k {
        let piv = (col..k).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())).unwrap();
        a.swap(col, piv);
        let d = a[col][col];
        for j in col..=k {
            a[col][j] /= d;
        }
        for r in 0..k {
            if r != col && a[r][col] != 0.0 {
                let f = a[r][col];
                for j in col..=k {
                    a[r][j] -= f * a[col][j];
                }
            }
        }
    }
    for (i, &s) in unknown.iter().enumerate() {
        out[s] = a[i][k];
    }
    out
}
