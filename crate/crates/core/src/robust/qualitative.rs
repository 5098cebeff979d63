//! Graph-based sets: which states reach the target almost surely, which
//! cannot reach it at all, and which can be kept away from it forever.
//!
//! The adversary may realize exactly those supports Z for which some
//! P ∈ 𝒫(s,a) vanishes outside Z: every positive lower bound lies in Z and
//! the upper bounds inside Z cover the unit mass.

use std::collections::BTreeSet;

use crate::model::{ImdpModel, MultiStrategy, Successor};
use crate::uncertainty::max_mass;

/// Mass below this is treated as zero when deciding supports.
pub const MASS_TOL: f64 = 1e-9;

/// Some admissible P gives entry `i` positive probability.
pub fn is_possible(row: &[Successor], i: usize) -> bool {
    row[i].upper > 0.0 && max_mass(row, i) > MASS_TOL
}

/// Some admissible P puts all mass inside `inside`.
pub fn supportable_within(row: &[Successor], inside: impl Fn(usize) -> bool) -> bool {
    let mut cover = 0.0;
    for s in row {
        if inside(s.state) {
            cover += s.upper;
        } else if s.lower > 0.0 {
            return false;
        }
    }
    cover >= 1.0 - MASS_TOL
}

fn target_mask(n: usize, target: &BTreeSet<usize>) -> Vec<bool> {
    let mut m = vec![false; n];
    for &t in target {
        m[t] = true;
    }
    m
}

/// For each state t, the (state, action) pairs with an admitted action under
/// which t is a possible successor.
fn possible_predecessors(model: &ImdpModel, theta: &MultiStrategy) -> Vec<Vec<(usize, usize)>> {
    let mut pred = vec![Vec::new(); model.num_states()];
    for s in 0..model.num_states() {
        for &a in theta.admitted(s) {
            let row = &model.choice(s, a).expect("admitted").successors;
            for i in 0..row.len() {
                if is_possible(row, i) {
                    pred[row[i].state].push((s, a));
                }
            }
        }
    }
    pred
}

/// Marks every state with a possible edge into a marked state, transitively.
fn backward_closure(pred: &[Vec<(usize, usize)>], mut marked: Vec<bool>, skip: &[bool]) -> Vec<bool> {
    let mut stack: Vec<usize> = (0..marked.len()).filter(|&s| marked[s]).collect();
    while let Some(t) = stack.pop() {
        for &(s, _) in &pred[t] {
            if !marked[s] && !skip[s] {
                marked[s] = true;
                stack.push(s);
            }
        }
    }
    marked
}

/// Greatest set Z of non-target states in which some admitted action can
/// keep all mass inside Z: the states where strategy and adversary together
/// can avoid the target forever.
pub fn avoidable_forever(model: &ImdpModel, theta: &MultiStrategy, target: &BTreeSet<usize>) -> Vec<bool> {
    let n = model.num_states();
    let is_t = target_mask(n, target);
    let mut z: Vec<bool> = is_t.iter().map(|t| !t).collect();
    // predecessors through any listed successor, since a removed state with
    // a positive lower bound also breaks supportability
    let mut pred = vec![Vec::new(); n];
    for s in 0..n {
        for &a in theta.admitted(s) {
            for t in &model.choice(s, a).expect("admitted").successors {
                pred[t.state].push(s);
            }
        }
    }
    let keeps = |z: &[bool], s: usize| {
        theta
            .admitted(s)
            .iter()
            .any(|&a| supportable_within(&model.choice(s, a).expect("admitted").successors, |t| z[t]))
    };
    let mut stack: Vec<usize> = (0..n).filter(|&s| z[s]).collect();
    while let Some(s) = stack.pop() {
        if !z[s] || keeps(&z, s) {
            continue;
        }
        z[s] = false;
        stack.extend(pred[s].iter().copied().filter(|&p| z[p]));
    }
    z
}

/// States from which the target is unreachable through possible edges of
/// admitted actions.
pub fn cannot_reach(model: &ImdpModel, theta: &MultiStrategy, target: &BTreeSet<usize>) -> Vec<bool> {
    let n = model.num_states();
    let pred = possible_predecessors(model, theta);
    let reach = backward_closure(&pred, target_mask(n, target), &vec![false; n]);
    reach.into_iter().map(|r| !r).collect()
}

/// Mask form of [`almost_sure_reach_set`].
pub fn almost_sure_mask(model: &ImdpModel, theta: &MultiStrategy, target: &BTreeSet<usize>) -> Vec<bool> {
    let n = model.num_states();
    let is_t = target_mask(n, target);
    let pred = possible_predecessors(model, theta);
    let bad = backward_closure(&pred, avoidable_forever(model, theta, target), &is_t);
    bad.into_iter().map(|b| !b).collect()
}

/// States that reach `target` with probability one under every compliant
/// strategy and every admissible transition function.
pub fn almost_sure_reach_set(model: &ImdpModel, theta: &MultiStrategy, target: &BTreeSet<usize>) -> BTreeSet<usize> {
    almost_sure_mask(model, theta, target).into_iter().enumerate().filter_map(|(s, ok)| ok.then_some(s)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::nav3_model;
    use crate::model::ModelBuilder;

    #[test]
    fn nav3_trap_excludes_start() {
        let m = nav3_model(0.1);
        let f = m.action_index("f").unwrap();
        let theta = MultiStrategy::with_overrides(&m, &[(0, &[f])]).unwrap();
        let t = BTreeSet::from([3]);
        let as_set = almost_sure_reach_set(&m, &theta, &t);
        assert_eq!(as_set, BTreeSet::from([3]));
        assert_eq!(cannot_reach(&m, &theta, &t), vec![false, false, true, false]);
    }

    #[test]
    fn deterministic_chain_is_almost_sure() {
        let mut b = ModelBuilder::new(3, &["go"]);
        b.interval(0, 0, 1, 1.0, 1.0).interval(1, 0, 2, 1.0, 1.0).absorbing(2);
        let m = b.build().unwrap();
        let t = BTreeSet::from([2]);
        assert_eq!(almost_sure_reach_set(&m, &MultiStrategy::full(&m), &t), BTreeSet::from([0, 1, 2]));
    }

    #[test]
    fn interval_self_loop_can_trap() {
        // the adversary can put all mass on the self-loop
        let mut b = ModelBuilder::new(2, &["go"]);
        b.interval(0, 0, 0, 0.0, 1.0).interval(0, 0, 1, 0.0, 1.0).absorbing(1);
        let m = b.build().unwrap();
        let t = BTreeSet::from([1]);
        let full = MultiStrategy::full(&m);
        assert_eq!(avoidable_forever(&m, &full, &t), vec![true, false]);
        assert_eq!(almost_sure_reach_set(&m, &full, &t), BTreeSet::from([1]));
        // a positive lower bound towards the target forces progress
        let mut b = ModelBuilder::new(2, &["go"]);
        b.interval(0, 0, 0, 0.0, 0.9).interval(0, 0, 1, 0.1, 1.0).absorbing(1);
        let m = b.build().unwrap();
        assert_eq!(almost_sure_reach_set(&m, &MultiStrategy::full(&m), &t), BTreeSet::from([0, 1]));
    }

    #[test]
    fn upper_mass_that_cannot_be_realized_is_not_an_edge() {
        // lower bound 1 on the target leaves no room for the other entry
        let mut b = ModelBuilder::new(3, &["go"]);
        b.interval(0, 0, 1, 1.0, 1.0).interval(0, 0, 2, 0.0, 0.5).absorbing(1).absorbing(2);
        let m = b.build().unwrap();
        let t = BTreeSet::from([1]);
        assert!(almost_sure_reach_set(&m, &MultiStrategy::full(&m), &t).contains(&0));
    }
}
