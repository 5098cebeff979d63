//! Benchmark instances: the three-state navigation example, seeded random
//! IMDPs, parametric domain generators, and a suite runner.

mod domains;
mod random;
mod suite;

use std::collections::{HashMap, VecDeque};
use std::hash::Hash;

use serde::Serialize;

use crate::model::{ImdpModel, ModelBuilder, Spec, SpecKind};

pub use domains::{gen_aca, gen_obs, gen_obs_with, gen_sav, gen_sav_with, gen_wh, gen_wh_with};
pub use random::{random_instance, random_model};
pub use suite::{generate, run_instance, run_suite, suite_csv, suite_table, Domain, SuiteRow, SUITE_HEADER};

#[derive(Debug, Clone, Serialize)]
pub struct BenchmarkInstance {
    pub domain: String,
    pub params: String,
    #[serde(skip)]
    pub model: ImdpModel,
    pub spec: Spec,
    pub expected_solvable: bool,
}

/// Clips `nominal ± eps` to [0, 1], rounded to 12 decimals so that grid
/// values like 0.78 − 0.1 print as 0.68.
pub(crate) fn band(nominal: f64, eps: f64) -> (f64, f64) {
    let r = |x: f64| (x.clamp(0.0, 1.0) * 1e12).round() / 1e12;
    (r(nominal - eps), r(nominal + eps))
}

/// The navigation example: from s0, `f` reaches the goal s3 directly with
/// probability 0.78 ± ε (else the trap s2); `m` goes through s1 with two
/// steps of 0.9 ± ε each.
pub fn nav3_model(eps: f64) -> ImdpModel {
    let mut b = ModelBuilder::new(4, &["f", "m"]);
    let row = |b: &mut ModelBuilder, s: usize, a: usize, good: usize, p: f64| {
        let (lo, hi) = band(p, eps);
        let (tl, th) = band(1.0 - p, eps);
        b.interval(s, a, good, lo, hi).interval(s, a, 2, tl, th);
    };
    row(&mut b, 0, 0, 3, 0.78);
    row(&mut b, 0, 1, 1, 0.9);
    row(&mut b, 1, 1, 3, 0.9);
    b.absorbing(2).absorbing(3).label("goal", 3).initial(0);
    for s in 0..4 {
        b.name(s, format!("s{s}"));
    }
    b.build().expect("nav3 is valid for every epsilon")
}

/// Navigation example with `P>=0.65 [F "goal"]`.
pub fn gen_nav3(eps: f64) -> BenchmarkInstance {
    BenchmarkInstance {
        domain: "nav3".into(),
        params: format!("eps={}", crate::io::fmt_num(eps)),
        model: nav3_model(eps),
        spec: Spec::new(SpecKind::ProbGe, 0.65, [3]).expect("valid").with_label("goal"),
        expected_solvable: true,
    }
}

/// Successor description used by [`explore`]: key, lower, upper.
pub(crate) type Succ<K> = (K, f64, f64);

pub(crate) enum Expansion<K> {
    Absorbing,
    /// (action index, successors, reward) per enabled action.
    Rows(Vec<(usize, Vec<Succ<K>>, f64)>),
}

/// Breadth-first construction of the states reachable from `init`. Returns
/// the builder (states numbered in discovery order, `init` = 0) and the key
/// of every state.
pub(crate) fn explore<K, F>(actions: &[&str], init: K, mut expand: F) -> (ModelBuilder, Vec<K>)
where
    K: Hash + Eq + Clone,
    F: FnMut(&K) -> Expansion<K>,
{
    let mut index: HashMap<K, usize> = HashMap::from([(init.clone(), 0)]);
    let mut keys = vec![init];
    let mut queue = VecDeque::from([0usize]);
    let mut rows: Vec<Option<Vec<(usize, Vec<(usize, f64, f64)>, f64)>>> = Vec::new();
    while let Some(s) = queue.pop_front() {
        let exp = expand(&keys[s]);
        let out = match exp {
            Expansion::Absorbing => None,
            Expansion::Rows(list) => Some(
                list.into_iter()
                    .map(|(a, succ, r)| {
                        // outcomes landing in the same state merge; the summed
                        // upper bound may pass 1 and is clipped
                        let mut merged: Vec<(usize, f64, f64)> = Vec::new();
                        for (k, lo, hi) in succ {
                            let id = *index.entry(k.clone()).or_insert_with(|| {
                                keys.push(k);
                                queue.push_back(keys.len() - 1);
                                keys.len() - 1
                            });
                            match merged.iter_mut().find(|m| m.0 == id) {
                                Some(m) => {
                                    m.1 += lo;
                                    m.2 = (m.2 + hi).min(1.0);
                                }
                                None => merged.push((id, lo, hi)),
                            }
                        }
                        (a, merged, r)
                    })
                    .collect(),
            ),
        };
        if rows.len() <= s {
            rows.resize(s + 1, None);
        }
        rows[s] = out;
    }
    let mut b = ModelBuilder::new(keys.len(), actions);
    for (s, row) in rows.into_iter().enumerate() {
        match row {
            None => {
                b.absorbing(s);
            }
            Some(list) => {
                for (a, succ, r) in list {
                    for (t, lo, hi) in succ {
                        b.interval(s, a, t, lo, hi);
                    }
                    if r != 0.0 {
                        b.reward(s, a, r);
                    }
                }
            }
        }
    }
    (b, keys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_model;

    #[test]
    fn nav3_shape() {
        let m = nav3_model(0.1);
        let f = m.action_index("f").unwrap();
        let row = &m.choice(0, f).unwrap().successors;
        assert_eq!((row[1].state, row[1].lower, row[1].upper), (3, 0.68, 0.88));
        assert_eq!((row[0].state, row[0].lower, row[0].upper), (2, 0.12, 0.32));
        assert_eq!(m.num_enabled_pairs(), 5);
        let m0 = nav3_model(0.0);
        for s in 0..4 {
            for c in m0.choices(s) {
                assert!(c.successors.iter().all(|t| t.lower == t.upper));
            }
        }
        let wide = nav3_model(1.0);
        assert!(validate_model(&wide).is_empty());
        assert_eq!(wide.choice(0, f).unwrap().successors[1].upper, 1.0);
    }

    #[test]
    fn explorer_numbers_in_discovery_order() {
        let (b, keys) = explore(&["go"], 0u8, |&k| {
            if k == 2 {
                Expansion::Absorbing
            } else {
                Expansion::Rows(vec![(0, vec![(k + 1, 0.5, 0.5), (2, 0.5, 0.5)], 1.0)])
            }
        });
        assert_eq!(keys, vec![0, 1, 2]);
        let m = b.build().unwrap();
        assert!(m.is_absorbing(2));
        assert_eq!(m.choices(0)[0].reward, 1.0);
    }

    #[test]
    fn merged_outcomes_stay_within_one() {
        let (b, _) = explore(&["go"], 0u8, |&k| {
            if k == 1 {
                Expansion::Absorbing
            } else {
                Expansion::Rows(vec![(0, vec![(1, 0.75, 0.85), (1, 0.05, 0.15), (1, 0.05, 0.15)], 0.0)])
            }
        });
        let m = b.build().unwrap();
        let t = &m.choice(0, 0).unwrap().successors[0];
        assert!((t.lower - 0.85).abs() < 1e-12);
        assert_eq!(t.upper, 1.0);
    }
}
