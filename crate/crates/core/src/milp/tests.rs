use std::collections::BTreeSet;

use proptest::prelude::*;

use super::*;
use crate::bench::{nav3_model, random_instance};
use crate::model::{ImdpModel, ModelBuilder, Spec, SpecKind, Successor};
use crate::solve::{lp_relax, solve, SolveStatus, SolverConfig};
use crate::uncertainty::{worst_case_expectation, Opt};

fn nav3_spec(p: f64) -> Spec {
    Spec::new(SpecKind::ProbGe, p, [3]).unwrap()
}

fn coef(c: &Constraint, var: usize) -> f64 {
    c.terms.iter().filter(|t| t.1 == var).map(|t| t.0).sum()
}

fn binomial(n: u64, k: u64) -> u64 {
    (1..=k).fold(1, |acc, i| acc * (n - k + i) / i)
}

/// One decision state with `k` absorbing successors, each in [0.5/k, 1.5/k].
fn uniform_fan(k: usize) -> (ImdpModel, Spec) {
    let mut b = ModelBuilder::new(k + 1, &["go"]);
    for t in 1..=k {
        b.interval(0, 0, t, 0.5 / k as f64, 1.5 / k as f64).absorbing(t);
    }
    b.label("goal", 1);
    (b.build().unwrap(), Spec::new(SpecKind::ProbGe, 0.0, [1]).unwrap())
}

fn pair_constraints<'a>(p: &'a MilpProblem, model: &ImdpModel, s: usize, a: usize) -> Vec<&'a Constraint> {
    let name = format!("{s}_{}", model.action_label(a));
    let exact = ["robust", "etaub", "etalb", "etalam1", "etalam2"].map(|k| format!("{k}_{name}"));
    let prefixes = [format!("robust_{name}_"), format!("dfeas_{name}_")];
    p.constraints
        .iter()
        .filter(|c| exact.contains(&c.name) || prefixes.iter().any(|q| c.name.starts_with(q.as_str())))
        .collect()
}

#[test]
fn nav3_vertex_coefficients() {
    let enc = build_vertex_encoding(&nav3_model(0.1), &nav3_spec(0.65)).unwrap();
    let rows: Vec<&Constraint> =
        enc.problem.constraints.iter().filter(|c| c.role == ConstraintRole::Vertex { state: 0, action: 0 }).collect();
    assert_eq!(rows.len(), 2);
    let mut pairs: Vec<(f64, f64)> = rows.iter().map(|c| (-coef(c, enc.x[2]), -coef(c, enc.x[3]))).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (got, want) in pairs.iter().zip([(0.12, 0.88), (0.32, 0.68)]) {
        assert!((got.0 - want.0).abs() < 1e-12 && (got.1 - want.1).abs() < 1e-12, "{pairs:?}");
    }
    for c in rows {
        assert_eq!(c.sense, Sense::Le);
        assert_eq!(coef(c, enc.x[0]), 1.0);
        assert_eq!(c.rhs, 2.0);
    }
}

#[test]
fn nav3_dual_coefficients() {
    let enc = build_dual_encoding(&nav3_model(0.1), &nav3_spec(0.65)).unwrap();
    let p = &enc.problem;
    let c = p.constraints.iter().find(|c| c.name == "robust_0_f").unwrap();
    let v = |n: &str| p.var_index(n).unwrap();
    let want = [("ul_0_f_2", -0.12), ("uh_0_f_2", 0.32), ("ul_0_f_3", -0.68), ("uh_0_f_3", 0.88)];
    for (name, w) in want {
        assert!((coef(c, v(name)) - w).abs() < 1e-12, "{name}");
    }
    assert_eq!(coef(c, v("eta_0_f")), -1.0);
    assert_eq!(coef(c, v("y_0_f")), 2.0);
    assert_eq!(p.variables[v("lam_0_f")].lower, -2.0);
    assert_eq!(p.variables[v("uh_0_f_3")].upper, 2.0);
}

#[test]
fn nav3_binaries() {
    for kind in [EncodingKind::Vertex, EncodingKind::Dual] {
        let enc = build_encoding(&nav3_model(0.1), &nav3_spec(0.65), kind, &EncodeOptions::default()).unwrap();
        let stats = encoding_stats(&enc.problem);
        assert_eq!(stats.binaries, 3);
        let names: Vec<&str> = enc.y.iter().map(|&(_, _, v)| enc.problem.variables[v].name.as_str()).collect();
        assert_eq!(names, ["y_0_f", "y_0_m", "y_1_m"]);
        assert!(!enc.gated);
    }
}

#[test]
fn pinned_target_has_no_robust_constraints() {
    let mut b = ModelBuilder::new(1, &["stay"]);
    b.absorbing(0).label("goal", 0);
    let model = b.build().unwrap();
    let spec = Spec::new(SpecKind::ProbGe, 1.0, [0]).unwrap();
    let enc = build_vertex_encoding(&model, &spec).unwrap();
    let stats = encoding_stats(&enc.problem);
    assert_eq!(stats.robust_constraints, 0);
    assert_eq!(enc.problem.num_vars(), 1);
    assert_eq!(solve(&enc.problem, &SolverConfig::default()).unwrap().status, SolveStatus::Optimal);
}

#[test]
fn free_three_successor_row_has_three_vertices() {
    let mut b = ModelBuilder::new(4, &["a"]);
    for t in 1..4 {
        b.interval(0, 0, t, 0.0, 1.0).absorbing(t);
    }
    let model = b.build().unwrap();
    let spec = Spec::new(SpecKind::ProbGe, 0.0, [1]).unwrap();
    let stats = encoding_stats(&build_vertex_encoding(&model, &spec).unwrap().problem);
    assert_eq!(stats.robust_constraints, 3);
    assert_eq!(stats.vertex_counts, vec![(0, 0, 3)]);
}

#[test]
fn big_m_examples() {
    assert_eq!(compute_big_m(&nav3_model(0.1), &nav3_spec(0.65)).unwrap(), 2.0);

    let mut b = ModelBuilder::new(2, &["a"]);
    b.interval(0, 0, 1, 1.0, 1.0).absorbing(1);
    let spec = Spec::new(SpecKind::RewLe, 5.0, [1]).unwrap();
    assert_eq!(compute_big_m(&b.build().unwrap(), &spec).unwrap(), 1.0);

    // geometric retries with unit reward: expected total reward 100
    let mut b = ModelBuilder::new(2, &["a"]);
    b.interval(0, 0, 0, 0.99, 0.99).interval(0, 0, 1, 0.01, 0.01).reward(0, 0, 1.0).absorbing(1);
    let m = compute_big_m(&b.build().unwrap(), &spec).unwrap();
    assert!((m - 102.01).abs() < 1e-6, "{m}");
}

#[test]
fn reward_big_m_covers_large_single_rewards() {
    let mut b = ModelBuilder::new(2, &["a"]);
    b.interval(0, 0, 1, 1.0, 1.0).reward(0, 0, 100.0).absorbing(1);
    let spec = Spec::new(SpecKind::RewLe, 150.0, [1]).unwrap();
    assert_eq!(compute_big_m(&b.build().unwrap(), &spec).unwrap(), 202.0);
}

#[test]
fn uniform_rows_scale_exponentially_and_linearly() {
    let mut counts = Vec::new();
    for k in [4usize, 6, 8, 10] {
        let (model, spec) = uniform_fan(k);
        let vertex = encoding_stats(&build_vertex_encoding(&model, &spec).unwrap().problem);
        // a vertex puts k/2 successors at the upper bound and the rest at the lower one
        assert_eq!(vertex.robust_constraints as u64, binomial(k as u64, k as u64 / 2), "k={k}");
        let dual = build_dual_encoding(&model, &spec).unwrap();
        let stats = encoding_stats(&dual.problem);
        assert_eq!(stats.block_constraints, k + 5, "k={k}");
        assert_eq!(pair_constraints(&dual.problem, &model, 0, 0).len(), k + 5);
        counts.push(vertex.robust_constraints as f64);
    }
    let ratios: Vec<f64> = counts.windows(2).map(|w| w[1] / w[0]).collect();
    assert!(ratios.windows(2).all(|r| r[1] > r[0]), "{ratios:?}");
}

#[test]
fn constraint_count_laws() {
    for seed in 0..60 {
        let inst = random_instance(seed);
        let (model, spec) = (&inst.model, &inst.spec);
        let opts = EncodeOptions { gating: false, ..Default::default() };
        let pairs = decision_pairs(model, &spec.target);
        let ks: Vec<usize> = pairs.iter().map(|&(s, a)| model.choice(s, a).unwrap().successors.len()).collect();

        let vertex = build_encoding(model, spec, EncodingKind::Vertex, &opts).unwrap();
        let vs = encoding_stats(&vertex.problem);
        let expected: usize = pairs
            .iter()
            .map(|&(s, a)| {
                crate::uncertainty::enumerate_vertices(&model.choice(s, a).unwrap().successors).unwrap().len()
            })
            .sum();
        assert_eq!(vs.robust_constraints, expected, "seed {seed}");
        assert_eq!(vs.vertex_counts.iter().map(|v| v.2).sum::<usize>(), expected);

        let dual = build_encoding(model, spec, EncodingKind::Dual, &opts).unwrap();
        let ds = encoding_stats(&dual.problem);
        let l: usize = ks.iter().sum();
        assert_eq!(ds.continuous, model.num_states() + 2 * l + 2 * pairs.len(), "seed {seed}");
        assert_eq!(ds.block_constraints, l + 5 * pairs.len(), "seed {seed}");
        assert_eq!(ds.binaries, pairs.len());
        for (&(s, a), &k) in pairs.iter().zip(&ks) {
            assert_eq!(pair_constraints(&dual.problem, model, s, a).len(), k + 5);
        }
    }
}

/// With y = 0 the pair's block must be satisfiable for every x in bounds.
#[test]
fn deactivation_soundness() {
    let corners = |n: usize, hi: &[f64], s: usize, mask: u32| -> Vec<f64> {
        (0..n).map(|t| if t == s || mask >> (t % 31) & 1 == 1 { hi[t] } else { 0.0 }).collect()
    };
    for seed in 0..24 {
        let inst = random_instance(seed);
        let (model, spec) = (&inst.model, &inst.spec);
        for kind in [EncodingKind::Vertex, EncodingKind::Dual] {
            let enc = build_encoding(model, spec, kind, &EncodeOptions::default()).unwrap();
            let hi: Vec<f64> = enc.x.iter().map(|&v| enc.problem.variables[v].upper).collect();
            for &(s, a, yv) in &enc.y {
                let block: Vec<Constraint> = pair_constraints(&enc.problem, model, s, a).into_iter().cloned().collect();
                for mask in [0u32, 0b1010, 0b0101, u32::MAX] {
                    let xs = corners(model.num_states(), &hi, s, mask);
                    let mut p = enc.problem.clone();
                    p.constraints = block.clone();
                    p.set_objective(Vec::new());
                    for (t, &v) in enc.x.iter().enumerate() {
                        p.variables[v].lower = xs[t];
                        p.variables[v].upper = xs[t];
                    }
                    p.variables[yv].upper = 0.0;
                    let r = lp_relax(&p).unwrap();
                    assert_eq!(r.status, SolveStatus::Optimal, "seed {seed} {kind} pair ({s},{a}) x={xs:?}");
                }
            }
        }
    }
}

#[test]
fn doubling_m_keeps_the_optimum() {
    let cfg = SolverConfig::default();
    for seed in (0..40).filter(|s| s % 4 < 2) {
        let inst = random_instance(seed);
        for kind in [EncodingKind::Vertex, EncodingKind::Dual] {
            let base = build_encoding(&inst.model, &inst.spec, kind, &EncodeOptions::default()).unwrap();
            let opts = EncodeOptions { big_m: Some(2.0 * base.big_m), ..Default::default() };
            let doubled = build_encoding(&inst.model, &inst.spec, kind, &opts).unwrap();
            let a = solve(&base.problem, &cfg).unwrap();
            let b = solve(&doubled.problem, &cfg).unwrap();
            assert_eq!(a.status, b.status, "seed {seed} {kind}");
            if a.status == SolveStatus::Optimal {
                assert_eq!(a.objective.round(), b.objective.round(), "seed {seed} {kind}");
            }
        }
    }
}

#[test]
fn encodings_agree_on_random_corpus() {
    let cfg = SolverConfig::default();
    for seed in 0..40 {
        let inst = random_instance(seed);
        let v = solve(&build_vertex_encoding(&inst.model, &inst.spec).unwrap().problem, &cfg).unwrap();
        let d = solve(&build_dual_encoding(&inst.model, &inst.spec).unwrap().problem, &cfg).unwrap();
        assert_eq!(v.status, d.status, "seed {seed}");
        if v.status == SolveStatus::Optimal {
            assert_eq!(v.objective.round(), d.objective.round(), "seed {seed}");
        }
    }
}

#[test]
fn nav3_lp_round_trip() {
    let enc = build_vertex_encoding(&nav3_model(0.1), &nav3_spec(0.65)).unwrap();
    let text = emit_lp(&enc.problem);
    let back = parse_lp(&text).unwrap();
    let cfg = SolverConfig::default();
    assert_eq!(solve(&enc.problem, &cfg).unwrap().objective, 2.0);
    assert_eq!(solve(&back, &cfg).unwrap().objective, 2.0);
}

#[test]
fn targets_are_not_decision_states() {
    let model = nav3_model(0.1);
    let target: BTreeSet<usize> = [3].into();
    assert_eq!(decision_pairs(&model, &target), vec![(0, 0), (0, 1), (1, 1)]);
}

fn arb_row_and_values() -> impl Strategy<Value = (Vec<Successor>, Vec<f64>)> {
    (1usize..=5).prop_flat_map(|k| {
        (
            proptest::collection::vec((1u32..=10, 0.0f64..0.3, 0.0f64..0.3), k),
            proptest::collection::vec(0.0f64..=1.0, k),
        )
            .prop_map(|(cells, x)| {
                let total: f64 = cells.iter().map(|c| c.0 as f64).sum();
                let row = cells
                    .iter()
                    .enumerate()
                    .map(|(t, &(w, dl, du))| {
                        let p = w as f64 / total;
                        Successor::new(t, (p - dl).max(0.0), (p + du).min(1.0))
                    })
                    .collect();
                (row, x)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn dual_block_matches_greedy((row, x) in arb_row_and_values()) {
        for dir in [Opt::Min, Opt::Max] {
            let r = lp_relax(&dual_block_lp(&row, &x, dir, 2.0)).unwrap();
            prop_assert_eq!(r.status, SolveStatus::Optimal);
            let lp = if dir == Opt::Min { r.objective } else { -r.objective };
            let (greedy, _) = worst_case_expectation(&row, &x, dir).unwrap();
            prop_assert!((lp - greedy).abs() < 1e-9, "{:?}: lp {} greedy {}", dir, lp, greedy);
        }
    }
}
