use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bench::BenchmarkInstance;
use crate::model::{ImdpModel, ModelBuilder, MultiStrategy, Spec, SpecKind};
use crate::robust::{robust_value, spec_semantics, ViConfig};
use crate::uncertainty::Opt;

const WIDTHS: [f64; 5] = [0.0, 0.05, 0.1, 0.2, 0.3];

/// Seeded random IMDP with `n` states (the last one absorbing and labelled
/// `goal`), up to `k` actions per state and up to `max_succ` successors per
/// row. With `progressive`, successors of state s are drawn from s+1.., so
/// every path ends in the goal.
///
/// Bounds have three decimals and always contain the row's nominal
/// distribution, so every row is feasible.
pub fn random_model(n: usize, k: usize, max_succ: usize, seed: u64, progressive: bool) -> ImdpModel {
    assert!(n >= 1 && k >= 1 && max_succ >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<String> = (0..k).map(|i| format!("a{i}")).collect();
    let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
    let mut b = ModelBuilder::new(n, &refs);
    let floor3 = |x: f64| ((x * 1000.0).floor() / 1000.0).max(0.0);
    let ceil3 = |x: f64| ((x * 1000.0).ceil() / 1000.0).min(1.0);
    for s in 0..n - 1 {
        let na = rng.gen_range(1..=k);
        let mut acts = sample(&mut rng, k, na).into_vec();
        acts.sort_unstable();
        for a in acts {
            let pool: Vec<usize> = if progressive { (s + 1..n).collect() } else { (0..n).collect() };
            let m = rng.gen_range(1..=max_succ.min(pool.len()));
            let mut succ: Vec<usize> = sample(&mut rng, pool.len(), m).into_iter().map(|i| pool[i]).collect();
            succ.sort_unstable();
            let weights: Vec<f64> = (0..m).map(|_| rng.gen_range(1..=10) as f64).collect();
            let total: f64 = weights.iter().sum();
            let width = WIDTHS[rng.gen_range(0..WIDTHS.len())];
            for (t, w) in succ.into_iter().zip(weights) {
                let p = w / total;
                let mut lo = floor3(p - width * rng.gen::<f64>());
                let hi = ceil3(p + width * rng.gen::<f64>());
                if rng.gen_bool(0.15) {
                    lo = 0.0;
                }
                b.interval(s, a, t, lo, hi);
            }
            let r = rng.gen_range(0..=3);
            if r > 0 {
                b.reward(s, a, r as f64);
            }
        }
    }
    b.absorbing(n - 1).label("goal", n - 1);
    b.build().expect("generated rows contain their nominal distribution")
}

/// Random instance for the equivalence corpus: 2–6 states, 1–3 actions, up
/// to 3 successors, spec kind cycling with the seed. The threshold lies
/// between the robust value of the full strategy and the best single
/// strategy, or (for a few seeds) beyond the best one.
pub fn random_instance(seed: u64) -> BenchmarkInstance {
    let kinds = [SpecKind::ProbGe, SpecKind::ProbLe, SpecKind::RewGe, SpecKind::RewLe];
    let kind = kinds[(seed % 4) as usize];
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let n = rng.gen_range(2..=6);
    let k = rng.gen_range(1..=3);
    let progressive = kind.is_reward() || rng.gen_bool(0.5);
    let model = random_model(n, k, 3, seed, progressive);
    let target = [n - 1];
    let ts = target.iter().copied().collect();
    let full = MultiStrategy::full(&model);
    let (obj, pl, adv) = spec_semantics(kind);
    let cfg = ViConfig::default();
    let init = model.initial();
    let all = robust_value(&model, &full, obj, pl, adv, &ts, cfg).expect("converges")[init];
    let best_player = match pl {
        Opt::Min => Opt::Max,
        Opt::Max => Opt::Min,
    };
    let best = robust_value(&model, &full, obj, best_player, adv, &ts, cfg).expect("converges")[init];
    let beyond = rng.gen_bool(0.15);
    let u: f64 = rng.gen_range(0.1..0.9);
    let mut threshold = if beyond {
        if kind.is_lower_bound() {
            best + 0.05
        } else {
            best - 0.05
        }
    } else {
        all + u * (best - all)
    };
    if !threshold.is_finite() {
        threshold = best;
    }
    // rounded towards the satisfiable side so that a threshold at `best`
    // stays attainable
    threshold = if kind.is_lower_bound() { (threshold * 1e6).floor() } else { (threshold * 1e6).ceil() } / 1e6;
    if kind.is_reward() {
        threshold = threshold.max(0.0);
    } else {
        threshold = threshold.clamp(0.0, 1.0);
    }
    // clamping can pull a threshold meant to be out of reach back to `best`
    let attainable = if kind.is_lower_bound() { threshold <= best } else { threshold >= best };
    let spec = Spec::new(kind, threshold, target).expect("threshold in range").with_label("goal");
    BenchmarkInstance {
        domain: "random".into(),
        params: format!("seed={seed}"),
        model,
        spec,
        expected_solvable: attainable,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_model;
    use crate::robust::almost_sure_mask;

    #[test]
    fn deterministic_and_valid() {
        for seed in 0..50 {
            let a = random_model(6, 3, 3, seed, seed % 2 == 0);
            let b = random_model(6, 3, 3, seed, seed % 2 == 0);
            assert_eq!(a, b);
            assert!(validate_model(&a).is_empty());
            assert!(a.is_absorbing(5));
        }
    }

    #[test]
    fn progressive_models_terminate() {
        for seed in 0..50 {
            let m = random_model(6, 3, 3, seed, true);
            let full = MultiStrategy::full(&m);
            let sure = almost_sure_mask(&m, &full, &[5].into());
            assert!(sure.iter().all(|&s| s), "seed {seed}");
        }
    }

    #[test]
    fn instances_cover_all_kinds() {
        let kinds: std::collections::BTreeSet<String> =
            (0..8).map(|s| format!("{:?}", random_instance(s).spec.kind)).collect();
        assert_eq!(kinds.len(), 4);
    }
}
