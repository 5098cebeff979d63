//! Parametric generators for four domains: obstacle grid (OBS), vehicle with
//! lossy communication (SAV), aircraft collision avoidance (ACA), and
//! warehouse routing (WH).
//!
//! Nominal probabilities are fixture choices: moves succeed with 0.8 and slip
//! sideways with 0.1 each, channels lose messages with 0.2 and 0.4 plus a
//! distance penalty, checkpoint segments advance with 0.95 per step.

use std::collections::{BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bench::{band, explore, BenchmarkInstance, Expansion, Succ};
use crate::error::BenchError;
use crate::io::fmt_num;
use crate::model::{ImdpModel, ModelBuilder, MultiStrategy, Spec, SpecKind};
use crate::robust::{bellman_at, cannot_reach, Objective};
use crate::uncertainty::Opt;

const MOVES: [&str; 4] = ["north", "east", "south", "west"];
const DELTA: [(i64, i64); 4] = [(-1, 0), (0, 1), (1, 0), (0, -1)];

fn eps_ok(eps: f64) -> Result<(), BenchError> {
    if (0.0..=1.0).contains(&eps) {
        Ok(())
    } else {
        Err(BenchError::Parameter(format!("epsilon {eps} outside [0, 1]")))
    }
}

/// Sweeps of maximizing VI spent on a threshold.
const THRESHOLD_SWEEPS: usize = 2000;

/// 90% of the best robust reach probability at the initial state, rounded
/// down to three decimals.
///
/// Maximizing VI approaches the value from below and can crawl when the
/// best strategies take long detours. After n sweeps the iterate is the
/// n-step value, a lower bound, so the sweep count is capped; stopping early
/// only lowers the threshold.
fn reach_threshold(model: &ImdpModel, target: &BTreeSet<usize>) -> Result<f64, BenchError> {
    let full = MultiStrategy::full(model);
    let n = model.num_states();
    let never = cannot_reach(model, &full, target);
    let mut x: Vec<f64> = (0..n).map(|s| if target.contains(&s) { 1.0 } else { 0.0 }).collect();
    let mut next = x.clone();
    let mut scratch = Vec::new();
    for _ in 0..THRESHOLD_SWEEPS {
        let mut delta: f64 = 0.0;
        for s in 0..n {
            if target.contains(&s) || never[s] {
                continue;
            }
            next[s] = bellman_at(model, &full, Objective::Reach, Opt::Max, Opt::Min, s, &x, &mut scratch);
            delta = delta.max(next[s] - x[s]);
        }
        std::mem::swap(&mut x, &mut next);
        if delta < 1e-10 {
            break;
        }
    }
    Ok((0.9 * x[model.initial()] * 1000.0).floor() / 1000.0)
}

fn label_states<K>(b: &mut ModelBuilder, keys: &[K], name: &str, pick: impl Fn(&K) -> bool) -> BTreeSet<usize> {
    let set: BTreeSet<usize> = (0..keys.len()).filter(|&s| pick(&keys[s])).collect();
    if set.is_empty() {
        b.empty_label(name);
    }
    for &s in &set {
        b.label(name, s);
    }
    set
}

#[derive(Clone, PartialEq, Eq, Hash)]
enum ObsKey {
    Cell(usize, usize),
    /// Moving into a cell with this many micro-steps left.
    Transit(usize, usize, usize),
    Trap,
    Goal,
}

fn obs_reachable(grid: usize, traps: &[bool]) -> bool {
    let mut seen = vec![false; grid * grid];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(c) = queue.pop_front() {
        if c == grid * grid - 1 {
            return true;
        }
        let (r, col) = (c / grid, c % grid);
        for (dr, dc) in DELTA {
            let (nr, nc) = (r as i64 + dr, col as i64 + dc);
            if nr < 0 || nc < 0 || nr >= grid as i64 || nc >= grid as i64 {
                continue;
            }
            let n = nr as usize * grid + nc as usize;
            if !traps[n] && !seen[n] {
                seen[n] = true;
                queue.push_back(n);
            }
        }
    }
    false
}

fn obs_model(grid: usize, steps: usize, eps: f64, traps: &[bool]) -> (ModelBuilder, Vec<ObsKey>) {
    let mut actions: Vec<&str> = MOVES.to_vec();
    actions.push("go");
    let goal = (grid - 1, grid - 1);
    let enter = |r: usize, c: usize| -> ObsKey {
        if traps[r * grid + c] {
            ObsKey::Trap
        } else if (r, c) == goal {
            ObsKey::Goal
        } else if steps > 1 {
            ObsKey::Transit(r, c, steps - 1)
        } else {
            ObsKey::Cell(r, c)
        }
    };
    explore(&actions, ObsKey::Cell(0, 0), |k| match *k {
        ObsKey::Trap | ObsKey::Goal => Expansion::Absorbing,
        ObsKey::Transit(r, c, left) => {
            let next = if left > 1 { ObsKey::Transit(r, c, left - 1) } else { ObsKey::Cell(r, c) };
            Expansion::Rows(vec![(4, vec![(next, 1.0, 1.0)], 0.0)])
        }
        ObsKey::Cell(r, c) => {
            let mut rows = Vec::new();
            for d in 0..4 {
                let mut succ: Vec<Succ<ObsKey>> = Vec::new();
                for (dir, p) in [(d, 0.8), ((d + 3) % 4, 0.1), ((d + 1) % 4, 0.1)] {
                    let (nr, nc) = (r as i64 + DELTA[dir].0, c as i64 + DELTA[dir].1);
                    let key = if nr < 0 || nc < 0 || nr >= grid as i64 || nc >= grid as i64 {
                        ObsKey::Cell(r, c)
                    } else {
                        enter(nr as usize, nc as usize)
                    };
                    let (lo, hi) = band(p, eps);
                    succ.push((key, lo, hi));
                }
                rows.push((d, succ, 0.0));
            }
            Expansion::Rows(rows)
        }
    })
}

/// Obstacle grid without parameters for the trap density; see [`gen_obs`].
pub fn gen_obs_with(
    grid: usize,
    steps: usize,
    eps: f64,
    seed: u64,
    trap_density: f64,
) -> Result<BenchmarkInstance, BenchError> {
    if grid < 2 || steps < 1 {
        return Err(BenchError::Parameter("obs needs grid >= 2 and steps >= 1".into()));
    }
    eps_ok(eps)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells = grid * grid;
    let mut traps = None;
    for _ in 0..100 {
        let t: Vec<bool> = (0..cells).map(|c| c != 0 && c != cells - 1 && rng.gen_bool(trap_density)).collect();
        if obs_reachable(grid, &t) {
            traps = Some(t);
            break;
        }
    }
    let traps = traps.ok_or(BenchError::Placement(100))?;

    // transit chains are deterministic, so the threshold comes from the
    // collapsed grid
    let (mut small, keys) = obs_model(grid, 1, eps, &traps);
    let goal = label_states(&mut small, &keys, "goal", |k| *k == ObsKey::Goal);
    let threshold = reach_threshold(&small.build()?, &goal)?;

    let (mut b, keys) = obs_model(grid, steps, eps, &traps);
    let goal = label_states(&mut b, &keys, "goal", |k| *k == ObsKey::Goal);
    label_states(&mut b, &keys, "trap", |k| *k == ObsKey::Trap);
    let model = b.build()?;
    Ok(BenchmarkInstance {
        domain: "obs".into(),
        params: format!("grid={grid};steps={steps};eps={};seed={seed}", fmt_num(eps)),
        model,
        spec: Spec::new(SpecKind::ProbGe, threshold, goal)?.with_label("goal"),
        expected_solvable: true,
    })
}

/// `grid`×`grid` cells, four moves that go the intended way with 0.8 ± ε
/// and slip to either side with 0.1 ± ε (bumping into the border keeps the
/// cell). Entering a free cell takes `steps` micro-steps. Trap cells (density
/// 0.1, never start or goal) are absorbing. Spec: reach the far corner with
/// 90% of the best robust probability.
pub fn gen_obs(grid: usize, steps: usize, eps: f64, seed: u64) -> Result<BenchmarkInstance, BenchError> {
    gen_obs_with(grid, steps, eps, seed, 0.1)
}

#[derive(Clone, PartialEq, Eq, Hash)]
enum SavKey {
    At { r: usize, c: usize, since: usize, tries: usize },
    Goal,
    Fail,
}

const RETRY_LIMIT: usize = 3;

/// SAV with explicit nominal channel losses at zero relay distance.
pub fn gen_sav_with(grid: usize, eps: f64, seed: u64, losses: (f64, f64)) -> Result<BenchmarkInstance, BenchError> {
    if grid < 3 {
        return Err(BenchError::Parameter("sav needs grid >= 3".into()));
    }
    eps_ok(eps)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let relay = (rng.gen_range(1..grid - 1), rng.gen_range(1..grid - 1));
    let range = grid / 2;
    let goal = (grid - 1, grid - 1);
    let loss = |r: usize, c: usize, ch: usize| -> f64 {
        let d = (r.abs_diff(relay.0) + c.abs_diff(relay.1)) as f64;
        let (base, per) = if ch == 0 { (losses.0, 0.05) } else { (losses.1, 0.02) };
        if base == 0.0 {
            0.0
        } else {
            (base + per * d).min(0.95)
        }
    };
    let mut actions: Vec<&str> = MOVES.to_vec();
    actions.extend(["ch1", "ch2"]);
    let start = SavKey::At { r: 0, c: 0, since: 0, tries: 0 };
    let (mut b, keys) = explore(&actions, start, |k| match *k {
        SavKey::Goal | SavKey::Fail => Expansion::Absorbing,
        SavKey::At { r, c, since, tries } => {
            let mut rows = Vec::new();
            for (d, (dr, dc)) in DELTA.iter().enumerate() {
                let (nr, nc) = (r as i64 + dr, c as i64 + dc);
                if nr < 0 || nc < 0 || nr >= grid as i64 || nc >= grid as i64 {
                    continue;
                }
                let (nr, nc) = (nr as usize, nc as usize);
                let next = if (nr, nc) == goal {
                    SavKey::Goal
                } else if since + 1 > range {
                    SavKey::Fail
                } else {
                    SavKey::At { r: nr, c: nc, since: since + 1, tries: 0 }
                };
                rows.push((d, vec![(next, 1.0, 1.0)], 0.0));
            }
            if since > 0 && tries < RETRY_LIMIT {
                for ch in 0..2 {
                    let (lo, hi) = band(loss(r, c, ch), eps);
                    let ok = SavKey::At { r, c, since: 0, tries: 0 };
                    let fail = SavKey::At { r, c, since, tries: tries + 1 };
                    let mut succ = Vec::new();
                    if hi < 1.0 {
                        succ.push((ok, ((1.0 - hi) * 1e12).round() / 1e12, ((1.0 - lo) * 1e12).round() / 1e12));
                    }
                    if hi > 0.0 {
                        succ.push((fail, lo, hi));
                    }
                    rows.push((4 + ch, succ, 0.0));
                }
            }
            Expansion::Rows(rows)
        }
    });
    let goal_set = label_states(&mut b, &keys, "goal", |k| *k == SavKey::Goal);
    label_states(&mut b, &keys, "fail", |k| *k == SavKey::Fail);
    let model = b.build()?;
    let threshold = reach_threshold(&model, &goal_set)?;
    Ok(BenchmarkInstance {
        domain: "sav".into(),
        params: format!("grid={grid};eps={};seed={seed}", fmt_num(eps)),
        model,
        spec: Spec::new(SpecKind::ProbGe, threshold, goal_set)?.with_label("goal"),
        expected_solvable: true,
    })
}

/// A vehicle crosses a `grid`×`grid` area to the far corner and may move at
/// most grid/2 times without contacting the relay (a seeded interior cell). After a move it can try
/// two channels, which lose the message with 0.2 ± ε and 0.4 ± ε plus a
/// penalty growing with the distance to the relay; after three failed tries
/// it has to move on.
pub fn gen_sav(grid: usize, eps: f64, seed: u64) -> Result<BenchmarkInstance, BenchError> {
    gen_sav_with(grid, eps, seed, (0.2, 0.4))
}

#[derive(Clone, PartialEq, Eq, Hash)]
enum AcaKey {
    S { t: usize, own: usize, intruder: usize },
    Exit,
    Collision,
}

const ACA_HORIZON: usize = 3;

/// Own aircraft on an altitude ladder of `branch + 2` levels climbs, holds,
/// or descends for three steps while an intruder drifts to one of `branch`
/// neighbouring levels with seeded nominal weights ± ε. Sharing a level after
/// a step is a collision; surviving the horizon exits the corridor.
pub fn gen_aca(branch: usize, eps: f64, seed: u64) -> Result<BenchmarkInstance, BenchError> {
    if branch < 2 {
        return Err(BenchError::Parameter("aca needs branch >= 2".into()));
    }
    eps_ok(eps)?;
    let levels = branch + 2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // drift kernel per intruder level: (level, nominal)
    let kernel: Vec<Vec<(usize, f64)>> = (0..levels)
        .map(|i| {
            let start = i.saturating_sub((branch - 1) / 2).min(levels - branch);
            let w: Vec<f64> = (0..branch).map(|_| rng.gen_range(1..=10) as f64).collect();
            let total: f64 = w.iter().sum();
            let mut probs: Vec<f64> = w.iter().map(|x| ((x / total) * 1e6).round() / 1e6).collect();
            let rest: f64 = probs[1..].iter().sum();
            probs[0] = ((1.0 - rest) * 1e6).round() / 1e6;
            (0..branch).map(|j| (start + j, probs[j])).collect()
        })
        .collect();
    let init = AcaKey::S { t: 0, own: levels / 2, intruder: rng.gen_range(0..levels) };
    let (mut b, keys) = explore(&["climb", "hold", "descend"], init, |k| match *k {
        AcaKey::Exit | AcaKey::Collision => Expansion::Absorbing,
        AcaKey::S { t, own, intruder } => {
            let mut rows = Vec::new();
            for (a, delta) in [(0usize, 1i64), (1, 0), (2, -1)] {
                let next_own = own as i64 + delta;
                if next_own < 0 || next_own >= levels as i64 {
                    continue;
                }
                let next_own = next_own as usize;
                // several intruder levels may lead to the same exit state
                let mut merged: Vec<(AcaKey, f64)> = Vec::new();
                for &(lvl, p) in &kernel[intruder] {
                    let key = if lvl == next_own {
                        AcaKey::Collision
                    } else if t + 1 == ACA_HORIZON {
                        AcaKey::Exit
                    } else {
                        AcaKey::S { t: t + 1, own: next_own, intruder: lvl }
                    };
                    match merged.iter_mut().find(|(k, _)| *k == key) {
                        Some(m) => m.1 += p,
                        None => merged.push((key, p)),
                    }
                }
                let succ = merged
                    .into_iter()
                    .map(|(key, p)| {
                        let (lo, hi) = band(p, eps);
                        (key, lo, hi)
                    })
                    .collect();
                rows.push((a, succ, 0.0));
            }
            Expansion::Rows(rows)
        }
    });
    let exit = label_states(&mut b, &keys, "exit", |k| *k == AcaKey::Exit);
    label_states(&mut b, &keys, "collision", |k| *k == AcaKey::Collision);
    let model = b.build()?;
    let threshold = reach_threshold(&model, &exit)?;
    Ok(BenchmarkInstance {
        domain: "aca".into(),
        params: format!("branch={branch};eps={};seed={seed}", fmt_num(eps)),
        model,
        spec: Spec::new(SpecKind::ProbGe, threshold, exit)?.with_label("exit"),
        expected_solvable: true,
    })
}

#[derive(Clone, PartialEq, Eq, Hash)]
enum WhKey {
    Checkpoint(usize, usize),
    /// On the segment leaving (r, c) in direction `down`, `done` steps in.
    Segment {
        r: usize,
        c: usize,
        down: bool,
        done: usize,
    },
}

const WH_SIZE: usize = 3;

/// Segment length factor: 1 or 2 in a checkerboard pattern, so exactly one
/// monotone route uses only short segments.
fn wh_factor(r: usize, c: usize, down: bool) -> usize {
    let parity = (r + c) % 2;
    if down {
        2 - parity
    } else {
        1 + parity
    }
}

/// WH with an explicit per-step success probability.
pub fn gen_wh_with(segment_steps: usize, eps: f64, success: f64) -> Result<BenchmarkInstance, BenchError> {
    if segment_steps < 1 {
        return Err(BenchError::Parameter("wh needs segment_steps >= 1".into()));
    }
    eps_ok(eps)?;
    let last = WH_SIZE - 1;
    let (ok_lo, ok_hi) = band(success, eps);
    let (fail_lo, fail_hi) = band(1.0 - success, eps);
    let step = |from: WhKey, to: WhKey| -> Vec<Succ<WhKey>> {
        let mut v = vec![(to, ok_lo, ok_hi)];
        if fail_hi > 0.0 {
            v.push((from, fail_lo, fail_hi));
        }
        v
    };
    let advance = |r: usize, c: usize, down: bool, done: usize| -> WhKey {
        let len = segment_steps * wh_factor(r, c, down);
        if done == len {
            if down {
                WhKey::Checkpoint(r + 1, c)
            } else {
                WhKey::Checkpoint(r, c + 1)
            }
        } else {
            WhKey::Segment { r, c, down, done }
        }
    };
    let (mut b, keys) = explore(&["right", "down", "advance"], WhKey::Checkpoint(0, 0), |k| match *k {
        WhKey::Checkpoint(r, c) if (r, c) == (last, last) => Expansion::Absorbing,
        WhKey::Checkpoint(r, c) => {
            let mut rows = Vec::new();
            if c < last {
                rows.push((0, step(k.clone(), advance(r, c, false, 1)), 1.0));
            }
            if r < last {
                rows.push((1, step(k.clone(), advance(r, c, true, 1)), 1.0));
            }
            Expansion::Rows(rows)
        }
        WhKey::Segment { r, c, down, done } => {
            Expansion::Rows(vec![(2, step(k.clone(), advance(r, c, down, done + 1)), 1.0)])
        }
    });
    let target = label_states(&mut b, &keys, "target", |k| *k == WhKey::Checkpoint(last, last));
    let model = b.build()?;
    // shortest route uses 2·(WH_SIZE − 1) short segments
    let nominal = (2 * last * segment_steps) as f64 / success;
    let bound = ((1.2 * nominal) * 1e6).round() / 1e6;
    Ok(BenchmarkInstance {
        domain: "wh".into(),
        params: format!("segment_steps={segment_steps};eps={}", fmt_num(eps)),
        model,
        spec: Spec::new(SpecKind::RewLe, bound, target)?.with_label("target"),
        expected_solvable: (success - eps) * 1.2 >= success,
    })
}

/// Checkpoints on a 3×3 lattice, moving right or down. A segment between
/// checkpoints takes `segment_steps` (or twice that) unit-reward steps, each
/// advancing with 0.95 ± ε and retried otherwise. Spec: expected steps to
/// the far checkpoint at most 1.2 times the nominal shortest route.
pub fn gen_wh(segment_steps: usize, eps: f64) -> Result<BenchmarkInstance, BenchError> {
    gen_wh_with(segment_steps, eps, 0.95)
}
