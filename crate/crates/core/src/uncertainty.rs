//! The interval polytope 𝒫(s,a) of one row: feasibility, vertices, and the
//! greedy inner optimization.

use serde::Serialize;

use crate::error::RowError;
use crate::model::{Successor, SUM_TOL};

/// Two vertices are the same when every coordinate agrees within this.
pub const VERTEX_TOL: f64 = 1e-12;

/// Rows whose residual enumeration would exceed this many candidates are
/// refused by [`enumerate_vertices`].
pub const MAX_VERTEX_CANDIDATES: usize = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Opt {
    Min,
    Max,
}

impl Opt {
    pub fn pick(self, a: f64, b: f64) -> f64 {
        match self {
            Opt::Min => a.min(b),
            Opt::Max => a.max(b),
        }
    }

    pub fn worst(self) -> f64 {
        match self {
            Opt::Min => f64::INFINITY,
            Opt::Max => f64::NEG_INFINITY,
        }
    }
}

/// Probability per listed successor of a row, in row order.
pub type VertexDistribution = Vec<f64>;

fn sums(row: &[Successor]) -> (f64, f64) {
    row.iter().fold((0.0, 0.0), |(l, u), s| (l + s.lower, u + s.upper))
}

/// Σ lower ≤ 1 ≤ Σ upper, up to [`SUM_TOL`].
pub fn is_feasible(row: &[Successor]) -> bool {
    let (l, u) = sums(row);
    l <= 1.0 + SUM_TOL && u >= 1.0 - SUM_TOL
}

fn check(row: &[Successor]) -> Result<(), RowError> {
    if is_feasible(row) {
        Ok(())
    } else {
        let (lower_sum, upper_sum) = sums(row);
        Err(RowError::Infeasible { lower_sum, upper_sum })
    }
}

/// Largest probability any P ∈ 𝒫 assigns to entry `i`.
pub fn max_mass(row: &[Successor], i: usize) -> f64 {
    let others: f64 = row.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, s)| s.lower).sum();
    row[i].upper.min(1.0 - others)
}

/// Smallest probability any P ∈ 𝒫 assigns to entry `i`.
pub fn min_mass(row: &[Successor], i: usize) -> f64 {
    let others: f64 = row.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, s)| s.upper).sum();
    row[i].lower.max(1.0 - others).max(0.0)
}

/// All extreme points of the row polytope, deduplicated, in the order they
/// are first produced: residual entry ascending, then bound pattern of the
/// other entries as a binary counter (bit set = upper bound).
pub fn enumerate_vertices(row: &[Successor]) -> Result<Vec<VertexDistribution>, RowError> {
    check(row)?;
    let k = row.len();
    if k == 0 {
        return Ok(Vec::new());
    }
    let patterns = 1usize.checked_shl(k as u32 - 1).unwrap_or(usize::MAX);
    if k >= 25 || patterns.saturating_mul(k) > MAX_VERTEX_CANDIDATES {
        return Err(RowError::TooManyVertices(patterns.saturating_mul(k)));
    }
    let mut out: Vec<VertexDistribution> = Vec::new();
    let mut p = vec![0.0; k];
    for r in 0..k {
        for mask in 0..patterns {
            let mut bit = 0;
            let mut rest = 0.0;
            for (j, s) in row.iter().enumerate() {
                if j == r {
                    continue;
                }
                p[j] = if mask >> bit & 1 == 1 { s.upper } else { s.lower };
                rest += p[j];
                bit += 1;
            }
            let residual = 1.0 - rest;
            let (lo, hi) = (row[r].lower, row[r].upper);
            if residual < lo - VERTEX_TOL || residual > hi + VERTEX_TOL {
                continue;
            }
            // snap to a bound so rounding noise never creates a spurious positive entry
            p[r] = if (residual - lo).abs() <= VERTEX_TOL {
                lo
            } else if (residual - hi).abs() <= VERTEX_TOL {
                hi
            } else {
                residual
            };
            let dup = out.iter().any(|v| v.iter().zip(&p).all(|(a, b)| (a - b).abs() <= VERTEX_TOL));
            if !dup {
                out.push(p.clone());
            }
        }
    }
    Ok(out)
}

/// Exact extremum of Σ P(s')·values[s'] over the row polytope together with
/// an attaining vertex. `values` is indexed like the row.
///
/// Starts from all lower bounds and hands out the remaining mass in value
/// order (ascending for `Min`, descending for `Max`), ties by row position.
pub fn worst_case_expectation(
    row: &[Successor],
    values: &[f64],
    dir: Opt,
) -> Result<(f64, VertexDistribution), RowError> {
    check(row)?;
    assert_eq!(row.len(), values.len(), "one value per successor");
    let mut order: Vec<usize> = (0..row.len()).collect();
    sort_by_value(&mut order, |i| values[i], dir);
    let mut p: Vec<f64> = row.iter().map(|s| s.lower).collect();
    let mut slack = 1.0 - p.iter().sum::<f64>();
    for &i in &order {
        if slack <= 0.0 {
            break;
        }
        let add = (row[i].upper - row[i].lower).min(slack);
        p[i] += add;
        slack -= add;
    }
    let value = p.iter().zip(values).map(|(a, b)| a * b).sum();
    Ok((value, p))
}

/// Same optimum as [`worst_case_expectation`] with values looked up by
/// state. No feasibility check and no distribution; used inside sweeps.
pub(crate) fn extremum_by_state(row: &[Successor], x: &[f64], dir: Opt, order: &mut Vec<usize>) -> f64 {
    order.clear();
    order.extend(0..row.len());
    sort_by_value(order, |i| x[row[i].state], dir);
    let mut slack = 1.0 - row.iter().map(|s| s.lower).sum::<f64>();
    let mut value = 0.0;
    // skip zero weights so that infinite values do not turn into NaN
    for s in row {
        if s.lower > 0.0 {
            value += s.lower * x[s.state];
        }
    }
    for &i in order.iter() {
        if slack <= 0.0 {
            break;
        }
        let add = (row[i].upper - row[i].lower).min(slack);
        if add > 0.0 {
            value += add * x[row[i].state];
        }
        slack -= add;
    }
    value
}

fn sort_by_value(order: &mut [usize], value: impl Fn(usize) -> f64, dir: Opt) {
    order.sort_by(|&a, &b| {
        let (va, vb) = (value(a), value(b));
        let c = match dir {
            Opt::Min => va.total_cmp(&vb),
            Opt::Max => vb.total_cmp(&va),
        };
        c.then(a.cmp(&b))
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn row(bounds: &[(f64, f64)]) -> Vec<Successor> {
        bounds.iter().enumerate().map(|(i, &(l, u))| Successor::new(i, l, u)).collect()
    }

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn feasibility_examples() {
        assert!(is_feasible(&row(&[(0.12, 0.32), (0.68, 0.88)])));
        assert!(!is_feasible(&row(&[(0.6, 0.7), (0.5, 0.6)])));
        assert!(is_feasible(&row(&[(1.0, 1.0)])));
    }

    #[test]
    fn nav3_fast_row_vertices() {
        let v = enumerate_vertices(&row(&[(0.12, 0.32), (0.68, 0.88)])).unwrap();
        assert_eq!(v.len(), 2);
        assert!(v.iter().any(|p| close(p, &[0.32, 0.68])));
        assert!(v.iter().any(|p| close(p, &[0.12, 0.88])));
    }

    #[test]
    fn simplex_corners() {
        assert_eq!(enumerate_vertices(&row(&[(1.0, 1.0)])).unwrap(), vec![vec![1.0]]);
        let v = enumerate_vertices(&row(&[(0.0, 1.0); 3])).unwrap();
        assert_eq!(v.len(), 3);
        for i in 0..3 {
            let mut e = vec![0.0; 3];
            e[i] = 1.0;
            assert!(v.iter().any(|p| close(p, &e)));
        }
    }

    #[test]
    fn infeasible_row_is_rejected() {
        assert!(matches!(enumerate_vertices(&row(&[(0.6, 0.7), (0.5, 0.6)])), Err(RowError::Infeasible { .. })));
    }

    /// Independent oracle: every point with at most one coordinate strictly
    /// inside its bounds, found by fixing each coordinate pattern over all k
    /// positions (not k−1) and solving for a free coordinate if needed.
    fn brute_vertices(r: &[Successor]) -> Vec<Vec<f64>> {
        let k = r.len();
        let mut out: Vec<Vec<f64>> = Vec::new();
        let push = |p: Vec<f64>, out: &mut Vec<Vec<f64>>| {
            if !out.iter().any(|q| close(q, &p)) {
                out.push(p);
            }
        };
        for mask in 0u32..(1 << k) {
            let p: Vec<f64> = (0..k).map(|i| if mask >> i & 1 == 1 { r[i].upper } else { r[i].lower }).collect();
            let total: f64 = p.iter().sum();
            if (total - 1.0).abs() <= 1e-12 {
                push(p.clone(), &mut out);
            }
            for free in 0..k {
                let mut q = p.clone();
                q[free] = 1.0 - (total - p[free]);
                if q[free] > r[free].lower + 1e-12 && q[free] < r[free].upper - 1e-12 {
                    push(q, &mut out);
                }
            }
        }
        out
    }

    #[test]
    fn ten_uniform_successors_match_brute_force() {
        let r = row(&[(0.05, 0.15); 10]);
        let v = enumerate_vertices(&r).unwrap();
        let b = brute_vertices(&r);
        assert_eq!(v.len(), b.len());
        assert_eq!(v.len(), 252);
        for p in &b {
            assert!(v.iter().any(|q| close(p, q)));
        }
    }

    #[test]
    fn greedy_examples() {
        let r = row(&[(0.12, 0.32), (0.68, 0.88)]);
        let (v, p) = worst_case_expectation(&r, &[0.0, 1.0], Opt::Min).unwrap();
        assert!((v - 0.68).abs() < 1e-15);
        assert!(close(&p, &[0.32, 0.68]));
        let (v, p) = worst_case_expectation(&r, &[0.0, 1.0], Opt::Max).unwrap();
        assert!((v - 0.88).abs() < 1e-15);
        assert!(close(&p, &[0.12, 0.88]));
        let (v, _) = worst_case_expectation(&r, &[0.4, 0.4], Opt::Max).unwrap();
        assert!((v - 0.4).abs() < 1e-15);
    }

    fn arb_row(max_k: usize) -> impl Strategy<Value = Vec<Successor>> {
        proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..=max_k).prop_filter_map("feasible", |pairs| {
            let r: Vec<Successor> = pairs
                .into_iter()
                .enumerate()
                .map(|(i, (a, b))| {
                    let a = (a * 100.0).round() / 100.0;
                    let b = (b * 100.0).round() / 100.0;
                    Successor::new(i, a.min(b) * 0.5, a.max(b))
                })
                .collect();
            is_feasible(&r).then_some(r)
        })
    }

    fn is_vertex(r: &[Successor], p: &[f64]) -> bool {
        let inner = r.iter().zip(p).filter(|(s, &x)| x > s.lower + 1e-12 && x < s.upper - 1e-12).count();
        inner <= 1
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        #[test]
        fn greedy_matches_vertex_extremum(r in arb_row(6), seed in proptest::collection::vec(-5.0f64..5.0, 6)) {
            let values = &seed[..r.len()];
            let verts = enumerate_vertices(&r).unwrap();
            for dir in [Opt::Min, Opt::Max] {
                let (g, p) = worst_case_expectation(&r, values, dir).unwrap();
                let best = verts
                    .iter()
                    .map(|v| v.iter().zip(values).map(|(a, b)| a * b).sum::<f64>())
                    .fold(dir.worst(), |acc, x| dir.pick(acc, x));
                prop_assert!((g - best).abs() <= 1e-12, "{g} vs {best}");
                prop_assert!(is_vertex(&r, &p));
                let mut order = Vec::new();
                let fast = extremum_by_state(&r, values, dir, &mut order);
                prop_assert!((fast - g).abs() <= 1e-12);
            }
        }

        #[test]
        fn vertices_are_valid_distinct_and_extreme(r in arb_row(4)) {
            let verts = enumerate_vertices(&r).unwrap();
            prop_assert!(!verts.is_empty());
            for (i, v) in verts.iter().enumerate() {
                prop_assert!((v.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
                for (x, s) in v.iter().zip(&r) {
                    prop_assert!(*x >= s.lower && *x <= s.upper);
                }
                for w in &verts[..i] {
                    prop_assert!(!close(v, w));
                }
            }
            for (i, v) in verts.iter().enumerate() {
                for (j, a) in verts.iter().enumerate() {
                    for b in &verts[j + 1..] {
                        if j == i || std::ptr::eq(b, v) {
                            continue;
                        }
                        let mid: Vec<f64> = a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect();
                        prop_assert!(!close(&mid, v), "vertex {i} is a midpoint");
                    }
                }
            }
        }

        #[test]
        fn min_expectation_monotone(r in arb_row(5), vals in proptest::collection::vec(0.0f64..1.0, 5), idx in 0usize..5, bump in 0.0f64..1.0) {
            let values = vals[..r.len()].to_vec();
            let mut raised = values.clone();
            let i = idx % r.len();
            raised[i] += bump;
            let (a, _) = worst_case_expectation(&r, &values, Opt::Min).unwrap();
            let (b, _) = worst_case_expectation(&r, &raised, Opt::Min).unwrap();
            prop_assert!(b >= a - 1e-12);
        }

        #[test]
        fn constant_values(r in arb_row(5), c in -3.0f64..3.0) {
            let values = vec![c; r.len()];
            for dir in [Opt::Min, Opt::Max] {
                let (v, _) = worst_case_expectation(&r, &values, dir).unwrap();
                prop_assert!((v - c).abs() <= 1e-9);
            }
        }
    }
}
