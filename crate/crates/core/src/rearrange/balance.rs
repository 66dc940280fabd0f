//! Prefix balancing: order a finite batch of vectors so that every prefix
//! sum stays strictly below a bound.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{add_into, dense_norm};
use crate::vector::{NormKind, Vector};

/// Largest batch searched exhaustively.
pub const EXHAUSTIVE_LIMIT: usize = 10;
/// Randomized greedy passes tried after the deterministic one fails.
pub const GREEDY_RESTARTS: u64 = 63;
/// Batches above this size use the bucketed greedy.
pub const BUCKETED_THRESHOLD: usize = 512;
/// Batches up to this size fall back to the full greedy if bucketing fails.
const FULL_GREEDY_LIMIT: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BalanceStrategy {
    Exhaustive,
    Greedy,
    /// Exhaustive up to [`EXHAUSTIVE_LIMIT`], greedy with restarts beyond.
    Auto,
}

impl std::str::FromStr for BalanceStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exhaustive" => Ok(BalanceStrategy::Exhaustive),
            "greedy" => Ok(BalanceStrategy::Greedy),
            "auto" => Ok(BalanceStrategy::Auto),
            other => Err(Error::Parse(format!("unknown strategy {other:?}"))),
        }
    }
}

/// Finds a permutation (1-based) of `terms` whose prefix sums all have norm
/// `< bound`. `None` means no such permutation exists (exhaustive) or none
/// was found (greedy).
pub fn find_balanced_permutation<V: Vector>(
    terms: &[V],
    bound: f64,
    strategy: BalanceStrategy,
    norm: NormKind,
) -> Result<Option<Vec<usize>>> {
    if terms.is_empty() {
        return Err(Error::invalid("cannot balance an empty batch"));
    }
    let dim = terms.iter().map(|t| t.dense_len()).max().unwrap_or(0).max(1);
    let dense: Vec<Vec<f64>> = terms.iter().map(|t| t.to_dense(dim)).collect();
    let rows: Vec<&[f64]> = dense.iter().map(|r| r.as_slice()).collect();
    let found = balance_rows(&rows, bound, strategy, norm)?;
    Ok(found.map(|p| p.into_iter().map(|i| i + 1).collect()))
}

/// Row-level balancing on dense slices; returns a 0-based order.
pub(crate) fn balance_rows(
    rows: &[&[f64]],
    bound: f64,
    strategy: BalanceStrategy,
    norm: NormKind,
) -> Result<Option<Vec<usize>>> {
    let n = rows.len();
    match strategy {
        BalanceStrategy::Exhaustive => {
            if n > EXHAUSTIVE_LIMIT {
                return Err(Error::invalid(format!(
                    "exhaustive balancing needs at most {EXHAUSTIVE_LIMIT} terms, got {n}"
                )));
            }
            Ok(exhaustive(rows, bound, norm))
        }
        BalanceStrategy::Greedy => Ok(greedy_with_restarts(rows, bound, norm)),
        BalanceStrategy::Auto => {
            if n <= EXHAUSTIVE_LIMIT {
                Ok(exhaustive(rows, bound, norm))
            } else if n <= BUCKETED_THRESHOLD {
                Ok(greedy_with_restarts(rows, bound, norm))
            } else {
                let found = bucketed_greedy(rows, bound, norm);
                if found.is_none() && n <= FULL_GREEDY_LIMIT {
                    return Ok(greedy(rows, bound, norm));
                }
                Ok(found)
            }
        }
    }
}

/// Maximum prefix norm of `rows` taken in `order`.
pub(crate) fn max_prefix_norm(rows: &[&[f64]], order: &[usize], norm: NormKind) -> f64 {
    let dim = rows.first().map_or(0, |r| r.len());
    let mut acc = vec![0.0; dim];
    let mut worst: f64 = 0.0;
    for &i in order {
        add_into(&mut acc, rows[i]);
        worst = worst.max(dense_norm(&acc, norm));
    }
    worst
}

/// Depth-first search in lexicographic order; returns the first solution.
fn exhaustive(rows: &[&[f64]], bound: f64, norm: NormKind) -> Option<Vec<usize>> {
    let n = rows.len();
    let dim = rows[0].len();
    let mut used = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut stack = vec![vec![0.0; dim]; n + 1];

    fn go(
        rows: &[&[f64]],
        bound: f64,
        norm: NormKind,
        used: &mut [bool],
        order: &mut Vec<usize>,
        stack: &mut [Vec<f64>],
    ) -> bool {
        let depth = order.len();
        if depth == rows.len() {
            return true;
        }
        for i in 0..rows.len() {
            if used[i] {
                continue;
            }
            let (head, tail) = stack.split_at_mut(depth + 1);
            let next = &mut tail[0];
            for ((o, a), x) in next.iter_mut().zip(&head[depth]).zip(rows[i]) {
                *o = a + x;
            }
            if dense_norm(next, norm) >= bound {
                continue;
            }
            used[i] = true;
            order.push(i);
            if go(rows, bound, norm, used, order, stack) {
                return true;
            }
            order.pop();
            used[i] = false;
        }
        false
    }

    go(rows, bound, norm, &mut used, &mut order, &mut stack).then_some(order)
}

/// Picks, at each step, the unused row minimizing the new prefix norm
/// (lowest index on ties).
fn greedy(rows: &[&[f64]], bound: f64, norm: NormKind) -> Option<Vec<usize>> {
    randomized_greedy(rows, bound, norm, None)
}

fn greedy_with_restarts(rows: &[&[f64]], bound: f64, norm: NormKind) -> Option<Vec<usize>> {
    if let Some(order) = greedy(rows, bound, norm) {
        return Some(order);
    }
    (1..=GREEDY_RESTARTS).find_map(|seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        randomized_greedy(rows, bound, norm, Some(&mut rng))
    })
}

/// With an rng, each step picks uniformly among the three best feasible rows.
fn randomized_greedy(
    rows: &[&[f64]],
    bound: f64,
    norm: NormKind,
    mut rng: Option<&mut ChaCha8Rng>,
) -> Option<Vec<usize>> {
    let n = rows.len();
    let dim = rows[0].len();
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut acc = vec![0.0; dim];
    let mut tmp = vec![0.0; dim];
    let mut order = Vec::with_capacity(n);
    let mut best: Vec<(f64, usize)> = Vec::with_capacity(4);
    while !remaining.is_empty() {
        best.clear();
        for (pos, &i) in remaining.iter().enumerate() {
            for ((t, a), x) in tmp.iter_mut().zip(&acc).zip(rows[i]) {
                *t = a + x;
            }
            let v = dense_norm(&tmp, norm);
            if v >= bound {
                continue;
            }
            let keep = if rng.is_some() { 3 } else { 1 };
            if best.len() < keep || v < best[best.len() - 1].0 {
                let at = best.partition_point(|b| b.0 <= v);
                best.insert(at, (v, pos));
                best.truncate(keep);
            }
        }
        if best.is_empty() {
            return None;
        }
        let pick = match rng.as_deref_mut() {
            Some(r) => best[r.gen_range(0..best.len())].1,
            None => best[0].1,
        };
        let i = remaining.remove(pick);
        add_into(&mut acc, rows[i]);
        order.push(i);
    }
    Some(order)
}

/// Greedy over direction buckets. Rows are grouped by their dominant signed
/// axis; each step only considers the largest and smallest remaining row of
/// every bucket, which keeps large batches near-linear.
fn bucketed_greedy(rows: &[&[f64]], bound: f64, norm: NormKind) -> Option<Vec<usize>> {
    let dim = rows[0].len();
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); 2 * dim];
    let norms: Vec<f64> = rows.iter().map(|r| dense_norm(r, norm)).collect();
    for (i, r) in rows.iter().enumerate() {
        let (axis, val) = r
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |(ba, bv), (a, &v)| if v.abs() > bv.abs() { (a, v) } else { (ba, bv) });
        buckets[2 * axis + usize::from(val < 0.0)].push(i);
    }
    for b in &mut buckets {
        b.sort_by(|&x, &y| norms[x].total_cmp(&norms[y]).then(x.cmp(&y)));
    }
    let mut lo = vec![0usize; buckets.len()];
    let mut hi: Vec<usize> = buckets.iter().map(|b| b.len()).collect();
    let mut acc = vec![0.0; dim];
    let mut tmp = vec![0.0; dim];
    let mut order = Vec::with_capacity(rows.len());
    while order.len() < rows.len() {
        let mut best: Option<(f64, usize, usize, bool)> = None;
        for (b, bucket) in buckets.iter().enumerate() {
            if lo[b] >= hi[b] {
                continue;
            }
            for (from_top, i) in [(false, bucket[lo[b]]), (true, bucket[hi[b] - 1])] {
                for ((t, a), x) in tmp.iter_mut().zip(&acc).zip(rows[i]) {
                    *t = a + x;
                }
                let v = dense_norm(&tmp, norm);
                let better = match best {
                    None => true,
                    Some((bv, bi, _, _)) => v < bv || (v == bv && i < bi),
                };
                if better {
                    best = Some((v, i, b, from_top));
                }
            }
        }
        let (v, i, b, from_top) = best?;
        if v >= bound {
            return None;
        }
        if from_top {
            hi[b] -= 1;
        } else {
            lo[b] += 1;
        }
        add_into(&mut acc, rows[i]);
        order.push(i);
    }
    Some(order)
}

/// Shuffles `0..n` with a seeded rng; shared by the stress generators.
pub(crate) fn shuffled(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut v: Vec<usize> = (0..n).collect();
    v.shuffle(rng);
    v
}
