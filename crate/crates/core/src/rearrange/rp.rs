//! Empirical certification of the Rearrangement Property and the tail-sum
//! selection used to reach points of the sum range.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::balance::{balance_rows, max_prefix_norm, shuffled, BalanceStrategy};
use crate::error::{Counterexample, Error, Result};
use crate::series::{add_into, dense_distance, SeriesPrefix};

/// Statistics gathered while stress-testing one ε.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RpEvidence {
    pub instances: usize,
    pub max_prefix_norm: f64,
    pub max_instance_len: usize,
}

/// Constants `N(ε)` and `δ(ε)` together with the evidence backing them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RPWitness {
    pub epsilon: f64,
    pub n_threshold: usize,
    pub delta: f64,
    pub evidence: RpEvidence,
}

/// Proposed constants: `N(ε)` is the first index with `‖x_n‖ ≤ ε/4` and
/// `δ(ε) = ε/2`.
pub fn rp_constants(series: &SeriesPrefix, epsilon: f64) -> Result<(usize, f64)> {
    if !(epsilon > 0.0) {
        return Err(Error::invalid("epsilon must be positive"));
    }
    let n = (1..=series.len())
        .find(|&n| series.term_norm(n) <= epsilon / 4.0)
        .ok_or(Error::PrefixTooShort)?;
    Ok((n, epsilon / 2.0))
}

/// Longest stride-2 window tried systematically.
const WINDOW_MAX: usize = 16;
/// Longest random window drawn before repair.
const RANDOM_WINDOW_MAX: usize = 64;

/// Proposes `N(ε)`, `δ(ε)` and checks `instance_budget` finite selections
/// from `x_N, x_{N+1}, …` with `‖∑y‖ < δ`, each of which must admit an order
/// with all prefixes below ε.
pub fn certify_rp(series: &SeriesPrefix, epsilon: f64, instance_budget: usize, seed: u64) -> Result<RPWitness> {
    let (n_threshold, delta) = rp_constants(series, epsilon)?;
    let len = series.len();
    let mut evidence = RpEvidence { instances: 0, max_prefix_norm: 0.0, max_instance_len: 0 };
    let check = |indices: &[usize], evidence: &mut RpEvidence| -> Result<()> {
        let rows: Vec<&[f64]> = indices.iter().map(|&n| series.term(n)).collect();
        match balance_rows(&rows, epsilon, BalanceStrategy::Auto, series.norm_kind())? {
            Some(order) => {
                evidence.instances += 1;
                evidence.max_prefix_norm = evidence.max_prefix_norm.max(max_prefix_norm(&rows, &order, series.norm_kind()));
                evidence.max_instance_len = evidence.max_instance_len.max(indices.len());
                Ok(())
            }
            None => Err(Error::RpCertificationFailed(Box::new(Counterexample {
                indices: indices.to_vec(),
                sum_norm: series.norm(&series.sum_of(indices)),
                bound: epsilon,
            }))),
        }
    };
    let small_sum = |idx: &[usize]| series.norm(&series.sum_of(idx)) < delta;

    // Every other term from a fixed start: this catches batches of
    // same-signed copies whose sum cancels.
    'systematic: for offset in 0..2 {
        for width in 2..=WINDOW_MAX {
            if evidence.instances >= instance_budget / 2 {
                break 'systematic;
            }
            let idx: Vec<usize> = (0..width).map(|i| n_threshold + offset + 2 * i).collect();
            if idx.last().is_some_and(|&l| l <= len) && small_sum(&idx) {
                check(&idx, &mut evidence)?;
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut attempts = 0;
    while evidence.instances < instance_budget && attempts < 50 * instance_budget.max(1) {
        attempts += 1;
        let width = rng.gen_range(1..=RANDOM_WINDOW_MAX);
        if n_threshold + width > len {
            continue;
        }
        let start = rng.gen_range(n_threshold..=len - width + 1);
        let mut idx: Vec<usize> = shuffled(width, &mut rng)
            .into_iter()
            .take(rng.gen_range(1..=width))
            .map(|i| start + i)
            .collect();
        idx.sort_unstable();
        if !small_sum(&idx) {
            // Repair with later terms pulling the sum back toward zero.
            let sum = series.sum_of(&idx);
            let neg: Vec<f64> = sum.iter().map(|x| -x).collect();
            let after = *idx.last().unwrap();
            match tail_sum_select(series, after, &neg, delta / 2.0) {
                Ok(extra) => idx.extend(extra),
                Err(_) => continue,
            }
        }
        if small_sum(&idx) {
            check(&idx, &mut evidence)?;
        }
    }
    if evidence.instances < instance_budget {
        return Err(Error::PrefixTooShort);
    }
    Ok(RPWitness { epsilon, n_threshold, delta, evidence })
}

/// Witnesses for a decreasing list of ε values.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RpFamily {
    pub witnesses: Vec<RPWitness>,
}

impl RpFamily {
    /// Proposes constants without stress-testing.
    pub fn proposed(series: &SeriesPrefix, epsilons: &[f64]) -> Result<Self> {
        let witnesses = epsilons
            .iter()
            .map(|&e| {
                let (n_threshold, delta) = rp_constants(series, e)?;
                Ok(RPWitness {
                    epsilon: e,
                    n_threshold,
                    delta,
                    evidence: RpEvidence { instances: 0, max_prefix_norm: 0.0, max_instance_len: 0 },
                })
            })
            .collect::<Result<_>>()?;
        Ok(RpFamily { witnesses })
    }

    pub fn certified(series: &SeriesPrefix, epsilons: &[f64], budget: usize, seed: u64) -> Result<Self> {
        let witnesses = epsilons
            .iter()
            .enumerate()
            .map(|(i, &e)| certify_rp(series, e, budget, seed.wrapping_add(i as u64)))
            .collect::<Result<_>>()?;
        Ok(RpFamily { witnesses })
    }

    /// δ nonincreasing and N nondecreasing as ε decreases.
    pub fn is_monotone(&self) -> bool {
        let mut sorted: Vec<&RPWitness> = self.witnesses.iter().collect();
        sorted.sort_by(|a, b| b.epsilon.total_cmp(&a.epsilon));
        sorted
            .windows(2)
            .all(|w| w[0].delta >= w[1].delta && w[0].n_threshold <= w[1].n_threshold)
    }

    pub fn get(&self, epsilon: f64) -> Result<&RPWitness> {
        self.witnesses
            .iter()
            .find(|w| (w.epsilon - epsilon).abs() <= 1e-12 * epsilon.abs())
            .ok_or_else(|| Error::invalid(format!("no witness for epsilon {epsilon}")))
    }
}

/// Scans indices after `start` and keeps each term that brings the running
/// sum closer to `target`, stopping once within `tol`. On the interleaved
/// full-sum-range family this is the per-coordinate Riemann selection.
pub fn tail_sum_select(series: &SeriesPrefix, start: usize, target: &[f64], tol: f64) -> Result<Vec<usize>> {
    if target.len() != series.dim() {
        return Err(Error::DimensionMismatch { expected: series.dim(), got: target.len() });
    }
    let kind = series.norm_kind();
    let mut acc = vec![0.0; series.dim()];
    let mut tmp = acc.clone();
    let mut err = dense_distance(target, &acc, kind);
    let mut chosen = Vec::new();
    for n in start + 1..=series.len() {
        if err <= tol {
            return Ok(chosen);
        }
        tmp.copy_from_slice(&acc);
        add_into(&mut tmp, series.term(n));
        let e = dense_distance(target, &tmp, kind);
        if e < err {
            std::mem::swap(&mut acc, &mut tmp);
            err = e;
            chosen.push(n);
        }
    }
    if err <= tol {
        Ok(chosen)
    } else {
        Err(Error::PrefixTooShort)
    }
}
