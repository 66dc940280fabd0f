//! One extension of a partial rearrangement: move the running sum from
//! near `a` to near `b` while every intermediate partial sum stays close to
//! `a`.

use serde::Serialize;

use super::balance::{balance_rows, BalanceStrategy};
use super::rp::{tail_sum_select, RpFamily};
use crate::error::{Error, Result};
use crate::series::{add_into, dense_distance, SeriesPrefix};
use crate::vector::Point;
use crate::walk::PartialPermutation;

/// Measurements from the most recent extension.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct StepReport {
    /// Largest `‖S_p − a‖` over the new prefixes.
    pub max_excursion: f64,
    /// `‖S_{k'} − b‖`.
    pub end_error: f64,
    pub batch_len: usize,
    pub holes: usize,
}

/// A partial rearrangement under construction.
#[derive(Clone, Debug)]
pub struct RearrangerState {
    pub tau: PartialPermutation,
    /// `k_1 = 1 < k_2 < …`, the lengths of `tau` after each stage.
    pub k_marks: Vec<usize>,
    /// The anchors `d_i'` reached so far.
    pub anchors: Vec<Point>,
    pub phase_index: usize,
    pub last_step: Option<StepReport>,
    sum: Vec<f64>,
    /// Every index in `[1, swept]` is in the range of `tau`.
    swept: usize,
}

impl RearrangerState {
    /// The base stage: `tau` is the identity on `[1, n_threshold]`, followed
    /// by tail terms chosen so the sum lands within `tol` of `anchor`.
    pub fn base(series: &SeriesPrefix, anchor: &Point, n_threshold: usize, tol: f64) -> Result<Self> {
        let a = anchor.to_f64s();
        if a.len() != series.dim() {
            return Err(Error::DimensionMismatch { expected: series.dim(), got: a.len() });
        }
        if n_threshold > series.len() {
            return Err(Error::PrefixTooShort);
        }
        let mut tau = PartialPermutation::identity(n_threshold);
        let head: Vec<usize> = (1..=n_threshold).collect();
        let mut sum = series.sum_of(&head);
        let target: Vec<f64> = a.iter().zip(&sum).map(|(x, s)| x - s).collect();
        let picks = tail_sum_select(series, n_threshold, &target, tol)?;
        for &n in &picks {
            tau.push(n)?;
            add_into(&mut sum, series.term(n));
        }
        let end_error = dense_distance(&sum, &a, series.norm_kind());
        Ok(RearrangerState {
            k_marks: vec![1, tau.len()],
            tau,
            anchors: vec![anchor.clone()],
            phase_index: 1,
            last_step: Some(StepReport { max_excursion: 0.0, end_error, batch_len: picks.len(), holes: 0 }),
            sum,
            swept: n_threshold,
        })
    }

    /// `∑_{n ≤ k} x_{τ(n)}` for the current length `k`.
    pub fn current_sum(&self) -> &[f64] {
        &self.sum
    }

    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }
}

/// `min{ε/12, δ(ε/2)/3}`, the proximity radius carried between stages.
pub fn stage_radius(family: &RpFamily, eps: f64) -> Result<f64> {
    Ok((eps / 12.0).min(family.get(eps / 2.0)?.delta / 3.0))
}

/// Extends `state` so that:
/// 1. the old `tau` is a prefix and `[1, max rng τ]` is covered;
/// 2. every new partial sum is within `eps` of `a`;
/// 3. the final sum is within `stage_radius(eps_next)` of `b`;
/// 4. the range covers `[1, N(eps_next/2)]`.
///
/// Each conclusion is checked before returning.
pub fn extension_step(
    state: RearrangerState,
    a: &Point,
    b: &Point,
    eps: f64,
    eps_next: f64,
    family: &RpFamily,
    series: &SeriesPrefix,
) -> Result<RearrangerState> {
    let stage = state.phase_index;
    let kind = series.norm_kind();
    let (av, bv) = (a.to_f64s(), b.to_f64s());
    if av.len() != series.dim() || bv.len() != series.dim() {
        return Err(Error::DimensionMismatch { expected: series.dim(), got: av.len().min(bv.len()) });
    }
    let w = family.get(eps / 2.0)?;
    let wn = family.get(eps_next / 2.0)?;
    let r_in = stage_radius(family, eps)?;
    let r_out = stage_radius(family, eps_next)?;
    let tol = r_out.min(w.delta / 3.0);
    if dense_distance(&av, &bv, kind) >= r_in {
        return Err(Error::invalid(format!("stage {stage}: anchors farther apart than {r_in}")));
    }
    if dense_distance(&state.sum, &av, kind) > r_in {
        return Err(Error::invalid(format!("stage {stage}: current sum farther than {r_in} from a")));
    }
    if state.swept < w.n_threshold && !state.tau.covers(w.n_threshold) {
        return Err(Error::invalid(format!("stage {stage}: range does not cover N(eps/2)")));
    }

    let old_max = state.tau.max_image();
    let swept_old = state.swept;
    let k0 = wn.n_threshold.max(w.n_threshold).max(old_max);
    if k0 > series.len() {
        return Err(Error::PrefixTooShort);
    }
    let holes: Vec<usize> = (state.swept + 1..=k0).filter(|&n| !state.tau.contains(n)).collect();
    let mut yz = state.sum.clone();
    for &n in &holes {
        add_into(&mut yz, series.term(n));
    }
    let target: Vec<f64> = bv.iter().zip(&yz).map(|(b, s)| b - s).collect();
    let picks = tail_sum_select(series, k0, &target, tol).map_err(|e| e.at_stage(stage))?;

    let batch: Vec<usize> = holes.iter().chain(&picks).copied().collect();
    let rows: Vec<&[f64]> = batch.iter().map(|&n| series.term(n)).collect();
    let order = if batch.is_empty() {
        Vec::new()
    } else {
        balance_rows(&rows, eps / 2.0, BalanceStrategy::Auto, kind)?.ok_or(Error::RpBoundViolated { stage })?
    };

    let RearrangerState { mut tau, mut k_marks, mut anchors, phase_index, sum, .. } = state;
    let mut running = sum;
    let mut max_excursion: f64 = 0.0;
    for &i in &order {
        tau.push(batch[i])?;
        add_into(&mut running, rows[i]);
        max_excursion = max_excursion.max(dense_distance(&running, &av, kind));
    }
    let end_error = dense_distance(&running, &bv, kind);

    let fail = |condition: u8| Error::ExtensionFailed { stage, condition };
    if !(swept_old + 1..=old_max).all(|n| tau.contains(n)) {
        return Err(fail(1));
    }
    if max_excursion > eps {
        return Err(fail(2));
    }
    if end_error > r_out {
        return Err(fail(3));
    }
    if !(swept_old + 1..=wn.n_threshold).all(|n| tau.contains(n)) {
        return Err(fail(4));
    }

    k_marks.push(tau.len());
    anchors.push(b.clone());
    Ok(RearrangerState {
        tau,
        k_marks,
        anchors,
        phase_index: phase_index + 1,
        last_step: Some(StepReport { max_excursion, end_error, batch_len: batch.len(), holes: holes.len() }),
        sum: running,
        swept: k0,
    })
}
