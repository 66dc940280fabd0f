//! Limit-set estimation from finite walk prefixes, and the structural checks
//! built on it.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::{gap_components, hausdorff_distance};
use crate::vector::{NormKind, Vector};
use crate::walk::Walk;

pub const DEFAULT_WINDOW_FRACTION: f64 = 0.3;
pub const DEFAULT_MIN_HITS: usize = 2;
/// Steps needing more subdivisions than this are not rasterized.
const MAX_SUBDIVISIONS: usize = 64;

#[derive(Clone, Copy, Debug)]
pub struct EstimateParams {
    /// Fraction of the walk (from the end) to examine.
    pub window_fraction: f64,
    pub resolution: f64,
    /// Number of distinct phases that must visit a cell.
    pub min_hits: usize,
    /// Overrides the walk's own norm when set.
    pub norm: Option<NormKind>,
    /// Rasterize long steps; defaults to whether the walk is out-and-back.
    pub interpolate: Option<bool>,
}

impl EstimateParams {
    pub fn new(window_fraction: f64, resolution: f64) -> Self {
        EstimateParams {
            window_fraction,
            resolution,
            min_hits: DEFAULT_MIN_HITS,
            norm: None,
            interpolate: None,
        }
    }

    pub fn min_hits(mut self, min_hits: usize) -> Self {
        self.min_hits = min_hits;
        self
    }
}

/// Cluster points of a walk's late window.
#[derive(Clone, Debug, PartialEq)]
pub struct LimitEstimate<V> {
    pub points: Vec<V>,
    /// Number of distinct phases that visited each point's cells.
    pub hit_counts: Vec<usize>,
    /// Sum indices `[start, end)` examined.
    pub window: (usize, usize),
    pub resolution: f64,
    pub norm: NormKind,
}

impl<V: Vector> LimitEstimate<V> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn max_norm(&self) -> f64 {
        self.points.iter().map(|p| p.norm(self.norm)).fold(0.0, f64::max)
    }
}

/// First sum index of the examined window.
///
/// The last `fraction` of the sums, widened back to a phase start and to at
/// least two phases when the walk has them.
pub fn window_start<V: Vector>(w: &Walk<V>, fraction: f64) -> usize {
    let n = w.len();
    let take = ((fraction * n as f64).ceil() as usize).clamp(1, n);
    let mut phase = w.phase_of(n - take);
    if phase == w.phase_count() && phase > 1 {
        phase -= 1;
    }
    w.phase_range(phase).start
}

struct Cell<V> {
    sum: V,
    count: usize,
    phases: Vec<usize>,
    first: usize,
}

fn cell_key<V: Vector>(v: &V, resolution: f64) -> Vec<(usize, i64)> {
    v.entries()
        .into_iter()
        .map(|(i, x)| (i, (x / resolution).round() as i64))
        .filter(|&(_, c)| c != 0)
        .collect()
}

fn record<V: Vector>(
    cells: &mut HashMap<Vec<(usize, i64)>, Cell<V>>,
    v: V,
    phase: usize,
    order: usize,
    resolution: f64,
) {
    let key = cell_key(&v, resolution);
    match cells.get_mut(&key) {
        Some(c) => {
            c.sum = c.sum.add(&v);
            c.count += 1;
            if c.phases.last() != Some(&phase) {
                c.phases.push(phase);
            }
        }
        None => {
            cells.insert(
                key,
                Cell {
                    sum: v,
                    count: 1,
                    phases: vec![phase],
                    first: order,
                },
            );
        }
    }
}

/// Estimates the limit set with the default hit threshold.
pub fn estimate_limit_set<V: Vector>(
    w: &Walk<V>,
    window_fraction: f64,
    resolution: f64,
) -> Result<LimitEstimate<V>> {
    estimate_with(w, &EstimateParams::new(window_fraction, resolution))
}

/// Estimates the limit set of a walk prefix.
///
/// Every sum in the window is snapped to a grid of pitch `resolution`; for
/// out-and-back walks so are points spaced `resolution / 2` along each
/// longer step (up to 32 resolutions long). A cell's hit count is the
/// number of distinct phases visiting it. Cell centroids closer than
/// `resolution / 2` are merged, strongest first, and the merged
/// representatives hit at least `min_hits` times are returned.
pub fn estimate_with<V: Vector>(w: &Walk<V>, params: &EstimateParams) -> Result<LimitEstimate<V>> {
    let res = params.resolution;
    if !(params.window_fraction > 0.0 && params.window_fraction <= 1.0) {
        return Err(Error::invalid("window fraction must be in (0, 1]"));
    }
    if !(res > 0.0) {
        return Err(Error::invalid("resolution must be positive"));
    }
    if w.is_empty() {
        return Err(Error::WindowTooShort);
    }
    let norm = params.norm.unwrap_or(w.norm);
    let interpolate = params.interpolate.unwrap_or(w.palindromic);
    let start = window_start(w, params.window_fraction);
    let end = w.len();
    if end - start < 2 {
        return Err(Error::WindowTooShort);
    }

    let mut cells = HashMap::new();
    let mut order = 0;
    for t in start..end {
        let phase = w.phase_of(t);
        if interpolate && t > start {
            let (a, b) = (&w.sums[t - 1], &w.sums[t]);
            let d = a.distance(b, norm);
            let n = (d / (res / 2.0)).ceil() as usize;
            if n > 1 && n <= MAX_SUBDIVISIONS {
                let delta = b.sub(a);
                for j in 1..n {
                    let p = a.add(&delta.scale(j as f64 / n as f64));
                    record(&mut cells, p, phase, order, res);
                    order += 1;
                }
            }
        }
        record(&mut cells, w.sums[t].clone(), phase, order, res);
        order += 1;
    }

    let mut cands: Vec<(V, Vec<usize>, usize)> = cells
        .into_values()
        .map(|c| (c.sum.scale(1.0 / c.count as f64), c.phases, c.first))
        .collect();
    cands.sort_by(|a, b| b.1.len().cmp(&a.1.len()).then(a.2.cmp(&b.2)));

    let mut reps: Vec<(V, Vec<usize>)> = Vec::new();
    for (p, phases, _) in cands {
        match reps.iter_mut().find(|(q, _)| q.distance(&p, norm) < res / 2.0) {
            Some((_, hits)) => {
                hits.extend(phases);
                hits.sort_unstable();
                hits.dedup();
            }
            None => reps.push((p, phases)),
        }
    }
    let (points, hit_counts) = reps
        .into_iter()
        .filter(|(_, h)| h.len() >= params.min_hits)
        .map(|(p, h)| (p, h.len()))
        .unzip();
    Ok(LimitEstimate {
        points,
        hit_counts,
        window: (start, end),
        resolution: res,
        norm,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DichotomyVerdict {
    CompactConnected,
    AllComponentsEscape,
    Violation,
}

impl DichotomyVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            DichotomyVerdict::CompactConnected => "compact-connected",
            DichotomyVerdict::AllComponentsEscape => "all-components-escape",
            DichotomyVerdict::Violation => "violation",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DichotomyReport {
    pub verdict: DichotomyVerdict,
    /// Blocks of estimate point indices.
    pub components: Vec<Vec<usize>>,
    pub gap: f64,
    pub bound: f64,
}

/// Classifies an estimate as compact and connected, as a union of escaping
/// components, or as neither.
///
/// A component escapes when some point has norm at least `bound - gap`.
pub fn verify_dichotomy<V: Vector>(est: &LimitEstimate<V>, gap: f64, bound: f64) -> Result<DichotomyReport> {
    if est.is_empty() {
        return Err(Error::EmptySample);
    }
    let components = gap_components(&est.points, gap, est.norm);
    let shell = bound - gap;
    let reach: Vec<f64> = components
        .iter()
        .map(|c| c.iter().map(|&i| est.points[i].norm(est.norm)).fold(0.0, f64::max))
        .collect();
    let verdict = if components.len() == 1 && reach[0] < shell {
        DichotomyVerdict::CompactConnected
    } else if reach.iter().all(|&r| r >= shell) {
        DichotomyVerdict::AllComponentsEscape
    } else {
        DichotomyVerdict::Violation
    };
    Ok(DichotomyReport {
        verdict,
        components,
        gap,
        bound,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum SingletonVerdict<V> {
    ConvergesTo(V),
    DivergesWithSingleton(V),
    /// The estimate has this many points.
    NotSingleton(usize),
}

impl<V> SingletonVerdict<V> {
    pub fn as_str(&self) -> &'static str {
        match self {
            SingletonVerdict::ConvergesTo(_) => "converges-to",
            SingletonVerdict::DivergesWithSingleton(_) => "diverges-with-singleton",
            SingletonVerdict::NotSingleton(_) => "not-singleton",
        }
    }
}

/// Decides whether a walk with a one-point limit estimate converges.
///
/// The estimate uses resolution `tol` over the default window. It converges
/// when the last quarter of the sums lies within `tol` of the point.
pub fn singleton_convergence_check<V: Vector>(w: &Walk<V>, tol: f64) -> Result<SingletonVerdict<V>> {
    let est = estimate_limit_set(w, DEFAULT_WINDOW_FRACTION, tol)?;
    if est.len() != 1 {
        return Ok(SingletonVerdict::NotSingleton(est.len()));
    }
    let p = est.points.into_iter().next().unwrap();
    let n = w.len();
    let from = n - n.div_ceil(4);
    let settled = w.sums[from..].iter().all(|s| s.distance(&p, w.norm) <= tol);
    Ok(if settled {
        SingletonVerdict::ConvergesTo(p)
    } else {
        SingletonVerdict::DivergesWithSingleton(p)
    })
}

/// Checks that approximants of a dense sequence share its cluster set.
///
/// Requires `|approximants_i - dense_i| < epsilons_i`. The approximants are
/// estimated as a sequence (window 1/2, at `resolution`) and compared with
/// `target` at Hausdorff tolerance `2 max(late epsilons) + resolution`.
pub fn dense_approx_check<V: Vector>(
    dense: &[V],
    approximants: &[V],
    epsilons: &[f64],
    target: &[V],
    resolution: f64,
    norm: NormKind,
) -> Result<bool> {
    if dense.len() != approximants.len() || dense.len() != epsilons.len() {
        return Err(Error::invalid("dense, approximants and epsilons differ in length"));
    }
    for (i, ((d, a), e)) in dense.iter().zip(approximants).zip(epsilons).enumerate() {
        if d.distance(a, norm) >= *e {
            return Err(Error::PreconditionViolated(i + 1));
        }
    }
    let w = Walk::from_sequence(approximants.to_vec(), norm)?;
    let est = estimate_with(
        &w,
        &EstimateParams {
            window_fraction: 0.5,
            resolution,
            min_hits: DEFAULT_MIN_HITS,
            norm: Some(norm),
            interpolate: Some(false),
        },
    )?;
    if est.is_empty() {
        return Ok(false);
    }
    let late_eps = epsilons[est.window.0..].iter().copied().fold(0.0, f64::max);
    Ok(hausdorff_distance(&est.points, target, norm)? <= 2.0 * late_eps + resolution)
}

#[derive(Clone, Debug, Serialize)]
pub struct CauchyReport {
    pub max_gap: f64,
    /// Sum index pairs attaining `max_gap` (at most 64).
    pub gap_pairs: Vec<(usize, usize)>,
    pub tail_start: usize,
}

/// Largest pairwise distance among the last `tail_fraction` of the sums.
pub fn cauchy_diagnostic<V: Vector>(w: &Walk<V>, tail_fraction: f64) -> Result<CauchyReport> {
    let n = w.len();
    let take = ((tail_fraction * n as f64).ceil() as usize).min(n);
    if take < 2 {
        return Err(Error::WindowTooShort);
    }
    let start = n - take;
    let mut max_gap = 0.0f64;
    let mut pairs = Vec::new();
    for i in start..n {
        for j in i + 1..n {
            let d = w.sums[i].distance(&w.sums[j], w.norm);
            if d > max_gap + 1e-12 {
                max_gap = d;
                pairs.clear();
            }
            if (d - max_gap).abs() <= 1e-12 && pairs.len() < 64 {
                pairs.push((i, j));
            }
        }
    }
    Ok(CauchyReport {
        max_gap,
        gap_pairs: pairs,
        tail_start: start,
    })
}
