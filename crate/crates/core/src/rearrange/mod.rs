//! Rearranging a series with the Rearrangement Property so that the limit
//! set of its partial sums is a prescribed chainable set.

pub mod balance;
pub mod extend;
pub mod rp;

use serde::Serialize;

pub use balance::{find_balanced_permutation, BalanceStrategy};
pub use extend::{extension_step, stage_radius, RearrangerState, StepReport};
pub use rp::{certify_rp, rp_constants, tail_sum_select, RPWitness, RpEvidence, RpFamily};

use crate::error::{Error, Result};
use crate::metric::PointSample;
use crate::series::{add_into, dense_distance, SeriesPrefix};
use crate::vector::{NormKind, Point, Vector};
use crate::walk::{PartialPermutation, Walk};

/// A sequence `d_1, d_2, …` split at `l_1 = 1 < l_2 < …` so that segment
/// `i` (`d_{l_i} … d_{l_{i+1}}`) is an `η_i`-chain.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainSchedule {
    pub dense: Vec<Point>,
    /// 1-based `l_i`; one more entry than `etas`.
    pub boundaries: Vec<usize>,
    pub etas: Vec<f64>,
}

impl ChainSchedule {
    pub fn len(&self) -> usize {
        self.dense.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dense.is_empty()
    }

    /// The segment `j` with `l_j ≤ i < l_{j+1}`; the final point belongs to
    /// segment `etas.len() + 1`.
    pub fn segment_of(&self, i: usize) -> usize {
        self.boundaries.partition_point(|&l| l <= i)
    }

    /// `d_i`, 1-based.
    pub fn point(&self, i: usize) -> &Point {
        &self.dense[i - 1]
    }

    pub fn check(&self, norm: NormKind) -> Result<()> {
        for (j, &eta) in self.etas.iter().enumerate() {
            let (lo, hi) = (self.boundaries[j], self.boundaries[j + 1]);
            for i in lo..hi {
                if self.point(i).distance(self.point(i + 1), norm) > eta * (1.0 + 1e-9) {
                    return Err(Error::NotChainable { segment: j + 1, eta });
                }
            }
        }
        Ok(())
    }
}

/// Builds the schedule directly on the sample: segment `i` is a shortest
/// `η_i`-chain from `v_i` to `v_{i+1}`, where `v_1, v_2, …` enumerates the
/// sample in order and wraps around.
pub fn build_chain_schedule(sample: &PointSample, etas: &[f64], norm: NormKind) -> Result<ChainSchedule> {
    schedule(sample, etas, None, norm)
}

/// As [`build_chain_schedule`], but chains are found in the gap graph at
/// `link_gap` and each link longer than `η_i` is subdivided linearly.
pub fn build_chain_schedule_linked(
    sample: &PointSample,
    etas: &[f64],
    link_gap: f64,
    norm: NormKind,
) -> Result<ChainSchedule> {
    schedule(sample, etas, Some(link_gap), norm)
}

fn schedule(sample: &PointSample, etas: &[f64], link_gap: Option<f64>, norm: NormKind) -> Result<ChainSchedule> {
    let pts = &sample.points;
    if pts.is_empty() {
        return Err(Error::EmptySample);
    }
    if etas.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::invalid("etas must be positive"));
    }
    if etas.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::invalid("etas must be nonincreasing"));
    }
    let n = pts.len();
    let mut dense = vec![pts[0].clone()];
    let mut boundaries = vec![1];
    let mut cached: Option<(f64, Vec<Vec<usize>>)> = None;
    for (j, &eta) in etas.iter().enumerate() {
        let gap = link_gap.unwrap_or(eta);
        if cached.as_ref().map_or(true, |(g, _)| *g != gap) {
            cached = Some((gap, adjacency(pts, gap, norm)));
        }
        let adj = &cached.as_ref().unwrap().1;
        let chain = chain_path(adj, j % n, (j + 1) % n).ok_or(Error::NotChainable { segment: j + 1, eta: gap })?;
        for w in chain.windows(2) {
            let (p, q) = (&pts[w[0]], &pts[w[1]]);
            let d = p.distance(q, norm);
            let pieces = if d > eta { (d / eta).ceil() as usize } else { 1 };
            let (pf, qf) = (p.to_f64s(), q.to_f64s());
            for s in 1..pieces {
                let t = s as f64 / pieces as f64;
                let mid: Vec<f64> = pf.iter().zip(&qf).map(|(a, b)| a + t * (b - a)).collect();
                dense.push(Point::float(&mid));
            }
            dense.push(q.clone());
        }
        boundaries.push(dense.len());
    }
    let sched = ChainSchedule { dense, boundaries, etas: etas.to_vec() };
    sched.check(norm)?;
    Ok(sched)
}

fn adjacency(pts: &[Point], gap: f64, norm: NormKind) -> Vec<Vec<usize>> {
    let n = pts.len();
    let mut adj = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            if pts[i].distance(&pts[j], norm) <= gap {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    adj
}

/// BFS from `from`; returns the path to the first vertex satisfying `goal`,
/// exploring neighbours in ascending index order.
fn bfs_path(adj: &[Vec<usize>], from: usize, goal: impl Fn(usize) -> bool) -> Option<Vec<usize>> {
    let mut prev = vec![usize::MAX; adj.len()];
    prev[from] = from;
    let mut queue = std::collections::VecDeque::from([from]);
    while let Some(u) = queue.pop_front() {
        if u != from && goal(u) {
            let mut path = vec![u];
            let mut c = u;
            while c != from {
                c = prev[c];
                path.push(c);
            }
            path.reverse();
            return Some(path);
        }
        for &v in &adj[u] {
            if prev[v] == usize::MAX {
                prev[v] = u;
                queue.push_back(v);
            }
        }
    }
    None
}

/// Shortest path from `start` to `end` in the gap graph, at least two
/// entries (a one-point sample gives `[start, start]`).
fn chain_path(adj: &[Vec<usize>], start: usize, end: usize) -> Option<Vec<usize>> {
    if start == end {
        return Some(vec![start, end]);
    }
    bfs_path(adj, start, |v| v == end)
}

/// The smallest gap at which the sample is a single gap-component (the
/// longest edge of a minimum spanning tree).
pub fn bottleneck_gap(sample: &[Point], norm: NormKind) -> f64 {
    let n = sample.len();
    if n < 2 {
        return 0.0;
    }
    let mut best = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    best[0] = 0.0;
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let u = (0..n).filter(|&i| !done[i]).min_by(|&a, &b| best[a].total_cmp(&best[b])).unwrap();
        done[u] = true;
        worst = worst.max(best[u]);
        for v in 0..n {
            if !done[v] {
                best[v] = best[v].min(sample[u].distance(&sample[v], norm));
            }
        }
    }
    worst
}

/// Settings for [`rearrange_to_limit_set`].
#[derive(Clone, Debug, PartialEq)]
pub struct RearrangeParams {
    /// Stress instances per ε when certifying the RP constants; 0 skips
    /// certification and uses the proposed constants as they are.
    pub rp_budget: usize,
    pub seed: u64,
    /// Gap used to find chains through the target; defaults to just above
    /// the target's bottleneck gap.
    pub link_gap: Option<f64>,
}

impl Default for RearrangeParams {
    fn default() -> Self {
        RearrangeParams { rp_budget: 100, seed: 0, link_gap: None }
    }
}

/// Per-segment record of a run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageRecord {
    pub stage: usize,
    /// Length of the rearrangement when the stage ends.
    pub k_i: usize,
    /// First partial-sum index produced during this stage.
    pub first_sum_index: usize,
    pub eps: f64,
    pub eta: f64,
    pub anchor: Vec<f64>,
    /// Largest `‖S_{k_{i+1}} − d_i'‖` over the stage's anchors.
    pub stage_end_error: f64,
    /// Largest distance from a partial sum to the anchor it left.
    pub prefix_max_excursion: f64,
    pub anchors: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub stages: Vec<StageRecord>,
    pub witnesses: Vec<RPWitness>,
    pub link_gap: f64,
    pub terms_used: usize,
}

impl RunReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Output of [`rearrange_to_limit_set`].
#[derive(Clone, Debug)]
pub struct RearrangeRun {
    pub tau: PartialPermutation,
    /// Partial sums `S_0 = θ, S_1, …`; each phase is one induction step.
    pub walk: Walk<Point>,
    pub report: RunReport,
}

/// Runs the induction for `stages` chain segments with `ε_j = 2^{−j}` and
/// `η_j = min{ε_j/48, δ(ε_j/2)/12}`. The anchors are `d_i' = d_i`, which
/// lie in the sum range of the full-sum-range family. The conditions of the
/// induction are checked at every step and any violation is an error.
pub fn rearrange_to_limit_set(
    series: &SeriesPrefix,
    target: &PointSample,
    stages: usize,
    params: &RearrangeParams,
) -> Result<RearrangeRun> {
    if stages == 0 {
        return Err(Error::invalid("stages must be ≥ 1"));
    }
    if target.points.iter().any(|p| p.dim() != series.dim()) {
        return Err(Error::DimensionMismatch { expected: series.dim(), got: target.points[0].dim() });
    }
    let kind = series.norm_kind();
    let eps: Vec<f64> = (1..=stages + 1).map(|j| 0.5f64.powi(j as i32)).collect();
    let halves: Vec<f64> = eps.iter().map(|e| e / 2.0).collect();
    let family = if params.rp_budget == 0 {
        RpFamily::proposed(series, &halves)?
    } else {
        RpFamily::certified(series, &halves, params.rp_budget, params.seed)?
    };
    if !family.is_monotone() {
        return Err(Error::invalid("RP witnesses are not monotone"));
    }
    let etas: Vec<f64> = eps
        .iter()
        .map(|&e| Ok((e / 48.0).min(family.get(e / 2.0)?.delta / 12.0)))
        .collect::<Result<_>>()?;
    // A small margin keeps near-equal edges (a regular polygon's sides) in
    // the graph; the bottleneck alone can drop one of them.
    let link = params.link_gap.unwrap_or_else(|| bottleneck_gap(&target.points, kind) * (1.0 + 1e-6));
    let sched = build_chain_schedule_linked(target, &etas[..stages], link, kind)?;
    log::info!("rearranger: {} anchors over {stages} stages, link gap {link}", sched.len());

    let eps_of = |j: usize| eps[j - 1];
    let eta_of = |j: usize| etas[j - 1];
    let mut state = RearrangerState::base(series, sched.point(1), family.get(eps[0] / 2.0)?.n_threshold, eta_of(1))
        .map_err(|e| e.at_stage(1))?;
    let invariant = |stage: usize, what: &str| Error::Stage {
        stage,
        source: Box::new(Error::invalid(format!("invariant {what} violated"))),
    };
    if dense_distance(state.current_sum(), &sched.point(1).to_f64s(), kind) >= 4.0 * eta_of(1) {
        return Err(invariant(1, "(v)"));
    }

    let mut records: Vec<StageRecord> = (1..=stages)
        .map(|j| StageRecord {
            stage: j,
            k_i: 0,
            first_sum_index: 0,
            eps: eps_of(j),
            eta: eta_of(j),
            anchor: Vec::new(),
            stage_end_error: 0.0,
            prefix_max_excursion: 0.0,
            anchors: 0,
        })
        .collect();
    records[0].stage_end_error = state.last_step.as_ref().map_or(0.0, |s| s.end_error);

    for i in 1..sched.len() {
        let j = sched.segment_of(i);
        let q = sched.segment_of(i + 1);
        let first = state.len() + 1;
        state = extension_step(state, sched.point(i), sched.point(i + 1), eps_of(j), eps_of(q), &family, series)
            .map_err(|e| e.at_stage(i + 1))?;
        let step = state.last_step.clone().unwrap_or_default();
        // (i), (ii) and (vi) are conclusions (1) and (4) of the step.
        // (iii)
        if step.max_excursion >= eps_of(j) {
            return Err(invariant(i + 1, "(iii)"));
        }
        // (v)
        if step.end_error >= 4.0 * eta_of(q) {
            return Err(invariant(i + 1, "(v)"));
        }
        let rec = &mut records[j - 1];
        if rec.first_sum_index == 0 {
            rec.first_sum_index = first;
        }
        rec.k_i = state.len();
        rec.anchor = sched.point(i + 1).to_f64s();
        rec.stage_end_error = rec.stage_end_error.max(step.end_error);
        rec.prefix_max_excursion = rec.prefix_max_excursion.max(step.max_excursion);
        rec.anchors += 1;
    }
    // (vi) for the final anchor.
    let n_last = family.get(eps_of(stages + 1) / 2.0)?.n_threshold;
    if !state.tau.covers(n_last) {
        return Err(invariant(sched.len(), "(vi)"));
    }

    let mut sums = Vec::with_capacity(state.len() + 1);
    let mut acc = vec![0.0; series.dim()];
    sums.push(Point::float(&acc));
    for &n in state.tau.images() {
        add_into(&mut acc, series.term(n));
        sums.push(Point::float(&acc));
    }
    let mut groups = Vec::with_capacity(state.k_marks.len());
    let mut prev = 0;
    for (idx, &k) in state.k_marks.iter().enumerate().skip(1) {
        let g = k - prev + usize::from(idx == 1);
        if g == 0 {
            continue;
        }
        groups.push(g);
        prev = k;
    }
    let walk = Walk::from_groups(sums, &groups, kind)?;
    let report = RunReport { stages: records, witnesses: family.witnesses, link_gap: link, terms_used: state.tau.max_image() };
    Ok(RearrangeRun { tau: state.tau, walk, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::full_sum_range_family;

    #[test]
    fn singleton_schedule_repeats_point() {
        let s = PointSample::new(vec![Point::float(&[0.3, 0.1])], "p");
        let sched = build_chain_schedule(&s, &[0.5, 0.25, 0.125], NormKind::Euclidean).unwrap();
        assert_eq!(sched.dense, vec![Point::float(&[0.3, 0.1]); 4]);
        assert_eq!(sched.boundaries, vec![1, 2, 3, 4]);
    }

    #[test]
    fn circle_schedule_respects_etas() {
        let c = PointSample::circle([0.0, 0.0], 1.0, 100);
        let etas = [0.5, 0.25, 0.125];
        let sched = build_chain_schedule(&c, &etas, NormKind::Euclidean).unwrap();
        sched.check(NormKind::Euclidean).unwrap();
        for (j, w) in sched.boundaries.windows(2).enumerate() {
            let seg = &sched.dense[w[0] - 1..w[1]];
            assert!(seg.windows(2).all(|p| p[0].distance(&p[1], NormKind::Euclidean) <= etas[j] + 1e-12));
            assert_eq!(seg[0], c.points[j]);
        }
        assert_eq!(sched.point(sched.boundaries[1]), &c.points[1]);
    }

    #[test]
    fn two_far_points_not_chainable() {
        let s = PointSample::new(vec![Point::float(&[0.0, 0.0]), Point::float(&[1.0, 0.0])], "two");
        assert!(matches!(
            build_chain_schedule(&s, &[0.5], NormKind::Euclidean),
            Err(Error::NotChainable { segment: 1, .. })
        ));
        let linked = build_chain_schedule_linked(&s, &[0.5], 1.0, NormKind::Euclidean).unwrap();
        assert_eq!(linked.len(), 3);
    }

    #[test]
    fn etas_must_not_increase() {
        let s = PointSample::new(vec![Point::float(&[0.0])], "p");
        assert!(build_chain_schedule(&s, &[0.1, 0.2], NormKind::Euclidean).is_err());
    }

    #[test]
    fn segment_lookup() {
        let s = PointSample::new(vec![Point::float(&[0.0])], "p");
        let sched = build_chain_schedule(&s, &[0.5, 0.25], NormKind::Euclidean).unwrap();
        assert_eq!(sched.segment_of(1), 1);
        assert_eq!(sched.segment_of(2), 2);
        assert_eq!(sched.segment_of(3), 3);
    }

    #[test]
    fn bottleneck_of_segment() {
        let seg = PointSample::segment(&[0.0, 0.0], &[1.0, 0.0], 0.1).points;
        assert!((bottleneck_gap(&seg, NormKind::Euclidean) - 0.1).abs() < 1e-9);
        assert_eq!(bottleneck_gap(&seg[..1], NormKind::Euclidean), 0.0);
    }

    #[test]
    fn singleton_target_converges() {
        let s = full_sum_range_family(2, 60_000, 1.0).unwrap();
        let p = Point::float(&[0.4, -0.3]);
        let target = PointSample::new(vec![p.clone()], "p");
        let run = rearrange_to_limit_set(&s, &target, 8, &RearrangeParams { rp_budget: 20, ..Default::default() }).unwrap();
        let eps_last = 0.5f64.powi(8);
        let sums = &run.walk.sums;
        let tail = &sums[sums.len() - sums.len() / 4..];
        assert!(tail.iter().all(|x| x.distance(&p, NormKind::Euclidean) < eps_last));
        assert_eq!(run.report.stages.len(), 8);
    }
}
