//! Set distances and gap-graph connectivity on finite samples.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::vector::{NormKind, Point, Vector};

/// Default tolerance for set membership and "equal as sets" comparisons.
pub const MEMBERSHIP_TOL: f64 = 1e-12;

/// A finite labelled sample standing in for a target set.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSample<V = Point> {
    pub points: Vec<V>,
    pub label: String,
}

impl<V: Vector> PointSample<V> {
    pub fn new(points: Vec<V>, label: impl Into<String>) -> Self {
        PointSample {
            points,
            label: label.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

impl PointSample<Point> {
    /// Evenly spaced points on a circle, starting at angle 0.
    pub fn circle(center: [f64; 2], radius: f64, n: usize) -> Self {
        let points = (0..n)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / n as f64;
                Point::float(&[center[0] + radius * t.cos(), center[1] + radius * t.sin()])
            })
            .collect();
        PointSample::new(points, format!("circle r={radius} n={n}"))
    }

    /// Circle sample whose arc pitch is at most `pitch`.
    pub fn circle_with_pitch(center: [f64; 2], radius: f64, pitch: f64) -> Self {
        let n = (std::f64::consts::TAU * radius / pitch).ceil().max(1.0) as usize;
        Self::circle(center, radius, n)
    }

    /// Points `a + t (b - a)` at spacing at most `pitch`, both ends included.
    pub fn segment(a: &[f64], b: &[f64], pitch: f64) -> Self {
        let len = a
            .iter()
            .zip(b)
            .map(|(x, y)| (y - x) * (y - x))
            .sum::<f64>()
            .sqrt();
        let n = (len / pitch).ceil().max(1.0) as usize;
        let points = (0..=n)
            .map(|i| {
                let t = i as f64 / n as f64;
                Point::from_vec(a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect())
            })
            .collect();
        PointSample::new(points, "segment")
    }
}

fn directed<V: Vector>(a: &[V], b: &[V], kind: NormKind) -> f64 {
    a.iter()
        .map(|p| b.iter().map(|q| p.distance(q, kind)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

/// Hausdorff distance between two nonempty samples.
pub fn hausdorff_distance<V: Vector>(a: &[V], b: &[V], kind: NormKind) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    let d = directed(a, b, kind).max(directed(b, a, kind));
    Ok(if d <= MEMBERSHIP_TOL { 0.0 } else { d })
}

/// Index of the first sample point within `tol` of `p`.
pub fn find_in_sample<V: Vector>(a: &[V], p: &V, kind: NormKind, tol: f64) -> Option<usize> {
    a.iter().position(|q| q.distance(p, kind) <= tol)
}

#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}

/// Components of the graph joining points at distance ≤ `gap`.
///
/// Blocks hold sample indices in increasing order; blocks are ordered by
/// their smallest index.
pub fn gap_components<V: Vector>(a: &[V], gap: f64, kind: NormKind) -> Vec<Vec<usize>> {
    let mut uf = UnionFind::new(a.len());
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            if a[i].distance(&a[j], kind) <= gap {
                uf.union(i, j);
            }
        }
    }
    let mut root_block = vec![usize::MAX; a.len()];
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for i in 0..a.len() {
        let r = uf.find(i);
        if root_block[r] == usize::MAX {
            root_block[r] = blocks.len();
            blocks.push(Vec::new());
        }
        blocks[root_block[r]].push(i);
    }
    blocks
}

/// Shortest-hop path from `from` to `to` in the gap-graph, as sample indices.
pub fn gap_chain_indices<V: Vector>(
    a: &[V],
    gap: f64,
    from: usize,
    to: usize,
    kind: NormKind,
) -> Option<Vec<usize>> {
    let mut prev = vec![usize::MAX; a.len()];
    let mut queue = VecDeque::from([from]);
    prev[from] = from;
    while let Some(u) = queue.pop_front() {
        if u == to {
            let mut path = vec![to];
            let mut v = to;
            while v != from {
                v = prev[v];
                path.push(v);
            }
            path.reverse();
            return Some(path);
        }
        for v in 0..a.len() {
            if prev[v] == usize::MAX && a[u].distance(&a[v], kind) <= gap {
                prev[v] = u;
                queue.push_back(v);
            }
        }
    }
    None
}

/// A path `from = p_0, ..., p_k = to` inside `a` with every step ≤ `gap`.
pub fn gap_chainable<V: Vector>(
    a: &[V],
    gap: f64,
    from: &V,
    to: &V,
    kind: NormKind,
) -> Result<Option<Vec<V>>> {
    let i = find_in_sample(a, from, kind, MEMBERSHIP_TOL).ok_or(Error::EndpointNotInSample)?;
    let j = find_in_sample(a, to, kind, MEMBERSHIP_TOL).ok_or(Error::EndpointNotInSample)?;
    Ok(gap_chain_indices(a, gap, i, j, kind)
        .map(|path| path.into_iter().map(|k| a[k].clone()).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vector::SparseVec;
    use proptest::prelude::*;

    fn line(xs: &[f64]) -> Vec<Point> {
        xs.iter().map(|&x| Point::float(&[x])).collect()
    }

    fn two_lines_sample() -> Vec<Point> {
        let mut pts = Vec::new();
        for x in [0.0, 1.0] {
            for i in 0..=20 {
                pts.push(Point::float(&[x, i as f64 * 0.1]));
            }
        }
        pts
    }

    #[test]
    fn hausdorff_basics() {
        let a = vec![Point::float(&[0.0, 0.0])];
        let b = vec![Point::float(&[1.0, 0.0])];
        assert_eq!(hausdorff_distance(&a, &a, NormKind::Euclidean).unwrap(), 0.0);
        assert_eq!(hausdorff_distance(&a, &b, NormKind::Euclidean).unwrap(), 1.0);
        assert!(matches!(
            hausdorff_distance(&a, &[], NormKind::Euclidean),
            Err(Error::EmptySample)
        ));
    }

    #[test]
    fn chain_on_the_line() {
        let a = line(&[0.0, 0.4, 0.8]);
        let c = gap_chainable(&a, 0.5, &a[0], &a[2], NormKind::Euclidean)
            .unwrap()
            .unwrap();
        assert_eq!(c, a);
        let missing = Point::float(&[3.0]);
        assert!(matches!(
            gap_chainable(&a, 0.5, &a[0], &missing, NormKind::Euclidean),
            Err(Error::EndpointNotInSample)
        ));
    }

    #[test]
    fn two_lines_chainability_depends_on_gap() {
        let a = two_lines_sample();
        let (p, q) = (Point::float(&[0.0, 0.0]), Point::float(&[1.0, 0.0]));
        assert!(gap_chainable(&a, 0.4, &p, &q, NormKind::Euclidean).unwrap().is_none());
        assert!(gap_chainable(&a, 1.0, &p, &q, NormKind::Euclidean).unwrap().is_some());
    }

    #[test]
    fn components() {
        assert_eq!(gap_components(&line(&[0.0, 10.0]), 1.0, NormKind::Euclidean).len(), 2);
        assert_eq!(gap_components(&line(&[0.0, 0.5, 1.0]), 0.5, NormKind::Euclidean).len(), 1);
        let c0 = vec![SparseVec::zero(), SparseVec::basis(1)];
        assert_eq!(gap_components(&c0, 0.9, NormKind::Sup).len(), 2);
    }

    fn sample() -> impl Strategy<Value = Vec<Point>> {
        prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..12)
            .prop_map(|v| v.into_iter().map(|(x, y)| Point::float(&[x, y])).collect())
    }

    proptest! {
        #[test]
        fn hausdorff_is_a_metric(a in sample(), b in sample(), c in sample()) {
            let k = NormKind::Euclidean;
            let ab = hausdorff_distance(&a, &b, k).unwrap();
            let ba = hausdorff_distance(&b, &a, k).unwrap();
            let bc = hausdorff_distance(&b, &c, k).unwrap();
            let ac = hausdorff_distance(&a, &c, k).unwrap();
            prop_assert_eq!(ab, ba);
            prop_assert!(ac <= ab + bc + 1e-9);
        }

        #[test]
        fn chainable_iff_same_component(a in sample(), gap in 0.1f64..4.0, i in 0usize..12, j in 0usize..12) {
            let (i, j) = (i % a.len(), j % a.len());
            let blocks = gap_components(&a, gap, NormKind::Euclidean);
            let same = blocks.iter().any(|b| b.contains(&i) && b.contains(&j));
            let path = gap_chain_indices(&a, gap, i, j, NormKind::Euclidean);
            prop_assert_eq!(path.is_some(), same);
            if let Some(p) = path {
                for w in p.windows(2) {
                    prop_assert!(a[w[0]].distance(&a[w[1]], NormKind::Euclidean) <= gap);
                }
            }
        }

        #[test]
        fn coarser_gap_refines(a in sample(), g1 in 0.1f64..3.0, dg in 0.0f64..3.0) {
            let fine = gap_components(&a, g1, NormKind::Euclidean);
            let coarse = gap_components(&a, g1 + dg, NormKind::Euclidean);
            for block in &fine {
                prop_assert!(coarse.iter().any(|c| block.iter().all(|i| c.contains(i))));
            }
        }
    }
}
