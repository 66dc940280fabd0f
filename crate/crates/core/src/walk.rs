//! Walks, their phase structure, and the series/permutation they induce.

use crate::error::{Error, Result};
use crate::metric::MEMBERSHIP_TOL;
use crate::vector::{NormKind, Vector};

/// A finite prefix of partial sums.
///
/// `sums[0]` is the anchor (the empty partial sum of the induced series) and
/// `sums[t]` is the `t`-th partial sum, so the series terms are
/// `y_t = sums[t] - sums[t - 1]`. Sums are grouped into consecutive phases;
/// phase 1 includes the anchor. For out-and-back walks, phase 1 built from a
/// chain of `n_1` points holds `2 n_1 - 1` sums and every later phase holds
/// `2 n_k` sums.
#[derive(Clone, Debug, PartialEq)]
pub struct Walk<V> {
    pub sums: Vec<V>,
    /// The `n_k` of each phase for palindromic walks; the sum count otherwise.
    pub phase_lengths: Vec<usize>,
    /// Declared bound on step norms within each phase.
    pub step_bounds: Vec<f64>,
    /// Exclusive end index into `sums` of each phase.
    phase_ends: Vec<usize>,
    pub palindromic: bool,
    pub norm: NormKind,
}

impl<V: Vector> Walk<V> {
    /// A walk with no palindrome structure, one phase per group size in
    /// `groups` (the anchor counts toward the first group).
    pub fn from_groups(sums: Vec<V>, groups: &[usize], norm: NormKind) -> Result<Self> {
        let total: usize = groups.iter().sum();
        if total != sums.len() || groups.contains(&0) {
            return Err(Error::invalid("phase groups do not partition the sums"));
        }
        let mut phase_ends = Vec::with_capacity(groups.len());
        let mut end = 0;
        for &g in groups {
            end += g;
            phase_ends.push(end);
        }
        let mut w = Walk {
            sums,
            phase_lengths: groups.to_vec(),
            step_bounds: Vec::new(),
            phase_ends,
            palindromic: false,
            norm,
        };
        w.step_bounds = (1..=w.phase_count()).map(|p| w.max_step_in_phase(p)).collect();
        Ok(w)
    }

    /// A walk where every sum is its own phase.
    pub fn from_sequence(sums: Vec<V>, norm: NormKind) -> Result<Self> {
        if sums.is_empty() {
            return Err(Error::EmptySample);
        }
        let groups = vec![1; sums.len()];
        Self::from_groups(sums, &groups, norm)
    }

    /// Number of stored sums, the anchor included.
    pub fn len(&self) -> usize {
        self.sums.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sums.is_empty()
    }

    pub fn anchor(&self) -> &V {
        &self.sums[0]
    }

    pub fn dim(&self) -> usize {
        self.sums.iter().map(|s| s.dense_len()).max().unwrap_or(0)
    }

    pub fn is_exact(&self) -> bool {
        self.sums.iter().all(|s| s.is_exact())
    }

    pub fn phase_count(&self) -> usize {
        self.phase_ends.len()
    }

    /// Half-open range of sum indices belonging to phase `p` (1-based).
    pub fn phase_range(&self, p: usize) -> std::ops::Range<usize> {
        let start = if p == 1 { 0 } else { self.phase_ends[p - 2] };
        start..self.phase_ends[p - 1]
    }

    /// Phase (1-based) containing sum index `i`.
    pub fn phase_of(&self, i: usize) -> usize {
        self.phase_ends.partition_point(|&e| e <= i) + 1
    }

    /// Largest step norm among the terms `y_t` with `t` in phase `p`.
    pub fn max_step_in_phase(&self, p: usize) -> f64 {
        self.phase_range(p)
            .filter(|&t| t >= 1)
            .map(|t| self.sums[t].distance(&self.sums[t - 1], self.norm))
            .fold(0.0, f64::max)
    }

    /// The series terms `y_1..y_P` in walk order.
    pub fn terms(&self) -> Vec<V> {
        self.sums.windows(2).map(|w| w[1].sub(&w[0])).collect()
    }

    /// Checks the out-and-back palindrome identities on every phase.
    pub fn check_palindrome(&self) -> Result<()> {
        if !self.palindromic {
            return Err(Error::NotXWalk("walk has no palindromic phase schedule".into()));
        }
        for p in 1..=self.phase_count() {
            let r = self.phase_range(p);
            let n = self.phase_lengths[p - 1];
            // Mirror center and radius in absolute sum indices.
            let (center, radius) = if p == 1 {
                (r.start + n - 1, n - 1)
            } else {
                (r.start + n - 1, n)
            };
            let expected = if p == 1 { 2 * n - 1 } else { 2 * n };
            if r.len() != expected {
                return Err(Error::NotXWalk(format!("phase {p} has {} sums, expected {expected}", r.len())));
            }
            for i in 1..=radius {
                let (a, b) = (&self.sums[center - i], &self.sums[center + i]);
                if a != b && a.distance(b, self.norm) > MEMBERSHIP_TOL {
                    return Err(Error::NotXWalk(format!(
                        "sums {} and {} differ in phase {p}",
                        center - i,
                        center + i
                    )));
                }
            }
        }
        Ok(())
    }

    /// Checks that every phase respects its declared step bound.
    pub fn check_step_bounds(&self) -> Result<()> {
        for p in 1..=self.phase_count() {
            let m = self.max_step_in_phase(p);
            if m > self.step_bounds[p - 1] * (1.0 + 1e-12) {
                return Err(Error::invalid(format!(
                    "phase {p} step {m} exceeds bound {}",
                    self.step_bounds[p - 1]
                )));
            }
        }
        Ok(())
    }
}

/// Builds the out-and-back walk of a chain schedule.
///
/// Phase 1 traverses its chain forward and back. Every later chain must
/// start at the anchor (the first point of the first chain) and contain at
/// least two points; it is walked out and back the same way. Step bounds are
/// the largest chain step of each phase.
pub fn build_xwalk<V: Vector>(schedule: &[Vec<V>], norm: NormKind) -> Result<Walk<V>> {
    let first = schedule.first().ok_or(Error::EmptySchedule)?;
    let anchor = first.first().ok_or(Error::EmptySchedule)?.clone();
    let total: usize = schedule.iter().map(|c| 2 * c.len()).sum();
    let mut sums = Vec::with_capacity(total);
    let mut phase_lengths = Vec::with_capacity(schedule.len());
    let mut phase_ends = Vec::with_capacity(schedule.len());
    let mut step_bounds = Vec::with_capacity(schedule.len());

    for (k, chain) in schedule.iter().enumerate() {
        let step = chain
            .windows(2)
            .map(|w| w[0].distance(&w[1], norm))
            .fold(0.0, f64::max);
        if k == 0 {
            sums.extend(chain.iter().cloned());
            sums.extend(chain[..chain.len() - 1].iter().rev().cloned());
            phase_lengths.push(chain.len());
        } else {
            let start = chain.first().ok_or(Error::NotAnchored { phase: k + 1 })?;
            if start != &anchor && start.distance(&anchor, norm) > MEMBERSHIP_TOL {
                return Err(Error::NotAnchored { phase: k + 1 });
            }
            if chain.len() < 2 {
                return Err(Error::invalid(format!("phase {} chain needs at least two points", k + 1)));
            }
            sums.extend(chain[1..].iter().cloned());
            sums.extend(chain[..chain.len() - 1].iter().rev().cloned());
            phase_lengths.push(chain.len() - 1);
        }
        phase_ends.push(sums.len());
        step_bounds.push(step);
    }
    Ok(Walk {
        sums,
        phase_lengths,
        step_bounds,
        phase_ends,
        palindromic: true,
        norm,
    })
}

/// Series terms `y_1..y_Q`.
#[derive(Clone, Debug, PartialEq)]
pub struct SignedSeries<V> {
    pub terms: Vec<V>,
    pub alternating: bool,
}

impl<V: Vector> SignedSeries<V> {
    pub fn new(terms: Vec<V>) -> Self {
        let mut s = SignedSeries {
            terms,
            alternating: false,
        };
        s.alternating = s.is_alternating();
        s
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `y_{2n} = -y_{2n-1}` exactly for every stored pair.
    pub fn is_alternating(&self) -> bool {
        self.terms.len() % 2 == 0 && self.terms.chunks(2).all(|c| c[1] == c[0].neg())
    }

    /// Partial sums `start, start + y_1, ...`.
    pub fn partial_sums(&self, start: &V) -> Vec<V> {
        let mut out = Vec::with_capacity(self.terms.len() + 1);
        out.push(start.clone());
        for y in &self.terms {
            let next = out.last().unwrap().add(y);
            out.push(next);
        }
        out
    }

    /// The reordered series `y_{σ(1)}, y_{σ(2)}, ...`.
    pub fn reorder(&self, sigma: &PartialPermutation) -> SignedSeries<V> {
        SignedSeries::new(sigma.images().iter().map(|&i| self.terms[i - 1].clone()).collect())
    }
}

/// An injective map `[1, k] -> N`, grown one position at a time.
#[derive(Clone, Debug, Default)]
pub struct PartialPermutation {
    images: Vec<usize>,
    used: Vec<bool>,
    max: usize,
}

impl PartialEq for PartialPermutation {
    fn eq(&self, other: &Self) -> bool {
        self.images == other.images
    }
}

impl Eq for PartialPermutation {}

impl PartialPermutation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn identity(n: usize) -> Self {
        Self::from_images((1..=n).collect()).expect("identity is injective")
    }

    pub fn from_images(images: Vec<usize>) -> Result<Self> {
        let mut p = Self::new();
        for i in images {
            p.push(i)?;
        }
        Ok(p)
    }

    /// Appends `tau(k + 1) = image`.
    pub fn push(&mut self, image: usize) -> Result<()> {
        if image == 0 {
            return Err(Error::invalid("permutation images are 1-based"));
        }
        if self.contains(image) {
            return Err(Error::invalid(format!("image {image} already used")));
        }
        if image >= self.used.len() {
            self.used.resize((image + 1).max(2 * self.used.len()), false);
        }
        self.used[image] = true;
        self.images.push(image);
        self.max = self.max.max(image);
        Ok(())
    }

    pub fn contains(&self, image: usize) -> bool {
        self.used.get(image).copied().unwrap_or(false)
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn max_image(&self) -> usize {
        self.max
    }

    /// `[1, m]` is contained in the range.
    pub fn covers(&self, m: usize) -> bool {
        (1..=m).all(|i| self.contains(i))
    }

    /// Smallest positive integer missing from the range.
    pub fn first_hole(&self) -> usize {
        (1..).find(|&i| !self.contains(i)).unwrap()
    }

    /// Indices in `[1, m]` not yet in the range, ascending.
    pub fn holes_up_to(&self, m: usize) -> Vec<usize> {
        (1..=m).filter(|&i| !self.contains(i)).collect()
    }

    /// `self` is a prefix of `other`.
    pub fn is_prefix_of(&self, other: &PartialPermutation) -> bool {
        other.images.starts_with(&self.images)
    }

    /// The inverse of a permutation of `[1, n]`.
    pub fn inverse(&self) -> Result<PartialPermutation> {
        let n = self.len();
        if self.max_image() != n {
            return Err(Error::invalid("not a permutation of an initial segment"));
        }
        let mut inv = vec![0; n];
        for (pos, &img) in self.images.iter().enumerate() {
            inv[img - 1] = pos + 1;
        }
        PartialPermutation::from_images(inv)
    }
}

/// Converts an out-and-back walk into its series and the pairing
/// permutation that makes the series alternating.
///
/// The returned series holds the terms in walk order. The permutation lists,
/// phase by phase, each forward term followed by its mirrored backward term,
/// so `series.reorder(&sigma)` is alternating.
pub fn walk_to_series<V: Vector>(w: &Walk<V>) -> Result<(SignedSeries<V>, PartialPermutation)> {
    w.check_palindrome()?;
    let series = SignedSeries::new(w.terms());
    let mut sigma = PartialPermutation::new();
    for p in 1..=w.phase_count() {
        let r = w.phase_range(p);
        let n = w.phase_lengths[p - 1];
        // First and last term index belonging to this phase.
        let (lo, hi) = if p == 1 { (1, r.end - 1) } else { (r.start, r.end - 1) };
        let half = if p == 1 { n - 1 } else { n };
        for t in lo..lo + half {
            let mirror = lo + hi - t;
            sigma.push(t)?;
            sigma.push(mirror)?;
            if series.terms[mirror - 1] != series.terms[t - 1].neg() {
                return Err(Error::NotXWalk(format!("terms {t} and {mirror} do not cancel")));
            }
        }
    }
    Ok((series, sigma))
}

/// Undoes a reordering: given `z_n = y_{σ(n)}`, recovers `y` in walk order.
pub fn unreorder<V: Vector>(z: &SignedSeries<V>, sigma: &PartialPermutation) -> Result<SignedSeries<V>> {
    let inv = sigma.inverse()?;
    Ok(SignedSeries::new(inv.images().iter().map(|&n| z.terms[n - 1].clone()).collect()))
}
