//! Finite series prefixes stored densely for the rearrangement machinery.

use crate::error::{Error, Result};
use crate::vector::{NormKind, Point, Vector};

/// A finite prefix `x_1..x_n` of a series in ℝ^m, stored row-major.
/// Indices in the public API are 1-based.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesPrefix {
    dim: usize,
    data: Vec<f64>,
    norm: NormKind,
}

impl SeriesPrefix {
    pub fn new(dim: usize, data: Vec<f64>, norm: NormKind) -> Result<Self> {
        if dim == 0 || data.len() % dim != 0 {
            return Err(Error::invalid("series data length is not a multiple of the dimension"));
        }
        Ok(SeriesPrefix { dim, data, norm })
    }

    /// Densifies a list of vectors; the dimension is the largest dense length.
    pub fn from_vectors<V: Vector>(terms: &[V], norm: NormKind) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::EmptySample);
        }
        let dim = terms.iter().map(|t| t.dense_len()).max().unwrap_or(0).max(1);
        let mut data = Vec::with_capacity(dim * terms.len());
        for t in terms {
            data.extend(t.to_dense(dim));
        }
        Ok(SeriesPrefix { dim, data, norm })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn norm_kind(&self) -> NormKind {
        self.norm
    }

    /// Term `x_n`, 1-based.
    pub fn term(&self, n: usize) -> &[f64] {
        &self.data[(n - 1) * self.dim..n * self.dim]
    }

    pub fn term_norm(&self, n: usize) -> f64 {
        dense_norm(self.term(n), self.norm)
    }

    pub fn to_points(&self) -> Vec<Point> {
        self.data.chunks(self.dim).map(Point::float).collect()
    }

    /// Sum of the terms at the given 1-based indices.
    pub fn sum_of(&self, indices: &[usize]) -> Vec<f64> {
        let mut acc = vec![0.0; self.dim];
        for &n in indices {
            add_into(&mut acc, self.term(n));
        }
        acc
    }

    pub fn norm(&self, v: &[f64]) -> f64 {
        dense_norm(v, self.norm)
    }
}

pub(crate) fn dense_norm(v: &[f64], kind: NormKind) -> f64 {
    match kind {
        NormKind::Euclidean => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
        NormKind::Sup => v.iter().fold(0.0, |m, x| m.max(x.abs())),
    }
}

pub(crate) fn add_into(acc: &mut [f64], v: &[f64]) {
    for (a, x) in acc.iter_mut().zip(v) {
        *a += x;
    }
}

pub(crate) fn dense_distance(a: &[f64], b: &[f64], kind: NormKind) -> f64 {
    match kind {
        NormKind::Euclidean => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
        NormKind::Sup => a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs())),
    }
}

/// `1 − 1/2 + 1/3 − …`, `n` terms in ℝ¹.
pub fn alternating_harmonic(n: usize) -> SeriesPrefix {
    let data = (1..=n)
        .map(|j| if j % 2 == 1 { 1.0 / j as f64 } else { -1.0 / j as f64 })
        .collect();
    SeriesPrefix { dim: 1, data, norm: NormKind::Euclidean }
}

/// The interleaved signed family in ℝ^m: term `n` lies on axis `(n−1) mod m`
/// and runs `+1, −1, +2^{−p}, −2^{−p}, +3^{−p}, …` along that axis, so the
/// sum range is all of ℝ^m whenever `0 < p ≤ 1`.
pub fn full_sum_range_family(m: usize, n: usize, p: f64) -> Result<SeriesPrefix> {
    if m == 0 {
        return Err(Error::invalid("dimension must be ≥ 1"));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::invalid("exponent must lie in (0, 1]"));
    }
    let mut data = vec![0.0; n * m];
    for idx in 0..n {
        let axis = idx % m;
        let q = idx / m;
        let j = (q / 2 + 1) as f64;
        let v = j.powf(-p);
        data[idx * m + axis] = if q % 2 == 0 { v } else { -v };
    }
    Ok(SeriesPrefix { dim: m, data, norm: NormKind::Euclidean })
}
