//! Points of R^m and finite-support sequences of c0.

use std::collections::BTreeMap;
use std::fmt::Debug;

use serde::{Deserialize, Serialize};

use crate::scalar::{Dyadic, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    #[default]
    Euclidean,
    Sup,
}

impl std::str::FromStr for NormKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "euclidean" | "l2" => Ok(NormKind::Euclidean),
            "sup" | "max" => Ok(NormKind::Sup),
            other => Err(format!("unknown norm '{other}'")),
        }
    }
}

/// Vector-space operations shared by [`Point`] and [`SparseVec`].
///
/// Coordinates are addressed by 0-based position for points and by the
/// 1-based basis index for sparse vectors; `entries` yields whichever applies.
pub trait Vector: Clone + Debug + PartialEq + Send + Sync {
    /// The zero vector in the same space (same dimension for points).
    fn zero_like(&self) -> Self;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    /// Multiplication by a float; the result is in float mode.
    fn scale(&self, factor: f64) -> Self;
    fn norm(&self, kind: NormKind) -> f64;
    fn is_exact(&self) -> bool;
    /// Nonzero coordinates as `(key, value)` pairs, in increasing key order.
    fn entries(&self) -> Vec<(usize, f64)>;
    /// Smallest dense length that holds every nonzero coordinate.
    fn dense_len(&self) -> usize;
    /// Writes the coordinates into `out[..dense_len]`, leaving the rest untouched.
    fn write_dense(&self, out: &mut [f64]);

    fn distance(&self, other: &Self, kind: NormKind) -> f64 {
        self.sub(other).norm(kind)
    }

    fn to_dense(&self, len: usize) -> Vec<f64> {
        let mut out = vec![0.0; len.max(self.dense_len())];
        self.write_dense(&mut out);
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Coords {
    Exact(Vec<Dyadic>),
    Float(Vec<f64>),
}

/// A point of R^m. The scalar mode is uniform across coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    coords: Coords,
}

impl Point {
    /// Exact point; every finite `f64` is dyadic so this never rounds.
    ///
    /// Panics on non-finite input.
    pub fn exact(coords: &[f64]) -> Self {
        Point {
            coords: Coords::Exact(
                coords
                    .iter()
                    .map(|&x| Dyadic::from_f64(x).expect("non-finite coordinate"))
                    .collect(),
            ),
        }
    }

    pub fn from_dyadics(coords: Vec<Dyadic>) -> Self {
        Point {
            coords: Coords::Exact(coords),
        }
    }

    pub fn float(coords: &[f64]) -> Self {
        Point {
            coords: Coords::Float(coords.to_vec()),
        }
    }

    pub fn from_vec(coords: Vec<f64>) -> Self {
        Point {
            coords: Coords::Float(coords),
        }
    }

    pub fn zeros_exact(dim: usize) -> Self {
        Self::from_dyadics(vec![Dyadic::ZERO; dim])
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_vec(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        match &self.coords {
            Coords::Exact(c) => c.len(),
            Coords::Float(c) => c.len(),
        }
    }

    pub fn coord(&self, i: usize) -> Scalar {
        match &self.coords {
            Coords::Exact(c) => Scalar::Exact(c[i]),
            Coords::Float(c) => Scalar::Float(c[i]),
        }
    }

    pub fn scalars(&self) -> Vec<Scalar> {
        (0..self.dim()).map(|i| self.coord(i)).collect()
    }

    pub fn to_f64s(&self) -> Vec<f64> {
        match &self.coords {
            Coords::Exact(c) => c.iter().map(|d| d.to_f64()).collect(),
            Coords::Float(c) => c.clone(),
        }
    }

    /// Float-mode copy.
    pub fn to_float(&self) -> Point {
        Point::from_vec(self.to_f64s())
    }

    /// Exact multiplication by `2^k`; float points are scaled in float.
    pub fn mul_pow2(&self, k: i32) -> Point {
        match &self.coords {
            Coords::Exact(c) => Point::from_dyadics(c.iter().map(|d| d.mul_pow2(k)).collect()),
            Coords::Float(c) => Point::from_vec(c.iter().map(|x| x * (k as f64).exp2()).collect()),
        }
    }

    fn zip_with(
        &self,
        other: &Self,
        exact: impl Fn(Dyadic, Dyadic) -> Dyadic,
        float: impl Fn(f64, f64) -> f64,
    ) -> Point {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        match (&self.coords, &other.coords) {
            (Coords::Exact(a), Coords::Exact(b)) => {
                Point::from_dyadics(a.iter().zip(b).map(|(&x, &y)| exact(x, y)).collect())
            }
            _ => {
                let (a, b) = (self.to_f64s(), other.to_f64s());
                Point::from_vec(a.iter().zip(&b).map(|(&x, &y)| float(x, y)).collect())
            }
        }
    }
}

impl Vector for Point {
    fn zero_like(&self) -> Self {
        match &self.coords {
            Coords::Exact(c) => Point::zeros_exact(c.len()),
            Coords::Float(c) => Point::zeros(c.len()),
        }
    }

    fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b, |a, b| a + b)
    }

    fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b, |a, b| a - b)
    }

    fn neg(&self) -> Self {
        match &self.coords {
            Coords::Exact(c) => Point::from_dyadics(c.iter().map(|&d| -d).collect()),
            Coords::Float(c) => Point::from_vec(c.iter().map(|&x| -x).collect()),
        }
    }

    fn scale(&self, factor: f64) -> Self {
        Point::from_vec(self.to_f64s().into_iter().map(|x| x * factor).collect())
    }

    fn norm(&self, kind: NormKind) -> f64 {
        let c = self.to_f64s();
        match kind {
            NormKind::Euclidean => c.iter().map(|x| x * x).sum::<f64>().sqrt(),
            NormKind::Sup => c.iter().fold(0.0, |m, x| m.max(x.abs())),
        }
    }

    fn is_exact(&self) -> bool {
        matches!(self.coords, Coords::Exact(_))
    }

    fn entries(&self) -> Vec<(usize, f64)> {
        self.to_f64s()
            .into_iter()
            .enumerate()
            .filter(|(_, x)| *x != 0.0)
            .collect()
    }

    fn dense_len(&self) -> usize {
        self.dim()
    }

    fn write_dense(&self, out: &mut [f64]) {
        match &self.coords {
            Coords::Exact(c) => {
                for (o, d) in out.iter_mut().zip(c) {
                    *o = d.to_f64();
                }
            }
            Coords::Float(c) => out[..c.len()].copy_from_slice(c),
        }
    }
}

/// A finite-support element of c0, keyed by 1-based basis index.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct SparseVec {
    entries: BTreeMap<usize, Scalar>,
}

impl SparseVec {
    pub fn zero() -> Self {
        Self::default()
    }

    /// The basis vector `e_i` (1-based).
    pub fn basis(i: usize) -> Self {
        Self::single(i, Scalar::Exact(Dyadic::ONE))
    }

    pub fn single(i: usize, v: Scalar) -> Self {
        let mut s = Self::zero();
        s.set(i, v);
        s
    }

    pub fn from_entries(entries: impl IntoIterator<Item = (usize, Scalar)>) -> Self {
        let mut s = Self::zero();
        for (i, v) in entries {
            s.set(i, v);
        }
        s
    }

    pub fn get(&self, i: usize) -> Scalar {
        self.entries.get(&i).copied().unwrap_or(Scalar::Exact(Dyadic::ZERO))
    }

    /// Sets entry `i`, removing it when `v` is zero.
    pub fn set(&mut self, i: usize, v: Scalar) {
        assert!(i >= 1, "sparse indices are 1-based");
        if v.is_zero() {
            self.entries.remove(&i);
        } else {
            self.entries.insert(i, v);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, Scalar)> + '_ {
        self.entries.iter().map(|(&i, &v)| (i, v))
    }

    pub fn mul_pow2(&self, k: i32) -> Self {
        Self::from_entries(self.iter().map(|(i, v)| {
            let v = match v {
                Scalar::Exact(d) => Scalar::Exact(d.mul_pow2(k)),
                Scalar::Float(x) => Scalar::Float(x * (k as f64).exp2()),
            };
            (i, v)
        }))
    }

    fn merge(&self, other: &Self, f: impl Fn(Scalar, Scalar) -> Scalar) -> Self {
        let mut out = self.clone();
        for (i, v) in other.iter() {
            out.set(i, f(self.get(i), v));
        }
        out
    }
}

impl Vector for SparseVec {
    fn zero_like(&self) -> Self {
        SparseVec::zero()
    }

    fn add(&self, other: &Self) -> Self {
        self.merge(other, |a, b| a + b)
    }

    fn sub(&self, other: &Self) -> Self {
        self.merge(other, |a, b| a - b)
    }

    fn neg(&self) -> Self {
        Self::from_entries(self.iter().map(|(i, v)| (i, -v)))
    }

    fn scale(&self, factor: f64) -> Self {
        Self::from_entries(self.iter().map(|(i, v)| (i, Scalar::Float(v.to_f64() * factor))))
    }

    fn norm(&self, kind: NormKind) -> f64 {
        let vals = self.entries.values().map(|v| v.to_f64());
        match kind {
            NormKind::Euclidean => vals.map(|x| x * x).sum::<f64>().sqrt(),
            NormKind::Sup => vals.fold(0.0, |m, x| m.max(x.abs())),
        }
    }

    fn is_exact(&self) -> bool {
        self.entries.values().all(|v| v.is_exact())
    }

    fn entries(&self) -> Vec<(usize, f64)> {
        self.iter().map(|(i, v)| (i, v.to_f64())).collect()
    }

    fn dense_len(&self) -> usize {
        self.entries.keys().next_back().copied().unwrap_or(0)
    }

    /// Basis index `i` lands in `out[i - 1]`.
    fn write_dense(&self, out: &mut [f64]) {
        for (i, v) in self.iter() {
            out[i - 1] = v.to_f64();
        }
    }
}

/// Free-function form of [`Vector::norm`].
pub fn norm<V: Vector>(v: &V, kind: NormKind) -> f64 {
    v.norm(kind)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norms() {
        assert_eq!(SparseVec::basis(1).norm(NormKind::Sup), 1.0);
        assert_eq!(Point::exact(&[0.5, 0.0]).norm(NormKind::Euclidean), 0.5);
        assert_eq!(Point::exact(&[1.0, -1.0]).norm(NormKind::Sup), 1.0);
        assert_eq!(SparseVec::zero().norm(NormKind::Sup), 0.0);
    }

    #[test]
    fn sparse_arithmetic_drops_zeros() {
        let a = SparseVec::basis(2).add(&SparseVec::basis(1));
        let b = a.sub(&SparseVec::basis(2));
        assert_eq!(b, SparseVec::basis(1));
        assert_eq!(b.support().collect::<Vec<_>>(), vec![1]);
        assert!(a.sub(&a).is_zero());
    }

    #[test]
    fn sparse_euclidean_distance_uses_union_of_supports() {
        let d = SparseVec::basis(1).distance(&SparseVec::basis(3), NormKind::Euclidean);
        assert!((d - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn point_modes() {
        let a = Point::exact(&[0.5, 0.25]);
        assert!(a.add(&a).is_exact());
        assert!(!a.add(&Point::float(&[0.0, 0.0])).is_exact());
        assert_eq!(a.mul_pow2(1), Point::exact(&[1.0, 0.5]));
    }
}
