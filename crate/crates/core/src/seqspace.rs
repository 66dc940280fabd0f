//! Constructions in `c0`: the two-point limit set, the divergent series with
//! a singleton limit set, and the series without the Rearrangement Property.

use itertools::Itertools;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::generators::check_phases;
use crate::scalar::{Dyadic, Scalar};
use crate::vector::{NormKind, SparseVec, Vector};
use crate::walk::{build_xwalk, PartialPermutation, SignedSeries, Walk};

fn scaled_basis(i: usize, exp: i32) -> SparseVec {
    SparseVec::single(i, Scalar::Exact(Dyadic::pow2(exp)))
}

/// Walk in `c0` with limit set `{theta, e_1}`.
///
/// Phase 1 is `theta, e_2, e_2 + e_1, e_1` and back. Phase `k+1` moves
/// `2^k` steps of `2^-k e_{k+2}`, then `2^k` steps of `2^-k e_1`, then
/// `2^k` steps of `-2^-k e_{k+2}`, and retraces.
pub fn gen_c0_two_point(phases: usize) -> Result<Walk<SparseVec>> {
    check_phases(phases)?;
    let e1 = SparseVec::basis(1);
    let e2 = SparseVec::basis(2);
    let mut schedule = vec![vec![SparseVec::zero(), e2.clone(), e2.add(&e1), e1]];
    for k in 1..phases {
        let steps = 1usize << k;
        let up = scaled_basis(k + 2, -(k as i32));
        let right = scaled_basis(1, -(k as i32));
        let mut chain = vec![SparseVec::zero()];
        for step in [&up, &right, &up.neg()] {
            for _ in 0..steps {
                let next = chain.last().unwrap().add(step);
                chain.push(next);
            }
        }
        schedule.push(chain);
    }
    build_xwalk(&schedule, NormKind::Sup)
}

/// Walk in `c0` with limit set `{theta}` that does not converge.
///
/// Phase `k` goes from `theta` to `e_k` in `2^(k-1)` equal steps and back,
/// so `s_{2^(k+1)-2} = theta` and `s_{2^k + 2^(k-1) - 2} = e_k`.
pub fn gen_c0_singleton_divergent(phases: usize) -> Result<Walk<SparseVec>> {
    check_phases(phases)?;
    let schedule: Vec<Vec<SparseVec>> = (1..=phases)
        .map(|k| {
            let step = scaled_basis(k, 1 - k as i32);
            let mut chain = vec![SparseVec::zero()];
            for _ in 0..1usize << (k - 1) {
                let next = chain.last().unwrap().add(&step);
                chain.push(next);
            }
            chain
        })
        .collect();
    build_xwalk(&schedule, NormKind::Sup)
}

/// The `2k` sign-pattern vectors in dimension `binomial(2k, k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorFamily {
    pub k: usize,
    pub dim: usize,
    pub vectors: Vec<SparseVec>,
}

#[derive(Serialize)]
struct FamilyJson {
    k: usize,
    dim: usize,
    vectors: Vec<Vec<i64>>,
}

impl VectorFamily {
    /// Dense rows `x_i(1..=dim)` as floats.
    pub fn dense_rows(&self) -> Vec<Vec<f64>> {
        self.vectors.iter().map(|v| v.to_dense(self.dim)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let vectors = self
            .dense_rows()
            .into_iter()
            .map(|r| r.into_iter().map(|x| x as i64).collect())
            .collect();
        Ok(serde_json::to_string(&FamilyJson {
            k: self.k,
            dim: self.dim,
            vectors,
        })?)
    }
}

/// `binomial(n, r)` for the small arguments used here.
pub fn binomial(n: usize, r: usize) -> usize {
    (0..r).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Sign patterns of length `2k` with `k` entries of each sign, ascending
/// lexicographically with `+1 < -1`.
fn sign_patterns(k: usize) -> Vec<Vec<i8>> {
    let len = 2 * k;
    (0u64..1 << len)
        .filter(|m| m.count_ones() as usize == k)
        .map(|m| {
            (0..len)
                .map(|i| if m >> (len - 1 - i) & 1 == 1 { -1 } else { 1 })
                .collect()
        })
        .collect()
}

/// Family with `x_i(j) = t_j(i)`, without a size limit.
fn sign_family(k: usize) -> VectorFamily {
    let patterns = sign_patterns(k);
    let vectors = (0..2 * k)
        .map(|i| {
            SparseVec::from_entries(
                patterns
                    .iter()
                    .enumerate()
                    .map(|(j, t)| (j + 1, Scalar::Exact(Dyadic::from_int(t[i] as i64)))),
            )
        })
        .collect();
    VectorFamily {
        k,
        dim: patterns.len(),
        vectors,
    }
}

pub const MAX_FAMILY_K: usize = 5;

/// The vector family of size `2k` with sup norms 1, zero total, and every
/// `k`-term partial sum of sup norm at least `k`.
pub fn gen_vector_family(k: usize) -> Result<VectorFamily> {
    if k == 0 {
        return Err(Error::invalid("k must be ≥ 1"));
    }
    if k > MAX_FAMILY_K {
        return Err(Error::DimensionBudget(k));
    }
    Ok(sign_family(k))
}

/// Outcome of an exhaustive check of the family properties.
#[derive(Clone, Debug, Serialize)]
pub struct FamilyReport {
    pub k: usize,
    pub unit_norms: bool,
    pub sums_to_zero: bool,
    pub permutations_checked: usize,
    /// Smallest sup norm of a `k`-term partial sum over all orderings.
    pub min_half_sum_norm: f64,
}

impl FamilyReport {
    pub fn passed(&self) -> bool {
        self.unit_norms && self.sums_to_zero && self.min_half_sum_norm >= self.k as f64
    }
}

/// Checks the three family properties, the second over all `(2k)!` orderings.
pub fn check_family_exhaustive(fam: &VectorFamily) -> Result<FamilyReport> {
    if fam.k > 4 {
        return Err(Error::invalid("exhaustive check limited to k ≤ 4"));
    }
    let unit_norms = fam.vectors.iter().all(|v| v.norm(NormKind::Sup) == 1.0);
    let total = fam.vectors.iter().fold(SparseVec::zero(), |acc, v| acc.add(v));
    let rows = fam.dense_rows();
    let n = rows.len();
    let mut min_norm = f64::INFINITY;
    let mut count = 0;
    let mut acc = vec![0.0; fam.dim];
    for perm in (0..n).permutations(n) {
        acc.iter_mut().for_each(|a| *a = 0.0);
        for &i in &perm[..fam.k] {
            for (a, x) in acc.iter_mut().zip(&rows[i]) {
                *a += x;
            }
        }
        let sup = acc.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        min_norm = min_norm.min(sup);
        count += 1;
    }
    Ok(FamilyReport {
        k: fam.k,
        unit_norms,
        sums_to_zero: total.is_zero(),
        permutations_checked: count,
        min_half_sum_norm: min_norm,
    })
}

pub const MAX_NO_RP_BLOCKS: usize = 3;

/// Coordinate offset `n_k`: `n_0 = 0`, `n_k = binomial(2^(k+1), 2^k) + n_{k-1}`.
pub fn block_offset(k: usize) -> usize {
    (1..=k).map(|j| binomial(1 << (j + 1), 1 << j)).sum()
}

/// The positive copies `y_1^(k)..y_{2^(k+1)}^(k)` of block `k`: the family
/// with `K = 2^k` scaled by `2^-k` and shifted to coordinates after `n_{k-1}`.
pub fn no_rp_block(k: usize) -> Result<Vec<SparseVec>> {
    if k == 0 || k > MAX_NO_RP_BLOCKS {
        return Err(Error::invalid(format!("block must be in 1..={MAX_NO_RP_BLOCKS}")));
    }
    let fam = sign_family(1 << k);
    let offset = block_offset(k - 1);
    Ok(fam
        .vectors
        .iter()
        .map(|x| SparseVec::from_entries(x.iter().map(|(j, v)| {
            let d = match v {
                Scalar::Exact(d) => d.mul_pow2(-(k as i32)),
                Scalar::Float(_) => unreachable!("families are exact"),
            };
            (offset + j, Scalar::Exact(d))
        })))
        .collect())
}

/// The series `z_1 = y_1^(1), z_2 = -y_1^(1), z_3 = y_2^(1), ...` through
/// block `kmax`, with the ordering that lists each block's positive copies
/// before its negative copies.
pub fn gen_no_rp_series(kmax: usize) -> Result<(SignedSeries<SparseVec>, PartialPermutation)> {
    if kmax == 0 || kmax > MAX_NO_RP_BLOCKS {
        return Err(Error::invalid(format!("kmax must be in 1..={MAX_NO_RP_BLOCKS}")));
    }
    let mut terms = Vec::new();
    let mut witness = Vec::new();
    for k in 1..=kmax {
        let base = terms.len();
        let block = no_rp_block(k)?;
        let m = block.len();
        for y in block {
            terms.push(y.neg());
            terms.insert(terms.len() - 1, y);
        }
        witness.extend((0..m).map(|i| base + 2 * i + 1));
        witness.extend((0..m).map(|i| base + 2 * i + 2));
    }
    Ok((SignedSeries::new(terms), PartialPermutation::from_images(witness)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(i: usize) -> SparseVec {
        SparseVec::basis(i)
    }

    fn half(i: usize, exp: i32) -> SparseVec {
        scaled_basis(i, exp)
    }

    #[test]
    fn two_point_first_phases() {
        let w = gen_c0_two_point(2).unwrap();
        let first = vec![e(2), e(2).add(&e(1)), e(1), e(2).add(&e(1)), e(2), SparseVec::zero()];
        assert_eq!(&w.sums[1..7], &first[..]);
        let second = vec![
            half(3, -1),
            e(3),
            e(3).add(&half(1, -1)),
            e(3).add(&e(1)),
            half(3, -1).add(&e(1)),
            e(1),
            half(3, -1).add(&e(1)),
        ];
        assert_eq!(&w.sums[7..14], &second[..]);
        assert_eq!(w.sums.last().unwrap(), &SparseVec::zero());
    }

    #[test]
    fn singleton_divergent_indices() {
        let w = gen_c0_singleton_divergent(2).unwrap();
        let expect = vec![e(1), SparseVec::zero(), half(2, -1), e(2), half(2, -1), SparseVec::zero()];
        assert_eq!(&w.sums[1..], &expect[..]);
        let w = gen_c0_singleton_divergent(6).unwrap();
        for k in 1..=6 {
            assert!(w.sums[(1 << (k + 1)) - 2].is_zero());
            assert_eq!(w.sums[(1 << k) + (1 << (k - 1)) - 2], e(k));
        }
    }

    #[test]
    fn family_k1() {
        let f = gen_vector_family(1).unwrap();
        assert_eq!(f.dim, 2);
        assert_eq!(f.dense_rows(), vec![vec![1.0, -1.0], vec![-1.0, 1.0]]);
        assert_eq!(f.vectors[0].norm(NormKind::Sup), 1.0);
        assert_eq!(f.to_json().unwrap(), r#"{"k":1,"dim":2,"vectors":[[1,-1],[-1,1]]}"#);
    }

    #[test]
    fn family_budget() {
        assert!(matches!(gen_vector_family(6), Err(Error::DimensionBudget(6))));
        let dims: Vec<usize> = (1..=5).map(|k| gen_vector_family(k).unwrap().dim).collect();
        assert_eq!(dims, vec![2, 6, 20, 70, 252]);
    }

    #[test]
    fn family_exhaustive_k2() {
        let r = check_family_exhaustive(&gen_vector_family(2).unwrap()).unwrap();
        assert_eq!(r.permutations_checked, 24);
        assert!(r.passed());
        assert_eq!(r.min_half_sum_norm, 2.0);
    }

    #[test]
    fn no_rp_offsets_and_blocks() {
        assert_eq!((block_offset(1), block_offset(2), block_offset(3)), (6, 76, 12946));
        let b1 = no_rp_block(1).unwrap();
        assert_eq!(b1.len(), 4);
        assert!(b1.iter().all(|y| y.norm(NormKind::Sup) == 0.5));
        let b2 = no_rp_block(2).unwrap();
        assert_eq!(b2[0].support().next(), Some(7));
    }

    #[test]
    fn no_rp_series_shape() {
        let (z, witness) = gen_no_rp_series(2).unwrap();
        assert!(z.alternating);
        assert_eq!(z.len(), 2 * (4 + 8));
        assert_eq!(z.terms[0], no_rp_block(1).unwrap()[0]);
        assert_eq!(&witness.images()[..8], &[1, 3, 5, 7, 2, 4, 6, 8]);
        // Full-block partial sums are exactly theta.
        let sums = z.partial_sums(&SparseVec::zero());
        assert!(sums[8].is_zero() && sums[24].is_zero());
        assert!(gen_no_rp_series(4).is_err());
    }
}
