//! Batch shadows and U-statistic estimates of `Tr ρ^k`.
//!
//! For a set `T` of batch indices let `X(T)` be the sum of `ρ_{t1}⋯ρ_{tj}` over
//! every ordering of `T`, built as `X(T) = Σ_{t∈T} ρ_t X(T∖t)`. Every ordered
//! k-tuple of distinct indices is a cyclic rotation of exactly one tuple that
//! starts with its smallest index `m`, so the tuple sum is
//! `k Σ_T Tr(P_{min T} X(T))` over sets of size `k-1`, with `P_j = Σ_{m<j} ρ_m`.
//! Leave-one-out sums fall out of the same pass.

use std::collections::HashMap;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::sampling::{shadow_matrices, ShadowRecord};
use crate::error::{Error, Result};
use crate::quantum::C64;

const HERMITIAN_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-8;
/// Bitmask indexing limits the number of batches.
pub const MAX_BATCHES: usize = 31;

/// Batch-averaged shadows on an `L`-qubit subsystem.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchShadowSet {
    batches: Vec<DMatrix<C64>>,
    n_qubits: usize,
}

impl BatchShadowSet {
    pub fn new(batches: Vec<DMatrix<C64>>) -> Result<Self> {
        let first = batches
            .first()
            .ok_or_else(|| Error::invalid("no batches"))?;
        let dim = first.nrows();
        if !dim.is_power_of_two() || dim < 2 {
            return Err(Error::invalid(format!("batch dimension {dim} is not 2^L")));
        }
        if batches.len() > MAX_BATCHES {
            return Err(Error::invalid(format!(
                "{} batches exceed the limit of {MAX_BATCHES}",
                batches.len()
            )));
        }
        for (i, b) in batches.iter().enumerate() {
            if b.nrows() != dim || b.ncols() != dim {
                return Err(Error::invalid(format!("batch {i} has the wrong shape")));
            }
            let asym = (b - b.adjoint()).camax();
            if asym > HERMITIAN_TOL {
                return Err(Error::invalid(format!(
                    "batch {i} not Hermitian ({asym:e})"
                )));
            }
            let tr = b.trace();
            if (tr - C64::new(1.0, 0.0)).norm() > TRACE_TOL {
                return Err(Error::invalid(format!("batch {i} has trace {tr}")));
            }
        }
        Ok(Self {
            batches,
            n_qubits: dim.trailing_zeros() as usize,
        })
    }

    /// Batches built directly from measurement records.
    pub fn from_records(records: &[ShadowRecord], n_b: usize) -> Result<Self> {
        batch_shadows(&shadow_matrices(records), n_b)
    }

    pub fn batches(&self) -> &[DMatrix<C64>] {
        &self.batches
    }

    pub fn len(&self) -> usize {
        self.batches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.batches.is_empty()
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Same set with batch `b` removed.
    pub fn without(&self, b: usize) -> Self {
        let mut batches = self.batches.clone();
        batches.remove(b);
        Self {
            batches,
            n_qubits: self.n_qubits,
        }
    }
}

/// Contiguous equal-size batches; a remainder of `N_u mod N_B` shadows is dropped.
pub fn batch_shadows(shadows: &[DMatrix<C64>], n_b: usize) -> Result<BatchShadowSet> {
    if n_b == 0 || n_b > shadows.len() {
        return Err(Error::invalid(format!(
            "N_B = {n_b} must lie in [1, N_u = {}]",
            shadows.len()
        )));
    }
    let size = shadows.len() / n_b;
    let batches = shadows
        .chunks_exact(size)
        .take(n_b)
        .map(|chunk| {
            let mut sum = chunk[0].clone();
            for s in &chunk[1..] {
                sum += s;
            }
            sum.unscale(size as f64)
        })
        .collect();
    BatchShadowSet::new(batches)
}

/// `Re Tr(A B)` without forming the product.
fn trace_product(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            let (x, y) = (a[(i, j)], b[(j, i)]);
            s += x.re * y.re - x.im * y.im;
        }
    }
    s
}

/// Next bitmask with the same popcount (Gosper).
fn next_combination(x: u32) -> u32 {
    let c = x & x.wrapping_neg();
    let r = x + c;
    (((r ^ x) >> 2) / c) | r
}

fn combinations(n: usize, j: usize) -> Vec<u32> {
    let mut out = Vec::new();
    if j == 0 || j > n {
        return out;
    }
    let limit = 1u64 << n;
    let mut x = (1u32 << j) - 1;
    while (x as u64) < limit {
        out.push(x);
        if j == n {
            break;
        }
        x = next_combination(x);
    }
    out
}

/// Falling factorial `n (n-1) ⋯ (n-k+1)`.
fn falling(n: usize, k: usize) -> f64 {
    (0..k).map(|i| (n - i) as f64).product()
}

/// Per-order tuple sums: all tuples, and the tuples touching each batch.
#[derive(Debug, Clone)]
pub(crate) struct TupleSums {
    pub order: u32,
    pub total: f64,
    pub touching: Vec<f64>,
}

/// Tuple sums for `k = 2..=k_max` in one pass over the subset lattice.
pub(crate) fn tuple_sums(set: &BatchShadowSet, k_max: u32) -> Result<Vec<TupleSums>> {
    let rho = set.batches();
    let n = rho.len();
    if k_max < 2 || k_max as usize > n {
        return Err(Error::invalid(format!(
            "orders 2..={k_max} need between 2 and N_B = {n} batches"
        )));
    }
    let dim = rho[0].nrows();
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(DMatrix::<C64>::zeros(dim, dim));
    for r in rho {
        let next = prefix.last().expect("seeded") + r;
        prefix.push(next);
    }

    let mut level: HashMap<u32, DMatrix<C64>> =
        (0..n).map(|t| (1u32 << t, rho[t].clone())).collect();
    let mut out = Vec::new();
    for j in 1..k_max as usize {
        if j > 1 {
            let masks = combinations(n, j);
            let prev = &level;
            let built: Vec<(u32, DMatrix<C64>)> = masks
                .par_iter()
                .map(|&mask| {
                    let mut acc = DMatrix::<C64>::zeros(dim, dim);
                    let mut bits = mask;
                    while bits != 0 {
                        let t = bits.trailing_zeros() as usize;
                        bits &= bits - 1;
                        acc += &rho[t] * &prev[&(mask & !(1u32 << t))];
                    }
                    (mask, acc)
                })
                .collect();
            level = built.into_iter().collect();
        }
        let mut masks: Vec<u32> = level.keys().copied().collect();
        masks.sort_unstable();
        let values: Vec<f64> = masks
            .par_iter()
            .map(|m| trace_product(&prefix[m.trailing_zeros() as usize], &level[m]))
            .collect();

        let mut total = 0.0;
        let mut touching = vec![0.0; n];
        let mut by_min = vec![DMatrix::<C64>::zeros(dim, dim); n];
        for (mask, v) in masks.iter().zip(&values) {
            total += v;
            let mut bits = *mask;
            while bits != 0 {
                let t = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                touching[t] += v;
            }
            by_min[mask.trailing_zeros() as usize] += &level[mask];
        }
        // tuples led by b: Tr(ρ_b X(T)) over T above b
        let mut suffix = DMatrix::<C64>::zeros(dim, dim);
        for b in (0..n).rev() {
            touching[b] += trace_product(&rho[b], &suffix);
            suffix += &by_min[b];
        }
        out.push(TupleSums {
            order: j as u32 + 1,
            total,
            touching,
        });
    }
    Ok(out)
}

/// Unbiased estimate of `Tr ρ^k` from distinct ordered batch tuples (real part).
pub fn u_statistic_moment(set: &BatchShadowSet, k: u32) -> Result<f64> {
    let sums = tuple_sums(set, k)?;
    let last = sums.last().expect("k >= 2");
    Ok(k as f64 * last.total / falling(set.len(), k as usize))
}

/// `p̂_k` for `k = 2..=k_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentEstimates {
    pub orders: Vec<u32>,
    pub moments: Vec<f64>,
    pub n_batches: usize,
}

impl MomentEstimates {
    pub(crate) fn from_sums(sums: &[TupleSums], n: usize) -> Self {
        Self {
            orders: sums.iter().map(|s| s.order).collect(),
            moments: sums
                .iter()
                .map(|s| s.order as f64 * s.total / falling(n, s.order as usize))
                .collect(),
            n_batches: n,
        }
    }

    /// Moments with batch `b` left out.
    pub(crate) fn leave_out(sums: &[TupleSums], n: usize, b: usize) -> Self {
        Self {
            orders: sums.iter().map(|s| s.order).collect(),
            moments: sums
                .iter()
                .map(|s| {
                    s.order as f64 * (s.total - s.touching[b]) / falling(n - 1, s.order as usize)
                })
                .collect(),
            n_batches: n - 1,
        }
    }
}

pub fn estimate_moments(set: &BatchShadowSet, k_max: u32) -> Result<MomentEstimates> {
    Ok(MomentEstimates::from_sums(
        &tuple_sums(set, k_max)?,
        set.len(),
    ))
}

/// Rényi values from moments, cut at the first non-positive moment.
#[derive(Debug, Clone, PartialEq)]
pub struct RenyiTable {
    pub orders: Vec<u32>,
    pub values: Vec<f64>,
    /// Orders removed because their moment (or a lower one) was not positive.
    pub dropped: Vec<u32>,
}

/// `Ŝ_k = log₂(p̂_k) / (1 - k)`.
pub fn renyi_from_moments(moments: &MomentEstimates) -> RenyiTable {
    let keep = moments
        .moments
        .iter()
        .take_while(|&&p| p > 0.0 && p.is_finite())
        .count();
    RenyiTable {
        orders: moments.orders[..keep].to_vec(),
        values: moments.orders[..keep]
            .iter()
            .zip(&moments.moments)
            .map(|(&k, p)| p.log2() / (1.0 - k as f64))
            .collect(),
        dropped: moments.orders[keep..].to_vec(),
    }
}
