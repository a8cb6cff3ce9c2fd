//! Block LU factorization against a partition and the unipotent-orbit test.
//!
//! The factorization splits `a = lower · unipotent` where `unipotent` is
//! block upper triangular with identity diagonal blocks (the unipotent-chart
//! representative) and `lower` is block lower triangular. It exists exactly
//! when every leading principal block stack `(a^{(α,β)})_{0 ≤ α,β ≤ k}` is
//! nonsingular, which is also the membership criterion for the unipotent
//! orbit; elimination proceeds by block column so a failure localizes to the
//! first block index `k` whose Schur pivot degenerates.

use super::{det_is_singular, max_abs, BlockMatrix};
use crate::error::{Error, Result};
use crate::CMatrix;

/// Result of [`block_lu`]: `lower · unipotent` reproduces the input.
#[derive(Debug, Clone)]
pub struct BlockLu {
    /// Block upper triangular factor with exact identity diagonal blocks and
    /// exact zero blocks below the diagonal.
    pub unipotent: BlockMatrix,
    /// Block lower triangular factor with exact zero blocks above the
    /// diagonal.
    pub lower: BlockMatrix,
}

/// Factors `a = lower · unipotent` by recursive Schur-complement elimination
/// over block columns.
///
/// Fails with [`Error::NotInOrbit`] carrying the block index whose Schur
/// pivot is singular within `tol` (relative to the pivot's max-norm).
pub fn block_lu(a: &BlockMatrix, tol: f64) -> Result<BlockLu> {
    let partition = a.partition().clone();
    let n_groups = partition.groups();
    let m = partition.total();

    // Working copy is reduced to the unipotent factor by left multiplication
    // with block-lower eliminations; `lower` accumulates their inverse.
    let mut work = a.entries().clone();
    let mut lower = CMatrix::identity(m, m);

    for alpha in 0..n_groups {
        let r = partition.range(alpha);
        if r.is_empty() {
            continue;
        }
        let pivot = work.view((r.start, r.start), (r.len(), r.len())).into_owned();
        if det_is_singular(&pivot, tol) {
            return Err(Error::NotInOrbit { block: alpha });
        }
        let pivot_lu = pivot.clone().lu();

        // Normalize the pivot row group: rows_α ← pivot⁻¹ · rows_α.
        // Inverse op on the accumulator: cols_α ← cols_α · pivot.
        let normalized = pivot_lu
            .solve(&work.rows(r.start, r.len()).into_owned())
            .expect("pivot verified nonsingular");
        work.rows_mut(r.start, r.len()).copy_from(&normalized);
        let scaled = lower.columns(r.start, r.len()) * &pivot;
        lower.columns_mut(r.start, r.len()).copy_from(&scaled);

        // Eliminate every later row group in this block column.
        for gamma in (alpha + 1)..n_groups {
            let g = partition.range(gamma);
            if g.is_empty() {
                continue;
            }
            let factor = work.view((g.start, r.start), (g.len(), r.len())).into_owned();
            let update = &factor * work.rows(r.start, r.len()).into_owned();
            let reduced = work.rows(g.start, g.len()) - update;
            work.rows_mut(g.start, g.len()).copy_from(&reduced);
            // Inverse op: cols_α ← cols_α + cols_γ · factor.
            let bump = lower.columns(g.start, g.len()) * &factor;
            let merged = lower.columns(r.start, r.len()) + bump;
            lower.columns_mut(r.start, r.len()).copy_from(&merged);
        }
    }

    // Snap the structural pattern exactly: identity diagonal blocks and zero
    // sub-diagonal blocks in the unipotent factor, zero super-diagonal blocks
    // in the lower factor.
    let zero = num_complex::Complex::new(0.0, 0.0);
    let one = num_complex::Complex::new(1.0, 0.0);
    for alpha in 0..n_groups {
        let r = partition.range(alpha);
        for i in r.clone() {
            for j in 0..r.end {
                work[(i, j)] = if i == j { one } else { zero };
            }
        }
    }
    for i in 0..m {
        let bi = group_of(&partition, i);
        for j in partition.range(bi).end..m {
            lower[(i, j)] = zero;
        }
    }

    Ok(BlockLu {
        unipotent: BlockMatrix::new(work, partition.clone())?,
        lower: BlockMatrix::new(lower, partition)?,
    })
}

fn group_of(partition: &super::BlockPartition, index: usize) -> usize {
    (0..partition.groups())
        .find(|&g| partition.range(g).contains(&index))
        .expect("index inside partition")
}

/// `|det|` of the leading principal block stacks `(a^{(α,β)})_{0 ≤ α,β ≤ k}`
/// for `k = 0 .. groups`.
pub fn leading_stack_determinants(a: &BlockMatrix) -> Vec<f64> {
    let partition = a.partition();
    (0..partition.groups())
        .map(|k| {
            let end = partition.range(k).end;
            a.entries().view((0, 0), (end, end)).into_owned().determinant().norm()
        })
        .collect()
}

/// Orbit membership: every leading principal block stack is nonsingular
/// within `tol`. Agrees with [`block_lu`] success.
pub fn in_unipotent_orbit(a: &BlockMatrix, tol: f64) -> bool {
    let partition = a.partition();
    (0..partition.groups()).all(|k| {
        let end = partition.range(k).end;
        let stack = a.entries().view((0, 0), (end, end)).into_owned();
        !det_is_singular(&stack, tol)
    })
}

/// A block tangent representative is horizontal when its only nonzero blocks
/// sit on the first super-diagonal `(α, α+1)`.
pub fn is_horizontal(v: &BlockMatrix) -> bool {
    let partition = v.partition();
    let n_groups = partition.groups();
    for alpha in 0..n_groups {
        for beta in 0..n_groups {
            if beta == alpha + 1 {
                continue;
            }
            if max_abs(&v.block(alpha, beta)) != 0.0 {
                return false;
            }
        }
    }
    true
}
