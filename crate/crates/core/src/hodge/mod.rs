//! Linear algebra of polarized Hodge structures.
//!
//! Frames are stored as *rows* in a fixed reference basis: row `r` of a
//! [`HodgeFrame`] holds the coordinates of the `r`-th frame vector, so the
//! frame matrix acts on the column of reference basis vectors from the left.
//! Block indices follow the decomposition grouping: group `α` of a weight-`n`
//! structure spans the `(n−α, α)` piece and occupies rows
//! `f^{n+1−α} .. f^{n−α}` where `f^i` are the filtration dimensions.

mod block_lu;
mod relations;

pub use block_lu::{block_lu, in_unipotent_orbit, is_horizontal, leading_stack_determinants, BlockLu};
pub use relations::{
    check_first_bilinear_relation, check_second_bilinear_relation, group_membership, RealStructure,
};

use crate::error::{Error, Result};
use crate::{C64, CMatrix};

/// Filtration dimensions `f^n ..= f^0` as partial sums of the Hodge numbers
/// from the top: `f^i = h^{n,0} + … + h^{i,n−i}`.
pub fn filtration_dims(hodge_numbers: &[usize]) -> Result<Vec<usize>> {
    if hodge_numbers.is_empty() {
        return Err(Error::InvalidHodgeType("empty Hodge number sequence".into()));
    }
    if hodge_numbers.iter().all(|&h| h == 0) {
        return Err(Error::InvalidHodgeType("all Hodge numbers vanish".into()));
    }
    let mut dims = Vec::with_capacity(hodge_numbers.len());
    let mut sum = 0usize;
    for &h in hodge_numbers {
        sum += h;
        dims.push(sum);
    }
    Ok(dims)
}

/// Weight, Hodge numbers and the derived filtration dimensions of a period
/// domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HodgeType {
    weight: usize,
    hodge_numbers: Vec<usize>,
    filtration_dims: Vec<usize>,
}

impl HodgeType {
    /// Builds the type from the sequence `h^{n,0}, …, h^{0,n}`; the weight is
    /// one less than the sequence length.
    pub fn new(hodge_numbers: &[usize]) -> Result<Self> {
        let filtration_dims = filtration_dims(hodge_numbers)?;
        Ok(Self {
            weight: hodge_numbers.len() - 1,
            hodge_numbers: hodge_numbers.to_vec(),
            filtration_dims,
        })
    }

    pub fn weight(&self) -> usize {
        self.weight
    }

    pub fn hodge_numbers(&self) -> &[usize] {
        &self.hodge_numbers
    }

    /// `f^n ..= f^0`.
    pub fn filtration_dims(&self) -> &[usize] {
        &self.filtration_dims
    }

    /// Total dimension `m = f^0`.
    pub fn dim(&self) -> usize {
        *self.filtration_dims.last().unwrap()
    }

    /// `f^i` for `0 ≤ i ≤ n+1`, with `f^{n+1} = 0`.
    pub fn filtration_dim(&self, i: usize) -> usize {
        if i > self.weight {
            0
        } else {
            self.filtration_dims[self.weight - i]
        }
    }

    /// Row/column grouping by decomposition piece.
    pub fn partition(&self) -> BlockPartition {
        BlockPartition::from_group_sizes(&self.hodge_numbers)
    }
}

/// Parity of a polarization form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    /// Even weight: `Q = Qᵀ`.
    Symmetric,
    /// Odd weight: `Q = −Qᵀ`.
    Skew,
}

impl Parity {
    pub fn for_weight(weight: usize) -> Self {
        if weight % 2 == 0 {
            Parity::Symmetric
        } else {
            Parity::Skew
        }
    }
}

/// Non-degenerate bilinear form with the parity dictated by the weight.
#[derive(Debug, Clone)]
pub struct Polarization {
    matrix: CMatrix,
    parity: Parity,
}

impl Polarization {
    pub fn new(matrix: CMatrix, parity: Parity, tol: f64) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::ShapeMismatch(format!(
                "polarization matrix is {}×{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let scale = max_abs(&matrix).max(f64::MIN_POSITIVE);
        let sign = match parity {
            Parity::Symmetric => C64::new(1.0, 0.0),
            Parity::Skew => C64::new(-1.0, 0.0),
        };
        let asym = max_abs(&(&matrix - matrix.transpose() * sign));
        if asym > tol * scale {
            return Err(Error::ShapeMismatch(format!(
                "polarization violates {:?} parity by {asym:e}",
                parity
            )));
        }
        if det_is_singular(&matrix, tol) {
            return Err(Error::ShapeMismatch("polarization is degenerate".into()));
        }
        Ok(Self { matrix, parity })
    }

    /// Convenience constructor deriving the parity from the weight.
    pub fn for_weight(matrix: CMatrix, weight: usize, tol: f64) -> Result<Self> {
        Self::new(matrix, Parity::for_weight(weight), tol)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `Q(u, v)` for coordinate rows `u`, `v`.
    pub fn eval(&self, u: &[C64], v: &[C64]) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (i, &ui) in u.iter().enumerate() {
            for (j, &vj) in v.iter().enumerate() {
                acc += ui * self.matrix[(i, j)] * vj;
            }
        }
        acc
    }
}

/// Row/column block grouping. `boundaries` stores `0 = f^{n+1}, f^n, …, f^0`,
/// so group `α` occupies indices `boundaries[α] .. boundaries[α+1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPartition {
    boundaries: Vec<usize>,
}

impl BlockPartition {
    pub fn new(boundaries: Vec<usize>) -> Result<Self> {
        if boundaries.len() < 2 || boundaries[0] != 0 {
            return Err(Error::ShapeMismatch("partition must start at 0".into()));
        }
        if boundaries.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::ShapeMismatch("partition boundaries must be weakly increasing".into()));
        }
        Ok(Self { boundaries })
    }

    pub fn from_group_sizes(sizes: &[usize]) -> Self {
        let mut boundaries = Vec::with_capacity(sizes.len() + 1);
        boundaries.push(0);
        let mut acc = 0;
        for &s in sizes {
            acc += s;
            boundaries.push(acc);
        }
        Self { boundaries }
    }

    /// Number of groups (`n + 1` for a weight-`n` structure).
    pub fn groups(&self) -> usize {
        self.boundaries.len() - 1
    }

    /// Total dimension `m`.
    pub fn total(&self) -> usize {
        *self.boundaries.last().unwrap()
    }

    pub fn range(&self, alpha: usize) -> std::ops::Range<usize> {
        self.boundaries[alpha]..self.boundaries[alpha + 1]
    }

    pub fn size(&self, alpha: usize) -> usize {
        self.boundaries[alpha + 1] - self.boundaries[alpha]
    }

    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }
}

/// A square complex matrix together with a block partition.
#[derive(Debug, Clone)]
pub struct BlockMatrix {
    entries: CMatrix,
    partition: BlockPartition,
}

impl BlockMatrix {
    pub fn new(entries: CMatrix, partition: BlockPartition) -> Result<Self> {
        if !entries.is_square() || entries.nrows() != partition.total() {
            return Err(Error::ShapeMismatch(format!(
                "{}×{} entries for partition of total {}",
                entries.nrows(),
                entries.ncols(),
                partition.total()
            )));
        }
        Ok(Self { entries, partition })
    }

    pub fn identity(partition: BlockPartition) -> Self {
        let m = partition.total();
        Self { entries: CMatrix::identity(m, m), partition }
    }

    pub fn zeros(partition: BlockPartition) -> Self {
        let m = partition.total();
        Self { entries: CMatrix::zeros(m, m), partition }
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn partition(&self) -> &BlockPartition {
        &self.partition
    }

    /// The `(α, β)` block as an owned matrix.
    pub fn block(&self, alpha: usize, beta: usize) -> CMatrix {
        let r = self.partition.range(alpha);
        let c = self.partition.range(beta);
        self.entries.view((r.start, c.start), (r.len(), c.len())).into_owned()
    }

    pub fn set_block(&mut self, alpha: usize, beta: usize, block: &CMatrix) {
        let r = self.partition.range(alpha);
        let c = self.partition.range(beta);
        assert_eq!((block.nrows(), block.ncols()), (r.len(), c.len()), "block shape");
        self.entries.view_mut((r.start, c.start), (r.len(), c.len())).copy_from(block);
    }

    pub fn max_norm(&self) -> f64 {
        max_abs(&self.entries)
    }
}

/// Invertible frame whose row blocks span the pieces of a filtration or
/// decomposition, expressed in the fixed reference basis.
#[derive(Debug, Clone)]
pub struct HodgeFrame {
    rows: CMatrix,
    hodge_type: HodgeType,
}

impl HodgeFrame {
    pub fn new(rows: CMatrix, hodge_type: HodgeType) -> Result<Self> {
        let m = hodge_type.dim();
        if rows.nrows() != m || rows.ncols() != m {
            return Err(Error::ShapeMismatch(format!(
                "{}×{} frame for a type of dimension {m}",
                rows.nrows(),
                rows.ncols()
            )));
        }
        if det_is_singular(&rows, 1e-12) {
            return Err(Error::InvalidFrame("frame rows are not linearly independent".into()));
        }
        Ok(Self { rows, hodge_type })
    }

    pub fn rows(&self) -> &CMatrix {
        &self.rows
    }

    pub fn hodge_type(&self) -> &HodgeType {
        &self.hodge_type
    }

    pub fn dim(&self) -> usize {
        self.hodge_type.dim()
    }

    /// Rows of the block `α` (the `(n−α, α)` group).
    pub fn group_rows(&self, alpha: usize) -> CMatrix {
        let r = self.hodge_type.partition().range(alpha);
        self.rows.rows(r.start, r.len()).into_owned()
    }

    pub fn to_block_matrix(&self) -> BlockMatrix {
        BlockMatrix { entries: self.rows.clone(), partition: self.hodge_type.partition() }
    }
}

/// `(√−1)^k` for a signed exponent.
pub(crate) fn weil_power(k: i64) -> C64 {
    match k.rem_euclid(4) {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

pub(crate) fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Relative singularity test: `|det| ≤ tol · scale^n` with `scale` the
/// max-norm of the matrix. An empty matrix counts as nonsingular.
pub(crate) fn det_is_singular(m: &CMatrix, tol: f64) -> bool {
    let n = m.nrows();
    if n == 0 {
        return false;
    }
    let scale = max_abs(m);
    if scale == 0.0 {
        return true;
    }
    m.determinant().norm() <= tol * scale.powi(n as i32)
}
