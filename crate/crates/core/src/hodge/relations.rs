//! Bilinear-relation checks and the isometry-group membership test.

use super::{max_abs, weil_power, HodgeFrame, Polarization};
use crate::error::{Error, Result};
use crate::{C64, CMatrix};

/// Antilinear conjugation of the reference basis: the real structure sends a
/// coordinate row `x` to `conj(x) · S`. For a real reference basis `S = I`;
/// for bases built from `dz`/`dz̄` monomials it is a signed permutation.
#[derive(Debug, Clone)]
pub struct RealStructure {
    matrix: CMatrix,
}

impl RealStructure {
    /// Entrywise conjugation (real reference basis).
    pub fn identity(dim: usize) -> Self {
        Self { matrix: CMatrix::identity(dim, dim) }
    }

    /// A general conjugation matrix; must be an involution together with
    /// entrywise conjugation, `conj(S) · S = I`.
    pub fn new(matrix: CMatrix, tol: f64) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::ShapeMismatch("real structure must be square".into()));
        }
        let n = matrix.nrows();
        let twice = matrix.map(|z| z.conj()) * &matrix;
        let defect = max_abs(&(&twice - CMatrix::identity(n, n)));
        if defect > tol {
            return Err(Error::InvalidFrame(format!(
                "conjugation matrix is not an involution (defect {defect:e})"
            )));
        }
        Ok(Self { matrix })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Conjugates every row of `rows`.
    pub fn conjugate_rows(&self, rows: &CMatrix) -> CMatrix {
        rows.map(|z| z.conj()) * &self.matrix
    }
}

/// First Hodge–Riemann relation `Q(F^i, F^{n−i+1}) = 0`: every pairing
/// between the row span of `F^i` and of `F^{n−i+1}` must vanish within `tol`.
pub fn check_first_bilinear_relation(
    frame: &HodgeFrame,
    q: &Polarization,
    tol: f64,
) -> Result<bool> {
    let m = frame.dim();
    if q.dim() != m {
        return Err(Error::ShapeMismatch(format!(
            "frame dimension {m} vs polarization dimension {}",
            q.dim()
        )));
    }
    let n = frame.hodge_type().weight();
    for i in 0..=n {
        let fa = frame.hodge_type().filtration_dim(i);
        let fb = frame.hodge_type().filtration_dim(n - i + 1);
        if fa == 0 || fb == 0 {
            continue;
        }
        let rows_a = frame.rows().rows(0, fa);
        let rows_b = frame.rows().rows(0, fb);
        let pairing = rows_a * q.matrix() * rows_b.transpose();
        if max_abs(&pairing.into_owned()) > tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Second Hodge–Riemann relation: the Hermitian form
/// `v ↦ (√−1)^{2k−n} Q(v, v̄)` must be positive definite on every `H^{k,n−k}`
/// block (all eigenvalues `> tol`).
///
/// The frame must be decomposition-adapted: the conjugate of block `α` must
/// span block `n−α`. A violation beyond `tol` (relative to the row norms)
/// yields [`Error::InvalidFrame`].
pub fn check_second_bilinear_relation(
    frame: &HodgeFrame,
    q: &Polarization,
    conj: &RealStructure,
    tol: f64,
) -> Result<bool> {
    let m = frame.dim();
    if q.dim() != m || conj.dim() != m {
        return Err(Error::ShapeMismatch(format!(
            "frame dimension {m} vs polarization {} vs conjugation {}",
            q.dim(),
            conj.dim()
        )));
    }
    let ht = frame.hodge_type().clone();
    let n = ht.weight();
    let partition = ht.partition();

    // Decomposition adaptedness: conj(block α) ⊆ span(block n−α).
    for alpha in 0..=n {
        if partition.size(alpha) == 0 {
            continue;
        }
        let conjugated = conj.conjugate_rows(&frame.group_rows(alpha));
        let target = frame.group_rows(n - alpha);
        if target.nrows() != conjugated.nrows() {
            return Err(Error::InvalidFrame(format!(
                "blocks {alpha} and {} have mismatched sizes",
                n - alpha
            )));
        }
        let basis = orthonormal_rows(&target);
        for r in 0..conjugated.nrows() {
            let row = conjugated.row(r).into_owned();
            let mut residual = row.clone();
            for b in 0..basis.nrows() {
                let basis_row = basis.row(b);
                let coeff: C64 = row.iter().zip(basis_row.iter()).map(|(x, e)| x * e.conj()).sum();
                residual -= basis_row.into_owned() * coeff;
            }
            let row_norm: f64 = row.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let res_norm: f64 = residual.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if res_norm > tol.max(1e-300) * row_norm.max(1.0) {
                return Err(Error::InvalidFrame(format!(
                    "conjugate of block {alpha} leaves block {} by {res_norm:e}",
                    n - alpha
                )));
            }
        }
    }

    // Positivity block by block: block α spans H^{n−α, α}, so k = n − α and
    // the Weil exponent is 2k − n = n − 2α.
    for alpha in 0..=n {
        if partition.size(alpha) == 0 {
            continue;
        }
        let rows = frame.group_rows(alpha);
        let conjugated = conj.conjugate_rows(&rows);
        let factor = weil_power(n as i64 - 2 * alpha as i64);
        let form = (&rows * q.matrix() * conjugated.transpose()) * factor;
        let herm_defect = max_abs(&(form.clone() - form.adjoint()));
        if herm_defect > tol.max(1e-300) * max_abs(&form).max(1.0) {
            return Err(Error::InvalidFrame(format!(
                "block {alpha} pairing is not Hermitian (defect {herm_defect:e})"
            )));
        }
        let herm = (form.clone() + form.adjoint()) * C64::new(0.5, 0.0);
        let eigen = herm.symmetric_eigen();
        if eigen.eigenvalues.iter().any(|&l| l <= tol) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Isometry-group membership: `‖gᵀ Q g − Q‖_max ≤ tol`.
pub fn group_membership(g: &CMatrix, q: &Polarization, tol: f64) -> Result<bool> {
    if !g.is_square() || g.nrows() != q.dim() {
        return Err(Error::ShapeMismatch(format!(
            "{}×{} candidate for a form of dimension {}",
            g.nrows(),
            g.ncols(),
            q.dim()
        )));
    }
    let defect = g.transpose() * q.matrix() * g - q.matrix();
    Ok(max_abs(&defect) <= tol)
}

/// Gram–Schmidt over rows; near-dependent rows are dropped.
fn orthonormal_rows(rows: &CMatrix) -> CMatrix {
    let mut kept: Vec<nalgebra::DVector<C64>> = Vec::new();
    for r in 0..rows.nrows() {
        let mut v = rows.row(r).transpose().into_owned();
        let original: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for u in &kept {
            let coeff: C64 = v.iter().zip(u.iter()).map(|(x, e)| x * e.conj()).sum();
            v -= u * coeff;
        }
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-12 * original.max(1.0) {
            kept.push(v / C64::new(norm, 0.0));
        }
    }
    let mut out = CMatrix::zeros(kept.len(), rows.ncols());
    for (i, v) in kept.iter().enumerate() {
        out.row_mut(i).copy_from(&v.transpose());
    }
    out
}
