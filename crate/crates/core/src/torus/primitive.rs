//! Constant-coefficient exterior algebra, the Kähler form, and primitive
//! cohomology data at the base point.
//!
//! Constant forms of pure bidegree `(a,b)` are coefficient vectors over the
//! canonical monomial layout `[I][J]`. The primitive subspace of total
//! degree `n ≤ d` is the kernel of `ω^{d−n+1} ∧ (·)` inside the constants,
//! and its canonical orthonormal basis is produced by projecting the wedge
//! monomials — ordered with mixed pairs `I ≠ J` before diagonal pairs
//! `I = J`, each group ordered by mask position — and running Gram–Schmidt,
//! dropping the ω-multiples that project to zero. Each basis vector's phase
//! is fixed by making its first nonzero monomial coordinate real positive.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::form::FourierForm;
use super::geometry::TorusGeometry;
use super::multi_index::merge;
use crate::error::{Error, Result};
use crate::hodge::HodgeType;
use crate::{C64, CMatrix, CVector};

/// A constant form of pure bidegree, stored as monomial coefficients.
#[derive(Debug, Clone)]
pub struct ConstForm {
    pub a: usize,
    pub b: usize,
    pub coeffs: Vec<C64>,
}

impl ConstForm {
    pub fn zero(geometry: &TorusGeometry, a: usize, b: usize) -> Self {
        let len = geometry.mask_table(a).len() * geometry.mask_table(b).len();
        Self { a, b, coeffs: vec![C64::new(0.0, 0.0); len] }
    }

    pub fn monomial(geometry: &TorusGeometry, mask_i: u32, mask_j: u32, c: C64) -> Self {
        let a = mask_i.count_ones() as usize;
        let b = mask_j.count_ones() as usize;
        let mut f = Self::zero(geometry, a, b);
        let idx = geometry.mask_table(a).position(mask_i) * geometry.mask_table(b).len()
            + geometry.mask_table(b).position(mask_j);
        f.coeffs[idx] = c;
        f
    }

    pub fn coeff(&self, geometry: &TorusGeometry, mask_i: u32, mask_j: u32) -> C64 {
        let idx = geometry.mask_table(self.a).position(mask_i) * geometry.mask_table(self.b).len()
            + geometry.mask_table(self.b).position(mask_j);
        self.coeffs[idx]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { a: self.a, b: self.b, coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    pub fn add_assign(&mut self, other: &ConstForm) {
        assert_eq!((self.a, self.b), (other.a, other.b));
        for (x, y) in self.coeffs.iter_mut().zip(other.coeffs.iter()) {
            *x += y;
        }
    }

    /// Pointwise (= L², constants) Hermitian inner product.
    pub fn inner(&self, geometry: &TorusGeometry, other: &ConstForm) -> C64 {
        assert_eq!((self.a, self.b), (other.a, other.b));
        let hg = geometry.hol_gram(self.a);
        let ag = geometry.anti_gram(self.b);
        let nb = geometry.mask_table(self.b).len();
        let na = geometry.mask_table(self.a).len();
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..na {
            for i2 in 0..na {
                let g = hg[(i, i2)];
                if g.re == 0.0 && g.im == 0.0 {
                    continue;
                }
                for j in 0..nb {
                    for j2 in 0..nb {
                        acc += self.coeffs[i * nb + j] * other.coeffs[i2 * nb + j2].conj() * g * ag[(j, j2)];
                    }
                }
            }
        }
        acc
    }

    pub fn norm(&self, geometry: &TorusGeometry) -> f64 {
        self.inner(geometry, self).re.max(0.0).sqrt()
    }

    /// Complex conjugate: an `(b,a)`-form with
    /// `c'(J,I) = (−1)^{ab} conj(c(I,J))`.
    pub fn conjugate(&self, geometry: &TorusGeometry) -> ConstForm {
        let mut out = ConstForm::zero(geometry, self.b, self.a);
        let sign = if (self.a * self.b) % 2 == 0 { 1.0 } else { -1.0 };
        let ta = geometry.mask_table(self.a);
        let tb = geometry.mask_table(self.b);
        for (ip, &mi) in ta.masks.iter().enumerate() {
            for (jp, &mj) in tb.masks.iter().enumerate() {
                let c = self.coeffs[ip * tb.len() + jp];
                let idx = tb.position(mj) * ta.len() + ta.position(mi);
                out.coeffs[idx] = c.conj() * sign;
            }
        }
        out
    }

    /// Embeds into the constant mode of a banded form.
    pub fn to_fourier(&self, geometry: &Arc<TorusGeometry>, band: u32) -> Result<FourierForm> {
        let mut f = FourierForm::zero(Arc::clone(geometry), band, self.a, self.b)?;
        let zero_mode = geometry.zero_mode_index(band);
        let nb = geometry.mask_table(self.b).len();
        for i in 0..geometry.mask_table(self.a).len() {
            for j in 0..nb {
                *f.coeff_mut(zero_mode, i, j) = self.coeffs[i * nb + j];
            }
        }
        Ok(f)
    }

    /// The constant part of a banded form as a `ConstForm`.
    pub fn from_fourier(f: &FourierForm) -> ConstForm {
        let (a, b) = f.bidegree();
        ConstForm { a, b, coeffs: f.constant_part() }
    }
}

/// Wedge of pure constant forms. `None` when the degrees overflow `d`
/// (the product vanishes identically).
pub fn wedge(geometry: &TorusGeometry, x: &ConstForm, y: &ConstForm) -> Option<ConstForm> {
    let d = geometry.dim();
    let (a, b) = (x.a + y.a, x.b + y.b);
    if a > d || b > d {
        return None;
    }
    let mut out = ConstForm::zero(geometry, a, b);
    let txa = geometry.mask_table(x.a);
    let txb = geometry.mask_table(x.b);
    let tya = geometry.mask_table(y.a);
    let tyb = geometry.mask_table(y.b);
    let ta = geometry.mask_table(a);
    let tb = geometry.mask_table(b);
    // (dz_{I1}∧dz̄_{J1}) ∧ (dz_{I2}∧dz̄_{J2}) moves dz̄_{J1} across dz_{I2}.
    let cross = |b1: usize, a2: usize| if (b1 * a2) % 2 == 0 { 1.0 } else { -1.0 };
    for (i1, &mi1) in txa.masks.iter().enumerate() {
        for (j1, &mj1) in txb.masks.iter().enumerate() {
            let cx = x.coeffs[i1 * txb.len() + j1];
            if cx.re == 0.0 && cx.im == 0.0 {
                continue;
            }
            for (i2, &mi2) in tya.masks.iter().enumerate() {
                let Some((sh, mi)) = merge(mi1, mi2) else { continue };
                for (j2, &mj2) in tyb.masks.iter().enumerate() {
                    let cy = y.coeffs[i2 * tyb.len() + j2];
                    if cy.re == 0.0 && cy.im == 0.0 {
                        continue;
                    }
                    let Some((sa, mj)) = merge(mj1, mj2) else { continue };
                    let sign = sh * sa * cross(x.b, y.a);
                    out.coeffs[ta.position(mi) * tb.len() + tb.position(mj)] += cx * cy * sign;
                }
            }
        }
    }
    Some(out)
}

/// A constant form of mixed bidegree, keyed by `(a, b)`.
#[derive(Debug, Clone, Default)]
pub struct ConstMix {
    pieces: BTreeMap<(usize, usize), ConstForm>,
}

impl ConstMix {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pure(f: ConstForm) -> Self {
        let mut m = Self::new();
        m.add(f);
        m
    }

    /// The constant function `1`.
    pub fn one(geometry: &TorusGeometry) -> Self {
        Self::from_pure(ConstForm::monomial(geometry, 0, 0, C64::new(1.0, 0.0)))
    }

    pub fn add(&mut self, f: ConstForm) {
        match self.pieces.get_mut(&(f.a, f.b)) {
            Some(existing) => existing.add_assign(&f),
            None => {
                self.pieces.insert((f.a, f.b), f);
            }
        }
    }

    pub fn piece(&self, a: usize, b: usize) -> Option<&ConstForm> {
        self.pieces.get(&(a, b))
    }

    pub fn pieces(&self) -> impl Iterator<Item = &ConstForm> {
        self.pieces.values()
    }

    pub fn wedge(&self, geometry: &TorusGeometry, other: &ConstMix) -> ConstMix {
        let mut out = ConstMix::new();
        for x in self.pieces.values() {
            for y in other.pieces.values() {
                if let Some(w) = wedge(geometry, x, y) {
                    out.add(w);
                }
            }
        }
        out
    }
}

/// The flat Kähler form `ω = √−1 Σ h_{ij} dz_i ∧ dz̄_j` as a constant form.
pub fn kahler_const(geometry: &TorusGeometry) -> ConstForm {
    let d = geometry.dim();
    let mut out = ConstForm::zero(geometry, 1, 1);
    let i_unit = C64::new(0.0, 1.0);
    for a in 0..d {
        for b in 0..d {
            let idx = geometry.mask_table(1).position(1 << a) * d + geometry.mask_table(1).position(1 << b);
            out.coeffs[idx] = i_unit * geometry.metric()[(a, b)];
        }
    }
    out
}

/// `ω` as a banded form.
pub fn kahler_form(geometry: &Arc<TorusGeometry>, band: u32) -> Result<FourierForm> {
    kahler_const(geometry).to_fourier(geometry, band)
}

/// `ω^pow`; `None` for powers past the top degree.
pub fn kahler_power(geometry: &TorusGeometry, pow: usize) -> Option<ConstForm> {
    let mut acc = ConstForm::monomial(geometry, 0, 0, C64::new(1.0, 0.0));
    let omega = kahler_const(geometry);
    for _ in 0..pow {
        acc = wedge(geometry, &acc, &omega)?;
    }
    Some(acc)
}

/// Matrix of `ω^pow ∧ (·)` from `(a,b)`-constants to `(a+pow,b+pow)`-constants,
/// or `None` when the target overflows.
pub fn lefschetz_matrix(geometry: &TorusGeometry, a: usize, b: usize, pow: usize) -> Option<CMatrix> {
    let d = geometry.dim();
    if a + pow > d || b + pow > d {
        return None;
    }
    let omega_pow = kahler_power(geometry, pow)?;
    let ta = geometry.mask_table(a);
    let tb = geometry.mask_table(b);
    let rows = geometry.mask_table(a + pow).len() * geometry.mask_table(b + pow).len();
    let cols = ta.len() * tb.len();
    let mut out = CMatrix::zeros(rows, cols);
    for (ip, &mi) in ta.masks.iter().enumerate() {
        for (jp, &mj) in tb.masks.iter().enumerate() {
            let col = ip * tb.len() + jp;
            let mono = ConstForm::monomial(geometry, mi, mj, C64::new(1.0, 0.0));
            if let Some(w) = wedge(geometry, &omega_pow, &mono) {
                for (r, &c) in w.coeffs.iter().enumerate() {
                    out[(r, col)] = c;
                }
            }
        }
    }
    Some(out)
}

/// Gram matrix of monomials of bidegree `(a,b)` in the flat metric.
fn gram_matrix(geometry: &TorusGeometry, a: usize, b: usize) -> CMatrix {
    let hg = geometry.hol_gram(a);
    let ag = geometry.anti_gram(b);
    let na = hg.nrows();
    let nb = ag.nrows();
    let mut m = CMatrix::zeros(na * nb, na * nb);
    for i in 0..na {
        for i2 in 0..na {
            for j in 0..nb {
                for j2 in 0..nb {
                    m[(i * nb + j, i2 * nb + j2)] = hg[(i, i2)] * ag[(j, j2)];
                }
            }
        }
    }
    m
}

/// Orthogonal projector (in the flat metric) onto the primitive subspace of
/// `(a,b)`-constants, `a + b = n ≤ d`: the kernel of `ω^{d−n+1} ∧ (·)`.
pub fn primitive_projector(geometry: &TorusGeometry, a: usize, b: usize) -> Result<CMatrix> {
    let d = geometry.dim();
    let n = a + b;
    if n > d {
        return Err(Error::DegreeError(format!("primitive subspace needs a+b ≤ d, got {n} > {d}")));
    }
    let dim = geometry.mask_table(a).len() * geometry.mask_table(b).len();
    let pow = d - n + 1;
    let Some(lef) = lefschetz_matrix(geometry, a, b, pow) else {
        // ω^{d−n+1} ∧ (·) lands in the zero bundle: everything is primitive.
        return Ok(CMatrix::identity(dim, dim));
    };
    let gram_src = gram_matrix(geometry, a, b);
    let gram_tgt = gram_matrix(geometry, a + pow, b + pow);
    let gram_src_inv = gram_src
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::InvalidGeometry("degenerate monomial Gram matrix".into()))?;
    // ker(L)^⊥ = range(L*) with L* = conj(G_src⁻¹ Lᵀ G_tgt) under the
    // convention ⟨x,y⟩ = Σ x_a ȳ_b G_{ab}.
    let lstar = (gram_src_inv * lef.transpose() * gram_tgt).map(|z| z.conj());
    let basis = gram_orthonormal_columns(&lstar, &gram_src);
    let mut projector = CMatrix::identity(dim, dim);
    for u in &basis {
        // x ↦ x − u ⟨x, u⟩ with ⟨x, u⟩ = Σ_c x_c conj((Gᵀ u)_c).
        let gu = gram_src.transpose() * u;
        for r in 0..dim {
            for c in 0..dim {
                projector[(r, c)] -= u[r] * gu[c].conj();
            }
        }
    }
    Ok(projector)
}

/// Gram–Schmidt over the columns of `m` in the inner product defined by
/// `gram`; near-zero columns are dropped.
fn gram_orthonormal_columns(m: &CMatrix, gram: &CMatrix) -> Vec<CVector> {
    let mut kept: Vec<CVector> = Vec::new();
    for c in 0..m.ncols() {
        let mut v: CVector = m.column(c).into_owned();
        let scale = gram_norm(&v, gram).max(1e-300);
        for u in &kept {
            let coeff = gram_inner(&v, u, gram);
            v -= u * coeff;
        }
        let norm = gram_norm(&v, gram);
        if norm > 1e-10 * scale.max(1.0) {
            kept.push(v / C64::new(norm, 0.0));
        }
    }
    kept
}

fn gram_inner(x: &CVector, y: &CVector, gram: &CMatrix) -> C64 {
    // ⟨x, y⟩ = Σ_{ab} x_a ȳ_b G_{ab} = Σ_b (Gᵀ x)_b ȳ_b.
    let gx = gram.transpose() * x;
    y.iter().zip(gx.iter()).map(|(yi, gi)| gi * yi.conj()).sum()
}

fn gram_norm(x: &CVector, gram: &CMatrix) -> f64 {
    gram_inner(x, x, gram).re.max(0.0).sqrt()
}

/// Canonical orthonormal basis of the primitive harmonic forms at the base
/// point, grouped by block: block `α` holds type `(n−α, α)`.
#[derive(Debug)]
pub struct PrimitiveBasis {
    geometry: Arc<TorusGeometry>,
    weight: usize,
    blocks: Vec<Vec<ConstForm>>,
    hodge_type: HodgeType,
}

impl PrimitiveBasis {
    pub fn new(geometry: Arc<TorusGeometry>, weight: usize) -> Result<Self> {
        let d = geometry.dim();
        if weight > d {
            return Err(Error::DegreeError(format!("weight {weight} exceeds dimension {d}")));
        }
        let mut blocks = Vec::with_capacity(weight + 1);
        for alpha in 0..=weight {
            blocks.push(primitive_block(&geometry, weight - alpha, alpha)?);
        }
        let hodge_numbers: Vec<usize> = blocks.iter().map(|b| b.len()).collect();
        let hodge_type = HodgeType::new(&hodge_numbers)?;
        Ok(Self { geometry, weight, blocks, hodge_type })
    }

    pub fn geometry(&self) -> &Arc<TorusGeometry> {
        &self.geometry
    }

    pub fn weight(&self) -> usize {
        self.weight
    }

    pub fn hodge_type(&self) -> &HodgeType {
        &self.hodge_type
    }

    pub fn block(&self, alpha: usize) -> &[ConstForm] {
        &self.blocks[alpha]
    }

    pub fn dim(&self) -> usize {
        self.hodge_type.dim()
    }

    /// Coordinates of a pure-type constant form in the block of its type,
    /// together with the reconstruction residual (which is nonzero when the
    /// form is not primitive or not of a block type).
    pub fn block_coordinates(&self, f: &ConstForm) -> Result<(usize, Vec<C64>, f64)> {
        let alpha = f.b;
        if f.a + f.b != self.weight || alpha > self.weight {
            return Err(Error::DegreeError(format!(
                "type ({},{}) does not belong to weight {}",
                f.a, f.b, self.weight
            )));
        }
        let basis = &self.blocks[alpha];
        let coords: Vec<C64> = basis.iter().map(|e| f.inner(&self.geometry, e)).collect();
        let mut residual = f.clone();
        for (c, e) in coords.iter().zip(basis.iter()) {
            residual.add_assign(&e.scale(-c));
        }
        Ok((alpha, coords, residual.norm(&self.geometry)))
    }

    /// Full `m`-dimensional coordinate row of a mixed constant form whose
    /// pieces are primitive of the blocks' types. Errors when some piece
    /// leaves the primitive subspace by more than `tol` (relative).
    pub fn full_coordinates(&self, mix: &ConstMix, tol: f64) -> Result<Vec<C64>> {
        let mut row = vec![C64::new(0.0, 0.0); self.dim()];
        let partition = self.hodge_type.partition();
        for piece in mix.pieces() {
            if piece.a + piece.b != self.weight {
                return Err(Error::DegreeError(format!(
                    "piece of degree ({},{}) in a weight-{} expansion",
                    piece.a, piece.b, self.weight
                )));
            }
            let (alpha, coords, residual) = self.block_coordinates(piece)?;
            let scale = piece.norm(&self.geometry);
            if residual > tol * scale.max(1.0) {
                return Err(Error::InvalidFrame(format!(
                    "piece of type ({},{}) is not primitive (residual {residual:e})",
                    piece.a, piece.b
                )));
            }
            let range = partition.range(alpha);
            for (slot, c) in range.zip(coords) {
                row[slot] = c;
            }
        }
        Ok(row)
    }

    /// Matrix of the antilinear conjugation in this basis: the conjugate of
    /// basis vector `r` expands as `Σ_l S_{rl} η_l`.
    pub fn real_structure(&self) -> Result<CMatrix> {
        let m = self.dim();
        let mut s = CMatrix::zeros(m, m);
        let partition = self.hodge_type.partition();
        for alpha in 0..=self.weight {
            for (offset, e) in self.blocks[alpha].iter().enumerate() {
                let row = partition.range(alpha).start + offset;
                let conj = e.conjugate(&self.geometry);
                let (beta, coords, residual) = self.block_coordinates(&conj)?;
                debug_assert_eq!(beta, self.weight - alpha);
                if residual > 1e-10 {
                    return Err(Error::InvalidFrame(
                        "conjugate of a primitive basis vector is not primitive".into(),
                    ));
                }
                let range = partition.range(beta);
                for (slot, c) in range.zip(coords) {
                    s[(row, slot)] = c;
                }
            }
        }
        Ok(s)
    }

    /// Intersection-form polarization in this basis:
    /// `Q_{rs} = (−1)^{n(n−1)/2} ∫ η_r ∧ η_s ∧ ω^{d−n}`.
    pub fn polarization_matrix(&self) -> Result<CMatrix> {
        let d = self.geometry.dim();
        let n = self.weight;
        let m = self.dim();
        let omega_pow = kahler_power(&self.geometry, d - n)
            .ok_or_else(|| Error::DegreeError("ω-power overflow".into()))?;
        let sign = if (n * n.saturating_sub(1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
        let volume = self.geometry.volume_factor();
        let flat: Vec<&ConstForm> = self.blocks.iter().flatten().collect();
        let mut q = CMatrix::zeros(m, m);
        let full = (1u32 << d) - 1;
        for (r, x) in flat.iter().enumerate() {
            for (s, y) in flat.iter().enumerate() {
                let Some(xy) = wedge(&self.geometry, x, y) else { continue };
                let Some(top) = wedge(&self.geometry, &xy, &omega_pow) else { continue };
                if top.a == d && top.b == d {
                    let coeff = top.coeff(&self.geometry, full, full);
                    q[(r, s)] = coeff * volume * sign;
                }
            }
        }
        Ok(q)
    }
}

/// Canonical primitive orthonormal basis of one `(a,b)` block.
fn primitive_block(geometry: &Arc<TorusGeometry>, a: usize, b: usize) -> Result<Vec<ConstForm>> {
    let projector = primitive_projector(geometry, a, b)?;
    let ta = geometry.mask_table(a);
    let tb = geometry.mask_table(b);
    let gram = gram_matrix(geometry, a, b);

    // Monomial order: mixed pairs (I ≠ J) first, then diagonal pairs, each
    // by mask position.
    let mut order: Vec<(usize, usize)> = Vec::new();
    for (ip, &mi) in ta.masks.iter().enumerate() {
        for (jp, &mj) in tb.masks.iter().enumerate() {
            if a != b || mi != mj {
                order.push((ip, jp));
            }
        }
    }
    if a == b {
        for (ip, &mi) in ta.masks.iter().enumerate() {
            for (jp, &mj) in tb.masks.iter().enumerate() {
                if mi == mj {
                    order.push((ip, jp));
                }
            }
        }
    }

    let nb = tb.len();
    let mut kept: Vec<CVector> = Vec::new();
    for (ip, jp) in order {
        let mut mono = CVector::zeros(ta.len() * nb);
        mono[ip * nb + jp] = C64::new(1.0, 0.0);
        let mut v = &projector * mono;
        let scale = gram_norm(&v, &gram);
        if scale <= 1e-12 {
            continue;
        }
        for u in &kept {
            let coeff = gram_inner(&v, u, &gram);
            v -= u * coeff;
        }
        let norm = gram_norm(&v, &gram);
        if norm > 1e-10 * scale.max(1.0) {
            v /= C64::new(norm, 0.0);
            // Phase convention: first nonzero coordinate real positive.
            if let Some(z) = v.iter().find(|z| z.norm() > 1e-12) {
                let phase = z / C64::new(z.norm(), 0.0);
                v /= phase;
            }
            kept.push(v);
        }
    }

    Ok(kept
        .into_iter()
        .map(|v| ConstForm { a, b, coeffs: v.iter().copied().collect() })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::operators::primitive_projection;

    fn geo(d: usize) -> Arc<TorusGeometry> {
        Arc::new(TorusGeometry::square(d).unwrap())
    }

    #[test]
    fn kahler_form_not_primitive() {
        let g = geo(2);
        let omega = kahler_form(&g, 1).unwrap();
        let projected = primitive_projection(&omega).unwrap();
        assert!(projected.l2_norm() < 1e-12);
    }

    #[test]
    fn mixed_monomial_is_primitive() {
        let g = geo(2);
        let f = FourierForm::monomial(Arc::clone(&g), 1, &[0; 4], 0b01, 0b10, C64::new(1.0, 2.0)).unwrap();
        let projected = primitive_projection(&f).unwrap();
        let diff = projected.sub(&f).unwrap();
        assert!(diff.l2_norm() < 1e-12);
    }

    #[test]
    fn nonconstant_modes_are_killed() {
        let g = geo(2);
        let f = FourierForm::monomial(Arc::clone(&g), 1, &[1, 0, 0, 0], 0b01, 0b10, C64::new(1.0, 0.0)).unwrap();
        assert!(primitive_projection(&f).unwrap().l2_norm() < 1e-15);
    }

    #[test]
    fn curve_cohomology_is_all_primitive() {
        let g = geo(1);
        let basis = PrimitiveBasis::new(Arc::clone(&g), 1).unwrap();
        assert_eq!(basis.hodge_type().hodge_numbers(), &[1, 1]);
        // η_(0) = dz, η_(1) = dz̄ after normalization.
        assert!((basis.block(0)[0].coeff(&g, 0b1, 0) - C64::new(1.0, 0.0)).norm() < 1e-14);
        assert!((basis.block(1)[0].coeff(&g, 0, 0b1) - C64::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn abelian_surface_primitive_basis() {
        let g = geo(2);
        let basis = PrimitiveBasis::new(Arc::clone(&g), 2).unwrap();
        assert_eq!(basis.hodge_type().hodge_numbers(), &[1, 3, 1]);
        // Ordered (1,1) block: dz₁∧dz̄₂, dz₂∧dz̄₁, then the traceless diagonal.
        let block = basis.block(1);
        assert!((block[0].coeff(&g, 0b01, 0b10) - C64::new(1.0, 0.0)).norm() < 1e-12);
        assert!((block[1].coeff(&g, 0b10, 0b01) - C64::new(1.0, 0.0)).norm() < 1e-12);
        let diag = &block[2];
        let inv_sqrt2 = 1.0 / 2.0f64.sqrt();
        assert!((diag.coeff(&g, 0b01, 0b01) - C64::new(inv_sqrt2, 0.0)).norm() < 1e-12);
        assert!((diag.coeff(&g, 0b10, 0b10) - C64::new(-inv_sqrt2, 0.0)).norm() < 1e-12);
        // Orthonormality.
        for (r, x) in block.iter().enumerate() {
            for (s, y) in block.iter().enumerate() {
                let expected = if r == s { 1.0 } else { 0.0 };
                assert!((x.inner(&g, y) - C64::new(expected, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn elliptic_polarization_and_real_structure() {
        let g = geo(1);
        let basis = PrimitiveBasis::new(Arc::clone(&g), 1).unwrap();
        let q = basis.polarization_matrix().unwrap();
        // Q(dz, dz̄) = ∫ dz∧dz̄ = −2i on the unit square torus.
        assert!((q[(0, 1)] - C64::new(0.0, -2.0)).norm() < 1e-12);
        assert!((q[(1, 0)] - C64::new(0.0, 2.0)).norm() < 1e-12);
        assert!(q[(0, 0)].norm() < 1e-14 && q[(1, 1)].norm() < 1e-14);

        let s = basis.real_structure().unwrap();
        // conj swaps dz and dz̄.
        assert!((s[(0, 1)] - C64::new(1.0, 0.0)).norm() < 1e-14);
        assert!((s[(1, 0)] - C64::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn surface_polarization_satisfies_bilinear_relations() {
        use crate::hodge::{
            check_first_bilinear_relation, check_second_bilinear_relation, HodgeFrame,
            Polarization, RealStructure,
        };
        let g = geo(2);
        let basis = PrimitiveBasis::new(Arc::clone(&g), 2).unwrap();
        let q = Polarization::for_weight(basis.polarization_matrix().unwrap(), 2, 1e-9).unwrap();
        let frame = HodgeFrame::new(CMatrix::identity(5, 5), basis.hodge_type().clone()).unwrap();
        let conj = RealStructure::new(basis.real_structure().unwrap(), 1e-9).unwrap();
        assert!(check_first_bilinear_relation(&frame, &q, 1e-9).unwrap());
        assert!(check_second_bilinear_relation(&frame, &q, &conj, 1e-9).unwrap());
    }
}
