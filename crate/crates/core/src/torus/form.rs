//! Band-limited differential forms on a flat torus.

use std::sync::Arc;

use super::geometry::TorusGeometry;
use crate::error::{Error, Result};
use crate::C64;

/// A `(p,q)`-form truncated to a finite Fourier band.
///
/// Coefficients are stored mode-major over the canonical monomial layout:
/// `[mode][I][J]` with `I` and `J` the mask positions of the strictly
/// increasing holomorphic and antiholomorphic multi-indices. Beyond the
/// stored band the form is zero; `truncation_residual` accumulates an upper
/// bound on the L² mass discarded by band reductions.
#[derive(Debug, Clone)]
pub struct FourierForm {
    geometry: Arc<TorusGeometry>,
    band: u32,
    p: usize,
    q: usize,
    coeffs: Vec<C64>,
    truncation_residual: f64,
}

impl FourierForm {
    pub fn zero(geometry: Arc<TorusGeometry>, band: u32, p: usize, q: usize) -> Result<Self> {
        let d = geometry.dim();
        if p > d || q > d {
            return Err(Error::DegreeError(format!("bidegree ({p},{q}) on a dimension-{d} torus")));
        }
        let len = geometry.mode_count(band)
            * geometry.mask_table(p).len()
            * geometry.mask_table(q).len();
        Ok(Self { geometry, band, p, q, coeffs: vec![C64::new(0.0, 0.0); len], truncation_residual: 0.0 })
    }

    /// A single-monomial form `c · e_k dz_I ∧ dz̄_J` given by masks.
    pub fn monomial(
        geometry: Arc<TorusGeometry>,
        band: u32,
        k: &[i64],
        mask_i: u32,
        mask_j: u32,
        c: C64,
    ) -> Result<Self> {
        let p = mask_i.count_ones() as usize;
        let q = mask_j.count_ones() as usize;
        let mut f = Self::zero(geometry, band, p, q)?;
        let mode = f
            .geometry
            .mode_index(band, k)
            .ok_or_else(|| Error::ShapeMismatch("mode outside band".into()))?;
        let idx = f.flat_index(mode, f.geometry.mask_table(p).position(mask_i), f.geometry.mask_table(q).position(mask_j));
        f.coeffs[idx] = c;
        Ok(f)
    }

    pub fn geometry(&self) -> &Arc<TorusGeometry> {
        &self.geometry
    }

    pub fn band(&self) -> u32 {
        self.band
    }

    pub fn bidegree(&self) -> (usize, usize) {
        (self.p, self.q)
    }

    pub fn truncation_residual(&self) -> f64 {
        self.truncation_residual
    }

    pub(crate) fn set_truncation_residual(&mut self, r: f64) {
        self.truncation_residual = r;
    }

    pub fn hol_count(&self) -> usize {
        self.geometry.mask_table(self.p).len()
    }

    pub fn anti_count(&self) -> usize {
        self.geometry.mask_table(self.q).len()
    }

    #[inline]
    pub(crate) fn flat_index(&self, mode: usize, i_pos: usize, j_pos: usize) -> usize {
        (mode * self.hol_count() + i_pos) * self.anti_count() + j_pos
    }

    pub fn coeff(&self, mode: usize, i_pos: usize, j_pos: usize) -> C64 {
        self.coeffs[self.flat_index(mode, i_pos, j_pos)]
    }

    pub(crate) fn coeff_mut(&mut self, mode: usize, i_pos: usize, j_pos: usize) -> &mut C64 {
        let idx = self.flat_index(mode, i_pos, j_pos);
        &mut self.coeffs[idx]
    }

    /// Coefficient addressed by lattice vector and index masks.
    pub fn coeff_at(&self, k: &[i64], mask_i: u32, mask_j: u32) -> C64 {
        match self.geometry.mode_index(self.band, k) {
            None => C64::new(0.0, 0.0),
            Some(mode) => self.coeff(
                mode,
                self.geometry.mask_table(self.p).position(mask_i),
                self.geometry.mask_table(self.q).position(mask_j),
            ),
        }
    }

    pub fn set_coeff_at(&mut self, k: &[i64], mask_i: u32, mask_j: u32, c: C64) -> Result<()> {
        let mode = self
            .geometry
            .mode_index(self.band, k)
            .ok_or_else(|| Error::ShapeMismatch("mode outside band".into()))?;
        let ip = self.geometry.mask_table(self.p).position(mask_i);
        let jp = self.geometry.mask_table(self.q).position(mask_j);
        *self.coeff_mut(mode, ip, jp) = c;
        Ok(())
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [C64] {
        &mut self.coeffs
    }

    /// The constant (harmonic) part as a monomial-coefficient vector of
    /// length `hol_count × anti_count`.
    pub fn constant_part(&self) -> Vec<C64> {
        let zero_mode = self.geometry.zero_mode_index(self.band);
        let np = self.hol_count();
        let nq = self.anti_count();
        let mut out = Vec::with_capacity(np * nq);
        for i in 0..np {
            for j in 0..nq {
                out.push(self.coeff(zero_mode, i, j));
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = self.clone();
        for c in &mut out.coeffs {
            *c *= s;
        }
        out
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if !self.geometry.compatible(&other.geometry) {
            return Err(Error::ShapeMismatch("forms live on different tori".into()));
        }
        if self.bidegree() != other.bidegree() {
            return Err(Error::ShapeMismatch(format!(
                "bidegree {:?} vs {:?}",
                self.bidegree(),
                other.bidegree()
            )));
        }
        Ok(())
    }

    /// Re-indexes into a larger band; coefficients are preserved exactly.
    pub fn extend_band(&self, band: u32) -> Result<Self> {
        if band < self.band {
            return Err(Error::ShapeMismatch("extend_band cannot shrink".into()));
        }
        if band == self.band {
            return Ok(self.clone());
        }
        let mut out = Self::zero(Arc::clone(&self.geometry), band, self.p, self.q)?;
        out.truncation_residual = self.truncation_residual;
        let np = self.hol_count();
        let nq = self.anti_count();
        let mut k = vec![0i64; 2 * self.geometry.dim()];
        for mode in 0..self.geometry.mode_count(self.band) {
            self.geometry.mode_at(self.band, mode, &mut k);
            let target = self.geometry.mode_index(band, &k).expect("larger band");
            for i in 0..np {
                for j in 0..nq {
                    *out.coeff_mut(target, i, j) = self.coeff(mode, i, j);
                }
            }
        }
        Ok(out)
    }

    /// Truncates to a smaller band, returning the form and the recorded mass
    /// of the discarded tail. The record uses the first-order Sobolev weight
    /// `(1 + λ_k)^{1/2}` per mode so that it also bounds `‖∂ tail‖` and
    /// `‖∂̄ tail‖`, which is what downstream obstruction residuals see. The
    /// recorded mass is added to the result's `truncation_residual`.
    pub fn truncate_band(&self, band: u32) -> Result<(Self, f64)> {
        if band >= self.band {
            return Ok((self.clone(), 0.0));
        }
        let mut kept = Self::zero(Arc::clone(&self.geometry), band, self.p, self.q)?;
        let mut tail = Self::zero(Arc::clone(&self.geometry), self.band, self.p, self.q)?;
        let np = self.hol_count();
        let nq = self.anti_count();
        let mut k = vec![0i64; 2 * self.geometry.dim()];
        for mode in 0..self.geometry.mode_count(self.band) {
            self.geometry.mode_at(self.band, mode, &mut k);
            match self.geometry.mode_index(band, &k) {
                Some(target) => {
                    for i in 0..np {
                        for j in 0..nq {
                            *kept.coeff_mut(target, i, j) = self.coeff(mode, i, j);
                        }
                    }
                }
                None => {
                    for i in 0..np {
                        for j in 0..nq {
                            *tail.coeff_mut(mode, i, j) = self.coeff(mode, i, j);
                        }
                    }
                }
            }
        }
        let dropped = tail.sobolev_norm();
        kept.truncation_residual = self.truncation_residual + dropped;
        Ok((kept, dropped))
    }

    /// First-order Sobolev norm `(Σ_k (1 + λ_k) ‖f_k‖²)^{1/2}`; dominates
    /// the L² norms of `f`, `∂f` and `∂̄f`.
    pub fn sobolev_norm(&self) -> f64 {
        let table = self.geometry.frequency_table(self.band);
        let hg = self.geometry.hol_gram(self.p);
        let ag = self.geometry.anti_gram(self.q);
        let np = self.hol_count();
        let nq = self.anti_count();
        let mut acc = 0.0f64;
        for mode in 0..self.geometry.mode_count(self.band) {
            let mut pointwise = C64::new(0.0, 0.0);
            for i in 0..np {
                for i2 in 0..np {
                    let g = hg[(i, i2)];
                    if g.re == 0.0 && g.im == 0.0 {
                        continue;
                    }
                    for j in 0..nq {
                        for j2 in 0..nq {
                            pointwise +=
                                self.coeff(mode, i, j) * self.coeff(mode, i2, j2).conj() * g * ag[(j, j2)];
                        }
                    }
                }
            }
            acc += (1.0 + table.lambda(mode)) * pointwise.re.max(0.0);
        }
        acc.sqrt()
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let band = self.band.max(other.band);
        let mut out = self.extend_band(band)?;
        let rhs = other.extend_band(band)?;
        for (a, b) in out.coeffs.iter_mut().zip(rhs.coeffs.iter()) {
            *a += b;
        }
        out.truncation_residual = self.truncation_residual + other.truncation_residual;
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    /// L² inner product `⟨self, other⟩` with unit total measure.
    pub fn inner_product(&self, other: &Self) -> Result<C64> {
        self.check_compatible(other)?;
        let band = self.band.max(other.band);
        let lhs = self.extend_band(band)?;
        let rhs = other.extend_band(band)?;
        let hg = self.geometry.hol_gram(self.p);
        let ag = self.geometry.anti_gram(self.q);
        let np = lhs.hol_count();
        let nq = lhs.anti_count();
        let mut acc = C64::new(0.0, 0.0);
        for mode in 0..self.geometry.mode_count(band) {
            for i in 0..np {
                for i2 in 0..np {
                    let g = hg[(i, i2)];
                    if g.re == 0.0 && g.im == 0.0 {
                        continue;
                    }
                    for j in 0..nq {
                        for j2 in 0..nq {
                            let a = ag[(j, j2)];
                            if a.re == 0.0 && a.im == 0.0 {
                                continue;
                            }
                            acc += lhs.coeff(mode, i, j) * rhs.coeff(mode, i2, j2).conj() * g * a;
                        }
                    }
                }
            }
        }
        Ok(acc)
    }

    pub fn l2_norm_sqr(&self) -> f64 {
        self.inner_product(self).map(|z| z.re.max(0.0)).unwrap_or(0.0)
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sqr().sqrt()
    }

    /// Realness predicate for `(p,p)`-forms:
    /// `c(−k, J, I) = (−1)^{p²} conj(c(k, I, J))` within `tol`.
    pub fn is_real(&self, tol: f64) -> Result<bool> {
        if self.p != self.q {
            return Err(Error::DegreeError("realness requires p = q".into()));
        }
        let sign = if (self.p * self.q) % 2 == 0 { 1.0 } else { -1.0 };
        let n = self.hol_count();
        let mut k = vec![0i64; 2 * self.geometry.dim()];
        let mut neg = vec![0i64; 2 * self.geometry.dim()];
        for mode in 0..self.geometry.mode_count(self.band) {
            self.geometry.mode_at(self.band, mode, &mut k);
            for (slot, &c) in k.iter().enumerate() {
                neg[slot] = -c;
            }
            let neg_mode = self.geometry.mode_index(self.band, &neg).expect("band symmetric");
            for i in 0..n {
                for j in 0..n {
                    let lhs = self.coeff(neg_mode, j, i);
                    let rhs = self.coeff(mode, i, j).conj() * sign;
                    if (lhs - rhs).norm() > tol {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    }
}

/// A finite collection of forms of distinct bidegrees, as produced by
/// `e^{i_φ}` and the operators acting on it. Pieces are kept sorted by
/// descending holomorphic degree.
#[derive(Debug, Clone)]
pub struct GradedForm {
    pieces: Vec<FourierForm>,
}

impl GradedForm {
    pub fn new() -> Self {
        Self { pieces: Vec::new() }
    }

    pub fn from_form(f: FourierForm) -> Self {
        Self { pieces: vec![f] }
    }

    pub fn pieces(&self) -> &[FourierForm] {
        &self.pieces
    }

    pub fn piece(&self, p: usize, q: usize) -> Option<&FourierForm> {
        self.pieces.iter().find(|f| f.bidegree() == (p, q))
    }

    pub fn add_piece(&mut self, f: FourierForm) -> Result<()> {
        match self.pieces.iter_mut().find(|g| g.bidegree() == f.bidegree()) {
            Some(existing) => {
                *existing = existing.add(&f)?;
            }
            None => {
                self.pieces.push(f);
                self.pieces.sort_by(|a, b| b.bidegree().0.cmp(&a.bidegree().0).then(a.bidegree().1.cmp(&b.bidegree().1)));
            }
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &GradedForm) -> Result<()> {
        for f in &other.pieces {
            self.add_piece(f.clone())?;
        }
        Ok(())
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { pieces: self.pieces.iter().map(|f| f.scale(s)).collect() }
    }

    pub fn sub(&self, other: &GradedForm) -> Result<GradedForm> {
        let mut out = self.clone();
        out.merge(&other.scale(C64::new(-1.0, 0.0)))?;
        Ok(out)
    }

    pub fn l2_norm_sqr(&self) -> f64 {
        self.pieces.iter().map(|f| f.l2_norm_sqr()).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sqr().sqrt()
    }

    pub fn truncation_residual(&self) -> f64 {
        self.pieces.iter().map(|f| f.truncation_residual()).sum()
    }
}

impl Default for GradedForm {
    fn default() -> Self {
        Self::new()
    }
}
