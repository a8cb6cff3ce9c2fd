//! Flat torus geometry: lattice frequencies, metric Gram data, spectra.
//!
//! The torus is `ℂ^d / (ℤ^d + τ ℤ^d)` in real coordinates `(x, y) ∈ ℝ^{2d}`
//! with `z = x + τ y`. A lattice mode `k = (a, b) ∈ ℤ^{2d}` is the character
//! `e_k = exp(2πi (aᵀx + bᵀy))`, and with `W = (τ − τ̄)^{-1}`:
//!
//! * `∂ e_k / ∂z̄ = ν(k) e_k` with `ν(k) = 2πi Wᵀ (τᵀ a − b)`,
//! * `∂ e_k / ∂z  = μ(k) e_k` with `μ(k) = 2πi a − ν(k)`.
//!
//! The metric on `T^{1,0}` is the Hermitian positive-definite matrix `h`
//! whose coefficients also define the flat Kähler form
//! `ω = √−1 Σ h_{ij} dz_i ∧ dz̄_j`. L² inner products are taken with unit
//! total measure, and integrals of top forms pick up the lattice-chart
//! Jacobian `det(−2i·Im τ)`.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use nalgebra::DMatrix;

use super::multi_index::{bits, MaskTable};
use crate::error::{Error, Result};
use crate::{C64, CMatrix};

const TWO_PI: f64 = std::f64::consts::TAU;

/// Immutable geometric data of a flat complex torus.
#[derive(Debug)]
pub struct TorusGeometry {
    dim: usize,
    tau: CMatrix,
    metric: CMatrix,
    /// `Wᵀ` with `W = (τ − τ̄)^{-1}`.
    w_t: CMatrix,
    /// `h^{-1}`.
    metric_inv: CMatrix,
    /// Cholesky factor `L` with `h = L L^H` and its inverse adjoint.
    chol_l: CMatrix,
    chol_l_inv_h: CMatrix,
    tables: Vec<MaskTable>,
    hol_gram: Vec<CMatrix>,
    hol_gram_inv: Vec<CMatrix>,
    anti_gram: Vec<CMatrix>,
    anti_gram_inv: Vec<CMatrix>,
    freq_cache: RwLock<HashMap<u32, Arc<FrequencyTable>>>,
}

/// Frequencies and Laplacian eigenvalues for every mode of one band.
#[derive(Debug)]
pub struct FrequencyTable {
    dim: usize,
    /// Holomorphic frequencies, `modes × d`.
    mu: Vec<C64>,
    /// Antiholomorphic frequencies, `modes × d`.
    nu: Vec<C64>,
    /// `∂̄`-Laplacian eigenvalues per mode.
    lambda: Vec<f64>,
}

impl FrequencyTable {
    pub fn mu(&self, mode: usize) -> &[C64] {
        &self.mu[mode * self.dim..(mode + 1) * self.dim]
    }

    pub fn nu(&self, mode: usize) -> &[C64] {
        &self.nu[mode * self.dim..(mode + 1) * self.dim]
    }

    pub fn lambda(&self, mode: usize) -> f64 {
        self.lambda[mode]
    }
}

impl TorusGeometry {
    pub fn new(tau: CMatrix, metric: CMatrix) -> Result<Self> {
        let d = tau.nrows();
        if !tau.is_square() || !metric.is_square() || metric.nrows() != d {
            return Err(Error::InvalidGeometry("τ and metric must be d×d".into()));
        }
        if d == 0 || d > 8 {
            return Err(Error::InvalidGeometry(format!("dimension {d} out of supported range 1..=8")));
        }

        let im_tau = tau.map(|z| z.im);
        let sym = (&im_tau + im_tau.transpose()) * 0.5;
        let eig = DMatrix::from(sym).symmetric_eigen();
        if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
            return Err(Error::InvalidGeometry("Im τ is not positive definite".into()));
        }

        let herm_defect = (&metric - metric.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        let metric_scale = metric.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
        if herm_defect > 1e-12 * metric_scale {
            return Err(Error::InvalidGeometry("metric is not Hermitian".into()));
        }
        let meig = metric.clone().symmetric_eigen();
        if meig.eigenvalues.iter().any(|&l| l <= 0.0) {
            return Err(Error::InvalidGeometry("metric is not positive definite".into()));
        }

        let two_i_im = &tau - tau.map(|z| z.conj());
        let w = two_i_im
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidGeometry("τ − τ̄ is singular".into()))?;
        let metric_inv = metric
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidGeometry("metric is singular".into()))?;

        let chol = metric
            .clone()
            .cholesky()
            .ok_or_else(|| Error::InvalidGeometry("metric admits no Cholesky factor".into()))?;
        let chol_l: CMatrix = chol.l();
        let chol_l_inv_h = chol_l
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidGeometry("Cholesky factor is singular".into()))?
            .adjoint();

        // Dual Gram of a Hermitian Gram is the (Hermitian) inverse itself:
        // ⟨dz_i, dz_j⟩ = (h^{-1})_{ij}; conjugating, ⟨dz̄_i, dz̄_j⟩ = (h^{-1})_{ji}.
        let hol_gram1 = metric_inv.clone();
        let anti_gram1 = metric_inv.transpose();

        // Tables reach two sizes past d so degree-overflow spaces exist as
        // empty (rank-zero) index sets.
        let tables: Vec<MaskTable> = (0..=d + 2).map(|p| MaskTable::new(d, p)).collect();
        let mut hol_gram = Vec::with_capacity(d + 3);
        let mut hol_gram_inv = Vec::with_capacity(d + 3);
        let mut anti_gram = Vec::with_capacity(d + 3);
        let mut anti_gram_inv = Vec::with_capacity(d + 3);
        for p in 0..=d + 2 {
            let hg = minor_gram(&hol_gram1, &tables[p]);
            let ag = minor_gram(&anti_gram1, &tables[p]);
            let hgi = hg
                .clone()
                .try_inverse()
                .ok_or_else(|| Error::InvalidGeometry("degenerate form metric".into()))?;
            let agi = ag
                .clone()
                .try_inverse()
                .ok_or_else(|| Error::InvalidGeometry("degenerate form metric".into()))?;
            hol_gram.push(hg);
            hol_gram_inv.push(hgi);
            anti_gram.push(ag);
            anti_gram_inv.push(agi);
        }

        Ok(Self {
            dim: d,
            tau,
            metric,
            w_t: w.transpose(),
            metric_inv,
            chol_l,
            chol_l_inv_h,
            tables,
            hol_gram,
            hol_gram_inv,
            anti_gram,
            anti_gram_inv,
            freq_cache: RwLock::new(HashMap::new()),
        })
    }

    /// Square torus `ℂ^d / (ℤ^d + i ℤ^d)` with the identity metric.
    pub fn square(d: usize) -> Result<Self> {
        let i = C64::new(0.0, 1.0);
        Self::new(CMatrix::identity(d, d) * i, CMatrix::identity(d, d))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tau(&self) -> &CMatrix {
        &self.tau
    }

    /// Metric coefficients `h`; also the Kähler-form coefficients.
    pub fn metric(&self) -> &CMatrix {
        &self.metric
    }

    pub fn metric_inv(&self) -> &CMatrix {
        &self.metric_inv
    }

    pub fn cholesky_l(&self) -> &CMatrix {
        &self.chol_l
    }

    pub fn cholesky_l_inv_h(&self) -> &CMatrix {
        &self.chol_l_inv_h
    }

    pub fn mask_table(&self, size: usize) -> &MaskTable {
        &self.tables[size]
    }

    pub fn hol_gram(&self, p: usize) -> &CMatrix {
        &self.hol_gram[p]
    }

    pub fn hol_gram_inv(&self, p: usize) -> &CMatrix {
        &self.hol_gram_inv[p]
    }

    pub fn anti_gram(&self, q: usize) -> &CMatrix {
        &self.anti_gram[q]
    }

    pub fn anti_gram_inv(&self, q: usize) -> &CMatrix {
        &self.anti_gram_inv[q]
    }

    /// `∫ dz_1∧…∧dz_d∧dz̄_1∧…∧dz̄_d` in the complex orientation
    /// (`dx_1∧dy_1∧…∧dx_d∧dy_d` positive): the chart Jacobian
    /// `(−2i)^d det(Im τ)` times the interleaving sign `(−1)^{d(d−1)/2}`.
    pub fn volume_factor(&self) -> C64 {
        let minus_two_i = C64::new(0.0, -2.0);
        let im_tau = CMatrix::from_iterator(
            self.dim,
            self.dim,
            self.tau.iter().map(|z| C64::new(z.im, 0.0)),
        );
        let interleave = if (self.dim * (self.dim - 1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
        minus_two_i.powu(self.dim as u32) * im_tau.determinant() * interleave
    }

    /// Structural compatibility of two geometries (same τ and metric bits).
    pub fn compatible(&self, other: &TorusGeometry) -> bool {
        std::ptr::eq(self, other)
            || (self.dim == other.dim && self.tau == other.tau && self.metric == other.metric)
    }

    // --- mode bookkeeping -------------------------------------------------

    pub fn mode_count(&self, band: u32) -> usize {
        (2 * band as usize + 1).pow(2 * self.dim as u32)
    }

    /// Writes the `2d` lattice components of mode `index` into `out`.
    pub fn mode_at(&self, band: u32, index: usize, out: &mut [i64]) {
        let side = 2 * band as usize + 1;
        let mut rest = index;
        for slot in (0..2 * self.dim).rev() {
            out[slot] = (rest % side) as i64 - band as i64;
            rest /= side;
        }
        debug_assert_eq!(rest, 0);
    }

    pub fn mode_index(&self, band: u32, k: &[i64]) -> Option<usize> {
        let side = 2 * band as usize + 1;
        let mut index = 0usize;
        for &c in k {
            if c.unsigned_abs() > band as u64 {
                return None;
            }
            index = index * side + (c + band as i64) as usize;
        }
        Some(index)
    }

    /// Index of the constant mode `k = 0`.
    pub fn zero_mode_index(&self, band: u32) -> usize {
        self.mode_count(band) / 2
    }

    // --- spectra ----------------------------------------------------------

    /// Frequencies `(μ(k), ν(k))` of one lattice mode.
    pub fn frequencies(&self, k: &[i64]) -> (Vec<C64>, Vec<C64>) {
        let d = self.dim;
        let a: Vec<C64> = k[..d].iter().map(|&x| C64::new(x as f64, 0.0)).collect();
        let b: Vec<C64> = k[d..].iter().map(|&x| C64::new(x as f64, 0.0)).collect();
        // τᵀ a − b, then ν = 2πi Wᵀ (…), μ = 2πi a − ν.
        let mut t = vec![C64::new(0.0, 0.0); d];
        for i in 0..d {
            let mut acc = -b[i];
            for j in 0..d {
                acc += self.tau[(j, i)] * a[j];
            }
            t[i] = acc;
        }
        let two_pi_i = C64::new(0.0, TWO_PI);
        let mut nu = vec![C64::new(0.0, 0.0); d];
        for i in 0..d {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..d {
                acc += self.w_t[(i, j)] * t[j];
            }
            nu[i] = two_pi_i * acc;
        }
        let mu: Vec<C64> = (0..d).map(|i| two_pi_i * a[i] - nu[i]).collect();
        (mu, nu)
    }

    /// `∂̄`-Laplacian eigenvalue of a mode: `Σ_{ij} ν_i ν̄_j ⟨dz̄_i, dz̄_j⟩`
    /// with `⟨dz̄_i, dz̄_j⟩ = (h^{-1})_{ji}`.
    pub fn laplacian_eigenvalue(&self, nu: &[C64]) -> f64 {
        let d = self.dim;
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..d {
            for j in 0..d {
                acc += self.metric_inv[(j, i)] * nu[i] * nu[j].conj();
            }
        }
        acc.re
    }

    /// Cached per-band frequency table.
    pub fn frequency_table(&self, band: u32) -> Arc<FrequencyTable> {
        if let Some(t) = self.freq_cache.read().unwrap().get(&band) {
            return Arc::clone(t);
        }
        let d = self.dim;
        let count = self.mode_count(band);
        let mut mu = Vec::with_capacity(count * d);
        let mut nu = Vec::with_capacity(count * d);
        let mut lambda = Vec::with_capacity(count);
        let mut k = vec![0i64; 2 * d];
        for idx in 0..count {
            self.mode_at(band, idx, &mut k);
            let (m, n) = self.frequencies(&k);
            lambda.push(self.laplacian_eigenvalue(&n));
            mu.extend_from_slice(&m);
            nu.extend_from_slice(&n);
        }
        let table = Arc::new(FrequencyTable { dim: d, mu, nu, lambda });
        self.freq_cache.write().unwrap().insert(band, Arc::clone(&table));
        table
    }
}

/// Gram matrix of wedge monomials: `det` of the 1-form Gram minor.
fn minor_gram(gram1: &CMatrix, table: &MaskTable) -> CMatrix {
    let n = table.len();
    let mut out = CMatrix::zeros(n, n);
    for (r, &ma) in table.masks.iter().enumerate() {
        let rows: Vec<usize> = bits(ma).collect();
        for (c, &mb) in table.masks.iter().enumerate() {
            let cols: Vec<usize> = bits(mb).collect();
            let k = rows.len();
            let minor = CMatrix::from_fn(k, k, |s, t| gram1[(rows[s], cols[t])]);
            out[(r, c)] = minor.determinant();
        }
    }
    out
}
