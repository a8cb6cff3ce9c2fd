//! Dolbeault operators, adjoints, Green operator and projections.
//!
//! Everything acts mode by mode. With constant coefficients the monomial
//! frames are parallel, so each operator is a small matrix on the
//! `C(d,p) × C(d,q)` coefficient space of one mode, and the `∂̄`-Laplacian is
//! the scalar `λ_k` from the geometry on every bidegree.

use std::sync::Arc;

use super::form::{FourierForm, GradedForm};
use super::multi_index::insert;
use crate::error::{Error, Result};
use crate::{C64, CMatrix};

/// `∂̄`: coefficient-wise multiplication by the antiholomorphic frequency
/// with antisymmetrization, `(p,q) → (p,q+1)`.
pub fn dbar(f: &FourierForm) -> Result<FourierForm> {
    let (p, q) = f.bidegree();
    let d = f.geometry().dim();
    if q >= d {
        return Err(Error::DegreeError(format!(
            "∂̄ target ({p},{}) is not representable on a dimension-{d} torus",
            q + 1
        )));
    }
    let geometry = Arc::clone(f.geometry());
    let mut out = FourierForm::zero(Arc::clone(&geometry), f.band(), p, q + 1)?;
    out.set_truncation_residual(f.truncation_residual());
    let table = geometry.frequency_table(f.band());
    let tab_q = geometry.mask_table(q);
    let tab_q1 = geometry.mask_table(q + 1);
    let np = f.hol_count();
    let global_sign = if p % 2 == 0 { 1.0 } else { -1.0 };
    for mode in 0..geometry.mode_count(f.band()) {
        let nu = table.nu(mode);
        for i in 0..np {
            for (j_pos, &mask_j) in tab_q.masks.iter().enumerate() {
                let c = f.coeff(mode, i, j_pos);
                if c.re == 0.0 && c.im == 0.0 {
                    continue;
                }
                for (j, &freq) in nu.iter().enumerate() {
                    if let Some((sign, merged)) = insert(mask_j, j) {
                        *out.coeff_mut(mode, i, tab_q1.position(merged)) +=
                            c * freq * (sign * global_sign);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// `∂`: holomorphic counterpart, `(p,q) → (p+1,q)`.
pub fn partial(f: &FourierForm) -> Result<FourierForm> {
    let (p, q) = f.bidegree();
    let d = f.geometry().dim();
    if p >= d {
        return Err(Error::DegreeError(format!(
            "∂ target ({},{q}) is not representable on a dimension-{d} torus",
            p + 1
        )));
    }
    let geometry = Arc::clone(f.geometry());
    let mut out = FourierForm::zero(Arc::clone(&geometry), f.band(), p + 1, q)?;
    out.set_truncation_residual(f.truncation_residual());
    let table = geometry.frequency_table(f.band());
    let tab_p = geometry.mask_table(p);
    let tab_p1 = geometry.mask_table(p + 1);
    let nq = f.anti_count();
    for mode in 0..geometry.mode_count(f.band()) {
        let mu = table.mu(mode);
        for (i_pos, &mask_i) in tab_p.masks.iter().enumerate() {
            for j in 0..nq {
                let c = f.coeff(mode, i_pos, j);
                if c.re == 0.0 && c.im == 0.0 {
                    continue;
                }
                for (i, &freq) in mu.iter().enumerate() {
                    if let Some((sign, merged)) = insert(mask_i, i) {
                        *out.coeff_mut(mode, tab_p1.position(merged), j) += c * freq * sign;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Formal L² adjoint of `∂̄`, `(p,q) → (p,q−1)`. Degree underflow returns
/// the zero form at the input bidegree.
pub fn dbar_star(f: &FourierForm) -> Result<FourierForm> {
    let (p, q) = f.bidegree();
    let geometry = Arc::clone(f.geometry());
    if q == 0 {
        return FourierForm::zero(geometry, f.band(), p, 0);
    }
    let mut out = FourierForm::zero(Arc::clone(&geometry), f.band(), p, q - 1)?;
    out.set_truncation_residual(f.truncation_residual());
    let table = geometry.frequency_table(f.band());
    let np = f.hol_count();
    let global_sign = if p % 2 == 0 { 1.0 } else { -1.0 };
    // ∂̄ = (−1)^p · (id ⊗ D_ν) on the hol ⊗ anti factorization, so the
    // adjoint is (−1)^p · (id ⊗ M_{q−1}^{-1} D_ν^H M_q).
    let m_small_inv = geometry.anti_gram_inv(q - 1);
    let m_big = geometry.anti_gram(q);
    let tab_qm1 = geometry.mask_table(q - 1);
    let tab_q = geometry.mask_table(q);
    let nq = tab_q.len();
    let nqm1 = tab_qm1.len();
    for mode in 0..geometry.mode_count(f.band()) {
        let nu = table.nu(mode);
        let dmat = frequency_insert_matrix(nu, tab_qm1, tab_q);
        // With ⟨x,y⟩ = Σ x_a ȳ_b G_{ab}, the adjoint of D is
        // D* = conj(G_small⁻¹ Dᵀ G_big).
        let a = (m_small_inv * dmat.transpose() * m_big).map(|z| z.conj());
        for i in 0..np {
            for jt in 0..nqm1 {
                let mut acc = C64::new(0.0, 0.0);
                for js in 0..nq {
                    let w = a[(jt, js)];
                    if w.re == 0.0 && w.im == 0.0 {
                        continue;
                    }
                    acc += w * f.coeff(mode, i, js);
                }
                *out.coeff_mut(mode, i, jt) += acc * global_sign;
            }
        }
    }
    Ok(out)
}

/// Formal L² adjoint of `∂`, `(p,q) → (p−1,q)`. Degree underflow returns
/// the zero form at the input bidegree.
pub fn partial_star(f: &FourierForm) -> Result<FourierForm> {
    let (p, q) = f.bidegree();
    let geometry = Arc::clone(f.geometry());
    if p == 0 {
        return FourierForm::zero(geometry, f.band(), 0, q);
    }
    let mut out = FourierForm::zero(Arc::clone(&geometry), f.band(), p - 1, q)?;
    out.set_truncation_residual(f.truncation_residual());
    let table = geometry.frequency_table(f.band());
    let nq = f.anti_count();
    let m_small_inv = geometry.hol_gram_inv(p - 1);
    let m_big = geometry.hol_gram(p);
    let tab_pm1 = geometry.mask_table(p - 1);
    let tab_p = geometry.mask_table(p);
    let np = tab_p.len();
    let npm1 = tab_pm1.len();
    for mode in 0..geometry.mode_count(f.band()) {
        let mu = table.mu(mode);
        let dmat = frequency_insert_matrix(mu, tab_pm1, tab_p);
        let a = (m_small_inv * dmat.transpose() * m_big).map(|z| z.conj());
        for it in 0..npm1 {
            for j in 0..nq {
                let mut acc = C64::new(0.0, 0.0);
                for is in 0..np {
                    let w = a[(it, is)];
                    if w.re == 0.0 && w.im == 0.0 {
                        continue;
                    }
                    acc += w * f.coeff(mode, is, j);
                }
                *out.coeff_mut(mode, it, j) += acc;
            }
        }
    }
    Ok(out)
}

/// Matrix of `c_A ↦ Σ_j freq_j e_j ∧ c_A` between mask tables of sizes
/// `s` and `s+1` (insert-sign convention, no global sign).
fn frequency_insert_matrix(
    freq: &[C64],
    from: &super::multi_index::MaskTable,
    to: &super::multi_index::MaskTable,
) -> CMatrix {
    let mut m = CMatrix::zeros(to.len(), from.len());
    for (col, &mask) in from.masks.iter().enumerate() {
        for (j, &w) in freq.iter().enumerate() {
            if let Some((sign, merged)) = insert(mask, j) {
                m[(to.position(merged), col)] += w * sign;
            }
        }
    }
    m
}

/// Green operator of the `∂̄`-Laplacian: zero on the constant mode, division
/// by `λ_k` elsewhere.
pub fn green(f: &FourierForm) -> Result<FourierForm> {
    let geometry = Arc::clone(f.geometry());
    let table = geometry.frequency_table(f.band());
    let zero_mode = geometry.zero_mode_index(f.band());
    let np = f.hol_count();
    let nq = f.anti_count();
    let mut out = f.clone();
    for mode in 0..geometry.mode_count(f.band()) {
        let factor = if mode == zero_mode {
            C64::new(0.0, 0.0)
        } else {
            C64::new(1.0 / table.lambda(mode), 0.0)
        };
        for i in 0..np {
            for j in 0..nq {
                *out.coeff_mut(mode, i, j) *= factor;
            }
        }
    }
    Ok(out)
}

/// `Δ_∂̄ = ∂̄ ∂̄* + ∂̄* ∂̄` assembled from the operator compositions.
pub fn laplacian_dbar(f: &FourierForm) -> Result<FourierForm> {
    let (p, q) = f.bidegree();
    let d = f.geometry().dim();
    let mut out = FourierForm::zero(Arc::clone(f.geometry()), f.band(), p, q)?;
    if q > 0 {
        out = out.add(&dbar(&dbar_star(f)?)?)?;
    }
    if q < d {
        out = out.add(&dbar_star(&dbar(f)?)?)?;
    }
    out.set_truncation_residual(f.truncation_residual());
    Ok(out)
}

/// `Δ_∂ = ∂ ∂* + ∂* ∂` assembled from the operator compositions.
pub fn laplacian_partial(f: &FourierForm) -> Result<FourierForm> {
    let (p, q) = f.bidegree();
    let d = f.geometry().dim();
    let mut out = FourierForm::zero(Arc::clone(f.geometry()), f.band(), p, q)?;
    if p > 0 {
        out = out.add(&partial(&partial_star(f)?)?)?;
    }
    if p < d {
        out = out.add(&partial_star(&partial(f)?)?)?;
    }
    out.set_truncation_residual(f.truncation_residual());
    Ok(out)
}

/// Harmonic projection: keeps the constant mode only.
pub fn harmonic_projection(f: &FourierForm) -> FourierForm {
    let geometry = Arc::clone(f.geometry());
    let (p, q) = f.bidegree();
    let mut out = FourierForm::zero(geometry, f.band(), p, q).expect("same bidegree");
    out.set_truncation_residual(f.truncation_residual());
    let zero_mode = f.geometry().zero_mode_index(f.band());
    for i in 0..f.hol_count() {
        for j in 0..f.anti_count() {
            *out.coeff_mut(zero_mode, i, j) = f.coeff(zero_mode, i, j);
        }
    }
    out
}

/// Harmonic and primitive projection `ℍ_pr`: the constant part is projected
/// orthogonally onto the kernel of `ω^{d−n+1} ∧ (·)`; non-constant modes are
/// annihilated by the harmonic projection.
pub fn primitive_projection(f: &FourierForm) -> Result<FourierForm> {
    let (p, q) = f.bidegree();
    let d = f.geometry().dim();
    if p + q > d {
        return Err(Error::DegreeError(format!(
            "primitive projection needs p+q ≤ d, got ({p},{q}) at d = {d}"
        )));
    }
    let projector = super::primitive::primitive_projector(f.geometry(), p, q)?;
    let mut out = harmonic_projection(f);
    let constant = nalgebra::DVector::from_vec(out.constant_part());
    let projected = &projector * constant;
    let zero_mode = out.geometry().zero_mode_index(out.band());
    let nq = out.anti_count();
    for i in 0..out.hol_count() {
        for j in 0..nq {
            *out.coeff_mut(zero_mode, i, j) = projected[i * nq + j];
        }
    }
    Ok(out)
}

/// `T = ∂̄* G ∂`, `(p,q) → (p+1,q−1)`. When the target is not representable
/// the operator vanishes and the zero form at the input bidegree is
/// returned.
pub fn t_operator(f: &FourierForm) -> Result<FourierForm> {
    let (p, q) = f.bidegree();
    let d = f.geometry().dim();
    if p >= d || q == 0 {
        return FourierForm::zero(Arc::clone(f.geometry()), f.band(), p, q);
    }
    dbar_star(&green(&partial(f)?)?)
}

/// `d = ∂ + ∂̄` on a graded form, collecting pieces by bidegree. Components
/// that would overflow the representable range vanish identically and are
/// skipped.
pub fn exterior_derivative(f: &GradedForm) -> Result<GradedForm> {
    let mut out = GradedForm::new();
    for piece in f.pieces() {
        let (p, q) = piece.bidegree();
        let d = piece.geometry().dim();
        if p < d {
            out.add_piece(partial(piece)?)?;
        }
        if q < d {
            out.add_piece(dbar(piece)?)?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::TorusGeometry;

    fn geo(d: usize) -> Arc<TorusGeometry> {
        Arc::new(TorusGeometry::square(d).unwrap())
    }

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn constants_are_closed() {
        let g = geo(2);
        let f = FourierForm::monomial(Arc::clone(&g), 1, &[0; 4], 0, 0, c(1.5, 0.0)).unwrap();
        assert!(dbar(&f).unwrap().is_zero());
        assert!(partial(&f).unwrap().is_zero());
        assert!(dbar_star(&f).unwrap().is_zero());
        assert!(t_operator(&f).unwrap().is_zero());
    }

    #[test]
    fn dbar_single_mode_matches_fourier_oracle() {
        // f = e_k on the square line: ∂̄ f = ν(k) e_k dz̄ with ν = π(ia − b).
        let g = geo(1);
        let k = [2i64, 1];
        let f = FourierForm::monomial(Arc::clone(&g), 2, &k, 0, 0, c(1.0, 0.0)).unwrap();
        let df = dbar(&f).unwrap();
        let pi = std::f64::consts::PI;
        let expected = c(-pi, 2.0 * pi);
        assert!((df.coeff_at(&k, 0, 0b1) - expected).norm() < 1e-12);

        let pf = partial(&f).unwrap();
        let expected_mu = c(pi, 2.0 * pi);
        assert!((pf.coeff_at(&k, 0b1, 0) - expected_mu).norm() < 1e-12);
    }

    #[test]
    fn dbar_squares_to_zero() {
        let g = geo(2);
        let mut f = FourierForm::zero(Arc::clone(&g), 1, 0, 0).unwrap();
        // Populate every mode with mildly irregular data.
        for (idx, coeff) in f.coeffs_mut().iter_mut().enumerate() {
            *coeff = c((idx % 7) as f64 - 3.0, (idx % 5) as f64 / 2.0);
        }
        let ddf = dbar(&dbar(&f).unwrap()).unwrap();
        assert!(ddf.l2_norm() < 1e-12);
        let ppf = partial(&partial(&f).unwrap()).unwrap();
        assert!(ppf.l2_norm() < 1e-12);
        // Anticommutation ∂∂̄ + ∂̄∂ = 0, checked from a (1,1) seed.
        let mut h = FourierForm::zero(Arc::clone(&g), 1, 1, 1).unwrap();
        for (idx, coeff) in h.coeffs_mut().iter_mut().enumerate() {
            *coeff = c((idx % 9) as f64 / 3.0 - 1.0, (idx % 4) as f64 - 2.0);
        }
        let mixed = partial(&dbar(&h).unwrap())
            .unwrap()
            .add(&dbar(&partial(&h).unwrap()).unwrap())
            .unwrap();
        assert!(mixed.l2_norm() < 1e-12);
    }

    #[test]
    fn adjoint_of_single_mode() {
        // ∂̄*(e_k dz̄) = conj(ν(k)) e_k on the square line (unit metric).
        let g = geo(1);
        let k = [1i64, 1];
        let f = FourierForm::monomial(Arc::clone(&g), 1, &k, 0, 0b1, c(1.0, 0.0)).unwrap();
        let out = dbar_star(&f).unwrap();
        let (_, nu) = g.frequencies(&k);
        assert!((out.coeff_at(&k, 0, 0) - nu[0].conj()).norm() < 1e-12);
    }

    #[test]
    fn green_divides_by_eigenvalue() {
        let g = geo(1);
        let k = [1i64, 0];
        let f = FourierForm::monomial(Arc::clone(&g), 1, &k, 0b1, 0, c(2.0, 0.0)).unwrap();
        let gf = green(&f).unwrap();
        let pi = std::f64::consts::PI;
        assert!((gf.coeff_at(&k, 0b1, 0) - c(2.0 / (pi * pi), 0.0)).norm() < 1e-12);
        // Constants are in the kernel of the Green operator.
        let h = FourierForm::monomial(Arc::clone(&g), 1, &[0, 0], 0b1, 0, c(1.0, 0.0)).unwrap();
        assert!(green(&h).unwrap().is_zero());
    }

    #[test]
    fn laplacian_green_identity() {
        let g = geo(2);
        let mut f = FourierForm::zero(Arc::clone(&g), 1, 1, 1).unwrap();
        for (idx, coeff) in f.coeffs_mut().iter_mut().enumerate() {
            *coeff = c(((idx * 13) % 11) as f64 - 5.0, ((idx * 7) % 9) as f64 - 4.0);
        }
        // Δ G f + ℍ f = f.
        let lhs = laplacian_dbar(&green(&f).unwrap())
            .unwrap()
            .add(&harmonic_projection(&f))
            .unwrap();
        let diff = lhs.sub(&f).unwrap();
        assert!(diff.l2_norm() < 1e-10 * f.l2_norm());
    }

    #[test]
    fn t_operator_single_mode_three_factor_formula() {
        // T(e_k dz̄) = −ν̄(k) μ(k) / λ_k · e_k dz on the square line: the three
        // factors are ∂ (×μ), G (÷λ) and ∂̄* (×(−1)^p conj ν).
        let g = geo(1);
        let k = [2i64, -1];
        let f = FourierForm::monomial(Arc::clone(&g), 2, &k, 0, 0b1, c(1.0, 0.0)).unwrap();
        let tf = t_operator(&f).unwrap();
        let (mu, nu) = g.frequencies(&k);
        let lambda = g.laplacian_eigenvalue(&nu);
        let expected = -nu[0].conj() * mu[0] / lambda;
        assert!((tf.coeff_at(&k, 0b1, 0) - expected).norm() < 1e-12);
    }

    #[test]
    fn t_operator_overflow_guards() {
        let g = geo(1);
        // (1, 0): q = 0 → T = 0.
        let f = FourierForm::monomial(Arc::clone(&g), 1, &[1, 0], 0b1, 0, c(1.0, 0.0)).unwrap();
        assert!(t_operator(&f).unwrap().is_zero());
        // (1, 1) on the line: p = d → T = 0.
        let h = FourierForm::monomial(Arc::clone(&g), 1, &[1, 0], 0b1, 0b1, c(1.0, 0.0)).unwrap();
        assert!(t_operator(&h).unwrap().is_zero());
    }
}
