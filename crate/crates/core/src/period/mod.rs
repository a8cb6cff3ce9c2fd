//! Period matrices of torus families in the unipotent chart, section tables,
//! and the cross checks between the Lie-theoretic and deformation-theoretic
//! constructions.
//!
//! The exact oracle works for constant-coefficient families only: the
//! deformed holomorphic coframe is spanned by `θ_i = dz_i + Σ_j φ^i_{j̄} dz̄_j`
//! with constant coefficients, so every Hodge piece of the deformed fiber is
//! spanned by constant wedge monomials and all primitive splittings are
//! finite-dimensional linear algebra.

pub mod presets;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::hodge::{
    block_lu, in_unipotent_orbit, is_horizontal, leading_stack_determinants, BlockMatrix,
    HodgeType,
};
use crate::solver::{section_rows, SolverSettings};
use crate::torus::{
    finite_distance_check, kahler_power, maurer_cartan_residual, sup_operator_norm,
    BeltramiDifferential, ConstForm, ConstMix, PrimitiveBasis, TorusGeometry,
};
use crate::{C64, CMatrix, CVector};

/// Block LU tolerance used by the period pipeline.
pub const LU_TOL: f64 = 1e-10;

/// A linear family of Beltrami fields `φ(t) = Σ t_μ χ_μ` over the primitive
/// cohomology of a fixed flat torus.
#[derive(Debug, Clone)]
pub struct BeltramiFamily {
    basis: Arc<PrimitiveBasis>,
    fields: Vec<BeltramiDifferential>,
    admissible_radius: f64,
}

impl BeltramiFamily {
    /// Builds the family and certifies an admissible radius by sampling the
    /// supremum operator norm over parameter directions and shrinking by
    /// 10%. Sampled points must also pass the finite-distance check and be
    /// integrable.
    pub fn new(basis: Arc<PrimitiveBasis>, fields: Vec<BeltramiDifferential>) -> Result<Self> {
        if fields.is_empty() {
            return Err(Error::ShapeMismatch("family needs at least one basis field".into()));
        }
        for chi in &fields {
            if !chi.geometry().compatible(basis.geometry()) {
                return Err(Error::ShapeMismatch("family fields live on different tori".into()));
            }
        }
        let mut family = Self { basis, fields, admissible_radius: 0.0 };
        family.admissible_radius = family.certify_radius()?;
        Ok(family)
    }

    fn certify_radius(&self) -> Result<f64> {
        let n = self.fields.len();
        let mut rng = crate::testkit::Rng::new(0x9e37_79b9_7f4a_7c15);
        let mut directions: Vec<Vec<C64>> = Vec::new();
        for mu in 0..n {
            let mut real = vec![C64::new(0.0, 0.0); n];
            real[mu] = C64::new(1.0, 0.0);
            directions.push(real);
            let mut imag = vec![C64::new(0.0, 0.0); n];
            imag[mu] = C64::new(0.0, 1.0);
            directions.push(imag);
        }
        for _ in 0..(8 * n) {
            let mut u: Vec<C64> = (0..n).map(|_| rng.complex(1.0)).collect();
            let norm: f64 = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm < 1e-6 {
                continue;
            }
            for z in &mut u {
                *z /= C64::new(norm, 0.0);
            }
            directions.push(u);
        }

        let mut radius = f64::INFINITY;
        for u in &directions {
            let phi = self.eval(u)?;
            let sup = sup_operator_norm(&phi);
            if sup > 0.0 {
                radius = radius.min(1.0 / sup);
            }
        }
        if !radius.is_finite() {
            // the zero family deforms nothing; any bounded disk is admissible
            radius = 1.0;
        }
        let radius = 0.9 * radius;

        // Integrability and finite distance at interior sample points.
        for u in directions.iter().take(2 * n + 4) {
            let t: Vec<C64> = u.iter().map(|z| z * C64::new(0.5 * radius, 0.0)).collect();
            let phi = self.eval(&t)?;
            let mc = maurer_cartan_residual(&phi)?;
            if mc > 1e-10 {
                return Err(Error::InvalidProblem(format!(
                    "family is not integrable at a sample point (residual {mc:e})"
                )));
            }
            if !finite_distance_check(&phi) {
                return Err(Error::InvalidProblem(
                    "family leaves finite distance inside the certified radius".into(),
                ));
            }
        }
        Ok(radius)
    }

    pub fn basis(&self) -> &Arc<PrimitiveBasis> {
        &self.basis
    }

    pub fn geometry(&self) -> &Arc<TorusGeometry> {
        self.basis.geometry()
    }

    pub fn hodge_type(&self) -> &HodgeType {
        self.basis.hodge_type()
    }

    pub fn fields(&self) -> &[BeltramiDifferential] {
        &self.fields
    }

    /// Number of parameters `N`.
    pub fn parameters(&self) -> usize {
        self.fields.len()
    }

    pub fn admissible_radius(&self) -> f64 {
        self.admissible_radius
    }

    pub fn is_constant(&self) -> bool {
        self.fields.iter().all(|chi| chi.is_constant())
    }

    /// `φ(t) = Σ t_μ χ_μ`.
    pub fn eval(&self, t: &[C64]) -> Result<BeltramiDifferential> {
        if t.len() != self.fields.len() {
            return Err(Error::ShapeMismatch(format!(
                "parameter point has {} components, family has {}",
                t.len(),
                self.fields.len()
            )));
        }
        let mut acc = BeltramiDifferential::zero(Arc::clone(self.geometry()), 0);
        for (coeff, chi) in t.iter().zip(self.fields.iter()) {
            acc = acc.add(&chi.scale(*coeff))?;
        }
        Ok(acc)
    }

    pub fn inside_radius(&self, t: &[C64]) -> bool {
        let norm: f64 = t.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        norm < self.admissible_radius
    }
}

/// The unipotent-chart representative `Φ(t)` of a period point.
#[derive(Debug, Clone)]
pub struct PeriodPoint {
    matrix: BlockMatrix,
    parameter: Vec<C64>,
}

impl PeriodPoint {
    pub fn matrix(&self) -> &BlockMatrix {
        &self.matrix
    }

    pub fn parameter(&self) -> &[C64] {
        &self.parameter
    }

    /// The `(p, q)` block `Φ^{(p,q)}(t)`.
    pub fn block(&self, p: usize, q: usize) -> CMatrix {
        self.matrix.block(p, q)
    }
}

/// Where a section table came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// Rows assembled from the period matrix.
    Lie,
    /// Rows assembled from the extension solver.
    Deformation,
}

/// Stacked section rows `Ω_{(p)}(t)` in the base-point basis.
#[derive(Debug, Clone)]
pub struct SectionTable {
    matrix: CMatrix,
    hodge_type: HodgeType,
    provenance: Provenance,
    parameter: Vec<C64>,
}

impl SectionTable {
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn parameter(&self) -> &[C64] {
        &self.parameter
    }

    pub fn hodge_type(&self) -> &HodgeType {
        &self.hodge_type
    }

    /// Row block `p`.
    pub fn rows(&self, p: usize) -> CMatrix {
        let range = self.hodge_type.partition().range(p);
        self.matrix.rows(range.start, range.len()).into_owned()
    }

    /// Smallest singular value of the stacked rows (basis property).
    pub fn min_singular_value(&self) -> f64 {
        self.matrix.clone().svd(false, false).singular_values.min()
    }

    /// Largest absolute entry difference against another table.
    pub fn max_difference(&self, other: &SectionTable) -> f64 {
        (&self.matrix - &other.matrix).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

// --- the exact oracle -------------------------------------------------------

/// Deformed adapted frame of the primitive cohomology at `t`, expressed in
/// the base-point basis. Rows are grouped by deformed Hodge type.
pub fn oracle_frame(family: &BeltramiFamily, t: &[C64]) -> Result<BlockMatrix> {
    if !family.is_constant() {
        return Err(Error::UnsupportedOracle(
            "exact period oracle requires constant-coefficient fields".into(),
        ));
    }
    let basis = family.basis();
    let geometry = family.geometry();
    let d = geometry.dim();
    let n = basis.weight();
    let phi = family.eval(t)?;
    let phi_matrix = phi.constant_matrix();

    // Deformed coframes θ_i = dz_i + Σ_j φ^i_j dz̄_j and their conjugates.
    let mut theta: Vec<ConstMix> = Vec::with_capacity(d);
    let mut theta_bar: Vec<ConstMix> = Vec::with_capacity(d);
    for i in 0..d {
        let mut hol = ConstForm::zero(geometry, 1, 0);
        hol.coeffs[geometry.mask_table(1).position(1 << i)] = C64::new(1.0, 0.0);
        let mut mix = ConstMix::from_pure(hol);
        let mut anti = ConstForm::zero(geometry, 0, 1);
        for j in 0..d {
            anti.coeffs[geometry.mask_table(1).position(1 << j)] = phi_matrix[(i, j)];
        }
        mix.add(anti);
        theta.push(mix.clone());

        let mut anti_c = ConstForm::zero(geometry, 0, 1);
        anti_c.coeffs[geometry.mask_table(1).position(1 << i)] = C64::new(1.0, 0.0);
        let mut mix_c = ConstMix::from_pure(anti_c);
        let mut hol_c = ConstForm::zero(geometry, 1, 0);
        for j in 0..d {
            hol_c.coeffs[geometry.mask_table(1).position(1 << j)] = phi_matrix[(i, j)].conj();
        }
        mix_c.add(hol_c);
        theta_bar.push(mix_c);
    }

    let pow = d - n + 1;
    let omega_pow = kahler_power(geometry, pow);
    let partition = basis.hodge_type().partition();
    let m = basis.dim();
    let mut frame = CMatrix::zeros(m, m);
    let mut row_cursor = 0usize;

    for alpha in 0..=n {
        let a = n - alpha;
        let b = alpha;
        // Wedge candidates θ_I ∧ θ̄_J.
        let mut candidates: Vec<ConstMix> = Vec::new();
        for &mask_i in &geometry.mask_table(a).masks {
            for &mask_j in &geometry.mask_table(b).masks {
                let mut acc = ConstMix::one(geometry);
                for i in crate::torus::multi_index::bits(mask_i) {
                    acc = acc.wedge(geometry, &theta[i]);
                }
                for j in crate::torus::multi_index::bits(mask_j) {
                    acc = acc.wedge(geometry, &theta_bar[j]);
                }
                candidates.push(acc);
            }
        }
        let n_cand = candidates.len();
        if n_cand == 0 {
            continue;
        }

        // Primitivity constraints ω^{d−n+1} ∧ v = 0, flattened over all
        // degree-(n+2·pow) pieces.
        let kernel: Vec<CVector> = match &omega_pow {
            None => (0..n_cand)
                .map(|c| {
                    let mut e = CVector::zeros(n_cand);
                    e[c] = C64::new(1.0, 0.0);
                    e
                })
                .collect(),
            Some(op) => {
                let mut columns: Vec<Vec<C64>> = Vec::with_capacity(n_cand);
                let mut flat_len = 0usize;
                for cand in &candidates {
                    let product = ConstMix::from_pure(op.clone()).wedge(geometry, cand);
                    let mut flat: Vec<C64> = Vec::new();
                    // deterministic piece order: (a', b') ascending
                    for aa in 0..=d {
                        for bb in 0..=d {
                            if aa + bb != n + 2 * pow {
                                continue;
                            }
                            match product.piece(aa, bb) {
                                Some(piece) => flat.extend_from_slice(&piece.coeffs),
                                None => flat.extend(std::iter::repeat_n(
                                    C64::new(0.0, 0.0),
                                    geometry.mask_table(aa).len() * geometry.mask_table(bb).len(),
                                )),
                            }
                        }
                    }
                    flat_len = flat.len();
                    columns.push(flat);
                }
                let w = CMatrix::from_fn(flat_len, n_cand, |r, c| columns[c][r]);
                hermitian_nullspace(&w, 1e-6)
            }
        };

        let expected = partition.size(alpha);
        if kernel.len() != expected {
            return Err(Error::InvalidFrame(format!(
                "deformed ({a},{b}) primitive space has dimension {} instead of {expected}; \
                 the family does not preserve the polarization at this point",
                kernel.len()
            )));
        }

        for vec in kernel {
            let mut mix = ConstMix::new();
            for (c, cand) in vec.iter().zip(candidates.iter()) {
                if c.norm() == 0.0 {
                    continue;
                }
                for piece in cand.pieces() {
                    mix.add(piece.scale(*c));
                }
            }
            let coords = basis.full_coordinates(&mix, 1e-8)?;
            for (col, value) in coords.into_iter().enumerate() {
                frame[(row_cursor, col)] = value;
            }
            row_cursor += 1;
        }
    }
    debug_assert_eq!(row_cursor, m);
    BlockMatrix::new(frame, partition)
}

/// Orthonormal kernel basis of `w` via the Hermitian eigenproblem of
/// `wᴴ w`; eigenvalues below `(tol·scale)²` count as zero.
fn hermitian_nullspace(w: &CMatrix, tol: f64) -> Vec<CVector> {
    let gram = w.adjoint() * w;
    let eigen = gram.symmetric_eigen();
    let scale = eigen.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b)).max(1.0);
    let mut kernel = Vec::new();
    for (idx, &lambda) in eigen.eigenvalues.iter().enumerate() {
        if lambda <= tol * tol * scale {
            kernel.push(eigen.eigenvectors.column(idx).into_owned());
        }
    }
    kernel
}

/// Period matrix `Φ(t)`: the unipotent factor of the oracle frame.
pub fn oracle_period(family: &BeltramiFamily, t: &[C64]) -> Result<PeriodPoint> {
    let frame = oracle_frame(family, t)?;
    let lu = block_lu(&frame, LU_TOL)?;
    Ok(PeriodPoint { matrix: lu.unipotent, parameter: t.to_vec() })
}

// --- section tables ---------------------------------------------------------

/// Lie-theoretic section table: row block `p` is
/// `η_{(p)} + Σ_k Φ^{(p,p+k)}(t) · η_{(p+k)}`, i.e. the period matrix rows.
pub fn lie_sections(pp: &PeriodPoint, hodge_type: &HodgeType) -> SectionTable {
    SectionTable {
        matrix: pp.matrix.entries().clone(),
        hodge_type: hodge_type.clone(),
        provenance: Provenance::Lie,
        parameter: pp.parameter.clone(),
    }
}

/// Deformation-theoretic section table assembled from the extension solver.
pub fn deformation_sections(
    family: &BeltramiFamily,
    t: &[C64],
    band: u32,
    settings: SolverSettings,
) -> Result<SectionTable> {
    let basis = family.basis();
    let phi = family.eval(t)?;
    let n = basis.weight();
    let m = basis.dim();
    let partition = basis.hodge_type().partition();
    let mut matrix = CMatrix::zeros(m, m);
    for alpha in 0..=n {
        let rows = section_rows(basis, alpha, &phi, band, settings)?;
        let range = partition.range(alpha);
        matrix.rows_mut(range.start, range.len()).copy_from(&rows);
    }
    Ok(SectionTable {
        matrix,
        hodge_type: basis.hodge_type().clone(),
        provenance: Provenance::Deformation,
        parameter: t.to_vec(),
    })
}

/// Max absolute entry difference between the Lie-theoretic and
/// deformation-theoretic section tables at `t`.
pub fn compare_sections(
    family: &BeltramiFamily,
    t: &[C64],
    band: u32,
    settings: SolverSettings,
) -> Result<f64> {
    let lie = lie_sections(&oracle_period(family, t)?, family.hodge_type());
    let def = deformation_sections(family, t, band, settings)?;
    Ok(lie.max_difference(&def))
}

// --- derivatives of the period map ------------------------------------------

fn step_point(t: &[C64], mu: usize, h: f64) -> Vec<C64> {
    let mut out = t.to_vec();
    out[mu] += C64::new(h, 0.0);
    out
}

fn require_inside(family: &BeltramiFamily, t: &[C64]) -> Result<()> {
    if !family.inside_radius(t) {
        return Err(Error::StepOutsideRadius(format!(
            "|t| = {:.3e} vs radius {:.3e}",
            t.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt(),
            family.admissible_radius()
        )));
    }
    Ok(())
}

/// Central-difference derivative of every block of `Φ` in direction `μ`.
fn block_derivatives(
    family: &BeltramiFamily,
    t: &[C64],
    mu: usize,
    h: f64,
) -> Result<BlockMatrix> {
    let plus_t = step_point(t, mu, h);
    let minus_t = step_point(t, mu, -h);
    require_inside(family, &plus_t)?;
    require_inside(family, &minus_t)?;
    let plus = oracle_period(family, &plus_t)?;
    let minus = oracle_period(family, &minus_t)?;
    let diff = (plus.matrix.entries() - minus.matrix.entries()) / C64::new(2.0 * h, 0.0);
    BlockMatrix::new(diff, family.hodge_type().partition())
}

/// Residual of the block derivative relation
/// `∂Φ^{(p,p+i)}/∂t_μ = (∂Φ^{(p,p+1)}/∂t_μ) · Φ^{(p+1,p+i)}(t)`,
/// max-norm over all `(p, i)`.
pub fn derivative_relation_residual(
    family: &BeltramiFamily,
    t: &[C64],
    mu: usize,
    h: f64,
) -> Result<f64> {
    let n = family.hodge_type().weight();
    let derivative = block_derivatives(family, t, mu, h)?;
    let pp = oracle_period(family, t)?;
    let mut worst = 0.0f64;
    for p in 0..n {
        let first = derivative.block(p, p + 1);
        for i in 2..=(n - p) {
            let lhs = derivative.block(p, p + i);
            let rhs = &first * pp.block(p + 1, p + i);
            let err = (lhs - rhs).iter().map(|z| z.norm()).fold(0.0, f64::max);
            worst = worst.max(err);
        }
    }
    Ok(worst)
}

/// First super-diagonal derivative blocks `∂Φ^{(p,p+1)}/∂t_μ` for every
/// parameter, assembled as horizontal tangent representatives.
pub fn differential_blocks(
    family: &BeltramiFamily,
    t: &[C64],
    h: f64,
) -> Result<Vec<BlockMatrix>> {
    let n = family.hodge_type().weight();
    let partition = family.hodge_type().partition();
    let mut out = Vec::with_capacity(family.parameters());
    for mu in 0..family.parameters() {
        let derivative = block_derivatives(family, t, mu, h)?;
        let mut tangent = BlockMatrix::zeros(partition.clone());
        for p in 0..n {
            tangent.set_block(p, p + 1, &derivative.block(p, p + 1));
        }
        debug_assert!(is_horizontal(&tangent));
        out.push(tangent);
    }
    Ok(out)
}

// --- affine structure --------------------------------------------------------

/// The affine map `Ψ(t)`: the flattened `Φ^{(0,1)}(t)` block (row major).
pub fn affine_map(family: &BeltramiFamily, t: &[C64]) -> Result<Vec<C64>> {
    let pp = oracle_period(family, t)?;
    let block = pp.block(0, 1);
    Ok(block.transpose().iter().copied().collect())
}

/// Numerical rank of the Jacobian of `Ψ` by central differences: singular
/// values above `1e−8` are counted.
pub fn affine_jacobian_rank(family: &BeltramiFamily, t: &[C64], h: f64) -> Result<usize> {
    let n_params = family.parameters();
    let sample = affine_map(family, t)?;
    let width = sample.len();
    let mut jacobian = CMatrix::zeros(n_params, width);
    for mu in 0..n_params {
        let plus_t = step_point(t, mu, h);
        let minus_t = step_point(t, mu, -h);
        require_inside(family, &plus_t)?;
        require_inside(family, &minus_t)?;
        let plus = affine_map(family, &plus_t)?;
        let minus = affine_map(family, &minus_t)?;
        for col in 0..width {
            jacobian[(mu, col)] = (plus[col] - minus[col]) / C64::new(2.0 * h, 0.0);
        }
    }
    let svd = jacobian.svd(false, false);
    Ok(svd.singular_values.iter().filter(|&&s| s > 1e-8).count())
}

// --- orbit scan ---------------------------------------------------------------

/// Orbit diagnostics of one frame.
#[derive(Debug, Clone)]
pub struct OrbitCheck {
    pub in_orbit: bool,
    pub min_leading_determinant: f64,
    pub lu_ok: bool,
    pub failed_block: Option<usize>,
}

/// Runs the leading-minor criterion and the factorization on one frame.
pub fn orbit_check_frame(a: &BlockMatrix, tol: f64) -> OrbitCheck {
    let dets = leading_stack_determinants(a);
    let min_det = dets.iter().fold(f64::INFINITY, |acc, &d| acc.min(d));
    let in_orbit = in_unipotent_orbit(a, tol);
    match block_lu(a, tol) {
        Ok(_) => OrbitCheck {
            in_orbit,
            min_leading_determinant: min_det,
            lu_ok: true,
            failed_block: None,
        },
        Err(Error::NotInOrbit { block }) => OrbitCheck {
            in_orbit,
            min_leading_determinant: min_det,
            lu_ok: false,
            failed_block: Some(block),
        },
        Err(_) => OrbitCheck {
            in_orbit,
            min_leading_determinant: min_det,
            lu_ok: false,
            failed_block: None,
        },
    }
}

/// Per-point orbit report along a parameter path.
#[derive(Debug, Clone)]
pub struct OrbitScanPoint {
    pub parameter: Vec<C64>,
    pub check: OrbitCheck,
}

/// Evaluates the oracle along a path and reports orbit membership with the
/// smallest leading-block determinant magnitude at every point.
pub fn orbit_scan(family: &BeltramiFamily, path: &[Vec<C64>]) -> Result<Vec<OrbitScanPoint>> {
    let mut out = Vec::with_capacity(path.len());
    for t in path {
        let frame = oracle_frame(family, t)?;
        out.push(OrbitScanPoint { parameter: t.clone(), check: orbit_check_frame(&frame, LU_TOL) });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::presets;
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn elliptic_period_is_the_parameter() {
        let fx = presets::elliptic().unwrap();
        let t = [c(0.3, 0.1)];
        let pp = oracle_period(&fx.family, &t).unwrap();
        assert!((pp.block(0, 1)[(0, 0)] - t[0]).norm() < 1e-12);
        // Base point: identity.
        let pp0 = oracle_period(&fx.family, &[c(0.0, 0.0)]).unwrap();
        assert!((pp0.matrix().entries() - CMatrix::identity(2, 2))
            .iter()
            .all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn diagonal_family_blocks_match_hand_expansion() {
        let fx = presets::abelian_diagonal().unwrap();
        let (t1, t2) = (c(0.2, 0.0), c(0.1, 0.0));
        let pp = oracle_period(&fx.family, &[t1, t2]).unwrap();
        // Φ^{(0,1)} = (t₂, −t₁, 0) in the ordered primitive (1,1) basis.
        let b01 = pp.block(0, 1);
        assert!((b01[(0, 0)] - t2).norm() < 1e-10);
        assert!((b01[(0, 1)] + t1).norm() < 1e-10);
        assert!(b01[(0, 2)].norm() < 1e-10);
        // Φ^{(0,2)} = (t₁ t₂).
        let b02 = pp.block(0, 2);
        assert!((b02[(0, 0)] - t1 * t2).norm() < 1e-10);
        // Φ^{(1,2)} = (t₁, −t₂, 0)ᵀ.
        let b12 = pp.block(1, 2);
        assert!((b12[(0, 0)] - t1).norm() < 1e-10);
        assert!((b12[(1, 0)] + t2).norm() < 1e-10);
        assert!(b12[(2, 0)].norm() < 1e-10);
    }

    #[test]
    fn sections_coincide_on_presets() {
        let fx = presets::elliptic().unwrap();
        let diff = compare_sections(&fx.family, &[c(0.3, 0.0)], 2, SolverSettings::default()).unwrap();
        assert!(diff < 1e-10, "elliptic coincidence failed: {diff:e}");

        let fx2 = presets::abelian_diagonal().unwrap();
        let diff2 =
            compare_sections(&fx2.family, &[c(0.2, 0.05), c(0.1, -0.04)], 1, SolverSettings::default())
                .unwrap();
        assert!(diff2 < 1e-10, "abelian coincidence failed: {diff2:e}");
    }

    #[test]
    fn section_tables_have_full_rank() {
        let fx = presets::abelian_diagonal().unwrap();
        let t = [c(0.25, 0.1), c(-0.15, 0.05)];
        let table = lie_sections(&oracle_period(&fx.family, &t).unwrap(), fx.family.hodge_type());
        assert!(table.min_singular_value() > 1e-8);
        let def = deformation_sections(&fx.family, &t, 1, SolverSettings::default()).unwrap();
        assert!(def.min_singular_value() > 1e-8);
    }

    #[test]
    fn derivative_relation_second_order() {
        let fx = presets::abelian_diagonal().unwrap();
        let t = [c(0.2, 0.0), c(0.1, 0.0)];
        let r1 = derivative_relation_residual(&fx.family, &t, 0, 1e-3).unwrap();
        assert!(r1 < 1e-6, "residual too large: {r1:e}");
        let r2 = derivative_relation_residual(&fx.family, &t, 0, 5e-4).unwrap();
        // O(h²): halving h shrinks the residual by about 4.
        if r1 > 1e-12 {
            assert!(r1 / r2.max(1e-300) > 3.5, "ratio {}", r1 / r2.max(1e-300));
        }
    }

    #[test]
    fn differential_blocks_match_linear_terms() {
        let fx = presets::abelian_diagonal().unwrap();
        let t = [c(0.2, 0.0), c(0.1, 0.0)];
        let blocks = differential_blocks(&fx.family, &t, 1e-3).unwrap();
        // ∂Φ^{(0,1)}/∂t₁ = (0, −1, 0).
        let b = blocks[0].block(0, 1);
        assert!(b[(0, 0)].norm() < 1e-6);
        assert!((b[(0, 1)] + c(1.0, 0.0)).norm() < 1e-6);
        for tangent in &blocks {
            assert!(is_horizontal(tangent));
        }
    }

    #[test]
    fn elliptic_affine_map_is_identity() {
        let fx = presets::elliptic().unwrap();
        let t = [c(0.2, 0.1)];
        let psi = affine_map(&fx.family, &t).unwrap();
        assert_eq!(psi.len(), 1);
        assert!((psi[0] - t[0]).norm() < 1e-12);
        assert_eq!(affine_jacobian_rank(&fx.family, &t, 1e-3).unwrap(), 1);
    }

    #[test]
    fn full_family_rank_and_degenerate_drop() {
        let fx = presets::abelian_full().unwrap();
        let t = [c(0.05, 0.02), c(0.04, -0.03), c(-0.06, 0.01)];
        assert_eq!(affine_jacobian_rank(&fx.family, &t, 1e-3).unwrap(), 3);

        let dg = presets::abelian_degenerate().unwrap();
        let t3 = [c(0.05, 0.0), c(0.04, 0.0), c(0.03, 0.0)];
        assert_eq!(affine_jacobian_rank(&dg.family, &t3, 1e-3).unwrap(), 2);
    }

    #[test]
    fn orbit_scan_no_failures_inside_radius() {
        let fx = presets::elliptic().unwrap();
        let path: Vec<Vec<C64>> = (0..8).map(|k| vec![c(0.1 * k as f64, 0.0)]).collect();
        let report = orbit_scan(&fx.family, &path).unwrap();
        assert!(report.iter().all(|pt| pt.check.in_orbit && pt.check.lu_ok));
        // Determinants shrink monotonically toward the boundary.
        let dets: Vec<f64> = report.iter().map(|p| p.check.min_leading_determinant).collect();
        assert!(dets.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn synthetic_frame_fails_at_block_zero() {
        let partition = crate::hodge::BlockPartition::from_group_sizes(&[1, 1]);
        let swap = CMatrix::from_row_slice(
            2,
            2,
            &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
        );
        let frame = BlockMatrix::new(swap, partition).unwrap();
        let check = orbit_check_frame(&frame, LU_TOL);
        assert!(!check.in_orbit);
        assert!(!check.lu_ok);
        assert_eq!(check.failed_block, Some(0));
    }

    #[test]
    fn derivative_relation_vacuous_on_curves() {
        // Weight one has a single off-diagonal block: nothing to relate.
        let fx = presets::elliptic().unwrap();
        let res = derivative_relation_residual(&fx.family, &[c(0.2, 0.1)], 0, 1e-3).unwrap();
        assert_eq!(res, 0.0);
    }

    #[test]
    fn zero_family_has_zero_differentials() {
        let fx = presets::elliptic().unwrap();
        let zero_field = BeltramiDifferential::zero(Arc::clone(fx.family.geometry()), 0);
        let family =
            BeltramiFamily::new(Arc::clone(fx.family.basis()), vec![zero_field]).unwrap();
        let blocks = differential_blocks(&family, &[c(0.1, 0.0)], 1e-3).unwrap();
        assert!(blocks[0].max_norm() == 0.0);
        // compare_sections at the base point is exactly zero
        let diff = compare_sections(&fx.family, &[c(0.0, 0.0)], 2, SolverSettings::default())
            .unwrap();
        assert_eq!(diff, 0.0);
    }

    #[test]
    fn non_constant_family_rejected_by_oracle() {
        let fx = presets::elliptic().unwrap();
        let g = fx.family.geometry();
        let mut chi = BeltramiDifferential::zero(Arc::clone(g), 1);
        chi.set_coeff_at(&[1, 0], 0, 0, c(0.5, 0.0)).unwrap();
        let family = BeltramiFamily::new(Arc::clone(fx.family.basis()), vec![chi]).unwrap();
        assert!(matches!(
            oracle_period(&family, &[c(0.1, 0.0)]),
            Err(Error::UnsupportedOracle(_))
        ));
    }

    #[test]
    fn step_outside_radius_is_an_error() {
        let fx = presets::elliptic().unwrap();
        let near_edge = fx.family.admissible_radius() - 5e-4;
        let t = [c(near_edge, 0.0)];
        assert!(matches!(
            derivative_relation_residual(&fx.family, &t, 0, 1e-3),
            Err(Error::StepOutsideRadius(_))
        ));
    }
}
