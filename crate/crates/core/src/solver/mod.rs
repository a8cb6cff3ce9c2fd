//! Fixed-point solver for the extension equation `σ = σ₀ − T i_φ σ` and the
//! d-closed extension `e^{i_φ} σ` it produces.
//!
//! With `‖φ‖ < 1` the map `σ ↦ σ₀ − T i_φ σ` is a contraction in L²
//! (`‖T‖ ≤ 1` by the quasi-isometry bound), so the iteration converges to
//! the unique solution and equals the alternating Neumann series
//! `Σ (−1)^k (T i_φ)^k σ₀`. The harmonic part of every iterate is exactly
//! `σ₀`: `T` factors through the Green operator, which annihilates the
//! constant mode.
//!
//! Band handling: iterates are truncated back to the working band after
//! every contraction and the discarded L² mass accumulates on the iterate's
//! `truncation_residual`, so solver error and band error stay separately
//! visible.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::torus::{
    contract, contract_full, dbar, dbar_star, exp_contract, exterior_derivative, green, partial,
    primitive_projection, sup_operator_norm, BeltramiDifferential, FourierForm, GradedForm,
    PrimitiveBasis,
};
use crate::{C64, CMatrix, CVector};

/// Stopping rule for the fixed-point iteration.
#[derive(Debug, Clone, Copy)]
pub struct SolverSettings {
    /// Successive-iterate L² tolerance.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self { tolerance: 1e-10, max_iterations: 10_000 }
    }
}

/// A validated extension problem: harmonic primitive seed, integrable
/// Beltrami field of supremum norm `< 1`, and a working band.
#[derive(Debug, Clone)]
pub struct ExtensionProblem {
    sigma0: FourierForm,
    phi: BeltramiDifferential,
    settings: SolverSettings,
    sup_norm: f64,
}

impl ExtensionProblem {
    /// Validates the constructor invariants:
    /// `‖ℍ_pr σ₀ − σ₀‖ ≤ 1e−12`, Maurer–Cartan residual `≤ 1e−10`, and
    /// `‖φ‖ < 1`. The seed is re-indexed to `band`, the working band of the
    /// iteration.
    pub fn new(
        sigma0: &FourierForm,
        phi: &BeltramiDifferential,
        band: u32,
        settings: SolverSettings,
    ) -> Result<Self> {
        if !sigma0.geometry().compatible(phi.geometry()) {
            return Err(Error::ShapeMismatch("seed and field live on different tori".into()));
        }
        let primitive = primitive_projection(sigma0)?;
        let defect = primitive.sub(sigma0)?.l2_norm();
        if defect > 1e-12 {
            return Err(Error::InvalidProblem(format!(
                "seed is not harmonic and primitive (defect {defect:e})"
            )));
        }
        let mc = crate::torus::maurer_cartan_residual(phi)?;
        if mc > 1e-10 {
            return Err(Error::InvalidProblem(format!(
                "field is not integrable (Maurer–Cartan residual {mc:e})"
            )));
        }
        let sup_norm = sup_operator_norm(phi);
        if sup_norm >= 1.0 {
            return Err(Error::ContractionViolation { norm: sup_norm });
        }
        let sigma0 = sigma0.extend_band(band.max(sigma0.band()))?;
        Ok(Self { sigma0, phi: phi.clone(), settings, sup_norm })
    }

    pub fn seed(&self) -> &FourierForm {
        &self.sigma0
    }

    pub fn field(&self) -> &BeltramiDifferential {
        &self.phi
    }

    pub fn settings(&self) -> &SolverSettings {
        &self.settings
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    pub fn band(&self) -> u32 {
        self.sigma0.band()
    }

    fn phi_is_zero(&self) -> bool {
        self.phi.nonzero().is_empty()
    }
}

/// Converged solution with its residual certificates.
#[derive(Debug, Clone)]
pub struct ExtensionSolution {
    pub sigma: FourierForm,
    pub iterations: usize,
    /// `‖σ − σ₀ + T i_φ σ‖`.
    pub fixed_point_residual: f64,
    /// `‖∂σ‖`.
    pub obstruction_residual_partial: f64,
    /// `‖∂̄σ + ∂(φ⌟σ)‖`.
    pub obstruction_residual_dbar: f64,
    /// `‖d e^{i_φ} σ‖`.
    pub d_closed_residual: f64,
    /// Accumulated band-truncation bound.
    pub truncation_residual: f64,
}

/// One application of `T i_φ` truncated back to the iterate's band. On
/// holomorphic degree zero the contraction vanishes and the zero form at the
/// input bidegree is returned.
fn t_contract(phi: &BeltramiDifferential, sigma: &FourierForm) -> Result<FourierForm> {
    let (p, q) = sigma.bidegree();
    if p == 0 {
        return FourierForm::zero(Arc::clone(sigma.geometry()), sigma.band(), p, q);
    }
    let contracted = contract(phi, sigma)?;
    dbar_star(&green(&partial(&contracted)?)?)
}

/// Solves `σ = σ₀ − T i_φ σ` by fixed-point iteration.
pub fn solve_extension(problem: &ExtensionProblem) -> Result<ExtensionSolution> {
    let sigma0 = &problem.sigma0;
    let (p, _) = sigma0.bidegree();
    let tol = problem.settings.tolerance;

    let mut sigma = sigma0.clone();
    let mut iterations = 0usize;
    if p > 0 && !problem.phi_is_zero() {
        loop {
            let mapped = sigma0.sub(&t_contract(&problem.phi, &sigma)?)?;
            iterations += 1;
            let diff = mapped.sub(&sigma)?.l2_norm();
            sigma = mapped;
            if diff <= tol {
                break;
            }
            if iterations >= problem.settings.max_iterations {
                return Err(Error::NonConvergence { iterations, residual: diff });
            }
        }
    } else {
        iterations = 1;
    }

    let fixed_point_residual =
        sigma0.sub(&t_contract(&problem.phi, &sigma)?)?.sub(&sigma)?.l2_norm();
    let (obstruction_residual_partial, obstruction_residual_dbar) =
        obstruction_residuals(&sigma, &problem.phi)?;
    let extension = exp_contract(&problem.phi, &sigma)?;
    let d_closed_residual = exterior_derivative(&extension)?.l2_norm();

    Ok(ExtensionSolution {
        truncation_residual: sigma.truncation_residual(),
        sigma,
        iterations,
        fixed_point_residual,
        obstruction_residual_partial,
        obstruction_residual_dbar,
        d_closed_residual,
    })
}

/// Residuals of the two obstruction equations, `(‖∂σ‖, ‖∂̄σ + ∂(φ⌟σ)‖)`,
/// evaluated without band truncation.
pub fn obstruction_residuals(
    sigma: &FourierForm,
    phi: &BeltramiDifferential,
) -> Result<(f64, f64)> {
    let (p, q) = sigma.bidegree();
    let d = sigma.geometry().dim();
    let partial_norm = if p < d { partial(sigma)?.l2_norm() } else { 0.0 };
    let mut dbar_part = if q < d { Some(dbar(sigma)?) } else { None };
    if p > 0 && q < d {
        let correction = partial(&contract_full(phi, sigma)?)?;
        dbar_part = Some(match dbar_part {
            Some(f) => f.add(&correction)?,
            None => correction,
        });
    }
    let dbar_norm = dbar_part.map(|f| f.l2_norm()).unwrap_or(0.0);
    Ok((partial_norm, dbar_norm))
}

/// Alternating Neumann partial sum `Σ_{k=0}^{order} (−1)^k (T i_φ)^k σ₀`
/// on the same truncated band as the fixed-point iteration.
pub fn neumann_partial_sum(problem: &ExtensionProblem, order: usize) -> Result<FourierForm> {
    let mut term = problem.sigma0.clone();
    let mut acc = problem.sigma0.clone();
    for k in 1..=order {
        term = t_contract(&problem.phi, &term)?;
        let signed = if k % 2 == 1 { term.scale(C64::new(-1.0, 0.0)) } else { term.clone() };
        acc = acc.add(&signed)?;
    }
    Ok(acc)
}

/// Suggested Neumann order for a given tolerance, `⌈log tol / log ‖φ‖⌉`.
pub fn neumann_order(sup_norm: f64, tolerance: f64) -> usize {
    if sup_norm <= 0.0 || sup_norm >= 1.0 {
        return 1;
    }
    (tolerance.ln() / sup_norm.ln()).ceil().max(1.0) as usize
}

/// Direct dense solve of `(I + T i_φ) σ = σ₀` on the truncated coefficient
/// space; cross-check oracle for small bands.
pub fn solve_extension_dense(problem: &ExtensionProblem) -> Result<FourierForm> {
    let sigma0 = &problem.sigma0;
    let n = sigma0.coeffs().len();
    let mut matrix = CMatrix::identity(n, n);
    let mut basis = FourierForm::zero(
        Arc::clone(sigma0.geometry()),
        sigma0.band(),
        sigma0.bidegree().0,
        sigma0.bidegree().1,
    )?;
    for col in 0..n {
        for c in basis.coeffs_mut() {
            *c = C64::new(0.0, 0.0);
        }
        basis.coeffs_mut()[col] = C64::new(1.0, 0.0);
        let image = t_contract(&problem.phi, &basis)?;
        for (row, value) in image.coeffs().iter().enumerate() {
            matrix[(row, col)] += value;
        }
    }
    let rhs = CVector::from_column_slice(sigma0.coeffs());
    let solution = matrix
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::InvalidProblem("dense extension system is singular".into()))?;
    let mut out = sigma0.clone();
    for (c, v) in out.coeffs_mut().iter_mut().zip(solution.iter()) {
        *c = *v;
    }
    out.set_truncation_residual(0.0);
    Ok(out)
}

/// `e^{i_φ} σ` for the solved extension, with its certificates.
pub fn extended_form(problem: &ExtensionProblem) -> Result<(GradedForm, ExtensionSolution)> {
    let solution = solve_extension(problem)?;
    let graded = exp_contract(&problem.phi, &solution.sigma)?;
    Ok((graded, solution))
}

/// Graded coefficient vector of `ℍ_pr e^{i_φ} (I + T i_φ)^{-1} σ₀` in the
/// primitive harmonic basis at the base point.
#[derive(Debug, Clone)]
pub struct GradedClass {
    /// Block index of the seed's type (its antiholomorphic degree).
    pub start_block: usize,
    /// Component `k` holds the coordinates in basis block `start_block + k`.
    pub components: Vec<Vec<C64>>,
    pub solution: ExtensionSolution,
}

impl GradedClass {
    /// Concatenation of the components.
    pub fn flattened(&self) -> Vec<C64> {
        self.components.iter().flatten().copied().collect()
    }
}

/// Runs the solver and expresses each graded piece of `e^{i_φ} σ` in the
/// primitive basis.
pub fn cohomology_class(problem: &ExtensionProblem, basis: &PrimitiveBasis) -> Result<GradedClass> {
    let (graded, solution) = extended_form(problem)?;
    let (p0, q0) = problem.sigma0.bidegree();
    if p0 + q0 != basis.weight() {
        return Err(Error::DegreeError(format!(
            "seed of total degree {} against weight {}",
            p0 + q0,
            basis.weight()
        )));
    }
    let start_block = q0;
    let mut components = Vec::with_capacity(p0 + 1);
    for k in 0..=p0 {
        let (pk, qk) = (p0 - k, q0 + k);
        let piece = match graded.piece(pk, qk) {
            Some(f) => primitive_projection(f)?,
            None => FourierForm::zero(Arc::clone(problem.sigma0.geometry()), 0, pk, qk)?,
        };
        let constant = crate::torus::ConstForm::from_fourier(&piece);
        let (_, coords, _residual) = basis.block_coordinates(&constant)?;
        components.push(coords);
    }
    Ok(GradedClass { start_block, components, solution })
}

/// Deformation-theoretic section rows for basis block `alpha`: one row per
/// basis element of type `(n−α, α)`, as full-width coordinate rows in the
/// base-point basis. The leading block is the exact identity.
pub fn section_rows(
    basis: &PrimitiveBasis,
    alpha: usize,
    phi: &BeltramiDifferential,
    band: u32,
    settings: SolverSettings,
) -> Result<CMatrix> {
    let partition = basis.hodge_type().partition();
    let m = basis.dim();
    let rows_count = partition.size(alpha);
    let mut rows = CMatrix::zeros(rows_count, m);
    for (r, seed_const) in basis.block(alpha).iter().enumerate() {
        let seed = seed_const.to_fourier(basis.geometry(), 0)?;
        let problem = ExtensionProblem::new(&seed, phi, band, settings)?;
        let class = cohomology_class(&problem, basis)?;
        for (k, coords) in class.components.iter().enumerate() {
            let block = alpha + k;
            let range = partition.range(block);
            if k == 0 {
                // leading-term normalization: the seed is basis element r
                rows[(r, range.start + r)] = C64::new(1.0, 0.0);
            } else {
                for (slot, c) in range.zip(coords.iter()) {
                    rows[(r, slot)] = *c;
                }
            }
        }
    }
    Ok(rows)
}
