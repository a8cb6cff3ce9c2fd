//! Property suites for the extension solver.

use std::sync::Arc;

use hpl_core::solver::{
    neumann_order, neumann_partial_sum, solve_extension, solve_extension_dense, ExtensionProblem,
    SolverSettings,
};
use hpl_core::testkit::{random_beltrami, Rng};
use hpl_core::torus::{harmonic_projection, FourierForm, TorusGeometry};
use hpl_core::C64;

fn curve() -> Arc<TorusGeometry> {
    Arc::new(TorusGeometry::square(1).unwrap())
}

fn dz(g: &Arc<TorusGeometry>) -> FourierForm {
    FourierForm::monomial(Arc::clone(g), 0, &[0, 0], 0b1, 0, C64::new(1.0, 0.0)).unwrap()
}

/// Random admissible curve problem: on a curve every Beltrami field is
/// integrable, so dense random fields exercise the full iteration.
fn random_problem(rng: &mut Rng, band: u32, sup: f64) -> ExtensionProblem {
    let g = curve();
    let phi = random_beltrami(rng, &g, 2, sup);
    let seed = dz(&g).scale(rng.complex(1.0) + C64::new(2.0, 0.0));
    ExtensionProblem::new(&seed, &phi, band, SolverSettings::default()).unwrap()
}

#[test]
fn fixed_point_agrees_with_neumann_series() {
    let mut rng = Rng::new(31);
    for _ in 0..20 {
        let problem = random_problem(&mut rng, 10, 0.3);
        let sol = solve_extension(&problem).unwrap();
        let order = neumann_order(problem.sup_norm(), problem.settings().tolerance);
        let partial_sum = neumann_partial_sum(&problem, order).unwrap();
        let diff = sol.sigma.sub(&partial_sum).unwrap().l2_norm();
        assert!(diff <= 10.0 * problem.settings().tolerance, "Neumann disagreement {diff:e}");
    }
}

#[test]
fn harmonic_part_never_moves() {
    let mut rng = Rng::new(32);
    for _ in 0..10 {
        let problem = random_problem(&mut rng, 8, 0.4);
        let sol = solve_extension(&problem).unwrap();
        let h = harmonic_projection(&sol.sigma);
        let h0 = harmonic_projection(problem.seed());
        // exactly: the constant mode is untouched by T i_φ
        assert_eq!(h.sub(&h0).unwrap().l2_norm(), 0.0);
    }
}

#[test]
fn certificates_within_contract() {
    let mut rng = Rng::new(33);
    for _ in 0..15 {
        let problem = random_problem(&mut rng, 12, 0.25);
        let sol = solve_extension(&problem).unwrap();
        let tol = problem.settings().tolerance;
        assert!(sol.fixed_point_residual <= tol);
        assert!(
            sol.obstruction_residual_partial <= 10.0 * tol + sol.truncation_residual,
            "∂ residual {:e} vs trunc {:e}",
            sol.obstruction_residual_partial,
            sol.truncation_residual
        );
        assert!(
            sol.obstruction_residual_dbar <= 10.0 * tol + sol.truncation_residual,
            "∂̄ residual {:e} vs trunc {:e}",
            sol.obstruction_residual_dbar,
            sol.truncation_residual
        );
        assert!(
            sol.d_closed_residual <= 10.0 * tol + 2.0 * sol.truncation_residual,
            "d-closed residual {:e} vs trunc {:e}",
            sol.d_closed_residual,
            sol.truncation_residual
        );
    }
}

#[test]
fn dense_oracle_matches_iteration() {
    let mut rng = Rng::new(34);
    for _ in 0..10 {
        let problem = random_problem(&mut rng, 4, 0.45);
        let sol = solve_extension(&problem).unwrap();
        let dense = solve_extension_dense(&problem).unwrap();
        let diff = sol.sigma.sub(&dense).unwrap().l2_norm();
        assert!(diff <= 1e-9 * sol.sigma.l2_norm().max(1.0), "dense mismatch {diff:e}");
    }
}

#[test]
fn superposition_in_the_seed() {
    let mut rng = Rng::new(35);
    let g = curve();
    for _ in 0..10 {
        let phi = random_beltrami(&mut rng, &g, 2, 0.35);
        let settings = SolverSettings::default();
        let s1 = dz(&g).scale(rng.complex(1.0));
        let s2 = dz(&g).scale(rng.complex(1.0));
        let sol1 =
            solve_extension(&ExtensionProblem::new(&s1, &phi, 8, settings).unwrap()).unwrap();
        let sol2 =
            solve_extension(&ExtensionProblem::new(&s2, &phi, 8, settings).unwrap()).unwrap();
        let sum = s1.add(&s2).unwrap();
        let sol12 =
            solve_extension(&ExtensionProblem::new(&sum, &phi, 8, settings).unwrap()).unwrap();
        let superposed = sol1.sigma.add(&sol2.sigma).unwrap();
        let diff = sol12.sigma.sub(&superposed).unwrap().l2_norm();
        assert!(diff <= 1e-10 * superposed.l2_norm().max(1.0));
    }
}

#[test]
fn stacked_section_rows_have_full_rank() {
    use hpl_core::solver::section_rows;
    use hpl_core::torus::PrimitiveBasis;
    let mut rng = Rng::new(36);
    let g = Arc::new(TorusGeometry::square(2).unwrap());
    let basis = PrimitiveBasis::new(Arc::clone(&g), 2).unwrap();
    for _ in 0..6 {
        // random constant (integrable) field within the unit sup-norm ball
        let phi = random_beltrami(&mut rng, &g, 0, 0.5);
        let mut stacked = hpl_core::CMatrix::zeros(5, 5);
        let partition = basis.hodge_type().partition();
        for alpha in 0..=2 {
            let rows = section_rows(&basis, alpha, &phi, 1, SolverSettings::default()).unwrap();
            let range = partition.range(alpha);
            stacked.rows_mut(range.start, range.len()).copy_from(&rows);
        }
        let min_sv = stacked.svd(false, false).singular_values.min();
        assert!(min_sv > 1e-8, "stacked sections nearly dependent: {min_sv:e}");
    }
}
