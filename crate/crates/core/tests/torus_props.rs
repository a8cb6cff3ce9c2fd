//! Property suites for the spectral Dolbeault layer.

use std::sync::Arc;

use hpl_core::testkit::{random_beltrami, random_bidegree, random_form, Rng};
use hpl_core::torus::{
    cartan_special_residual, conjugation_residual, contract_full, dbar, dbar_star, green,
    harmonic_projection, laplacian_dbar, laplacian_partial, lie_derivative, lie_derivative_anti,
    lie_derivative_hol, partial, partial_star, sup_operator_norm, t_operator, FourierForm,
    GradedForm, TorusGeometry,
};
use hpl_core::C64;

fn geometries() -> Vec<Arc<TorusGeometry>> {
    let skew_tau = hpl_core::CMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(0.2, 1.1),
            C64::new(0.1, 0.3),
            C64::new(0.1, 0.3),
            C64::new(-0.1, 0.8),
        ],
    );
    let metric = hpl_core::CMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(1.3, 0.0),
            C64::new(0.2, 0.4),
            C64::new(0.2, -0.4),
            C64::new(1.1, 0.0),
        ],
    );
    vec![
        Arc::new(TorusGeometry::square(1).unwrap()),
        Arc::new(TorusGeometry::square(2).unwrap()),
        Arc::new(TorusGeometry::new(skew_tau, metric).unwrap()),
    ]
}

fn band_for(geometry: &TorusGeometry) -> u32 {
    if geometry.dim() == 1 {
        4
    } else {
        2
    }
}

#[test]
fn adjointness_of_dbar_and_partial() {
    let mut rng = Rng::new(11);
    for geometry in geometries() {
        let d = geometry.dim();
        let band = band_for(&geometry);
        for _ in 0..34 {
            let (p, q) = random_bidegree(&mut rng, d);
            if q < d {
                let a = random_form(&mut rng, &geometry, band, p, q);
                let b = random_form(&mut rng, &geometry, band, p, q + 1);
                let lhs = dbar(&a).unwrap().inner_product(&b).unwrap();
                let rhs = a.inner_product(&dbar_star(&b).unwrap()).unwrap();
                let bound = 1e-10 * a.l2_norm() * b.l2_norm();
                assert!((lhs - rhs).norm() <= bound, "dbar adjoint defect {:e}", (lhs - rhs).norm());
            }
            if p < d {
                let a = random_form(&mut rng, &geometry, band, p, q);
                let b = random_form(&mut rng, &geometry, band, p + 1, q);
                let lhs = partial(&a).unwrap().inner_product(&b).unwrap();
                let rhs = a.inner_product(&partial_star(&b).unwrap()).unwrap();
                let bound = 1e-10 * a.l2_norm() * b.l2_norm();
                assert!((lhs - rhs).norm() <= bound, "partial adjoint defect {:e}", (lhs - rhs).norm());
            }
        }
    }
}

#[test]
fn hodge_identities() {
    let mut rng = Rng::new(12);
    for geometry in geometries() {
        let d = geometry.dim();
        let band = band_for(&geometry);
        for _ in 0..25 {
            let (p, q) = random_bidegree(&mut rng, d);
            let f = random_form(&mut rng, &geometry, band, p, q);
            let scale = f.l2_norm().max(1.0);

            // Δ G = G Δ = I − ℍ.
            let lhs = laplacian_dbar(&green(&f).unwrap()).unwrap();
            let rhs = f.sub(&harmonic_projection(&f)).unwrap();
            assert!(lhs.sub(&rhs).unwrap().l2_norm() <= 1e-12 * scale);
            let gl = green(&laplacian_dbar(&f).unwrap()).unwrap();
            assert!(gl.sub(&rhs).unwrap().l2_norm() <= 1e-12 * scale);

            // ∂̄ G = G ∂̄ and ℍ G = G ℍ = 0 and ∂̄ ℍ = 0.
            if q < d {
                let a = dbar(&green(&f).unwrap()).unwrap();
                let b = green(&dbar(&f).unwrap()).unwrap();
                assert!(a.sub(&b).unwrap().l2_norm() <= 1e-12 * scale);
                assert!(dbar(&harmonic_projection(&f)).unwrap().l2_norm() <= 1e-12 * scale);
            }
            assert!(harmonic_projection(&green(&f).unwrap()).l2_norm() <= 1e-12 * scale);
            assert!(green(&harmonic_projection(&f)).unwrap().l2_norm() <= 1e-12 * scale);
        }
    }
}

#[test]
fn kahler_equality_of_laplacians() {
    let mut rng = Rng::new(13);
    for geometry in geometries() {
        let d = geometry.dim();
        let band = band_for(&geometry);
        for _ in 0..25 {
            let (p, q) = random_bidegree(&mut rng, d);
            let f = random_form(&mut rng, &geometry, band, p, q);
            let a = laplacian_dbar(&f).unwrap();
            let b = laplacian_partial(&f).unwrap();
            assert!(
                a.sub(&b).unwrap().l2_norm() <= 1e-12 * f.l2_norm().max(1.0),
                "Laplacians differ at ({p},{q}), d = {d}"
            );
        }
    }
}

/// The four-term energy identity behind `‖T‖ ≤ 1`, with degree guards
/// matching the operator definitions.
fn quasi_isometry_defect(g: &FourierForm) -> (f64, f64, f64) {
    let (p, q) = g.bidegree();
    let d = g.geometry().dim();
    let tg = t_operator(g).unwrap();
    let lhs = tg.l2_norm_sqr();
    let mut rhs = g.l2_norm_sqr() - harmonic_projection(g).l2_norm_sqr();
    // ‖∂∂*Gg‖²
    if p > 0 {
        rhs -= partial(&partial_star(&green(g).unwrap()).unwrap()).unwrap().l2_norm_sqr();
    }
    // ‖∂̄G∂g‖²
    if p < d && q < d {
        rhs -= dbar(&green(&partial(g).unwrap()).unwrap()).unwrap().l2_norm_sqr();
    }
    (lhs, rhs, g.l2_norm_sqr())
}

#[test]
fn quasi_isometry_energy_identity() {
    let mut rng = Rng::new(14);
    for geometry in geometries() {
        let d = geometry.dim();
        let band = band_for(&geometry);
        for _ in 0..60 {
            let (p, q) = random_bidegree(&mut rng, d);
            let g = random_form(&mut rng, &geometry, band, p, q);
            let (lhs, rhs, norm_sqr) = quasi_isometry_defect(&g);
            assert!(
                (lhs - rhs).abs() <= 1e-10 * norm_sqr.max(1.0),
                "energy identity defect {:e} at ({p},{q})",
                (lhs - rhs).abs()
            );
            assert!(lhs.sqrt() <= norm_sqr.sqrt() * (1.0 + 1e-12));
        }
    }
}

#[test]
fn generalized_cartan_identity() {
    let mut rng = Rng::new(15);
    for geometry in geometries() {
        let d = geometry.dim();
        if d < 2 {
            continue;
        }
        for _ in 0..20 {
            let phi = random_beltrami(&mut rng, &geometry, 1, 0.6);
            let (p, q) = random_bidegree(&mut rng, d);
            let sigma = random_form(&mut rng, &geometry, 1, p, q);
            let res = cartan_special_residual(&phi, &sigma).unwrap();
            assert!(res <= 1e-8 * sigma.l2_norm().max(1.0), "Cartan residual {res:e} at ({p},{q})");
        }
    }
}

#[test]
fn conjugation_identity_random_fields() {
    let mut rng = Rng::new(16);
    for geometry in geometries() {
        let d = geometry.dim();
        let band = if d == 1 { 3 } else { 1 };
        for _ in 0..12 {
            let phi = random_beltrami(&mut rng, &geometry, band, 0.5);
            let (p, q) = random_bidegree(&mut rng, d);
            let f = random_form(&mut rng, &geometry, band, p, q);
            let unit = f.scale(C64::new(1.0 / f.l2_norm().max(1e-12), 0.0));
            let res = conjugation_residual(&phi, &unit).unwrap();
            assert!(res <= 1e-8, "conjugation residual {res:e} at ({p},{q}), d = {d}");
        }
    }
}

#[test]
fn lie_derivative_splits_into_bidegree_parts() {
    let mut rng = Rng::new(17);
    let geometry = Arc::new(TorusGeometry::square(2).unwrap());
    for _ in 0..10 {
        let phi = random_beltrami(&mut rng, &geometry, 1, 0.5);
        let (p, q) = random_bidegree(&mut rng, 2);
        let f = random_form(&mut rng, &geometry, 1, p, q);
        let full = lie_derivative(&phi, &f).unwrap();
        let mut parts = lie_derivative_hol(&phi, &f).unwrap();
        parts.merge(&lie_derivative_anti(&phi, &f).unwrap()).unwrap();
        let diff = full.sub(&parts).unwrap();
        assert!(diff.l2_norm() <= 1e-12 * f.l2_norm().max(1.0));
    }
}

#[test]
fn contraction_nilpotent_and_norm_bounded() {
    let mut rng = Rng::new(18);
    for geometry in geometries() {
        let d = geometry.dim();
        for _ in 0..15 {
            let phi = random_beltrami(&mut rng, &geometry, 1, 0.7);
            let (p, q) = random_bidegree(&mut rng, d);
            let f = random_form(&mut rng, &geometry, 1, p, q);

            // i_φ^{p+1} f = 0 exactly.
            let mut iter = f.clone();
            for _ in 0..=p {
                iter = contract_full(&phi, &iter).unwrap();
            }
            assert!(iter.is_zero(), "nilpotency violated at ({p},{q})");

            // ‖i_φ f‖ ≤ ‖φ‖_sup ‖f‖ up to the sampling slack of the norm.
            let once = contract_full(&phi, &f).unwrap();
            let bound = sup_operator_norm(&phi) * f.l2_norm();
            assert!(
                once.l2_norm() <= bound * (1.0 + 2e-3) + 1e-12,
                "contraction bound: {:e} vs {:e}",
                once.l2_norm(),
                bound
            );
        }
    }
}

#[test]
fn graded_exterior_derivative_squares_to_zero() {
    let mut rng = Rng::new(19);
    let geometry = Arc::new(TorusGeometry::square(2).unwrap());
    for _ in 0..10 {
        let (p, q) = random_bidegree(&mut rng, 2);
        let f = random_form(&mut rng, &geometry, 2, p, q);
        let graded = GradedForm::from_form(f);
        let dd = hpl_core::torus::exterior_derivative(
            &hpl_core::torus::exterior_derivative(&graded).unwrap(),
        )
        .unwrap();
        assert!(dd.l2_norm() <= 1e-12);
    }
}
