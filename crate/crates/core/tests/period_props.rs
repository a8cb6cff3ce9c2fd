//! Property suites for the period pipeline on the fixture families.

use hpl_core::hodge::is_horizontal;
use hpl_core::period::{
    affine_jacobian_rank, compare_sections, deformation_sections, derivative_relation_residual,
    differential_blocks, lie_sections, oracle_frame, oracle_period, orbit_check_frame, orbit_scan,
    presets, LU_TOL,
};
use hpl_core::solver::SolverSettings;
use hpl_core::testkit::Rng;
use hpl_core::C64;

fn random_admissible_point(rng: &mut Rng, n: usize, radius: f64) -> Vec<C64> {
    // Uniform in a polydisk comfortably inside the certified radius.
    let cap = 0.7 * radius / (n as f64).sqrt();
    (0..n).map(|_| rng.complex(cap / 2.0_f64.sqrt())).collect()
}

#[test]
fn coincidence_on_constant_fixtures() {
    let mut rng = Rng::new(41);
    for fixture in [
        presets::elliptic().unwrap(),
        presets::abelian_diagonal().unwrap(),
        presets::abelian_full().unwrap(),
        presets::abelian_degenerate().unwrap(),
    ] {
        let family = &fixture.family;
        for _ in 0..6 {
            let t = random_admissible_point(&mut rng, family.parameters(), family.admissible_radius());
            let diff = compare_sections(family, &t, 2, SolverSettings::default()).unwrap();
            assert!(diff <= 1e-6, "{}: coincidence defect {diff:e}", fixture.name);
        }
    }
}

#[test]
fn leading_blocks_are_exact_identities() {
    let mut rng = Rng::new(42);
    let fixture = presets::abelian_diagonal().unwrap();
    let family = &fixture.family;
    let t = random_admissible_point(&mut rng, 2, family.admissible_radius());
    let partition = family.hodge_type().partition();

    let lie = lie_sections(&oracle_period(family, &t).unwrap(), family.hodge_type());
    let def = deformation_sections(family, &t, 2, SolverSettings::default()).unwrap();
    for table in [&lie, &def] {
        for alpha in 0..partition.groups() {
            let rows = table.rows(alpha);
            let range = partition.range(alpha);
            for r in 0..rows.nrows() {
                for c in range.clone() {
                    let expected =
                        if c == range.start + r { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
                    assert_eq!(rows[(r, c)], expected, "leading block must be exact");
                }
            }
        }
    }
}

#[test]
fn transversality_relation_on_fixtures() {
    let mut rng = Rng::new(43);
    let fixture = presets::abelian_full().unwrap();
    let family = &fixture.family;
    for _ in 0..4 {
        let t = random_admissible_point(&mut rng, 3, family.admissible_radius());
        for mu in 0..3 {
            let res = derivative_relation_residual(family, &t, mu, 1e-3).unwrap();
            assert!(res <= 1e-6, "derivative relation residual {res:e}");
        }
    }
}

#[test]
fn differentials_are_horizontal_by_construction() {
    let mut rng = Rng::new(44);
    let fixture = presets::abelian_full().unwrap();
    let family = &fixture.family;
    let t = random_admissible_point(&mut rng, 3, family.admissible_radius());
    for tangent in differential_blocks(family, &t, 1e-3).unwrap() {
        assert!(is_horizontal(&tangent));
    }
}

#[test]
fn orbit_containment_across_fixtures() {
    let mut rng = Rng::new(45);
    for fixture in [
        presets::elliptic().unwrap(),
        presets::abelian_diagonal().unwrap(),
        presets::abelian_full().unwrap(),
    ] {
        let family = &fixture.family;
        let path: Vec<Vec<C64>> = (0..6)
            .map(|_| random_admissible_point(&mut rng, family.parameters(), family.admissible_radius()))
            .collect();
        let report = orbit_scan(family, &path).unwrap();
        for point in &report {
            assert!(point.check.in_orbit && point.check.lu_ok, "{}: orbit failure", fixture.name);
            assert!(point.check.min_leading_determinant > 0.0);
        }
    }
}

#[test]
fn affine_ranks_on_fixture_families() {
    let full = presets::abelian_full().unwrap();
    let mut rng = Rng::new(46);
    for _ in 0..3 {
        let t = random_admissible_point(&mut rng, 3, full.family.admissible_radius());
        assert_eq!(affine_jacobian_rank(&full.family, &t, 1e-3).unwrap(), 3);
    }
    let degenerate = presets::abelian_degenerate().unwrap();
    let t = random_admissible_point(&mut rng, 3, degenerate.family.admissible_radius());
    assert_eq!(affine_jacobian_rank(&degenerate.family, &t, 1e-3).unwrap(), 2);
}

#[test]
fn synthetic_counterexample_detected() {
    use hpl_core::hodge::{BlockMatrix, BlockPartition};
    let partition = BlockPartition::from_group_sizes(&[1, 1]);
    let swap = hpl_core::CMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
        ],
    );
    let frame = BlockMatrix::new(swap, partition).unwrap();
    let check = orbit_check_frame(&frame, LU_TOL);
    assert!(!check.in_orbit && !check.lu_ok);
    assert_eq!(check.failed_block, Some(0));
}

#[test]
fn oracle_frame_rows_group_by_deformed_type() {
    // The α-th row group of the oracle frame spans the deformed (n−α, α)
    // piece. At t = 0 those pieces are the base blocks, so the frame is
    // block diagonal (the kernel solver may rotate within a block); the
    // unipotent factor is the exact identity.
    let fixture = presets::abelian_full().unwrap();
    let family = &fixture.family;
    let zero = vec![C64::new(0.0, 0.0); 3];
    let frame = oracle_frame(family, &zero).unwrap();
    let groups = frame.partition().groups();
    for alpha in 0..groups {
        for beta in 0..groups {
            if alpha == beta {
                continue;
            }
            let off = frame.block(alpha, beta).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(off < 1e-10, "off-diagonal block ({alpha},{beta}) is {off:e}");
        }
    }
    let pp = oracle_period(family, &zero).unwrap();
    let m = family.hodge_type().dim();
    let defect = (pp.matrix().entries() - hpl_core::CMatrix::identity(m, m))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    assert!(defect < 1e-12);
}
