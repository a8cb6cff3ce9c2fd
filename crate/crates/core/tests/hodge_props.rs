//! Property suites for the block algebra of polarized Hodge structures.

use hpl_core::hodge::{
    block_lu, check_first_bilinear_relation, group_membership, in_unipotent_orbit, BlockMatrix,
    BlockPartition, HodgeFrame, HodgeType, Parity, Polarization,
};
use hpl_core::testkit::Rng;
use hpl_core::{C64, CMatrix};

const TOL: f64 = 1e-10;

fn random_matrix(rng: &mut Rng, n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| rng.complex(1.0))
}

fn random_partition(rng: &mut Rng, max_groups: usize, max_size: usize) -> BlockPartition {
    let groups = 1 + rng.usize_below(max_groups);
    let sizes: Vec<usize> = (0..groups).map(|_| 1 + rng.usize_below(max_size)).collect();
    BlockPartition::from_group_sizes(&sizes)
}

/// A matrix guaranteed to lie in the orbit: block-lower × block-unipotent.
fn random_orbit_matrix(rng: &mut Rng, partition: &BlockPartition) -> BlockMatrix {
    let m = partition.total();
    let groups = partition.groups();
    let mut lower = CMatrix::zeros(m, m);
    let mut upper = CMatrix::identity(m, m);
    for a in 0..groups {
        for b in 0..groups {
            let ra = partition.range(a);
            let rb = partition.range(b);
            for i in ra.clone() {
                for j in rb.clone() {
                    if a > b {
                        lower[(i, j)] = rng.complex(1.0);
                    } else if a < b {
                        upper[(i, j)] = rng.complex(1.0);
                    } else if a == b {
                        // well-conditioned diagonal blocks: dominant diagonal
                        lower[(i, j)] = if i == j {
                            rng.complex(0.5) + C64::new(2.0, 0.0)
                        } else {
                            rng.complex(0.5)
                        };
                    }
                }
            }
        }
    }
    BlockMatrix::new(lower * upper, partition.clone()).unwrap()
}

#[test]
fn factorization_round_trip_and_patterns() {
    let mut rng = Rng::new(21);
    for _ in 0..60 {
        let partition = random_partition(&mut rng, 4, 3);
        let a = random_orbit_matrix(&mut rng, &partition);
        let lu = block_lu(&a, TOL).expect("constructed in orbit");
        // Reconstruction within tol in max-norm.
        let product = lu.lower.entries() * lu.unipotent.entries();
        let defect = (product - a.entries()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(defect <= TOL * a.max_norm().max(1.0), "round trip defect {defect:e}");
        // Exact identity diagonal and exact zero sub-diagonal in the
        // unipotent factor; exact zero super-diagonal in the lower factor.
        for alpha in 0..partition.groups() {
            for beta in 0..partition.groups() {
                let u_block = lu.unipotent.block(alpha, beta);
                if alpha == beta {
                    let id = CMatrix::identity(u_block.nrows(), u_block.ncols());
                    assert_eq!(u_block, id);
                } else if alpha > beta {
                    assert!(u_block.iter().all(|z| z.re == 0.0 && z.im == 0.0));
                }
                if alpha < beta {
                    let l_block = lu.lower.block(alpha, beta);
                    assert!(l_block.iter().all(|z| z.re == 0.0 && z.im == 0.0));
                }
            }
        }
    }
}

#[test]
fn factorization_unique_under_small_perturbation() {
    let mut rng = Rng::new(22);
    for _ in 0..40 {
        let partition = random_partition(&mut rng, 3, 3);
        let a = random_orbit_matrix(&mut rng, &partition);
        let lu = block_lu(&a, TOL).unwrap();
        let scale = a.max_norm();
        let m = partition.total();
        let noise = CMatrix::from_fn(m, m, |_, _| rng.complex(TOL / 10.0 * scale / 2.0));
        let perturbed = BlockMatrix::new(a.entries() + noise, partition.clone()).unwrap();
        let lu2 = block_lu(&perturbed, TOL).unwrap();
        let drift = (lu.unipotent.entries() - lu2.unipotent.entries())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(drift <= 10.0 * TOL * scale.max(1.0), "unipotent factor drift {drift:e}");
    }
}

#[test]
fn orbit_criterion_matches_factorization() {
    let mut rng = Rng::new(23);
    let mut in_orbit = 0usize;
    for round in 0..300 {
        let partition = random_partition(&mut rng, 4, 3);
        let m = partition.total();
        let entries = if round % 5 == 0 {
            // plant a singular leading stack
            let mut e = random_matrix(&mut rng, m);
            let k = partition.range(0).end;
            for i in 0..k {
                for j in 0..k {
                    e[(i, j)] = C64::new(0.0, 0.0);
                }
            }
            e
        } else {
            random_matrix(&mut rng, m)
        };
        let a = BlockMatrix::new(entries, partition).unwrap();
        let criterion = in_unipotent_orbit(&a, TOL);
        let factorizes = block_lu(&a, TOL).is_ok();
        assert_eq!(criterion, factorizes, "criterion/factorization disagree");
        if criterion {
            in_orbit += 1;
        }
    }
    assert!(in_orbit > 150, "suite should mostly sample the orbit interior");
}

#[test]
fn isometry_group_closed_under_products() {
    let mut rng = Rng::new(24);
    // Weight-one symplectic form on C².
    let q = Polarization::new(
        CMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(0.0, 0.0),
                C64::new(1.0, 0.0),
                C64::new(-1.0, 0.0),
                C64::new(0.0, 0.0),
            ],
        ),
        Parity::Skew,
        1e-12,
    )
    .unwrap();
    for _ in 0..50 {
        // Random symplectic 2×2 = det-1 matrices.
        let mut g1 = random_matrix(&mut rng, 2);
        let mut g2 = random_matrix(&mut rng, 2);
        let d1 = (g1[(0, 0)] * g1[(1, 1)] - g1[(0, 1)] * g1[(1, 0)]).sqrt();
        let d2 = (g2[(0, 0)] * g2[(1, 1)] - g2[(0, 1)] * g2[(1, 0)]).sqrt();
        if d1.norm() < 1e-3 || d2.norm() < 1e-3 {
            continue;
        }
        g1 /= d1;
        g2 /= d2;
        assert!(group_membership(&g1, &q, 1e-9).unwrap());
        assert!(group_membership(&g2, &q, 1e-9).unwrap());
        let product = &g1 * &g2;
        assert!(group_membership(&product, &q, 1e-8).unwrap());
    }
}

#[test]
fn first_relation_invariant_under_block_recombination() {
    let mut rng = Rng::new(25);
    // Abelian-surface-like type with its cup-product polarization.
    let fx = hpl_core::period::presets::abelian_diagonal().unwrap();
    let basis = fx.basis();
    let q = Polarization::for_weight(basis.polarization_matrix().unwrap(), 2, 1e-9).unwrap();
    let ht: HodgeType = basis.hodge_type().clone();
    let frame = HodgeFrame::new(CMatrix::identity(5, 5), ht.clone()).unwrap();
    assert!(check_first_bilinear_relation(&frame, &q, 1e-9).unwrap());

    for _ in 0..20 {
        // Invertible block-diagonal recombination.
        let partition = ht.partition();
        let mut recomb = CMatrix::zeros(5, 5);
        for alpha in 0..partition.groups() {
            let r = partition.range(alpha);
            for i in r.clone() {
                for j in r.clone() {
                    recomb[(i, j)] =
                        if i == j { rng.complex(0.5) + C64::new(2.0, 0.0) } else { rng.complex(0.5) };
                }
            }
        }
        let rows = &recomb * frame.rows();
        let recombined = HodgeFrame::new(rows, ht.clone()).unwrap();
        assert!(check_first_bilinear_relation(&recombined, &q, 1e-8).unwrap());
    }
}
