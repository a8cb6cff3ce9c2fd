//! Named torus fixtures.
//!
//! * `elliptic` — the square elliptic curve, one-parameter family `t dz̄⊗∂`.
//! * `abelian-diagonal` — the square abelian surface with the two-parameter
//!   diagonal family.
//! * `abelian-full` — the three-parameter symmetric family, the full
//!   polarized deformation space of the (principally polarized) surface.
//! * `abelian-degenerate` — a deliberately degenerate three-parameter family
//!   with a repeated direction; its affine Jacobian drops to rank two.

use std::sync::Arc;

use super::BeltramiFamily;
use crate::error::{Error, Result};
use crate::torus::{BeltramiDifferential, PrimitiveBasis, TorusGeometry};
use crate::{C64, CMatrix};

/// A ready-to-run fixture: base-point data plus a family.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: &'static str,
    pub family: BeltramiFamily,
}

impl Fixture {
    pub fn basis(&self) -> &Arc<PrimitiveBasis> {
        self.family.basis()
    }

    pub fn geometry(&self) -> &Arc<TorusGeometry> {
        self.family.geometry()
    }
}

pub const PRESET_NAMES: [&str; 4] =
    ["elliptic", "abelian-diagonal", "abelian-full", "abelian-degenerate"];

fn unit_matrix_field(
    geometry: &Arc<TorusGeometry>,
    entries: &[(usize, usize)],
) -> Result<BeltramiDifferential> {
    let d = geometry.dim();
    let mut m = CMatrix::zeros(d, d);
    for &(i, j) in entries {
        m[(i, j)] = C64::new(1.0, 0.0);
    }
    BeltramiDifferential::constant(Arc::clone(geometry), &m)
}

/// Square elliptic curve with the one-parameter constant family.
pub fn elliptic() -> Result<Fixture> {
    let geometry = Arc::new(TorusGeometry::square(1)?);
    let basis = Arc::new(PrimitiveBasis::new(Arc::clone(&geometry), 1)?);
    let family = BeltramiFamily::new(basis, vec![unit_matrix_field(&geometry, &[(0, 0)])?])?;
    Ok(Fixture { name: "elliptic", family })
}

/// Square abelian surface, diagonal two-parameter family.
pub fn abelian_diagonal() -> Result<Fixture> {
    let geometry = Arc::new(TorusGeometry::square(2)?);
    let basis = Arc::new(PrimitiveBasis::new(Arc::clone(&geometry), 2)?);
    let family = BeltramiFamily::new(
        basis,
        vec![unit_matrix_field(&geometry, &[(0, 0)])?, unit_matrix_field(&geometry, &[(1, 1)])?],
    )?;
    Ok(Fixture { name: "abelian-diagonal", family })
}

/// Square abelian surface, full symmetric three-parameter family. The
/// symmetric (rather than upper-triangular) off-diagonal direction keeps the
/// Kähler form of type (1,1) on every deformed fiber, so the family stays
/// polarized; its Kodaira–Spencer contraction images span the primitive
/// (1,1) space and the affine Jacobian has full rank three.
pub fn abelian_full() -> Result<Fixture> {
    let geometry = Arc::new(TorusGeometry::square(2)?);
    let basis = Arc::new(PrimitiveBasis::new(Arc::clone(&geometry), 2)?);
    let family = BeltramiFamily::new(
        basis,
        vec![
            unit_matrix_field(&geometry, &[(0, 0)])?,
            unit_matrix_field(&geometry, &[(0, 1), (1, 0)])?,
            unit_matrix_field(&geometry, &[(1, 1)])?,
        ],
    )?;
    Ok(Fixture { name: "abelian-full", family })
}

/// Degenerate three-parameter family: the second direction repeats the
/// first, so the affine Jacobian rank drops to two.
pub fn abelian_degenerate() -> Result<Fixture> {
    let geometry = Arc::new(TorusGeometry::square(2)?);
    let basis = Arc::new(PrimitiveBasis::new(Arc::clone(&geometry), 2)?);
    let family = BeltramiFamily::new(
        basis,
        vec![
            unit_matrix_field(&geometry, &[(0, 0)])?,
            unit_matrix_field(&geometry, &[(0, 0)])?,
            unit_matrix_field(&geometry, &[(1, 1)])?,
        ],
    )?;
    Ok(Fixture { name: "abelian-degenerate", family })
}

/// Look up a preset by CLI name.
pub fn by_name(name: &str) -> Result<Fixture> {
    match name {
        "elliptic" => elliptic(),
        "abelian-diagonal" => abelian_diagonal(),
        "abelian-full" => abelian_full(),
        "abelian-degenerate" => abelian_degenerate(),
        other => Err(Error::Parse(format!(
            "unknown preset `{other}`; available: {}",
            PRESET_NAMES.join(", ")
        ))),
    }
}
