//! Computational polarized Hodge structures on flat complex tori.
//!
//! The crate has four layers:
//!
//! * [`hodge`] — finite-dimensional linear algebra of polarized Hodge
//!   structures: filtration bookkeeping, adapted frames, bilinear-relation
//!   checks, block LU factorization and the unipotent-orbit criterion.
//! * [`torus`] — exact spectral Dolbeault calculus on a flat complex torus
//!   truncated to a finite Fourier band: `∂`, `∂̄`, their adjoints, the Green
//!   operator, harmonic/primitive projections, and the contraction algebra
//!   of Beltrami differentials.
//! * [`solver`] — the fixed-point solver for the extension equation
//!   `σ = σ₀ − T i_φ σ` with `T = ∂̄* G ∂`, the d-closed extension
//!   `e^{i_φ} σ`, and the deformation-theoretic section tables it induces.
//! * [`period`] — period matrices of explicit torus families in the
//!   unipotent chart, Lie-theoretic section tables, and the cross checks
//!   between the two constructions (coincidence, block derivative relation,
//!   orbit containment, affine map).

pub mod error;
pub mod hodge;
pub mod period;
pub mod testkit;
pub mod solver;
pub mod torus;

pub use error::{Error, Result};

/// Complex scalar used throughout the crate.
pub type C64 = num_complex::Complex64;

/// Dense complex matrix used for frames, blocks and period matrices.
pub type CMatrix = nalgebra::DMatrix<C64>;

/// Dense complex vector.
pub type CVector = nalgebra::DVector<C64>;
