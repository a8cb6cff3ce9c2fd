//! Exact spectral Dolbeault calculus on a flat complex torus, truncated to a
//! finite Fourier band.

pub mod beltrami;
pub mod form;
pub mod geometry;
pub mod multi_index;
pub mod operators;
pub mod primitive;
pub mod serialize;

pub use beltrami::{
    cartan_special_residual, conjugation_residual, contract, contract_full, contract_two_form,
    dbar_beltrami, exp_contract, exp_contract_graded, finite_distance_check, lie_bracket,
    lie_derivative, lie_derivative_anti, lie_derivative_hol, maurer_cartan_residual,
    sup_operator_norm, BeltramiDifferential, VectorTwoForm,
};
pub use form::{FourierForm, GradedForm};
pub use geometry::{FrequencyTable, TorusGeometry};
pub use operators::{
    dbar, dbar_star, exterior_derivative, green, harmonic_projection, laplacian_dbar,
    laplacian_partial, partial, partial_star, primitive_projection, t_operator,
};
pub use primitive::{kahler_const, kahler_form, kahler_power, primitive_projector, ConstForm, ConstMix, PrimitiveBasis};
pub use serialize::{read_beltrami, read_form, write_beltrami, write_form};
