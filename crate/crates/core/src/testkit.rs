//! Deterministic fixtures for property suites.
//!
//! The verification subcommand and the test suites draw random forms and
//! Beltrami fields from a tiny self-contained generator so that runs are
//! reproducible bit for bit across platforms and thread counts.

use std::sync::Arc;

use crate::torus::{sup_operator_norm, BeltramiDifferential, FourierForm, TorusGeometry};
use crate::C64;

/// xorshift64* generator; deterministic and platform independent.
#[derive(Debug, Clone)]
pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self(seed.max(1))
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.0 = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    /// Uniform in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform in `[lo, hi)`.
    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    pub fn usize_below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    /// Uniform complex number in the square `[−r, r]²`.
    pub fn complex(&mut self, r: f64) -> C64 {
        C64::new(self.range(-r, r), self.range(-r, r))
    }
}

/// Dense random form with coefficients uniform in the unit square.
pub fn random_form(
    rng: &mut Rng,
    geometry: &Arc<TorusGeometry>,
    band: u32,
    p: usize,
    q: usize,
) -> FourierForm {
    let mut f = FourierForm::zero(Arc::clone(geometry), band, p, q).expect("valid bidegree");
    for c in f.coeffs_mut() {
        *c = rng.complex(1.0);
    }
    f
}

/// Random bidegree with `p + q ≤ d` (weights for the projection suites).
pub fn random_bidegree(rng: &mut Rng, d: usize) -> (usize, usize) {
    loop {
        let p = rng.usize_below(d + 1);
        let q = rng.usize_below(d + 1);
        if p + q <= d {
            return (p, q);
        }
    }
}

/// Dense random Beltrami field rescaled to the requested supremum operator
/// norm.
pub fn random_beltrami(
    rng: &mut Rng,
    geometry: &Arc<TorusGeometry>,
    band: u32,
    target_norm: f64,
) -> BeltramiDifferential {
    let d = geometry.dim();
    let mut phi = BeltramiDifferential::zero(Arc::clone(geometry), band);
    let mut k = vec![0i64; 2 * d];
    for mode in 0..geometry.mode_count(band) {
        geometry.mode_at(band, mode, &mut k);
        for i in 0..d {
            for j in 0..d {
                *phi.coeff_mut(mode, i, j) = rng.complex(1.0);
            }
        }
    }
    let norm = sup_operator_norm(&phi);
    if norm == 0.0 {
        return phi;
    }
    phi.scale(C64::new(target_norm / norm, 0.0))
}

/// Random *integrable* Beltrami field with the requested supremum norm.
///
/// On a curve every field is integrable; in higher dimension the only
/// constant-free closed-form integrable fields available here are the
/// constants, so `d ≥ 2` returns a random constant field.
pub fn random_integrable_beltrami(
    rng: &mut Rng,
    geometry: &Arc<TorusGeometry>,
    band: u32,
    target_norm: f64,
) -> BeltramiDifferential {
    if geometry.dim() == 1 {
        random_beltrami(rng, geometry, band, target_norm)
    } else {
        random_beltrami(rng, geometry, 0, target_norm)
    }
}
