//! Seeded random test batteries.
//!
//! Every randomized check draws from `ChaCha8Rng::seed_from_u64(seed)` so that a seed pins
//! the battery on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{Algebra, Element};
use crate::linalg::{CVector, C64};

pub type BatteryRng = ChaCha8Rng;

pub fn rng(seed: u64) -> BatteryRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn complex(rng: &mut BatteryRng) -> C64 {
    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

/// Random element with coefficients uniform in the unit square.
///
/// For the torus, `support` limits monomials to `|n|, |m| <= support` so that products of a
/// few such elements stay inside the truncation window.
pub fn element(alg: &Algebra, rng: &mut BatteryRng, support: Option<usize>) -> Element {
    let coeffs = CVector::from_fn(alg.dim(), |k, _| {
        let keep = match (alg.torus_exponents(k), support) {
            (Some((n, m)), Some(s)) => n.unsigned_abs() as usize <= s && m.unsigned_abs() as usize <= s,
            _ => true,
        };
        if keep {
            complex(rng)
        } else {
            C64::from(0.0)
        }
    });
    alg.element(coeffs).expect("dimension matches")
}

pub fn self_adjoint(alg: &Algebra, rng: &mut BatteryRng, support: Option<usize>) -> Element {
    let a = element(alg, rng, support);
    a.add(&a.adjoint()).expect("same backend").scale_real(0.5)
}
