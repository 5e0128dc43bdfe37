//! Seeded random initial data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::KineticState;
use crate::error::Result;
use crate::lattice::check_density;

pub const DEFAULT_SEED: u64 = 20_140_101;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform point on the simplex `{f >= 0, sum f = rho}` by stick-breaking:
/// the `k`-th piece takes a `Beta(1, n - k)` share of what is left.
pub fn simplex_point<R: Rng + ?Sized>(rng: &mut R, n: usize, rho: f64) -> Result<KineticState> {
    check_density(rho)?;
    let mut f = Vec::with_capacity(n);
    let mut left = 1.0f64;
    for k in 1..n {
        let u: f64 = rng.random();
        let share = 1.0 - (1.0 - u).powf(1.0 / (n - k) as f64);
        let piece = left * share;
        f.push(piece);
        left -= piece;
    }
    f.push(left.max(0.0));
    KineticState::new(f.into_iter().map(|x| x * rho).collect())
}
