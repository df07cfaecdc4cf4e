//! Seed plumbing shared by every randomized routine.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type StdRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> StdRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Mixes a tag into a seed (splitmix64 finalizer) so that independent stages
/// seeded from one user seed do not share a stream.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sorted ranks of a uniform `count`-subset of `0..total` (selection
/// sampling). Consumes one draw per examined rank, so the outcome depends only
/// on `(total, count)` and the generator state.
pub fn select_ranks<R: Rng + ?Sized>(total: usize, count: usize, rng: &mut R) -> Vec<usize> {
    let count = count.min(total);
    let mut out = Vec::with_capacity(count);
    if count == total {
        out.extend(0..total);
        return out;
    }
    let mut needed = count;
    for r in 0..total {
        if needed == 0 {
            break;
        }
        let remaining = total - r;
        if rng.gen_range(0..remaining) < needed {
            out.push(r);
            needed -= 1;
        }
    }
    out
}

/// `round(fraction * total)`, clamped to `total`.
pub fn exact_count(fraction: f64, total: usize) -> usize {
    ((fraction * total as f64).round() as usize).min(total)
}
