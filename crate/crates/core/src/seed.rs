//! Seed discipline: every random component draws from a generator derived
//! from one top-level seed and a namespace string.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a sub-seed for `namespace` from `seed` (FNV-1a over the namespace,
/// mixed with splitmix64).
pub fn derive(seed: u64, namespace: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in namespace.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    splitmix64(seed ^ splitmix64(h))
}

pub fn rng(seed: u64, namespace: &str) -> Rng {
    ChaCha8Rng::seed_from_u64(derive(seed, namespace))
}

/// `k` distinct indices below `n`, in increasing order.
pub fn sample_sorted(seed: u64, namespace: &str, n: usize, k: usize) -> Vec<usize> {
    let mut idx = rand::seq::index::sample(&mut rng(seed, namespace), n, k.min(n)).into_vec();
    idx.sort_unstable();
    idx
}
