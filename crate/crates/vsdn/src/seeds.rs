//! Derived RNG streams.
//!
//! Every randomized stage derives an independent seed from (base seed,
//! indices) with a splitmix64 chain, so per-item work is deterministic
//! regardless of iteration or worker order.

/// The splitmix64 output function.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Derive a child seed from a base seed and a stream of indices.
pub fn derive_seed(base: u64, indices: &[u64]) -> u64 {
    let mut s = splitmix64(base);
    for &i in indices {
        s = splitmix64(s ^ i.wrapping_mul(0x9e3779b97f4a7c15));
    }
    s
}
