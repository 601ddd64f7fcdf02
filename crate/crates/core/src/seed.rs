//! Deterministic derivation of child seeds from a base seed.

/// SplitMix64 finalizer applied to `base` mixed with `index`.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for a labelled stream, e.g. `("train", point)`.
pub fn derive_seed_tagged(base: u64, tag: &str, index: u64) -> u64 {
    let t = tag.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3));
    derive_seed(derive_seed(base, t), index)
}
