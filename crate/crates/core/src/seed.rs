//! Splittable seed derivation.
//!
//! Every random operation in the workbench derives its seed from a master
//! seed and a stream index through [`derive_seed`]. The derivation is a
//! SplitMix64 finalizer over the xor of the master seed with the
//! golden-ratio-multiplied stream index, so parallel consumers (users in a
//! dataset, cells in a sweep) get statistically independent, reproducible
//! streams regardless of evaluation order.

/// Derive a child seed from `(master, stream)`.
///
/// Identical inputs always give the identical child seed; distinct streams
/// give decorrelated seeds.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
