use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent stream for `(seed, index)`; splitmix64 keeps neighbouring
/// indices unrelated.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    ChaCha8Rng::seed_from_u64(z ^ (z >> 31))
}
