//! Fixed 64-bit hash functions.
//!
//! FNV-1a is the crate-wide string hash: date seeds, TLD hashing, file
//! digests and the Bloom filter's first hash all use it. The second Bloom
//! hash is the SplitMix64 finalizer applied to the FNV value, salted so the
//! pair behaves independently. Both are pinned here so files written by one
//! build remain readable by another.
//!
//! Vectors: `fnv1a64("2018-12-04") = 5662194355879909381`,
//! `fnv1a64("org") = 1872244109670850393`.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a over raw bytes.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// SplitMix64 finalizer; used to derive a second hash from a first.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
