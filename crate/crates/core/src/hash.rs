//! Stable config fingerprints for dataset manifests.

/// FNV-1a over a byte slice.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Fingerprint of a serializable config. Struct field order is fixed by the
/// type definition, so the JSON byte stream (and hence the hash) is stable.
pub fn config_hash<T: serde::Serialize>(value: &T) -> u64 {
    let bytes = serde_json::to_vec(value).expect("config serialization cannot fail");
    fnv1a64(&bytes)
}
