use alloc::string::String;

use sha2::{Digest, Sha256};

/// Lowercase hex SHA-256 of `bytes`. Used everywhere a stable content digest
/// is recorded (rename maps, templates, prompts, configs).
pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let out = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for byte in out {
        const TABLE: &[u8; 16] = b"0123456789abcdef";
        hex.push(TABLE[(byte >> 4) as usize] as char);
        hex.push(TABLE[(byte & 0xf) as usize] as char);
    }
    hex
}
