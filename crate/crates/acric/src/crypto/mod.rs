//! Cryptographic toolbox: keyed hashing, one-time-pad XOR, group arithmetic
//! for the key exchange, and randomness.
//!
//! Nothing here is hardened against side channels; the crate targets
//! simulation and interoperability testing, not constant-time operation.

mod dh;

pub use dh::{derive_session_key, mod_exp, random_scalar, DhGroup, DhKeyPair};

use hmac::{Hmac, KeyInit, Mac};
use rand::{CryptoRng, RngCore, TryRngCore};
use sha2::Sha256;
use thiserror::Error;

pub const KEY_LEN: usize = 32;
pub const TAG_LEN: usize = 32;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CryptoError {
    #[error("hmac key must not be empty")]
    EmptyKey,
    #[error("one-time-pad key length {key} does not match data length {data}")]
    LengthMismatch { data: usize, key: usize },
    #[error("modulus must be greater than 1")]
    InvalidModulus,
    #[error("degenerate key-exchange value")]
    DegenerateSharedSecret,
    #[error("count must be positive")]
    ZeroCount,
    #[error("system entropy source failed")]
    EntropyFailure,
}

/// Long-term secret pre-provisioned to every secured device.
#[derive(Clone, PartialEq, Eq)]
pub struct MasterKey([u8; KEY_LEN]);

/// Per-pair or per-group secret established at initialization.
#[derive(Clone, PartialEq, Eq)]
pub struct SessionKey([u8; KEY_LEN]);

macro_rules! key_impl {
    ($ty:ident) => {
        impl $ty {
            pub fn from_bytes(bytes: [u8; KEY_LEN]) -> Self {
                Self(bytes)
            }

            pub fn random(rng: &mut (impl RngCore + CryptoRng)) -> Self {
                let mut bytes = [0u8; KEY_LEN];
                rng.fill_bytes(&mut bytes);
                Self(bytes)
            }

            pub fn as_bytes(&self) -> &[u8; KEY_LEN] {
                &self.0
            }
        }

        // Secrets never end up in logs or panic messages.
        impl std::fmt::Debug for $ty {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                write!(f, concat!(stringify!($ty), "(<redacted>)"))
            }
        }
    };
}

key_impl!(MasterKey);
key_impl!(SessionKey);

/// Fixed 32-byte HMAC output.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct AuthTag([u8; TAG_LEN]);

impl AuthTag {
    pub fn from_bytes(bytes: [u8; TAG_LEN]) -> Self {
        Self(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; TAG_LEN] {
        &self.0
    }
}

impl std::fmt::Debug for AuthTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "AuthTag({})", hex::encode(&self.0[..6]))
    }
}

/// HMAC-SHA-256.
pub fn hmac(key: &[u8], data: &[u8]) -> Result<AuthTag, CryptoError> {
    if key.is_empty() {
        return Err(CryptoError::EmptyKey);
    }
    let mut mac = Hmac::<Sha256>::new_from_slice(key).expect("hmac accepts any non-empty key");
    mac.update(data);
    Ok(AuthTag(mac.finalize().into_bytes().into()))
}

/// Bytewise XOR of equal-length buffers; involutive.
pub fn otp_xor(data: &[u8], key: &[u8]) -> Result<Vec<u8>, CryptoError> {
    if data.len() != key.len() {
        return Err(CryptoError::LengthMismatch { data: data.len(), key: key.len() });
    }
    Ok(data.iter().zip(key).map(|(d, k)| d ^ k).collect())
}

/// Cryptographically secure random bytes from the operating system.
pub fn random_bytes(count: usize) -> Result<Vec<u8>, CryptoError> {
    if count == 0 {
        return Err(CryptoError::ZeroCount);
    }
    let mut buf = vec![0u8; count];
    rand::rngs::OsRng
        .try_fill_bytes(&mut buf)
        .map_err(|_| CryptoError::EntropyFailure)?;
    Ok(buf)
}

/// An infallible CSPRNG backed by the operating system; any entropy failure
/// is fatal by design.
pub fn os_rng() -> impl RngCore + CryptoRng {
    rand::rngs::OsRng.unwrap_err()
}
