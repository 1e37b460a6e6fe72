//! Hashing and signing primitives shared by every other module.
//!
//! SHA-256 for digests (matching the 256-bit values the anchor contract
//! stores) and Ed25519 for readout signatures. All operations here are
//! pure functions over immutable values and safe to call concurrently.

use std::fmt;

use ed25519_dalek::{Signer as _, Verifier as _};
use rand::RngCore;
use sha2::{Digest as _, Sha256};
use thiserror::Error;

/// Length of a [`Digest`] in bytes.
pub const DIGEST_LEN: usize = 32;
/// Length of a serialized [`PublicKey`] in bytes.
pub const PUBLIC_KEY_LEN: usize = 32;
/// Length of an Ed25519 signature in bytes.
pub const SIGNATURE_LEN: usize = 64;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CryptoError {
    #[error("malformed key: {0}")]
    MalformedKey(&'static str),
    #[error("invalid hex: expected {expected} bytes")]
    InvalidHex { expected: usize },
}

/// A 32-byte SHA-256 output. Equality is byte-wise.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Digest([u8; DIGEST_LEN]);

impl Digest {
    pub const ZERO: Digest = Digest([0u8; DIGEST_LEN]);

    pub fn from_bytes(bytes: [u8; DIGEST_LEN]) -> Self {
        Digest(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; DIGEST_LEN] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self, CryptoError> {
        let bytes = hex::decode(s).map_err(|_| CryptoError::InvalidHex {
            expected: DIGEST_LEN,
        })?;
        let arr: [u8; DIGEST_LEN] = bytes.try_into().map_err(|_| CryptoError::InvalidHex {
            expected: DIGEST_LEN,
        })?;
        Ok(Digest(arr))
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// SHA-256 of `data`.
pub fn hash(data: &[u8]) -> Digest {
    let mut h = Sha256::new();
    h.update(data);
    Digest(h.finalize().into())
}

/// An Ed25519 verification key identifying one sensor or actuator.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct PublicKey([u8; PUBLIC_KEY_LEN]);

impl PublicKey {
    pub fn from_bytes(bytes: [u8; PUBLIC_KEY_LEN]) -> Self {
        PublicKey(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; PUBLIC_KEY_LEN] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self, CryptoError> {
        let bytes = hex::decode(s).map_err(|_| CryptoError::InvalidHex {
            expected: PUBLIC_KEY_LEN,
        })?;
        let arr: [u8; PUBLIC_KEY_LEN] = bytes.try_into().map_err(|_| CryptoError::InvalidHex {
            expected: PUBLIC_KEY_LEN,
        })?;
        Ok(PublicKey(arr))
    }
}

impl fmt::Debug for PublicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

/// Ed25519 signing key plus its verification key.
#[derive(Clone)]
pub struct KeyPair {
    signing: ed25519_dalek::SigningKey,
}

impl KeyPair {
    /// Fresh key from an external entropy source.
    pub fn generate(rng: &mut impl RngCore) -> Self {
        let mut seed = [0u8; 32];
        rng.fill_bytes(&mut seed);
        Self::from_seed(seed)
    }

    /// Deterministic key from a 32-byte seed.
    pub fn from_seed(seed: [u8; 32]) -> Self {
        KeyPair {
            signing: ed25519_dalek::SigningKey::from_bytes(&seed),
        }
    }

    /// Rebuild a pair from stored secret and public halves, rejecting
    /// mismatched or non-canonical material.
    pub fn from_parts(
        secret: [u8; 32],
        public: [u8; PUBLIC_KEY_LEN],
    ) -> Result<Self, CryptoError> {
        let pair = Self::from_seed(secret);
        if pair.public_key().0 != public {
            return Err(CryptoError::MalformedKey(
                "public key does not match secret key",
            ));
        }
        Ok(pair)
    }

    pub fn public_key(&self) -> PublicKey {
        PublicKey(self.signing.verifying_key().to_bytes())
    }

    pub fn secret_bytes(&self) -> [u8; 32] {
        self.signing.to_bytes()
    }

    pub fn sign(&self, message: &[u8]) -> Signature {
        Signature {
            bytes: self.signing.sign(message).to_bytes(),
            signer: self.public_key(),
        }
    }
}

impl fmt::Debug for KeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Never print the secret half.
        f.debug_struct("KeyPair")
            .field("public_key", &self.public_key())
            .finish_non_exhaustive()
    }
}

/// Detached signature together with the claimed signer.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct Signature {
    pub bytes: [u8; SIGNATURE_LEN],
    pub signer: PublicKey,
}

impl fmt::Debug for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Signature({}.., signer {})",
            hex::encode(&self.bytes[..8]),
            self.signer.to_hex()
        )
    }
}

/// True iff `sig` was produced over `message` by the holder of the key
/// behind `public_key`. Malformed inputs verify false rather than
/// erroring, so verification pipelines never abort on adversarial bytes.
pub fn verify_signature(sig: &Signature, public_key: &PublicKey, message: &[u8]) -> bool {
    let Ok(vk) = ed25519_dalek::VerifyingKey::from_bytes(&public_key.0) else {
        return false;
    };
    let signature = ed25519_dalek::Signature::from_bytes(&sig.bytes);
    vk.verify(message, &signature).is_ok()
}
