//! Client-side key material and the dual-layer commitment construction.
//!
//! A single 32-byte ownership token `K` parameterizes two kinds of digest:
//!
//! * the tree identity `T = keccak256(K ‖ R)` for a root anchor id `R`, and
//! * the initiation commitment `Φ = keccak256(K ‖ C)` for any anchor id `C`.
//!
//! `‖` is raw concatenation: the 32 key bytes followed by the UTF-8 bytes of
//! the identifier, with no separator or length prefix. The key is fixed
//! width, so the preimage is unambiguous.

use std::fmt;
use std::str::FromStr;

use rand::rngs::OsRng;
use rand::TryRngCore;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha3::{Digest, Keccak256};
use thiserror::Error;

/// Maximum length of an anchor identifier in bytes.
pub const MAX_ANCHOR_ID_LEN: usize = 128;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CommitmentError {
    #[error("entropy must be exactly 32 bytes, got {0}")]
    InvalidEntropy(usize),
    #[error("invalid hex digest: {0}")]
    BadDigest(String),
    #[error("invalid anchor id: {0}")]
    BadAnchorId(String),
}

/// keccak-256 as used by the EVM (original Keccak padding, not SHA3-256).
pub fn keccak256(data: &[u8]) -> Digest32 {
    Digest32(Keccak256::digest(data).into())
}

/// A 32-byte hash output.
///
/// The all-zero value is reserved: it marks governance anchors and is never a
/// valid content commitment.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Digest32(pub [u8; 32]);

impl Digest32 {
    pub const ZERO: Digest32 = Digest32([0u8; 32]);

    pub fn is_zero(&self) -> bool {
        self.0 == [0u8; 32]
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    /// Lowercase hex, no `0x` prefix.
    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    /// Parses exactly 64 lowercase hex characters.
    pub fn from_hex(s: &str) -> Result<Self, CommitmentError> {
        if s.len() != 64 || !is_lower_hex(s) {
            return Err(CommitmentError::BadDigest(s.to_owned()));
        }
        let mut out = [0u8; 32];
        hex::decode_to_slice(s, &mut out).map_err(|_| CommitmentError::BadDigest(s.to_owned()))?;
        Ok(Digest32(out))
    }
}

pub(crate) fn is_lower_hex(s: &str) -> bool {
    s.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b))
}

impl fmt::Display for Digest32 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for Digest32 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest32({})", self.to_hex())
    }
}

impl FromStr for Digest32 {
    type Err = CommitmentError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Digest32::from_hex(s)
    }
}

impl Serialize for Digest32 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Digest32 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Digest32::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

/// A globally unique artifact identifier.
///
/// Identifiers are compared as exact byte strings; no case folding happens
/// anywhere.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AnchorId(String);

impl AnchorId {
    /// Accepts non-empty printable ASCII up to [`MAX_ANCHOR_ID_LEN`] bytes.
    pub fn new(id: impl Into<String>) -> Result<Self, CommitmentError> {
        let id = id.into();
        if id.is_empty()
            || id.len() > MAX_ANCHOR_ID_LEN
            || !id.bytes().all(|b| b.is_ascii_graphic())
        {
            return Err(CommitmentError::BadAnchorId(id));
        }
        Ok(AnchorId(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn as_bytes(&self) -> &[u8] {
        self.0.as_bytes()
    }
}

impl fmt::Display for AnchorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for AnchorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl FromStr for AnchorId {
    type Err = CommitmentError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AnchorId::new(s)
    }
}

impl Serialize for AnchorId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for AnchorId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        AnchorId::new(s).map_err(serde::de::Error::custom)
    }
}

/// The client-side secret `K`.
///
/// Deliberately not `Serialize`: nothing in the registry, event log, or
/// reconstruction path can persist it. `Debug` output is redacted.
#[derive(Clone, PartialEq, Eq)]
pub struct OwnershipToken([u8; 32]);

impl OwnershipToken {
    /// Draws 32 bytes from the OS CSPRNG and derives a token from them.
    pub fn generate() -> Self {
        let mut entropy = [0u8; 32];
        OsRng
            .try_fill_bytes(&mut entropy)
            .expect("OS random source unavailable");
        Self::from_entropy(entropy)
    }

    pub fn from_entropy(entropy: [u8; 32]) -> Self {
        OwnershipToken(keccak256(&entropy).0)
    }

    /// Wraps an existing 32-byte key (for example one a user pasted back in).
    pub fn from_bytes(key: [u8; 32]) -> Self {
        OwnershipToken(key)
    }

    pub fn from_hex(s: &str) -> Result<Self, CommitmentError> {
        let s = s.strip_prefix("0x").unwrap_or(s);
        let mut out = [0u8; 32];
        hex::decode_to_slice(s.to_ascii_lowercase(), &mut out)
            .map_err(|_| CommitmentError::BadDigest(String::from("<redacted key>")))?;
        Ok(OwnershipToken(out))
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Debug for OwnershipToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("OwnershipToken(..)")
    }
}

/// `K = keccak256(entropy)`. The caller supplies the entropy so runs can be
/// reproduced; production callers should use [`OwnershipToken::generate`].
pub fn keygen(entropy: &[u8]) -> Result<OwnershipToken, CommitmentError> {
    let seed: [u8; 32] = entropy
        .try_into()
        .map_err(|_| CommitmentError::InvalidEntropy(entropy.len()))?;
    Ok(OwnershipToken::from_entropy(seed))
}

fn keyed_hash(token: &OwnershipToken, id: &AnchorId) -> Digest32 {
    let mut h = Keccak256::new();
    h.update(token.0);
    h.update(id.as_bytes());
    Digest32(h.finalize().into())
}

/// Tree identity commitment `keccak256(K ‖ root_id)`.
pub fn tree_id(token: &OwnershipToken, root_id: &AnchorId) -> Digest32 {
    keyed_hash(token, root_id)
}

/// Initiation commitment `keccak256(K ‖ anchor_id)`.
///
/// A zero result (probability about 2^-256) is returned unchanged; the
/// registry rejects it like any other zero commitment.
pub fn token_commitment(token: &OwnershipToken, anchor_id: &AnchorId) -> Digest32 {
    keyed_hash(token, anchor_id)
}
