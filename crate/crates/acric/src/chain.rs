//! One-time key streams: generation, consumption, storage accounting.
//!
//! A chain is the sequence `h_0 = HMAC(K_s, l)`, `h_i = HMAC(K_s, h_{i-1})`.
//! Values are consumed exactly once, front to back (forward) or tail to root
//! (backward), and each consumed value yields an n-bit one-time pad by
//! truncation. Storage strategy decides how much of the chain is resident:
//! runtime keeps a single value, offline keeps everything, hybrid keeps a
//! bounded prefetch buffer.

use std::collections::VecDeque;

use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crypto::{hmac, SessionKey, KEY_LEN};

pub const DEFAULT_N_HASH: u64 = 4096;
pub const DEFAULT_LOOKAHEAD: usize = 8;
const VALUE_BITS: u64 = (KEY_LEN as u64) * 8;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ChainError {
    #[error("backward consumption requires the whole chain resident; {0}")]
    InvalidStrategy(&'static str),
    #[error("chain exhausted after {0} values; reinitialization required")]
    Exhausted(u64),
    #[error("chain length must be positive")]
    EmptyChain,
}

/// Root value the chain is grown from; exchanged at initialization.
#[derive(Clone, PartialEq, Eq)]
pub struct ChainSeed([u8; KEY_LEN]);

impl ChainSeed {
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

    /// The seed interpreted as a 256-bit big-endian integer, plus one,
    /// modulo 2^256. Used for the final confirmation tag at initialization.
    pub fn incremented(&self) -> [u8; KEY_LEN] {
        let mut out = self.0;
        for byte in out.iter_mut().rev() {
            let (v, carry) = byte.overflowing_add(1);
            *byte = v;
            if !carry {
                break;
            }
        }
        out
    }
}

impl std::fmt::Debug for ChainSeed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ChainSeed(<redacted>)")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Consumption {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Computation {
    Runtime,
    Offline,
    Hybrid { prefetch: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainStrategy {
    pub consumption: Consumption,
    pub computation: Computation,
}

impl Default for ChainStrategy {
    /// Forward, pair-oriented, computed at runtime: the least-storage choice.
    fn default() -> Self {
        Self { consumption: Consumption::Forward, computation: Computation::Runtime }
    }
}

/// A single chain element: the full 32-byte tag plus its index.
#[derive(Clone, PartialEq, Eq)]
pub struct ChainValue {
    full_tag: [u8; KEY_LEN],
    index: u64,
}

impl ChainValue {
    pub fn full_tag(&self) -> &[u8; KEY_LEN] {
        &self.full_tag
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    /// The first `width` bits of the tag in big-endian bit order.
    pub fn otp_key(&self, width: u8) -> u64 {
        truncate_tag(&self.full_tag, width)
    }
}

impl std::fmt::Debug for ChainValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ChainValue {{ index: {}, tag: <redacted> }}", self.index)
    }
}

/// First `width` bits of a 32-byte tag, big-endian.
pub fn truncate_tag(tag: &[u8; KEY_LEN], width: u8) -> u64 {
    debug_assert!((1..=64).contains(&width));
    let head = u64::from_be_bytes(tag[..8].try_into().expect("tag has 32 bytes"));
    head >> (64 - width as u32)
}

/// A consumable one-time key stream.
///
/// Owned by exactly one endpoint; access is serialized by ownership.
pub struct HashChain {
    session_key: SessionKey,
    n_hash: u64,
    strategy: ChainStrategy,
    consumed: u64,
    // Upcoming values in consumption order. Non-empty whenever values remain.
    buffer: VecDeque<ChainValue>,
}

impl HashChain {
    pub fn init(
        session_key: SessionKey,
        seed: &ChainSeed,
        n_hash: u64,
        strategy: ChainStrategy,
    ) -> Result<Self, ChainError> {
        if n_hash == 0 {
            return Err(ChainError::EmptyChain);
        }
        let resident: u64 = match (strategy.consumption, strategy.computation) {
            (Consumption::Backward, Computation::Runtime) => {
                return Err(ChainError::InvalidStrategy(
                    "runtime computation cannot serve tail-first consumption",
                ))
            }
            (Consumption::Backward, Computation::Hybrid { prefetch }) => {
                if (prefetch as u64) < n_hash {
                    return Err(ChainError::InvalidStrategy(
                        "hybrid prefetch smaller than the chain length",
                    ));
                }
                n_hash
            }
            (Consumption::Backward, Computation::Offline) => n_hash,
            (Consumption::Forward, Computation::Offline) => n_hash,
            (Consumption::Forward, Computation::Runtime) => 1,
            (Consumption::Forward, Computation::Hybrid { prefetch }) => {
                (prefetch.max(1) as u64).min(n_hash)
            }
        };

        let mut forward = Vec::with_capacity(resident as usize);
        let mut tag = chain_step(&session_key, seed.as_bytes());
        forward.push(ChainValue { full_tag: tag, index: 0 });
        for index in 1..resident {
            tag = chain_step(&session_key, &tag);
            forward.push(ChainValue { full_tag: tag, index });
        }

        let buffer: VecDeque<ChainValue> = match strategy.consumption {
            Consumption::Forward => forward.into(),
            Consumption::Backward => forward.into_iter().rev().collect(),
        };

        Ok(Self { session_key, n_hash, strategy, consumed: 0, buffer })
    }

    pub fn strategy(&self) -> ChainStrategy {
        self.strategy
    }

    pub fn length(&self) -> u64 {
        self.n_hash
    }

    /// Number of values already handed out.
    pub fn consumed(&self) -> u64 {
        self.consumed
    }

    pub fn remaining(&self) -> u64 {
        self.n_hash - self.consumed
    }

    /// Bits of chain material currently resident in memory.
    pub fn retained_bits(&self) -> u64 {
        self.buffer.len() as u64 * VALUE_BITS
    }

    /// Consume and return the next value. The same index is never returned
    /// twice over the lifetime of the chain.
    pub fn next_value(&mut self) -> Result<ChainValue, ChainError> {
        if self.consumed == self.n_hash {
            return Err(ChainError::Exhausted(self.n_hash));
        }
        let value = self.buffer.pop_front().expect("buffer tracks remaining values");
        self.consumed += 1;

        // Forward chains refill from the value just consumed, so at most the
        // configured number of unconsumed values is ever resident.
        if self.buffer.is_empty() && self.consumed < self.n_hash {
            let batch = match self.strategy.computation {
                Computation::Runtime => 1u64,
                Computation::Hybrid { prefetch } => prefetch.max(1) as u64,
                Computation::Offline => unreachable!("offline chains are fully resident"),
            };
            let batch = batch.min(self.n_hash - self.consumed);
            let mut tag = value.full_tag;
            for offset in 0..batch {
                tag = chain_step(&self.session_key, &tag);
                self.buffer.push_back(ChainValue { full_tag: tag, index: value.index + 1 + offset });
            }
        }
        Ok(value)
    }

    /// Consume the next value and truncate it to an n-bit one-time key.
    pub fn next_otp_key(&mut self, crc_width: u8) -> Result<(u64, u64), ChainError> {
        let value = self.next_value()?;
        Ok((value.otp_key(crc_width), value.index))
    }

    /// The next `window` keys in consumption order, without consuming.
    /// A window larger than the remaining chain is silently truncated.
    pub fn peek_window(&self, window: usize, crc_width: u8) -> Vec<(u64, u64)> {
        let take = window.min(self.remaining() as usize);
        let mut out = Vec::with_capacity(take);
        for value in self.buffer.iter().take(take) {
            out.push((value.index, value.otp_key(crc_width)));
        }
        // Forward chains may need transient lookahead past the resident
        // buffer; nothing extra is retained.
        if out.len() < take {
            let last = self.buffer.back().expect("non-exhausted chain has a buffer");
            let mut tag = last.full_tag;
            let mut index = last.index;
            while out.len() < take {
                tag = chain_step(&self.session_key, &tag);
                index += 1;
                out.push((index, truncate_tag(&tag, crc_width)));
            }
        }
        out
    }

    /// Drop the next `count` values (receiver-side resynchronization).
    pub fn consume(&mut self, count: usize) -> Result<(), ChainError> {
        for _ in 0..count {
            self.next_value()?;
        }
        Ok(())
    }
}

impl std::fmt::Debug for HashChain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HashChain")
            .field("n_hash", &self.n_hash)
            .field("strategy", &self.strategy)
            .field("consumed", &self.consumed)
            .field("resident", &self.buffer.len())
            .finish()
    }
}

fn chain_step(key: &SessionKey, input: &[u8; KEY_LEN]) -> [u8; KEY_LEN] {
    *hmac(key.as_bytes(), input).expect("session key is non-empty").as_bytes()
}

/// Total resident chain material across a set of chains, in bits.
pub fn live_storage_audit<'a>(chains: impl IntoIterator<Item = &'a HashChain>) -> u64 {
    chains.into_iter().map(HashChain::retained_bits).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StorageApproach {
    /// One chain per transmitting device, tracked by every receiver.
    Entity,
    /// One chain per communicating pair.
    Pair,
    /// One chain per broadcast group.
    Group,
}

/// Inputs to the per-device storage-overhead formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StorageModel {
    /// Bits per hash value.
    pub hash_bits: u64,
    /// Values per chain.
    pub n_hash: u64,
    /// Network nodes (pair/entity) or groups joined (group).
    pub node_count: u64,
    pub approach: StorageApproach,
    pub consumption: Consumption,
}

/// Per-device storage overhead in bits for a given strategy combination.
pub fn storage_bits(model: &StorageModel) -> u64 {
    let x = model.hash_bits;
    let n = model.node_count;
    let n_hash = model.n_hash;
    match (model.approach, model.consumption) {
        // Own full chain plus one tracking value per peer.
        (StorageApproach::Entity, Consumption::Backward) => x * (n_hash + n - 1),
        // One value for the own chain, one per peer.
        (StorageApproach::Entity, Consumption::Forward) => n * x,
        (StorageApproach::Pair, Consumption::Backward) => (n - 1) * n_hash * x,
        (StorageApproach::Pair, Consumption::Forward) => (n - 1) * x,
        (StorageApproach::Group, Consumption::Backward) => n * n_hash * x,
        (StorageApproach::Group, Consumption::Forward) => n * x,
    }
}

/// Chain strategy selection as it appears in JSON configuration.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    #[serde(default = "default_consumption")]
    pub consumption: Consumption,
    #[serde(default = "default_storage")]
    pub storage: StorageApproach,
    #[serde(default = "default_computation")]
    pub computation: ComputationConfig,
    #[serde(default)]
    pub prefetch: Option<usize>,
    #[serde(default = "default_n_hash")]
    pub n_hash: u64,
    #[serde(default = "default_lookahead")]
    pub lookahead: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComputationConfig {
    Runtime,
    Offline,
    Hybrid,
}

fn default_consumption() -> Consumption {
    Consumption::Forward
}

fn default_storage() -> StorageApproach {
    StorageApproach::Pair
}

fn default_computation() -> ComputationConfig {
    ComputationConfig::Runtime
}

fn default_n_hash() -> u64 {
    DEFAULT_N_HASH
}

fn default_lookahead() -> usize {
    DEFAULT_LOOKAHEAD
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            consumption: default_consumption(),
            storage: default_storage(),
            computation: default_computation(),
            prefetch: None,
            n_hash: default_n_hash(),
            lookahead: default_lookahead(),
        }
    }
}

impl ChainConfig {
    pub fn strategy(&self) -> ChainStrategy {
        let computation = match self.computation {
            ComputationConfig::Runtime => Computation::Runtime,
            ComputationConfig::Offline => Computation::Offline,
            ComputationConfig::Hybrid => {
                Computation::Hybrid { prefetch: self.prefetch.unwrap_or(64) }
            }
        };
        ChainStrategy { consumption: self.consumption, computation }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use sha2::Digest;

    fn key() -> SessionKey {
        SessionKey::from_bytes([0x5A; 32])
    }

    fn seed() -> ChainSeed {
        ChainSeed::from_bytes([0x11; 32])
    }

    fn manual_h(i: usize) -> [u8; 32] {
        // Chain definition applied by hand, independent of HashChain.
        let mut tag = *hmac(key().as_bytes(), seed().as_bytes()).unwrap().as_bytes();
        for _ in 0..i {
            tag = *hmac(key().as_bytes(), &tag).unwrap().as_bytes();
        }
        tag
    }

    #[test]
    fn first_forward_value_is_h0() {
        let mut chain = HashChain::init(key(), &seed(), 8, ChainStrategy::default()).unwrap();
        let v = chain.next_value().unwrap();
        assert_eq!(v.index(), 0);
        assert_eq!(v.full_tag(), &manual_h(0));
    }

    #[test]
    fn third_forward_value_matches_triple_application() {
        let mut chain = HashChain::init(key(), &seed(), 8, ChainStrategy::default()).unwrap();
        chain.next_value().unwrap();
        chain.next_value().unwrap();
        let v = chain.next_value().unwrap();
        assert_eq!(v.index(), 2);
        assert_eq!(v.full_tag(), &manual_h(2));
    }

    #[test]
    fn backward_runtime_is_invalid() {
        let strategy = ChainStrategy {
            consumption: Consumption::Backward,
            computation: Computation::Runtime,
        };
        assert!(matches!(
            HashChain::init(key(), &seed(), 8, strategy),
            Err(ChainError::InvalidStrategy(_))
        ));

        let partial = ChainStrategy {
            consumption: Consumption::Backward,
            computation: Computation::Hybrid { prefetch: 4 },
        };
        assert!(HashChain::init(key(), &seed(), 8, partial).is_err());

        let full = ChainStrategy {
            consumption: Consumption::Backward,
            computation: Computation::Hybrid { prefetch: 8 },
        };
        assert!(HashChain::init(key(), &seed(), 8, full).is_ok());
    }

    #[test]
    fn backward_starts_at_tail() {
        let strategy = ChainStrategy {
            consumption: Consumption::Backward,
            computation: Computation::Offline,
        };
        let mut chain = HashChain::init(key(), &seed(), 8, strategy).unwrap();
        let v = chain.next_value().unwrap();
        assert_eq!(v.index(), 7);
        assert_eq!(v.full_tag(), &manual_h(7));
    }

    #[test]
    fn indices_strictly_advance_and_exhaust() {
        let mut chain = HashChain::init(key(), &seed(), 4, ChainStrategy::default()).unwrap();
        let mut seen = Vec::new();
        for _ in 0..4 {
            seen.push(chain.next_value().unwrap().index());
        }
        assert_eq!(seen, vec![0, 1, 2, 3]);
        assert_eq!(chain.next_value().unwrap_err(), ChainError::Exhausted(4));
    }

    #[test]
    fn otp_key_truncates_top_bytes() {
        let mut chain = HashChain::init(key(), &seed(), 4, ChainStrategy::default()).unwrap();
        let expected = manual_h(0);
        let (k16, idx) = chain.next_otp_key(16).unwrap();
        assert_eq!(idx, 0);
        assert_eq!(k16, u16::from_be_bytes([expected[0], expected[1]]) as u64);

        let (k8, _) = chain.next_otp_key(8).unwrap();
        assert_eq!(k8, manual_h(1)[0] as u64);
    }

    #[test]
    fn peek_is_consistent_and_non_consuming() {
        let mut chain = HashChain::init(key(), &seed(), 8, ChainStrategy::default()).unwrap();
        assert!(chain.peek_window(0, 16).is_empty());
        let peeked = chain.peek_window(3, 16);
        assert_eq!(peeked.len(), 3);
        assert_eq!(peeked[0].0, 0);
        assert_eq!(chain.consumed(), 0);

        for (expected_index, expected_key) in peeked {
            let (k, i) = chain.next_otp_key(16).unwrap();
            assert_eq!((i, k), (expected_index, expected_key));
        }
    }

    #[test]
    fn peek_truncates_at_chain_end() {
        let mut chain = HashChain::init(key(), &seed(), 3, ChainStrategy::default()).unwrap();
        chain.next_value().unwrap();
        assert_eq!(chain.peek_window(10, 16).len(), 2);
    }

    #[test]
    fn hybrid_retains_at_most_prefetch() {
        let strategy = ChainStrategy {
            consumption: Consumption::Forward,
            computation: Computation::Hybrid { prefetch: 3 },
        };
        let mut chain = HashChain::init(key(), &seed(), 10, strategy).unwrap();
        assert!(chain.retained_bits() <= 3 * VALUE_BITS);
        for _ in 0..10 {
            chain.next_value().unwrap();
            assert!(chain.retained_bits() <= 3 * VALUE_BITS);
        }
    }

    #[test]
    fn traversals_visit_same_values_in_reverse() {
        let forward_strategy = ChainStrategy {
            consumption: Consumption::Forward,
            computation: Computation::Offline,
        };
        let backward_strategy = ChainStrategy {
            consumption: Consumption::Backward,
            computation: Computation::Offline,
        };
        let mut fwd = HashChain::init(key(), &seed(), 16, forward_strategy).unwrap();
        let mut bwd = HashChain::init(key(), &seed(), 16, backward_strategy).unwrap();
        let f: Vec<[u8; 32]> = (0..16).map(|_| *fwd.next_value().unwrap().full_tag()).collect();
        let mut b: Vec<[u8; 32]> = (0..16).map(|_| *bwd.next_value().unwrap().full_tag()).collect();
        b.reverse();
        assert_eq!(f, b);
    }

    #[test]
    fn forward_secrecy_requires_the_key() {
        let h1 = manual_h(1);
        let h2 = manual_h(2);
        // Without the session key neither keyed nor unkeyed hashing of h_1
        // reaches h_2.
        assert_ne!(*hmac(&h1, &h1).unwrap().as_bytes(), h2);
        let unkeyed: [u8; 32] = sha2::Sha256::digest(h1).into();
        assert_ne!(unkeyed, h2);
    }

    #[test]
    fn retention_accounting() {
        let runtime = HashChain::init(key(), &seed(), 64, ChainStrategy::default()).unwrap();
        assert_eq!(runtime.retained_bits(), 256);

        let offline = HashChain::init(
            key(),
            &seed(),
            8,
            ChainStrategy { consumption: Consumption::Forward, computation: Computation::Offline },
        )
        .unwrap();
        assert_eq!(offline.retained_bits(), 8 * 256);

        assert_eq!(live_storage_audit([]), 0);
        assert_eq!(live_storage_audit([&runtime, &offline]), 256 + 8 * 256);
    }

    #[test]
    fn storage_formulas() {
        let model = |approach, consumption| StorageModel {
            hash_bits: 256,
            n_hash: 1024,
            node_count: 5,
            approach,
            consumption,
        };
        assert_eq!(storage_bits(&model(StorageApproach::Entity, Consumption::Backward)), 263_168);
        assert_eq!(storage_bits(&model(StorageApproach::Entity, Consumption::Forward)), 1280);
        assert_eq!(storage_bits(&model(StorageApproach::Pair, Consumption::Backward)), 4 * 1024 * 256);
        assert_eq!(storage_bits(&model(StorageApproach::Pair, Consumption::Forward)), 1024);
        assert_eq!(storage_bits(&model(StorageApproach::Group, Consumption::Backward)), 5 * 1024 * 256);
        assert_eq!(storage_bits(&model(StorageApproach::Group, Consumption::Forward)), 1280);

        let solo = StorageModel {
            hash_bits: 256,
            n_hash: 1024,
            node_count: 1,
            approach: StorageApproach::Pair,
            consumption: Consumption::Forward,
        };
        assert_eq!(storage_bits(&solo), 0);
    }

    #[test]
    fn seed_increment() {
        let zero = ChainSeed::from_bytes([0u8; 32]);
        let mut expect = [0u8; 32];
        expect[31] = 1;
        assert_eq!(zero.incremented(), expect);

        let all_ff = ChainSeed::from_bytes([0xFF; 32]);
        assert_eq!(all_ff.incremented(), [0u8; 32]);

        let mut carry = [0u8; 32];
        carry[31] = 0xFF;
        let mut expect = [0u8; 32];
        expect[30] = 0x01;
        assert_eq!(ChainSeed::from_bytes(carry).incremented(), expect);
    }

    #[test]
    fn config_parses_the_documented_shape() {
        let cfg: ChainConfig = serde_json::from_str(
            r#"{"consumption":"forward","storage":"pair","computation":"runtime","n_hash":4096,"lookahead":8}"#,
        )
        .unwrap();
        assert_eq!(cfg, ChainConfig::default());
        assert!(serde_json::from_str::<ChainConfig>(r#"{"bogus":1}"#).is_err());
    }
}
