//! The runtime core: producing and checking the authenticated CRC field.
//!
//! A sender computes the frame CRC under a secret initialization vector
//! derived from the session key, then XORs it with the next value of the
//! pair's one-time key stream. A receiver recomputes the CRC under the same
//! secret IV and compares against a small window of upcoming stream values,
//! so a lost frame does not desynchronize the pair: a match at offset `d`
//! consumes `d + 1` values.
//!
//! Broadcast traffic inside a point-to-point system cannot use pair keys, so
//! it is padded with a keyed hash of a monotonic counter instead — under the
//! master key by default, or under a dedicated broadcast key.

use thiserror::Error;

use crate::chain::{truncate_tag, ChainError, ChainSeed, ChainStrategy, HashChain};
use crate::crc::{CrcError, CrcIv, CrcParams, CrcTable};
use crate::crypto::{hmac, MasterKey, SessionKey, KEY_LEN};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AuthError {
    #[error("operation not permitted for this endpoint role")]
    WrongRole,
    #[error("one-time key material exhausted; reinitialize the session")]
    ReinitRequired,
    #[error(transparent)]
    Crc(#[from] CrcError),
    #[error(transparent)]
    Chain(ChainError),
}

impl From<ChainError> for AuthError {
    fn from(e: ChainError) -> Self {
        match e {
            ChainError::Exhausted(_) => AuthError::ReinitRequired,
            other => AuthError::Chain(other),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Sender,
    Receiver,
}

/// Outcome of verifying a received frame. `Reject` carries no detail on
/// purpose: nothing observable distinguishes which secret failed to match.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Accept { consumed: usize },
    Reject,
}

impl Verdict {
    pub fn is_accept(&self) -> bool {
        matches!(self, Verdict::Accept { .. })
    }
}

/// An authenticated CRC field value together with the key-stream index that
/// padded it. Only `value` travels on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SecCrcValue {
    pub value: u64,
    pub chain_index: u64,
}

/// The secret register start value: the first `width` bits of the key.
pub fn derive_iv(key: &[u8; KEY_LEN], width_bits: u8) -> Result<CrcIv, CrcError> {
    if width_bits == 0 || width_bits > 64 {
        return Err(CrcError::WidthOutOfRange(width_bits));
    }
    CrcIv::new(truncate_tag(key, width_bits), width_bits)
}

/// One directed secured link: signing on the sender side, windowed
/// verification on the receiver side. Owned and mutated by one endpoint.
pub struct SessionContext {
    role: Role,
    iv: CrcIv,
    table: CrcTable,
    chain: HashChain,
    lookahead: usize,
}

impl SessionContext {
    pub fn sender(
        session_key: &SessionKey,
        seed: &ChainSeed,
        params: CrcParams,
        n_hash: u64,
        strategy: ChainStrategy,
    ) -> Result<Self, AuthError> {
        Self::build(Role::Sender, session_key, seed, params, n_hash, strategy, 1)
    }

    pub fn receiver(
        session_key: &SessionKey,
        seed: &ChainSeed,
        params: CrcParams,
        n_hash: u64,
        strategy: ChainStrategy,
        lookahead: usize,
    ) -> Result<Self, AuthError> {
        Self::build(Role::Receiver, session_key, seed, params, n_hash, strategy, lookahead)
    }

    fn build(
        role: Role,
        session_key: &SessionKey,
        seed: &ChainSeed,
        params: CrcParams,
        n_hash: u64,
        strategy: ChainStrategy,
        lookahead: usize,
    ) -> Result<Self, AuthError> {
        let iv = derive_iv(session_key.as_bytes(), params.width_bits())?;
        let chain = HashChain::init(session_key.clone(), seed, n_hash, strategy)?;
        Ok(Self { role, iv, table: CrcTable::build(params), chain, lookahead: lookahead.max(1) })
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn width_bits(&self) -> u8 {
        self.table.params().width_bits()
    }

    pub fn lookahead(&self) -> usize {
        self.lookahead
    }

    /// Key-stream values consumed so far; the synchronization cursor.
    pub fn cursor(&self) -> u64 {
        self.chain.consumed()
    }

    pub fn chain(&self) -> &HashChain {
        &self.chain
    }

    fn local_crc(&self, message: &[u8]) -> u64 {
        self.table
            .compute(self.iv, message)
            .expect("iv width matches params by construction")
            .value()
    }

    /// Authenticate an outgoing frame body, consuming one key-stream value.
    pub fn sign(&mut self, message: &[u8]) -> Result<SecCrcValue, AuthError> {
        if self.role != Role::Sender {
            return Err(AuthError::WrongRole);
        }
        let crc = self.local_crc(message);
        let (key, chain_index) = self.chain.next_otp_key(self.width_bits())?;
        Ok(SecCrcValue { value: crc ^ key, chain_index })
    }

    /// Check a received frame body against its CRC field. Accepting at
    /// window offset `d` consumes `d + 1` key-stream values; rejection
    /// consumes nothing.
    pub fn verify(&mut self, message: &[u8], received: u64) -> Result<Verdict, AuthError> {
        if self.role != Role::Receiver {
            return Err(AuthError::WrongRole);
        }
        let crc = self.local_crc(message);
        let window = self.chain.peek_window(self.lookahead, self.width_bits());
        for (offset, (_, key)) in window.iter().enumerate() {
            if crc ^ key == received {
                self.chain.consume(offset + 1)?;
                return Ok(Verdict::Accept { consumed: offset + 1 });
            }
        }
        Ok(Verdict::Reject)
    }
}

impl std::fmt::Debug for SessionContext {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SessionContext")
            .field("role", &self.role)
            .field("width_bits", &self.width_bits())
            .field("cursor", &self.cursor())
            .field("lookahead", &self.lookahead)
            .finish()
    }
}

/// Which long-lived secret pads broadcast frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BroadcastKeyMode {
    /// Reuse the master key every node already holds.
    Master,
    /// A separate broadcast-only key.
    Dedicated,
}

/// Broadcast endpoint state: a key, a monotonic counter, and the CRC
/// parametrization. The pad for counter value `c` is the truncated keyed
/// hash of `c` as eight big-endian bytes; the counter advances after use and
/// never repeats within a key lifetime.
pub struct BroadcastContext {
    role: Role,
    mode: BroadcastKeyMode,
    key: [u8; KEY_LEN],
    counter: u64,
    iv: CrcIv,
    table: CrcTable,
    lookahead: usize,
}

impl BroadcastContext {
    pub fn master_sender(master: &MasterKey, params: CrcParams) -> Result<Self, AuthError> {
        Self::build(Role::Sender, BroadcastKeyMode::Master, *master.as_bytes(), params, 1)
    }

    pub fn master_receiver(
        master: &MasterKey,
        params: CrcParams,
        lookahead: usize,
    ) -> Result<Self, AuthError> {
        Self::build(Role::Receiver, BroadcastKeyMode::Master, *master.as_bytes(), params, lookahead)
    }

    pub fn dedicated_sender(key: &SessionKey, params: CrcParams) -> Result<Self, AuthError> {
        Self::build(Role::Sender, BroadcastKeyMode::Dedicated, *key.as_bytes(), params, 1)
    }

    pub fn dedicated_receiver(
        key: &SessionKey,
        params: CrcParams,
        lookahead: usize,
    ) -> Result<Self, AuthError> {
        Self::build(Role::Receiver, BroadcastKeyMode::Dedicated, *key.as_bytes(), params, lookahead)
    }

    fn build(
        role: Role,
        mode: BroadcastKeyMode,
        key: [u8; KEY_LEN],
        params: CrcParams,
        lookahead: usize,
    ) -> Result<Self, AuthError> {
        let iv = derive_iv(&key, params.width_bits())?;
        Ok(Self {
            role,
            mode,
            key,
            counter: 0,
            iv,
            table: CrcTable::build(params),
            lookahead: lookahead.max(1),
        })
    }

    pub fn mode(&self) -> BroadcastKeyMode {
        self.mode
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }

    pub fn width_bits(&self) -> u8 {
        self.table.params().width_bits()
    }

    fn pad(&self, counter: u64) -> u64 {
        let tag = hmac(&self.key, &counter.to_be_bytes()).expect("key is non-empty");
        truncate_tag(tag.as_bytes(), self.width_bits())
    }

    fn local_crc(&self, message: &[u8]) -> u64 {
        self.table
            .compute(self.iv, message)
            .expect("iv width matches params by construction")
            .value()
    }

    /// Pad an outgoing broadcast frame with the current counter value, then
    /// advance the counter.
    pub fn sign(&mut self, message: &[u8]) -> Result<SecCrcValue, AuthError> {
        if self.role != Role::Sender {
            return Err(AuthError::WrongRole);
        }
        let counter = self.counter;
        let next = counter.checked_add(1).ok_or(AuthError::ReinitRequired)?;
        let value = self.local_crc(message) ^ self.pad(counter);
        self.counter = next;
        Ok(SecCrcValue { value, chain_index: counter })
    }

    /// Verify against a window of upcoming counter values. A matched counter
    /// is never accepted twice.
    pub fn verify(&mut self, message: &[u8], received: u64) -> Result<Verdict, AuthError> {
        if self.role != Role::Receiver {
            return Err(AuthError::WrongRole);
        }
        let crc = self.local_crc(message);
        for offset in 0..self.lookahead as u64 {
            let Some(candidate) = self.counter.checked_add(offset) else { break };
            if crc ^ self.pad(candidate) == received {
                self.counter = match candidate.checked_add(1) {
                    Some(next) => next,
                    None => return Err(AuthError::ReinitRequired),
                };
                return Ok(Verdict::Accept { consumed: offset as usize + 1 });
            }
        }
        Ok(Verdict::Reject)
    }
}

impl std::fmt::Debug for BroadcastContext {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BroadcastContext")
            .field("role", &self.role)
            .field("mode", &self.mode)
            .field("counter", &self.counter)
            .finish()
    }
}
