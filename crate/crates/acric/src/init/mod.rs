//! Session initialization: establishing a session key and chain seed.
//!
//! Two routes exist. The static route derives the session key locally from
//! the master key and a pre-provisioned pair (or group) secret — no messages
//! at all. The dynamic route runs an authenticated key exchange:
//!
//! 1. the initiator sends its public value, tagged under the master key;
//! 2. the responder verifies, replies with its own tagged public value;
//! 3. the initiator verifies, derives the session key, and sends the chain
//!    seed XOR-encrypted under it together with a tag over the plaintext;
//! 4. the responder derives the same key, decrypts, verifies, and confirms
//!    with a tag over the incremented seed.
//!
//! Every received tag is checked before any state advances; a mismatch moves
//! the state machine to a terminal failure and the peer is notified with an
//! (unauthenticated) error message so it can reinitialize.
//!
//! Group establishment is coordinator-based: the coordinator runs the
//! pairwise exchange with every member, then distributes a group key and a
//! shared seed through the same encrypt-and-tag message shape.

mod channel;
mod group;
mod message;

pub use channel::{ChannelError, InitChannel, MemoryChannel, TcpChannel, DEFAULT_TIMEOUT};
pub use group::{GroupCoordinator, GroupMember, GroupStepOutput};
pub use message::{InitMessage, MessageKind, WireError};

use num_bigint::BigUint;
use rand::{CryptoRng, RngCore};
use thiserror::Error;

use crate::chain::ChainSeed;
use crate::crypto::{
    derive_session_key, hmac, otp_xor, CryptoError, DhGroup, DhKeyPair, MasterKey, SessionKey,
    KEY_LEN,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum InitError {
    #[error("message authentication failed")]
    AuthenticationFailed,
    #[error("protocol violation: expected {expected}, got {got:?}")]
    ProtocolViolation { expected: &'static str, got: MessageKind },
    #[error("degenerate public key-exchange value")]
    InvalidPublicValue,
    #[error("malformed message body")]
    MalformedBody,
    #[error("peer reported an initialization error")]
    PeerReportedError,
    #[error("state machine is terminal; reinitialize")]
    Terminal,
    #[error(transparent)]
    Crypto(CryptoError),
    #[error(transparent)]
    Wire(WireError),
    #[error("channel: {0}")]
    Channel(ChannelError),
}

impl From<CryptoError> for InitError {
    fn from(e: CryptoError) -> Self {
        InitError::Crypto(e)
    }
}

impl From<ChannelError> for InitError {
    fn from(e: ChannelError) -> Self {
        InitError::Channel(e)
    }
}

/// Established secrets: the session key and the chain seed.
pub type Established = (SessionKey, ChainSeed);

/// Result of advancing a state machine by one message.
#[derive(Debug)]
pub struct StepOutput {
    pub outgoing: Option<InitMessage>,
    pub established: Option<Established>,
}

impl StepOutput {
    fn send(msg: InitMessage) -> Self {
        Self { outgoing: Some(msg), established: None }
    }

    fn done(msg: Option<InitMessage>, established: Established) -> Self {
        Self { outgoing: msg, established: Some(established) }
    }
}

/// Pre-provisioned pair or group secret for the static route.
#[derive(Clone, PartialEq, Eq)]
pub struct StaticPairSecret([u8; KEY_LEN]);

impl StaticPairSecret {
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

impl std::fmt::Debug for StaticPairSecret {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "StaticPairSecret(<redacted>)")
    }
}

/// Local session-key derivation; both sides compute it independently,
/// no messages exchanged.
pub fn static_session_key(master: &MasterKey, secret: &StaticPairSecret) -> SessionKey {
    let tag = hmac(master.as_bytes(), secret.as_bytes()).expect("master key is non-empty");
    SessionKey::from_bytes(*tag.as_bytes())
}

fn tag_over(key: &[u8], data: &[u8]) -> crate::crypto::AuthTag {
    hmac(key, data).expect("keys are non-empty")
}

fn check_body_is_seed(body: &[u8]) -> Result<[u8; KEY_LEN], InitError> {
    body.try_into().map_err(|_| InitError::MalformedBody)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum InitiatorPhase {
    Start,
    AwaitDhMsg2,
    AwaitHcMsg2,
    Complete,
    Failed,
}

/// The side that opens the exchange and generates the chain seed.
pub struct Initiator {
    group: DhGroup,
    master_key: MasterKey,
    keypair: DhKeyPair,
    seed: ChainSeed,
    session_key: Option<SessionKey>,
    phase: InitiatorPhase,
}

impl Initiator {
    pub fn new(group: DhGroup, master_key: MasterKey, rng: &mut (impl RngCore + CryptoRng)) -> Self {
        let keypair = DhKeyPair::generate(&group, rng);
        let seed = ChainSeed::random(rng);
        Self { group, master_key, keypair, seed, session_key: None, phase: InitiatorPhase::Start }
    }

    pub fn is_complete(&self) -> bool {
        self.phase == InitiatorPhase::Complete
    }

    pub fn is_failed(&self) -> bool {
        self.phase == InitiatorPhase::Failed
    }

    fn fail<T>(&mut self, err: InitError) -> Result<T, InitError> {
        self.phase = InitiatorPhase::Failed;
        Err(err)
    }

    /// Advance the exchange. The first call must pass `None` and yields the
    /// opening message; later calls feed the peer's replies.
    pub fn step(&mut self, incoming: Option<&InitMessage>) -> Result<StepOutput, InitError> {
        match (self.phase, incoming) {
            (InitiatorPhase::Start, None) => {
                let body = self.keypair.public_value().to_bytes_be();
                let tag = tag_over(self.master_key.as_bytes(), &body);
                self.phase = InitiatorPhase::AwaitDhMsg2;
                Ok(StepOutput::send(InitMessage::new(MessageKind::DhMsg1, body, tag)))
            }
            (InitiatorPhase::Start, Some(msg)) => self.fail(InitError::ProtocolViolation {
                expected: "no incoming message before the opening step",
                got: msg.kind,
            }),
            (InitiatorPhase::AwaitDhMsg2, Some(msg)) => self.on_dh_msg2(msg),
            (InitiatorPhase::AwaitHcMsg2, Some(msg)) => self.on_hc_msg2(msg),
            (InitiatorPhase::AwaitDhMsg2 | InitiatorPhase::AwaitHcMsg2, None) => {
                self.fail(InitError::ProtocolViolation {
                    expected: "an incoming message",
                    got: MessageKind::InitError,
                })
            }
            (InitiatorPhase::Complete | InitiatorPhase::Failed, _) => Err(InitError::Terminal),
        }
    }

    fn on_dh_msg2(&mut self, msg: &InitMessage) -> Result<StepOutput, InitError> {
        if msg.kind == MessageKind::InitError {
            return self.fail(InitError::PeerReportedError);
        }
        if msg.kind != MessageKind::DhMsg2 {
            return self.fail(InitError::ProtocolViolation { expected: "DhMsg2", got: msg.kind });
        }
        let peer_public = BigUint::from_bytes_be(&msg.body);
        if !self.group.is_valid_public(&peer_public) {
            return self.fail(InitError::InvalidPublicValue);
        }
        if tag_over(self.master_key.as_bytes(), &msg.body) != msg.tag {
            return self.fail(InitError::AuthenticationFailed);
        }

        let shared = self.keypair.shared_secret(&self.group, &peer_public);
        let session_key = match derive_session_key(&shared, &self.group) {
            Ok(k) => k,
            Err(e) => return self.fail(e.into()),
        };

        let encrypted_seed = otp_xor(self.seed.as_bytes(), session_key.as_bytes())
            .expect("seed and key have equal length");
        let tag = tag_over(session_key.as_bytes(), self.seed.as_bytes());
        self.session_key = Some(session_key);
        self.phase = InitiatorPhase::AwaitHcMsg2;
        Ok(StepOutput::send(InitMessage::new(MessageKind::HcMsg1, encrypted_seed, tag)))
    }

    fn on_hc_msg2(&mut self, msg: &InitMessage) -> Result<StepOutput, InitError> {
        if msg.kind == MessageKind::InitError {
            return self.fail(InitError::PeerReportedError);
        }
        if msg.kind != MessageKind::HcMsg2 || !msg.body.is_empty() {
            return self.fail(InitError::ProtocolViolation { expected: "HcMsg2", got: msg.kind });
        }
        let session_key = self.session_key.clone().expect("set when HcMsg1 was emitted");
        let expected = tag_over(session_key.as_bytes(), &self.seed.incremented());
        if expected != msg.tag {
            return self.fail(InitError::AuthenticationFailed);
        }
        self.phase = InitiatorPhase::Complete;
        Ok(StepOutput::done(None, (session_key, self.seed.clone())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ResponderPhase {
    AwaitDhMsg1,
    AwaitHcMsg1,
    Complete,
    Failed,
}

/// The side that answers an exchange.
pub struct Responder {
    group: DhGroup,
    master_key: MasterKey,
    keypair: DhKeyPair,
    peer_public: Option<BigUint>,
    phase: ResponderPhase,
}

impl Responder {
    pub fn new(group: DhGroup, master_key: MasterKey, rng: &mut (impl RngCore + CryptoRng)) -> Self {
        let keypair = DhKeyPair::generate(&group, rng);
        Self { group, master_key, keypair, peer_public: None, phase: ResponderPhase::AwaitDhMsg1 }
    }

    pub fn is_complete(&self) -> bool {
        self.phase == ResponderPhase::Complete
    }

    pub fn is_failed(&self) -> bool {
        self.phase == ResponderPhase::Failed
    }

    fn fail<T>(&mut self, err: InitError) -> Result<T, InitError> {
        self.phase = ResponderPhase::Failed;
        Err(err)
    }

    pub fn step(&mut self, incoming: &InitMessage) -> Result<StepOutput, InitError> {
        if incoming.kind == MessageKind::InitError {
            return self.fail(InitError::PeerReportedError);
        }
        match self.phase {
            ResponderPhase::AwaitDhMsg1 => self.on_dh_msg1(incoming),
            ResponderPhase::AwaitHcMsg1 => self.on_hc_msg1(incoming),
            ResponderPhase::Complete | ResponderPhase::Failed => Err(InitError::Terminal),
        }
    }

    fn on_dh_msg1(&mut self, msg: &InitMessage) -> Result<StepOutput, InitError> {
        if msg.kind != MessageKind::DhMsg1 {
            return self.fail(InitError::ProtocolViolation { expected: "DhMsg1", got: msg.kind });
        }
        let peer_public = BigUint::from_bytes_be(&msg.body);
        if !self.group.is_valid_public(&peer_public) {
            return self.fail(InitError::InvalidPublicValue);
        }
        if tag_over(self.master_key.as_bytes(), &msg.body) != msg.tag {
            return self.fail(InitError::AuthenticationFailed);
        }
        self.peer_public = Some(peer_public);

        let body = self.keypair.public_value().to_bytes_be();
        let tag = tag_over(self.master_key.as_bytes(), &body);
        self.phase = ResponderPhase::AwaitHcMsg1;
        Ok(StepOutput::send(InitMessage::new(MessageKind::DhMsg2, body, tag)))
    }

    fn on_hc_msg1(&mut self, msg: &InitMessage) -> Result<StepOutput, InitError> {
        if msg.kind != MessageKind::HcMsg1 {
            return self.fail(InitError::ProtocolViolation { expected: "HcMsg1", got: msg.kind });
        }
        let encrypted = match check_body_is_seed(&msg.body) {
            Ok(b) => b,
            Err(e) => return self.fail(e),
        };

        let peer_public = self.peer_public.as_ref().expect("set by DhMsg1");
        let shared = self.keypair.shared_secret(&self.group, peer_public);
        let session_key = match derive_session_key(&shared, &self.group) {
            Ok(k) => k,
            Err(e) => return self.fail(e.into()),
        };

        let seed_bytes: [u8; KEY_LEN] = otp_xor(&encrypted, session_key.as_bytes())
            .expect("equal lengths")
            .try_into()
            .expect("xor preserves length");
        let seed = ChainSeed::from_bytes(seed_bytes);
        if tag_over(session_key.as_bytes(), seed.as_bytes()) != msg.tag {
            return self.fail(InitError::AuthenticationFailed);
        }

        let confirm = tag_over(session_key.as_bytes(), &seed.incremented());
        self.phase = ResponderPhase::Complete;
        Ok(StepOutput::done(
            Some(InitMessage::new(MessageKind::HcMsg2, Vec::new(), confirm)),
            (session_key, seed),
        ))
    }
}

/// Drive an initiator over a channel until completion or failure. On failure
/// the peer is sent an error notification as a retry hint.
pub fn run_initiator(
    mut initiator: Initiator,
    channel: &mut impl InitChannel,
) -> Result<Established, InitError> {
    let mut output = initiator.step(None)?;
    loop {
        if let Some(msg) = output.outgoing.take() {
            channel.send(&msg)?;
        }
        if let Some(established) = output.established {
            return Ok(established);
        }
        let incoming = channel.recv()?;
        output = match initiator.step(Some(&incoming)) {
            Ok(out) => out,
            Err(err) => {
                let _ = channel.send(&InitMessage::error());
                return Err(err);
            }
        };
    }
}

/// Drive a responder over a channel until completion or failure.
pub fn run_responder(
    mut responder: Responder,
    channel: &mut impl InitChannel,
) -> Result<Established, InitError> {
    loop {
        let incoming = channel.recv()?;
        let output = match responder.step(&incoming) {
            Ok(out) => out,
            Err(err) => {
                let _ = channel.send(&InitMessage::error());
                return Err(err);
            }
        };
        if let Some(msg) = output.outgoing {
            channel.send(&msg)?;
        }
        if let Some(established) = output.established {
            return Ok(established);
        }
    }
}
