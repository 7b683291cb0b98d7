//! Wire encoding of initialization messages.
//!
//! Layout, fixed across transports:
//!
//! ```text
//! +------+----------------+--------------+------------------+
//! | kind | body len (BE)  | body         | tag              |
//! | 1 B  | 2 B            | body-len B   | 32 B             |
//! +------+----------------+--------------+------------------+
//! ```
//!
//! Bodies carry the public key-exchange value (minimal big-endian) or the
//! encrypted chain seed; confirmation and error messages have empty bodies.

use thiserror::Error;

use crate::crypto::{AuthTag, TAG_LEN};

pub const HEADER_LEN: usize = 3;
pub const MAX_BODY_LEN: usize = u16::MAX as usize;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WireError {
    #[error("message truncated: {0} bytes")]
    Truncated(usize),
    #[error("unknown message kind {0:#04x}")]
    UnknownKind(u8),
    #[error("declared body length {declared} does not match remaining {actual} bytes")]
    LengthMismatch { declared: usize, actual: usize },
    #[error("body of {0} bytes exceeds the wire limit")]
    BodyTooLong(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum MessageKind {
    /// Initiator's public value, tagged under the master key.
    DhMsg1 = 0x01,
    /// Responder's public value, tagged under the master key.
    DhMsg2 = 0x02,
    /// Chain seed XOR-encrypted with the session key, tagged under it.
    HcMsg1 = 0x03,
    /// Confirmation tag over the incremented seed; empty body.
    HcMsg2 = 0x04,
    /// Unauthenticated abort notification; a retry hint, nothing more.
    InitError = 0x05,
}

impl MessageKind {
    fn from_byte(byte: u8) -> Result<Self, WireError> {
        match byte {
            0x01 => Ok(Self::DhMsg1),
            0x02 => Ok(Self::DhMsg2),
            0x03 => Ok(Self::HcMsg1),
            0x04 => Ok(Self::HcMsg2),
            0x05 => Ok(Self::InitError),
            other => Err(WireError::UnknownKind(other)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InitMessage {
    pub kind: MessageKind,
    pub body: Vec<u8>,
    pub tag: AuthTag,
}

impl InitMessage {
    pub fn new(kind: MessageKind, body: Vec<u8>, tag: AuthTag) -> Self {
        Self { kind, body, tag }
    }

    /// The abort notification. Carries no authenticator: a failed session has
    /// no verified key material to tag it with, and an attacker able to spoof
    /// it can already drop traffic outright.
    pub fn error() -> Self {
        Self {
            kind: MessageKind::InitError,
            body: Vec::new(),
            tag: AuthTag::from_bytes([0u8; TAG_LEN]),
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        debug_assert!(self.body.len() <= MAX_BODY_LEN);
        let mut out = Vec::with_capacity(HEADER_LEN + self.body.len() + TAG_LEN);
        out.push(self.kind as u8);
        out.extend_from_slice(&(self.body.len() as u16).to_be_bytes());
        out.extend_from_slice(&self.body);
        out.extend_from_slice(self.tag.as_bytes());
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, WireError> {
        if bytes.len() < HEADER_LEN + TAG_LEN {
            return Err(WireError::Truncated(bytes.len()));
        }
        let kind = MessageKind::from_byte(bytes[0])?;
        let declared = u16::from_be_bytes([bytes[1], bytes[2]]) as usize;
        let actual = bytes.len() - HEADER_LEN - TAG_LEN;
        if declared != actual {
            return Err(WireError::LengthMismatch { declared, actual });
        }
        let body = bytes[HEADER_LEN..HEADER_LEN + declared].to_vec();
        let mut tag = [0u8; TAG_LEN];
        tag.copy_from_slice(&bytes[HEADER_LEN + declared..]);
        Ok(Self { kind, body, tag: AuthTag::from_bytes(tag) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let msg = InitMessage::new(
            MessageKind::DhMsg1,
            vec![0xAB, 0xCD, 0xEF],
            AuthTag::from_bytes([0x42; 32]),
        );
        let bytes = msg.encode();
        assert_eq!(bytes.len(), 3 + 3 + 32);
        assert_eq!(bytes[0], 0x01);
        assert_eq!(&bytes[1..3], &[0x00, 0x03]);
        assert_eq!(InitMessage::decode(&bytes).unwrap(), msg);
    }

    #[test]
    fn decode_rejects_damage() {
        let msg = InitMessage::new(MessageKind::HcMsg1, vec![1; 32], AuthTag::from_bytes([0; 32]));
        let bytes = msg.encode();

        assert!(matches!(InitMessage::decode(&bytes[..10]), Err(WireError::Truncated(_))));

        let mut bad_kind = bytes.clone();
        bad_kind[0] = 0x77;
        assert_eq!(InitMessage::decode(&bad_kind), Err(WireError::UnknownKind(0x77)));

        let mut bad_len = bytes.clone();
        bad_len[2] ^= 0x01;
        assert!(matches!(InitMessage::decode(&bad_len), Err(WireError::LengthMismatch { .. })));
    }

    #[test]
    fn error_message_has_empty_body_and_zero_tag() {
        let msg = InitMessage::error();
        assert!(msg.body.is_empty());
        assert_eq!(msg.tag.as_bytes(), &[0u8; 32]);
        let decoded = InitMessage::decode(&msg.encode()).unwrap();
        assert_eq!(decoded.kind, MessageKind::InitError);
    }
}
