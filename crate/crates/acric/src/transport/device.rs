//! Bus endpoints. A device is either plain (checks the conventional public
//! CRC and consults no secrets at all) or secured (holds per-peer session
//! contexts and optional broadcast contexts).
//!
//! The wire format carries no source field — legacy frames only have a
//! destination address — so a secured receiver picks its verification
//! context from the delivery metadata the bus provides. On a physical bus
//! that knowledge comes from the link itself; here it comes from the
//! simulator.

use std::collections::HashMap;

use crate::auth::{AuthError, BroadcastContext, SecCrcValue, SessionContext, Verdict};
use crate::crc::{catalog_by_name, CrcIv, CrcTable};

use super::frame::{Frame, FrameError, BROADCAST_ADDRESS};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum TransportError {
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error("no session context for peer {0}")]
    NoContext(u8),
    #[error("no broadcast context configured")]
    NoBroadcastContext,
    #[error(transparent)]
    Auth(#[from] AuthError),
}

/// Why a received frame was not delivered.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RejectReason {
    /// CRC field did not verify (plain or authenticated).
    BadCrc,
    /// Secured device has no context for the claimed source.
    UnknownSource,
    /// The raw bytes do not form a frame.
    Malformed,
}

impl RejectReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            RejectReason::BadCrc => "bad_crc",
            RejectReason::UnknownSource => "unknown_source",
            RejectReason::Malformed => "malformed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReceiveOutcome {
    Delivered { payload: Vec<u8>, consumed: usize },
    Rejected(RejectReason),
    NotForMe,
}

/// Plain CRC as legacy devices compute it: the catalog parametrization with
/// its public conventional register start value.
pub struct PlainCrc {
    table: CrcTable,
    iv: CrcIv,
}

impl PlainCrc {
    pub fn modbus() -> Self {
        let entry = catalog_by_name("crc16-modbus").expect("catalog entry exists");
        let iv = CrcIv::new(entry.conventional_iv, entry.params.width_bits())
            .expect("conventional iv fits");
        Self { table: CrcTable::build(entry.params), iv }
    }

    pub fn compute(&self, body: &[u8]) -> u16 {
        self.table.compute(self.iv, body).expect("width match by construction").value() as u16
    }
}

enum DeviceMode {
    Plain,
    Secured(SecuredEndpoint),
}

#[derive(Default)]
struct SecuredEndpoint {
    send: HashMap<u8, SessionContext>,
    recv: HashMap<u8, SessionContext>,
    broadcast_tx: Option<BroadcastContext>,
    broadcast_rx: Option<BroadcastContext>,
}

pub struct Device {
    id: u8,
    mode: DeviceMode,
    plain_crc: PlainCrc,
}

impl Device {
    pub fn plain(id: u8) -> Self {
        Self { id, mode: DeviceMode::Plain, plain_crc: PlainCrc::modbus() }
    }

    pub fn secured(id: u8) -> Self {
        Self {
            id,
            mode: DeviceMode::Secured(SecuredEndpoint::default()),
            plain_crc: PlainCrc::modbus(),
        }
    }

    pub fn id(&self) -> u8 {
        self.id
    }

    pub fn is_secured(&self) -> bool {
        matches!(self.mode, DeviceMode::Secured(_))
    }

    fn secured_mut(&mut self) -> &mut SecuredEndpoint {
        match &mut self.mode {
            DeviceMode::Secured(endpoint) => endpoint,
            DeviceMode::Plain => panic!("plain devices hold no secret state"),
        }
    }

    pub fn add_send_session(&mut self, peer: u8, ctx: SessionContext) {
        self.secured_mut().send.insert(peer, ctx);
    }

    pub fn add_recv_session(&mut self, peer: u8, ctx: SessionContext) {
        self.secured_mut().recv.insert(peer, ctx);
    }

    pub fn set_broadcast_sender(&mut self, ctx: BroadcastContext) {
        self.secured_mut().broadcast_tx = Some(ctx);
    }

    pub fn set_broadcast_receiver(&mut self, ctx: BroadcastContext) {
        self.secured_mut().broadcast_rx = Some(ctx);
    }

    pub fn send_session(&self, peer: u8) -> Option<&SessionContext> {
        match &self.mode {
            DeviceMode::Secured(e) => e.send.get(&peer),
            DeviceMode::Plain => None,
        }
    }

    pub fn recv_session(&self, peer: u8) -> Option<&SessionContext> {
        match &self.mode {
            DeviceMode::Secured(e) => e.recv.get(&peer),
            DeviceMode::Plain => None,
        }
    }

    /// Build an outgoing frame. Plain devices fill the CRC field with the
    /// conventional checksum; secured devices authenticate it. The byte
    /// layout is the same either way. Returns the frame and, for secured
    /// senders, the key-stream index consumed.
    pub fn encode_frame(
        &mut self,
        destination: u8,
        function: u8,
        payload: &[u8],
    ) -> Result<(Frame, Option<u64>), TransportError> {
        let mut frame = Frame::new(destination, function, payload.to_vec(), 0)?;
        let body = frame.body();
        match &mut self.mode {
            DeviceMode::Plain => {
                frame.crc_field = self.plain_crc.compute(&body);
                Ok((frame, None))
            }
            DeviceMode::Secured(endpoint) => {
                let sec: SecCrcValue = if destination == BROADCAST_ADDRESS {
                    endpoint
                        .broadcast_tx
                        .as_mut()
                        .ok_or(TransportError::NoBroadcastContext)?
                        .sign(&body)?
                } else {
                    endpoint
                        .send
                        .get_mut(&destination)
                        .ok_or(TransportError::NoContext(destination))?
                        .sign(&body)?
                };
                frame.crc_field = sec.value as u16;
                Ok((frame, Some(sec.chain_index)))
            }
        }
    }

    /// Process raw bytes observed on the bus. The address filter comes
    /// first; then the CRC field is checked according to the device's mode.
    pub fn receive(&mut self, source: u8, raw: &[u8]) -> ReceiveOutcome {
        let Ok(frame) = Frame::decode(raw) else {
            return ReceiveOutcome::Rejected(RejectReason::Malformed);
        };
        if frame.address != self.id && !frame.is_broadcast() {
            return ReceiveOutcome::NotForMe;
        }
        let body = frame.body();
        match &mut self.mode {
            DeviceMode::Plain => {
                if self.plain_crc.compute(&body) == frame.crc_field {
                    ReceiveOutcome::Delivered { payload: frame.payload, consumed: 0 }
                } else {
                    ReceiveOutcome::Rejected(RejectReason::BadCrc)
                }
            }
            DeviceMode::Secured(endpoint) => {
                let verdict = if frame.is_broadcast() {
                    let Some(ctx) = endpoint.broadcast_rx.as_mut() else {
                        return ReceiveOutcome::Rejected(RejectReason::UnknownSource);
                    };
                    ctx.verify(&body, frame.crc_field as u64)
                } else {
                    let Some(ctx) = endpoint.recv.get_mut(&source) else {
                        return ReceiveOutcome::Rejected(RejectReason::UnknownSource);
                    };
                    ctx.verify(&body, frame.crc_field as u64)
                };
                match verdict {
                    Ok(Verdict::Accept { consumed }) => {
                        ReceiveOutcome::Delivered { payload: frame.payload, consumed }
                    }
                    Ok(Verdict::Reject) => ReceiveOutcome::Rejected(RejectReason::BadCrc),
                    Err(_) => ReceiveOutcome::Rejected(RejectReason::BadCrc),
                }
            }
        }
    }
}
