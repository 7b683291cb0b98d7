//! RTU-style frame layout: address, function code, payload, trailing 16-bit
//! CRC field in little-endian byte order.
//!
//! The layout is identical whether the CRC field holds a plain checksum or
//! an authenticated one — by design nothing on the wire distinguishes the
//! two, which is what lets secured and plain devices share a bus.

use thiserror::Error;

/// Destination address that reaches every device.
pub const BROADCAST_ADDRESS: u8 = 0x00;
/// Payload bound keeping the whole frame within 256 bytes.
pub const MAX_PAYLOAD: usize = 252;
/// Address + function + CRC field.
pub const MIN_FRAME_LEN: usize = 4;
pub const MAX_FRAME_LEN: usize = 256;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FrameError {
    #[error("frame of {0} bytes is shorter than the {MIN_FRAME_LEN}-byte minimum")]
    TooShort(usize),
    #[error("frame of {0} bytes exceeds the {MAX_FRAME_LEN}-byte maximum")]
    TooLong(usize),
    #[error("payload of {0} bytes exceeds the {MAX_PAYLOAD}-byte maximum")]
    PayloadTooLarge(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub address: u8,
    pub function: u8,
    pub payload: Vec<u8>,
    pub crc_field: u16,
}

impl Frame {
    pub fn new(address: u8, function: u8, payload: Vec<u8>, crc_field: u16) -> Result<Self, FrameError> {
        if payload.len() > MAX_PAYLOAD {
            return Err(FrameError::PayloadTooLarge(payload.len()));
        }
        Ok(Self { address, function, payload, crc_field })
    }

    /// The bytes covered by the CRC field: address, function, payload.
    pub fn body(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(2 + self.payload.len());
        out.push(self.address);
        out.push(self.function);
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = self.body();
        out.extend_from_slice(&self.crc_field.to_le_bytes());
        out
    }

    pub fn decode(raw: &[u8]) -> Result<Self, FrameError> {
        if raw.len() < MIN_FRAME_LEN {
            return Err(FrameError::TooShort(raw.len()));
        }
        if raw.len() > MAX_FRAME_LEN {
            return Err(FrameError::TooLong(raw.len()));
        }
        let crc_field = u16::from_le_bytes([raw[raw.len() - 2], raw[raw.len() - 1]]);
        Ok(Self {
            address: raw[0],
            function: raw[1],
            payload: raw[2..raw.len() - 2].to_vec(),
            crc_field,
        })
    }

    pub fn is_broadcast(&self) -> bool {
        self.address == BROADCAST_ADDRESS
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let frame = Frame::new(0x11, 0x03, vec![1, 2, 3], 0xBEEF).unwrap();
        let raw = frame.encode();
        assert_eq!(raw.len(), 2 + 3 + 2);
        // CRC field travels low byte first.
        assert_eq!(&raw[raw.len() - 2..], &[0xEF, 0xBE]);
        assert_eq!(Frame::decode(&raw).unwrap(), frame);
    }

    #[test]
    fn bounds() {
        assert!(Frame::new(1, 1, vec![0; MAX_PAYLOAD], 0).is_ok());
        assert_eq!(
            Frame::new(1, 1, vec![0; MAX_PAYLOAD + 1], 0),
            Err(FrameError::PayloadTooLarge(MAX_PAYLOAD + 1))
        );
        assert_eq!(Frame::decode(&[1, 2, 3]), Err(FrameError::TooShort(3)));
        assert!(Frame::decode(&vec![0; 257]).is_err());

        // Empty payload is the minimum frame.
        let minimal = Frame::new(1, 3, Vec::new(), 0xABCD).unwrap();
        assert_eq!(minimal.encode().len(), MIN_FRAME_LEN);
    }

    #[test]
    fn secured_and_plain_framing_have_equal_length() {
        for len in [0usize, 1, 128, 252] {
            let plain = Frame::new(2, 3, vec![0xA5; len], 0x1111).unwrap();
            let secured = Frame::new(2, 3, vec![0xA5; len], 0x2222).unwrap();
            assert_eq!(plain.encode().len(), secured.encode().len());
        }
    }
}
