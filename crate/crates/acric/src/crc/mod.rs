//! Parametric CRC computation over arbitrary widths from 1 to 64 bits.
//!
//! The register model follows the usual catalog conventions: a generator
//! polynomial with the top bit implicit, an explicit initialization vector,
//! optional per-byte input reflection, optional output reflection, and a
//! final XOR. The initialization vector is deliberately *not* part of
//! [`CrcParams`]: substituting a secret value for it is the whole mechanism
//! this crate builds on, so every computation takes the IV as an argument.
//!
//! Two evaluation paths are provided: a bit-at-a-time reference
//! ([`crc_compute`]) and a byte-indexed lookup table ([`CrcTable`]). They
//! produce identical results for every parametrization; the table path is
//! the one used on hot paths.

mod catalog;

pub use catalog::{catalog, catalog_by_name, CatalogEntry};

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CrcError {
    #[error("crc width {0} out of range (supported 1..=64)")]
    WidthOutOfRange(u8),
    #[error("value {value:#x} does not fit in {width} bits")]
    ValueTooWide { value: u64, width: u8 },
    #[error("iv width {iv} does not match crc width {params}")]
    IvWidthMismatch { iv: u8, params: u8 },
}

/// Full parametrization of a CRC algorithm, minus the initialization vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CrcParams {
    width_bits: u8,
    polynomial: u64,
    reflect_input: bool,
    reflect_output: bool,
    final_xor: u64,
}

impl CrcParams {
    pub fn new(
        width_bits: u8,
        polynomial: u64,
        reflect_input: bool,
        reflect_output: bool,
        final_xor: u64,
    ) -> Result<Self, CrcError> {
        if width_bits == 0 || width_bits > 64 {
            return Err(CrcError::WidthOutOfRange(width_bits));
        }
        let mask = width_mask(width_bits);
        if polynomial & !mask != 0 {
            return Err(CrcError::ValueTooWide { value: polynomial, width: width_bits });
        }
        if final_xor & !mask != 0 {
            return Err(CrcError::ValueTooWide { value: final_xor, width: width_bits });
        }
        Ok(Self { width_bits, polynomial, reflect_input, reflect_output, final_xor })
    }

    pub fn width_bits(&self) -> u8 {
        self.width_bits
    }

    pub fn polynomial(&self) -> u64 {
        self.polynomial
    }

    pub fn reflect_input(&self) -> bool {
        self.reflect_input
    }

    pub fn reflect_output(&self) -> bool {
        self.reflect_output
    }

    pub fn final_xor(&self) -> u64 {
        self.final_xor
    }

    pub fn mask(&self) -> u64 {
        width_mask(self.width_bits)
    }
}

/// An n-bit CRC result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CrcValue {
    value: u64,
    width_bits: u8,
}

impl CrcValue {
    pub fn new(value: u64, width_bits: u8) -> Result<Self, CrcError> {
        check_fits(value, width_bits)?;
        Ok(Self { value, width_bits })
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn width_bits(&self) -> u8 {
        self.width_bits
    }
}

/// An n-bit CRC register initialization vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CrcIv {
    value: u64,
    width_bits: u8,
}

impl CrcIv {
    pub fn new(value: u64, width_bits: u8) -> Result<Self, CrcError> {
        check_fits(value, width_bits)?;
        Ok(Self { value, width_bits })
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn width_bits(&self) -> u8 {
        self.width_bits
    }
}

fn check_fits(value: u64, width_bits: u8) -> Result<(), CrcError> {
    if width_bits == 0 || width_bits > 64 {
        return Err(CrcError::WidthOutOfRange(width_bits));
    }
    if value & !width_mask(width_bits) != 0 {
        return Err(CrcError::ValueTooWide { value, width: width_bits });
    }
    Ok(())
}

fn width_mask(width_bits: u8) -> u64 {
    if width_bits >= 64 {
        u64::MAX
    } else {
        (1u64 << width_bits) - 1
    }
}

fn reflect_bits(value: u64, width_bits: u8) -> u64 {
    value.reverse_bits() >> (64 - width_bits as u32)
}

// The engine works in a left-aligned 64-bit register: the CRC occupies the
// top `width` bits, so input bytes always enter at bits 56..64 regardless of
// width. This keeps one code path correct for widths below 8 as well.
const TOP_BIT: u64 = 1 << 63;

fn process_byte_bitwise(mut reg: u64, poly_aligned: u64, byte: u8) -> u64 {
    reg ^= (byte as u64) << 56;
    for _ in 0..8 {
        reg = if reg & TOP_BIT != 0 { (reg << 1) ^ poly_aligned } else { reg << 1 };
    }
    reg
}

fn finish(params: &CrcParams, reg: u64) -> CrcValue {
    let shift = 64 - params.width_bits as u32;
    let mut value = reg >> shift;
    if params.reflect_output {
        value = reflect_bits(value, params.width_bits);
    }
    CrcValue { value: value ^ params.final_xor, width_bits: params.width_bits }
}

fn input_byte(params: &CrcParams, byte: u8) -> u8 {
    if params.reflect_input {
        byte.reverse_bits()
    } else {
        byte
    }
}

/// Bit-at-a-time reference computation.
pub fn crc_compute(params: &CrcParams, iv: CrcIv, message: &[u8]) -> Result<CrcValue, CrcError> {
    if iv.width_bits != params.width_bits {
        return Err(CrcError::IvWidthMismatch { iv: iv.width_bits, params: params.width_bits });
    }
    let shift = 64 - params.width_bits as u32;
    let poly_aligned = params.polynomial << shift;
    let mut reg = iv.value << shift;
    for &byte in message {
        reg = process_byte_bitwise(reg, poly_aligned, input_byte(params, byte));
    }
    Ok(finish(params, reg))
}

/// Byte-indexed lookup table for a fixed parametrization.
///
/// Immutable after construction and freely shareable across threads.
pub struct CrcTable {
    params: CrcParams,
    // Entries are kept in the left-aligned register domain.
    entries: Box<[u64; 256]>,
}

impl CrcTable {
    pub fn build(params: CrcParams) -> Self {
        let shift = 64 - params.width_bits as u32;
        let poly_aligned = params.polynomial << shift;
        let mut entries = Box::new([0u64; 256]);
        for (i, slot) in entries.iter_mut().enumerate() {
            *slot = process_byte_bitwise(0, poly_aligned, i as u8);
        }
        Self { params, entries }
    }

    pub fn params(&self) -> &CrcParams {
        &self.params
    }

    /// The register evolution for a single input byte, as an n-bit value.
    pub fn entry(&self, index: u8) -> u64 {
        self.entries[index as usize] >> (64 - self.params.width_bits as u32)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Table-driven computation; equals [`crc_compute`] for all inputs.
    pub fn compute(&self, iv: CrcIv, message: &[u8]) -> Result<CrcValue, CrcError> {
        let params = &self.params;
        if iv.width_bits != params.width_bits {
            return Err(CrcError::IvWidthMismatch { iv: iv.width_bits, params: params.width_bits });
        }
        let shift = 64 - params.width_bits as u32;
        let mut reg = iv.value << shift;
        for &byte in message {
            let idx = ((reg >> 56) as u8) ^ input_byte(params, byte);
            reg = (reg << 8) ^ self.entries[idx as usize];
        }
        Ok(finish(params, reg))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn modbus() -> CrcParams {
        CrcParams::new(16, 0x8005, true, true, 0x0000).unwrap()
    }

    #[test]
    fn modbus_check_value() {
        let iv = CrcIv::new(0xFFFF, 16).unwrap();
        let crc = crc_compute(&modbus(), iv, b"123456789").unwrap();
        assert_eq!(crc.value(), 0x4B37);
        let table = CrcTable::build(modbus());
        assert_eq!(table.compute(iv, b"123456789").unwrap().value(), 0x4B37);
    }

    #[test]
    fn empty_message_returns_iv() {
        for (w, poly) in [(8u8, 0x07u64), (16, 0x8005), (32, 0x04C11DB7), (5, 0x05)] {
            let params = CrcParams::new(w, poly, false, false, 0).unwrap();
            let iv = CrcIv::new(0x13 & params.mask(), w).unwrap();
            assert_eq!(crc_compute(&params, iv, b"").unwrap().value(), 0x13 & params.mask());
        }
    }

    #[test]
    fn zero_byte_zero_register() {
        let params = CrcParams::new(8, 0x07, false, false, 0).unwrap();
        let iv = CrcIv::new(0, 8).unwrap();
        assert_eq!(crc_compute(&params, iv, &[0x00]).unwrap().value(), 0x00);
    }

    #[test]
    fn table_entries_match_spec_shape() {
        let table = CrcTable::build(modbus());
        assert_eq!(table.len(), 256);
        assert_eq!(table.entry(0), 0x0000);

        let crc8 = CrcTable::build(CrcParams::new(8, 0x07, false, false, 0).unwrap());
        assert_eq!(crc8.entry(1), 0x07);
    }

    #[test]
    fn iv_width_mismatch_rejected() {
        let iv = CrcIv::new(0xFF, 8).unwrap();
        assert_eq!(
            crc_compute(&modbus(), iv, b"x"),
            Err(CrcError::IvWidthMismatch { iv: 8, params: 16 })
        );
        let table = CrcTable::build(modbus());
        assert!(table.compute(iv, b"x").is_err());
    }

    #[test]
    fn params_validation() {
        assert!(CrcParams::new(0, 1, false, false, 0).is_err());
        assert!(CrcParams::new(65, 1, false, false, 0).is_err());
        assert!(CrcParams::new(8, 0x1FF, false, false, 0).is_err());
        assert!(CrcParams::new(8, 0x07, false, false, 0x100).is_err());
        assert!(CrcParams::new(64, u64::MAX, true, true, u64::MAX).is_ok());
        assert!(CrcIv::new(0x10, 4).is_err());
    }

    #[test]
    fn width64_round_trips() {
        let params = CrcParams::new(64, 0x42F0E1EBA9EA3693, true, true, u64::MAX).unwrap();
        let iv = CrcIv::new(u64::MAX, 64).unwrap();
        let a = crc_compute(&params, iv, b"123456789").unwrap();
        let b = CrcTable::build(params).compute(iv, b"123456789").unwrap();
        assert_eq!(a, b);
        // CRC-64/XZ check value.
        assert_eq!(a.value(), 0x995DC9BBDF1939FA);
    }

    #[test]
    fn iv_linearity_with_zero_final_xor() {
        let params = CrcParams::new(16, 0x8005, true, true, 0).unwrap();
        let msg = b"linearity probe";
        let c = |iv: u64| {
            crc_compute(&params, CrcIv::new(iv, 16).unwrap(), msg).unwrap().value()
        };
        let (a, b) = (0x1234, 0xBEEF);
        assert_eq!(c(a ^ b), c(a) ^ c(b) ^ c(0));
    }
}
