//! Independent oracles for the integration suites.
//!
//! Everything here is deliberately written from first principles and shares
//! no code with the library: CRC as schoolbook polynomial long division over
//! an explicit bit vector, HMAC straight from the FIPS-198 construction on
//! top of the bare compression function, and modular exponentiation by
//! repeated multiplication. The library is checked against these, never the
//! other way round.

#![allow(dead_code)]

use num_bigint::BigUint;
use sha2::{Digest, Sha256};

fn reflect_byte(b: u8) -> u8 {
    let mut out = 0u8;
    for i in 0..8 {
        if b & (1 << i) != 0 {
            out |= 1 << (7 - i);
        }
    }
    out
}

fn reflect_value(v: u64, width: u32) -> u64 {
    let mut out = 0u64;
    for i in 0..width {
        if v & (1 << i) != 0 {
            out |= 1 << (width - 1 - i);
        }
    }
    out
}

/// CRC by explicit polynomial long division.
///
/// The dividend is the (optionally byte-reflected) message bit stream times
/// x^width, with the initial register value folded in as iv * x^(8 * len).
/// The generator is carried with its top bit explicit. The remainder is the
/// raw register, to which output reflection and the final XOR are applied.
pub fn crc_long_division(
    width: u32,
    poly: u64,
    iv: u64,
    reflect_in: bool,
    reflect_out: bool,
    final_xor: u64,
    message: &[u8],
) -> u64 {
    let w = width as usize;
    let mut bits: Vec<u8> = Vec::with_capacity(message.len() * 8 + w);
    for &byte in message {
        let b = if reflect_in { reflect_byte(byte) } else { byte };
        for k in 0..8 {
            bits.push((b >> (7 - k)) & 1);
        }
    }
    bits.extend(std::iter::repeat(0).take(w));
    for k in 0..w {
        bits[k] ^= ((iv >> (w - 1 - k)) & 1) as u8;
    }

    let mut gen: Vec<u8> = Vec::with_capacity(w + 1);
    gen.push(1);
    for k in 0..w {
        gen.push(((poly >> (w - 1 - k)) & 1) as u8);
    }

    for i in 0..bits.len() - w {
        if bits[i] == 1 {
            for j in 0..=w {
                bits[i + j] ^= gen[j];
            }
        }
    }

    let mut rem = 0u64;
    for k in 0..w {
        rem = (rem << 1) | bits[bits.len() - w + k] as u64;
    }
    if reflect_out {
        rem = reflect_value(rem, width);
    }
    rem ^ final_xor
}

const SHA256_BLOCK: usize = 64;

/// HMAC-SHA-256 from the FIPS-198 definition, using only the bare hash.
pub fn hmac_sha256_reference(key: &[u8], data: &[u8]) -> [u8; 32] {
    let mut k0 = [0u8; SHA256_BLOCK];
    if key.len() > SHA256_BLOCK {
        k0[..32].copy_from_slice(&Sha256::digest(key));
    } else {
        k0[..key.len()].copy_from_slice(key);
    }
    let mut inner = Sha256::new();
    inner.update(k0.iter().map(|b| b ^ 0x36).collect::<Vec<u8>>());
    inner.update(data);
    let inner_digest = inner.finalize();

    let mut outer = Sha256::new();
    outer.update(k0.iter().map(|b| b ^ 0x5c).collect::<Vec<u8>>());
    outer.update(inner_digest);
    outer.finalize().into()
}

/// Modular exponentiation by repeated multiplication. Only usable for small
/// exponents; that is the point.
pub fn mod_exp_naive(base: u64, exponent: u64, modulus: u64) -> u64 {
    let m = BigUint::from(modulus);
    let b = BigUint::from(base) % &m;
    let mut acc = BigUint::from(1u32);
    for _ in 0..exponent {
        acc = acc * &b % &m;
    }
    acc.try_into().expect("fits in u64")
}

#[test]
fn oracle_self_checks() {
    // Catalog check values recomputed here from the long-division definition.
    assert_eq!(
        crc_long_division(16, 0x8005, 0xFFFF, true, true, 0x0000, b"123456789"),
        0x4B37
    );
    assert_eq!(
        crc_long_division(8, 0x07, 0x00, false, false, 0x00, b"123456789"),
        0xF4
    );
    // Sub-byte widths exercise the generic bit handling.
    assert_eq!(
        crc_long_division(5, 0x05, 0x1F, true, true, 0x1F, b"123456789"),
        0x19
    );
    assert_eq!(
        crc_long_division(3, 0x3, 0x0, false, false, 0x7, b"123456789"),
        0x4
    );
    // Non-palindromic init together with reflection pins the iv convention.
    assert_eq!(
        crc_long_division(16, 0x1021, 0xB2AA, true, true, 0x0000, b"123456789"),
        0x63D0
    );
    // Empty message leaves the register untouched.
    assert_eq!(
        crc_long_division(16, 0x8005, 0xFFFF, true, true, 0x0000, b""),
        0xFFFF
    );

    // RFC 4231 test case 1.
    let tag = hmac_sha256_reference(&[0x0b; 20], b"Hi There");
    assert_eq!(
        hex::encode(tag),
        "b0344c61d8db38535ca8afceaf0bf12b881dc200c9833da726e9376c2e32cff7"
    );

    assert_eq!(mod_exp_naive(5, 13, 23), 21);
}
