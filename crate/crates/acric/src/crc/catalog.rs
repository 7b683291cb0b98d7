//! Named CRC parametrizations.
//!
//! Each entry carries the conventional (public) initialization vector used by
//! the plain protocol and the catalog check value over `"123456789"`, both of
//! which the test suite re-derives from an independent long-division oracle.

use std::sync::LazyLock;

use super::CrcParams;

pub struct CatalogEntry {
    pub name: &'static str,
    pub params: CrcParams,
    /// Register start value used by the unsecured flavor of the protocol.
    pub conventional_iv: u64,
    /// CRC over `"123456789"` with the conventional IV.
    pub check: u64,
}

struct Row {
    name: &'static str,
    width: u8,
    poly: u64,
    refin: bool,
    refout: bool,
    xorout: u64,
    iv: u64,
    check: u64,
}

const ROWS: &[Row] = &[
    Row { name: "crc8-smbus", width: 8, poly: 0x07, refin: false, refout: false, xorout: 0x00, iv: 0x00, check: 0xF4 },
    Row { name: "crc8-maxim", width: 8, poly: 0x31, refin: true, refout: true, xorout: 0x00, iv: 0x00, check: 0xA1 },
    Row { name: "crc16-modbus", width: 16, poly: 0x8005, refin: true, refout: true, xorout: 0x0000, iv: 0xFFFF, check: 0x4B37 },
    Row { name: "crc16-ccitt-false", width: 16, poly: 0x1021, refin: false, refout: false, xorout: 0x0000, iv: 0xFFFF, check: 0x29B1 },
    Row { name: "crc16-kermit", width: 16, poly: 0x1021, refin: true, refout: true, xorout: 0x0000, iv: 0x0000, check: 0x2189 },
    Row { name: "crc32-ieee", width: 32, poly: 0x04C11DB7, refin: true, refout: true, xorout: 0xFFFF_FFFF, iv: 0xFFFF_FFFF, check: 0xCBF4_3926 },
    Row { name: "crc32c", width: 32, poly: 0x1EDC6F41, refin: true, refout: true, xorout: 0xFFFF_FFFF, iv: 0xFFFF_FFFF, check: 0xE306_9283 },
    Row { name: "crc64-xz", width: 64, poly: 0x42F0_E1EB_A9EA_3693, refin: true, refout: true, xorout: u64::MAX, iv: u64::MAX, check: 0x995D_C9BB_DF19_39FA },
    Row { name: "crc5-usb", width: 5, poly: 0x05, refin: true, refout: true, xorout: 0x1F, iv: 0x1F, check: 0x19 },
    Row { name: "crc3-gsm", width: 3, poly: 0x3, refin: false, refout: false, xorout: 0x7, iv: 0x0, check: 0x4 },
];

static CATALOG: LazyLock<Vec<CatalogEntry>> = LazyLock::new(|| {
    ROWS.iter()
        .map(|r| CatalogEntry {
            name: r.name,
            params: CrcParams::new(r.width, r.poly, r.refin, r.refout, r.xorout)
                .expect("catalog rows are valid"),
            conventional_iv: r.iv,
            check: r.check,
        })
        .collect()
});

pub fn catalog() -> &'static [CatalogEntry] {
    &CATALOG
}

pub fn catalog_by_name(name: &str) -> Option<&'static CatalogEntry> {
    CATALOG.iter().find(|e| e.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crc::{crc_compute, CrcIv, CrcTable};

    #[test]
    fn check_values_hold_on_both_paths() {
        for entry in catalog() {
            let iv = CrcIv::new(entry.conventional_iv, entry.params.width_bits()).unwrap();
            let bitwise = crc_compute(&entry.params, iv, b"123456789").unwrap();
            assert_eq!(bitwise.value(), entry.check, "{}", entry.name);
            let table = CrcTable::build(entry.params);
            assert_eq!(table.compute(iv, b"123456789").unwrap().value(), entry.check, "{}", entry.name);
        }
    }

    #[test]
    fn lookup_by_name() {
        assert!(catalog_by_name("crc16-modbus").is_some());
        assert!(catalog_by_name("crc8-smbus").is_some());
        assert!(catalog_by_name("crc99-nonsense").is_none());
    }

    #[test]
    fn single_bit_flips_always_detected() {
        // Error-detection sanity over every shipped parametrization.
        let msg: Vec<u8> = (0u8..48).map(|i| i.wrapping_mul(37).wrapping_add(11)).collect();
        for entry in catalog() {
            let iv = CrcIv::new(entry.conventional_iv, entry.params.width_bits()).unwrap();
            let base = crc_compute(&entry.params, iv, &msg).unwrap();
            for byte in 0..msg.len() {
                for bit in 0..8 {
                    let mut flipped = msg.clone();
                    flipped[byte] ^= 1 << bit;
                    let crc = crc_compute(&entry.params, iv, &flipped).unwrap();
                    assert_ne!(crc, base, "{} missed flip at {}:{}", entry.name, byte, bit);
                }
            }
        }
    }
}
