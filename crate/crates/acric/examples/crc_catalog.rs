//! Parametric CRC engine: the named catalog, table-driven vs bit-at-a-time
//! evaluation, and what changing the register start value does.
//!
//! ```bash
//! cargo run --example crc_catalog
//! ```

use acric::crc::{catalog, crc_compute, CrcIv, CrcTable};

fn main() {
    let check_input = b"123456789";

    println!("{:<18} {:>5} {:>18} {:>18}", "name", "width", "poly", "check");
    for entry in catalog() {
        let iv = CrcIv::new(entry.conventional_iv, entry.params.width_bits()).unwrap();
        let bitwise = crc_compute(&entry.params, iv, check_input).unwrap();
        let table = CrcTable::build(entry.params).compute(iv, check_input).unwrap();
        assert_eq!(bitwise, table, "both evaluation paths agree");
        assert_eq!(bitwise.value(), entry.check, "catalog check value holds");
        println!(
            "{:<18} {:>5} {:>#18x} {:>#18x}",
            entry.name,
            entry.params.width_bits(),
            entry.params.polynomial(),
            bitwise.value(),
        );
    }

    // The same message under different register start values: this is the
    // knob the whole authentication scheme turns. Anyone can compute the
    // checksum on the left; only holders of the secret start value can
    // compute the one on the right.
    let modbus = acric::crc::catalog_by_name("crc16-modbus").unwrap();
    let public_iv = CrcIv::new(0xFFFF, 16).unwrap();
    let secret_iv = CrcIv::new(0x3C7A, 16).unwrap();
    let message = b"\x01\x03\x00\x0A\x00\x02";
    let public_crc = crc_compute(&modbus.params, public_iv, message).unwrap();
    let secret_crc = crc_compute(&modbus.params, secret_iv, message).unwrap();
    println!();
    println!("message {:02x?}", message);
    println!("  crc under the public start value 0xFFFF: {:#06x}", public_crc.value());
    println!("  crc under a secret start value  0x3C7A: {:#06x}", secret_crc.value());
}
