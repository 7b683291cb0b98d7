//! The authenticated key exchange between two peers, message by message.
//!
//! Both sides start from the shared master key. Four messages later they
//! hold the same session key and chain seed, every message having been
//! verified before any state advanced.
//!
//! ```bash
//! cargo run --example p2p_init
//! ```

use acric::crypto::{os_rng, DhGroup, MasterKey};
use acric::init::{Initiator, Responder};

fn main() {
    let group = DhGroup::toy64_insecure();
    let master = MasterKey::from_bytes([0x07; 32]);
    let mut rng = os_rng();

    let mut initiator = Initiator::new(group.clone(), master.clone(), &mut rng);
    let mut responder = Responder::new(group, master, &mut rng);

    let msg1 = initiator.step(None).unwrap().outgoing.unwrap();
    println!("-> {:?}  body {} bytes (public value, tagged under the master key)", msg1.kind, msg1.body.len());

    let msg2 = responder.step(&msg1).unwrap().outgoing.unwrap();
    println!("<- {:?}  body {} bytes (responder public value, tagged)", msg2.kind, msg2.body.len());

    let msg3 = initiator.step(Some(&msg2)).unwrap().outgoing.unwrap();
    println!("-> {:?}  body {} bytes (chain seed, encrypted under the fresh session key)", msg3.kind, msg3.body.len());

    let responder_out = responder.step(&msg3).unwrap();
    let msg4 = responder_out.outgoing.unwrap();
    let (responder_key, responder_seed) = responder_out.established.unwrap();
    println!("<- {:?}  empty body (confirmation tag over the incremented seed)", msg4.kind);

    let (initiator_key, initiator_seed) = initiator.step(Some(&msg4)).unwrap().established.unwrap();

    assert_eq!(initiator_key, responder_key);
    assert_eq!(initiator_seed.as_bytes(), responder_seed.as_bytes());
    println!();
    println!("both ends hold the same session key and chain seed");

    // A tampered exchange dies at the first verification.
    let mut rng = os_rng();
    let mut initiator = Initiator::new(DhGroup::toy64_insecure(), MasterKey::from_bytes([0x07; 32]), &mut rng);
    let mut responder = Responder::new(DhGroup::toy64_insecure(), MasterKey::from_bytes([0x07; 32]), &mut rng);
    let mut msg1 = initiator.step(None).unwrap().outgoing.unwrap();
    msg1.body[0] ^= 0x80;
    let err = responder.step(&msg1).unwrap_err();
    println!("tampered opening message -> {err}");
}
