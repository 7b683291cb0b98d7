//! Group establishment: a coordinator runs the pairwise exchange with each
//! member, then distributes one group key and one chain seed to everyone.
//!
//! ```bash
//! cargo run --example group_init
//! ```

use acric::crypto::{os_rng, DhGroup, MasterKey};
use acric::init::{GroupCoordinator, GroupMember, InitMessage};

fn main() {
    let group = DhGroup::toy64_insecure();
    let master = MasterKey::from_bytes([0x2A; 32]);
    let mut rng = os_rng();
    let member_count = 3;

    let mut coordinator = GroupCoordinator::new(group.clone(), master.clone(), member_count, &mut rng);
    let mut members: Vec<GroupMember> =
        (0..member_count).map(|_| GroupMember::new(group.clone(), master.clone(), &mut rng)).collect();

    let mut exchanged = 0usize;
    let mut coordinator_result = None;
    let mut member_results: Vec<Option<_>> = vec![None; member_count];

    // Hand-carry messages between the coordinator and the members until
    // everyone is done.
    let start = coordinator.start(&mut rng).unwrap();
    let mut pending: Vec<(usize, InitMessage)> = start.outgoing;
    while let Some((idx, msg)) = pending.pop() {
        exchanged += 1;
        let out = members[idx].step(&msg).unwrap();
        if let Some(established) = out.established {
            member_results[idx] = Some(established);
        }
        if let Some(reply) = out.outgoing {
            exchanged += 1;
            let coord_out = coordinator.step(idx, &reply, &mut rng).unwrap();
            for m in coord_out.outgoing {
                pending.insert(0, m);
            }
            if let Some(established) = coord_out.established {
                coordinator_result = Some(established);
            }
        }
    }

    let (group_key, seed) = coordinator_result.expect("coordinator completed");
    println!("group of {} members set up in {} messages", member_count + 1, exchanged);
    for (i, result) in member_results.iter().enumerate() {
        let (member_key, member_seed) = result.as_ref().expect("member completed");
        assert_eq!(*member_key, group_key);
        assert_eq!(member_seed.as_bytes(), seed.as_bytes());
        println!("member {i}: group key and seed match the coordinator's");
    }
}
