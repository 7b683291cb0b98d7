//! Coordinator-based group establishment.
//!
//! The coordinator completes the pairwise exchange with each member in turn,
//! then distributes a freshly sampled group key and chain seed to every
//! member using the same encrypt-and-tag shape as the pairwise seed message:
//! the group key travels XOR-encrypted under the member's pairwise session
//! key, the seed XOR-encrypted under the group key, and each member confirms
//! with a tag over the incremented seed. Any pairwise failure or bad
//! confirmation aborts the whole group setup.

use rand::{CryptoRng, RngCore};

use crate::chain::ChainSeed;
use crate::crypto::{hmac, otp_xor, DhGroup, MasterKey, SessionKey, KEY_LEN};

use super::message::{InitMessage, MessageKind};
use super::{Established, InitError, Initiator, Responder, StepOutput};

/// Messages produced by one coordinator step, addressed by member index.
#[derive(Debug, Default)]
pub struct GroupStepOutput {
    pub outgoing: Vec<(usize, InitMessage)>,
    pub established: Option<Established>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CoordinatorPhase {
    /// Running the pairwise exchange with member i.
    PairInit(usize),
    /// Distributed key and seed; awaiting confirmation from member i.
    AwaitConfirm(usize),
    Complete,
    Failed,
}

pub struct GroupCoordinator {
    group: DhGroup,
    master_key: MasterKey,
    member_count: usize,
    group_key: SessionKey,
    seed: ChainSeed,
    pairwise: Vec<SessionKey>,
    current: Option<Initiator>,
    phase: CoordinatorPhase,
}

impl GroupCoordinator {
    pub fn new(
        group: DhGroup,
        master_key: MasterKey,
        member_count: usize,
        rng: &mut (impl RngCore + CryptoRng),
    ) -> Self {
        let group_key = SessionKey::random(rng);
        let seed = ChainSeed::random(rng);
        let phase = if member_count == 0 {
            CoordinatorPhase::Complete
        } else {
            CoordinatorPhase::PairInit(0)
        };
        Self {
            group,
            master_key,
            member_count,
            group_key,
            seed,
            pairwise: Vec::with_capacity(member_count),
            current: None,
            phase,
        }
    }

    /// Index of the member whose message the coordinator expects next, if any.
    pub fn awaiting_from(&self) -> Option<usize> {
        match self.phase {
            CoordinatorPhase::PairInit(i) | CoordinatorPhase::AwaitConfirm(i) => Some(i),
            _ => None,
        }
    }

    pub fn is_complete(&self) -> bool {
        self.phase == CoordinatorPhase::Complete
    }

    pub fn is_failed(&self) -> bool {
        self.phase == CoordinatorPhase::Failed
    }

    fn fail<T>(&mut self, err: InitError) -> Result<T, InitError> {
        self.phase = CoordinatorPhase::Failed;
        Err(err)
    }

    /// Kick off the group setup. A coordinator with no members completes on
    /// the spot, holding the sampled key and seed itself.
    pub fn start(&mut self, rng: &mut (impl RngCore + CryptoRng)) -> Result<GroupStepOutput, InitError> {
        if self.member_count == 0 {
            return Ok(GroupStepOutput {
                outgoing: Vec::new(),
                established: Some((self.group_key.clone(), self.seed.clone())),
            });
        }
        let mut initiator = Initiator::new(self.group.clone(), self.master_key.clone(), rng);
        let opening = initiator.step(None)?.outgoing.expect("opening step emits a message");
        self.current = Some(initiator);
        Ok(GroupStepOutput { outgoing: vec![(0, opening)], established: None })
    }

    /// Feed a message from `member`; `rng` serves the next pairwise exchange.
    pub fn step(
        &mut self,
        member: usize,
        incoming: &InitMessage,
        rng: &mut (impl RngCore + CryptoRng),
    ) -> Result<GroupStepOutput, InitError> {
        match self.phase {
            CoordinatorPhase::PairInit(i) => {
                if member != i {
                    return self.fail(InitError::ProtocolViolation {
                        expected: "a message from the member under initialization",
                        got: incoming.kind,
                    });
                }
                let initiator = self.current.as_mut().expect("pairwise exchange is active");
                let out = match initiator.step(Some(incoming)) {
                    Ok(out) => out,
                    Err(e) => return self.fail(e),
                };
                let mut outgoing: Vec<(usize, InitMessage)> = out
                    .outgoing
                    .into_iter()
                    .map(|m| (i, m))
                    .collect();
                if let Some((session_key, _pair_seed)) = out.established {
                    // Pairwise link is up; its seed is unused, the group uses
                    // its own.
                    self.pairwise.push(session_key);
                    self.current = None;
                    if i + 1 < self.member_count {
                        let mut next =
                            Initiator::new(self.group.clone(), self.master_key.clone(), rng);
                        let opening =
                            next.step(None)?.outgoing.expect("opening step emits a message");
                        outgoing.push((i + 1, opening));
                        self.current = Some(next);
                        self.phase = CoordinatorPhase::PairInit(i + 1);
                    } else {
                        outgoing.extend(self.distribution_messages());
                        self.phase = CoordinatorPhase::AwaitConfirm(0);
                    }
                }
                Ok(GroupStepOutput { outgoing, established: None })
            }
            CoordinatorPhase::AwaitConfirm(i) => {
                if member != i {
                    return self.fail(InitError::ProtocolViolation {
                        expected: "a confirmation from the next member in order",
                        got: incoming.kind,
                    });
                }
                if incoming.kind != MessageKind::HcMsg2 || !incoming.body.is_empty() {
                    return self.fail(InitError::ProtocolViolation {
                        expected: "HcMsg2",
                        got: incoming.kind,
                    });
                }
                let expected =
                    hmac(self.group_key.as_bytes(), &self.seed.incremented()).expect("non-empty key");
                if expected != incoming.tag {
                    return self.fail(InitError::AuthenticationFailed);
                }
                if i + 1 < self.member_count {
                    self.phase = CoordinatorPhase::AwaitConfirm(i + 1);
                    Ok(GroupStepOutput::default())
                } else {
                    self.phase = CoordinatorPhase::Complete;
                    Ok(GroupStepOutput {
                        outgoing: Vec::new(),
                        established: Some((self.group_key.clone(), self.seed.clone())),
                    })
                }
            }
            CoordinatorPhase::Complete | CoordinatorPhase::Failed => Err(InitError::Terminal),
        }
    }

    /// The two distribution messages for every member: the group key under
    /// the pairwise key, then the seed under the group key.
    fn distribution_messages(&self) -> Vec<(usize, InitMessage)> {
        let mut out = Vec::with_capacity(self.member_count * 2);
        for (i, pair_key) in self.pairwise.iter().enumerate() {
            let key_body = otp_xor(self.group_key.as_bytes(), pair_key.as_bytes())
                .expect("equal lengths");
            let key_tag =
                hmac(pair_key.as_bytes(), self.group_key.as_bytes()).expect("non-empty key");
            out.push((i, InitMessage::new(MessageKind::HcMsg1, key_body, key_tag)));

            let seed_body = otp_xor(self.seed.as_bytes(), self.group_key.as_bytes())
                .expect("equal lengths");
            let seed_tag =
                hmac(self.group_key.as_bytes(), self.seed.as_bytes()).expect("non-empty key");
            out.push((i, InitMessage::new(MessageKind::HcMsg1, seed_body, seed_tag)));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum MemberPhase {
    Pairwise,
    AwaitGroupKey,
    AwaitSeed,
    Complete,
    Failed,
}

pub struct GroupMember {
    responder: Responder,
    pairwise_key: Option<SessionKey>,
    group_key: Option<SessionKey>,
    phase: MemberPhase,
}

impl GroupMember {
    pub fn new(group: DhGroup, master_key: MasterKey, rng: &mut (impl RngCore + CryptoRng)) -> Self {
        Self {
            responder: Responder::new(group, master_key, rng),
            pairwise_key: None,
            group_key: None,
            phase: MemberPhase::Pairwise,
        }
    }

    pub fn is_complete(&self) -> bool {
        self.phase == MemberPhase::Complete
    }

    pub fn is_failed(&self) -> bool {
        self.phase == MemberPhase::Failed
    }

    fn fail<T>(&mut self, err: InitError) -> Result<T, InitError> {
        self.phase = MemberPhase::Failed;
        Err(err)
    }

    pub fn step(&mut self, incoming: &InitMessage) -> Result<StepOutput, InitError> {
        if incoming.kind == MessageKind::InitError {
            return self.fail(InitError::PeerReportedError);
        }
        match self.phase {
            MemberPhase::Pairwise => {
                let out = match self.responder.step(incoming) {
                    Ok(out) => out,
                    Err(e) => return self.fail(e),
                };
                if let Some((session_key, _pair_seed)) = out.established {
                    self.pairwise_key = Some(session_key);
                    self.phase = MemberPhase::AwaitGroupKey;
                }
                Ok(StepOutput { outgoing: out.outgoing, established: None })
            }
            MemberPhase::AwaitGroupKey => {
                let body = match body_as_key(incoming) {
                    Ok(b) => b,
                    Err(e) => return self.fail(e),
                };
                let pair_key = self.pairwise_key.as_ref().expect("pairwise phase done");
                let key_bytes: [u8; KEY_LEN] = otp_xor(&body, pair_key.as_bytes())
                    .expect("equal lengths")
                    .try_into()
                    .expect("xor preserves length");
                let group_key = SessionKey::from_bytes(key_bytes);
                let expected = hmac(pair_key.as_bytes(), group_key.as_bytes()).expect("non-empty");
                if expected != incoming.tag {
                    return self.fail(InitError::AuthenticationFailed);
                }
                self.group_key = Some(group_key);
                self.phase = MemberPhase::AwaitSeed;
                Ok(StepOutput { outgoing: None, established: None })
            }
            MemberPhase::AwaitSeed => {
                let body = match body_as_key(incoming) {
                    Ok(b) => b,
                    Err(e) => return self.fail(e),
                };
                let group_key = self.group_key.clone().expect("group key phase done");
                let seed_bytes: [u8; KEY_LEN] = otp_xor(&body, group_key.as_bytes())
                    .expect("equal lengths")
                    .try_into()
                    .expect("xor preserves length");
                let seed = ChainSeed::from_bytes(seed_bytes);
                let expected = hmac(group_key.as_bytes(), seed.as_bytes()).expect("non-empty");
                if expected != incoming.tag {
                    return self.fail(InitError::AuthenticationFailed);
                }
                let confirm = hmac(group_key.as_bytes(), &seed.incremented()).expect("non-empty");
                self.phase = MemberPhase::Complete;
                Ok(StepOutput {
                    outgoing: Some(InitMessage::new(MessageKind::HcMsg2, Vec::new(), confirm)),
                    established: Some((group_key, seed)),
                })
            }
            MemberPhase::Complete | MemberPhase::Failed => Err(InitError::Terminal),
        }
    }
}

fn body_as_key(msg: &InitMessage) -> Result<[u8; KEY_LEN], InitError> {
    if msg.kind != MessageKind::HcMsg1 {
        return Err(InitError::ProtocolViolation { expected: "HcMsg1", got: msg.kind });
    }
    msg.body.as_slice().try_into().map_err(|_| InitError::MalformedBody)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn run_group(member_count: usize, seed: u64) -> (Established, Vec<Established>) {
        let group = DhGroup::toy64_insecure();
        let mk = MasterKey::from_bytes([0x33; 32]);
        let mut rng = ChaCha20Rng::seed_from_u64(seed);

        let mut coordinator =
            GroupCoordinator::new(group.clone(), mk.clone(), member_count, &mut rng);
        let mut members: Vec<GroupMember> =
            (0..member_count).map(|_| GroupMember::new(group.clone(), mk.clone(), &mut rng)).collect();
        let mut member_results: Vec<Option<Established>> = vec![None; member_count];

        let start = coordinator.start(&mut rng).unwrap();
        let mut coordinator_result = start.established;
        let mut pending: Vec<(usize, InitMessage)> = start.outgoing;
        while let Some((idx, msg)) = pending.pop() {
            let out = members[idx].step(&msg).unwrap();
            if let Some(est) = out.established {
                member_results[idx] = Some(est);
            }
            if let Some(reply) = out.outgoing {
                let coord_out = coordinator.step(idx, &reply, &mut rng).unwrap();
                // insert-front plus pop-back keeps delivery order FIFO.
                for m in coord_out.outgoing {
                    pending.insert(0, m);
                }
                if let Some(est) = coord_out.established {
                    coordinator_result = Some(est);
                }
            }
        }
        (
            coordinator_result.expect("coordinator completes"),
            member_results.into_iter().map(|r| r.expect("member completes")).collect(),
        )
    }

    #[test]
    fn four_party_group_agrees() {
        let ((coord_key, coord_seed), members) = run_group(3, 11);
        assert_eq!(members.len(), 3);
        for (key, seed) in &members {
            assert_eq!(*key, coord_key);
            assert_eq!(seed.as_bytes(), coord_seed.as_bytes());
        }
    }

    #[test]
    fn solo_group_is_trivially_consistent() {
        let group = DhGroup::toy64_insecure();
        let mk = MasterKey::from_bytes([0x33; 32]);
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let mut coordinator = GroupCoordinator::new(group, mk, 0, &mut rng);
        let out = coordinator.start(&mut rng).unwrap();
        assert!(out.established.is_some());
        assert!(coordinator.awaiting_from().is_none());
    }

    #[test]
    fn tampered_group_key_fails_that_member_only() {
        let group = DhGroup::toy64_insecure();
        let mk = MasterKey::from_bytes([0x33; 32]);
        let mut rng = ChaCha20Rng::seed_from_u64(12);

        let mut coordinator = GroupCoordinator::new(group.clone(), mk.clone(), 2, &mut rng);
        let mut members: Vec<GroupMember> =
            (0..2).map(|_| GroupMember::new(group.clone(), mk.clone(), &mut rng)).collect();

        // Drive the pairwise stage honestly.
        let mut distribution: Vec<(usize, InitMessage)> = Vec::new();
        let mut pending: Vec<(usize, InitMessage)> = coordinator.start(&mut rng).unwrap().outgoing;
        while let Some((idx, msg)) = pending.pop() {
            let out = members[idx].step(&msg).unwrap();
            if let Some(reply) = out.outgoing {
                let coord_out = coordinator.step(idx, &reply, &mut rng).unwrap();
                for (to, m) in coord_out.outgoing {
                    if m.kind == MessageKind::HcMsg1 && members[to].pairwise_key.is_some() {
                        distribution.push((to, m));
                    } else {
                        pending.insert(0, (to, m));
                    }
                }
            }
        }
        assert_eq!(distribution.len(), 4);

        // Corrupt the group-key ciphertext addressed to member 1.
        distribution.sort_by_key(|(to, _)| *to);
        let (_, msg_m0_key) = &distribution[0];
        let (_, mut msg_m1_key) = distribution[2].clone();
        msg_m1_key.body[0] ^= 0xFF;

        assert!(members[0].step(msg_m0_key).unwrap().outgoing.is_none());
        assert_eq!(
            members[1].step(&msg_m1_key).unwrap_err(),
            InitError::AuthenticationFailed
        );
        assert!(members[1].is_failed());
        assert!(!members[0].is_failed());
    }
}
