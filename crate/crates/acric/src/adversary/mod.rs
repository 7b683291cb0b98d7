//! Network attacker tooling and the brute-force experiments.
//!
//! The attacker owns the wire and nothing else: it sees, stores, alters,
//! drops, injects and replays raw frame bytes, but has no path to any key,
//! chain or counter held inside a device. Everything in this module is
//! constructed from wire bytes alone.

mod cdf;
mod forgery;
pub mod stats;

pub use cdf::{cdf_build, CdfTable};
pub use forgery::{
    run_forgery, AttemptRecord, ForgeryExperiment, ForgeryMode, DEFAULT_TRIALS,
};

use thiserror::Error;

use crate::transport::WireTap;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ActionError {
    #[error("byte index {index} out of range for a {len}-byte frame")]
    ByteIndexOutOfRange { index: usize, len: usize },
    #[error("no recorded frame at index {0}")]
    BadReplayIndex(usize),
}

/// One wire-level move. `Tamper` flips bits in the intercepted frame,
/// `Inject` puts an attacker-built frame on the wire next to it, `Replay`
/// re-sends a previously recorded frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AdversaryAction {
    Eavesdrop,
    Drop,
    Tamper { byte_index: usize, xor_mask: u8 },
    Inject { claimed_src: u8, frame: Vec<u8> },
    Replay { recorded_index: usize },
}

/// Attacker state: a log of captured wire bytes. Nothing more.
#[derive(Debug, Default)]
pub struct Adversary {
    recorded: Vec<(u8, Vec<u8>)>,
}

impl Adversary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn recorded(&self) -> &[(u8, Vec<u8>)] {
        &self.recorded
    }

    /// Apply one action to an intercepted frame. Returns what propagates on
    /// the wire: zero, one or two `(claimed source, bytes)` entries.
    pub fn apply(
        &mut self,
        action: &AdversaryAction,
        src: u8,
        frame: Vec<u8>,
    ) -> Result<Vec<(u8, Vec<u8>)>, ActionError> {
        match action {
            AdversaryAction::Eavesdrop => {
                self.recorded.push((src, frame.clone()));
                Ok(vec![(src, frame)])
            }
            AdversaryAction::Drop => Ok(Vec::new()),
            AdversaryAction::Tamper { byte_index, xor_mask } => {
                let mut frame = frame;
                if *byte_index >= frame.len() {
                    return Err(ActionError::ByteIndexOutOfRange {
                        index: *byte_index,
                        len: frame.len(),
                    });
                }
                frame[*byte_index] ^= xor_mask;
                Ok(vec![(src, frame)])
            }
            AdversaryAction::Inject { claimed_src, frame: injected } => {
                Ok(vec![(src, frame), (*claimed_src, injected.clone())])
            }
            AdversaryAction::Replay { recorded_index } => {
                let (rec_src, rec_frame) = self
                    .recorded
                    .get(*recorded_index)
                    .cloned()
                    .ok_or(ActionError::BadReplayIndex(*recorded_index))?;
                Ok(vec![(src, frame), (rec_src, rec_frame)])
            }
        }
    }
}

/// Bus tap running a fixed script: frame `n` on the wire gets action `n`'s
/// treatment; unscripted frames pass through recorded.
pub struct ScriptedAdversary {
    adversary: Adversary,
    script: std::collections::HashMap<u64, AdversaryAction>,
    next_frame: u64,
}

impl ScriptedAdversary {
    pub fn new(script: impl IntoIterator<Item = (u64, AdversaryAction)>) -> Self {
        Self {
            adversary: Adversary::new(),
            script: script.into_iter().collect(),
            next_frame: 0,
        }
    }

    pub fn into_recorded(self) -> Vec<(u8, Vec<u8>)> {
        self.adversary.recorded
    }
}

impl WireTap for ScriptedAdversary {
    fn intercept(&mut self, src: u8, raw: Vec<u8>) -> Vec<(u8, Vec<u8>)> {
        let action = self
            .script
            .get(&self.next_frame)
            .cloned()
            .unwrap_or(AdversaryAction::Eavesdrop);
        self.next_frame += 1;
        // A script with an out-of-range index is a harness bug; fail loud.
        self.adversary.apply(&action, src, raw).expect("scripted action is well-formed")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eavesdrop_copies_without_altering() {
        let mut adv = Adversary::new();
        let out = adv.apply(&AdversaryAction::Eavesdrop, 1, vec![1, 2, 3]).unwrap();
        assert_eq!(out, vec![(1, vec![1, 2, 3])]);
        assert_eq!(adv.recorded(), &[(1, vec![1, 2, 3])]);
    }

    #[test]
    fn drop_removes_the_frame() {
        let mut adv = Adversary::new();
        assert!(adv.apply(&AdversaryAction::Drop, 1, vec![1, 2, 3]).unwrap().is_empty());
    }

    #[test]
    fn tamper_xors_in_place_and_checks_bounds() {
        let mut adv = Adversary::new();
        let out = adv
            .apply(&AdversaryAction::Tamper { byte_index: 1, xor_mask: 0xFF }, 1, vec![1, 2, 3])
            .unwrap();
        assert_eq!(out, vec![(1, vec![1, 0xFD, 3])]);

        assert_eq!(
            adv.apply(&AdversaryAction::Tamper { byte_index: 9, xor_mask: 1 }, 1, vec![1, 2, 3])
                .unwrap_err(),
            ActionError::ByteIndexOutOfRange { index: 9, len: 3 }
        );
    }

    #[test]
    fn replay_needs_a_recording() {
        let mut adv = Adversary::new();
        assert_eq!(
            adv.apply(&AdversaryAction::Replay { recorded_index: 0 }, 1, vec![9]).unwrap_err(),
            ActionError::BadReplayIndex(0)
        );
        adv.apply(&AdversaryAction::Eavesdrop, 2, vec![7, 7]).unwrap();
        let out = adv.apply(&AdversaryAction::Replay { recorded_index: 0 }, 1, vec![9]).unwrap();
        assert_eq!(out, vec![(1, vec![9]), (2, vec![7, 7])]);
    }

    #[test]
    fn adversary_state_is_wire_bytes_only() {
        // The attacker type is constructible with no reference to any device,
        // key or context, and after observing traffic its entire state is
        // exactly the bytes that crossed the wire.
        let mut adv = Adversary::new();
        let frames = vec![vec![0x01, 0x03, 0xAA, 0xBB], vec![0x02, 0x06, 0x00, 0x11]];
        for (i, f) in frames.iter().enumerate() {
            adv.apply(&AdversaryAction::Eavesdrop, i as u8, f.clone()).unwrap();
        }
        let state: Vec<Vec<u8>> = adv.recorded().iter().map(|(_, b)| b.clone()).collect();
        assert_eq!(state, frames);
    }
}
