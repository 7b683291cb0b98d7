//! A simulated shared bus with deterministic delivery.
//!
//! Every frame put on the wire is observed by every other attached device
//! (subject to the loss policy), mirroring a serial multidrop line. Frame
//! drops are decided by hashing `(seed, sender, per-sender sequence)` rather
//! than by drawing from a shared stream, so the fate of one sender's traffic
//! never depends on what other devices transmit — attaching more devices to
//! a bus leaves existing verdicts untouched, and the same seed always yields
//! the same trace.

use rand::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use serde::Serialize;

use super::device::{Device, ReceiveOutcome};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeliveryPolicy {
    Lossless,
    /// Independent per-frame loss with the given probability.
    Drop { probability: f64 },
}

/// A scheduled transmission.
#[derive(Debug, Clone)]
pub struct SendOp {
    pub tick: u64,
    pub src: u8,
    pub dst: u8,
    pub function: u8,
    pub payload: Vec<u8>,
}

/// Wire-level interception hook. Implementations see exactly what the wire
/// carries — raw bytes and the electrical origin — and return what actually
/// propagates: nothing (drop), the original or altered bytes, or extra
/// injected frames, each with a claimed origin.
pub trait WireTap {
    fn intercept(&mut self, src: u8, raw: Vec<u8>) -> Vec<(u8, Vec<u8>)>;
}

/// One line of the JSON-lines trace.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct TraceEvent {
    pub seq: u64,
    pub tick: u64,
    pub kind: String,
    pub src: u8,
    pub dst: u8,
    /// Observing device for `recv` events.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub device: Option<u8>,
    pub len: usize,
    pub crc_field: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcome: Option<String>,
    /// Key-stream index consumed by a secured sender, or values consumed by
    /// an accepting receiver.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chain_index: Option<u64>,
}

#[derive(Debug, Default, Clone, PartialEq)]
pub struct TraceLog {
    pub events: Vec<TraceEvent>,
}

impl TraceLog {
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for event in &self.events {
            out.push_str(&serde_json::to_string(event).expect("trace events serialize"));
            out.push('\n');
        }
        out
    }

    pub fn count_outcome(&self, outcome: &str) -> usize {
        self.events.iter().filter(|e| e.outcome.as_deref() == Some(outcome)).count()
    }

    pub fn count_kind(&self, kind: &str) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }
}

/// Per-frame loss decision from (seed, sender, sequence) only.
fn drop_roll(seed: u64, src: u8, seq: u64) -> f64 {
    let mut mixer = SplitMix64::seed_from_u64(seed ^ ((src as u64) << 48) ^ seq);
    (mixer.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

pub struct Bus {
    devices: Vec<Device>,
    policy: DeliveryPolicy,
    seed: u64,
    tap: Option<Box<dyn WireTap>>,
}

impl Bus {
    pub fn new(policy: DeliveryPolicy, seed: u64) -> Self {
        Self { devices: Vec::new(), policy, seed, tap: None }
    }

    pub fn attach(&mut self, device: Device) {
        assert!(
            self.devices.iter().all(|d| d.id() != device.id()),
            "duplicate device address {:#04x}",
            device.id()
        );
        self.devices.push(device);
    }

    pub fn set_tap(&mut self, tap: Box<dyn WireTap>) {
        self.tap = Some(tap);
    }

    pub fn device(&self, id: u8) -> Option<&Device> {
        self.devices.iter().find(|d| d.id() == id)
    }

    pub fn device_mut(&mut self, id: u8) -> Option<&mut Device> {
        self.devices.iter_mut().find(|d| d.id() == id)
    }

    fn should_drop(&self, src: u8, seq: u64) -> bool {
        match self.policy {
            DeliveryPolicy::Lossless => false,
            DeliveryPolicy::Drop { probability } => drop_roll(self.seed, src, seq) < probability,
        }
    }

    /// Run a schedule to completion. Ops execute in tick order (stable for
    /// equal ticks); the result is a full per-frame trace.
    pub fn run(&mut self, schedule: &[SendOp]) -> TraceLog {
        let mut order: Vec<usize> = (0..schedule.len()).collect();
        order.sort_by_key(|&i| schedule[i].tick);

        let mut trace = TraceLog::default();
        let mut event_seq = 0u64;
        let mut per_sender_seq: std::collections::HashMap<u8, u64> = std::collections::HashMap::new();

        for &i in &order {
            let op = &schedule[i];
            let seq = per_sender_seq.entry(op.src).or_insert(0);
            let frame_seq = *seq;
            *seq += 1;

            let src = match self.device_mut(op.src) {
                Some(d) => d,
                None => continue,
            };
            let (frame, sign_index) = match src.encode_frame(op.dst, op.function, &op.payload) {
                Ok(out) => out,
                Err(err) => {
                    trace.events.push(TraceEvent {
                        seq: event_seq,
                        tick: op.tick,
                        kind: "send_error".into(),
                        src: op.src,
                        dst: op.dst,
                        device: None,
                        len: 0,
                        crc_field: String::new(),
                        outcome: Some(format!("error:{err}")),
                        chain_index: None,
                    });
                    event_seq += 1;
                    continue;
                }
            };
            let raw = frame.encode();
            trace.events.push(TraceEvent {
                seq: event_seq,
                tick: op.tick,
                kind: "send".into(),
                src: op.src,
                dst: op.dst,
                device: None,
                len: raw.len(),
                crc_field: format!("{:#06x}", frame.crc_field),
                outcome: None,
                chain_index: sign_index,
            });
            event_seq += 1;

            if self.should_drop(op.src, frame_seq) {
                trace.events.push(TraceEvent {
                    seq: event_seq,
                    tick: op.tick,
                    kind: "drop".into(),
                    src: op.src,
                    dst: op.dst,
                    device: None,
                    len: raw.len(),
                    crc_field: format!("{:#06x}", frame.crc_field),
                    outcome: Some("dropped".into()),
                    chain_index: None,
                });
                event_seq += 1;
                continue;
            }

            let on_wire = match self.tap.as_mut() {
                Some(tap) => tap.intercept(op.src, raw),
                None => vec![(op.src, raw)],
            };

            for (claimed_src, bytes) in on_wire {
                for d in 0..self.devices.len() {
                    if self.devices[d].id() == claimed_src {
                        continue;
                    }
                    let device_id = self.devices[d].id();
                    let outcome = self.devices[d].receive(claimed_src, &bytes);
                    let (text, consumed) = match &outcome {
                        ReceiveOutcome::Delivered { consumed, .. } => {
                            ("delivered".to_string(), Some(*consumed as u64))
                        }
                        ReceiveOutcome::Rejected(reason) => {
                            (format!("rejected:{}", reason.as_str()), None)
                        }
                        ReceiveOutcome::NotForMe => ("not_for_me".to_string(), None),
                    };
                    trace.events.push(TraceEvent {
                        seq: event_seq,
                        tick: op.tick,
                        kind: "recv".into(),
                        src: claimed_src,
                        dst: op.dst,
                        device: Some(device_id),
                        len: bytes.len(),
                        crc_field: bytes
                            .len()
                            .checked_sub(2)
                            .map(|i| {
                                format!("{:#06x}", u16::from_le_bytes([bytes[i], bytes[i + 1]]))
                            })
                            .unwrap_or_default(),
                        outcome: Some(text),
                        chain_index: consumed,
                    });
                    event_seq += 1;
                }
            }
        }
        trace
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plain_schedule(frames: u32) -> Vec<SendOp> {
        (0..frames)
            .map(|i| SendOp {
                tick: i as u64,
                src: 0x01,
                dst: 0x02,
                function: 0x03,
                payload: vec![i as u8; 4],
            })
            .collect()
    }

    #[test]
    fn lossless_plain_traffic_delivers_everything() {
        let mut bus = Bus::new(DeliveryPolicy::Lossless, 1);
        bus.attach(Device::plain(0x01));
        bus.attach(Device::plain(0x02));
        let trace = bus.run(&plain_schedule(50));
        assert_eq!(trace.count_outcome("delivered"), 50);
        assert_eq!(trace.count_outcome("dropped"), 0);
    }

    #[test]
    fn same_seed_same_trace() {
        let run = || {
            let mut bus = Bus::new(DeliveryPolicy::Drop { probability: 0.2 }, 99);
            bus.attach(Device::plain(0x01));
            bus.attach(Device::plain(0x02));
            bus.run(&plain_schedule(100))
        };
        let a = run();
        let b = run();
        assert_eq!(a.to_jsonl(), b.to_jsonl());
    }

    #[test]
    fn different_seeds_differ() {
        let run = |seed| {
            let mut bus = Bus::new(DeliveryPolicy::Drop { probability: 0.2 }, seed);
            bus.attach(Device::plain(0x01));
            bus.attach(Device::plain(0x02));
            let trace = bus.run(&plain_schedule(200));
            // The pattern of dropped positions, not just the count.
            trace
                .events
                .iter()
                .filter(|e| e.kind == "drop")
                .map(|e| e.tick)
                .collect::<Vec<_>>()
        };
        assert_ne!(run(1), run(2));
    }

    #[test]
    fn drop_decisions_do_not_depend_on_other_traffic() {
        for seed in 0..20u64 {
            for seq in 0..50u64 {
                let a = drop_roll(seed, 0x01, seq);
                let b = drop_roll(seed, 0x01, seq);
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn duplicate_addresses_rejected() {
        let mut bus = Bus::new(DeliveryPolicy::Lossless, 0);
        bus.attach(Device::plain(0x01));
        let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| {
            bus.attach(Device::plain(0x01));
        }));
        assert!(result.is_err());
    }
}
