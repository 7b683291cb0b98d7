//! Declarative bus scenarios: devices, traffic pattern, loss policy, chain
//! strategy. A scenario plus a seed fully determines the run.
//!
//! Secured links are established with the dynamic exchange at build time.
//! All randomness — keys, exchange values, payload bytes — is drawn from
//! streams derived per concern from `(seed, purpose, endpoints)`, never from
//! one shared sequence, so adding devices or traffic to a scenario does not
//! perturb what existing entries send or drop.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::auth::{BroadcastContext, SessionContext};
use crate::chain::{ChainConfig, StorageApproach};
use crate::crc::catalog_by_name;
use crate::crypto::{DhGroup, MasterKey};
use crate::init::{InitError, Initiator, Responder};

use super::bus::{Bus, DeliveryPolicy, SendOp};
use super::device::Device;
use super::frame::{BROADCAST_ADDRESS, MAX_PAYLOAD};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("unknown crc parametrization {0:?}")]
    UnknownCrc(String),
    #[error("the frame CRC field is 16 bits; {0:?} has width {1}")]
    CrcWidthUnsupported(String, u8),
    #[error("unknown key-exchange group {0:?}")]
    UnknownGroup(String),
    #[error("master key must be 64 hex characters")]
    BadMasterKey,
    #[error("duplicate device address {0}")]
    DuplicateDevice(u8),
    #[error("traffic references unknown device {0}")]
    UnknownDevice(u8),
    #[error("device address {BROADCAST_ADDRESS} is reserved for broadcast")]
    ReservedAddress,
    #[error("payload length {0} exceeds {MAX_PAYLOAD}")]
    PayloadTooLarge(usize),
    #[error("the live bus supports pair-based chain storage only")]
    UnsupportedStorage,
    #[error("initialization failed for pair {src}->{dst}: {err}")]
    InitFailed { src: u8, dst: u8, err: InitError },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeSpec {
    Plain,
    Secured,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSpec {
    pub id: u8,
    pub mode: ModeSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrafficSpec {
    pub src: u8,
    pub dst: u8,
    pub frames: u32,
    #[serde(default = "default_payload_len")]
    pub payload_len: usize,
    #[serde(default = "default_function")]
    pub function: u8,
    #[serde(default)]
    pub start_tick: u64,
    #[serde(default = "default_interval")]
    pub interval: u64,
}

fn default_payload_len() -> usize {
    16
}

fn default_function() -> u8 {
    0x03
}

fn default_interval() -> u64 {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BusScenario {
    /// Run seed; a seed passed on the command line takes precedence.
    #[serde(default)]
    pub seed: Option<u64>,
    /// CRC parametrization for secured sessions (16-bit catalog entries).
    #[serde(default = "default_crc")]
    pub crc: String,
    #[serde(default = "default_group")]
    pub dh_group: String,
    /// Pre-provisioned master key, hex. Derived from the seed if absent.
    #[serde(default)]
    pub master_key: Option<String>,
    #[serde(default)]
    pub drop_probability: f64,
    #[serde(default)]
    pub chain: ChainConfig,
    pub devices: Vec<DeviceSpec>,
    pub traffic: Vec<TrafficSpec>,
}

fn default_crc() -> String {
    "crc16-modbus".into()
}

fn default_group() -> String {
    "toy64".into()
}

/// Independent stream per concern: nothing one stream draws can shift
/// another.
fn derived_rng(seed: u64, purpose: u64, a: u8, b: u8) -> ChaCha20Rng {
    let mut mixer =
        SplitMix64::seed_from_u64(purpose ^ ((a as u64) << 8) ^ (b as u64));
    ChaCha20Rng::seed_from_u64(seed ^ mixer.next_u64())
}

const PURPOSE_MASTER: u64 = 0x6d61_7374_6572;
const PURPOSE_INIT: u64 = 0x696e_6974;
const PURPOSE_PAYLOAD: u64 = 0x7061_796c_6f61_64;

/// Run the dynamic exchange in process for one directed pair.
fn establish_pair(
    group: &DhGroup,
    master: &MasterKey,
    rng: &mut ChaCha20Rng,
) -> Result<crate::init::Established, InitError> {
    let mut tx = Initiator::new(group.clone(), master.clone(), rng);
    let mut rx = Responder::new(group.clone(), master.clone(), rng);

    let msg1 = tx.step(None)?.outgoing.expect("opening message");
    let msg2 = rx.step(&msg1)?.outgoing.expect("reply");
    let msg3 = tx.step(Some(&msg2))?.outgoing.expect("seed message");
    let out_rx = rx.step(&msg3)?;
    let msg4 = out_rx.outgoing.expect("confirmation");
    let out_tx = tx.step(Some(&msg4))?;
    Ok(out_tx.established.expect("initiator side completes"))
}

impl BusScenario {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn resolve_seed(&self, override_seed: Option<u64>) -> u64 {
        override_seed.or(self.seed).unwrap_or(0)
    }

    /// Materialize the scenario: attach devices, establish secured links,
    /// and expand the traffic table into a concrete schedule.
    pub fn build(&self, override_seed: Option<u64>) -> Result<(Bus, Vec<SendOp>), ScenarioError> {
        let seed = self.resolve_seed(override_seed);

        let crc_entry = catalog_by_name(&self.crc)
            .ok_or_else(|| ScenarioError::UnknownCrc(self.crc.clone()))?;
        if crc_entry.params.width_bits() != 16 {
            return Err(ScenarioError::CrcWidthUnsupported(
                self.crc.clone(),
                crc_entry.params.width_bits(),
            ));
        }
        let group = DhGroup::by_name(&self.dh_group)
            .ok_or_else(|| ScenarioError::UnknownGroup(self.dh_group.clone()))?;
        if self.chain.storage != StorageApproach::Pair {
            return Err(ScenarioError::UnsupportedStorage);
        }

        let master = match &self.master_key {
            Some(hex_key) => {
                let bytes: [u8; 32] = hex::decode(hex_key)
                    .ok()
                    .and_then(|v| v.try_into().ok())
                    .ok_or(ScenarioError::BadMasterKey)?;
                MasterKey::from_bytes(bytes)
            }
            None => MasterKey::random(&mut derived_rng(seed, PURPOSE_MASTER, 0, 0)),
        };

        let mut bus = Bus::new(
            if self.drop_probability > 0.0 {
                DeliveryPolicy::Drop { probability: self.drop_probability }
            } else {
                DeliveryPolicy::Lossless
            },
            seed,
        );

        let mut seen = std::collections::HashSet::new();
        for spec in &self.devices {
            if spec.id == BROADCAST_ADDRESS {
                return Err(ScenarioError::ReservedAddress);
            }
            if !seen.insert(spec.id) {
                return Err(ScenarioError::DuplicateDevice(spec.id));
            }
            bus.attach(match spec.mode {
                ModeSpec::Plain => Device::plain(spec.id),
                ModeSpec::Secured => Device::secured(spec.id),
            });
        }

        let mode_of = |id: u8| self.devices.iter().find(|d| d.id == id).map(|d| d.mode);
        let strategy = self.chain.strategy();
        let mut broadcast_wired = false;

        for t in &self.traffic {
            if t.payload_len > MAX_PAYLOAD {
                return Err(ScenarioError::PayloadTooLarge(t.payload_len));
            }
            let src_mode = mode_of(t.src).ok_or(ScenarioError::UnknownDevice(t.src))?;
            let dst_mode = if t.dst == BROADCAST_ADDRESS {
                None
            } else {
                Some(mode_of(t.dst).ok_or(ScenarioError::UnknownDevice(t.dst))?)
            };

            match (src_mode, dst_mode) {
                (ModeSpec::Secured, Some(ModeSpec::Secured)) => {
                    // One directed session per (src, dst); the exchange runs
                    // once even if several traffic entries share the pair.
                    if bus.device(t.src).unwrap().send_session(t.dst).is_none() {
                        let mut rng = derived_rng(seed, PURPOSE_INIT, t.src, t.dst);
                        let (key, chain_seed) = establish_pair(&group, &master, &mut rng)
                            .map_err(|err| ScenarioError::InitFailed { src: t.src, dst: t.dst, err })?;
                        let sender = SessionContext::sender(
                            &key,
                            &chain_seed,
                            crc_entry.params,
                            self.chain.n_hash,
                            strategy,
                        )
                        .expect("16-bit params are valid");
                        let receiver = SessionContext::receiver(
                            &key,
                            &chain_seed,
                            crc_entry.params,
                            self.chain.n_hash,
                            strategy,
                            self.chain.lookahead,
                        )
                        .expect("16-bit params are valid");
                        bus.device_mut(t.src).unwrap().add_send_session(t.dst, sender);
                        bus.device_mut(t.dst).unwrap().add_recv_session(t.src, receiver);
                    }
                }
                (ModeSpec::Secured, None) if !broadcast_wired => {
                    // Master-key broadcast: one counter sequence on the bus.
                    broadcast_wired = true;
                    let sender = BroadcastContext::master_sender(&master, crc_entry.params)
                        .expect("16-bit params are valid");
                    bus.device_mut(t.src).unwrap().set_broadcast_sender(sender);
                    for spec in &self.devices {
                        if spec.mode == ModeSpec::Secured && spec.id != t.src {
                            let rx = BroadcastContext::master_receiver(
                                &master,
                                crc_entry.params,
                                self.chain.lookahead,
                            )
                            .expect("16-bit params are valid");
                            bus.device_mut(spec.id).unwrap().set_broadcast_receiver(rx);
                        }
                    }
                }
                _ => {}
            }
        }

        let mut schedule = Vec::new();
        for t in &self.traffic {
            let mut payload_rng = derived_rng(seed, PURPOSE_PAYLOAD, t.src, t.dst);
            for k in 0..t.frames {
                let mut payload = vec![0u8; t.payload_len];
                rand::RngCore::fill_bytes(&mut payload_rng, &mut payload);
                schedule.push(SendOp {
                    tick: t.start_tick + k as u64 * t.interval,
                    src: t.src,
                    dst: t.dst,
                    function: t.function,
                    payload,
                });
            }
        }

        Ok((bus, schedule))
    }
}
