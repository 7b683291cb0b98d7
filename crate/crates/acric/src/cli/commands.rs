//! Subcommand implementations other than the benchmark.

use std::net::{TcpListener, TcpStream};
use std::path::PathBuf;
use std::time::Duration;

use clap::Args;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::adversary::{cdf_build, run_forgery, stats, ForgeryExperiment, ForgeryMode};
use crate::chain::{storage_bits, Consumption, StorageApproach, StorageModel};
use crate::crypto::{os_rng, random_bytes, DhGroup, MasterKey};
use crate::init::{
    run_initiator, run_responder, Established, GroupCoordinator, GroupMember, InitChannel,
    InitMessage, Initiator, Responder, TcpChannel,
};
use crate::transport::BusScenario;

use super::{echo_config, CliError};

// ---------------------------------------------------------------- keygen --

#[derive(Args, Debug, Serialize)]
pub struct KeygenArgs {
    /// Destination file for the hex-encoded key.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn keygen(args: KeygenArgs) -> Result<(), CliError> {
    echo_config(&args);
    let key = random_bytes(32).map_err(|e| CliError::Io(e.to_string()))?;
    let mut text = hex::encode(&key);
    text.push('\n');
    std::fs::write(&args.out, text)?;
    restrict_permissions(&args.out)?;
    println!("{}", serde_json::json!({ "keygen": { "out": args.out, "bytes": 32 } }));
    Ok(())
}

#[cfg(unix)]
fn restrict_permissions(path: &std::path::Path) -> std::io::Result<()> {
    use std::os::unix::fs::PermissionsExt;
    std::fs::set_permissions(path, std::fs::Permissions::from_mode(0o600))
}

#[cfg(not(unix))]
fn restrict_permissions(_path: &std::path::Path) -> std::io::Result<()> {
    Ok(())
}

fn load_master_key(path: &std::path::Path) -> Result<MasterKey, CliError> {
    let text = std::fs::read_to_string(path)?;
    let bytes: [u8; 32] = hex::decode(text.trim())
        .ok()
        .and_then(|v| v.try_into().ok())
        .ok_or_else(|| CliError::Config(format!("{} is not a 64-hex-character key file", path.display())))?;
    Ok(MasterKey::from_bytes(bytes))
}

// ------------------------------------------------------------------ init --

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Initiator,
    Responder,
    GroupCoordinator,
    GroupMember,
}

#[derive(Args, Debug, Serialize)]
pub struct InitArgs {
    #[arg(long, value_enum)]
    pub role: Role,
    /// Peer address: dialed by initiator and group-member, bound by
    /// responder and group-coordinator.
    #[arg(long)]
    pub peer: String,
    /// Master key file (from `acric keygen`).
    #[arg(long)]
    pub master_key: PathBuf,
    #[arg(long, default_value = "modp2048")]
    pub dh_group: String,
    /// Members expected by a group coordinator.
    #[arg(long, default_value_t = 1)]
    pub members: usize,
    /// Abort an exchange that stalls this long.
    #[arg(long, default_value_t = 5)]
    pub timeout_secs: u64,
}

/// One-way digest of the established secrets; equal on both ends, reveals
/// neither the key nor the seed nor any pad value.
fn session_fingerprint(established: &Established) -> String {
    let (key, seed) = established;
    let mut hasher = Sha256::new();
    hasher.update(b"session-fingerprint");
    hasher.update(key.as_bytes());
    hasher.update(seed.as_bytes());
    hex::encode(hasher.finalize())
}

pub fn init(args: InitArgs) -> Result<(), CliError> {
    echo_config(&args);
    let group = DhGroup::by_name(&args.dh_group)
        .ok_or_else(|| CliError::Config(format!("unknown group {:?}", args.dh_group)))?;
    let master = load_master_key(&args.master_key)?;
    let timeout = Duration::from_secs(args.timeout_secs);
    let mut rng = os_rng();

    let established = match args.role {
        Role::Initiator => {
            let stream = TcpStream::connect(&args.peer)?;
            let mut channel = TcpChannel::new(stream, timeout)?;
            run_initiator(Initiator::new(group, master, &mut rng), &mut channel)?
        }
        Role::Responder => {
            let listener = TcpListener::bind(&args.peer)?;
            let (stream, _) = listener.accept()?;
            let mut channel = TcpChannel::new(stream, timeout)?;
            run_responder(Responder::new(group, master, &mut rng), &mut channel)?
        }
        Role::GroupMember => {
            let stream = TcpStream::connect(&args.peer)?;
            let mut channel = TcpChannel::new(stream, timeout)?;
            run_group_member(GroupMember::new(group, master, &mut rng), &mut channel)?
        }
        Role::GroupCoordinator => {
            let listener = TcpListener::bind(&args.peer)?;
            let mut channels = Vec::with_capacity(args.members);
            for _ in 0..args.members {
                let (stream, _) = listener.accept()?;
                channels.push(TcpChannel::new(stream, timeout)?);
            }
            run_group_coordinator(
                GroupCoordinator::new(group, master, args.members, &mut rng),
                &mut channels,
                &mut rng,
            )?
        }
    };

    println!(
        "{}",
        serde_json::json!({
            "init": {
                "role": args.role,
                "dh_group": args.dh_group,
                "session_fingerprint": session_fingerprint(&established),
            }
        })
    );
    Ok(())
}

/// Drive a group member over one channel to completion.
pub fn run_group_member(
    mut member: GroupMember,
    channel: &mut impl InitChannel,
) -> Result<Established, CliError> {
    loop {
        let incoming = channel.recv().map_err(crate::init::InitError::from)?;
        let out = match member.step(&incoming) {
            Ok(out) => out,
            Err(err) => {
                let _ = channel.send(&InitMessage::error());
                return Err(err.into());
            }
        };
        if let Some(msg) = out.outgoing {
            channel.send(&msg).map_err(crate::init::InitError::from)?;
        }
        if let Some(established) = out.established {
            return Ok(established);
        }
    }
}

/// Drive a group coordinator over one channel per member to completion.
/// Any failure notifies every member before returning.
pub fn run_group_coordinator(
    mut coordinator: GroupCoordinator,
    channels: &mut [impl InitChannel],
    rng: &mut (impl rand::RngCore + rand::CryptoRng),
) -> Result<Established, CliError> {
    let abort = |channels: &mut [_]| {
        for ch in channels.iter_mut() {
            let _ = InitChannel::send(ch, &InitMessage::error());
        }
    };

    let start = coordinator.start(rng).map_err(CliError::from)?;
    if let Some(established) = start.established {
        return Ok(established);
    }
    let mut queue = start.outgoing;
    loop {
        for (member, msg) in queue.drain(..) {
            channels[member].send(&msg).map_err(crate::init::InitError::from)?;
        }
        let Some(member) = coordinator.awaiting_from() else {
            abort(channels);
            return Err(CliError::Protocol("group coordinator stalled".into()));
        };
        let incoming = channels[member].recv().map_err(crate::init::InitError::from)?;
        match coordinator.step(member, &incoming, rng) {
            Ok(out) => {
                queue = out.outgoing;
                if let Some(established) = out.established {
                    return Ok(established);
                }
            }
            Err(err) => {
                abort(channels);
                return Err(err.into());
            }
        }
    }
}

// ------------------------------------------------------------------- bus --

#[derive(Args, Debug, Serialize)]
pub struct BusArgs {
    /// Scenario file (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Run seed; overrides the scenario's own seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Trace output path (JSON lines, one object per frame event).
    #[arg(long)]
    pub trace: PathBuf,
}

pub fn bus(args: BusArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.config)?;
    let scenario = BusScenario::from_json(&text)?;
    let seed = scenario.resolve_seed(args.seed);

    #[derive(Serialize)]
    struct Resolved<'a> {
        config: &'a PathBuf,
        trace: &'a PathBuf,
        seed: u64,
        scenario: &'a BusScenario,
    }
    echo_config(&Resolved { config: &args.config, trace: &args.trace, seed, scenario: &scenario });

    let (mut bus, schedule) = scenario.build(Some(seed))?;
    let trace = bus.run(&schedule);
    std::fs::write(&args.trace, trace.to_jsonl())?;

    println!(
        "{}",
        serde_json::json!({
            "bus": {
                "seed": seed,
                "frames_sent": trace.count_kind("send"),
                "delivered": trace.count_outcome("delivered"),
                "dropped": trace.count_outcome("dropped"),
                "rejected": trace.events.iter()
                    .filter(|e| e.outcome.as_deref().is_some_and(|o| o.starts_with("rejected")))
                    .count(),
                "trace": args.trace,
            }
        })
    );
    Ok(())
}

// ---------------------------------------------------------------- attack --

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AttackMode {
    Random,
    Informed,
}

#[derive(Args, Debug, Serialize)]
pub struct AttackArgs {
    #[arg(long, value_enum)]
    pub mode: AttackMode,
    #[arg(long, value_parser = clap::value_parser!(u8))]
    pub crc_width: u8,
    #[arg(long, default_value_t = 1000)]
    pub trials: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CDF output path (CSV: attempts,cumulative_probability).
    #[arg(long)]
    pub out: PathBuf,
    /// Enumerate guesses without repetition instead of uniform i.i.d.
    #[arg(long, default_value_t = false)]
    pub without_replacement: bool,
}

pub fn attack(args: AttackArgs) -> Result<(), CliError> {
    echo_config(&args);
    let experiment = ForgeryExperiment {
        crc_width: args.crc_width,
        mode: match args.mode {
            AttackMode::Random => ForgeryMode::Random,
            AttackMode::Informed => ForgeryMode::Informed,
        },
        trials: args.trials,
        seed: args.seed,
        with_replacement: !args.without_replacement,
    };
    let record = run_forgery(&experiment).map_err(|e| CliError::Config(e.to_string()))?;
    let table = cdf_build(&record).map_err(|e| CliError::Config(e.to_string()))?;
    table.write_csv(&args.out)?;

    let per_attempt = (0.5f64).powi(args.crc_width as i32);
    let ks = stats::ks_statistic(&record.attempts, |k| stats::geometric_cdf(per_attempt, k));
    println!(
        "{}",
        serde_json::json!({
            "attack": {
                "mode": record.mode.as_str(),
                "crc_width": args.crc_width,
                "trials": args.trials,
                "seed": args.seed,
                "with_replacement": !args.without_replacement,
                "mean_attempts": record.mean_attempts(),
                "total_attempts": record.total_attempts(),
                "ks_vs_geometric": ks,
                "ks_critical_value": stats::ks_critical_value(record.attempts.len()),
                "out": args.out,
            }
        })
    );
    Ok(())
}

// --------------------------------------------------------------- storage --

#[derive(Args, Debug, Serialize)]
pub struct StorageArgs {
    /// Bits per hash value.
    #[arg(long, default_value_t = 256)]
    pub hash_bits: u64,
    /// Values per chain.
    #[arg(long, default_value_t = 1024)]
    pub n_hash: u64,
    /// Network nodes, or groups a node belongs to.
    #[arg(long, default_value_t = 5)]
    pub nodes: u64,
}

pub fn storage(args: StorageArgs) -> Result<(), CliError> {
    echo_config(&args);
    if args.hash_bits == 0 || args.n_hash == 0 || args.nodes == 0 {
        return Err(CliError::Config("hash-bits, n-hash and nodes must be positive".into()));
    }
    let cell = |approach, consumption| {
        storage_bits(&StorageModel {
            hash_bits: args.hash_bits,
            n_hash: args.n_hash,
            node_count: args.nodes,
            approach,
            consumption,
        })
    };
    println!(
        "{}",
        serde_json::json!({
            "storage_bits": {
                "hash_bits": args.hash_bits,
                "n_hash": args.n_hash,
                "nodes": args.nodes,
                "entity_backward": cell(StorageApproach::Entity, Consumption::Backward),
                "entity_forward": cell(StorageApproach::Entity, Consumption::Forward),
                "pair_backward": cell(StorageApproach::Pair, Consumption::Backward),
                "pair_forward": cell(StorageApproach::Pair, Consumption::Forward),
                "group_backward": cell(StorageApproach::Group, Consumption::Backward),
                "group_forward": cell(StorageApproach::Group, Consumption::Forward),
            }
        })
    );
    Ok(())
}
