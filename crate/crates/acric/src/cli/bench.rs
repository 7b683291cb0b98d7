//! Timing measurements: per-frame overhead of authenticated CRCs against
//! plain ones, and wall-clock time of a full initialization over loopback
//! TCP.

use std::net::TcpListener;
use std::time::{Duration, Instant};

use clap::Args;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::auth::SessionContext;
use crate::chain::{ChainSeed, ChainStrategy};
use crate::crc::catalog_by_name;
use crate::crypto::{DhGroup, MasterKey, SessionKey};
use crate::init::{run_initiator, run_responder, Initiator, Responder, TcpChannel};
use crate::transport::PlainCrc;

use super::{echo_config, CliError};

#[derive(Args, Debug, Serialize)]
pub struct BenchArgs {
    /// Frame payload size for the per-frame measurement.
    #[arg(long, default_value_t = 252)]
    pub payload_len: usize,
    #[arg(long, default_value_t = 2000)]
    pub iterations: u32,
    /// Full initialization runs over loopback TCP.
    #[arg(long, default_value_t = 3)]
    pub init_runs: u32,
    #[arg(long, default_value = "modp2048")]
    pub dh_group: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Serialize)]
pub struct Percentiles {
    median_ns: u64,
    p99_ns: u64,
}

fn percentiles(mut samples: Vec<u64>) -> Percentiles {
    samples.sort_unstable();
    let median_ns = samples[samples.len() / 2];
    let p99_ns = samples[(samples.len() * 99 / 100).min(samples.len() - 1)];
    Percentiles { median_ns, p99_ns }
}

/// Median sign+verify and plain CRC check time per frame, in nanoseconds.
pub fn frame_overhead(
    payload_len: usize,
    iterations: u32,
    seed: u64,
) -> (Percentiles, Percentiles) {
    let params = catalog_by_name("crc16-modbus").expect("catalog entry exists").params;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let key = SessionKey::random(&mut rng);
    let chain_seed = ChainSeed::random(&mut rng);
    let n_hash = iterations as u64 + 16;

    let mut sender =
        SessionContext::sender(&key, &chain_seed, params, n_hash, ChainStrategy::default())
            .expect("valid session");
    let mut receiver = SessionContext::receiver(
        &key,
        &chain_seed,
        params,
        n_hash,
        ChainStrategy::default(),
        8,
    )
    .expect("valid session");

    let plain = PlainCrc::modbus();
    let mut body = vec![0u8; payload_len + 2];
    rng.fill_bytes(&mut body);

    let mut secured_ns = Vec::with_capacity(iterations as usize);
    let mut plain_ns = Vec::with_capacity(iterations as usize);
    for _ in 0..iterations {
        let t = Instant::now();
        let sec = sender.sign(&body).expect("chain sized for the run");
        let verdict = receiver.verify(&body, sec.value).expect("receiver role");
        secured_ns.push(t.elapsed().as_nanos() as u64);
        assert!(verdict.is_accept());

        let t = Instant::now();
        let crc = plain.compute(&body);
        let ok = plain.compute(&body) == crc;
        plain_ns.push(t.elapsed().as_nanos() as u64);
        assert!(ok);
    }
    (percentiles(secured_ns), percentiles(plain_ns))
}

/// Wall-clock duration of one full exchange over loopback TCP.
pub fn init_over_loopback(group: &DhGroup, timeout: Duration) -> Result<Duration, CliError> {
    let master = MasterKey::from_bytes([0x42; 32]);
    let listener = TcpListener::bind("127.0.0.1:0")?;
    let addr = listener.local_addr()?;

    let responder_group = group.clone();
    let responder_master = master.clone();
    let handle = std::thread::spawn(move || -> Result<(), CliError> {
        let (stream, _) = listener.accept()?;
        let mut channel = TcpChannel::new(stream, timeout)?;
        let mut rng = crate::crypto::os_rng();
        run_responder(Responder::new(responder_group, responder_master, &mut rng), &mut channel)?;
        Ok(())
    });

    let started = Instant::now();
    let stream = std::net::TcpStream::connect(addr)?;
    let mut channel = TcpChannel::new(stream, timeout)?;
    let mut rng = crate::crypto::os_rng();
    run_initiator(Initiator::new(group.clone(), master, &mut rng), &mut channel)?;
    let elapsed = started.elapsed();

    handle.join().map_err(|_| CliError::Protocol("responder thread panicked".into()))??;
    Ok(elapsed)
}

pub fn bench(args: BenchArgs) -> Result<(), CliError> {
    echo_config(&args);
    if args.iterations == 0 || args.init_runs == 0 {
        return Err(CliError::Config("iterations and init-runs must be positive".into()));
    }
    let group = DhGroup::by_name(&args.dh_group)
        .ok_or_else(|| CliError::Config(format!("unknown group {:?}", args.dh_group)))?;

    let (secured, plain) = frame_overhead(args.payload_len, args.iterations, args.seed);
    let delta_median_ns = secured.median_ns.saturating_sub(plain.median_ns);

    let mut runs_ms = Vec::with_capacity(args.init_runs as usize);
    for _ in 0..args.init_runs {
        let elapsed = init_over_loopback(&group, Duration::from_secs(10))?;
        runs_ms.push(elapsed.as_secs_f64() * 1e3);
    }
    let mut sorted = runs_ms.clone();
    sorted.sort_by(f64::total_cmp);
    let median_ms = sorted[sorted.len() / 2];

    println!(
        "{}",
        serde_json::json!({
            "bench": {
                "frame": {
                    "payload_len": args.payload_len,
                    "iterations": args.iterations,
                    "secured": secured,
                    "plain": plain,
                    "delta_median_ns": delta_median_ns,
                },
                "init": {
                    "dh_group": args.dh_group,
                    "runs_ms": runs_ms,
                    "median_ms": median_ms,
                },
            }
        })
    );
    Ok(())
}
