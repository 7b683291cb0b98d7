//! Authentication and integrity protection for legacy protocols that carry a
//! CRC field, by computing that field cryptographically.
//!
//! Legacy buses validate frames with a plain CRC: public polynomial, public
//! start value. Anyone on the wire can forge a frame and recompute the
//! checksum. This crate keeps the frame layout bit-for-bit identical and
//! instead changes how the CRC field is produced: the register is seeded
//! with a secret initialization vector derived from a session key, and the
//! resulting CRC is XOR-encrypted with a single-use value drawn from a keyed
//! hash chain. A receiver that holds the same secrets recomputes and
//! compares; nobody else can forge, tamper or replay with better than
//! guessing probability.
//!
//! The crate is organized around that pipeline:
//!
//! - [`crc`] — parametric CRC engine (widths 1..=64, reflection, final XOR)
//!   with an explicit initialization-vector argument and a named catalog.
//! - [`crypto`] — HMAC-SHA-256, one-time-pad XOR, modular-exponentiation
//!   group arithmetic, and randomness.
//! - [`chain`] — one-time key streams grown from a session key and seed,
//!   with forward/backward consumption, runtime/offline/hybrid residency,
//!   and storage-overhead accounting.
//! - [`init`] — session establishment: static pair keys, an authenticated
//!   Diffie-Hellman exchange for point-to-point links, and coordinator-based
//!   group setup. Includes the wire format and TCP/in-memory channels.
//! - [`auth`] — the runtime core: signing and verifying the CRC field for
//!   session traffic and counter-keyed broadcast traffic.
//! - [`transport`] — a Modbus-RTU-style frame codec and a deterministic
//!   simulated bus where secured and plain devices coexist.
//! - [`adversary`] — a network attacker with full wire access (intercept,
//!   tamper, inject, replay) plus Monte-Carlo forgery experiments and their
//!   CDF/statistics tooling.
//! - [`cli`] — the `acric` command-line entry points.
//!
//! Each major capability has a runnable demonstration under `examples/`.

pub mod adversary;
pub mod auth;
pub mod chain;
pub mod cli;
pub mod crc;
pub mod crypto;
pub mod init;
pub mod transport;
