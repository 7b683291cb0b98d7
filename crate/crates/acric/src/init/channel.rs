//! Message channels for driving an exchange: in-memory pairs for tests and
//! simulations, TCP with a two-byte big-endian length prefix for real links.

use std::io::{Read, Write};
use std::net::TcpStream;
use std::sync::mpsc::{channel, Receiver, Sender};
use std::time::Duration;

use thiserror::Error;

use super::message::{InitMessage, WireError};

/// An exchange that stalls longer than this is treated as failed.
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(5);

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("peer closed the channel")]
    Closed,
    #[error("timed out waiting for the peer")]
    Timeout,
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Wire(WireError),
}

// Equality on the kind only; io::Error is not comparable.
impl PartialEq for ChannelError {
    fn eq(&self, other: &Self) -> bool {
        matches!(
            (self, other),
            (Self::Closed, Self::Closed)
                | (Self::Timeout, Self::Timeout)
                | (Self::Io(_), Self::Io(_))
        ) || matches!((self, other), (Self::Wire(a), Self::Wire(b)) if a == b)
    }
}
impl Eq for ChannelError {}

pub trait InitChannel {
    fn send(&mut self, msg: &InitMessage) -> Result<(), ChannelError>;
    fn recv(&mut self) -> Result<InitMessage, ChannelError>;
}

/// One endpoint of an in-memory duplex channel.
pub struct MemoryChannel {
    tx: Sender<Vec<u8>>,
    rx: Receiver<Vec<u8>>,
    timeout: Duration,
}

impl MemoryChannel {
    pub fn pair() -> (Self, Self) {
        let (tx_a, rx_b) = channel();
        let (tx_b, rx_a) = channel();
        (
            Self { tx: tx_a, rx: rx_a, timeout: DEFAULT_TIMEOUT },
            Self { tx: tx_b, rx: rx_b, timeout: DEFAULT_TIMEOUT },
        )
    }

    pub fn pair_with_timeout(timeout: Duration) -> (Self, Self) {
        let (mut a, mut b) = Self::pair();
        a.timeout = timeout;
        b.timeout = timeout;
        (a, b)
    }
}

impl InitChannel for MemoryChannel {
    fn send(&mut self, msg: &InitMessage) -> Result<(), ChannelError> {
        self.tx.send(msg.encode()).map_err(|_| ChannelError::Closed)
    }

    fn recv(&mut self) -> Result<InitMessage, ChannelError> {
        let bytes = self.rx.recv_timeout(self.timeout).map_err(|e| match e {
            std::sync::mpsc::RecvTimeoutError::Timeout => ChannelError::Timeout,
            std::sync::mpsc::RecvTimeoutError::Disconnected => ChannelError::Closed,
        })?;
        InitMessage::decode(&bytes).map_err(ChannelError::Wire)
    }
}

/// TCP channel framing each message with a two-byte big-endian length.
pub struct TcpChannel {
    stream: TcpStream,
}

impl TcpChannel {
    pub fn new(stream: TcpStream, timeout: Duration) -> Result<Self, ChannelError> {
        stream.set_read_timeout(Some(timeout))?;
        stream.set_write_timeout(Some(timeout))?;
        stream.set_nodelay(true)?;
        Ok(Self { stream })
    }

    fn read_exact(&mut self, buf: &mut [u8]) -> Result<(), ChannelError> {
        match self.stream.read_exact(buf) {
            Ok(()) => Ok(()),
            Err(e) if e.kind() == std::io::ErrorKind::WouldBlock
                || e.kind() == std::io::ErrorKind::TimedOut =>
            {
                Err(ChannelError::Timeout)
            }
            Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => Err(ChannelError::Closed),
            Err(e) => Err(ChannelError::Io(e)),
        }
    }
}

impl InitChannel for TcpChannel {
    fn send(&mut self, msg: &InitMessage) -> Result<(), ChannelError> {
        let bytes = msg.encode();
        let len = u16::try_from(bytes.len()).expect("init messages fit in 64 KiB");
        self.stream.write_all(&len.to_be_bytes())?;
        self.stream.write_all(&bytes)?;
        Ok(())
    }

    fn recv(&mut self) -> Result<InitMessage, ChannelError> {
        let mut len_buf = [0u8; 2];
        self.read_exact(&mut len_buf)?;
        let len = u16::from_be_bytes(len_buf) as usize;
        let mut buf = vec![0u8; len];
        self.read_exact(&mut buf)?;
        InitMessage::decode(&buf).map_err(ChannelError::Wire)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::AuthTag;
    use crate::init::MessageKind;

    #[test]
    fn memory_pair_round_trip() {
        let (mut a, mut b) = MemoryChannel::pair();
        let msg = InitMessage::new(MessageKind::DhMsg1, vec![1, 2, 3], AuthTag::from_bytes([9; 32]));
        a.send(&msg).unwrap();
        assert_eq!(b.recv().unwrap(), msg);
    }

    #[test]
    fn memory_recv_times_out() {
        let (_a, mut b) = MemoryChannel::pair_with_timeout(Duration::from_millis(10));
        assert_eq!(b.recv().unwrap_err(), ChannelError::Timeout);
    }

    #[test]
    fn tcp_round_trip_and_timeout() {
        let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let handle = std::thread::spawn(move || {
            let (stream, _) = listener.accept().unwrap();
            let mut ch = TcpChannel::new(stream, Duration::from_millis(200)).unwrap();
            let msg = ch.recv().unwrap();
            ch.send(&msg).unwrap();
            // Nothing more arrives: the next read must time out.
            assert_eq!(ch.recv().unwrap_err(), ChannelError::Timeout);
        });

        let stream = TcpStream::connect(addr).unwrap();
        let mut ch = TcpChannel::new(stream, Duration::from_secs(1)).unwrap();
        let msg = InitMessage::new(MessageKind::HcMsg2, Vec::new(), AuthTag::from_bytes([3; 32]));
        ch.send(&msg).unwrap();
        assert_eq!(ch.recv().unwrap(), msg);
        handle.join().unwrap();
    }
}
