//! Stream transport for frames. RTU framing relies on silent intervals that
//! do not exist on a byte stream, so every frame travels behind a two-byte
//! big-endian length prefix.

use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::time::Duration;

pub struct FramedTcp {
    stream: TcpStream,
}

impl FramedTcp {
    pub fn connect(addr: impl ToSocketAddrs, timeout: Duration) -> std::io::Result<Self> {
        let addr = addr
            .to_socket_addrs()?
            .next()
            .ok_or_else(|| std::io::Error::new(std::io::ErrorKind::InvalidInput, "no address"))?;
        let stream = TcpStream::connect_timeout(&addr, timeout)?;
        Self::from_stream(stream, timeout)
    }

    pub fn from_stream(stream: TcpStream, timeout: Duration) -> std::io::Result<Self> {
        stream.set_read_timeout(Some(timeout))?;
        stream.set_write_timeout(Some(timeout))?;
        stream.set_nodelay(true)?;
        Ok(Self { stream })
    }

    /// Accept exactly one peer on `listener`.
    pub fn accept_one(listener: &TcpListener, timeout: Duration) -> std::io::Result<Self> {
        let (stream, _) = listener.accept()?;
        Self::from_stream(stream, timeout)
    }

    pub fn send(&mut self, frame: &[u8]) -> std::io::Result<()> {
        let len = u16::try_from(frame.len()).map_err(|_| {
            std::io::Error::new(std::io::ErrorKind::InvalidInput, "frame exceeds 64 KiB")
        })?;
        self.stream.write_all(&len.to_be_bytes())?;
        self.stream.write_all(frame)
    }

    pub fn recv(&mut self) -> std::io::Result<Vec<u8>> {
        let mut len_buf = [0u8; 2];
        self.stream.read_exact(&mut len_buf)?;
        let mut buf = vec![0u8; u16::from_be_bytes(len_buf) as usize];
        self.stream.read_exact(&mut buf)?;
        Ok(buf)
    }
}
