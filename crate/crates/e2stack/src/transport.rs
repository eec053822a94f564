//! Blocking framed transport over TCP, standing in for SCTP.
//!
//! One frame is `u32 length (big-endian, type byte included)` + `type` +
//! `payload`. Reads are frame-at-a-time; writes lock the stream so whole
//! frames never interleave.

use std::io::{self, Read, Write};
use std::net::TcpStream;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use crate::e2ap::MAX_FRAME_PAYLOAD;

/// A raw frame off the wire: type byte plus payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawFrame {
    pub type_code: u8,
    pub payload: Vec<u8>,
}

/// Read half of a framed connection.
pub struct FrameReader {
    stream: TcpStream,
}

impl FrameReader {
    pub fn new(stream: TcpStream) -> Self {
        Self { stream }
    }

    pub fn set_read_timeout(&self, timeout: Option<Duration>) -> io::Result<()> {
        self.stream.set_read_timeout(timeout)
    }

    /// Reads exactly one frame. `Ok(None)` on clean EOF at a frame
    /// boundary; `WouldBlock`/`TimedOut` errors surface as such so pollers
    /// can check stop flags.
    pub fn recv(&mut self) -> io::Result<Option<RawFrame>> {
        let mut len_buf = [0u8; 4];
        match self.stream.read(&mut len_buf) {
            Ok(0) => return Ok(None),
            Ok(n) => self.read_exact_from(&mut len_buf, n)?,
            Err(e) => return Err(e),
        }
        let len = u32::from_be_bytes(len_buf) as usize;
        if len == 0 || len > MAX_FRAME_PAYLOAD {
            return Err(io::Error::new(
                io::ErrorKind::InvalidData,
                format!("bad frame length {len}"),
            ));
        }
        let mut body = vec![0u8; len];
        self.read_exact_all(&mut body)?;
        Ok(Some(RawFrame {
            type_code: body[0],
            payload: body[1..].to_vec(),
        }))
    }

    /// Finishes a partially read buffer, retrying through timeouts: once a
    /// frame has started we must not tear it.
    fn read_exact_from(&mut self, buf: &mut [u8], already: usize) -> io::Result<()> {
        if already < buf.len() {
            let rest = &mut buf[already..];
            self.read_exact_all(rest)?;
        }
        Ok(())
    }

    fn read_exact_all(&mut self, buf: &mut [u8]) -> io::Result<()> {
        let mut done = 0;
        while done < buf.len() {
            match self.stream.read(&mut buf[done..]) {
                Ok(0) => {
                    return Err(io::Error::new(
                        io::ErrorKind::UnexpectedEof,
                        "connection closed mid-frame",
                    ))
                }
                Ok(n) => done += n,
                Err(e)
                    if e.kind() == io::ErrorKind::WouldBlock
                        || e.kind() == io::ErrorKind::TimedOut =>
                {
                    continue
                }
                Err(e) => return Err(e),
            }
        }
        Ok(())
    }
}

/// Shared write half; clones can be handed to any thread.
#[derive(Clone)]
pub struct FrameWriter {
    stream: Arc<Mutex<TcpStream>>,
}

impl FrameWriter {
    pub fn new(stream: TcpStream) -> Self {
        Self {
            stream: Arc::new(Mutex::new(stream)),
        }
    }

    /// Writes one pre-framed message atomically with respect to other
    /// writers of this handle.
    pub fn send(&self, frame_octets: &[u8]) -> io::Result<()> {
        let mut stream = self.stream.lock().unwrap();
        stream.write_all(frame_octets)?;
        stream.flush()
    }

    pub fn shutdown(&self) {
        if let Ok(stream) = self.stream.lock() {
            let _ = stream.shutdown(std::net::Shutdown::Both);
        }
    }
}

/// Splits a connected stream into reader and writer halves.
pub fn split(stream: TcpStream) -> io::Result<(FrameReader, FrameWriter)> {
    let write_half = stream.try_clone()?;
    Ok((FrameReader::new(stream), FrameWriter::new(write_half)))
}
