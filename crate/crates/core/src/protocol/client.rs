// Copyright 2026 The awgsim Authors
// SPDX-License-Identifier: Apache-2.0

//! Host client library.

use std::collections::VecDeque;
use std::io::{self, Read, Write};
use std::net::{TcpStream, ToSocketAddrs};

use thiserror::Error;

use crate::memory::{decode_entry, SampleCode, SequenceEntry, ValidationReport, ENTRY_BYTES};
use crate::SAMPLES_PER_WORD;

use super::frame::{
    serialize_frame, Decoded, Decoder, Frame, Opcode, Status, NAK_OPCODE, RESPONSE_BIT,
};
use super::registers::*;
use super::server::{ingest, lock, SharedBoard};
use super::status::StatusPacket;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("connection closed")]
    Closed,
    #[error("board reported a corrupted request")]
    Nak,
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("{op:?} rejected: {status:?}")]
    Rejected {
        op: Opcode,
        status: Status,
        report: Option<ValidationReport>,
    },
}

/// Byte pipe to a board.
pub trait Transport {
    fn send(&mut self, bytes: &[u8]) -> Result<(), ClientError>;
    /// Next response frame; NAKs for corrupted requests included.
    fn recv(&mut self) -> Result<Frame, ClientError>;
}

/// In-process transport that hands bytes straight to a board.
pub struct Loopback {
    board: SharedBoard,
    decoder: Decoder,
    pending: VecDeque<Frame>,
}

impl Loopback {
    pub fn new(board: SharedBoard) -> Self {
        Loopback {
            board,
            decoder: Decoder::new(),
            pending: VecDeque::new(),
        }
    }

    pub fn board(&self) -> &SharedBoard {
        &self.board
    }
}

impl Transport for Loopback {
    fn send(&mut self, bytes: &[u8]) -> Result<(), ClientError> {
        let mut b = lock(&self.board);
        self.pending
            .extend(ingest(&mut b, &mut self.decoder, bytes));
        Ok(())
    }

    fn recv(&mut self) -> Result<Frame, ClientError> {
        self.pending.pop_front().ok_or(ClientError::Closed)
    }
}

pub struct Tcp {
    stream: TcpStream,
    decoder: Decoder,
    buf: Vec<u8>,
}

impl Tcp {
    pub fn connect(addr: impl ToSocketAddrs) -> Result<Self, ClientError> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        Ok(Tcp {
            stream,
            decoder: Decoder::new(),
            buf: vec![0; 1 << 16],
        })
    }
}

impl Transport for Tcp {
    fn send(&mut self, bytes: &[u8]) -> Result<(), ClientError> {
        self.stream.write_all(bytes)?;
        Ok(())
    }

    fn recv(&mut self) -> Result<Frame, ClientError> {
        loop {
            match self.decoder.next_item() {
                Some(Decoded::Frame(f)) => return Ok(f),
                Some(Decoded::Corrupt { .. }) => {
                    return Err(ClientError::Malformed("response failed crc".into()))
                }
                None => {}
            }
            let n = self.stream.read(&mut self.buf)?;
            if n == 0 {
                return Err(ClientError::Closed);
            }
            self.decoder.push(&self.buf[..n]);
        }
    }
}

/// Typed access to one board.
pub struct Client<T: Transport> {
    transport: T,
}

fn args(a: u32, b: u32) -> Vec<u8> {
    let mut p = a.to_le_bytes().to_vec();
    p.extend(b.to_le_bytes());
    p
}

fn u64_body(f: &Frame) -> Result<u64, ClientError> {
    f.body()
        .try_into()
        .map(u64::from_le_bytes)
        .map_err(|_| ClientError::Malformed("expected u64".into()))
}

fn report_body(f: &Frame) -> Result<ValidationReport, ClientError> {
    ValidationReport::from_bytes(f.body())
        .ok_or_else(|| ClientError::Malformed("bad report".into()))
}

impl<T: Transport> Client<T> {
    pub fn new(transport: T) -> Self {
        Client { transport }
    }

    pub fn transport(&self) -> &T {
        &self.transport
    }

    pub fn into_transport(self) -> T {
        self.transport
    }

    /// Sends raw request bytes without waiting.
    pub fn send_raw(&mut self, bytes: &[u8]) -> Result<(), ClientError> {
        self.transport.send(bytes)
    }

    pub fn recv_raw(&mut self) -> Result<Frame, ClientError> {
        self.transport.recv()
    }

    /// One request, one checked response.
    pub fn request(
        &mut self,
        op: Opcode,
        channel: u8,
        payload: Vec<u8>,
    ) -> Result<Frame, ClientError> {
        self.transport
            .send(&serialize_frame(&Frame::new(op, channel, payload)))?;
        let r = self.transport.recv()?;
        Self::check(op, r)
    }

    /// Sends all requests before reading any response.
    pub fn pipeline(&mut self, frames: &[Frame]) -> Result<Vec<Frame>, ClientError> {
        let mut bytes = Vec::new();
        for f in frames {
            bytes.extend(serialize_frame(f));
        }
        self.transport.send(&bytes)?;
        frames.iter().map(|_| self.transport.recv()).collect()
    }

    fn check(op: Opcode, r: Frame) -> Result<Frame, ClientError> {
        if r.opcode == NAK_OPCODE | RESPONSE_BIT {
            return Err(ClientError::Nak);
        }
        if r.opcode != op.response() {
            return Err(ClientError::Malformed(format!(
                "response opcode {:#04x} to {op:?}",
                r.opcode
            )));
        }
        match r.status() {
            Some(Status::Ok) => Ok(r),
            Some(status) => Err(ClientError::Rejected {
                op,
                status,
                report: ValidationReport::from_bytes(r.body()),
            }),
            None => Err(ClientError::Malformed("missing status".into())),
        }
    }

    /// Writes samples at a word offset, splitting large images into several
    /// frames. Returns the validation report of the last frame.
    pub fn write_wdm(
        &mut self,
        channel: u8,
        word_offset: u32,
        samples: &[SampleCode],
    ) -> Result<ValidationReport, ClientError> {
        const CHUNK: usize = 1 << 18;
        let mut report = None;
        for (k, chunk) in samples.chunks(CHUNK).enumerate() {
            let off = word_offset + (k * CHUNK / SAMPLES_PER_WORD) as u32;
            let mut p = off.to_le_bytes().to_vec();
            p.reserve(chunk.len() * 2);
            for s in chunk {
                p.extend_from_slice(&s.to_le_bytes());
            }
            report = Some(report_body(&self.request(Opcode::WriteWdm, channel, p)?)?);
        }
        report.ok_or_else(|| ClientError::Malformed("empty write".into()))
    }

    pub fn read_wdm(
        &mut self,
        channel: u8,
        word_offset: u32,
        words: u32,
    ) -> Result<Vec<SampleCode>, ClientError> {
        const CHUNK: u32 = 1 << 15;
        let mut out = Vec::with_capacity(words as usize * SAMPLES_PER_WORD);
        let mut done = 0;
        while done < words {
            let n = CHUNK.min(words - done);
            let r = self.request(Opcode::ReadWdm, channel, args(word_offset + done, n))?;
            out.extend(
                r.body()
                    .chunks_exact(2)
                    .map(|b| i16::from_le_bytes([b[0], b[1]])),
            );
            done += n;
        }
        Ok(out)
    }

    pub fn write_sdm(
        &mut self,
        channel: u8,
        start: u32,
        entries: &[SequenceEntry],
    ) -> Result<ValidationReport, ClientError> {
        let mut p = start.to_le_bytes().to_vec();
        for e in entries {
            p.extend_from_slice(&e.to_bytes());
        }
        report_body(&self.request(Opcode::WriteSdm, channel, p)?)
    }

    pub fn read_sdm(
        &mut self,
        channel: u8,
        start: u32,
        count: u32,
    ) -> Result<Vec<SequenceEntry>, ClientError> {
        let r = self.request(Opcode::ReadSdm, channel, args(start, count))?;
        Ok(r.body()
            .chunks_exact(ENTRY_BYTES)
            .map(|b| decode_entry(b.try_into().unwrap()))
            .collect())
    }

    /// Arms a channel; returns the board cycle at which it starts.
    pub fn arm(&mut self, channel: u8) -> Result<u64, ClientError> {
        u64_body(&self.request(Opcode::Arm, channel, vec![])?)
    }

    pub fn stop(&mut self, channel: u8) -> Result<u64, ClientError> {
        u64_body(&self.request(Opcode::Stop, channel, vec![])?)
    }

    /// Software trigger; returns the cycle it is latched for.
    pub fn soft_trigger(&mut self, channel: u8) -> Result<u64, ClientError> {
        u64_body(&self.request(Opcode::SoftTrig, channel, vec![])?)
    }

    pub fn reg_write(&mut self, addr: u32, value: u32) -> Result<(), ClientError> {
        self.request(Opcode::RegWrite, 0, args(addr, value))
            .map(|_| ())
    }

    pub fn reg_read(&mut self, addr: u32, count: u32) -> Result<Vec<u32>, ClientError> {
        let r = self.request(Opcode::RegRead, 0, args(addr, count))?;
        Ok(r.body()
            .chunks_exact(4)
            .map(|b| u32::from_le_bytes(b.try_into().unwrap()))
            .collect())
    }

    pub fn status(&mut self) -> Result<StatusPacket, ClientError> {
        let r = self.request(Opcode::StatusQuery, 0, vec![])?;
        StatusPacket::from_bytes(r.body())
            .ok_or_else(|| ClientError::Malformed("bad status packet".into()))
    }

    pub fn cycle(&mut self) -> Result<u64, ClientError> {
        let r = self.reg_read(CYCLE_LO, 2)?;
        Ok(r[0] as u64 | (r[1] as u64) << 32)
    }

    /// Runs the board for `cycles` cycles.
    pub fn advance(&mut self, mut cycles: u64) -> Result<(), ClientError> {
        while cycles > 0 {
            let n = cycles.min(MAX_ADVANCE as u64);
            self.reg_write(ADVANCE, n as u32)?;
            cycles -= n;
        }
        Ok(())
    }

    /// Configures and arms the capture unit, starting at the current cycle.
    pub fn arm_capture(&mut self, spec: CaptureSpec) -> Result<(), ClientError> {
        self.reg_write(CAP_CHANNEL, spec.channel as u32)?;
        self.reg_write(CAP_MODE, spec.mode)?;
        self.reg_write(CAP_OFFSET, spec.offset)?;
        self.reg_write(CAP_DECIMATION, spec.decimation)?;
        self.reg_write(CAP_LENGTH, spec.length)?;
        self.reg_write(CAP_ARM, 1)
    }

    pub fn capture_count(&mut self) -> Result<u32, ClientError> {
        Ok(self.reg_read(CAP_COUNT, 1)?[0])
    }

    fn read_capture_words(&mut self, words: u32) -> Result<Vec<u32>, ClientError> {
        let mut out = Vec::with_capacity(words as usize);
        let mut done = 0;
        while done < words {
            let n = MAX_REG_READ.min(words - done);
            out.extend(self.reg_read(cap_data(done), n)?);
            done += n;
        }
        Ok(out)
    }

    /// Captured voltages (capture armed in volts mode).
    pub fn read_capture_volts(&mut self, samples: u32) -> Result<Vec<f64>, ClientError> {
        let w = self.read_capture_words(2 * samples)?;
        Ok(w.chunks_exact(2)
            .map(|p| f64::from_bits(p[0] as u64 | (p[1] as u64) << 32))
            .collect())
    }

    /// Captured codes with their valid flags (capture armed in code mode).
    pub fn read_capture_codes(
        &mut self,
        samples: u32,
    ) -> Result<Vec<(SampleCode, bool)>, ClientError> {
        let w = self.read_capture_words(samples)?;
        Ok(w.iter()
            .map(|&v| (v as u16 as i16, v >> 16 & 1 == 1))
            .collect())
    }
}

/// Capture unit settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CaptureSpec {
    pub channel: u8,
    pub mode: u32,
    pub offset: u32,
    pub decimation: u32,
    pub length: u32,
}

impl CaptureSpec {
    pub fn volts(channel: u8, offset: u32, decimation: u32, length: u32) -> Self {
        CaptureSpec {
            channel,
            mode: CAP_MODE_VOLTS,
            offset,
            decimation,
            length,
        }
    }

    pub fn codes(channel: u8, length: u32) -> Self {
        CaptureSpec {
            channel,
            mode: CAP_MODE_CODES,
            offset: 0,
            decimation: 1,
            length,
        }
    }
}
