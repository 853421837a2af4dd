// Copyright 2026 The awgsim Authors
// SPDX-License-Identifier: Apache-2.0

//! Command framing.
//!
//! ```text
//! +--------+--------+---------+-------------+---------+--------+
//! | "AWG1" | opcode | channel | payload_len | payload | crc32  |
//! | 4      | 1      | 1       | u32 LE      | n       | u32 LE |
//! +--------+--------+---------+-------------+---------+--------+
//! ```
//!
//! The CRC (IEEE) covers every byte before it. Responses reuse the frame with
//! the request opcode OR'd with [`RESPONSE_BIT`] and a status byte leading the
//! payload.

use thiserror::Error;

pub const MAGIC: [u8; 4] = *b"AWG1";
pub const HEADER_BYTES: usize = 10;
pub const CRC_BYTES: usize = 4;
/// Bytes in a frame with an empty payload.
pub const MIN_FRAME_BYTES: usize = HEADER_BYTES + CRC_BYTES;
/// Largest accepted payload. A full channel image (2^18 samples) plus its
/// offset fits.
pub const MAX_PAYLOAD: usize = (1 << 20) + 64;
pub const RESPONSE_BIT: u8 = 0x80;
/// Opcode of the negative acknowledgement sent for a frame that failed its
/// CRC.
pub const NAK_OPCODE: u8 = 0xFF;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Opcode {
    WriteWdm = 0x01,
    WriteSdm = 0x02,
    ReadWdm = 0x03,
    ReadSdm = 0x04,
    Arm = 0x05,
    Stop = 0x06,
    SoftTrig = 0x07,
    RegWrite = 0x08,
    RegRead = 0x09,
    StatusQuery = 0x0A,
}

impl Opcode {
    pub const ALL: [Opcode; 10] = [
        Opcode::WriteWdm,
        Opcode::WriteSdm,
        Opcode::ReadWdm,
        Opcode::ReadSdm,
        Opcode::Arm,
        Opcode::Stop,
        Opcode::SoftTrig,
        Opcode::RegWrite,
        Opcode::RegRead,
        Opcode::StatusQuery,
    ];

    pub fn from_u8(b: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|o| *o as u8 == b)
    }

    pub fn response(self) -> u8 {
        self as u8 | RESPONSE_BIT
    }
}

/// Status byte leading every response payload.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Status {
    Ok = 0,
    ValidationFailed = 1,
    BadChannel = 2,
    BusyRunning = 3,
    NoProgram = 4,
    BadRequest = 5,
    UnknownOpcode = 6,
    BadRegister = 7,
    BadCrc = 8,
}

impl Status {
    pub fn from_u8(b: u8) -> Option<Self> {
        use Status::*;
        [
            Ok,
            ValidationFailed,
            BadChannel,
            BusyRunning,
            NoProgram,
            BadRequest,
            UnknownOpcode,
            BadRegister,
            BadCrc,
        ]
        .into_iter()
        .find(|s| *s as u8 == b)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub opcode: u8,
    pub channel: u8,
    pub payload: Vec<u8>,
}

impl Frame {
    pub fn new(opcode: Opcode, channel: u8, payload: Vec<u8>) -> Self {
        Frame {
            opcode: opcode as u8,
            channel,
            payload,
        }
    }

    /// Response to `request_opcode` carrying `status` and `body`.
    pub fn response(request_opcode: u8, channel: u8, status: Status, body: &[u8]) -> Self {
        let mut payload = Vec::with_capacity(1 + body.len());
        payload.push(status as u8);
        payload.extend_from_slice(body);
        Frame {
            opcode: request_opcode | RESPONSE_BIT,
            channel,
            payload,
        }
    }

    pub fn nak() -> Self {
        Frame::response(NAK_OPCODE, 0, Status::BadCrc, &[])
    }

    pub fn is_response(&self) -> bool {
        self.opcode & RESPONSE_BIT != 0
    }

    /// Status byte of a response.
    pub fn status(&self) -> Option<Status> {
        self.payload.first().and_then(|&b| Status::from_u8(b))
    }

    /// Response payload after the status byte.
    pub fn body(&self) -> &[u8] {
        self.payload.get(1..).unwrap_or(&[])
    }

    pub fn encoded_len(&self) -> usize {
        MIN_FRAME_BYTES + self.payload.len()
    }
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum ParseError {
    /// The bytes do not start a frame (wrong magic or impossible length).
    #[error("bad magic")]
    BadMagic,
    /// A complete frame of `frame_len` bytes whose checksum does not match.
    #[error("bad crc over {frame_len}-byte frame")]
    BadCrc { frame_len: usize },
    /// At least `needed` bytes are required before the frame can be decided.
    #[error("truncated: need {needed} bytes")]
    Truncated { needed: usize },
}

pub fn serialize_frame(frame: &Frame) -> Vec<u8> {
    let mut out = Vec::with_capacity(frame.encoded_len());
    write_frame(frame, &mut out);
    out
}

/// Appends the encoding of `frame` to `out`.
pub fn write_frame(frame: &Frame, out: &mut Vec<u8>) {
    let start = out.len();
    out.extend_from_slice(&MAGIC);
    out.push(frame.opcode);
    out.push(frame.channel);
    out.extend_from_slice(&(frame.payload.len() as u32).to_le_bytes());
    out.extend_from_slice(&frame.payload);
    let crc = crc32fast::hash(&out[start..]);
    out.extend_from_slice(&crc.to_le_bytes());
}

/// Parses one frame from the front of `bytes`, returning it with the number
/// of bytes it occupied. Never reads past that boundary.
pub fn parse_frame(bytes: &[u8]) -> Result<(Frame, usize), ParseError> {
    let m = bytes.len().min(MAGIC.len());
    if bytes[..m] != MAGIC[..m] {
        return Err(ParseError::BadMagic);
    }
    if bytes.len() < HEADER_BYTES {
        return Err(ParseError::Truncated {
            needed: MIN_FRAME_BYTES,
        });
    }
    let payload_len = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
    if payload_len > MAX_PAYLOAD {
        return Err(ParseError::BadMagic);
    }
    let frame_len = MIN_FRAME_BYTES + payload_len;
    if bytes.len() < frame_len {
        return Err(ParseError::Truncated { needed: frame_len });
    }
    let body_end = HEADER_BYTES + payload_len;
    let crc = u32::from_le_bytes(bytes[body_end..frame_len].try_into().unwrap());
    if crc32fast::hash(&bytes[..body_end]) != crc {
        return Err(ParseError::BadCrc { frame_len });
    }
    Ok((
        Frame {
            opcode: bytes[4],
            channel: bytes[5],
            payload: bytes[HEADER_BYTES..body_end].to_vec(),
        },
        frame_len,
    ))
}

/// What a [`Decoder`] pulled off the stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decoded {
    Frame(Frame),
    /// A whole frame was dropped for a CRC mismatch.
    Corrupt {
        frame_len: usize,
    },
}

/// Incremental stream decoder with resynchronisation.
///
/// Garbage is skipped up to the next occurrence of the magic; a frame with a
/// bad CRC is dropped whole and reported once.
#[derive(Debug, Default)]
pub struct Decoder {
    buf: Vec<u8>,
    pos: usize,
    skipped: u64,
}

impl Decoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, bytes: &[u8]) {
        if self.pos > 0 && self.pos == self.buf.len() {
            self.buf.clear();
            self.pos = 0;
        } else if self.pos > (1 << 16) && self.pos * 2 > self.buf.len() {
            self.buf.drain(..self.pos);
            self.pos = 0;
        }
        self.buf.extend_from_slice(bytes);
    }

    /// Bytes discarded while hunting for a frame start.
    pub fn skipped_bytes(&self) -> u64 {
        self.skipped
    }

    pub fn buffered(&self) -> usize {
        self.buf.len() - self.pos
    }

    /// Bytes still needed before the buffered frame can be decided.
    pub fn needed(&self) -> usize {
        match parse_frame(&self.buf[self.pos..]) {
            Err(ParseError::Truncated { needed }) => needed - self.buffered(),
            _ => 0,
        }
    }

    pub fn next_item(&mut self) -> Option<Decoded> {
        loop {
            let rest = &self.buf[self.pos..];
            if rest.is_empty() {
                return None;
            }
            match parse_frame(rest) {
                Ok((frame, n)) => {
                    self.pos += n;
                    return Some(Decoded::Frame(frame));
                }
                Err(ParseError::BadCrc { frame_len }) => {
                    // the length field is as suspect as the rest, so frames
                    // inside the claimed span are still looked for
                    self.pos += find_magic(&rest[1..]).map_or(rest.len(), |i| i + 1);
                    return Some(Decoded::Corrupt { frame_len });
                }
                Err(ParseError::Truncated { .. }) => return None,
                Err(ParseError::BadMagic) => {
                    let skip = find_magic(&rest[1..]).map_or(rest.len(), |i| i + 1);
                    self.pos += skip;
                    self.skipped += skip as u64;
                }
            }
        }
    }
}

/// Offset of the first full magic, or of a trailing partial magic.
fn find_magic(bytes: &[u8]) -> Option<usize> {
    (0..bytes.len()).find(|&i| {
        let tail = &bytes[i..];
        let m = tail.len().min(MAGIC.len());
        tail[..m] == MAGIC[..m]
    })
}
