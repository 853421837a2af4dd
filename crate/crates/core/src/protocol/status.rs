// Copyright 2026 The awgsim Authors
// SPDX-License-Identifier: Apache-2.0

//! Periodic status packet.
//!
//! ```text
//! "AWGS" board_id:u16 uptime:u64 {status:u8 current_index:u16 executed_words:u64} x4 firmware:u32
//! ```
//!
//! All integers little-endian; 62 bytes total.

use crate::sequencer::ChannelStatus;
use crate::CHANNELS_PER_BOARD;

pub const STATUS_MAGIC: [u8; 4] = *b"AWGS";
pub const STATUS_PACKET_BYTES: usize = 4 + 2 + 8 + CHANNELS_PER_BOARD * 11 + 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChannelReport {
    pub status: ChannelStatus,
    pub current_index: u16,
    pub executed_words: u64,
}

impl Default for ChannelReport {
    fn default() -> Self {
        ChannelReport {
            status: ChannelStatus::Idle,
            current_index: 0,
            executed_words: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StatusPacket {
    pub board_id: u16,
    pub uptime_cycles: u64,
    pub channels: [ChannelReport; CHANNELS_PER_BOARD],
    pub firmware_version: u32,
}

impl StatusPacket {
    pub fn to_bytes(&self) -> [u8; STATUS_PACKET_BYTES] {
        let mut b = [0u8; STATUS_PACKET_BYTES];
        b[..4].copy_from_slice(&STATUS_MAGIC);
        b[4..6].copy_from_slice(&self.board_id.to_le_bytes());
        b[6..14].copy_from_slice(&self.uptime_cycles.to_le_bytes());
        for (i, ch) in self.channels.iter().enumerate() {
            let o = 14 + 11 * i;
            b[o] = ch.status as u8;
            b[o + 1..o + 3].copy_from_slice(&ch.current_index.to_le_bytes());
            b[o + 3..o + 11].copy_from_slice(&ch.executed_words.to_le_bytes());
        }
        b[STATUS_PACKET_BYTES - 4..].copy_from_slice(&self.firmware_version.to_le_bytes());
        b
    }

    pub fn from_bytes(b: &[u8]) -> Option<Self> {
        if b.len() != STATUS_PACKET_BYTES || b[..4] != STATUS_MAGIC {
            return None;
        }
        let mut channels = [ChannelReport::default(); CHANNELS_PER_BOARD];
        for (i, ch) in channels.iter_mut().enumerate() {
            let o = 14 + 11 * i;
            *ch = ChannelReport {
                status: ChannelStatus::from_wire(b[o])?,
                current_index: u16::from_le_bytes([b[o + 1], b[o + 2]]),
                executed_words: u64::from_le_bytes(b[o + 3..o + 11].try_into().unwrap()),
            };
        }
        Some(StatusPacket {
            board_id: u16::from_le_bytes([b[4], b[5]]),
            uptime_cycles: u64::from_le_bytes(b[6..14].try_into().unwrap()),
            channels,
            firmware_version: u32::from_le_bytes(b[STATUS_PACKET_BYTES - 4..].try_into().unwrap()),
        })
    }
}
