// Copyright 2026 The awgsim Authors
// SPDX-License-Identifier: Apache-2.0

//! Register map. Addresses are byte addresses of 32-bit registers.
//!
//! | addr            | name           | access | meaning                                         |
//! |-----------------|----------------|--------|-------------------------------------------------|
//! | 0x000           | BOARD_ID       | ro     |                                                 |
//! | 0x004           | FW_VERSION     | ro     |                                                 |
//! | 0x008           | D_PIPE         | rw     | output pipeline delay, cycles (default 2)       |
//! | 0x010 + 4*ch    | TRIG_ENABLE    | rw     | bit0 external, bit1 software, bit2 timer        |
//! | 0x020           | TIMER_PERIOD   | rw     | internal timer period, cycles; 0 = off          |
//! | 0x024           | STATUS_PERIOD  | rw     | status packet period, cycles (default 250e6)    |
//! | 0x030           | ADVANCE        | wo*    | run the board for N cycles (N <= 2^24)          |
//! | 0x034 / 0x038   | CYCLE_LO / _HI | ro     | board cycle counter                             |
//! | 0x040           | CAP_CHANNEL    | rw     | channel observed by the capture unit            |
//! | 0x044           | CAP_MODE       | rw     | 0 = volts (f64, two regs), 1 = code, valid<<16  |
//! | 0x048           | CAP_OFFSET     | rw     | first captured sample after CAP_ARM             |
//! | 0x04C           | CAP_DECIMATION | rw     | keep one sample in N (N >= 1)                   |
//! | 0x050           | CAP_LENGTH     | rw     | samples to keep (<= 2^20)                       |
//! | 0x054           | CAP_ARM        | rw     | write 1 to start, 0 to cancel                   |
//! | 0x058           | CAP_COUNT      | ro     | samples captured so far                         |
//! | 0x10000 + 4*i   | CAP_DATA[i]    | ro     | capture buffer                                  |
//!
//! `*` ADVANCE reads back the last value written. Reserved addresses read 0
//! and reject writes.

pub const BOARD_ID: u32 = 0x000;
pub const FW_VERSION: u32 = 0x004;
pub const D_PIPE: u32 = 0x008;
pub const TRIG_ENABLE_BASE: u32 = 0x010;
pub const TIMER_PERIOD: u32 = 0x020;
pub const STATUS_PERIOD: u32 = 0x024;
pub const ADVANCE: u32 = 0x030;
pub const CYCLE_LO: u32 = 0x034;
pub const CYCLE_HI: u32 = 0x038;
pub const CAP_CHANNEL: u32 = 0x040;
pub const CAP_MODE: u32 = 0x044;
pub const CAP_OFFSET: u32 = 0x048;
pub const CAP_DECIMATION: u32 = 0x04C;
pub const CAP_LENGTH: u32 = 0x050;
pub const CAP_ARM: u32 = 0x054;
pub const CAP_COUNT: u32 = 0x058;
pub const CAP_DATA_BASE: u32 = 0x1_0000;

pub const TRIG_EXTERNAL: u32 = 1;
pub const TRIG_SOFTWARE: u32 = 2;
pub const TRIG_TIMER: u32 = 4;
pub const TRIG_ALL: u32 = TRIG_EXTERNAL | TRIG_SOFTWARE | TRIG_TIMER;

pub const CAP_MODE_VOLTS: u32 = 0;
pub const CAP_MODE_CODES: u32 = 1;

pub const MAX_ADVANCE: u32 = 1 << 24;
pub const MAX_CAPTURE_SAMPLES: u32 = 1 << 20;
/// Largest register count in one REG_READ.
pub const MAX_REG_READ: u32 = 1 << 16;

pub const DEFAULT_STATUS_PERIOD: u32 = 250_000_000;
pub const FIRMWARE_VERSION: u32 = 0x0001_0000;

pub fn trig_enable(channel: usize) -> u32 {
    TRIG_ENABLE_BASE + 4 * channel as u32
}

/// Register index of capture word `i`.
pub fn cap_data(i: u32) -> u32 {
    CAP_DATA_BASE + 4 * i
}
