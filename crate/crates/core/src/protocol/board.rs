// Copyright 2026 The awgsim Authors
// SPDX-License-Identifier: Apache-2.0

//! One simulated board as seen from the network: four channels, a shared
//! cycle counter, the register file, a capture unit standing in for the
//! bench instruments, and the command handler.

use crate::frontend::{DacLut, DacTransfer};
use crate::memory::{
    decode_entry, validate_program, SampleCode, SequenceEntry, SequenceMemory, ValidationReport,
    WaveformMemory, ENTRY_BYTES, SDM_CAPACITY,
};
use crate::sequencer::{
    ChannelSequencer, ChannelStatus, CycleInputs, Event, EventLog, SampleWord, SequencerError,
};
use crate::{CHANNELS_PER_BOARD, SAMPLES_PER_WORD};

use super::frame::{Frame, Opcode, Status, MAX_PAYLOAD};
use super::registers::*;
use super::status::{ChannelReport, StatusPacket};

/// Events kept in the board log before further events are counted as
/// dropped.
pub const LOG_CAPACITY: usize = 1 << 20;
const OUTBOX_CAPACITY: usize = 4096;

#[derive(Debug, Clone)]
struct ChannelUnit {
    sdm: SequenceMemory,
    wdm: WaveformMemory,
    seq: ChannelSequencer,
    dac: DacLut,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Registers {
    d_pipe: u32,
    trig_enable: [u32; CHANNELS_PER_BOARD],
    timer_period: u32,
    status_period: u32,
    advance: u32,
    cap_channel: u32,
    cap_mode: u32,
    cap_offset: u32,
    cap_decimation: u32,
    cap_length: u32,
    cap_arm: u32,
}

impl Default for Registers {
    fn default() -> Self {
        Registers {
            d_pipe: 2,
            trig_enable: [TRIG_ALL; CHANNELS_PER_BOARD],
            timer_period: 0,
            status_period: DEFAULT_STATUS_PERIOD,
            advance: 0,
            cap_channel: 0,
            cap_mode: CAP_MODE_VOLTS,
            cap_offset: 0,
            cap_decimation: 1,
            cap_length: 0,
            cap_arm: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
struct Capture {
    armed: bool,
    channel: usize,
    mode: u32,
    offset: u64,
    decimation: u64,
    length: usize,
    start_cycle: u64,
    samples: usize,
    data: Vec<u32>,
}

impl Capture {
    #[inline]
    fn record(&mut self, cycle: u64, word: &SampleWord, dac: &DacLut) {
        let base = (cycle - self.start_cycle) * SAMPLES_PER_WORD as u64;
        for (j, &code) in word.samples.iter().enumerate() {
            let s = base + j as u64;
            if s < self.offset || (s - self.offset) % self.decimation != 0 {
                continue;
            }
            if self.mode == CAP_MODE_VOLTS {
                let bits = dac.convert(code).to_bits();
                self.data.push(bits as u32);
                self.data.push((bits >> 32) as u32);
            } else {
                self.data
                    .push(code as u16 as u32 | (word.valid as u32) << 16);
            }
            self.samples += 1;
            if self.samples == self.length {
                self.armed = false;
                return;
            }
        }
    }
}

/// Everything a command may change, for checking that rejected commands
/// leave no trace.
#[derive(Debug, Clone, PartialEq)]
pub struct BoardSnapshot {
    sdm: Vec<SequenceMemory>,
    wdm: Vec<Vec<SampleCode>>,
    status: Vec<ChannelStatus>,
    cycle: u64,
    regs: Registers,
    soft: [Option<u64>; CHANNELS_PER_BOARD],
}

#[derive(Debug, Clone)]
pub struct Board {
    board_id: u16,
    channels: Vec<ChannelUnit>,
    cycle: u64,
    regs: Registers,
    capture: Capture,
    soft: [Option<u64>; CHANNELS_PER_BOARD],
    external: Vec<u64>,
    ext_pos: usize,
    log: EventLog,
    log_dropped: u64,
    scratch: EventLog,
    outbox: Vec<StatusPacket>,
    faults: Vec<(u8, SequencerError)>,
}

impl Board {
    pub fn new(board_id: u16) -> Self {
        Self::with_wdm_capacity(board_id, crate::memory::WDM_CAPACITY_SAMPLES)
    }

    /// A board with smaller waveform memories, for tests that snapshot the
    /// whole state often.
    pub fn with_wdm_capacity(board_id: u16, samples: usize) -> Self {
        let ideal = DacTransfer::ideal().lut();
        Board {
            board_id,
            channels: (0..CHANNELS_PER_BOARD as u8)
                .map(|ch| ChannelUnit {
                    sdm: SequenceMemory::new(ch),
                    wdm: WaveformMemory::with_capacity(ch, samples),
                    seq: ChannelSequencer::new(ch),
                    dac: ideal.clone(),
                })
                .collect(),
            cycle: 0,
            regs: Registers::default(),
            capture: Capture::default(),
            soft: [None; CHANNELS_PER_BOARD],
            external: Vec::new(),
            ext_pos: 0,
            log: EventLog::new(),
            log_dropped: 0,
            scratch: EventLog::new(),
            outbox: Vec::new(),
            faults: Vec::new(),
        }
    }

    /// Installs a DAC transfer function on one channel.
    pub fn set_dac(&mut self, channel: usize, dac: &DacTransfer) {
        self.channels[channel].dac = dac.lut();
    }

    /// External trigger edges, as absolute board cycles.
    pub fn set_external_triggers(&mut self, mut cycles: Vec<u64>) {
        cycles.sort_unstable();
        cycles.dedup();
        self.ext_pos = cycles.partition_point(|&c| c < self.cycle);
        self.external = cycles;
    }

    pub fn board_id(&self) -> u16 {
        self.board_id
    }

    pub fn cycle(&self) -> u64 {
        self.cycle
    }

    pub fn log(&self) -> &EventLog {
        &self.log
    }

    pub fn take_log(&mut self) -> EventLog {
        std::mem::take(&mut self.log)
    }

    pub fn log_dropped(&self) -> u64 {
        self.log_dropped
    }

    pub fn faults(&self) -> &[(u8, SequencerError)] {
        &self.faults
    }

    pub fn sequencer(&self, channel: usize) -> &ChannelSequencer {
        &self.channels[channel].seq
    }

    pub fn sdm(&self, channel: usize) -> &SequenceMemory {
        &self.channels[channel].sdm
    }

    pub fn wdm(&self, channel: usize) -> &WaveformMemory {
        &self.channels[channel].wdm
    }

    /// Status packets produced by [`Board::advance`] and not yet collected.
    pub fn drain_status(&mut self) -> Vec<StatusPacket> {
        std::mem::take(&mut self.outbox)
    }

    pub fn snapshot(&self) -> BoardSnapshot {
        BoardSnapshot {
            sdm: self.channels.iter().map(|c| c.sdm.clone()).collect(),
            wdm: self
                .channels
                .iter()
                .map(|c| c.wdm.samples().to_vec())
                .collect(),
            status: self.channels.iter().map(|c| c.seq.status()).collect(),
            cycle: self.cycle,
            regs: self.regs.clone(),
            soft: self.soft,
        }
    }

    pub fn status_packet(&self) -> StatusPacket {
        StatusPacket {
            board_id: self.board_id,
            uptime_cycles: self.cycle,
            channels: std::array::from_fn(|i| {
                let s = &self.channels[i].seq;
                ChannelReport {
                    status: s.status(),
                    current_index: s.current_index(),
                    executed_words: s.executed_words(),
                }
            }),
            firmware_version: FIRMWARE_VERSION,
        }
    }

    /// Runs the board for `cycles` word-clock cycles.
    pub fn advance(&mut self, cycles: u64) {
        let end = self.cycle + cycles;
        while self.cycle < end {
            let quiet =
                !self.capture.armed && self.channels.iter().all(|c| !c.seq.status().is_active());
            if quiet {
                let period = self.regs.status_period as u64;
                let boundary = (self.cycle / period + 1) * period;
                let to = end.min(boundary);
                let n = to - self.cycle;
                for c in &mut self.channels {
                    c.seq.skip_idle(n);
                }
                self.cycle = to;
                self.soft = [None; CHANNELS_PER_BOARD];
                self.after_cycle();
            } else {
                self.step_cycle();
            }
        }
    }

    fn step_cycle(&mut self) {
        let c = self.cycle;
        while self.ext_pos < self.external.len() && self.external[self.ext_pos] < c {
            self.ext_pos += 1;
        }
        let ext = self.external.get(self.ext_pos) == Some(&c);
        let timer = self.regs.timer_period != 0 && c % self.regs.timer_period as u64 == 0;
        for ch in 0..CHANNELS_PER_BOARD {
            let en = self.regs.trig_enable[ch];
            let inputs = CycleInputs {
                external_trigger: ext && en & TRIG_EXTERNAL != 0,
                software_trigger: self.soft[ch] == Some(c) && en & TRIG_SOFTWARE != 0,
                timer_fire: timer && en & TRIG_TIMER != 0,
            };
            let unit = &mut self.channels[ch];
            let word = if unit.seq.status().is_active() {
                match unit
                    .seq
                    .step(&unit.sdm, &unit.wdm, inputs, &mut self.scratch)
                {
                    Ok(w) => w,
                    Err(e) => {
                        self.faults.push((ch as u8, e));
                        unit.seq.stop();
                        SampleWord::idle(unit.seq.idle_level())
                    }
                }
            } else {
                unit.seq.skip_idle(1);
                SampleWord::idle(unit.seq.idle_level())
            };
            if self.capture.armed && self.capture.channel == ch {
                self.capture.record(c, &word, &unit.dac);
            }
        }
        if !self.scratch.is_empty() {
            for e in self.scratch.iter() {
                if self.log.len() < LOG_CAPACITY {
                    self.log.push(*e);
                } else {
                    self.log_dropped += 1;
                }
            }
            self.scratch.clear();
        }
        for s in &mut self.soft {
            if s.is_some_and(|t| t <= c) {
                *s = None;
            }
        }
        self.cycle += 1;
        self.after_cycle();
    }

    fn after_cycle(&mut self) {
        if self.cycle % self.regs.status_period as u64 == 0 {
            if self.outbox.len() == OUTBOX_CAPACITY {
                self.outbox.remove(0);
            }
            self.outbox.push(self.status_packet());
        }
    }

    fn busy(&self, ch: usize) -> bool {
        self.channels[ch].seq.status().is_active()
    }

    pub fn read_register(&self, addr: u32) -> u32 {
        let r = &self.regs;
        match addr {
            BOARD_ID => self.board_id as u32,
            FW_VERSION => FIRMWARE_VERSION,
            D_PIPE => r.d_pipe,
            a if (TRIG_ENABLE_BASE..TRIG_ENABLE_BASE + 16).contains(&a) && a % 4 == 0 => {
                r.trig_enable[((a - TRIG_ENABLE_BASE) / 4) as usize]
            }
            TIMER_PERIOD => r.timer_period,
            STATUS_PERIOD => r.status_period,
            ADVANCE => r.advance,
            CYCLE_LO => self.cycle as u32,
            CYCLE_HI => (self.cycle >> 32) as u32,
            CAP_CHANNEL => r.cap_channel,
            CAP_MODE => r.cap_mode,
            CAP_OFFSET => r.cap_offset,
            CAP_DECIMATION => r.cap_decimation,
            CAP_LENGTH => r.cap_length,
            CAP_ARM => r.cap_arm,
            CAP_COUNT => self.capture.samples as u32,
            a if a >= CAP_DATA_BASE && a % 4 == 0 => {
                let i = ((a - CAP_DATA_BASE) / 4) as usize;
                self.capture.data.get(i).copied().unwrap_or(0)
            }
            _ => 0,
        }
    }

    pub fn write_register(&mut self, addr: u32, value: u32) -> Status {
        let r = &mut self.regs;
        match addr {
            D_PIPE => r.d_pipe = value,
            a if (TRIG_ENABLE_BASE..TRIG_ENABLE_BASE + 16).contains(&a) && a % 4 == 0 => {
                if value & !TRIG_ALL != 0 {
                    return Status::BadRequest;
                }
                r.trig_enable[((a - TRIG_ENABLE_BASE) / 4) as usize] = value;
            }
            TIMER_PERIOD => r.timer_period = value,
            STATUS_PERIOD => {
                if value == 0 {
                    return Status::BadRequest;
                }
                r.status_period = value;
            }
            ADVANCE => {
                if value > MAX_ADVANCE {
                    return Status::BadRequest;
                }
                r.advance = value;
                self.advance(value as u64);
            }
            CAP_CHANNEL => {
                if value as usize >= CHANNELS_PER_BOARD {
                    return Status::BadRequest;
                }
                r.cap_channel = value;
            }
            CAP_MODE => {
                if value > CAP_MODE_CODES {
                    return Status::BadRequest;
                }
                r.cap_mode = value;
            }
            CAP_OFFSET => r.cap_offset = value,
            CAP_DECIMATION => {
                if value == 0 {
                    return Status::BadRequest;
                }
                r.cap_decimation = value;
            }
            CAP_LENGTH => {
                if value > MAX_CAPTURE_SAMPLES {
                    return Status::BadRequest;
                }
                r.cap_length = value;
            }
            CAP_ARM => {
                if value > 1 {
                    return Status::BadRequest;
                }
                r.cap_arm = value;
                let words_per = if r.cap_mode == CAP_MODE_VOLTS { 2 } else { 1 };
                self.capture = Capture {
                    armed: value == 1 && r.cap_length > 0,
                    channel: r.cap_channel as usize,
                    mode: r.cap_mode,
                    offset: r.cap_offset as u64,
                    decimation: r.cap_decimation as u64,
                    length: r.cap_length as usize,
                    start_cycle: self.cycle,
                    samples: 0,
                    data: Vec::with_capacity(if value == 1 {
                        r.cap_length as usize * words_per
                    } else {
                        0
                    }),
                };
            }
            _ => return Status::BadRegister,
        }
        Status::Ok
    }

    /// Applies one request and returns its single response. A request that
    /// is answered with anything but `Ok` has not changed the board.
    pub fn handle_command(&mut self, frame: &Frame) -> Frame {
        let reply = |status: Status, body: &[u8]| {
            Frame::response(frame.opcode, frame.channel, status, body)
        };
        let Some(op) = Opcode::from_u8(frame.opcode) else {
            return reply(Status::UnknownOpcode, &[]);
        };
        let p = &frame.payload;
        let ch = frame.channel as usize;
        let per_channel = !matches!(op, Opcode::RegWrite | Opcode::RegRead | Opcode::StatusQuery);
        if per_channel && ch >= CHANNELS_PER_BOARD {
            return reply(Status::BadChannel, &[]);
        }
        match op {
            Opcode::WriteWdm => {
                if p.len() < 4 || (p.len() - 4) % (2 * SAMPLES_PER_WORD) != 0 {
                    return reply(Status::BadRequest, &[]);
                }
                if self.busy(ch) {
                    return reply(Status::BusyRunning, &[]);
                }
                let offset = u32_at(p, 0);
                let samples: Vec<SampleCode> = p[4..]
                    .chunks_exact(2)
                    .map(|b| i16::from_le_bytes([b[0], b[1]]))
                    .collect();
                let unit = &mut self.channels[ch];
                if unit.wdm.load_waveform(offset, &samples).is_err() {
                    return reply(Status::BadRequest, &[]);
                }
                let report = validate_program(&unit.sdm, &unit.wdm);
                reply(Status::Ok, &report.to_bytes())
            }
            Opcode::WriteSdm => {
                if p.len() < 4 || (p.len() - 4) % ENTRY_BYTES != 0 {
                    return reply(Status::BadRequest, &[]);
                }
                if self.busy(ch) {
                    return reply(Status::BusyRunning, &[]);
                }
                let start = u32_at(p, 0) as usize;
                let entries: Vec<SequenceEntry> = p[4..]
                    .chunks_exact(ENTRY_BYTES)
                    .map(|b| decode_entry(b.try_into().unwrap()))
                    .collect();
                let unit = &mut self.channels[ch];
                let mut candidate = unit.sdm.clone();
                if start + entries.len() > SDM_CAPACITY || candidate.write(start, &entries).is_err()
                {
                    return reply(Status::BadRequest, &[]);
                }
                let report = validate_program(&candidate, &unit.wdm);
                if !report.is_ok() {
                    return reply(Status::ValidationFailed, &report.to_bytes());
                }
                unit.sdm = candidate;
                reply(Status::Ok, &report.to_bytes())
            }
            Opcode::ReadWdm => {
                if p.len() != 8 {
                    return reply(Status::BadRequest, &[]);
                }
                let (offset, words) = (u32_at(p, 0), u32_at(p, 4));
                if words as usize * SAMPLES_PER_WORD * 2 > MAX_PAYLOAD - 1 {
                    return reply(Status::BadRequest, &[]);
                }
                match self.channels[ch].wdm.read_words(offset, words) {
                    Ok(s) => {
                        let body: Vec<u8> = s.iter().flat_map(|v| v.to_le_bytes()).collect();
                        reply(Status::Ok, &body)
                    }
                    Err(_) => reply(Status::BadRequest, &[]),
                }
            }
            Opcode::ReadSdm => {
                if p.len() != 8 {
                    return reply(Status::BadRequest, &[]);
                }
                let (start, count) = (u32_at(p, 0) as usize, u32_at(p, 4) as usize);
                let entries = self.channels[ch].sdm.entries();
                match start
                    .checked_add(count)
                    .and_then(|end| entries.get(start..end))
                {
                    Some(slice) => {
                        let body: Vec<u8> = slice.iter().flat_map(|e| e.to_bytes()).collect();
                        reply(Status::Ok, &body)
                    }
                    None => reply(Status::BadRequest, &[]),
                }
            }
            Opcode::Arm => {
                if !p.is_empty() {
                    return reply(Status::BadRequest, &[]);
                }
                if self.busy(ch) {
                    return reply(Status::BusyRunning, &[]);
                }
                let unit = &mut self.channels[ch];
                if unit.sdm.is_empty() {
                    return reply(Status::NoProgram, &[]);
                }
                let report = validate_program(&unit.sdm, &unit.wdm);
                if !report.is_ok() {
                    return reply(Status::ValidationFailed, &report.to_bytes());
                }
                match unit.seq.arm(&unit.sdm) {
                    Ok(()) => reply(Status::Ok, &self.cycle.to_le_bytes()),
                    Err(_) => reply(Status::NoProgram, &[]),
                }
            }
            Opcode::Stop => {
                if !p.is_empty() {
                    return reply(Status::BadRequest, &[]);
                }
                self.channels[ch].seq.stop();
                self.soft[ch] = None;
                reply(Status::Ok, &self.cycle.to_le_bytes())
            }
            Opcode::SoftTrig => {
                if !p.is_empty() {
                    return reply(Status::BadRequest, &[]);
                }
                self.soft[ch] = Some(self.cycle);
                reply(Status::Ok, &self.cycle.to_le_bytes())
            }
            Opcode::RegWrite => {
                if p.len() != 8 {
                    return reply(Status::BadRequest, &[]);
                }
                let status = self.write_register(u32_at(p, 0), u32_at(p, 4));
                reply(status, &[])
            }
            Opcode::RegRead => {
                if p.len() != 8 {
                    return reply(Status::BadRequest, &[]);
                }
                let (addr, count) = (u32_at(p, 0), u32_at(p, 4));
                if addr % 4 != 0 {
                    return reply(Status::BadRegister, &[]);
                }
                if count == 0 || count > MAX_REG_READ || addr.checked_add(4 * count).is_none() {
                    return reply(Status::BadRequest, &[]);
                }
                let body: Vec<u8> = (0..count)
                    .flat_map(|i| self.read_register(addr + 4 * i).to_le_bytes())
                    .collect();
                reply(Status::Ok, &body)
            }
            Opcode::StatusQuery => {
                if !p.is_empty() {
                    return reply(Status::BadRequest, &[]);
                }
                reply(Status::Ok, &self.status_packet().to_bytes())
            }
        }
    }

    /// Events logged by the channel sequencers, for tests.
    pub fn events(&self) -> impl Iterator<Item = &Event> {
        self.log.iter()
    }
}

fn u32_at(p: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(p[at..at + 4].try_into().unwrap())
}

/// Parses the body of a validation report carried in a response.
pub fn report_from_body(body: &[u8]) -> Option<ValidationReport> {
    ValidationReport::from_bytes(body)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::memory::{EntryFlags, TriggerSource};
    use crate::sequencer::EventKind;
    use crate::Rule;

    fn sdm_payload(start: u32, entries: &[SequenceEntry]) -> Vec<u8> {
        let mut p = start.to_le_bytes().to_vec();
        for e in entries {
            p.extend(e.to_bytes());
        }
        p
    }

    fn wdm_payload(offset: u32, samples: &[i16]) -> Vec<u8> {
        let mut p = offset.to_le_bytes().to_vec();
        p.extend(samples.iter().flat_map(|s| s.to_le_bytes()));
        p
    }

    fn reg_write(b: &mut Board, addr: u32, v: u32) -> Status {
        let mut p = addr.to_le_bytes().to_vec();
        p.extend(v.to_le_bytes());
        b.handle_command(&Frame::new(Opcode::RegWrite, 0, p))
            .status()
            .unwrap()
    }

    #[test]
    fn wdm_write_then_read_is_identical() {
        let mut b = Board::new(0);
        let samples: Vec<i16> = (0..64).map(|i| (i * 997 - 20000) as i16).collect();
        let r = b.handle_command(&Frame::new(Opcode::WriteWdm, 1, wdm_payload(3, &samples)));
        assert_eq!(r.status(), Some(Status::Ok));
        assert_eq!(r.opcode, 0x81);
        let mut q = 3u32.to_le_bytes().to_vec();
        q.extend(8u32.to_le_bytes());
        let r = b.handle_command(&Frame::new(Opcode::ReadWdm, 1, q));
        assert_eq!(r.body(), &wdm_payload(0, &samples)[4..]);
    }

    #[test]
    fn short_sdm_entry_is_rejected_with_min_length() {
        let mut b = Board::new(0);
        let r = b.handle_command(&Frame::new(
            Opcode::WriteSdm,
            0,
            sdm_payload(0, &[SequenceEntry::segment(0, 3).end()]),
        ));
        assert_eq!(r.status(), Some(Status::ValidationFailed));
        let report = report_from_body(r.body()).unwrap();
        assert!(report.has(Rule::MinLength));
        assert!(b.sdm(0).is_empty());
    }

    #[test]
    fn arm_then_soft_trigger_is_seen_at_stamped_cycle() {
        let mut b = Board::new(0);
        let prog = [SequenceEntry::segment(0, 4)
            .wait_for(TriggerSource::Software)
            .end()];
        b.handle_command(&Frame::new(Opcode::WriteSdm, 2, sdm_payload(0, &prog)));
        assert_eq!(reg_write(&mut b, ADVANCE, 37), Status::Ok);
        let r = b.handle_command(&Frame::new(Opcode::Arm, 2, vec![]));
        assert_eq!(r.status(), Some(Status::Ok));
        assert_eq!(u64::from_le_bytes(r.body().try_into().unwrap()), 37);
        reg_write(&mut b, ADVANCE, 5);
        let r = b.handle_command(&Frame::new(Opcode::SoftTrig, 2, vec![]));
        let stamp = u64::from_le_bytes(r.body().try_into().unwrap());
        assert_eq!(stamp, 42);
        reg_write(&mut b, ADVANCE, 20);
        let seen: Vec<_> = b.log().of_kind(EventKind::TriggerSeen).collect();
        assert_eq!(seen.len(), 1);
        assert_eq!((seen[0].cycle, seen[0].channel), (stamp, 2));
        let done = b.log().of_kind(EventKind::Done).next().unwrap();
        assert_eq!(done.cycle, stamp + 2 + 4);
    }

    #[test]
    fn writes_rejected_while_running() {
        let mut b = Board::new(0);
        let prog = [SequenceEntry::segment(0, 4).with_counter(0)];
        b.handle_command(&Frame::new(Opcode::WriteSdm, 0, sdm_payload(0, &prog)));
        b.handle_command(&Frame::new(Opcode::Arm, 0, vec![]));
        let before = b.snapshot();
        let r = b.handle_command(&Frame::new(Opcode::WriteWdm, 0, wdm_payload(0, &[1; 8])));
        assert_eq!(r.status(), Some(Status::BusyRunning));
        let r = b.handle_command(&Frame::new(Opcode::WriteSdm, 0, sdm_payload(0, &prog)));
        assert_eq!(r.status(), Some(Status::BusyRunning));
        assert_eq!(b.snapshot(), before);
        // other channels are unaffected
        let r = b.handle_command(&Frame::new(Opcode::WriteWdm, 1, wdm_payload(0, &[1; 8])));
        assert_eq!(r.status(), Some(Status::Ok));
        b.handle_command(&Frame::new(Opcode::Stop, 0, vec![]));
        let r = b.handle_command(&Frame::new(Opcode::WriteWdm, 0, wdm_payload(0, &[1; 8])));
        assert_eq!(r.status(), Some(Status::Ok));
    }

    #[test]
    fn executed_words_in_status() {
        let mut b = Board::new(3);
        let idle = b.status_packet();
        assert!(idle
            .channels
            .iter()
            .all(|c| c.status == ChannelStatus::Idle && c.executed_words == 0));
        let prog = [
            SequenceEntry::segment(0, 4),
            SequenceEntry::segment(4, 8).end(),
        ];
        b.handle_command(&Frame::new(Opcode::WriteSdm, 1, sdm_payload(0, &prog)));
        b.handle_command(&Frame::new(Opcode::Arm, 1, vec![]));
        reg_write(&mut b, ADVANCE, 100);
        let r = b.handle_command(&Frame::new(Opcode::StatusQuery, 0, vec![]));
        let pkt = StatusPacket::from_bytes(r.body()).unwrap();
        assert_eq!(pkt.channels[1].executed_words, 12);
        assert_eq!(pkt.channels[1].status, ChannelStatus::Done);
        assert_eq!(pkt.uptime_cycles, 100);
    }

    #[test]
    fn periodic_status_packets() {
        let mut b = Board::new(0);
        assert_eq!(reg_write(&mut b, STATUS_PERIOD, 10), Status::Ok);
        reg_write(&mut b, ADVANCE, 35);
        let pk = b.drain_status();
        let up: Vec<u64> = pk.iter().map(|p| p.uptime_cycles).collect();
        assert_eq!(up, vec![10, 20, 30]);
        assert_eq!(reg_write(&mut b, STATUS_PERIOD, 0), Status::BadRequest);
    }

    #[test]
    fn register_rules() {
        let mut b = Board::new(9);
        assert_eq!(b.read_register(BOARD_ID), 9);
        assert_eq!(reg_write(&mut b, BOARD_ID, 1), Status::BadRegister);
        assert_eq!(reg_write(&mut b, 0x0FC, 1), Status::BadRegister);
        assert_eq!(b.read_register(0x0FC), 0);
        assert_eq!(reg_write(&mut b, D_PIPE, 7), Status::Ok);
        assert_eq!(b.read_register(D_PIPE), 7);
        assert_eq!(
            reg_write(&mut b, ADVANCE, MAX_ADVANCE + 1),
            Status::BadRequest
        );
        assert_eq!(b.cycle(), 0);
    }

    #[test]
    fn capture_codes_and_volts() {
        let mut b = Board::new(0);
        let samples: Vec<i16> = (0..32).map(|i| i as i16 * 100).collect();
        b.handle_command(&Frame::new(Opcode::WriteWdm, 0, wdm_payload(0, &samples)));
        let prog = [SequenceEntry::segment(0, 4)
            .with_flags(EntryFlags::HOLD_LAST)
            .end()];
        b.handle_command(&Frame::new(Opcode::WriteSdm, 0, sdm_payload(0, &prog)));
        reg_write(&mut b, CAP_MODE, CAP_MODE_CODES);
        reg_write(&mut b, CAP_OFFSET, 3);
        reg_write(&mut b, CAP_DECIMATION, 5);
        reg_write(&mut b, CAP_LENGTH, 8);
        reg_write(&mut b, CAP_ARM, 1);
        b.handle_command(&Frame::new(Opcode::Arm, 0, vec![]));
        reg_write(&mut b, ADVANCE, 10);
        assert_eq!(b.read_register(CAP_COUNT), 8);
        let got: Vec<u32> = (0..8).map(|i| b.read_register(cap_data(i))).collect();
        let want: Vec<u32> = (0..8)
            .map(|i| {
                let s = 3 + 5 * i;
                if s < 32 {
                    (s as i16 * 100) as u16 as u32 | 1 << 16
                } else {
                    31 * 100
                }
            })
            .collect();
        assert_eq!(got, want);
        reg_write(&mut b, CAP_MODE, CAP_MODE_VOLTS);
        reg_write(&mut b, CAP_OFFSET, 0);
        reg_write(&mut b, CAP_DECIMATION, 1);
        reg_write(&mut b, CAP_LENGTH, 1);
        reg_write(&mut b, CAP_ARM, 1);
        reg_write(&mut b, ADVANCE, 1);
        let bits =
            b.read_register(cap_data(0)) as u64 | (b.read_register(cap_data(1)) as u64) << 32;
        assert_eq!(f64::from_bits(bits), DacTransfer::ideal().convert(3100));
    }

    #[test]
    fn unknown_opcode_and_bad_channel() {
        let mut b = Board::new(0);
        let r = b.handle_command(&Frame {
            opcode: 0x3C,
            channel: 0,
            payload: vec![],
        });
        assert_eq!((r.opcode, r.status()), (0xBC, Some(Status::UnknownOpcode)));
        let r = b.handle_command(&Frame::new(Opcode::Arm, 4, vec![]));
        assert_eq!(r.status(), Some(Status::BadChannel));
        let r = b.handle_command(&Frame::new(Opcode::Arm, 0, vec![]));
        assert_eq!(r.status(), Some(Status::NoProgram));
    }
}
