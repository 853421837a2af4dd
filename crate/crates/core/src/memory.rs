// Copyright 2026 The awgsim Authors
// SPDX-License-Identifier: Apache-2.0

//! Waveform and sequence memories.
//!
//! The WDM is word addressed: one word is the 8 samples the DAC consumes in
//! one 250 MHz cycle. SDM entries are 128-bit little-endian instructions:
//!
//! ```text
//! bytes  0..4   start_addr      u32, words
//! bytes  4..8   length          u32, words
//! bytes  8..12  counter         u32, 0 = repeat forever
//! byte   12     flags           bit0 WAIT_TRIGGER, bit1 END_OF_SEQUENCE,
//!                               bit2 JUMP, bit3 HOLD_LAST
//! byte   13     trigger_source  0 NONE, 1 EXTERNAL, 2 SOFTWARE, 3 INTERNAL_TIMER
//! bytes 14..16  jump_target     u16
//! ```

use std::collections::HashSet;
use std::fmt;

use bitflags::bitflags;
use thiserror::Error;

use crate::SAMPLES_PER_WORD;

/// Two's complement DAC code; 0 is midscale (0 V).
pub type SampleCode = i16;

pub const WDM_CAPACITY_SAMPLES: usize = 1 << 18;
pub const WDM_CAPACITY_WORDS: u32 = (WDM_CAPACITY_SAMPLES / SAMPLES_PER_WORD) as u32;
pub const SDM_CAPACITY: usize = 4096;
/// Shortest playable segment, in words. The sequencer needs this many cycles
/// to have the following instruction's resources in place.
pub const MIN_SEGMENT_WORDS: u32 = 4;
pub const ENTRY_BYTES: usize = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MemoryError {
    #[error("entry violates {rule}: {detail}")]
    InvariantViolation { rule: Rule, detail: String },
    #[error(
        "access of {len} samples at word {word_offset} exceeds capacity of {capacity} samples"
    )]
    OutOfRange {
        word_offset: u64,
        len: usize,
        capacity: usize,
    },
    #[error("sample block length {0} is not a multiple of 8")]
    MisalignedLength(usize),
    #[error("sequence memory holds at most {SDM_CAPACITY} entries, got {0}")]
    SdmOverflow(usize),
}

bitflags! {
    #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
    pub struct EntryFlags: u8 {
        const WAIT_TRIGGER = 1 << 0;
        const END_OF_SEQUENCE = 1 << 1;
        const JUMP = 1 << 2;
        const HOLD_LAST = 1 << 3;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[repr(u8)]
pub enum TriggerSource {
    #[default]
    None = 0,
    External = 1,
    Software = 2,
    InternalTimer = 3,
}

impl TriggerSource {
    /// Only the low two bits of the wire byte are significant.
    pub fn from_wire(byte: u8) -> Self {
        match byte & 0b11 {
            0 => TriggerSource::None,
            1 => TriggerSource::External,
            2 => TriggerSource::Software,
            _ => TriggerSource::InternalTimer,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct SequenceEntry {
    pub flags: EntryFlags,
    /// First WDM word of the segment.
    pub start_addr: u32,
    /// Segment length in words.
    pub length: u32,
    pub trigger_source: TriggerSource,
    /// Number of times the segment plays; 0 repeats forever.
    pub counter: u32,
    pub jump_target: u16,
}

impl SequenceEntry {
    /// A plain segment played once.
    pub fn segment(start_addr: u32, length: u32) -> Self {
        SequenceEntry {
            start_addr,
            length,
            counter: 1,
            ..Default::default()
        }
    }

    pub fn with_flags(mut self, flags: EntryFlags) -> Self {
        self.flags |= flags;
        self
    }

    pub fn with_counter(mut self, counter: u32) -> Self {
        self.counter = counter;
        self
    }

    pub fn wait_for(mut self, source: TriggerSource) -> Self {
        self.flags |= EntryFlags::WAIT_TRIGGER;
        self.trigger_source = source;
        self
    }

    pub fn jump_to(mut self, target: u16) -> Self {
        self.flags |= EntryFlags::JUMP;
        self.jump_target = target;
        self
    }

    pub fn end(self) -> Self {
        self.with_flags(EntryFlags::END_OF_SEQUENCE)
    }

    /// Raw encoding; performs no validation.
    pub fn to_bytes(&self) -> [u8; ENTRY_BYTES] {
        let mut out = [0u8; ENTRY_BYTES];
        out[0..4].copy_from_slice(&self.start_addr.to_le_bytes());
        out[4..8].copy_from_slice(&self.length.to_le_bytes());
        out[8..12].copy_from_slice(&self.counter.to_le_bytes());
        out[12] = self.flags.bits();
        out[13] = self.trigger_source as u8;
        out[14..16].copy_from_slice(&self.jump_target.to_le_bytes());
        out
    }

    /// Structural decode. Unknown flag bits and the unused high bits of the
    /// trigger byte are dropped.
    pub fn from_bytes(word: &[u8; ENTRY_BYTES]) -> Self {
        let u32_at =
            |i: usize| u32::from_le_bytes([word[i], word[i + 1], word[i + 2], word[i + 3]]);
        SequenceEntry {
            start_addr: u32_at(0),
            length: u32_at(4),
            counter: u32_at(8),
            flags: EntryFlags::from_bits_truncate(word[12]),
            trigger_source: TriggerSource::from_wire(word[13]),
            jump_target: u16::from_le_bytes([word[14], word[15]]),
        }
    }

    fn end_word(&self) -> u64 {
        self.start_addr as u64 + self.length as u64
    }
}

/// Checked encoding of one instruction.
pub fn encode_entry(entry: &SequenceEntry) -> Result<[u8; ENTRY_BYTES], MemoryError> {
    if entry.length < MIN_SEGMENT_WORDS {
        return Err(MemoryError::InvariantViolation {
            rule: Rule::MinLength,
            detail: format!("length {} < {MIN_SEGMENT_WORDS} words", entry.length),
        });
    }
    if entry.end_word() > WDM_CAPACITY_WORDS as u64 {
        return Err(MemoryError::InvariantViolation {
            rule: Rule::AddressRange,
            detail: format!(
                "words {}..{} exceed capacity {WDM_CAPACITY_WORDS}",
                entry.start_addr,
                entry.end_word()
            ),
        });
    }
    Ok(entry.to_bytes())
}

pub fn decode_entry(word: &[u8; ENTRY_BYTES]) -> SequenceEntry {
    SequenceEntry::from_bytes(word)
}

/// Per-channel sample store.
#[derive(Clone, PartialEq, Eq)]
pub struct WaveformMemory {
    channel: u8,
    samples: Vec<SampleCode>,
}

impl fmt::Debug for WaveformMemory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WaveformMemory")
            .field("channel", &self.channel)
            .field("capacity", &self.samples.len())
            .finish()
    }
}

impl WaveformMemory {
    pub fn new(channel: u8) -> Self {
        Self::with_capacity(channel, WDM_CAPACITY_SAMPLES)
    }

    /// A memory of non-default size. `capacity` is rounded down to whole words.
    pub fn with_capacity(channel: u8, capacity: usize) -> Self {
        let capacity = capacity - capacity % SAMPLES_PER_WORD;
        WaveformMemory {
            channel,
            samples: vec![0; capacity],
        }
    }

    pub fn channel(&self) -> u8 {
        self.channel
    }

    pub fn capacity(&self) -> usize {
        self.samples.len()
    }

    pub fn capacity_words(&self) -> u32 {
        (self.samples.len() / SAMPLES_PER_WORD) as u32
    }

    pub fn samples(&self) -> &[SampleCode] {
        &self.samples
    }

    /// Overwrite `samples.len()` samples starting at `word_offset`.
    pub fn load_waveform(
        &mut self,
        word_offset: u32,
        samples: &[SampleCode],
    ) -> Result<(), MemoryError> {
        let range = self.range(word_offset as u64, samples.len())?;
        self.samples[range].copy_from_slice(samples);
        Ok(())
    }

    pub fn read_words(&self, word_offset: u32, words: u32) -> Result<&[SampleCode], MemoryError> {
        let range = self.range(word_offset as u64, words as usize * SAMPLES_PER_WORD)?;
        Ok(&self.samples[range])
    }

    /// One word; `None` past the end of memory.
    #[inline]
    pub fn word(&self, addr: u64) -> Option<&[SampleCode; SAMPLES_PER_WORD]> {
        let start = usize::try_from(addr).ok()?.checked_mul(SAMPLES_PER_WORD)?;
        self.samples
            .get(start..start + SAMPLES_PER_WORD)
            .map(|s| s.try_into().unwrap())
    }

    fn range(&self, word_offset: u64, len: usize) -> Result<std::ops::Range<usize>, MemoryError> {
        if len % SAMPLES_PER_WORD != 0 {
            return Err(MemoryError::MisalignedLength(len));
        }
        let start = word_offset * SAMPLES_PER_WORD as u64;
        let end = start + len as u64;
        if end > self.samples.len() as u64 {
            return Err(MemoryError::OutOfRange {
                word_offset,
                len,
                capacity: self.samples.len(),
            });
        }
        Ok(start as usize..end as usize)
    }
}

/// Per-channel instruction store.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SequenceMemory {
    channel: u8,
    entries: Vec<SequenceEntry>,
}

impl SequenceMemory {
    pub fn new(channel: u8) -> Self {
        SequenceMemory {
            channel,
            entries: Vec::new(),
        }
    }

    pub fn from_entries(channel: u8, entries: Vec<SequenceEntry>) -> Result<Self, MemoryError> {
        if entries.len() > SDM_CAPACITY {
            return Err(MemoryError::SdmOverflow(entries.len()));
        }
        Ok(SequenceMemory { channel, entries })
    }

    pub fn channel(&self) -> u8 {
        self.channel
    }

    pub fn entries(&self) -> &[SequenceEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    #[inline]
    pub fn get(&self, index: usize) -> Option<&SequenceEntry> {
        self.entries.get(index)
    }

    /// Writes `entries` at `start`; the program then ends after the last
    /// written entry.
    pub fn write(&mut self, start: usize, entries: &[SequenceEntry]) -> Result<(), MemoryError> {
        let end = start + entries.len();
        if end > SDM_CAPACITY || start > self.entries.len() {
            return Err(MemoryError::SdmOverflow(end));
        }
        self.entries.truncate(start);
        self.entries.extend_from_slice(entries);
        Ok(())
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }
}

/// Program rule identifiers, as reported by [`validate_program`] and carried
/// on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Rule {
    MinLength = 1,
    AddressRange = 2,
    BadJump = 3,
    JumpWithEnd = 4,
    WaitWithoutSource = 5,
    FallsOffEnd = 6,
    EmptyProgram = 7,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::MinLength => "MIN_LENGTH",
            Rule::AddressRange => "ADDRESS_RANGE",
            Rule::BadJump => "BAD_JUMP",
            Rule::JumpWithEnd => "JUMP_WITH_END",
            Rule::WaitWithoutSource => "WAIT_WITHOUT_SOURCE",
            Rule::FallsOffEnd => "FALLS_OFF_END",
            Rule::EmptyProgram => "EMPTY_PROGRAM",
        }
    }

    pub fn from_wire(byte: u8) -> Option<Rule> {
        Some(match byte {
            1 => Rule::MinLength,
            2 => Rule::AddressRange,
            3 => Rule::BadJump,
            4 => Rule::JumpWithEnd,
            5 => Rule::WaitWithoutSource,
            6 => Rule::FallsOffEnd,
            7 => Rule::EmptyProgram,
            _ => return None,
        })
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Violation {
    pub index: u16,
    pub rule: Rule,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, rule: Rule) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }

    /// `count:u16` followed by `(index:u16, rule:u8)` triples.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(2 + 3 * self.violations.len());
        out.extend_from_slice(&(self.violations.len() as u16).to_le_bytes());
        for v in &self.violations {
            out.extend_from_slice(&v.index.to_le_bytes());
            out.push(v.rule as u8);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Option<Self> {
        let count = u16::from_le_bytes(bytes.get(0..2)?.try_into().ok()?) as usize;
        let body = bytes.get(2..2 + 3 * count)?;
        let violations = body
            .chunks_exact(3)
            .map(|c| {
                Some(Violation {
                    index: u16::from_le_bytes([c[0], c[1]]),
                    rule: Rule::from_wire(c[2])?,
                })
            })
            .collect::<Option<Vec<_>>>()?;
        Some(ValidationReport { violations })
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return f.write_str("ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}@{}", v.rule, v.index)?;
        }
        Ok(())
    }
}

/// Checks every entry against the memory invariants and walks the control
/// flow from entry 0. An empty report means the sequencer can run the
/// program without a memory fault or prefetch starvation.
pub fn validate_program(sdm: &SequenceMemory, wdm: &WaveformMemory) -> ValidationReport {
    let mut violations = Vec::new();
    let entries = sdm.entries();
    if entries.is_empty() {
        violations.push(Violation {
            index: 0,
            rule: Rule::EmptyProgram,
        });
        return ValidationReport { violations };
    }

    let capacity = wdm.capacity_words() as u64;
    for (i, e) in entries.iter().enumerate() {
        let index = i as u16;
        let mut flag = |rule| violations.push(Violation { index, rule });
        if e.length < MIN_SEGMENT_WORDS {
            flag(Rule::MinLength);
        }
        if e.end_word() > capacity {
            flag(Rule::AddressRange);
        }
        let jump = e.flags.contains(EntryFlags::JUMP);
        if jump && e.flags.contains(EntryFlags::END_OF_SEQUENCE) {
            flag(Rule::JumpWithEnd);
        }
        if jump && e.jump_target as usize >= entries.len() {
            flag(Rule::BadJump);
        }
        if e.flags.contains(EntryFlags::WAIT_TRIGGER) && e.trigger_source == TriggerSource::None {
            flag(Rule::WaitWithoutSource);
        }
    }

    // Every entry has exactly one successor, so the reachable path from entry
    // 0 is a chain that ends, loops, or runs off the end of the SDM.
    let mut seen = HashSet::new();
    let mut i = 0usize;
    while seen.insert(i) {
        let e = &entries[i];
        if e.counter == 0 || e.flags.contains(EntryFlags::END_OF_SEQUENCE) {
            break;
        }
        if e.flags.contains(EntryFlags::JUMP) {
            if e.jump_target as usize >= entries.len() {
                break;
            }
            i = e.jump_target as usize;
        } else if i + 1 == entries.len() {
            violations.push(Violation {
                index: i as u16,
                rule: Rule::FallsOffEnd,
            });
            break;
        } else {
            i += 1;
        }
    }

    violations.sort();
    ValidationReport { violations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn wdm() -> WaveformMemory {
        WaveformMemory::new(0)
    }

    fn program(entries: Vec<SequenceEntry>) -> SequenceMemory {
        SequenceMemory::from_entries(0, entries).unwrap()
    }

    #[test]
    fn minimal_entry_encodes_length_at_offset_four() {
        let e = SequenceEntry::segment(0, 4);
        let bytes = encode_entry(&e).unwrap();
        assert_eq!(&bytes[4..8], &4u32.to_le_bytes());
        assert_eq!(&bytes[8..12], &1u32.to_le_bytes());
        assert_eq!(bytes[12], 0);
        assert_eq!(decode_entry(&bytes), e);
    }

    #[test]
    fn short_entry_is_rejected_by_encoder() {
        let err = encode_entry(&SequenceEntry::segment(0, 3)).unwrap_err();
        assert!(matches!(
            err,
            MemoryError::InvariantViolation {
                rule: Rule::MinLength,
                ..
            }
        ));
    }

    #[test]
    fn encoder_rejects_segment_past_capacity() {
        let e = SequenceEntry::segment(WDM_CAPACITY_WORDS - 3, 4);
        assert!(matches!(
            encode_entry(&e),
            Err(MemoryError::InvariantViolation {
                rule: Rule::AddressRange,
                ..
            })
        ));
        assert!(encode_entry(&SequenceEntry::segment(WDM_CAPACITY_WORDS - 4, 4)).is_ok());
    }

    #[test]
    fn all_zero_word_decodes_to_default() {
        let e = decode_entry(&[0u8; 16]);
        assert_eq!(e.length, 0);
        assert_eq!(e.start_addr, 0);
        assert_eq!(e.flags, EntryFlags::empty());
        assert_eq!(e.trigger_source, TriggerSource::None);
    }

    #[test]
    fn unknown_flag_bits_are_dropped() {
        let mut word = SequenceEntry::segment(1, 5).end().to_bytes();
        word[12] |= 0xF0;
        word[13] = 0xFE;
        let e = decode_entry(&word);
        assert_eq!(e.flags, EntryFlags::END_OF_SEQUENCE);
        assert_eq!(e.trigger_source, TriggerSource::Software);
        assert_eq!(e.to_bytes()[12], EntryFlags::END_OF_SEQUENCE.bits());
    }

    #[test]
    fn waveform_readback_and_bounds() {
        let mut m = wdm();
        let block: Vec<i16> = (0..8).map(|i| i * 100 - 300).collect();
        m.load_waveform(0, &block).unwrap();
        assert_eq!(m.read_words(0, 1).unwrap(), &block[..]);
        assert!(matches!(
            m.load_waveform(WDM_CAPACITY_WORDS, &block),
            Err(MemoryError::OutOfRange { .. })
        ));
        assert!(matches!(
            m.load_waveform(0, &block[..5]),
            Err(MemoryError::MisalignedLength(5))
        ));
        assert!(m.read_words(WDM_CAPACITY_WORDS - 1, 2).is_err());
    }

    #[test]
    fn overlapping_writes_last_writer_wins() {
        let mut m = WaveformMemory::with_capacity(0, 256);
        let mut reference = vec![0i16; 256];
        let writes: [(u32, usize, i16); 3] = [(2, 64, 7), (4, 32, -9), (0, 40, 3)];
        for (off, len, v) in writes {
            let block = vec![v; len];
            m.load_waveform(off, &block).unwrap();
            reference[off as usize * 8..off as usize * 8 + len].copy_from_slice(&block);
        }
        assert_eq!(m.samples(), &reference[..]);
    }

    #[test]
    fn single_legal_entry_validates() {
        let report = validate_program(&program(vec![SequenceEntry::segment(0, 4).end()]), &wdm());
        assert!(report.is_ok(), "{report}");
    }

    #[test]
    fn length_three_reports_min_length() {
        let report = validate_program(&program(vec![SequenceEntry::segment(0, 3).end()]), &wdm());
        assert_eq!(
            report.violations,
            vec![Violation {
                index: 0,
                rule: Rule::MinLength
            }]
        );
    }

    #[test]
    fn jump_out_of_range_reports_bad_jump() {
        let p = program(vec![
            SequenceEntry::segment(0, 4),
            SequenceEntry::segment(4, 4).jump_to(2),
        ]);
        let report = validate_program(&p, &wdm());
        assert_eq!(
            report.violations,
            vec![Violation {
                index: 1,
                rule: Rule::BadJump
            }]
        );
    }

    #[test]
    fn other_rules() {
        let empty = validate_program(&SequenceMemory::new(0), &wdm());
        assert!(empty.has(Rule::EmptyProgram));

        let falls = validate_program(&program(vec![SequenceEntry::segment(0, 4)]), &wdm());
        assert!(falls.has(Rule::FallsOffEnd));

        let both = validate_program(
            &program(vec![SequenceEntry::segment(0, 4).jump_to(0).end()]),
            &wdm(),
        );
        assert!(both.has(Rule::JumpWithEnd));

        let wait = validate_program(
            &program(vec![SequenceEntry::segment(0, 4)
                .with_flags(EntryFlags::WAIT_TRIGGER)
                .end()]),
            &wdm(),
        );
        assert!(wait.has(Rule::WaitWithoutSource));

        // closed loop without END is fine
        let looped = validate_program(
            &program(vec![
                SequenceEntry::segment(0, 4),
                SequenceEntry::segment(0, 4).jump_to(0),
            ]),
            &wdm(),
        );
        assert!(looped.is_ok());

        // unreachable short entry is still reported
        let dead = validate_program(
            &program(vec![
                SequenceEntry::segment(0, 4).end(),
                SequenceEntry::segment(0, 3),
            ]),
            &wdm(),
        );
        assert!(dead.has(Rule::MinLength));
    }

    #[test]
    fn report_wire_round_trip() {
        let r = ValidationReport {
            violations: vec![
                Violation {
                    index: 3,
                    rule: Rule::MinLength,
                },
                Violation {
                    index: 4095,
                    rule: Rule::FallsOffEnd,
                },
            ],
        };
        assert_eq!(ValidationReport::from_bytes(&r.to_bytes()), Some(r));
    }

    pub(crate) fn legal_entry() -> impl Strategy<Value = SequenceEntry> {
        (
            0u32..WDM_CAPACITY_WORDS - MIN_SEGMENT_WORDS,
            any::<u32>(),
            0u8..16,
            0u8..4,
            any::<u32>(),
            any::<u16>(),
        )
            .prop_map(|(start, len_seed, flags, trig, counter, jump)| {
                let room = WDM_CAPACITY_WORDS - start;
                let length = MIN_SEGMENT_WORDS + len_seed % (room - MIN_SEGMENT_WORDS + 1);
                SequenceEntry {
                    flags: EntryFlags::from_bits_truncate(flags),
                    start_addr: start,
                    length,
                    trigger_source: TriggerSource::from_wire(trig),
                    counter,
                    jump_target: jump,
                }
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn encode_decode_round_trip(e in legal_entry()) {
            let bytes = encode_entry(&e).unwrap();
            prop_assert_eq!(decode_entry(&bytes), e);
        }
    }

    proptest! {
        #[test]
        fn wdm_writes_are_idempotent(off in 0u32..64, data in proptest::collection::vec(any::<i16>(), 1..32)) {
            let mut block = data;
            block.resize(block.len().div_ceil(8) * 8, 0);
            let mut once = WaveformMemory::with_capacity(0, 1024);
            once.load_waveform(off, &block).unwrap();
            let mut twice = once.clone();
            twice.load_waveform(off, &block).unwrap();
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn decode_is_total(word in proptest::array::uniform16(any::<u8>())) {
            let e = decode_entry(&word);
            // re-encoding only ever clears bits
            let again = e.to_bytes();
            for (a, b) in again.iter().zip(word.iter()) {
                prop_assert_eq!(a & !b, 0);
            }
        }
    }
}
