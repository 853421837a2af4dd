// Copyright 2026 The awgsim Authors
// SPDX-License-Identifier: Apache-2.0

//! Text summary with pass/fail lines.
//!
//! ```text
//! # awgsim report v1
//! # inl: endpoint fit
//! INL_MAX_LSB=1.234567; PASS<=2.0
//! SFDR_POINTS=25
//! ```
//!
//! One `KEY=value` per line; a checked line carries `; PASS<rule>` or
//! `; FAIL<rule>`. Lines starting with `#` are comments. Nothing
//! time-dependent is written, so equal inputs give equal files.

use std::fmt;

pub const REPORT_HEADER: &str = "# awgsim report v1";

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    AtMost(f64),
    AtLeast(f64),
    Within(f64, f64),
    Equals(f64),
}

impl Bound {
    pub fn holds(&self, v: f64) -> bool {
        match *self {
            Bound::AtMost(b) => v <= b,
            Bound::AtLeast(b) => v >= b,
            Bound::Within(lo, hi) => lo <= v && v <= hi,
            Bound::Equals(b) => v == b,
        }
    }
}

/// Up to nine decimals, trailing zeros dropped, at least one decimal kept.
fn num(v: f64) -> String {
    let s = format!("{v:.9}");
    let t = s.trim_end_matches('0');
    if t.ends_with('.') {
        format!("{t}0")
    } else {
        t.to_string()
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::AtMost(b) => write!(f, "<={}", num(*b)),
            Bound::AtLeast(b) => write!(f, ">={}", num(*b)),
            Bound::Within(lo, hi) => write!(f, " in [{},{}]", num(*lo), num(*hi)),
            Bound::Equals(b) => write!(f, "=={}", num(*b)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Summary {
    lines: Vec<String>,
    failures: usize,
    checks: usize,
}

impl Summary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn comment(&mut self, text: &str) {
        self.lines.push(format!("# {text}"));
    }

    pub fn info(&mut self, key: &str, value: impl fmt::Display) {
        self.lines.push(format!("{key}={value}"));
    }

    /// Records `key=value` against `bound`; returns whether it held.
    pub fn check(&mut self, key: &str, value: f64, decimals: usize, bound: Bound) -> bool {
        let ok = bound.holds(value);
        self.checks += 1;
        if !ok {
            self.failures += 1;
        }
        let verdict = if ok { "PASS" } else { "FAIL" };
        self.lines
            .push(format!("{key}={value:.decimals$}; {verdict}{bound}"));
        ok
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    pub fn checks(&self) -> usize {
        self.checks
    }

    pub fn append(&mut self, other: Summary) {
        self.lines.extend(other.lines);
        self.failures += other.failures;
        self.checks += other.checks;
    }

    pub fn lines(&self) -> &[String] {
        &self.lines
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{REPORT_HEADER}")?;
        for l in &self.lines {
            writeln!(f, "{l}")?;
        }
        writeln!(f, "VERDICT={}", if self.passed() { "PASS" } else { "FAIL" })
    }
}
