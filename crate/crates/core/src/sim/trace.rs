//! Issue-event log and run statistics.
//!
//! Log lines are whitespace separated:
//!
//! ```text
//! <cycle> <sm> <slot> ISSUE <warp> <tb> <kind>
//! <cycle> <sm> <slot> STALL <cause>
//! ```

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::isa::InstrKind;
use super::warp::WarpId;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StallCause {
    /// Ready warps existed but the policy chose not to issue.
    NoInstr,
    /// Operand-ready warps were blocked by an exhausted pipeline budget.
    Structural,
    /// Warps were waiting on scoreboard entries.
    Dependency,
    /// All remaining warps waited at a barrier.
    Barrier,
    /// No warp in the slot had an instruction left.
    Idle,
}

impl StallCause {
    pub const ALL: [StallCause; 5] = [
        StallCause::NoInstr,
        StallCause::Structural,
        StallCause::Dependency,
        StallCause::Barrier,
        StallCause::Idle,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn token(self) -> &'static str {
        match self {
            StallCause::NoInstr => "no_instr",
            StallCause::Structural => "structural",
            StallCause::Dependency => "dependency",
            StallCause::Barrier => "barrier",
            StallCause::Idle => "idle",
        }
    }
}

impl fmt::Display for StallCause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for StallCause {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        StallCause::ALL
            .iter()
            .copied()
            .find(|c| c.token() == s)
            .ok_or_else(|| format!("unknown stall cause `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Issue {
        warp: WarpId,
        tb: usize,
        kind: InstrKind,
    },
    Stall(StallCause),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct IssueEvent {
    pub cycle: u64,
    pub sm: usize,
    pub slot: usize,
    pub outcome: Outcome,
}

impl fmt::Display for IssueEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} ", self.cycle, self.sm, self.slot)?;
        match self.outcome {
            Outcome::Issue { warp, tb, kind } => write!(f, "ISSUE {warp} {tb} {kind}"),
            Outcome::Stall(cause) => write!(f, "STALL {cause}"),
        }
    }
}

impl FromStr for IssueEvent {
    type Err = String;

    fn from_str(line: &str) -> Result<Self, String> {
        let f: Vec<&str> = line.split_whitespace().collect();
        let num = |i: usize| -> Result<u64, String> {
            f.get(i)
                .ok_or_else(|| "truncated event".to_string())?
                .parse::<u64>()
                .map_err(|e| format!("field {i}: {e}"))
        };
        let (cycle, sm, slot) = (num(0)?, num(1)? as usize, num(2)? as usize);
        let outcome = match f.get(3).copied() {
            Some("ISSUE") if f.len() == 7 => Outcome::Issue {
                warp: num(4)? as usize,
                tb: num(5)? as usize,
                kind: f[6].parse()?,
            },
            Some("STALL") if f.len() == 5 => Outcome::Stall(f[4].parse()?),
            _ => return Err(format!("malformed event `{line}`")),
        };
        Ok(IssueEvent {
            cycle,
            sm,
            slot,
            outcome,
        })
    }
}

pub fn write_events<W: Write>(mut out: W, events: &[IssueEvent]) -> std::io::Result<()> {
    for e in events {
        writeln!(out, "{e}")?;
    }
    Ok(())
}

pub fn read_events<R: BufRead>(input: R, name: &str) -> Result<Vec<IssueEvent>> {
    let mut events = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::io(name, e))?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        events.push(line.parse().map_err(|msg| Error::Parse {
            path: name.to_string(),
            line: i + 1,
            msg,
        })?);
    }
    Ok(events)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SimStats {
    pub cycles: u64,
    pub instructions: u64,
    pub issued_by_kind: [u64; 5],
    pub stalls: [u64; 5],
    pub l1_hits: u64,
    pub l1_misses: u64,
    pub l2_hits: u64,
    pub l2_misses: u64,
    pub global_accesses: u64,
    pub global_latency_sum: u64,
}

impl SimStats {
    pub fn ipc(&self) -> f64 {
        if self.cycles == 0 {
            0.0
        } else {
            self.instructions as f64 / self.cycles as f64
        }
    }

    pub fn stall(&self, cause: StallCause) -> u64 {
        self.stalls[cause.index()]
    }

    pub fn total_stalls(&self) -> u64 {
        self.stalls.iter().sum()
    }

    pub fn l1_hit_rate(&self) -> f64 {
        ratio(self.l1_hits, self.l1_hits + self.l1_misses)
    }

    pub fn l2_hit_rate(&self) -> f64 {
        ratio(self.l2_hits, self.l2_hits + self.l2_misses)
    }

    pub fn avg_global_latency(&self) -> f64 {
        ratio(self.global_latency_sum, self.global_accesses)
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}
