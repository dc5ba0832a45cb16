use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Register tags are small integers; a warp scoreboard is a 64-bit mask.
pub const MAX_REG_TAGS: u8 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum InstrKind {
    Sp,
    Sfu,
    GlobalMem,
    StcMem,
    Barrier,
}

impl InstrKind {
    pub const ALL: [InstrKind; 5] = [
        InstrKind::Sp,
        InstrKind::Sfu,
        InstrKind::GlobalMem,
        InstrKind::StcMem,
        InstrKind::Barrier,
    ];

    pub fn is_memory(self) -> bool {
        matches!(self, InstrKind::GlobalMem | InstrKind::StcMem)
    }

    /// SP and SFU instructions (the ALU side of the SM).
    pub fn is_alu(self) -> bool {
        matches!(self, InstrKind::Sp | InstrKind::Sfu)
    }

    /// Execution resource whose per-cycle budget the instruction consumes.
    /// Barriers are handled by the SP issue path.
    pub fn pipeline(self) -> Pipeline {
        match self {
            InstrKind::Sp | InstrKind::Barrier => Pipeline::Sp,
            InstrKind::Sfu => Pipeline::Sfu,
            InstrKind::GlobalMem | InstrKind::StcMem => Pipeline::Mem,
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            InstrKind::Sp => "SP",
            InstrKind::Sfu => "SFU",
            InstrKind::GlobalMem => "GMEM",
            InstrKind::StcMem => "STC",
            InstrKind::Barrier => "BAR",
        }
    }

    /// Default index into `GpuConfig::latency_table`.
    pub fn default_latency_class(self) -> u8 {
        match self {
            InstrKind::Sp => 0,
            InstrKind::Sfu => 1,
            InstrKind::StcMem => 2,
            InstrKind::GlobalMem => 2,
            InstrKind::Barrier => 3,
        }
    }
}

impl fmt::Display for InstrKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for InstrKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        InstrKind::ALL
            .iter()
            .copied()
            .find(|k| k.token() == s)
            .ok_or_else(|| {
                let valid: Vec<_> = InstrKind::ALL.iter().map(|k| k.token()).collect();
                format!(
                    "unknown instruction kind `{s}` (valid kinds: {})",
                    valid.join(", ")
                )
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pipeline {
    Sp,
    Sfu,
    Mem,
}

/// Synthetic address-stream descriptor carried by memory instructions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AccessPattern {
    /// Each (access, warp) pair touches `base + (ordinal * total_warps + warp) * stride`.
    /// Neighbouring warps share lines when `stride` is below the line size.
    Stream { stride: u32 },
    /// Each warp cycles through a private window of `window` lines.
    Reuse { window: u32 },
    /// Hashed choice from a kernel-wide pool of `pool` lines.
    Random { pool: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LocalityTag {
    pub pattern: AccessPattern,
    /// Data structure the access belongs to; regions never alias.
    pub region: u16,
    /// Position of this access among the warp's accesses to `region`.
    pub ordinal: u32,
}

impl LocalityTag {
    /// Byte address for the global warp index `warp` of a kernel with
    /// `total_warps` warps.
    pub fn address(&self, warp: u64, total_warps: u64, line_bytes: u64, salt: u64) -> u64 {
        let base = (self.region as u64 + 1) << 40;
        let ordinal = self.ordinal as u64;
        let offset = match self.pattern {
            AccessPattern::Stream { stride } => (ordinal * total_warps + warp) * stride as u64,
            AccessPattern::Reuse { window } => {
                let window = window.max(1) as u64;
                (warp * window + ordinal % window) * line_bytes
            }
            AccessPattern::Random { pool } => {
                let h = crate::seed::mix64(salt ^ crate::seed::mix64((warp << 32) ^ ordinal));
                (h % pool.max(1) as u64) * line_bytes
            }
        };
        base + offset
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Instruction {
    pub kind: InstrKind,
    pub latency_class: u8,
    pub dest: Option<u8>,
    pub srcs: Vec<u8>,
    pub locality: Option<LocalityTag>,
    pub divergent: bool,
}

impl Instruction {
    pub fn new(kind: InstrKind) -> Self {
        Instruction {
            kind,
            latency_class: kind.default_latency_class(),
            dest: None,
            srcs: Vec::new(),
            locality: None,
            divergent: false,
        }
    }

    pub fn barrier() -> Self {
        Instruction::new(InstrKind::Barrier)
    }

    pub fn with_dest(mut self, reg: u8) -> Self {
        self.dest = Some(reg);
        self
    }

    pub fn with_srcs(mut self, srcs: &[u8]) -> Self {
        self.srcs = srcs.to_vec();
        self
    }

    pub fn with_locality(mut self, tag: LocalityTag) -> Self {
        self.locality = Some(tag);
        self
    }

    pub fn divergent(mut self, flag: bool) -> Self {
        self.divergent = flag;
        self
    }

    /// Scoreboard bits the instruction must find clear before it can issue.
    pub fn operand_mask(&self) -> u64 {
        let mut mask = 0u64;
        for &s in &self.srcs {
            mask |= 1u64 << s;
        }
        if let Some(d) = self.dest {
            mask |= 1u64 << d;
        }
        mask
    }

    pub fn validate(&self) -> Result<(), String> {
        let regs_ok = self.srcs.iter().chain(self.dest.iter()).all(|&r| r < MAX_REG_TAGS);
        if !regs_ok {
            return Err(format!("register tag out of range (max {})", MAX_REG_TAGS - 1));
        }
        match self.kind {
            InstrKind::Barrier => {
                if self.dest.is_some() || !self.srcs.is_empty() || self.locality.is_some() {
                    return Err("BAR takes no operands and no locality tag".into());
                }
            }
            InstrKind::Sp | InstrKind::Sfu => {
                if self.locality.is_some() {
                    return Err(format!("{} cannot carry a locality tag", self.kind));
                }
            }
            InstrKind::GlobalMem | InstrKind::StcMem => {}
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn barrier_with_operands_is_invalid() {
        assert!(Instruction::barrier().validate().is_ok());
        assert!(Instruction::barrier().with_dest(3).validate().is_err());
    }

    #[test]
    fn alu_with_locality_is_invalid() {
        let tag = LocalityTag {
            pattern: AccessPattern::Reuse { window: 4 },
            region: 0,
            ordinal: 0,
        };
        assert!(Instruction::new(InstrKind::Sp).with_locality(tag).validate().is_err());
        assert!(Instruction::new(InstrKind::GlobalMem).with_locality(tag).validate().is_ok());
    }

    #[test]
    fn unknown_kind_lists_valid_tokens() {
        let err = "FOO".parse::<InstrKind>().unwrap_err();
        assert!(err.contains("SP, SFU, GMEM, STC, BAR"), "{err}");
    }

    #[test]
    fn stream_addresses_interleave_warps() {
        let tag = LocalityTag {
            pattern: AccessPattern::Stream { stride: 32 },
            region: 0,
            ordinal: 2,
        };
        let a0 = tag.address(0, 10, 128, 0);
        let a1 = tag.address(1, 10, 128, 0);
        assert_eq!(a1 - a0, 32);
        assert_eq!(a0 - (1u64 << 40), 2 * 10 * 32);
    }
}
