use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::isa::{InstrKind, Instruction};

/// Per-thread-block resource demand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TbResources {
    pub registers: u32,
    pub shared_mem: u32,
}

pub type WarpProgram = Vec<Instruction>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TbSpec {
    pub warps: Vec<WarpProgram>,
}

/// A fully materialized kernel: every warp's instruction sequence plus the
/// thread-block structure and resource demand.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KernelSpec {
    pub name: String,
    pub warps_per_tb: usize,
    pub resources: TbResources,
    /// Salt for hashed (random-pool) addresses.
    pub addr_salt: u64,
    pub tbs: Vec<TbSpec>,
}

impl KernelSpec {
    pub fn num_tbs(&self) -> usize {
        self.tbs.len()
    }

    pub fn total_warps(&self) -> usize {
        self.tbs.len() * self.warps_per_tb
    }

    pub fn total_instructions(&self) -> u64 {
        self.tbs
            .iter()
            .flat_map(|tb| tb.warps.iter())
            .map(|w| w.len() as u64)
            .sum()
    }

    pub fn program(&self, tb: usize, warp_in_tb: usize) -> &[Instruction] {
        &self.tbs[tb].warps[warp_in_tb]
    }

    /// Builds a kernel in which every warp of every TB runs `program`.
    pub fn uniform(
        name: &str,
        num_tbs: usize,
        warps_per_tb: usize,
        resources: TbResources,
        program: WarpProgram,
    ) -> Self {
        KernelSpec {
            name: name.to_string(),
            warps_per_tb,
            resources,
            addr_salt: 0,
            tbs: (0..num_tbs)
                .map(|_| TbSpec {
                    warps: vec![program.clone(); warps_per_tb],
                })
                .collect(),
        }
    }

    /// Checks structural invariants: nonempty, every TB has `warps_per_tb`
    /// warps, valid instructions, and identical length and barrier positions
    /// across the warps of a TB.
    pub fn validate(&self) -> Result<()> {
        if self.tbs.is_empty() || self.warps_per_tb == 0 {
            return Err(Error::Template("kernel needs at least one TB and one warp per TB".into()));
        }
        for (t, tb) in self.tbs.iter().enumerate() {
            if tb.warps.len() != self.warps_per_tb {
                return Err(Error::Template(format!(
                    "TB {t} has {} warps, expected {}",
                    tb.warps.len(),
                    self.warps_per_tb
                )));
            }
            let first = &tb.warps[0];
            for (w, prog) in tb.warps.iter().enumerate() {
                for (pc, instr) in prog.iter().enumerate() {
                    instr
                        .validate()
                        .map_err(|e| Error::Template(format!("TB {t} warp {w} pc {pc}: {e}")))?;
                }
                if prog.len() != first.len() {
                    return Err(Error::Template(format!(
                        "TB {t} warp {w}: length {} differs from warp 0 ({})",
                        prog.len(),
                        first.len()
                    )));
                }
                let same_barriers = prog
                    .iter()
                    .zip(first)
                    .all(|(a, b)| (a.kind == InstrKind::Barrier) == (b.kind == InstrKind::Barrier));
                if !same_barriers {
                    return Err(Error::Template(format!(
                        "TB {t} warp {w}: barrier positions differ from warp 0"
                    )));
                }
            }
        }
        Ok(())
    }
}
