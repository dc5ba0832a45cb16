use serde::{Deserialize, Serialize};

use super::isa::InstrKind;

/// Warp index within an SM (its hardware warp slot).
pub type WarpId = usize;

/// Total order on resident warps: TB arrival order on the SM, then warp id.
/// Smaller is older.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AgeKey {
    pub arrival: u64,
    pub warp: WarpId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WarpStatus {
    Ready,
    WaitingOperands,
    AtBarrier,
    Finished,
    /// All instructions issued, results still draining.
    Idle,
}

#[derive(Debug, Clone)]
pub struct Warp {
    pub id: WarpId,
    /// Index of the owning TB in `SmState::tbs`.
    pub tb_slot: usize,
    /// Kernel-wide TB id.
    pub tb_id: usize,
    pub warp_in_tb: usize,
    /// Kernel-wide warp index, used for address generation.
    pub global_index: u64,
    pub pc: usize,
    pub len: usize,
    pub scoreboard: u64,
    pub inflight_mem: u32,
    pub at_barrier: bool,
    pub finished: bool,
    pub split: bool,
    pub age: AgeKey,
    pub issue_count: u64,
    /// Kind and operand mask of the instruction at `pc` (meaningless once
    /// `pc == len`).
    pub next_kind: InstrKind,
    pub next_mask: u64,
}

impl Warp {
    pub fn has_instruction(&self) -> bool {
        !self.finished && self.pc < self.len
    }

    /// Status ignoring pipeline budgets; `operands` is the operand mask of the
    /// next instruction (ignored when there is none).
    pub fn status(&self, operands: u64) -> WarpStatus {
        if self.finished {
            WarpStatus::Finished
        } else if self.pc >= self.len {
            WarpStatus::Idle
        } else if self.at_barrier {
            WarpStatus::AtBarrier
        } else if self.scoreboard & operands != 0 {
            WarpStatus::WaitingOperands
        } else {
            WarpStatus::Ready
        }
    }

    pub fn drained(&self) -> bool {
        self.pc >= self.len && self.scoreboard == 0 && self.inflight_mem == 0
    }
}

#[derive(Debug, Clone)]
pub struct ResidentTb {
    pub tb_id: usize,
    pub arrival: u64,
    pub warps: Vec<WarpId>,
    pub barrier_count: usize,
    pub finished_count: usize,
}

impl ResidentTb {
    pub fn live_warps(&self) -> usize {
        self.warps.len() - self.finished_count
    }

    /// Some, but not all, live warps wait at the barrier.
    pub fn partially_at_barrier(&self) -> bool {
        self.barrier_count > 0 && self.barrier_count < self.live_warps()
    }

    pub fn partially_finished(&self) -> bool {
        self.finished_count > 0 && self.finished_count < self.warps.len()
    }
}
