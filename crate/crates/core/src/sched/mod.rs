//! Scheduler interface and the baseline policies.

mod gto;
mod lrr;
mod random;
mod tl;

pub use gto::{gto_pick, Gto};
pub use lrr::{lrr_pick, Lrr};
pub use random::{random_pick, RandomPolicy};
pub use tl::{tl_pick, TlState, TwoLevel};

use crate::error::Result;
use crate::rlws::DecisionRecord;
use crate::sim::{GlobalCounters, GpuConfig, ReadyWarp, SlotScan, SmState, WarpId};
use crate::workload::KernelSpec;

/// Everything a scheduler slot may look at when choosing a warp.
pub struct SchedulerView<'a> {
    pub cycle: u64,
    pub slot: usize,
    /// Ready warps of this slot, ascending warp id.
    pub ready: &'a [ReadyWarp],
    pub scan: &'a SlotScan,
    pub sm: &'a SmState,
    pub global: &'a GlobalCounters,
    pub config: &'a GpuConfig,
    pub kernel: &'a KernelSpec,
}

/// Counters a policy reports alongside the simulator statistics.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PolicyExtras {
    pub decisions: u64,
    pub explored: u64,
    pub updates: u64,
    pub group_switches: u64,
}

impl PolicyExtras {
    pub fn merge(&mut self, other: &PolicyExtras) {
        self.decisions += other.decisions;
        self.explored += other.explored;
        self.updates += other.updates;
        self.group_switches += other.group_switches;
    }

    pub fn exploration_fraction(&self) -> f64 {
        if self.decisions == 0 {
            0.0
        } else {
            self.explored as f64 / self.decisions as f64
        }
    }
}

/// One instance drives both scheduler slots of one SM. The simulator issues
/// whatever warp `pick` returns, so a policy may treat its own return value as
/// "last issued".
pub trait SchedulerPolicy: Send {
    fn name(&self) -> &str;

    /// Returns a warp from `view.ready`, or `None` to leave the slot idle.
    fn pick(&mut self, view: &SchedulerView<'_>) -> Result<Option<WarpId>>;

    fn extras(&self) -> PolicyExtras {
        PolicyExtras::default()
    }

    /// Drains recorded decisions, for policies that keep a decision log.
    fn take_decisions(&mut self) -> Vec<DecisionRecord> {
        Vec::new()
    }

    /// Learned weights, for policies that have them.
    fn theta_snapshot(&self) -> Option<Vec<f64>> {
        None
    }
}

/// The oldest entry of `ready` by the SM age order.
pub fn oldest(ready: &[ReadyWarp]) -> Option<WarpId> {
    ready.iter().min_by_key(|r| r.age).map(|r| r.warp)
}

/// The youngest entry of `ready` by the SM age order.
pub fn youngest(ready: &[ReadyWarp]) -> Option<WarpId> {
    ready.iter().max_by_key(|r| r.age).map(|r| r.warp)
}

pub fn contains(ready: &[ReadyWarp], warp: WarpId) -> bool {
    ready.iter().any(|r| r.warp == warp)
}
