//! Cycle-level SM model: warps, thread blocks, issue budgets, scoreboards,
//! barriers and a two-level cache hierarchy.

pub mod cache;
pub mod config;
pub mod gpu;
pub mod isa;
pub mod memory;
pub mod sm;
pub mod trace;
pub mod warp;

pub use cache::SetAssocCache;
pub use config::{CacheGeometry, GpuConfig, SLOTS_PER_SM};
pub use gpu::{classify_stall, tbs_per_sm, Gpu, RunOptions, SimOutcome};
pub use isa::{AccessPattern, InstrKind, Instruction, LocalityTag, Pipeline};
pub use memory::{GlobalCounters, HitLevel, MemorySystem, WindowRatio};
pub use sm::{Budgets, ReadyWarp, SlotScan, SmState};
pub use trace::{read_events, write_events, IssueEvent, Outcome, SimStats, StallCause};
pub use warp::{AgeKey, ResidentTb, Warp, WarpId, WarpStatus};
