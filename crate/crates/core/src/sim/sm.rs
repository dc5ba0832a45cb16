use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::cache::SetAssocCache;
use super::config::{GpuConfig, SLOTS_PER_SM};
use super::isa::{AccessPattern, InstrKind, LocalityTag, Pipeline};
use super::memory::{GlobalCounters, HitLevel, MemorySystem, WindowRatio};
use super::trace::SimStats;
use super::warp::{AgeKey, ResidentTb, Warp, WarpId, WarpStatus};
use crate::workload::KernelSpec;

/// Per-cycle issue budgets of one SM.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budgets {
    pub mem: u32,
    pub sfu: u32,
    pub sp: [u32; SLOTS_PER_SM],
}

impl Budgets {
    pub fn available(&self, pipeline: Pipeline, slot: usize) -> bool {
        match pipeline {
            Pipeline::Mem => self.mem > 0,
            Pipeline::Sfu => self.sfu > 0,
            Pipeline::Sp => self.sp[slot] > 0,
        }
    }

    fn consume(&mut self, pipeline: Pipeline, slot: usize) {
        let b = match pipeline {
            Pipeline::Mem => &mut self.mem,
            Pipeline::Sfu => &mut self.sfu,
            Pipeline::Sp => &mut self.sp[slot],
        };
        debug_assert!(*b > 0);
        *b -= 1;
    }
}

/// A warp that can issue this cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReadyWarp {
    pub warp: WarpId,
    pub tb: usize,
    pub kind: InstrKind,
    pub age: AgeKey,
}

/// One pass over a scheduler slot's warps: the ready set plus the counts the
/// stall classifier and the learned scheduler need.
#[derive(Debug, Clone, Default)]
pub struct SlotScan {
    /// Ready warps in ascending warp-id order.
    pub ready: Vec<ReadyWarp>,
    pub resident: usize,
    pub with_instruction: usize,
    pub waiting_operands: usize,
    pub at_barrier: usize,
    pub blocked_mem: usize,
    pub blocked_sfu: usize,
    pub blocked_sp: usize,
    pub next_sfu: usize,
    pub next_mem: usize,
    pub split: usize,
}

impl SlotScan {
    fn clear(&mut self) {
        self.ready.clear();
        self.resident = 0;
        self.with_instruction = 0;
        self.waiting_operands = 0;
        self.at_barrier = 0;
        self.blocked_mem = 0;
        self.blocked_sfu = 0;
        self.blocked_sp = 0;
        self.next_sfu = 0;
        self.next_mem = 0;
        self.split = 0;
    }

    pub fn blocked_by_pipeline(&self) -> usize {
        self.blocked_mem + self.blocked_sfu + self.blocked_sp
    }

    /// Warps that are resident, unfinished, have an instruction and are not
    /// parked at a barrier.
    pub fn schedulable(&self) -> usize {
        self.with_instruction - self.at_barrier
    }
}

#[derive(Debug, Clone)]
pub struct SmState {
    pub index: usize,
    /// Indexed by warp id; `None` marks a free hardware warp slot.
    pub warps: Vec<Option<Warp>>,
    pub tbs: Vec<Option<ResidentTb>>,
    pub registers_used: u32,
    pub shared_mem_used: u32,
    pub l1: SetAssocCache,
    /// (warp, completion cycle) of memory instructions in flight.
    pub in_flight_mem: Vec<(WarpId, u64)>,
    completions: BinaryHeap<Reverse<(u64, WarpId, u8)>>,
    pub budgets: Budgets,
    pub stall_counters: [u64; 5],
    pub tbs_finished: u64,
    /// Issue counts and program lengths of warps whose TBs have retired.
    pub retired_issues: u64,
    pub retired_instructions: u64,
    arrivals: u64,
    /// TB of the most recently issued memory instruction.
    pub last_mem_tb: Option<usize>,
    /// Per program counter: the last global access there missed L1.
    pub long_latency_pc: Vec<bool>,
    pub l1_miss: WindowRatio,
    pub issue_per_l1_miss: WindowRatio,
    pub alu_per_mem: WindowRatio,
    /// Set when a warp may have drained since the last `retire`.
    retire_pending: bool,
    next_mem_completion: u64,
}

impl SmState {
    pub fn new(index: usize, cfg: &GpuConfig) -> Self {
        SmState {
            index,
            warps: vec![None; cfg.max_warps_per_sm],
            tbs: vec![None; cfg.max_tbs_per_sm],
            registers_used: 0,
            shared_mem_used: 0,
            l1: SetAssocCache::new(&cfg.l1),
            in_flight_mem: Vec::new(),
            completions: BinaryHeap::new(),
            budgets: Budgets {
                mem: 0,
                sfu: 0,
                sp: [0; SLOTS_PER_SM],
            },
            stall_counters: [0; 5],
            tbs_finished: 0,
            retired_issues: 0,
            retired_instructions: 0,
            arrivals: 0,
            last_mem_tb: None,
            long_latency_pc: Vec::new(),
            l1_miss: WindowRatio::default(),
            issue_per_l1_miss: WindowRatio::default(),
            alu_per_mem: WindowRatio::default(),
            retire_pending: false,
            next_mem_completion: u64::MAX,
        }
    }

    pub fn resident_tbs(&self) -> impl Iterator<Item = &ResidentTb> {
        self.tbs.iter().flatten()
    }

    pub fn resident_warps(&self) -> impl Iterator<Item = &Warp> {
        self.warps.iter().flatten()
    }

    pub fn resident_tb_count(&self) -> usize {
        self.tbs.iter().filter(|t| t.is_some()).count()
    }

    pub fn warps_used(&self) -> usize {
        self.warps.iter().filter(|w| w.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.tbs.iter().all(|t| t.is_none())
    }

    pub fn warp(&self, id: WarpId) -> Option<&Warp> {
        self.warps.get(id).and_then(|w| w.as_ref())
    }

    pub fn tb_of(&self, warp: &Warp) -> &ResidentTb {
        self.tbs[warp.tb_slot].as_ref().expect("warp of a non-resident TB")
    }

    /// Status of a resident warp, ignoring pipeline budgets.
    pub fn warp_status(&self, id: WarpId, kernel: &KernelSpec) -> Option<WarpStatus> {
        let w = self.warp(id)?;
        let _ = kernel;
        Some(w.status(w.next_mask))
    }

    pub fn slot_of(warp: WarpId) -> usize {
        warp % SLOTS_PER_SM
    }

    /// Places a TB in free warp slots (lowest ids first).
    pub(crate) fn admit_tb(&mut self, tb_id: usize, kernel: &KernelSpec) {
        let tb_slot = self
            .tbs
            .iter()
            .position(|t| t.is_none())
            .expect("admit_tb without a free TB slot");
        let arrival = self.arrivals;
        self.arrivals += 1;
        let free: Vec<WarpId> = self
            .warps
            .iter()
            .enumerate()
            .filter(|(_, w)| w.is_none())
            .map(|(i, _)| i)
            .take(kernel.warps_per_tb)
            .collect();
        assert_eq!(free.len(), kernel.warps_per_tb, "admit_tb without free warp slots");
        for (warp_in_tb, &id) in free.iter().enumerate() {
            self.warps[id] = Some(Warp {
                id,
                tb_slot,
                tb_id,
                warp_in_tb,
                global_index: (tb_id * kernel.warps_per_tb + warp_in_tb) as u64,
                pc: 0,
                len: kernel.program(tb_id, warp_in_tb).len(),
                scoreboard: 0,
                inflight_mem: 0,
                at_barrier: false,
                finished: false,
                split: false,
                age: AgeKey { arrival, warp: id },
                issue_count: 0,
                next_kind: InstrKind::Sp,
                next_mask: 0,
            });
            refresh_next(self.warps[id].as_mut().expect("warp"), kernel);
        }
        self.tbs[tb_slot] = Some(ResidentTb {
            tb_id,
            arrival,
            warps: free,
            barrier_count: 0,
            finished_count: 0,
        });
        self.retire_pending = true;
        self.registers_used += kernel.resources.registers;
        self.shared_mem_used += kernel.resources.shared_mem;
    }

    /// Applies completions due at `now`. Returns the number of memory
    /// instructions that completed.
    pub(crate) fn apply_completions(&mut self, now: u64) -> usize {
        while let Some(&Reverse((cycle, warp, reg))) = self.completions.peek() {
            if cycle > now {
                break;
            }
            self.completions.pop();
            if let Some(w) = self.warps[warp].as_mut() {
                w.scoreboard &= !(1u64 << reg);
                self.retire_pending |= w.pc == w.len;
            }
        }
        if now < self.next_mem_completion {
            return 0;
        }
        let before = self.in_flight_mem.len();
        let warps = &mut self.warps;
        let mut next = u64::MAX;
        let mut drained = false;
        self.in_flight_mem.retain(|&(warp, cycle)| {
            debug_assert!(cycle >= now);
            if cycle <= now {
                if let Some(w) = warps[warp].as_mut() {
                    w.inflight_mem -= 1;
                    drained |= w.pc == w.len;
                }
                false
            } else {
                next = next.min(cycle);
                true
            }
        });
        self.next_mem_completion = next;
        self.retire_pending |= drained;
        before - self.in_flight_mem.len()
    }

    /// Marks drained warps finished, releases barriers that became
    /// satisfiable and retires completed TBs. Returns retired TB count and
    /// the number of warps that finished.
    pub(crate) fn retire(&mut self, kernel: &KernelSpec) -> (usize, usize) {
        if !self.retire_pending {
            return (0, 0);
        }
        self.retire_pending = false;
        let mut finished_warps = 0;
        for id in 0..self.warps.len() {
            let Some(w) = self.warps[id].as_mut() else {
                continue;
            };
            if !w.finished && w.drained() {
                w.finished = true;
                let slot = w.tb_slot;
                let tb = self.tbs[slot].as_mut().expect("resident TB");
                tb.finished_count += 1;
                finished_warps += 1;
                self.try_release_barrier(slot);
            }
        }
        let mut retired = 0;
        for slot in 0..self.tbs.len() {
            let done = matches!(&self.tbs[slot], Some(tb) if tb.finished_count == tb.warps.len());
            if done {
                let tb = self.tbs[slot].take().expect("resident TB");
                for id in tb.warps {
                    let w = self.warps[id].take().expect("resident warp");
                    self.retired_issues += w.issue_count;
                    self.retired_instructions += w.len as u64;
                }
                self.registers_used -= kernel.resources.registers;
                self.shared_mem_used -= kernel.resources.shared_mem;
                self.tbs_finished += 1;
                retired += 1;
            }
        }
        (retired, finished_warps)
    }

    fn try_release_barrier(&mut self, tb_slot: usize) {
        let tb = self.tbs[tb_slot].as_mut().expect("resident TB");
        if tb.barrier_count == 0 || tb.barrier_count < tb.live_warps() {
            return;
        }
        tb.barrier_count = 0;
        for &id in &tb.warps {
            if let Some(w) = self.warps[id].as_mut() {
                w.at_barrier = false;
            }
        }
    }

    pub(crate) fn reset_budgets(&mut self, cfg: &GpuConfig) {
        let mem = if self.in_flight_mem.len() >= cfg.max_inflight_mem_per_sm {
            0
        } else {
            cfg.mem_issue_per_cycle
        };
        self.budgets = Budgets {
            mem,
            sfu: cfg.sfu_issue_per_cycle,
            sp: [1; SLOTS_PER_SM],
        };
    }

    /// Scans the warps owned by `slot` (warp ids of matching parity).
    pub fn scan_slot(&self, slot: usize, kernel: &KernelSpec, out: &mut SlotScan) {
        out.clear();
        let mut id = slot;
        while id < self.warps.len() {
            if let Some(w) = &self.warps[id] {
                self.scan_warp(w, slot, kernel, out);
            }
            id += SLOTS_PER_SM;
        }
    }

    fn scan_warp(&self, w: &Warp, slot: usize, kernel: &KernelSpec, out: &mut SlotScan) {
        out.resident += 1;
        if !w.has_instruction() {
            return;
        }
        out.with_instruction += 1;
        if w.split {
            out.split += 1;
        }
        let _ = kernel;
        let kind = w.next_kind;
        match kind {
            InstrKind::Sfu => out.next_sfu += 1,
            InstrKind::GlobalMem | InstrKind::StcMem => out.next_mem += 1,
            _ => {}
        }
        match w.status(w.next_mask) {
            WarpStatus::AtBarrier => out.at_barrier += 1,
            WarpStatus::WaitingOperands => out.waiting_operands += 1,
            WarpStatus::Ready => {
                let pipe = kind.pipeline();
                if self.budgets.available(pipe, slot) {
                    out.ready.push(ReadyWarp {
                        warp: w.id,
                        tb: w.tb_id,
                        kind,
                        age: w.age,
                    });
                } else {
                    match pipe {
                        Pipeline::Mem => out.blocked_mem += 1,
                        Pipeline::Sfu => out.blocked_sfu += 1,
                        Pipeline::Sp => out.blocked_sp += 1,
                    }
                }
            }
            WarpStatus::Finished | WarpStatus::Idle => unreachable!("warp has an instruction"),
        }
    }

    /// Issues the next instruction of `id` from `slot` at cycle `now`.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn issue(
        &mut self,
        id: WarpId,
        slot: usize,
        now: u64,
        kernel: &KernelSpec,
        cfg: &GpuConfig,
        mem: &mut MemorySystem,
        global: &mut GlobalCounters,
        stats: &mut SimStats,
    ) -> InstrKind {
        let w = self.warps[id].as_ref().expect("issue to a free warp slot");
        let (pc, tb_slot, tb_id, warp_index) = (w.pc, w.tb_slot, w.tb_id, w.global_index);
        let instr = &kernel.program(tb_id, w.warp_in_tb)[pc];
        let kind = instr.kind;
        self.budgets.consume(kind.pipeline(), slot);
        let factor = if instr.divergent { cfg.divergence_factor } else { 1 };

        let latency = match kind {
            InstrKind::Barrier => None,
            InstrKind::Sp | InstrKind::Sfu | InstrKind::StcMem => {
                Some(cfg.latency(instr.latency_class) * factor)
            }
            InstrKind::GlobalMem => {
                let tag = instr.locality.unwrap_or(LocalityTag {
                    pattern: AccessPattern::Stream {
                        stride: cfg.l1.line_bytes,
                    },
                    region: 0,
                    ordinal: pc as u32,
                });
                let addr = tag.address(
                    warp_index,
                    kernel.total_warps() as u64,
                    cfg.l1.line_bytes as u64,
                    kernel.addr_salt,
                );
                let l1_before = (self.l1.hits, self.l1.misses);
                let l2_before = (mem.l2.hits, mem.l2.misses);
                let (lat, level) = mem.global_access(&mut self.l1, addr, now);
                let l1_miss = level != HitLevel::L1;
                self.l1_miss.add(l1_miss as u64, 1);
                self.issue_per_l1_miss.add(0, l1_miss as u64);
                if l1_miss {
                    global.l2_miss.add((level == HitLevel::Dram) as u64, 1);
                }
                if self.long_latency_pc.len() <= pc {
                    self.long_latency_pc.resize(pc + 1, false);
                }
                self.long_latency_pc[pc] = l1_miss;
                let lat = lat * factor;
                global.global_latency.add(lat as u64, 1);
                stats.l1_hits += self.l1.hits - l1_before.0;
                stats.l1_misses += self.l1.misses - l1_before.1;
                stats.l2_hits += mem.l2.hits - l2_before.0;
                stats.l2_misses += mem.l2.misses - l2_before.1;
                stats.global_accesses += 1;
                stats.global_latency_sum += lat as u64;
                Some(lat)
            }
        };

        let dest = instr.dest;
        let divergent = instr.divergent;
        let w = self.warps[id].as_mut().expect("warp");
        w.pc += 1;
        refresh_next(w, kernel);
        if w.pc == w.len {
            self.retire_pending = true;
        }
        w.issue_count += 1;
        w.split = divergent;
        if kind == InstrKind::Barrier {
            w.at_barrier = true;
            w.split = false;
        }
        if let Some(lat) = latency {
            let done = now + lat as u64;
            if let Some(reg) = dest {
                w.scoreboard |= 1u64 << reg;
                self.completions.push(Reverse((done, id, reg)));
            }
            if kind.is_memory() {
                w.inflight_mem += 1;
                self.in_flight_mem.push((id, done));
                self.next_mem_completion = self.next_mem_completion.min(done);
                global.inflight_mem += 1;
                self.last_mem_tb = Some(tb_id);
            }
        }
        if kind == InstrKind::Barrier {
            self.tbs[tb_slot].as_mut().expect("resident TB").barrier_count += 1;
            self.try_release_barrier(tb_slot);
        }

        self.issue_per_l1_miss.add(1, 0);
        self.alu_per_mem.add(kind.is_alu() as u64, kind.is_memory() as u64);
        stats.instructions += 1;
        stats.issued_by_kind[kind as usize] += 1;
        kind
    }

    pub(crate) fn roll_windows(&mut self) {
        self.l1_miss.roll();
        self.issue_per_l1_miss.roll();
        self.alu_per_mem.roll();
    }
}

fn refresh_next(w: &mut Warp, kernel: &KernelSpec) {
    if w.pc < w.len {
        let instr = &kernel.program(w.tb_id, w.warp_in_tb)[w.pc];
        w.next_kind = instr.kind;
        w.next_mask = instr.operand_mask();
    }
}
