use std::collections::VecDeque;

use super::config::{GpuConfig, SLOTS_PER_SM};
use super::memory::{GlobalCounters, MemorySystem};
use super::sm::{SlotScan, SmState};
use super::trace::{IssueEvent, Outcome, SimStats, StallCause};
use crate::error::{Error, Result};
use crate::rlws::DecisionRecord;
use crate::sched::{contains, PolicyExtras, SchedulerPolicy, SchedulerView};
use crate::workload::KernelSpec;

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub record_trace: bool,
}

#[derive(Debug, Clone, Default)]
pub struct SimOutcome {
    pub stats: SimStats,
    pub trace: Vec<IssueEvent>,
    pub extras: PolicyExtras,
    pub decisions: Vec<DecisionRecord>,
    /// Final learned weights per SM, for policies that learn.
    pub thetas: Vec<Vec<f64>>,
    /// Sum of per-warp issue counts over retired warps.
    pub warp_issue_total: u64,
    /// Sum of program lengths over retired warps.
    pub retired_instructions: u64,
}

/// Classifies a slot cycle in which nothing issued.
pub fn classify_stall(scan: &SlotScan) -> StallCause {
    if !scan.ready.is_empty() {
        StallCause::NoInstr
    } else if scan.blocked_by_pipeline() > 0 {
        StallCause::Structural
    } else if scan.waiting_operands > 0 {
        StallCause::Dependency
    } else if scan.at_barrier > 0 {
        StallCause::Barrier
    } else {
        StallCause::Idle
    }
}

/// Maximum TBs of `kernel` one SM can hold at once.
pub fn tbs_per_sm(cfg: &GpuConfig, kernel: &KernelSpec) -> Result<usize> {
    let r = kernel.resources;
    let by_warps = cfg.max_warps_per_sm / kernel.warps_per_tb.max(1);
    let by_regs = if r.registers == 0 {
        usize::MAX
    } else {
        (cfg.registers_per_sm / r.registers) as usize
    };
    let by_smem = if r.shared_mem == 0 {
        usize::MAX
    } else {
        (cfg.shared_mem_per_sm / r.shared_mem) as usize
    };
    let n = cfg.max_tbs_per_sm.min(by_warps).min(by_regs).min(by_smem);
    if n == 0 {
        return Err(Error::Unschedulable(format!(
            "TB demand ({} warps, {} registers, {} B shared) exceeds SM capacity ({} warps, {} registers, {} B shared)",
            kernel.warps_per_tb,
            r.registers,
            r.shared_mem,
            cfg.max_warps_per_sm,
            cfg.registers_per_sm,
            cfg.shared_mem_per_sm
        )));
    }
    Ok(n)
}

/// Cycle-level model of the whole GPU running one kernel.
pub struct Gpu<'k> {
    cfg: GpuConfig,
    kernel: &'k KernelSpec,
    pub sms: Vec<SmState>,
    pub memory: MemorySystem,
    pub global: GlobalCounters,
    queue: VecDeque<usize>,
    cycle: u64,
    pub stats: SimStats,
    trace: Option<Vec<IssueEvent>>,
    scan: SlotScan,
}

impl<'k> Gpu<'k> {
    /// Launches `kernel`: validates inputs and performs the initial TB
    /// allocation, round robin over SMs until no SM can take another TB.
    pub fn new(cfg: &GpuConfig, kernel: &'k KernelSpec, options: RunOptions) -> Result<Self> {
        cfg.validate()?;
        kernel.validate()?;
        tbs_per_sm(cfg, kernel)?;
        let mut gpu = Gpu {
            cfg: cfg.clone(),
            kernel,
            sms: (0..cfg.num_sms).map(|i| SmState::new(i, cfg)).collect(),
            memory: MemorySystem::new(cfg),
            global: GlobalCounters::default(),
            queue: (0..kernel.num_tbs()).collect(),
            cycle: 0,
            stats: SimStats::default(),
            trace: options.record_trace.then(Vec::new),
            scan: SlotScan::default(),
        };
        loop {
            let mut progress = false;
            for i in 0..gpu.sms.len() {
                if gpu.admit_one(i) {
                    progress = true;
                }
            }
            if !progress {
                break;
            }
        }
        gpu.global.tb_queue_len = gpu.queue.len();
        Ok(gpu)
    }

    pub fn config(&self) -> &GpuConfig {
        &self.cfg
    }

    pub fn kernel(&self) -> &KernelSpec {
        self.kernel
    }

    pub fn cycle(&self) -> u64 {
        self.cycle
    }

    pub fn queued_tbs(&self) -> usize {
        self.queue.len()
    }

    pub fn resident_tbs(&self) -> usize {
        self.sms.iter().map(|s| s.resident_tb_count()).sum()
    }

    pub fn is_done(&self) -> bool {
        self.queue.is_empty() && self.sms.iter().all(|s| s.is_empty())
    }

    pub fn trace(&self) -> Option<&[IssueEvent]> {
        self.trace.as_deref()
    }

    fn fits(&self, sm: &SmState) -> bool {
        let r = self.kernel.resources;
        sm.resident_tb_count() < self.cfg.max_tbs_per_sm
            && sm.warps_used() + self.kernel.warps_per_tb <= self.cfg.max_warps_per_sm
            && sm.registers_used + r.registers <= self.cfg.registers_per_sm
            && sm.shared_mem_used + r.shared_mem <= self.cfg.shared_mem_per_sm
    }

    fn admit_one(&mut self, sm: usize) -> bool {
        if self.queue.is_empty() || !self.fits(&self.sms[sm]) {
            return false;
        }
        let tb = self.queue.pop_front().expect("nonempty queue");
        self.sms[sm].admit_tb(tb, self.kernel);
        true
    }

    /// Advances one cycle. Returns `Ok(true)` once the kernel has completed
    /// (in which case no cycle was consumed).
    pub fn step_cycle(&mut self, policies: &mut [Box<dyn SchedulerPolicy>]) -> Result<bool> {
        assert_eq!(policies.len(), self.sms.len(), "one policy per SM");
        let now = self.cycle;
        if now > 0 && now % self.cfg.stats_window == 0 {
            self.global.l2_miss.roll();
            self.global.global_latency.roll();
            for sm in &mut self.sms {
                sm.roll_windows();
            }
        }

        for i in 0..self.sms.len() {
            let completed = self.sms[i].apply_completions(now);
            self.global.inflight_mem -= completed;
            let (retired, _) = self.sms[i].retire(self.kernel);
            if retired > 0 {
                while self.admit_one(i) {}
            }
        }
        self.global.tb_queue_len = self.queue.len();
        if self.is_done() {
            return Ok(true);
        }
        if now >= self.cfg.max_cycles {
            return Err(Error::SimFault(format!(
                "kernel `{}` did not finish within {} cycles",
                self.kernel.name, self.cfg.max_cycles
            )));
        }

        for i in 0..self.sms.len() {
            self.sms[i].reset_budgets(&self.cfg);
            for slot in 0..SLOTS_PER_SM {
                let outcome = self.schedule_slot(i, slot, policies[i].as_mut())?;
                if let Outcome::Stall(cause) = outcome {
                    self.sms[i].stall_counters[cause.index()] += 1;
                    self.stats.stalls[cause.index()] += 1;
                }
                if let Some(trace) = self.trace.as_mut() {
                    trace.push(IssueEvent {
                        cycle: now,
                        sm: i,
                        slot,
                        outcome,
                    });
                }
            }
        }
        self.cycle += 1;
        self.stats.cycles = self.cycle;
        Ok(false)
    }

    fn schedule_slot(
        &mut self,
        sm_idx: usize,
        slot: usize,
        policy: &mut dyn SchedulerPolicy,
    ) -> Result<Outcome> {
        let mut scan = std::mem::take(&mut self.scan);
        let sm = &self.sms[sm_idx];
        sm.scan_slot(slot, self.kernel, &mut scan);
        if scan.with_instruction == 0 {
            self.scan = scan;
            return Ok(Outcome::Stall(StallCause::Idle));
        }
        let view = SchedulerView {
            cycle: self.cycle,
            slot,
            ready: &scan.ready,
            scan: &scan,
            sm,
            global: &self.global,
            config: &self.cfg,
            kernel: self.kernel,
        };
        let pick = policy.pick(&view)?;
        let outcome = match pick {
            None => Outcome::Stall(classify_stall(&scan)),
            Some(w) => {
                if !contains(&scan.ready, w) {
                    return Err(Error::SimFault(format!(
                        "policy `{}` picked warp {w} outside the ready set on SM {sm_idx} slot {slot} at cycle {}",
                        policy.name(),
                        self.cycle
                    )));
                }
                let tb = self.sms[sm_idx].warp(w).expect("ready warp").tb_id;
                let kind = self.sms[sm_idx].issue(
                    w,
                    slot,
                    self.cycle,
                    self.kernel,
                    &self.cfg,
                    &mut self.memory,
                    &mut self.global,
                    &mut self.stats,
                );
                Outcome::Issue { warp: w, tb, kind }
            }
        };
        self.scan = scan;
        Ok(outcome)
    }

    /// Runs the kernel to completion.
    pub fn run(mut self, policies: &mut [Box<dyn SchedulerPolicy>]) -> Result<SimOutcome> {
        while !self.step_cycle(policies)? {}
        let mut extras = PolicyExtras::default();
        let mut decisions = Vec::new();
        let mut thetas = Vec::new();
        for p in policies.iter_mut() {
            extras.merge(&p.extras());
            decisions.extend(p.take_decisions());
            thetas.extend(p.theta_snapshot());
        }
        Ok(SimOutcome {
            warp_issue_total: self.sms.iter().map(|s| s.retired_issues).sum(),
            retired_instructions: self.sms.iter().map(|s| s.retired_instructions).sum(),
            stats: self.stats,
            trace: self.trace.unwrap_or_default(),
            extras,
            decisions,
            thetas,
        })
    }
}
