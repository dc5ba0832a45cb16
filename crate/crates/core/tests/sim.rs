use std::collections::HashMap;

use proptest::prelude::*;
use warpsched::sched::{Lrr, SchedulerPolicy};
use warpsched::sim::{
    AccessPattern, Gpu, GpuConfig, InstrKind, Instruction, IssueEvent, LocalityTag, Outcome, RunOptions,
    SimOutcome, SLOTS_PER_SM,
};
use warpsched::workload::{generate, template, KernelSpec, KernelTemplate, Mix, TbResources};
use warpsched::{run_kernel, Error, PolicySpec};

const TRACE: RunOptions = RunOptions { record_trace: true };

fn run(cfg: &GpuConfig, kernel: &KernelSpec, policy: &str) -> SimOutcome {
    run_kernel(cfg, kernel, &PolicySpec::from_key(policy).unwrap(), 11, TRACE).unwrap()
}

fn small_template(tbs: usize, wpt: usize, instrs: usize, mem: f64, barrier: Option<usize>, seed: u64) -> KernelTemplate {
    let mut t = template("mem_reuse").unwrap();
    t.name = "prop".into();
    t.num_tbs = tbs;
    t.warps_per_tb = wpt;
    t.instr_count = instrs;
    t.mix = Mix {
        sp: 0.85 - mem,
        sfu: 0.1,
        global_mem: mem,
        stc_mem: 0.05,
    };
    t.barrier_every = barrier;
    t.seed = seed;
    t
}

/// Every issued instruction of every warp, in issue order, obeys the SM's
/// per-cycle limits and barrier semantics.
fn check_trace(cfg: &GpuConfig, kernel: &KernelSpec, trace: &[IssueEvent]) {
    let mut per_cycle: HashMap<(u64, usize), (u32, u32, [u32; SLOTS_PER_SM])> = HashMap::new();
    for e in trace {
        if let Outcome::Issue { kind, .. } = e.outcome {
            let c = per_cycle.entry((e.cycle, e.sm)).or_default();
            match kind {
                InstrKind::GlobalMem | InstrKind::StcMem => c.0 += 1,
                InstrKind::Sfu => c.1 += 1,
                _ => {}
            }
            c.2[e.slot] += 1;
        }
    }
    for (&(cycle, sm), &(mem, sfu, slots)) in &per_cycle {
        assert!(mem <= cfg.mem_issue_per_cycle, "cycle {cycle} sm {sm}: {mem} memory issues");
        assert!(sfu <= cfg.sfu_issue_per_cycle, "cycle {cycle} sm {sm}: {sfu} SFU issues");
        assert!(slots.iter().all(|&s| s <= 1), "cycle {cycle} sm {sm}: slot issued twice");
    }

    // Warps of a TB share instruction kinds; barrier k of a TB releases only
    // after all its warps reached it. Positions are trace indices, which
    // order issues within a cycle.
    let mut bar_pos: HashMap<usize, HashMap<usize, Vec<usize>>> = HashMap::new();
    let mut pcs: HashMap<(usize, usize), usize> = HashMap::new();
    let mut after_barrier: Vec<(usize, usize, usize, usize)> = Vec::new();
    for (pos, e) in trace.iter().enumerate() {
        if let Outcome::Issue { warp, tb, kind } = e.outcome {
            let pc = pcs.entry((tb, warp)).or_default();
            assert_eq!(kernel.program(tb, 0)[*pc].kind, kind, "warp issued out of program order");
            *pc += 1;
            let bars = bar_pos.entry(tb).or_default().entry(warp).or_default();
            if kind == InstrKind::Barrier {
                bars.push(pos);
            } else if !bars.is_empty() && *pc == kernel.program(tb, 0)[..*pc].iter().rposition(|i| i.kind == InstrKind::Barrier).unwrap_or(usize::MAX) + 2 {
                after_barrier.push((tb, warp, bars.len(), pos));
            }
        }
    }
    for (tb, warps) in &bar_pos {
        assert_eq!(warps.len(), kernel.warps_per_tb, "TB {tb}: every warp issues");
    }
    for &(tb, w, k, pos) in &after_barrier {
        let latest = bar_pos[&tb].values().map(|v| v.get(k - 1).copied().unwrap_or(usize::MAX)).max().unwrap();
        assert!(pos > latest, "TB {tb} warp {w} passed barrier {k} at event {pos} before all arrived (event {latest})");
    }
}

fn invariants(cfg: &GpuConfig, kernel: &KernelSpec, o: &SimOutcome) {
    let total = kernel.total_instructions();
    assert_eq!(o.warp_issue_total, total);
    assert_eq!(o.retired_instructions, total);
    assert_eq!(o.stats.instructions, total);
    assert_eq!(
        o.stats.instructions + o.stats.total_stalls(),
        o.stats.cycles * (cfg.num_sms * SLOTS_PER_SM) as u64,
        "every slot-cycle is an issue or a classified stall"
    );
    assert_eq!(o.stats.issued_by_kind.iter().sum::<u64>(), total);
}

#[test]
fn standard_kernels_keep_invariants_under_every_baseline() {
    let cfg = GpuConfig::desk();
    for name in ["barrier_heavy", "divergent", "stc_heavy"] {
        let mut t = template(name).unwrap();
        t.num_tbs = 12;
        let k = generate(&t).unwrap();
        for p in ["lrr", "gto", "tl", "random"] {
            let o = run(&cfg, &k, p);
            invariants(&cfg, &k, &o);
            check_trace(&cfg, &k, &o.trace);
        }
    }
}

#[test]
fn runs_are_deterministic() {
    let cfg = GpuConfig::desk();
    let k = generate(&small_template(16, 4, 60, 0.3, Some(20), 3)).unwrap();
    for p in ["random", "rlws", "rlws_ms"] {
        let a = run(&cfg, &k, p);
        let b = run(&cfg, &k, p);
        assert_eq!(a.stats, b.stats, "{p}");
        assert_eq!(a.trace, b.trace, "{p}");
    }
}

#[test]
fn allocation_respects_capacity() {
    let cfg = GpuConfig::default();
    let prog = vec![Instruction::new(InstrKind::Sp).with_dest(1); 4];
    let res = TbResources {
        registers: 1024,
        shared_mem: 0,
    };
    let mut lrr: Vec<Box<dyn SchedulerPolicy>> = (0..cfg.num_sms).map(|_| Box::new(Lrr::new()) as _).collect();

    // 8 warps per TB: 48 / 8 = 6 TBs per SM, 90 across 15 SMs.
    let k = KernelSpec::uniform("alloc", 257, 8, res, prog.clone());
    let mut gpu = Gpu::new(&cfg, &k, RunOptions::default()).unwrap();
    gpu.step_cycle(&mut lrr).unwrap();
    assert_eq!(gpu.resident_tbs(), 90);
    assert_eq!(gpu.queued_tbs(), 257 - 90);
    let o = gpu.run(&mut lrr).unwrap();
    assert_eq!(o.retired_instructions, k.total_instructions());

    let one = KernelSpec::uniform("one", 1, 1, res, prog.clone());
    let o = run(&cfg, &one, "lrr");
    assert_eq!(o.stats.instructions, 4);

    // A TB that needs the whole register file: one per SM.
    let full = KernelSpec::uniform(
        "full",
        40,
        2,
        TbResources {
            registers: cfg.registers_per_sm,
            shared_mem: 0,
        },
        prog.clone(),
    );
    let mut gpu = Gpu::new(&cfg, &full, RunOptions::default()).unwrap();
    gpu.step_cycle(&mut lrr).unwrap();
    assert_eq!(gpu.resident_tbs(), 15);

    let too_big = KernelSpec::uniform(
        "too_big",
        1,
        2,
        TbResources {
            registers: cfg.registers_per_sm + 1,
            shared_mem: 0,
        },
        prog,
    );
    assert!(matches!(Gpu::new(&cfg, &too_big, RunOptions::default()), Err(Error::Unschedulable(_))));
}

fn load(region: u16, ordinal: u32, pattern: AccessPattern, dest: u8) -> Instruction {
    Instruction::new(InstrKind::GlobalMem).with_dest(dest).with_locality(LocalityTag {
        pattern,
        region,
        ordinal,
    })
}

#[test]
fn second_access_to_a_line_hits_l1() {
    let cfg = GpuConfig::desk();
    let reuse = AccessPattern::Reuse { window: 1 };
    let prog = vec![
        load(0, 0, reuse, 1),
        Instruction::new(InstrKind::Sp).with_dest(2).with_srcs(&[1]),
        load(0, 1, reuse, 3),
    ];
    let k = KernelSpec::uniform("hit", 1, 1, TbResources { registers: 0, shared_mem: 0 }, prog);
    let o = run(&cfg, &k, "lrr");
    assert_eq!((o.stats.l1_misses, o.stats.l1_hits), (1, 1));
    let miss = cfg.l1.latency + cfg.l2.latency + cfg.dram_latency;
    assert_eq!(o.stats.global_latency_sum, (miss + cfg.l1.latency) as u64);
}

#[test]
fn full_line_stride_stream_always_misses() {
    let cfg = GpuConfig::desk();
    let stream = AccessPattern::Stream { stride: cfg.l1.line_bytes };
    let prog: Vec<Instruction> = (0..20).map(|i| load(0, i, stream, 1 + (i % 8) as u8)).collect();
    let k = KernelSpec::uniform("stream", 8, 4, TbResources { registers: 0, shared_mem: 0 }, prog);
    let o = run(&cfg, &k, "gto");
    assert_eq!(o.stats.l1_hits, 0);
    assert_eq!(o.stats.l2_hits, 0);
    assert_eq!(o.stats.global_accesses, 8 * 4 * 20);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_kernels_keep_invariants(
        tbs in 1usize..24,
        wpt in 1usize..9,
        instrs in 8usize..60,
        mem in 0.0f64..0.6,
        barrier in proptest::option::of(3usize..8),
        seed in any::<u64>(),
        policy in prop::sample::select(vec!["lrr", "gto", "tl", "random", "rlws", "rlws_ms"]),
    ) {
        let cfg = GpuConfig::desk();
        let k = generate(&small_template(tbs, wpt, instrs, mem, barrier, seed)).unwrap();
        let o = run(&cfg, &k, policy);
        invariants(&cfg, &k, &o);
        check_trace(&cfg, &k, &o.trace);
    }
}
