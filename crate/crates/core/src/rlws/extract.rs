use crate::rl::{Attribute, StateAttributes};
use crate::sched::SchedulerView;
use crate::sim::InstrKind;

/// Raw (unclamped) value of one attribute as seen by the view's slot.
///
/// Per-slot counts are rescaled so the slot's warp bound maps to 24.
/// AGML, GNMIE and L2MP read GPU-wide counters; everything else is per SM.
pub fn attribute_value(a: Attribute, view: &SchedulerView<'_>) -> f64 {
    use Attribute::*;
    let scan = view.scan;
    let ready = view.ready;
    let sm = view.sm;
    let count_scale = 24.0 / view.config.warps_per_slot().max(1) as f64;
    let ready_of = |pred: fn(InstrKind) -> bool| ready.iter().filter(|r| pred(r.kind)).count();
    let count = |n: usize| n as f64 * count_scale;
    let flag = |b: bool| b as u8 as f64;

    match a {
        Atbwb => flag(sm.resident_tbs().any(|tb| tb.partially_at_barrier())),
        Atbwf => flag(sm.resident_tbs().any(|tb| tb.partially_finished())),
        Tbw => flag(view.global.tb_queue_len > 0),
        Rlmi => flag(ready.iter().any(|r| {
            r.kind == InstrKind::GlobalMem
                && sm
                    .warp(r.warp)
                    .map_or(false, |w| sm.long_latency_pc.get(w.pc).copied().unwrap_or(false))
        })),
        Rgmi => flag(ready.iter().any(|r| r.kind == InstrKind::GlobalMem)),
        Rstcmi => flag(ready.iter().any(|r| r.kind == InstrKind::StcMem)),
        Rsfi => flag(ready.iter().any(|r| r.kind == InstrKind::Sfu)),
        Rspi => flag(ready.iter().any(|r| r.kind == InstrKind::Sp)),
        Ntf => flag(sm.tbs_finished == 0),
        Niw => count(view.config.warps_per_slot().saturating_sub(scan.with_instruction)),
        Nsw => count(scan.split),
        Nfsfi => count(scan.next_sfu),
        Nfmi => count(scan.next_mem),
        Nrspi => count(ready_of(|k| matches!(k, InstrKind::Sp | InstrKind::Barrier))),
        Nrgmi => count(ready_of(|k| k == InstrKind::GlobalMem)),
        Nrstcmi => count(ready_of(|k| k == InstrKind::StcMem)),
        Nrsfi => count(ready_of(|k| k == InstrKind::Sfu)),
        Nwi => count(scan.waiting_operands),
        Nps => count(scan.blocked_by_pipeline()),
        Nmps => count(scan.blocked_mem),
        Nsfps => count(scan.blocked_sfu),
        Nspps => count(scan.blocked_sp),
        Naipmi => sm.alu_per_mem.value(),
        Nri => count(ready.len()),
        Nws => count(scan.schedulable()),
        Nrai => count(ready_of(|k| k.is_alu())),
        Stbrmi => count(
            ready
                .iter()
                .filter(|r| r.kind.is_memory() && Some(r.tb) == sm.last_mem_tb)
                .count(),
        ),
        Smnmie => sm.in_flight_mem.len() as f64,
        Icmp => 0.0,
        L1mp => sm.l1_miss.value() * 100.0,
        L2mp => view.global.l2_miss.value() * 100.0,
        Nipl1m => sm.issue_per_l1_miss.value(),
        Agml => view.global.global_latency.value(),
        Gnmie => view.global.inflight_mem as f64,
    }
}

/// All 34 attributes, clamped to their ranges.
pub fn extract_attributes(view: &SchedulerView<'_>) -> StateAttributes {
    let mut s = StateAttributes::default();
    for a in Attribute::ALL {
        s.set(a, attribute_value(a, view));
    }
    s
}
