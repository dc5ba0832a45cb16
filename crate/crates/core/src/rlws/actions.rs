use std::fmt;

use crate::sched::{gto_pick, lrr_pick, oldest, youngest, SchedulerView};
use crate::sim::{InstrKind, ReadyWarp, SmState, WarpId};

/// Pipeline-selection actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PipelineAction {
    NoInstr,
    SpInstr,
    SfuInstr,
    GmemInstr,
    StcmemInstr,
}

impl PipelineAction {
    pub const ALL: [PipelineAction; 5] = [
        PipelineAction::NoInstr,
        PipelineAction::SpInstr,
        PipelineAction::SfuInstr,
        PipelineAction::GmemInstr,
        PipelineAction::StcmemInstr,
    ];

    pub fn from_index(i: usize) -> Self {
        Self::ALL[i]
    }

    pub fn name(self) -> &'static str {
        match self {
            PipelineAction::NoInstr => "NO_INSTR",
            PipelineAction::SpInstr => "SP_INSTR",
            PipelineAction::SfuInstr => "SFU_INSTR",
            PipelineAction::GmemInstr => "GMEM_INSTR",
            PipelineAction::StcmemInstr => "STCMEM_INSTR",
        }
    }

    /// Whether a ready warp whose next instruction is `kind` serves this
    /// action. Barriers issue through the SP path.
    pub fn matches(self, kind: InstrKind) -> bool {
        match self {
            PipelineAction::NoInstr => false,
            PipelineAction::SpInstr => matches!(kind, InstrKind::Sp | InstrKind::Barrier),
            PipelineAction::SfuInstr => kind == InstrKind::Sfu,
            PipelineAction::GmemInstr => kind == InstrKind::GlobalMem,
            PipelineAction::StcmemInstr => kind == InstrKind::StcMem,
        }
    }
}

impl fmt::Display for PipelineAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Meta-scheduling actions: each names a warp-selection rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MetaAction {
    Gto,
    Youngest,
    Lrr,
    YoungestBarrier,
    YoungestFinish,
}

impl MetaAction {
    pub const ALL: [MetaAction; 5] = [
        MetaAction::Gto,
        MetaAction::Youngest,
        MetaAction::Lrr,
        MetaAction::YoungestBarrier,
        MetaAction::YoungestFinish,
    ];

    pub fn from_index(i: usize) -> Self {
        Self::ALL[i]
    }

    pub fn name(self) -> &'static str {
        match self {
            MetaAction::Gto => "GTO",
            MetaAction::Youngest => "YOUNGEST",
            MetaAction::Lrr => "LRR",
            MetaAction::YoungestBarrier => "YOUNGEST_BARRIER",
            MetaAction::YoungestFinish => "YOUNGEST_FINISH",
        }
    }
}

impl fmt::Display for MetaAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Bit `i` set when `PipelineAction::ALL[i]` is feasible.
///
/// `ready` already excludes warps whose pipeline budget is exhausted, so an
/// instruction action is feasible iff some ready warp matches it. NO_INSTR is
/// feasible unless it was the previous action and something else is.
pub fn feasible_pipeline_actions(ready: &[ReadyWarp], last_action: Option<PipelineAction>) -> u8 {
    let mut mask = 0u8;
    for r in ready {
        for (i, a) in PipelineAction::ALL.iter().enumerate().skip(1) {
            if a.matches(r.kind) {
                mask |= 1 << i;
            }
        }
    }
    if mask == 0 || last_action != Some(PipelineAction::NoInstr) {
        mask |= 1;
    }
    mask
}

/// The warp that carries out `action`: the last issued warp if it matches,
/// otherwise the oldest matching ready warp.
pub fn resolve_warp(action: PipelineAction, ready: &[ReadyWarp], last_issued: Option<WarpId>) -> Option<WarpId> {
    if action == PipelineAction::NoInstr {
        return None;
    }
    let mut best: Option<&ReadyWarp> = None;
    for r in ready.iter().filter(|r| action.matches(r.kind)) {
        if Some(r.warp) == last_issued {
            return Some(r.warp);
        }
        if best.map_or(true, |b| r.age < b.age) {
            best = Some(r);
        }
    }
    best.map(|r| r.warp)
}

/// Per-slot memory used by the meta actions.
#[derive(Debug, Clone, Copy, Default)]
pub struct MetaSlotState {
    pub last_issued: Option<WarpId>,
}

/// The warp selected by a meta action. Rules whose eligible set is empty
/// fall back to GTO over the whole ready set.
pub fn resolve_meta(action: MetaAction, ready: &[ReadyWarp], sm: &SmState, state: &MetaSlotState) -> Option<WarpId> {
    if ready.is_empty() {
        return None;
    }
    let pick = match action {
        MetaAction::Gto => None,
        MetaAction::Lrr => lrr_pick(ready, state.last_issued),
        MetaAction::Youngest => youngest(ready),
        MetaAction::YoungestBarrier => youngest_where(ready, sm, |tb| tb.barrier_count > 0),
        MetaAction::YoungestFinish => youngest_where(ready, sm, |tb| tb.finished_count > 0),
    };
    pick.or_else(|| gto_pick(ready, state.last_issued))
}

fn youngest_where(
    ready: &[ReadyWarp],
    sm: &SmState,
    pred: impl Fn(&crate::sim::ResidentTb) -> bool,
) -> Option<WarpId> {
    ready
        .iter()
        .filter(|r| sm.warp(r.warp).map_or(false, |w| pred(sm.tb_of(w))))
        .max_by_key(|r| r.age)
        .map(|r| r.warp)
}

/// Greedy-then-oldest pick used when a held action cannot be carried out.
pub fn fallback_pick(view: &SchedulerView<'_>, last_issued: Option<WarpId>) -> Option<WarpId> {
    gto_pick(view.ready, last_issued).or_else(|| oldest(view.ready))
}
