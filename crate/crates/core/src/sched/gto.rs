use super::{contains, oldest, SchedulerPolicy, SchedulerView};
use crate::error::Result;
use crate::sim::{ReadyWarp, WarpId, SLOTS_PER_SM};

/// Greedy-then-oldest: keep the greedy warp while it is ready, otherwise fall
/// back to the oldest ready warp (which becomes the new greedy warp).
pub fn gto_pick(ready: &[ReadyWarp], greedy: Option<WarpId>) -> Option<WarpId> {
    match greedy {
        Some(g) if contains(ready, g) => Some(g),
        _ => oldest(ready),
    }
}

#[derive(Debug, Default)]
pub struct Gto {
    greedy: [Option<WarpId>; SLOTS_PER_SM],
}

impl Gto {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn greedy(&self, slot: usize) -> Option<WarpId> {
        self.greedy[slot]
    }
}

impl SchedulerPolicy for Gto {
    fn name(&self) -> &str {
        "gto"
    }

    fn pick(&mut self, view: &SchedulerView<'_>) -> Result<Option<WarpId>> {
        let pick = gto_pick(view.ready, self.greedy[view.slot]);
        if pick.is_some() {
            self.greedy[view.slot] = pick;
        }
        Ok(pick)
    }
}
