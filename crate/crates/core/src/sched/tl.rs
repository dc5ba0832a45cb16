use super::{lrr_pick, SchedulerPolicy, SchedulerView};
use crate::error::Result;
use crate::sim::{ReadyWarp, WarpId, SLOTS_PER_SM};

/// Two-level scheduler state for one slot. Fetch groups partition the slot's
/// warp positions (`warp_id / 2`) into runs of `fetch_group_size`.
#[derive(Debug, Clone)]
pub struct TlState {
    pub fetch_group_size: usize,
    pub num_groups: usize,
    pub active_group: usize,
    pub last_issued: Option<WarpId>,
    pub switches: u64,
}

impl TlState {
    pub fn new(fetch_group_size: usize, warps_per_slot: usize) -> Self {
        let fetch_group_size = fetch_group_size.max(1);
        TlState {
            fetch_group_size,
            num_groups: warps_per_slot.div_ceil(fetch_group_size).max(1),
            active_group: 0,
            last_issued: None,
            switches: 0,
        }
    }

    pub fn group_of(&self, warp: WarpId) -> usize {
        ((warp / SLOTS_PER_SM) / self.fetch_group_size).min(self.num_groups - 1)
    }
}

/// Round robin inside the active fetch group; when that group has nothing
/// ready, switch to the next group (cyclically) that does.
pub fn tl_pick(ready: &[ReadyWarp], state: &mut TlState) -> Option<WarpId> {
    if ready.is_empty() {
        return None;
    }
    let mut group_ready: Vec<ReadyWarp> = Vec::with_capacity(ready.len());
    for step in 0..state.num_groups {
        let g = (state.active_group + step) % state.num_groups;
        group_ready.clear();
        group_ready.extend(ready.iter().filter(|r| state.group_of(r.warp) == g));
        if let Some(w) = lrr_pick(&group_ready, state.last_issued) {
            if step > 0 {
                state.active_group = g;
                state.switches += 1;
            }
            state.last_issued = Some(w);
            return Some(w);
        }
    }
    unreachable!("a ready warp belongs to some group")
}

pub struct TwoLevel {
    slots: [TlState; SLOTS_PER_SM],
}

impl TwoLevel {
    pub fn new(fetch_group_size: usize, warps_per_slot: usize) -> Self {
        let s = TlState::new(fetch_group_size, warps_per_slot);
        TwoLevel {
            slots: [s.clone(), s],
        }
    }
}

impl SchedulerPolicy for TwoLevel {
    fn name(&self) -> &str {
        "tl"
    }

    fn pick(&mut self, view: &SchedulerView<'_>) -> Result<Option<WarpId>> {
        Ok(tl_pick(view.ready, &mut self.slots[view.slot]))
    }

    fn extras(&self) -> super::PolicyExtras {
        super::PolicyExtras {
            group_switches: self.slots.iter().map(|s| s.switches).sum(),
            ..Default::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sched::testutil::ready;

    #[test]
    fn stays_in_active_group() {
        // Group size 2 over slot-0 warps: group 0 = {0, 2}, group 1 = {4, 6}.
        let mut st = TlState::new(2, 24);
        assert_eq!(tl_pick(&ready(&[2, 4, 6]), &mut st), Some(2));
        assert_eq!(st.active_group, 0);
    }

    #[test]
    fn switches_when_group_stalls() {
        let mut st = TlState::new(2, 24);
        assert_eq!(tl_pick(&ready(&[4, 6]), &mut st), Some(4));
        assert_eq!(st.active_group, 1);
        assert_eq!(st.switches, 1);
        // Group 1 keeps priority even once group 0 is ready again.
        assert_eq!(tl_pick(&ready(&[0, 6]), &mut st), Some(6));
    }

    #[test]
    fn single_group_is_lrr() {
        let mut st = TlState::new(24, 24);
        let mut last = None;
        for set in [&[0, 2, 4][..], &[0, 4], &[2], &[0, 2, 4, 6]] {
            let r = ready(set);
            let expect = lrr_pick(&r, last);
            assert_eq!(tl_pick(&r, &mut st), expect);
            last = expect;
        }
        assert_eq!(st.switches, 0);
    }
}
