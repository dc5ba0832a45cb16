use super::{SchedulerPolicy, SchedulerView};
use crate::error::Result;
use crate::sim::{ReadyWarp, WarpId, SLOTS_PER_SM};

/// First ready warp strictly after `last_issued` in cyclic warp-id order.
/// `ready` must be sorted by warp id.
pub fn lrr_pick(ready: &[ReadyWarp], last_issued: Option<WarpId>) -> Option<WarpId> {
    let first = ready.first()?.warp;
    match last_issued {
        None => Some(first),
        Some(last) => Some(
            ready
                .iter()
                .find(|r| r.warp > last)
                .map_or(first, |r| r.warp),
        ),
    }
}

/// Loose round robin.
#[derive(Debug, Default)]
pub struct Lrr {
    last: [Option<WarpId>; SLOTS_PER_SM],
}

impl Lrr {
    pub fn new() -> Self {
        Self::default()
    }
}

impl SchedulerPolicy for Lrr {
    fn name(&self) -> &str {
        "lrr"
    }

    fn pick(&mut self, view: &SchedulerView<'_>) -> Result<Option<WarpId>> {
        let pick = lrr_pick(view.ready, self.last[view.slot]);
        if pick.is_some() {
            self.last[view.slot] = pick;
        }
        Ok(pick)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sched::testutil::ready;

    #[test]
    fn picks_next_after_last() {
        assert_eq!(lrr_pick(&ready(&[0, 2, 4]), Some(0)), Some(2));
        assert_eq!(lrr_pick(&ready(&[0, 2, 4]), Some(4)), Some(0));
        assert_eq!(lrr_pick(&ready(&[0, 2, 4]), None), Some(0));
    }

    #[test]
    fn wraps_to_itself() {
        assert_eq!(lrr_pick(&ready(&[0]), Some(0)), Some(0));
    }

    #[test]
    fn empty_is_none() {
        assert_eq!(lrr_pick(&[], Some(3)), None);
    }
}
