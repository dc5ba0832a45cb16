use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{SchedulerPolicy, SchedulerView};
use crate::error::Result;
use crate::sim::{ReadyWarp, WarpId};

/// Uniform choice over the ready set.
pub fn random_pick<R: Rng>(ready: &[ReadyWarp], rng: &mut R) -> Option<WarpId> {
    if ready.is_empty() {
        None
    } else {
        Some(ready[rng.gen_range(0..ready.len())].warp)
    }
}

/// Control policy: issues a uniformly random ready warp.
pub struct RandomPolicy {
    rng: ChaCha8Rng,
}

impl RandomPolicy {
    pub fn new(seed: u64) -> Self {
        RandomPolicy {
            rng: crate::seed::rng(seed),
        }
    }
}

impl SchedulerPolicy for RandomPolicy {
    fn name(&self) -> &str {
        "random"
    }

    fn pick(&mut self, view: &SchedulerView<'_>) -> Result<Option<WarpId>> {
        Ok(random_pick(view.ready, &mut self.rng))
    }
}
