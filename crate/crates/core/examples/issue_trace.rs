//! Record the per-slot issue trace of a barrier-heavy kernel under GTO and
//! two-level scheduling and summarize the stall causes.

use warpsched::experiment::inspect::summarize_events;
use warpsched::sim::{GpuConfig, RunOptions};
use warpsched::workload::{generate, template};
use warpsched::{run_kernel, PolicySpec};

fn main() -> warpsched::Result<()> {
    let mut t = template("barrier_heavy").expect("built-in template");
    t.num_tbs = 8;
    let kernel = generate(&t)?;
    for key in ["gto", "tl"] {
        let o = run_kernel(&GpuConfig::desk(), &kernel, &PolicySpec::from_key(key)?, 1, RunOptions { record_trace: true })?;
        println!("{key}: {} cycles", o.stats.cycles);
        print!("{}", summarize_events(&o.trace));
        for e in o.trace.iter().take(4) {
            println!("  {e}");
        }
    }
    Ok(())
}
