//! Generate one kernel, simulate it under round-robin and under the learned
//! scheduler, and print the speedup.

use warpsched::sim::{GpuConfig, RunOptions};
use warpsched::workload::{generate, template};
use warpsched::{run_kernel, PolicySpec};

fn main() -> warpsched::Result<()> {
    let gpu = GpuConfig::desk();
    let kernel = generate(&template("desk_reuse8").expect("built-in template"))?;
    println!(
        "{}: {} TBs, {} warps, {} instructions",
        kernel.name,
        kernel.num_tbs(),
        kernel.total_warps(),
        kernel.total_instructions()
    );

    let base = run_kernel(&gpu, &kernel, &PolicySpec::Lrr, 7, RunOptions::default())?;
    let learned = run_kernel(&gpu, &kernel, &PolicySpec::from_key("rlws")?, 7, RunOptions::default())?;
    for (name, o) in [("lrr", &base), ("rlws", &learned)] {
        println!(
            "{name:>5}: {} cycles, ipc {:.3}, L1 hit rate {:.3}",
            o.stats.cycles,
            o.stats.ipc(),
            o.stats.l1_hit_rate()
        );
    }
    println!("speedup {:.4}", base.stats.cycles as f64 / learned.stats.cycles as f64);
    Ok(())
}
