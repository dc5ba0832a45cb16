//! Compare the pipeline-action learner with the variant whose actions pick a
//! baseline scheduler for the next interval.

use warpsched::rlws::RlwsConfig;
use warpsched::sim::{GpuConfig, RunOptions};
use warpsched::workload::{generate, template};
use warpsched::{run_kernel, PolicySpec};

fn main() -> warpsched::Result<()> {
    let gpu = GpuConfig::desk();
    for name in ["desk_reuse4", "desk_stream128", "barrier_heavy"] {
        let mut t = template(name).expect("built-in template");
        t.num_tbs = t.num_tbs.min(48);
        let kernel = generate(&t)?;
        let lrr = run_kernel(&gpu, &kernel, &PolicySpec::Lrr, 5, RunOptions::default())?.stats.cycles;
        print!("{name:<16} lrr {lrr:>8}");
        for cfg in [RlwsConfig::rlws(), RlwsConfig::rlws_ms()] {
            let o = run_kernel(&gpu, &kernel, &PolicySpec::Rlws(cfg.clone()), 5, RunOptions::default())?;
            print!(
                "  {} {:>8} ({:.3}x, explored {:.3})",
                cfg.name(),
                o.stats.cycles,
                lrr as f64 / o.stats.cycles as f64,
                o.extras.exploration_fraction()
            );
        }
        println!();
    }
    Ok(())
}
