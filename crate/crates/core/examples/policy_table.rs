//! Runs every suite kernel under each baseline policy and both learned
//! configurations, printing cycles per policy.

use std::time::Instant;

use warpsched::sim::{GpuConfig, RunOptions};
use warpsched::workload::{desk_suite, generate, standard_suite};
use warpsched::{run_kernel, PolicySpec};

fn main() -> warpsched::Result<()> {
    let cfg = GpuConfig::default();
    let policies = ["lrr", "gto", "tl", "random", "rlws", "rlws_ms"];
    print!("{:<22}", "kernel");
    for p in policies {
        print!("{p:>12}");
    }
    println!("{:>10}", "secs");
    for template in standard_suite().into_iter().chain(desk_suite()) {
        let kernel = generate(&template)?;
        let start = Instant::now();
        print!("{:<22}", kernel.name);
        for key in policies {
            let out = run_kernel(&cfg, &kernel, &PolicySpec::from_key(key)?, 1, RunOptions::default())?;
            print!("{:>12}", out.stats.cycles);
        }
        println!("{:>10.2}", start.elapsed().as_secs_f64());
    }
    Ok(())
}
