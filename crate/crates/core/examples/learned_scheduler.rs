//! Run the learned scheduler with decision recording, summarize what it
//! chose and print the final weights of SM 0.

use warpsched::experiment::summarize_decisions;
use warpsched::rlws::{theta_to_text, RlwsConfig};
use warpsched::sim::{GpuConfig, RunOptions};
use warpsched::workload::{generate, template};
use warpsched::{run_kernel, PolicySpec};

fn main() -> warpsched::Result<()> {
    let mut cfg = RlwsConfig::rlws();
    cfg.record_decisions = true;
    let kernel = generate(&template("desk_stream64").expect("built-in template"))?;
    let out = run_kernel(&GpuConfig::desk(), &kernel, &PolicySpec::Rlws(cfg.clone()), 3, RunOptions::default())?;

    println!("{} cycles, {} updates", out.stats.cycles, out.extras.updates);
    print!("{}", summarize_decisions(&out.decisions));
    println!("first decisions:");
    for d in out.decisions.iter().take(5) {
        println!("  {d}");
    }
    println!("weights of SM 0:");
    print!("{}", theta_to_text(&out.thetas[0], &cfg));
    Ok(())
}
