//! Run a small kernel × policy × seed matrix from a TOML description and
//! write the report files. Results go to `$WARPSCHED_OUT` or the configured
//! directory.

use std::path::Path;

use warpsched::experiment::{render_table, run_and_compare, ExperimentConfig};

const CONFIG: &str = r#"
seeds = [0, 1]
baseline = "lrr"
output_dir = "warpsched-out/experiment"
decision_logs = true
kernels = [{ template = "desk_reuse4" }, { template = "desk_stream32" }, { template = "desk_random" }]
policies = ["lrr", "gto", "tl", "rlws", { key = "rlws", label = "rlws_i4", decision_interval = 4 }]

[gpu]
num_sms = 2
"#;

fn main() -> warpsched::Result<()> {
    let cfg = ExperimentConfig::from_toml(CONFIG)?;
    let out = cfg.effective_output_dir();
    let report = run_and_compare(&cfg, Path::new("."), &out)?;
    print!("{}", render_table(&report.comparison));
    for (p, hist) in report.comparison.policies.iter().zip(&report.comparison.rank_histogram) {
        println!("{p:>8} ranks {hist:?}");
    }
    for f in &report.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}
