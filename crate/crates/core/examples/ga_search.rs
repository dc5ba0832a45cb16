//! A short genetic search over the learned scheduler's design space on two
//! desk kernels. Results go to `$WARPSCHED_OUT` or `warpsched-out/ga`.

use std::path::{Path, PathBuf};

use warpsched::experiment::output_dir_override;
use warpsched::ga::{load_kernels, run_search, GaConfig};

fn main() -> warpsched::Result<()> {
    let mut cfg = GaConfig {
        population_size: 16,
        children_per_gen: 12,
        randoms_per_gen: 4,
        elite_count: 4,
        elite_reinjection_period: 3,
        generations: 6,
        ..GaConfig::default()
    };
    cfg.kernels.truncate(2);
    let out = output_dir_override().unwrap_or_else(|| PathBuf::from("warpsched-out/ga"));
    let kernels = load_kernels(&cfg, Path::new("."))?;
    let state = run_search(&cfg, kernels, &out, false, |st| {
        let best_now = st.fitnesses().into_iter().fold(f64::MIN, f64::max);
        println!(
            "generation {} ({:?}): best {best_now:.4}, all-time {:.4}",
            st.generation,
            st.newcomers,
            st.best().fitness
        );
    })?;
    let best = state.best();
    println!("best {} fitness {:.4}", best.genome, best.fitness);
    println!("{}", best.genome.summary(&cfg.palettes));
    println!("files in {}", out.display());
    Ok(())
}
