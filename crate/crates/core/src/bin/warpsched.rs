use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use warpsched::experiment::{self, ExperimentConfig, OUTPUT_ENV};
use warpsched::ga::{self, GaConfig};
use warpsched::workload::{self, KernelTemplate};
use warpsched::{Error, Result};

/// Warp-scheduling simulator, learned scheduler and design-space search.
#[derive(Parser)]
#[command(name = "warpsched", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate kernel files from built-in or custom templates.
    Gen(GenArgs),
    /// Simulate every kernel × policy × seed cell and write runs.csv.
    Run(RunArgs),
    /// Run (or load) a matrix and report speedups over a baseline.
    Compare(CompareArgs),
    /// Genetic search over the learned scheduler's design space.
    Ga {
        #[command(subcommand)]
        command: GaCommand,
    },
    /// Summarize a decision log or an issue-event log.
    InspectLog { file: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Standard,
    Memory,
    Desk,
}

#[derive(Args)]
struct GenArgs {
    /// Built-in template names.
    #[arg(long = "template")]
    templates: Vec<String>,
    /// Every template of a built-in suite.
    #[arg(long, value_enum)]
    suite: Option<Suite>,
    /// Template definitions in TOML.
    #[arg(long = "template-file")]
    template_files: Vec<PathBuf>,
    /// Mix this seed into each template's generation seed.
    #[arg(long)]
    seed: Option<u64>,
    /// List the built-in templates and exit.
    #[arg(long)]
    list: bool,
    #[arg(long, env = OUTPUT_ENV, default_value = "kernels")]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; falls back to the environment, then the config.
    #[arg(long, env = OUTPUT_ENV)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Experiment to run.
    #[arg(long, required_unless_present = "runs", conflicts_with = "runs")]
    config: Option<PathBuf>,
    /// Existing runs.csv to compare instead of simulating.
    #[arg(long)]
    runs: Option<PathBuf>,
    /// Overrides the configured baseline policy.
    #[arg(long)]
    baseline: Option<String>,
    #[arg(long, env = OUTPUT_ENV)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum GaCommand {
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, env = OUTPUT_ENV)]
        out: PathBuf,
        /// Continue from the checkpoint in the output directory.
        #[arg(long)]
        resume: bool,
    },
}

fn base_dir(config: &Path) -> PathBuf {
    config.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn gen(a: GenArgs) -> Result<()> {
    if a.list {
        for name in workload::template_names() {
            println!("{name}");
        }
        return Ok(());
    }
    let mut templates: Vec<KernelTemplate> = Vec::new();
    for name in &a.templates {
        templates.push(workload::template(name).ok_or_else(|| {
            Error::Config(format!(
                "unknown template `{name}`; valid templates: {}",
                workload::template_names().join(", ")
            ))
        })?);
    }
    templates.extend(match a.suite {
        Some(Suite::Standard) => workload::standard_suite(),
        Some(Suite::Memory) => workload::memory_suite(),
        Some(Suite::Desk) => workload::desk_suite(),
        None => Vec::new(),
    });
    for f in &a.template_files {
        templates.push(KernelTemplate::from_toml(&read(f)?).map_err(|e| Error::Config(format!("{}: {e}", f.display())))?);
    }
    if templates.is_empty() {
        return Err(Error::Config("nothing to generate: pass --template, --suite or --template-file".into()));
    }
    std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    for mut t in templates {
        if let Some(s) = a.seed {
            t.seed = warpsched::seed::derive(t.seed, s);
        }
        let kernel = workload::generate(&t)?;
        let path = a.out.join(format!("{}.kernel", t.name));
        workload::save(&kernel, &path)?;
        println!(
            "{} ({} TBs, {} warps, {} instructions)",
            path.display(),
            kernel.num_tbs(),
            kernel.total_warps(),
            kernel.total_instructions()
        );
    }
    Ok(())
}

fn out_dir(flag: Option<PathBuf>, cfg: &ExperimentConfig, base: &Path) -> PathBuf {
    flag.unwrap_or_else(|| base.join(cfg.effective_output_dir()))
}

fn run(a: RunArgs) -> Result<()> {
    let cfg = ExperimentConfig::load(&a.config)?;
    let base = base_dir(&a.config);
    let out = out_dir(a.out, &cfg, &base);
    let cells = experiment::run(&cfg, &base)?;
    for c in &cells {
        let s = &c.stats;
        println!("{} {} seed={} cycles={} ipc={:.4}", s.kernel, s.policy, s.seed, s.cycles, s.ipc);
    }
    for f in experiment::emit(&out, &cells, None, cfg.export_theta)? {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn compare(a: CompareArgs) -> Result<()> {
    if let Some(runs) = &a.runs {
        let stats = experiment::read_runs_csv(runs)?;
        let baseline = a.baseline.as_deref().unwrap_or("lrr");
        let c = experiment::compare(&stats, baseline)?;
        print!("{}", experiment::render_table(&c));
        if let Some(out) = a.out {
            std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            for (name, text) in [
                (experiment::SPEEDUPS_FILE, experiment::speedups_csv(&c)),
                (experiment::RANKS_FILE, experiment::ranks_csv(&c)),
                (experiment::SPEEDUPS_DAT_FILE, experiment::speedups_dat(&c)),
            ] {
                let path = out.join(name);
                std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
                println!("wrote {}", path.display());
            }
        }
        return Ok(());
    }
    let path = a.config.expect("clap enforces --config or --runs");
    let mut cfg = ExperimentConfig::load(&path)?;
    if let Some(b) = a.baseline {
        cfg.baseline = b;
    }
    let base = base_dir(&path);
    let out = out_dir(a.out, &cfg, &base);
    let report = experiment::run_and_compare(&cfg, &base, &out)?;
    print!("{}", experiment::render_table(&report.comparison));
    for f in &report.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn ga_run(config: PathBuf, out: PathBuf, resume: bool) -> Result<()> {
    let cfg = GaConfig::from_toml(&read(&config)?).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", config.display())),
        e => e,
    })?;
    let kernels = ga::load_kernels(&cfg, &base_dir(&config))?;
    let state = ga::run_search(&cfg, kernels, &out, resume, |st| {
        let f = st.fitnesses();
        let mean = f.iter().sum::<f64>() / f.len() as f64;
        println!(
            "generation {:>3}  best {:.4}  mean {:.4}  all-time best {:.4}",
            st.generation,
            f.iter().cloned().fold(f64::MIN, f64::max),
            mean,
            st.best().fitness
        );
    })?;
    println!("best genome {} fitness {:.4}", state.best().genome, state.best().fitness);
    println!("{}", state.best().genome.summary(&cfg.palettes));
    println!("results in {}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Run(a) => run(a),
        Command::Compare(a) => compare(a),
        Command::Ga {
            command: GaCommand::Run { config, out, resume },
        } => ga_run(config, out, resume),
        Command::InspectLog { file } => experiment::inspect_log(&file).map(|s| print!("{s}")),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
