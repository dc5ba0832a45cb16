use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::genome::{crossover, mutate, mutation_probability, select_parent, Genome, Palettes, GENE_COUNT};
use crate::error::{Error, Result};
use crate::policy::{run_kernel, PolicySpec};
use crate::rlws::ActionSet;
use crate::seed;
use crate::sim::{GpuConfig, RunOptions};
use crate::workload::{desk_suite, KernelRef, KernelSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub population_size: usize,
    pub children_per_gen: usize,
    pub randoms_per_gen: usize,
    /// Every this many generations the archive's best genomes replace the
    /// random newcomers.
    pub elite_reinjection_period: usize,
    pub elite_count: usize,
    pub crossover_points: usize,
    pub max_mutations_per_child: usize,
    /// Generations including the initial random one.
    pub generations: usize,
    pub seed: u64,
    /// Policy key whose cycles form the numerator of every speedup.
    pub baseline: String,
    pub kernels: Vec<KernelRef>,
    pub gpu: GpuConfig,
    pub actions: ActionSet,
    pub decision_interval: u32,
    pub mutation_c: f64,
    pub mutation_p_max: f64,
    pub palettes: Palettes,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population_size: 100,
            children_per_gen: 90,
            randoms_per_gen: 10,
            elite_reinjection_period: 10,
            elite_count: 10,
            crossover_points: 1,
            max_mutations_per_child: 1,
            generations: 20,
            seed: 1,
            baseline: "lrr".into(),
            kernels: desk_suite().iter().map(|t| KernelRef::template(&t.name)).collect(),
            gpu: GpuConfig::desk(),
            actions: ActionSet::Pipeline,
            decision_interval: 1,
            mutation_c: 0.02,
            mutation_p_max: 0.25,
            palettes: Palettes::default(),
        }
    }
}

impl GaConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let c: GaConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.children_per_gen + self.randoms_per_gen != self.population_size {
            return bad("children_per_gen + randoms_per_gen must equal population_size");
        }
        if self.population_size == 0 || self.generations == 0 {
            return bad("population_size and generations must be positive");
        }
        if self.elite_count > self.randoms_per_gen {
            return bad("elite_count cannot exceed randoms_per_gen");
        }
        if self.elite_reinjection_period == 0 {
            return bad("elite_reinjection_period must be positive");
        }
        if self.crossover_points != 1 || self.max_mutations_per_child != 1 {
            return bad("only single-point crossover with at most one mutation per child is supported");
        }
        if self.kernels.is_empty() {
            return bad("the fitness suite needs at least one kernel");
        }
        if !(self.mutation_c >= 0.0) || !(0.0..=1.0).contains(&self.mutation_p_max) {
            return bad("mutation_c must be non-negative and mutation_p_max within [0, 1]");
        }
        if self.decision_interval == 0 {
            return bad("decision_interval must be at least 1");
        }
        PolicySpec::from_key(&self.baseline)?;
        self.palettes.validate()?;
        self.gpu.validate()
    }

    /// Fingerprint used to refuse resuming under a different configuration.
    pub fn fingerprint(&self) -> u64 {
        let text = serde_json::to_string(self).expect("config serializes");
        text.bytes().fold(0, |h, b| seed::mix64(h ^ b as u64))
    }
}

/// Simulation-based fitness with a memo table. Each kernel has its own seed
/// derived from the search seed; baseline cycles are computed once.
pub struct FitnessEvaluator {
    gpu: GpuConfig,
    kernels: Vec<KernelSpec>,
    kernel_seeds: Vec<u64>,
    baseline_cycles: Vec<u64>,
    palettes: Palettes,
    actions: ActionSet,
    decision_interval: u32,
    cache: HashMap<Genome, f64>,
    diagnostics: Vec<String>,
}

impl FitnessEvaluator {
    pub fn new(cfg: &GaConfig, kernels: Vec<KernelSpec>) -> Result<Self> {
        let baseline = PolicySpec::from_key(&cfg.baseline)?;
        let kernel_seeds: Vec<u64> = (0..kernels.len()).map(|k| seed::derive(cfg.seed, k as u64)).collect();
        let baseline_cycles = kernels
            .iter()
            .zip(&kernel_seeds)
            .map(|(k, &s)| Ok(run_kernel(&cfg.gpu, k, &baseline, s, RunOptions::default())?.stats.cycles))
            .collect::<Result<Vec<u64>>>()?;
        Ok(FitnessEvaluator {
            gpu: cfg.gpu.clone(),
            kernels,
            kernel_seeds,
            baseline_cycles,
            palettes: cfg.palettes.clone(),
            actions: cfg.actions,
            decision_interval: cfg.decision_interval,
            cache: HashMap::new(),
            diagnostics: Vec::new(),
        })
    }

    pub fn baseline_cycles(&self) -> &[u64] {
        &self.baseline_cycles
    }

    /// Geometric-mean speedup of the decoded agent over the baseline. A
    /// simulation fault yields fitness 0 and a diagnostic.
    pub fn evaluate(&self, genome: &Genome) -> (f64, Option<String>) {
        let policy = PolicySpec::Rlws(genome.decode(&self.palettes, self.actions, self.decision_interval));
        let mut log_sum = 0.0;
        for (k, kernel) in self.kernels.iter().enumerate() {
            match run_kernel(&self.gpu, kernel, &policy, self.kernel_seeds[k], RunOptions::default()) {
                Ok(o) => log_sum += (self.baseline_cycles[k] as f64 / o.stats.cycles.max(1) as f64).ln(),
                Err(e) => return (0.0, Some(format!("genome {genome} on kernel {}: {e}", kernel.name))),
            }
        }
        ((log_sum / self.kernels.len() as f64).exp(), None)
    }

    /// Fitness of every genome, in order. Distinct unseen genomes are
    /// simulated in parallel.
    pub fn evaluate_all(&mut self, genomes: &[Genome]) -> Vec<f64> {
        let mut todo: Vec<&Genome> = Vec::new();
        for g in genomes {
            if !self.cache.contains_key(g) && !todo.contains(&g) {
                todo.push(g);
            }
        }
        let results: Vec<(f64, Option<String>)> = todo.par_iter().map(|g| self.evaluate(g)).collect();
        for (g, (f, diag)) in todo.into_iter().zip(results) {
            self.cache.insert(g.clone(), f);
            self.diagnostics.extend(diag);
        }
        genomes.iter().map(|g| self.cache[g]).collect()
    }

    pub fn take_diagnostics(&mut self) -> Vec<String> {
        std::mem::take(&mut self.diagnostics)
    }

    pub fn cached(&self) -> usize {
        self.cache.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scored {
    pub genome: Genome,
    pub fitness: f64,
}

/// Where a generation's last `randoms_per_gen` members came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Newcomers {
    Initial,
    Random,
    Elite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaState {
    pub generation: usize,
    pub population: Vec<Scored>,
    pub newcomers: Newcomers,
    /// Best distinct genomes seen so far, best first.
    pub archive: Vec<Scored>,
}

impl GaState {
    pub fn best(&self) -> &Scored {
        &self.archive[0]
    }

    pub fn fitnesses(&self) -> Vec<f64> {
        self.population.iter().map(|s| s.fitness).collect()
    }
}

/// Merges a population into the archive: distinct genomes, fitness
/// descending, earlier entries first among equals, at most `size` kept.
pub fn update_archive(archive: &mut Vec<Scored>, population: &[Scored], size: usize) {
    for s in population {
        if !archive.iter().any(|a| a.genome == s.genome) {
            archive.push(s.clone());
        }
    }
    archive.sort_by(|a, b| b.fitness.total_cmp(&a.fitness));
    archive.truncate(size);
}

/// Unevaluated members of generation `state.generation + 1`: children from
/// roulette selection, crossover and mutation, then either random genomes
/// or, every `elite_reinjection_period`-th generation, the archive's best.
pub fn next_generation<R: Rng + ?Sized>(state: &GaState, cfg: &GaConfig, rng: &mut R) -> (Vec<Genome>, Newcomers) {
    let pal = &cfg.palettes;
    let fit = state.fitnesses();
    let mut out = Vec::with_capacity(cfg.population_size);
    while out.len() < cfg.children_per_gen {
        let i = select_parent(&fit, rng);
        let j = select_parent(&fit, rng);
        let (p1, p2) = (&state.population[i], &state.population[j]);
        let point = rng.gen_range(1..GENE_COUNT);
        let p = mutation_probability(&[p1.fitness, p2.fitness], cfg.mutation_c, cfg.mutation_p_max);
        let (mut c1, mut c2) = crossover(&p1.genome, &p2.genome, point, pal, rng);
        mutate(&mut c1, p, pal, rng);
        mutate(&mut c2, p, pal, rng);
        out.push(c1);
        if out.len() < cfg.children_per_gen {
            out.push(c2);
        }
    }
    let generation = state.generation + 1;
    let newcomers = if generation % cfg.elite_reinjection_period == 0 {
        Newcomers::Elite
    } else {
        Newcomers::Random
    };
    if newcomers == Newcomers::Elite {
        out.extend(state.archive.iter().take(cfg.elite_count).map(|s| s.genome.clone()));
    }
    while out.len() < cfg.population_size {
        out.push(Genome::random(pal, rng));
    }
    (out, newcomers)
}

/// Genetic search driver. Generation `g` draws from its own stream
/// `derive(seed, g)`, so a resumed search matches an uninterrupted one.
pub struct Ga {
    cfg: GaConfig,
    evaluator: FitnessEvaluator,
    state: GaState,
}

impl Ga {
    pub fn new(cfg: GaConfig, kernels: Vec<KernelSpec>) -> Result<Self> {
        cfg.validate()?;
        let mut evaluator = FitnessEvaluator::new(&cfg, kernels)?;
        let mut rng = seed::rng_for(cfg.seed, 0);
        let genomes: Vec<Genome> = (0..cfg.population_size)
            .map(|_| Genome::random(&cfg.palettes, &mut rng))
            .collect();
        let state = Self::score(&cfg, &mut evaluator, genomes, 0, Newcomers::Initial, Vec::new());
        Ok(Ga { cfg, evaluator, state })
    }

    /// Continues from a saved state.
    pub fn resume(cfg: GaConfig, kernels: Vec<KernelSpec>, state: GaState) -> Result<Self> {
        cfg.validate()?;
        if state.population.len() != cfg.population_size {
            return Err(Error::Config("checkpoint population does not match population_size".into()));
        }
        let mut evaluator = FitnessEvaluator::new(&cfg, kernels)?;
        for s in state.population.iter().chain(&state.archive) {
            evaluator.cache.insert(s.genome.clone(), s.fitness);
        }
        Ok(Ga { cfg, evaluator, state })
    }

    fn score(
        cfg: &GaConfig,
        evaluator: &mut FitnessEvaluator,
        genomes: Vec<Genome>,
        generation: usize,
        newcomers: Newcomers,
        mut archive: Vec<Scored>,
    ) -> GaState {
        let fitness = evaluator.evaluate_all(&genomes);
        let population: Vec<Scored> = genomes
            .into_iter()
            .zip(fitness)
            .map(|(genome, fitness)| Scored { genome, fitness })
            .collect();
        update_archive(&mut archive, &population, cfg.elite_count.max(1));
        GaState {
            generation,
            population,
            newcomers,
            archive,
        }
    }

    pub fn state(&self) -> &GaState {
        &self.state
    }

    pub fn config(&self) -> &GaConfig {
        &self.cfg
    }

    pub fn evaluator_mut(&mut self) -> &mut FitnessEvaluator {
        &mut self.evaluator
    }

    pub fn is_finished(&self) -> bool {
        self.state.generation + 1 >= self.cfg.generations
    }

    /// Produces and evaluates the next generation.
    pub fn step(&mut self) -> &GaState {
        let g = self.state.generation + 1;
        let mut rng = seed::rng_for(self.cfg.seed, g as u64);
        let (genomes, newcomers) = next_generation(&self.state, &self.cfg, &mut rng);
        let archive = self.state.archive.clone();
        self.state = Self::score(&self.cfg, &mut self.evaluator, genomes, g, newcomers, archive);
        &self.state
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub fingerprint: u64,
    pub state: GaState,
}

pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const ARCHIVE_FILE: &str = "archive.csv";
pub const FAULTS_FILE: &str = "faults.log";
pub const BEST_FILE: &str = "best_rlws.toml";

pub const GENERATION_HEADER: [&str; 11] = [
    "generation",
    "index",
    "hash",
    "genome",
    "attributes",
    "alpha",
    "epsilon",
    "gamma",
    "reward",
    "penalty",
    "fitness",
];

pub fn generation_file(g: usize) -> String {
    format!("generation_{g:04}.csv")
}

fn write_scored(path: &Path, generation: usize, rows: &[Scored], pal: &Palettes) -> Result<()> {
    let io = |e: csv::Error| Error::Config(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(GENERATION_HEADER).map_err(io)?;
    for (i, s) in rows.iter().enumerate() {
        let p = s.genome.params(pal);
        let attrs: Vec<String> = s
            .genome
            .attributes()
            .iter()
            .map(|(a, b)| format!("{}:{b}", a.symbol()))
            .collect();
        w.write_record([
            generation.to_string(),
            i.to_string(),
            format!("{:016x}", s.genome.hash64()),
            s.genome.to_string(),
            attrs.join(" "),
            p.alpha.to_string(),
            p.epsilon.to_string(),
            p.gamma.to_string(),
            p.reward.to_string(),
            p.penalty.to_string(),
            format!("{:.6}", s.fitness),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_outputs(ga: &mut Ga, out: &Path) -> Result<()> {
    let st = &ga.state;
    let pal = &ga.cfg.palettes;
    write_scored(&out.join(generation_file(st.generation)), st.generation, &st.population, pal)?;
    write_scored(&out.join(ARCHIVE_FILE), st.generation, &st.archive, pal)?;
    let best = st.best().genome.decode(pal, ga.cfg.actions, ga.cfg.decision_interval);
    let best_toml = toml::to_string(&best).map_err(|e| Error::Config(e.to_string()))?;
    write_file(&out.join(BEST_FILE), &best_toml)?;
    let diags = ga.evaluator.take_diagnostics();
    if !diags.is_empty() {
        let path = out.join(FAULTS_FILE);
        let mut f = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        for d in diags {
            writeln!(f, "generation {}: {d}", ga.state.generation).map_err(|e| Error::io(&path, e))?;
        }
    }
    let cp = Checkpoint {
        fingerprint: ga.cfg.fingerprint(),
        state: ga.state.clone(),
    };
    let tmp = out.join(format!("{CHECKPOINT_FILE}.tmp"));
    write_file(&tmp, &serde_json::to_string(&cp)?)?;
    fs::rename(&tmp, out.join(CHECKPOINT_FILE)).map_err(|e| Error::io(out.join(CHECKPOINT_FILE), e))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Loads the configured kernels; relative paths resolve against `base`.
pub fn load_kernels(cfg: &GaConfig, base: &Path) -> Result<Vec<KernelSpec>> {
    cfg.kernels.iter().map(|k| k.resolve(base)).collect()
}

/// Runs a search to completion, writing per-generation CSVs, the archive,
/// the best decoded configuration and a checkpoint after every generation.
/// With `resume`, continues from `out/checkpoint.json` when present.
pub fn run_search(
    cfg: &GaConfig,
    kernels: Vec<KernelSpec>,
    out: &Path,
    resume: bool,
    mut on_generation: impl FnMut(&GaState),
) -> Result<GaState> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let cp_path: PathBuf = out.join(CHECKPOINT_FILE);
    let mut ga = if resume && cp_path.exists() {
        let cp = load_checkpoint(&cp_path)?;
        if cp.fingerprint != cfg.fingerprint() {
            return Err(Error::Config(format!(
                "{} was written under a different configuration",
                cp_path.display()
            )));
        }
        Ga::resume(cfg.clone(), kernels, cp.state)?
    } else {
        let mut ga = Ga::new(cfg.clone(), kernels)?;
        write_outputs(&mut ga, out)?;
        on_generation(ga.state());
        ga
    };
    while !ga.is_finished() {
        ga.step();
        write_outputs(&mut ga, out)?;
        on_generation(ga.state());
    }
    Ok(ga.state.clone())
}
