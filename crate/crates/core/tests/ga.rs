use std::path::Path;

use proptest::prelude::*;
use warpsched::ga::{
    load_kernels, mutate, mutation_probability, run_search, select_parent, splice, Checkpoint, FitnessEvaluator, Ga,
    GaConfig, GaState, Genome, Newcomers, Palettes, CHECKPOINT_FILE, GENE_COUNT, GENERATION_HEADER,
};
use warpsched::rl::NUM_ATTRIBUTES;
use warpsched::sim::RunOptions;
use warpsched::{run_kernel, seed, PolicySpec};

fn within_3_sigma(count: usize, n: usize, p: f64) -> bool {
    let sd = (n as f64 * p * (1.0 - p)).sqrt();
    (count as f64 - n as f64 * p).abs() <= 3.0 * sd
}

fn small_config() -> GaConfig {
    let mut c = GaConfig {
        population_size: 12,
        children_per_gen: 9,
        randoms_per_gen: 3,
        elite_count: 3,
        elite_reinjection_period: 2,
        generations: 5,
        seed: 21,
        ..GaConfig::default()
    };
    c.kernels.truncate(2);
    c
}

#[test]
fn random_genomes_draw_options_uniformly() {
    let pal = Palettes::default();
    let mut rng = seed::rng(1);
    let n = 10_000;
    let mut counts: Vec<Vec<usize>> = (0..GENE_COUNT).map(|l| vec![0; pal.options(l)]).collect();
    for _ in 0..n {
        let g = Genome::random(&pal, &mut rng);
        assert!(g.num_attributes() > 0);
        for (l, &v) in g.genes.iter().enumerate() {
            counts[l][v as usize] += 1;
        }
    }
    let mut outside = 0;
    let mut checks = 0;
    for (l, c) in counts.iter().enumerate() {
        for &k in c {
            checks += 1;
            outside += !within_3_sigma(k, n, 1.0 / pal.options(l) as f64) as usize;
        }
    }
    // Independent 3σ checks: about 0.3% of them fall outside by chance.
    assert!(outside <= 2, "{outside} of {checks} option frequencies outside 3σ");
}

#[test]
fn roulette_matches_fitness_shares() {
    let mut rng = seed::rng(2);
    let n = 100_000;
    for (f, p0) in [([1.0, 1.0], 0.5), ([3.0, 1.0], 0.75)] {
        let zeros = (0..n).filter(|_| select_parent(&f, &mut rng) == 0).count();
        assert!(within_3_sigma(zeros, n, p0), "{f:?}: {zeros}");
    }
    let zeros = (0..n).filter(|_| select_parent(&[0.0, 0.0], &mut rng) == 0).count();
    assert!(within_3_sigma(zeros, n, 0.5));
}

#[test]
fn doubling_fitness_halves_mutation_frequency() {
    let pal = Palettes::default();
    let (c, p_max) = (0.02, 0.25);
    let (lo, hi) = (mutation_probability(&[0.1, 0.1], c, p_max), mutation_probability(&[0.2, 0.2], c, p_max));
    assert!((lo - 0.2).abs() < 1e-15 && (hi - 0.1).abs() < 1e-15);
    assert_eq!(mutation_probability(&[0.0, 0.0], c, p_max), p_max);
    assert_eq!(mutation_probability(&[0.01, 0.01], c, p_max), p_max);

    let mut rng = seed::rng(3);
    let n = 100_000;
    let g = Genome::random(&pal, &mut rng);
    for p in [lo, hi] {
        let hits = (0..n).filter(|_| mutate(&mut g.clone(), p, &pal, &mut rng).is_some()).count();
        assert!(within_3_sigma(hits, n, p), "p {p}: {hits}");
    }
}

#[test]
fn mutation_never_removes_the_last_attribute() {
    let pal = Palettes::default();
    let mut rng = seed::rng(4);
    for locus in [0, 20] {
        let mut genes = vec![0u8; GENE_COUNT];
        genes[locus] = 1;
        let g = Genome { genes };
        for _ in 0..2_000 {
            let mut c = g.clone();
            mutate(&mut c, 1.0, &pal, &mut rng);
            assert!(c.num_attributes() >= 1);
        }
    }
}

#[test]
fn fitness_is_the_geomean_speedup_over_the_baseline() {
    let cfg = small_config();
    let kernels = load_kernels(&cfg, Path::new(".")).unwrap();
    let eval = FitnessEvaluator::new(&cfg, kernels.clone()).unwrap();
    let g: Genome = "1000000000000000000000000000000000-3.4.3.1.2".parse().unwrap();
    let (f, diag) = eval.evaluate(&g);
    assert!(diag.is_none());

    let policy = PolicySpec::Rlws(g.decode(&cfg.palettes, cfg.actions, cfg.decision_interval));
    let mut logs = 0.0;
    for (k, kernel) in kernels.iter().enumerate() {
        let s = seed::derive(cfg.seed, k as u64);
        let base = run_kernel(&cfg.gpu, kernel, &PolicySpec::Lrr, s, RunOptions::default()).unwrap();
        let ours = run_kernel(&cfg.gpu, kernel, &policy, s, RunOptions::default()).unwrap();
        logs += (base.stats.cycles as f64 / ours.stats.cycles as f64).ln();
    }
    let expected = (logs / kernels.len() as f64).exp();
    assert!((f - expected).abs() < 1e-12, "{f} vs {expected}");
}

fn assert_mechanics(cfg: &GaConfig, states: &[GaState]) {
    for (g, st) in states.iter().enumerate() {
        assert_eq!(st.generation, g);
        assert_eq!(st.population.len(), cfg.population_size);
        let expected = match g {
            0 => Newcomers::Initial,
            _ if g % cfg.elite_reinjection_period == 0 => Newcomers::Elite,
            _ => Newcomers::Random,
        };
        assert_eq!(st.newcomers, expected, "generation {g}");
        if expected == Newcomers::Elite {
            let top: Vec<&Genome> = states[g - 1].archive.iter().take(cfg.elite_count).map(|s| &s.genome).collect();
            let injected: Vec<&Genome> = st.population[cfg.children_per_gen..].iter().map(|s| &s.genome).collect();
            assert_eq!(injected, top);
        }
        assert!(st.archive.windows(2).all(|w| w[0].fitness >= w[1].fitness));
        if g > 0 {
            let prev = &states[g - 1].archive;
            assert!(prev.iter().zip(&st.archive).all(|(a, b)| b.fitness >= a.fitness), "archive is monotone");
        }
        let best = st.population.iter().map(|s| s.fitness).fold(f64::MIN, f64::max);
        assert!(st.best().fitness >= best);
    }
}

#[test]
fn search_is_reproducible_and_resumable() {
    let cfg = small_config();
    let dir = tempfile::tempdir().unwrap();
    let kernels = || load_kernels(&cfg, Path::new(".")).unwrap();

    let mut full = Vec::new();
    let last = run_search(&cfg, kernels(), &dir.path().join("a"), false, |s| full.push(s.clone())).unwrap();
    assert_mechanics(&cfg, &full);
    assert_eq!(full.len(), cfg.generations);

    let mut ga = Ga::new(cfg.clone(), kernels()).unwrap();
    while !ga.is_finished() {
        ga.step();
    }
    assert_eq!(ga.state(), &last);

    // Interrupted after generation 2, then resumed.
    let b = dir.path().join("b");
    std::fs::create_dir_all(&b).unwrap();
    let cp = Checkpoint {
        fingerprint: cfg.fingerprint(),
        state: full[2].clone(),
    };
    std::fs::write(b.join(CHECKPOINT_FILE), serde_json::to_string(&cp).unwrap()).unwrap();
    let mut resumed = Vec::new();
    let end = run_search(&cfg, kernels(), &b, true, |s| resumed.push(s.generation)).unwrap();
    assert_eq!(resumed, vec![3, 4]);
    assert_eq!(end, last);

    let mut other = cfg.clone();
    other.seed += 1;
    assert!(run_search(&other, kernels(), &b, true, |_| {}).is_err(), "fingerprint mismatch");

    let csv = std::fs::read_to_string(dir.path().join("a").join(warpsched::ga::generation_file(4))).unwrap();
    assert_eq!(csv.lines().next().unwrap(), GENERATION_HEADER.join(","));
    assert_eq!(csv.lines().count(), cfg.population_size + 1);
}

#[test]
fn config_errors_are_reported() {
    assert!(GaConfig::from_toml("population_size = 10").is_err());
    assert!(GaConfig::from_toml("generations = 3\nbogus = 1").is_err());
    let c = GaConfig::from_toml("generations = 3\nseed = 9").unwrap();
    assert_eq!((c.generations, c.seed, c.population_size), (3, 9, 100));
}

fn genome() -> impl Strategy<Value = Genome> {
    any::<u64>().prop_map(|s| Genome::random(&Palettes::default(), &mut seed::rng(s)))
}

proptest! {
    #[test]
    fn crossover_conserves_every_locus(a in genome(), b in genome(), point in 1usize..GENE_COUNT) {
        let (c1, c2) = splice(&a, &b, point);
        for l in 0..GENE_COUNT {
            let mut parents = [a.genes[l], b.genes[l]];
            let mut children = [c1.genes[l], c2.genes[l]];
            parents.sort_unstable();
            children.sort_unstable();
            prop_assert_eq!(parents, children);
            let (from1, from2) = if l < point { (&a, &b) } else { (&b, &a) };
            prop_assert_eq!(c1.genes[l], from1.genes[l]);
            prop_assert_eq!(c2.genes[l], from2.genes[l]);
        }
    }

    #[test]
    fn certain_mutation_changes_exactly_one_gene(g in genome(), s in any::<u64>()) {
        let pal = Palettes::default();
        let mut c = g.clone();
        let locus = mutate(&mut c, 1.0, &pal, &mut seed::rng(s)).unwrap();
        let changed: Vec<usize> = (0..GENE_COUNT).filter(|&l| c.genes[l] != g.genes[l]).collect();
        prop_assert_eq!(changed, vec![locus]);
        prop_assert!((c.genes[locus] as usize) < pal.options(locus));
        prop_assert!(c.num_attributes() > 0);
    }

    #[test]
    fn genomes_round_trip_and_decode(g in genome()) {
        let pal = Palettes::default();
        let back: Genome = g.to_string().parse().unwrap();
        prop_assert_eq!(&back, &g);
        let cfg = g.decode(&pal, warpsched::rlws::ActionSet::Pipeline, 1);
        prop_assert_eq!(cfg.attributes.len(), g.num_attributes());
        prop_assert!(cfg.validate().is_ok());
        prop_assert!(g.genes[..NUM_ATTRIBUTES].iter().any(|&v| v != 0));
    }
}
