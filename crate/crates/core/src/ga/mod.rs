//! Genetic search over the learned scheduler's design space: which
//! attributes to observe, how finely to bucket them, and the RL parameters.

pub mod engine;
pub mod genome;

pub use engine::{
    generation_file, load_checkpoint, load_kernels, next_generation, run_search, update_archive, Checkpoint,
    FitnessEvaluator, Ga, GaConfig, GaState, Newcomers, Scored, ARCHIVE_FILE, BEST_FILE, CHECKPOINT_FILE,
    FAULTS_FILE, GENERATION_HEADER,
};
pub use genome::{
    crossover, log2_space_size, mutate, mutation_probability, select_parent, splice, Genome, Palettes,
    BUCKET_OPTIONS, GENE_COUNT, NUM_PARAM_GENES, PARAM_NAMES,
};
