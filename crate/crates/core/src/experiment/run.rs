use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::Result;
use crate::policy::{run_kernel_with_theta, PolicySpec};
use crate::rlws::{DecisionRecord, RlwsConfig};
use crate::sim::{RunOptions, SimOutcome, StallCause};
use crate::workload::{KernelRef, KernelSpec};

/// One simulated (kernel, policy, seed) cell. Field order is the CSV column
/// order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub kernel: String,
    pub policy: String,
    pub seed: u64,
    pub cycles: u64,
    pub instructions: u64,
    pub ipc: f64,
    pub stall_dependency: u64,
    pub stall_barrier: u64,
    pub stall_structural: u64,
    pub stall_idle: u64,
    pub stall_no_instr: u64,
    pub l1_hit_rate: f64,
    pub l2_hit_rate: f64,
    pub explore_fraction: f64,
    pub group_switches: u64,
}

impl RunStats {
    pub fn from_outcome(kernel: &str, policy: &str, seed: u64, o: &SimOutcome) -> Self {
        let s = &o.stats;
        RunStats {
            kernel: kernel.to_string(),
            policy: policy.to_string(),
            seed,
            cycles: s.cycles,
            instructions: s.instructions,
            ipc: s.ipc(),
            stall_dependency: s.stall(StallCause::Dependency),
            stall_barrier: s.stall(StallCause::Barrier),
            stall_structural: s.stall(StallCause::Structural),
            stall_idle: s.stall(StallCause::Idle),
            stall_no_instr: s.stall(StallCause::NoInstr),
            l1_hit_rate: s.l1_hit_rate(),
            l2_hit_rate: s.l2_hit_rate(),
            explore_fraction: o.extras.exploration_fraction(),
            group_switches: o.extras.group_switches,
        }
    }

    pub fn total_stalls(&self) -> u64 {
        self.stall_dependency + self.stall_barrier + self.stall_structural + self.stall_idle + self.stall_no_instr
    }
}

/// Result of one cell, with the learned policy's decisions and final
/// weights when requested.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub stats: RunStats,
    pub decisions: Vec<DecisionRecord>,
    /// Final per-SM weights of a learned policy, with its configuration.
    pub theta: Option<(RlwsConfig, Vec<Vec<f64>>)>,
}

/// Kernel name as used in reports: the template name or the file's kernel
/// name.
pub fn kernel_label(r: &KernelRef, spec: &KernelSpec) -> String {
    match r {
        KernelRef::Template { template } => template.clone(),
        KernelRef::Path { .. } => spec.name.clone(),
    }
}

/// Simulates every kernel × policy × seed cell. Cells run in parallel; the
/// result order is kernel-major, then policy, then seed, regardless of
/// scheduling. Relative kernel and policy files resolve against `base`.
pub fn run(cfg: &ExperimentConfig, base: &Path) -> Result<Vec<CellResult>> {
    cfg.validate()?;
    let policies: Vec<(String, PolicySpec)> = cfg
        .policies
        .iter()
        .map(|p| {
            let mut spec = p.resolve(base)?;
            if let PolicySpec::Rlws(c) = &mut spec {
                c.record_decisions |= cfg.decision_logs;
            }
            Ok((p.label().to_string(), spec))
        })
        .collect::<Result<_>>()?;

    let mut kernels: Vec<(String, Vec<KernelSpec>)> = Vec::new();
    for k in &cfg.kernels {
        let per_seed = cfg
            .seeds
            .iter()
            .map(|&s| k.resolve_seeded(base, cfg.reseed_templates.then_some(s)))
            .collect::<Result<Vec<_>>>()?;
        kernels.push((kernel_label(k, &per_seed[0]), per_seed));
    }

    let cell = |ki: usize, pi: usize, si: usize, thetas: Option<&[Vec<f64>]>| -> Result<CellResult> {
        let (name, spec) = &policies[pi];
        let seed = cfg.seeds[si];
        let o = run_kernel_with_theta(&cfg.gpu, &kernels[ki].1[si], spec, seed, thetas, RunOptions::default())?;
        let theta = match spec {
            PolicySpec::Rlws(c) if cfg.export_theta || cfg.persist_theta => Some((c.clone(), o.thetas.clone())),
            _ => None,
        };
        Ok(CellResult {
            stats: RunStats::from_outcome(&kernels[ki].0, name, seed, &o),
            decisions: o.decisions,
            theta,
        })
    };
    let (np, ns) = (policies.len(), cfg.seeds.len());
    let index = |ki: usize, pi: usize, si: usize| (ki * np + pi) * ns + si;

    if !cfg.persist_theta {
        let cells: Vec<(usize, usize, usize)> = (0..kernels.len())
            .flat_map(|ki| (0..np).flat_map(move |pi| (0..ns).map(move |si| (ki, pi, si))))
            .collect();
        return cells.par_iter().map(|&(ki, pi, si)| cell(ki, pi, si, None)).collect();
    }

    // One chain per (policy, seed); kernels run in order and hand their
    // final weights to the next kernel.
    let chains: Vec<(usize, usize)> = (0..np).flat_map(|pi| (0..ns).map(move |si| (pi, si))).collect();
    let results: Vec<Vec<CellResult>> = chains
        .par_iter()
        .map(|&(pi, si)| {
            let mut out = Vec::with_capacity(kernels.len());
            let mut carried: Option<Vec<Vec<f64>>> = None;
            for ki in 0..kernels.len() {
                let r = cell(ki, pi, si, carried.as_deref())?;
                carried = r.theta.as_ref().map(|t| t.1.clone());
                out.push(r);
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut slots: Vec<Option<CellResult>> = vec![None; kernels.len() * np * ns];
    for ((pi, si), chain) in chains.into_iter().zip(results) {
        for (ki, r) in chain.into_iter().enumerate() {
            slots[index(ki, pi, si)] = Some(r);
        }
    }
    Ok(slots.into_iter().map(|c| c.expect("every cell ran")).collect())
}
