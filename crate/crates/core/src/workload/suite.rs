//! Named kernel templates.
//!
//! The standard suite spans compute-bound, streaming, reuse, barrier-heavy,
//! divergent, few-TB and many-small-TB behaviour. Streaming kernels with a
//! sub-line stride share cache lines between neighbouring warps and favour
//! round-robin issue; reuse kernels keep a private working set per warp and
//! favour greedy issue once the combined working set outgrows L1.
//!
//! The memory suite holds eight full-occupancy streaming and reuse kernels;
//! the desk suite is a shorter copy of it sized for search and regression
//! runs.

use super::spec::TbResources;
use super::template::{KernelTemplate, LocalityProfile, Mix};
use crate::sim::AccessPattern;

fn base(name: &str, num_tbs: usize, warps_per_tb: usize, instr_count: usize, mix: Mix) -> KernelTemplate {
    KernelTemplate {
        name: name.to_string(),
        num_tbs,
        warps_per_tb,
        instr_count,
        mix,
        dependency_density: 0.5,
        barrier_every: None,
        divergence_prob: 0.0,
        global_locality: LocalityProfile::default(),
        stc_locality: LocalityProfile::default(),
        registers: 16,
        resources: TbResources {
            registers: 512 * warps_per_tb as u32,
            shared_mem: 1024,
        },
        seed: crate::seed::mix64(name.bytes().fold(0u64, |h, b| h.wrapping_mul(31).wrapping_add(b as u64))),
    }
}

fn mix(sp: f64, sfu: f64, global_mem: f64, stc_mem: f64) -> Mix {
    Mix {
        sp,
        sfu,
        global_mem,
        stc_mem,
    }
}

fn locality(pattern: AccessPattern, regions: u16) -> LocalityProfile {
    LocalityProfile { pattern, regions }
}

pub fn standard_suite() -> Vec<KernelTemplate> {
    let mut v = Vec::new();

    let mut t = base("compute_sp", 120, 4, 300, mix(0.9, 0.1, 0.0, 0.0));
    t.dependency_density = 0.6;
    v.push(t);

    let mut t = base("compute_sfu", 120, 4, 250, mix(0.55, 0.4, 0.05, 0.0));
    t.dependency_density = 0.7;
    v.push(t);

    let mut t = base("mem_stream", 120, 4, 200, mix(0.6, 0.05, 0.35, 0.0));
    t.global_locality = locality(AccessPattern::Stream { stride: 128 }, 2);
    v.push(t);

    let mut t = base("mem_stream_coalesced", 120, 4, 200, mix(0.6, 0.05, 0.35, 0.0));
    t.global_locality = locality(AccessPattern::Stream { stride: 32 }, 1);
    t.dependency_density = 0.3;
    v.push(t);

    let mut t = base("mem_reuse", 120, 4, 200, mix(0.55, 0.05, 0.4, 0.0));
    t.global_locality = locality(AccessPattern::Reuse { window: 8 }, 1);
    v.push(t);

    let mut t = base("mem_reuse_small", 90, 6, 200, mix(0.6, 0.0, 0.4, 0.0));
    t.global_locality = locality(AccessPattern::Reuse { window: 3 }, 1);
    v.push(t);

    let mut t = base("mem_random", 120, 4, 160, mix(0.6, 0.05, 0.35, 0.0));
    t.global_locality = locality(AccessPattern::Random { pool: 16384 }, 1);
    v.push(t);

    let mut t = base("stc_heavy", 120, 4, 200, mix(0.5, 0.05, 0.1, 0.35));
    t.stc_locality = locality(AccessPattern::Stream { stride: 4 }, 1);
    v.push(t);

    let mut t = base("barrier_heavy", 60, 8, 240, mix(0.6, 0.1, 0.3, 0.0));
    t.barrier_every = Some(12);
    t.global_locality = locality(AccessPattern::Stream { stride: 64 }, 1);
    v.push(t);

    let mut t = base("divergent", 120, 4, 200, mix(0.7, 0.1, 0.2, 0.0));
    t.divergence_prob = 0.3;
    t.global_locality = locality(AccessPattern::Reuse { window: 4 }, 1);
    v.push(t);

    let mut t = base("few_tb", 20, 8, 400, mix(0.6, 0.1, 0.3, 0.0));
    t.global_locality = locality(AccessPattern::Stream { stride: 128 }, 1);
    v.push(t);

    let mut t = base("many_small_tb", 600, 1, 120, mix(0.6, 0.1, 0.3, 0.0));
    t.global_locality = locality(AccessPattern::Reuse { window: 6 }, 1);
    v.push(t);

    v
}

fn memory_kernels(prefix: &str, num_tbs: usize, instr_count: usize) -> Vec<KernelTemplate> {
    use AccessPattern::*;
    let specs: [(&str, AccessPattern, f64); 8] = [
        ("reuse4", Reuse { window: 4 }, 0.4),
        ("reuse6", Reuse { window: 6 }, 0.35),
        ("reuse8", Reuse { window: 8 }, 0.4),
        ("reuse12", Reuse { window: 12 }, 0.3),
        ("stream32", Stream { stride: 32 }, 0.35),
        ("stream64", Stream { stride: 64 }, 0.3),
        ("stream128", Stream { stride: 128 }, 0.3),
        ("random", Random { pool: 4096 }, 0.3),
    ];
    specs
        .iter()
        .map(|&(name, pattern, mem)| {
            let mut t = base(&format!("{prefix}_{name}"), num_tbs, 6, instr_count, mix(0.9 - mem, 0.1, mem, 0.0));
            t.global_locality = locality(pattern, 1);
            t
        })
        .collect()
}

/// Eight full-occupancy memory kernels (streaming and reuse), sized for
/// [`GpuConfig::desk`](crate::sim::GpuConfig::desk).
pub fn memory_suite() -> Vec<KernelTemplate> {
    memory_kernels("ms", 32, 100)
}

/// Shorter versions of the memory suite, used for search and sensitivity runs.
pub fn desk_suite() -> Vec<KernelTemplate> {
    memory_kernels("desk", 32, 64)
}

/// Looks a template up by name in the standard and desk suites.
pub fn template(name: &str) -> Option<KernelTemplate> {
    standard_suite()
        .into_iter()
        .chain(memory_suite())
        .chain(desk_suite())
        .find(|t| t.name == name)
}

pub fn template_names() -> Vec<String> {
    standard_suite()
        .into_iter()
        .chain(memory_suite())
        .chain(desk_suite())
        .map(|t| t.name)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_templates_validate_and_names_are_unique() {
        let names = template_names();
        let mut sorted = names.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), names.len());
        assert!(standard_suite().len() >= 12);
        assert_eq!(desk_suite().len(), 8);
        assert_eq!(memory_suite().len(), 8);
        for t in standard_suite().iter().chain(&memory_suite()).chain(&desk_suite()) {
            t.validate().unwrap();
        }
    }

    #[test]
    fn lookup() {
        assert_eq!(template("mem_reuse").unwrap().name, "mem_reuse");
        assert!(template("nope").is_none());
    }
}
