use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

use super::spec::{KernelSpec, TbSpec};
use super::template::{KernelTemplate, LocalityProfile};
use crate::error::Result;
use crate::seed;
use crate::sim::{InstrKind, Instruction, LocalityTag};

const KINDS: [InstrKind; 4] = [
    InstrKind::Sp,
    InstrKind::Sfu,
    InstrKind::GlobalMem,
    InstrKind::StcMem,
];

/// Materializes a template. Deterministic in the template (including its
/// seed).
pub fn generate(template: &KernelTemplate) -> Result<KernelSpec> {
    template.validate()?;
    let base = base_program(template);
    let mut tbs = Vec::with_capacity(template.num_tbs);
    for tb in 0..template.num_tbs {
        let mut warps = Vec::with_capacity(template.warps_per_tb);
        for w in 0..template.warps_per_tb {
            let global = (tb * template.warps_per_tb + w) as u64;
            let mut prog = base.clone();
            if template.divergence_prob > 0.0 {
                let mut rng = seed::rng_for(template.seed, global + 1);
                for instr in prog.iter_mut().filter(|i| i.kind != InstrKind::Barrier) {
                    instr.divergent = rng.gen_bool(template.divergence_prob);
                }
            }
            warps.push(prog);
        }
        tbs.push(TbSpec { warps });
    }
    Ok(KernelSpec {
        name: template.name.clone(),
        warps_per_tb: template.warps_per_tb,
        resources: template.resources,
        addr_salt: seed::derive(template.seed, u64::MAX),
        tbs,
    })
}

fn base_program(t: &KernelTemplate) -> Vec<Instruction> {
    let mut rng = seed::rng_for(t.seed, 0);
    let weights = t.mix.weights();
    let dist = WeightedIndex::new(weights).expect("validated mix has positive mass");
    let mut prog = Vec::with_capacity(t.instr_count + t.instr_count / t.barrier_every.unwrap_or(usize::MAX).max(1));
    let mut prev_dest: Option<u8> = None;
    let mut next_reg = 0u8;
    let mut mem_seen = [0usize; 2];
    let mut ordinals: [Vec<u32>; 2] = [
        vec![0; t.global_locality.regions as usize],
        vec![0; t.stc_locality.regions as usize],
    ];

    for i in 0..t.instr_count {
        if let Some(p) = t.barrier_every {
            if i > 0 && i % p == 0 {
                prog.push(Instruction::barrier());
                prev_dest = None;
            }
        }
        let kind = KINDS[dist.sample(&mut rng)];
        let dest = next_reg + 1;
        next_reg = (next_reg + 1) % t.registers;
        let mut instr = Instruction::new(kind).with_dest(dest);
        if let Some(src) = prev_dest {
            if rng.gen_bool(t.dependency_density) {
                instr.srcs.push(src);
            }
        }
        if kind.is_memory() {
            let which = (kind == InstrKind::StcMem) as usize;
            let profile: &LocalityProfile = if which == 0 {
                &t.global_locality
            } else {
                &t.stc_locality
            };
            let region = (mem_seen[which] % profile.regions as usize) as u16;
            mem_seen[which] += 1;
            let ordinal = &mut ordinals[which][region as usize];
            instr.locality = Some(LocalityTag {
                pattern: profile.pattern,
                // STC regions sit above global ones so they never alias.
                region: region + which as u16 * 1024,
                ordinal: *ordinal,
            });
            *ordinal += 1;
        }
        prev_dest = Some(dest);
        prog.push(instr);
    }
    prog
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workload::{Mix, TbResources};

    fn template(mix: Mix) -> KernelTemplate {
        KernelTemplate {
            name: "t".into(),
            num_tbs: 3,
            warps_per_tb: 4,
            instr_count: 1000,
            mix,
            dependency_density: 0.5,
            barrier_every: None,
            divergence_prob: 0.0,
            global_locality: LocalityProfile::default(),
            stc_locality: LocalityProfile::default(),
            registers: 16,
            resources: TbResources {
                registers: 1024,
                shared_mem: 0,
            },
            seed: 9,
        }
    }

    fn mix(sp: f64, gmem: f64) -> Mix {
        Mix {
            sp,
            sfu: 0.0,
            global_mem: gmem,
            stc_mem: 0.0,
        }
    }

    #[test]
    fn all_sp_mix() {
        let k = generate(&template(mix(1.0, 0.0))).unwrap();
        assert!(k
            .tbs
            .iter()
            .flat_map(|t| t.warps.iter().flatten())
            .all(|i| i.kind == InstrKind::Sp));
    }

    #[test]
    fn deterministic_under_seed() {
        let t = template(mix(0.5, 0.5));
        assert_eq!(generate(&t).unwrap(), generate(&t).unwrap());
        let mut t2 = t.clone();
        t2.seed = 10;
        assert_ne!(generate(&t).unwrap(), generate(&t2).unwrap());
    }

    #[test]
    fn memory_count_within_binomial_bound() {
        let k = generate(&template(mix(0.5, 0.5))).unwrap();
        let n = k.tbs[0].warps[0].len() as f64;
        let mem = k.tbs[0].warps[0].iter().filter(|i| i.kind.is_memory()).count() as f64;
        let sigma = (n * 0.25).sqrt();
        assert!((mem - 500.0).abs() <= 3.0 * sigma, "mem = {mem}");
    }

    #[test]
    fn barriers_align_within_tb() {
        let mut t = template(mix(0.7, 0.3));
        t.barrier_every = Some(50);
        t.divergence_prob = 0.2;
        let k = generate(&t).unwrap();
        k.validate().unwrap();
        let bars = k.tbs[0].warps[0]
            .iter()
            .filter(|i| i.kind == InstrKind::Barrier)
            .count();
        assert_eq!(bars, 19);
    }

    #[test]
    fn infeasible_barrier_period_rejected() {
        let mut t = template(mix(1.0, 0.0));
        t.barrier_every = Some(1000);
        assert!(generate(&t).is_err());
    }
}
