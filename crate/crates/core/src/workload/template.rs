use serde::{Deserialize, Serialize};

use super::spec::TbResources;
use crate::error::{Error, Result};
use crate::sim::AccessPattern;

/// Instruction-kind fractions; must sum to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mix {
    #[serde(default)]
    pub sp: f64,
    #[serde(default)]
    pub sfu: f64,
    #[serde(default)]
    pub global_mem: f64,
    #[serde(default)]
    pub stc_mem: f64,
}

impl Mix {
    pub fn weights(&self) -> [f64; 4] {
        [self.sp, self.sfu, self.global_mem, self.stc_mem]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalityProfile {
    pub pattern: AccessPattern,
    /// Memory instructions are spread round robin over this many regions.
    #[serde(default = "one")]
    pub regions: u16,
}

fn one() -> u16 {
    1
}

impl Default for LocalityProfile {
    fn default() -> Self {
        LocalityProfile {
            pattern: AccessPattern::Stream { stride: 128 },
            regions: 1,
        }
    }
}

/// Parameterized synthetic kernel. Every warp runs the same instruction
/// sequence (drawn once per template); only divergence flags are drawn per
/// warp.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelTemplate {
    pub name: String,
    pub num_tbs: usize,
    pub warps_per_tb: usize,
    /// Non-barrier instructions per warp.
    pub instr_count: usize,
    pub mix: Mix,
    /// Probability that an instruction reads the previous instruction's result.
    #[serde(default)]
    pub dependency_density: f64,
    /// A barrier follows every `barrier_every` instructions.
    #[serde(default)]
    pub barrier_every: Option<usize>,
    #[serde(default)]
    pub divergence_prob: f64,
    #[serde(default)]
    pub global_locality: LocalityProfile,
    #[serde(default)]
    pub stc_locality: LocalityProfile,
    /// Rotating destination registers; bounds per-warp memory parallelism.
    #[serde(default = "default_registers")]
    pub registers: u8,
    pub resources: TbResources,
    #[serde(default)]
    pub seed: u64,
}

fn default_registers() -> u8 {
    16
}

impl KernelTemplate {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Template(format!("{}: {m}", self.name)));
        if self.num_tbs == 0 || self.warps_per_tb == 0 || self.instr_count == 0 {
            return bad("num_tbs, warps_per_tb and instr_count must be positive".into());
        }
        let w = self.mix.weights();
        if w.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return bad("mix fractions must lie in [0, 1]".into());
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return bad(format!("mix fractions sum to {sum}, expected 1"));
        }
        for (name, p) in [
            ("dependency_density", self.dependency_density),
            ("divergence_prob", self.divergence_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} = {p} is not a probability"));
            }
        }
        if let Some(p) = self.barrier_every {
            if p == 0 || p >= self.instr_count {
                return bad(format!(
                    "barrier_every = {p} places no barrier inside {} instructions",
                    self.instr_count
                ));
            }
        }
        if self.registers == 0 || self.registers > 63 {
            return bad("registers must be in 1..=63".into());
        }
        for loc in [&self.global_locality, &self.stc_locality] {
            if loc.regions == 0 {
                return bad("locality regions must be positive".into());
            }
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let t: KernelTemplate =
            toml::from_str(text).map_err(|e| Error::Template(e.to_string()))?;
        t.validate()?;
        Ok(t)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("template serializes")
    }
}
