//! Policy selection by key and a one-call kernel runner.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rlws::{RlwsConfig, RlwsPolicy};
use crate::sched::{Gto, Lrr, RandomPolicy, SchedulerPolicy, TwoLevel};
use crate::seed;
use crate::sim::{Gpu, GpuConfig, RunOptions, SimOutcome};
use crate::workload::KernelSpec;

pub const POLICY_KEYS: [&str; 6] = ["lrr", "gto", "tl", "random", "rlws", "rlws_ms"];

pub const DEFAULT_FETCH_GROUP_SIZE: usize = 8;

/// A fully parameterized scheduling policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicySpec {
    Lrr,
    Gto,
    Tl { fetch_group_size: usize },
    Random,
    Rlws(RlwsConfig),
}

impl PolicySpec {
    /// Default-parameter policy for a key (`lrr | gto | tl | random | rlws | rlws_ms`).
    pub fn from_key(key: &str) -> Result<Self> {
        Ok(match key {
            "lrr" => PolicySpec::Lrr,
            "gto" => PolicySpec::Gto,
            "tl" => PolicySpec::Tl {
                fetch_group_size: DEFAULT_FETCH_GROUP_SIZE,
            },
            "random" => PolicySpec::Random,
            "rlws" => PolicySpec::Rlws(RlwsConfig::rlws()),
            "rlws_ms" => PolicySpec::Rlws(RlwsConfig::rlws_ms()),
            _ => {
                return Err(Error::UnknownPolicy {
                    given: key.to_string(),
                    valid: POLICY_KEYS.join(", "),
                })
            }
        })
    }

    pub fn key(&self) -> &'static str {
        match self {
            PolicySpec::Lrr => "lrr",
            PolicySpec::Gto => "gto",
            PolicySpec::Tl { .. } => "tl",
            PolicySpec::Random => "random",
            PolicySpec::Rlws(c) => c.name(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PolicySpec::Tl { fetch_group_size: 0 } => Err(Error::Config("fetch_group_size must be positive".into())),
            PolicySpec::Rlws(c) => c.validate(),
            _ => Ok(()),
        }
    }

    /// One policy instance per SM; stochastic policies get per-SM seeds
    /// derived from `seed`.
    pub fn build(&self, cfg: &GpuConfig, seed: u64) -> Result<Vec<Box<dyn SchedulerPolicy>>> {
        self.build_with_theta(cfg, seed, None)
    }

    /// Like [`build`](Self::build), but learned policies start from the given
    /// per-SM weights.
    pub fn build_with_theta(
        &self,
        cfg: &GpuConfig,
        seed: u64,
        thetas: Option<&[Vec<f64>]>,
    ) -> Result<Vec<Box<dyn SchedulerPolicy>>> {
        self.validate()?;
        (0..cfg.num_sms)
            .map(|sm| -> Result<Box<dyn SchedulerPolicy>> {
                let s = seed::derive(seed, sm as u64);
                Ok(match self {
                    PolicySpec::Lrr => Box::new(Lrr::new()),
                    PolicySpec::Gto => Box::new(Gto::new()),
                    PolicySpec::Tl { fetch_group_size } => {
                        Box::new(TwoLevel::new(*fetch_group_size, cfg.warps_per_slot()))
                    }
                    PolicySpec::Random => Box::new(RandomPolicy::new(s)),
                    PolicySpec::Rlws(c) => {
                        let p = RlwsPolicy::new(c, sm, s)?;
                        match thetas.and_then(|t| t.get(sm)) {
                            Some(t) => Box::new(p.with_theta(t.clone())?),
                            None => Box::new(p),
                        }
                    }
                })
            })
            .collect()
    }
}

/// Simulates `kernel` under `policy`.
pub fn run_kernel(
    cfg: &GpuConfig,
    kernel: &KernelSpec,
    policy: &PolicySpec,
    seed: u64,
    options: RunOptions,
) -> Result<SimOutcome> {
    run_kernel_with_theta(cfg, kernel, policy, seed, None, options)
}

/// Like [`run_kernel`], but learned policies start from the given per-SM
/// weights.
pub fn run_kernel_with_theta(
    cfg: &GpuConfig,
    kernel: &KernelSpec,
    policy: &PolicySpec,
    seed: u64,
    thetas: Option<&[Vec<f64>]>,
    options: RunOptions,
) -> Result<SimOutcome> {
    let mut policies = policy.build_with_theta(cfg, seed, thetas)?;
    Gpu::new(cfg, kernel, options)?.run(&mut policies)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_key_lists_valid() {
        let err = PolicySpec::from_key("gt0").unwrap_err().to_string();
        assert!(err.contains("gt0") && err.contains("lrr, gto, tl, random, rlws, rlws_ms"), "{err}");
        for k in POLICY_KEYS {
            assert_eq!(PolicySpec::from_key(k).unwrap().key(), k);
        }
    }
}
