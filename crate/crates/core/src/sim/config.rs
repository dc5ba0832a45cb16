use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of warp schedulers per SM.
pub const SLOTS_PER_SM: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CacheGeometry {
    pub size_bytes: u32,
    pub line_bytes: u32,
    pub ways: u32,
    /// Latency added when a request reaches this level.
    pub latency: u32,
}

impl CacheGeometry {
    pub fn sets(&self) -> u32 {
        self.size_bytes / (self.line_bytes * self.ways)
    }

    fn validate(&self, name: &str) -> Result<()> {
        if self.line_bytes == 0 || !self.line_bytes.is_power_of_two() {
            return Err(Error::Config(format!("{name}.line_bytes must be a power of two")));
        }
        if self.ways == 0 || self.sets() == 0 {
            return Err(Error::Config(format!("{name} must hold at least one set")));
        }
        if self.size_bytes != self.sets() * self.ways * self.line_bytes {
            return Err(Error::Config(format!(
                "{name}.size_bytes must be a multiple of line_bytes * ways"
            )));
        }
        Ok(())
    }
}

/// GPU model parameters. The structural defaults follow a Fermi GTX480-class
/// part (15 SMs, 8 TBs / 48 warps per SM, 16KB L1, 768KB L2, 32768 registers,
/// 48KB shared memory). Latencies are model choices, not measured values:
/// global memory is kept one to two orders of magnitude above STC memory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GpuConfig {
    pub num_sms: usize,
    pub max_tbs_per_sm: usize,
    pub max_warps_per_sm: usize,
    pub warp_size: usize,
    pub registers_per_sm: u32,
    pub shared_mem_per_sm: u32,
    /// Fixed execution latency per latency class:
    /// 0 = SP, 1 = SFU, 2 = STC memory, 3 = barrier.
    pub latency_table: Vec<u32>,
    pub l1: CacheGeometry,
    pub l2: CacheGeometry,
    /// Latency added on an L2 miss.
    pub dram_latency: u32,
    /// Minimum spacing in cycles between DRAM request services (GPU-wide).
    /// Zero disables bandwidth queueing.
    pub dram_service_interval: u32,
    /// Effective-latency multiplier for instructions flagged divergent.
    pub divergence_factor: u32,
    /// Memory instructions an SM may have in flight; at the cap the MEM
    /// pipeline accepts nothing.
    pub max_inflight_mem_per_sm: usize,
    pub mem_issue_per_cycle: u32,
    pub sfu_issue_per_cycle: u32,
    /// Cycles per sampling window for the windowed ratio attributes.
    pub stats_window: u64,
    /// Simulation aborts with a fault after this many cycles.
    pub max_cycles: u64,
}

impl Default for GpuConfig {
    fn default() -> Self {
        GpuConfig {
            num_sms: 15,
            max_tbs_per_sm: 8,
            max_warps_per_sm: 48,
            warp_size: 32,
            registers_per_sm: 32768,
            shared_mem_per_sm: 48 * 1024,
            latency_table: vec![4, 16, 30, 1],
            l1: CacheGeometry {
                size_bytes: 16 * 1024,
                line_bytes: 128,
                ways: 4,
                latency: 30,
            },
            l2: CacheGeometry {
                size_bytes: 768 * 1024,
                line_bytes: 128,
                ways: 8,
                latency: 120,
            },
            dram_latency: 300,
            dram_service_interval: 0,
            divergence_factor: 2,
            max_inflight_mem_per_sm: 40,
            mem_issue_per_cycle: 1,
            sfu_issue_per_cycle: 1,
            stats_window: 256,
            max_cycles: 20_000_000,
        }
    }
}

impl GpuConfig {
    /// Two-SM configuration for desk-scale experiments and search.
    pub fn desk() -> Self {
        GpuConfig {
            num_sms: 2,
            ..GpuConfig::default()
        }
    }

    /// Warps a single scheduler slot can own.
    pub fn warps_per_slot(&self) -> usize {
        self.max_warps_per_sm / SLOTS_PER_SM
    }

    pub fn latency(&self, class: u8) -> u32 {
        self.latency_table
            .get(class as usize)
            .copied()
            .unwrap_or_else(|| self.latency_table[0])
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_sms == 0 || self.max_tbs_per_sm == 0 || self.max_warps_per_sm == 0 {
            return Err(Error::Config(
                "num_sms, max_tbs_per_sm and max_warps_per_sm must be positive".into(),
            ));
        }
        if self.max_warps_per_sm % SLOTS_PER_SM != 0 {
            return Err(Error::Config("max_warps_per_sm must be even".into()));
        }
        if self.latency_table.is_empty() || self.latency_table.contains(&0) {
            return Err(Error::Config("latency_table entries must be positive".into()));
        }
        if self.mem_issue_per_cycle == 0 || self.sfu_issue_per_cycle == 0 {
            return Err(Error::Config("per-cycle issue budgets must be positive".into()));
        }
        if self.stats_window == 0 || self.divergence_factor == 0 {
            return Err(Error::Config("stats_window and divergence_factor must be positive".into()));
        }
        self.l1.validate("l1")?;
        self.l2.validate("l2")?;
        if self.l1.line_bytes != self.l2.line_bytes {
            return Err(Error::Config("l1 and l2 must share a line size".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = GpuConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.warps_per_slot(), 24);
        assert_eq!(cfg.l1.sets(), 32);
    }

    #[test]
    fn partial_toml_keeps_defaults() {
        let cfg: GpuConfig = toml::from_str("num_sms = 2\ndram_latency = 100\n").unwrap();
        assert_eq!(cfg.num_sms, 2);
        assert_eq!(cfg.dram_latency, 100);
        assert_eq!(cfg.max_warps_per_sm, 48);
    }
}
