use super::cache::SetAssocCache;
use super::config::GpuConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HitLevel {
    L1,
    L2,
    Dram,
}

/// Ratio sampled over fixed windows; readers see the last completed window.
#[derive(Debug, Clone, Default)]
pub struct WindowRatio {
    num: u64,
    den: u64,
    last: f64,
}

impl WindowRatio {
    pub fn add(&mut self, num: u64, den: u64) {
        self.num += num;
        self.den += den;
    }

    /// Closes the window. An empty denominator with a nonzero numerator reads
    /// as infinity (clamped by consumers); a fully empty window keeps the
    /// previous value.
    pub fn roll(&mut self) {
        if self.den > 0 {
            self.last = self.num as f64 / self.den as f64;
        } else if self.num > 0 {
            self.last = f64::INFINITY;
        }
        self.num = 0;
        self.den = 0;
    }

    pub fn value(&self) -> f64 {
        self.last
    }
}

/// GPU-wide counters visible to every SM.
#[derive(Debug, Clone, Default)]
pub struct GlobalCounters {
    /// Memory instructions in flight across all SMs.
    pub inflight_mem: usize,
    /// L2 misses / accesses over the last window.
    pub l2_miss: WindowRatio,
    /// Mean global-load latency over the last window.
    pub global_latency: WindowRatio,
    /// TBs not yet assigned to an SM.
    pub tb_queue_len: usize,
}

/// Shared L2 plus DRAM. L1s are per SM and passed in by the caller.
#[derive(Debug, Clone)]
pub struct MemorySystem {
    pub l2: SetAssocCache,
    l1_latency: u32,
    l2_latency: u32,
    dram_latency: u32,
    dram_interval: u64,
    dram_next_free: u64,
}

impl MemorySystem {
    pub fn new(cfg: &GpuConfig) -> Self {
        MemorySystem {
            l2: SetAssocCache::new(&cfg.l2),
            l1_latency: cfg.l1.latency,
            l2_latency: cfg.l2.latency,
            dram_latency: cfg.dram_latency,
            dram_interval: cfg.dram_service_interval as u64,
            dram_next_free: 0,
        }
    }

    /// Walks the hierarchy for a global access issued at `now`. The latency is
    /// the sum of level latencies down to the level that hits, plus any DRAM
    /// queueing delay when bandwidth limiting is enabled.
    pub fn global_access(&mut self, l1: &mut SetAssocCache, addr: u64, now: u64) -> (u32, HitLevel) {
        if l1.access(addr) {
            return (self.l1_latency, HitLevel::L1);
        }
        let to_l2 = self.l1_latency + self.l2_latency;
        if self.l2.access(addr) {
            return (to_l2, HitLevel::L2);
        }
        let mut latency = to_l2 + self.dram_latency;
        if self.dram_interval > 0 {
            let arrive = now + to_l2 as u64;
            let start = arrive.max(self.dram_next_free);
            self.dram_next_free = start + self.dram_interval;
            latency += (start - arrive) as u32;
        }
        (latency, HitLevel::Dram)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_latencies_by_level() {
        let cfg = GpuConfig::default();
        let mut mem = MemorySystem::new(&cfg);
        let mut l1 = SetAssocCache::new(&cfg.l1);
        assert_eq!(mem.global_access(&mut l1, 0x4000, 0), (450, HitLevel::Dram));
        assert_eq!(mem.global_access(&mut l1, 0x4000, 1), (30, HitLevel::L1));
        let mut other_l1 = SetAssocCache::new(&cfg.l1);
        assert_eq!(mem.global_access(&mut other_l1, 0x4000, 2), (150, HitLevel::L2));
    }

    #[test]
    fn dram_queueing_serializes_requests() {
        let cfg = GpuConfig {
            dram_service_interval: 4,
            ..GpuConfig::default()
        };
        let mut mem = MemorySystem::new(&cfg);
        let mut l1 = SetAssocCache::new(&cfg.l1);
        let (a, _) = mem.global_access(&mut l1, 0, 0);
        let (b, _) = mem.global_access(&mut l1, 1 << 20, 0);
        assert_eq!(a, 450);
        assert_eq!(b, 454);
    }

    #[test]
    fn window_ratio_semantics() {
        let mut w = WindowRatio::default();
        w.add(1, 4);
        assert_eq!(w.value(), 0.0);
        w.roll();
        assert_eq!(w.value(), 0.25);
        w.roll();
        assert_eq!(w.value(), 0.25);
        w.add(3, 0);
        w.roll();
        assert!(w.value().is_infinite());
    }
}
