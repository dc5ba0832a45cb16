use super::config::CacheGeometry;

/// Set-associative tag store with true LRU replacement.
///
/// Each set keeps its ways ordered most-recently-used first.
#[derive(Debug, Clone)]
pub struct SetAssocCache {
    sets: Vec<Vec<u64>>,
    ways: usize,
    line_shift: u32,
    num_sets: u64,
    pub hits: u64,
    pub misses: u64,
}

impl SetAssocCache {
    pub fn new(geometry: &CacheGeometry) -> Self {
        let sets = geometry.sets() as usize;
        assert!(sets > 0, "cache needs at least one set");
        SetAssocCache {
            sets: vec![Vec::with_capacity(geometry.ways as usize); sets],
            ways: geometry.ways as usize,
            line_shift: geometry.line_bytes.trailing_zeros(),
            num_sets: sets as u64,
            hits: 0,
            misses: 0,
        }
    }

    /// Looks up `addr`, filling the line on a miss. Returns true on a hit.
    pub fn access(&mut self, addr: u64) -> bool {
        let line = addr >> self.line_shift;
        let set = &mut self.sets[(line % self.num_sets) as usize];
        if let Some(pos) = set.iter().position(|&t| t == line) {
            let tag = set.remove(pos);
            set.insert(0, tag);
            self.hits += 1;
            true
        } else {
            if set.len() == self.ways {
                set.pop();
            }
            set.insert(0, line);
            self.misses += 1;
            false
        }
    }

    pub fn contains(&self, addr: u64) -> bool {
        let line = addr >> self.line_shift;
        self.sets[(line % self.num_sets) as usize].contains(&line)
    }

    pub fn accesses(&self) -> u64 {
        self.hits + self.misses
    }

    pub fn hit_rate(&self) -> f64 {
        if self.accesses() == 0 {
            0.0
        } else {
            self.hits as f64 / self.accesses() as f64
        }
    }
}
