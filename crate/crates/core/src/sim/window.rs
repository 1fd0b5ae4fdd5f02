use std::collections::VecDeque;

/// LRU set of resident memory blocks.
///
/// Front of the queue is least recently used.
#[derive(Debug, Clone)]
pub struct BlockWindow {
    capacity: usize,
    resident: VecDeque<usize>,
}

impl BlockWindow {
    /// An empty window; the first touch of every block is a miss.
    pub fn cold(capacity: usize) -> Self {
        assert!(capacity > 0, "window capacity must be positive");
        Self {
            capacity,
            resident: VecDeque::with_capacity(capacity),
        }
    }

    /// A window pre-loaded with blocks `0..min(capacity, total_blocks)`,
    /// block 0 being the most recently used.
    pub fn prewarmed(capacity: usize, total_blocks: usize) -> Self {
        let mut w = Self::cold(capacity);
        for b in (0..capacity.min(total_blocks)).rev() {
            w.resident.push_back(b);
        }
        w
    }

    /// Touches `block`; returns `true` on a hit. Misses evict the LRU block when full.
    pub fn access(&mut self, block: usize) -> bool {
        if let Some(pos) = self.resident.iter().position(|&b| b == block) {
            self.resident.remove(pos);
            self.resident.push_back(block);
            true
        } else {
            if self.resident.len() == self.capacity {
                self.resident.pop_front();
            }
            self.resident.push_back(block);
            false
        }
    }

    pub fn len(&self) -> usize {
        self.resident.len()
    }

    pub fn is_empty(&self) -> bool {
        self.resident.is_empty()
    }

    pub fn contains(&self, block: usize) -> bool {
        self.resident.contains(&block)
    }
}
