use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::estimation::Cost;

/// One queued copy of a node. Copies go stale when the node is re-inserted
/// or closed; the owner decides validity by comparing `seq`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OpenEntry {
    pub f: Cost,
    pub g_min: Cost,
    pub seq: u64,
    pub node: u32,
}

impl Eq for OpenEntry {}

impl Ord for OpenEntry {
    /// Max-heap order: smallest `f` first, then larger `g_min`, then oldest.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| self.g_min.total_cmp(&other.g_min))
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for OpenEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Priority queue with lazy deletion.
#[derive(Debug, Default)]
pub struct OpenList {
    heap: BinaryHeap<OpenEntry>,
    next_seq: u64,
}

impl OpenList {
    pub fn new() -> Self {
        OpenList::default()
    }

    /// Queues a node and returns the sequence number identifying this copy.
    pub fn push(&mut self, f: Cost, g_min: Cost, node: u32) -> u64 {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(OpenEntry { f, g_min, seq, node });
        seq
    }

    /// Removes and returns the best entry accepted by `is_live`, discarding
    /// stale entries on the way.
    pub fn pop(&mut self, mut is_live: impl FnMut(&OpenEntry) -> bool) -> Option<OpenEntry> {
        while let Some(entry) = self.heap.pop() {
            if is_live(&entry) {
                return Some(entry);
            }
        }
        None
    }

    /// Best live entry without removing it.
    pub fn peek(&mut self, mut is_live: impl FnMut(&OpenEntry) -> bool) -> Option<OpenEntry> {
        while let Some(entry) = self.heap.peek() {
            if is_live(entry) {
                return Some(*entry);
            }
            self.heap.pop();
        }
        None
    }

    /// Number of queued entries, stale ones included.
    pub fn raw_len(&self) -> usize {
        self.heap.len()
    }
}
