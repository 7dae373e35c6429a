use std::sync::Arc;

use rand::Rng;

use crate::env::{FlowRequest, NetworkState};

/// Default replay capacity.
pub const REPLAY_CAPACITY: usize = 10_000;
/// Added to every |TD error| so that no transition has zero priority.
pub const PRIORITY_BETA: f64 = 0.01;

/// One routing decision and its outcome.
#[derive(Debug, Clone)]
pub struct Transition {
    pub state: Arc<NetworkState>,
    pub action: usize,
    pub request: FlowRequest,
    pub reward: f64,
    pub next_state: Arc<NetworkState>,
    pub congestion: bool,
}

/// Binary sum tree over a fixed number of leaves.
#[derive(Debug, Clone)]
struct SumTree {
    leaves: usize,
    nodes: Vec<f64>,
}

impl SumTree {
    fn new(capacity: usize) -> Self {
        let leaves = capacity.next_power_of_two();
        SumTree { leaves, nodes: vec![0.0; 2 * leaves] }
    }

    fn total(&self) -> f64 {
        self.nodes[1]
    }

    fn get(&self, slot: usize) -> f64 {
        self.nodes[self.leaves + slot]
    }

    fn set(&mut self, slot: usize, value: f64) {
        let mut i = self.leaves + slot;
        self.nodes[i] = value;
        // Parents are recomputed from children so no drift accumulates.
        while i > 1 {
            i /= 2;
            self.nodes[i] = self.nodes[2 * i] + self.nodes[2 * i + 1];
        }
    }

    /// Leaf whose cumulative interval contains `mass`.
    fn find(&self, mut mass: f64) -> usize {
        let mut i = 1;
        while i < self.leaves {
            let left = self.nodes[2 * i];
            if mass < left {
                i *= 2;
            } else {
                mass -= left;
                i = 2 * i + 1;
            }
        }
        i - self.leaves
    }
}

/// Bounded FIFO replay memory with proportional prioritized sampling.
///
/// Slots are reused in insertion order, so the oldest transition is always
/// the one evicted.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    slots: Vec<Transition>,
    next: usize,
    tree: SumTree,
    inserted: u64,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        ReplayBuffer { capacity, slots: Vec::with_capacity(capacity.min(1 << 16)), next: 0, tree: SumTree::new(capacity), inserted: 0 }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Total number of pushes, including evicted transitions.
    pub fn inserted(&self) -> u64 {
        self.inserted
    }

    /// Stores a transition, evicting the oldest when full. Returns its slot.
    pub fn push(&mut self, transition: Transition, priority: f64) -> usize {
        assert!(priority > 0.0 && priority.is_finite(), "priority must be positive and finite, got {priority}");
        let slot = self.next;
        if self.slots.len() < self.capacity {
            self.slots.push(transition);
        } else {
            self.slots[slot] = transition;
        }
        self.tree.set(slot, priority);
        self.next = (slot + 1) % self.capacity;
        self.inserted += 1;
        slot
    }

    pub fn get(&self, slot: usize) -> &Transition {
        &self.slots[slot]
    }

    pub fn priority(&self, slot: usize) -> f64 {
        assert!(slot < self.len());
        self.tree.get(slot)
    }

    pub fn set_priority(&mut self, slot: usize, priority: f64) {
        assert!(slot < self.len(), "slot {slot} is empty");
        assert!(priority > 0.0 && priority.is_finite(), "priority must be positive and finite, got {priority}");
        self.tree.set(slot, priority);
    }

    pub fn priority_sum(&self) -> f64 {
        self.tree.total()
    }

    /// Slots from oldest to newest.
    pub fn slots_oldest_first(&self) -> impl Iterator<Item = usize> + '_ {
        let n = self.len();
        let start = if n < self.capacity { 0 } else { self.next };
        (0..n).map(move |i| (start + i) % self.capacity)
    }

    /// One slot drawn with probability `p_i / sum(p)`.
    pub fn sample_slot(&self, rng: &mut impl Rng) -> usize {
        assert!(!self.is_empty(), "sampling from an empty buffer");
        let mass = rng.gen::<f64>() * self.tree.total();
        // Rounding can push the walk onto an empty trailing leaf.
        self.tree.find(mass).min(self.len() - 1)
    }
}

/// Sampled slots for one mini-batch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Batch {
    pub slots: Vec<usize>,
}

/// Draws `batch_size` slots with replacement, or `None` while the buffer
/// holds no more than `batch_size` transitions.
pub fn sample_batch(buffer: &ReplayBuffer, batch_size: usize, rng: &mut impl Rng) -> Option<Batch> {
    if buffer.len() <= batch_size {
        return None;
    }
    Some(Batch { slots: (0..batch_size).map(|_| buffer.sample_slot(rng)).collect() })
}
