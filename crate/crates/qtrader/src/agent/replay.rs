//! Bounded experience-replay ring buffer with uniform without-replacement
//! sampling.

use std::collections::VecDeque;

use rand::Rng;

use super::{AgentError, Transition};

#[derive(Debug)]
pub struct ReplayBuffer {
    entries: VecDeque<Transition>,
    capacity: usize,
    inserted: u64,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            entries: VecDeque::with_capacity(capacity),
            capacity,
            inserted: 0,
        }
    }

    /// Appends a transition, evicting the oldest one at capacity.
    pub fn push(&mut self, transition: Transition) {
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(transition);
        self.inserted += 1;
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Total pushes ever, including evicted ones.
    pub fn inserted(&self) -> u64 {
        self.inserted
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.entries.iter()
    }

    /// Draws `batch_size` distinct transitions uniformly at random.
    pub fn sample<R: Rng>(
        &self,
        batch_size: usize,
        rng: &mut R,
    ) -> Result<Vec<Transition>, AgentError> {
        if self.entries.len() < batch_size {
            return Err(AgentError::Underfilled {
                have: self.entries.len(),
                need: batch_size,
            });
        }
        Ok(rand::seq::index::sample(rng, self.entries.len(), batch_size)
            .into_iter()
            .map(|i| self.entries[i].clone())
            .collect())
    }
}
