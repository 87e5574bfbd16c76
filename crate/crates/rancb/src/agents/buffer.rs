//! Ring replay buffer with uniform minibatch sampling.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Experience;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplayBuffer {
    data: Vec<Experience>,
    capacity: usize,
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        ReplayBuffer {
            data: Vec::with_capacity(capacity.min(4096)),
            capacity,
            next: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, i: usize) -> &Experience {
        &self.data[i]
    }

    /// Insert, overwriting the oldest element once full.
    pub fn push(&mut self, exp: Experience) {
        if self.data.len() < self.capacity {
            self.data.push(exp);
        } else {
            self.data[self.next] = exp;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    /// Uniform minibatch indices: without replacement when the buffer holds at
    /// least `batch` elements, with replacement otherwise.
    pub fn sample_indices<R: Rng + ?Sized>(&self, rng: &mut R, batch: usize) -> Vec<usize> {
        assert!(!self.data.is_empty(), "sampling from an empty buffer");
        if self.data.len() >= batch {
            rand::seq::index::sample(rng, self.data.len(), batch).into_vec()
        } else {
            (0..batch).map(|_| rng.gen_range(0..self.data.len())).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn exp(v: f64) -> Experience {
        Experience {
            context: vec![v],
            action: vec![0.0],
            metrics: vec![v, 0.0],
        }
    }

    #[test]
    fn ring_overwrites_oldest() {
        let mut buf = ReplayBuffer::new(3);
        for i in 0..5 {
            buf.push(exp(i as f64));
        }
        assert_eq!(buf.len(), 3);
        let kept: Vec<f64> = (0..3).map(|i| buf.get(i).metrics[0]).collect();
        assert!(kept.contains(&2.0) && kept.contains(&3.0) && kept.contains(&4.0));
    }

    #[test]
    fn minibatch_without_replacement_when_full_enough() {
        let mut buf = ReplayBuffer::new(100);
        for i in 0..100 {
            buf.push(exp(i as f64));
        }
        let mut rng = StdRng::seed_from_u64(0);
        let idx = buf.sample_indices(&mut rng, 64);
        let mut dedup = idx.clone();
        dedup.sort_unstable();
        dedup.dedup();
        assert_eq!(dedup.len(), 64);
    }

    #[test]
    fn with_replacement_when_small() {
        let mut buf = ReplayBuffer::new(100);
        buf.push(exp(0.0));
        buf.push(exp(1.0));
        let mut rng = StdRng::seed_from_u64(0);
        let idx = buf.sample_indices(&mut rng, 8);
        assert_eq!(idx.len(), 8);
        assert!(idx.iter().all(|&i| i < 2));
    }

    /// Draw frequencies over a 100-element buffer stay within 3 sigma of
    /// uniform across 1e5 draws.
    #[test]
    fn replay_uniformity() {
        let mut buf = ReplayBuffer::new(100);
        for i in 0..100 {
            buf.push(exp(i as f64));
        }
        let mut rng = StdRng::seed_from_u64(7);
        let draws = 100_000usize;
        let mut counts = vec![0u64; 100];
        let per_call = 10;
        for _ in 0..draws / per_call {
            for i in buf.sample_indices(&mut rng, per_call) {
                counts[i] += 1;
            }
        }
        let p = 1.0 / 100.0;
        let mean = draws as f64 * p;
        let sd = (draws as f64 * p * (1.0 - p)).sqrt();
        for (i, &c) in counts.iter().enumerate() {
            assert!(
                (c as f64 - mean).abs() < 4.0 * sd,
                "element {i} drawn {c} times (mean {mean}, sd {sd})"
            );
        }
        let within3 = counts.iter().filter(|&&c| (c as f64 - mean).abs() < 3.0 * sd).count();
        assert!(within3 >= 99, "{within3}/100 inside 3 sigma");
    }
}
