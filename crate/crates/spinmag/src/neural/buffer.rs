//! Ring replay buffer with uniform sampling.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::mlp::NeuralError;

/// One stored interaction: (s, a, r, s', done).
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub s: Vec<f64>,
    pub a: Vec<f64>,
    pub r: f64,
    pub s_next: Vec<f64>,
    pub done: bool,
}

/// Fixed-capacity ring storage; pushing past capacity overwrites the oldest
/// entry.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    data: Vec<Transition>,
    head: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        Self { capacity, data: Vec::new(), head: 0 }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, t: Transition) {
        if self.data.len() < self.capacity {
            self.data.push(t);
        } else {
            self.data[self.head] = t;
            self.head = (self.head + 1) % self.capacity;
        }
    }

    /// Uniform sample with replacement.
    pub fn sample<'a>(
        &'a self,
        batch_size: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<&'a Transition>, NeuralError> {
        if self.data.len() < batch_size {
            return Err(NeuralError::BufferUnderfilled {
                requested: batch_size,
                available: self.data.len(),
            });
        }
        Ok((0..batch_size)
            .map(|_| &self.data[rng.random_range(0..self.data.len())])
            .collect())
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.data.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn t(tag: f64) -> Transition {
        Transition { s: vec![tag], a: vec![0.0], r: tag, s_next: vec![tag], done: false }
    }

    #[test]
    fn overwrites_oldest_when_full() {
        let mut buf = ReplayBuffer::new(2);
        buf.push(t(1.0));
        buf.push(t(2.0));
        buf.push(t(3.0));
        assert_eq!(buf.len(), 2);
        let tags: Vec<f64> = buf.iter().map(|x| x.r).collect();
        assert!(tags.contains(&2.0) && tags.contains(&3.0));
        assert!(!tags.contains(&1.0));
    }

    #[test]
    fn sampling_underfilled_buffer_errors() {
        let mut buf = ReplayBuffer::new(10);
        buf.push(t(1.0));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(buf.sample(2, &mut rng).is_err());
        assert!(buf.sample(1, &mut rng).is_ok());
    }

    #[test]
    fn sample_returns_only_stored_transitions() {
        let mut buf = ReplayBuffer::new(4);
        for k in 0..4 {
            buf.push(t(k as f64));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let batch = buf.sample(1, &mut rng).unwrap();
            assert!(batch[0].r >= 0.0 && batch[0].r < 4.0);
        }
    }

    #[test]
    fn sampling_is_close_to_uniform() {
        let mut buf = ReplayBuffer::new(10);
        for k in 0..10 {
            buf.push(t(k as f64));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let draws = 100_000;
        let mut counts = [0usize; 10];
        for _ in 0..draws / 10 {
            for item in buf.sample(10, &mut rng).unwrap() {
                counts[item.r as usize] += 1;
            }
        }
        // Each count is Binomial(draws, 1/10); allow 5 sigma.
        let expected = draws as f64 / 10.0;
        let sigma = (draws as f64 * 0.1 * 0.9).sqrt();
        for (k, &c) in counts.iter().enumerate() {
            assert!(
                (c as f64 - expected).abs() < 5.0 * sigma,
                "bucket {k}: {c} vs {expected}"
            );
        }
    }
}
