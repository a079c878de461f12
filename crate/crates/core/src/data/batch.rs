use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use crate::rng::{self, Purpose};

/// Successive shuffled epochs over `0..len`, drawn from one seeded stream.
#[derive(Debug, Clone)]
pub struct BatchSchedule {
    len: usize,
    batch_size: usize,
    rng: ChaCha8Rng,
}

impl BatchSchedule {
    pub fn new(len: usize, batch_size: usize, seed: u64) -> Self {
        Self::with_purpose(len, batch_size, seed, Purpose::BatchOrder)
    }

    pub fn with_purpose(len: usize, batch_size: usize, seed: u64, purpose: Purpose) -> Self {
        assert!(batch_size >= 1, "batch size must be at least 1");
        BatchSchedule {
            len,
            batch_size,
            rng: rng::stream(seed, purpose),
        }
    }

    /// Index batches of the next epoch; the last batch may be short.
    pub fn next_epoch(&mut self) -> Vec<Vec<usize>> {
        let mut order: Vec<usize> = (0..self.len).collect();
        order.shuffle(&mut self.rng);
        order.chunks(self.batch_size).map(<[usize]>::to_vec).collect()
    }
}

/// One seeded epoch of index batches over `0..len`.
pub fn batches(len: usize, batch_size: usize, seed: u64) -> Vec<Vec<usize>> {
    BatchSchedule::new(len, batch_size, seed).next_epoch()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_by_four() {
        let sizes: Vec<usize> = batches(10, 4, 0).iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![4, 4, 2]);
    }

    #[test]
    fn seeded_order_repeats() {
        assert_eq!(batches(50, 7, 3), batches(50, 7, 3));
        assert_ne!(batches(50, 7, 3), batches(50, 7, 4));
    }

    #[test]
    fn epochs_differ() {
        let mut s = BatchSchedule::new(30, 30, 1);
        assert_ne!(s.next_epoch(), s.next_epoch());
    }

    #[test]
    fn empty_collection() {
        assert!(batches(0, 3, 0).is_empty());
    }
}
