use ndarray::{Array1, Array2};
use rand::Rng;

use crate::geometry::Vec2;

/// One environment step as stored for learning. `u` is the executed
/// (shielded) control.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub episode: usize,
    pub step: usize,
    pub x: Vec2,
    pub u: Vec2,
    pub x_next: Vec2,
    pub reward: f64,
    pub obs: Vec<f64>,
    pub obs_next: Vec<f64>,
}

/// Minibatch in matrix form.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub obs: Array2<f64>,
    pub act: Array2<f64>,
    pub rew: Array1<f64>,
    pub next: Array2<f64>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.rew.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rew.is_empty()
    }
}

/// Fixed-capacity ring buffer of transitions.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    obs_dim: usize,
    obs: Vec<f64>,
    next: Vec<f64>,
    act: Vec<f64>,
    rew: Vec<f64>,
    len: usize,
    head: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, obs_dim: usize) -> Self {
        assert!(capacity > 0);
        ReplayBuffer {
            capacity,
            obs_dim,
            obs: vec![0.0; capacity * obs_dim],
            next: vec![0.0; capacity * obs_dim],
            act: vec![0.0; capacity * 2],
            rew: vec![0.0; capacity],
            len: 0,
            head: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn push(&mut self, t: &Transition) {
        let d = self.obs_dim;
        let i = self.head;
        self.obs[i * d..(i + 1) * d].copy_from_slice(&t.obs);
        self.next[i * d..(i + 1) * d].copy_from_slice(&t.obs_next);
        self.act[2 * i] = t.u.x;
        self.act[2 * i + 1] = t.u.y;
        self.rew[i] = t.reward;
        self.head = (self.head + 1) % self.capacity;
        self.len = (self.len + 1).min(self.capacity);
    }

    /// Uniform sample with replacement.
    pub fn sample(&self, n: usize, rng: &mut impl Rng) -> Batch {
        assert!(self.len > 0, "sampling from an empty buffer");
        let d = self.obs_dim;
        let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..self.len)).collect();
        Batch {
            obs: Array2::from_shape_fn((n, d), |(r, c)| self.obs[idx[r] * d + c]),
            act: Array2::from_shape_fn((n, 2), |(r, c)| self.act[idx[r] * 2 + c]),
            rew: Array1::from_shape_fn(n, |r| self.rew[idx[r]]),
            next: Array2::from_shape_fn((n, d), |(r, c)| self.next[idx[r] * d + c]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn tr(k: usize) -> Transition {
        Transition {
            episode: 0,
            step: k,
            x: Vec2::ZERO,
            u: Vec2::new(k as f64, 0.0),
            x_next: Vec2::ZERO,
            reward: k as f64,
            obs: vec![k as f64; 3],
            obs_next: vec![k as f64 + 1.0; 3],
        }
    }

    #[test]
    fn ring_overwrites_oldest() {
        let mut b = ReplayBuffer::new(4, 3);
        for k in 0..6 {
            b.push(&tr(k));
        }
        assert_eq!(b.len(), 4);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let batch = b.sample(64, &mut rng);
        for r in 0..64 {
            let k = batch.rew[r];
            assert!(k >= 2.0);
            assert_eq!(batch.act[[r, 0]], k);
            assert_eq!(batch.obs[[r, 2]], k);
            assert_eq!(batch.next[[r, 0]], k + 1.0);
        }
    }
}
