//! Seeded random points.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform samples from an axis-aligned box.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorSampler {
    pub lo: DVector<f64>,
    pub hi: DVector<f64>,
}

impl VectorSampler {
    /// The cube `[-half, half]^dim`.
    pub fn cube(dim: usize, half: f64) -> Self {
        Self { lo: DVector::from_element(dim, -half), hi: DVector::from_element(dim, half) }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn sample(&self, rng: &mut SeededRng) -> DVector<f64> {
        DVector::from_iterator(self.dim(), self.lo.iter().zip(self.hi.iter()).map(|(&l, &h)| rng.random_range(l..=h)))
    }
}
