//! Random telegraph noise: independent two-state fluctuators with Poisson
//! switching, their joint configuration space, and the classical generator of
//! the switching dynamics.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Beyond this many fluctuators the 2^l configuration space stops being
/// practical to enumerate.
pub const MAX_FLUCTUATORS: usize = 20;

/// l independent telegraph fluctuators, each switching between +1 and -1 at
/// Poisson rate `mu`, coupled into edge weights with amplitude `nu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    n_fluctuators: usize,
    mu: f64,
    nu: f64,
}

impl NoiseModel {
    pub fn new(n_fluctuators: usize, mu: f64, nu: f64) -> Result<Self> {
        if n_fluctuators == 0 || n_fluctuators > MAX_FLUCTUATORS {
            return Err(Error::InvalidParameter {
                name: "n_fluctuators",
                reason: format!("must lie in 1..={MAX_FLUCTUATORS}, got {n_fluctuators}"),
            });
        }
        if mu <= 0.0 || !mu.is_finite() {
            return Err(Error::InvalidParameter {
                name: "mu",
                reason: format!("switching rate must be positive, got {mu}"),
            });
        }
        if !(0.0..=1.0).contains(&nu) {
            return Err(Error::InvalidParameter {
                name: "nu",
                reason: format!("coupling must lie in [0, 1], got {nu}"),
            });
        }
        Ok(NoiseModel {
            n_fluctuators,
            mu,
            nu,
        })
    }

    pub fn n_fluctuators(&self) -> usize {
        self.n_fluctuators
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// Number of joint configurations, 2^l.
    pub fn n_configs(&self) -> usize {
        1 << self.n_fluctuators
    }

    /// Signs (g_0, ..., g_{l-1}) of configuration `c`: fluctuator i reads bit
    /// i of c, with a clear bit meaning +1 and a set bit meaning -1.
    pub fn config_values(&self, c: usize) -> Result<Vec<i8>> {
        if c >= self.n_configs() {
            return Err(Error::IndexOutOfRange {
                what: "configuration",
                index: c,
                bound: self.n_configs(),
            });
        }
        Ok((0..self.n_fluctuators)
            .map(|i| if c >> i & 1 == 0 { 1 } else { -1 })
            .collect())
    }

    /// Generator of the joint switching process on configuration space: each
    /// single-bit flip carries rate `mu`, diagonals make columns sum to zero.
    pub fn generator(&self) -> ClassicalGenerator {
        let dim = self.n_configs();
        let mut entries = Vec::with_capacity(dim * (self.n_fluctuators + 1));
        let total = self.n_fluctuators as f64 * self.mu;
        for c in 0..dim {
            entries.push((c, c, -total));
            for i in 0..self.n_fluctuators {
                entries.push((c ^ (1 << i), c, self.mu));
            }
        }
        ClassicalGenerator { dim, entries }
    }

    /// Stationary distribution of the switching process: uniform.
    pub fn stationary_distribution(&self) -> Vec<f64> {
        vec![1.0 / self.n_configs() as f64; self.n_configs()]
    }

    /// Single-fluctuator autocorrelation <g(t+tau) g(t)> = exp(-2 mu |tau|).
    pub fn autocorrelation(&self, tau: f64) -> f64 {
        (-2.0 * self.mu * tau.abs()).exp()
    }
}

/// Sparse real generator of the classical switching dynamics, stored as
/// (row, col, value) triplets.
#[derive(Debug, Clone)]
pub struct ClassicalGenerator {
    dim: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl ClassicalGenerator {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        for &(r, c, v) in &self.entries {
            y[r] += v * x[c];
        }
        y
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for &(r, c, v) in &self.entries {
            m[(r, c)] += v;
        }
        m
    }
}
