//! Spatial search on a graph: hopping Hamiltonian gamma L minus a rank-one
//! sink on the target node, started from the uniform superposition, scored by
//! the peak target population over a time horizon.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::bloch::{BlochState, GeneratorBasis};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::{complexify, uniform_ket, HamiltonianEigen};
use crate::noise::NoiseModel;
use crate::quasiham::{assemble, AveragedMap, QuasiHamiltonian};

pub const DEFAULT_TIME_STEP: f64 = 0.05;

/// Search horizon long enough to contain the first success peak, which moves
/// out like sqrt(n) as graphs grow.
pub fn default_horizon(n: usize) -> f64 {
    (2.0 * std::f64::consts::PI * (n as f64).sqrt()).max(25.0)
}

/// Hopping-rate candidates for calibration.
pub fn default_gamma_grid() -> Vec<f64> {
    (1..=20).map(|k| k as f64 * 0.05).collect()
}

/// Uniform grid from 0 to `horizon` in steps of `step`.
pub fn time_grid(horizon: f64, step: f64) -> Result<Vec<f64>> {
    if step <= 0.0 || !step.is_finite() {
        return Err(Error::InvalidParameter {
            name: "step",
            reason: format!("must be positive and finite, got {step}"),
        });
    }
    if horizon < 0.0 || !horizon.is_finite() {
        return Err(Error::InvalidParameter {
            name: "horizon",
            reason: format!("must be non-negative and finite, got {horizon}"),
        });
    }
    let n_steps = (horizon / step + 1e-9).floor() as usize;
    Ok((0..=n_steps).map(|k| k as f64 * step).collect())
}

/// A search instance: where to look and how fast to hop.
#[derive(Debug, Clone)]
pub struct SearchSpec {
    graph: Graph,
    target: usize,
    gamma: f64,
}

impl SearchSpec {
    pub fn new(graph: Graph, target: usize, gamma: f64) -> Result<Self> {
        if target >= graph.n_nodes() {
            return Err(Error::IndexOutOfRange {
                what: "target node",
                index: target,
                bound: graph.n_nodes(),
            });
        }
        if !gamma.is_finite() || gamma < 0.0 {
            return Err(Error::InvalidParameter {
                name: "gamma",
                reason: format!("must be finite and non-negative, got {gamma}"),
            });
        }
        Ok(SearchSpec {
            graph,
            target,
            gamma,
        })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn target(&self) -> usize {
        self.target
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Noiseless search Hamiltonian gamma L - |target><target|.
    pub fn hamiltonian(&self) -> DMatrix<Complex64> {
        let mut h = complexify(&(self.graph.laplacian() * self.gamma));
        h[(self.target, self.target)] -= Complex64::new(1.0, 0.0);
        h
    }

    /// Uniform superposition over the nodes.
    pub fn initial_state(&self) -> DVector<Complex64> {
        uniform_ket(self.graph.n_nodes())
    }

    /// Target population of the coherent (noiseless) evolution on a grid.
    pub fn noiseless_populations(&self, times: &[f64]) -> Result<Vec<f64>> {
        let eigen = HamiltonianEigen::new(&self.hamiltonian())?;
        let s = self.initial_state();
        let n = self.graph.n_nodes();
        // p(t) = |sum_k exp(-i e_k t) <w|v_k><v_k|s>|^2
        let amps: Vec<Complex64> = (0..n)
            .map(|k| {
                let v = eigen.eigenvector(k);
                v[self.target] * v.dotc(&s)
            })
            .collect();
        Ok(times
            .iter()
            .map(|&t| {
                let mut a = Complex64::default();
                for (k, &amp) in amps.iter().enumerate() {
                    a += amp * (Complex64::new(0.0, -eigen.eigenvalues()[k] * t)).exp();
                }
                a.norm_sqr()
            })
            .collect())
    }

    /// Lifted generator for this search under the given noise model.
    pub fn assemble(&self, noise: &NoiseModel) -> Result<QuasiHamiltonian> {
        assemble(&self.graph, noise, self.gamma, Some(self.target))
    }
}

/// Population of one node read directly off a Bloch vector.
pub fn node_population(basis: &GeneratorBasis, x: &BlochState, node: usize) -> Result<f64> {
    let n = basis.hilbert_dim();
    if node >= n {
        return Err(Error::IndexOutOfRange {
            what: "node",
            index: node,
            bound: n,
        });
    }
    if x.len() != basis.len() {
        return Err(Error::LengthMismatch {
            what: "Bloch vector",
            expected: basis.len(),
            got: x.len(),
        });
    }
    let mut p = 1.0 / n as f64;
    let scale = (n as f64).sqrt() / n as f64;
    for a in 0..basis.len() {
        let w = basis.matrix(a)[(node, node)].re;
        if w != 0.0 {
            p += scale * x.0[a] * w;
        }
    }
    Ok(p)
}

/// Target population of the noise-averaged evolution from the uniform start,
/// on the given grid. The map must carry a target node.
pub fn population_curve(map: &AveragedMap, times: &[f64]) -> Result<Vec<f64>> {
    let qh = map.quasi_hamiltonian();
    let target = qh.target().ok_or(Error::InvalidParameter {
        name: "target",
        reason: "averaged map was assembled without a target node".into(),
    })?;
    let n = qh.graph().n_nodes();
    let x0 = qh
        .basis()
        .to_bloch(&crate::linalg::projector(&uniform_ket(n)))?;
    let traj = map.evolve_grid(&x0, times)?;
    traj.states
        .iter()
        .map(|x| node_population(qh.basis(), x, target))
        .collect()
}

/// First strict maximum of a sampled curve: (t_opt, peak value).
pub fn peak(times: &[f64], values: &[f64]) -> Result<(f64, f64)> {
    if times.len() != values.len() {
        return Err(Error::LengthMismatch {
            what: "curve",
            expected: times.len(),
            got: values.len(),
        });
    }
    if times.is_empty() {
        return Err(Error::InvalidParameter {
            name: "times",
            reason: "cannot take the peak of an empty grid".into(),
        });
    }
    let mut best = 0usize;
    for k in 1..values.len() {
        if values[k] > values[best] {
            best = k;
        }
    }
    Ok((times[best], values[best]))
}

/// Result of a hopping-rate calibration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub gamma: f64,
    pub p_succ: f64,
    pub t_opt: f64,
}

/// Pick the hopping rate whose noiseless evolution reaches the highest target
/// population on the grid. Ties keep the smallest rate.
pub fn calibrate_gamma(
    graph: &Graph,
    target: usize,
    gammas: &[f64],
    times: &[f64],
) -> Result<Calibration> {
    if gammas.is_empty() {
        return Err(Error::InvalidParameter {
            name: "gammas",
            reason: "calibration needs at least one candidate".into(),
        });
    }
    let mut best: Option<Calibration> = None;
    for &gamma in gammas {
        let spec = SearchSpec::new(graph.clone(), target, gamma)?;
        let pops = spec.noiseless_populations(times)?;
        let (t_opt, p_succ) = peak(times, &pops)?;
        if best.map(|b| p_succ > b.p_succ).unwrap_or(true) {
            best = Some(Calibration {
                gamma,
                p_succ,
                t_opt,
            });
        }
    }
    Ok(best.unwrap())
}
