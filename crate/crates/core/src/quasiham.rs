//! Exact noise-averaged dynamics as one linear system on the joint
//! (configuration x Bloch) space.
//!
//! For l telegraph fluctuators the edge-sign vector takes 2^l configurations,
//! and each configuration c has a fixed Hamiltonian H_c whose unitary flow is
//! a rotation G_c of the Bloch vector. Conditioning on the configuration turns
//! the averaged evolution into the linear ODE
//!
//!   dz/dt = (V (x) I + diag(G_0, ..., G_{2^l - 1})) z
//!
//! where z stacks one Bloch vector per configuration and V is the classical
//! switching generator. The averaged state is the sum of the blocks. All
//! entries of the lifted generator are real, so a real start stays real; the
//! contraction step enforces that as a cheap integrity check.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::bloch::{BlochState, GeneratorBasis};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::complexify;
use crate::noise::NoiseModel;
use crate::propagator::{ActionOptions, CsrMatrix, ExpmPlan, Workspace};

/// Largest imaginary component tolerated when reading a real Bloch vector
/// back out of the complex work arrays.
pub const IMAG_TOL: f64 = 1e-9;

/// The lifted generator for a noisy walk, together with the pieces needed to
/// move between density operators, Bloch vectors, and the joint space.
#[derive(Debug, Clone)]
pub struct QuasiHamiltonian {
    graph: Graph,
    noise: NoiseModel,
    gamma: f64,
    target: Option<usize>,
    basis: GeneratorBasis,
    lifted: CsrMatrix,
}

/// Build the lifted generator for hopping rate `gamma` on `graph`, one
/// telegraph fluctuator per edge, and an optional rank-one sink term
/// -|target><target| in every configuration Hamiltonian.
pub fn assemble(
    graph: &Graph,
    noise: &NoiseModel,
    gamma: f64,
    target: Option<usize>,
) -> Result<QuasiHamiltonian> {
    if noise.n_fluctuators() != graph.edge_count() {
        return Err(Error::LengthMismatch {
            what: "fluctuators (one per graph edge)",
            expected: graph.edge_count(),
            got: noise.n_fluctuators(),
        });
    }
    if !gamma.is_finite() || gamma < 0.0 {
        return Err(Error::InvalidParameter {
            name: "gamma",
            reason: format!("must be finite and non-negative, got {gamma}"),
        });
    }
    if let Some(w) = target {
        if w >= graph.n_nodes() {
            return Err(Error::IndexOutOfRange {
                what: "target node",
                index: w,
                bound: graph.n_nodes(),
            });
        }
    }
    let basis = GeneratorBasis::new(graph.n_nodes())?;
    let d = basis.len();
    let nc = noise.n_configs();

    let mut trips: Vec<(usize, usize, Complex64)> = Vec::new();
    for &(r, c, v) in noise.generator().entries() {
        for k in 0..d {
            trips.push((r * d + k, c * d + k, Complex64::new(v, 0.0)));
        }
    }

    // Per-configuration Bloch rotations, assembled from the per-basis-element
    // rotation kernels: G_c = (1/2) sum_a Tr(lam_a H_c) K_a. Kernels are
    // computed once, on first use.
    let mut kernels: Vec<Option<Vec<(usize, usize, f64)>>> = vec![None; d];
    for cfg in 0..nc {
        let signs = noise.config_values(cfg)?;
        let mut h = complexify(&(graph.noisy_laplacian(noise.nu(), &signs)? * gamma));
        if let Some(w) = target {
            h[(w, w)] -= Complex64::new(1.0, 0.0);
        }
        let coeff = basis.coefficients(&h);
        for (a, &ha) in coeff.iter().enumerate() {
            if ha == 0.0 {
                continue;
            }
            let kernel = kernels[a].get_or_insert_with(|| basis.generator_of_basis(a));
            for &(r, c, kv) in kernel.iter() {
                trips.push((cfg * d + r, cfg * d + c, Complex64::new(0.5 * ha * kv, 0.0)));
            }
        }
    }

    let lifted = CsrMatrix::from_triplets(nc * d, &trips)?;
    Ok(QuasiHamiltonian {
        graph: graph.clone(),
        noise: *noise,
        gamma,
        target,
        basis,
        lifted,
    })
}

impl QuasiHamiltonian {
    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn target(&self) -> Option<usize> {
        self.target
    }

    pub fn basis(&self) -> &GeneratorBasis {
        &self.basis
    }

    pub fn n_configs(&self) -> usize {
        self.noise.n_configs()
    }

    pub fn bloch_dim(&self) -> usize {
        self.basis.len()
    }

    /// Dimension of the joint space, 2^l (n^2 - 1).
    pub fn dim(&self) -> usize {
        self.n_configs() * self.bloch_dim()
    }

    pub fn lifted(&self) -> &CsrMatrix {
        &self.lifted
    }

    /// Hamiltonian of one fixed fluctuator configuration.
    pub fn config_hamiltonian(&self, cfg: usize) -> Result<DMatrix<Complex64>> {
        let signs = self.noise.config_values(cfg)?;
        let mut h =
            complexify(&(self.graph.noisy_laplacian(self.noise.nu(), &signs)? * self.gamma));
        if let Some(w) = self.target {
            h[(w, w)] -= Complex64::new(1.0, 0.0);
        }
        Ok(h)
    }

    /// Replicate a Bloch vector over all configurations with stationary
    /// (uniform) weights, as a joint-space column.
    pub fn lift(&self, x: &BlochState) -> Result<Vec<Complex64>> {
        let d = self.bloch_dim();
        if x.len() != d {
            return Err(Error::LengthMismatch {
                what: "Bloch vector",
                expected: d,
                got: x.len(),
            });
        }
        let weight = 1.0 / self.n_configs() as f64;
        let mut z = Vec::with_capacity(self.dim());
        for _ in 0..self.n_configs() {
            for k in 0..d {
                z.push(Complex64::new(x.0[k] * weight, 0.0));
            }
        }
        Ok(z)
    }

    /// Sum the configuration blocks of a joint-space column back into one
    /// averaged Bloch vector, checking that no imaginary part has crept in.
    pub fn contract(&self, z: &[Complex64]) -> Result<BlochState> {
        if z.len() != self.dim() {
            return Err(Error::LengthMismatch {
                what: "joint-space column",
                expected: self.dim(),
                got: z.len(),
            });
        }
        let mut imag = 0.0f64;
        for v in z {
            imag = imag.max(v.im.abs());
        }
        if imag > IMAG_TOL {
            return Err(Error::Numerical {
                context: "imaginary residue in averaged state",
                value: imag,
                limit: IMAG_TOL,
            });
        }
        let d = self.bloch_dim();
        let mut x = BlochState::zeros(d);
        for block in z.chunks_exact(d) {
            for (xk, zk) in x.0.iter_mut().zip(block) {
                *xk += zk.re;
            }
        }
        Ok(x)
    }
}

/// Averaged-state trajectory on a time grid.
#[derive(Debug, Clone)]
pub struct DynamicsResult {
    pub times: Vec<f64>,
    pub states: Vec<BlochState>,
}

/// The averaged dynamical map: a propagation plan for the lifted generator
/// plus the lift / contract bookkeeping around it.
#[derive(Debug, Clone)]
pub struct AveragedMap {
    qh: QuasiHamiltonian,
    plan: ExpmPlan,
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::InvalidParameter {
            name: "times",
            reason: "entries must be finite and non-negative".into(),
        });
    }
    if times.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidParameter {
            name: "times",
            reason: "grid must be sorted ascending".into(),
        });
    }
    Ok(())
}

impl AveragedMap {
    pub fn new(qh: QuasiHamiltonian, opts: ActionOptions) -> Result<Self> {
        let plan = ExpmPlan::new(qh.lifted(), opts)?;
        Ok(AveragedMap { qh, plan })
    }

    pub fn quasi_hamiltonian(&self) -> &QuasiHamiltonian {
        &self.qh
    }

    pub fn plan(&self) -> &ExpmPlan {
        &self.plan
    }

    /// Averaged state at a single time.
    pub fn evolve(&self, x0: &BlochState, t: f64) -> Result<BlochState> {
        let grid = [t];
        check_times(&grid)?;
        let mut z = self.qh.lift(x0)?;
        let mut ws = Workspace::new();
        self.plan.advance(t, &mut z, 1, 1, &mut ws)?;
        self.qh.contract(&z)
    }

    /// Averaged states over an ascending time grid, each point stepped from
    /// the previous one.
    pub fn evolve_grid(&self, x0: &BlochState, times: &[f64]) -> Result<DynamicsResult> {
        check_times(times)?;
        let mut z = self.qh.lift(x0)?;
        let mut ws = Workspace::new();
        let mut states = Vec::with_capacity(times.len());
        let mut prev = 0.0;
        for &t in times {
            self.plan.advance(t - prev, &mut z, 1, 1, &mut ws)?;
            prev = t;
            states.push(self.qh.contract(&z)?);
        }
        Ok(DynamicsResult {
            times: times.to_vec(),
            states,
        })
    }

    /// Trajectory of a density operator (converted through Bloch space).
    pub fn evolve_density(
        &self,
        rho0: &DMatrix<Complex64>,
        times: &[f64],
    ) -> Result<DynamicsResult> {
        let x0 = self.qh.basis().to_bloch(rho0)?;
        self.evolve_grid(&x0, times)
    }

    /// Composition of fresh averaged maps: evolve to `tau1`, collapse the
    /// configuration register back to its stationary ensemble, and evolve the
    /// rest of the way to `tau`. Differs from `evolve(x0, tau)` exactly when
    /// the averaged map fails to be divisible.
    pub fn restarted(&self, x0: &BlochState, tau1: f64, tau: f64) -> Result<BlochState> {
        if !(0.0..=tau).contains(&tau1) || !tau.is_finite() {
            return Err(Error::InvalidParameter {
                name: "tau1",
                reason: format!("need 0 <= tau1 <= tau, got tau1 = {tau1}, tau = {tau}"),
            });
        }
        let mid = self.evolve(x0, tau1)?;
        let mut z = self.qh.lift(&mid)?;
        let mut ws = Workspace::new();
        self.plan.advance(tau - tau1, &mut z, 1, 1, &mut ws)?;
        self.qh.contract(&z)
    }
}
