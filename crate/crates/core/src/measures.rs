//! Non-Markovianity quantifiers for the averaged dynamics: the divisibility
//! defect surface and its maximum, and the trace-distance backflow measure.
//!
//! Both scans propagate many related states at once: the restart branches of
//! the divisibility surface (one per interruption time) and the candidate
//! states of a backflow search all ride in one row-major block through the
//! same sparse exponential steps, so the matrix is streamed once per time
//! step regardless of how many branches are alive.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::bloch::{BlochState, GeneratorBasis};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::{complexify, hermitian_eigen, hermiticity_deviation, projector};
use crate::propagator::Workspace;
use crate::quasiham::{AveragedMap, QuasiHamiltonian, IMAG_TOL};

/// Trace-distance increments below this are treated as propagation noise.
pub const NOISE_FLOOR: f64 = 1e-8;

pub const DEFAULT_TAU_MAX: f64 = 25.0;
pub const DEFAULT_TAU_STEP: f64 = 0.25;
pub const DEFAULT_BLP_T_MAX: f64 = 50.0;
pub const DEFAULT_BLP_DT: f64 = 0.02;

/// Half the sum of absolute eigenvalues of rho1 - rho2. The operands are
/// ordered canonically before subtracting, so swapping them returns the
/// identical value bit for bit.
pub fn trace_distance(rho1: &DMatrix<Complex64>, rho2: &DMatrix<Complex64>) -> Result<f64> {
    if rho1.nrows() != rho2.nrows() || rho1.ncols() != rho2.ncols() || !rho1.is_square() {
        return Err(Error::LengthMismatch {
            what: "density matrix pair",
            expected: rho1.nrows(),
            got: rho2.nrows(),
        });
    }
    let swap = rho2
        .iter()
        .zip(rho1.iter())
        .find_map(|(b, a)| match (b.re, b.im).partial_cmp(&(a.re, a.im)) {
            Some(std::cmp::Ordering::Equal) | None => None,
            Some(ord) => Some(ord == std::cmp::Ordering::Less),
        })
        .unwrap_or(false);
    let diff = if swap { rho2 - rho1 } else { rho1 - rho2 };
    let dev = hermiticity_deviation(&diff);
    if dev > 1e-8 {
        return Err(Error::NotHermitian { deviation: dev });
    }
    let (eigs, _) = hermitian_eigen(&diff);
    Ok(0.5 * eigs.iter().map(|e| e.abs()).sum::<f64>())
}

/// Trace distance straight from Bloch coordinates: the identity parts cancel,
/// so only the traceless difference is diagonalized.
pub fn bloch_trace_distance(
    basis: &GeneratorBasis,
    x1: &BlochState,
    x2: &BlochState,
) -> Result<f64> {
    if x1.len() != basis.len() || x2.len() != basis.len() {
        return Err(Error::LengthMismatch {
            what: "Bloch vector",
            expected: basis.len(),
            got: x1.len().max(x2.len()),
        });
    }
    let n = basis.hilbert_dim();
    let scale = (n as f64).sqrt() / n as f64;
    // Fix the sign of the difference by its first nonzero coordinate so the
    // result is exactly symmetric in the two arguments.
    let flip =
        x1.0.iter()
            .zip(x2.0.iter())
            .find(|(a, b)| a != b)
            .map(|(a, b)| if a < b { -1.0 } else { 1.0 })
            .unwrap_or(1.0);
    let mut diff = DMatrix::<Complex64>::zeros(n, n);
    for a in 0..basis.len() {
        let w = flip * scale * (x1.0[a] - x2.0[a]);
        if w != 0.0 {
            let lam = basis.matrix(a);
            for r in 0..n {
                for c in 0..n {
                    diff[(r, c)] += lam[(r, c)] * Complex64::new(w, 0.0);
                }
            }
        }
    }
    let (eigs, _) = hermitian_eigen(&diff);
    Ok(0.5 * eigs.iter().map(|e| e.abs()).sum::<f64>())
}

/// Divisibility defect at one point: distance between the uninterrupted
/// evolution to tau and the evolution restarted at tau1.
pub fn gamma_divisibility(
    map: &AveragedMap,
    rho0: &DMatrix<Complex64>,
    tau: f64,
    tau1: f64,
) -> Result<f64> {
    let qh = map.quasi_hamiltonian();
    let x0 = qh.basis().to_bloch(rho0)?;
    let plain = map.evolve(&x0, tau)?;
    let restarted = map.restarted(&x0, tau1, tau)?;
    bloch_trace_distance(qh.basis(), &plain, &restarted)
}

/// Divisibility defect sampled over the triangle 0 <= tau1 <= tau <= tau_max.
#[derive(Debug, Clone)]
pub struct DivisibilityScan {
    /// Shared grid for tau and tau1.
    pub taus: Vec<f64>,
    /// rows[k][i] = defect at tau = taus[k], tau1 = taus[i], for i <= k.
    pub rows: Vec<Vec<f64>>,
    /// Largest defect on the triangle.
    pub n_m: f64,
    /// (tau, tau1) where the largest defect first occurs, scanning tau
    /// ascending and tau1 ascending within each tau.
    pub argmax: (f64, f64),
}

impl DivisibilityScan {
    /// All sampled points as (tau, tau1, defect), row by row.
    pub fn entries(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.rows.iter().enumerate().flat_map(move |(k, row)| {
            row.iter()
                .enumerate()
                .map(move |(i, &v)| (self.taus[k], self.taus[i], v))
        })
    }
}

fn lift_into_column(
    qh: &QuasiHamiltonian,
    x: &BlochState,
    block: &mut [Complex64],
    stride: usize,
    j: usize,
) {
    let d = qh.bloch_dim();
    let weight = 1.0 / qh.n_configs() as f64;
    for cfg in 0..qh.n_configs() {
        for k in 0..d {
            block[(cfg * d + k) * stride + j] = Complex64::new(x.0[k] * weight, 0.0);
        }
    }
}

fn contract_column(
    qh: &QuasiHamiltonian,
    block: &[Complex64],
    stride: usize,
    j: usize,
) -> Result<BlochState> {
    let d = qh.bloch_dim();
    let mut x = BlochState::zeros(d);
    let mut imag = 0.0f64;
    for cfg in 0..qh.n_configs() {
        for k in 0..d {
            let v = block[(cfg * d + k) * stride + j];
            x.0[k] += v.re;
            imag = imag.max(v.im.abs());
        }
    }
    if imag > IMAG_TOL {
        return Err(Error::Numerical {
            context: "imaginary residue in averaged state",
            value: imag,
            limit: IMAG_TOL,
        });
    }
    Ok(x)
}

fn grid_count(span: f64, step: f64, span_name: &'static str) -> Result<usize> {
    if step <= 0.0 || !step.is_finite() {
        return Err(Error::InvalidParameter {
            name: "step",
            reason: format!("must be positive and finite, got {step}"),
        });
    }
    if span <= 0.0 || !span.is_finite() {
        return Err(Error::InvalidParameter {
            name: span_name,
            reason: format!("must be positive and finite, got {span}"),
        });
    }
    let k = (span / step + 1e-9).floor() as usize;
    if k == 0 {
        return Err(Error::InvalidParameter {
            name: "step",
            reason: format!("step {step} exceeds the span {span}"),
        });
    }
    Ok(k)
}

/// Scan the divisibility defect on a uniform triangle grid and take its
/// maximum.
///
/// The uninterrupted trajectory and every restart branch advance together in
/// one block. Restarting at tau1 = 0 or at tau1 = tau composes with an
/// identity map, so those boundary values are zero exactly and are not
/// recomputed.
pub fn nm_divisibility(
    map: &AveragedMap,
    rho0: &DMatrix<Complex64>,
    tau_max: f64,
    step: f64,
) -> Result<DivisibilityScan> {
    let k_max = grid_count(tau_max, step, "tau_max")?;
    let qh = map.quasi_hamiltonian();
    let x0 = qh.basis().to_bloch(rho0)?;
    let taus: Vec<f64> = (0..=k_max).map(|k| k as f64 * step).collect();

    // Column 0 is the uninterrupted trajectory; column j >= 1 is the branch
    // restarted at taus[j]. The final branch would never be read, so the
    // block holds k_max columns.
    let stride = k_max.max(2);
    let mut block = vec![Complex64::default(); qh.dim() * stride];
    lift_into_column(qh, &x0, &mut block, stride, 0);
    let mut width = 1;
    let mut ws = Workspace::new();

    let mut rows: Vec<Vec<f64>> = vec![vec![0.0]];
    for k in 1..=k_max {
        map.plan()
            .advance(step, &mut block, stride, width, &mut ws)?;
        let base = contract_column(qh, &block, stride, 0)?;
        let mut row = Vec::with_capacity(k + 1);
        row.push(0.0);
        for j in 1..width {
            let branch = contract_column(qh, &block, stride, j)?;
            row.push(bloch_trace_distance(qh.basis(), &base, &branch)?);
        }
        row.push(0.0);
        rows.push(row);
        if k < k_max {
            lift_into_column(qh, &base, &mut block, stride, k);
            width = k + 1;
        }
    }

    let mut n_m = 0.0f64;
    let mut argmax = (0.0, 0.0);
    for (k, row) in rows.iter().enumerate() {
        for (i, &v) in row.iter().enumerate() {
            if v > n_m {
                n_m = v;
                argmax = (taus[k], taus[i]);
            }
        }
    }
    Ok(DivisibilityScan {
        taus,
        rows,
        n_m,
        argmax,
    })
}

/// Trace-distance series of one evolving state pair, with its backflow sum.
#[derive(Debug, Clone)]
pub struct BlpResult {
    pub times: Vec<f64>,
    pub distances: Vec<f64>,
    /// Forward-difference rate (D(t+dt) - D(t)) / dt; last entry 0.
    pub sigmas: Vec<f64>,
    /// Sum of distance increments above the noise floor.
    pub n_blp: f64,
}

fn backflow(times: &[f64], distances: &[f64]) -> (Vec<f64>, f64) {
    let mut sigmas = vec![0.0; times.len()];
    let mut total = 0.0;
    for k in 0..times.len().saturating_sub(1) {
        let inc = distances[k + 1] - distances[k];
        sigmas[k] = inc / (times[k + 1] - times[k]);
        if inc > NOISE_FLOOR {
            total += inc;
        }
    }
    (sigmas, total)
}

/// Evolve a state pair on a uniform grid and accumulate the positive
/// increments of their trace distance.
pub fn blp_measure(
    map: &AveragedMap,
    rho1: &DMatrix<Complex64>,
    rho2: &DMatrix<Complex64>,
    t_max: f64,
    dt: f64,
) -> Result<BlpResult> {
    let k_max = grid_count(t_max, dt, "t_max")?;
    let qh = map.quasi_hamiltonian();
    let x1 = qh.basis().to_bloch(rho1)?;
    let x2 = qh.basis().to_bloch(rho2)?;
    let times: Vec<f64> = (0..=k_max).map(|k| k as f64 * dt).collect();

    let stride = 2;
    let mut block = vec![Complex64::default(); qh.dim() * stride];
    lift_into_column(qh, &x1, &mut block, stride, 0);
    lift_into_column(qh, &x2, &mut block, stride, 1);
    let mut ws = Workspace::new();

    let mut distances = Vec::with_capacity(times.len());
    distances.push(bloch_trace_distance(qh.basis(), &x1, &x2)?);
    for _ in 1..=k_max {
        map.plan().advance(dt, &mut block, stride, 2, &mut ws)?;
        let a = contract_column(qh, &block, stride, 0)?;
        let b = contract_column(qh, &block, stride, 1)?;
        distances.push(bloch_trace_distance(qh.basis(), &a, &b)?);
    }
    let (sigmas, n_blp) = backflow(&times, &distances);
    Ok(BlpResult {
        times,
        distances,
        sigmas,
        n_blp,
    })
}

/// The balanced state orthogonal to the uniform superposition: amplitudes
/// -(n-1) on node 0 and +1 elsewhere, normalized.
pub fn orthogonal_ket(n: usize) -> Result<nalgebra::DVector<Complex64>> {
    if n < 2 {
        return Err(Error::InvalidDimension {
            what: "orthogonal state",
            min: 2,
            got: n,
        });
    }
    let norm = (n as f64 * (n as f64 - 1.0)).sqrt();
    Ok(nalgebra::DVector::from_fn(n, |k, _| {
        if k == 0 {
            Complex64::new(-((n - 1) as f64) / norm, 0.0)
        } else {
            Complex64::new(1.0 / norm, 0.0)
        }
    }))
}

/// Projector onto [`orthogonal_ket`].
pub fn optimal_orthogonal_state(n: usize) -> Result<DMatrix<Complex64>> {
    Ok(projector(&orthogonal_ket(n)?))
}

/// A labeled initial state for the backflow pair search.
#[derive(Debug, Clone)]
pub struct BlpCandidate {
    pub label: String,
    pub state: DMatrix<Complex64>,
}

/// Standard candidate pool: node states, Laplacian eigenstates, the balanced
/// orthogonal state, and seeded random pure states.
pub fn default_candidates(graph: &Graph, seed: u64, n_random: usize) -> Result<Vec<BlpCandidate>> {
    use rand::SeedableRng;
    let n = graph.n_nodes();
    let mut out = Vec::new();
    for k in 0..n {
        out.push(BlpCandidate {
            label: format!("node-{k}"),
            state: projector(&crate::linalg::basis_ket(n, k)),
        });
    }
    let (_, vectors) = hermitian_eigen(&complexify(&graph.laplacian()));
    for k in 0..n {
        out.push(BlpCandidate {
            label: format!("laplacian-{k}"),
            state: projector(&vectors.column(k).into_owned()),
        });
    }
    out.push(BlpCandidate {
        label: "balanced-orthogonal".into(),
        state: optimal_orthogonal_state(n)?,
    });
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    for k in 0..n_random {
        out.push(BlpCandidate {
            label: format!("random-{k}"),
            state: projector(&crate::linalg::random_pure_state(n, &mut rng)),
        });
    }
    Ok(out)
}

/// Outcome of a backflow pair search over a candidate pool.
#[derive(Debug, Clone)]
pub struct BlpSearchOutcome {
    /// Index of the winning candidate.
    pub winner: usize,
    /// Backflow sum of every candidate, in pool order.
    pub totals: Vec<f64>,
    /// Full series for the winner.
    pub best: BlpResult,
}

/// Evaluate the backflow measure against a fixed first state for every
/// candidate second state, all sharing one propagation block, and keep the
/// candidate with the largest backflow (first wins ties).
pub fn blp_pair_search(
    map: &AveragedMap,
    rho1: &DMatrix<Complex64>,
    candidates: &[BlpCandidate],
    t_max: f64,
    dt: f64,
) -> Result<BlpSearchOutcome> {
    if candidates.is_empty() {
        return Err(Error::InvalidParameter {
            name: "candidates",
            reason: "pair search needs at least one candidate".into(),
        });
    }
    let k_max = grid_count(t_max, dt, "t_max")?;
    let qh = map.quasi_hamiltonian();
    let x1 = qh.basis().to_bloch(rho1)?;
    let xs: Vec<BlochState> = candidates
        .iter()
        .map(|c| qh.basis().to_bloch(&c.state))
        .collect::<Result<_>>()?;
    let times: Vec<f64> = (0..=k_max).map(|k| k as f64 * dt).collect();

    let stride = candidates.len() + 1;
    let mut block = vec![Complex64::default(); qh.dim() * stride];
    lift_into_column(qh, &x1, &mut block, stride, 0);
    for (j, x) in xs.iter().enumerate() {
        lift_into_column(qh, x, &mut block, stride, j + 1);
    }
    let mut ws = Workspace::new();

    let mut series: Vec<Vec<f64>> = vec![Vec::with_capacity(times.len()); candidates.len()];
    for (j, x) in xs.iter().enumerate() {
        series[j].push(bloch_trace_distance(qh.basis(), &x1, x)?);
    }
    for _ in 1..=k_max {
        map.plan()
            .advance(dt, &mut block, stride, stride, &mut ws)?;
        let base = contract_column(qh, &block, stride, 0)?;
        for (j, s) in series.iter_mut().enumerate() {
            let cand = contract_column(qh, &block, stride, j + 1)?;
            s.push(bloch_trace_distance(qh.basis(), &base, &cand)?);
        }
    }

    let totals: Vec<f64> = series.iter().map(|dist| backflow(&times, dist).1).collect();
    let mut winner = 0usize;
    for j in 1..totals.len() {
        if totals[j] > totals[winner] {
            winner = j;
        }
    }
    let distances = series.swap_remove(winner);
    let (sigmas, n_blp) = backflow(&times, &distances);
    Ok(BlpSearchOutcome {
        winner,
        totals,
        best: BlpResult {
            times,
            distances,
            sigmas,
            n_blp,
        },
    })
}
