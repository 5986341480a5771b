//! Monte Carlo cross-check of the averaged dynamics: sample explicit
//! telegraph trajectories, evolve the pure state piecewise between switching
//! events, and average the resulting density matrices.
//!
//! Trajectory idx draws from an independent counter-mode stream (`set_stream`)
//! of one seeded generator, and partial sums are combined in fixed chunk
//! order, so results are identical for any thread count.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::Exp;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::{complexify, hermiticity_deviation, HamiltonianEigen};
use crate::noise::NoiseModel;

const CHUNK: usize = 256;

/// Sampling every configuration Hamiltonian caps the fluctuator count well
/// below the averaged engine's limit.
pub const MAX_MC_FLUCTUATORS: usize = 16;

/// One realization of all telegraph processes up to a final time.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Sign of each fluctuator at t = 0.
    pub initial_signs: Vec<i8>,
    /// Ascending switching times of each fluctuator.
    pub switch_times: Vec<Vec<f64>>,
}

impl Trajectory {
    /// Sign of fluctuator i at time t; switches at s <= t have happened.
    pub fn sign_at(&self, i: usize, t: f64) -> i8 {
        let flips = self.switch_times[i].iter().take_while(|&&s| s <= t).count();
        if flips % 2 == 0 {
            self.initial_signs[i]
        } else {
            -self.initial_signs[i]
        }
    }

    /// All switching events as (time, fluctuator), time-ordered.
    pub fn merged_events(&self) -> Vec<(f64, usize)> {
        let mut events: Vec<(f64, usize)> = self
            .switch_times
            .iter()
            .enumerate()
            .flat_map(|(i, ts)| ts.iter().map(move |&t| (t, i)))
            .collect();
        events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        events
    }

    /// Configuration index at t = 0 (bit i set when fluctuator i is -1).
    fn initial_config(&self) -> usize {
        self.initial_signs
            .iter()
            .enumerate()
            .fold(0, |acc, (i, &s)| if s < 0 { acc | (1 << i) } else { acc })
    }
}

/// Draw one trajectory: uniform initial signs, then Poisson switching with
/// exponential inter-arrival gaps at the model's rate.
pub fn sample_trajectory<R: Rng>(noise: &NoiseModel, t_final: f64, rng: &mut R) -> Trajectory {
    let l = noise.n_fluctuators();
    let gap = Exp::new(noise.mu()).expect("switching rate validated by NoiseModel");
    let initial_signs: Vec<i8> = (0..l).map(|_| if rng.random() { 1 } else { -1 }).collect();
    let switch_times = (0..l)
        .map(|_| {
            let mut times = Vec::new();
            let mut t: f64 = rng.sample(gap);
            while t < t_final {
                times.push(t);
                t += rng.sample(gap);
            }
            times
        })
        .collect();
    Trajectory {
        initial_signs,
        switch_times,
    }
}

/// Sample average of the density matrix at one grid time, with per-entry
/// standard errors of the real and imaginary parts.
#[derive(Debug, Clone)]
pub struct McPoint {
    pub t: f64,
    pub mean: DMatrix<Complex64>,
    pub se_re: DMatrix<f64>,
    pub se_im: DMatrix<f64>,
}

/// Monte Carlo estimate of the averaged evolution on a time grid.
#[derive(Debug, Clone)]
pub struct McEvolution {
    pub points: Vec<McPoint>,
    pub n_trajectories: usize,
}

struct Accum {
    sum: Vec<DMatrix<Complex64>>,
    sumsq_re: Vec<DMatrix<f64>>,
    sumsq_im: Vec<DMatrix<f64>>,
}

impl Accum {
    fn zeros(n: usize, n_times: usize) -> Self {
        Accum {
            sum: vec![DMatrix::zeros(n, n); n_times],
            sumsq_re: vec![DMatrix::zeros(n, n); n_times],
            sumsq_im: vec![DMatrix::zeros(n, n); n_times],
        }
    }

    fn add_state(&mut self, k: usize, rho: &DMatrix<Complex64>) {
        let n = rho.nrows();
        for c in 0..n {
            for r in 0..n {
                let v = rho[(r, c)];
                self.sum[k][(r, c)] += v;
                self.sumsq_re[k][(r, c)] += v.re * v.re;
                self.sumsq_im[k][(r, c)] += v.im * v.im;
            }
        }
    }

    fn merge(&mut self, other: &Accum) {
        for k in 0..self.sum.len() {
            self.sum[k] += &other.sum[k];
            self.sumsq_re[k] += &other.sumsq_re[k];
            self.sumsq_im[k] += &other.sumsq_im[k];
        }
    }
}

/// Evolve one trajectory through its piecewise-constant Hamiltonians and
/// accumulate the state at every grid time.
fn accumulate_trajectory(
    traj: &Trajectory,
    eigens: &[HamiltonianEigen],
    rho0: &DMatrix<Complex64>,
    times: &[f64],
    acc: &mut Accum,
) {
    let events = traj.merged_events();
    let mut cfg = traj.initial_config();
    let mut rho = rho0.clone();
    let mut cursor = 0.0;
    let mut next = 0usize;
    for (k, &t) in times.iter().enumerate() {
        while next < events.len() && events[next].0 <= t {
            let (et, i) = events[next];
            if et > cursor {
                rho = eigens[cfg].conjugate(&rho, et - cursor);
                cursor = et;
            }
            cfg ^= 1 << i;
            next += 1;
        }
        if t > cursor {
            rho = eigens[cfg].conjugate(&rho, t - cursor);
            cursor = t;
        }
        acc.add_state(k, &rho);
    }
}

/// Average `n_traj` trajectory evolutions of a density matrix over an
/// ascending time grid. `target` adds the same rank-one search term used by
/// the averaged engine.
#[allow(clippy::too_many_arguments)]
pub fn average_evolution(
    graph: &Graph,
    noise: &NoiseModel,
    gamma: f64,
    target: Option<usize>,
    rho0: &DMatrix<Complex64>,
    times: &[f64],
    n_traj: usize,
    seed: u64,
) -> Result<McEvolution> {
    if noise.n_fluctuators() != graph.edge_count() {
        return Err(Error::LengthMismatch {
            what: "fluctuators (one per graph edge)",
            expected: graph.edge_count(),
            got: noise.n_fluctuators(),
        });
    }
    if noise.n_fluctuators() > MAX_MC_FLUCTUATORS {
        return Err(Error::InvalidParameter {
            name: "n_fluctuators",
            reason: format!(
                "Monte Carlo sampler supports at most {MAX_MC_FLUCTUATORS} fluctuators, got {}",
                noise.n_fluctuators()
            ),
        });
    }
    if !gamma.is_finite() || gamma < 0.0 {
        return Err(Error::InvalidParameter {
            name: "gamma",
            reason: format!("must be finite and non-negative, got {gamma}"),
        });
    }
    if n_traj == 0 {
        return Err(Error::InvalidParameter {
            name: "n_traj",
            reason: "need at least one trajectory".into(),
        });
    }
    let n = graph.n_nodes();
    if rho0.nrows() != n || rho0.ncols() != n {
        return Err(Error::LengthMismatch {
            what: "initial density matrix rows",
            expected: n,
            got: rho0.nrows(),
        });
    }
    let herm_dev = hermiticity_deviation(rho0);
    if herm_dev > 1e-8 {
        return Err(Error::NotHermitian {
            deviation: herm_dev,
        });
    }
    let trace_dev = (rho0.trace() - Complex64::new(1.0, 0.0)).norm();
    if trace_dev > 1e-8 {
        return Err(Error::NotNormalized {
            what: "initial density matrix trace",
            deviation: trace_dev,
        });
    }
    if times.is_empty() {
        return Err(Error::InvalidParameter {
            name: "times",
            reason: "grid must not be empty".into(),
        });
    }
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) || times.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidParameter {
            name: "times",
            reason: "grid must be non-negative and sorted ascending".into(),
        });
    }

    let eigens: Vec<HamiltonianEigen> = (0..noise.n_configs())
        .map(|cfg| {
            let signs = noise.config_values(cfg)?;
            let mut h = complexify(&(graph.noisy_laplacian(noise.nu(), &signs)? * gamma));
            if let Some(w) = target {
                h[(w, w)] -= Complex64::new(1.0, 0.0);
            }
            HamiltonianEigen::new(&h)
        })
        .collect::<Result<_>>()?;

    let t_final = *times.last().unwrap();
    let n_chunks = n_traj.div_ceil(CHUNK);
    let chunks: Vec<Accum> = (0..n_chunks)
        .into_par_iter()
        .map(|ci| {
            let lo = ci * CHUNK;
            let hi = (lo + CHUNK).min(n_traj);
            let mut acc = Accum::zeros(n, times.len());
            for idx in lo..hi {
                let mut rng = ChaCha12Rng::seed_from_u64(seed);
                rng.set_stream(idx as u64);
                let traj = sample_trajectory(noise, t_final, &mut rng);
                accumulate_trajectory(&traj, &eigens, rho0, times, &mut acc);
            }
            acc
        })
        .collect();

    let mut total = Accum::zeros(n, times.len());
    for chunk in &chunks {
        total.merge(chunk);
    }

    let m = n_traj as f64;
    let points = times
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let mean = total.sum[k].map(|v| v / Complex64::new(m, 0.0));
            let variance = |sumsq: &DMatrix<f64>, mean_part: fn(&Complex64) -> f64| {
                DMatrix::from_fn(n, n, |r, c| {
                    if n_traj == 1 {
                        return 0.0;
                    }
                    let mu = mean_part(&mean[(r, c)]);
                    let var = ((sumsq[(r, c)] - m * mu * mu) / (m - 1.0)).max(0.0);
                    (var / m).sqrt()
                })
            };
            McPoint {
                t,
                se_re: variance(&total.sumsq_re[k], |v| v.re),
                se_im: variance(&total.sumsq_im[k], |v| v.im),
                mean,
            }
        })
        .collect();

    Ok(McEvolution {
        points,
        n_trajectories: n_traj,
    })
}
