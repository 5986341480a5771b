//! Ensemble-averaged continuous-time quantum walk dynamics under random
//! telegraph noise on per-edge couplings, with spatial search figures of merit
//! and non-Markovianity measures.
//!
//! The exact noise average over all 2^l fluctuator configurations is evolved
//! as one linear system on the joint (configuration x Bloch) space: a state's
//! Bloch vector is replicated across configurations, propagated with a sparse
//! lifted generator combining the telegraph switching generator and the
//! per-configuration coherent Bloch rotations, and contracted back by summing
//! over configurations. A Monte Carlo sampler over explicit telegraph
//! trajectories provides an independent cross-check of the same average.

pub mod bloch;
pub mod cli;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod mc;
pub mod measures;
pub mod noise;
pub mod propagator;
pub mod quasiham;
pub mod search;

pub use bloch::{BlochState, GeneratorBasis};
pub use error::{Error, Result};
pub use graph::Graph;
pub use mc::{average_evolution, McEvolution, McPoint};
pub use noise::NoiseModel;
pub use propagator::{expm_action, expm_action_grid, ActionOptions, CsrMatrix};
pub use quasiham::{assemble, AveragedMap, DynamicsResult, QuasiHamiltonian};
pub use search::SearchSpec;
