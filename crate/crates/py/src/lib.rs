//! Python bindings over the quantum walk engine: graph construction,
//! telegraph noise, the exact noise-averaged map, hopping-rate calibration,
//! the two non-Markovianity measures, and the Monte Carlo cross-check.
//!
//! Density matrices cross the boundary as row-major nested lists of Python
//! complex numbers. Node indices are zero based on this surface, matching the
//! library; `Graph.edge_labels` carries the one-based labelling used in
//! configuration files.

use nalgebra::DMatrix;
use num_complex::Complex64;
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use rtnwalk::{assemble, measures, search, ActionOptions, AveragedMap};

fn py_err(e: rtnwalk::Error) -> PyErr {
    match &e {
        rtnwalk::Error::Io(_) => PyIOError::new_err(e.to_string()),
        rtnwalk::Error::Convergence { .. } | rtnwalk::Error::Numerical { .. } => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_matrix(rows: &[Vec<Complex64>]) -> PyResult<DMatrix<Complex64>> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err(
            "matrix must be a nonempty square nested list",
        ));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn from_matrix(m: &DMatrix<Complex64>) -> Vec<Vec<Complex64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

/// Undirected graph with a fixed edge order; one telegraph fluctuator rides
/// each edge.
#[pyclass(frozen)]
struct Graph {
    inner: rtnwalk::Graph,
}

#[pymethods]
impl Graph {
    /// Star on n nodes with the hub at node 0.
    #[staticmethod]
    fn star(n: usize) -> PyResult<Self> {
        Ok(Self {
            inner: rtnwalk::Graph::star(n).map_err(py_err)?,
        })
    }

    /// Complete graph on n nodes.
    #[staticmethod]
    fn complete(n: usize) -> PyResult<Self> {
        Ok(Self {
            inner: rtnwalk::Graph::complete(n).map_err(py_err)?,
        })
    }

    /// Graph from one-based edge pairs.
    #[staticmethod]
    fn from_edges(n: usize, edges: Vec<(usize, usize)>) -> PyResult<Self> {
        Ok(Self {
            inner: rtnwalk::Graph::from_edges(n, &edges).map_err(py_err)?,
        })
    }

    #[getter]
    fn n_nodes(&self) -> usize {
        self.inner.n_nodes()
    }

    #[getter]
    fn edge_count(&self) -> usize {
        self.inner.edge_count()
    }

    /// Edges as zero-based (low, high) pairs in fluctuator order.
    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.edges().to_vec()
    }

    /// The same edges with one-based labels.
    fn edge_labels(&self) -> Vec<(usize, usize)> {
        self.inner.edge_labels()
    }

    fn degree(&self, node: usize) -> PyResult<usize> {
        if node >= self.inner.n_nodes() {
            return Err(PyValueError::new_err(format!(
                "node {node} out of range (< {})",
                self.inner.n_nodes()
            )));
        }
        Ok(self.inner.degree(node))
    }

    /// Graph Laplacian as a dense nested list.
    fn laplacian(&self) -> Vec<Vec<f64>> {
        let l = self.inner.laplacian();
        (0..l.nrows())
            .map(|i| (0..l.ncols()).map(|j| l[(i, j)]).collect())
            .collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Graph(n_nodes={}, edge_count={})",
            self.inner.n_nodes(),
            self.inner.edge_count()
        )
    }
}

/// Independent symmetric telegraph fluctuators, each switching at rate mu
/// with coupling amplitude nu.
#[pyclass(frozen)]
struct NoiseModel {
    inner: rtnwalk::NoiseModel,
}

#[pymethods]
impl NoiseModel {
    #[new]
    fn new(n_fluctuators: usize, mu: f64, nu: f64) -> PyResult<Self> {
        Ok(Self {
            inner: rtnwalk::NoiseModel::new(n_fluctuators, mu, nu).map_err(py_err)?,
        })
    }

    #[getter]
    fn n_fluctuators(&self) -> usize {
        self.inner.n_fluctuators()
    }

    #[getter]
    fn mu(&self) -> f64 {
        self.inner.mu()
    }

    #[getter]
    fn nu(&self) -> f64 {
        self.inner.nu()
    }

    #[getter]
    fn n_configs(&self) -> usize {
        self.inner.n_configs()
    }

    /// Stationary single-fluctuator autocorrelation exp(-2 mu |tau|).
    fn autocorrelation(&self, tau: f64) -> f64 {
        self.inner.autocorrelation(tau)
    }

    fn __repr__(&self) -> String {
        format!(
            "NoiseModel(n_fluctuators={}, mu={}, nu={})",
            self.inner.n_fluctuators(),
            self.inner.mu(),
            self.inner.nu()
        )
    }
}

/// The exact noise-averaged dynamical map for one graph, noise model, and
/// hopping rate, optionally with a search target marked on the Hamiltonian.
#[pyclass(frozen)]
struct Walk {
    map: AveragedMap,
}

#[pymethods]
impl Walk {
    #[new]
    #[pyo3(signature = (graph, noise, gamma, target=None))]
    fn new(
        graph: PyRef<'_, Graph>,
        noise: PyRef<'_, NoiseModel>,
        gamma: f64,
        target: Option<usize>,
    ) -> PyResult<Self> {
        let qh = assemble(&graph.inner, &noise.inner, gamma, target).map_err(py_err)?;
        Ok(Self {
            map: AveragedMap::new(qh, ActionOptions::default()).map_err(py_err)?,
        })
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.map.quasi_hamiltonian().gamma()
    }

    #[getter]
    fn n_nodes(&self) -> usize {
        self.map.quasi_hamiltonian().graph().n_nodes()
    }

    #[getter]
    fn n_configs(&self) -> usize {
        self.map.quasi_hamiltonian().n_configs()
    }

    #[getter]
    fn target(&self) -> Option<usize> {
        self.map.quasi_hamiltonian().target()
    }

    /// Averaged density matrix at time t from the given initial density.
    fn evolve(&self, rho: Vec<Vec<Complex64>>, t: f64) -> PyResult<Vec<Vec<Complex64>>> {
        let rho = to_matrix(&rho)?;
        let qh = self.map.quasi_hamiltonian();
        let x0 = qh.basis().to_bloch(&rho).map_err(py_err)?;
        let x = self.map.evolve(&x0, t).map_err(py_err)?;
        Ok(from_matrix(&qh.basis().from_bloch(&x).map_err(py_err)?))
    }

    /// Averaged densities on an ascending time grid.
    fn evolve_grid(
        &self,
        rho: Vec<Vec<Complex64>>,
        times: Vec<f64>,
    ) -> PyResult<Vec<Vec<Vec<Complex64>>>> {
        let rho = to_matrix(&rho)?;
        let result = self.map.evolve_density(&rho, &times).map_err(py_err)?;
        let basis = self.map.quasi_hamiltonian().basis();
        result
            .states
            .iter()
            .map(|x| Ok(from_matrix(&basis.from_bloch(x).map_err(py_err)?)))
            .collect()
    }

    /// Target-node population over a grid, starting from the uniform
    /// superposition. The walk must carry a target.
    fn success_curve(&self, times: Vec<f64>) -> PyResult<Vec<f64>> {
        search::population_curve(&self.map, &times).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        let qh = self.map.quasi_hamiltonian();
        format!(
            "Walk(n_nodes={}, n_configs={}, gamma={}, target={:?})",
            qh.graph().n_nodes(),
            qh.n_configs(),
            qh.gamma(),
            qh.target()
        )
    }
}

/// Trace distance between two density matrices.
#[pyfunction]
fn trace_distance(a: Vec<Vec<Complex64>>, b: Vec<Vec<Complex64>>) -> PyResult<f64> {
    measures::trace_distance(&to_matrix(&a)?, &to_matrix(&b)?).map_err(py_err)
}

/// Density matrix of the balanced state orthogonal to the uniform
/// superposition.
#[pyfunction]
fn optimal_orthogonal_state(n: usize) -> PyResult<Vec<Vec<Complex64>>> {
    Ok(from_matrix(
        &measures::optimal_orthogonal_state(n).map_err(py_err)?,
    ))
}

/// Pick the hopping rate whose noiseless walk reaches the highest target
/// population: returns (gamma, p_succ, t_opt). Defaults use the built-in
/// candidate grid and a horizon scaled to the graph size.
#[pyfunction]
#[pyo3(signature = (graph, target, gammas=None, horizon=None, step=0.05))]
fn calibrate_gamma(
    graph: PyRef<'_, Graph>,
    target: usize,
    gammas: Option<Vec<f64>>,
    horizon: Option<f64>,
    step: f64,
) -> PyResult<(f64, f64, f64)> {
    let gammas = gammas.unwrap_or_else(search::default_gamma_grid);
    let horizon = horizon.unwrap_or_else(|| search::default_horizon(graph.inner.n_nodes()));
    let times = search::time_grid(horizon, step).map_err(py_err)?;
    let cal = search::calibrate_gamma(&graph.inner, target, &gammas, &times).map_err(py_err)?;
    Ok((cal.gamma, cal.p_succ, cal.t_opt))
}

/// Largest divisibility defect over the triangle 0 <= tau1 <= tau <= tau_max:
/// returns (n_m, tau, tau1) at the first argmax.
#[pyfunction]
fn nm_divisibility(
    walk: PyRef<'_, Walk>,
    rho: Vec<Vec<Complex64>>,
    tau_max: f64,
    step: f64,
) -> PyResult<(f64, f64, f64)> {
    let scan =
        measures::nm_divisibility(&walk.map, &to_matrix(&rho)?, tau_max, step).map_err(py_err)?;
    Ok((scan.n_m, scan.argmax.0, scan.argmax.1))
}

/// Information backflow accumulated by one state pair on a uniform grid:
/// returns (n_blp, times, trace_distances).
#[pyfunction]
fn blp_measure(
    walk: PyRef<'_, Walk>,
    rho1: Vec<Vec<Complex64>>,
    rho2: Vec<Vec<Complex64>>,
    t_max: f64,
    dt: f64,
) -> PyResult<(f64, Vec<f64>, Vec<f64>)> {
    let result =
        measures::blp_measure(&walk.map, &to_matrix(&rho1)?, &to_matrix(&rho2)?, t_max, dt)
            .map_err(py_err)?;
    Ok((result.n_blp, result.times, result.distances))
}

/// One sampled-average point: (t, mean_density, max_standard_error).
type McSample = (f64, Vec<Vec<Complex64>>, f64);

/// Monte Carlo average over sampled telegraph trajectories: returns a list of
/// (t, mean_density, max_standard_error) tuples.
#[pyfunction]
#[pyo3(signature = (graph, noise, gamma, rho0, times, n_trajectories, seed, target=None))]
#[allow(clippy::too_many_arguments)]
fn monte_carlo(
    graph: PyRef<'_, Graph>,
    noise: PyRef<'_, NoiseModel>,
    gamma: f64,
    rho0: Vec<Vec<Complex64>>,
    times: Vec<f64>,
    n_trajectories: usize,
    seed: u64,
    target: Option<usize>,
) -> PyResult<Vec<McSample>> {
    let evolution = rtnwalk::average_evolution(
        &graph.inner,
        &noise.inner,
        gamma,
        target,
        &to_matrix(&rho0)?,
        &times,
        n_trajectories,
        seed,
    )
    .map_err(py_err)?;
    Ok(evolution
        .points
        .iter()
        .map(|p| {
            let se = p
                .se_re
                .iter()
                .chain(p.se_im.iter())
                .fold(0.0f64, |acc, &v| acc.max(v));
            (p.t, from_matrix(&p.mean), se)
        })
        .collect())
}

#[pymodule]
fn rtnwalk_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Graph>()?;
    m.add_class::<NoiseModel>()?;
    m.add_class::<Walk>()?;
    m.add_function(wrap_pyfunction!(trace_distance, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_orthogonal_state, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate_gamma, m)?)?;
    m.add_function(wrap_pyfunction!(nm_divisibility, m)?)?;
    m.add_function(wrap_pyfunction!(blp_measure, m)?)?;
    m.add_function(wrap_pyfunction!(monte_carlo, m)?)?;
    Ok(())
}
