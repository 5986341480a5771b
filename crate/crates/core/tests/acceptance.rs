//! Acceptance gate: every numbered check prints one `criterion N: ...` line.
//! Expensive grids are computed once in shared fixtures and reused across
//! checks.

use std::collections::BTreeMap;
use std::sync::LazyLock;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use rtnwalk::linalg::{projector, random_density, uniform_ket, HamiltonianEigen};
use rtnwalk::measures::{self, bloch_trace_distance, trace_distance};
use rtnwalk::search::{self, Calibration, SearchSpec};
use rtnwalk::{
    assemble, average_evolution, expm_action_grid, ActionOptions, AveragedMap, Graph, NoiseModel,
};

fn criterion<F>(id: &str, f: F)
where
    F: FnOnce() -> Result<String, String>,
{
    match f() {
        Ok(detail) if detail.is_empty() => println!("criterion {id}: PASS"),
        Ok(detail) => println!("criterion {id}: PASS ({detail})"),
        Err(msg) => {
            println!("criterion {id}: FAIL ({msg})");
            panic!("criterion {id} failed: {msg}");
        }
    }
}

fn star_map(n: usize, gamma: f64, mu: f64, nu: f64) -> AveragedMap {
    let graph = Graph::star(n).unwrap();
    let noise = NoiseModel::new(graph.edge_count(), mu, nu).unwrap();
    let qh = assemble(&graph, &noise, gamma, Some(0)).unwrap();
    AveragedMap::new(qh, ActionOptions::default()).unwrap()
}

fn uniform_density(n: usize) -> DMatrix<Complex64> {
    projector(&uniform_ket(n))
}

fn linspace(t_max: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|k| t_max * k as f64 / (points - 1) as f64)
        .collect()
}

/// Noiseless calibration per size, shared by every criterion that needs a
/// hopping rate.
static CALIBRATIONS: LazyLock<BTreeMap<usize, Calibration>> = LazyLock::new(|| {
    (3..=10)
        .map(|n| {
            let graph = Graph::star(n).unwrap();
            let times =
                search::time_grid(search::default_horizon(n), search::DEFAULT_TIME_STEP).unwrap();
            let cal =
                search::calibrate_gamma(&graph, 0, &search::default_gamma_grid(), &times).unwrap();
            (n, cal)
        })
        .collect()
});

#[derive(Debug, Clone, Copy)]
struct GridEntry {
    mu: f64,
    nu: f64,
    p_succ: f64,
    n_m: f64,
}

const GRID_MUS: [f64; 4] = [0.01, 0.1, 1.0, 10.0];
const GRID_NUS: [f64; 3] = [0.5, 0.9, 1.0];

fn n7_grid_entry(gamma: f64, mu: f64, nu: f64) -> GridEntry {
    let map = star_map(7, gamma, mu, nu);
    let rho0 = uniform_density(7);
    let times = linspace(25.0, 101);
    let traj = map.evolve_density(&rho0, &times).unwrap();
    let basis = map.quasi_hamiltonian().basis();
    let pops: Vec<f64> = traj
        .states
        .iter()
        .map(|x| search::node_population(basis, x, 0).unwrap())
        .collect();
    let (_, p_succ) = search::peak(&times, &pops).unwrap();
    let scan = measures::nm_divisibility(&map, &rho0, 25.0, 0.25).unwrap();
    GridEntry {
        mu,
        nu,
        p_succ,
        n_m: scan.n_m,
    }
}

/// The 12-point (mu, nu) study on the 7-node star: success probability and
/// divisibility measure per point, plus the wall time of the whole build.
static GRID_N7: LazyLock<(Vec<GridEntry>, Duration)> = LazyLock::new(|| {
    let gamma = CALIBRATIONS[&7].gamma;
    let start = Instant::now();
    let mut entries = Vec::new();
    for &mu in &GRID_MUS {
        for &nu in &GRID_NUS {
            entries.push(n7_grid_entry(gamma, mu, nu));
        }
    }
    (entries, start.elapsed())
});

fn grid_value(mu: f64, nu: f64) -> GridEntry {
    *GRID_N7.0.iter().find(|e| e.mu == mu && e.nu == nu).unwrap()
}

/// Divisibility measure per size at nu = 1 for fast and slow switching.
///
/// Each size runs at its exact optimal hopping rate 1/n (the closed-form
/// hub-search optimum, pinned by unit tests). The default calibration grid
/// cannot serve here: its 0.05 granularity detunes each size differently
/// (exactly on-grid at n = 4, 5, 10, up to 20% off in between), which is
/// enough to bury the size trend of a measure this small.
static SIZE_SCANS: LazyLock<Vec<(usize, f64, f64)>> = LazyLock::new(|| {
    (4..=10)
        .map(|n| {
            let gamma = 1.0 / n as f64;
            let rho0 = uniform_density(n);
            let fast = measures::nm_divisibility(&star_map(n, gamma, 10.0, 1.0), &rho0, 25.0, 0.25)
                .unwrap()
                .n_m;
            let slow = measures::nm_divisibility(&star_map(n, gamma, 0.01, 1.0), &rho0, 25.0, 0.25)
                .unwrap()
                .n_m;
            (n, fast, slow)
        })
        .collect()
});

fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let ra = ranks(a);
    let rb = ranks(b);
    let n = ra.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in ra.iter().zip(&rb) {
        cov += (x - ma) * (y - mb);
        va += (x - ma).powi(2);
        vb += (y - mb).powi(2);
    }
    cov / (va.sqrt() * vb.sqrt())
}

#[test]
fn criterion_1_monte_carlo_oracle() {
    criterion("1", || {
        let start = Instant::now();
        let gamma = CALIBRATIONS[&4].gamma;
        let graph = Graph::star(4).unwrap();
        let noise = NoiseModel::new(3, 1.0, 1.0).unwrap();
        let rho0 = uniform_density(4);
        let times = [1.0, 2.0, 5.0];
        let mc = average_evolution(&graph, &noise, gamma, Some(0), &rho0, &times, 10_000, 1)
            .map_err(|e| e.to_string())?;

        let map = star_map(4, gamma, 1.0, 1.0);
        let basis = map.quasi_hamiltonian().basis().clone();
        let exact = map
            .evolve_density(&rho0, &times)
            .map_err(|e| e.to_string())?;

        let mut worst_td: f64 = 0.0;
        for (k, point) in mc.points.iter().enumerate() {
            let rho = basis.from_bloch(&exact.states[k]).unwrap();
            for r in 0..4 {
                for c in 0..4 {
                    let d = point.mean[(r, c)] - rho[(r, c)];
                    if d.re.abs() > 3.0 * point.se_re[(r, c)] + 1e-12 {
                        return Err(format!(
                            "t {}: entry ({r},{c}) real part off by {:.2e} vs se {:.2e}",
                            point.t,
                            d.re.abs(),
                            point.se_re[(r, c)]
                        ));
                    }
                    if d.im.abs() > 3.0 * point.se_im[(r, c)] + 1e-12 {
                        return Err(format!(
                            "t {}: entry ({r},{c}) imag part off by {:.2e} vs se {:.2e}",
                            point.t,
                            d.im.abs(),
                            point.se_im[(r, c)]
                        ));
                    }
                }
            }
            let td = trace_distance(&point.mean, &rho).map_err(|e| e.to_string())?;
            worst_td = worst_td.max(td);
            if td > 0.02 {
                return Err(format!("t {}: trace distance {td:.4} > 0.02", point.t));
            }
        }
        let elapsed = start.elapsed();
        if elapsed > Duration::from_secs(60) {
            return Err(format!("took {elapsed:.1?}, budget 60 s"));
        }
        Ok(format!(
            "10^4 trajectories, worst trace distance {worst_td:.2e}, {elapsed:.1?}"
        ))
    });
}

#[test]
fn criterion_2_dense_exponential_equivalence() {
    criterion("2", || {
        let start = Instant::now();
        let map = star_map(3, CALIBRATIONS[&3].gamma, 1.0, 1.0);
        let qh = map.quasi_hamiltonian();
        if qh.dim() != 32 {
            return Err(format!("expected joint dimension 32, got {}", qh.dim()));
        }
        let x0 = qh.basis().to_bloch(&uniform_density(3)).unwrap();
        let z0 = qh.lift(&x0).unwrap();
        let times: Vec<f64> = (0..50).map(|k| 25.0 * k as f64 / 49.0).collect();

        let sparse = expm_action_grid(qh.lifted(), &times, &z0, &ActionOptions::with_tol(1e-13))
            .map_err(|e| e.to_string())?;
        let dense = qh.lifted().to_dense();
        let z0_vec = nalgebra::DVector::from_column_slice(&z0);
        let mut worst: f64 = 0.0;
        for (k, &t) in times.iter().enumerate() {
            let reference = (dense.clone() * Complex64::new(t, 0.0)).exp() * &z0_vec;
            for (a, b) in sparse[k].iter().zip(reference.iter()) {
                worst = worst.max((a - b).norm());
            }
        }
        let elapsed = start.elapsed();
        if worst > 1e-10 {
            return Err(format!("max deviation {worst:.2e} > 1e-10"));
        }
        if elapsed > Duration::from_secs(5) {
            return Err(format!("took {elapsed:.1?}, budget 5 s"));
        }
        Ok(format!("max deviation {worst:.2e}, {elapsed:.1?}"))
    });
}

#[test]
fn criterion_3_noiseless_limit() {
    criterion("3", || {
        let gamma = CALIBRATIONS[&7].gamma;
        let map = star_map(7, gamma, 1.0, 0.0);
        let rho0 = uniform_density(7);
        let times = linspace(25.0, 26);
        let traj = map
            .evolve_density(&rho0, &times)
            .map_err(|e| e.to_string())?;
        let basis = map.quasi_hamiltonian().basis();

        let spec = SearchSpec::new(Graph::star(7).unwrap(), 0, gamma).unwrap();
        let eigen = HamiltonianEigen::new(&spec.hamiltonian()).unwrap();
        let mut worst: f64 = 0.0;
        for (&t, x) in times.iter().zip(&traj.states) {
            let engine = basis.from_bloch(x).unwrap();
            let reference = eigen.conjugate(&rho0, t);
            for (a, b) in engine.iter().zip(reference.iter()) {
                worst = worst.max((a - b).norm());
            }
        }
        if worst > 1e-8 {
            return Err(format!("unitary mismatch {worst:.2e} > 1e-8"));
        }

        let scan = measures::nm_divisibility(&map, &rho0, 25.0, 0.25).map_err(|e| e.to_string())?;
        if scan.n_m > 1e-7 {
            return Err(format!("divisibility defect {:.2e} > 1e-7", scan.n_m));
        }

        let orthogonal = measures::optimal_orthogonal_state(7).unwrap();
        let blp = measures::blp_measure(&map, &rho0, &orthogonal, 50.0, 0.02)
            .map_err(|e| e.to_string())?;
        if blp.n_blp > 1e-7 {
            return Err(format!("backflow {:.2e} > 1e-7", blp.n_blp));
        }
        Ok(format!(
            "unitary {worst:.1e}, defect {:.1e}, backflow {:.1e}",
            scan.n_m, blp.n_blp
        ))
    });
}

#[test]
fn criterion_4_fixed_point_and_channel_properties() {
    criterion("4", || {
        let mut rng = ChaCha12Rng::seed_from_u64(2024);
        use rand::Rng;
        let mixed = DMatrix::from_diagonal_element(7, 7, Complex64::new(1.0 / 7.0, 0.0));
        for _ in 0..5 {
            let mu = 10f64.powf(rng.random_range(-2.0..1.0));
            let nu: f64 = rng.random_range(0.0..1.0);
            let map = star_map(7, CALIBRATIONS[&7].gamma, mu, nu);
            let x0 = map.quasi_hamiltonian().basis().to_bloch(&mixed).unwrap();
            let moved = map.evolve(&x0, 3.0).map_err(|e| e.to_string())?;
            if moved.norm() > 1e-10 {
                return Err(format!(
                    "mixed state moved by {:.2e} at mu {mu:.3}, nu {nu:.3}",
                    moved.norm()
                ));
            }
        }

        let map = star_map(7, CALIBRATIONS[&7].gamma, 1.0, 1.0);
        let qh = map.quasi_hamiltonian();
        for k in 0..50 {
            let rho1 = random_density(7, &mut rng);
            let rho2 = random_density(7, &mut rng);
            let x1 = qh.basis().to_bloch(&rho1).unwrap();
            let x2 = qh.basis().to_bloch(&rho2).unwrap();
            let d0 = bloch_trace_distance(qh.basis(), &x1, &x2).unwrap();
            for t in [1.0, 3.0] {
                let y1 = map.evolve(&x1, t).map_err(|e| e.to_string())?;
                let y2 = map.evolve(&x2, t).map_err(|e| e.to_string())?;
                let dt = bloch_trace_distance(qh.basis(), &y1, &y2).unwrap();
                if dt > d0 + 1e-8 {
                    return Err(format!(
                        "pair {k}: distance grew {d0:.6} -> {dt:.6} at t {t}"
                    ));
                }
                for y in [&y1, &y2] {
                    let purity = 1.0 / 7.0 + 2.0 / 7.0 * y.norm().powi(2);
                    if purity > 1.0 + 1e-8 {
                        return Err(format!("pair {k}: purity {purity:.8} > 1 at t {t}"));
                    }
                }
            }
        }
        Ok("5 fixed-point checks, 50 contraction and purity pairs".into())
    });
}

#[test]
fn criterion_5_divisibility_trends() {
    criterion("5", || {
        let slice: Vec<GridEntry> = GRID_MUS.iter().map(|&mu| grid_value(mu, 1.0)).collect();
        for w in slice.windows(2) {
            if w[0].n_m - w[1].n_m <= 1e-4 {
                return Err(format!(
                    "N_M not decreasing: mu {} -> {} gives {:.6} -> {:.6}",
                    w[0].mu, w[1].mu, w[0].n_m, w[1].n_m
                ));
            }
        }
        let by_nu: Vec<f64> = GRID_NUS.iter().map(|&nu| grid_value(0.1, nu).n_m).collect();
        if !(by_nu[0] < by_nu[1] && by_nu[1] < by_nu[2]) {
            return Err(format!(
                "at mu 0.1 expected N_M(0.5) < N_M(0.9) < N_M(1.0), got {by_nu:.6?}"
            ));
        }
        let wall = GRID_N7.1;
        if wall > Duration::from_secs(30 * 60) {
            return Err(format!("grid build took {wall:.0?}, budget 30 min"));
        }
        let values: Vec<f64> = slice.iter().map(|e| e.n_m).collect();
        Ok(format!(
            "N_M over mu at nu=1: {values:.4?}; 12-point grid in {wall:.0?}"
        ))
    });
}

#[test]
fn criterion_6_backflow_hierarchy() {
    criterion("6", || {
        let gamma = CALIBRATIONS[&7].gamma;
        let rho_s = uniform_density(7);
        let rho_r = measures::optimal_orthogonal_state(7).unwrap();
        let backflow = |mu: f64| -> Result<f64, String> {
            let map = star_map(7, gamma, mu, 1.0);
            Ok(measures::blp_measure(&map, &rho_s, &rho_r, 50.0, 0.02)
                .map_err(|e| e.to_string())?
                .n_blp)
        };
        let slow = backflow(0.01)?;
        let mid = backflow(0.1)?;
        let fast = backflow(10.0)?;
        if !(slow > mid && mid > 1e-3) {
            return Err(format!(
                "expected N_BLP(0.01) > N_BLP(0.1) > 1e-3, got {slow:.4e}, {mid:.4e}"
            ));
        }
        if fast >= 1e-3 {
            return Err(format!("N_BLP(10) = {fast:.4e}, expected < 1e-3"));
        }
        let n_m_fast = grid_value(10.0, 1.0).n_m;
        if n_m_fast <= 1e-6 {
            return Err(format!("N_M(10) = {n_m_fast:.4e}, expected > 1e-6"));
        }
        Ok(format!(
            "N_BLP {slow:.3e} > {mid:.3e} > 1e-3 > {fast:.1e} while N_M(10) = {n_m_fast:.2e}"
        ))
    });
}

#[test]
fn criterion_7_success_anticorrelation() {
    criterion("7", || {
        let mut details = Vec::new();
        for &nu in &GRID_NUS {
            let slice: Vec<GridEntry> = GRID_MUS.iter().map(|&mu| grid_value(mu, nu)).collect();
            let p: Vec<f64> = slice.iter().map(|e| e.p_succ).collect();
            let m: Vec<f64> = slice.iter().map(|e| e.n_m).collect();
            let rho = spearman(&p, &m);
            if rho > -0.9 {
                return Err(format!("Spearman at nu {nu} is {rho:.3}, expected <= -0.9"));
            }
            details.push(format!("nu {nu}: {rho:.2}"));
        }
        Ok(details.join(", "))
    });
}

#[test]
fn criterion_8_size_study() {
    criterion("8", || {
        let scans = &*SIZE_SCANS;
        for w in scans.windows(2) {
            let (n_prev, fast_prev, _) = w[0];
            let (n_next, fast_next, _) = w[1];
            if fast_next >= fast_prev {
                return Err(format!(
                    "N_M at mu=10 not decreasing: N {n_prev} -> {n_next} gives {fast_prev:.6e} -> {fast_next:.6e}"
                ));
            }
        }
        let slow: Vec<f64> = scans.iter().map(|&(_, _, s)| s).collect();
        let min = slow.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = slow.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let spread = (max - min) / min;
        if spread >= 0.2 {
            return Err(format!(
                "N_M at mu=0.01 varies by {:.1}% across N, expected < 20%",
                100.0 * spread
            ));
        }
        Ok(format!(
            "mu=10 decreasing over N=4..10; mu=0.01 spread {:.1}%",
            100.0 * spread
        ))
    });
}

#[test]
fn criterion_9_performance() {
    criterion("9", || {
        let start = Instant::now();
        let map = star_map(10, CALIBRATIONS[&10].gamma, 1.0, 1.0);
        let times = linspace(25.0, 100);
        let traj = map
            .evolve_density(&uniform_density(10), &times)
            .map_err(|e| e.to_string())?;
        let elapsed = start.elapsed();
        if traj.states.len() != 100 {
            return Err("dynamics grid truncated".into());
        }
        if elapsed > Duration::from_secs(60) {
            return Err(format!("N=10 dynamics took {elapsed:.1?}, budget 60 s"));
        }

        let workers = std::thread::available_parallelism()
            .map(|p| p.get())
            .unwrap_or(1);
        if workers < 4 {
            return Ok(format!(
                "N=10 dynamics in {elapsed:.1?}; parallel speedup SKIP ({workers} worker(s) available)"
            ));
        }
        // Enough cores: time one grid point of the criterion-5 scan with one
        // worker and with four.
        let gamma = CALIBRATIONS[&7].gamma;
        let timed = |threads: usize| -> Result<Duration, String> {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| e.to_string())?;
            let start = Instant::now();
            pool.install(|| {
                GRID_MUS.iter().for_each(|&mu| {
                    n7_grid_entry(gamma, mu, 1.0);
                })
            });
            Ok(start.elapsed())
        };
        let serial = timed(1)?;
        let quad = timed(4)?;
        let speedup = serial.as_secs_f64() / quad.as_secs_f64();
        if speedup < 3.0 {
            return Err(format!(
                "speedup at 4 workers is {speedup:.2}x, expected >= 3x"
            ));
        }
        Ok(format!(
            "N=10 dynamics in {elapsed:.1?}; speedup {speedup:.2}x at 4 workers"
        ))
    });
}

#[test]
fn criterion_10_determinism() {
    criterion("10", || {
        let bin = env!("CARGO_BIN_EXE_rtnwalk");
        let run = |dir: &std::path::Path, sub: &[&str]| -> Result<(), String> {
            let status = std::process::Command::new(bin)
                .args(sub)
                .arg("--out")
                .arg(dir)
                .status()
                .map_err(|e| e.to_string())?;
            if !status.success() {
                return Err(format!("{sub:?} exited with {status}"));
            }
            Ok(())
        };
        let read = |dir: &std::path::Path, name: &str| -> Result<Vec<u8>, String> {
            std::fs::read(dir.join(name)).map_err(|e| format!("{name}: {e}"))
        };

        let sweep_args = [
            "sweep", "--n", "4", "--mu", "0.5,2", "--nu", "0.6,1", "--seed", "7",
        ];
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        run(a.path(), &sweep_args)?;
        run(b.path(), &sweep_args)?;
        if read(a.path(), "sweep_summary.csv")? != read(b.path(), "sweep_summary.csv")? {
            return Err("sweep summaries differ between identical runs".into());
        }

        let mc_args = [
            "mc",
            "--n",
            "4",
            "--mu",
            "1",
            "--nu",
            "1",
            "--points",
            "6",
            "--t-max",
            "5",
            "--trajectories",
            "3000",
            "--seed",
            "11",
        ];
        let c = tempfile::tempdir().unwrap();
        let d = tempfile::tempdir().unwrap();
        run(c.path(), &mc_args)?;
        run(d.path(), &mc_args)?;
        if read(c.path(), "mc_summary.csv")? != read(d.path(), "mc_summary.csv")? {
            return Err("Monte Carlo summaries differ between identical runs".into());
        }
        if read(c.path(), "mc_n4_mu1_nu1.csv")? != read(d.path(), "mc_n4_mu1_nu1.csv")? {
            return Err("Monte Carlo series differ between identical runs".into());
        }
        Ok("sweep and mc summaries byte-identical across reruns".into())
    });
}
