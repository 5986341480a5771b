//! Subcommand drivers. Each builds the (size, mu, nu) grid, runs the points
//! in parallel, then writes all CSV files and the manifest from one thread in
//! grid order so output bytes do not depend on scheduling.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::bloch::BlochState;
use crate::error::Result;
use crate::graph::Graph;
use crate::linalg::{projector, uniform_ket};
use crate::mc;
use crate::measures::{self, BlpCandidate};
use crate::noise::NoiseModel;
use crate::propagator::ActionOptions;
use crate::quasiham::{assemble, AveragedMap};
use crate::search::{self, Calibration, SearchSpec};

use super::config::{ExperimentConfig, PoolKind};
use super::output::{float, tag, write_manifest, CsvFile, RunClock};

#[derive(Debug, Clone, Copy)]
struct GridPoint {
    n: usize,
    mu: f64,
    nu: f64,
}

fn grid(cfg: &ExperimentConfig) -> Vec<GridPoint> {
    let mut pts = Vec::new();
    for &n in &cfg.graph.n {
        for &mu in &cfg.noise.mu {
            for &nu in &cfg.noise.nu {
                pts.push(GridPoint { n, mu, nu });
            }
        }
    }
    pts
}

fn ensure_dir(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let dir = PathBuf::from(&cfg.output.dir);
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn linspace(t_max: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|k| t_max * k as f64 / (points - 1) as f64)
        .collect()
}

/// Noiseless hopping-rate calibration, computed once per requested size.
fn calibrations(cfg: &ExperimentConfig) -> Result<BTreeMap<usize, Calibration>> {
    let mut cals = BTreeMap::new();
    for &n in &cfg.graph.n {
        if cals.contains_key(&n) {
            continue;
        }
        let graph = cfg.graph.kind.build(n)?;
        let times = search::time_grid(search::default_horizon(n), search::DEFAULT_TIME_STEP)?;
        let cal = match cfg.search.gamma {
            Some(gamma) => {
                let spec = SearchSpec::new(graph, cfg.search.target, gamma)?;
                let pops = spec.noiseless_populations(&times)?;
                let (t_opt, p_succ) = search::peak(&times, &pops)?;
                Calibration {
                    gamma,
                    p_succ,
                    t_opt,
                }
            }
            None => search::calibrate_gamma(
                &graph,
                cfg.search.target,
                &search::default_gamma_grid(),
                &times,
            )?,
        };
        cals.insert(n, cal);
    }
    Ok(cals)
}

fn averaged_map(
    cfg: &ExperimentConfig,
    graph: &Graph,
    gamma: f64,
    pt: GridPoint,
) -> Result<AveragedMap> {
    let noise = NoiseModel::new(graph.edge_count(), pt.mu, pt.nu)?;
    let qh = assemble(graph, &noise, gamma, Some(cfg.search.target))?;
    AveragedMap::new(qh, ActionOptions::default())
}

fn uniform_density(n: usize) -> DMatrix<Complex64> {
    projector(&uniform_ket(n))
}

/// Tr rho^2 recovered from the Bloch norm.
fn purity(n: usize, x: &BlochState) -> f64 {
    let nn = n as f64;
    1.0 / nn + 2.0 / nn * x.norm().powi(2)
}

struct DynamicsPoint {
    pt: GridPoint,
    gamma: f64,
    rows: Vec<[f64; 4]>,
    p_succ: f64,
    t_opt: f64,
}

fn dynamics_point(
    cfg: &ExperimentConfig,
    cal: &Calibration,
    times: &[f64],
    pt: GridPoint,
) -> Result<DynamicsPoint> {
    let graph = cfg.graph.kind.build(pt.n)?;
    let map = averaged_map(cfg, &graph, cal.gamma, pt)?;
    let traj = map.evolve_density(&uniform_density(pt.n), times)?;
    let basis = map.quasi_hamiltonian().basis();
    let mut rows = Vec::with_capacity(times.len());
    let mut pops = Vec::with_capacity(times.len());
    for (&t, x) in times.iter().zip(&traj.states) {
        let p = search::node_population(basis, x, cfg.search.target)?;
        rows.push([t, p, purity(pt.n, x), x.norm()]);
        pops.push(p);
    }
    let (t_opt, p_succ) = search::peak(times, &pops)?;
    Ok(DynamicsPoint {
        pt,
        gamma: cal.gamma,
        rows,
        p_succ,
        t_opt,
    })
}

pub fn dynamics(cfg: &ExperimentConfig) -> Result<()> {
    let clock = RunClock::start();
    let dir = ensure_dir(cfg)?;
    let cals = calibrations(cfg)?;
    let times = linspace(cfg.time.t_max, cfg.time.points);
    let results: Vec<Result<DynamicsPoint>> = grid(cfg)
        .par_iter()
        .map(|&pt| dynamics_point(cfg, &cals[&pt.n], &times, pt))
        .collect();

    let mut rels = Vec::new();
    let mut summary = CsvFile::create(
        &dir,
        "dynamics_summary.csv",
        &["n", "mu", "nu", "gamma", "p_succ", "t_opt"],
    )?;
    for res in results {
        let p = res?;
        let name = format!(
            "dynamics_n{}_mu{}_nu{}.csv",
            p.pt.n,
            tag(p.pt.mu),
            tag(p.pt.nu)
        );
        let mut f = CsvFile::create(&dir, &name, &["t", "p_target", "purity", "bloch_norm"])?;
        for row in &p.rows {
            f.row(row.iter().map(|v| float(*v)))?;
        }
        rels.push(f.finish()?);
        summary.row([
            p.pt.n.to_string(),
            float(p.pt.mu),
            float(p.pt.nu),
            float(p.gamma),
            float(p.p_succ),
            float(p.t_opt),
        ])?;
    }
    rels.push(summary.finish()?);
    write_manifest(&dir, "dynamics", cfg, &clock, rels)
}

pub fn run_search(cfg: &ExperimentConfig) -> Result<()> {
    let clock = RunClock::start();
    let dir = ensure_dir(cfg)?;
    let cals = calibrations(cfg)?;
    let mut rels = Vec::new();
    let mut summary = CsvFile::create(
        &dir,
        "search_summary.csv",
        &["n", "gamma", "p_succ", "t_opt"],
    )?;
    for (&n, cal) in &cals {
        let graph = cfg.graph.kind.build(n)?;
        let spec = SearchSpec::new(graph, cfg.search.target, cal.gamma)?;
        let times = search::time_grid(search::default_horizon(n), search::DEFAULT_TIME_STEP)?;
        let pops = spec.noiseless_populations(&times)?;
        let mut f = CsvFile::create(&dir, &format!("search_n{n}.csv"), &["t", "p_target"])?;
        for (&t, &p) in times.iter().zip(&pops) {
            f.row([float(t), float(p)])?;
        }
        rels.push(f.finish()?);
        summary.row([
            n.to_string(),
            float(cal.gamma),
            float(cal.p_succ),
            float(cal.t_opt),
        ])?;
    }
    rels.push(summary.finish()?);
    write_manifest(&dir, "search", cfg, &clock, rels)
}

struct DivPoint {
    pt: GridPoint,
    gamma: f64,
    scan: measures::DivisibilityScan,
}

fn div_point(cfg: &ExperimentConfig, cal: &Calibration, pt: GridPoint) -> Result<DivPoint> {
    let graph = cfg.graph.kind.build(pt.n)?;
    let map = averaged_map(cfg, &graph, cal.gamma, pt)?;
    let scan = measures::nm_divisibility(
        &map,
        &uniform_density(pt.n),
        cfg.divisibility.tau_max,
        cfg.divisibility.step,
    )?;
    Ok(DivPoint {
        pt,
        gamma: cal.gamma,
        scan,
    })
}

pub fn nm_div(cfg: &ExperimentConfig) -> Result<()> {
    let clock = RunClock::start();
    let dir = ensure_dir(cfg)?;
    let cals = calibrations(cfg)?;
    let results: Vec<Result<DivPoint>> = grid(cfg)
        .par_iter()
        .map(|&pt| div_point(cfg, &cals[&pt.n], pt))
        .collect();

    let mut rels = Vec::new();
    let mut summary = CsvFile::create(
        &dir,
        "nm_div_summary.csv",
        &["n", "mu", "nu", "gamma", "n_m", "argmax_tau", "argmax_tau1"],
    )?;
    for res in results {
        let p = res?;
        let name = format!(
            "gamma_surface_n{}_mu{}_nu{}.csv",
            p.pt.n,
            tag(p.pt.mu),
            tag(p.pt.nu)
        );
        let mut f = CsvFile::create(&dir, &name, &["tau", "tau1", "gamma_value"])?;
        for (tau, tau1, value) in p.scan.entries() {
            f.row([float(tau), float(tau1), float(value)])?;
        }
        rels.push(f.finish()?);
        summary.row([
            p.pt.n.to_string(),
            float(p.pt.mu),
            float(p.pt.nu),
            float(p.gamma),
            float(p.scan.n_m),
            float(p.scan.argmax.0),
            float(p.scan.argmax.1),
        ])?;
    }
    rels.push(summary.finish()?);
    write_manifest(&dir, "nm-div", cfg, &clock, rels)
}

fn blp_candidates(cfg: &ExperimentConfig, graph: &Graph) -> Result<Vec<BlpCandidate>> {
    match cfg.blp.pool {
        PoolKind::Optimal => Ok(vec![BlpCandidate {
            label: "balanced-orthogonal".into(),
            state: measures::optimal_orthogonal_state(graph.n_nodes())?,
        }]),
        PoolKind::Search => {
            measures::default_candidates(graph, cfg.seed, cfg.blp.random_candidates)
        }
    }
}

struct BlpPoint {
    pt: GridPoint,
    gamma: f64,
    winner: String,
    outcome: measures::BlpSearchOutcome,
}

fn blp_point(cfg: &ExperimentConfig, cal: &Calibration, pt: GridPoint) -> Result<BlpPoint> {
    let graph = cfg.graph.kind.build(pt.n)?;
    let map = averaged_map(cfg, &graph, cal.gamma, pt)?;
    let candidates = blp_candidates(cfg, &graph)?;
    let outcome = measures::blp_pair_search(
        &map,
        &uniform_density(pt.n),
        &candidates,
        cfg.blp.t_max,
        cfg.blp.dt,
    )?;
    let winner = candidates[outcome.winner].label.clone();
    Ok(BlpPoint {
        pt,
        gamma: cal.gamma,
        winner,
        outcome,
    })
}

pub fn nm_blp(cfg: &ExperimentConfig) -> Result<()> {
    let clock = RunClock::start();
    let dir = ensure_dir(cfg)?;
    let cals = calibrations(cfg)?;
    let results: Vec<Result<BlpPoint>> = grid(cfg)
        .par_iter()
        .map(|&pt| blp_point(cfg, &cals[&pt.n], pt))
        .collect();

    let mut rels = Vec::new();
    let mut summary = CsvFile::create(
        &dir,
        "nm_blp_summary.csv",
        &["n", "mu", "nu", "gamma", "n_blp", "pair"],
    )?;
    for res in results {
        let p = res?;
        let name = format!("blp_n{}_mu{}_nu{}.csv", p.pt.n, tag(p.pt.mu), tag(p.pt.nu));
        let mut f = CsvFile::create(&dir, &name, &["t", "trace_distance", "sigma"])?;
        let best = &p.outcome.best;
        for ((&t, &d), &s) in best.times.iter().zip(&best.distances).zip(&best.sigmas) {
            f.row([float(t), float(d), float(s)])?;
        }
        rels.push(f.finish()?);
        summary.row([
            p.pt.n.to_string(),
            float(p.pt.mu),
            float(p.pt.nu),
            float(p.gamma),
            float(best.n_blp),
            p.winner.clone(),
        ])?;
    }
    rels.push(summary.finish()?);
    write_manifest(&dir, "nm-blp", cfg, &clock, rels)
}

struct McPointRun {
    pt: GridPoint,
    gamma: f64,
    rows: Vec<[f64; 5]>,
    p_succ: f64,
    t_opt: f64,
}

fn mc_point(
    cfg: &ExperimentConfig,
    cal: &Calibration,
    times: &[f64],
    pt: GridPoint,
) -> Result<McPointRun> {
    let graph = cfg.graph.kind.build(pt.n)?;
    let noise = NoiseModel::new(graph.edge_count(), pt.mu, pt.nu)?;
    let evo = mc::average_evolution(
        &graph,
        &noise,
        cal.gamma,
        Some(cfg.search.target),
        &uniform_density(pt.n),
        times,
        cfg.mc.trajectories,
        cfg.seed,
    )?;
    let w = cfg.search.target;
    let nn = pt.n as f64;
    let mut rows = Vec::with_capacity(times.len());
    let mut pops = Vec::with_capacity(times.len());
    for point in &evo.points {
        let p = point.mean[(w, w)].re;
        let pur = (&point.mean * &point.mean).trace().re;
        let bloch_norm = (nn * (pur - 1.0 / nn) / 2.0).max(0.0).sqrt();
        rows.push([point.t, p, point.se_re[(w, w)], pur, bloch_norm]);
        pops.push(p);
    }
    let (t_opt, p_succ) = search::peak(times, &pops)?;
    Ok(McPointRun {
        pt,
        gamma: cal.gamma,
        rows,
        p_succ,
        t_opt,
    })
}

pub fn run_mc(cfg: &ExperimentConfig) -> Result<()> {
    let clock = RunClock::start();
    let dir = ensure_dir(cfg)?;
    let cals = calibrations(cfg)?;
    let times = linspace(cfg.time.t_max, cfg.time.points);
    let results: Vec<Result<McPointRun>> = grid(cfg)
        .par_iter()
        .map(|&pt| mc_point(cfg, &cals[&pt.n], &times, pt))
        .collect();

    let mut rels = Vec::new();
    let mut summary = CsvFile::create(
        &dir,
        "mc_summary.csv",
        &["n", "mu", "nu", "gamma", "trajectories", "p_succ", "t_opt"],
    )?;
    for res in results {
        let p = res?;
        let name = format!("mc_n{}_mu{}_nu{}.csv", p.pt.n, tag(p.pt.mu), tag(p.pt.nu));
        let mut f = CsvFile::create(
            &dir,
            &name,
            &["t", "p_target", "p_target_se", "purity", "bloch_norm"],
        )?;
        for row in &p.rows {
            f.row(row.iter().map(|v| float(*v)))?;
        }
        rels.push(f.finish()?);
        summary.row([
            p.pt.n.to_string(),
            float(p.pt.mu),
            float(p.pt.nu),
            float(p.gamma),
            cfg.mc.trajectories.to_string(),
            float(p.p_succ),
            float(p.t_opt),
        ])?;
    }
    rels.push(summary.finish()?);
    write_manifest(&dir, "mc", cfg, &clock, rels)
}

struct SweepRow {
    pt: GridPoint,
    gamma: f64,
    p_succ: f64,
    t_opt: f64,
    n_m: f64,
    n_blp: f64,
}

fn sweep_point(
    cfg: &ExperimentConfig,
    cal: &Calibration,
    times: &[f64],
    pt: GridPoint,
) -> Result<SweepRow> {
    let graph = cfg.graph.kind.build(pt.n)?;
    let map = averaged_map(cfg, &graph, cal.gamma, pt)?;
    let rho0 = uniform_density(pt.n);

    let traj = map.evolve_density(&rho0, times)?;
    let basis = map.quasi_hamiltonian().basis();
    let pops: Vec<f64> = traj
        .states
        .iter()
        .map(|x| search::node_population(basis, x, cfg.search.target))
        .collect::<Result<_>>()?;
    let (t_opt, p_succ) = search::peak(times, &pops)?;

    let scan =
        measures::nm_divisibility(&map, &rho0, cfg.divisibility.tau_max, cfg.divisibility.step)?;
    let candidates = blp_candidates(cfg, &graph)?;
    let outcome = measures::blp_pair_search(&map, &rho0, &candidates, cfg.blp.t_max, cfg.blp.dt)?;

    Ok(SweepRow {
        pt,
        gamma: cal.gamma,
        p_succ,
        t_opt,
        n_m: scan.n_m,
        n_blp: outcome.best.n_blp,
    })
}

pub fn sweep(cfg: &ExperimentConfig) -> Result<()> {
    let clock = RunClock::start();
    let dir = ensure_dir(cfg)?;
    let cals = calibrations(cfg)?;
    let times = linspace(cfg.time.t_max, cfg.time.points);
    let results: Vec<Result<SweepRow>> = grid(cfg)
        .par_iter()
        .map(|&pt| sweep_point(cfg, &cals[&pt.n], &times, pt))
        .collect();

    let mut rels = Vec::new();
    let mut summary = CsvFile::create(
        &dir,
        "sweep_summary.csv",
        &["n", "mu", "nu", "gamma", "p_succ", "t_opt", "n_m", "n_blp"],
    )?;
    for res in results {
        let r = res?;
        summary.row([
            r.pt.n.to_string(),
            float(r.pt.mu),
            float(r.pt.nu),
            float(r.gamma),
            float(r.p_succ),
            float(r.t_opt),
            float(r.n_m),
            float(r.n_blp),
        ])?;
    }
    rels.push(summary.finish()?);
    write_manifest(&dir, "sweep", cfg, &clock, rels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn purity_matches_the_density_matrix() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(3);
        let basis = crate::bloch::GeneratorBasis::new(4).unwrap();
        let rho = crate::linalg::random_density(4, &mut rng);
        let x = basis.to_bloch(&rho).unwrap();
        let direct = (&rho * &rho).trace().re;
        assert!((purity(4, &x) - direct).abs() < 1e-12);
    }

    #[test]
    fn grid_enumerates_in_config_order() {
        let mut cfg = ExperimentConfig::default();
        cfg.graph.n = vec![4, 5];
        cfg.noise.mu = vec![0.1, 1.0];
        cfg.noise.nu = vec![1.0];
        let pts = grid(&cfg);
        assert_eq!(pts.len(), 4);
        assert_eq!((pts[0].n, pts[0].mu), (4, 0.1));
        assert_eq!((pts[3].n, pts[3].mu), (5, 1.0));
    }

    #[test]
    fn linspace_hits_both_ends() {
        let ts = linspace(25.0, 101);
        assert_eq!(ts.len(), 101);
        assert_eq!(ts[0], 0.0);
        assert_eq!(ts[100], 25.0);
        assert!((ts[1] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn fixed_gamma_skips_calibration_scan() {
        let mut cfg = ExperimentConfig::default();
        cfg.graph.n = vec![4];
        cfg.search.gamma = Some(0.25);
        let cals = calibrations(&cfg).unwrap();
        assert_eq!(cals[&4].gamma, 0.25);
        assert!(cals[&4].p_succ > 0.9);
    }
}
