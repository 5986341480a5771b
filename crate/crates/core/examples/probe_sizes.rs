use nalgebra::DMatrix;
use num_complex::Complex64;
use rtnwalk::{assemble, measures, search, ActionOptions, AveragedMap, Graph, NoiseModel};

fn star_map(n: usize, gamma: f64, mu: f64, nu: f64) -> AveragedMap {
    let graph = Graph::star(n).unwrap();
    let noise = NoiseModel::new(graph.edge_count(), mu, nu).unwrap();
    let qh = assemble(&graph, &noise, gamma, Some(0)).unwrap();
    AveragedMap::new(qh, ActionOptions::default()).unwrap()
}

fn uniform_density(n: usize) -> DMatrix<Complex64> {
    DMatrix::from_element(n, n, Complex64::new(1.0 / n as f64, 0.0))
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let mu: f64 = args[1].parse().unwrap();
    let step: f64 = args[2].parse().unwrap();
    let lo: usize = args[3].parse().unwrap();
    let hi: usize = args[4].parse().unwrap();
    for n in lo..=hi {
        let graph = Graph::star(n).unwrap();
        let times = search::time_grid(search::default_horizon(n), 0.05).unwrap();
        let cal =
            search::calibrate_gamma(&graph, 0, &search::default_gamma_grid(), &times).unwrap();
        let exact = 1.0 / n as f64;
        let rho0 = uniform_density(n);
        let nm_cal = measures::nm_divisibility(&star_map(n, cal.gamma, mu, 1.0), &rho0, 25.0, step)
            .unwrap();
        let nm_exact =
            measures::nm_divisibility(&star_map(n, exact, mu, 1.0), &rho0, 25.0, step).unwrap();
        println!(
            "n={n} gamma_cal={:.4} nm_cal={:.6e} argmax=({:.2},{:.2}) | gamma_exact={:.4} nm_exact={:.6e} argmax=({:.2},{:.2})",
            cal.gamma, nm_cal.n_m, nm_cal.argmax.0, nm_cal.argmax.1,
            exact, nm_exact.n_m, nm_exact.argmax.0, nm_exact.argmax.1,
        );
    }
}
