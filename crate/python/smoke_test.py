#!/usr/bin/env python3
"""End-to-end exercise of the rtnwalk_py extension module.

Builds the module if needed, then checks graph construction, noise
statistics, the averaged map, calibration, both non-Markovianity measures,
and the Monte Carlo sampler against each other. Exits nonzero on the first
failed check.
"""

import math
import pathlib
import shutil
import subprocess
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parents[1]


def load_module():
    candidates = [
        ROOT / "target" / profile / "librtnwalk_py.so"
        for profile in ("release", "debug")
    ]
    built = next((p for p in candidates if p.exists()), None)
    if built is None:
        subprocess.run(
            ["cargo", "build", "--release", "-p", "rtnwalk-py"],
            cwd=ROOT,
            check=True,
        )
        built = candidates[0]
    stage = pathlib.Path(tempfile.mkdtemp(prefix="rtnwalk_py_"))
    shutil.copy2(built, stage / "rtnwalk_py.so")
    sys.path.insert(0, str(stage))
    import rtnwalk_py

    return rtnwalk_py


def check(label, ok):
    print(f"{'ok' if ok else 'FAIL':4} {label}")
    if not ok:
        sys.exit(1)


def uniform_density(n):
    return [[complex(1.0 / n, 0.0)] * n for _ in range(n)]


def main():
    rw = load_module()
    n = 4

    graph = rw.Graph.star(n)
    check("star shape", graph.n_nodes == n and graph.edge_count == n - 1)
    check("hub degree", graph.degree(0) == n - 1 and graph.degree(1) == 1)
    lap = graph.laplacian()
    check("laplacian rows sum to zero", all(abs(sum(row)) < 1e-12 for row in lap))
    check(
        "edge labelling is one-based",
        graph.edge_labels() == [(lo + 1, hi + 1) for lo, hi in graph.edges()],
    )

    noise = rw.NoiseModel(graph.edge_count, 1.0, 0.5)
    check("autocorrelation at zero lag", abs(noise.autocorrelation(0.0) - 1.0) < 1e-12)
    check(
        "autocorrelation decays",
        noise.autocorrelation(1.0) < noise.autocorrelation(0.5) < 1.0,
    )

    gamma, p_succ, t_opt = rw.calibrate_gamma(graph, 0)
    check("calibrated peak is high", p_succ > 0.95)
    check(
        "calibrated peak time sits on the period",
        abs(math.sin(t_opt / math.sqrt(n))) > 0.99,
    )

    walk = rw.Walk(graph, noise, gamma, target=0)
    times = [0.05 * k for k in range(0, 101)]
    curve = walk.success_curve(times)
    check("uniform start hits the target with 1/n", abs(curve[0] - 1.0 / n) < 1e-12)
    check("noise keeps the peak below the ideal", 1.0 / n < max(curve) < p_succ)

    rho_t = walk.evolve(uniform_density(n), times[-1])
    trace = sum(rho_t[i][i] for i in range(n))
    check("evolved density keeps unit trace", abs(trace - 1.0) < 1e-10)
    check(
        "diagonal matches the success curve",
        abs(rho_t[0][0].real - curve[-1]) < 1e-10,
    )

    check(
        "trace distance separates basis states",
        rw.trace_distance(uniform_density(n), uniform_density(n)) < 1e-12
        and abs(
            rw.trace_distance(
                [[1, 0], [0, 0]],
                [[0, 0], [0, 1]],
            )
            - 1.0
        )
        < 1e-12,
    )

    ortho = rw.optimal_orthogonal_state(n)
    overlap = sum(
        (uniform_density(n)[i][j].conjugate() * ortho[j][i]).real
        for i in range(n)
        for j in range(n)
    )
    check("orthogonal state avoids the uniform one", abs(overlap) < 1e-12)

    slow = rw.Walk(graph, rw.NoiseModel(graph.edge_count, 0.1, 1.0), gamma, target=0)
    fast = rw.Walk(graph, rw.NoiseModel(graph.edge_count, 10.0, 1.0), gamma, target=0)
    nm_slow, *_ = rw.nm_divisibility(slow, uniform_density(n), 10.0, 0.2)
    nm_fast, *_ = rw.nm_divisibility(fast, uniform_density(n), 10.0, 0.2)
    check("slow switching is less divisible", nm_slow > nm_fast >= 0.0)

    blp_slow, _, dists = rw.blp_measure(slow, uniform_density(n), ortho, 10.0, 0.2)
    blp_fast, _, _ = rw.blp_measure(fast, uniform_density(n), ortho, 10.0, 0.2)
    check("distance series starts at one", abs(dists[0] - 1.0) < 1e-10)
    check("slow switching backflows more", blp_slow > blp_fast >= 0.0)

    mc_times = times[::20]
    points = rw.monte_carlo(
        graph, noise, gamma, uniform_density(n), mc_times, 2000, 7, target=0
    )
    exact = walk.evolve_grid(uniform_density(n), mc_times)
    worst = max(
        abs(p[1][i][j] - exact[k][i][j]) - 4.0 * p[2]
        for k, p in enumerate(points)
        for i in range(n)
        for j in range(n)
    )
    check("sampled average brackets the exact map", worst < 1e-3)
    again = rw.monte_carlo(
        graph, noise, gamma, uniform_density(n), mc_times, 2000, 7, target=0
    )
    check(
        "identical seeds reproduce bit for bit",
        all(p[1] == q[1] for p, q in zip(points, again)),
    )

    print("all checks passed")


if __name__ == "__main__":
    main()
