# NEON AI (TM) SOFTWARE, Software Development Kit & Application Development System
# All trademark and other rights reserved by their respective owners
# Copyright 2008-2021 Neongecko.com Inc.
#
# Redistribution and use in source and binary forms, with or without modification, are permitted provided that the
# following conditions are met:
# 1. Redistributions of source code must retain the above copyright notice, this list of conditions
#    and the following disclaimer.
# 2. Redistributions in binary form must reproduce the above copyright notice, this list of conditions
#    and the following disclaimer in the documentation and/or other materials provided with the distribution.
# 3. Neither the name of the copyright holder nor the names of its contributors may be used to endorse or promote
#    products derived from this software without specific prior written permission.

# THIS SOFTWARE IS PROVIDED BY THE COPYRIGHT HOLDERS AND CONTRIBUTORS "AS IS" AND ANY EXPRESS OR IMPLIED WARRANTIES,
# INCLUDING, BUT NOT LIMITED TO, THE IMPLIED WARRANTIES OF MERCHANTABILITY AND FITNESS FOR A PARTICULAR PURPOSE ARE
# DISCLAIMED. IN NO EVENT SHALL THE COPYRIGHT HOLDER OR CONTRIBUTORS BE LIABLE FOR ANY DIRECT, INDIRECT, INCIDENTAL,
# SPECIAL, EXEMPLARY, OR CONSEQUENTIAL DAMAGES (INCLUDING, BUT NOT LIMITED TO, PROCUREMENT OF SUBSTITUTE GOODS OR
# SERVICES; LOSS OF USE, DATA, OR PROFITS; OR BUSINESS INTERRUPTION) HOWEVER CAUSED AND ON ANY THEORY OF LIABILITY,
# WHETHER IN CONTRACT, STRICT LIABILITY, OR TORT (INCLUDING NEGLIGENCE OR OTHERWISE) ARISING IN ANY WAY OUT OF THE
# USE OF THIS SOFTWARE, EVEN IF ADVISED OF THE POSSIBILITY OF SUCH DAMAGE.

import csv
import numpy as np

from copy import deepcopy
from typing import Callable, List, Optional
from ovos_utils.log import LOG

from neon_qdt.detectors import simulate_dataset
from neon_qdt.exceptions import ConfigError
from neon_qdt.fock import build_probe_grid
from neon_qdt.metrics import average_fidelity, fidelity_statistics
from neon_qdt.solvers import Solver
from neon_qdt.solvers.gradient_descent import GradientDescentSolver
from neon_qdt.solvers.projected_gradient import ProjectedGradientSolver
from neon_qdt.utils import build_detector

# benchmark kind -> (benchmark section key holding the grid, config path it sweeps)
BENCHMARK_GRIDS = {
    "time": ("hilbert_dims", ("detector", "hilbert_dim")),
    "noise": ("sigmas", ("simulation", "sigma")),
    "data": ("probe_counts", ("probes", "count"))
}

RESULT_FIELDS = ["kind", "grid_value", "solver", "solver_label", "trials", "fidelity_mean",
                 "fidelity_std", "wall_clock_total", "wall_clock_per_iteration"]


def benchmark_grid(kind: str, config: dict) -> list:
    """Values swept by a benchmark of the given kind"""
    if kind not in BENCHMARK_GRIDS:
        raise ConfigError(f"unknown benchmark kind '{kind}', expected one of {sorted(BENCHMARK_GRIDS)}")
    key, _ = BENCHMARK_GRIDS[kind]
    grid = config.get("benchmark", {}).get(key)
    if not grid:
        raise ConfigError(f"benchmark.{key} must be a non-empty list")
    return list(grid)


def grid_point_config(kind: str, value, config: dict) -> dict:
    """Copy of config with the swept parameter set to value"""
    _, (section, key) = BENCHMARK_GRIDS[kind]
    point = deepcopy(config)
    point[section][key] = value
    return point


def _mean_per_iteration(results) -> float:
    timings = [np.mean(r.wall_clock_per_iteration) for r in results if r.wall_clock_per_iteration]
    return float(np.mean(timings)) if timings else 0.0


def run_grid_point(kind: str, value, config: dict,
                   hooks: Optional[Callable[[Solver], None]] = None) -> List[dict]:
    """
    Runs multi-start gradient descent and the projected gradient baseline on the same
    simulated dataset.
    :param kind: benchmark kind
    :param value: grid value of the swept parameter
    :param config: full run configuration
    :param hooks: called with every solver before it fits, e.g. to register event handlers
    :return: one result row per solver
    """
    point = grid_point_config(kind, value, config)
    detector, probe_config = point["detector"], point["probes"]
    simulation, trials = point["simulation"], int(point["benchmark"]["trials"])

    truth = build_detector(point)
    probes = build_probe_grid(int(probe_config["count"]), int(detector["hilbert_dim"]),
                              float(probe_config["tail_bound"]), float(probe_config.get("phase", 0.0)))
    dataset = simulate_dataset(truth, probes, float(simulation["sigma"]),
                               int(simulation["seed"]), simulation.get("shots"))

    gd = GradientDescentSolver(GradientDescentSolver.config_from(point))
    baseline = ProjectedGradientSolver(ProjectedGradientSolver.config_from(point))
    if hooks:
        hooks(gd)
        hooks(baseline)

    multi = gd.multi_start_fit(dataset, probes, trials, truth,
                               int(point["solver"].get("workers", 1)))
    baseline_result = baseline.fit(dataset, probes)
    baseline_stats = fidelity_statistics([average_fidelity(baseline_result.pi_hat, truth)])

    rows = []
    for solver, results, stats in ((gd, multi.results, multi.summary),
                                   (baseline, [baseline_result], baseline_stats)):
        rows.append({"kind": kind,
                     "grid_value": value,
                     "solver": solver.name,
                     "solver_label": solver.label,
                     "trials": len(results),
                     "fidelity_mean": stats["fidelity_mean"],
                     "fidelity_std": stats["fidelity_std"],
                     "wall_clock_total": float(np.mean([r.wall_clock_seconds for r in results])),
                     "wall_clock_per_iteration": _mean_per_iteration(results)})
        LOG.info(f"{kind}={value} {solver.name}: fidelity {stats['fidelity_mean']:.6f}, "
                 f"{rows[-1]['wall_clock_per_iteration']:.3e} s/iteration")
    return rows


def run_benchmark(kind: str, config: dict,
                  hooks: Optional[Callable[[Solver], None]] = None) -> List[dict]:
    """
    Sweep of one parameter: hilbert_dim (time), amplitude noise sigma (noise) or the number of
    probes (data). Both solvers see identical data at every grid point.
    :return: result rows, two per grid point
    """
    grid = benchmark_grid(kind, config)
    LOG.info(f"Running {kind} benchmark over {grid}")
    rows = []
    for value in grid:
        rows.extend(run_grid_point(kind, value, config, hooks))
    return rows


def write_results_csv(path: str, rows: List[dict]) -> str:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=RESULT_FIELDS)
        writer.writeheader()
        writer.writerows(rows)
    return path


def read_results_csv(path: str) -> List[dict]:
    with open(path, "r", newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))
