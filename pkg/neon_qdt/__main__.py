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

import argparse
import sys
import numpy as np

from os.path import isfile, join
from typing import List, Optional
from ovos_utils.log import LOG

from neon_qdt.artifacts import MANIFEST_NAME, RunArtifacts, read_json, read_matrix_csv
from neon_qdt.benchmark import benchmark_grid, run_benchmark, write_results_csv
from neon_qdt.detectors import Dataset, DiagonalPovm, diagonal_povm_elements, simulate_dataset
from neon_qdt.exceptions import ConfigError, DomainError, NumericError
from neon_qdt.fock import ProbeSet, build_probe_grid, max_mean_photon
from neon_qdt.metrics import average_fidelity, average_matrix_fidelity
from neon_qdt.solvers import Solver, SolverFactory
from neon_qdt.solvers.stiefel import PhaseSensitiveDataset, phase_probe_grid, \
    simulate_phase_sensitive_dataset
from neon_qdt.utils import build_detector, get_config

COMMANDS = ("simulate", "fit", "benchmark", "fidelity")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERIC = 2


def handle_fit_start(event):
    LOG.info(f"{event['solver']} fit started (seed={event['seed']}, loss={event['loss']:.6e})")


def handle_fit_epoch(event):
    LOG.debug(f"{event['solver']} seed={event['seed']} epoch {event['epoch']}: "
              f"loss={event['loss']:.6e} lr={event['learning_rate']:.3e}")


def handle_fit_end(event):
    LOG.info(f"{event['solver']} fit finished (seed={event['seed']}, loss={event['loss']:.6e}, "
             f"{event['wall_clock_seconds']:.3f}s)")


def register_handlers(solver: Solver):
    solver.on("fit:start", handle_fit_start)
    solver.on("fit:epoch", handle_fit_epoch)
    solver.on("fit:end", handle_fit_end)


def _config_echo(config: dict) -> dict:
    # output locations do not affect results
    return {k: v for k, v in config.items() if k != "output"}


def _input_dir(config: dict) -> str:
    output = config["output"]
    return output.get("input_dir") or output["out_dir"]


def _read_input(input_dir: str, filename: str) -> np.ndarray:
    path = join(input_dir, filename)
    if not isfile(path):
        raise FileNotFoundError(f"{path} Not found!")
    return read_matrix_csv(path)


def cmd_simulate(config: dict) -> dict:
    """
    Writes probes.csv, povm_truth.csv, dataset.csv and manifest.json. For the stiefel solver
    the probes are a (mean, phase) grid and probes.csv has two columns.
    """
    detector, probe_config, simulation = config["detector"], config["probes"], config["simulation"]
    module = config["solver"]["module"]
    hilbert_dim = int(detector["hilbert_dim"])
    tail_bound = float(probe_config["tail_bound"])
    seed = int(simulation["seed"])
    truth = build_detector(config)

    with RunArtifacts(config["output"]["out_dir"], "simulate") as artifacts:
        if module == "stiefel":
            if simulation.get("sigma") or simulation.get("shots"):
                LOG.warning("amplitude noise and shots are ignored for phase sensitive probes")
            mus, phases = phase_probe_grid(int(probe_config["count"]), int(probe_config["phases"]),
                                           hilbert_dim, tail_bound)
            dataset = simulate_phase_sensitive_dataset(diagonal_povm_elements(truth), mus, phases,
                                                       hilbert_dim)
            artifacts.matrix("probes", np.column_stack([mus, phases]))
            fields = {"num_probes": dataset.num_probes}
        else:
            probes = build_probe_grid(int(probe_config["count"]), hilbert_dim, tail_bound,
                                      float(probe_config.get("phase", 0.0)))
            dataset = simulate_dataset(truth, probes, float(simulation["sigma"]), seed,
                                       simulation.get("shots"))
            artifacts.matrix("probes", probes.mean_photon_numbers)
            fields = {"num_probes": probes.num_probes, "probe_set": probes.fingerprint,
                      "probe_phase": probes.phase}
        artifacts.matrix("povm_truth", truth.pi)
        artifacts.matrix("dataset", dataset.probs)
        return artifacts.manifest(_config_echo(config), module,
                                  seeds={"simulation": seed},
                                  mu_max=max_mean_photon(hilbert_dim, tail_bound),
                                  **fields)


def _check_simulated_dim(input_dir: str, hilbert_dim: int):
    """Refuse to fit in a different truncation than the one recorded with the input files"""
    path = join(input_dir, MANIFEST_NAME)
    if not isfile(path):
        LOG.warning(f"No manifest in {input_dir}, hilbert_dim={hilbert_dim} is not verified")
        return
    simulated = read_json(path).get("config", {}).get("detector", {}).get("hilbert_dim")
    if simulated is not None and int(simulated) != hilbert_dim:
        raise ConfigError(f"{input_dir} was simulated with hilbert_dim={simulated}, "
                          f"not {hilbert_dim}")


def _load_truth(input_dir: str, hilbert_dim: int, num_outcomes: int) -> Optional[DiagonalPovm]:
    if not isfile(join(input_dir, "povm_truth.csv")):
        LOG.info("No ground truth available, skipping fidelity report")
        return None
    truth = DiagonalPovm(_read_input(input_dir, "povm_truth.csv"))
    if truth.pi.shape != (hilbert_dim, num_outcomes):
        raise ConfigError(f"ground truth of shape {truth.pi.shape} does not match "
                          f"hilbert_dim={hilbert_dim} and {num_outcomes} outcomes")
    return truth


def _fit_stiefel(config: dict, solver: Solver, artifacts: RunArtifacts, input_dir: str) -> dict:
    hilbert_dim = int(config["detector"]["hilbert_dim"])
    _check_simulated_dim(input_dir, hilbert_dim)
    grid = _read_input(input_dir, "probes.csv")
    if grid.shape[1] != 2:
        raise ConfigError("the stiefel solver needs (mean, phase) probes; simulate with --solver stiefel")
    probs = _read_input(input_dir, "dataset.csv")
    dataset = PhaseSensitiveDataset(probs, grid[:, 0], grid[:, 1], hilbert_dim)
    truth = _load_truth(input_dir, hilbert_dim, dataset.num_outcomes)

    result = solver.fit(dataset)
    artifacts.complex_matrix("stiefel_w", result.point.w)
    for j, element in enumerate(result.elements):
        artifacts.complex_matrix(f"povm_element_{j}", element)
    artifacts.matrix("loss_history", np.asarray(result.loss_history))
    fields = {"seeds": [result.seed], "final_losses": [result.final_loss],
              "block_ranks": list(result.point.block_ranks),
              "orthonormality_defect": result.point.orthonormality_defect(),
              "timings": artifacts.json("timings", {"trials": [result.timings()]})}
    if truth is not None:
        report = average_matrix_fidelity(result.elements, diagonal_povm_elements(truth))
        fields["fidelity"] = {"reports": [report.to_dict()], "fidelity_mean": report.average}
        LOG.info(f"average fidelity: {report.average:.6f}")
    return fields


def _fit_diagonal(config: dict, solver: Solver, artifacts: RunArtifacts, input_dir: str) -> dict:
    hilbert_dim = int(config["detector"]["hilbert_dim"])
    _check_simulated_dim(input_dir, hilbert_dim)
    means = _read_input(input_dir, "probes.csv")
    if means.shape[1] != 1:
        raise ConfigError(f"{solver.name} expects one probe mean per row, got {means.shape[1]} columns")
    probes = ProbeSet.from_means(means[:, 0], hilbert_dim)
    dataset = Dataset(_read_input(input_dir, "dataset.csv"), probes.fingerprint)
    truth = _load_truth(input_dir, hilbert_dim, dataset.num_outcomes)

    if solver.name == "gd":
        trials = int(config["solver"].get("trials", 1))
        multi = solver.multi_start_fit(dataset, probes, trials, truth,
                                       int(config["solver"].get("workers", 1)))
        results, reports, fidelity = multi.results, multi.reports, multi.summary
        best = multi.best
    else:
        best = solver.fit(dataset, probes)
        results = [best]
        reports = [average_fidelity(best.pi_hat, truth)] if truth is not None else None
        fidelity = {"fidelity_mean": reports[0].average} if reports else {}

    artifacts.matrix("pi_hat", best.pi_hat.pi)
    histories = np.column_stack([np.asarray(r.loss_history, dtype=float) for r in results])
    artifacts.matrix("loss_history", histories)
    fields = {"seeds": [r.seed for r in results],
              "best_seed": best.seed,
              "final_losses": [r.final_loss for r in results],
              "probe_set": probes.fingerprint,
              "timings": artifacts.json("timings", {"trials": [r.timings() for r in results]})}
    if reports is not None:
        fields["fidelity"] = {"reports": [r.to_dict() for r in reports],
                              **{k: v for k, v in fidelity.items() if k.startswith("fidelity")}}
    return fields


def cmd_fit(config: dict) -> dict:
    """
    Reconstructs the POVM from the files written by `simulate` (read from output.input_dir,
    or from out_dir when that is unset).
    """
    input_dir = _input_dir(config)
    solver = SolverFactory.create(config)
    register_handlers(solver)
    with RunArtifacts(config["output"]["out_dir"], "fit") as artifacts:
        if solver.name == "stiefel":
            fields = _fit_stiefel(config, solver, artifacts, input_dir)
        else:
            fields = _fit_diagonal(config, solver, artifacts, input_dir)
        return artifacts.manifest(_config_echo(config), solver.name,
                                  solver_config=solver.config.to_dict(), **fields)


def cmd_benchmark(config: dict) -> dict:
    """Runs the configured benchmark kind and writes benchmark_<kind>.csv"""
    kind = config["benchmark"]["kind"]
    benchmark_grid(kind, config)
    with RunArtifacts(config["output"]["out_dir"], "benchmark") as artifacts:
        rows = run_benchmark(kind, config, register_handlers)
        filename = artifacts.register(f"benchmark_{kind}.csv")
        write_results_csv(artifacts.path(filename), rows)
        # wall clock columns make the results file itself non-deterministic
        return artifacts.manifest(_config_echo(config), "gd+baseline", kind=kind,
                                  grid=benchmark_grid(kind, config), results=filename)


def cmd_fidelity(config: dict, estimate: str, truth: str) -> dict:
    """Compares two diagonal POVM CSV files and writes fidelity.json"""
    if not estimate or not truth:
        raise ConfigError("fidelity needs --estimate and --truth")
    estimated = DiagonalPovm(read_matrix_csv(estimate))
    reference = DiagonalPovm(read_matrix_csv(truth))
    with RunArtifacts(config["output"]["out_dir"], "fidelity") as artifacts:
        report = average_fidelity(estimated, reference)
        LOG.info(f"average fidelity: {report.average:.6f}")
        artifacts.json("fidelity", report.to_dict())
        return artifacts.manifest(_config_echo(config), "none", average=report.average)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file (comments allowed)")
    common.add_argument("--solver", choices=("gd", "baseline", "stiefel"))
    common.add_argument("--detector", choices=("ideal", "efficient"))
    common.add_argument("--hilbert-dim", type=int)
    common.add_argument("--outcomes", type=int)
    common.add_argument("--probes", type=int)
    common.add_argument("--phases", type=int, help="probe phases for the stiefel solver")
    common.add_argument("--eta", type=float, help="quantum efficiency, implies --detector efficient")
    common.add_argument("--sigma", type=float)
    common.add_argument("--shots", type=int)
    common.add_argument("--tail-bound", type=float)
    common.add_argument("--lambda", dest="lam", type=float)
    common.add_argument("--epochs", type=int)
    common.add_argument("--batch-size", type=int)
    common.add_argument("--lr", type=float)
    common.add_argument("--lr-decay", type=float)
    common.add_argument("--iterations", type=int, help="baseline and stiefel iterations")
    common.add_argument("--seed", type=int)
    common.add_argument("--trials", type=int)
    common.add_argument("--workers", type=int)
    common.add_argument("--out-dir")
    common.add_argument("--input-dir")
    common.add_argument("--kind", choices=("time", "noise", "data"))
    common.add_argument("--estimate", help="estimated POVM CSV (fidelity)")
    common.add_argument("--truth", help="reference POVM CSV (fidelity)")

    parser = argparse.ArgumentParser(prog="neon_qdt_client",
                                     description="Detector tomography of photon number resolving detectors")
    commands = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        commands.add_parser(command, parents=[common])
    return parser


def _set(overrides: dict, section: str, key: str, value):
    if value is not None:
        overrides.setdefault(section, {})[key] = value


def get_overrides(args: argparse.Namespace) -> dict:
    """Nested config overrides for the flags that were given"""
    overrides = {}
    _set(overrides, "solver", "module", args.solver)
    _set(overrides, "detector", "type", args.detector)
    _set(overrides, "detector", "hilbert_dim", args.hilbert_dim)
    _set(overrides, "detector", "outcomes", args.outcomes)
    if args.eta is not None:
        _set(overrides, "detector", "eta", args.eta)
        _set(overrides, "detector", "type", "efficient")
    _set(overrides, "probes", "count", args.probes)
    _set(overrides, "probes", "phases", args.phases)
    _set(overrides, "probes", "tail_bound", args.tail_bound)
    _set(overrides, "simulation", "sigma", args.sigma)
    _set(overrides, "simulation", "shots", args.shots)
    for section in ("gd", "baseline"):
        _set(overrides, section, "lambda", args.lam)
    _set(overrides, "gd", "epochs", args.epochs)
    _set(overrides, "gd", "batch_size", args.batch_size)
    _set(overrides, "gd", "learning_rate", args.lr)
    _set(overrides, "gd", "lr_decay", args.lr_decay)
    for section in ("baseline", "stiefel"):
        _set(overrides, section, "iterations", args.iterations)
    for section in ("simulation", "gd", "stiefel"):
        _set(overrides, section, "seed", args.seed)
    _set(overrides, "solver", "trials", args.trials)
    _set(overrides, "benchmark", "trials", args.trials)
    _set(overrides, "solver", "workers", args.workers)
    _set(overrides, "benchmark", "kind", args.kind)
    _set(overrides, "output", "out_dir", args.out_dir)
    _set(overrides, "output", "input_dir", args.input_dir)
    return overrides


def run_command(args: argparse.Namespace) -> dict:
    config = get_config(args.config, get_overrides(args))
    LOG.info(f"Running {args.command} into {config['output']['out_dir']}")
    if args.command == "simulate":
        return cmd_simulate(config)
    if args.command == "fit":
        return cmd_fit(config)
    if args.command == "benchmark":
        return cmd_benchmark(config)
    return cmd_fidelity(config, args.estimate, args.truth)


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if not e.code else EXIT_CONFIG
    try:
        run_command(args)
    except (ConfigError, FileNotFoundError) as e:
        LOG.error(f"{args.command} failed: {e}")
        return EXIT_CONFIG
    except (NumericError, DomainError) as e:
        LOG.error(f"{args.command} failed: {e}")
        return EXIT_NUMERIC
    LOG.info(f"{args.command} complete")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
