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

import time
import numpy as np

from dataclasses import dataclass
from typing import Optional, Union
from scipy.linalg import norm

from neon_qdt.detectors import Dataset, DiagonalPovm
from neon_qdt.exceptions import ConfigError, NumericError
from neon_qdt.fock import ProbeSet
from neon_qdt.solvers import FitResult, Solver, check_dimensions
from neon_qdt.solvers.gradient_descent import default_lambda, smoothing_gradient, smoothing_penalty

ROW_STEPS = "row"


@dataclass(frozen=True)
class BaselineConfig:
    """
    Projected gradient settings. step_size is a fixed step, None (or "auto") for the global
    1/L step, or "row" for a separate step per Fock row bounded by that row's curvature.
    With momentum, accelerated steps are taken and dropped in favour of a plain step
    whenever they would increase the loss.
    """
    step_size: Optional[Union[float, str]] = ROW_STEPS
    iterations: int = 2000
    lam: float = 0.0
    momentum: bool = True

    def __post_init__(self):
        if self.step_size == "auto":
            object.__setattr__(self, "step_size", None)
        if isinstance(self.step_size, str):
            if self.step_size != ROW_STEPS:
                raise ConfigError(f"step_size must be a number, 'auto' or '{ROW_STEPS}', "
                                  f"got '{self.step_size}'")
        elif self.step_size is not None and not self.step_size > 0:
            raise ConfigError("step_size must be positive")
        if self.iterations < 0:
            raise ConfigError("iterations must be nonnegative")
        if self.lam < 0:
            raise ConfigError("lambda must be nonnegative")

    @classmethod
    def from_dict(cls, section: dict, default_lambda: float = 0.0):
        section = dict(section or {})
        lam = section.pop("lambda", section.pop("lam", None))
        if lam is None:
            lam = default_lambda
        unknown = set(section) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown baseline options: {sorted(unknown)}")
        return cls(lam=float(lam), **section)

    def to_dict(self) -> dict:
        return {"step_size": self.step_size, "iterations": self.iterations, "lambda": self.lam,
                "momentum": self.momentum}


def project_rows_to_simplex(values: np.ndarray) -> np.ndarray:
    """
    Euclidean projection of every row onto the probability simplex (sort and threshold).
    """
    values = np.atleast_2d(np.asarray(values, dtype=float))
    if np.any(np.isnan(values)):
        raise NumericError("cannot project NaN onto the simplex")
    width = values.shape[1]
    ordered = np.sort(values, axis=1)[:, ::-1]
    cumulative = np.cumsum(ordered, axis=1) - 1.0
    index = np.arange(1, width + 1)
    support = np.count_nonzero(ordered - cumulative / index > 0, axis=1)
    threshold = cumulative[np.arange(len(values)), support - 1] / support
    return np.maximum(values - threshold[:, None], 0.0)


def project_to_simplex(vector) -> np.ndarray:
    """Nearest probability vector to `vector` in Euclidean distance"""
    return project_rows_to_simplex(np.ravel(vector)[None, :])[0]


def lipschitz_step(probe_matrix: np.ndarray, lam: float = 0.0) -> float:
    """1/L for the full-batch objective: L = 2 ||F||_2^2 + 8 lambda"""
    return 1.0 / (2.0 * norm(probe_matrix, 2) ** 2 + 8.0 * lam)


def row_steps(probe_matrix: np.ndarray, lam: float = 0.0) -> np.ndarray:
    """
    M x 1 column of per-row steps 1 / (2 sum_k |(F^T F)_ik| + 8 lambda). The scaled Hessian
    is diagonally dominant, so a plain projected step never increases the objective.
    A Fock row no probe reaches gets a zero step.
    """
    probe_matrix = np.asarray(probe_matrix, dtype=float)
    curvature = 2.0 * np.abs(probe_matrix.T @ probe_matrix).sum(axis=1) + 8.0 * lam
    steps = np.zeros_like(curvature)
    np.divide(1.0, curvature, out=steps, where=curvature > np.finfo(float).tiny)
    return steps[:, None]


def _loss(pi: np.ndarray, probs: np.ndarray, probe_matrix: np.ndarray, lam: float) -> float:
    return float(np.sum((probs - probe_matrix @ pi) ** 2) + lam * smoothing_penalty(pi))


def _gradient(pi: np.ndarray, probs: np.ndarray, probe_matrix: np.ndarray, lam: float) -> np.ndarray:
    grad = -2.0 * probe_matrix.T @ (probs - probe_matrix @ pi)
    if lam:
        grad += lam * smoothing_gradient(pi)
    return grad


class ProjectedGradientSolver(Solver):
    """
    Full-batch projected gradient descent directly on the POVM matrix. Stands in for an
    interior-point solver of the same convex problem.
    """
    name = "baseline"
    label = "baseline (projected gradient, substitute for interior-point CCO)"

    def __init__(self, config: Optional[BaselineConfig] = None):
        super().__init__(config or BaselineConfig())

    @classmethod
    def config_from(cls, config: dict) -> BaselineConfig:
        section = dict(config.get("baseline", {}))
        if section.get("lambda") is None and "lambda" in config.get("gd", {}):
            section["lambda"] = config["gd"]["lambda"]
        return BaselineConfig.from_dict(section, default_lambda(config))

    def steps(self, probe_matrix: np.ndarray) -> Union[float, np.ndarray]:
        config = self.config
        if config.step_size == ROW_STEPS:
            return row_steps(probe_matrix, config.lam)
        return config.step_size or lipschitz_step(probe_matrix, config.lam)

    def fit(self, dataset: Dataset, probes: ProbeSet, seed: Optional[int] = None) -> FitResult:
        config = self.config
        check_dimensions(dataset, probes)
        probs, probe_matrix = dataset.probs, probes.probe_matrix
        steps = self.steps(probe_matrix)
        largest_step = float(np.max(steps))

        def descend(point):
            return project_rows_to_simplex(point - steps * _gradient(point, probs, probe_matrix, config.lam))

        pi = np.full((probes.hilbert_dim, dataset.num_outcomes), 1.0 / dataset.num_outcomes)
        current = initial_loss = _loss(pi, probs, probe_matrix, config.lam)
        self.emit("fit:start", {"solver": self.name, "seed": None, "loss": initial_loss,
                                "step_size": largest_step})
        extrapolated, theta = pi, 1.0
        history, per_iteration = [], []
        for iteration in range(config.iterations):
            start = time.perf_counter()
            candidate = descend(extrapolated)
            loss = _loss(candidate, probs, probe_matrix, config.lam)
            if config.momentum and loss > current:
                # restart the momentum from the last accepted iterate
                theta = 1.0
                candidate = descend(pi)
                loss = _loss(candidate, probs, probe_matrix, config.lam)
            if not np.isfinite(loss):
                raise NumericError(f"loss became {loss} at iteration {iteration} (step_size={largest_step})")
            if config.momentum:
                theta_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * theta ** 2))
                extrapolated = candidate + ((theta - 1.0) / theta_next) * (candidate - pi)
                theta = theta_next
            else:
                extrapolated = candidate
            pi, current = candidate, loss
            per_iteration.append(time.perf_counter() - start)
            history.append(loss)
            self.emit("fit:epoch", {"solver": self.name, "seed": None, "epoch": iteration,
                                    "loss": loss, "learning_rate": largest_step})

        result = FitResult(pi_hat=DiagonalPovm(pi),
                           loss_history=history,
                           wall_clock_seconds=float(sum(per_iteration)),
                           wall_clock_per_iteration=per_iteration,
                           seed=None,
                           config_echo=config,
                           solver=self.name,
                           initial_loss=initial_loss)
        self.emit("fit:end", {"solver": self.name, "seed": None, "loss": result.final_loss,
                              "wall_clock_seconds": result.wall_clock_seconds})
        return result


def fit_baseline(dataset: Dataset, probes: ProbeSet,
                 config: Optional[BaselineConfig] = None) -> FitResult:
    """Projected gradient reconstruction with a uniform, deterministic start"""
    return ProjectedGradientSolver(config).fit(dataset, probes)
