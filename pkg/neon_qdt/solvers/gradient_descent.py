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

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import List, Optional
from ovos_utils.log import LOG
from scipy.special import softmax

from neon_qdt.detectors import Dataset, DiagonalPovm
from neon_qdt.exceptions import ConfigError, NumericError
from neon_qdt.fock import ProbeSet
from neon_qdt.metrics import FidelityReport, average_fidelity, fidelity_statistics
from neon_qdt.solvers import FitResult, Solver, check_dimensions

# Unconstrained M x N parameters; softmax_rows maps them onto row-stochastic POVM matrices
Logits = np.ndarray

INEFFICIENT_DETECTOR_LAMBDA = 1e-5


@dataclass(frozen=True)
class FitConfig:
    learning_rate: float = 1e-2
    lr_decay: float = 0.999
    beta1: float = 0.9
    beta2: float = 0.9
    epsilon: float = 1e-8
    epochs: int = 100
    batch_size: int = 25
    lam: float = 0.0
    seed: int = 0
    init_stddev: float = 1.0
    accumulation_steps: int = 1
    lr_decay_per: str = "epoch"

    def __post_init__(self):
        checks = [(self.learning_rate > 0, "learning_rate must be positive"),
                  (0 < self.lr_decay <= 1, "lr_decay must be in (0, 1]"),
                  (0 <= self.beta1 < 1, "beta1 must be in [0, 1)"),
                  (0 <= self.beta2 < 1, "beta2 must be in [0, 1)"),
                  (self.epsilon > 0, "epsilon must be positive"),
                  (self.epochs >= 0, "epochs must be nonnegative"),
                  (self.batch_size >= 1, "batch_size must be positive"),
                  (self.lam >= 0, "lambda must be nonnegative"),
                  (self.init_stddev > 0, "init_stddev must be positive"),
                  (self.accumulation_steps >= 1, "accumulation_steps must be positive"),
                  (self.lr_decay_per in ("epoch", "step"), "lr_decay_per must be 'epoch' or 'step'")]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)

    @classmethod
    def from_dict(cls, section: dict, default_lambda: float = 0.0):
        """Build from a `gd` config section; a null `lambda` takes default_lambda"""
        section = dict(section or {})
        lam = section.pop("lambda", section.pop("lam", None))
        if lam is None:
            lam = default_lambda
        known = set(cls.__dataclass_fields__)
        unknown = set(section) - known
        if unknown:
            raise ConfigError(f"unknown gd options: {sorted(unknown)}")
        return cls(lam=float(lam), **section)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["lambda"] = data.pop("lam")
        return data


@dataclass
class AdamState:
    """First and second moment estimates of Adam"""
    m: np.ndarray
    v: np.ndarray

    @classmethod
    def zeros_like(cls, theta: np.ndarray):
        return cls(np.zeros_like(theta), np.zeros_like(theta))


def softmax_rows(theta: Logits) -> np.ndarray:
    """Row-wise softmax with max subtraction; every output row is a probability vector"""
    theta = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(theta)):
        raise NumericError("logits contain non-finite values")
    return softmax(theta, axis=1)


def smoothing_penalty(pi: np.ndarray) -> float:
    """Sum over outcomes of squared differences between neighbouring Fock rows"""
    return float(np.sum(np.diff(pi, axis=0) ** 2))


def smoothing_gradient(pi: np.ndarray) -> np.ndarray:
    steps = np.diff(pi, axis=0)
    grad = np.zeros_like(pi)
    grad[1:] += 2.0 * steps
    grad[:-1] -= 2.0 * steps
    return grad


def _batch_rows(num_probes: int, batch):
    if batch is None:
        return slice(None), 1.0
    batch = np.asarray(batch, dtype=int)
    if batch.size == 0:
        raise ConfigError("minibatch must not be empty")
    return batch, num_probes / batch.size


def _check_shapes(pi: np.ndarray, probs: np.ndarray, probe_matrix: np.ndarray):
    if probe_matrix.shape[0] != probs.shape[0]:
        raise ConfigError(f"probe matrix has {probe_matrix.shape[0]} rows, data has {probs.shape[0]}")
    if probe_matrix.shape[1] != pi.shape[0]:
        raise ConfigError(f"probe matrix has {probe_matrix.shape[1]} columns, "
                          f"POVM has {pi.shape[0]} rows")
    if probs.shape[1] != pi.shape[1]:
        raise ConfigError(f"data has {probs.shape[1]} outcomes, POVM has {pi.shape[1]}")


def objective(theta: Logits, probs: np.ndarray, probe_matrix: np.ndarray,
              lam: float = 0.0, batch=None) -> float:
    """
    Regularized least squares loss of the softmax parametrized POVM on a minibatch.
    The data term is scaled by D/|B| so that it estimates the full-data loss.
    :param theta: M x N logits
    :param probs: D x N measured probabilities
    :param probe_matrix: D x M probe matrix
    :param lam: weight of the next-neighbour smoothing term
    :param batch: probe indices, None for all probes
    :return: loss value
    """
    pi = softmax_rows(theta)
    _check_shapes(pi, probs, probe_matrix)
    rows, scale = _batch_rows(probs.shape[0], batch)
    residual = probs[rows] - probe_matrix[rows] @ pi
    return float(scale * np.sum(residual ** 2) + lam * smoothing_penalty(pi))


def gradient(theta: Logits, probs: np.ndarray, probe_matrix: np.ndarray,
             lam: float = 0.0, batch=None) -> np.ndarray:
    """
    Analytic gradient of `objective` with respect to the logits: the gradient in POVM space is
    pulled back through the softmax Jacobian of each row.
    """
    pi = softmax_rows(theta)
    _check_shapes(pi, probs, probe_matrix)
    rows, scale = _batch_rows(probs.shape[0], batch)
    batch_probes = probe_matrix[rows]
    residual = probs[rows] - batch_probes @ pi
    grad_pi = -2.0 * scale * (batch_probes.T @ residual)
    if lam:
        grad_pi += lam * smoothing_gradient(pi)
    return pi * (grad_pi - np.sum(grad_pi * pi, axis=1, keepdims=True))


def lr_schedule(gamma0: float, decay: float, t: int) -> float:
    """Exponentially decayed learning rate gamma0 * decay^t"""
    return gamma0 * decay ** t


def adam_step(theta: Logits, grad: np.ndarray, state: AdamState, step: int,
              learning_rate: float, config: FitConfig):
    """
    One bias-corrected Adam update.
    :param theta: current parameters
    :param grad: gradient at theta
    :param state: moment estimates from the previous step
    :param step: 1-based step counter used for bias correction
    :param learning_rate: scheduled learning rate for this step
    :param config: supplies beta1, beta2 and epsilon
    :return: (updated theta, updated AdamState)
    """
    if step < 1:
        raise ConfigError(f"Adam steps are counted from 1, got {step}")
    m = config.beta1 * state.m + (1.0 - config.beta1) * grad
    v = config.beta2 * state.v + (1.0 - config.beta2) * (grad * grad)
    m_hat = m / (1.0 - config.beta1 ** step)
    v_hat = v / (1.0 - config.beta2 ** step)
    theta = theta - learning_rate * m_hat / (np.sqrt(v_hat) + config.epsilon)
    return theta, AdamState(m, v)


def default_lambda(config: dict) -> float:
    detector = config.get("detector", {})
    if detector.get("type", "ideal") == "ideal":
        return 0.0
    return INEFFICIENT_DETECTOR_LAMBDA


@dataclass
class MultiStartResult:
    results: List[FitResult]
    reports: Optional[List[FidelityReport]] = None
    summary: dict = field(default_factory=dict)

    @property
    def best(self) -> FitResult:
        """Trial with the lowest final loss"""
        return min(self.results, key=lambda r: r.final_loss)


class GradientDescentSolver(Solver):
    """
    Minibatched Adam on softmax logits, with the learning rate decayed exponentially.
    """
    name = "gd"
    label = "gradient descent (Adam, softmax rows)"

    def __init__(self, config: Optional[FitConfig] = None):
        super().__init__(config or FitConfig())

    @classmethod
    def config_from(cls, config: dict) -> FitConfig:
        return FitConfig.from_dict(config.get("gd", {}), default_lambda(config))

    def fit(self, dataset: Dataset, probes: ProbeSet, seed: Optional[int] = None) -> FitResult:
        config = self.config
        seed = config.seed if seed is None else seed
        check_dimensions(dataset, probes)
        probs, probe_matrix = dataset.probs, probes.probe_matrix
        num_probes = probs.shape[0]

        rng = np.random.default_rng(seed)
        theta = rng.normal(0.0, config.init_stddev, (probes.hilbert_dim, dataset.num_outcomes))
        state = AdamState.zeros_like(theta)
        initial_loss = objective(theta, probs, probe_matrix, config.lam)
        self.emit("fit:start", {"solver": self.name, "seed": seed, "loss": initial_loss})

        history = []
        per_iteration = []
        step = 0
        learning_rate = config.learning_rate
        for epoch in range(config.epochs):
            start = time.perf_counter()
            order = rng.permutation(num_probes)
            batches = [order[i:i + config.batch_size] for i in range(0, num_probes, config.batch_size)]
            accumulated = np.zeros_like(theta)
            pending = 0
            for index, batch in enumerate(batches):
                accumulated += gradient(theta, probs, probe_matrix, config.lam, batch)
                pending += 1
                if pending < config.accumulation_steps and index < len(batches) - 1:
                    continue
                step += 1
                decay_steps = epoch if config.lr_decay_per == "epoch" else step - 1
                learning_rate = lr_schedule(config.learning_rate, config.lr_decay, decay_steps)
                theta, state = adam_step(theta, accumulated / pending, state, step, learning_rate, config)
                accumulated = np.zeros_like(theta)
                pending = 0
            elapsed = time.perf_counter() - start
            per_iteration.append(elapsed)

            loss = objective(theta, probs, probe_matrix, config.lam)
            if not np.isfinite(loss):
                raise NumericError(f"loss became {loss} at epoch {epoch} "
                                   f"(seed={seed}, learning_rate={learning_rate})")
            history.append(loss)
            self.emit("fit:epoch", {"solver": self.name, "seed": seed, "epoch": epoch,
                                    "loss": loss, "learning_rate": learning_rate})

        result = FitResult(pi_hat=DiagonalPovm(softmax_rows(theta)),
                           loss_history=history,
                           wall_clock_seconds=float(sum(per_iteration)),
                           wall_clock_per_iteration=per_iteration,
                           seed=seed,
                           config_echo=config,
                           solver=self.name,
                           initial_loss=initial_loss)
        self.emit("fit:end", {"solver": self.name, "seed": seed, "loss": result.final_loss,
                              "wall_clock_seconds": result.wall_clock_seconds})
        return result

    def multi_start_fit(self, dataset: Dataset, probes: ProbeSet, trials: int,
                        truth: Optional[DiagonalPovm] = None, workers: int = 1) -> MultiStartResult:
        """
        Repeats the fit from `trials` random initializations; trial k uses seed config.seed + k,
        so trial 0 reproduces `fit`.
        :param dataset: measured data
        :param probes: probes used for reconstruction
        :param trials: number of independent initializations
        :param truth: ground truth POVM, when known, for fidelity statistics
        :param workers: trials run on a thread pool when greater than 1
        :return: MultiStartResult with results in trial order
        """
        if trials < 1:
            raise ConfigError(f"trials must be positive, got {trials}")
        seeds = [self.config.seed + k for k in range(trials)]
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as executor:
                results = list(executor.map(lambda s: self.fit(dataset, probes, seed=s), seeds))
        else:
            results = [self.fit(dataset, probes, seed=s) for s in seeds]

        reports = None
        summary = {"trials": trials, "seeds": seeds,
                   "final_losses": [r.final_loss for r in results]}
        if truth is not None:
            reports = [average_fidelity(r.pi_hat, truth) for r in results]
            summary.update(fidelity_statistics(reports))
            LOG.info(f"average fidelity over {trials} trials: "
                     f"{summary['fidelity_mean']:.6f} +/- {summary['fidelity_std']:.6f}")
        return MultiStartResult(results, reports, summary)


def fit(dataset: Dataset, probes: ProbeSet, config: Optional[FitConfig] = None) -> FitResult:
    """Single gradient descent reconstruction"""
    return GradientDescentSolver(config).fit(dataset, probes)


def multi_start_fit(dataset: Dataset, probes: ProbeSet, config: Optional[FitConfig] = None,
                    trials: int = 20, truth: Optional[DiagonalPovm] = None,
                    workers: int = 1) -> MultiStartResult:
    """Gradient descent from several random initializations"""
    return GradientDescentSolver(config).multi_start_fit(dataset, probes, trials, truth, workers)
