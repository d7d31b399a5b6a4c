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

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple
from ovos_utils.log import LOG
from scipy.linalg import LinAlgError, solve

from neon_qdt.exceptions import ConfigError, DomainError, NumericError
from neon_qdt.fock import DEFAULT_TAIL_BOUND, build_probe_grid, coherent_amplitude_matrix
from neon_qdt.solvers import Solver
from neon_qdt.solvers.gradient_descent import lr_schedule

DRIFT_TOLERANCE = 1e-6
MAX_STEP_RETRIES = 10
SINGULAR_CONDITION = 1e12


@dataclass(frozen=True, eq=False)
class StiefelPoint:
    """
    Stacked factors W_1..W_N of a POVM with E_j = W_j^dagger W_j. Block j has block_ranks[j]
    rows, so E_j has rank at most block_ranks[j]; orthonormal columns make the POVM complete.
    """
    w: np.ndarray
    block_ranks: Tuple[int, ...]

    def __post_init__(self):
        w = np.array(self.w, dtype=complex)
        ranks = tuple(int(r) for r in self.block_ranks)
        if w.ndim != 2:
            raise ConfigError(f"Stiefel point must be a matrix, got shape {w.shape}")
        if any(r < 1 for r in ranks):
            raise ConfigError(f"block ranks must be positive, got {ranks}")
        if sum(ranks) != w.shape[0]:
            raise ConfigError(f"block ranks {ranks} do not add up to {w.shape[0]} rows")
        if sum(ranks) < w.shape[1]:
            raise ConfigError(f"block ranks {ranks} cannot span hilbert_dim={w.shape[1]}")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "block_ranks", ranks)
        defect = self.orthonormality_defect()
        if defect > DRIFT_TOLERANCE:
            raise NumericError(f"point left the Stiefel manifold (defect {defect})")

    @property
    def hilbert_dim(self) -> int:
        return self.w.shape[1]

    @property
    def num_outcomes(self) -> int:
        return len(self.block_ranks)

    def orthonormality_defect(self) -> float:
        """Frobenius norm of W^dagger W - I"""
        return float(np.linalg.norm(self.w.conj().T @ self.w - np.eye(self.hilbert_dim)))

    def blocks(self) -> List[np.ndarray]:
        bounds = np.cumsum((0,) + self.block_ranks)
        return [self.w[bounds[j]:bounds[j + 1]] for j in range(self.num_outcomes)]

    def povm_elements(self) -> List[np.ndarray]:
        return [block.conj().T @ block for block in self.blocks()]


def default_block_ranks(num_outcomes: int, hilbert_dim: int) -> Tuple[int, ...]:
    """Rank one for every counting outcome, the remaining dimensions for the overflow outcome"""
    if not 2 <= num_outcomes <= hilbert_dim:
        raise ConfigError(f"cannot build block ranks for {num_outcomes} outcomes "
                          f"and hilbert_dim={hilbert_dim}")
    return (1,) * (num_outcomes - 1) + (hilbert_dim - num_outcomes + 1,)


def random_stiefel(block_ranks: Sequence[int], hilbert_dim: int, seed: int = 0) -> StiefelPoint:
    """
    Orthonormalized complex Gaussian matrix, partitioned into blocks of the given ranks.
    """
    rows = int(sum(block_ranks))
    if rows < hilbert_dim:
        raise ConfigError(f"block ranks {tuple(block_ranks)} sum to {rows} < hilbert_dim={hilbert_dim}")
    rng = np.random.default_rng(seed)
    gaussian = rng.normal(size=(rows, hilbert_dim)) + 1j * rng.normal(size=(rows, hilbert_dim))
    q, r = np.linalg.qr(gaussian)
    diagonal = np.diag(r)
    q = q * (diagonal / np.abs(diagonal))
    return StiefelPoint(q, tuple(block_ranks))


@dataclass(frozen=True, eq=False)
class PhaseSensitiveDataset:
    """
    Outcome probabilities for pure coherent probes |alpha_i> with |alpha_i|^2 = mu_i and
    arg(alpha_i) = phi_i.
    """
    probs: np.ndarray
    mean_photon_numbers: np.ndarray
    phases: np.ndarray
    hilbert_dim: int
    amplitudes: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        probs = np.array(self.probs, dtype=float)
        mus = np.atleast_1d(np.array(self.mean_photon_numbers, dtype=float))
        phases = np.atleast_1d(np.array(self.phases, dtype=float))
        if probs.ndim != 2 or probs.shape[0] != len(mus) or len(mus) != len(phases):
            raise ConfigError(f"dataset of shape {probs.shape} does not match "
                              f"{len(mus)} means and {len(phases)} phases")
        if np.any(probs < 0) or np.any(probs > 1) or not np.all(np.isfinite(probs)):
            raise DomainError("dataset probabilities must lie in [0, 1]")
        amplitudes = coherent_amplitude_matrix(mus, phases, self.hilbert_dim)
        for name, value in (("probs", probs), ("mean_photon_numbers", mus),
                            ("phases", phases), ("amplitudes", amplitudes)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @property
    def num_probes(self) -> int:
        return self.probs.shape[0]

    @property
    def num_outcomes(self) -> int:
        return self.probs.shape[1]


def phase_probe_grid(num_means: int, num_phases: int, hilbert_dim: int,
                     tail_bound: float = DEFAULT_TAIL_BOUND):
    """
    Every combination of `num_means` evenly spaced means (see build_probe_grid) with
    `num_phases` phases evenly spaced on [0, 2 pi).
    :return: (means, phases), each of length num_means * num_phases
    """
    if num_phases < 1:
        raise ConfigError(f"num_phases must be positive, got {num_phases}")
    means = build_probe_grid(num_means, hilbert_dim, tail_bound).mean_photon_numbers
    phases = 2.0 * np.pi * np.arange(num_phases) / num_phases
    grid_means, grid_phases = np.meshgrid(means, phases, indexing="ij")
    return grid_means.ravel(), grid_phases.ravel()


def _probabilities(elements: Sequence[np.ndarray], amplitudes: np.ndarray) -> np.ndarray:
    return np.stack([np.einsum("im,mn,in->i", amplitudes.conj(), e, amplitudes).real
                     for e in elements], axis=1)


def simulate_phase_sensitive_dataset(elements: Sequence[np.ndarray], mean_photon_numbers,
                                     phases, hilbert_dim: int) -> PhaseSensitiveDataset:
    """Noiseless P_ij = <alpha_i|E_j|alpha_i> for truncated coherent probes"""
    amplitudes = coherent_amplitude_matrix(mean_photon_numbers, phases, hilbert_dim)
    for element in elements:
        if np.shape(element) != (hilbert_dim, hilbert_dim):
            raise ConfigError(f"POVM element of shape {np.shape(element)} does not match "
                              f"hilbert_dim={hilbert_dim}")
    probs = np.clip(_probabilities(elements, amplitudes), 0.0, 1.0)
    return PhaseSensitiveDataset(probs, mean_photon_numbers, phases, hilbert_dim)


def _check_point(point: StiefelPoint, amplitudes: np.ndarray):
    if amplitudes.ndim != 2 or amplitudes.shape[1] != point.hilbert_dim:
        raise ConfigError(f"probe amplitudes of shape {amplitudes.shape} do not match "
                          f"hilbert_dim={point.hilbert_dim}")


def _block_images(point: StiefelPoint, amplitudes: np.ndarray) -> List[np.ndarray]:
    # row i of each image is W_j a_i
    return [amplitudes @ block.T for block in point.blocks()]


def predicted_probs(point: StiefelPoint, amplitudes: np.ndarray) -> np.ndarray:
    """
    p_ij = ||W_j a_i||^2 for probe amplitude rows a_i
    :param point: current POVM factorization
    :param amplitudes: D x M coherent amplitudes
    :return: D x N predicted probabilities
    """
    amplitudes = np.asarray(amplitudes)
    _check_point(point, amplitudes)
    images = _block_images(point, amplitudes)
    return np.stack([np.sum(np.abs(image) ** 2, axis=1) for image in images], axis=1)


def _check_dataset(point: StiefelPoint, dataset: PhaseSensitiveDataset):
    if dataset.num_outcomes != point.num_outcomes:
        raise ConfigError(f"dataset has {dataset.num_outcomes} outcomes, point has {point.num_outcomes}")
    if dataset.hilbert_dim != point.hilbert_dim:
        raise ConfigError(f"dataset hilbert_dim={dataset.hilbert_dim} does not match {point.hilbert_dim}")


def loss(point: StiefelPoint, dataset: PhaseSensitiveDataset) -> float:
    """Squared Frobenius distance between predicted and measured probabilities"""
    _check_dataset(point, dataset)
    return float(np.sum((predicted_probs(point, dataset.amplitudes) - dataset.probs) ** 2))


def euclidean_gradient(point: StiefelPoint, dataset: PhaseSensitiveDataset) -> np.ndarray:
    """
    Derivative of `loss` with respect to conj(W): block j is
    2 sum_i (p_ij - P_ij) (W_j a_i) a_i^dagger. The loss changes by 2 Re<grad, dW> to first order,
    so stepping along -grad decreases it.
    """
    _check_dataset(point, dataset)
    amplitudes = dataset.amplitudes
    images = _block_images(point, amplitudes)
    predicted = np.stack([np.sum(np.abs(image) ** 2, axis=1) for image in images], axis=1)
    residual = predicted - dataset.probs
    blocks = [2.0 * (image * residual[:, [j]]).T @ amplitudes.conj()
              for j, image in enumerate(images)]
    return np.vstack(blocks)


def riemannian_step(point: StiefelPoint, grad: np.ndarray, gamma: float) -> StiefelPoint:
    """
    Cayley-type update along the normalized gradient that stays on the Stiefel manifold.
    A singular inner system is retried with half the step, up to MAX_STEP_RETRIES times.
    :param point: current point W
    :param grad: Euclidean gradient at W
    :param gamma: learning rate
    :return: updated point
    """
    if not gamma > 0:
        raise ConfigError(f"learning rate must be positive, got {gamma}")
    grad = np.asarray(grad, dtype=complex)
    if grad.shape != point.w.shape:
        raise ConfigError(f"gradient shape {grad.shape} does not match point shape {point.w.shape}")
    grad_norm = np.linalg.norm(grad)
    if not np.isfinite(grad_norm):
        raise NumericError("gradient is not finite")
    if grad_norm == 0:
        return point
    w = point.w
    normalized = grad / grad_norm
    a = np.hstack([normalized, w])
    b = np.hstack([w, -normalized])
    b_dagger = b.conj().T
    identity = np.eye(a.shape[1])
    for attempt in range(MAX_STEP_RETRIES + 1):
        system = identity + 0.5 * gamma * (b_dagger @ a)
        try:
            if np.linalg.cond(system) > SINGULAR_CONDITION:
                raise LinAlgError("ill-conditioned retraction system")
            direction = a @ solve(system, b_dagger @ w)
        except LinAlgError as e:
            LOG.debug(f"rejected Riemannian step with gamma={gamma}: {e}")
            gamma *= 0.5
            continue
        return StiefelPoint(w - gamma * direction, point.block_ranks)
    raise NumericError(f"retraction system stayed singular after {MAX_STEP_RETRIES} retries")


@dataclass(frozen=True)
class StiefelConfig:
    """
    Riemannian descent settings. block_ranks of None means rank one for counting outcomes
    and the remaining dimensions for the overflow outcome. With backtracking, a step that
    increases the loss is retried with half the learning rate and skipped if it never helps.
    """
    block_ranks: Optional[Tuple[int, ...]] = None
    iterations: int = 1000
    learning_rate: float = 0.05
    lr_decay: float = 0.995
    restarts: int = 1
    seed: int = 0
    backtracking: bool = True

    def __post_init__(self):
        if self.block_ranks is not None:
            object.__setattr__(self, "block_ranks", tuple(int(r) for r in self.block_ranks))
        if self.iterations < 0:
            raise ConfigError("iterations must be nonnegative")
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate must be positive")
        if not 0 < self.lr_decay <= 1:
            raise ConfigError("lr_decay must be in (0, 1]")
        if self.restarts < 1:
            raise ConfigError("restarts must be positive")

    @classmethod
    def from_dict(cls, section: dict):
        section = dict(section or {})
        unknown = set(section) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown stiefel options: {sorted(unknown)}")
        return cls(**section)

    def to_dict(self) -> dict:
        return {"block_ranks": list(self.block_ranks) if self.block_ranks else None,
                "iterations": self.iterations, "learning_rate": self.learning_rate,
                "lr_decay": self.lr_decay, "restarts": self.restarts, "seed": self.seed,
                "backtracking": self.backtracking}


@dataclass(eq=False)
class PhaseSensitiveFit:
    point: StiefelPoint
    loss_history: List[float]
    seed: int
    config_echo: StiefelConfig
    wall_clock_seconds: float = 0.0
    wall_clock_per_iteration: List[float] = field(default_factory=list)
    solver: str = "stiefel"

    @property
    def elements(self) -> List[np.ndarray]:
        return self.point.povm_elements()

    @property
    def final_loss(self) -> float:
        return self.loss_history[-1]

    def timings(self) -> dict:
        return {"wall_clock_seconds": self.wall_clock_seconds,
                "wall_clock_per_iteration": list(self.wall_clock_per_iteration)}


class StiefelSolver(Solver):
    """
    Full-batch Riemannian gradient descent for phase sensitive detectors.
    """
    name = "stiefel"
    label = "Riemannian gradient descent (complex Stiefel manifold)"

    def __init__(self, config: Optional[StiefelConfig] = None):
        super().__init__(config or StiefelConfig())

    @classmethod
    def config_from(cls, config: dict) -> StiefelConfig:
        return StiefelConfig.from_dict(config.get("stiefel", {}))

    def _descend(self, point: StiefelPoint, dataset: PhaseSensitiveDataset, seed: int):
        config = self.config
        current = loss(point, dataset)
        history = [current]
        per_iteration = []
        for iteration in range(config.iterations):
            start = time.perf_counter()
            gamma = lr_schedule(config.learning_rate, config.lr_decay, iteration)
            grad = euclidean_gradient(point, dataset)
            candidate = riemannian_step(point, grad, gamma)
            candidate_loss = loss(candidate, dataset)
            retries = 0
            while config.backtracking and candidate_loss > current and retries < MAX_STEP_RETRIES:
                gamma *= 0.5
                retries += 1
                candidate = riemannian_step(point, grad, gamma)
                candidate_loss = loss(candidate, dataset)
            if not np.isfinite(candidate_loss):
                raise NumericError(f"loss became {candidate_loss} at iteration {iteration} (seed={seed})")
            if not config.backtracking or candidate_loss <= current:
                point, current = candidate, candidate_loss
            per_iteration.append(time.perf_counter() - start)
            history.append(current)
            self.emit("fit:epoch", {"solver": self.name, "seed": seed, "epoch": iteration,
                                    "loss": current, "learning_rate": gamma})
        return point, history, per_iteration

    def fit(self, dataset: PhaseSensitiveDataset, probes=None) -> PhaseSensitiveFit:
        config = self.config
        ranks = config.block_ranks or default_block_ranks(dataset.num_outcomes, dataset.hilbert_dim)
        if len(ranks) != dataset.num_outcomes:
            raise ConfigError(f"{len(ranks)} block ranks for {dataset.num_outcomes} outcomes")
        best = None
        for restart in range(config.restarts):
            seed = config.seed + restart
            point = random_stiefel(ranks, dataset.hilbert_dim, seed)
            self.emit("fit:start", {"solver": self.name, "seed": seed, "loss": loss(point, dataset)})
            point, history, per_iteration = self._descend(point, dataset, seed)
            result = PhaseSensitiveFit(point, history, seed, config,
                                       float(sum(per_iteration)), per_iteration)
            LOG.debug(f"restart {restart} (seed={seed}) final loss {result.final_loss}")
            if best is None or result.final_loss < best.final_loss:
                best = result
        self.emit("fit:end", {"solver": self.name, "seed": best.seed, "loss": best.final_loss,
                              "wall_clock_seconds": best.wall_clock_seconds})
        return best


def fit_phase_sensitive(dataset: PhaseSensitiveDataset,
                        config: Optional[StiefelConfig] = None) -> PhaseSensitiveFit:
    """Rank-controlled Riemannian reconstruction of a phase sensitive POVM"""
    return StiefelSolver(config).fit(dataset)
