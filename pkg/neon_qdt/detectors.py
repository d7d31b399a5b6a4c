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

import numpy as np

from dataclasses import dataclass
from typing import Optional
from ovos_utils.log import LOG
from scipy.special import gammaln, xlog1py, xlogy

from neon_qdt.exceptions import ConfigError, DomainError
from neon_qdt.fock import ProbeSet, poisson_probe_matrix

ROW_SUM_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class DiagonalPovm:
    """
    POVM of a phase insensitive detector: column j of the M x N matrix `pi` holds the Fock-basis
    diagonal of element E_j, so every row is a probability vector over outcomes.
    """
    pi: np.ndarray

    def __post_init__(self):
        pi = np.array(self.pi, dtype=float)
        if pi.ndim != 2:
            raise ConfigError(f"POVM matrix must be two dimensional, got shape {pi.shape}")
        if not np.all(np.isfinite(pi)):
            raise DomainError("POVM matrix has non-finite entries")
        if np.any(pi < 0):
            raise DomainError("POVM matrix has negative entries")
        defect = np.max(np.abs(pi.sum(axis=1) - 1.0))
        if defect > ROW_SUM_TOLERANCE:
            raise DomainError(f"POVM rows must sum to 1 (max deviation {defect})")
        pi.setflags(write=False)
        object.__setattr__(self, "pi", pi)

    @property
    def hilbert_dim(self) -> int:
        return self.pi.shape[0]

    @property
    def num_outcomes(self) -> int:
        return self.pi.shape[1]

    def element(self, outcome: int) -> np.ndarray:
        """Full M x M operator of one POVM element"""
        return np.diag(self.pi[:, outcome])


def diagonal_povm_elements(povm: DiagonalPovm) -> list:
    """Lift every element of a diagonal POVM to a full matrix"""
    return [povm.element(j) for j in range(povm.num_outcomes)]


def _check_outcomes(hilbert_dim: int, num_outcomes: int):
    if num_outcomes < 2:
        raise ConfigError(f"a detector needs at least two outcomes, got {num_outcomes}")
    if num_outcomes > hilbert_dim:
        raise ConfigError(f"{num_outcomes} outcomes leave the overflow bucket empty "
                          f"for hilbert_dim={hilbert_dim}")


def ideal_pnr_povm(hilbert_dim: int, num_outcomes: int) -> DiagonalPovm:
    """
    Ideal photon number resolving detector: outcomes 0..N-2 project onto single Fock states,
    the last outcome collects N-1 or more photons.
    """
    _check_outcomes(hilbert_dim, num_outcomes)
    pi = np.zeros((hilbert_dim, num_outcomes))
    counts = np.arange(num_outcomes - 1)
    pi[counts, counts] = 1.0
    pi[num_outcomes - 1:, num_outcomes - 1] = 1.0
    return DiagonalPovm(pi)


def efficient_pnr_povm(hilbert_dim: int, num_outcomes: int, eta: float) -> DiagonalPovm:
    """
    Photon number resolving detector with quantum efficiency eta: k incident photons are
    registered as n with binomial probability C(k, n) eta^n (1 - eta)^(k - n).
    The overflow outcome takes the remaining probability of each row.
    """
    _check_outcomes(hilbert_dim, num_outcomes)
    if not 0.0 <= eta <= 1.0:
        raise DomainError(f"quantum efficiency must be in [0, 1], got {eta}")
    k = np.arange(hilbert_dim)[:, None].astype(float)
    n = np.arange(num_outcomes - 1)[None, :].astype(float)
    reachable = n <= k
    losses = np.where(reachable, k - n, 0.0)
    log_binom = gammaln(k + 1.0) - gammaln(n + 1.0) - gammaln(losses + 1.0)
    log_prob = log_binom + xlogy(n, eta) + xlog1py(losses, -eta)
    counts = np.where(reachable, np.exp(log_prob), 0.0)
    overflow = 1.0 - counts.sum(axis=1)
    if np.any(overflow < -ROW_SUM_TOLERANCE):
        LOG.warning(f"clamping overflow column (min {overflow.min()})")
    pi = np.hstack([counts, np.maximum(overflow, 0.0)[:, None]])
    return DiagonalPovm(pi)


def pnr_povm(hilbert_dim: int, num_outcomes: int, eta: Optional[float] = None) -> DiagonalPovm:
    """Ideal detector when eta is None, else the eta-efficient one"""
    if eta is None:
        return ideal_pnr_povm(hilbert_dim, num_outcomes)
    return efficient_pnr_povm(hilbert_dim, num_outcomes, eta)


@dataclass(frozen=True, eq=False)
class Dataset:
    """
    Measured outcome probabilities P (D x N), one row per probe.
    """
    probs: np.ndarray
    probe_set_ref: str
    noise_sigma: float = 0.0
    shots: Optional[int] = None
    seed: Optional[int] = None

    def __post_init__(self):
        probs = np.array(self.probs, dtype=float)
        if probs.ndim != 2:
            raise ConfigError(f"dataset must be two dimensional, got shape {probs.shape}")
        if np.any(probs < 0) or np.any(probs > 1) or not np.all(np.isfinite(probs)):
            raise DomainError("dataset probabilities must lie in [0, 1]")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @property
    def num_probes(self) -> int:
        return self.probs.shape[0]

    @property
    def num_outcomes(self) -> int:
        return self.probs.shape[1]


def simulate_dataset(povm: DiagonalPovm, probes: ProbeSet, sigma: float = 0.0,
                     seed: int = 0, shots: Optional[int] = None) -> Dataset:
    """
    Simulates the detector response to coherent probes.
    Amplitude noise perturbs every probe mean by N(0, sigma^2) (clamped at zero) before the
    forward model P = F~ Pi is evaluated; reconstruction later uses the unperturbed probes.
    :param povm: ground truth detector
    :param probes: probes the experimenter believes were sent
    :param sigma: standard deviation of the mean photon number noise
    :param seed: seed of the generator owned by this call
    :param shots: if set, rows are replaced by multinomial frequencies of this many detections
    :return: Dataset
    """
    if povm.hilbert_dim != probes.hilbert_dim:
        raise ConfigError(f"POVM hilbert_dim={povm.hilbert_dim} does not match "
                          f"probes hilbert_dim={probes.hilbert_dim}")
    if sigma < 0:
        raise DomainError(f"noise sigma must be nonnegative, got {sigma}")
    if shots is not None and shots < 1:
        raise ConfigError(f"shots must be positive, got {shots}")
    rng = np.random.default_rng(seed)
    if sigma > 0:
        noise = rng.normal(0.0, sigma, probes.num_probes)
        perturbed = np.maximum(probes.mean_photon_numbers + noise, 0.0)
        probe_matrix = poisson_probe_matrix(perturbed, probes.hilbert_dim)
    else:
        probe_matrix = probes.probe_matrix
    probs = probe_matrix @ povm.pi
    if shots is not None:
        rows = probs / probs.sum(axis=1, keepdims=True)
        probs = np.stack([rng.multinomial(shots, row) for row in rows]) / shots
    LOG.debug(f"simulated {probs.shape} dataset (sigma={sigma}, shots={shots}, seed={seed})")
    return Dataset(np.clip(probs, 0.0, 1.0), probes.fingerprint, float(sigma), shots, seed)
