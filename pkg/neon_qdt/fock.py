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

import hashlib
import numpy as np

from dataclasses import dataclass, field
from typing import Union
from ovos_utils.log import LOG
from scipy.special import gammaln, xlogy

from neon_qdt.exceptions import ConfigError, DomainError, NumericError

DEFAULT_TAIL_BOUND = 1e-5
BISECTION_TOLERANCE = 1e-9

ArrayLike = Union[float, int, np.ndarray]


def _check_mean(mu: ArrayLike):
    mu = np.asarray(mu, dtype=float)
    if np.any(np.isnan(mu)):
        raise NumericError("mean photon number is NaN")
    if np.any(mu < 0):
        raise DomainError(f"mean photon number must be nonnegative, got {mu}")
    return mu


def poisson_pmf(mu: ArrayLike, j: ArrayLike) -> ArrayLike:
    """
    Probability of j photons in a coherent state of mean photon number mu.
    Evaluated as exp(j*log(mu) - mu - log(j!)) so that neither mu**j nor j! is formed.
    :param mu: mean photon number(s) |alpha|^2
    :param j: photon number(s)
    :return: pmf value(s), broadcast over mu and j
    """
    mu = _check_mean(mu)
    j = np.asarray(j)
    if np.any(j < 0):
        raise DomainError(f"photon number must be nonnegative, got {j}")
    # xlogy returns 0 for 0*log(0), so mu=0 gives the vacuum point mass
    value = np.exp(xlogy(j, mu) - mu - gammaln(j + 1.0))
    if value.ndim == 0:
        return float(value)
    return value


def poisson_cdf(mu: ArrayLike, j: int) -> float:
    """
    Cumulative Poisson probability of at most j photons.
    Summed from the same log-space pmf values used to fill probe matrices.
    """
    mu = float(_check_mean(mu))
    if j < 0:
        raise DomainError(f"photon number must be nonnegative, got {j}")
    total = np.sum(poisson_pmf(mu, np.arange(int(j) + 1)))
    return float(min(1.0, total))


def poisson_survival(mu: float, j: int) -> float:
    """Probability of more than j photons, 1 - poisson_cdf(mu, j)"""
    return 1.0 - poisson_cdf(mu, j)


def max_mean_photon(hilbert_dim: int, tail_bound: float = DEFAULT_TAIL_BOUND) -> float:
    """
    Largest mean photon number below hilbert_dim whose Poisson support outside the truncation
    is bounded by tail_bound. Found by bisection on the (monotone) survival function.
    :param hilbert_dim: Hilbert space truncation M
    :param tail_bound: allowed probability of more than M-1 photons
    :return: mu_max
    """
    if hilbert_dim < 2:
        raise ConfigError(f"hilbert_dim must be at least 2, got {hilbert_dim}")
    if not 0 < tail_bound < 1:
        raise ConfigError(f"tail_bound must be in (0, 1), got {tail_bound}")
    cutoff = hilbert_dim - 1
    lo, hi = 0.0, float(hilbert_dim)
    if poisson_survival(lo, cutoff) > tail_bound:
        raise NumericError("vacuum probe violates the tail bound")
    if poisson_survival(np.nextafter(hi, 0), cutoff) <= tail_bound:
        return float(np.nextafter(hi, 0))
    while hi - lo > BISECTION_TOLERANCE:
        mid = 0.5 * (lo + hi)
        if poisson_survival(mid, cutoff) <= tail_bound:
            lo = mid
        else:
            hi = mid
    LOG.debug(f"mu_max={lo} for M={hilbert_dim}, tail_bound={tail_bound}")
    return lo


def poisson_probe_matrix(mean_photon_numbers: np.ndarray, hilbert_dim: int) -> np.ndarray:
    """
    D x M matrix of Fock populations F_ij = pmf(mu_i, j) for the given probe means.
    """
    mus = _check_mean(np.atleast_1d(mean_photon_numbers))
    return poisson_pmf(mus[:, None], np.arange(hilbert_dim)[None, :])


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class ProbeSet:
    """
    Coherent state probes described by their mean photon numbers, with the Poisson probe matrix
    they induce on an M-dimensional truncated Fock space.
    """
    mean_photon_numbers: np.ndarray
    hilbert_dim: int
    probe_matrix: np.ndarray = field(default=None)
    phase: float = 0.0

    def __post_init__(self):
        mus = _frozen(np.atleast_1d(self.mean_photon_numbers))
        if mus.ndim != 1:
            raise ConfigError("mean_photon_numbers must be one dimensional")
        _check_mean(mus)
        if np.any(mus >= self.hilbert_dim):
            raise DomainError(f"mean photon numbers must be below hilbert_dim={self.hilbert_dim}")
        object.__setattr__(self, "mean_photon_numbers", mus)
        matrix = self.probe_matrix
        if matrix is None:
            matrix = poisson_probe_matrix(mus, self.hilbert_dim)
        matrix = _frozen(matrix)
        if matrix.shape != (len(mus), self.hilbert_dim):
            raise ConfigError(f"probe_matrix has shape {matrix.shape}, "
                              f"expected {(len(mus), self.hilbert_dim)}")
        object.__setattr__(self, "probe_matrix", matrix)

    @property
    def num_probes(self) -> int:
        return len(self.mean_photon_numbers)

    @property
    def fingerprint(self) -> str:
        """Stable identifier of this probe set, recorded by datasets simulated from it"""
        digest = hashlib.sha256()
        digest.update(str(self.hilbert_dim).encode())
        digest.update(np.ascontiguousarray(self.mean_photon_numbers).tobytes())
        return digest.hexdigest()[:16]

    @classmethod
    def from_means(cls, mean_photon_numbers, hilbert_dim: int, phase: float = 0.0):
        return cls(np.asarray(mean_photon_numbers, dtype=float), int(hilbert_dim), phase=phase)


def build_probe_grid(num_probes: int, hilbert_dim: int,
                     tail_bound: float = DEFAULT_TAIL_BOUND, phase: float = 0.0) -> ProbeSet:
    """
    Evenly spaced probes on [0, mu_max], both endpoints included.
    :param num_probes: number of probes D
    :param hilbert_dim: truncation M
    :param tail_bound: coverage criterion passed to max_mean_photon
    :param phase: fixed probe phase (irrelevant for phase insensitive detectors)
    :return: ProbeSet
    """
    if num_probes < 2:
        raise ConfigError(f"at least two probes are required, got {num_probes}")
    mu_max = max_mean_photon(hilbert_dim, tail_bound)
    means = np.arange(num_probes) * mu_max / (num_probes - 1)
    means[-1] = mu_max
    return ProbeSet(means, hilbert_dim, phase=phase)


def coherent_amplitude_vector(mu: float, phase: float, hilbert_dim: int) -> np.ndarray:
    """
    Fock amplitudes e^(-mu/2) (sqrt(mu) e^(i phase))^k / sqrt(k!) for k < hilbert_dim.
    The truncated vector is not renormalized.
    """
    mu = float(_check_mean(mu))
    k = np.arange(hilbert_dim)
    magnitude = np.exp(0.5 * xlogy(k, mu) - 0.5 * mu - 0.5 * gammaln(k + 1.0))
    return magnitude * np.exp(1j * phase * k)


def coherent_amplitude_matrix(mean_photon_numbers, phases, hilbert_dim: int) -> np.ndarray:
    """D x M matrix whose rows are coherent_amplitude_vector for each (mu, phase) pair"""
    mus = np.atleast_1d(np.asarray(mean_photon_numbers, dtype=float))
    phases = np.broadcast_to(np.asarray(phases, dtype=float), mus.shape)
    return np.stack([coherent_amplitude_vector(mu, phi, hilbert_dim)
                     for mu, phi in zip(mus, phases)])
