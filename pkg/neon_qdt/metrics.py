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

from dataclasses import dataclass, field
from typing import List, Optional, Sequence
from ovos_utils.log import LOG
from scipy.linalg import eigh, eigvalsh

from neon_qdt.detectors import DiagonalPovm
from neon_qdt.exceptions import ConfigError, DomainError, UndefinedFidelityError

PSD_TOLERANCE = 1e-9
HERMITIAN_TOLERANCE = 1e-9


@dataclass
class FidelityReport:
    """
    Per-element fidelities of a reconstructed POVM. Elements whose fidelity is undefined
    (zero trace in either POVM) are reported as None and listed in `undefined`.
    """
    per_element: List[Optional[float]]
    average: float
    undefined: List[int] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"per_element": list(self.per_element), "average": self.average,
                "undefined": list(self.undefined), "warnings": list(self.warnings)}


def diagonal_fidelity(p, q) -> float:
    """
    Fidelity between two POVM elements that are diagonal in the same basis:
    (sum_i sqrt(p_i q_i))^2 / (sum p * sum q)
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ConfigError(f"fidelity arguments differ in shape: {p.shape} vs {q.shape}")
    if np.any(p < 0) or np.any(q < 0):
        raise DomainError("diagonal POVM elements must be nonnegative")
    trace_p, trace_q = p.sum(), q.sum()
    if trace_p <= 0 or trace_q <= 0:
        raise UndefinedFidelityError("fidelity is undefined for a zero-trace element")
    overlap = np.sum(np.sqrt(p * q))
    return float(overlap ** 2 / (trace_p * trace_q))


def _check_hermitian(matrix: np.ndarray, name: str) -> np.ndarray:
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ConfigError(f"{name} must be a square matrix, got shape {matrix.shape}")
    if np.max(np.abs(matrix - matrix.conj().T), initial=0.0) > HERMITIAN_TOLERANCE:
        raise DomainError(f"{name} is not Hermitian")
    return 0.5 * (matrix + matrix.conj().T)


def _check_psd(matrix: np.ndarray, name: str):
    smallest = eigvalsh(matrix).min(initial=0.0)
    if smallest < -PSD_TOLERANCE:
        raise DomainError(f"{name} is not positive semidefinite (eigenvalue {smallest})")


def psd_sqrt(matrix: np.ndarray) -> np.ndarray:
    """
    Square root of a Hermitian PSD matrix via its eigendecomposition. Eigenvalues above
    -PSD_TOLERANCE are treated as rounding noise and clamped to zero.
    """
    matrix = _check_hermitian(matrix, "matrix")
    values, vectors = eigh(matrix)
    if values.min(initial=0.0) < -PSD_TOLERANCE:
        raise DomainError(f"matrix is not positive semidefinite (eigenvalue {values.min()})")
    values = np.clip(values, 0.0, None)
    return (vectors * np.sqrt(values)) @ vectors.conj().T


def matrix_fidelity_oracle(a, b) -> float:
    """
    Fidelity Tr^2[sqrt(sqrt(A) B sqrt(A))] / (Tr A Tr B) of two PSD operators, evaluated with
    matrix square roots. Exact for general (non-commuting) POVM elements.
    """
    a = _check_hermitian(a, "A")
    b = _check_hermitian(b, "B")
    if a.shape != b.shape:
        raise ConfigError(f"fidelity arguments differ in shape: {a.shape} vs {b.shape}")
    root_a = psd_sqrt(a)
    _check_psd(b, "B")
    trace_a, trace_b = np.trace(a).real, np.trace(b).real
    if trace_a <= 0 or trace_b <= 0:
        raise UndefinedFidelityError("fidelity is undefined for a zero-trace element")
    inner = root_a @ b @ root_a
    values = np.clip(eigvalsh(0.5 * (inner + inner.conj().T)), 0.0, None)
    return float(np.sum(np.sqrt(values)) ** 2 / (trace_a * trace_b))


def _average(per_element: Sequence[Optional[float]], undefined: List[int], warnings: List[str]):
    defined = [f for f in per_element if f is not None]
    if not defined:
        raise UndefinedFidelityError("no POVM element has a defined fidelity")
    if undefined:
        message = f"fidelity undefined for elements {undefined}; averaging over {len(defined)}"
        LOG.warning(message)
        warnings.append(message)
    return FidelityReport(list(per_element), float(np.mean(defined)), undefined, warnings)


def average_fidelity(estimate: DiagonalPovm, truth: DiagonalPovm) -> FidelityReport:
    """
    Fidelity of every reconstructed element against the true one, and their mean.
    """
    if estimate.pi.shape != truth.pi.shape:
        raise ConfigError(f"POVM shapes differ: {estimate.pi.shape} vs {truth.pi.shape}")
    per_element, undefined = [], []
    for j in range(truth.num_outcomes):
        try:
            per_element.append(diagonal_fidelity(estimate.pi[:, j], truth.pi[:, j]))
        except UndefinedFidelityError:
            per_element.append(None)
            undefined.append(j)
    return _average(per_element, undefined, [])


def average_matrix_fidelity(estimates: Sequence[np.ndarray], truths: Sequence[np.ndarray]) -> FidelityReport:
    """average_fidelity for POVMs given as lists of full operators"""
    if len(estimates) != len(truths):
        raise ConfigError(f"POVMs have {len(estimates)} and {len(truths)} elements")
    per_element, undefined = [], []
    for j, (estimate, truth) in enumerate(zip(estimates, truths)):
        try:
            per_element.append(matrix_fidelity_oracle(estimate, truth))
        except UndefinedFidelityError:
            per_element.append(None)
            undefined.append(j)
    return _average(per_element, undefined, [])


def fidelity_statistics(reports: Sequence[FidelityReport]) -> dict:
    """Mean and (population) standard deviation of the average fidelity over trials"""
    averages = np.array([r.average for r in reports], dtype=float)
    return {"fidelity_mean": float(averages.mean()),
            "fidelity_std": float(averages.std()),
            "fidelity_trials": [float(a) for a in averages]}
