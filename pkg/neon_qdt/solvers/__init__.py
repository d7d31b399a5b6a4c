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

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, List, Optional
from ovos_utils.log import LOG
from pyee import EventEmitter

from neon_qdt.detectors import Dataset, DiagonalPovm
from neon_qdt.exceptions import ConfigError
from neon_qdt.fock import ProbeSet


@dataclass(eq=False)
class FitResult:
    """
    Outcome of one diagonal POVM reconstruction. Timing fields are informational only and are
    never part of reproducibility checks.
    """
    pi_hat: DiagonalPovm
    loss_history: List[float]
    wall_clock_seconds: float
    wall_clock_per_iteration: List[float]
    seed: Optional[int]
    config_echo: Any
    solver: str = "gd"
    initial_loss: Optional[float] = None

    @property
    def final_loss(self) -> Optional[float]:
        return self.loss_history[-1] if self.loss_history else self.initial_loss

    def timings(self) -> dict:
        return {"wall_clock_seconds": self.wall_clock_seconds,
                "wall_clock_per_iteration": list(self.wall_clock_per_iteration)}


def check_dimensions(dataset: Dataset, probes: ProbeSet):
    """Raise ConfigError unless the dataset has one row per probe"""
    if dataset.num_probes != probes.num_probes:
        raise ConfigError(f"dataset has {dataset.num_probes} rows but there are "
                          f"{probes.num_probes} probes")
    if dataset.probe_set_ref and dataset.probe_set_ref != probes.fingerprint:
        LOG.warning(f"dataset was simulated from probe set {dataset.probe_set_ref}, "
                    f"fitting with {probes.fingerprint}")


class Solver(EventEmitter, ABC):
    """
    Base class for POVM reconstruction solvers. Progress is published as events:
    `fit:start`, `fit:epoch` and `fit:end`, each with a dict payload.
    """
    name = "solver"
    label = "solver"

    def __init__(self, config=None):
        super(Solver, self).__init__()
        self.config = config

    @classmethod
    @abstractmethod
    def config_from(cls, config: dict):
        """Typed solver settings from the section of the run configuration named after the solver"""

    @abstractmethod
    def fit(self, dataset, probes=None):
        pass


class SolverFactory:
    CLASSES = {}

    @staticmethod
    def _load_classes():
        if not SolverFactory.CLASSES:
            from neon_qdt.solvers.gradient_descent import GradientDescentSolver
            from neon_qdt.solvers.projected_gradient import ProjectedGradientSolver
            from neon_qdt.solvers.stiefel import StiefelSolver
            SolverFactory.CLASSES.update({GradientDescentSolver.name: GradientDescentSolver,
                                          ProjectedGradientSolver.name: ProjectedGradientSolver,
                                          StiefelSolver.name: StiefelSolver})
        return SolverFactory.CLASSES

    @staticmethod
    def create(config: dict) -> Solver:
        """
        Build the solver selected by config["solver"]["module"], configured from the section of
        the same name.
        :param config: full run configuration
        :return: Solver instance
        """
        module = config.get("solver", {}).get("module", "gd")
        classes = SolverFactory._load_classes()
        if module not in classes:
            LOG.error(f"Unknown solver: {module}")
            raise ConfigError(f"unknown solver '{module}', expected one of {sorted(classes)}")
        clazz = classes[module]
        LOG.info(f"Loaded the {clazz.label} solver")
        return clazz(clazz.config_from(config))
