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

from copy import deepcopy
from typing import Optional
from ovos_utils.log import LOG
from ovos_utils.json_helper import load_commented_json, merge_dict

from neon_qdt.detectors import DiagonalPovm, pnr_povm
from neon_qdt.exceptions import ConfigError

DEFAULT_CONFIG = {
    "detector": {
        "type": "ideal",
        "hilbert_dim": 60,
        "outcomes": 10,
        "eta": 0.85
    },
    "probes": {
        "count": 600,
        "tail_bound": 1e-5,
        "phase": 0.0,
        "phases": 4
    },
    "simulation": {
        "sigma": 0.0,
        "shots": None,
        "seed": 0
    },
    "solver": {
        "module": "gd",
        "trials": 1,
        "workers": 1
    },
    "gd": {
        "learning_rate": 1e-2,
        "lr_decay": 0.999,
        "beta1": 0.9,
        "beta2": 0.9,
        "epsilon": 1e-8,
        "epochs": 100,
        "batch_size": 25,
        "lambda": None,
        "seed": 0,
        "init_stddev": 1.0,
        "accumulation_steps": 1,
        "lr_decay_per": "epoch"
    },
    "baseline": {
        "step_size": "row",
        "iterations": 2000,
        "lambda": None,
        "momentum": True
    },
    "stiefel": {
        "block_ranks": None,
        "iterations": 1000,
        "learning_rate": 0.05,
        "lr_decay": 0.995,
        "restarts": 1,
        "seed": 0,
        "backtracking": True
    },
    "benchmark": {
        "kind": "noise",
        "trials": 5,
        "hilbert_dims": [50, 100, 200, 400],
        "sigmas": [0.0, 0.1, 0.2, 0.4],
        "probe_counts": [100, 200, 400, 600]
    },
    "output": {
        "out_dir": "qdt_run",
        "input_dir": None
    }
}

DETECTOR_TYPES = ("ideal", "efficient")


def get_config(config_file: Optional[str] = None, overrides: Optional[dict] = None) -> dict:
    """
    Build a run configuration: defaults, then the optional JSON file (comments allowed),
    then explicit overrides such as command line flags.
    :param config_file: path to a JSON configuration
    :param overrides: nested dict applied last
    :return: merged configuration
    """
    config = deepcopy(DEFAULT_CONFIG)
    if config_file:
        LOG.info(f"Loading configuration from {config_file}")
        try:
            user_config = load_commented_json(config_file)
        except ValueError as e:
            raise ConfigError(f"could not parse {config_file}: {e}")
        if not isinstance(user_config, dict):
            raise ConfigError(f"{config_file} must contain a JSON object")
        merge_dict(config, user_config)
    if overrides:
        merge_dict(config, overrides)
    detector_type = config["detector"].get("type")
    if detector_type not in DETECTOR_TYPES:
        raise ConfigError(f"detector type must be one of {DETECTOR_TYPES}, got {detector_type}")
    return config


def build_detector(config: dict) -> DiagonalPovm:
    """Ground truth POVM described by the `detector` section"""
    detector = config["detector"]
    eta = detector.get("eta") if detector.get("type") == "efficient" else None
    return pnr_povm(int(detector["hilbert_dim"]), int(detector["outcomes"]), eta)
