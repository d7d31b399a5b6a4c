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

import json
import os
import numpy as np

from os.path import exists, isfile, join
from typing import Dict, List
from ovos_utils.log import LOG

from neon_qdt.version import __version__

MATRIX_FORMAT = "%.17g"
MANIFEST_NAME = "manifest.json"


def write_matrix_csv(path: str, matrix) -> str:
    """
    Headerless, row-major CSV with 17 significant digits (round-trips doubles exactly).
    One dimensional input is written as a single column.
    """
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim == 1:
        matrix = matrix[:, None]
    np.savetxt(path, matrix, delimiter=",", fmt=MATRIX_FORMAT)
    return path


def read_matrix_csv(path: str) -> np.ndarray:
    """Read a matrix written by write_matrix_csv; always returns a 2D array"""
    if not isfile(path):
        raise FileNotFoundError(f"{path} Not found!")
    return np.loadtxt(path, delimiter=",", ndmin=2)


def write_complex_csv(stem: str, matrix) -> List[str]:
    """Write real and imaginary parts as `<stem>_real.csv` and `<stem>_imag.csv`"""
    matrix = np.asarray(matrix, dtype=complex)
    return [write_matrix_csv(f"{stem}_real.csv", matrix.real),
            write_matrix_csv(f"{stem}_imag.csv", matrix.imag)]


def read_complex_csv(stem: str) -> np.ndarray:
    return read_matrix_csv(f"{stem}_real.csv") + 1j * read_matrix_csv(f"{stem}_imag.csv")


def write_json(path: str, data: dict) -> str:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def read_json(path: str) -> dict:
    if not isfile(path):
        raise FileNotFoundError(f"{path} Not found!")
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


class RunArtifacts:
    """
    Collects the files written by one command under `out_dir`. Used as a context manager,
    files written before an exception are removed again.
    """

    def __init__(self, out_dir: str, command: str):
        self.out_dir = out_dir
        self.command = command
        self.paths: Dict[str, str] = {}

    def __enter__(self):
        os.makedirs(self.out_dir, exist_ok=True)
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        if exc_type is not None:
            self.cleanup()
        return False

    def cleanup(self):
        for name, path in self.paths.items():
            try:
                if exists(path):
                    os.remove(path)
            except OSError as e:
                LOG.error(f"could not remove partial artifact {path}: {e}")
        self.paths = {}

    def path(self, filename: str) -> str:
        return join(self.out_dir, filename)

    def matrix(self, name: str, matrix) -> str:
        filename = f"{name}.csv"
        self.paths[filename] = write_matrix_csv(self.path(filename), matrix)
        return filename

    def complex_matrix(self, name: str, matrix) -> List[str]:
        written = write_complex_csv(self.path(name), matrix)
        filenames = [f"{name}_real.csv", f"{name}_imag.csv"]
        self.paths.update(dict(zip(filenames, written)))
        return filenames

    def json(self, name: str, data: dict) -> str:
        filename = f"{name}.json"
        self.paths[filename] = write_json(self.path(filename), data)
        return filename

    def register(self, filename: str) -> str:
        """Track a file written by other means"""
        self.paths[filename] = self.path(filename)
        return filename

    def manifest(self, config: dict, solver: str, **fields) -> dict:
        """
        Write manifest.json. Artifact paths are relative to out_dir; wall-clock data belongs in a
        separate artifact so that the manifest of a deterministic run is reproducible byte for byte.
        """
        manifest = {"tool": "neon_qdt",
                    "version": __version__,
                    "command": self.command,
                    "solver": solver,
                    "config": config,
                    "artifacts": sorted(self.paths)}
        manifest.update(fields)
        self.paths[MANIFEST_NAME] = write_json(self.path(MANIFEST_NAME), manifest)
        LOG.info(f"Wrote {len(self.paths)} artifacts to {self.out_dir}")
        return manifest
