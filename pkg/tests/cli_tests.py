# NEON AI (TM) SOFTWARE, Software Development Kit & Application Development System
#
# Copyright 2008-2021 Neongecko.com Inc. | All Rights Reserved
#
# Notice of License - Duplicating this Notice of License near the start of any file containing
# a derivative of this software is a condition of license for this software.
# Friendly Licensing:
# No charge, open source royalty free use of the Neon AI software source and object is offered for
# educational users, noncommercial enthusiasts, Public Benefit Corporations (and LLCs) and
# Social Purpose Corporations (and LLCs). Developers can contact developers@neon.ai
# For commercial licensing, distribution of derivative works or redistribution please contact licenses@neon.ai
# Distributed on an "AS IS” basis without warranties or conditions of any kind, either express or implied.
# Trademarks of Neongecko: Neon AI(TM), Neon Assist (TM), Neon Communicator(TM), Klat(TM)
# Authors: Guy Daniels, Daniel McKnight, Regina Bloomstine, Elon Gasper, Richard Leeds
#
# Specialized conversational reconveyance options from Conversation Processing Intelligence Corp.
# US Patents 2008-2021: US7424516, US20140161250, US20140177813, US8638908, US8068604, US8553852, US10530923, US10530924
# China Patent: CN102017585  -  Europe Patent: EU2156652  -  Patents Pending

import json
import os
import sys
import mock
import unittest
import numpy as np

from tempfile import TemporaryDirectory

sys.path.append(os.path.dirname(os.path.dirname(os.path.realpath(__file__))))
from neon_qdt.__main__ import main
from neon_qdt.artifacts import read_complex_csv, read_json, read_matrix_csv, write_complex_csv, \
    write_matrix_csv
from neon_qdt.exceptions import NumericError

SMALL = ["--hilbert-dim", "12", "--outcomes", "4", "--probes", "40", "--epochs", "3", "--trials", "2"]


def read_bytes(path):
    with open(path, "rb") as f:
        return f.read()


class TestMatrixFiles(unittest.TestCase):
    def test_round_trip_is_exact(self):
        rng = np.random.default_rng(0)
        matrix = rng.normal(size=(5, 3)) * 10.0 ** rng.integers(-300, 300, (5, 3))
        with TemporaryDirectory() as tmp:
            path = write_matrix_csv(os.path.join(tmp, "m.csv"), matrix)
            np.testing.assert_array_equal(read_matrix_csv(path), matrix)
            column = write_matrix_csv(os.path.join(tmp, "c.csv"), np.array([0.1, 0.2]))
            self.assertEqual(read_matrix_csv(column).shape, (2, 1))
            complex_matrix = matrix[:2] + 1j * matrix[2:4]
            write_complex_csv(os.path.join(tmp, "z"), complex_matrix)
            np.testing.assert_array_equal(read_complex_csv(os.path.join(tmp, "z")), complex_matrix)

    def test_missing_file(self):
        with self.assertRaises(FileNotFoundError):
            read_matrix_csv("/nonexistent/matrix.csv")


class TestCommandLine(unittest.TestCase):
    def setUp(self):
        self.tmp = TemporaryDirectory()
        self.root = self.tmp.name

    def tearDown(self):
        self.tmp.cleanup()

    def path(self, *parts):
        return os.path.join(self.root, *parts)

    def simulate(self, name, *extra):
        return main(["simulate", "--out-dir", self.path(name)] + SMALL + list(extra))

    def fit(self, name, source, *extra):
        return main(["fit", "--out-dir", self.path(name), "--input-dir", self.path(source)] + SMALL + list(extra))

    def test_simulate_files(self):
        self.assertEqual(self.simulate("sim"), 0)
        manifest = read_json(self.path("sim", "manifest.json"))
        self.assertEqual(manifest["artifacts"], ["dataset.csv", "povm_truth.csv", "probes.csv"])
        for artifact in manifest["artifacts"]:
            self.assertTrue(os.path.isfile(self.path("sim", artifact)))
        self.assertEqual(manifest["command"], "simulate")
        self.assertEqual(manifest["solver"], "gd")
        self.assertNotIn("output", manifest["config"])
        self.assertEqual(read_matrix_csv(self.path("sim", "dataset.csv")).shape, (40, 4))
        self.assertEqual(read_matrix_csv(self.path("sim", "povm_truth.csv")).shape, (12, 4))
        self.assertEqual(read_matrix_csv(self.path("sim", "probes.csv")).shape, (40, 1))

    def test_probe_phase_recorded(self):
        self.assertEqual(self.simulate("sim"), 0)
        self.assertEqual(read_json(self.path("sim", "manifest.json"))["probe_phase"], 0.0)
        config_path = self.path("phase.json")
        with open(config_path, "w") as f:
            json.dump({"probes": {"phase": 0.25}}, f)
        self.assertEqual(self.simulate("shifted", "--config", config_path), 0)
        self.assertEqual(read_json(self.path("shifted", "manifest.json"))["probe_phase"], 0.25)

    def test_fit_gd(self):
        self.assertEqual(self.simulate("sim", "--seed", "3"), 0)
        self.assertEqual(self.fit("fit", "sim", "--seed", "3"), 0)
        manifest = read_json(self.path("fit", "manifest.json"))
        self.assertEqual(manifest["solver"], "gd")
        self.assertEqual(manifest["seeds"], [3, 4])
        self.assertEqual(manifest["solver_config"]["lambda"], 0.0)
        self.assertEqual(len(manifest["fidelity"]["reports"]), 2)
        self.assertIn("fidelity_std", manifest["fidelity"])
        self.assertEqual(manifest["timings"], "timings.json")
        for artifact in manifest["artifacts"]:
            self.assertTrue(os.path.isfile(self.path("fit", artifact)))
        self.assertEqual(read_matrix_csv(self.path("fit", "pi_hat.csv")).shape, (12, 4))
        self.assertEqual(read_matrix_csv(self.path("fit", "loss_history.csv")).shape, (3, 2))
        timings = read_json(self.path("fit", "timings.json"))
        self.assertEqual(len(timings["trials"]), 2)

    def test_fit_lossy_uses_default_lambda(self):
        self.assertEqual(self.simulate("sim", "--eta", "0.85"), 0)
        self.assertEqual(self.fit("fit", "sim", "--eta", "0.85"), 0)
        manifest = read_json(self.path("fit", "manifest.json"))
        self.assertEqual(manifest["solver_config"]["lambda"], 1e-5)

    def test_fit_baseline(self):
        self.assertEqual(self.simulate("sim"), 0)
        self.assertEqual(self.fit("fit", "sim", "--solver", "baseline", "--iterations", "10"), 0)
        manifest = read_json(self.path("fit", "manifest.json"))
        self.assertEqual(manifest["solver"], "baseline")
        self.assertEqual(manifest["seeds"], [None])
        self.assertIn("fidelity_mean", manifest["fidelity"])
        self.assertEqual(read_matrix_csv(self.path("fit", "loss_history.csv")).shape, (10, 1))

    def test_fit_stiefel(self):
        extra = ["--solver", "stiefel", "--hilbert-dim", "4", "--outcomes", "3", "--probes", "5",
                 "--phases", "3", "--tail-bound", "0.05", "--iterations", "20"]
        self.assertEqual(self.simulate("sim", *extra), 0)
        self.assertEqual(read_matrix_csv(self.path("sim", "probes.csv")).shape, (15, 2))
        self.assertEqual(self.fit("fit", "sim", *extra), 0)
        manifest = read_json(self.path("fit", "manifest.json"))
        self.assertEqual(manifest["block_ranks"], [1, 1, 2])
        self.assertLess(manifest["orthonormality_defect"], 1e-6)
        self.assertIn("fidelity_mean", manifest["fidelity"])
        w = read_complex_csv(self.path("fit", "stiefel_w"))
        np.testing.assert_allclose(w.conj().T @ w, np.eye(4), atol=1e-6)
        self.assertTrue(os.path.isfile(self.path("fit", "povm_element_2_imag.csv")))

    def test_stiefel_needs_phase_grid(self):
        self.assertEqual(self.simulate("sim"), 0)
        self.assertEqual(self.fit("fit", "sim", "--solver", "stiefel"), 1)

    def test_deterministic_outputs(self):
        for name in ("a", "b"):
            self.assertEqual(self.simulate(f"sim_{name}", "--sigma", "0.1", "--seed", "5"), 0)
            self.assertEqual(self.fit(f"fit_{name}", "sim_a", "--seed", "5"), 0)
        for filename in ("probes.csv", "povm_truth.csv", "dataset.csv", "manifest.json"):
            self.assertEqual(read_bytes(self.path("sim_a", filename)), read_bytes(self.path("sim_b", filename)))
        for filename in ("pi_hat.csv", "loss_history.csv", "manifest.json"):
            self.assertEqual(read_bytes(self.path("fit_a", filename)), read_bytes(self.path("fit_b", filename)))

    def test_manifest_reproduces_run(self):
        self.assertEqual(self.simulate("first", "--sigma", "0.05", "--shots", "500", "--seed", "2"), 0)
        manifest = read_json(self.path("first", "manifest.json"))
        config_path = self.path("config.json")
        with open(config_path, "w") as f:
            json.dump(manifest["config"], f)
        self.assertEqual(main(["simulate", "--config", config_path, "--out-dir", self.path("second")]), 0)
        for filename in manifest["artifacts"] + ["manifest.json"]:
            self.assertEqual(read_bytes(self.path("first", filename)), read_bytes(self.path("second", filename)))

    def test_fidelity_command(self):
        self.assertEqual(self.simulate("sim"), 0)
        self.assertEqual(self.fit("fit", "sim"), 0)
        self.assertEqual(main(["fidelity", "--estimate", self.path("fit", "pi_hat.csv"),
                               "--truth", self.path("sim", "povm_truth.csv"), "--out-dir", self.path("fid")]), 0)
        report = read_json(self.path("fid", "fidelity.json"))
        self.assertEqual(len(report["per_element"]), 4)
        self.assertTrue(0.0 < report["average"] <= 1.0 + 1e-12)
        self.assertEqual(main(["fidelity", "--out-dir", self.path("fid")]), 1)

    def test_benchmark_command(self):
        config_path = self.path("benchmark.json")
        with open(config_path, "w") as f:
            json.dump({"detector": {"hilbert_dim": 10, "outcomes": 3},
                       "gd": {"epochs": 2},
                       "baseline": {"iterations": 5},
                       "benchmark": {"trials": 1, "probe_counts": [20, 40]}}, f)
        self.assertEqual(main(["benchmark", "--config", config_path, "--kind", "data",
                               "--out-dir", self.path("bench")]), 0)
        manifest = read_json(self.path("bench", "manifest.json"))
        self.assertEqual(manifest["results"], "benchmark_data.csv")
        self.assertEqual(manifest["grid"], [20, 40])
        with open(self.path("bench", "benchmark_data.csv")) as f:
            self.assertEqual(len(f.readlines()), 5)

    def test_exit_codes(self):
        self.assertEqual(self.fit("fit", "missing"), 1)
        self.assertEqual(main(["simulate", "--out-dir", self.path("x"), "--unknown-flag"]), 1)
        self.assertEqual(main(["simulate", "--config", self.path("missing.json")]), 1)
        self.assertEqual(self.simulate("bad", "--hilbert-dim", "3"), 1)
        self.assertEqual(self.simulate("bad", "--eta", "1.5"), 2)
        self.assertEqual(self.simulate("sim"), 0)
        self.assertEqual(self.fit("fit", "sim", "--hilbert-dim", "14"), 1)

    def test_fit_checks_simulated_hilbert_dim(self):
        self.assertEqual(self.simulate("sim"), 0)
        os.remove(self.path("sim", "povm_truth.csv"))
        self.assertEqual(self.fit("fit", "sim", "--hilbert-dim", "14"), 1)
        self.assertFalse(os.path.isfile(self.path("fit", "pi_hat.csv")))
        self.assertEqual(self.fit("fit", "sim"), 0)
        self.assertNotIn("fidelity", read_json(self.path("fit", "manifest.json")))

    def test_partial_files_removed(self):
        with mock.patch("neon_qdt.artifacts.write_json", side_effect=NumericError("disk full")):
            self.assertEqual(self.simulate("partial"), 2)
        self.assertEqual(os.listdir(self.path("partial")), [])


if __name__ == '__main__':
    unittest.main()
