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

import os
import sys
import unittest
import numpy as np

from scipy.stats import binom

sys.path.append(os.path.dirname(os.path.dirname(os.path.realpath(__file__))))
from neon_qdt.detectors import Dataset, DiagonalPovm, diagonal_povm_elements, efficient_pnr_povm, \
    ideal_pnr_povm, pnr_povm, simulate_dataset
from neon_qdt.exceptions import ConfigError, DomainError
from neon_qdt.fock import build_probe_grid


class TestDetectorModels(unittest.TestCase):
    def test_ideal_small(self):
        povm = ideal_pnr_povm(4, 3)
        expected = np.array([[1, 0, 0],
                             [0, 1, 0],
                             [0, 0, 1],
                             [0, 0, 1]], dtype=float)
        np.testing.assert_array_equal(povm.pi, expected)

    def test_ideal_square(self):
        np.testing.assert_array_equal(ideal_pnr_povm(5, 5).pi, np.eye(5))

    def test_invalid_outcomes(self):
        with self.assertRaises(ConfigError):
            ideal_pnr_povm(5, 1)
        with self.assertRaises(ConfigError):
            ideal_pnr_povm(5, 6)
        with self.assertRaises(ConfigError):
            efficient_pnr_povm(5, 6, 0.5)

    def test_efficient_half(self):
        povm = efficient_pnr_povm(3, 3, 0.5)
        np.testing.assert_allclose(povm.pi, [[1.0, 0.0, 0.0],
                                             [0.5, 0.5, 0.0],
                                             [0.25, 0.5, 0.25]], atol=1e-15)

    def test_efficient_matches_binomial(self):
        povm = efficient_pnr_povm(60, 10, 0.85)
        for k in (0, 3, 20, 59):
            np.testing.assert_allclose(povm.pi[k, :9], binom.pmf(np.arange(9), k, 0.85),
                                       rtol=1e-10, atol=1e-300)
        np.testing.assert_allclose(povm.pi.sum(axis=1), 1.0, atol=1e-12)

    def test_unit_efficiency_is_ideal(self):
        np.testing.assert_allclose(efficient_pnr_povm(12, 5, 1.0).pi, ideal_pnr_povm(12, 5).pi, atol=1e-12)

    def test_zero_efficiency_never_clicks(self):
        povm = efficient_pnr_povm(8, 4, 0.0)
        np.testing.assert_allclose(povm.pi[:, 0], 1.0)
        np.testing.assert_allclose(povm.pi[:, 1:], 0.0, atol=1e-12)

    def test_efficiency_continuity(self):
        delta = np.max(np.abs(efficient_pnr_povm(60, 10, 0.85 + 1e-7).pi - efficient_pnr_povm(60, 10, 0.85).pi))
        self.assertLess(delta, 1e-5)

    def test_efficiency_domain(self):
        with self.assertRaises(DomainError):
            efficient_pnr_povm(10, 3, 1.5)
        with self.assertRaises(DomainError):
            efficient_pnr_povm(10, 3, -0.1)

    def test_pnr_povm_dispatch(self):
        np.testing.assert_array_equal(pnr_povm(6, 3).pi, ideal_pnr_povm(6, 3).pi)
        np.testing.assert_array_equal(pnr_povm(6, 3, 0.7).pi, efficient_pnr_povm(6, 3, 0.7).pi)

    def test_povm_validation(self):
        with self.assertRaises(DomainError):
            DiagonalPovm(np.array([[1.5, -0.5], [0.0, 1.0]]))
        with self.assertRaises(DomainError):
            DiagonalPovm(np.array([[0.5, 0.4], [0.0, 1.0]]))
        with self.assertRaises(ConfigError):
            DiagonalPovm(np.array([1.0, 0.0]))

    def test_lifted_elements(self):
        povm = efficient_pnr_povm(5, 3, 0.6)
        elements = diagonal_povm_elements(povm)
        self.assertEqual(len(elements), 3)
        np.testing.assert_allclose(sum(elements), np.eye(5), atol=1e-12)
        np.testing.assert_array_equal(np.diag(elements[1]), povm.pi[:, 1])


class TestSimulation(unittest.TestCase):
    povm = ideal_pnr_povm(30, 6)
    probes = build_probe_grid(50, 30)

    def test_noiseless_is_forward_model(self):
        dataset = simulate_dataset(self.povm, self.probes)
        np.testing.assert_array_equal(dataset.probs,
                                      np.clip(self.probes.probe_matrix @ self.povm.pi, 0.0, 1.0))
        self.assertEqual(dataset.probe_set_ref, self.probes.fingerprint)
        self.assertEqual(dataset.noise_sigma, 0.0)
        self.assertIsNone(dataset.shots)

    def test_vacuum_probe_always_reads_zero(self):
        dataset = simulate_dataset(self.povm, self.probes)
        np.testing.assert_allclose(dataset.probs[0], [1, 0, 0, 0, 0, 0], atol=1e-15)

    def test_seeded_noise_is_deterministic(self):
        first = simulate_dataset(self.povm, self.probes, sigma=0.1, seed=3)
        second = simulate_dataset(self.povm, self.probes, sigma=0.1, seed=3)
        other = simulate_dataset(self.povm, self.probes, sigma=0.1, seed=4)
        np.testing.assert_array_equal(first.probs, second.probs)
        self.assertFalse(np.array_equal(first.probs, other.probs))

    def test_noise_changes_data(self):
        clean = simulate_dataset(self.povm, self.probes)
        noisy = simulate_dataset(self.povm, self.probes, sigma=0.2, seed=0)
        self.assertGreater(np.max(np.abs(clean.probs - noisy.probs)), 0.0)
        self.assertTrue(np.all(noisy.probs >= 0) and np.all(noisy.probs <= 1))

    def test_shots(self):
        dataset = simulate_dataset(self.povm, self.probes, seed=1, shots=1000)
        np.testing.assert_allclose(dataset.probs.sum(axis=1), 1.0)
        np.testing.assert_allclose(dataset.probs * 1000, np.round(dataset.probs * 1000), atol=1e-9)

    def test_invalid_arguments(self):
        with self.assertRaises(DomainError):
            simulate_dataset(self.povm, self.probes, sigma=-0.1)
        with self.assertRaises(ConfigError):
            simulate_dataset(ideal_pnr_povm(20, 6), self.probes)
        with self.assertRaises(ConfigError):
            simulate_dataset(self.povm, self.probes, shots=0)

    def test_dataset_validation(self):
        with self.assertRaises(DomainError):
            Dataset(np.array([[0.5, 1.5]]), "ref")
        with self.assertRaises(ConfigError):
            Dataset(np.array([0.5, 0.5]), "ref")


if __name__ == '__main__':
    unittest.main()
