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

from tempfile import TemporaryDirectory

sys.path.append(os.path.dirname(os.path.dirname(os.path.realpath(__file__))))
from neon_qdt.exceptions import ConfigError
from neon_qdt.utils import DEFAULT_CONFIG, build_detector, get_config


class TestConfiguration(unittest.TestCase):
    def test_defaults(self):
        config = get_config()
        self.assertEqual(config, DEFAULT_CONFIG)
        self.assertIsNot(config["gd"], DEFAULT_CONFIG["gd"])
        config["gd"]["epochs"] = 1
        self.assertEqual(DEFAULT_CONFIG["gd"]["epochs"], 100)

    def test_file_then_overrides(self):
        with TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "config.json")
            with open(path, "w") as f:
                f.write('{\n'
                        '  // lossy detector\n'
                        '  "detector": {"type": "efficient", "eta": 0.7},\n'
                        '  "gd": {"epochs": 10}\n'
                        '}\n')
            config = get_config(path, {"gd": {"epochs": 20}})
        self.assertEqual(config["detector"]["type"], "efficient")
        self.assertEqual(config["detector"]["eta"], 0.7)
        self.assertEqual(config["detector"]["hilbert_dim"], 60)
        self.assertEqual(config["gd"]["epochs"], 20)
        self.assertEqual(config["gd"]["batch_size"], 25)

    def test_invalid_files(self):
        with TemporaryDirectory() as tmp:
            broken = os.path.join(tmp, "broken.json")
            with open(broken, "w") as f:
                f.write('{"gd": ')
            with self.assertRaises(ConfigError):
                get_config(broken)
            listing = os.path.join(tmp, "list.json")
            with open(listing, "w") as f:
                f.write('[1, 2]')
            with self.assertRaises(ConfigError):
                get_config(listing)
            with self.assertRaises(FileNotFoundError):
                get_config(os.path.join(tmp, "missing.json"))

    def test_detector_type(self):
        with self.assertRaises(ConfigError):
            get_config(overrides={"detector": {"type": "bolometer"}})

    def test_build_detector(self):
        ideal = build_detector(get_config(overrides={"detector": {"hilbert_dim": 8, "outcomes": 3}}))
        self.assertEqual(ideal.pi.shape, (8, 3))
        self.assertEqual(ideal.pi[7, 2], 1.0)
        lossy = build_detector(get_config(overrides={"detector": {"type": "efficient", "hilbert_dim": 8,
                                                                  "outcomes": 3, "eta": 0.5}}))
        self.assertAlmostEqual(lossy.pi[1, 0], 0.5)
        self.assertFalse(np.array_equal(ideal.pi, lossy.pi))


if __name__ == '__main__':
    unittest.main()
