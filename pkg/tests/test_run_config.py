import unittest

from kgtx.services.errors import ConfigError
from kgtx.services.run_config import parse_config

MINIMAL = """\
c = 1
a1 = 1
a2 = 5
"""


class TestParseConfig(unittest.TestCase):
    def test_minimal_config_fills_auto_values(self):
        config = parse_config(MINIMAL)
        self.assertEqual(config.h, 1.0 / 512)
        self.assertAlmostEqual(config.dt, 0.5 / 512)
        self.assertAlmostEqual(config.L, 1.5 + 0.4 + 1.0 + 10.0 / 512)
        self.assertAlmostEqual(config.delta, 2.0 / 512)
        self.assertEqual(config.snapshots, (0.0, 0.25, 0.5, 0.75, 1.0))
        self.assertEqual(config.mode, 'leapfrog')
        self.assertEqual(config.params.k, 2.0)
        self.assertGreaterEqual(config.grid.extent, config.L)

    def test_fraction_and_comments(self):
        config = parse_config(MINIMAL + "h = 1/256  # coarse\n\n# blank lines are fine\n")
        self.assertEqual(config.h, 1.0 / 256)

    def test_no_step_rejected_with_line(self):
        with self.assertRaises(ConfigError) as ctx:
            parse_config("c = 1\na1 = 2\na2 = 2\n")
        self.assertEqual(ctx.exception.line, 3)
        self.assertIn("a2 must exceed a1", str(ctx.exception))

    def test_quadrature_must_reach_past_cutoff(self):
        # cutoff sqrt(5 - 1)/1 = 2
        with self.assertRaises(ConfigError) as ctx:
            parse_config(MINIMAL + "omega_max = 2\n")
        self.assertEqual(ctx.exception.line, 4)
        self.assertIn("cutoff", str(ctx.exception))
        self.assertEqual(parse_config(MINIMAL + "omega_max = 2.5\n").omega_max, 2.5)

    def test_spectral_mode_rejects_nonlinearity(self):
        with self.assertRaisesRegex(ConfigError, "spectral-linear"):
            parse_config(MINIMAL + "mode = spectral-linear\nnonlinearity = cubic\n")

    def test_unknown_and_duplicate_keys(self):
        with self.assertRaises(ConfigError) as ctx:
            parse_config(MINIMAL + "speed = 2\n")
        self.assertEqual(ctx.exception.line, 4)
        with self.assertRaisesRegex(ConfigError, "duplicate"):
            parse_config(MINIMAL + "c = 2\n")

    def test_missing_required_key(self):
        with self.assertRaisesRegex(ConfigError, "missing required key 'a2'"):
            parse_config("c = 1\na1 = 1\n")

    def test_type_errors(self):
        with self.assertRaisesRegex(ConfigError, "line 4: h: expected a number"):
            parse_config(MINIMAL + "h = fine\n")
        with self.assertRaises(ConfigError):
            parse_config(MINIMAL + "mode = implicit\n")
        with self.assertRaises(ConfigError):
            parse_config(MINIMAL + "c\n")

    def test_explicit_values_checked(self):
        with self.assertRaisesRegex(ConfigError, "Courant"):
            parse_config(MINIMAL + "h = 1/64\ndt = 1/64\n")
        with self.assertRaisesRegex(ConfigError, "L must be at least"):
            parse_config(MINIMAL + "L = 2\n")
        with self.assertRaisesRegex(ConfigError, "x0 > width"):
            parse_config(MINIMAL + "x0 = 0.3\n")
        with self.assertRaisesRegex(ConfigError, "snapshot"):
            parse_config(MINIMAL + "snapshots = 0, 2\n")

    def test_overrides_win(self):
        config = parse_config(MINIMAL + "lam = 1\n", overrides={'lam': '0.25', 'seed': 9})
        self.assertEqual(config.lam, 0.25)
        self.assertEqual(config.seed, 9)
        with self.assertRaises(ConfigError):
            parse_config(MINIMAL, overrides={'speed': '1'})

    def test_snapshots_sorted(self):
        config = parse_config(MINIMAL + "snapshots = 1, 0, 0.5\n")
        self.assertEqual(config.snapshots, (0.0, 0.5, 1.0))

    def test_echo_is_plain(self):
        echo = parse_config(MINIMAL).echo()
        self.assertNotIn('source', echo)
        self.assertIsInstance(echo['snapshots'], list)
        self.assertEqual(echo['nonlinearity'], 'none')


if __name__ == '__main__':
    unittest.main()
