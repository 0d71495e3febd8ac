import json
import tempfile
import unittest
from pathlib import Path

import numpy as np

from mondcli import config
from mondcli.errors import ConfigError


class ParseConfigTests(unittest.TestCase):
    def test_comments_export_and_quotes(self):
        text = """
# 注释
export interp.kind = "standard"
ansatz.k = '1.5'

solve.y0=2
"""
        values, problems = config.parse_config_text(text)
        self.assertEqual([], problems)
        self.assertEqual({"interp.kind": "standard", "ansatz.k": "1.5", "solve.y0": "2"}, values)

    def test_unknown_and_malformed_lines(self):
        values, problems = config.parse_config_text("solve.bogus = 1\njust words\n= 3\n")
        self.assertEqual({}, values)
        self.assertEqual(3, len(problems))
        self.assertIn("solve.bogus", problems[0])

    def test_missing_file(self):
        values, problems = config.load_config_file(Path("/nonexistent/mond.conf"))
        self.assertEqual({}, values)
        self.assertEqual(1, len(problems))


class ValidateRunConfigTests(unittest.TestCase):
    def setUp(self):
        self.tmpdir = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmpdir.cleanup)
        self.root = Path(self.tmpdir.name)

    def test_defaults_with_required_k(self):
        cfg = config.validate_run_config({"ansatz.k": "1"})
        self.assertEqual("simple", cfg.interp_kind)
        self.assertEqual(1.0, cfg.alpha)
        self.assertEqual(1.0, cfg.k)
        self.assertEqual(1e8, cfg.r_max)
        self.assertEqual(6.0, cfg.tail_decades)
        self.assertEqual("auto", cfg.cutoff_convention)
        self.assertEqual("1", cfg.to_dict()["ansatz.k"])
        self.assertEqual("polytrope", cfg.to_dict()["ansatz.kind"])

    def test_missing_k_names_the_key(self):
        with self.assertRaises(ConfigError) as ctx:
            config.validate_run_config({})
        self.assertTrue(any("ansatz.k" in p for p in ctx.exception.problems))
        self.assertEqual(2, ctx.exception.code)

    def test_all_problems_are_collected(self):
        values = {
            "ansatz.k": "1",
            "interp.alpha": "1.5",
            "solve.y0": "-1",
            "output.profile_format": "hdf5",
        }
        with self.assertRaises(ConfigError) as ctx:
            config.validate_run_config(values)
        problems = "\n".join(ctx.exception.problems)
        self.assertIn("interp.alpha", problems)
        self.assertIn("solve.y0", problems)
        self.assertIn("output.profile_format", problems)

    def test_non_numeric_values(self):
        with self.assertRaises(ConfigError) as ctx:
            config.validate_run_config({"ansatz.k": "one", "sweep.workers": "2.5"})
        self.assertEqual(2, len(ctx.exception.problems))

    def test_e0_at_infinity_rejected_in_genuine_mond(self):
        with self.assertRaises(ConfigError):
            config.validate_run_config({"ansatz.k": "1", "ansatz.cutoff_convention": "E0-at-infinity"})
        with self.assertRaises(ConfigError):
            config.validate_run_config({
                "ansatz.kind": "maxwellian",
                "interp.alpha": "0.5",
                "ansatz.cutoff_convention": "E0-at-infinity",
            })
        cfg = config.validate_run_config({
            "ansatz.k": "1", "interp.alpha": "0.5", "ansatz.cutoff_convention": "E0-at-infinity",
        })
        self.assertEqual("E0-at-infinity", cfg.cutoff_convention)

    def test_maxwellian_y0_cap(self):
        with self.assertRaises(ConfigError):
            config.validate_run_config({"ansatz.kind": "maxwellian", "solve.y0": "800"})

    def test_fluid_needs_index(self):
        with self.assertRaises(ConfigError) as ctx:
            config.validate_run_config({"ansatz.kind": "fluid"})
        self.assertTrue(any("ansatz.eos_n" in p for p in ctx.exception.problems))
        cfg = config.validate_run_config({"ansatz.kind": "fluid", "ansatz.eos_n": "3"})
        self.assertEqual(3.0, cfg.eos_n)

    def test_table_paths_resolve_next_to_config_file(self):
        tau = np.geomspace(1e-6, 1e6, 61)
        np.savetxt(self.root / "mu.txt", np.column_stack([tau, tau / (1.0 + tau)]))
        conf = self.root / "run.conf"
        conf.write_text("interp.kind = table\ninterp.table_path = mu.txt\nansatz.k = 1\n", encoding="utf-8")
        cfg = config.load_run_config(conf)
        self.assertEqual(self.root / "mu.txt", cfg.table_path)
        self.assertEqual("table", cfg.build_interp().kind)

    def test_bad_table_is_reported_at_load(self):
        tau = np.geomspace(1e-6, 1e6, 61)
        np.savetxt(self.root / "mu.txt", np.column_stack([tau, tau / (1.0 + tau)]))
        conf = self.root / "run.conf"
        conf.write_text("interp.kind = table\ninterp.alpha = 0.5\ninterp.table_path = mu.txt\nansatz.k = 1\n",
                        encoding="utf-8")
        with self.assertRaises(ConfigError) as ctx:
            config.load_run_config(conf)
        self.assertIn("20%", str(ctx.exception))

    def test_model_builders(self):
        cfg = config.validate_run_config({"ansatz.k": "0.5", "interp.kind": "newtonian"})
        self.assertEqual(0.0, cfg.alpha)
        self.assertEqual("polytrope(k=0.5, l=0)", cfg.build_ansatz().label)
        self.assertEqual(0.0, cfg.build_zeta().alpha)
        self.assertEqual(1e-10, cfg.solve_config().rel_tol)

    def test_effective_workers(self):
        cfg = config.validate_run_config({"ansatz.k": "1", "sweep.workers": "3"})
        self.assertEqual(3, cfg.effective_workers)
        cfg = config.validate_run_config({"ansatz.k": "1"})
        self.assertGreaterEqual(cfg.effective_workers, 1)


class SweepSpecTests(unittest.TestCase):
    def test_cartesian_product(self):
        spec = config.parse_sweep_spec({"matrix": {"alpha": [0.5, 1.0], "k": [0, 1, 2]}})
        self.assertEqual(6, spec.run_count)
        runs = spec.expand()
        self.assertEqual(6, len(runs))
        self.assertEqual({"interp.alpha": "0.5", "ansatz.k": "0"}, runs[0])
        self.assertEqual({"interp.alpha": "1.0", "ansatz.k": "2"}, runs[-1])

    def test_empty_axes_give_single_run(self):
        spec = config.parse_sweep_spec({})
        self.assertEqual(1, spec.run_count)
        self.assertEqual([{}], spec.expand())

    def test_cap_is_enforced(self):
        spec = config.parse_sweep_spec({"matrix": {"y0": list(range(1, 11))}, "max_runs": 5})
        with self.assertRaises(ConfigError):
            spec.expand()

    def test_invalid_axes(self):
        with self.assertRaises(ConfigError) as ctx:
            config.parse_sweep_spec({"matrix": {"r_max": [1, 2], "k": []}, "extra": 1})
        self.assertEqual(3, len(ctx.exception.problems))

    def test_load_from_file(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            path = Path(tmpdir) / "axes.json"
            path.write_text(json.dumps({"matrix": {"interp.kind": ["newtonian", "standard"]}}), encoding="utf-8")
            spec = config.load_sweep_spec(path, default_max_runs=7)
            self.assertEqual(7, spec.max_runs)
            self.assertEqual([("interp.kind", ["newtonian", "standard"])], spec.axes)
            (Path(tmpdir) / "broken.json").write_text("{", encoding="utf-8")
            with self.assertRaises(ConfigError):
                config.load_sweep_spec(Path(tmpdir) / "broken.json")


if __name__ == "__main__":
    unittest.main()
