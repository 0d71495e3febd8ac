import math
import tempfile
import unittest
from pathlib import Path
from unittest.mock import patch

from mondcli import mcp_server, runner
from mondcli.errors import ConfigError
from mondcli.store import CheckRecord


class SolveToolTests(unittest.TestCase):
    def test_solve_without_files(self):
        result = mcp_server.mond_solve(overrides={"ansatz.k": "1", "solve.tail_decades": "3"})
        self.assertTrue(result["ok"])
        self.assertEqual([], result["warnings"])
        data = result["data"]
        self.assertEqual("compact", data["classification"])
        self.assertAlmostEqual(1.0, data["tully_fisher_ratio"], delta=1e-3)
        self.assertIn("generated_at", result)

    def test_solve_writes_files_from_config(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            conf = Path(tmpdir) / "run.conf"
            conf.write_text("ansatz.k = 1\nsolve.tail_decades = 0\n", encoding="utf-8")
            out = Path(tmpdir) / "out"
            result = mcp_server.mond_solve(config_path=str(conf), output_dir=str(out), write_files=True)
            self.assertTrue((out / "profile.csv").exists())
            self.assertTrue((out / "summary.json").exists())
            self.assertIn(str(out), result["message"])

    def test_invalid_overrides_raise(self):
        with self.assertRaises(ConfigError):
            mcp_server.mond_solve(overrides={"ansatz.k": "-3"})
        with self.assertRaises(ConfigError):
            mcp_server.mond_solve(config_path="/nonexistent/run.conf")


class ZetaToolTests(unittest.TestCase):
    def test_values_and_diagnostics(self):
        result = mcp_server.mond_zeta([2.0, 0.0], kind="simple", alpha=1.0)
        data = result["data"]
        self.assertAlmostEqual(1.0 + math.sqrt(3.0), data["values"][0]["zeta"], places=12)
        self.assertIsNone(data["values"][1]["zeta_prime"])
        self.assertLess(data["round_trip_error"], 1e-10)
        self.assertEqual("closed-form", data["inversion"])


class ValidateToolTests(unittest.TestCase):
    def test_reports_failures_as_warnings(self):
        records = [CheckRecord("good", 0.0, 1.0, True), CheckRecord("bad", math.nan, 1.0, False)]
        with patch.object(runner, "validation_suite", return_value=records) as suite:
            result = mcp_server.mond_validate(skip_solves=True)
        self.assertFalse(suite.call_args.kwargs["include_solves"])
        data = result["data"]
        self.assertFalse(data["passed"])
        self.assertEqual(["bad"], data["failed"])
        self.assertIsNone(data["checks"][1]["value"])
        self.assertEqual(1, len(result["warnings"]))


if __name__ == "__main__":
    unittest.main()
