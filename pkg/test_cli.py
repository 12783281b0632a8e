"""
Tests for Gram parsing, report rendering and the command-line runner.
"""

import io
import json
import tempfile
import unittest
from contextlib import redirect_stderr, redirect_stdout
from fractions import Fraction
from pathlib import Path

from cli import parse_gram, run
from errors import GramParseError, InvalidInputError
from exact_core import SymGram
from report import Report, emit, jsonable


class TestParseGram(unittest.TestCase):

    def test_text_format(self):
        """Rank on the first line, rows below."""
        self.assertEqual(parse_gram("2\n2 1\n1 2\n"), SymGram(((2, 1), (1, 2))))

    def test_structured_format(self):
        self.assertEqual(parse_gram({"n": 1, "gram": [[5]]}), SymGram.diagonal([5]))
        self.assertEqual(parse_gram('{"n": 2, "gram": [[1, 0], [0, 3]]}'), SymGram.diagonal([1, 3]))

    def test_asymmetric_text(self):
        with self.assertRaises(GramParseError) as ctx:
            parse_gram("2\n2 1\n0 2\n")
        self.assertEqual(ctx.exception.line, 3)

    def test_asymmetric_structured(self):
        with self.assertRaises(GramParseError) as ctx:
            parse_gram({"n": 2, "gram": [[2, 1], [0, 2]]})
        self.assertEqual(ctx.exception.field, "gram[1][0]")

    def test_malformed_inputs(self):
        bad = [
            "",
            "2\n1 0\n",
            "2\n1 0 0\n0 1\n",
            "1\nx\n",
            "2\n1 1\n1 1\n",
            '{"n": 2}',
            '{"n": 1, "gram": [[1.5]]}',
            '{"n": 1, "gram": [[1]]',
        ]
        for text in bad:
            with self.assertRaises(GramParseError, msg=text):
                parse_gram(text)

    def test_non_integer_reports_line(self):
        with self.assertRaises(GramParseError) as ctx:
            parse_gram("1\nx\n")
        self.assertEqual(ctx.exception.line, 2)


class TestReport(unittest.TestCase):

    def test_jsonable(self):
        self.assertEqual(jsonable(Fraction(1, 3)), "1/3")
        self.assertEqual(jsonable(Fraction(4)), "4")
        self.assertEqual(jsonable(1j), {"re": 0.0, "im": 1.0})
        self.assertEqual(jsonable((1, [Fraction(1, 2)])), [1, ["1/2"]])

    def test_round_trip(self):
        report = Report(
            command="check-bound",
            inputs={"n": 1, "gram": [[5]]},
            results={"min_square": Fraction(1, 5)},
            verdicts={"bound_holds": True},
            provenance=["test"],
        )
        data = json.loads(emit(report, "json"))
        self.assertEqual(data, report.to_dict())
        self.assertEqual(Report.from_dict(data).to_dict(), report.to_dict())
        self.assertEqual(parse_gram(data["inputs"]), SymGram.diagonal([5]))

    def test_text_rendering(self):
        report = Report(command="obstruct", results={"verdict": "obstructed", "rows": [{"i": 0, "t": 1}]})
        text = emit(report, "text")
        self.assertIn("obstruct", text)
        self.assertIn("verdict", text)
        self.assertIn("rows", text)

    def test_unknown_format(self):
        with self.assertRaises(InvalidInputError):
            emit(Report(command="x"), "yaml")
        with self.assertRaises(InvalidInputError):
            Report.from_dict({"inputs": {}})


class TestRun(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def gram_file(self, text: str) -> str:
        path = Path(self.tmp.name) / f"gram{len(list(Path(self.tmp.name).iterdir()))}.txt"
        path.write_text(text)
        return str(path)

    def run_cli(self, *argv):
        out, err = io.StringIO(), io.StringIO()
        with redirect_stdout(out), redirect_stderr(err):
            code = run(list(argv))
        return code, out.getvalue(), err.getvalue()

    def run_json(self, *argv):
        code, out, err = self.run_cli(*argv, "--format", "json")
        self.assertEqual(code, 0, err)
        return json.loads(out)

    def test_min_char(self):
        data = self.run_json("min-char", "--gram", self.gram_file("2\n2 1\n1 2\n"))
        self.assertEqual(data["results"]["min_square"], "0")

    def test_check_bound(self):
        data = self.run_json("check-bound", "--gram", self.gram_file('{"n": 3, "gram": [[1,0,0],[0,1,0],[0,0,5]]}'))
        self.assertEqual(data["results"]["min_square"], "11/5")
        self.assertEqual(data["results"]["bound"], "11/5")
        self.assertTrue(data["results"]["extremal"])

    def test_congruence_and_linking(self):
        path = self.gram_file("1\n3\n")
        data = self.run_json("congruence", "--gram", path)
        self.assertEqual(data["results"]["mod8_residue"], "1/3")
        self.assertTrue(data["verdicts"]["mod8_holds"])
        data = self.run_json("linking", "--gram", self.gram_file("2\n2 1\n1 2\n"))
        self.assertEqual([b["kind"] for b in data["results"]["blocks"]], ["B"])

    def test_gauss(self):
        data = self.run_json("gauss", "--gram", self.gram_file("2\n2 1\n1 2\n"))
        self.assertTrue(data["verdicts"]["milgram_ok"])
        self.assertAlmostEqual(data["results"]["value"]["im"], 1.0, places=9)

    def test_gauss_cap_exceeded(self):
        code, _, err = self.run_cli("gauss", "--gram", self.gram_file("2\n2 1\n1 2\n"), "--cap", "2")
        self.assertEqual(code, 3)
        self.assertIn("cap", err)

    def test_glue_commands(self):
        data = self.run_json("glue4", "--gram", self.gram_file("1\n3\n"))
        results = data["results"]
        self.assertEqual((results["rank"], results["det"], results["index"]), (4, 1, 9))
        self.assertTrue(results["quaternionic"])
        data = self.run_json("glue2", "--gram", self.gram_file("1\n3\n"))
        self.assertFalse(data["verdicts"]["embeds"])
        self.assertEqual(data["results"]["certificate"], 3)

    def test_surgery_d(self):
        data = self.run_json("surgery-d", "--knot", "torus:2,3", "--n", "1")
        self.assertEqual(data["results"]["rows"][0]["d"], "-2")

    def test_obstruct(self):
        data = self.run_json("obstruct", "--knot", "torus:2,3", "--n", "4")
        results = data["results"]
        self.assertEqual(results["verdict"], "obstructed")
        for key in ("knot", "n", "bound", "max4d", "verdict", "witnesses"):
            self.assertIn(key, results)
        data = self.run_json("obstruct", "--knot", "torus:2,3", "--range", "1..6")
        self.assertEqual(data["verdicts"]["obstructed"], [1, 2, 3, 4])

    def test_torus_table(self):
        data = self.run_json("torus-table", "--pq", "2,5", "--nmax", "10")
        self.assertEqual(data["results"]["obstructed_range"], "1..7")
        self.assertTrue(data["verdicts"]["bounds_ordered"])

    def test_deterministic_output(self):
        argv = ("linking", "--gram", self.gram_file("2\n4 1\n1 6\n"), "--format", "json")
        self.assertEqual(self.run_cli(*argv)[:2], self.run_cli(*argv)[:2])

    def test_text_output(self):
        code, out, _ = self.run_cli("check-bound", "--gram", self.gram_file("1\n5\n"), "--format", "text")
        self.assertEqual(code, 0)
        self.assertIn("check-bound", out)
        self.assertIn("min_square", out)

    def test_invalid_input_exit_codes(self):
        self.assertEqual(self.run_cli("min-char", "--gram", self.gram_file("2\n2 1\n0 2\n"))[0], 2)
        self.assertEqual(self.run_cli("min-char", "--gram", str(Path(self.tmp.name) / "missing.txt"))[0], 2)
        self.assertEqual(self.run_cli("min-char")[0], 2)
        self.assertEqual(self.run_cli("min-char", "--gram", self.gram_file("2\n1 0\n0 -1\n"))[0], 2)
        self.assertEqual(self.run_cli("obstruct", "--knot", "torus:2,4", "--n", "3")[0], 2)
        self.assertEqual(self.run_cli("obstruct", "--knot", "torus:2,3", "--range", "5..1")[0], 2)

    def test_usage_errors(self):
        """Unknown commands and bad flags go through argparse and exit 2."""
        code, _, err = self.run_cli("frobnicate")
        self.assertEqual(code, 2)
        self.assertIn("usage", err)
        self.assertEqual(self.run_cli("min-char", "--format", "xml")[0], 2)


if __name__ == "__main__":
    unittest.main()
