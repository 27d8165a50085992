import csv
import json

import numpy as np
import pytest

from qparrondo import cli, quantum
from qparrondo.engine import add_to_register


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def run(argv):
    try:
        return cli.main(argv)
    except SystemExit as exc:
        return exc.code


class TestQuantum:
    def test_identity_gates_zero(self, tmp_path):
        code = run(["quantum", "--strategy", "a", "--iterations", "10", "--theta-a", "0",
                    "--alpha-a", "0", "--out", str(tmp_path)])
        assert code == 0
        rows = read_csv(tmp_path / "series.csv")
        assert rows[0] == ["step", "expected_gain"]
        assert [r[0] for r in rows[1:]] == [str(k) for k in range(1, 11)]
        assert all(float(r[1]) == 0.0 for r in rows[1:])

    def test_overflow_exit_code(self, tmp_path, capsys):
        code = run(["quantum", "--strategy", "ABBAB", "--iterations", "400", "--capital-qubits", "5",
                    "--out", str(tmp_path)])
        assert code == cli.EXIT_SIZING
        assert "minimum capital qubits: 11" in capsys.readouterr().err

    @pytest.mark.parametrize("argv", [
        ["quantum", "--strategy", "ABX"],
        ["quantum", "--strategy", ""],
        ["quantum", "--strategy", "AB", "--b-mapping", "other"],
        ["quantum", "--strategy", "AB", "--iterations", "0"],
        ["quantum"],
    ])
    def test_usage_errors(self, argv, tmp_path):
        assert run(argv + ["--out", str(tmp_path)]) == cli.EXIT_USAGE

    def test_bad_offset_is_usage_error(self, tmp_path):
        code = run(["quantum", "--strategy", "AB", "--capital-qubits", "4", "--offset", "9",
                    "--out", str(tmp_path)])
        assert code == cli.EXIT_USAGE

    def test_number_format(self, tmp_path):
        run(["quantum", "--strategy", "ABBAB", "--iterations", "4", "--out", str(tmp_path)])
        text = (tmp_path / "series.csv").read_bytes()
        assert b"\r" not in text
        for row in read_csv(tmp_path / "series.csv")[1:]:
            value = row[1]
            digits = value.lstrip("-").split("e")[0].replace(".", "").lstrip("0")
            assert len(digits) <= 12
        series = quantum.run_strategy(quantum.QuantumGameConfig(), "ABBAB", 4)
        got = [float(r[1]) for r in read_csv(tmp_path / "series.csv")[1:]]
        np.testing.assert_allclose(got, series.gains, rtol=1e-11, atol=1e-12)

    def test_json_format_embeds_manifest(self, tmp_path):
        run(["quantum", "--strategy", "AB", "--iterations", "3", "--format", "json", "--out", str(tmp_path)])
        doc = json.loads((tmp_path / "series.json").read_text())
        assert doc["columns"] == ["step", "expected_gain"]
        assert len(doc["rows"]) == 6
        for key in ("tool_version", "subcommand", "params", "seed", "created_at"):
            assert key in doc["manifest"]
        assert doc["manifest"]["params"]["theta_a"] == pytest.approx(2 * (np.pi / 2 + 0.01))

    def test_manifest_rerun_identical(self, tmp_path):
        first, second = tmp_path / "a", tmp_path / "b"
        run(["quantum", "--strategy", "BAB", "--iterations", "7", "--offset", "2", "--gain-formula",
             "sigmaz", "--out", str(first)])
        run(["quantum", "--strategy", "A", "--manifest", str(first / "manifest.json"), "--out", str(second)])
        for name in ("series.csv", "manifest.json", "metadata.json"):
            assert (first / name).read_bytes() == (second / name).read_bytes()

    def test_strategy_required_without_manifest(self, tmp_path):
        assert run(["quantum", "--iterations", "2", "--out", str(tmp_path)]) == cli.EXIT_USAGE

    def test_manifest_subcommand_mismatch(self, tmp_path):
        run(["quantum", "--strategy", "A", "--iterations", "2", "--out", str(tmp_path / "q")])
        code = run(["classical", "--strategy", "A", "--manifest", str(tmp_path / "q" / "manifest.json"),
                    "--out", str(tmp_path / "c")])
        assert code == cli.EXIT_USAGE


class TestClassical:
    def test_drift(self, tmp_path):
        assert run(["classical", "--strategy", "A", "--steps", "100", "--out", str(tmp_path)]) == 0
        rows = read_csv(tmp_path / "series.csv")
        assert len(rows) == 101
        assert float(rows[-1][1]) == pytest.approx(-1.0, abs=1e-12)

    def test_monte_carlo_reproducible(self, tmp_path):
        argv = ["classical", "--strategy", "A", "--steps", "100", "--mc-trials", "100000", "--seed", "42"]
        run(argv + ["--out", str(tmp_path / "1")])
        run(argv + ["--out", str(tmp_path / "2")])
        a = (tmp_path / "1" / "monte_carlo.csv").read_bytes()
        assert a == (tmp_path / "2" / "monte_carlo.csv").read_bytes()
        last = read_csv(tmp_path / "1" / "monte_carlo.csv")[-1]
        assert abs(float(last[1]) + 1.0) <= 3 * float(last[2])


class TestSearchAndSweep:
    def test_search_two_rows(self, tmp_path):
        code = run(["search", "--length", "1", "--iterations", "1", "--offsets", "0", "--b-mappings", "paper",
                    "--gain-formulas", "integer", "--theta-a", "0", "--alpha-a", "0", "--theta-b1", "0",
                    "--alpha-b1", "0", "--theta-b2", "0", "--alpha-b2", "0", "--out", str(tmp_path)])
        assert code == 0
        rows = read_csv(tmp_path / "report.csv")
        assert len(rows) == 3
        assert [r[0] for r in rows[1:]] == ["A", "B"]
        assert all(float(r[rows[0].index("final_gain")]) == 0.0 for r in rows[1:])
        assert (tmp_path / "series" / "A_off0_paper_integer.csv").exists()

    def test_search_all_conventions(self, tmp_path):
        run(["search", "--length", "2", "--iterations", "2", "--out", str(tmp_path)])
        rows = read_csv(tmp_path / "report.csv")
        assert len(rows) - 1 == 4 * 2 * 4
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert len(summary["conventions"]) == 4

    def test_search_bad_convention(self, tmp_path):
        code = run(["search", "--length", "1", "--iterations", "1", "--b-mappings", "nope",
                    "--out", str(tmp_path)])
        assert code == cli.EXIT_USAGE

    def test_sweep(self, tmp_path):
        code = run(["sweep", "--strategy", "BBABA", "--offsets", "0,3", "--iterations", "8",
                    "--gain-formula", "sigmaz", "--out", str(tmp_path)])
        assert code == 0
        assert (tmp_path / "series_off0.csv").exists() and (tmp_path / "series_off3.csv").exists()
        summary = json.loads((tmp_path / "summary.json").read_text())
        finals = summary["final_gains"]
        assert summary["sign_flip"] == (np.sign(finals["0"]) != np.sign(finals["3"]))


class TestValidate:
    def test_passes(self, capsys):
        assert run(["validate"]) == 0
        out = capsys.readouterr().out
        assert "FAIL" not in out and "CID permutation" in out

    def test_oracle_cap(self):
        assert run(["validate", "--max-qubits", "11"]) == cli.EXIT_USAGE

    def test_injected_cid_bug(self, monkeypatch, capsys):
        real = quantum.cid

        def off_by_one(state, layout):
            real(state, layout)
            return add_to_register(state, layout.capital, +1)

        monkeypatch.setattr(quantum, "cid", off_by_one)
        assert run(["validate"]) == cli.EXIT_VALIDATION
        out = capsys.readouterr().out
        assert "FAIL  CID permutation" in out
        assert "failed: CID permutation" in out
