import json
import subprocess
import sys

import pytest

from fracwalk.cli import main


def run(tmp_path, *argv):
    return main(list(argv))


def read(path):
    return path.read_text(encoding="utf-8")


class TestMix:
    def test_basic_csv(self, tmp_path):
        out = tmp_path / "mix.csv"
        code = main(["mix", "--p", "101", "--mu", "u01", "--eps", "0.25",
                     "--out", str(out)])
        assert code == 0
        text = read(out)
        lines = text.splitlines()
        assert lines[0].startswith("# fracwalk")
        assert any(l.startswith("# config:") for l in lines)
        header_idx = next(i for i, l in enumerate(lines) if not l.startswith("#"))
        assert lines[header_idx] == "n,tv,lower_bound,upper_bound"
        first = lines[header_idx + 1].split(",")
        assert first[0] == "0" and first[3] == ""  # no upper bound before step 2
        assert any("t_mix:" in l for l in lines)

    def test_json_summary(self, tmp_path):
        out = tmp_path / "mix.json"
        code = main(["mix", "--p", "101", "--mu", "u01", "--format", "json",
                     "--out", str(out)])
        assert code == 0
        doc = json.loads(read(out))
        assert doc["summary"]["sandwich_ok"] is True
        assert doc["summary"]["t_mix"] >= 1
        assert doc["provenance"]["config"]["p"] == "101"

    def test_rejects_composite(self, tmp_path):
        assert main(["mix", "--p", "4", "--mu", "u01"]) == 1

    def test_rejects_point_mass(self, tmp_path):
        assert main(["mix", "--p", "101", "--mu", "0:1"]) == 1


class TestSpectrum:
    def test_range_table(self, tmp_path):
        out = tmp_path / "spec.csv"
        code = main(["spectrum", "--p", "5..31", "--mu", "u01",
                     "--kernels", "Q,L0,L", "--out", str(out)])
        assert code == 0
        lines = [l for l in read(out).splitlines() if not l.startswith("#")]
        # header + 3 kernels per prime (5,7,11,13,17,19,23,29,31)
        assert len(lines) == 1 + 3 * 9

    def test_cayley_includes_group_order(self, tmp_path):
        out = tmp_path / "spec.json"
        code = main(["spectrum", "--p", "5", "--mu", "u01", "--kernels", "cayley",
                     "--format", "json", "--out", str(out)])
        assert code == 0
        doc = json.loads(read(out))
        row = doc["rows"][0]
        assert row["group_order"] == 120 == row["full_group_order"]

    def test_dump_kernel_schema(self, tmp_path):
        dump = tmp_path / "kern.json"
        code = main(["spectrum", "--p", "7", "--mu", "u01", "--kernels", "Q,L",
                     "--dump-kernel", str(dump), "--out", str(tmp_path / "s.csv")])
        assert code == 0
        doc = json.loads(read(dump))
        assert set(doc["kernels"]) == {"Q", "L"}
        assert doc["kernels"]["L"]["space"] == "P1"
        assert doc["kernels"]["Q"]["space"] == "Fp"
        assert len(doc["kernels"]["Q"]["rows"]) == 7

    def test_rejects_point_mass(self, tmp_path):
        assert main(["spectrum", "--p", "7", "--mu", "0:1"]) == 1

    def test_cayley_size_limits_reported_per_kernel(self, tmp_path):
        out = tmp_path / "spec.json"
        code = main(["spectrum", "--p", "17", "--mu", "u01",
                     "--kernels", "Q,cayley", "--format", "json",
                     "--out", str(out)])
        assert code == 0
        rows = {r["kernel"]: r for r in json.loads(read(out))["rows"]}
        assert "lambda2" in rows["Q"]
        assert "--mode iterative" in rows["cayley"]["error"]
        assert rows["cayley"]["n_states"] == 4896


class TestCompare:
    def test_single_prime_ok(self, tmp_path):
        out = tmp_path / "cmp.json"
        code = main(["compare", "--p", "101", "--mu", "u01", "--trials", "50",
                     "--format", "json", "--out", str(out)])
        assert code == 0
        doc = json.loads(read(out))
        rep = doc["reports"][0]
        assert rep["links_ok"] is True
        assert rep["C"] == pytest.approx(102 / 101)
        assert rep["u"] > 0

    def test_small_p_rejected(self, tmp_path):
        assert main(["compare", "--p", "3", "--mu", "u01"]) == 1

    def test_range_table(self, tmp_path):
        out = tmp_path / "cmp.csv"
        code = main(["compare", "--p", "7..31", "--mu", "u-101", "--trials", "20",
                     "--out", str(out)])
        assert code == 0
        lines = [l for l in read(out).splitlines() if not l.startswith("#")]
        assert len(lines) == 1 + 8  # primes 7..31


class TestHyperbola:
    def test_scan_summary(self, tmp_path):
        out = tmp_path / "hyp.json"
        code = main(["hyperbola", "--p", "101", "--m", "50", "--stride", "1",
                     "--format", "json", "--out", str(out)])
        assert code == 0
        doc = json.loads(read(out))
        assert doc["summary"]["max_ratio"] < 1.0
        assert doc["summary"]["exhaustive"] is True

    def test_single_count(self, tmp_path):
        out = tmp_path / "hyp1.json"
        code = main(["hyperbola", "--p", "13", "--m", "6", "--i", "1", "--j", "1",
                     "--format", "json", "--out", str(out)])
        assert code == 0
        assert json.loads(read(out))["count"] == 1

    def test_rejects_large_m(self, tmp_path):
        assert main(["hyperbola", "--p", "101", "--m", "51"]) == 1

    def test_scan_csv_rows(self, tmp_path):
        out = tmp_path / "hyp.csv"
        code = main(["hyperbola", "--p", "13", "--m", "4", "--out", str(out)])
        assert code == 0
        lines = [l for l in read(out).splitlines() if not l.startswith("#")]
        assert lines[0] == "p,m,i_start,j_start,count,ratio"
        assert len(lines) == 1 + 13 * 13

    def test_gap_delta(self, tmp_path):
        out = tmp_path / "hypg.json"
        code = main(["hyperbola", "--p", "61", "--m", "20", "--gap-delta",
                     "--format", "json", "--out", str(out)])
        assert code == 0
        doc = json.loads(read(out))["summary"]
        assert 0 < doc["admissible_delta"] < 1
        assert doc["gamma_prime"] == pytest.approx(doc["gamma"] / 2)


class TestGenerate:
    def test_p5_generates(self, tmp_path):
        out = tmp_path / "gen.json"
        code = main(["generate", "--p", "5", "--a1", "0", "--b", "1",
                     "--format", "json", "--out", str(out)])
        assert code == 0
        doc = json.loads(read(out))
        assert doc["closure_order"] == 120 == doc["full_group_order"]
        assert doc["generates"] is True

    def test_p7(self, tmp_path):
        out = tmp_path / "gen7.json"
        code = main(["generate", "--p", "7", "--a1", "1", "--b", "1",
                     "--format", "json", "--out", str(out)])
        assert code == 0
        assert json.loads(read(out))["closure_order"] == 336

    def test_rejects_vanishing_b(self, tmp_path):
        assert main(["generate", "--p", "5", "--a1", "0", "--b", "5"]) == 1


class TestDeterminism:
    def test_rerun_byte_identical(self, tmp_path):
        out = tmp_path / "a.csv"
        argv = ["spectrum", "--p", "5..23", "--mu", "u01",
                "--kernels", "Q,L0", "--seed", "7", "--out", str(out)]
        assert main(argv) == 0
        first = read(out)
        assert main(argv) == 0
        assert read(out) == first

    def test_threaded_rerun_byte_identical(self, tmp_path):
        out = tmp_path / "a.csv"
        argv = ["compare", "--p", "7..31", "--mu", "u01", "--trials", "20",
                "--threads", "3", "--out", str(out)]
        assert main(argv) == 0
        first = read(out)
        assert main(argv) == 0
        assert read(out) == first


class TestEntrypoint:
    def test_module_invocation(self, tmp_path):
        out = tmp_path / "gen.csv"
        proc = subprocess.run(
            [sys.executable, "-m", "fracwalk", "generate", "--p", "5",
             "--a1", "0", "--b", "1", "--out", str(out)],
            capture_output=True, text=True, timeout=300,
        )
        assert proc.returncode == 0, proc.stderr
        assert "closure_order" in read(out)

    def test_usage_error_exit_code(self):
        assert main(["mix"]) == 1  # missing required --p
        assert main(["nonsense"]) == 1
