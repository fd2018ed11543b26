"""Command-line interface: outputs, formats and exit codes."""

import csv
import io
import json
import math
import subprocess
import sys

import pytest

from byzmac.channel import constant_channel, example_channel, load_channel, load_povm, save_channel
from byzmac.cli import main


@pytest.fixture
def fixtures(tmp_path, capsys):
    assert main(["fixtures", "--out", str(tmp_path)]) == 0
    capsys.readouterr()
    return tmp_path


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestDemo:
    def test_table(self, capsys):
        code, out, _ = run(capsys, "demo-example")
        assert code == 0
        row = next(line for line in out.splitlines() if line.startswith("2c"))
        assert "2->1" in row and "0.500000" in row and row.endswith("yes")

    def test_json_same_values(self, capsys):
        code, out, _ = run(capsys, "demo-example", "--format", "json")
        data = json.loads(out)
        assert code == 0 and data["passed"]
        row = next(r for r in data["rows"] if r["case"] == "2c")
        assert row["errors"]["1"] == pytest.approx(0.5, abs=1e-12)

    def test_deterministic(self, capsys):
        first = run(capsys, "demo-example", "--seed", "7")
        second = run(capsys, "demo-example", "--seed", "7")
        assert first == second


class TestEntropic:
    def test_holevo_example(self, capsys, fixtures):
        code, out, _ = run(capsys, "holevo", "--channel", str(fixtures / "example.json"), "--slot", "1",
                           "--dist", "0.5,0.5", "--freeze", "2=point:2")
        assert code == 0
        assert float(out.split()[0]) == pytest.approx(1.0, abs=1e-9)

    def test_pure_state_conditional_entropy(self, capsys):
        code, out, _ = run(capsys, "entropy", "--channel", "example", "--slot", "2",
                           "--dist", "0.2,0.3,0.5", "--freeze", "1=point:0", "--format", "json")
        assert code == 0
        assert json.loads(out)["conditional_entropy"] == pytest.approx(0.0, abs=1e-12)

    def test_mixed_freeze(self, capsys):
        code, out, _ = run(capsys, "entropy", "--channel", "example", "--slot", "2",
                           "--freeze", "1=dist:0.5,0.5", "--format", "json")
        assert json.loads(out)["conditional_entropy"] == pytest.approx(1.0, abs=1e-12)

    def test_malformed_distribution(self, capsys):
        code, _, err = run(capsys, "holevo", "--channel", "example", "--slot", "1",
                           "--dist", "0.5,0.4", "--freeze", "2=point:2")
        assert code == 2 and "distribution not normalized" in err

    def test_unfrozen_sender(self, capsys):
        code, _, err = run(capsys, "holevo", "--channel", "example", "--slot", "1")
        assert code == 2 and "--freeze" in err

    def test_bad_symbol(self, capsys):
        code, _, err = run(capsys, "holevo", "--channel", "example", "--slot", "1", "--freeze", "2=point:9")
        assert code == 2 and "not in alphabet" in err

    def test_missing_file(self, capsys, tmp_path):
        code, _, err = run(capsys, "holevo", "--channel", str(tmp_path / "nope.json"), "--slot", "1")
        assert code == 2

    def test_malformed_file(self, capsys, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"k": 1}')
        code, _, err = run(capsys, "holevo", "--channel", str(path), "--slot", "1")
        assert code == 2 and "missing field" in err

    def test_usage_error_exit_code(self):
        with pytest.raises(SystemExit) as exc:
            main(["holevo"])
        assert exc.value.code == 2


class TestRegion:
    def test_example_order_12(self, capsys, fixtures):
        code, out, _ = run(capsys, "region", "--channel", str(fixtures / "example.json"), "--order", "1,2",
                           "--stage1", f"povm:{fixtures / 'd1.json'}")
        assert code == 0
        assert "R1 <= 1.000" in out and "R2 <= 1.585" in out

    def test_json_bounds(self, capsys):
        code, out, _ = run(capsys, "region", "--channel", "example", "--order", "1,2",
                           "--stage1", "example:d1", "--format", "json")
        data = json.loads(out)
        assert data["bounds"]["1"] == pytest.approx(1.0, abs=1e-3)
        assert data["bounds"]["2"] == pytest.approx(math.log2(3), abs=1e-3)

    def test_order_21_penalty(self, capsys):
        code, out, _ = run(capsys, "region", "--channel", "example", "--order", "2,1",
                           "--stage1", "example:d2", "--format", "json")
        data = json.loads(out)
        assert data["bounds"]["1"] < 1.0 - 1e-3
        assert data["candidates"]["1"][0]["post_stages"] == [2]

    def test_factorized_three_senders(self, capsys):
        code, out, _ = run(capsys, "region", "--channel", "factorized:2,2,2", "--k", "3",
                           "--default-stage", "local", "--format", "json", "--grid", "4", "--rounds", "5")
        data = json.loads(out)
        assert code == 0
        assert all(v == pytest.approx(1.0, abs=1e-3) for v in data["bounds"].values())

    def test_k_mismatch(self, capsys):
        code, _, err = run(capsys, "region", "--channel", "example", "--k", "3")
        assert code == 2

    def test_bad_order(self, capsys):
        code, _, err = run(capsys, "region", "--channel", "example", "--order", "1,1")
        assert code == 2 and "permutation" in err


class TestSymcheck:
    def test_example_honest1(self, capsys):
        code, out, _ = run(capsys, "symcheck", "--channel", "example", "--honest", "1")
        assert code == 0 and "NotSymmetrizable" in out

    def test_example_honest2_orthogonal(self, capsys):
        code, out, _ = run(capsys, "symcheck", "--channel", "example", "--honest", "2", "--format", "json")
        data = json.loads(out)
        assert data["orthogonal"] == "certified_not"

    def test_constant_channel_prints_tau(self, capsys, tmp_path):
        save_channel(constant_channel([2, 2]), tmp_path / "const.json")
        code, out, _ = run(capsys, "symcheck", "--channel", str(tmp_path / "const.json"))
        assert code == 0 and "Symmetrizable" in out and "tau(.|0)" in out


class TestSimulate:
    def test_case_2c_interval(self, capsys):
        code, out, _ = run(capsys, "simulate", "--order", "2,1", "--adversary", "2:fixed:2",
                           "--trials", "20000", "--format", "csv")
        rows = list(csv.DictReader(io.StringIO(out)))
        assert code == 0 and len(rows) == 1
        assert float(rows[0]["err_exact"]) == pytest.approx(0.5)
        assert abs(float(rows[0]["err_mc"]) - 0.5) <= 3 * math.sqrt(0.25 / 20000)

    def test_all_honest_zero(self, capsys):
        code, out, _ = run(capsys, "simulate", "--order", "1,2", "--trials", "2000", "--format", "json")
        rows = json.loads(out)
        assert all(float(r["err_mc"]) == 0.0 and float(r["err_exact"]) == 0.0 for r in rows)

    def test_same_seed_same_csv(self, capsys):
        args = ["simulate", "--order", "2,1", "--adversary", "2:worst", "--trials", "3000", "--seed", "11",
                "--format", "csv"]
        assert run(capsys, *args)[1] == run(capsys, *args)[1]

    def test_pgm_codes_with_transcripts(self, capsys, tmp_path):
        out_file = tmp_path / "t.jsonl"
        code, out, _ = run(capsys, "simulate", "--channel", "example", "--decoder", "pgm", "--n", "2",
                           "--adversary", "1:fixed:0,1", "--trials", "200", "--transcripts", str(out_file))
        assert code == 0
        lines = out_file.read_text().splitlines()
        assert len(lines) == 200 and json.loads(lines[0])["adversary_slot"] == 1

    def test_bad_adversary(self, capsys):
        code, _, err = run(capsys, "simulate", "--adversary", "2:sneaky")
        assert code == 2


class TestFixturesAndModule:
    def test_fixture_files_load(self, fixtures):
        assert load_channel(fixtures / "example.json").allclose(example_channel())
        assert load_povm(fixtures / "d1.json").labels == (0, 1)

    def test_python_dash_m(self):
        proc = subprocess.run([sys.executable, "-m", "byzmac", "demo-example", "--format", "json"],
                              capture_output=True, text=True, timeout=120)
        assert proc.returncode == 0 and json.loads(proc.stdout)["passed"]
