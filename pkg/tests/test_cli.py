import csv
import io
import json
import subprocess
import sys

import pytest

from xysurface.cli import RECORD_FIELDS, main, parse_grid
from xysurface.errors import UsageError


def _run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_parse_grid_inclusive():
    assert parse_grid("0.05:0.075:0.005") == [0.05, 0.055, 0.06, 0.065, 0.07, 0.075]
    assert parse_grid("0.38:0.54:0.02")[-1] == 0.54
    assert len(parse_grid("0.38:0.54:0.02")) == 9
    assert parse_grid("0.1,0.2") == [0.1, 0.2]
    assert parse_grid("0.3") == [0.3]


@pytest.mark.parametrize("text", ["0.1:0.2", "0.2:0.1:0.01", "0.1:0.2:0", "a,b"])
def test_parse_grid_rejects(text):
    with pytest.raises(UsageError):
        parse_grid(text)


def test_hashing_bound(capsys):
    code, out, _ = _run(capsys, "hashing-bound", "--eta", "0.5,inf")
    assert code == 0
    rows = [json.loads(line) for line in out.splitlines()]
    assert abs(rows[0]["p"] - 0.1893) < 1e-4
    assert rows[1] == {"eta": "inf", "p": 0.5}


def test_run_zero_noise(capsys):
    code, out, _ = _run(capsys, "run", "--d", "4,6", "--eta", "10", "--p", "0", "--q-equals-p",
                        "--trials", "20")
    assert code == 0
    rows = [json.loads(line) for line in out.splitlines()]
    assert len(rows) == 2
    for rec in rows:
        assert list(rec) == RECORD_FIELDS
        assert rec["fail_spatial"] == rec["fail_temporal"] == rec["fail_either"] == 0


def test_run_output_independent_of_workers(capsys, tmp_path):
    args = ["run", "--d", "4", "--eta", "inf", "--p", "0.1,0.2", "--trials", "30", "--seed", "3"]
    outputs = []
    for workers in ("1", "2"):
        path = tmp_path / f"out{workers}.jsonl"
        assert main(args + ["--workers", workers, "--output", str(path)]) == 0
        outputs.append(path.read_bytes())
    assert outputs[0] == outputs[1]


def test_run_csv(capsys):
    code, out, _ = _run(capsys, "run", "--d", "5", "--boundary", "open", "--eta", "100", "--p", "0.05",
                        "--q", "0.05", "--rounds", "3", "--trials", "10", "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 1
    assert rows[0]["T"] == "3" and rows[0]["boundary"] == "open" and rows[0]["eta"] == "100.0"


@pytest.mark.parametrize("argv", [
    ["run", "--d", "5", "--p", "0.1"],  # torus needs even d
    ["run", "--d", "4", "--p", "1.5"],
    ["run", "--d", "4", "--p", "0.1", "--eta", "-1"],
    ["run", "--d", "4", "--p", "0.1", "--trials", "0"],
    ["run", "--d", "4", "--p", "0.1", "--rounds", "3"],  # q = 0 means one round
    ["run", "--d", "4", "--p", "0.1", "--q", "0.1", "--q-equals-p"],
    ["run", "--p", "0.1"],
    ["bogus"],
])
def test_bad_flags_exit_2(capsys, argv):
    code, out, err = _run(capsys, *argv)
    assert code == 2
    assert out == ""
    assert "usage" in err


def test_threshold_without_crossing_exits_4(capsys):
    code, _, err = _run(capsys, "threshold", "--d", "4,6,8", "--eta", "inf", "--p", "0.0,0.001",
                        "--trials", "5")
    assert code == 4
    assert "fit failed" in err


def test_decode_one(capsys, tmp_path):
    dump = tmp_path / "defects.txt"
    dump.write_text("# single Z on face (1, 1)\n0 1 1\n0 1 2\n0 2 1\n0 2 2\n")
    code, out, _ = _run(capsys, "decode-one", "--d", "4", "--eta", "inf", "--p", "0.1",
                        "--input", str(dump))
    assert code == 0
    faces = [line for line in out.splitlines() if line.startswith("face")]
    assert faces == ["face 1 1 Z"]
    assert any(line.startswith("# cluster 0 neutral") for line in out.splitlines())


def test_decode_one_time_slices(capsys, tmp_path):
    dump = tmp_path / "defects.txt"
    dump.write_text("1 2 2\n2 2 2\n")
    code, out, _ = _run(capsys, "decode-one", "--d", "4", "--eta", "10", "--p", "0.05", "--q-equals-p",
                        "--input", str(dump))
    assert code == 0
    assert out.splitlines()[0] == "flip 2 2 1"


def test_decode_one_bad_dump(capsys, tmp_path):
    dump = tmp_path / "defects.txt"
    dump.write_text("0 0 9\n")
    code, _, _ = _run(capsys, "decode-one", "--d", "4", "--p", "0.1", "--input", str(dump))
    assert code == 2


def test_decode_one_missing_file(capsys, tmp_path):
    code, _, _ = _run(capsys, "decode-one", "--d", "4", "--p", "0.1", "--input", str(tmp_path / "nope"))
    assert code == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "xysurface", "hashing-bound", "--eta", "inf"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout) == {"eta": "inf", "p": 0.5}
