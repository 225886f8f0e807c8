import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from rsfde.cli import EXIT_CAP, EXIT_OK, EXIT_SOLVER, EXIT_USAGE, main, render


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.mark.parametrize("mode", ["solve", "penalty-scan", "convergence-table", "spectrum"])
def test_each_mode_runs(tmp_path, mode):
    out = tmp_path / "out.csv"
    status = main(["--mode", mode, "--n", "6", "--n", "8", "--out", str(out)])
    assert status == EXIT_OK
    rows = _rows(out)
    assert [r["n"] for r in rows] == ["6", "8"]
    assert all(r["status"] == "ok" for r in rows)


def test_spectrum_columns_in_expected_range(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["--mode", "spectrum", "--n", "8", "--eta", "1e-3", "--out", str(out)]) == EXIT_OK
    row = _rows(out)[0]
    assert 0.5 < float(row["pm_min"]) <= float(row["pm_max"]) < 1.5
    assert 0.5 < float(row["ta_min"]) <= float(row["ta_max"]) < 1.5


def test_empty_sweep_is_usage_error(tmp_path, capsys):
    out = tmp_path / "none.csv"
    assert main(["--mode", "solve", "--out", str(out)]) == EXIT_USAGE
    assert not out.exists()
    assert "usage error" in capsys.readouterr().err


@pytest.mark.parametrize(
    "argv",
    [
        ["--n", "8", "--mode", "bogus"],
        ["--n", "8", "--alpha1", "2.5"],
        ["--n", "8", "--eta", "0"],
        ["--n", "8", "--m-rule", "weekly"],
        ["--n", "0"],
        ["--n", "8", "--rtol", "2"],
    ],
)
def test_bad_arguments(argv):
    assert main(argv) == EXIT_USAGE


def test_spectrum_above_cap(tmp_path):
    out = tmp_path / "big.csv"
    assert main(["--mode", "spectrum", "--n", "128", "--out", str(out)]) == EXIT_CAP
    assert not out.exists()
    assert main(["--mode", "spectrum", "--n", "8", "--dense-cap", "32", "--out", str(out)]) == EXIT_CAP


def test_solver_failure_flags_row(tmp_path):
    out = tmp_path / "fail.csv"
    argv = ["--n", "8", "--no-precond", "--restart", "2", "--maxiter", "2", "--rtol", "1e-12", "--out", str(out)]
    assert main(argv) == EXIT_SOLVER
    rows = _rows(out)
    assert rows[-1]["status"] == "failed"


def test_config_file_and_override(tmp_path):
    ini = tmp_path / "exp.ini"
    ini.write_text(
        "[experiment]\nmode = penalty-scan\nn = 6, 8\neta = 1e-3, 1e-4\nalpha1 = 1.5\nno-precond = false\nT = 0.5\n"
    )
    out = tmp_path / "o.csv"
    assert main(["--config", str(ini), "--eta", "1e-2", "--out", str(out)]) == EXIT_OK
    rows = _rows(out)
    assert [(r["n"], float(r["eta"])) for r in rows] == [("6", 1e-2), ("8", 1e-2)]
    assert all(float(r["alpha1"]) == 1.5 and float(r["T"]) == 0.5 for r in rows)


def test_json_output(tmp_path):
    out = tmp_path / "o.json"
    assert main(["--n", "6", "--format", "json", "--out", str(out)]) == EXIT_OK
    data = json.loads(out.read_text())
    assert data["rows"][0]["n"] == 6 and data["rows"][0]["error"] > 0


def test_dump_dense(tmp_path):
    dump = tmp_path / "m.npz"
    assert main(["--mode", "spectrum", "--n", "5", "--dump-dense", str(dump), "--out", str(tmp_path / "x.csv")]) == 0
    with np.load(dump) as z:
        assert z["M"].shape == (25, 25) and z["P"].shape == (25, 25)
        np.testing.assert_allclose(z["M"], z["M"].T, atol=1e-13)
        assert z["inside"].dtype == bool


def test_deterministic_and_full_precision(tmp_path):
    outs = []
    for k in range(2):
        path = tmp_path / f"r{k}.csv"
        assert main(["--n", "8", "--eta", "1e-4", "--out", str(path)]) == EXIT_OK
        outs.append(_rows(path))
    for a, b in zip(*outs):
        for key in a:
            if not key.startswith("time"):
                assert a[key] == b[key]
    assert float(outs[0][0]["error"]) == float(repr(float(outs[0][0]["error"])))
    assert len(outs[0][0]["error"].replace(".", "").lstrip("0").split("e")[0]) >= 15


def test_render_union_of_columns():
    text = render([{"a": 1.0}, {"a": 2.0, "b": True}], "csv")
    assert list(csv.reader(io.StringIO(text))) == [["a", "b"], ["1", ""], ["2", "true"]]


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "rsfde", "--n", "4"], capture_output=True, text=True)
    assert res.returncode == 0
    assert res.stdout.splitlines()[0].startswith("mode,")
