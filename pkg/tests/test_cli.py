import csv
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from gaborquant.cli import ValidationError, parse_grid, parse_spec, run

SCAN = ["metric", "schwarzschild-scan", "--m", "1", "--probe", "shell:rc=4,sr=1", "-n", "30"]


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def invoke(tmp_path, *argv):
    return run([*argv, "--out", str(tmp_path)])


class TestParsing:
    def test_grid(self):
        assert np.allclose(parse_grid("-1:1:5").points, [-1, -0.5, 0, 0.5, 1])
        for bad in ("1:2", "a:b:3", "0:1:1"):
            with pytest.raises(ValidationError):
                parse_grid(bad)

    def test_spec(self):
        assert parse_spec("shell:rc=1,sr=2", {"shell": ("rc", "sr")}) == ("shell",
                                                                         {"rc": 1.0, "sr": 2.0})
        kind, v = parse_spec("shell:rc=1,sr=2", {"shell": ("rc", "sr", "st")}, {"st": 1.0})
        assert v["st"] == 1.0
        for bad in ("cube:rc=1", "shell:rc=1", "shell:rc=1,sr=x", "shell:rc=1,sr=2,zz=3",
                    "shell:rc"):
            with pytest.raises(ValidationError):
                parse_spec(bad, {"shell": ("rc", "sr")})


class TestCommands:
    def test_portrait_b2_check_column(self, tmp_path):
        assert invoke(tmp_path, "gabor", "portrait", "--symbol", "b2", "--sigma", "0.5",
                      "--grid", "-2:2:9") == 0
        header, rows = read_csv(tmp_path / "gabor-portrait.csv")
        assert header == ["b", "w", "re", "im", "check"]
        for b, w, re, im, check in rows:
            assert float(re) == pytest.approx(float(b) ** 2 + 0.25, abs=1e-8)
            assert float(check) == pytest.approx(float(re), abs=1e-12)

    def test_portrait_of_one(self, tmp_path):
        assert invoke(tmp_path, "gabor", "portrait", "--symbol", "one") == 0
        _, rows = read_csv(tmp_path / "gabor-portrait.csv")
        assert all(float(r[2]) == pytest.approx(1, abs=1e-12) for r in rows)

    def test_transform_then_reconstruct(self, tmp_path):
        assert invoke(tmp_path, "gabor", "transform", "--bgrid", "-8:8:65",
                      "--wgrid", "-8:8:65") == 0
        assert invoke(tmp_path, "gabor", "reconstruct", "--input",
                      str(tmp_path / "gabor-transform.csv"), "--tgrid", "-2:2:9") == 0
        header, rows = read_csv(tmp_path / "gabor-reconstruct.csv")
        t = np.array([float(r[0]) for r in rows])
        re = np.array([float(r[1]) for r in rows])
        assert np.allclose(re, np.pi ** -0.25 * np.exp(-t ** 2 / 2), atol=1e-3)

    def test_q0_of_constant_apodization(self, tmp_path):
        assert invoke(tmp_path, "wh", "q0", "--apod", "one", "--N", "6") == 0
        _, rows = read_csv(tmp_path / "wh-q0.csv")
        diag = {int(m): float(re) for m, n, re, im in rows if m == n}
        assert all(diag[n] == pytest.approx(2 * (-1) ** n, abs=1e-10) for n in range(6))

    def test_curvature_at(self, tmp_path):
        assert invoke(tmp_path, "curvature", "at", "--metric", "accelerated", "--param",
                      "alpha=1", "--regularize", "gauss:s0=0.5,s1=0.5,s2=0.5,s3=0.5",
                      "--point", "0,1,0,0") == 0
        _, rows = read_csv(tmp_path / "curvature-at.csv")
        T = {(int(r[0]), int(r[1])): float(r[4]) for r in rows}
        assert T[2, 2] == pytest.approx(-0.25 / 1.25 ** 2, rel=1e-8)

    def test_curvature_scan_flags_singular_points(self, tmp_path):
        assert invoke(tmp_path, "curvature", "scan", "--metric", "schwarzschild", "--param",
                      "m=1", "--grid", "1:4:4") == 0
        header, rows = read_csv(tmp_path / "curvature-scan.csv")
        assert [r[header.index("failed")] for r in rows] == ["0", "1", "0", "0"]

    def test_shifted_radius(self, tmp_path):
        assert invoke(tmp_path, "metric", "shifted-radius", "--m", "1", "--probe",
                      "shell:rc=0.8,sr=0.2", "--name", "inner") == 0
        assert invoke(tmp_path, "metric", "shifted-radius", "--m", "1", "--probe",
                      "shell:rc=4,sr=1", "--name", "outer") == 0
        _, inner = read_csv(tmp_path / "inner.csv")
        _, outer = read_csv(tmp_path / "outer.csv")
        assert 0 < float(inner[0][0]) < 2
        assert abs(float(inner[0][1])) <= 1e-8
        assert outer[0][0] == "none"


class TestScanDeterminism:
    def test_normalization_column(self, tmp_path):
        assert invoke(tmp_path, *SCAN) == 0
        header, rows = read_csv(tmp_path / "metric-schwarzschild-scan.csv")
        assert header == ["r", "U", "V", "L", "normalization", "flagged"]
        assert len(rows) == 30
        assert all(float(r[4]) == pytest.approx(1, abs=1e-10) for r in rows)

    def test_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert run([*SCAN, "--out", str(a)]) == 0
        assert run([*SCAN, "--out", str(b)]) == 0
        name = "metric-schwarzschild-scan.csv"
        assert (a / name).read_bytes() == (b / name).read_bytes()
        assert b"\r\n" in (a / name).read_bytes()

    def test_manifest(self, tmp_path):
        assert invoke(tmp_path, *SCAN) == 0
        man = json.loads((tmp_path / "metric-schwarzschild-scan.manifest.json").read_text())
        assert man["schema"] == 1
        assert man["command"] == "metric schwarzschild-scan"
        assert man["outputs"] == ["metric-schwarzschild-scan.csv"]
        assert man["inputs"]["probe"] == "shell:rc=4,sr=1"
        assert {"package", "numpy", "scipy", "python"} <= set(man["versions"])
        assert man["tolerances"]["quadrature"] == 1e-10

    def test_tolerance_from_environment(self, tmp_path, monkeypatch):
        monkeypatch.setenv("GM_TOL", "1e-8")
        assert invoke(tmp_path, *SCAN) == 0
        man = json.loads((tmp_path / "metric-schwarzschild-scan.manifest.json").read_text())
        assert man["tolerances"]["quadrature"] == 1e-8


class TestExitCodes:
    @pytest.mark.parametrize("argv", [
        ["metric", "schwarzschild-scan", "--m", "1", "--probe", "cube:a=1"],
        ["metric", "schwarzschild-scan", "--m", "-1", "--probe", "shell:rc=4,sr=1"],
        ["metric", "build", "--metric", "nope"],
        ["metric", "regularize", "--metric", "minkowski-cylindrical"],
        ["metric", "regularize", "--metric", "schwarzschild", "--param", "m=1",
         "--regularize", "gauss:s0=1,s1=1,s2=1,s3=1"],
        ["gabor", "portrait", "--symbol", "b9"],
        ["wh", "q0", "--apod", "gauss:sigma=1"],
        ["curvature", "at", "--metric", "schwarzschild", "--param", "m=1", "--point", "0,1"],
    ])
    def test_invalid_input_is_2(self, tmp_path, argv, capsys):
        assert invoke(tmp_path, *argv) == 2
        assert not list(tmp_path.iterdir())

    def test_bad_environment_tolerance(self, tmp_path, monkeypatch):
        monkeypatch.setenv("GM_TOL", "2")
        assert invoke(tmp_path, *SCAN) == 2

    def test_numerical_failure_is_1(self, tmp_path, capsys):
        code = invoke(tmp_path, "curvature", "at", "--metric", "schwarzschild", "--param", "m=1",
                      "--point", "0,2,1,0")
        assert code == 1
        assert "numerical failure" in capsys.readouterr().err
        assert not list(tmp_path.iterdir())

    def test_unwritable_output_is_2(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        assert run([*SCAN, "--out", str(blocker)]) == 2
        assert not [p for p in tmp_path.iterdir() if p.name.endswith(".part")]

    def test_module_entry_point(self, tmp_path):
        proc = subprocess.run([sys.executable, "-m", "gaborquant", *SCAN, "--out", str(tmp_path)],
                              capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        assert os.path.exists(tmp_path / "metric-schwarzschild-scan.csv")
