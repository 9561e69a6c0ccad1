import json
import math

import pytest

from gasketlab import gasket, geom
from gasketlab.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_count_csv_matches_library(capsys, tmp_path):
    out_file = tmp_path / "counts.csv"
    code = main(["--out", str(out_file), "gasket", "count", "--lambda-max", "100", "--grid", "9"])
    assert code == 0
    lines = out_file.read_text().splitlines()
    assert lines[0] == "lambda,count"
    lam, count = lines[-1].split(",")
    t = geom.triple_from_curvatures(1.0, 1.0, 1.0)
    assert int(count) == gasket.count_inscribed(t, float(lam))


def test_cli_deterministic_output(capsys):
    argv = ["gasket", "count", "--lambda-max", "50", "--grid", "9"]
    code1, out1, _ = run_cli(capsys, *argv)
    code2, out2, _ = run_cli(capsys, *argv)
    assert code1 == code2 == 0
    assert out1 == out2


def test_gasket_dim_json(capsys):
    code, out, _ = run_cli(capsys, "gasket", "dim", "--lambda-max", "2000", "--grid", "17")
    assert code == 0
    obj = json.loads(out)
    assert 1.0 < obj["slope"] < 2.0


def test_render_svg(capsys):
    code, out, _ = run_cli(capsys, "gasket", "render", "--depth", "2")
    assert code == 0
    assert out.count("<circle") == 16


def test_triple_argument_forms(capsys):
    code, out, _ = run_cli(capsys, "gasket", "cells", "--triple", "1,2,3", "--depth", "1")
    assert code == 0
    cells = json.loads(out)
    kappa = math.sqrt(2 * 3 + 3 * 1 + 1 * 2)
    assert cells[0]["quad"][3] == pytest.approx(kappa, rel=1e-12)
    disks = json.dumps(
        [
            {"type": "disk", "center": [0, 0], "radius": 1},
            {"type": "disk", "center": [2, 0], "radius": 1},
            {"type": "disk", "center": [1, math.sqrt(3)], "radius": 1},
        ]
    )
    code, out, _ = run_cli(capsys, "gasket", "cells", "--triple", disks, "--depth", "0")
    assert code == 0


def test_spectrum_json(capsys):
    code, out, _ = run_cli(
        capsys, "spectrum", "--scheme", "trace", "--depth", "3", "--top", "20"
    )
    assert code == 0
    obj = json.loads(out)
    assert obj["scheme"] == "trace" and obj["depth"] == 3
    assert len(obj["eigenvalues"]) == 20
    assert obj["boundary"] == [0, 1, 2]


def test_weyl_json(capsys):
    code, out, _ = run_cli(
        capsys, "weyl", "--scheme", "trace", "--depth", "5", "--top", "300"
    )
    assert code == 0
    obj = json.loads(out)
    assert 0.4 < obj["slope"] < 0.9
    assert obj["normalization"] == "laplacian"


def test_carpet_q6_rejected(capsys):
    code, out, err = run_cli(capsys, "carpet", "gen", "--q", "6")
    assert code == 1
    assert "q must" in err


def test_carpet_gen_csv(capsys, tmp_path):
    svg_path = tmp_path / "orbit.svg"
    code, out, _ = run_cli(
        capsys, "--out", str(tmp_path / "o.csv"), "carpet", "gen", "--q", "8",
        "--min-radius", "0.05", "--out-svg", str(svg_path)
    )
    assert code == 0
    lines = (tmp_path / "o.csv").read_text().splitlines()
    assert lines[0] == "center_x,center_y,radius,generation"
    assert svg_path.read_text().count("<circle") == len(lines)  # orbit + unit circle


def test_carpet_separation_json(capsys):
    code, out, _ = run_cli(capsys, "carpet", "separation", "--q", "8", "--min-radius", "0.01")
    assert code == 0
    obj = json.loads(out)
    assert obj["epsilon_observed"] > 0


def test_checks_identities_exit_zero(capsys):
    code, out, _ = run_cli(capsys, "checks", "--suite", "identities")
    assert code == 0
    assert "[FAIL]" not in out


def test_unknown_flag_exit_one(capsys):
    assert main(["gasket", "count", "--bogus"]) == 1


def test_bad_triple_exit_one(capsys):
    code, _, err = run_cli(capsys, "gasket", "count", "--triple", "1,2")
    assert code == 1
    assert "error" in err
