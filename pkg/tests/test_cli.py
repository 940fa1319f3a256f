import json
import subprocess
import sys

import numpy as np
import pytest

from smlab import cli
from smlab.errors import ConfigError


def run_main(args, capsys):
    code = cli.main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_gallery_cross_cap_standard(capsys):
    code, out, _ = run_main(["gallery", "cross-cap-standard"], capsys)
    assert code == 0
    data = json.loads(out)
    cap = data["cross_caps"][0]
    assert abs(cap["alpha02"] - 2.0) <= 1e-9
    assert abs(cap["hess"] - 16.0) <= 1e-9
    assert cap["chart_stack"][0]["stage"] == "null-align"
    assert all(r["residual"] <= 1e-3 for r in cap["ray_limits"])


def test_gallery_swallowtail_classification(capsys):
    code, out, _ = run_main(["gallery", "swallowtail"], capsys)
    assert code == 0
    data = json.loads(out)
    curve = data["curves"][0]
    assert len(curve["a3_points"]) == 1
    assert np.hypot(*curve["a3_points"][0]["point"]) < 1e-6
    assert curve["classes"].get("A2", 0) > 0
    assert curve["classes"].get("Other", 0) == 0


def test_gallery_normal_form_invariants(capsys):
    code, out, _ = run_main(["gallery", "normal-form"], capsys)
    assert code == 0
    data = json.loads(out)
    assert data["normalized_chart"]["verdict"] is True
    route = data["normal_form_route"]
    assert all(abs(r["kappa_s"] - 1.0) < 1e-10 for r in route)
    assert all(abs(r["kappa_pi"] + 2.5) < 1e-10 for r in route)
    mid = [s for s in data["curves"][0]["samples"] if s["kappa_s"] is not None]
    assert all(abs(s["kappa_s"] - 1.0) < 1e-8 for s in mid)


def test_gallery_with_params(capsys):
    code, out, _ = run_main(["gallery", "west-synthetic", "--param", "a20=0",
                             "--param", "a11=0", "--param", "a02=3"], capsys)
    assert code == 0
    cap = json.loads(out)["cross_caps"][0]
    assert abs(cap["alpha02"] - 3.0) <= 1e-8


def test_config_file_roundtrip(tmp_path, capsys):
    cfg = {
        "kind": "metric",
        "metric": {"E": "1 + v^2", "F": "u*v", "G": "u^2 + 4*v^2"},
        "domain": [-0.8, 0.8, -0.8, 0.8],
    }
    path = tmp_path / "cc.json"
    path.write_text(json.dumps(cfg))
    code, out, _ = run_main(["crosscap", str(path)], capsys)
    assert code == 0
    assert abs(json.loads(out)["cross_caps"][0]["alpha02"] - 2.0) <= 1e-9


def test_missing_config_exit_2(capsys):
    code, _, err = run_main(["classify", "does-not-exist.json"], capsys)
    assert code == 2
    assert "config error" in err


def test_bad_expression_exit_2(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({
        "kind": "metric",
        "metric": {"E": "abs(u)", "F": "0", "G": "1"},
        "domain": [0, 1, 0, 1],
    }))
    code, _, err = run_main(["classify", str(path)], capsys)
    assert code == 2
    assert "config error" in err


def test_bad_domain_exit_2(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({
        "kind": "metric",
        "metric": {"E": "1", "F": "0", "G": "1"},
        "domain": [1, 0, 0, 1],
    }))
    code, _, err = run_main(["classify", str(path)], capsys)
    assert code == 2


def test_curve_csv_format(capsys):
    code, out, _ = run_main(["gallery", "cuspidal-edge", "--command", "curve",
                             "--format", "csv"], capsys)
    assert code == 0
    lines = out.strip().split("\n")
    assert lines[0].startswith("t,u,v,tangent_u")
    assert len(lines) > 10
    # locale-free decimal points
    assert "," in lines[1] and ";" not in lines[1]


def test_gauss_bonnet_flat_torus(tmp_path, capsys):
    path = tmp_path / "torus.json"
    path.write_text(json.dumps({
        "kind": "metric",
        "metric": {"E": "1", "F": "0", "G": "1"},
        "domain": [0.0, 6.283185307179586, 0.0, 6.283185307179586],
        "periodic": [True, True],
        "topology": {"chi": 0},
    }))
    code, out, _ = run_main(["gauss-bonnet", "whitney", str(path),
                             "--base-tiles", "2", "--depth", "2"], capsys)
    assert code == 0
    data = json.loads(out)
    assert data["verdict"] == "PASS"
    assert abs(data["lhs"]) < 1e-10


def test_gb1_without_lambda_exit_2(tmp_path, capsys):
    path = tmp_path / "nolam.json"
    path.write_text(json.dumps({
        "kind": "metric",
        "metric": {"E": "1 + v^2", "F": "u*v", "G": "u^2 + 4*v^2"},
        "domain": [-0.8, 0.8, -0.8, 0.8],
    }))
    code, _, err = run_main(["gauss-bonnet", "gb1", str(path)], capsys)
    assert code == 2
    assert "lambda" in err


def test_out_file(tmp_path, capsys):
    target = tmp_path / "report.json"
    code = cli.main(["gallery", "cross-cap-standard", "--out", str(target)])
    capsys.readouterr()
    assert code == 0
    assert target.exists()
    data = json.loads(target.read_text())
    assert abs(data["cross_caps"][0]["alpha02"] - 2.0) <= 1e-9


def test_json_output_is_canonical(capsys):
    code1, out1, _ = run_main(["gallery", "cross-cap-standard"], capsys)
    code2, out2, _ = run_main(["gallery", "cross-cap-standard"], capsys)
    assert out1 == out2


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "smlab.cli", "gallery",
                           "west-synthetic"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert '"alpha02": 2' in proc.stdout
