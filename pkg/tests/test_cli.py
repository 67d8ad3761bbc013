import csv
import hashlib
import json
import os
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from kreinmat.cli import RunConfig, main, run
from kreinmat.errors import ConfigInvalid


def _run(tmp_path, *args):
    out = tmp_path / "out"
    rc = main([*args, "--out", str(out)])
    return rc, out


def _manifest(out):
    return json.loads((out / "manifest.json").read_text())


def test_core_demo(tmp_path):
    rc, out = _run(tmp_path, "core-demo", "--trials", "6", "--seed", "3")
    assert rc == 0
    man = _manifest(out)
    assert man["status"] == "ok" and man["seed"] == 3 and man["parameters"]["trials"] == 6
    spec = json.loads((out / "spectrum.json").read_text())
    assert spec["k_r"] == 1
    lams = sorted(float(e["lambda"][0]) for e in spec["eigenvalues"])
    assert lams == pytest.approx([-1.0, 1.0], abs=1e-12)
    for f in man["files"]:
        data = (out / f["name"]).read_bytes()
        assert len(data) == f["bytes"] and hashlib.sha256(data).hexdigest() == f["sha256"]
    assert json.loads((out / "random_census.json").read_text())["passed"] == 6


def test_core_demo_pencil_file(tmp_path):
    doc = {"degree": 1, "dimension": 2,
           "coefficients": [[[-1, 0], [0, 0], [0, 0], [-2, 0]],
                            [[0, 0], [1, 0], [-1, 0], [0, 0]]]}
    path = tmp_path / "p.json"
    path.write_text(json.dumps(doc))
    rc, out = _run(tmp_path, "core-demo", "--pencil", str(path), "--trials", "0")
    assert rc == 0
    spec = json.loads((out / "spectrum.json").read_text())
    assert spec["k_i_minus"] == 2
    ims = sorted(float(e["lambda"][1]) for e in spec["eigenvalues"])
    assert ims == pytest.approx([-np.sqrt(2), np.sqrt(2)], abs=1e-12)


def test_rerun_byte_identical(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    for d in (a, b):
        assert main(["core-demo", "--trials", "4", "--seed", "7", "--out", str(d)]) == 0
    for name in sorted(os.listdir(a)):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name
    c = tmp_path / "c"
    main(["core-demo", "--trials", "4", "--seed", "8", "--out", str(c)])
    assert (a / "random_census.json").read_bytes() != (c / "random_census.json").read_bytes()


def test_dispersion_scenario(tmp_path):
    rc, out = _run(tmp_path, "kdv5-dispersion", "--npts", "51")
    assert rc == 0
    rows = list(csv.DictReader((out / "dispersion.csv").open()))
    assert len(rows) == 51 * 7
    for r in rows[:60]:
        assert (r["signature"] == "negative") == (float(r["d"]) < 0)
    cols = json.loads((out / "collisions.json").read_text())
    mus = sorted(float(c["mu"]) for c in cols)
    assert mus[0] == pytest.approx(0.20711, abs=1e-5) and mus[-1] == pytest.approx(0.36754, abs=1e-5)
    svg = ET.parse(out / "dispersion.svg").getroot()
    dashed = [e for e in svg.iter() if e.get("stroke-dasharray")]
    assert dashed  # negative-signature pieces


def test_wave_scenario_roundtrip(tmp_path):
    rc, out = _run(tmp_path, "kdv5-wave", "--amplitude", "0.01", "--M", "16")
    assert rc == 0
    from kreinmat.kdv5 import PeriodicWave
    w = PeriodicWave.from_json(json.loads((out / "wave.json").read_text()))
    assert w.M == 16 and w.coefficient(1).real == pytest.approx(0.005)


def test_bridge_multipulse_scenario(tmp_path):
    rc, out = _run(tmp_path, "bridge-multipulse", "--ks", "1")
    assert rc == 0
    a0 = json.loads((out / "a0_spectrum.json").read_text())
    nus = [float(v) for v in a0["nus"]]
    assert len(nus) == 1 and nus[0] < 0


def test_unknown_parameter(tmp_path, capsys):
    rc, out = _run(tmp_path, "kdv5-wave", "--bogus", "1")
    assert rc == 2 and not out.exists()
    assert "bogus" in capsys.readouterr().err
    with pytest.raises(ConfigInvalid):
        RunConfig.build("kdv5-scan", {"mu": "0.3"}, tmp_path)


@pytest.mark.parametrize("scenario,args", [
    ("bridge-pulse", ["--c", "1.5"]),
    ("bridge-multipulse", ["--ks", "2,3"]),
    ("kdv5-krein", ["--mu", "0.7"]),
    ("kdv5-wave", ["--M", "ten"]),
    ("core-demo", ["--zmin", "1", "--zmax", "0"]),
    ("core-demo", ["--pencil", "/nonexistent.json"]),
])
def test_invalid_values(tmp_path, scenario, args):
    assert _run(tmp_path, scenario, *args)[0] == 2


def test_solver_error(tmp_path):
    rc, out = _run(tmp_path, "kdv5-wave", "--b", repr(-2.0 / 3.0))
    assert rc == 1
    err = json.loads((out / "error.json").read_text())
    assert err["error"] == "SolverError" and err["cause"]["error"] == "ResonanceDetected"
    man = _manifest(out)
    assert man["status"] == "error" and man["error"]["cause"]["error"] == "ResonanceDetected"


def test_env_tolerance_override(tmp_path, monkeypatch):
    monkeypatch.setenv("KREINMAT_TOL_PAIR", "1e-5")
    rc, out = _run(tmp_path, "kdv5-dispersion", "--npts", "11")
    assert rc == 0 and _manifest(out)["tolerances"]["tol_pair"] == 1e-5
    monkeypatch.setenv("KREINMAT_TOL_PAIR", "tiny")
    assert _run(tmp_path, "kdv5-dispersion")[0] == 2


def test_run_api(tmp_path):
    cfg = RunConfig.build("kdv5-dispersion", {"npts": "5", "n_min": "-1", "n_max": "1"},
                          tmp_path / "x")
    status, man = run(cfg)
    assert status == 0 and [f["name"] for f in man["files"]] == sorted(f["name"] for f in man["files"])
