import json
import math
import subprocess
import sys

import numpy as np
import pytest

from toruslock.cli import main
from toruslock.dynamics import GOLDEN_MEAN, Omega, QpfSystem
from toruslock.fields import arnold_field, constant_field
from toruslock.serialize import atomic_write_json, system_to_obj


@pytest.fixture
def rigid_spec(tmp_path):
    p = tmp_path / "rigid.json"
    atomic_write_json(str(p), system_to_obj(
        QpfSystem(Omega.irrational(GOLDEN_MEAN), constant_field(0.25))))
    return p


@pytest.fixture
def arnold_spec(tmp_path):
    p = tmp_path / "arnold.json"
    atomic_write_json(str(p), system_to_obj(
        QpfSystem(Omega.irrational(GOLDEN_MEAN),
                  arnold_field(tau=0.0, K=0.5, b=0.0))))
    return p


def test_rotnum_rigid_csv(rigid_spec, tmp_path, capsys):
    out = tmp_path / "r.csv"
    assert main(["rotnum", str(rigid_spec), "-o", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[1] == "value,half_width,iterations,per_theta_spread,certified"
    assert lines[2].startswith("0.25,0.0,")


def test_malformed_spec_exit_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["rotnum", str(bad)]) == 2
    missing_keys = tmp_path / "mk.json"
    missing_keys.write_text("{}")
    assert main(["rotnum", str(missing_keys)]) == 2


def test_unknown_command_exit_2():
    assert main(["frobnicate"]) == 2


def test_determinism_byte_identical(rigid_spec, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["rotnum", str(rigid_spec), "--seed", "7", "-o", str(a)]) == 0
    assert main(["rotnum", str(rigid_spec), "--seed", "7", "-o", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_tongue_csv_and_svg(arnold_spec, tmp_path):
    out = tmp_path / "t.csv"
    svg = tmp_path / "t.svg"
    assert main(["tongue", str(arnold_spec), "--target", "0", "--alphas", "3",
                 "--tol", "1e-8", "-o", str(out), "--svg", str(svg)]) == 0
    rows = [ln for ln in out.read_text().splitlines()
            if ln and not ln.startswith(("#", "alpha"))]
    assert len(rows) == 3
    tau_plus = float(rows[0].split(",")[2])
    assert tau_plus == pytest.approx(0.5 / (2 * math.pi), abs=1e-6)
    assert svg.read_text().startswith("<svg")


def test_staircase_plateaus_render_chain(arnold_spec, tmp_path):
    st = tmp_path / "st.csv"
    assert main(["staircase", str(arnold_spec), "--tau-min", "-0.12",
                 "--tau-max", "0.12", "--samples", "25", "--n-max", "1500",
                 "-o", str(st)]) == 0
    pl = tmp_path / "plat.json"
    assert main(["plateaus", str(st), "-o", str(pl)]) == 0
    obj = json.loads(pl.read_text())
    assert obj["plateaus"], "the rho=0 plateau must be detected"
    svg = tmp_path / "st.svg"
    assert main(["render", str(st), "-o", str(svg)]) == 0
    assert svg.read_text().startswith("<svg")


def test_zeroset_curves_chain(tmp_path):
    n = 9
    from toruslock.pwa import PwaField, triangulate
    tri = triangulate(1, (0, 1), n, seed=4)
    prof = np.where(tri.rows < 0.5, 1.0 - 4 * tri.rows,
                    -3.0 + 4 * tri.rows) * 0.1
    spec = tmp_path / "twoc.json"
    atomic_write_json(str(spec), system_to_obj(
        QpfSystem(Omega.rational(0, 1), PwaField(tri, np.tile(prof, (n, 1))))))
    zs = tmp_path / "zs.json"
    assert main(["zeroset", str(spec), "-o", str(zs)]) == 0
    obj = json.loads(zs.read_text())
    assert len(obj["components"]) == 2
    cv = tmp_path / "cv.json"
    svg = tmp_path / "cv.svg"
    assert main(["curves", str(spec), "-o", str(cv), "--svg", str(svg)]) == 0
    cobj = json.loads(cv.read_text())
    assert cobj["closure"] == [1, 0]
    assert main(["render", str(zs), "-o", str(tmp_path / "zs.svg")]) == 0


def test_console_entrypoint():
    proc = subprocess.run([sys.executable, "-m", "toruslock.cli", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    for cmd in ("rotnum", "tongue", "rationalize", "lock-fibres", "zeroset",
                "curves", "certify", "pipeline", "staircase", "plateaus",
                "render"):
        assert cmd in proc.stdout
