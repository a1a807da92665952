import csv
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quadric_kohn import ConfigError, emit, parse_config
from quadric_kohn.cli import main


def _job(**kw):
    doc = {"quadric": {"preset": "M2"}, "command": "green",
           "points": [{"z": [[0.5, 0.1], [0.2, 0.0]], "t": [0.3, -0.2]}]}
    doc.update(kw)
    return doc


def _run(tmp_path, doc, *extra):
    cfg = tmp_path / "job.json"
    cfg.write_text(json.dumps(doc))
    out = tmp_path / "out.csv"
    return main(["--config", str(cfg), "--out", str(out), *extra]), out


@pytest.mark.parametrize("name", ["M1", "M2", "M3", "heisenberg:2", "product-heisenberg:1,2"])
def test_round_trip_presets(name):
    doc = _job(quadric={"preset": name}, command="spectrum", options={"n_directions": 3})
    doc.pop("points")
    job = parse_config(json.dumps(doc))
    assert parse_config(emit(job)) == job


@settings(max_examples=30, deadline=None)
@given(vals=st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=3, max_size=3),
       tol=st.floats(1e-14, 1e-2))
def test_round_trip_inline_matrices(vals, tol):
    a, b, c = vals
    doc = {"quadric": {"matrices": [[[[a, 0], [b, c]], [[b, -c], [a, 0]]]]}, "command": "green",
           "grid": {"z_1_re": {"min": a, "max": b, "count": 2}, "z_2_im": c, "t_1": 0.5},
           "quadrature": {"rel_tol": tol}}
    job = parse_config(json.dumps(doc))
    assert parse_config(emit(job)) == job


def test_inline_scalar_is_heisenberg():
    job = parse_config(json.dumps({"quadric": {"matrices": [[[1]]]}, "command": "classify"}))
    Q = job.quadric()
    assert (Q.n, Q.m) == (1, 1)
    assert np.allclose(Q.matrices[0], [[1.0]])


@pytest.mark.parametrize("patch, match", [
    ({"K": [2, 1], "q": 2}, "multi-index"),
    ({"q": 5}, "q must be"),
    ({"command": "bogus"}, "command"),
    ({"extra": 1}, "unknown keys"),
    ({"quadric": {"matrices": [[[1, 1], [0, 1]]]}}, "Hermitian"),
    ({"quadric": {"preset": "M2", "matrices": [[[1]]]}}, "exactly one"),
    ({"grid": {"t_1": 0.1}}, "either points or grid"),
    ({"output": {"path": "x.h5", "format": "hdf5"}}, "csv"),
])
def test_config_errors(patch, match):
    with pytest.raises(ConfigError, match=match):
        parse_config(json.dumps(_job(**patch)))


def test_exit_code_config(tmp_path, capsys):
    code, _ = _run(tmp_path, _job(K=[2, 1], q=2))
    assert code == 2
    rec = json.loads(capsys.readouterr().err)
    assert rec["exit_code"] == 2 and rec["error"] == "ConfigError"


def test_exit_code_domain(tmp_path):
    doc = {"quadric": {"preset": "heisenberg:1"}, "command": "green",
           "points": [{"z": [[0, 0]], "t": [1.0]}]}
    assert _run(tmp_path, doc)[0] == 4


def test_exit_code_tolerance(tmp_path):
    code, out = _run(tmp_path, _job(quadrature={"rel_tol": 1e-14, "max_level": 2}))
    assert code == 3
    assert out.exists()


def test_kernel_csv_schema(tmp_path):
    code, out = _run(tmp_path, _job(command="szego", quadric={"preset": "M1"}, q=1, K=[1]))
    assert code == 0
    rows = list(csv.DictReader(out.open()))
    assert list(rows[0]) == ["z_1_re", "z_1_im", "z_2_re", "z_2_im", "t_1", "t_2", "Kprime",
                             "value_re", "value_im", "abs_err", "formula_used"]
    assert [r["Kprime"] for r in rows] == ["1", "2"]


def test_m2_grid_along_sphere_is_constant(tmp_path):
    # |z|^4 + |t|^2 is constant on this family, so the kernel is too
    ang = [0.0, 0.5, 1.1]
    pts = [{"z": [[np.cos(a), 0.0], [np.sin(a), 0.0]], "t": [0.4, 0.3]} for a in ang]
    code, out = _run(tmp_path, _job(points=pts, quadrature={"rel_tol": 1e-9}))
    assert code == 0
    vals = [float(r["value_re"]) for r in csv.DictReader(out.open())]
    assert np.ptp(vals) < 1e-8 * abs(vals[0])


@pytest.mark.parametrize("command, extra", [
    ("spectrum", {"options": {"n_directions": 6}}),
    ("classify", {}),
    ("gamma", {"q": 1, "K": [1]}),
    ("heat", {"options": {"s": [0.5, 1.0], "lam": [[1.0, 0.0]]}}),
    ("verify", {"options": {"suite": ["classification", "mass"]}}),
])
def test_commands_with_plot(tmp_path, command, extra):
    doc = _job(command=command, **extra)
    if command not in ("heat",):
        doc.pop("points")
    code, out = _run(tmp_path, doc, "--plot")
    assert code == 0
    assert out.with_suffix(".png").stat().st_size > 0
    assert len(list(csv.reader(out.open()))) > 1


def test_unreadable_config(tmp_path):
    assert main(["--config", str(tmp_path / "missing.json")]) == 2
