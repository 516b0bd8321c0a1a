import math
import os

import numpy as np
import pytest

import msgoal

SMALL = {
    "preset": "custom",
    "qoi": "Qc",
    "coefficient": "periodic_defect",
    "load": "sinusoidal",
    "eps": 0.125,
    "n": 4,
    "cells_per_element": 12,
    "omega": "0.25,0.25,0.5,0.5",
    "max_iter": 2,
    "tol": 0.001,
}


def test_version():
    assert msgoal.version().startswith("0.1.0")


def test_normalize_fills_defaults():
    cfg = msgoal.normalize_config({"preset": "flow", "qoi": "Q"})
    assert cfg["tol"] == "0.01"
    assert cfg["mode"] == "goal"
    assert cfg["channel"].startswith("20,")


@pytest.mark.parametrize("bad", [{"tol": 2.0}, {"preset": "nope"}, {"colour": "red"}, {"gamma": -1}])
def test_invalid_config(bad):
    with pytest.raises(ValueError):
        msgoal.normalize_config(bad)


def test_mark():
    assert msgoal.mark([1, 3, 2, 3], [1, 1, 1, 1], 1.0) == [1, 3]
    assert msgoal.mark([1, 2], [1, 1], 0.0) == [0, 1]


def test_problem_info():
    info = msgoal.problem_info({"preset": "defect_sin", "qoi": "Q2"})
    assert info["n_root"] == 9
    assert len(info["initial_leaves"]) == 81
    assert math.isclose(info["omega"][2] - info["omega"][0], 4 * info["eps"])


def test_run_and_reference(tmp_path):
    seen = []
    out = msgoal.run(dict(SMALL, oracle=True), str(tmp_path / "run"), callback=seen.append)
    hist = out["history"]
    assert len(hist) == 2 and len(seen) == 2
    assert hist[-1]["source"] == "cap"
    for h in hist:
        assert h["eta"] >= abs(h["error"]) * (1 - 1e-9)
    assert os.path.exists(tmp_path / "run" / "history.csv")
    assert len(out["leaves"]) == hist[-1]["leaves"]

    u, q = msgoal.reference_solution(SMALL)
    assert u.shape == (49, 49)
    assert np.all(u[0, :] == 0) and np.all(u[:, -1] == 0)
    assert math.isclose(q, out["q_ref"], rel_tol=1e-12)

    rows = msgoal.compare(str(tmp_path / "run"), str(tmp_path / "run"))
    assert rows[0]["fine_dofs"] == rows[1]["fine_dofs"]
