import os
import subprocess
import sys

import numpy as np
import pytest

from lambstring import OdeProblem, _backend, build_map, make_force
from lambstring._backend import get_kernels, worker_count
from lambstring.config import load_scenario


def test_threads_env_caps_workers(monkeypatch):
    monkeypatch.setenv("LAMB_THREADS", "1")
    assert worker_count() == 1
    monkeypatch.setenv("LAMB_THREADS", "0")
    assert worker_count() == 1
    monkeypatch.delenv("LAMB_THREADS")
    assert worker_count() == (os.cpu_count() or 1)


def test_unknown_backend():
    with pytest.raises(ValueError):
        get_kernels("fortran")


@pytest.mark.parametrize("demo", ["bistable-m0", "duffing-m2"])
def test_backends_give_same_orbits(demo):
    pmap = build_map(load_scenario(f"demo:{demo}").problem, 2 * np.pi / 256)
    seeds = np.linspace(-2, 2, 6)
    if pmap.dim == 2:
        seeds = np.column_stack([seeds, seeds[::-1]])
    py, fpy = pmap.orbits(seeds, 5, 0, kernels=get_kernels("python"))
    cy, fcy = pmap.orbits(seeds, 5, 0, kernels=get_kernels("cython"))
    assert np.array_equal(fpy, fcy)
    assert np.max(np.abs(py - cy)) <= 1e-12


def test_threaded_batches_match_serial(monkeypatch):
    pmap = build_map(load_scenario("demo:duffing-m2").problem, 2 * np.pi / 256)
    seeds = np.random.default_rng(7).uniform(-2, 2, size=(13, 2))
    serial, _ = pmap.orbits(seeds, 4)
    monkeypatch.setattr(_backend, "worker_count", lambda: 4)
    threaded, _ = pmap.orbits(seeds, 4)
    assert np.array_equal(serial, threaded)


def test_blowup_flag_matches():
    prob = load_scenario("demo:bistable-m0").problem
    wild = OdeProblem(prob.params, make_force("y^3"), prob.drive)
    pmap = build_map(wild, 0.5)
    for name in ("python", "cython"):
        _, fail = pmap.orbits(np.array([0.0, 5.0]), 10, 0, kernels=get_kernels(name))
        assert fail[0] == -1 and fail[1] >= 0


def test_pure_python_fallback_runs():
    code = ("import lambstring, sys; from lambstring.config import load_scenario; "
            "from lambstring import build_map; "
            "m = build_map(load_scenario('demo:linear-m0').problem); "
            "print(lambstring.BACKEND, repr(m(0.0)))")
    env = dict(os.environ, LAMB_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, env=env,
                         check=True).stdout.split()
    assert out[0] == "python"
    pmap = build_map(load_scenario("demo:linear-m0").problem)
    assert float(out[1]) == pytest.approx(pmap(0.0), abs=1e-14)
