import math

import numpy as np
import pytest

from lambstring import (
    Drive,
    InitialData,
    OdeProblem,
    PeriodicProfile,
    build_drive,
    make_force,
    make_params,
)
from lambstring.config import load_scenario

TWO_PI = 2 * math.pi


def profile(mean=0.0, cos=(), sin=(), period=TWO_PI):
    return PeriodicProfile(period, mean, list(cos), list(sin))


def symmetric_data(u0=None, u1=None, y1=0.0):
    """Same Fourier series on both half-lines (so u0 is C^1 at the origin)."""
    u0 = u0 or profile()
    u1 = u1 or profile()
    return InitialData(u0, u0, u1, u1, y1)


def linear_problem(drive_amp=1.0, m=0.0, force="-y"):
    """mu = kappa = 1, u1 = amp*cos: p(z) = amp*sin z; for m = 0, y' = -y/2 + amp*cos t."""
    params = make_params(1.0, 1.0, m)
    data = symmetric_data(u1=profile(cos=[drive_amp]))
    return OdeProblem(params, make_force(force), build_drive(data, params)), data


def undriven_problem(force, m=0.0, period=TWO_PI, mu=1.0, kappa=1.0):
    params = make_params(mu, kappa, m)
    return OdeProblem(params, make_force(force), Drive.zero(period))


def linear_periodic(t):
    """Periodic solution of y' = -y/2 + cos t."""
    return 0.4 * np.cos(t) + 0.8 * np.sin(t)


@pytest.fixture(scope="session")
def linear():
    return linear_problem()


@pytest.fixture(scope="session")
def duffing():
    return load_scenario("demo:duffing-m2")


@pytest.fixture(scope="session")
def demo():
    return lambda name, **kw: load_scenario(f"demo:{name}", **kw)
