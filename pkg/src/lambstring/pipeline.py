"""Glue between a Scenario and the solver pieces: trajectories, limits, frames."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import Scenario
from .field import (
    FieldFrame,
    reconstruct,
    reconstruct_incoming,
    reconstruct_incoming_limit,
    reconstruct_limit,
    uniform_grid,
)
from .model import OscillatorState
from .oscillator import Trajectory, propagate
from .poincare import (
    FixedPoint,
    IterationResult,
    PoincareMap,
    build_map,
    fixed_point_newton_m,
    iterate_to_fixed_point,
)
from .reduction import split


def state0(scn: Scenario) -> OscillatorState:
    y, v = scn.initial_state
    return OscillatorState(0.0, y, v)


def poincare_map(scn: Scenario) -> PoincareMap:
    return build_map(scn.problem, scn.h)


def trajectory(scn: Scenario, t1: float, start: OscillatorState | None = None,
               h: float | None = None) -> Trajectory:
    return propagate(scn.problem, start or state0(scn), t1, h or scn.h)


def grid(scn: Scenario) -> np.ndarray:
    return uniform_grid(scn.numerics["R"], scn.numerics["cells"])


@dataclass
class Limit:
    """Periodic regime reached from the scenario's initial state."""

    Y: np.ndarray
    iteration: IterationResult
    newton: FixedPoint | None

    tol: float

    @property
    def converged(self) -> bool:
        if self.newton is not None:
            return self.newton.residual <= self.tol
        return self.iteration.converged

    @property
    def state(self) -> OscillatorState:
        return OscillatorState(0.0, float(self.Y[0]), float(self.Y[1]) if self.Y.size > 1 else 0.0)


def find_limit(scn: Scenario, pmap: PoincareMap | None = None) -> Limit:
    """Iterate T from the initial state; for m > 0 polish the last iterate by Newton."""
    pmap = pmap or poincare_map(scn)
    num = scn.numerics
    y, v = scn.initial_state
    Y0 = [y, v] if pmap.dim == 2 else y
    it = iterate_to_fixed_point(pmap, Y0, num["n_iter"], num["tol"])
    newton = None
    if pmap.dim == 2 and not it.blew_up:
        newton = fixed_point_newton_m(pmap, it.Y, num["tol"])
        Y = np.asarray(newton.Y, dtype=float)
    else:
        Y = np.atleast_1d(np.asarray(it.Y, dtype=float))
    return Limit(Y, it, newton, num["tol"])


def frame(scn: Scenario, traj: Trajectory, t: float, x=None) -> FieldFrame:
    x = grid(scn) if x is None else x
    if scn.incoming is not None:
        return reconstruct_incoming(scn.incoming, traj, t, x)
    return reconstruct(split(scn.data, scn.params), traj, t, x)


def limit_frame(scn: Scenario, yp_traj: Trajectory, Y: np.ndarray, t: float, x=None) -> FieldFrame:
    x = grid(scn) if x is None else x
    ybar = float(np.atleast_1d(Y)[0])
    if scn.incoming is not None:
        return reconstruct_incoming_limit(scn.incoming, yp_traj, ybar, t, x)
    return reconstruct_limit(split(scn.data.shifted(ybar), scn.params), yp_traj, t, x)
