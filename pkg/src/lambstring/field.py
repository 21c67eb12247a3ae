"""String displacement u(x, t) rebuilt from the oscillator trajectory.

The line splits into four zones at x = -at, 0, at.  Outside the light cone
the solution is the free wave f(x - at) + g(x + at); inside it the
oscillator trace y enters through the retarded times t -+ x/a.  Seams are
evaluated from the inner zone, so u(0, t) is y(t) exactly.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from . import _backend
from .force import ForceField
from .model import StringParams
from .oscillator import Trajectory
from .reduction import DalembertSplit, IncomingScenario

DEFAULT_CELLS = 2048


@dataclass(frozen=True, eq=False)
class FieldFrame:
    t: float
    x: np.ndarray
    u: np.ndarray
    u_t: np.ndarray
    u_x: np.ndarray
    ux_0plus: float
    ux_0minus: float

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])

    def as_columns(self) -> np.ndarray:
        return np.column_stack([self.x, self.u, self.u_t, self.u_x])


def uniform_grid(R: float, cells: int = DEFAULT_CELLS) -> np.ndarray:
    """``cells + 1`` points on [-R, R]; an even cell count puts x = 0 on the grid."""
    return np.linspace(-R, R, cells + 1)


def _check(traj: Trajectory, lo: float, hi: float):
    if not traj.covers(lo, hi):
        raise ValueError(f"trajectory on [{traj.t0}, {traj.t1}] does not cover [{lo}, {hi}]")


def reconstruct(split: DalembertSplit, traj: Trajectory, t: float, x) -> FieldFrame:
    if t < 0:
        raise ValueError("t must be non-negative")
    _check(traj, 0.0, t)
    a = split.a
    x = np.asarray(x, dtype=float)
    at = a * t
    u = np.empty_like(x)
    ut = np.empty_like(x)
    ux = np.empty_like(x)

    right = x > at
    xi = x[right]
    fp, gp = split.f_plus.deriv(xi - at), split.g_plus.deriv(xi + at)
    u[right] = split.f_plus(xi - at) + split.g_plus(xi + at)
    ut[right] = a * (gp - fp)
    ux[right] = fp + gp

    left = x < -at
    xi = x[left]
    fp, gp = split.f_minus.deriv(xi - at), split.g_minus.deriv(xi + at)
    u[left] = split.f_minus(xi - at) + split.g_minus(xi + at)
    ut[left] = a * (gp - fp)
    ux[left] = fp + gp

    inner_p = (x >= 0) & ~right
    xi = x[inner_p]
    s = t - xi / a
    yd = traj.v_at(s)
    g1, g2 = split.g_plus.deriv(xi + at), split.g_plus.deriv(at - xi)
    u[inner_p] = traj.y_at(s) + (split.g_plus(xi + at) - split.g_plus(at - xi))
    ut[inner_p] = yd + a * (g1 - g2)
    ux[inner_p] = -yd / a + g1 + g2

    inner_m = (x < 0) & ~left
    xi = x[inner_m]
    s = t + xi / a
    yd = traj.v_at(s)
    f1, f2 = split.f_minus.deriv(xi - at), split.f_minus.deriv(-at - xi)
    u[inner_m] = traj.y_at(s) + (split.f_minus(xi - at) - split.f_minus(-at - xi))
    ut[inner_m] = yd - a * (f1 - f2)
    ux[inner_m] = yd / a + f1 + f2

    yd0 = float(traj.v_at(t))
    uxp = float(2 * split.g_plus.deriv(at) - yd0 / a)
    uxm = float(2 * split.f_minus.deriv(-at) + yd0 / a)
    return FieldFrame(float(t), x, u, ut, ux, uxp, uxm)


def reconstruct_limit(split_bar: DalembertSplit, yp_traj: Trajectory, t: float, x) -> FieldFrame:
    """Limit field: the same zones with the shifted-data split and the periodic trace."""
    return reconstruct(split_bar, yp_traj, t, x)


def seam_gaps(split: DalembertSplit, traj: Trajectory, t: float) -> dict:
    """One-sided differences of u at x = 0 and x = +-at."""
    at = split.a * t
    y_t = traj.y_at(t)
    right0 = y_t + (split.g_plus(at) - split.g_plus(at))
    left0 = y_t + (split.f_minus(-at) - split.f_minus(-at))
    gaps = {"x=0": abs(right0 - left0)}
    if t > 0:
        y0 = traj.y_at(0.0)
        outer_r = split.f_plus(0.0) + split.g_plus(2 * at)
        inner_r = y0 + (split.g_plus(2 * at) - split.g_plus(0.0))
        outer_l = split.f_minus(-2 * at) + split.g_minus(0.0)
        inner_l = y0 + (split.f_minus(-2 * at) - split.f_minus(0.0))
        gaps["x=at"] = abs(outer_r - inner_r)
        gaps["x=-at"] = abs(outer_l - inner_l)
    return {k: float(v) for k, v in gaps.items()}


# ------------------------------------------------------------------ incoming wave

def _incoming_zones(scenario: IncomingScenario, y_of, yd_of, t: float, x, limit: bool):
    a = scenario.params.a
    p = scenario.p
    x = np.asarray(x, dtype=float)
    at = a * t
    u = np.empty_like(x)
    ut = np.empty_like(x)
    ux = np.empty_like(x)

    pos = x >= 0 if limit else (x >= 0) & (x <= at)
    xi = x[pos]
    s = t - xi / a
    yd = yd_of(s)
    d1, d2 = p.deriv(xi + at), p.deriv(at - xi)
    u[pos] = y_of(s) + (p(xi + at) - p(at - xi))
    ut[pos] = yd + a * (d1 - d2)
    ux[pos] = -yd / a + d1 + d2

    neg = x < 0 if limit else (x < 0) & (x >= -at)
    xi = x[neg]
    s = t + xi / a
    yd = yd_of(s)
    u[neg] = y_of(s)
    ut[neg] = yd
    ux[neg] = yd / a

    if not limit:
        right = x > at
        xi = x[right]
        u[right] = p(xi + at)
        ut[right] = a * p.deriv(xi + at)
        ux[right] = p.deriv(xi + at)
        left = x < -at
        u[left] = p.p0
        ut[left] = 0.0
        ux[left] = 0.0

    yd0 = float(yd_of(np.array([t]))[0])
    uxp = float(2 * p.deriv(at) - yd0 / a)
    return FieldFrame(float(t), x, u, ut, ux, uxp, yd0 / a)


def reconstruct_incoming(scenario: IncomingScenario, traj: Trajectory, t: float, x) -> FieldFrame:
    """Four zones: p(x + at) ahead of the front, the rest state p0 behind it."""
    if t < 0:
        raise ValueError("t must be non-negative")
    _check(traj, 0.0, t)
    return _incoming_zones(scenario, traj.y_at, traj.v_at, t, x, limit=False)


def reconstruct_incoming_limit(scenario: IncomingScenario, yp_traj: Trajectory, pbar0: float,
                               t: float, x) -> FieldFrame:
    """Two-zone limit field with y_p extended by ``pbar0`` for negative times."""
    if t < 0:
        raise ValueError("t must be non-negative")
    _check(yp_traj, 0.0, t)

    def y_of(s):
        s = np.asarray(s, dtype=float)
        return np.where(s < 0, pbar0, yp_traj.y_at(np.maximum(s, 0.0)))

    def yd_of(s):
        s = np.asarray(s, dtype=float)
        return np.where(s < 0, 0.0, yp_traj.v_at(np.maximum(s, 0.0)))

    return _incoming_zones(scenario, y_of, yd_of, t, x, limit=True)


def limit_profile(scenario: IncomingScenario, q0: float, z) -> np.ndarray:
    """q(z) = q0 for z <= 0 and q0 + p(z) - p0 for z > 0."""
    return q0 + scenario.p(z) - scenario.p0


# ------------------------------------------------------------------ diagnostics

def jump_residual(params: StringParams, force: ForceField, frame: FieldFrame, traj: Trajectory,
                  t: float | None = None) -> float:
    """|m y'' - F(y) - kappa (u_x(0+) - u_x(0-))| at the frame time."""
    t = frame.t if t is None else t
    y = traj.y_at(t)
    acc = traj.vdot_at(t) if params.m > 0 else 0.0
    jump = frame.ux_0plus - frame.ux_0minus
    return float(abs(params.m * acc - force(y) - params.kappa * jump))


def field_convergence(frame_u: FieldFrame, frame_up: FieldFrame, R: float | None = None) -> float:
    """int_{|x|<R} |du_t|^2 + |du_x|^2 dx + max_{|x|<R} |du| on the shared grid.

    The x integral is split at 0 so the kink of u_x there does not spoil Simpson.
    """
    if frame_u.x.shape != frame_up.x.shape or not np.array_equal(frame_u.x, frame_up.x):
        raise ValueError("frames must share the x grid")
    if frame_u.t != frame_up.t:
        raise ValueError("frames must share the time")
    x = frame_u.x
    R = float(np.max(np.abs(x))) if R is None else R
    keep = np.abs(x) <= R * (1 + 1e-12)
    du = np.abs(frame_u.u - frame_up.u)[keep]
    dt2 = np.square(frame_u.u_t - frame_up.u_t)
    dx2 = np.square(frame_u.u_x - frame_up.u_x)
    dens = dt2 + dx2
    total = 0.0
    neg = keep & (x < 0)
    pos = keep & (x >= 0)
    if neg.any():
        xn, dn = x[neg], dens[neg]
        if pos.any() and x[pos][0] == 0.0:
            # close the left half at x = 0 with the one-sided u_x
            d0 = dt2[pos][0] + (frame_u.ux_0minus - frame_up.ux_0minus) ** 2
            xn, dn = np.append(xn, 0.0), np.append(dn, d0)
        total += simpson(dn, x=xn) if xn.size > 1 else 0.0
    if pos.sum() > 1:
        total += simpson(dens[pos], x=x[pos])
    return float(total + du.max())


def wave_residual(frames, params: StringParams, h_t: float, exclude: float | None = None) -> float:
    """max |mu D_t^2 u - kappa D_x^2 u| away from x = 0 and the light cone.

    ``frames`` holds frames at t - h_t, t, t + h_t on one uniform grid.
    """
    f0, f1, f2 = frames
    x = f1.x
    hx = f1.dx
    a = params.a
    dtt = (f0.u - 2 * f1.u + f2.u) / h_t**2
    dxx = np.full_like(x, np.nan)
    dxx[1:-1] = (f1.u[:-2] - 2 * f1.u[1:-1] + f1.u[2:]) / hx**2
    band = exclude if exclude is not None else 2.0 * max(hx, a * h_t) + 1e-12
    at = a * f1.t
    ok = np.ones(x.shape, dtype=bool)
    ok[[0, -1]] = False
    for c in (0.0, at, -at):
        ok &= np.abs(x - c) > band
    if not ok.any():
        return 0.0
    r = np.abs(params.mu * dtt - params.kappa * dxx)[ok]
    return float(r.max())


def build_frames(fn, times, *args) -> list[FieldFrame]:
    """``fn(*args[:-1], t, args[-1])`` for every t, spread over worker threads."""
    head, x = args[:-1], args[-1]
    workers = min(_backend.worker_count(), len(times))
    if workers <= 1:
        return [fn(*head, t, x) for t in times]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda t: fn(*head, t, x), times))
