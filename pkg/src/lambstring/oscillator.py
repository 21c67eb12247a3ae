"""The reduced oscillator equations and their fixed-step RK4 propagator.

For m == 0 the displacement obeys the first-order equation::

    y' = (a / 2 kappa) F(y) + a p'(a t)

and for m > 0 the Lienard system::

    y' = v,   v' = c F(y) - k v + k a p'(a t)
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.integrate import simpson

from . import _backend
from .force import ForceField
from .model import OscillatorState, StringParams
from .reduction import Drive

DEFAULT_STEPS_PER_PERIOD = 2048


class IntegrationError(RuntimeError):
    def __init__(self, msg: str, last_good_time: float):
        super().__init__(f"{msg} (last good time {last_good_time:.6g})")
        self.last_good_time = last_good_time


class Form(Enum):
    FIRST_ORDER = 0
    LIENARD = 1


@dataclass(frozen=True)
class OdeProblem:
    params: StringParams
    force: ForceField
    drive: Drive

    @property
    def form(self) -> Form:
        return Form.LIENARD if self.params.m > 0 else Form.FIRST_ORDER

    @property
    def omega0(self) -> float:
        """Time period of the forcing, omega / a."""
        return self.drive.period / self.params.a

    @property
    def default_h(self) -> float:
        return self.omega0 / DEFAULT_STEPS_PER_PERIOD

    @property
    def coefficients(self) -> tuple[float, float, float]:
        """(alpha, k, drive scale) for the kernel right-hand side."""
        p = self.params
        if self.form is Form.FIRST_ORDER:
            return p.a / (2.0 * p.kappa), 0.0, p.a
        return p.c, p.k, p.k * p.a

    def forcing(self, t):
        """Additive forcing term of the right-hand side at times ``t``."""
        a = self.params.a
        return self.coefficients[2] * self.drive.deriv(a * np.asarray(t, dtype=float))

    def drive_samples(self, s: float, h: float, n: int) -> np.ndarray:
        return self.forcing(s + 0.5 * h * np.arange(2 * n + 1))

    def forcing_bound(self, samples: int = 8192) -> float:
        """Sampled max over one period of |forcing|."""
        t = np.linspace(0.0, self.omega0, samples, endpoint=False)
        return float(np.max(np.abs(self.forcing(t))))

    def rhs(self, t, y, v=0.0):
        alpha, k, _ = self.coefficients
        F = self.force(y)
        if self.form is Form.FIRST_ORDER:
            return alpha * F + self.forcing(t)
        return v, alpha * F - k * v + self.forcing(t)


def _hermite(s, h, y0, y1, d0, d1):
    s2, s3 = s * s, s * s * s
    h00 = 2 * s3 - 3 * s2 + 1
    h10 = s3 - 2 * s2 + s
    h01 = -2 * s3 + 3 * s2
    h11 = s3 - s2
    return h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1


def _hermite_deriv(s, h, y0, y1, d0, d1):
    s2 = s * s
    return ((6 * s2 - 6 * s) * (y0 - y1) / h + (3 * s2 - 4 * s + 1) * d0
            + (3 * s2 - 2 * s) * d1)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Knot values of an RK4 run on ``t0 + i h`` with cubic Hermite dense output."""

    problem: OdeProblem
    t0: float
    h: float
    y: np.ndarray
    v: np.ndarray
    dy: np.ndarray
    dv: np.ndarray

    @property
    def n(self) -> int:
        return self.y.size - 1

    @property
    def t(self) -> np.ndarray:
        return self.t0 + self.h * np.arange(self.n + 1)

    @property
    def t1(self) -> float:
        return self.t0 + self.h * self.n

    @property
    def final(self) -> OscillatorState:
        return OscillatorState(self.t1, float(self.y[-1]), float(self.v[-1]))

    def covers(self, a: float, b: float) -> bool:
        eps = 1e-9 * max(1.0, abs(self.t1))
        return a >= self.t0 - eps and b <= self.t1 + eps

    def _locate(self, t):
        t = np.asarray(t, dtype=float)
        if t.size and not self.covers(float(np.min(t)), float(np.max(t))):
            raise ValueError(f"trajectory on [{self.t0}, {self.t1}] does not cover the request")
        x = (t - self.t0) / self.h
        i = np.clip(np.floor(x).astype(int), 0, self.n - 1)
        return t, i, x - i

    def _dense(self, t, vals, ders, derivative):
        t, i, s = self._locate(t)
        f = _hermite_deriv if derivative else _hermite
        out = f(s, self.h, vals[i], vals[i + 1], ders[i], ders[i + 1])
        return float(out) if out.ndim == 0 else out

    def y_at(self, t):
        return self._dense(t, self.y, self.dy, False)

    def ydot_at(self, t):
        return self._dense(t, self.y, self.dy, True)

    def v_at(self, t):
        """y' from dense output (v for the Lienard form)."""
        if self.problem.form is Form.FIRST_ORDER:
            return self.ydot_at(t)
        return self._dense(t, self.v, self.dv, False)

    def vdot_at(self, t):
        """y'' from differentiating the dense output of v (Lienard form only)."""
        if self.problem.form is Form.FIRST_ORDER:
            raise ValueError("y'' is not carried by first-order runs")
        return self._dense(t, self.v, self.dv, True)


def _as_pair(prob: OdeProblem, Y) -> tuple[float, float]:
    if isinstance(Y, OscillatorState):
        return Y.y, (Y.v if prob.params.m > 0 else 0.0)
    arr = np.atleast_1d(np.asarray(Y, dtype=float))
    if prob.params.m > 0:
        if arr.size != 2:
            raise ValueError("m > 0 needs a (y, v) pair")
        return float(arr[0]), float(arr[1])
    return float(arr[0]), 0.0


def step_count(span: float, h: float) -> int:
    return max(1, math.ceil(span / h - 1e-9))


def propagate(prob: OdeProblem, state0: OscillatorState, t1: float, h: float | None = None,
              kernels=None) -> Trajectory:
    """Classical RK4 from ``state0.t`` to exactly ``t1``.

    ``h`` (default omega0 / 2048) is reduced so it divides ``t1 - state0.t``.
    """
    s = state0.t
    if not t1 > s:
        raise ValueError("t1 must exceed the initial time")
    span = t1 - s
    n = step_count(span, h or prob.default_h)
    hh = span / n
    y0, v0 = _as_pair(prob, state0)
    alpha, k, _ = prob.coefficients
    bc = prob.force.bytecode
    kern = kernels or _backend.get_kernels()
    ys, vs, dys, dvs, done = kern.rk4_path(bc.code, bc.consts, prob.form.value, alpha, k,
                                           prob.drive_samples(s, hh, n), hh, n, y0, v0)
    if done < n:
        raise IntegrationError("oscillator state blew up", s + done * hh)
    return Trajectory(prob, s, hh, ys, vs, dys, dvs)


def propagator_U(prob: OdeProblem, s: float, t: float, Y0, h: float | None = None) -> np.ndarray:
    """Endpoint of the solution started from ``Y0`` at time ``s``, evaluated at ``t``."""
    if t < s:
        raise ValueError("U(t, s) needs t >= s")
    y0, v0 = _as_pair(prob, Y0)
    if t == s:
        return np.array([y0, v0]) if prob.params.m > 0 else np.array([y0])
    tr = propagate(prob, OscillatorState(s, y0, v0), t, h)
    return np.array([tr.y[-1], tr.v[-1]]) if prob.params.m > 0 else np.array([tr.y[-1]])


def energy(prob: OdeProblem, state=None, *, y=None, v=None):
    """E = m v^2 / 2 + V(y); accepts an OscillatorState or arrays via keywords."""
    if state is not None:
        y, v = state.y, state.v
    v = 0.0 if v is None else v
    return 0.5 * prob.params.m * np.square(v) + prob.force.potential(y)


@dataclass
class EnergyReport:
    margin: float
    passed: bool
    tol: float
    series: np.ndarray


def energy_inequality_check(traj: Trajectory, tol: float = 1e-6) -> EnergyReport:
    """max_t [E(t) - E(0) - (a kappa / 2) int_0^t p'(a s)^2 ds] over the knots."""
    prob = traj.problem
    if prob.params.m <= 0:
        raise ValueError("the energy inequality is derived for m > 0")
    a, kappa = prob.params.a, prob.params.kappa
    E = energy(prob, y=traj.y, v=traj.v)
    tm = traj.t0 + traj.h * (np.arange(traj.n) + 0.5)
    pk = np.square(prob.drive.deriv(a * traj.t))
    pm = np.square(prob.drive.deriv(a * tm))
    cell = traj.h / 6.0 * (pk[:-1] + 4.0 * pm + pk[1:])
    supply = 0.5 * a * kappa * np.concatenate([[0.0], np.cumsum(cell)])
    series = E - E[0] - supply
    margin = float(np.max(series))
    return EnergyReport(margin, margin <= tol, tol, series)


def lipschitz_check(prob: OdeProblem, y0_a, y0_b, tau: float, h: float | None = None,
                    t0: float = 0.0) -> float:
    """(||y_a' - y_b'||_{L2(0,tau)} + max |y_a - y_b|) / |Y_a(0) - Y_b(0)|."""
    ya, va = _as_pair(prob, y0_a)
    yb, vb = _as_pair(prob, y0_b)
    gap0 = math.hypot(ya - yb, va - vb)
    if gap0 == 0:
        raise ValueError("seeds must differ")
    ta = propagate(prob, OscillatorState(t0, ya, va), t0 + tau, h)
    tb = propagate(prob, OscillatorState(t0, yb, vb), t0 + tau, h)
    dd = ta.dy - tb.dy
    l2 = math.sqrt(max(0.0, float(simpson(dd * dd, dx=ta.h))))
    return (l2 + float(np.max(np.abs(ta.y - tb.y)))) / gap0


def growth_sups(prob: OdeProblem, state0: OscillatorState, taus, h: float | None = None):
    """sup_{[0, tau]} (m |y'| + |y|) for each tau, from one run to max(taus)."""
    taus = np.asarray(sorted(taus), dtype=float)
    tr = propagate(prob, state0, state0.t + taus[-1], h)
    g = prob.params.m * np.abs(tr.v) + np.abs(tr.y)
    run = np.maximum.accumulate(g)
    idx = np.minimum(np.round(taus / tr.h).astype(int), tr.n)
    return run[idx]
