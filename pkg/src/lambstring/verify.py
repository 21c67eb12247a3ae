"""Invariant suite behind ``lambstring verify``."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import pipeline
from .config import Scenario
from .field import jump_residual, limit_profile, reconstruct, seam_gaps, wave_residual
from .oscillator import energy_inequality_check, propagator_U
from .poincare import periodicity_defect
from .reduction import split

ORDER_BAND = (12.0, 20.0)


@dataclass
class Check:
    name: str
    passed: bool
    value: float | None
    threshold: float | str | None
    note: str = ""

    def to_dict(self) -> dict:
        d = asdict(self)
        if isinstance(d["value"], float) and not math.isfinite(d["value"]):
            d["value"] = str(d["value"])
        return d


def _le(name, value, bound, note=""):
    value = float(value)
    return Check(name, bool(value <= bound), value, bound, note)


def rk4_order(scn: Scenario) -> Check:
    """Endpoint error ratio at h and h/2 against an h/32 reference, one forcing period.

    The probe step is fixed at omega0 / 64 so the check reflects the integrator,
    not the configured step (which may sit at the rounding floor or be very coarse).
    """
    prob = scn.problem
    w = prob.omega0
    h = w / 64
    Y0 = pipeline.state0(scn)
    ref = propagator_U(prob, 0.0, w, Y0, h / 32)
    e1 = float(np.max(np.abs(propagator_U(prob, 0.0, w, Y0, h) - ref)))
    e2 = float(np.max(np.abs(propagator_U(prob, 0.0, w, Y0, h / 2) - ref)))
    if e1 <= 1e-13 * (1 + float(np.max(np.abs(ref)))):
        return Check("rk4_order", True, 0.0, list(ORDER_BAND), "solution reproduced exactly")
    ratio = e1 / e2 if e2 > 0 else math.inf
    return Check("rk4_order", ORDER_BAND[0] <= ratio <= ORDER_BAND[1], ratio, list(ORDER_BAND),
                 f"h = {h:.6g}")


def semigroup(scn: Scenario) -> list[Check]:
    prob = scn.problem
    w = prob.omega0
    Y0 = pipeline.state0(scn)
    r, s, t = 0.0, 0.37 * w, 1.71 * w
    direct = propagator_U(prob, r, t, Y0, scn.h)
    composed = propagator_U(prob, s, t, propagator_U(prob, r, s, Y0, scn.h), scn.h)
    shifted = propagator_U(prob, s + w, t + w, Y0, scn.h)
    plain = propagator_U(prob, s, t, Y0, scn.h)
    return [_le("semigroup", np.max(np.abs(direct - composed)), 1e-8),
            _le("period_shift", np.max(np.abs(shifted - plain)), 1e-8)]


def run_checks(scn: Scenario) -> list[Check]:
    prob = scn.problem
    params = scn.params
    a = params.a
    w = prob.omega0
    periods = scn.numerics["horizon_periods"]
    T = periods * w
    x = pipeline.grid(scn)
    checks = [rk4_order(scn)]
    checks += semigroup(scn)

    traj = pipeline.trajectory(scn, T)
    tm = 0.5 * T + 0.123 * w
    fr = pipeline.frame(scn, traj, tm, x)
    i0 = int(np.flatnonzero(x == 0.0)[0]) if (x == 0.0).any() else None
    if i0 is not None:
        same = fr.u[i0] == traj.y_at(tm)
        checks.append(Check("u_at_origin_is_y", bool(same), float(abs(fr.u[i0] - traj.y_at(tm))),
                            0.0))

    f0 = pipeline.frame(scn, traj, 0.0, x)
    checks.append(_le("initial_displacement", np.max(np.abs(f0.u - scn.data.u0(x))), 1e-12))
    off = x != 0.0
    checks.append(_le("initial_velocity", np.max(np.abs(f0.u_t - scn.data.u1(x))[off]), 1e-12,
                      "x = 0 excluded: y' may jump at t = 0"))

    if scn.incoming is None:
        sp = split(scn.data, params)
        gaps = seam_gaps(sp, traj, tm)
        checks.append(_le("seam_continuity", max(gaps.values()), 1e-9))
        other = reconstruct(sp.gauge(0.37, -1.25), traj, tm, x)
        checks.append(_le("gauge_invariance", np.max(np.abs(other.u - fr.u)), 1e-12))

    probes = np.linspace(0.0, T, 65)[1:]
    xs = np.array([-1.0, 0.0, 1.0])
    jr = max(jump_residual(params, scn.force, pipeline.frame(scn, traj, t, xs), traj)
             for t in probes)
    checks.append(_le("jump_residual", jr, 1e-5 if params.m > 0 else 1e-6))

    dx = x[1] - x[0]
    ht = dx / a
    frames = [pipeline.frame(scn, traj, tm + s * ht, x) for s in (-1, 0, 1)]
    checks.append(_le("wave_residual", wave_residual(frames, params, ht), 1e-6,
                      "h_x = a h_t"))

    if params.m > 0:
        rep = energy_inequality_check(traj)
        checks.append(_le("energy_inequality", rep.margin, 1e-6))

    lim = pipeline.find_limit(scn)
    tol = scn.numerics["tol"]
    checks.append(Check("fixed_point_found", lim.converged,
                        float(lim.newton.residual if lim.newton else lim.iteration.residual), tol))
    if lim.converged:
        if params.m == 0:
            checks.append(Check("monotone_iterates", bool(lim.iteration.monotone), None, None))
        checks.append(_le("periodic_orbit", periodicity_defect(prob, lim.Y, 3, scn.h), 10 * tol))
        n = math.ceil(scn.numerics["R"] / (a * w)) + 1
        trp = pipeline.trajectory(scn, (n + 2) * w, lim.state)
        t1 = (n + 0.31) * w
        xs = x[np.abs(x) < a * t1]
        fa = pipeline.limit_frame(scn, trp, lim.Y, t1, xs)
        fb = pipeline.limit_frame(scn, trp, lim.Y, t1 + w, xs)
        checks.append(_le("limit_time_periodicity", np.max(np.abs(fa.u - fb.u)), 1e-7))
        if scn.incoming is not None:
            prof = pipeline.limit_frame(scn, trp, lim.Y, 0.0, x)
            gap = np.max(np.abs(prof.u - limit_profile(scn.incoming, float(lim.Y[0]), x)))
            checks.append(_le("limit_profile", gap, 1e-8))
    return checks


def report(checks: list[Check]) -> dict:
    return {"passed": all(c.passed for c in checks), "checks": [c.to_dict() for c in checks]}

