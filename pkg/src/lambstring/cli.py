"""Command-line entry point: ``lambstring {simulate,poincare,attractor,limit-amplitude,verify}``."""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import pipeline
from ._backend import BACKEND
from .config import ConfigError, Scenario, load_scenario
from .field import (
    build_frames,
    field_convergence,
    jump_residual,
    limit_profile,
    seam_gaps,
    wave_residual,
)
from .force import CoercivityError, classify, coercivity
from .oscillator import IntegrationError, OdeProblem, energy_inequality_check
from .poincare import (
    DissipativityError,
    NoFixedPointError,
    attractor_sample,
    find_bracket,
    fixed_point_newton_m,
    fixed_points_m0,
)
from .reduction import split
from .verify import report, run_checks

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_CONFIG = 2
EXIT_BLOWUP = 3
EXIT_NO_CONVERGENCE = 4

COMMANDS = ("simulate", "poincare", "attractor", "limit-amplitude", "verify")


class CommandFailed(Exception):
    def __init__(self, code: int, message: str, results: dict | None = None):
        super().__init__(message)
        self.code = code
        self.results = results or {}


# ------------------------------------------------------------------ output

def _clean(obj):
    """JSON-safe copy: numpy scalars/arrays to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj) if math.isfinite(obj) else None
    return obj


class Output:
    def __init__(self, root: str | Path, command: str):
        self.root = Path(root)
        self.prefix = command.replace("-", "_")
        self.files: dict[str, str] = {}

    def path(self, name: str, ext: str) -> Path:
        self.root.mkdir(parents=True, exist_ok=True)
        return self.root / f"{self.prefix}_{name}.{ext}"

    def csv(self, name: str, columns: list[str], rows) -> str:
        p = self.path(name, "csv")
        np.savetxt(p, np.asarray(rows, dtype=float).reshape(-1, len(columns)), fmt="%.17g",
                   delimiter=",", header=",".join(columns), comments="")
        self.files[name] = str(p)
        return str(p)

    def json(self, name: str, obj: dict) -> str:
        p = self.path(name, "json")
        p.write_text(json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n")
        return str(p)


def _params_dict(scn: Scenario | None) -> dict | None:
    if scn is None:
        return None
    p = scn.params
    return {"mu": p.mu, "kappa": p.kappa, "m": p.m, "a": p.a, "k": p.k, "c": p.c,
            "force": scn.force.source, "period": scn.period}


# ------------------------------------------------------------------ helpers

def opial_q(prob: OdeProblem) -> float:
    """Largest forcing amplitude expressed in units of F."""
    return prob.forcing_bound() / prob.coefficients[0]


def _require_coercive(scn: Scenario) -> None:
    ok, detail = coercivity(scn.force)
    if not ok:
        rep = classify(scn.force, max(abs(scn.force.y_lo), abs(scn.force.y_hi)), 1.0,
                       scn.params.k, opial_q(scn.problem), c=scn.params.c)
        raise CommandFailed(EXIT_CONFIG, f"force {scn.force.source!r} is not coercive",
                            {"classification": rep.to_dict()})


def _traj_rows(traj) -> np.ndarray:
    if traj.problem.params.m > 0:
        return np.column_stack([traj.t, traj.y, traj.v])
    return np.column_stack([traj.t, traj.y])


# ------------------------------------------------------------------ commands

def cmd_simulate(scn: Scenario, out: Output) -> dict:
    _require_coercive(scn)
    prob = scn.problem
    w = prob.omega0
    T = scn.numerics["horizon_periods"] * w
    traj = pipeline.trajectory(scn, T)
    cols = ["t", "y", "v"] if scn.params.m > 0 else ["t", "y"]
    out.csv("trajectory", cols, _traj_rows(traj))

    times = scn.numerics["frame_times"]
    times = [0.0, 0.5 * T, T] if times is None else [t for t in times if t <= T]
    x = pipeline.grid(scn)
    frames = build_frames(pipeline.frame, times, scn, traj, x)
    for i, fr in enumerate(frames):
        out.csv(f"frame_{i:02d}", ["x", "u", "u_t", "u_x"], fr.as_columns())

    probes = sorted(set(times) | set(np.linspace(0.0, T, 65)[1:]))
    xs = np.array([-1.0, 0.0, 1.0])
    jr = max(jump_residual(scn.params, scn.force, pipeline.frame(scn, traj, t, xs), traj)
             for t in probes)
    dx = x[1] - x[0]
    ht = 0.5 * dx / scn.params.a
    tm = 0.5 * T
    wr = wave_residual([pipeline.frame(scn, traj, tm + s * ht, x) for s in (-1, 0, 1)],
                       scn.params, ht)
    seams = None if scn.incoming else seam_gaps(split(scn.data, scn.params), traj, T)
    energy = energy_inequality_check(traj).margin if scn.params.m > 0 else None
    tail = traj.t >= 0.5 * T
    M = max(float(np.max(np.abs(traj.y[tail]))), 1e-12)
    N = max(float(np.max(np.abs(traj.v_at(traj.t[tail])))), 1e-12)
    rep = classify(scn.force, M, N, scn.params.k, opial_q(prob), c=scn.params.c)
    return {
        "horizon": T, "h": traj.h, "steps": traj.n,
        "final_state": [traj.y[-1], traj.v[-1]] if scn.params.m > 0 else [traj.y[-1]],
        "frame_times": times,
        "energy_margin": energy,
        "jump_residual_max": jr,
        "wave_residual": wr,
        "seam_gaps": seams,
        "classification": rep.to_dict(),
    }


def cmd_poincare(scn: Scenario, out: Output) -> dict:
    _require_coercive(scn)
    pmap = pipeline.poincare_map(scn)
    lim = pipeline.find_limit(scn, pmap)
    it = lim.iteration
    hist = np.atleast_2d(it.history.T).T if it.history.ndim == 1 else it.history
    n = np.arange(hist.shape[0])
    cols = ["n", "y", "v"] if pmap.dim == 2 else ["n", "y"]
    out.csv("iterates", cols, np.column_stack([n, hist]))
    results = {
        "omega0": pmap.omega0, "steps_per_period": pmap.steps, "h": pmap.h,
        "iteration": {"converged": it.converged, "monotone": it.monotone,
                      "iterations": int(hist.shape[0] - 1), "limit": np.atleast_1d(it.Y),
                      "residual": it.residual, "blew_up": it.blew_up},
        "bracket": None, "sign_table": None, "fixed_points": [],
    }
    if it.blew_up:
        raise CommandFailed(EXIT_BLOWUP, "Poincare iterates blew up", results)
    if pmap.dim == 1:
        try:
            bracket = find_bracket(scn.problem)
        except CoercivityError as exc:
            raise CommandFailed(EXIT_CONFIG, str(exc), results) from exc
        results["bracket"] = bracket.to_dict()
        try:
            fps = fixed_points_m0(pmap, bracket, scn.numerics["bracket_grid"], scn.numerics["tol"])
        except NoFixedPointError as exc:
            raise CommandFailed(EXIT_NO_CONVERGENCE, str(exc), results) from exc
        results["fixed_points"] = [p.to_dict() for p in fps.points]
        results["sign_table"] = fps.sign_table
        if not it.converged:
            raise CommandFailed(EXIT_NO_CONVERGENCE,
                                f"no convergence within {scn.numerics['n_iter']} iterations",
                                results)
    else:
        results["fixed_points"] = [lim.newton.to_dict()]
    return results


def cmd_attractor(scn: Scenario, out: Output) -> dict:
    if scn.params.m <= 0:
        raise CommandFailed(EXIT_CONFIG, "attractor needs m > 0")
    _require_coercive(scn)
    pmap = pipeline.poincare_map(scn)
    num = scn.numerics
    att = attractor_sample(pmap, burn_in=num["burn_in"], keep=num["keep"], grid=num["grid"])
    out.csv("cloud", ["y", "v"], att.cloud)
    M, N = att.flow_box
    rep = classify(scn.force, max(M, 1e-12), max(N, 1e-12), scn.params.k, opial_q(scn.problem),
                   c=scn.params.c)
    singleton = att.diameter < num["tol_attr"]
    fp = None
    if singleton:
        fp = fixed_point_newton_m(pmap, att.cloud.mean(axis=0), num["tol"]).to_dict()
    return {"attractor": att.to_dict(), "singleton": singleton, "tol_attr": num["tol_attr"],
            "defect_below_tol": att.invariance_defect < num["tol_attr"],
            "fixed_point": fp, "classification": rep.to_dict()}


def cmd_limit_amplitude(scn: Scenario, out: Output) -> dict:
    if scn.incoming is None:
        raise CommandFailed(EXIT_CONFIG, "limit-amplitude needs an incoming_wave block")
    _require_coercive(scn)
    lim = pipeline.find_limit(scn)
    results = {"ybar": lim.Y, "limit_converged": lim.converged}
    if lim.iteration.blew_up:
        raise CommandFailed(EXIT_BLOWUP, "Poincare iterates blew up", results)
    if not lim.converged and scn.params.m == 0:
        raise CommandFailed(EXIT_NO_CONVERGENCE, "no convergence to a periodic regime", results)
    w = scn.problem.omega0
    n_per = scn.numerics["horizon_periods"]
    T = n_per * w
    traj = pipeline.trajectory(scn, T)
    trp = pipeline.trajectory(scn, T, lim.state)
    x = pipeline.grid(scn)
    curve = []
    for n in range(1, n_per + 1):
        t = n * w
        fu = pipeline.frame(scn, traj, t, x)
        fp = pipeline.limit_frame(scn, trp, lim.Y, t, x)
        curve.append((n, t, field_convergence(fu, fp, scn.numerics["R"])))
    out.csv("curve", ["n", "t", "metric"], curve)
    fu = pipeline.frame(scn, traj, T, x)
    fp = pipeline.limit_frame(scn, trp, lim.Y, T, x)
    out.csv("frame_u", ["x", "u", "u_t", "u_x"], fu.as_columns())
    out.csv("frame_up", ["x", "u", "u_t", "u_x"], fp.as_columns())
    q0 = float(lim.Y[0])
    q = limit_profile(scn.incoming, q0, x)
    up0 = pipeline.limit_frame(scn, trp, lim.Y, 0.0, x).u
    out.csv("profile", ["x", "q", "u_p_t0"], np.column_stack([x, q, up0]))
    metrics = np.array([c[2] for c in curve])
    results.update({
        "q0": q0, "p0": scn.incoming.p0,
        "curve": [{"n": n, "t": t, "metric": m} for n, t, m in curve],
        "monotone_decreasing": bool(np.all(np.diff(metrics) < 0)),
        "final_metric": float(metrics[-1]),
        "profile_max_gap": float(np.max(np.abs(q - up0))),
    })
    return results


def cmd_verify(scn: Scenario, out: Output) -> dict:
    _require_coercive(scn)
    rep = report(run_checks(scn))
    if not rep["passed"]:
        failed = [c["name"] for c in rep["checks"] if not c["passed"]]
        raise CommandFailed(EXIT_VERIFY, "failed: " + ", ".join(failed), rep)
    return rep


HANDLERS = {
    "simulate": cmd_simulate,
    "poincare": cmd_poincare,
    "attractor": cmd_attractor,
    "limit-amplitude": cmd_limit_amplitude,
    "verify": cmd_verify,
}


# ------------------------------------------------------------------ argv

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lambstring",
                                 description="String + oscillator: periodic regimes and limits.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True,
                    help="JSON scenario file, or demo:NAME for a shipped demo")
    ap.add_argument("--out", help="output directory (overrides output.dir)")
    ap.add_argument("--h", type=float, help="RK4 step")
    ap.add_argument("--R", type=float, help="half-width of the x window")
    ap.add_argument("--n-iter", type=int, dest="n_iter", help="max Poincare iterations")
    ap.add_argument("--grid", type=int, help="seed grid size per axis (attractor)")
    ap.add_argument("--burn-in", type=int, dest="burn_in", help="burn-in periods (attractor)")
    ap.add_argument("--tol", type=float, help="fixed-point tolerance")
    return ap


def run(command: str, config: str, **overrides) -> tuple[int, dict]:
    """Run one command; returns (exit code, summary dict).  Never raises for model errors."""
    scn = None
    out_root = overrides.get("out") or "out"
    out = Output(out_root, command)
    code, message, results = EXIT_OK, None, {}
    try:
        scn = load_scenario(config, **overrides)
        out = Output(scn.out_dir, command)
        results = HANDLERS[command](scn, out)
    except ConfigError as exc:
        code, message = EXIT_CONFIG, str(exc)
    except CommandFailed as exc:
        code, message, results = exc.code, str(exc), exc.results
    except (IntegrationError, DissipativityError) as exc:
        code, message = EXIT_BLOWUP, str(exc)
    summary = {
        "command": command,
        "scenario": scn.name if scn else None,
        "backend": BACKEND,
        "exit_code": code,
        "status": "ok" if code == EXIT_OK else "error",
        "message": message,
        "params": _params_dict(scn),
        "files": dict(out.files),
        "results": results,
    }
    if scn is not None or overrides.get("out"):
        out.json("summary", summary)
    return code, _clean(summary)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {k: getattr(args, k) for k in ("out", "h", "R", "n_iter", "grid", "burn_in", "tol")}
    code, summary = run(args.command, args.config, **overrides)
    status = summary["status"]
    line = f"{args.command}: {status}"
    if summary["message"]:
        line += f" ({summary['message']})"
    print(line, file=sys.stderr if code else sys.stdout)
    return code


if __name__ == "__main__":
    sys.exit(main())
