"""Period map T = U(omega0, 0), its fixed points and attractor."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson
from scipy.spatial import cKDTree

from . import _backend
from .force import CoercivityError
from .model import OscillatorState
from .oscillator import OdeProblem, Trajectory, propagate, step_count

TOL_FP = 1e-10
EXPANSION_CAP = 1e9


class DissipativityError(RuntimeError):
    """An orbit escaped during burn-in; the system did not behave dissipatively."""


class NoFixedPointError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class PoincareMap:
    problem: OdeProblem
    steps: int
    h: float
    table: np.ndarray = field(repr=False)

    @property
    def omega0(self) -> float:
        return self.problem.omega0

    @property
    def dim(self) -> int:
        return 2 if self.problem.params.m > 0 else 1

    def orbits(self, Y0, n_iter: int, record_from: int = 0, kernels=None):
        """Batch iterates; ``Y0`` has shape (B,) for m == 0 or (B, 2) for m > 0.

        Returns ``(records, fail)`` with records of shape (B, n_rec, dim).
        """
        Y0 = np.asarray(Y0, dtype=float)
        if self.dim == 1:
            Y2 = np.column_stack([Y0.reshape(-1), np.zeros(Y0.size)])
        else:
            Y2 = Y0.reshape(-1, 2)
        alpha, k, _ = self.problem.coefficients
        bc = self.problem.force.bytecode
        rec, fail = _backend.poincare_orbits(bc.code, bc.consts, self.problem.form.value, alpha,
                                             k, self.table, self.h, self.steps, n_iter, Y2,
                                             record_from, kernels=kernels)
        return rec[:, :, : self.dim], fail

    def apply(self, Y, n: int = 1):
        """T^n(Y) for a single state (float for m == 0, array (2,) for m > 0)."""
        rec, fail = self.orbits(np.asarray(Y, float).reshape(1, -1) if self.dim == 2
                                else np.array([float(np.asarray(Y).reshape(-1)[0])]), n, n)
        out = rec[0, 0]
        return float(out[0]) if self.dim == 1 else out.copy()

    __call__ = apply

    def apply_many(self, Ys, n: int = 1) -> np.ndarray:
        rec, _ = self.orbits(Ys, n, n)
        return rec[:, 0, 0] if self.dim == 1 else rec[:, 0, :]


def build_map(prob: OdeProblem, h: float | None = None) -> PoincareMap:
    steps = step_count(prob.omega0, h or prob.default_h)
    hh = prob.omega0 / steps
    return PoincareMap(prob, steps, hh, prob.drive_samples(0.0, hh, steps))


# ------------------------------------------------------------------ bracket (m == 0)

@dataclass(frozen=True)
class BracketB:
    y_minus: float
    y_plus: float
    tight_minus: float
    tight_plus: float
    q: float
    margin: float

    def contains(self, y) -> np.ndarray:
        y = np.asarray(y)
        return (y >= self.y_minus) & (y <= self.y_plus)

    def to_dict(self) -> dict:
        return {"y_minus": self.y_minus, "y_plus": self.y_plus, "tight_minus": self.tight_minus,
                "tight_plus": self.tight_plus, "q": self.q, "margin": self.margin}


def find_bracket(prob: OdeProblem, dense: int = 513) -> BracketB:
    """Interval outside which alpha F(y) -+ q has the inward sign.

    Endpoints start at the force's working interval, double until the sampled
    tail condition holds, then shrink by bisection and receive a margin of
    1e-3 of the width (at least 1e-6).
    """
    alpha = prob.coefficients[0]
    q = prob.forcing_bound()
    F = prob.force

    def feff(y):
        with np.errstate(all="ignore"):
            from .expr import evaluate
            return alpha * evaluate(F.f, y, overflow_ok=True)

    def ok(y, outer, sign):
        # sign=+1: alpha F(s) + q < 0 for s >= y; sign=-1: alpha F(s) - q > 0 for s <= y
        s = np.concatenate([np.linspace(y, outer, dense), outer * 2.0 ** np.arange(1, 12)])
        vals = feff(s)
        if sign > 0:
            return bool(np.all(vals + q < 0))
        return bool(np.all(vals - q > 0))

    def edge(start, sign):
        y = start
        while not ok(y, y * 2.0, sign):
            y *= 2.0
            if abs(y) > EXPANSION_CAP:
                raise CoercivityError("bracket expansion exceeded 1e9; F is not coercive enough")
        outer = 2.0 * y
        lo, hi = 0.0, y
        while abs(hi - lo) > 1e-12 * max(1.0, abs(hi)):
            mid = 0.5 * (lo + hi)
            if ok(mid, outer, sign):
                hi = mid
            else:
                lo = mid
        return hi

    yp = edge(max(F.y_hi, 1e-3), +1)
    ym = edge(min(F.y_lo, -1e-3), -1)
    margin = max(1e-3 * (yp - ym), 1e-6)
    return BracketB(ym - margin, yp + margin, ym, yp, q, margin)


# ------------------------------------------------------------------ fixed points

@dataclass
class FixedPoint:
    Y: float | np.ndarray
    stability: str
    residual: float
    jacobian: np.ndarray | None = None
    spectral_radius: float | None = None
    newton_steps: int = 0

    def to_dict(self) -> dict:
        d = {
            "Y": float(self.Y) if np.ndim(self.Y) == 0 else list(map(float, self.Y)),
            "stability": self.stability,
            "residual": float(self.residual),
        }
        if self.jacobian is not None:
            d["jacobian"] = self.jacobian.tolist()
            d["spectral_radius"] = self.spectral_radius
            d["newton_steps"] = self.newton_steps
        return d


@dataclass
class FixedPointSet:
    points: list[FixedPoint]
    sign_table: list[dict] = field(default_factory=list)

    @property
    def values(self) -> list:
        return [p.Y for p in self.points]

    @property
    def z_minus(self):
        return self.points[0].Y if self.points else None

    @property
    def z_plus(self):
        return self.points[-1].Y if self.points else None


def fixed_points_m0(pmap: PoincareMap, bracket: BracketB, grid_n: int = 512,
                    tol_fp: float = TOL_FP) -> FixedPointSet:
    """All sign changes of g(y) = T(y) - y on a grid over the bracket, refined by bisection.

    A root is attracting when g goes from + to - (T is increasing), repelling
    for - to +, and neutral/unknown for a touching zero.
    """
    if pmap.dim != 1:
        raise ValueError("fixed_points_m0 needs m == 0")
    ys = np.linspace(bracket.y_minus, bracket.y_plus, grid_n)
    g = pmap.apply_many(ys) - ys
    sg = np.sign(g)
    table = []
    points = []

    def g_of(y):
        return pmap(y) - y

    def bisect(lo, hi, glo):
        while True:
            mid = 0.5 * (lo + hi)
            gm = g_of(mid)
            if gm == 0.0 or (abs(gm) <= 0.5 * tol_fp and hi - lo <= tol_fp):
                return float(mid), float(abs(gm))
            if hi - lo <= 4 * np.spacing(max(abs(lo), abs(hi), 1e-300)):
                return float(mid), float(abs(gm))
            if np.sign(gm) == np.sign(glo):
                lo, glo = mid, gm
            else:
                hi = mid

    i = 0
    while i < grid_n:
        if sg[i] == 0:
            left = sg[i - 1] if i > 0 else 0
            j = i
            while j + 1 < grid_n and sg[j + 1] == 0:
                j += 1
            right = sg[j + 1] if j + 1 < grid_n else 0
            points.append(FixedPoint(float(ys[i]), _stability_1d(left, right), abs(float(g[i]))))
            table.append({"y_left": float(ys[max(i - 1, 0)]), "y_right": float(ys[min(j + 1, grid_n - 1)]),
                          "sign_left": int(left), "sign_right": int(right)})
            i = j + 1
            continue
        if i + 1 < grid_n and sg[i + 1] != 0 and sg[i] != sg[i + 1]:
            root, res = bisect(ys[i], ys[i + 1], g[i])
            points.append(FixedPoint(root, _stability_1d(sg[i], sg[i + 1]), res))
            table.append({"y_left": float(ys[i]), "y_right": float(ys[i + 1]),
                          "sign_left": int(sg[i]), "sign_right": int(sg[i + 1])})
        i += 1
    if not points:
        k = int(np.argmin(np.abs(g)))
        if abs(g[k]) <= tol_fp:
            points.append(FixedPoint(float(ys[k]), "neutral/unknown", abs(float(g[k]))))
        else:
            raise NoFixedPointError(
                f"T(y) - y keeps one sign on [{bracket.y_minus}, {bracket.y_plus}]")
    return FixedPointSet(points, table)


def _stability_1d(left, right) -> str:
    if left > 0 and right < 0:
        return "attracting"
    if left < 0 and right > 0:
        return "repelling"
    return "neutral/unknown"


@dataclass
class IterationResult:
    Y: float | np.ndarray
    history: np.ndarray
    converged: bool
    monotone: bool | None
    residual: float
    blew_up: bool = False


def iterate_to_fixed_point(pmap: PoincareMap, Y0, max_n: int = 1000,
                           tol_fp: float = TOL_FP, chunk: int = 64) -> IterationResult:
    """Iterate Y <- T(Y) until successive iterates differ by at most ``tol_fp``."""
    Y = np.asarray(Y0, dtype=float).reshape(pmap.dim)
    hist = [Y.copy()]
    converged = blew_up = False
    while len(hist) - 1 < max_n and not converged:
        n = min(chunk, max_n - (len(hist) - 1))
        rec, fail = pmap.orbits(Y.reshape(1, -1) if pmap.dim == 2 else Y, n, 1)
        if fail[0] >= 0:
            blew_up = True
            break
        for row in rec[0]:
            prev = hist[-1]
            hist.append(row.copy())
            if np.linalg.norm(row - prev) <= tol_fp:
                converged = True
                break
        Y = hist[-1]
    H = np.array(hist)
    monotone = None
    if pmap.dim == 1:
        d = np.diff(H[:, 0])
        big = d[np.abs(d) > tol_fp]
        monotone = bool(np.all(big > 0) or np.all(big < 0))
    last = H[-1] if pmap.dim == 2 else float(H[-1, 0])
    if converged and len(H) > 1:
        residual = float(np.linalg.norm(H[-1] - H[-2]))
    elif blew_up:
        residual = math.inf
    else:
        residual = float(np.linalg.norm(np.asarray(pmap(last)) - np.asarray(last)))
    return IterationResult(last, H if pmap.dim == 2 else H[:, 0], converged, monotone, residual,
                           blew_up)


def jacobian_fd(pmap: PoincareMap, Y) -> np.ndarray:
    Y = np.asarray(Y, dtype=float)
    steps = 1e-6 * (1.0 + np.abs(Y))
    pts = np.vstack([Y, Y + np.diag(steps)])
    img = pmap.apply_many(pts)
    return (img[1:] - img[0]).T / steps


def fixed_point_newton_m(pmap: PoincareMap, Y_seed, tol_fp: float = TOL_FP,
                         max_iter: int = 50) -> FixedPoint:
    """Newton on G(Y) = T(Y) - Y with a forward-difference Jacobian of T.

    A singular Newton matrix falls back to one plain iteration Y <- T(Y).
    Stability comes from the spectral radius of DT at the root.
    """
    if pmap.dim != 2:
        raise ValueError("fixed_point_newton_m needs m > 0")
    Y = np.asarray(Y_seed, dtype=float).copy()
    TY = pmap(Y)
    G = TY - Y
    steps = 0
    while np.linalg.norm(G) > tol_fp and steps < max_iter:
        J = jacobian_fd(pmap, Y)
        A = J - np.eye(2)
        try:
            if abs(np.linalg.det(A)) < 1e-14:
                raise np.linalg.LinAlgError
            Y = Y - np.linalg.solve(A, G)
        except np.linalg.LinAlgError:
            Y = TY
        if not np.all(np.isfinite(Y)):
            break
        TY = pmap(Y)
        G = TY - Y
        steps += 1
    J = jacobian_fd(pmap, Y)
    rho = float(np.max(np.abs(np.linalg.eigvals(J))))
    if rho < 1 - 1e-6:
        stab = "attracting"
    elif rho > 1 + 1e-6:
        stab = "repelling"
    else:
        stab = "neutral/unknown"
    res = float(np.linalg.norm(G))
    if not res <= tol_fp:
        stab = "diverged" if not np.isfinite(res) else stab
    return FixedPoint(Y, stab, res, J, rho, steps)


# ------------------------------------------------------------------ attractor (m > 0)

@dataclass
class AttractorEstimate:
    cloud: np.ndarray
    M_est: float
    N_est: float
    invariance_defect: float
    diameter: float
    seeds: np.ndarray
    final: np.ndarray
    flow_box: tuple[float, float]

    def to_dict(self) -> dict:
        return {"M_est": self.M_est, "N_est": self.N_est,
                "invariance_defect": self.invariance_defect, "diameter": self.diameter,
                "flow_box": list(self.flow_box), "n_points": int(self.cloud.shape[0]),
                "n_seeds": int(self.seeds.shape[0])}


def estimate_box(pmap: PoincareMap, burn_in: int = 30, spread: float | None = None):
    """Sup of |y|, |y'| along the flow after a pilot burn-in from a 3x3 seed grid."""
    F = pmap.problem.force
    r = spread or max(abs(F.y_lo), abs(F.y_hi))
    g = np.linspace(-r, r, 3)
    seeds = np.array([(a, b) for a in g for b in g])
    rec, fail = pmap.orbits(seeds, burn_in, burn_in)
    if (fail >= 0).any():
        raise DissipativityError("pilot orbit escaped during burn-in")
    M = N = 0.0
    for Y in rec[:, 0, :]:
        tr = propagate(pmap.problem, OscillatorState(0.0, Y[0], Y[1]), 2 * pmap.omega0,
                       pmap.h)
        M = max(M, float(np.max(np.abs(tr.y))))
        N = max(N, float(np.max(np.abs(tr.v))))
    return M, N


def seed_grid(M: float, N: float, n: int = 17, factor: float = 1.2) -> np.ndarray:
    ys = np.linspace(-factor * M, factor * M, n)
    vs = np.linspace(-factor * N, factor * N, n)
    return np.array([(a, b) for a in ys for b in vs])


def attractor_sample(pmap: PoincareMap, seeds=None, burn_in: int = 200, keep: int = 100,
                     grid: int = 17) -> AttractorEstimate:
    if pmap.dim != 2:
        raise ValueError("attractor_sample needs m > 0")
    box = estimate_box(pmap)
    if seeds is None:
        seeds = seed_grid(max(box[0], 1e-6), max(box[1], 1e-6), grid)
    seeds = np.asarray(seeds, dtype=float)
    rec, fail = pmap.orbits(seeds, burn_in + keep, burn_in)
    if (fail >= 0).any():
        bad = int(np.flatnonzero(fail >= 0)[0])
        raise DissipativityError(f"seed {seeds[bad].tolist()} blew up at iterate {fail[bad]}")
    cloud = rec[:, :keep, :].reshape(-1, 2)
    images = rec[:, keep, :]
    tree = cKDTree(cloud)
    defect = float(np.max(tree.query(images)[0]))
    lo, hi = cloud.min(axis=0), cloud.max(axis=0)
    diameter = float(np.hypot(*(hi - lo)))
    M_est = float(np.max(np.abs(cloud[:, 0])))
    N_est = float(np.max(np.abs(cloud[:, 1])))
    return AttractorEstimate(cloud, M_est, N_est, defect, diameter, seeds, images, box)


# ------------------------------------------------------------------ convergence

def convergence_metric(traj_y: Trajectory, traj_yp: Trajectory, t: float, R: float,
                       samples_per_step: int = 4) -> float:
    """int_t^{t+R} |y' - y_p'|^2 ds + sup_{[t, t+R]} |y - y_p| from dense output."""
    for tr in (traj_y, traj_yp):
        if not tr.covers(t, t + R):
            raise ValueError(f"trajectory does not cover [{t}, {t + R}]")
    h = min(traj_y.h, traj_yp.h)
    n = 2 * math.ceil(samples_per_step * R / h / 2)
    s = np.linspace(t, t + R, n + 1)
    dd = traj_y.v_at(s) - traj_yp.v_at(s)
    gap = np.abs(traj_y.y_at(s) - traj_yp.y_at(s))
    return float(simpson(dd * dd, x=s)) + float(np.max(gap))


def periodicity_defect(prob: OdeProblem, Y, n_periods: int = 3, h: float | None = None) -> float:
    """max |y(t + omega0) - y(t)| on a dense grid after propagating Y for n_periods."""
    Y = np.atleast_1d(np.asarray(Y, dtype=float))
    v = Y[1] if Y.size > 1 else 0.0
    tr = propagate(prob, OscillatorState(0.0, float(Y[0]), float(v)), n_periods * prob.omega0, h)
    w = prob.omega0
    s = np.linspace(0.0, (n_periods - 1) * w, 4001)
    return float(np.max(np.abs(tr.y_at(s + w) - tr.y_at(s))))
