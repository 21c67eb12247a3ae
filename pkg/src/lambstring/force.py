"""Force fields F(y): evaluation, potential energy and structural conditions."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .expr import (
    Bytecode,
    EvaluationError,
    Expr,
    compile_expr,
    differentiate,
    evaluate,
    parse_force,
    to_string,
)

COERCIVITY_LIMIT = 1e6


class CoercivityError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ForceField:
    """A parsed force with exact first/second derivatives and a cached potential.

    ``V(y) = -int_0^y F`` is tabulated on a uniform grid over
    ``[y_lo, y_hi]`` (with 0 on the grid) by cell-wise Simpson quadrature.
    """

    f: Expr
    y_lo: float = -10.0
    y_hi: float = 10.0
    cells: int = 4096
    fprime: Expr = field(init=False)
    fsecond: Expr = field(init=False)
    bytecode: Bytecode = field(init=False)
    _grid: np.ndarray = field(init=False, repr=False)
    _vtab: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not self.y_lo < 0 < self.y_hi:
            raise ValueError("working interval must contain 0 in its interior")
        fp = differentiate(self.f)
        object.__setattr__(self, "fprime", fp)
        object.__setattr__(self, "fsecond", differentiate(fp))
        object.__setattr__(self, "bytecode", compile_expr(self.f))
        dy = (self.y_hi - self.y_lo) / self.cells
        j_lo = math.floor(self.y_lo / dy)
        j_hi = math.ceil(self.y_hi / dy)
        grid = np.arange(j_lo, j_hi + 1) * dy
        fa = self(grid)
        fm = self(0.5 * (grid[:-1] + grid[1:]))
        cell = dy / 6.0 * (fa[:-1] + 4.0 * fm + fa[1:])
        cum = np.concatenate([[0.0], np.cumsum(cell)])
        i0 = -j_lo
        vtab = -(cum - cum[i0])
        grid.setflags(write=False)
        vtab.setflags(write=False)
        object.__setattr__(self, "_grid", grid)
        object.__setattr__(self, "_vtab", vtab)

    @classmethod
    def from_string(cls, src: str, **kw) -> ForceField:
        return cls(parse_force(src), **kw)

    @property
    def source(self) -> str:
        return to_string(self.f)

    def __call__(self, y):
        return evaluate(self.f, y)

    def derivative(self, y):
        return evaluate(self.fprime, y)

    def second_derivative(self, y):
        return evaluate(self.fsecond, y)

    def potential(self, y):
        """V(y) with V(0) = 0; Simpson table plus a local panel, extended outside the table."""
        scalar = np.ndim(y) == 0
        yy = np.atleast_1d(np.asarray(y, dtype=float))
        out = np.empty_like(yy)
        g = self._grid
        dy = g[1] - g[0]
        inside = (yy >= g[0]) & (yy <= g[-1])
        if inside.any():
            yi = yy[inside]
            j = np.clip(np.rint((yi - g[0]) / dy).astype(int), 0, g.size - 1)
            base = g[j]
            mid = 0.5 * (base + yi)
            part = (yi - base) / 6.0 * (self(base) + 4.0 * self(mid) + self(yi))
            out[inside] = self._vtab[j] - part
        for idx in np.flatnonzero(~inside):
            out[idx] = self._extend(yy[idx])
        return float(out[0]) if scalar else out

    def _extend(self, y: float) -> float:
        g = self._grid
        dy = g[1] - g[0]
        edge, v_edge = (g[-1], self._vtab[-1]) if y > g[-1] else (g[0], self._vtab[0])
        n = max(2, 2 * math.ceil(abs(y - edge) / dy))
        s = np.linspace(edge, y, n + 1)
        fs = self(s)
        hh = (y - edge) / n
        integral = hh / 3.0 * (fs[0] + fs[-1] + 4.0 * fs[1:-1:2].sum() + 2.0 * fs[2:-1:2].sum())
        return float(v_edge - integral)


def make_force(src: str, y_lo: float = -10.0, y_hi: float = 10.0) -> ForceField:
    return ForceField(parse_force(src), y_lo, y_hi)


def potential(F: ForceField, y):
    return F.potential(y)


def _tail_samples(start: float, limit: float = COERCIVITY_LIMIT) -> np.ndarray:
    start = max(abs(start), 1.0)
    n = max(2, math.ceil(math.log2(limit / start)) + 1)
    return np.unique(np.concatenate([start * 2.0 ** np.arange(n), [limit]]))


def coercivity(F: ForceField) -> tuple[bool, dict]:
    """Sampled check that F(y) -> -inf as y -> +inf and F(y) -> +inf as y -> -inf.

    Beyond the working interval, -F(s) and F(-s) must be non-decreasing along
    geometrically growing s and must grow by a factor >= 10 out to 1e6.
    """
    s = _tail_samples(max(abs(F.y_lo), abs(F.y_hi)))
    with np.errstate(all="ignore"):
        right = -evaluate(F.f, s, overflow_ok=True)
        left = evaluate(F.f, -s, overflow_ok=True)
    ok = True
    detail = {}
    for name, vals in (("right", right), ("left", left)):
        finite_or_inf = not np.isnan(vals).any()
        mono = finite_or_inf and bool(np.all(np.diff(vals) >= 0))
        grows = finite_or_inf and vals[-1] > 0 and vals[-1] >= 10.0 * max(1.0, vals[0])
        detail[name] = {"first": float(vals[0]), "last": float(vals[-1]),
                        "monotone": mono, "grows": bool(grows)}
        ok = ok and mono and bool(grows)
    return ok, detail


@dataclass
class ConditionReport:
    F_coercive: bool
    F1: bool
    F2: bool
    F3: bool
    Opial: bool
    witnesses: dict

    def to_dict(self) -> dict:
        return {
            "F_coercive": self.F_coercive,
            "F1": self.F1,
            "F2": self.F2,
            "F2_note": "not falsified on grid" if self.F2 else "falsified on grid",
            "F3": self.F3,
            "Opial": self.Opial,
            "witnesses": self.witnesses,
        }


def classify(F: ForceField, M: float, N: float, k: float, q: float, *, c: float | None = None,
             grid: int = 200) -> ConditionReport:
    """Sample the structural conditions on F.

    ``M``/``N`` bound |y| and |y'| on the absorbing box, ``k`` is the damping
    coefficient of the first-order system (nan when m = 0), ``q`` the largest
    forcing magnitude compared against F at +-infinity, and ``c`` = 1/m.
    """
    if not (M > 0 and N > 0):
        raise ValueError("M and N must be positive")
    w: dict = {}
    coercive, w["coercivity"] = coercivity(F)

    ys = np.linspace(-M, M, 2001)
    fp = F.derivative(ys)
    fpp = F.second_derivative(ys)
    w["max_F_prime"] = float(fp.max())

    # F1: F(y) = -r y with r > 0
    r = -float(F.derivative(0.0))
    f1 = (abs(F(0.0)) <= 1e-12 and r > 0
          and np.allclose(fp, -r, rtol=1e-12, atol=1e-12)
          and np.allclose(fpp, 0.0, atol=1e-12))
    w["F1_r"] = r if f1 else None

    # F2: k^2/2 - 1 <= -c * secant <= 1 and 1 < k^2/2 <= 2
    f2 = False
    if c is not None and math.isfinite(k) and math.isfinite(c):
        yg = np.linspace(-M, M, grid)
        fg = F(yg)
        dy = yg[:, None] - yg[None, :]
        df = fg[:, None] - fg[None, :]
        off = ~np.eye(grid, dtype=bool)
        sec = -c * df[off] / dy[off]
        lo, hi = float(sec.min()), float(sec.max())
        w["F2_secant_range"] = [lo, hi]
        f2 = bool(1.0 < k * k / 2.0 <= 2.0 and k * k / 2.0 - 1.0 <= lo and hi <= 1.0)

    # F3: F' < 0 on |y| <= M, F sgn y <= -beta beyond M, k large enough
    ratio = float(np.max(np.abs(fpp) / np.abs(fp))) if np.all(fp < 0) else math.inf
    k_needed = 0.5 * N * ratio
    w["F3_ratio_max"] = ratio
    w["F3_k_threshold"] = k_needed
    s = np.concatenate([np.linspace(M, 2 * M, 200), _tail_samples(2 * M)])
    with np.errstate(all="ignore"):
        beyond = np.concatenate([evaluate(F.f, s, overflow_ok=True),
                                 -evaluate(F.f, -s, overflow_ok=True)])
    beta = -float(np.max(beyond)) if not np.isnan(beyond).any() else -math.inf
    w["F3_beta"] = beta
    k_ok = math.isfinite(k) and k > k_needed
    f3 = bool(np.all(fp < 0) and beta > 0 and (k_ok or (not math.isfinite(k) and ratio < math.inf)))

    # Opial: F(+inf) < -q, F(-inf) > q
    with np.errstate(all="ignore"):
        hi_val = evaluate(F.f, COERCIVITY_LIMIT, overflow_ok=True)
        lo_val = evaluate(F.f, -COERCIVITY_LIMIT, overflow_ok=True)
    opial = bool(hi_val < -q and lo_val > q)
    w["Opial_limits"] = [float(lo_val), float(hi_val)]
    w["q"] = q
    return ConditionReport(bool(coercive), bool(f1), f2, f3, opial, w)


__all__ = [
    "ForceField",
    "ConditionReport",
    "CoercivityError",
    "EvaluationError",
    "classify",
    "coercivity",
    "make_force",
    "potential",
]
