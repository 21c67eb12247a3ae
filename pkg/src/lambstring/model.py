"""Physical parameters, periodic profiles and initial data for the string system."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TOL_MATCH = 1e-9


class ValidationError(ValueError):
    """Raised when parameters or initial data violate a structural requirement."""


@dataclass(frozen=True)
class StringParams:
    """Line density ``mu``, tension ``kappa`` and attached mass ``m``.

    ``a`` is the wave speed; ``k`` and ``c`` are the damping and inverse-mass
    coefficients of the first-order oscillator system (``nan`` when m == 0).
    """

    mu: float
    kappa: float
    m: float
    a: float = field(init=False)
    k: float = field(init=False)
    c: float = field(init=False)

    def __post_init__(self):
        if not (self.mu > 0 and math.isfinite(self.mu)):
            raise ValidationError(f"mu must be positive, got {self.mu}")
        if not (self.kappa > 0 and math.isfinite(self.kappa)):
            raise ValidationError(f"kappa must be positive, got {self.kappa}")
        if not (self.m >= 0 and math.isfinite(self.m)):
            raise ValidationError(f"m must be non-negative, got {self.m}")
        a = math.sqrt(self.kappa / self.mu)
        object.__setattr__(self, "a", a)
        if self.m > 0:
            object.__setattr__(self, "k", 2.0 * self.kappa / (a * self.m))
            object.__setattr__(self, "c", 1.0 / self.m)
        else:
            object.__setattr__(self, "k", math.nan)
            object.__setattr__(self, "c", math.nan)


def make_params(mu: float, kappa: float, m: float) -> StringParams:
    return StringParams(float(mu), float(kappa), float(m))


@dataclass(frozen=True, eq=False)
class PeriodicProfile:
    """Finite Fourier series ``mean + sum_k cos_k cos(2 pi k z / w) + sin_k sin(2 pi k z / w)``."""

    period: float
    mean: float = 0.0
    cos_coeffs: np.ndarray = field(default_factory=lambda: np.zeros(0))
    sin_coeffs: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        if not self.period > 0:
            raise ValidationError(f"period must be positive, got {self.period}")
        c = np.atleast_1d(np.asarray(self.cos_coeffs, dtype=float))
        s = np.atleast_1d(np.asarray(self.sin_coeffs, dtype=float))
        n = max(c.size, s.size)
        c = np.concatenate([c, np.zeros(n - c.size)])
        s = np.concatenate([s, np.zeros(n - s.size)])
        c.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "cos_coeffs", c)
        object.__setattr__(self, "sin_coeffs", s)
        object.__setattr__(self, "mean", float(self.mean))
        object.__setattr__(self, "period", float(self.period))

    @classmethod
    def constant(cls, period: float, value: float) -> PeriodicProfile:
        return cls(period, value)

    @property
    def order(self) -> int:
        return self.cos_coeffs.size

    @property
    def wavenumbers(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(1, self.order + 1) / self.period

    def eval(self, z):
        """Evaluate at scalar or array ``z``."""
        z = np.asarray(z, dtype=float)
        if self.order == 0:
            out = np.full(z.shape, self.mean)
        else:
            phase = np.multiply.outer(z, self.wavenumbers)
            out = self.mean + np.cos(phase) @ self.cos_coeffs + np.sin(phase) @ self.sin_coeffs
        return float(out) if out.ndim == 0 else out

    __call__ = eval

    def derivative(self) -> PeriodicProfile:
        w = self.wavenumbers
        return PeriodicProfile(self.period, 0.0, self.sin_coeffs * w, -self.cos_coeffs * w)

    def antiderivative(self) -> PeriodicProfile:
        """Periodic part of ``int_0^z (p(s) - mean) ds``; vanishes at z = 0."""
        w = self.wavenumbers
        if self.order == 0:
            return PeriodicProfile(self.period)
        return PeriodicProfile(
            self.period,
            float(np.sum(self.sin_coeffs / w)),
            -self.sin_coeffs / w,
            self.cos_coeffs / w,
        )

    def reflect(self) -> PeriodicProfile:
        """Profile of ``z -> p(-z)``."""
        return PeriodicProfile(self.period, self.mean, self.cos_coeffs, -self.sin_coeffs)

    def scale(self, factor: float) -> PeriodicProfile:
        return PeriodicProfile(
            self.period, factor * self.mean, factor * self.cos_coeffs, factor * self.sin_coeffs
        )

    def shift_mean(self, delta: float) -> PeriodicProfile:
        return PeriodicProfile(self.period, self.mean + delta, self.cos_coeffs, self.sin_coeffs)

    def __add__(self, other: PeriodicProfile) -> PeriodicProfile:
        if not math.isclose(self.period, other.period, rel_tol=1e-14):
            raise ValidationError("cannot add profiles with different periods")
        n = max(self.order, other.order)

        def pad(v):
            return np.concatenate([v, np.zeros(n - v.size)])

        return PeriodicProfile(
            self.period,
            self.mean + other.mean,
            pad(self.cos_coeffs) + pad(other.cos_coeffs),
            pad(self.sin_coeffs) + pad(other.sin_coeffs),
        )

    def __sub__(self, other: PeriodicProfile) -> PeriodicProfile:
        return self + other.scale(-1.0)

    def max_abs(self, samples: int = 8192) -> float:
        """Sampled sup-norm over one period."""
        z = np.linspace(0.0, self.period, samples, endpoint=False)
        return float(np.max(np.abs(self.eval(z))))

    def to_dict(self) -> dict:
        return {
            "mean": self.mean,
            "cos": self.cos_coeffs.tolist(),
            "sin": self.sin_coeffs.tolist(),
        }

    @classmethod
    def from_dict(cls, period: float, d: dict) -> PeriodicProfile:
        return cls(period, d.get("mean", 0.0), d.get("cos", []), d.get("sin", []))


def profile_eval(p: PeriodicProfile, z):
    return p.eval(z)


@dataclass(frozen=True)
class InitialData:
    """Half-line pieces of the initial displacement ``u0`` and velocity ``u1``.

    The ``_plus`` pieces describe x > 0 and the ``_minus`` pieces x < 0; all
    share the period of ``u0_plus``.  ``y1`` is the initial oscillator velocity
    and only matters when m > 0.
    """

    u0_plus: PeriodicProfile
    u0_minus: PeriodicProfile
    u1_plus: PeriodicProfile
    u1_minus: PeriodicProfile
    y1: float = 0.0
    tol_match: float = TOL_MATCH

    def __post_init__(self):
        w = self.u0_plus.period
        for name in ("u0_minus", "u1_plus", "u1_minus"):
            if not math.isclose(getattr(self, name).period, w, rel_tol=1e-14):
                raise ValidationError(f"{name} period differs from u0_plus period {w}")
        tol = self.tol_match
        gap = abs(self.u0_plus.eval(0.0) - self.u0_minus.eval(0.0))
        if gap > tol:
            raise ValidationError(f"u0 is discontinuous at the origin (gap {gap:.3e})")
        dgap = abs(self.u0_plus.derivative().eval(0.0) - self.u0_minus.derivative().eval(0.0))
        if dgap > tol:
            raise ValidationError(f"u0' is discontinuous at the origin (gap {dgap:.3e})")
        drift = abs(self.u1_plus.mean + self.u1_minus.mean)
        if drift > tol:
            raise ValidationError(
                f"mean(u1 on x>0) + mean(u1 on x<0) = {drift:.3e}; the drive would not be periodic"
            )

    @property
    def period(self) -> float:
        return self.u0_plus.period

    @property
    def y0(self) -> float:
        return self.u0_plus.eval(0.0)

    def u0(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where(x >= 0, self.u0_plus.eval(x), self.u0_minus.eval(x))
        return float(out) if out.ndim == 0 else out

    def u1(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where(x >= 0, self.u1_plus.eval(x), self.u1_minus.eval(x))
        return float(out) if out.ndim == 0 else out

    def shifted(self, new_y0: float, y1: float | None = None) -> InitialData:
        """Data with u0 replaced by ``u0 - u0(0) + new_y0``."""
        d = new_y0 - self.y0
        return InitialData(
            self.u0_plus.shift_mean(d),
            self.u0_minus.shift_mean(d),
            self.u1_plus,
            self.u1_minus,
            self.y1 if y1 is None else y1,
            self.tol_match,
        )


@dataclass(frozen=True)
class OscillatorState:
    t: float
    y: float
    v: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(q) for q in (self.t, self.y, self.v)):
            raise ValidationError(f"non-finite oscillator state {self}")

    def as_array(self, m: float) -> np.ndarray:
        return np.array([self.y, self.v]) if m > 0 else np.array([self.y])
