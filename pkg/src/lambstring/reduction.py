"""d'Alembert reduction of the string problem to a forced oscillator."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .force import ForceField
from .model import InitialData, PeriodicProfile, StringParams, ValidationError


@dataclass(frozen=True)
class AffineProfile:
    """``profile(z) + slope * z + offset`` on one half-line."""

    profile: PeriodicProfile
    slope: float = 0.0
    offset: float = 0.0

    def eval(self, z):
        return self.profile.eval(z) + self.slope * np.asarray(z, dtype=float) + self.offset

    __call__ = eval

    def deriv(self, z):
        return self.profile.derivative().eval(z) + self.slope * np.ones_like(np.asarray(z, float))

    def shifted(self, c: float) -> AffineProfile:
        return AffineProfile(self.profile, self.slope, self.offset + c)


@dataclass(frozen=True)
class DalembertSplit:
    """Traveling-wave pieces: u = f(x - a t) + g(x + a t) on each half-line.

    ``f_plus``/``g_plus`` live on z > 0 and ``f_minus``/``g_minus`` on z < 0.
    """

    f_plus: AffineProfile
    g_plus: AffineProfile
    f_minus: AffineProfile
    g_minus: AffineProfile
    a: float

    def gauge(self, c_plus: float, c_minus: float) -> DalembertSplit:
        """Add ``c`` to f and subtract it from g on each side; u is unchanged."""
        return DalembertSplit(
            self.f_plus.shifted(c_plus), self.g_plus.shifted(-c_plus),
            self.f_minus.shifted(c_minus), self.g_minus.shifted(-c_minus), self.a,
        )


def split(data: InitialData, params: StringParams) -> DalembertSplit:
    a = params.a
    pieces = []
    for u0, u1 in ((data.u0_plus, data.u1_plus), (data.u0_minus, data.u1_minus)):
        # int_0^z u1 = mean * z + A(z), A periodic with A(0) = 0
        A = u1.antiderivative()
        half = u0.scale(0.5)
        f = AffineProfile(half - A.scale(0.5 / a), -u1.mean / (2 * a))
        g = AffineProfile(half + A.scale(0.5 / a), u1.mean / (2 * a))
        pieces.append((f, g))
    (fp, gp), (fm, gm) = pieces
    return DalembertSplit(fp, gp, fm, gm, a)


@dataclass(frozen=True)
class Drive:
    """The periodic profile p(z) built from the data, split into z >= 0 and z < 0 pieces."""

    p_plus: PeriodicProfile
    p_minus: PeriodicProfile

    @property
    def period(self) -> float:
        return self.p_plus.period

    @property
    def p0(self) -> float:
        return self.p_plus.eval(0.0)

    def eval(self, z):
        z = np.asarray(z, dtype=float)
        out = np.where(z >= 0, self.p_plus.eval(z), self.p_minus.eval(z))
        return float(out) if out.ndim == 0 else out

    __call__ = eval

    def deriv(self, z):
        z = np.asarray(z, dtype=float)
        out = np.where(z >= 0, self.p_plus.derivative().eval(z),
                       self.p_minus.derivative().eval(z))
        return float(out) if out.ndim == 0 else out

    @classmethod
    def zero(cls, period: float, level: float = 0.0) -> Drive:
        c = PeriodicProfile.constant(period, level)
        return cls(c, c)

    @classmethod
    def from_profile(cls, p: PeriodicProfile) -> Drive:
        return cls(p, p)


def build_drive(data: InitialData, params: StringParams) -> Drive:
    """p(z) = (u0(z) + u0(-z))/2 + (1/2a) int_{-z}^{z} u1, as exact Fourier pieces."""
    a = params.a
    drift = data.u1_plus.mean + data.u1_minus.mean
    if abs(drift) > data.tol_match:
        raise ValidationError(f"mean(u1+) + mean(u1-) = {drift:.3e} != 0; p is not periodic")
    Ap = data.u1_plus.antiderivative()
    Am = data.u1_minus.antiderivative()
    even_plus = (data.u0_plus + data.u0_minus.reflect()).scale(0.5)
    # z > 0: int_{-z}^{z} u1 = A+(z) - A-(-z)  (linear parts cancel)
    p_plus = even_plus + (Ap - Am.reflect()).scale(0.5 / a)
    # z < 0: same formula with the roles of the half-lines exchanged
    even_minus = (data.u0_minus + data.u0_plus.reflect()).scale(0.5)
    p_minus = even_minus + (Am - Ap.reflect()).scale(0.5 / a)
    return Drive(p_plus, p_minus)


@dataclass(frozen=True)
class TwoPieceProfile:
    """``p0`` for z <= 0 and a periodic profile for z > 0."""

    p0: float
    periodic: PeriodicProfile

    def eval(self, z):
        z = np.asarray(z, dtype=float)
        out = np.where(z > 0, self.periodic.eval(z), self.p0)
        return float(out) if out.ndim == 0 else out

    __call__ = eval

    def deriv(self, z):
        z = np.asarray(z, dtype=float)
        out = np.where(z > 0, self.periodic.derivative().eval(z), 0.0)
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class IncomingScenario:
    """An incoming periodic wave ``u = p(x + a t)`` for t <= 0 hitting the oscillator."""

    p: TwoPieceProfile
    params: StringParams
    data: InitialData
    drive: Drive

    @property
    def p0(self) -> float:
        return self.p.p0

    @property
    def period(self) -> float:
        return self.p.periodic.period


def incoming_wave_data(p_in: PeriodicProfile, p0: float, params: StringParams,
                       force: ForceField, tol: float = 1e-9) -> IncomingScenario:
    f0 = force(p0)
    if abs(f0) > tol:
        raise ValidationError(f"F(p0) = {f0:.3e}; the rest state p0 must be an equilibrium")
    if abs(p_in.eval(0.0) - p0) > tol:
        raise ValidationError("incoming profile must start at p0 (continuity at z = 0)")
    slope0 = p_in.derivative().eval(0.0)
    if abs(slope0) > tol:
        raise ValidationError(f"p'(0+) = {slope0:.3e}; C^1 junction with the constant part fails")
    w = p_in.period
    const = PeriodicProfile.constant(w, p0)
    zero = PeriodicProfile.constant(w, 0.0)
    data = InitialData(p_in, const, p_in.derivative().scale(params.a), zero, 0.0, tol)
    return IncomingScenario(TwoPieceProfile(p0, p_in), params, data, Drive(p_in, const))
