"""Ideal-gas (Boyle-Mariotte) thermodynamics.

Pressure ``p = rho * theta``, internal energy ``e = c_v * theta`` and
entropy ``s = c_v log(theta) - log(rho)``. The adiabatic exponent is derived
as ``gamma = 1 + 1/c_v`` and never stored on its own.

Scalar states are small frozen dataclasses; grid code works on stacked
numpy arrays with leading axis ``(rho, theta, u1, u2)`` for primitive and
``(rho, m1, m2, E)`` for conservative variables.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


class ThermoError(ValueError):
    """Raised for states outside the physical domain."""


class VacuumError(ThermoError):
    """Raised when a state (or a Riemann fan) has no positive pressure."""


@dataclass(frozen=True)
class ThermoParams:
    c_v: float = 2.5

    def __post_init__(self):
        if not (math.isfinite(self.c_v) and self.c_v > 1.0):
            raise ThermoError(f"c_v must be > 1, got {self.c_v!r}")

    @property
    def gamma(self) -> float:
        return 1.0 + 1.0 / self.c_v


@dataclass(frozen=True)
class PrimitiveState:
    rho: float
    theta: float
    u: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        u = tuple(float(c) for c in self.u)
        if len(u) != 2:
            raise ThermoError("velocity must have two components")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "rho", float(self.rho))
        object.__setattr__(self, "theta", float(self.theta))
        vals = (self.rho, self.theta) + u
        if not all(math.isfinite(v) for v in vals):
            raise ThermoError(f"non-finite state {vals}")
        if self.rho <= 0.0 or self.theta <= 0.0:
            raise ThermoError(
                f"density and temperature must be positive, got rho={self.rho}, theta={self.theta}"
            )

    @classmethod
    def from_array(cls, w) -> "PrimitiveState":
        return cls(float(w[0]), float(w[1]), (float(w[2]), float(w[3])))

    def as_array(self) -> np.ndarray:
        return np.array([self.rho, self.theta, self.u[0], self.u[1]])

    def mirrored(self) -> "PrimitiveState":
        """Reflection ``x1 -> -x1``: flips the normal velocity."""
        return PrimitiveState(self.rho, self.theta, (-self.u[0], self.u[1]))


@dataclass(frozen=True)
class ConservativeState:
    rho: float
    m: tuple[float, float]
    E: float

    def as_array(self) -> np.ndarray:
        return np.array([self.rho, self.m[0], self.m[1], self.E])


class EosValues(NamedTuple):
    pressure: float
    internal_energy: float
    entropy: float
    sound_speed: float


def eos_eval(s: PrimitiveState, p: ThermoParams) -> EosValues:
    if s.rho <= 0.0 or s.theta <= 0.0:
        raise ThermoError("non-positive density or temperature")
    return EosValues(
        pressure=s.rho * s.theta,
        internal_energy=p.c_v * s.theta,
        entropy=p.c_v * math.log(s.theta) - math.log(s.rho),
        sound_speed=math.sqrt(p.gamma * s.theta),
    )


def prim_to_cons(s: PrimitiveState, p: ThermoParams) -> ConservativeState:
    u1, u2 = s.u
    E = 0.5 * s.rho * (u1 * u1 + u2 * u2) + s.rho * p.c_v * s.theta
    return ConservativeState(s.rho, (s.rho * u1, s.rho * u2), E)


def cons_to_prim(c: ConservativeState, p: ThermoParams) -> PrimitiveState:
    if not c.rho > 0.0:
        raise VacuumError(f"vacuum/unphysical state: rho={c.rho}")
    m1, m2 = c.m
    eint = c.E - (m1 * m1 + m2 * m2) / (2.0 * c.rho)
    if not eint > 0.0:
        raise VacuumError(f"vacuum/unphysical state: internal energy {eint} <= 0")
    return PrimitiveState(c.rho, eint / (c.rho * p.c_v), (m1 / c.rho, m2 / c.rho))


# ---------------------------------------------------------------------------
# array versions, leading axis = variable

def pressure(rho, theta):
    return rho * theta


def entropy(rho, theta, c_v: float):
    return c_v * np.log(theta) - np.log(rho)


def sound_speed(theta, c_v: float):
    return np.sqrt((1.0 + 1.0 / c_v) * theta)


def prim_to_cons_array(w: np.ndarray, c_v: float) -> np.ndarray:
    rho, theta, u1, u2 = w
    out = np.empty_like(w, dtype=float)
    out[0] = rho
    out[1] = rho * u1
    out[2] = rho * u2
    out[3] = 0.5 * rho * (u1 * u1 + u2 * u2) + rho * c_v * theta
    return out


def cons_to_prim_array(U: np.ndarray, c_v: float) -> np.ndarray:
    rho, m1, m2, E = U
    if np.any(~(rho > 0.0)):
        raise VacuumError("vacuum/unphysical state: non-positive density")
    eint = E - 0.5 * (m1 * m1 + m2 * m2) / rho
    if np.any(~(eint > 0.0)):
        raise VacuumError("vacuum/unphysical state: non-positive internal energy")
    out = np.empty_like(U, dtype=float)
    out[0] = rho
    out[1] = eint / (rho * c_v)
    out[2] = m1 / rho
    out[3] = m2 / rho
    return out


def flux_array(w: np.ndarray, c_v: float, axis: int = 0) -> np.ndarray:
    """Physical flux of (mass, momentum, energy) in direction ``x_{axis+1}``.

    ``w`` is primitive.
    """
    rho, theta, u1, u2 = w
    un = w[2 + axis]
    p = rho * theta
    E = 0.5 * rho * (u1 * u1 + u2 * u2) + rho * c_v * theta
    out = np.empty_like(w, dtype=float)
    out[0] = rho * un
    out[1] = rho * u1 * un
    out[2] = rho * u2 * un
    out[1 + axis] += p
    out[3] = (E + p) * un
    return out
