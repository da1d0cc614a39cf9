"""Glimm partition of the torus and surgery of the initial data.

Near each vertical line ``x1 = x^i`` a smooth field is replaced by the two
Riemann plateaus::

    |x1 - x^i| >= 3 delta          base field
    2 delta < |x1 - x^i| < 3 delta quintic blend plateau -> base
    -2 delta <= x1 - x^i < 0       left plateau
    0 <= x1 - x^i <= 2 delta       right plateau

so the only discontinuity is the line itself (sampled as the right state).
The smooth extension replaces the jump on ``|x1 - x^i| < delta`` by a
quintic blend from the left to the right plateau.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .riemann import RiemannData

# base samplers map coordinate arrays (x1, x2) to a primitive stack (4, ...)
Sampler = Callable[[np.ndarray, np.ndarray], np.ndarray]

MIN_CELLS_PER_DELTA = 8
MAX_HALVINGS = 50


class SurgeryError(ValueError):
    """Invalid partition, band overlap or unresolved bands."""


class EpsilonUnattainable(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# partition

@dataclass(frozen=True)
class Partition:
    points: tuple[float, ...]
    epsilon: float

    def __post_init__(self):
        pts = tuple(float(p) for p in self.points)
        if not pts or any(b <= a for a, b in zip(pts, pts[1:])):
            raise SurgeryError("partition points must be strictly increasing")
        if pts[0] < 0.0 or pts[-1] >= 1.0:
            raise SurgeryError("partition points must lie in [0, 1)")
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return len(self.points)

    def gaps(self) -> np.ndarray:
        """Cyclic gaps, the last one wrapping from x^N back to x^1."""
        p = np.asarray(self.points)
        return np.diff(np.append(p, p[0] + 1.0))

    def min_gap(self) -> float:
        return float(self.gaps().min())


def make_partition(epsilon: float, n_hint: int = 0) -> Partition:
    """Uniform points ``(i-1)/N`` with the smallest admissible ``N``."""
    if not 0.0 < epsilon < 1.0:
        raise SurgeryError(f"epsilon must lie in (0, 1), got {epsilon}")
    n = max(int(n_hint), math.floor(1.0 / epsilon) + 1)
    while True:
        part = Partition(tuple(i / n for i in range(n)), epsilon)
        # rounded gaps of i/n can exceed 1/n by an ulp
        if part.gaps().max() < epsilon:
            return part
        n += 1


def periodic_offset(x, x0):
    """Signed distance ``x - x0`` wrapped to ``[-1/2, 1/2)``."""
    return (np.asarray(x) - x0 + 0.5) % 1.0 - 0.5


def ball_meets_partition(partition: Partition, center, radius: float) -> bool:
    """Does the open ball meet some line ``{x1 = x^m}``? (x2 is irrelevant)."""
    d = np.abs(periodic_offset(center[0], np.asarray(partition.points)))
    return bool(np.any(d < radius))


# ---------------------------------------------------------------------------
# fields on the torus

@dataclass
class TorusField:
    """Cell-centred primitive samples ``(rho, theta, u1, u2)`` on ``[0,1)^2``."""

    data: np.ndarray  # shape (4, nx, ny)
    t: float | None = None

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.ndim != 3 or self.data.shape[0] != 4:
            raise ValueError("TorusField data must have shape (4, nx, ny)")

    @property
    def nx(self) -> int:
        return self.data.shape[1]

    @property
    def ny(self) -> int:
        return self.data.shape[2]

    @property
    def h1(self) -> float:
        return 1.0 / self.nx

    @property
    def h2(self) -> float:
        return 1.0 / self.ny

    @property
    def x1(self) -> np.ndarray:
        return cell_centers(self.nx)

    @property
    def x2(self) -> np.ndarray:
        return cell_centers(self.ny)

    def validate(self):
        if not np.all(np.isfinite(self.data)):
            raise ValueError("non-finite samples")
        if np.any(self.data[0] <= 0.0) or np.any(self.data[1] <= 0.0):
            raise ValueError("non-positive density or temperature")

    @classmethod
    def from_sampler(cls, fn: Sampler, nx: int, ny: int, t: float | None = None) -> "TorusField":
        X1, X2 = np.meshgrid(cell_centers(nx), cell_centers(ny), indexing="ij")
        return cls(np.asarray(fn(X1, X2), dtype=float), t)


def cell_centers(n: int) -> np.ndarray:
    return (np.arange(n) + 0.5) / n


def lq_distance(a: TorusField, b: TorusField, q: float) -> float:
    """``L^q`` norm of the stacked 4-component difference (Euclidean in R^4)."""
    if a.data.shape != b.data.shape:
        raise ValueError(f"grid mismatch: {a.data.shape} vs {b.data.shape}")
    if not q >= 1.0:
        raise ValueError("q must be >= 1")
    diff = np.sqrt(np.sum((a.data - b.data) ** 2, axis=0))
    area = a.h1 * a.h2
    return float((area * np.sum(diff ** q)) ** (1.0 / q))


# ---------------------------------------------------------------------------
# base-data presets

def _bump(r, R):
    """C-infinity bump, 1 at r = 0 and identically 0 for r >= R."""
    s = np.clip(r / R, 0.0, 1.0)
    out = np.zeros_like(s)
    inside = s < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
    return out


@dataclass(frozen=True)
class BasePreset:
    name: str
    params: dict = field(default_factory=dict)

    def __call__(self, x1, x2) -> np.ndarray:
        x1, x2 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float))
        p = self.params
        rho0 = p.get("rho", 1.0)
        th0 = p.get("theta", 1.0)
        ua = p.get("u", (0.0, 0.0))
        if self.name == "constant":
            out = np.empty((4,) + x1.shape)
            out[0], out[1], out[2], out[3] = rho0, th0, ua[0], ua[1]
            return out
        if self.name == "smooth-vortex":
            cx, cy = p.get("center", (0.5, 0.5))
            R = p.get("radius", 0.3)
            A = p.get("strength", 1.0)
            dx = periodic_offset(x1, cx)
            dy = periodic_offset(x2, cy)
            b = _bump(np.hypot(dx, dy), R)
            return np.stack([
                rho0 * (1.0 + p.get("rho_amp", 0.2) * b),
                th0 * (1.0 + p.get("theta_amp", 0.1) * b),
                ua[0] - A * dy * b,
                ua[1] + A * dx * b,
            ])
        if self.name == "acoustic":
            # right-running linear sound wave on (rho, theta, 0, 0)
            c_v = p.get("c_v", 2.5)
            A = p.get("amplitude", 1e-2)
            k = p.get("wavenumber", 1)
            gamma = 1.0 + 1.0 / c_v
            c = math.sqrt(gamma * th0)
            s = np.sin(2.0 * np.pi * k * x1)
            rho = rho0 * (1.0 + A * s)
            pres = rho0 * th0 * (1.0 + gamma * A * s)
            return np.stack([rho, pres / rho, ua[0] + c * A * s, np.full_like(s, ua[1])])
        raise ValueError(f"unknown base preset {self.name!r}")


PRESETS = ("constant", "smooth-vortex", "acoustic")


def make_base(name: str, **params) -> BasePreset:
    if name not in PRESETS:
        raise ValueError(f"unknown base preset {name!r}; choose from {PRESETS}")
    return BasePreset(name, dict(params))


# ---------------------------------------------------------------------------
# surgery

@dataclass(frozen=True)
class WildDataSpec:
    partition: Partition
    delta: float
    riemann: RiemannData
    q: float
    base: Sampler

    def __post_init__(self):
        if not self.delta > 0.0:
            raise SurgeryError("delta must be positive")
        if not 3.0 * self.delta < 0.5 * self.partition.min_gap():
            raise SurgeryError(
                f"bands overlap: 3*delta={3 * self.delta:.6g} must be below half the "
                f"minimal gap {0.5 * self.partition.min_gap():.6g}"
            )
        if not self.q >= 1.0:
            raise SurgeryError("q must be >= 1")


def smoothstep5(tau):
    """Quintic Hermite step: 0 -> 1 with vanishing first and second derivatives."""
    tau = np.clip(tau, 0.0, 1.0)
    return tau * tau * tau * (10.0 + tau * (-15.0 + 6.0 * tau))


def surgery_values(spec: WildDataSpec, x1, x2, extension: bool = False) -> np.ndarray:
    """Surgered (or smoothly extended) data at arbitrary points."""
    base = np.asarray(spec.base(x1, x2), dtype=float)
    out = base.copy()
    d_ = spec.delta
    L = spec.riemann.left.as_array()
    R = spec.riemann.right.as_array()
    x1 = np.broadcast_to(np.asarray(x1, float), base.shape[1:])
    for xi in spec.partition.points:
        d = periodic_offset(x1, xi)
        a = np.abs(d)
        blend = (a > 2.0 * d_) & (a < 3.0 * d_)
        if np.any(blend):
            S = smoothstep5((a[blend] - 2.0 * d_) / d_)
            P = np.where(d[blend] < 0.0, L[:, None], R[:, None])
            out[:, blend] = (1.0 - S) * P + S * base[:, blend]
        if extension:
            left = (d >= -2.0 * d_) & (d <= -d_)
            right = (d >= d_) & (d <= 2.0 * d_)
        else:
            left = (d >= -2.0 * d_) & (d < 0.0)
            right = (d >= 0.0) & (d <= 2.0 * d_)
        out[:, left] = L[:, None]
        out[:, right] = R[:, None]
        if extension:
            inner = (d > -d_) & (d < d_)
            if np.any(inner):
                S = smoothstep5((d[inner] + d_) / (2.0 * d_))
                out[:, inner] = (1.0 - S) * L[:, None] + S * R[:, None]
    return out


def check_resolution(spec: WildDataSpec, nx: int):
    h = 1.0 / nx
    if h > spec.delta / MIN_CELLS_PER_DELTA * (1.0 + 1e-12):
        raise SurgeryError(
            f"grid too coarse: h={h:.6g} exceeds delta/{MIN_CELLS_PER_DELTA}="
            f"{spec.delta / MIN_CELLS_PER_DELTA:.6g} (need nx >= {math.ceil(MIN_CELLS_PER_DELTA / spec.delta)})"
        )


def build_wild_data(spec: WildDataSpec, nx: int, ny: int) -> TorusField:
    check_resolution(spec, nx)
    return TorusField.from_sampler(lambda a, b: surgery_values(spec, a, b), nx, ny, t=0.0)


def smooth_extension(spec: WildDataSpec, nx: int, ny: int) -> TorusField:
    check_resolution(spec, nx)
    return TorusField.from_sampler(
        lambda a, b: surgery_values(spec, a, b, extension=True), nx, ny, t=0.0
    )


# ---------------------------------------------------------------------------
# choice of delta

@dataclass(frozen=True)
class DeltaChoice:
    delta: float
    distance: float
    halvings: int
    ladder: tuple[tuple[float, float], ...]  # (delta, distance) for every tried rung


def band_lq_distance(spec: WildDataSpec, cells_per_delta: int = MIN_CELLS_PER_DELTA,
                     ny: int = 64) -> float:
    """``L^q`` distance between surgered data and base by band quadrature.

    Outside ``|x1 - x^i| < 3 delta`` the two fields agree exactly, so only the
    bands are integrated, each on its own grid of width ``delta/cells_per_delta``
    with faces on the partition line. For a uniform partition this is the
    same midpoint sum as :func:`lq_distance` on a torus grid with
    ``nx = cells_per_delta/delta``, at a cost independent of ``delta``.
    """
    m = int(cells_per_delta)
    h = spec.delta / m
    k = np.arange(-3 * m, 3 * m)
    offs = (k + 0.5) * h
    x2 = cell_centers(ny)
    total = 0.0
    for xi in spec.partition.points:
        X1, X2 = np.meshgrid((xi + offs) % 1.0, x2, indexing="ij")
        diff = surgery_values(spec, X1, X2) - np.asarray(spec.base(X1, X2), dtype=float)
        total += float(np.sum(np.sqrt(np.sum(diff ** 2, axis=0)) ** spec.q))
    return (h / ny * total) ** (1.0 / spec.q)


def choose_delta(base: Sampler, partition: Partition, riemann: RiemannData, q: float,
                 epsilon: float, cells_per_delta: int = MIN_CELLS_PER_DELTA, ny: int = 64,
                 max_halvings: int = MAX_HALVINGS) -> DeltaChoice:
    """Largest ``delta = (min gap / 8) * 2**-k`` meeting the ``L^q`` bound."""
    if not epsilon > 0.0:
        raise SurgeryError("epsilon must be positive")
    delta0 = partition.min_gap() / 8.0
    ladder = []
    for k in range(max_halvings + 1):
        delta = delta0 * 0.5 ** k
        spec = WildDataSpec(partition, delta, riemann, q, base)
        dist = band_lq_distance(spec, cells_per_delta, ny)
        ladder.append((delta, dist))
        if dist <= epsilon:
            return DeltaChoice(delta, dist, k, tuple(ladder))
    raise EpsilonUnattainable(
        f"epsilon={epsilon} unattainable at this resolution after {max_halvings} halvings "
        f"(last distance {ladder[-1][1]:.6g})"
    )
