"""Weak-form admissibility checks on sampled space-time fields.

The weak integrals are summed on the field's own grid without interpolation.
Every snapshot stands for a time slab between the mid-times of its
neighbours, every cell for its own rectangle. Derivatives of the test
function are integrated exactly over slabs and cells, e.g.

    int_slab d_t phi dt   = phi(t_{k+1/2}) - phi(t_{k-1/2})
    int_cell d_x1 phi dx1 = phi(x1_{i+1/2}) - phi(x1_{i-1/2})

with midpoint sampling in the remaining variables. The discrete sums then
telescope, so constant fields give zero residual up to round-off, and the
initial-trace term uses the same midpoint rule as the time term.

A finite family of test functions can falsify the entropy inequality but
never certify it; reports carry that caveat.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .evolve import SpaceTimeField
from .surgery import Partition, TorusField, periodic_offset
from .thermo import PrimitiveState, ThermoParams

EQUATIONS = ("mass", "momentum_1", "momentum_2", "energy", "entropy")
MIN_SNAPSHOTS_IN_SUPPORT = 16
CAVEAT = ("a finite test family can only falsify the entropy inequality; "
          "passing does not certify admissibility")


def bump(tau):
    """``(1 - tau^2)^3`` on ``|tau| < 1``, zero outside (C^2)."""
    tau = np.asarray(tau, dtype=float)
    return np.where(np.abs(tau) < 1.0, (1.0 - tau * tau) ** 3, 0.0)


@dataclass(frozen=True)
class TestFunction:
    """Tensor-product bump centred at ``(t0, x0)`` with radii ``(r_t, r_x)``."""

    __test__ = False  # keep pytest from collecting it

    t0: float
    x0: tuple[float, float]
    r_t: float
    r_x: tuple[float, float]

    def __post_init__(self):
        if not (self.r_t > 0.0 and all(0.0 < r < 0.5 for r in self.r_x)):
            raise ValueError("radii must be positive and spatial radii below 1/2")

    def a(self, t):
        return bump((np.asarray(t, dtype=float) - self.t0) / self.r_t)

    def b1(self, x):
        return bump(periodic_offset(x, self.x0[0]) / self.r_x[0])

    def b2(self, x):
        return bump(periodic_offset(x, self.x0[1]) / self.r_x[1])

    def __call__(self, t, x1, x2):
        return self.a(t) * self.b1(x1) * self.b2(x2)

    @property
    def t_support(self) -> tuple[float, float]:
        return max(0.0, self.t0 - self.r_t), self.t0 + self.r_t

    def as_dict(self) -> dict:
        return {"t0": self.t0, "x0": list(self.x0), "r_t": self.r_t, "r_x": list(self.r_x)}


@dataclass(frozen=True)
class BoundsBox:
    rho_min: float
    rho_max: float
    theta_min: float
    theta_max: float
    speed_max: float

    def __post_init__(self):
        if not (0.0 < self.rho_min <= self.rho_max and 0.0 < self.theta_min <= self.theta_max
                and self.speed_max > 0.0):
            raise ValueError(f"inconsistent bounds box {self}")


@dataclass
class ResidualReport:
    tests: list[dict]
    residuals: np.ndarray  # (n_tests, 5) signed raw sums
    norms: np.ndarray | None = None  # (n_tests,) quadrature of |grad_{t,x} phi| plus |phi(0)|
    skipped: list[dict] = field(default_factory=list)
    h: float = 0.0
    bounds: dict | None = None
    entropy_production: float | None = None
    caveat: str = CAVEAT

    @property
    def magnitudes(self) -> np.ndarray:
        """|mass|, |momentum_1|, |momentum_2|, |energy| per test."""
        return np.abs(self.residuals[:, :4])

    @property
    def entropy(self) -> np.ndarray:
        """Signed entropy production per test; admissible fields give >= 0."""
        return -self.residuals[:, 4]

    @property
    def relative(self) -> np.ndarray:
        """Magnitudes divided by the test-function weight norm."""
        if self.norms is None:
            raise ValueError("report carries no weight norms")
        return self.magnitudes / self.norms[:, None]

    def max_magnitudes(self, relative: bool = False) -> dict:
        m = self.relative if relative else self.magnitudes
        return {eq: float(m[:, j].max()) if len(m) else 0.0 for j, eq in enumerate(EQUATIONS[:4])}

    def rms_magnitudes(self) -> np.ndarray:
        """Root-mean-square over the family, per conservation law."""
        m = self.magnitudes
        return np.sqrt(np.mean(m * m, axis=0)) if len(m) else np.zeros(4)

    def entropy_min(self) -> float:
        return float(self.entropy.min()) if len(self.entropy) else 0.0

    def entropy_constant(self) -> float:
        """Measured ``C`` with ``entropy residual >= -C h`` over the family."""
        return max(0.0, -self.entropy_min()) / self.h if self.h > 0 else 0.0

    def summary(self) -> dict:
        return {
            "n_tests": len(self.tests),
            "n_skipped": len(self.skipped),
            "h": self.h,
            "max_residual": self.max_magnitudes(),
            "max_relative_residual": self.max_magnitudes(relative=True) if self.norms is not None else None,
            "entropy_min": self.entropy_min(),
            "entropy_C": self.entropy_constant(),
            "entropy_production": self.entropy_production,
            "caveat": self.caveat,
        }

    def records(self) -> list[dict]:
        out = []
        norms = self.norms if self.norms is not None else [None] * len(self.tests)
        for tf, r, nrm in zip(self.tests, self.residuals, norms):
            rec = dict(tf)
            rec["weight_norm"] = None if nrm is None else float(nrm)
            rec.update({eq: float(r[j]) for j, eq in enumerate(EQUATIONS[:4])})
            rec["entropy"] = float(-r[4])
            rec["entropy_ok"] = bool(-r[4] >= 0.0)
            out.append(rec)
        return out


# ---------------------------------------------------------------------------
# densities and fluxes of the five balance laws

def balance_terms(W: np.ndarray, c_v: float):
    """Densities and x1/x2 fluxes of mass, momentum, energy and entropy."""
    rho, th, u1, u2 = W
    p = rho * th
    E = 0.5 * rho * (u1 * u1 + u2 * u2) + rho * c_v * th
    rs = rho * (c_v * np.log(th) - np.log(rho))
    q = np.stack([rho, rho * u1, rho * u2, E, rs])
    f1 = np.stack([rho * u1, rho * u1 * u1 + p, rho * u2 * u1, (E + p) * u1, rs * u1])
    f2 = np.stack([rho * u2, rho * u1 * u2, rho * u2 * u2 + p, (E + p) * u2, rs * u2])
    return q, f1, f2


def _slab_edges(times):
    t = np.asarray(times, dtype=float)
    mid = 0.5 * (t[1:] + t[:-1])
    return np.concatenate([[t[0]], mid, [t[-1]]])


def _window(b_centres, b_faces_left, b_faces_right):
    """Cells where a 1D factor or its face difference is non-zero.

    Returned as a slice when the cells are contiguous, else as an index array.
    """
    nz = (b_centres != 0.0) | (b_faces_left != 0.0) | (b_faces_right != 0.0)
    idx = np.flatnonzero(nz)
    if len(idx) and idx[-1] - idx[0] + 1 == len(idx):
        return slice(int(idx[0]), int(idx[-1]) + 1)
    return idx


def _take(arr, ii, jj):
    if isinstance(ii, slice) and isinstance(jj, slice):
        return arr[:, ii, jj]
    return arr[:, ii][:, :, jj]


class _TensorPlan:
    """Per-test factors restricted to the support window."""

    def __init__(self, phi: TestFunction, xc1, xf1, xc2, xf2, edges, times):
        F1 = phi.b1(xf1)
        F2 = phi.b2(xf2)
        B1 = phi.b1(xc1)
        B2 = phi.b2(xc2)
        self.ii = _window(B1, F1[:-1], F1[1:])
        self.jj = _window(B2, F2[:-1], F2[1:])
        self.B1 = B1[self.ii]
        self.B2 = B2[self.jj]
        self.D1 = (F1[1:] - F1[:-1])[self.ii]
        self.D2 = (F2[1:] - F2[:-1])[self.jj]
        self.a_e = phi.a(edges)
        self.a_t = phi.a(times)

    def space(self, q):
        return np.einsum("eij,j->ei", _take(q, self.ii, self.jj), self.B2) @ self.B1

    def fluxes(self, f1, f2, h1, h2):
        g1 = np.einsum("eij,j->ei", _take(f1, self.ii, self.jj), self.B2) @ self.D1
        g2 = np.einsum("eij,j->ei", _take(f2, self.ii, self.jj), self.D2) @ self.B1
        return h2 * g1 + h1 * g2


def weak_residuals(field_: SpaceTimeField, family: Sequence, init: TorusField,
                   params: ThermoParams) -> ResidualReport:
    """Weak residuals of the five balance laws for each test function.

    Members of ``family`` are :class:`TestFunction` (windowed fast path) or
    any callable ``phi(t, x1, x2)`` (dense path). Supports reaching past the
    last snapshot, or holding fewer than 16 snapshots, are skipped.
    Each test also gets a weight norm: the same quadrature applied to
    ``|d_t phi| + |d_x1 phi| + |d_x2 phi|`` plus the initial ``|phi(0)|``.
    """
    c_v = params.c_v
    nx, ny = field_.grid_shape
    if init.data.shape != field_.data.shape[1:]:
        raise ValueError("initial field grid differs from the space-time grid")
    h1, h2 = 1.0 / nx, 1.0 / ny
    xc1 = (np.arange(nx) + 0.5) / nx
    xc2 = (np.arange(ny) + 0.5) / ny
    xf1 = np.arange(nx + 1) / nx
    xf2 = np.arange(ny + 1) / ny
    times = field_.times
    T = float(times[-1])
    edges = _slab_edges(times)
    dts = np.diff(edges)

    active, tests, skipped = [], [], []
    for n, phi in enumerate(family):
        desc = phi.as_dict() if isinstance(phi, TestFunction) else {"index": n, "kind": "callable"}
        if isinstance(phi, TestFunction):
            lo, hi = phi.t_support
            if hi > T * (1.0 + 1e-12):
                skipped.append(dict(desc, reason=f"support reaches t={hi:.6g} beyond horizon {T:.6g}"))
                continue
            inside = int(np.sum((times >= lo) & (times <= hi)))
            if inside < MIN_SNAPSHOTS_IN_SUPPORT:
                skipped.append(dict(desc, reason=f"only {inside} snapshots inside the support"))
                continue
        active.append(phi)
        tests.append(desc)

    plans = [_TensorPlan(phi, xc1, xf1, xc2, xf2, edges, times) if isinstance(phi, TestFunction)
             else phi for phi in active]
    acc = np.zeros((len(active), 5))
    norms = np.zeros(len(active))
    ones = np.ones((1, nx, ny))
    X1c, X2c = np.meshgrid(xc1, xc2, indexing="ij")
    for k in range(len(times)):
        q, f1, f2 = balance_terms(field_.data[k], c_v)
        for n, plan in enumerate(plans):
            if isinstance(plan, _TensorPlan):
                da = plan.a_e[k + 1] - plan.a_e[k]
                ak = plan.a_t[k]
                if da == 0.0 and ak == 0.0:
                    continue
                acc[n] += da * h1 * h2 * plan.space(q)
                norms[n] += abs(da) * h1 * h2 * float(plan.space(ones)[0])
                if ak != 0.0:
                    acc[n] += dts[k] * ak * plan.fluxes(f1, f2, h1, h2)
                    norms[n] += dts[k] * ak * (
                        h2 * float(np.abs(plan.D1).sum() * plan.B2.sum())
                        + h1 * float(plan.B1.sum() * np.abs(plan.D2).sum()))
            else:
                dphi_t = plan(edges[k + 1], X1c, X2c) - plan(edges[k], X1c, X2c)
                Pf1 = plan(times[k], xf1[:, None], xc2[None, :])
                Pf2 = plan(times[k], xc1[:, None], xf2[None, :])
                d1 = Pf1[1:, :] - Pf1[:-1, :]
                d2 = Pf2[:, 1:] - Pf2[:, :-1]
                acc[n] += h1 * h2 * np.einsum("eij,ij->e", q, dphi_t)
                acc[n] += dts[k] * (h2 * np.einsum("eij,ij->e", f1, d1)
                                    + h1 * np.einsum("eij,ij->e", f2, d2))
                norms[n] += h1 * h2 * np.abs(dphi_t).sum() + dts[k] * (
                    h2 * np.abs(d1).sum() + h1 * np.abs(d2).sum())

    q0, _, _ = balance_terms(init.data, c_v)
    t0 = float(times[0])
    for n, plan in enumerate(plans):
        if isinstance(plan, _TensorPlan):
            a0 = float(plan.a_t[0])
            if a0 != 0.0:
                acc[n] += a0 * h1 * h2 * plan.space(q0)
                norms[n] += a0 * h1 * h2 * float(plan.space(ones)[0])
        else:
            p0 = plan(t0, X1c, X2c)
            acc[n] += h1 * h2 * np.einsum("eij,ij->e", q0, p0)
            norms[n] += h1 * h2 * np.abs(p0).sum()

    return ResidualReport(tests=tests, residuals=acc, norms=norms, skipped=skipped,
                          h=max(h1, h2) if ny > 1 else h1)


def make_test_family(T: float, partition: Partition, delta: float, lattice: tuple[int, int] = (8, 4),
                     levels: int = 3, r0: float | None = None) -> list[TestFunction]:
    """Dyadic family of bumps: lattice centres plus centres on the partition lines.

    Spatial radii ``r0, r0/2, ...`` (default ``r0 = 4 delta``). Each centre
    gets one bump touching ``t = 0`` (initial trace) and one interior in time.
    """
    r0 = 4.0 * delta if r0 is None else r0
    radii = [min(r0 / 2 ** l, 0.49) for l in range(levels)]
    xs = [(i + 0.5) / lattice[0] for i in range(lattice[0])]
    ys = [(j + 0.5) / lattice[1] for j in range(lattice[1])]
    centres = [(x, y) for x in xs for y in ys]
    for xi in partition.points:
        for off in (0.0, -1.5 * delta, 1.5 * delta):
            for y in ys:
                centres.append(((xi + off) % 1.0, y))
    timings = [(0.0, 0.95 * T), (0.5 * T, 0.45 * T)]
    fam = []
    for c in centres:
        for r in radii:
            for t0, rt in timings:
                fam.append(TestFunction(t0, c, rt, (r, r)))
    return fam


# ---------------------------------------------------------------------------
# jump conditions, bounds, entropy production

def normal_flux(s: PrimitiveState, params: ThermoParams) -> np.ndarray:
    rho, th = s.rho, s.theta
    u1, u2 = s.u
    p = rho * th
    E = 0.5 * rho * (u1 * u1 + u2 * u2) + rho * params.c_v * th
    return np.array([rho * u1, rho * u1 * u1 + p, rho * u2 * u1, (E + p) * u1])


def conserved(s: PrimitiveState, params: ThermoParams) -> np.ndarray:
    u1, u2 = s.u
    E = 0.5 * s.rho * (u1 * u1 + u2 * u2) + s.rho * params.c_v * s.theta
    return np.array([s.rho, s.rho * u1, s.rho * u2, E])


def rh_residual(left: PrimitiveState, right: PrimitiveState, sigma: float,
                params: ThermoParams) -> np.ndarray:
    """``sigma [U] - [F1(U)]`` with ``[a] = a_right - a_left``."""
    dU = conserved(right, params) - conserved(left, params)
    dF = normal_flux(right, params) - normal_flux(left, params)
    return sigma * dU - dF


def bounds_check(field_: SpaceTimeField, box: BoundsBox, max_report: int = 20):
    """``(ok, offenders)``; each offender names snapshot/cell, quantity and value."""
    offenders = []
    n_bad = 0
    speed = np.hypot(field_.data[:, 2], field_.data[:, 3])
    checks = (
        ("rho", field_.data[:, 0], box.rho_min, box.rho_max),
        ("theta", field_.data[:, 1], box.theta_min, box.theta_max),
        ("speed", speed, -math.inf, box.speed_max),
    )
    for name, arr, lo, hi in checks:
        bad = (arr < lo) | (arr > hi) | ~np.isfinite(arr)
        n_bad += int(bad.sum())
        for k, i, j in np.argwhere(bad)[: max(0, max_report - len(offenders))]:
            offenders.append({"snapshot": int(k), "t": float(field_.times[k]), "i": int(i),
                              "j": int(j), "quantity": name, "value": float(arr[k, i, j])})
    return n_bad == 0, offenders


def bounds_box_from(states: Sequence[PrimitiveState], fields: Sequence[np.ndarray] = (),
                    pad: float = 1e-9) -> BoundsBox:
    """Box spanned by the given constant states and sampled primitive arrays."""
    rho = [s.rho for s in states]
    th = [s.theta for s in states]
    sp = [math.hypot(*s.u) for s in states]
    for W in fields:
        rho += [float(W[..., 0, :, :].min()), float(W[..., 0, :, :].max())]
        th += [float(W[..., 1, :, :].min()), float(W[..., 1, :, :].max())]
        sp.append(float(np.hypot(W[..., 2, :, :], W[..., 3, :, :]).max()))
    return BoundsBox(min(rho) - pad, max(rho) + pad, min(th) - pad, max(th) + pad,
                     max(max(sp), 0.0) + pad)


def total_entropy(W: np.ndarray, params: ThermoParams) -> float:
    """Midpoint integral of ``rho s`` over the torus."""
    rho, th = W[0], W[1]
    h = 1.0 / (W.shape[1] * W.shape[2])
    return float(h * np.sum(rho * (params.c_v * np.log(th) - np.log(rho))))


def entropy_production_total(field_: SpaceTimeField, params: ThermoParams) -> float:
    """``int rho s`` at the last snapshot minus at the first."""
    return total_entropy(field_.data[-1], params) - total_entropy(field_.data[0], params)
