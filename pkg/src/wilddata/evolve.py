"""Evolution of the smooth extension and pasting with translated Riemann fans.

The smooth local solution is approximated by a second-order finite-volume
scheme on the periodic torus: MUSCL reconstruction of ``(rho, u1, u2, p)``
with the minmod limiter, HLL interface flux and Heun (SSP-RK2) time
stepping. Identical interface data give identical fluxes, so flux
differences vanish exactly on constant regions and such regions stay
bitwise constant.

Pasting follows the Glimm partition: within ``|x1 - x^i| <= 7 delta/4`` the
solution is the fan translated to ``x^i``, elsewhere the smooth trajectory.
The fan branch wins on the boundary of that band.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

from .riemann import WaveFan
from .surgery import Partition, TorusField, periodic_offset
from .thermo import ThermoParams, VacuumError, cons_to_prim_array, prim_to_cons_array

logger = logging.getLogger(__name__)

DEFAULT_CFL = 0.45
DEFAULT_SNAPSHOTS = 32
PLATEAU_TOL = 1e-6
DISTINCT_TOL = 1e-10
SLOPE_GROWTH_LIMIT = 1e3


class EvolutionError(RuntimeError):
    """The smooth evolution left its regime; ``last_safe_time`` is attached."""

    def __init__(self, msg, last_safe_time):
        super().__init__(f"T_max reached: {msg} (last safe time {last_safe_time:.6g})")
        self.last_safe_time = last_safe_time


class HorizonError(ValueError):
    pass


class NoEntropyProduction(ValueError):
    pass


class FanProvider(Protocol):
    """Anything that can be pasted at a partition line."""

    lam: float

    def sample_array(self, xi) -> np.ndarray: ...


@dataclass
class SpaceTimeField:
    """Snapshots ``data[k]`` (shape ``(4, nx, ny)``) at strictly increasing ``times``."""

    times: np.ndarray
    data: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.data = np.asarray(self.data, dtype=float)
        if self.data.ndim != 4 or self.data.shape[1] != 4:
            raise ValueError("SpaceTimeField data must have shape (K, 4, nx, ny)")
        if len(self.times) != len(self.data):
            raise ValueError("one time per snapshot required")
        if np.any(np.diff(self.times) <= 0.0):
            raise ValueError("snapshot times must be strictly increasing")

    @property
    def nx(self) -> int:
        return self.data.shape[2]

    @property
    def ny(self) -> int:
        return self.data.shape[3]

    @property
    def grid_shape(self) -> tuple[int, int]:
        return self.data.shape[2], self.data.shape[3]

    def __len__(self):
        return len(self.times)

    def snapshot(self, k: int) -> TorusField:
        return TorusField(self.data[k], float(self.times[k]))

    def __iter__(self):
        return (self.snapshot(k) for k in range(len(self)))

    def until(self, t: float) -> "SpaceTimeField":
        keep = self.times <= t * (1.0 + 1e-12)
        return SpaceTimeField(self.times[keep], self.data[keep], dict(self.meta))


@dataclass(frozen=True)
class Horizon:
    t_s: float
    t_r: float

    def __post_init__(self):
        if not self.t > 0.0:
            raise HorizonError(f"empty horizon: t_s={self.t_s}, t_r={self.t_r}")

    @property
    def t(self) -> float:
        return min(self.t_s, self.t_r)


@dataclass(frozen=True)
class Ball:
    center: tuple[float, float]
    radius: float

    def __post_init__(self):
        if not self.radius > 0.0:
            raise ValueError("ball radius must be positive")

    def mask(self, nx: int, ny: int) -> np.ndarray:
        x1 = (np.arange(nx) + 0.5) / nx
        x2 = (np.arange(ny) + 0.5) / ny
        d1 = periodic_offset(x1, self.center[0])[:, None]
        d2 = periodic_offset(x2, self.center[1])[None, :]
        return d1 ** 2 + d2 ** 2 < self.radius ** 2


# ---------------------------------------------------------------------------
# finite-volume evolution

def _minmod(a, b):
    return np.where(a * b > 0.0, np.sign(a) * np.minimum(np.abs(a), np.abs(b)), 0.0)


def _hll(VL, VR, axis, c_v):
    """HLL flux from reconstructed ``(rho, u1, u2, p)`` states, normal ``x_{axis+1}``."""
    gamma = 1.0 + 1.0 / c_v
    fluxes = []
    conss = []
    speeds = []
    for V in (VL, VR):
        rho, u1, u2, p = V
        un = V[1 + axis]
        E = p * c_v + 0.5 * rho * (u1 * u1 + u2 * u2)
        U = np.stack([rho, rho * u1, rho * u2, E])
        F = np.stack([rho * un, rho * u1 * un, rho * u2 * un, (E + p) * un])
        F[1 + axis] += p
        c = np.sqrt(gamma * p / rho)
        fluxes.append(F)
        conss.append(U)
        speeds.append((un - c, un + c))
    SL = np.minimum(speeds[0][0], speeds[1][0])
    SR = np.maximum(speeds[0][1], speeds[1][1])
    FL, FR = fluxes
    UL, UR = conss
    with np.errstate(divide="ignore", invalid="ignore"):
        mid = (SR * FL - SL * FR + SL * SR * (UR - UL)) / (SR - SL)
    return np.where(SL >= 0.0, FL, np.where(SR <= 0.0, FR, mid))


def _rhs(U, c_v, h1, h2):
    W = cons_to_prim_array(U, c_v)
    V = np.stack([W[0], W[2], W[3], W[0] * W[1]])
    dU = np.zeros_like(U)
    for axis, h in ((0, h1), (1, h2)):
        ax = axis + 1
        if V.shape[ax] == 1:
            continue
        s = _minmod(V - np.roll(V, 1, axis=ax), np.roll(V, -1, axis=ax) - V)
        VL = V + 0.5 * s
        VR = np.roll(V - 0.5 * s, -1, axis=ax)
        F = _hll(VL, VR, axis, c_v)
        dU -= (F - np.roll(F, 1, axis=ax)) / h
    return dU


def _max_speeds(U, c_v):
    W = cons_to_prim_array(U, c_v)
    c = np.sqrt((1.0 + 1.0 / c_v) * W[1])
    return float(np.max(np.abs(W[2]) + c)), float(np.max(np.abs(W[3]) + c))


def _max_slope(W, h1, h2):
    g = 0.0
    for ax, h in ((1, h1), (2, h2)):
        if W.shape[ax] > 1:
            g = max(g, float(np.max(np.abs(W - np.roll(W, 1, axis=ax)))) / h)
    return g


def max_signal_speed(f: TorusField, params: ThermoParams) -> float:
    """``max |u1| + c`` over the cells."""
    return float(np.max(np.abs(f.data[2]) + np.sqrt(params.gamma * f.data[1])))


def evolve_smooth(init: TorusField, T: float, params: ThermoParams,
                  n_snapshots: int = DEFAULT_SNAPSHOTS, times=None,
                  cfl: float = DEFAULT_CFL) -> SpaceTimeField:
    """Evolve ``init`` on the torus; snapshots at ``times`` (default uniform).

    The first snapshot is the initial field itself.
    """
    if times is None:
        times = T * np.arange(1, n_snapshots + 1) / n_snapshots
    times = np.asarray(times, dtype=float)
    if np.any(times <= 0.0) or np.any(np.diff(times) <= 0.0):
        raise ValueError("snapshot times must be positive and increasing")
    c_v = params.c_v
    W0 = init.data.copy()
    if np.any(W0[0] <= 0.0) or np.any(W0[1] <= 0.0):
        raise ValueError("initial density and temperature must be positive")
    U0 = prim_to_cons_array(W0, c_v)
    h1, h2 = init.h1, init.h2
    g0 = _max_slope(W0, h1, h2)

    frames = [W0.copy()]
    out_times = [0.0 if init.t is None else float(init.t)]
    U = U0.copy()
    t = out_times[0]
    last_safe = t
    for t_out in times:
        while t < t_out:
            s1, s2 = _max_speeds(U, c_v)
            rate = s1 / h1 + (s2 / h2 if init.ny > 1 else 0.0)
            dt = min(cfl / rate, t_out - t)
            try:
                U1 = U + dt * _rhs(U, c_v, h1, h2)
                U2 = 0.5 * U + 0.5 * (U1 + dt * _rhs(U1, c_v, h1, h2))
                W = cons_to_prim_array(U2, c_v)
            except VacuumError as exc:
                raise EvolutionError(f"positivity lost ({exc})", last_safe) from exc
            if g0 > 0.0 and _max_slope(W, h1, h2) > SLOPE_GROWTH_LIMIT * g0:
                raise EvolutionError("gradient blow-up", last_safe)
            U = U2
            t = t + dt if t_out - t > dt else float(t_out)
            last_safe = t
        W = cons_to_prim_array(U, c_v)
        # cells never touched keep their exact initial primitives
        untouched = np.all(U == U0, axis=0)
        W[:, untouched] = W0[:, untouched]
        frames.append(W)
        out_times.append(t)
    return SpaceTimeField(np.array(out_times), np.stack(frames), {"kind": "smooth"})


# ---------------------------------------------------------------------------
# horizons

def _band_masks(x1, partition, delta, lo, hi):
    """Per line: masks of ``lo <= -(x1-x^i) <= hi`` and ``lo <= x1-x^i <= hi``."""
    out = []
    for xi in partition.points:
        d = periodic_offset(x1, xi)
        out.append(((d <= -lo) & (d >= -hi), (d >= lo) & (d <= hi)))
    return out


def plateau_persistence_time(traj: SpaceTimeField, partition: Partition, delta: float,
                             riemann, tol: float = PLATEAU_TOL) -> float:
    """Largest snapshot time up to which every band ``5d/4 <= |x1-x^i| <= 7d/4``
    still holds its plateau constant within ``tol``."""
    x1 = (np.arange(traj.nx) + 0.5) / traj.nx
    masks = _band_masks(x1, partition, delta, 1.25 * delta, 1.75 * delta)
    if not any(m.any() for pair in masks for m in pair):
        raise ValueError("no grid cells inside the persistence bands; refine the grid")
    L = riemann.left.as_array()[:, None, None]
    R = riemann.right.as_array()[:, None, None]
    t_s = 0.0
    for k in range(len(traj)):
        W = traj.data[k]
        err = 0.0
        for ml, mr in masks:
            if ml.any():
                err = max(err, float(np.max(np.abs(W[:, ml, :] - L))))
            if mr.any():
                err = max(err, float(np.max(np.abs(W[:, mr, :] - R))))
        if err > tol:
            if k == 0:
                logger.warning("plateaus violated already at t=%g (error %.3g)", traj.times[0], err)
            break
        t_s = float(traj.times[k])
    return t_s


def riemann_window(lam: float, delta: float) -> float:
    """Largest ``t`` with ``lam * t <= delta``."""
    if not lam > 0.0:
        raise ValueError("signal speed must be positive")
    return delta / lam


# ---------------------------------------------------------------------------
# pasting

def _xi(d, t):
    if t == 0.0:
        return np.where(d < 0.0, -np.inf, np.inf)
    return d / t


def _paste(traj, fans, partition, delta, lines):
    x1 = (np.arange(traj.nx) + 0.5) / traj.nx
    data = traj.data.copy()
    reach = 1.75 * delta
    for i in lines:
        d = periodic_offset(x1, partition.points[i])
        m = np.abs(d) <= reach
        if not m.any():
            continue
        for k, t in enumerate(traj.times):
            w = fans[i].sample_array(_xi(d[m], float(t)))  # (4, n_band)
            data[k][:, m, :] = w[:, :, None]
    return data


def _check_assembly_inputs(traj, fans, partition, delta, horizon):
    if len(fans) != partition.n:
        raise ValueError(f"need one fan per partition line ({partition.n}), got {len(fans)}")
    t_r = riemann_window(max(f.lam for f in fans), delta)
    if horizon.t > t_r * (1.0 + 1e-12):
        raise HorizonError(f"horizon {horizon.t:.6g} exceeds the Riemann window {t_r:.6g}")
    sub = traj.until(horizon.t)
    if len(sub) == 0:
        raise HorizonError("no snapshots inside the horizon")
    return sub


def assemble(traj: SpaceTimeField, fans: Sequence[FanProvider], partition: Partition,
             delta: float, horizon: Horizon) -> SpaceTimeField:
    """Smooth trajectory away from the lines, translated fans within ``7 delta/4``."""
    sub = _check_assembly_inputs(traj, fans, partition, delta, horizon)
    data = _paste(sub, fans, partition, delta, range(partition.n))
    meta = {"kind": "assembly", "delta": delta, "horizon": [horizon.t_s, horizon.t_r],
            "partition": list(partition.points)}
    return SpaceTimeField(sub.times, data, meta)


def assemble_entropy_producing(traj: SpaceTimeField, fans: Sequence[FanProvider],
                               partition: Partition, delta: float, horizon: Horizon,
                               i_star: int, standard_fan: WaveFan | None = None) -> SpaceTimeField:
    """Like :func:`assemble` but line ``i_star`` (1-based) carries the
    self-similar fan, which must contain a shock.

    ``standard_fan`` defaults to ``fans[i_star - 1]`` when that is a
    :class:`WaveFan`.
    """
    if not 1 <= i_star <= partition.n:
        raise ValueError(f"i_star must lie in 1..{partition.n}, got {i_star}")
    if standard_fan is None:
        standard_fan = fans[i_star - 1]
        if not isinstance(standard_fan, WaveFan):
            raise ValueError("pass the self-similar fan for line i_star explicitly")
    if not standard_fan.has_shock:
        raise NoEntropyProduction(f"no entropy production available: fan at line {i_star} is shock-free")
    fans = list(fans)
    fans[i_star - 1] = standard_fan
    out = assemble(traj, fans, partition, delta, horizon)
    out.meta.update(entropy_producing=True, i_star=i_star)
    return out


def overlap_consistency(traj: SpaceTimeField, fans: Sequence[FanProvider], partition: Partition,
                        delta: float, horizon: Horizon) -> float:
    """Sup of ``|smooth - fan|`` over snapshots up to the horizon and cells of
    the overlap bands ``5d/4 <= |x1 - x^i| <= 7d/4``."""
    sub = traj.until(horizon.t)
    x1 = (np.arange(sub.nx) + 0.5) / sub.nx
    worst = 0.0
    for i, xi in enumerate(partition.points):
        d = periodic_offset(x1, xi)
        m = (np.abs(d) >= 1.25 * delta) & (np.abs(d) <= 1.75 * delta)
        if not m.any():
            continue
        for k, t in enumerate(sub.times):
            w = fans[i].sample_array(_xi(d[m], float(t)))
            worst = max(worst, float(np.max(np.abs(sub.data[k][:, m, :] - w[:, :, None]))))
    return worst


def distinct_on_ball(a: SpaceTimeField, b: SpaceTimeField, ball: Ball, tau: float) -> bool:
    """True iff the fields differ by more than 1e-10 on ``[0, tau) x ball``."""
    if a.data.shape[1:] != b.data.shape[1:]:
        raise ValueError("grid mismatch")
    ka = a.times < tau
    kb = b.times < tau
    if not np.array_equal(a.times[ka], b.times[kb]):
        raise ValueError("snapshot times differ inside [0, tau)")
    m = ball.mask(a.nx, a.ny)
    if not m.any() or not ka.any():
        return False
    diff = np.abs(a.data[ka][:, :, m] - b.data[kb][:, :, m])
    return bool(np.max(diff) > DISTINCT_TOL)
