"""Exact self-similar solver for the planar Riemann problem.

The solution depends on ``(t, x1)`` only through ``xi = x1/t``. The normal
velocity ``u1`` takes part in the wave structure, the transverse component
``u2`` is carried passively and jumps only across the contact.

The star-pressure iteration is vectorized so the Glimm scheme can solve all
cell interfaces of a grid in one call; :func:`solve_fan` is the scalar entry
point returning a :class:`WaveFan`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .thermo import PrimitiveState, ThermoParams, VacuumError

NEWTON_TOL = 1e-12
NEWTON_MAXITER = 100
# relative pressure jump below which a wave is reported as absent
TRIVIAL_WAVE_TOL = 1e-9


class RootFindingError(ArithmeticError):
    def __init__(self, msg, trace=()):
        super().__init__(msg)
        self.trace = list(trace)


@dataclass(frozen=True)
class RiemannData:
    left: PrimitiveState
    right: PrimitiveState

    def mirrored(self) -> "RiemannData":
        """Data reflected through ``x1 -> -x1``."""
        return RiemannData(self.right.mirrored(), self.left.mirrored())


@dataclass(frozen=True)
class Wave:
    kind: str  # "shock", "rarefaction" or "none"
    speeds: tuple[float, ...]  # one speed, or (head, tail) for a rarefaction


@dataclass(frozen=True)
class WaveFan:
    left: PrimitiveState
    right: PrimitiveState
    left_wave: Wave
    contact: float
    right_wave: Wave
    star_left: PrimitiveState
    star_right: PrimitiveState
    p_star: float
    lam: float
    gamma: float
    iterations: int = 0
    trace: tuple = field(default=(), repr=False)

    @property
    def constant(self) -> bool:
        return self.left == self.right

    @property
    def has_shock(self) -> bool:
        return "shock" in (self.left_wave.kind, self.right_wave.kind)

    def wave_speeds(self) -> list[float]:
        """All signal speeds, ordered left to right."""
        return list(self.left_wave.speeds) + [self.contact] + list(self.right_wave.speeds)

    def shocks(self) -> list[tuple[PrimitiveState, PrimitiveState, float]]:
        """``(left_of_shock, right_of_shock, speed)`` for every returned shock."""
        out = []
        if self.left_wave.kind == "shock":
            out.append((self.left, self.star_left, self.left_wave.speeds[0]))
        if self.right_wave.kind == "shock":
            out.append((self.star_right, self.right, self.right_wave.speeds[0]))
        return out

    def states(self) -> list[PrimitiveState]:
        """Constant states of the fan; rarefaction interiors lie between them."""
        if self.constant:
            return [self.left]
        return [self.left, self.star_left, self.star_right, self.right]

    def sample_array(self, xi) -> np.ndarray:
        """Primitive state ``(rho, theta, u1, u2)`` at similarity variable(s) ``xi``."""
        xi = np.asarray(xi, dtype=float)
        if self.constant:
            return np.broadcast_to(
                self.left.as_array().reshape((4,) + (1,) * xi.ndim), (4,) + xi.shape
            ).copy()
        WL = self.left.as_array().reshape((4,) + (1,) * xi.ndim)
        WR = self.right.as_array().reshape((4,) + (1,) * xi.ndim)
        w, _, _ = sample_batch(WL, WR, self.p_star, self.contact, xi, self.gamma)
        return w

    def sample(self, xi: float) -> PrimitiveState:
        return PrimitiveState.from_array(self.sample_array(float(xi)))


def sample_fan(f: WaveFan, xi: float) -> PrimitiveState:
    return f.sample(xi)


# ---------------------------------------------------------------------------
# star state

def _side_function(p, rho, pk, c, gamma):
    """Velocity-change function of one wave family and its derivative in p."""
    A = 2.0 / ((gamma + 1.0) * rho)
    B = (gamma - 1.0) / (gamma + 1.0) * pk
    shock = p > pk
    ps = np.where(shock, p, pk)  # keeps sqrt argument sane on the other branch
    q = np.sqrt(A / (ps + B))
    f_sh = (p - pk) * q
    df_sh = q * (1.0 - 0.5 * (p - pk) / (ps + B))
    pr = np.where(shock, pk, np.maximum(p, 0.0))
    ratio = pr / pk
    expo = (gamma - 1.0) / (2.0 * gamma)
    f_ra = 2.0 * c / (gamma - 1.0) * (ratio ** expo - 1.0)
    with np.errstate(divide="ignore"):
        df_ra = 1.0 / (rho * c) * ratio ** (-(gamma + 1.0) / (2.0 * gamma))
    return np.where(shock, f_sh, f_ra), np.where(shock, df_sh, df_ra)


def star_state(rhoL, uL, pL, rhoR, uR, pR, gamma, tol=NEWTON_TOL, maxiter=NEWTON_MAXITER,
               keep_trace=False):
    """Star pressure and velocity for arrays of Riemann problems.

    Bracketed Newton iteration on the monotone pressure function, starting
    from the mean side pressure; a step leaving the bracket is replaced by
    bisection. Returns ``(p_star, u_star, iterations, trace)``.
    """
    rhoL, uL, pL, rhoR, uR, pR = np.broadcast_arrays(
        *(np.asarray(a, dtype=float) for a in (rhoL, uL, pL, rhoR, uR, pR))
    )
    cL = np.sqrt(gamma * pL / rhoL)
    cR = np.sqrt(gamma * pR / rhoR)
    du = uR - uL
    vacuum = 2.0 / (gamma - 1.0) * (cL + cR) <= du
    if np.any(vacuum):
        idx = np.flatnonzero(vacuum.ravel())
        raise VacuumError(f"Riemann data generate vacuum (interfaces {idx[:10].tolist()})")

    def total(p):
        fl, dfl = _side_function(p, rhoL, pL, cL, gamma)
        fr, dfr = _side_function(p, rhoR, pR, cR, gamma)
        return fl + fr + du, dfl + dfr

    lo = np.zeros_like(pL)
    hi = np.maximum(pL, pR)
    # grow the upper bracket end until the function changes sign
    for _ in range(200):
        fhi, _ = total(hi)
        grow = fhi < 0.0
        if not np.any(grow):
            break
        hi = np.where(grow, 2.0 * hi, hi)
    p = 0.5 * (pL + pR)
    trace = []
    history = []  # max residual per iteration, reported on failure
    done = np.zeros(p.shape, dtype=bool)
    it = 0
    for it in range(1, maxiter + 1):
        fp, dfp = total(p)
        history.append(float(np.max(np.abs(fp))))
        if keep_trace:
            trace.append((p.copy(), fp.copy()))
        exact = fp == 0.0
        lo = np.where(fp < 0.0, p, lo)
        hi = np.where(fp > 0.0, p, hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            pn = p - fp / dfp
        bad = ~np.isfinite(pn) | (pn < lo) | (pn > hi)
        pn = np.where(bad, 0.5 * (lo + hi), pn)
        pn = np.where(exact | done, p, pn)
        conv = np.abs(pn - p) <= tol * np.abs(pn)
        done = done | conv | exact
        p = pn
        if np.all(done):
            break
    else:
        raise RootFindingError(
            f"star pressure iteration did not converge in {maxiter} steps",
            trace=history,
        )
    fl, _ = _side_function(p, rhoL, pL, cL, gamma)
    fr, _ = _side_function(p, rhoR, pR, cR, gamma)
    u = 0.5 * (uL + uR) + 0.5 * (fr - fl)
    return p, u, it, trace


def sample_batch(WL, WR, p_star, u_star, xi, gamma):
    """Sample exact fans at ``xi``.

    ``WL``/``WR`` are primitive stacks broadcastable against ``xi``. Returns
    ``(w, at_left, at_right)`` where the masks flag points that carry the
    unmodified side states.
    """
    rhoL, thL, uL, vL = WL
    rhoR, thR, uR, vR = WR
    pL = rhoL * thL
    pR = rhoR * thR
    cL = np.sqrt(gamma * thL)
    cR = np.sqrt(gamma * thR)
    g1 = (gamma - 1.0) / (gamma + 1.0)
    xi, p_star, u_star = np.broadcast_arrays(xi, p_star, u_star)
    shape = xi.shape

    rho = np.empty(shape)
    th = np.empty(shape)
    un = np.empty(shape)
    ut = np.empty(shape)
    at_left = np.zeros(shape, dtype=bool)
    at_right = np.zeros(shape, dtype=bool)

    left = xi < u_star
    # --- left of the contact
    rL = np.broadcast_to(p_star / pL, shape)
    shockL = rL > 1.0
    rho_sL = np.where(shockL, rhoL * (rL + g1) / (g1 * rL + 1.0), rhoL * rL ** (1.0 / gamma))
    c_sL = cL * np.where(shockL, 1.0, rL) ** ((gamma - 1.0) / (2.0 * gamma))
    sL = uL - cL * np.sqrt((gamma + 1.0) / (2.0 * gamma) * rL + (gamma - 1.0) / (2.0 * gamma))
    headL = np.where(shockL, sL, uL - cL)
    tailL = np.where(shockL, sL, u_star - c_sL)
    outL = left & (xi < headL)
    starL = left & ~outL & (xi >= tailL)
    fanL = left & ~outL & ~starL

    # --- right of the contact
    rR = np.broadcast_to(p_star / pR, shape)
    shockR = rR > 1.0
    rho_sR = np.where(shockR, rhoR * (rR + g1) / (g1 * rR + 1.0), rhoR * rR ** (1.0 / gamma))
    c_sR = cR * np.where(shockR, 1.0, rR) ** ((gamma - 1.0) / (2.0 * gamma))
    sR = uR + cR * np.sqrt((gamma + 1.0) / (2.0 * gamma) * rR + (gamma - 1.0) / (2.0 * gamma))
    headR = np.where(shockR, sR, uR + cR)
    tailR = np.where(shockR, sR, u_star + c_sR)
    right = ~left
    outR = right & (xi > headR)
    starR = right & ~outR & (xi <= tailR)
    fanR = right & ~outR & ~starR

    b = lambda a: np.broadcast_to(a, shape)  # noqa: E731
    for mask, r_, t_, n_, v_ in (
        (outL, b(rhoL), b(thL), b(uL), b(vL)),
        (outR, b(rhoR), b(thR), b(uR), b(vR)),
        (starL, b(rho_sL), b(p_star / rho_sL), b(u_star), b(vL)),
        (starR, b(rho_sR), b(p_star / rho_sR), b(u_star), b(vR)),
    ):
        rho[mask] = r_[mask]
        th[mask] = t_[mask]
        un[mask] = n_[mask]
        ut[mask] = v_[mask]

    # rarefaction interiors, evaluated only where needed
    if np.any(fanL):
        x, c0, u0 = xi[fanL], b(cL)[fanL], b(uL)[fanL]
        cc = 2.0 / (gamma + 1.0) * (c0 + 0.5 * (gamma - 1.0) * (u0 - x))
        rho[fanL] = b(rhoL)[fanL] * (cc / c0) ** (2.0 / (gamma - 1.0))
        th[fanL] = cc * cc / gamma
        un[fanL] = 2.0 / (gamma + 1.0) * (c0 + 0.5 * (gamma - 1.0) * u0 + x)
        ut[fanL] = b(vL)[fanL]
    if np.any(fanR):
        x, c0, u0 = xi[fanR], b(cR)[fanR], b(uR)[fanR]
        cc = 2.0 / (gamma + 1.0) * (c0 - 0.5 * (gamma - 1.0) * (u0 - x))
        rho[fanR] = b(rhoR)[fanR] * (cc / c0) ** (2.0 / (gamma - 1.0))
        th[fanR] = cc * cc / gamma
        un[fanR] = 2.0 / (gamma + 1.0) * (-c0 + 0.5 * (gamma - 1.0) * u0 + x)
        ut[fanR] = b(vR)[fanR]

    at_left[outL] = True
    at_right[outR] = True
    return np.stack([rho, th, un, ut]), at_left, at_right


# ---------------------------------------------------------------------------
# scalar solver

def _wave(p_star, u_star, s: PrimitiveState, gamma, sign) -> tuple[Wave, PrimitiveState]:
    pk = s.rho * s.theta
    c = math.sqrt(gamma * s.theta)
    un = s.u[0]
    r = p_star / pk
    g1 = (gamma - 1.0) / (gamma + 1.0)
    if r > 1.0:
        rho_s = s.rho * (r + g1) / (g1 * r + 1.0)
    else:
        rho_s = s.rho * r ** (1.0 / gamma)
    star = PrimitiveState(rho_s, p_star / rho_s, (u_star, s.u[1]))
    if r > 1.0:
        speed = un + sign * c * math.sqrt(
            (gamma + 1.0) / (2.0 * gamma) * r + (gamma - 1.0) / (2.0 * gamma)
        )
        kind = "none" if r - 1.0 <= TRIVIAL_WAVE_TOL else "shock"
        return Wave(kind, (speed,)), star
    if 1.0 - r <= TRIVIAL_WAVE_TOL:
        # same outer speed the sampler uses for a degenerate fan
        return Wave("none", (un + sign * c,)), star
    c_s = c * r ** ((gamma - 1.0) / (2.0 * gamma))
    head = un + sign * c
    tail = u_star + sign * c_s
    return Wave("rarefaction", (head, tail) if sign < 0 else (tail, head)), star


def solve_fan(d: RiemannData, p: ThermoParams) -> WaveFan:
    """Exact Riemann fan for planar data.

    Raises :class:`VacuumError` when the two rarefactions would open a
    vacuum and :class:`RootFindingError` if the pressure iteration stalls.
    """
    gamma = p.gamma
    L, R = d.left, d.right
    if L == R:
        c = math.sqrt(gamma * L.theta)
        un = L.u[0]
        return WaveFan(
            left=L, right=R,
            left_wave=Wave("none", (un - c,)), contact=un,
            right_wave=Wave("none", (un + c,)),
            star_left=L, star_right=R,
            p_star=L.rho * L.theta,
            lam=c + abs(un), gamma=gamma,
        )
    ps, us, it, trace = star_state(
        L.rho, L.u[0], L.rho * L.theta, R.rho, R.u[0], R.rho * R.theta, gamma, keep_trace=True
    )
    ps = float(ps)
    us = float(us)
    lw, sl = _wave(ps, us, L, gamma, -1.0)
    rw, sr = _wave(ps, us, R, gamma, +1.0)
    lam = max(abs(min(lw.speeds)), abs(max(rw.speeds)))
    return WaveFan(
        left=L, right=R, left_wave=lw, contact=us, right_wave=rw,
        star_left=sl, star_right=sr, p_star=ps, lam=lam, gamma=gamma,
        iterations=it, trace=tuple(float(t[1]) for t in trace),
    )
