"""End-to-end construction: surgery, fans, smooth evolution, pasting, checks."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import RunConfig
from .evolve import (
    PLATEAU_TOL,
    Ball,
    EvolutionError,
    Horizon,
    SpaceTimeField,
    assemble,
    assemble_entropy_producing,
    distinct_on_ball,
    evolve_smooth,
    overlap_consistency,
    plateau_persistence_time,
    riemann_window,
)
from .riemann import RiemannData, WaveFan, solve_fan
from .surgery import (
    DeltaChoice,
    TorusField,
    WildDataSpec,
    build_wild_data,
    choose_delta,
    lq_distance,
    make_base,
    make_partition,
    smooth_extension,
)
from .thermo import PrimitiveState, ThermoParams
from .verify import (
    ResidualReport,
    bounds_box_from,
    bounds_check,
    entropy_production_total,
    make_test_family,
    weak_residuals,
)

# weak-form pass thresholds, in units of the grid width h
RESIDUAL_C = 1.0
ENTROPY_C = 1.0
OVERLAP_TOL = 1e-6
MAX_HORIZON_PASSES = 4


@dataclass
class Construction:
    """One pasted solution: data, smooth trajectory and its assembly."""

    spec: WildDataSpec
    fans: list[WaveFan]
    extension: TorusField
    wild: TorusField
    trajectory: SpaceTimeField | None = None
    assembly: SpaceTimeField | None = None


@dataclass
class PipelineResult:
    config: RunConfig
    choice: DeltaChoice
    horizon: Horizon
    main: Construction
    mirror: Construction
    report: ResidualReport
    verdict: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.verdict.get("pass"))


def _state(v) -> PrimitiveState:
    return PrimitiveState(v[0], v[1], (v[2], v[3]))


def _construction(spec, params, nx, ny) -> Construction:
    fan = solve_fan(spec.riemann, params)
    return Construction(spec, [fan] * spec.partition.n, smooth_extension(spec, nx, ny),
                        build_wild_data(spec, nx, ny))


def _times(T, k):
    return T * np.arange(1, k + 1) / k


def find_horizon(cons: list[Construction], delta: float, params: ThermoParams, snapshots: int,
                 tol: float = PLATEAU_TOL) -> tuple[Horizon, list[SpaceTimeField]]:
    """Common horizon ``min(t_s, t_r)`` for several constructions on one grid.

    A first evolution up to ``t_r`` locates ``t_s``; the trajectories are
    then recomputed with ``snapshots`` uniform frames up to the horizon and
    re-checked, shrinking the horizon if the finer time grid disagrees.
    """
    lam = max(f.lam for c in cons for f in c.fans)
    t_r = riemann_window(lam, delta)
    t_s = t_r
    for c in cons:
        probe = evolve_smooth(c.extension, t_r, params, n_snapshots=snapshots)
        t_s = min(t_s, plateau_persistence_time(probe, c.spec.partition, delta, c.spec.riemann, tol))
    if t_s <= 0.0:
        raise EvolutionError("plateaus are not held even at the first snapshot", 0.0)
    for _ in range(MAX_HORIZON_PASSES):
        horizon = Horizon(t_s, t_r)
        trajs = [evolve_smooth(c.extension, horizon.t, params, times=_times(horizon.t, snapshots))
                 for c in cons]
        again = min(plateau_persistence_time(tr, c.spec.partition, delta, c.spec.riemann, tol)
                    for tr, c in zip(trajs, cons))
        if again >= horizon.t:
            return horizon, trajs
        if again <= 0.0:
            break
        t_s = again
    raise EvolutionError("plateau persistence time kept shrinking; refine the grid", t_s)


def probe_centres(n: int, seed: int) -> np.ndarray:
    return np.random.default_rng(seed).random((n, 2))


@dataclass
class Setup:
    """Everything fixed before any time stepping."""

    config: RunConfig
    params: ThermoParams
    choice: DeltaChoice
    main: Construction
    mirror: Construction

    @property
    def delta(self) -> float:
        return self.choice.delta

    @property
    def partition(self):
        return self.main.spec.partition


def prepare(cfg: RunConfig) -> Setup:
    """Partition, delta, surgered data and smooth extensions, fans."""
    params = ThermoParams(cfg.c_v)
    partition = make_partition(cfg.epsilon, cfg.n_hint)
    bparams = dict(cfg.base_params)
    if cfg.base == "acoustic":
        bparams.setdefault("c_v", cfg.c_v)
    base = make_base(cfg.base, **bparams)
    riemann = RiemannData(_state(cfg.left), _state(cfg.right))
    choice = choose_delta(base, partition, riemann, cfg.q, cfg.epsilon)
    spec = WildDataSpec(partition, choice.delta, riemann, cfg.q, base)
    mspec = WildDataSpec(partition, choice.delta, riemann.mirrored(), cfg.q, base)
    return Setup(cfg, params, choice, _construction(spec, params, cfg.nx, cfg.ny),
                 _construction(mspec, params, cfg.nx, cfg.ny))


def evolve_stage(setup: Setup) -> Horizon:
    """Common horizon of the main and mirrored constructions; fills trajectories."""
    horizon, (traj, mtraj) = find_horizon([setup.main, setup.mirror], setup.delta, setup.params,
                                          setup.config.snapshots)
    setup.main.trajectory, setup.mirror.trajectory = traj, mtraj
    return horizon


def assemble_stage(setup: Setup, horizon: Horizon):
    cfg, part, delta = setup.config, setup.partition, setup.delta
    main, mirror = setup.main, setup.mirror
    if cfg.i_star is not None:
        main.assembly = assemble_entropy_producing(main.trajectory, main.fans, part, delta, horizon,
                                                   cfg.i_star)
    else:
        main.assembly = assemble(main.trajectory, main.fans, part, delta, horizon)
    mirror.assembly = assemble(mirror.trajectory, mirror.fans, part, delta, horizon)


def run_pipeline(cfg: RunConfig) -> PipelineResult:
    setup = prepare(cfg)
    horizon = evolve_stage(setup)
    assemble_stage(setup, horizon)
    return verify_stage(setup, horizon)


def verify_stage(setup: Setup, horizon: Horizon) -> PipelineResult:
    cfg, params, choice = setup.config, setup.params, setup.choice
    partition, delta = setup.partition, setup.delta
    main, mirror = setup.main, setup.mirror
    traj, mtraj = main.trajectory, mirror.trajectory

    family = make_test_family(horizon.t, partition, delta)
    report = weak_residuals(main.assembly, family, main.wild, params)
    box = bounds_box_from(main.fans[0].states(), [traj.data])
    ok_box, offenders = bounds_check(main.assembly, box)
    report.bounds = {"ok": ok_box, "box": box.__dict__, "offenders": offenders}
    report.entropy_production = entropy_production_total(main.assembly, params)

    base_field = TorusField.from_sampler(main.spec.base, cfg.nx, cfg.ny)
    m3_grid = lq_distance(main.wild, base_field, cfg.q)
    overlap = max(overlap_consistency(traj, main.fans, partition, delta, horizon),
                  overlap_consistency(mtraj, mirror.fans, partition, delta, horizon))

    centres = probe_centres(cfg.probes, cfg.seed)
    balls = [Ball((float(c[0]), float(c[1])), cfg.epsilon) for c in centres]
    distinct = [distinct_on_ball(main.assembly, mirror.assembly, b, horizon.t) for b in balls]
    self_distinct = distinct_on_ball(main.assembly, main.assembly, balls[0], horizon.t)

    h = report.h
    rel_max = report.max_magnitudes(relative=True)
    a = main.assembly.data
    checks = {
        "surgery_distance": {
            "pass": bool(choice.distance <= cfg.epsilon and m3_grid <= cfg.epsilon),
            "band_distance": choice.distance, "grid_distance": m3_grid, "epsilon": cfg.epsilon,
        },
        "bounds": {
            "pass": bool(ok_box and a[:, 0].min() > 0.0 and a[:, 1].min() > 0.0),
            "rho_min": float(a[:, 0].min()), "theta_min": float(a[:, 1].min()),
            "speed_max": float(np.hypot(a[:, 2], a[:, 3]).max()), "n_offenders": len(offenders),
        },
        "distinctness": {
            "pass": bool(all(distinct) and not self_distinct),
            "balls_distinct": int(sum(distinct)), "balls": len(balls), "self_comparison": self_distinct,
        },
        "overlap_consistency": {"pass": bool(overlap <= OVERLAP_TOL), "value": overlap},
        "weak_residuals": {
            "pass": bool(max(rel_max.values(), default=0.0) <= RESIDUAL_C * h),
            "max_relative": rel_max, "max_absolute": report.max_magnitudes(),
            "threshold": RESIDUAL_C * h, "n_tests": len(report.tests),
            "n_skipped": len(report.skipped),
        },
        "entropy_inequality": {
            "pass": bool(report.entropy_min() >= -ENTROPY_C * h),
            "min": report.entropy_min(), "C_measured": report.entropy_constant(),
            "threshold": -ENTROPY_C * h, "caveat": report.caveat,
        },
    }
    if cfg.i_star is not None:
        checks["entropy_production"] = {"pass": bool(report.entropy_production > 0.0),
                                        "value": report.entropy_production, "i_star": cfg.i_star}
    verdict = {
        "pass": all(c["pass"] for c in checks.values()),
        "checks": checks,
        "delta": delta,
        "delta_halvings": choice.halvings,
        "horizon": {"t_s": horizon.t_s, "t_r": horizon.t_r, "t": horizon.t},
        "lambda": max(f.lam for f in main.fans),
        "partition": list(partition.points),
        "grid": [cfg.nx, cfg.ny],
    }
    return PipelineResult(cfg, choice, horizon, main, mirror, report, verdict)
