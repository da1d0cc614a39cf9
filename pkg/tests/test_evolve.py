import math

import numpy as np
import pytest

from wilddata import evolve
from wilddata.evolve import (
    Ball,
    EvolutionError,
    Horizon,
    HorizonError,
    NoEntropyProduction,
    SpaceTimeField,
    assemble,
    assemble_entropy_producing,
    distinct_on_ball,
    evolve_smooth,
    max_signal_speed,
    overlap_consistency,
    plateau_persistence_time,
    riemann_window,
)
from wilddata.riemann import RiemannData, solve_fan
from wilddata.surgery import (
    TorusField,
    WildDataSpec,
    build_wild_data,
    lq_distance,
    make_base,
    make_partition,
    smooth_extension,
)
from wilddata.thermo import PrimitiveState, prim_to_cons_array
from wilddata.verify import entropy_production_total

BG = PrimitiveState(1.0, 1.0)


def quasi1d(riemann, nx, ny=2, epsilon=0.6, delta=1 / 16, base=None):
    """Constant base, two lines at 0 and 1/2."""
    part = make_partition(epsilon)
    spec = WildDataSpec(part, delta, riemann, 1.0, base or make_base("constant"))
    return spec, smooth_extension(spec, nx, ny), build_wild_data(spec, nx, ny)


def constructed(params, riemann, nx=512, ny=2):
    spec, ext, wild = quasi1d(riemann, nx, ny)
    fan = solve_fan(riemann, params)
    t_r = riemann_window(fan.lam, spec.delta)
    probe = evolve_smooth(ext, t_r, params, n_snapshots=32)
    t_s = plateau_persistence_time(probe, spec.partition, spec.delta, riemann)
    h = Horizon(t_s, t_r)
    traj = evolve_smooth(ext, h.t, params, n_snapshots=16)
    return spec, wild, [fan] * spec.partition.n, traj, h


def test_constant_field_bitwise(params):
    f = TorusField(np.broadcast_to(np.array([1.2, 0.8, 0.3, -0.1])[:, None, None], (4, 32, 16)).copy())
    tr = evolve_smooth(f, 0.3, params, n_snapshots=20)
    for W in tr.data:
        assert np.array_equal(W, f.data)


def test_acoustic_wave_speed(params):
    f = TorusField.from_sampler(make_base("acoustic", amplitude=1e-3), 512, 1)
    T = 0.2
    tr = evolve_smooth(f, T, params, n_snapshots=16)
    phase = [np.angle(np.fft.rfft(W[0, :, 0] - 1.0)[1]) for W in (tr.data[0], tr.data[-1])]
    speed = ((phase[0] - phase[1]) % (2 * math.pi)) / (2 * math.pi * T)
    assert speed == pytest.approx(math.sqrt(params.gamma), rel=0.02)


def test_conservation(params):
    f = TorusField.from_sampler(make_base("smooth-vortex"), 64, 64)
    tr = evolve_smooth(f, 0.05, params, n_snapshots=16)
    tot = [prim_to_cons_array(W, params.c_v).sum(axis=(1, 2)) / 64 ** 2 for W in tr.data]
    for t in tot[1:]:
        np.testing.assert_allclose(t, tot[0], rtol=1e-12, atol=1e-13)


def test_positivity_loss_raises_with_last_safe_time(params):
    x = (np.arange(128) + 0.5) / 128
    W = np.stack([np.ones(128), np.full(128, 0.01), 20 * np.sin(2 * np.pi * x), np.zeros(128)])
    with pytest.raises(EvolutionError) as info:
        evolve_smooth(TorusField(W[:, :, None]), 0.2, params, n_snapshots=16)
    assert 0.0 < info.value.last_safe_time < 0.2


def test_gradient_blow_up_raises(params, monkeypatch):
    monkeypatch.setattr(evolve, "SLOPE_GROWTH_LIMIT", 2.0)
    x = (np.arange(128) + 0.5) / 128
    W = np.stack([np.ones(128), np.ones(128), -0.8 * np.sin(2 * np.pi * x), np.zeros(128)])
    with pytest.raises(EvolutionError, match="blow-up") as info:
        evolve_smooth(TorusField(W[:, :, None]), 0.5, params, n_snapshots=16)
    assert info.value.last_safe_time > 0.0


def test_snapshot_times_validated(params):
    f = TorusField(np.ones((4, 8, 8)))
    with pytest.raises(ValueError):
        evolve_smooth(f, 1.0, params, times=[0.2, 0.1])
    with pytest.raises(ValueError):
        SpaceTimeField([0.0, 0.0], np.ones((2, 4, 2, 2)))


def test_riemann_window():
    assert riemann_window(2.0, 0.01) == 0.005
    assert riemann_window(2.0, 0.005) == 0.5 * riemann_window(2.0, 0.01)
    with pytest.raises(ValueError):
        riemann_window(0.0, 0.01)


def test_horizon():
    assert Horizon(0.3, 0.2).t == 0.2
    with pytest.raises(HorizonError):
        Horizon(0.0, 0.2)


def test_persistence_of_constant_bands(params, sod):
    s = PrimitiveState(1.0, 1.0)
    spec, ext, _ = quasi1d(RiemannData(s, s), 256)
    tr = evolve_smooth(ext, 0.05, params, n_snapshots=16)
    assert plateau_persistence_time(tr, spec.partition, spec.delta, spec.riemann, 0.0) == tr.times[-1]
    # wrong plateau data: violated at the first snapshot
    assert plateau_persistence_time(tr, spec.partition, spec.delta, sod) == 0.0


def test_initial_trace_is_the_wild_data(params, sod):
    spec, wild, fans, traj, h = constructed(params, sod)
    a = assemble(traj, fans, spec.partition, spec.delta, h)
    assert np.array_equal(a.data[0], wild.data)
    early = TorusField(a.data[1])
    assert lq_distance(early, wild, 1.0) < 5 * a.times[1] * max(f.lam for f in fans)


def test_trivial_fans_leave_trajectory_unchanged(params):
    s = PrimitiveState(1.0, 1.0, (0.1, 0.0))
    spec, ext, _ = quasi1d(RiemannData(s, s), 256, base=make_base("constant", u=(0.1, 0.0)))
    fan = solve_fan(RiemannData(s, s), params)
    h = Horizon(1.0, riemann_window(fan.lam, spec.delta))
    traj = evolve_smooth(ext, h.t, params, n_snapshots=16)
    a = assemble(traj, [fan, fan], spec.partition, spec.delta, h)
    assert np.array_equal(a.data, traj.data)
    assert overlap_consistency(traj, [fan, fan], spec.partition, spec.delta, h) == 0.0


def test_overlap_small_inside_horizon(params, sod):
    spec, _, fans, traj, h = constructed(params, sod)
    assert overlap_consistency(traj, fans, spec.partition, spec.delta, h) <= 1e-6


def test_overlap_negative_control(params, sod):
    spec, ext, _ = quasi1d(sod, 512)
    fan = solve_fan(sod, params)
    T = 3.0 * riemann_window(fan.lam, spec.delta)
    traj = evolve_smooth(ext, T, params, n_snapshots=16)
    h = Horizon(T, T)
    assert overlap_consistency(traj, [fan, fan], spec.partition, spec.delta, h) > 1e-3
    with pytest.raises(HorizonError):
        assemble(traj, [fan, fan], spec.partition, spec.delta, h)


def test_locality_of_pasting(params, sod):
    spec, _, fans, traj, h = constructed(params, sod)
    a = assemble(traj, fans, spec.partition, spec.delta, h)
    other = solve_fan(RiemannData(sod.left, PrimitiveState(0.5, 0.9, (0.1, 0.0))), params)
    b = assemble(traj, [fans[0], other], spec.partition, spec.delta, h)
    x1 = (np.arange(traj.nx) + 0.5) / traj.nx
    band = np.abs((x1 - spec.partition.points[1] + 0.5) % 1.0 - 0.5) <= 1.75 * spec.delta
    assert np.array_equal(a.data[:, :, ~band], b.data[:, :, ~band])
    assert not np.array_equal(a.data[:, :, band], b.data[:, :, band])


def test_fan_count_must_match(params, sod):
    spec, _, fans, traj, h = constructed(params, sod)
    with pytest.raises(ValueError):
        assemble(traj, fans[:1], spec.partition, spec.delta, h)


def test_entropy_producing_variant(params, sod):
    spec, _, fans, traj, h = constructed(params, sod, nx=1024)
    a = assemble_entropy_producing(traj, fans, spec.partition, spec.delta, h, i_star=1)
    assert a.meta["entropy_producing"] and a.meta["i_star"] == 1
    assert entropy_production_total(a, params) > 0.0
    with pytest.raises(ValueError):
        assemble_entropy_producing(traj, fans, spec.partition, spec.delta, h, i_star=3)
    with pytest.raises(ValueError):
        assemble_entropy_producing(traj, fans, spec.partition, spec.delta, h, i_star=0)


def test_entropy_producing_differs_only_on_its_band(params, sod):
    s = PrimitiveState(1.0, 1.0)
    spec, ext, _ = quasi1d(RiemannData(s, s), 512)
    trivial = solve_fan(RiemannData(s, s), params)
    standard = solve_fan(sod, params)
    h = Horizon(1.0, riemann_window(standard.lam, spec.delta))
    traj = evolve_smooth(ext, h.t, params, n_snapshots=16)
    plain = assemble(traj, [trivial, trivial], spec.partition, spec.delta, h)
    ep = assemble_entropy_producing(traj, [trivial, trivial], spec.partition, spec.delta, h,
                                    i_star=2, standard_fan=standard)
    x1 = (np.arange(512) + 0.5) / 512
    band = np.abs((x1 - 0.5 + 0.5) % 1.0 - 0.5) <= 1.75 * spec.delta
    assert np.array_equal(plain.data[:, :, ~band], ep.data[:, :, ~band])
    assert not np.array_equal(plain.data[:, :, band], ep.data[:, :, band])


def test_shock_free_fan_rejected(params):
    d = RiemannData(PrimitiveState(1.0, 1.0, (-0.5, 0.0)), PrimitiveState(1.0, 1.0, (0.5, 0.0)))
    spec, _, fans, traj, h = constructed(params, d)
    with pytest.raises(NoEntropyProduction):
        assemble_entropy_producing(traj, fans, spec.partition, spec.delta, h, i_star=1)


def test_distinct_on_ball():
    data = np.ones((3, 4, 16, 16))
    a = SpaceTimeField([0.0, 0.1, 0.2], data)
    b = SpaceTimeField([0.0, 0.1, 0.2], data.copy())
    ball = Ball((0.5, 0.5), 0.1)
    assert not distinct_on_ball(a, b, ball, 0.3)
    b.data[1, 0, 8, 8] += 1e-3
    assert distinct_on_ball(a, b, ball, 0.3)
    assert not distinct_on_ball(a, b, Ball((0.1, 0.1), 0.1), 0.3)
    assert not distinct_on_ball(a, b, ball, 0.05)
    with pytest.raises(ValueError):
        distinct_on_ball(a, SpaceTimeField([0.0], np.ones((1, 4, 8, 8))), ball, 0.3)


def test_max_signal_speed(params):
    f = TorusField(np.broadcast_to(np.array([1.0, 1.0, -0.5, 3.0])[:, None, None], (4, 4, 4)).copy())
    assert max_signal_speed(f, params) == pytest.approx(0.5 + math.sqrt(1.4), rel=1e-15)
