import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import lq_brute
from wilddata.riemann import RiemannData
from wilddata.surgery import (
    EpsilonUnattainable,
    Partition,
    SurgeryError,
    TorusField,
    WildDataSpec,
    ball_meets_partition,
    band_lq_distance,
    build_wild_data,
    choose_delta,
    lq_distance,
    make_base,
    make_partition,
    smooth_extension,
    surgery_values,
)
from wilddata.thermo import PrimitiveState


@pytest.fixture
def spec(sod):
    part = make_partition(0.3)
    return WildDataSpec(part, part.min_gap() / 8.0, sod, 1.0, make_base("smooth-vortex"))


def test_partition_example():
    p = make_partition(0.3)
    assert p.points == (0.0, 0.25, 0.5, 0.75)


@pytest.mark.parametrize("eps", [0.0, 1.0, 1.0001, -0.2])
def test_partition_rejects_bad_epsilon(eps):
    with pytest.raises(SurgeryError):
        make_partition(eps)


def test_partition_respects_hint():
    assert make_partition(0.3, n_hint=7).n == 7


@settings(max_examples=60, deadline=None)
@given(st.floats(0.02, 0.99))
def test_partition_gaps_below_epsilon(eps):
    p = make_partition(eps)
    assert p.gaps().max() < eps
    assert p.gaps().sum() == pytest.approx(1.0, abs=1e-12)


def test_every_epsilon_ball_meets_a_line():
    eps = 0.3
    p = make_partition(eps)
    centres = np.random.default_rng(0).random((10_000, 2))
    assert all(ball_meets_partition(p, c, eps) for c in centres)


def test_partition_validation():
    with pytest.raises(SurgeryError):
        Partition((0.5, 0.2), 0.6)


def test_overlapping_bands_rejected(sod):
    part = make_partition(0.3)
    with pytest.raises(SurgeryError):
        WildDataSpec(part, part.min_gap() / 5.0, sod, 1.0, make_base("constant"))


def test_plateau_and_jump_samples(spec, sod):
    d = spec.delta
    for xi in spec.partition.points:
        assert np.array_equal(surgery_values(spec, xi - 1.5 * d, 0.3), sod.left.as_array())
        assert np.array_equal(surgery_values(spec, xi + 0.5 * d, 0.3), sod.right.as_array())


def test_blend_midpoint_is_mean(spec, sod):
    d = spec.delta
    x1 = spec.partition.points[1] + 2.5 * d
    base = spec.base(x1, 0.7)
    np.testing.assert_allclose(surgery_values(spec, x1, 0.7),
                               0.5 * (sod.right.as_array() + base), rtol=1e-15)


def test_base_untouched_outside_bands(spec):
    f = build_wild_data(spec, 256, 32)
    b = TorusField.from_sampler(spec.base, 256, 32)
    far = np.ones(256, dtype=bool)
    for xi in spec.partition.points:
        far &= np.abs((f.x1 - xi + 0.5) % 1.0 - 0.5) >= 3.0 * spec.delta
    assert far.any()
    assert np.array_equal(f.data[:, far], b.data[:, far])


def test_extension_differs_only_in_inner_band(spec):
    f = build_wild_data(spec, 512, 16)
    e = smooth_extension(spec, 512, 16)
    inner = np.zeros(512, dtype=bool)
    for xi in spec.partition.points:
        inner |= np.abs((f.x1 - xi + 0.5) % 1.0 - 0.5) < spec.delta
    assert np.array_equal(f.data[:, ~inner], e.data[:, ~inner])
    assert not np.array_equal(f.data[:, inner], e.data[:, inner])


def test_extension_is_smooth_across_band_edges(spec):
    # one-sided difference quotients agree at x^i + delta up to O(h)
    xi, d = spec.partition.points[1], spec.delta
    gaps = []
    for h in (1e-4, 5e-5):
        x = xi + d + np.array([-2 * h, -h, 0.0, h, 2 * h])
        v = surgery_values(spec, x, np.full(5, 0.4), extension=True)
        left = (v[:, 2] - v[:, 1]) / h
        right = (v[:, 3] - v[:, 2]) / h
        gaps.append(np.max(np.abs(left - right)))
    assert gaps[1] < 0.6 * gaps[0] + 1e-9


def test_equal_plateaus_make_constant_band():
    s = PrimitiveState(1.0, 1.0)
    part = make_partition(0.3)
    spec = WildDataSpec(part, part.min_gap() / 8, RiemannData(s, s), 1.0, make_base("constant"))
    e = smooth_extension(spec, 256, 4)
    assert np.array_equal(e.data, np.broadcast_to(s.as_array()[:, None, None], e.data.shape))


def test_resolution_check(spec):
    with pytest.raises(SurgeryError):
        build_wild_data(spec, 128, 8)


def test_lq_distance_basics():
    rng = np.random.default_rng(6)
    a = TorusField(rng.random((4, 6, 5)))
    b = TorusField(rng.random((4, 6, 5)))
    assert lq_distance(a, a, 2.0) == 0.0
    for q in (1.0, 1.5, 2.0, 3.0):
        assert lq_distance(a, b, q) == pytest.approx(lq_brute(a.data, b.data, q), rel=1e-13)


def test_lq_single_cell():
    a = np.zeros((4, 4, 4))
    b = np.zeros((4, 4, 4))
    b[:, 1, 2] = [3.0, 4.0, 0.0, 0.0]
    for q in (1.0, 2.0, 4.0):
        assert lq_distance(TorusField(a), TorusField(b), q) == pytest.approx(
            (1 / 16) ** (1 / q) * 5.0, rel=1e-14)


def test_lq_rejects_mismatch():
    with pytest.raises(ValueError):
        lq_distance(TorusField(np.zeros((4, 2, 2))), TorusField(np.zeros((4, 3, 2))), 1.0)


def test_band_quadrature_equals_full_grid(spec):
    nx = int(round(8 / spec.delta))
    full = lq_distance(build_wild_data(spec, nx, 64), TorusField.from_sampler(spec.base, nx, 64), 1.0)
    assert band_lq_distance(spec, 8, 64) == pytest.approx(full, rel=1e-12)


def test_choose_delta_constant_base_takes_first_rung():
    s = PrimitiveState(1.0, 1.0)
    part = make_partition(0.3)
    c = choose_delta(make_base("constant"), part, RiemannData(s, s), 1.0, 0.3)
    assert c.delta == part.min_gap() / 8 and c.distance == 0.0 and c.halvings == 0


def test_distance_decreases_along_ladder(sod):
    part = make_partition(0.3)
    with pytest.raises(EpsilonUnattainable):
        choose_delta(make_base("smooth-vortex"), part, sod, 2.0, 1e-9, max_halvings=5)
    c = choose_delta(make_base("smooth-vortex"), part, sod, 2.0, 0.02)
    dists = [d for _, d in c.ladder]
    assert len(dists) >= 2
    assert all(b <= a for a, b in zip(dists, dists[1:]))
    assert c.distance <= 0.02


@pytest.mark.parametrize("q", [1.0, 2.0])
def test_choice_stable_under_refinement(sod, q):
    part = make_partition(0.1)
    c = choose_delta(make_base("smooth-vortex"), part, sod, q, 0.1)
    fine = band_lq_distance(WildDataSpec(part, c.delta, sod, q, make_base("smooth-vortex")), 16, 128)
    assert abs(fine - c.distance) <= 0.01 * c.distance
