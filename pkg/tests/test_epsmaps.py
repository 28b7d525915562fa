import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qamlab.epsmaps import (
    DeltaSequence,
    PhasePoint,
    TorusMapSpec,
    enumerate_delta_sequences,
    iterate,
    period_map,
    portrait,
    reduce_torus,
    seed_grid,
    step,
    step_tangent,
)

TWO_PI = 2 * math.pi
angles = st.floats(-50, 50, allow_nan=False)


def test_step_by_hand():
    spec = TorusMapSpec(0.3, 0.2, DeltaSequence(13, (10,)))
    th, J = step(PhasePoint(1.0, 0.5), 0, spec, lifted=True)
    assert th == pytest.approx(1.5)
    assert J == pytest.approx(0.5 + TWO_PI * 10 / 13 + 0.2 + 0.3 * math.sin(1.5))


@settings(max_examples=50, deadline=None)
@given(angles, angles, st.floats(-2, 2))
def test_tangent_matches_finite_difference(theta, J, k):
    spec = TorusMapSpec(k, 0.1, DeltaSequence.constant(2))
    h = 1e-6
    M = step_tangent(theta + J, k)
    for col, (dt, dj) in enumerate([(h, 0.0), (0.0, h)]):
        plus = step(PhasePoint(theta + dt, J + dj), 0, spec, lifted=True)
        minus = step(PhasePoint(theta - dt, J - dj), 0, spec, lifted=True)
        fd = (np.array(plus) - np.array(minus)) / (2 * h)
        np.testing.assert_allclose(M[:, col], fd, atol=1e-6)
    assert np.linalg.det(M) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(angles, angles)
def test_reduce_torus(theta, J):
    r = reduce_torus(PhasePoint(theta, J))
    assert 0 <= r.theta < TWO_PI and 0 <= r.J < TWO_PI
    for a, b in ((r.theta, theta), (r.J, J)):
        k = (b - a) / TWO_PI
        assert abs(k - round(k)) < 1e-9


def test_period_map_composes_steps():
    spec = TorusMapSpec(0.5, 0.3, DeltaSequence(3, (0, 1, 2)))
    pt = PhasePoint(0.7, 2.1)
    manual = pt
    for t in (1, 2, 3):
        manual = step(manual, t, spec)
    got = period_map(pt, spec, t_start=1)
    np.testing.assert_allclose(got, manual, atol=1e-13)
    with pytest.raises(ValueError):
        period_map(pt, spec, t_start=3)


def test_offsets_shifted_by_q_give_same_torus_map():
    ds = DeltaSequence(5, (1, 3))
    a = TorusMapSpec(0.4, 0.2, ds)
    b = TorusMapSpec(0.4, 0.2, ds.shifted(2))
    pts = seed_grid(6)
    np.testing.assert_allclose(np.array(period_map(pts, a)), np.array(period_map(pts, b)), atol=1e-12)
    assert b.deltas.winding == ds.winding + 2 * 5 * 2


def test_iterate_and_portrait_shapes():
    spec = TorusMapSpec(0.2, 0.0, DeltaSequence.constant(2))
    th, J = iterate(PhasePoint(0.1, 0.2), spec, 7)
    assert th.shape == (8,) and J.shape == (8,)
    seeds = seed_grid(3, 4)
    assert seeds.theta.size == 12
    out = portrait(spec, seeds, 5)
    assert out.shape == (12, 6, 2)
    assert np.all((out >= 0) & (out < TWO_PI))
    np.testing.assert_allclose(out[:, 0, 0], seeds.theta)
    with pytest.raises(ValueError):
        portrait(spec, seeds, 0)


def test_enumerate_delta_sequences_small():
    got = enumerate_delta_sequences(2, 2, [0])
    assert [ds.d for ds in got] == [(-1, 1), (0, 0)]
    got = enumerate_delta_sequences(3, 2, (0, 1))
    assert all(ds.winding in (0, 1) for ds in got)
    # canonical rotations are unique
    assert len({ds.d for ds in got}) == len(got)
    assert all(ds.d == min(ds.d[i:] + ds.d[:i] for i in range(2)) for ds in got)


def test_delta_sequence_properties():
    ds = DeltaSequence(13, (10, 3))
    assert ds.T == 2
    assert ds.Delta_T == pytest.approx(TWO_PI * 13 / 26)
    assert ds.delta(3) == pytest.approx(TWO_PI * 3 / 13)
    with pytest.raises(ValueError):
        DeltaSequence(0, (1,))
    with pytest.raises(ValueError):
        DeltaSequence(3, ())
