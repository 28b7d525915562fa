import math

import numpy as np
import pytest

from qamlab.epsmaps import DeltaSequence, PhasePoint, TorusMapSpec, period_map
from qamlab.orbits import (
    RayHessian,
    acceleration,
    build_catalog,
    build_ray_hessian,
    det_growth,
    find_periodic_orbits,
    fixed_points_analytic,
    growth_slope,
    momentum_along_orbit,
    orbit_to_ray,
    predict_acceleration,
    ray_lyapunov,
    tangent_log_radius,
    torus_distance,
)

TWO_PI = 2 * math.pi
GOLDEN_LOG = math.log((3 + math.sqrt(5)) / 2)


def test_analytic_fixed_points_agree_with_newton():
    spec = TorusMapSpec(0.3, 0.1, DeltaSequence.constant(2))
    exact = fixed_points_analytic(spec, 0)
    assert len(exact) == 2
    for orb in exact:
        assert math.sin(orb.points[0, 0]) == pytest.approx(-0.1 / 0.3, abs=1e-14)
        assert orb.trace == pytest.approx(2 + 0.3 * math.cos(orb.points[0, 0]))
    newton = find_periodic_orbits(spec, 1, 0, seeds=16)
    assert len(newton) == 2
    for orb in exact:
        d = min(float(torus_distance(orb.start, o.start)) for o in newton)
        assert d < 1e-10
    assert sorted(o.kind for o in newton) == ["elliptic", "hyperbolic"]
    assert fixed_points_analytic(TorusMapSpec(0.05, 0.1, DeltaSequence.constant(2)), 0) == []


def test_newton_orbits_are_periodic():
    spec = TorusMapSpec(1.5, 0.05, DeltaSequence.constant(2))
    orbits = find_periodic_orbits(spec, 3, 0, seeds=24)
    assert orbits
    for orb in orbits:
        pt = orb.start
        for _ in range(3):
            pt = period_map(pt, spec)
        assert float(torus_distance(pt, orb.start)) < 1e-9
        assert orb.points.shape == (3, 2)
        assert orb.residue == pytest.approx((2 - orb.trace) / 4)


def test_det_growth_chebyshev():
    # diagonal 2: the n x n minor is n + 1
    logd = det_growth(RayHessian(np.full(50, 2.0)))
    np.testing.assert_allclose(logd, np.log(np.arange(2, 52)), atol=1e-12)
    phi = 0.7
    logd = det_growth(RayHessian(np.full(20, 2 * math.cos(phi))))
    n = np.arange(1, 21)
    expected = np.abs(np.sin((n + 1) * phi) / math.sin(phi))
    np.testing.assert_allclose(np.exp(logd), expected, atol=1e-10)


def test_det_growth_matches_dense_determinant():
    rng = np.random.default_rng(7)
    h = build_ray_hessian(rng.uniform(0, TWO_PI, 40), 1.3)
    logd = det_growth(h)
    dense = h.dense()
    for t in (0, 5, 17, 39):
        _, ld = np.linalg.slogdet(dense[: t + 1, : t + 1])
        assert logd[t] == pytest.approx(ld, abs=1e-9)


def test_det_growth_long_ray_no_overflow():
    logd = det_growth(RayHessian(np.full(5000, 3.0)))
    assert np.all(np.isfinite(logd))
    assert logd[-1] > 709
    assert growth_slope(logd) == pytest.approx(GOLDEN_LOG, abs=1e-6)
    assert ray_lyapunov(np.full(2000, 0.0), 1.0) == pytest.approx(GOLDEN_LOG, abs=1e-3)


def test_lyapunov_of_hyperbolic_orbit():
    spec = TorusMapSpec(0.6, 0.0, DeltaSequence.constant(2))
    hyp = [o for o in fixed_points_analytic(spec, 0) if not o.stable][0]
    ray = orbit_to_ray(hyp, 4000)
    assert ray_lyapunov(ray, spec.k_tilde) == pytest.approx(tangent_log_radius(hyp), rel=1e-2)


def test_acceleration_formula():
    assert acceleration(1, 2, 1, 0.3, 0.1, 0.05) == pytest.approx((math.pi - 0.4) / 0.05)
    with pytest.raises(ValueError):
        acceleration(0, 1, 1, 0.0, 0.1, 0.0)
    spec = TorusMapSpec(0.04, 1.455, DeltaSequence(13, (10,)))
    orb = find_periodic_orbits(spec, 1, 1, seeds=16)[0]
    pred = predict_acceleration(orb, 0.016)
    assert pred.a == pytest.approx((TWO_PI - TWO_PI * 10 / 13 - 1.455) / 0.016)


def test_momentum_along_fixed_point_grows_at_predicted_rate():
    spec = TorusMapSpec(0.04, 1.455, DeltaSequence(13, (10,)))
    orb = [o for o in fixed_points_analytic(spec, 1) if o.stable][0]
    eps = 0.016
    mom = momentum_along_orbit(orb.start, spec, eps, 50)
    slope = np.diff(mom)
    np.testing.assert_allclose(slope, predict_acceleration(orb, eps).a, rtol=1e-9)


def test_orbit_to_ray_repeats_period():
    spec = TorusMapSpec(1.5, 0.05, DeltaSequence.constant(2))
    orb = find_periodic_orbits(spec, 3, 0, seeds=24)[0]
    th, J = orbit_to_ray(orb, 10, with_J=True)
    assert th.shape == (10,) and J.shape == (10,)
    np.testing.assert_allclose(th[3:], th[:-3])
    np.testing.assert_allclose(J[3:] - J[:-3], TWO_PI * orb.jump_j, atol=1e-12)


def test_build_catalog_consistency():
    tau = TWO_PI * 0.507
    k, eta = 0.8 * math.pi, 0.126 * TWO_PI * 0.507
    cat = build_catalog(tau, k, eta, q_max=2, seeds=16)
    assert cat
    keys = [e.key for e in cat]
    assert len(keys) == len(set(keys))
    for e in cat:
        assert (e.p_res, e.q) == (1, 2)
        assert e.epsilon == pytest.approx(tau - math.pi)
        assert e.k_tilde == pytest.approx(k * e.epsilon)
        assert e.stable == (abs(e.trace) < 2)
        Delta_T = TWO_PI * sum(e.d) / (e.q * e.T)
        assert e.a_predicted == pytest.approx(acceleration(e.jump_j, e.period_p, e.T, Delta_T, e.drift, e.epsilon))
    stable = build_catalog(tau, k, eta, q_max=2, seeds=16, stable_only=True)
    assert stable and all(e.stable for e in stable)
    assert build_catalog(math.pi, k, eta, resonances=[(1, 2)]) == []
