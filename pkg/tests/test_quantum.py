import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import jv

from qamlab.quantum import (
    KickSchedule,
    RotorState,
    ScanConfig,
    apply_free,
    apply_kick,
    evolve,
    initial_ensemble,
    one_kick,
    plane_wave,
    scan_tau,
)


def kick_amplitude_quad(k, n):
    """(1/2 pi) int exp(-i k cos t) exp(-i n t) dt by quadrature."""
    re = quad(lambda t: math.cos(-k * math.cos(t) - n * t), 0, 2 * math.pi, limit=200)[0]
    im = quad(lambda t: math.sin(-k * math.cos(t) - n * t), 0, 2 * math.pi, limit=200)[0]
    return (re + 1j * im) / (2 * math.pi)


@pytest.mark.parametrize("k", [0.3, 0.8 * math.pi, 7.0])
def test_kick_on_plane_wave(k):
    out = apply_kick(plane_wave(0), k)
    for n in range(-8, 9):
        expected = (-1j) ** n * jv(n, k)
        amp = out.amps[n - out.m_min]
        assert abs(amp - expected) < 1e-13
        if abs(n) <= 4:
            assert abs(amp - kick_amplitude_quad(k, n)) < 1e-9


def test_norm_conserved_and_window_edges_small():
    rng = np.random.default_rng(0)
    amps = rng.normal(size=30) + 1j * rng.normal(size=30)
    psi = RotorState(0.3, -15, amps / np.linalg.norm(amps))
    sched = KickSchedule(k=5.0, tau=1.7, eta=0.4)
    out, _ = evolve(psi, sched, 30)
    assert abs(out.norm() - 1) < 1e-12
    assert np.max(np.abs(out.amps[[0, -1]])) < 1e-12


def test_free_evolution_phase():
    psi = RotorState(0.25, -2, np.ones(5) / math.sqrt(5))
    out = apply_free(psi, tau=1.1, eta=0.3, n=4)
    m = np.arange(-2, 3)
    np.testing.assert_allclose(out.amps, psi.amps * np.exp(-0.55j * (m + 0.25 + 0.15 + 1.2) ** 2))


def test_batched_matches_single():
    betas = np.array([0.1, 0.7])
    amps = np.zeros((2, 3), dtype=complex)
    amps[:, 1] = 1
    batch = RotorState(betas, -1, amps)
    sched = KickSchedule(k=2.0, tau=2.9, eta=0.2)
    out, _ = evolve(batch, sched, 5)
    for i, b in enumerate(betas):
        single, _ = evolve(plane_wave(0, b), sched, 5)
        lo = min(single.m_min, out.m_min)
        hi = max(single.m_max, out.m_max)
        np.testing.assert_allclose(out.on_window(lo, hi)[i], single.on_window(lo, hi), atol=1e-13)


def test_talbot_energy():
    k = 0.8 * math.pi
    psi, hist = evolve(plane_wave(0), KickSchedule(k=k, tau=4 * math.pi), 10, record=True)
    assert len(hist) == 11
    for n, (mom, prob) in enumerate(hist):
        assert 0.5 * np.sum(prob * mom**2) == pytest.approx((n * k) ** 2 / 4, rel=1e-9, abs=1e-12)


def test_scan_config_validation():
    grid = [3.0, 3.1]
    with pytest.raises(ValueError):
        ScanConfig(grid, k=1, n_kicks=2, n_members=2, seed=None, eta=0)
    with pytest.raises(ValueError):
        ScanConfig(grid, k=1, n_kicks=2, n_members=2, seed=1)
    with pytest.raises(ValueError):
        ScanConfig(grid, k=1, n_kicks=2, n_members=2, seed=1, eta=0, eta_ratio=0.1)
    with pytest.raises(ValueError):
        ScanConfig([-1.0], k=1, n_kicks=2, n_members=2, seed=1, eta=0)
    cfg = ScanConfig(grid, k=1, n_kicks=2, n_members=2, seed=1, eta_ratio=0.5)
    assert cfg.eta_at(3.0) == 1.5


def test_initial_ensemble_reproducible():
    m0, beta = initial_ensemble(50, seed=3)
    m1, beta1 = initial_ensemble(50, seed=3)
    assert np.array_equal(m0, m1) and np.array_equal(beta, beta1)
    assert np.all((beta >= 0) & (beta < 1))


def test_scan_zero_kick_is_initial_distribution():
    cfg = ScanConfig([2.9, 3.3], k=0.0, n_kicks=20, n_members=40, seed=5, eta_ratio=0.126, history="all")
    scan = scan_tau(cfg)
    for i in range(2):
        np.testing.assert_allclose(scan.prob[i], scan.history[i][0], atol=1e-15)
        np.testing.assert_allclose(scan.history[i], scan.history[i][:1].repeat(21, axis=0), atol=1e-15)
    assert scan.prob.sum(axis=1) == pytest.approx([1.0, 1.0])


def test_scan_deterministic_and_heatmap():
    cfg = ScanConfig([3.15, 3.2], k=2.5, n_kicks=10, n_members=10, seed=11, eta_ratio=0.126)
    a, b = scan_tau(cfg), scan_tau(cfg)
    assert np.array_equal(a.prob, b.prob)
    h = a.heatmap()
    assert np.allclose(h.max(axis=1), 1.0)
    assert a.prob.sum(axis=1) == pytest.approx([1.0, 1.0], abs=1e-12)


def test_one_kick_composes():
    sched = KickSchedule(k=1.3, tau=2.2, eta=0.1)
    psi = plane_wave(2, 0.4, half_width=3)
    two, _ = evolve(psi, sched, 2)
    manual = one_kick(one_kick(psi, sched, 0), sched, 1)
    lo, hi = min(two.m_min, manual.m_min), max(two.m_max, manual.m_max)
    np.testing.assert_allclose(two.on_window(lo, hi), manual.on_window(lo, hi), atol=1e-14)
