import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qamlab.resonance import (
    DetuningContext,
    ResonanceSpec,
    check_commutation,
    gauss_coefficients,
    nearest_resonances,
    resonant_quasimomenta,
)


def direct_gauss(p, q, beta):
    """Plain double-precision sum, no phase reduction."""
    b = float(beta)
    return np.array([
        sum(cmath.exp(-1j * math.pi * p * (l + b) ** 2 / q) * cmath.exp(2j * math.pi * s * l / q) for l in range(q)) / q
        for s in range(q)
    ])


def test_quasimomenta_examples():
    assert resonant_quasimomenta(1, 2) == [Fraction(0)]
    assert resonant_quasimomenta(1, 1) == [Fraction(1, 2)]
    assert resonant_quasimomenta(2, 3) == [Fraction(0), Fraction(1, 2)]
    assert len(resonant_quasimomenta(7, 13)) == 7


def test_not_coprime_rejected():
    with pytest.raises(ValueError):
        resonant_quasimomenta(2, 4)
    with pytest.raises(ValueError):
        ResonanceSpec(3, 6)


def test_gauss_two_term():
    G = gauss_coefficients(1, 2, 0)
    np.testing.assert_allclose(G.values, [(1 - 1j) / 2, (1 + 1j) / 2], atol=1e-15)


@pytest.mark.parametrize("p,q", [(1, 1), (1, 2), (2, 3), (3, 5), (7, 13), (5, 8)])
def test_gauss_matches_direct_sum(p, q):
    for beta in resonant_quasimomenta(p, q):
        np.testing.assert_allclose(gauss_coefficients(p, q, beta).values, direct_gauss(p, q, beta), atol=1e-12)


def test_gauss_rejects_nonresonant():
    with pytest.raises(ValueError):
        gauss_coefficients(1, 2, Fraction(1, 3))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 200), st.integers(1, 200))
def test_gauss_modulus_property(p, q):
    if math.gcd(p, q) != 1:
        return
    beta = resonant_quasimomenta(p, q)[-1]
    G = gauss_coefficients(p, q, beta)
    assert np.max(np.abs(G.moduli - q**-0.5)) < 1e-12
    # unitarity of the resonant propagator: sum |G_s|^2 = 1
    assert abs(np.sum(G.moduli**2) - 1) < 1e-12


def test_spec_properties():
    spec = ResonanceSpec(7, 13)
    assert spec.order == 13
    assert spec.tau_res == pytest.approx(14 * math.pi / 13)
    assert spec.is_resonant(Fraction(1, 2)) and not spec.is_resonant(0.3)
    assert spec.detuning(spec.tau_res + 0.01) == pytest.approx(0.01)


def test_detuning_context():
    spec = ResonanceSpec(1, 2)
    ctx = DetuningContext(spec, tau=math.pi + 0.05, k=0.8 * math.pi, eta=0.2, delta_beta=0.1)
    assert ctx.epsilon == pytest.approx(0.05)
    assert ctx.k_tilde == pytest.approx(0.04 * math.pi)
    assert ctx.drift == pytest.approx((math.pi + 0.05) * 0.2)
    assert ctx.phi(3) == pytest.approx(0.1 + 0.1 + 0.6)
    with pytest.raises(ValueError):
        DetuningContext(spec, tau=3.0, k=1.0, beta_r=Fraction(1, 2))


def brute_resonances(x, q_max, w):
    out = []
    for q in range(1, q_max + 1):
        for p in range(1, math.ceil((x + w) * q) + 1):
            if math.gcd(p, q) == 1 and abs(Fraction(p, q) - Fraction(x)) <= w:
                out.append((p, q))
    return sorted(out)


@pytest.mark.parametrize("x,q_max", [(0.541, 13), (0.5, 2), (0.51, 20), (1.3, 7), (0.0301, 40)])
def test_nearest_resonances_against_brute_force(x, q_max):
    w = Fraction(1, 2 * q_max * q_max)
    found = nearest_resonances(2 * math.pi * x, q_max)
    assert sorted((s.p, s.q) for s, _ in found) == brute_resonances(x, q_max, w)
    eps = [abs(e) for _, e in found]
    assert eps == sorted(eps)


def test_nearest_resonances_examples():
    found = nearest_resonances(2 * math.pi * 0.541, 13)
    assert (found[0][0].p, found[0][0].q) == (7, 13)
    assert found[0][1] == pytest.approx(0.01595, abs=5e-5)
    wide = nearest_resonances(2 * math.pi * 0.475, 2, window=0.1)
    assert (wide[0][0].p, wide[0][0].q) == (1, 2)
    assert wide[0][1] == pytest.approx(-0.15708, abs=1e-5)


def test_nearest_resonances_bad_input():
    with pytest.raises(ValueError):
        nearest_resonances(-1.0, 3)
    with pytest.raises(ValueError):
        nearest_resonances(1.0, 0)


def test_commutation_residuals():
    assert check_commutation(1, 2, 0.0, 2.5) < 1e-12
    assert check_commutation(7, 13, 0.5, 2.5) < 1e-12
    assert check_commutation(1, 2, 0.3, 2.5) > 1e-3
