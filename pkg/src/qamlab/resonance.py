"""Arithmetic of kicked-rotor resonances.

A primary resonance is a kicking period ``tau = 2*pi*p/q`` (``p``, ``q``
coprime) together with one of the ``p`` resonant quasi-momenta
``beta_r = (nu/p + q/2) mod 1``.  At such a point the one-kick propagator
commutes with momentum translations by ``q`` and the free evolution collapses
into ``q`` weighted translations in angle, the weights being the Gauss
coefficients ``G_s``.

Rationals are kept exact (:class:`fractions.Fraction`) wherever a resonance
condition is tested; floats only appear in derived quantities such as the
detuning ``epsilon``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

__all__ = [
    "ResonanceSpec",
    "GaussCoefficients",
    "DetuningContext",
    "nearest_resonances",
    "resonant_quasimomenta",
    "gauss_coefficients",
    "check_commutation",
]

TWO_PI = 2.0 * math.pi


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    return Fraction(float(x))


def resonant_quasimomenta(p: int, q: int) -> list[Fraction]:
    """Resonant quasi-momenta ``(nu/p + q/2) mod 1`` for ``nu = 0..p-1``.

    Returned as exact fractions in ``[0, 1)``, sorted ascending.
    """
    p, q = int(p), int(q)
    if p < 1 or q < 1:
        raise ValueError(f"p and q must be positive, got p={p}, q={q}")
    if math.gcd(p, q) != 1:
        raise ValueError(f"p={p} and q={q} are not coprime")
    # nu/p + q/2 = (2 nu + q p) / (2 p)
    nums = sorted({(2 * nu + q * p) % (2 * p) for nu in range(p)})
    return [Fraction(n, 2 * p) for n in nums]


@dataclass(frozen=True)
class ResonanceSpec:
    """A primary resonance ``tau = 2*pi*p/q``."""

    p: int
    q: int

    def __post_init__(self):
        if self.p < 1 or self.q < 1:
            raise ValueError(f"p and q must be positive, got p={self.p}, q={self.q}")
        if math.gcd(self.p, self.q) != 1:
            raise ValueError(f"p={self.p} and q={self.q} are not coprime")

    @property
    def tau_res(self) -> float:
        return TWO_PI * self.p / self.q

    @property
    def order(self) -> int:
        # primary resonances only (m = 1), so the order equals q
        return self.q

    @property
    def beta_r_set(self) -> list[Fraction]:
        return resonant_quasimomenta(self.p, self.q)

    def is_resonant(self, beta) -> bool:
        # beta = nu/p + q/2 (mod 1)  <=>  p*(beta - q/2) is an integer
        beta = _as_fraction(beta)
        a, b = beta.numerator, beta.denominator
        return (self.p * (2 * a - self.q * b)) % (2 * b) == 0

    def detuning(self, tau: float) -> float:
        return float(tau) - self.tau_res


@dataclass(frozen=True)
class GaussCoefficients:
    """Weights ``G_0..G_{q-1}`` of the exact resonant propagator."""

    p: int
    q: int
    beta_r: Fraction
    values: np.ndarray = field(repr=False)

    def __len__(self):
        return self.q

    def __getitem__(self, s):
        return self.values[s]

    @property
    def moduli(self) -> np.ndarray:
        return np.abs(self.values)


def gauss_coefficients(p: int, q: int, beta_r) -> GaussCoefficients:
    """Gauss coefficients at a primary resonance.

    ``G_s = (1/q) sum_l exp(-i pi p (l + beta_r)^2 / q) exp(2 pi i s l / q)``.

    The quadratic phase is reduced modulo ``2*pi`` in exact rational
    arithmetic before it is exponentiated, so the moduli sit at
    ``q**-0.5`` to machine precision even for large ``l``.
    """
    spec = ResonanceSpec(int(p), int(q))
    beta_r = _as_fraction(beta_r) % 1
    if not spec.is_resonant(beta_r):
        raise ValueError(f"beta={beta_r} is not resonant for p={p}, q={q}")
    # exponent -i*pi*x, x = p (l + a/b)^2 / q = p (l b + a)^2 / (q b^2), reduced mod 2 in integers
    a, b = beta_r.numerator, beta_r.denominator
    den = spec.q * b * b
    if spec.p * (spec.q * b + a) ** 2 < 2**62:
        lb = np.arange(spec.q, dtype=np.int64) * b + a
        num = (spec.p * lb * lb) % (2 * den)
    else:
        num = np.array([(spec.p * (l * b + a) ** 2) % (2 * den) for l in range(spec.q)])
    f = np.exp(-1j * np.pi * (num.astype(float) / den))
    # ifft gives (1/q) sum_l f_l exp(+2 pi i s l / q)
    values = np.fft.ifft(f)
    return GaussCoefficients(spec.p, spec.q, beta_r, values)


@dataclass(frozen=True)
class DetuningContext:
    """Near-resonant parameters measured from a reference resonance.

    ``epsilon = tau - 2*pi*p/q`` keeps its sign; it plays the part of a
    (possibly negative) Planck constant for the epsilon-classical maps.
    """

    spec: ResonanceSpec
    tau: float
    k: float
    eta: float = 0.0
    beta_r: Fraction = Fraction(0)
    delta_beta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "beta_r", _as_fraction(self.beta_r) % 1)
        if not self.spec.is_resonant(self.beta_r):
            raise ValueError(
                f"beta_r={self.beta_r} is not resonant for p={self.spec.p}, q={self.spec.q}"
            )

    @property
    def epsilon(self) -> float:
        return self.tau - self.spec.tau_res

    @property
    def k_tilde(self) -> float:
        return self.k * self.epsilon

    @property
    def beta(self) -> float:
        return float(self.beta_r) + self.delta_beta

    @property
    def drift(self) -> float:
        """``tau * eta``, the constant J-increment of the epsilon-classical map."""
        return self.tau * self.eta

    def phi(self, n: int) -> float:
        return self.delta_beta + 0.5 * self.eta + self.eta * n


def _farey_first_at_least(lo: Fraction, n: int) -> tuple[Fraction, Fraction]:
    """Smallest member of the Farey sequence F_n that is >= lo, and its left neighbour."""
    first = min(Fraction(math.ceil(lo * q), q) for q in range(1, n + 1))
    left = max(Fraction(math.ceil(first * q) - 1, q) for q in range(1, n + 1))
    return left, first


def nearest_resonances(tau: float, q_max: int, window=None) -> list[tuple[ResonanceSpec, float]]:
    """Primary resonances ``p/q`` (``q <= q_max``) close to ``tau/(2*pi)``.

    Parameters
    ----------
    tau : float
        Kicking period, ``tau > 0``.
    q_max : int
        Largest denominator considered.
    window : float or Fraction, optional
        Half-width of the search interval around ``tau/(2*pi)``.  Defaults
        to ``1/(2*q_max**2)``.

    Returns
    -------
    list of (ResonanceSpec, epsilon)
        Sorted by ``|epsilon|`` and then by ``q``.  The rationals are walked
        in Farey order with integer arithmetic only.
    """
    if not tau > 0 or not math.isfinite(tau):
        raise ValueError(f"tau must be positive and finite, got {tau}")
    q_max = int(q_max)
    if q_max < 1:
        raise ValueError(f"q_max must be >= 1, got {q_max}")
    w = Fraction(1, 2 * q_max * q_max) if window is None else _as_fraction(window)
    if w < 0:
        raise ValueError("window must be non-negative")
    x = Fraction(tau / TWO_PI)
    lo, hi = x - w, x + w
    a, c = _farey_first_at_least(lo, q_max)
    out = []
    while c <= hi:
        if c.numerator > 0:
            spec = ResonanceSpec(c.numerator, c.denominator)
            out.append((spec, tau - spec.tau_res))
        kk = (q_max + a.denominator) // c.denominator
        a, c = c, Fraction(
            kk * c.numerator - a.numerator, kk * c.denominator - a.denominator
        )
    out.sort(key=lambda item: (abs(item[1]), item[0].q, item[0].p))
    return out


def check_commutation(p: int, q: int, beta: float, k: float, seed: int = 0, size: int = 24) -> float:
    """Commutator residual ``||[U, exp(i q theta)] psi||`` at ``tau = 2 pi p/q``, ``eta = 0``.

    ``psi`` is a seeded pseudo-random normalized state on ``size`` momentum
    sites.  The residual vanishes (to rounding) exactly when ``beta`` is a
    resonant quasi-momentum.
    """
    from .quantum import KickSchedule, RotorState, one_kick

    spec = ResonanceSpec(int(p), int(q))
    rng = np.random.default_rng(seed)
    amps = rng.normal(size=size) + 1j * rng.normal(size=size)
    psi = RotorState(beta, -(size // 2), amps / np.linalg.norm(amps))
    schedule = KickSchedule(k=k, tau=spec.tau_res, eta=0.0)

    def translate(state):
        # multiplication by exp(i q theta) shifts m -> m + q
        return RotorState(state.beta, state.m_min + spec.q, state.amps.copy())

    lhs = one_kick(translate(psi), schedule, 0)
    rhs = translate(one_kick(psi, schedule, 0))
    return float(np.linalg.norm(lhs.difference(rhs)))
