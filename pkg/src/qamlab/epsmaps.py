"""Epsilon-classical maps on the cylinder and the 2-torus.

For a periodic sequence of translation offsets ``delta_t = 2*pi*d_t/q`` the
single-step map ``F_t`` reads::

    theta' = theta + J            (mod 2 pi)
    J'     = J + delta_t + drift + k_tilde * sin(theta')

with ``drift = tau * eta``.  ``theta`` is advanced with the old ``J`` and the
kick is evaluated at the new ``theta``; swapping the order gives a different
map.  Composing ``T`` consecutive steps gives the period map
``F^(T)_{t'}``, a map of the 2-torus.

Every function accepts scalars or arrays for ``theta`` and ``J`` and
broadcasts, so whole seed grids are iterated at once.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "DeltaSequence",
    "TorusMapSpec",
    "PhasePoint",
    "reduce_torus",
    "step",
    "step_tangent",
    "period_map",
    "iterate",
    "portrait",
    "seed_grid",
    "enumerate_delta_sequences",
]

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class DeltaSequence:
    """Periodic offsets ``delta_t = 2 pi d_t / q`` stored as integers."""

    q: int
    d: tuple[int, ...]

    def __post_init__(self):
        if self.q < 1:
            raise ValueError("q must be positive")
        d = tuple(int(x) for x in np.atleast_1d(self.d))
        if not d:
            raise ValueError("a delta sequence needs at least one entry")
        object.__setattr__(self, "d", d)

    @classmethod
    def constant(cls, q: int, d0: int = 0) -> DeltaSequence:
        return cls(q, (d0,))

    @property
    def T(self) -> int:
        return len(self.d)

    @property
    def deltas(self) -> np.ndarray:
        return TWO_PI * np.array(self.d, dtype=float) / self.q

    def delta(self, t: int) -> float:
        return TWO_PI * self.d[t % self.T] / self.q

    @property
    def winding(self) -> int:
        return sum(self.d)

    @property
    def Delta_T(self) -> float:
        """Average offset ``T^-1 sum_t delta_t``."""
        return TWO_PI * self.winding / (self.q * self.T)

    def shifted(self, n: int = 1) -> DeltaSequence:
        """All ``d_t`` shifted by ``n*q`` (every ``delta_t`` by ``2 pi n``)."""
        return DeltaSequence(self.q, tuple(x + n * self.q for x in self.d))


@dataclass(frozen=True)
class TorusMapSpec:
    """One member of the map family: kick ``k_tilde``, drift ``tau*eta`` and offsets.

    The potential is fixed to ``V = cos``, so ``-k_tilde V'(theta) = k_tilde sin(theta)``.
    """

    k_tilde: float
    drift: float
    deltas: DeltaSequence

    @property
    def T(self) -> int:
        return self.deltas.T

    @property
    def q(self) -> int:
        return self.deltas.q


class PhasePoint(NamedTuple):
    theta: float | np.ndarray
    J: float | np.ndarray

    def reduced(self) -> PhasePoint:
        return reduce_torus(self)


def reduce_torus(pt: PhasePoint) -> PhasePoint:
    """Representative in ``[0, 2 pi)^2`` (floor-based, so bit-reproducible)."""
    theta = np.asarray(pt.theta, dtype=float)
    J = np.asarray(pt.J, dtype=float)
    theta = theta - TWO_PI * np.floor(theta / TWO_PI)
    J = J - TWO_PI * np.floor(J / TWO_PI)
    # rounding can land exactly on 2 pi
    theta = np.where(theta >= TWO_PI, 0.0, theta)
    J = np.where(J >= TWO_PI, 0.0, J)
    if theta.ndim == 0:
        return PhasePoint(float(theta), float(J))
    return PhasePoint(theta, J)


def step(pt: PhasePoint, t: int, spec: TorusMapSpec, lifted: bool = False) -> PhasePoint:
    """``F_t``: theta first (with the old J), then J (with the new theta)."""
    theta, J = pt
    theta = theta + J
    J = J + spec.deltas.delta(t) + spec.drift + spec.k_tilde * np.sin(theta)
    out = PhasePoint(theta, J)
    return out if lifted else reduce_torus(out)


def step_tangent(theta_new, k_tilde: float) -> np.ndarray:
    """Jacobian of one step given the updated angle, shape ``(..., 2, 2)``."""
    c = k_tilde * np.cos(np.asarray(theta_new, dtype=float))
    one = np.ones_like(c)
    return np.stack([np.stack([one, one], -1), np.stack([c, one + c], -1)], -2)


def period_map(pt: PhasePoint, spec: TorusMapSpec, t_start: int = 0, lifted: bool = False) -> PhasePoint:
    """``F^(T)_{t_start} = F_{t_start+T-1} o ... o F_{t_start}``."""
    if not 0 <= t_start < spec.T:
        raise ValueError(f"t_start must lie in [0, {spec.T}), got {t_start}")
    for t in range(t_start, t_start + spec.T):
        pt = step(pt, t, spec, lifted=True)
    return pt if lifted else reduce_torus(pt)


def iterate(pt: PhasePoint, spec: TorusMapSpec, n_steps: int, t_start: int = 0, lifted: bool = True):
    """Single steps ``t_start .. t_start + n_steps - 1``.

    Returns arrays ``theta, J`` of shape ``(n_steps + 1, ...)``, the starting
    point first.
    """
    thetas = [np.asarray(pt.theta, dtype=float)]
    Js = [np.asarray(pt.J, dtype=float)]
    for t in range(t_start, t_start + n_steps):
        pt = step(pt, t, spec, lifted=lifted)
        thetas.append(np.asarray(pt.theta))
        Js.append(np.asarray(pt.J))
    return np.array(thetas), np.array(Js)


def seed_grid(n_theta: int, n_J: int | None = None) -> PhasePoint:
    """Uniform cell-centred seeds on the torus, flattened theta-major."""
    n_J = n_theta if n_J is None else n_J
    th = (np.arange(n_theta) + 0.5) * TWO_PI / n_theta
    jj = (np.arange(n_J) + 0.5) * TWO_PI / n_J
    TH, JJ = np.meshgrid(th, jj, indexing="ij")
    return PhasePoint(TH.ravel(), JJ.ravel())


def portrait(spec: TorusMapSpec, seeds: PhasePoint, iters: int) -> np.ndarray:
    """Torus orbits of ``F^(T)_0``.

    Returns an array of shape ``(n_seeds, iters + 1, 2)`` holding
    ``(theta, J)`` reduced to ``[0, 2 pi)``; index 0 along the second axis is
    the (reduced) seed itself.
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    pt = reduce_torus(PhasePoint(np.atleast_1d(seeds.theta), np.atleast_1d(seeds.J)))
    out = np.empty((pt.theta.size, iters + 1, 2))
    out[:, 0, 0], out[:, 0, 1] = pt
    for i in range(1, iters + 1):
        pt = period_map(pt, spec)
        out[:, i, 0], out[:, i, 1] = pt
    return out


def _canonical_rotation(d: tuple[int, ...]) -> tuple[int, ...]:
    return min(d[i:] + d[:i] for i in range(len(d)))


def enumerate_delta_sequences(q: int, T: int, c_range) -> list[DeltaSequence]:
    """Difference sequences of period ``T`` built from translation labels.

    For every label string ``s_0 .. s_{T-1}`` in ``{0..q-1}^T`` and every
    per-period winding ``c`` in ``c_range`` (an iterable, or a ``(lo, hi)``
    inclusive pair), ``s_T = s_0 + c`` and ``d_t = s_{t+1} - s_t``.
    Sequences equal up to a cyclic shift are reported once, as their
    lexicographically smallest rotation.
    """
    if T < 1 or q < 1:
        raise ValueError("need q >= 1 and T >= 1")
    if isinstance(c_range, tuple) and len(c_range) == 2:
        c_values = range(c_range[0], c_range[1] + 1)
    else:
        c_values = c_range
    seen = set()
    out = []
    for c in c_values:
        for s in itertools.product(range(q), repeat=T):
            lifted = s + (s[0] + c,)
            d = _canonical_rotation(tuple(lifted[t + 1] - lifted[t] for t in range(T)))
            if d not in seen:
                seen.add(d)
                out.append(DeltaSequence(q, d))
    out.sort(key=lambda ds: (ds.winding, ds.d))
    return out
