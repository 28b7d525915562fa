"""Periodic orbits of the period maps, their stability and the accelerations they predict.

An orbit of ``F^(T)_0`` with period ``p`` on the torus closes on the lift
after ``p*T`` single steps up to ``2*pi*j`` in ``J`` (``j`` is the jumping
index) and ``2*pi*w`` in ``theta``.  Along the associated ray the physical
momentum grows linearly with the rate::

    a = (2*pi*j/(p*T) - Delta_T - tau*eta) / epsilon

Stability is read off the trace of the ``p*T``-step tangent map, or
equivalently from the growth of the determinant of the tridiagonal Hessian
of the action along the ray (transfer matrices ``[[2 + k cos, -1], [1, 0]]``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .epsmaps import (
    DeltaSequence,
    PhasePoint,
    TorusMapSpec,
    enumerate_delta_sequences,
    period_map,
    reduce_torus,
    seed_grid,
    step,
)
from .resonance import nearest_resonances

__all__ = [
    "PeriodicOrbit",
    "AccelerationPrediction",
    "RayHessian",
    "CatalogEntry",
    "torus_distance",
    "lifted_tangent",
    "fixed_points_analytic",
    "find_periodic_orbits",
    "acceleration",
    "predict_acceleration",
    "orbit_to_ray",
    "momentum_along_orbit",
    "build_ray_hessian",
    "det_growth",
    "growth_slope",
    "ray_lyapunov",
    "tangent_log_radius",
    "build_catalog",
]

TWO_PI = 2.0 * math.pi
NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 50
DEDUP_TOL = 1e-6
PARABOLIC_TOL = 1e-9


def torus_distance(a: PhasePoint, b: PhasePoint):
    """Max-norm distance on ``[0, 2 pi)^2``."""
    def circ(x, y):
        d = np.mod(np.asarray(x) - np.asarray(y), TWO_PI)
        return np.minimum(d, TWO_PI - d)

    return np.maximum(circ(a[0], b[0]), circ(a[1], b[1]))


@dataclass
class PeriodicOrbit:
    """Periodic orbit of ``F^(T)_0``.

    ``points`` has shape ``(p, 2)``: the orbit sampled every ``T`` kicks,
    starting from the seed representative.  ``trace`` is the trace of the
    ``p*T``-step tangent map.
    """

    spec: TorusMapSpec
    period_p: int
    jump_j: int
    points: np.ndarray
    theta_winding: int
    trace: float
    monodromy: np.ndarray = field(repr=False, default=None)

    @property
    def residue(self) -> float:
        return (2.0 - self.trace) / 4.0

    @property
    def parabolic(self) -> bool:
        return abs(abs(self.trace) - 2.0) <= PARABOLIC_TOL

    @property
    def stable(self) -> bool:
        return abs(self.trace) < 2.0 and not self.parabolic

    @property
    def kind(self) -> str:
        if self.parabolic:
            return "parabolic"
        return "elliptic" if self.stable else "hyperbolic"

    @property
    def start(self) -> PhasePoint:
        return PhasePoint(float(self.points[0, 0]), float(self.points[0, 1]))

    @property
    def n_steps(self) -> int:
        return self.period_p * self.spec.T


def lifted_tangent(pt: PhasePoint, spec: TorusMapSpec, n_steps: int, t_start: int = 0):
    """Iterate ``n_steps`` lifted single steps and accumulate the tangent map.

    Returns ``(end_point, M)`` with ``M`` of shape ``(..., 2, 2)``.
    """
    theta = np.asarray(pt.theta, dtype=float)
    J = np.asarray(pt.J, dtype=float)
    # M = [[a, b], [c, d]] carried component-wise for vectorized seeds
    a, b = np.ones_like(theta), np.zeros_like(theta)
    c, d = np.zeros_like(theta), np.ones_like(theta)
    for t in range(t_start, t_start + n_steps):
        theta, J = step(PhasePoint(theta, J), t, spec, lifted=True)
        kc = spec.k_tilde * np.cos(theta)
        # step Jacobian [[1, 1], [kc, 1 + kc]] applied on the left
        a, b, c, d = a + c, b + d, kc * a + (1 + kc) * c, kc * b + (1 + kc) * d
    M = np.stack([np.stack([a, b], -1), np.stack([c, d], -1)], -2)
    return PhasePoint(theta, J), M


def _orbit_from_point(pt: PhasePoint, spec: TorusMapSpec, p: int, j: int) -> PeriodicOrbit | None:
    """Build the orbit record from a converged torus point; None if the minimal period is smaller."""
    pt = reduce_torus(pt)
    points = [pt]
    cur = pt
    for _ in range(p - 1):
        cur = period_map(cur, spec)
        points.append(cur)
    for l in range(1, p):
        if torus_distance(points[l], points[0]) < DEDUP_TOL:
            return None
    end, M = lifted_tangent(pt, spec, p * spec.T)
    w = int(round((end.theta - pt.theta) / TWO_PI))
    jj = int(round((end.J - pt.J) / TWO_PI))
    if jj != j:
        return None
    return PeriodicOrbit(
        spec=spec,
        period_p=p,
        jump_j=j,
        points=np.array([[x.theta, x.J] for x in points]),
        theta_winding=w,
        trace=float(np.trace(M)),
        monodromy=M,
    )


def _dedup(orbits: list[PeriodicOrbit]) -> list[PeriodicOrbit]:
    out: list[PeriodicOrbit] = []
    for orb in orbits:
        p0 = PhasePoint(orb.points[0, 0], orb.points[0, 1])
        if not any(
            np.min(torus_distance(p0, PhasePoint(o.points[:, 0], o.points[:, 1]))) < DEDUP_TOL
            for o in out
        ):
            out.append(orb)
    # canonical representative: start at the point of smallest theta
    for orb in out:
        i = int(np.argmin(orb.points[:, 0]))
        if i:
            orb.points = np.roll(orb.points, -i, axis=0)
            _, orb.monodromy = lifted_tangent(orb.start, orb.spec, orb.n_steps)
            orb.trace = float(np.trace(orb.monodromy))
    out.sort(key=lambda o: (o.points[0, 0], o.points[0, 1]))
    return out


def fixed_points_analytic(spec: TorusMapSpec, j: int) -> list[PeriodicOrbit]:
    """Closed-form fixed points of a ``T = 1`` map with jumping index ``j``.

    ``sin(theta*) = (2 pi j - delta_0 - drift) / k_tilde`` and ``J* = 0``.
    """
    if spec.T != 1:
        raise ValueError("closed-form fixed points need T = 1")
    if spec.k_tilde == 0:
        raise ValueError("k_tilde = 0 gives a degenerate shear map")
    r = (TWO_PI * j - spec.deltas.delta(0) - spec.drift) / spec.k_tilde
    if abs(r) > 1:
        return []
    s = math.asin(r)
    roots = sorted({s % TWO_PI, (math.pi - s) % TWO_PI})
    out = []
    for th in roots:
        kc = spec.k_tilde * math.cos(th)
        M = np.array([[1.0, 1.0], [kc, 1.0 + kc]])
        out.append(
            PeriodicOrbit(
                spec=spec,
                period_p=1,
                jump_j=j,
                points=np.array([[th, 0.0]]),
                theta_winding=0,
                trace=2.0 + kc,
                monodromy=M,
            )
        )
    return out


def find_periodic_orbits(
    spec: TorusMapSpec,
    p: int,
    j: int,
    seeds=64,
    windings=None,
    tol: float = NEWTON_TOL,
    max_iter: int = NEWTON_MAX_ITER,
) -> list[PeriodicOrbit]:
    """Period-``p`` orbits of ``F^(T)_0`` with jumping index ``j``, by Newton's method.

    The residual ``(theta_N - theta_0 - 2 pi w, J_N - J_0 - 2 pi j)`` of the
    lifted ``N = p*T``-step map is driven to zero from every seed of a
    uniform torus grid (``seeds`` is the grid size per axis, or an explicit
    :class:`PhasePoint` of seeds) and every theta-winding ``w`` in
    ``[-N, N]``.  Seeds that stall or meet a singular Jacobian are dropped.
    Orbits whose minimal period is a proper divisor of ``p`` are skipped.
    """
    if p < 1:
        raise ValueError("period must be >= 1")
    n_steps = p * spec.T
    if isinstance(seeds, (int, np.integer)):
        seeds = seed_grid(int(seeds))
    if windings is None:
        windings = range(-n_steps, n_steps + 1)
    windings = np.asarray(list(windings), dtype=float)
    th0 = np.tile(np.asarray(seeds.theta, dtype=float), windings.size)
    J0 = np.tile(np.asarray(seeds.J, dtype=float), windings.size)
    w = np.repeat(windings, np.size(seeds.theta))

    active = np.ones(th0.size, dtype=bool)
    done = np.zeros(th0.size, dtype=bool)
    for _ in range(max_iter + 1):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        end, M = lifted_tangent(PhasePoint(th0[idx], J0[idx]), spec, n_steps)
        f1 = end.theta - th0[idx] - TWO_PI * w[idx]
        f2 = end.J - J0[idx] - TWO_PI * j
        scale = np.maximum(1.0, np.abs(M).max(axis=(-1, -2)))
        conv = np.maximum(np.abs(f1), np.abs(f2)) < tol * scale
        done[idx[conv]] = True
        active[idx[conv]] = False
        a = M[:, 0, 0] - 1.0
        b = M[:, 0, 1]
        c = M[:, 1, 0]
        d = M[:, 1, 1] - 1.0
        det = a * d - b * c
        bad = ~conv & ((np.abs(det) < 1e-13) | ~np.isfinite(det) | ~np.isfinite(f1) | ~np.isfinite(f2))
        active[idx[bad]] = False
        go = ~conv & ~bad
        ig = idx[go]
        dth = (d[go] * f1[go] - b[go] * f2[go]) / det[go]
        dJ = (-c[go] * f1[go] + a[go] * f2[go]) / det[go]
        th0[ig] -= dth
        J0[ig] -= dJ
        # seeds that wander far off the fundamental domain are not worth chasing
        lost = (np.abs(J0[ig]) > 4 * TWO_PI) | (np.abs(th0[ig]) > 4 * TWO_PI)
        active[ig[lost]] = False

    # many seeds land on the same point; collapse them before the per-orbit work
    pts = reduce_torus(PhasePoint(th0[done], J0[done]))
    grid = np.round(np.stack([pts.theta, pts.J], -1) / (0.1 * DEDUP_TOL))
    _, first = np.unique(grid, axis=0, return_index=True)
    found = []
    for i in np.sort(first):
        orb = _orbit_from_point(PhasePoint(pts.theta[i], pts.J[i]), spec, p, j)
        if orb is not None:
            found.append(orb)
    return _dedup(found)


@dataclass(frozen=True)
class AccelerationPrediction:
    """Mean momentum gain per kick, in ladder units, of the mode attached to an orbit."""

    a: float
    jump_j: int
    period_p: int
    T: int
    Delta_T: float
    drift: float
    epsilon: float


def acceleration(j: int, p: int, T: int, Delta_T: float, drift: float, epsilon: float) -> float:
    """``(2 pi j/(p T) - Delta_T - drift) / epsilon``, in ladder units per kick."""
    if epsilon == 0:
        raise ValueError("epsilon = 0: no detuning, no epsilon-classical dynamics")
    return (TWO_PI * j / (p * T) - Delta_T - drift) / epsilon


def predict_acceleration(orbit: PeriodicOrbit, epsilon: float) -> AccelerationPrediction:
    """``a = (2 pi j/(p T) - Delta_T - tau eta) / epsilon``.

    ``I/epsilon`` is the physical momentum for either sign of ``epsilon``,
    so ``a`` is directly the slope of ``m + beta`` against the kick number.
    """
    if epsilon == 0:
        raise ValueError("epsilon = 0: no detuning, no epsilon-classical dynamics")
    spec = orbit.spec
    a = acceleration(orbit.jump_j, orbit.period_p, spec.T, spec.deltas.Delta_T, spec.drift, epsilon)
    return AccelerationPrediction(
        a=a,
        jump_j=orbit.jump_j,
        period_p=orbit.period_p,
        T=spec.T,
        Delta_T=spec.deltas.Delta_T,
        drift=spec.drift,
        epsilon=epsilon,
    )


def orbit_to_ray(orbit: PeriodicOrbit, n_kicks: int, with_J: bool = False):
    """Angles ``theta_1 .. theta_n`` along the ray of a periodic orbit.

    One period (``p*T`` single steps) is integrated from the orbit's start
    and then repeated, so unstable orbits do not drift off under rounding.
    With ``with_J`` the lifted ``J_1 .. J_n`` are returned as well; they gain
    ``2 pi j`` per period.
    """
    N = orbit.n_steps
    pt = orbit.start
    th, Js = [], []
    for t in range(N):
        pt = step(pt, t, orbit.spec, lifted=True)
        th.append(pt.theta)
        Js.append(pt.J)
    reps = -(-n_kicks // N)
    theta = np.tile(np.mod(th, TWO_PI), reps)[:n_kicks]
    if not with_J:
        return theta
    J = (np.asarray(Js)[None, :] + TWO_PI * orbit.jump_j * np.arange(reps)[:, None]).ravel()[:n_kicks]
    return theta, J


def momentum_along_orbit(pt: PhasePoint, spec: TorusMapSpec, epsilon: float, n_kicks: int) -> np.ndarray:
    """Physical momentum ``I_t / epsilon`` along the lifted iteration from ``pt``.

    ``I_t = J_t - tau*eta*t - 2*pi*s_t/q`` up to a constant, with the lifted
    labels ``s_t = sum_{u<t} d_u``.
    """
    theta, J = float(pt.theta), float(pt.J)
    out = np.empty(n_kicks + 1)
    s = 0
    out[0] = J / epsilon
    for t in range(n_kicks):
        theta, J = step(PhasePoint(theta, J), t, spec, lifted=True)
        s += spec.deltas.d[t % spec.T]
        out[t + 1] = (J - spec.drift * (t + 1) - TWO_PI * s / spec.q) / epsilon
    return out


@dataclass(frozen=True)
class RayHessian:
    """Tridiagonal Hessian of the action along a ray; off-diagonals are all ``-1``."""

    diag: np.ndarray

    @property
    def n(self) -> int:
        return self.diag.size

    def dense(self) -> np.ndarray:
        return np.diag(self.diag) - np.eye(self.n, k=1) - np.eye(self.n, k=-1)


def build_ray_hessian(thetas, k_tilde: float) -> RayHessian:
    """Diagonal ``2 - k_tilde V''(theta_t) = 2 + k_tilde cos(theta_t)``."""
    return RayHessian(2.0 + k_tilde * np.cos(np.asarray(thetas, dtype=float)))


_RESCALE_EXP = 512
_RESCALE = 2.0**_RESCALE_EXP


def det_growth(h: RayHessian) -> np.ndarray:
    """``log|D_t|`` for the leading principal minors ``D_t`` of the Hessian.

    ``D_0 = diag[0]``, ``D_t = diag[t] D_{t-1} - D_{t-2}`` with ``D_{-1} = 1``.
    Both carried minors are divided by ``2**512`` whenever ``|D_t|`` exceeds
    it and the scale is kept separately, so long rays never overflow.
    """
    diag = h.diag
    out = np.empty(diag.size)
    prev, cur, log_scale = 0.0, 1.0, 0.0
    ln_rescale = _RESCALE_EXP * math.log(2.0)
    for t, x in enumerate(diag.tolist()):
        prev, cur = cur, x * cur - prev
        if abs(cur) > _RESCALE:
            prev /= _RESCALE
            cur /= _RESCALE
            log_scale += ln_rescale
        out[t] = (math.log(abs(cur)) if cur != 0 else -math.inf) + log_scale
    return out


def growth_slope(log_det: np.ndarray) -> float:
    """Least-squares slope of ``log|D_t|`` against ``t`` (non-finite entries skipped)."""
    t = np.arange(log_det.size, dtype=float)
    ok = np.isfinite(log_det)
    if ok.sum() < 2:
        return 0.0
    return float(np.polyfit(t[ok], log_det[ok], 1)[0])


def ray_lyapunov(thetas, k_tilde: float) -> float:
    """Lyapunov exponent of the transfer-matrix product ``prod [[2 + k cos, -1], [1, 0]]``.

    The propagated vector is renormalized at every step.
    """
    diag = build_ray_hessian(thetas, k_tilde).diag
    if diag.size == 0:
        raise ValueError("empty ray")
    u, v = 1.0, 0.0
    total = 0.0
    for x in diag.tolist():
        u, v = x * u - v, u
        r = math.hypot(u, v)
        total += math.log(r)
        u, v = u / r, v / r
    return total / diag.size


def tangent_log_radius(orbit: PeriodicOrbit) -> float:
    """``log(spectral radius of the p*T-step tangent map) / (p*T)``."""
    M = orbit.monodromy
    if M is None:
        _, M = lifted_tangent(orbit.start, orbit.spec, orbit.n_steps)
    rho = max(abs(np.linalg.eigvals(M)))
    return math.log(rho) / orbit.n_steps


# --------------------------------------------------------------------------
# catalog


@dataclass(frozen=True)
class CatalogEntry:
    """One orbit together with its resonance context and predicted acceleration."""

    q: int
    p_res: int
    tau: float
    epsilon: float
    d: tuple[int, ...]
    k_tilde: float
    drift: float
    period_p: int
    jump_j: int
    theta0: float
    J0: float
    trace: float
    residue: float
    stable: bool
    a_predicted: float

    @property
    def T(self) -> int:
        return len(self.d)

    @property
    def key(self) -> tuple:
        return (self.q, self.p_res, self.d, self.period_p, self.jump_j, round(self.theta0, 6), round(self.J0, 6))


def _torus_maps(q: int, T: int):
    """Distinct torus maps of period ``T``: offsets ``d_t`` mod ``q`` up to cyclic shift."""
    out, seen = [], set()
    for ds in enumerate_delta_sequences(q, T, range(0, q)):
        reduced = tuple(x % q for x in ds.d)
        canon = min(reduced[i:] + reduced[:i] for i in range(T))
        if canon not in seen:
            seen.add(canon)
            out.append(DeltaSequence(q, canon))
    return out


def _jump_range(spec: TorusMapSpec, p: int):
    """Jumping indices allowed by ``|2 pi j/(pT) - Delta_T - drift| <= |k_tilde|``."""
    N = p * spec.T
    centre = spec.deltas.Delta_T + spec.drift
    lo = math.ceil(N * (centre - abs(spec.k_tilde)) / TWO_PI - 1e-12)
    hi = math.floor(N * (centre + abs(spec.k_tilde)) / TWO_PI + 1e-12)
    return range(lo, hi + 1)


def build_catalog(
    tau: float,
    k: float,
    eta: float,
    q_max: int = 2,
    T_values=(1,),
    periods=(1, 2, 3, 4, 5),
    window=None,
    resonances=None,
    delta_sequences=None,
    seeds: int = 32,
    stable_only: bool = False,
) -> list[CatalogEntry]:
    """Orbits of every map in the family near ``tau``, with their predictions.

    Resonances come from :func:`nearest_resonances` unless ``resonances``
    (a list of ``(p, q)`` pairs) is given.  For each resonance the maps are
    all period-``T`` offset sequences (``d_t`` mod ``q``), or the explicit
    ``delta_sequences`` whose ``q`` matches.  Only jumping indices compatible
    with ``|k_tilde|`` are searched.
    """
    if resonances is None:
        pairs = [(spec.p, spec.q) for spec, _ in nearest_resonances(tau, q_max, window)]
    else:
        pairs = [tuple(pq) for pq in resonances]
    entries: dict[tuple, CatalogEntry] = {}
    for p_res, q in pairs:
        epsilon = tau - TWO_PI * p_res / q
        if epsilon == 0:
            continue
        k_tilde = k * epsilon
        if delta_sequences is not None:
            maps = [ds for ds in delta_sequences if ds.q == q]
        else:
            maps = [ds for T in T_values for ds in _torus_maps(q, T)]
        for ds in maps:
            spec = TorusMapSpec(k_tilde, tau * eta, ds)
            for period in periods:
                for j in _jump_range(spec, period):
                    for orb in find_periodic_orbits(spec, period, j, seeds=seeds):
                        if orb.parabolic or (stable_only and not orb.stable):
                            continue
                        entry = CatalogEntry(
                            q=q,
                            p_res=p_res,
                            tau=tau,
                            epsilon=epsilon,
                            d=ds.d,
                            k_tilde=k_tilde,
                            drift=spec.drift,
                            period_p=period,
                            jump_j=j,
                            theta0=float(orb.points[0, 0]),
                            J0=float(orb.points[0, 1]),
                            trace=orb.trace,
                            residue=orb.residue,
                            stable=orb.stable,
                            a_predicted=predict_acceleration(orb, epsilon).a,
                        )
                        entries.setdefault(entry.key, entry)
    return sorted(entries.values(), key=lambda e: (abs(e.epsilon), e.q, e.d, e.period_p, e.jump_j, e.theta0))
