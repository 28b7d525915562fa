"""Exact quantum evolution of the gravity-kicked rotor at fixed quasi-momentum.

States live on a finite window of the integer momentum ladder ``m`` (the
physical momentum being ``m + beta``).  The free evolution is diagonal in
``m``; the kick ``exp(-i k cos theta)`` is applied on an angle grid through a
pair of FFTs.  The window follows the state: it is padded before every kick
and trimmed afterwards, so truncation errors stay below ``1e-12``.

A :class:`RotorState` may carry a batch of states (``amps`` of shape
``(B, L)`` with one ``beta`` per row) sharing the same momentum window.
This is how ensembles of plane waves are propagated in :func:`scan_tau`.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .resonance import DetuningContext, ResonanceSpec, gauss_coefficients

__all__ = [
    "RotorState",
    "KickSchedule",
    "ScanConfig",
    "MomentumScan",
    "plane_wave",
    "apply_kick",
    "apply_free",
    "one_kick",
    "evolve",
    "resonant_step",
    "factorized_step",
    "phase_aligned_distance",
    "initial_ensemble",
    "scan_tau",
]

BOUNDARY_TOL = 1e-12
# mass discarded at each window edge after a kick; keeps boundary amplitudes ~1e-14
TRIM_MASS = 1e-28


@dataclass
class RotorState:
    """Amplitudes on the momentum window ``m_min .. m_min + L - 1`` at quasi-momentum ``beta``."""

    beta: float | np.ndarray
    m_min: int
    amps: np.ndarray

    def __post_init__(self):
        self.amps = np.asarray(self.amps, dtype=complex)
        self.m_min = int(self.m_min)
        if np.ndim(self.beta) > 0:
            self.beta = np.asarray(self.beta, dtype=float)
            if self.amps.ndim != 2 or self.beta.shape != self.amps.shape[:1]:
                raise ValueError("batched state needs amps of shape (B, L) and B betas")
        else:
            self.beta = float(self.beta)

    @property
    def batched(self) -> bool:
        return self.amps.ndim == 2

    @property
    def size(self) -> int:
        return self.amps.shape[-1]

    @property
    def m_max(self) -> int:
        return self.m_min + self.size - 1

    @property
    def m(self) -> np.ndarray:
        return np.arange(self.m_min, self.m_min + self.size)

    @property
    def momenta(self) -> np.ndarray:
        """Physical momenta ``m + beta`` (one row per batch member)."""
        if self.batched:
            return self.m[None, :] + self.beta[:, None]
        return self.m + self.beta

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    def norm(self):
        return np.sqrt(self.probabilities().sum(axis=-1))

    def copy(self) -> RotorState:
        beta = self.beta.copy() if self.batched else self.beta
        return RotorState(beta, self.m_min, self.amps.copy())

    def expectation(self, f) -> float | np.ndarray:
        """``sum_m f(m + beta) |a_m|^2``."""
        return (f(self.momenta) * self.probabilities()).sum(axis=-1)

    def on_window(self, m_min: int, m_max: int) -> np.ndarray:
        """Amplitudes re-embedded on ``[m_min, m_max]``; sites outside the window are zero."""
        out = np.zeros(self.amps.shape[:-1] + (m_max - m_min + 1,), dtype=complex)
        lo, hi = max(m_min, self.m_min), min(m_max, self.m_max)
        if lo <= hi:
            out[..., lo - m_min : hi - m_min + 1] = self.amps[..., lo - self.m_min : hi - self.m_min + 1]
        return out

    def difference(self, other: RotorState) -> np.ndarray:
        lo, hi = min(self.m_min, other.m_min), max(self.m_max, other.m_max)
        return self.on_window(lo, hi) - other.on_window(lo, hi)

    def padded(self, left: int, right: int) -> RotorState:
        amps = np.pad(self.amps, [(0, 0)] * (self.amps.ndim - 1) + [(left, right)])
        return RotorState(self.beta, self.m_min - left, amps)

    def trimmed(self, mass: float = TRIM_MASS) -> RotorState:
        """Drop edge sites whose cumulative probability is below ``mass``."""
        prob = self.probabilities()
        if prob.ndim == 2:
            prob = prob.sum(axis=0)
        lo = int(np.searchsorted(np.cumsum(prob), mass, side="right"))
        hi = int(np.searchsorted(np.cumsum(prob[::-1]), mass, side="right"))
        if lo + hi >= prob.size:
            return self
        return RotorState(self.beta, self.m_min + lo, self.amps[..., lo : prob.size - hi])


def plane_wave(m0: int = 0, beta: float = 0.0, half_width: int = 0) -> RotorState:
    amps = np.zeros(2 * half_width + 1, dtype=complex)
    amps[half_width] = 1.0
    return RotorState(beta, m0 - half_width, amps)


@dataclass(frozen=True)
class KickSchedule:
    """Parameters of the one-kick propagator ``U_n``.

    The free evolution before kick ``n`` carries the phase
    ``exp(-i tau/2 (m + beta + eta/2 + eta*n)^2)``.
    """

    k: float
    tau: float
    eta: float = 0.0

    def phase_offset(self, beta, n: int):
        return beta + 0.5 * self.eta + self.eta * n


def _kick_margin(k: float) -> int:
    ak = abs(k)
    # Bessel tails J_n(k) beyond n ~ k + O(k^(1/3)) are negligible
    return math.ceil(ak) + 16 + math.ceil(4.0 * ak ** (1.0 / 3.0))


def apply_kick(state: RotorState, k: float, trim: bool = True) -> RotorState:
    """Multiply the wavefunction by ``exp(-i k cos theta)``.

    The window is padded by ``ceil(k) + 16`` (plus a ``k**(1/3)`` allowance)
    on each side, embedded in an angle grid whose size is the smallest power
    of two at least twice the padded window, and the whole grid is kept as the
    new window before trimming negligible edge mass.
    """
    if k == 0:
        return state.copy()
    margin = _kick_margin(k)
    size = state.size + 2 * margin
    n_grid = 1 << max(1, (2 * size - 1).bit_length())
    offset = (n_grid - state.size) // 2
    buf = np.zeros(state.amps.shape[:-1] + (n_grid,), dtype=complex)
    buf[..., offset : offset + state.size] = state.amps
    theta = 2.0 * np.pi * np.arange(n_grid) / n_grid
    # the window offset only multiplies psi(theta) by a phase, which commutes with the kick
    buf = np.fft.fft(np.fft.ifft(buf, axis=-1) * np.exp(-1j * k * np.cos(theta)), axis=-1)
    out = RotorState(state.beta, state.m_min - offset, buf)
    return out.trimmed() if trim else out


def apply_free(state: RotorState, tau: float, eta: float = 0.0, n: int = 0) -> RotorState:
    """Free rotation ``a_m -> exp(-i tau/2 (m + beta + eta/2 + eta n)^2) a_m``."""
    shift = state.beta + 0.5 * eta + eta * n
    if state.batched:
        x = state.m[None, :] + np.asarray(shift)[:, None]
    else:
        x = state.m + shift
    return RotorState(state.beta, state.m_min, state.amps * np.exp(-0.5j * tau * x * x))


def one_kick(state: RotorState, schedule: KickSchedule, n: int) -> RotorState:
    """``U_n``: free evolution with kick index ``n`` followed by the kick."""
    return apply_kick(apply_free(state, schedule.tau, schedule.eta, n), schedule.k)


def evolve(state: RotorState, schedule: KickSchedule, n_kicks: int, record: bool = False):
    """Apply ``U_{n_kicks-1} ... U_0``.

    Returns ``(final_state, history)``.  With ``record`` the history holds,
    for every kick (the initial state first), a pair ``(momenta, prob)`` of
    ladder values ``m + beta`` and probabilities.
    """
    if n_kicks < 0:
        raise ValueError("n_kicks must be non-negative")
    history = []
    if record:
        history.append((state.momenta, state.probabilities()))
    for n in range(n_kicks):
        state = one_kick(state, schedule, n)
        if record:
            history.append((state.momenta, state.probabilities()))
    return state, history


def _same_beta(a: float, b) -> bool:
    d = (float(a) - float(b)) % 1.0
    return min(d, 1.0 - d) < 1e-12


def _translation_weights(G: np.ndarray, m: np.ndarray, q: int) -> np.ndarray:
    """``sum_s G_s exp(-2 pi i m s / q)``: the q weighted angle translations by ``2 pi s/q``."""
    s = np.arange(q)
    phases = np.exp(-2j * np.pi * (np.outer(np.mod(m, q), s) % q) / q)
    return phases @ G


def resonant_step(state: RotorState, spec: ResonanceSpec, beta_r, k: float) -> RotorState:
    """Exact resonant propagator: ``psi -> exp(-ik cos) sum_s G_s psi(theta - 2 pi s/q)``."""
    if state.batched:
        raise ValueError("resonant_step expects a single state")
    if not _same_beta(state.beta, beta_r):
        raise ValueError(f"state beta={state.beta} differs from beta_r={beta_r}")
    G = gauss_coefficients(spec.p, spec.q, beta_r).values
    amps = state.amps * _translation_weights(G, state.m, spec.q)
    return apply_kick(RotorState(state.beta, state.m_min, amps), k)


def factorized_step(state: RotorState, ctx: DetuningContext, n: int) -> RotorState:
    """Near-resonant propagator in factorized form.

    Applies the epsilon-free-rotor factor ``exp(-i eps/2 (m + beta_r)^2)``,
    then the ``G_s``-weighted translations by ``2 pi s/q + tau phi_n``, then
    the kick.  Agrees with :func:`one_kick` up to a global phase depending
    only on ``beta`` and ``n``.
    """
    if state.batched:
        raise ValueError("factorized_step expects a single state")
    if not _same_beta(state.beta, ctx.beta):
        raise ValueError(f"state beta={state.beta} differs from context beta={ctx.beta}")
    m = state.m
    G = gauss_coefficients(ctx.spec.p, ctx.spec.q, ctx.beta_r).values
    x = m + float(ctx.beta_r)
    amps = state.amps * np.exp(-0.5j * ctx.epsilon * x * x)
    amps = amps * _translation_weights(G, m, ctx.spec.q) * np.exp(-1j * m * ctx.tau * ctx.phi(n))
    return apply_kick(RotorState(state.beta, state.m_min, amps), ctx.k)


def phase_aligned_distance(a: RotorState, b: RotorState) -> float:
    """``min_phi ||a - e^{i phi} b||`` with ``phi`` fixed by the largest amplitude of ``a``."""
    lo, hi = min(a.m_min, b.m_min), max(a.m_max, b.m_max)
    va, vb = a.on_window(lo, hi), b.on_window(lo, hi)
    i = int(np.argmax(np.abs(va)))
    if abs(vb[i]) == 0:
        return float(np.linalg.norm(va - vb))
    phase = (va[i] / vb[i]) / abs(va[i] / vb[i])
    return float(np.linalg.norm(va - phase * vb))


# --------------------------------------------------------------------------
# tau scans


@dataclass
class ScanConfig:
    """Inputs of a momentum-distribution scan over kicking periods.

    Exactly one of ``eta`` (absolute) or ``eta_ratio`` (``eta = eta_ratio * tau``)
    must be given.  ``history`` selects the tau indices whose per-kick
    distributions are kept: ``None``, ``"all"`` or a list of indices.
    """

    tau_grid: np.ndarray
    k: float
    n_kicks: int
    n_members: int
    seed: int
    eta: float | None = None
    eta_ratio: float | None = None
    sigma: float = 2.5
    mean: float = 0.0
    history: object = None
    workers: int = 1

    def __post_init__(self):
        self.tau_grid = np.atleast_1d(np.asarray(self.tau_grid, dtype=float))
        if self.seed is None:
            raise ValueError("a seed is required; unseeded scans are not reproducible")
        self.seed = int(self.seed)
        if (self.eta is None) == (self.eta_ratio is None):
            raise ValueError("give exactly one of eta or eta_ratio")
        values = [self.k, self.sigma, self.mean, self.eta or 0.0, self.eta_ratio or 0.0]
        if not np.all(np.isfinite(self.tau_grid)) or not all(math.isfinite(v) for v in values):
            raise ValueError("scan parameters must be finite")
        if np.any(self.tau_grid <= 0):
            raise ValueError("tau values must be positive")
        if self.n_kicks < 0 or self.n_members < 1:
            raise ValueError("need n_kicks >= 0 and n_members >= 1")
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")

    def eta_at(self, tau: float) -> float:
        return self.eta if self.eta is not None else self.eta_ratio * tau

    def history_indices(self) -> list[int]:
        if self.history is None:
            return []
        if isinstance(self.history, str):
            if self.history != "all":
                raise ValueError(f"unknown history policy {self.history!r}")
            return list(range(self.tau_grid.size))
        return sorted({int(i) for i in self.history})


@dataclass
class MomentumScan:
    """Ensemble-averaged momentum distributions after ``n_kicks``, one row per tau.

    ``momentum_grid`` holds the bin centres (integers; each bin is one
    ladder unit wide).  ``history[i]`` (when present) has shape
    ``(n_kicks + 1, n_bins)``: the distribution after every kick at
    ``tau_grid[i]``, the initial one first.
    """

    tau_grid: np.ndarray
    n_kicks: int
    momentum_grid: np.ndarray
    prob: np.ndarray
    history: dict = field(default_factory=dict)
    config: ScanConfig | None = None

    def column(self, i: int) -> np.ndarray:
        return self.prob[i]

    def heatmap(self) -> np.ndarray:
        """Per-column max normalization of ``prob``."""
        peak = self.prob.max(axis=1, keepdims=True)
        return np.divide(self.prob, peak, out=np.zeros_like(self.prob), where=peak > 0)


def initial_ensemble(n_members: int, seed: int, mean: float = 0.0, sigma: float = 2.5):
    """Gaussian initial momenta ``p0 = m0 + beta`` split into ladder index and quasi-momentum."""
    rng = np.random.default_rng(seed)
    p0 = rng.normal(mean, sigma, size=n_members)
    m0 = np.floor(p0).astype(int)
    return m0, p0 - m0


def _bin_distribution(state: RotorState) -> tuple[int, np.ndarray]:
    """Average the batch into unit bins centred on integers; returns (first bin, weights)."""
    prob = state.probabilities()
    # m + beta with beta in [0, 1) falls into bin m (beta < 1/2) or m + 1
    upper = state.beta >= 0.5
    out = np.zeros(state.size + 1)
    out[:-1] += prob[~upper].sum(axis=0)
    out[1:] += prob[upper].sum(axis=0)
    return state.m_min, out / prob.shape[0]


def _scan_column(args):
    tau, eta, k, n_kicks, m0, beta, keep_history = args
    margin = _kick_margin(k)
    m_min = int(m0.min()) - margin
    amps = np.zeros((m0.size, int(m0.max()) - m_min + margin + 1), dtype=complex)
    amps[np.arange(m0.size), m0 - m_min] = 1.0
    state = RotorState(beta, m_min, amps)
    schedule = KickSchedule(k=k, tau=tau, eta=eta)
    frames = [_bin_distribution(state)] if keep_history else []
    for n in range(n_kicks):
        state = one_kick(state, schedule, n)
        if keep_history:
            frames.append(_bin_distribution(state))
    final = frames[-1] if keep_history else _bin_distribution(state)
    return final, frames


def _embed(start: int, weights: np.ndarray, lo: int, n_bins: int) -> np.ndarray:
    out = np.zeros(n_bins)
    out[start - lo : start - lo + weights.size] = weights
    return out


def scan_tau(config: ScanConfig) -> MomentumScan:
    """Momentum distributions after ``config.n_kicks`` kicks for every tau of the grid.

    Each ensemble member is a plane wave with momentum ``m0 + beta`` drawn
    once (seeded) and reused for every tau; it evolves at its own conserved
    ``beta``.  Distributions are recorded on the ladder values ``m + beta``
    (time-dependent gauge: no ``eta*n`` shift is added).
    """
    m0, beta = initial_ensemble(config.n_members, config.seed, config.mean, config.sigma)
    keep = set(config.history_indices())
    jobs = [
        (float(tau), config.eta_at(float(tau)), config.k, config.n_kicks, m0, beta, i in keep)
        for i, tau in enumerate(config.tau_grid)
    ]
    if config.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_scan_column, jobs))
    else:
        results = [_scan_column(job) for job in jobs]

    spans = [(start, start + w.size) for (start, w), _ in results]
    for _, frames in results:
        spans.extend((start, start + w.size) for start, w in frames)
    lo = min(s for s, _ in spans)
    n_bins = max(e for _, e in spans) - lo
    prob = np.array([_embed(start, w, lo, n_bins) for (start, w), _ in results])
    history = {
        i: np.array([_embed(start, w, lo, n_bins) for start, w in frames])
        for i, (_, frames) in enumerate(results)
        if frames
    }
    return MomentumScan(
        tau_grid=config.tau_grid.copy(),
        n_kicks=config.n_kicks,
        momentum_grid=np.arange(lo, lo + n_bins, dtype=float),
        prob=prob,
        history=history,
        config=config,
    )
