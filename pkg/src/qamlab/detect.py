"""Detection of accelerator modes in simulated momentum histories.

Near a resonance the bulk of the cloud itself spreads almost ballistically,
so a mode is a weak, narrow ridge riding on a broad background rather than a
separate bump.  The detector therefore works on the excess over a smoothed
background:

1. ``excess = P_n - smooth(P_n)`` for every kick ``n``; candidate peaks are
   local maxima of the excess mass in a +-2 bin window, outside the bulk
   window and above ``mass_threshold``.
2. Interference speckle is multiplicative, so on a single kick a mode is
   rarely the strongest maximum around it.  Candidate velocities are
   therefore taken from the excess *relative to the background*, averaged
   along straight lines ``m = v*n`` (a co-moving average); maxima above
   ``line_threshold`` seed the tracks.
3. From each seed, candidates are linked kick by kick with nearest-neighbour
   gating; tracks present in fewer than 60% of the kicks are dropped.
4. The acceleration is the least-squares slope of the centroid track, the
   first 10 kicks excluded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.ndimage import gaussian_filter1d

from .orbits import CatalogEntry

__all__ = [
    "QamDetection",
    "Track",
    "bulk_window",
    "excess_mass",
    "track_peaks",
    "fit_acceleration",
    "detect_column",
    "match_predictions",
    "detect_scan",
]

CENTROID_HALF_WIDTH = 2
BACKGROUND_WIDTH = 4.0
BACKGROUND_FLOOR = 1e-4
DISCARD_KICKS = 10
MIN_TRACK_FRACTION = 0.6
A_FLOOR = 0.05
MATCH_TOLERANCE = 0.15


@dataclass
class Track:
    """Centroid positions of one peak, ``kicks[i] -> momenta[i]``."""

    kicks: np.ndarray
    momenta: np.ndarray
    mass: np.ndarray

    def __len__(self):
        return self.kicks.size

    def as_pairs(self) -> list[tuple[int, float]]:
        return [(int(n), float(m)) for n, m in zip(self.kicks, self.momenta)]


@dataclass
class QamDetection:
    """A fitted mode at one kicking period, optionally matched to a catalog orbit."""

    tau: float
    fitted_a: float
    fit_r2: float
    peak_mass: float
    track: Track = field(repr=False)
    matched_orbit: CatalogEntry | None = None
    relative_error: float | None = None

    @property
    def matched(self) -> bool:
        return self.matched_orbit is not None


def bulk_window(control: np.ndarray, momentum_grid: np.ndarray, fraction: float = 0.9, dilation: float = 2.0):
    """Central interval holding ``fraction`` of a control distribution, widened by ``dilation``.

    The control is the unkicked (``k = 0``) distribution, i.e. the initial one.
    """
    cdf = np.cumsum(control) / control.sum()
    tail = 0.5 * (1.0 - fraction)
    lo = momentum_grid[min(np.searchsorted(cdf, tail), cdf.size - 1)]
    hi = momentum_grid[min(np.searchsorted(cdf, 1.0 - tail), cdf.size - 1)]
    return float(lo - dilation), float(hi + dilation)


def _window_sum(x: np.ndarray) -> np.ndarray:
    kernel = np.ones(2 * CENTROID_HALF_WIDTH + 1)
    return np.apply_along_axis(lambda r: np.convolve(r, kernel, mode="same"), -1, x)


def excess_mass(history: np.ndarray, background_width: float = BACKGROUND_WIDTH):
    """Excess over a Gaussian-smoothed background, and the background itself.

    Both are summed over a +-2 bin window, so ``excess / background`` is the
    relative excess of a peak.
    """
    history = np.atleast_2d(np.asarray(history, dtype=float))
    bg = gaussian_filter1d(history, background_width, axis=-1, mode="constant")
    return _window_sum(history - bg), _window_sum(bg)


def _centroid_at(prob: np.ndarray, c: int) -> tuple[float, float]:
    h = CENTROID_HALF_WIDTH
    n = prob.size
    idx = np.arange(c - h, c + h + 1)
    flanks = np.array([c - h - 2, c - h - 1, c + h + 1, c + h + 2])
    flanks = flanks[(flanks >= 0) & (flanks < n)]
    idx = idx[(idx >= 0) & (idx < n)]
    if flanks.size >= 2:
        slope, icpt = np.polyfit(flanks, prob[flanks], 1)
        base = np.maximum(slope * idx + icpt, 0.0)
    else:
        base = np.zeros(idx.size)
    w = np.clip(prob[idx] - base, 0.0, None)
    total = w.sum()
    if total <= 0:
        return float(c), 0.0
    return float((w * idx).sum() / total), float(total)


def _centroid(prob: np.ndarray, c: int) -> tuple[float, float]:
    """Centroid and mass of the peak at bin ``c`` above a linear baseline through its flanks.

    The window-summed excess is flat across a narrow peak, so ``c`` can sit
    off-centre; the window is moved once onto the first centroid.
    """
    x, mass = _centroid_at(prob, c)
    c2 = int(round(x))
    if c2 != c and mass > 0:
        x, mass = _centroid_at(prob, c2)
    return x, mass


def _local_maxima(e: np.ndarray) -> np.ndarray:
    inner = (e[1:-1] > e[:-2]) & (e[1:-1] >= e[2:])
    return np.flatnonzero(inner) + 1


def _comoving_average(E: np.ndarray, velocities: np.ndarray, m0: float, first: int) -> np.ndarray:
    """Mean of ``E_n`` along the lines ``m = v*n`` for ``n >= first`` (bins of unit width from ``m0``)."""
    n = np.arange(first, E.shape[0])
    pos = velocities[:, None] * n[None, :] - m0
    i0 = np.floor(pos).astype(int)
    f = pos - i0
    inside = (i0 >= 0) & (i0 + 1 < E.shape[1])
    i0c = np.clip(i0, 0, E.shape[1] - 2)
    rows = np.broadcast_to(n, pos.shape)
    vals = (1 - f) * E[rows, i0c] + f * E[rows, i0c + 1]
    return np.where(inside, vals, 0.0).mean(axis=1)


def track_peaks(
    history: np.ndarray,
    momentum_grid: np.ndarray,
    bulk: tuple[float, float],
    mass_threshold: float = 2e-4,
    line_threshold: float = 0.075,
    gate: float = 3.0,
    min_fraction: float = MIN_TRACK_FRACTION,
    v_step: float = 0.005,
    first_kick: int = DISCARD_KICKS,
) -> list[Track]:
    """Peaks that leave the bulk and persist, linked into tracks.

    ``history`` has one row per kick (initial distribution first) on the
    unit-spaced ``momentum_grid``.  Returns tracks sorted by mean mass,
    heaviest first.
    """
    history = np.asarray(history, dtype=float)
    n_kicks = history.shape[0] - 1
    if n_kicks < 20:
        raise ValueError("need at least 20 kicks of history")
    mg = np.asarray(momentum_grid, dtype=float)
    E, B = excess_mass(history)
    outside = (mg < bulk[0]) | (mg > bulk[1])

    candidates = []
    for n in range(n_kicks + 1):
        peaks = _local_maxima(E[n])
        peaks = peaks[outside[peaks] & (E[n, peaks] >= mass_threshold)]
        candidates.append(peaks)

    v_max = max(abs(mg[0]), abs(mg[-1])) / n_kicks
    velocities = np.arange(-v_max, v_max + v_step / 2, v_step)
    R = E / np.maximum(B, BACKGROUND_FLOOR)
    S = _comoving_average(R, velocities, mg[0], first_kick)
    seeds = [i for i in _local_maxima(S) if S[i] >= line_threshold]

    need = math.ceil(min_fraction * n_kicks)
    tracks: list[Track] = []
    for i in sorted(seeds, key=lambda i: -S[i]):
        v = velocities[i]
        if max(abs(v * n_kicks - bulk[0]), abs(v * n_kicks - bulk[1])) < gate:
            continue
        kicks, cents, masses = [], [], []
        last_n, last_x = 0, 0.0
        for n in range(1, n_kicks + 1):
            peaks = candidates[n]
            if peaks.size == 0:
                continue
            pred = last_x + v * (n - last_n) if kicks else v * n
            j = int(np.argmin(np.abs(mg[peaks] - pred)))
            if abs(mg[peaks[j]] - pred) > gate:
                continue
            x, mass = _centroid(history[n], int(peaks[j]))
            x = mg[0] + x
            kicks.append(n)
            cents.append(x)
            masses.append(mass)
            last_n, last_x = n, x
        if len(kicks) < need:
            continue
        track = Track(np.array(kicks), np.array(cents), np.array(masses))
        if any(_same_track(track, t, gate) for t in tracks):
            continue
        tracks.append(track)
    tracks.sort(key=lambda t: -t.mass.mean())
    return tracks


def _same_track(a: Track, b: Track, gate: float) -> bool:
    common, ia, ib = np.intersect1d(a.kicks, b.kicks, return_indices=True)
    if common.size == 0:
        return False
    close = np.abs(a.momenta[ia] - b.momenta[ib]) < gate
    return close.sum() > 0.5 * min(len(a), len(b))


def fit_acceleration(track, discard: int = DISCARD_KICKS) -> tuple[float, float]:
    """Least-squares slope of centroid against kick number, and the fit's ``r^2``.

    ``track`` is a :class:`Track` or a sequence of ``(kick, momentum)`` pairs.
    Kicks before ``discard`` are treated as transient and ignored.
    A constant track gives ``(0.0, 0.0)``.
    """
    if isinstance(track, Track):
        n, x = track.kicks.astype(float), track.momenta.astype(float)
    else:
        arr = np.asarray(track, dtype=float)
        n, x = arr[:, 0], arr[:, 1]
    keep = n >= discard
    n, x = n[keep], x[keep]
    if n.size < 2:
        raise ValueError("track too short after discarding the transient")
    nc = n - n.mean()
    xc = x - x.mean()
    sxx = (nc * nc).sum()
    if sxx == 0:
        raise ValueError("track has a single kick value")
    a = float((nc * xc).sum() / sxx)
    syy = (xc * xc).sum()
    if syy == 0:
        return 0.0, 0.0
    resid = xc - a * nc
    r2 = 1.0 - float((resid * resid).sum() / syy)
    return a, min(max(r2, 0.0), 1.0)


def detect_column(
    history: np.ndarray,
    momentum_grid: np.ndarray,
    tau: float,
    bulk: tuple[float, float] | None = None,
    **kwargs,
) -> list[QamDetection]:
    """Track, fit and package the modes of one kicking period.

    The bulk window defaults to the one derived from the initial (unkicked)
    distribution, ``history[0]``.
    """
    if bulk is None:
        bulk = bulk_window(history[0], momentum_grid)
    out = []
    for track in track_peaks(history, momentum_grid, bulk, **kwargs):
        a, r2 = fit_acceleration(track)
        out.append(QamDetection(tau=tau, fitted_a=a, fit_r2=r2, peak_mass=float(track.mass.mean()), track=track))
    return out


def match_predictions(
    detections: list[QamDetection],
    catalog: list[CatalogEntry],
    tolerance: float = MATCH_TOLERANCE,
    a_floor: float = A_FLOOR,
) -> list[QamDetection]:
    """Attach to every detection the stable catalog orbit closest in acceleration.

    The relative error is ``|a_fit - a_pred| / max(|a_pred|, a_floor)``;
    ties go to the orbit with the smaller ``|epsilon|``.  Detections with no
    orbit within ``tolerance`` are returned unmatched.  Catalog entries are
    only considered at the detection's own tau.
    """
    out = []
    for det in detections:
        best, best_key = None, None
        for entry in catalog:
            if not entry.stable or not math.isclose(entry.tau, det.tau, rel_tol=0, abs_tol=1e-12):
                continue
            err = abs(det.fitted_a - entry.a_predicted) / max(abs(entry.a_predicted), a_floor)
            key = (err, abs(entry.epsilon))
            if best_key is None or key < best_key:
                best, best_key = entry, key
        if best is not None and best_key[0] <= tolerance:
            out.append(replace(det, matched_orbit=best, relative_error=best_key[0]))
        else:
            out.append(replace(det, matched_orbit=None, relative_error=None))
    return out


def detect_scan(scan, catalog=None, tolerance: float = MATCH_TOLERANCE, **kwargs) -> list[QamDetection]:
    """Run the detector over every column of a scan that kept its history.

    ``catalog`` is a list of catalog entries, a callable ``tau -> entries``,
    or None (all detections unmatched).  The bulk window comes from the
    initial distribution, which is the same for every column and equals
    the unkicked control.  Output is ordered by tau.
    """
    missing = [i for i in range(scan.tau_grid.size) if i not in scan.history]
    if missing:
        raise ValueError(f"scan has no per-kick history for {len(missing)} tau values")
    first = scan.history[0][0]
    bulk = bulk_window(first, scan.momentum_grid)
    out = []
    for i in np.argsort(scan.tau_grid, kind="stable"):
        tau = float(scan.tau_grid[i])
        dets = detect_column(scan.history[i], scan.momentum_grid, tau, bulk=bulk, **kwargs)
        if catalog is not None and dets:
            entries = catalog(tau) if callable(catalog) else catalog
            dets = match_predictions(dets, entries, tolerance=tolerance)
        out.extend(dets)
    return out
