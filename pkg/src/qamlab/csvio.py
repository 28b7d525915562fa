"""Reproducible CSV output.

Every file starts with ``# key=value`` lines echoing the configuration and
the tool version, then a header row.  Floats are written with 17
significant digits (``%.17g``), so values round-trip exactly; rows end with
a bare ``\\n`` whatever the platform.
"""

from __future__ import annotations

import io
import math
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__

__all__ = [
    "fmt",
    "render_csv",
    "write_csv",
    "read_csv",
    "scan_rows",
    "heatmap_rows",
    "history_rows",
    "portrait_rows",
    "catalog_rows",
    "detection_rows",
    "SCAN_HEADER",
    "HISTORY_HEADER",
    "PORTRAIT_HEADER",
    "CATALOG_HEADER",
    "DETECTION_HEADER",
    "OVERLAY_HEADER",
]

SCAN_HEADER = ("tau_over_2pi", "momentum", "probability")
HISTORY_HEADER = ("kick", "momentum", "probability")
PORTRAIT_HEADER = ("seed_index", "iter", "theta", "J")
CATALOG_HEADER = (
    "q", "T", "d_list", "k_tilde", "drift", "p", "j", "theta0", "J0",
    "trace", "residue", "stable", "a_predicted", "epsilon",
)
DETECTION_HEADER = (
    "tau_over_2pi", "fitted_a", "r2", "peak_mass", "matched_q", "matched_p",
    "matched_j", "matched_pp", "a_predicted", "relative_error",
)
OVERLAY_HEADER = ("tau_over_2pi", "q", "T", "p", "j", "d_sum", "epsilon", "a_predicted", "final_momentum")


def fmt(x) -> str:
    """Text form of one cell."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if x == 0.0:
            # no negative zero in the output
            return "0"
        return "%.17g" % x
    if isinstance(x, (tuple, list)):
        # list cells are ';'-joined so the ',' separator stays unambiguous
        return ";".join(fmt(v) for v in x)
    return str(x)


def render_csv(header, rows, config: dict | None = None) -> str:
    buf = io.StringIO(newline="")
    buf.write(f"# tool=qamlab\n# version={__version__}\n")
    for key in sorted(config or {}):
        buf.write(f"# {key}={fmt(config[key])}\n")
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(fmt(v) for v in row) + "\n")
    return buf.getvalue()


def write_csv(path, header, rows, config: dict | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(render_csv(header, rows, config))
    return path


def read_csv(path):
    """``(config, header, rows)`` of a file written by :func:`write_csv`; cells stay strings."""
    config, header, rows = {}, None, []
    with open(path, encoding="utf-8", newline="") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                config[key] = value
            elif header is None:
                header = tuple(line.split(","))
            else:
                rows.append(line.split(","))
    return config, header, rows


def scan_rows(scan):
    x = scan.tau_grid / (2 * math.pi)
    for i in range(x.size):
        for m, prob in zip(scan.momentum_grid, scan.prob[i]):
            yield x[i], m, prob


def heatmap_rows(scan):
    """Grid form: one row per momentum, one column per tau, each column scaled to max 1."""
    grid = scan.heatmap()
    for r, m in enumerate(scan.momentum_grid):
        yield (m, *grid[:, r])


def history_rows(history, momentum_grid):
    for n, dist in enumerate(history):
        for m, prob in zip(momentum_grid, dist):
            yield n, m, prob


def portrait_rows(orbits: np.ndarray):
    n_seeds, n_it, _ = orbits.shape
    for s in range(n_seeds):
        for i in range(n_it):
            yield s, i, orbits[s, i, 0], orbits[s, i, 1]


def catalog_rows(entries):
    for e in entries:
        yield (
            e.q, e.T, e.d, e.k_tilde, e.drift, e.period_p, e.jump_j, e.theta0, e.J0,
            e.trace, e.residue, e.stable, e.a_predicted, e.epsilon,
        )


def detection_rows(detections):
    for d in detections:
        o = d.matched_orbit
        yield (
            d.tau / (2 * math.pi), d.fitted_a, d.fit_r2, d.peak_mass,
            None if o is None else o.q,
            None if o is None else o.p_res,
            None if o is None else o.jump_j,
            None if o is None else o.period_p,
            None if o is None else o.a_predicted,
            d.relative_error,
        )
