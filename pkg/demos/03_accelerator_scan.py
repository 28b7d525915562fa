"""
Scanning the kicking period and tracking accelerator modes
==========================================================

A Gaussian ensemble of plane waves is kicked 100 times at each tau of a
grid near the 1/2 resonance.  Peaks that leave the initial distribution
and move with constant momentum gain per kick are tracked, fitted and
compared to the accelerations predicted by the stable orbits of the
epsilon-classical maps.

A full scan uses 150 tau values; this demo keeps 15 to run in a few
seconds.  Pass ``--out`` to the ``qamlab detect`` command for the full run.
"""

import math

import numpy as np

from qamlab.detect import detect_scan
from qamlab.orbits import build_catalog
from qamlab.quantum import ScanConfig, scan_tau

TWO_PI = 2 * math.pi
k = 0.8 * math.pi

cfg = ScanConfig(
    TWO_PI * np.linspace(0.501, 0.508, 15),
    k=k, n_kicks=100, n_members=100, seed=1, eta_ratio=0.126, history="all",
)
scan = scan_tau(cfg)
print("momentum grid:", scan.momentum_grid[0], "..", scan.momentum_grid[-1])

# %% catalog of stable orbits at every tau, then detection and matching

def catalog(tau):
    return build_catalog(tau, k, cfg.eta_at(tau), q_max=2, seeds=16, stable_only=True)

detections = detect_scan(scan, catalog)
print(f"{len(detections)} tracks")
for det in detections:
    tag = "unmatched"
    if det.matched:
        e = det.matched_orbit
        tag = f"orbit p={e.period_p} j={e.jump_j} a_pred={e.a_predicted:+.3f} (err {det.relative_error:.3f})"
    print(f"tau/2pi = {det.tau / TWO_PI:.5f}  a_fit = {det.fitted_a:+.3f}  r2 = {det.fit_r2:.3f}  {tag}")
