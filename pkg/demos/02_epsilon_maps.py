"""
Near-resonant dynamics and the epsilon-classical maps
=====================================================

Slightly off resonance the quantum step factorizes into the resonant
translations times a slow free-rotor factor.  In the small parameter
epsilon = tau - 2 pi p/q the slow factor becomes a classical map on the
torus, and its periodic orbits label the accelerator modes.
"""

import math

import numpy as np

from qamlab.epsmaps import DeltaSequence, PhasePoint, TorusMapSpec, portrait
from qamlab.orbits import find_periodic_orbits, fixed_points_analytic, predict_acceleration
from qamlab.quantum import KickSchedule, one_kick, factorized_step, phase_aligned_distance, plane_wave
from qamlab.resonance import DetuningContext, ResonanceSpec

TWO_PI = 2 * math.pi

# %% factorized step against the direct one-kick propagator

spec = ResonanceSpec(7, 13)
beta_r = spec.beta_r_set[0]
eps = 0.016
tau = spec.tau_res + eps
k, eta = 2.5, 0.126 * tau
ctx = DetuningContext(spec, tau, k, eta=eta, delta_beta=0.013, beta_r=beta_r)
sched = KickSchedule(k=k, tau=tau, eta=eta)

a = b = plane_wave(0, ctx.beta, half_width=4)
for n in range(5):
    a = one_kick(a, sched, n)
    b = factorized_step(b, ctx, n)
print("distance after 5 kicks:", phase_aligned_distance(a, b))

# %% a map of the family: 13 offsets, one of them active at every step

k_tilde, drift = 0.04, 1.455
torus = TorusMapSpec(k_tilde, drift, DeltaSequence(13, (10,)))
for orb in fixed_points_analytic(torus, 1):
    th = orb.points[0, 0]
    print(f"fixed point theta* = {th:.6f} (sin = {math.sin(th):+.7f}), {orb.kind}, residue {orb.residue:+.4f}")
    print("   predicted acceleration at eps = 0.016:", predict_acceleration(orb, eps).a)

# Newton finds the same points from a grid of seeds
for orb in find_periodic_orbits(torus, 1, 1, seeds=16):
    print("Newton:", np.round(orb.points[0], 10), orb.kind)

# %% a small phase portrait around the stable point

stable = [o for o in fixed_points_analytic(torus, 1) if o.stable][0]
th0 = stable.points[0, 0]
seeds = PhasePoint(th0 + np.linspace(0.05, 1.0, 6), np.zeros(6))
orbits = portrait(torus, seeds, 2000)
spread = np.ptp(orbits[:, :, 0], axis=1)
print("theta extent of the islands, innermost first:", np.round(spread, 3))
