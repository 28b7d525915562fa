"""
Primary resonances and their Gauss coefficients
================================================

At tau = 2 pi p/q the free evolution between kicks acts, for special
quasi-momenta, as a weighted sum of q angle translations.  This script
lists those quasi-momenta, prints the weights G_s and checks that they all
have modulus q^-1/2.
"""

import math

import numpy as np

from qamlab.resonance import (
    ResonanceSpec,
    check_commutation,
    gauss_coefficients,
    nearest_resonances,
)

# %% the half-integer resonance: two translations with equal weight

spec = ResonanceSpec(1, 2)
for beta in spec.beta_r_set:
    G = gauss_coefficients(1, 2, beta)
    print(f"p/q = 1/2, beta_r = {beta}:", np.round(G.values, 12))

# %% a high-order resonance

spec = ResonanceSpec(7, 13)
print("\np/q = 7/13, resonant quasi-momenta:", [str(b) for b in spec.beta_r_set])
G = gauss_coefficients(7, 13, spec.beta_r_set[0])
print("max | |G_s| - 13^-1/2 | =", np.max(np.abs(G.moduli - 13**-0.5)))

# the free propagator commutes with angle translations by 2 pi/q only at resonant beta
print("commutator at beta_r     :", check_commutation(7, 13, float(spec.beta_r_set[0]), k=2.5))
print("commutator at beta = 0.3 :", check_commutation(7, 13, 0.3, k=2.5))

# %% which resonance is closest to a given kicking period?

for x in (0.475, 0.507, 0.541):
    found = nearest_resonances(2 * math.pi * x, q_max=13, window=0.03)
    if not found:
        print(f"tau/2pi = {x}: no resonance with q <= 13 inside the default window")
        continue
    best, eps = found[0]
    print(f"tau/2pi = {x}: nearest {best.p}/{best.q}, epsilon = {eps:+.5f}")
