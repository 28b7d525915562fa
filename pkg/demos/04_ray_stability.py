"""
Stability along rays
====================

The semiclassical amplitude of a mode is controlled by the determinant of
the tridiagonal Hessian of the action along its ray.  On a stable periodic
orbit the determinant stays bounded; on an unstable one it grows at the
orbit's Lyapunov exponent; along a ray with random offsets it grows too.
"""

import math

import numpy as np

from qamlab.epsmaps import DeltaSequence, TorusMapSpec
from qamlab.orbits import (
    build_ray_hessian,
    det_growth,
    fixed_points_analytic,
    growth_slope,
    orbit_to_ray,
    ray_lyapunov,
    tangent_log_radius,
)

k_tilde = 0.6
torus = TorusMapSpec(k_tilde, 0.0, DeltaSequence.constant(2))

for orb in fixed_points_analytic(torus, 0):
    ray = orbit_to_ray(orb, 5000)
    log_det = det_growth(build_ray_hessian(ray, k_tilde))
    print(f"{orb.kind:10s} slope {growth_slope(log_det):+.3e}  "
          f"Lyapunov {ray_lyapunov(ray, k_tilde):+.4f}  tangent map {tangent_log_radius(orb):+.4f}")

# random angles: no periodic structure
rng = np.random.default_rng(0)
ray = rng.uniform(0, 2 * math.pi, 5000)
print("random ray  slope", growth_slope(det_growth(build_ray_hessian(ray, k_tilde))))
