"""Quantum accelerator modes near kicked-rotor resonances of arbitrary order.

Submodules
----------
resonance
    Resonance conditions, Gauss coefficients, detuning and nearby resonances.
quantum
    Momentum-basis split-step evolution of the gravity-kicked rotor and tau scans.
epsmaps
    The epsilon-classical map family indexed by periodic offset sequences.
orbits
    Periodic orbits, stability, acceleration predictions and ray diagnostics.
detect
    Mode tracking in simulated momentum histories and catalog matching.
"""

__version__ = "0.1.0"

from . import detect, epsmaps, orbits, quantum, resonance  # noqa: E402

__all__ = ["__version__", "resonance", "quantum", "epsmaps", "orbits", "detect"]
