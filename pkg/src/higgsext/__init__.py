"""Numerical and exact-arithmetic laboratory for extensions of Higgs bundles.

Subpackages:

* ``kahler_grid``  - discrete flat-torus complex geometry
* ``higgs_bundle`` - extensions of Higgs bundles, connections and curvature
* ``scenarios``    - the shipped scenario library (S0, S1, S2, U0, P0, X0)
* ``functional``   - Bott-Chern forms, Donaldson-Simpson energies, moment map
* ``flow``         - gradient-descent solver and destabilization diagnostics
* ``stability``    - exact-rational slope and Gieseker stability over curves
* ``bogomolov``    - Chern-number inequalities and the curvature identity
* ``cli``          - batch front-end
"""

from higgsext import (bogomolov, flow, functional, higgs_bundle, kahler_grid,
                      scenarios, stability)

__all__ = [
    "kahler_grid",
    "higgs_bundle",
    "scenarios",
    "functional",
    "flow",
    "stability",
    "bogomolov",
]

__version__ = "0.1.0"
