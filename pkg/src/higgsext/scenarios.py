"""Shipped scenario library.

Each scenario bundles a concrete Higgs extension on a flat torus with its
exact slope parameter and the declared lattice of invariant subobject
profiles used by the exact stability checker.  Twisted holomorphic data
(harmonic representatives, holomorphic sections of positive-degree factors)
comes from discrete kernel eigensolves of the twisted dbar operator, so no
closed-form theta functions are needed on the grid.

The library:

* ``S0``  rank 2, E1 = L(-1), E2 = O, unit harmonic beta, no Higgs field,
          alpha = -1/2; slope stable.
* ``S1``  S0 with the central Higgs field theta * I dz (theta = 1); the
          metric flow is identical to S0.
* ``S2``  rank 3: E1 is the nonsplit extension of O by L(-1) (a within-E1
          (0,1)-potential built from the conjugate theta section), E2 = O,
          a constant harmonic beta into the O summand, central Higgs field;
          alpha = -1/4; slope stable.
* ``U0``  the S0 bundles with alpha = -3/2, below the admissible range;
          slope unstable, the flow destabilizes toward E1.
* ``P0``  the split bundle L(-1) (+) O with alpha = -1 at the boundary of
          the range; polystable, the background metric is an exact solution.
* ``X0``  rank 2 with an active nilpotent Higgs coupling b = phi dz in
          Hom(E2, E1) = L(1); integrable but never stable (empty range);
          used to exercise [theta, theta*] != 0 paths in variational tests.
* ``P2``  d = 2 product-torus split scenario L(-1,-1) (+) O at the boundary
          alpha; the background solves the equation and the Chern-number
          identity has zero slack.
* ``X2``  d = 2 rank 2 with constant nilpotent Higgs coupling and constant
          beta; integrable, used for transgression tests in two variables.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from higgsext import kahler_grid as kg
from higgsext import stability as st
from higgsext.higgs_bundle import (HermitianMetric, HiggsExtension,
                                   alpha_analytic, build_extension)

SQ2 = float(np.sqrt(2.0))


@dataclass
class Scenario:
    name: str
    ext: HiggsExtension
    alpha_alg: Fraction
    stability: st.StabilityScenario | None
    description: str

    @property
    def alpha_an(self):
        return alpha_analytic(self.alpha_alg)

    def background_metric(self):
        return HermitianMetric.background(self.ext)


def _beta_block(geom, row_twists, col_twists, entries):
    """(0,1) Hom-block with given {(i, j): grid-array or scalar} entries."""
    f = kg.zeros_field(geom, 0, 1, row_twists, col_twists)
    for (i, j, comp), val in entries.items():
        f.values[comp, ..., i, j] = val
    return f


def _b_block(geom, row_twists, col_twists, entries):
    f = kg.zeros_field(geom, 1, 0, row_twists, col_twists)
    for (i, j, comp), val in entries.items():
        f.values[comp, ..., i, j] = val
    return f


def _central_theta(geom, twists, theta):
    return kg.const_endo(geom, twists, theta * np.eye(len(twists)), p=1, q=0)


def _harmonic_into_negative(geom, k=1):
    """Unit-norm harmonic (0,1)-coefficient valued in the degree -k sector.

    The conjugate of the discrete holomorphic generator of the +k sector;
    normalized so the (0,1)-field has unit L2 norm (|dzbar|^2 = 2).
    """
    phi = kg.twisted_generator(geom, (k,) + (0,) * (geom.d - 1))
    return np.conj(phi) / SQ2


def _curve():
    return st.CurveData(genus=1, h=1)


def _profile(rk, deg, rk1, deg1, rk2, deg2):
    return st.SubobjectProfile(rk=rk, deg=Fraction(deg), rk1=rk1,
                               deg1=Fraction(deg1), rk2=rk2,
                               deg2=Fraction(deg2))


_RANK2_PROFILES = (
    _profile(1, -1, 1, -1, 0, 0),   # E1 = L(-1)
    _profile(1, -1, 0, 0, 1, -1),   # deepest line onto E2 (degree-0 lift
                                    # blocked by the nonzero beta class)
)

_SPLIT_PROFILES = (
    _profile(1, -1, 1, -1, 0, 0),   # E1
    _profile(1, 0, 0, 0, 1, 0),     # the O summand (the extension splits)
)

_S2_PROFILES = (
    _profile(1, -1, 1, -1, 0, 0),   # L(-1) inside E1
    _profile(2, -1, 2, -1, 0, 0),   # E1 (nonsplit, slope -1/2)
    _profile(1, -1, 0, 0, 1, -1),   # deepest line onto E2
    _profile(2, -2, 1, -1, 1, -1),  # deepest rank-2 through L(-1) onto E2
)

_X0_PROFILES = (
    _profile(1, 0, 1, 0, 0, 0),     # E1 = O, the destabilizing subobject
)


def _stab(n, deg, rk2, deg2, profiles, alpha):
    return st.StabilityScenario(curve=_curve(), n=n, deg=Fraction(deg),
                                rk2=rk2, deg2=Fraction(deg2),
                                subobjects=profiles, alpha=Fraction(alpha))


def _make_s0(N, fd_order, central_theta=None, alpha=Fraction(-1, 2)):
    geom = kg.make_torus(1, N, fd_order=fd_order)
    beta = _beta_block(geom, ((-1,),), ((0,),),
                       {(0, 0, 0): _harmonic_into_negative(geom)})
    kwargs = {}
    if central_theta is not None:
        kwargs["theta1"] = _central_theta(geom, ((-1,),), central_theta)
        kwargs["theta2"] = _central_theta(geom, ((0,),), central_theta)
    ext = build_extension(geom, [-1], [0], beta=beta, **kwargs)
    return ext


def make_scenario(name, N=32, fd_order=6):
    """Build a named scenario from the shipped library."""
    key = name.upper()
    if key == "S0":
        ext = _make_s0(N, fd_order)
        return Scenario("S0", ext, Fraction(-1, 2),
                        _stab(2, -1, 1, 0, _RANK2_PROFILES, Fraction(-1, 2)),
                        "stable rank-2 extension, no Higgs field")
    if key == "S1":
        ext = _make_s0(N, fd_order, central_theta=1.0)
        return Scenario("S1", ext, Fraction(-1, 2),
                        _stab(2, -1, 1, 0, _RANK2_PROFILES, Fraction(-1, 2)),
                        "S0 with a central Higgs field (flow-equivalent)")
    if key == "U0":
        ext = _make_s0(N, fd_order)
        return Scenario("U0", ext, Fraction(-3, 2),
                        _stab(2, -1, 1, 0, _RANK2_PROFILES, Fraction(-3, 2)),
                        "S0 bundles below the admissible range; unstable")
    if key == "P0":
        geom = kg.make_torus(1, N, fd_order=fd_order)
        ext = build_extension(geom, [-1], [0])
        return Scenario("P0", ext, Fraction(-1),
                        _stab(2, -1, 1, 0, _SPLIT_PROFILES, Fraction(-1)),
                        "split scenario at the boundary alpha; polystable")
    if key == "S2":
        geom = kg.make_torus(1, N, fd_order=fd_order)
        gamma = _harmonic_into_negative(geom)
        dbar1 = _beta_block(geom, ((0,), (-1,)), ((0,), (-1,)),
                            {(1, 0, 0): gamma})
        beta = _beta_block(geom, ((0,), (-1,)), ((0,),),
                           {(0, 0, 0): 1.0 / SQ2})
        th = 0.5
        ext = build_extension(
            geom, [0, -1], [0], beta=beta, dbar1_pot=dbar1,
            theta1=_central_theta(geom, ((0,), (-1,)), th),
            theta2=_central_theta(geom, ((0,),), th))
        return Scenario("S2", ext, Fraction(-1, 4),
                        _stab(3, -1, 1, 0, _S2_PROFILES, Fraction(-1, 4)),
                        "stable rank-3 scenario: nonsplit E1 plus a "
                        "nontrivial beta class, central Higgs field")
    if key == "X0":
        geom = kg.make_torus(1, N, fd_order=fd_order)
        phi = kg.twisted_generator(geom, (1,))
        b = _b_block(geom, ((0,),), ((-1,),), {(0, 0, 0): phi / SQ2})
        ext = build_extension(geom, [0], [-1], b_field=b)
        return Scenario("X0", ext, Fraction(-1, 2),
                        _stab(2, -1, 1, -1, _X0_PROFILES, Fraction(-1, 2)),
                        "active nilpotent Higgs coupling; integrable, "
                        "never alpha-stable (empty range)")
    if key == "P2":
        geom = kg.make_torus(2, N, fd_order=fd_order)
        ext = build_extension(geom, [(-1, -1)], [(0, 0)])
        return Scenario("P2", ext, Fraction(-2), None,
                        "d=2 split product scenario at the boundary alpha")
    if key == "X2":
        geom = kg.make_torus(2, N, fd_order=fd_order)
        zero = (0, 0)
        b = _b_block(geom, (zero,), (zero,), {(0, 0, 0): 0.7})
        beta = _beta_block(geom, (zero,), (zero,), {(0, 0, 1): 0.4})
        ext = build_extension(geom, [zero], [zero], b_field=b, beta=beta)
        return Scenario("X2", ext, Fraction(-1, 2), None,
                        "d=2 rank-2 constant nilpotent Higgs data")
    raise KeyError(f"unknown scenario {name!r}; "
                   f"library: S0 S1 S2 U0 P0 X0 P2 X2")


SCENARIO_NAMES = ("S0", "S1", "S2", "U0", "P0", "X0", "P2", "X2")


def twisted_generator(geom, twist):
    """Re-export of the discrete holomorphic sector generator."""
    return kg.twisted_generator(geom, twist)
