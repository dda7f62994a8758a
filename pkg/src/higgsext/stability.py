"""Exact-rational slope and Gieseker stability for Higgs extensions on curves.

Everything in this module is exact: slopes are ``fractions.Fraction``,
Hilbert polynomials have integer coefficients and eventual ("m large")
comparisons are decided by lexicographic coefficient comparison.  Subobject
lattices are declared by the scenario author (profiles of the finitely many
saturated invariant subextensions that matter), not discovered.

A subobject profile records (rk, deg) of the subsheaf together with its
intersection with the sub part (rk1, deg1) and its image in the quotient
part (rk2, deg2); rk = rk1 + rk2 and deg = deg1 + deg2.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

RationalSlope = Fraction

STABLE = "Stable"
SEMISTABLE = "Semistable"
UNSTABLE = "Unstable"
G_STABLE = "GStable"
G_SEMISTABLE = "GSemistable"
G_UNSTABLE = "GUnstable"


@dataclass(frozen=True)
class CurveData:
    """Base curve: genus and degree of the polarization O_X(1)."""

    genus: int
    h: int = 1

    def __post_init__(self):
        if self.h <= 0:
            raise ValueError("polarization degree must be positive")


@dataclass(frozen=True)
class SubobjectProfile:
    rk: int
    deg: Fraction
    rk1: int
    deg1: Fraction
    rk2: int
    deg2: Fraction

    def __post_init__(self):
        if self.rk != self.rk1 + self.rk2:
            raise ValueError("profile ranks do not add up")
        if Fraction(self.deg) != Fraction(self.deg1) + Fraction(self.deg2):
            raise ValueError("profile degrees do not add up")
        if self.rk <= 0:
            raise ValueError("subobject must have positive rank")


@dataclass(frozen=True)
class StabilityScenario:
    """Exact profile of an extension with its declared invariant subobjects."""

    curve: CurveData
    n: int
    deg: Fraction
    rk2: int
    deg2: Fraction
    subobjects: tuple
    alpha: Fraction

    def __post_init__(self):
        object.__setattr__(self, "alpha", Fraction(self.alpha))
        object.__setattr__(self, "deg", Fraction(self.deg))
        object.__setattr__(self, "deg2", Fraction(self.deg2))
        if not (0 < self.rk2 < self.n):
            raise ValueError("extension needs positive sub and quotient ranks")
        if self.alpha >= 0:
            raise ValueError("alpha must be negative")
        for s in self.subobjects:
            if not (0 < s.rk <= self.n and 0 <= s.rk2 <= self.rk2
                    and s.rk1 <= self.n - self.rk2):
                raise ValueError(f"inconsistent subobject profile {s}")

    @property
    def rk1(self):
        return self.n - self.rk2

    @property
    def deg1(self):
        return self.deg - self.deg2

    def proper_subobjects(self):
        for s in self.subobjects:
            if s.rk < self.n or s.deg != self.deg:
                yield s


def alpha_slope(deg, rk, rk2, alpha):
    """mu_alpha = deg/rk + alpha * rk2/rk, exactly."""
    if rk == 0:
        raise ZeroDivisionError("alpha_slope of a rank-zero object")
    return Fraction(deg) / rk + Fraction(alpha) * Fraction(rk2, rk)


def alpha_range(deg1, rk1, deg2, rk2):
    """Admissible open interval (mu1 - mu2, 0); None if it is empty."""
    if rk1 == 0 or rk2 == 0:
        raise ZeroDivisionError("alpha_range needs positive ranks")
    lo = Fraction(deg1, rk1) - Fraction(deg2, rk2)
    if lo >= 0:
        return None
    return (lo, Fraction(0))


def is_slope_stable(scn):
    """Exact slope classification with the worst witness.

    Returns (status, witness) where witness is the profile with maximal
    mu_alpha excess (None when there are no proper subobjects).
    """
    mu_total = alpha_slope(scn.deg, scn.n, scn.rk2, scn.alpha)
    worst = None
    worst_excess = None
    for s in scn.proper_subobjects():
        excess = alpha_slope(s.deg, s.rk, s.rk2, scn.alpha) - mu_total
        if worst_excess is None or excess > worst_excess:
            worst, worst_excess = s, excess
    if worst is None or worst_excess < 0:
        return STABLE, worst
    if worst_excess == 0:
        return SEMISTABLE, worst
    return UNSTABLE, worst


def hilbert_poly(curve, rk, deg):
    """Hilbert polynomial on a curve: P(m) = deg + rk*(m*h + 1 - genus).

    Returned as integer coefficients (constant, linear).
    """
    if rk < 0:
        raise ValueError("rank must be nonnegative")
    return (Fraction(deg) + rk * (1 - curve.genus), Fraction(rk * curve.h))


def hilbert_rescale(poly, twist_b):
    """Substitute m -> twist_b * m in a polynomial given as ascending coeffs."""
    if twist_b < 1:
        raise ValueError("twist exponent must be a positive integer")
    return tuple(c * twist_b ** i for i, c in enumerate(poly))


def _poly_cmp_eventual(pa, pb):
    """Sign of pa - pb for m large: lexicographic from the leading coefficient."""
    la = max(len(pa), len(pb))
    a = list(pa) + [Fraction(0)] * (la - len(pa))
    b = list(pb) + [Fraction(0)] * (la - len(pb))
    for ca, cb in zip(reversed(a), reversed(b)):
        if ca != cb:
            return 1 if ca > cb else -1
    return 0


def _scaled(poly, rk):
    return tuple(c / rk for c in poly)


def gieseker_classify(scn):
    """Exact Gieseker classification with a per-subobject clause trace.

    Clause logic per proper subobject: (i) compare the alpha-slopes;
    on equality (ii) compare P/rk for m large; on equality again
    (iii) the quotient polynomial P2'/rk2' must be strictly larger
    (weakly for semistability).  rk2' = 0 subobjects are decided by
    (i)-(ii) alone: clause (iii) then blocks stability but not
    semistability (documented convention).
    """
    curve = scn.curve
    mu_total = alpha_slope(scn.deg, scn.n, scn.rk2, scn.alpha)
    p_total = _scaled(hilbert_poly(curve, scn.n, scn.deg), scn.n)
    p2_total = _scaled(hilbert_poly(curve, scn.rk2, scn.deg2), scn.rk2)

    stable_ok = True
    semistable_ok = True
    trace = []
    for s in scn.proper_subobjects():
        mu_sub = alpha_slope(s.deg, s.rk, s.rk2, scn.alpha)
        if mu_sub < mu_total:
            trace.append((s, "i", "strict"))
            continue
        if mu_sub > mu_total:
            stable_ok = semistable_ok = False
            trace.append((s, "i", "violated"))
            continue
        c = _poly_cmp_eventual(_scaled(hilbert_poly(curve, s.rk, s.deg), s.rk),
                               p_total)
        if c < 0:
            trace.append((s, "ii", "strict"))
            continue
        if c > 0:
            stable_ok = semistable_ok = False
            trace.append((s, "ii", "violated"))
            continue
        if s.rk2 == 0:
            stable_ok = False
            trace.append((s, "iii", "skipped: rk2'=0, decided by (i)-(ii)"))
            continue
        c2 = _poly_cmp_eventual(
            _scaled(hilbert_poly(curve, s.rk2, s.deg2), s.rk2), p2_total)
        if c2 > 0:
            trace.append((s, "iii", "strict (deciding clause, note the "
                                    "quotient polynomial must be larger)"))
            continue
        stable_ok = False
        if c2 == 0:
            trace.append((s, "iii", "equality: semistable only"))
        else:
            semistable_ok = False
            trace.append((s, "iii", "violated"))
    if stable_ok:
        return G_STABLE, trace
    if semistable_ok:
        return G_SEMISTABLE, trace
    return G_UNSTABLE, trace


# ---------------------------------------------------------------------------
# implication chain on randomized scenarios
# ---------------------------------------------------------------------------

_CHAIN_ALPHAS = (Fraction(-1, 3), Fraction(-1, 2), Fraction(-2))


def random_scenario(rng, max_rank=4, max_deg=6):
    """Random consistent exact scenario (seeded ``random.Random``)."""
    g = rng.choice([0, 1, 2])
    h = rng.choice([1, 2])
    n = rng.randint(2, max_rank)
    rk2 = rng.randint(1, n - 1)
    deg = Fraction(rng.randint(-max_deg, max_deg))
    deg2 = Fraction(rng.randint(-max_deg, max_deg))
    rk1 = n - rk2
    deg1 = deg - deg2
    candidates = [a for a in _CHAIN_ALPHAS
                  if Fraction(deg1, rk1) - Fraction(deg2, rk2) < a < 0]
    alpha = rng.choice(candidates) if candidates else rng.choice(_CHAIN_ALPHAS)
    subs = []
    for _ in range(rng.randint(1, 4)):
        srk2 = rng.randint(0, rk2)
        srk1 = rng.randint(0 if srk2 else 1, rk1)
        if srk1 + srk2 == 0 or (srk1 + srk2 == n):
            continue
        sdeg1 = Fraction(rng.randint(-max_deg, max_deg))
        sdeg2 = Fraction(rng.randint(-max_deg, max_deg)) if srk2 else Fraction(0)
        subs.append(SubobjectProfile(rk=srk1 + srk2, deg=sdeg1 + sdeg2,
                                     rk1=srk1, deg1=sdeg1,
                                     rk2=srk2, deg2=sdeg2))
    if not subs:
        subs.append(SubobjectProfile(rk=rk1, deg=deg1, rk1=rk1, deg1=deg1,
                                     rk2=0, deg2=Fraction(0)))
    return StabilityScenario(curve=CurveData(genus=g, h=h), n=n, deg=deg,
                             rk2=rk2, deg2=deg2, subobjects=tuple(subs),
                             alpha=alpha)


def implication_check(count=10_000, seed=0, max_rank=4, max_deg=6):
    """Assert the chain slope-stable => G-stable => G-semistable => slope-semistable.

    Returns a report dict; raises AssertionError with the offending instance
    on any violation.
    """
    rng = random.Random(seed)
    checked = 0
    for _ in range(count):
        scn = random_scenario(rng, max_rank=max_rank, max_deg=max_deg)
        slope, _ = is_slope_stable(scn)
        gies, _ = gieseker_classify(scn)
        if slope == STABLE and gies != G_STABLE:
            raise AssertionError(f"slope stable but not Gieseker stable: {scn}")
        if gies == G_STABLE and slope == UNSTABLE:
            raise AssertionError(f"Gieseker stable but slope unstable: {scn}")
        if gies in (G_STABLE, G_SEMISTABLE) and slope == UNSTABLE:
            raise AssertionError(f"Gieseker semistable but slope unstable: {scn}")
        checked += 1
    return {"checked": checked, "violations": 0, "seed": seed}


# ---------------------------------------------------------------------------
# spectral fibers
# ---------------------------------------------------------------------------

def spectral_fiber(theta_x):
    """Eigenvalue multiset of the Higgs field at a point, sorted by (re, im)."""
    mat = np.asarray(theta_x, dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError("spectral_fiber needs a square matrix")
    vals = np.linalg.eigvals(mat)
    order = np.lexsort((vals.imag, vals.real))
    return vals[order]
