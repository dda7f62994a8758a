"""Donaldson-Simpson energies, the moment map, and transgression forms.

The secondary ("Bott-Chern type") forms are path integrals of invariant
polynomials of the Higgs curvature along metric paths,

    R_phi(H, K) = -i * integral_0^1 phi'(F_t, L_t) dt,
    phi'(F, L)  = sum_j phi(F, ..., L at slot j, ..., F),
    L_t         = H(t)^-1 dH/dt,

with the path running from K at t = 0 to H at t = 1.  They satisfy

    phi(H) - phi(K) = i dbar del R_phi(H, K)      (mod Im del + Im dbar)

and are path independent in that sense; for k = 1 the form itself is exactly
path independent.  The arity-2 form built from -(1/2)Tr(AB + BA) integrates
to the Simpson energy M_S, and the extension functional is

    M(H, K) = M_S(H, K) - (2 alpha / d) * integral R1(H_1, K_1) ^ omega^d,

whose gradient in the trace-free chart is the moment map
m0 = Lambda F_perp + i alpha T.  Sign and factor conventions are pinned by
the finite-difference variation oracles in the test suite; in particular the
second t-derivative of M along H e^{ts} equals 2(|nabla'' s|^2 - alpha |u|^2)
in this normalization (the square norms enter with a factor 2).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations, product
from math import factorial

import numpy as np

from higgsext import higgs_bundle as hb
from higgsext import kahler_grid as kg
from higgsext.kahler_grid import (MixedField, as_mixed, inner_product,
                                  lambda_contract, trace, wedge)

GAUSS_NODES_DEFAULT = 8


# ---------------------------------------------------------------------------
# invariant polynomials
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InvariantPolynomial:
    """Symmetric GL-invariant k-linear function on matrices.

    kind "trace" (k = 1), "pair" (k = 2, the polynomial -(1/2)Tr(AB + BA)),
    or "sym" (general k: symmetrized trace of the product).  Extension to
    matrix-valued forms follows the sign rule phi(a (x) alpha, ...) =
    phi(a, ...) alpha ^ ...; on forms the symmetrization picks up Koszul
    signs from reordering odd-degree arguments.
    """

    k: int
    kind: str = "sym"

    def __post_init__(self):
        if self.kind == "trace" and self.k != 1:
            raise ValueError("trace polynomial has arity 1")
        if self.kind == "pair" and self.k != 2:
            raise ValueError("pair polynomial has arity 2")
        if self.k < 1:
            raise ValueError("arity must be positive")

    @property
    def coeff(self):
        return -1.0 if self.kind == "pair" else 1.0


def trace_poly():
    return InvariantPolynomial(1, "trace")


def pair_poly():
    """The arity-2 polynomial -(1/2) Tr(AB + BA) behind the Simpson energy."""
    return InvariantPolynomial(2, "pair")


def sym_poly(k):
    return InvariantPolynomial(k, "sym")


def _koszul_sign(sigma, degs):
    sign = 1
    for a in range(len(sigma)):
        for b in range(a + 1, len(sigma)):
            if sigma[a] > sigma[b]:
                sign *= (-1) ** (degs[sigma[a]] * degs[sigma[b]])
    return sign


def _phi_pure(poly, fields):
    """phi on pure-bidegree matrix-valued forms; scalar-valued output."""
    d = fields[0].geom.d
    degs = [f.p + f.q for f in fields]
    if sum(degs) > 2 * d:
        return None
    acc = None
    for sigma in permutations(range(poly.k)):
        sign = _koszul_sign(sigma, degs)
        term = fields[sigma[0]]
        ok = True
        for idx in sigma[1:]:
            if term.p + fields[idx].p > d or term.q + fields[idx].q > d:
                ok = False
                break
            term = wedge(term, fields[idx])
        if not ok:
            continue
        term = float(sign) * trace(term)
        acc = term if acc is None else acc + term
    if acc is None:
        return None
    return (poly.coeff / factorial(poly.k)) * acc


def phi_eval(poly, args):
    """Evaluate phi on k matrix-valued (possibly mixed) form arguments."""
    if len(args) != poly.k:
        raise ValueError(f"polynomial has arity {poly.k}, got {len(args)} args")
    mixed = [list(a) if isinstance(a, MixedField) else [a] for a in args]
    out = MixedField()
    for combo in product(*mixed):
        term = _phi_pure(poly, list(combo))
        if term is not None:
            out = out + as_mixed(term)
    return out


def phi_prime(poly, F, L):
    """phi'(F, L) = sum over slots of phi(F, ..., L, ..., F)."""
    out = MixedField()
    for j in range(poly.k):
        args = [F] * poly.k
        args[j] = L
        out = out + phi_eval(poly, args)
    return out


def phi_higgs(poly, ext, metric, F=None):
    """phi evaluated on the Higgs curvature of the given metric."""
    if 2 * poly.k > 2 * ext.geom.d:
        raise ValueError(f"arity {poly.k} polynomial produces a degree-"
                         f"{2 * poly.k} form, beyond the top degree")
    if F is None:
        F = hb.higgs_curvature(ext, metric)
    return phi_eval(poly, [F] * poly.k)


# ---------------------------------------------------------------------------
# metric paths
# ---------------------------------------------------------------------------

def _rel_log(Kv, Hv):
    """Pointwise log of K^-1 H through the hermitian conjugation by K^(1/2)."""
    wk, vk = np.linalg.eigh(Kv)
    if np.min(wk) <= 0:
        raise ValueError("base metric is not positive definite")
    sq = np.einsum("...ij,...j,...kj->...ik", vk, np.sqrt(wk), np.conj(vk),
                   optimize=True)
    isq = np.einsum("...ij,...j,...kj->...ik", vk, 1.0 / np.sqrt(wk),
                    np.conj(vk), optimize=True)
    mid = isq @ Hv @ isq
    mid = 0.5 * (mid + np.conj(np.swapaxes(mid, -1, -2)))
    w, v = np.linalg.eigh(mid)
    if np.min(w) <= 0:
        raise ValueError("relative endomorphism is not positive definite")
    lmid = np.einsum("...ij,...j,...kj->...ik", v, np.log(w), np.conj(v),
                     optimize=True)
    # log(K^-1 H) = K^(-1/2) log(K^(-1/2) H K^(-1/2)) K^(1/2)
    return isq @ lmid @ sq


class MetricPath:
    """Piecewise-exponential path of metrics from K (t=0) to H (t=1).

    Each segment runs H_i(t) = H_i exp(t s_i); the logarithmic velocity
    L_t = H^-1 dH/dt is the constant segment generator.
    """

    def __init__(self, ext, waypoints):
        if len(waypoints) < 2:
            raise ValueError("a path needs at least two waypoints")
        self.ext = ext
        self.waypoints = list(waypoints)
        self.generators = []
        for a, b in zip(waypoints[:-1], waypoints[1:]):
            g = ext.identity()
            g.values = _rel_log(a.H.values[0], b.H.values[0])[None]
            self.generators.append(g)

    @classmethod
    def exponential(cls, ext, H, K):
        return cls(ext, [K, H])

    @classmethod
    def two_segment(cls, ext, H, K, midpoint_perturbation):
        """Detour through K exp(s0/2 + p) for a hermitian perturbation p."""
        s0 = ext.identity()
        s0.values = _rel_log(K.H.values[0], H.H.values[0])[None]
        mid = hb.HermitianMetric(ext, validate=False)
        mid_s = 0.5 * s0 + midpoint_perturbation
        mid.H.values = (K.H.values[0] @ kg._pade6_expm(mid_s.values[0]))[None]
        mid.H.values = 0.5 * (mid.H.values
                              + np.conj(np.swapaxes(mid.H.values, -1, -2)))
        return cls(ext, [K, mid, H])

    @property
    def nseg(self):
        return len(self.generators)

    def _locate(self, t):
        x = min(max(t, 0.0), 1.0) * self.nseg
        i = min(int(x), self.nseg - 1)
        return i, x - i

    def at(self, t):
        """Metric at path time t (wrapped without re-validation)."""
        i, u = self._locate(t)
        base = self.waypoints[i].H.values[0]
        Hv = base @ kg._pade6_expm(u * self.generators[i].values[0])
        Hv = 0.5 * (Hv + np.conj(np.swapaxes(Hv, -1, -2)))
        m = hb.HermitianMetric(self.ext, validate=False)
        m.H.values = Hv[None]
        return m

    def l_field(self, t):
        """Logarithmic velocity H^-1 dH/dt at path time t (dt in path units)."""
        i, _ = self._locate(t)
        return float(self.nseg) * self.generators[i]

    def endpoint_residual(self):
        h0 = self.at(0.0).H.values[0] - self.waypoints[0].H.values[0]
        h1 = self.at(1.0).H.values[0] - self.waypoints[-1].H.values[0]
        return max(float(np.max(np.abs(h0))), float(np.max(np.abs(h1))))


def l_of_path(path, t):
    return path.l_field(t)


def _gauss_nodes(nodes):
    x, w = np.polynomial.legendre.leggauss(nodes)
    return 0.5 * (x + 1.0), 0.5 * w


# ---------------------------------------------------------------------------
# transgression forms
# ---------------------------------------------------------------------------

def r1(metricH, metricK):
    """Pointwise Tr log(K^-1 H) as a scalar (0,0)-field."""
    lg = _rel_log(metricK.H.values[0], metricH.H.values[0])
    tr = np.trace(lg, axis1=-2, axis2=-1)
    geom = metricH.ext.geom
    return kg.scalar_field(geom, tr)


def _r1_subblock(ext, metricH, metricK):
    """r1 of the induced metrics on the E1 subbundle (upper-left blocks)."""
    n1 = ext.n1
    lg = _rel_log(metricK.H.values[0][..., :n1, :n1],
                  metricH.H.values[0][..., :n1, :n1])
    return kg.scalar_field(ext.geom, np.trace(lg, axis1=-2, axis2=-1))


def r_higgs(poly, ext, path, nodes=GAUSS_NODES_DEFAULT):
    """Transgression form -i * integral phi'(F_t, L_t) dt along the path."""
    if poly.k > ext.geom.d + 1:
        raise ValueError(f"arity {poly.k} transgression (degree {2 * poly.k - 2}) "
                         f"does not fit on a {ext.geom.d}-fold")
    x, w = _gauss_nodes(nodes)
    out = MixedField()
    for i in range(path.nseg):
        for xi, wi in zip(x, w):
            t = (i + xi) / path.nseg
            m = path.at(t)
            F = hb.higgs_curvature(ext, m)
            out = out + (wi / path.nseg) * phi_prime(poly, F, as_mixed(path.l_field(t)))
    return -1j * out


def i_dbar_del(mixed):
    """i dbar del of a scalar mixed form (spectral; traces are untwisted)."""
    return 1j * mixed.delop().dbar()


def transgression_residual(poly, ext, pathA, pathB=None,
                           nodes=GAUSS_NODES_DEFAULT):
    """Residuals of the transgression identity and of path independence.

    Returns (theorem_residual, path_independence_residual): the first is
    |phi(H) - phi(K) - i dbar del R| in sup norm, the second compares
    i dbar del R for two paths with shared endpoints (0.0 when pathB is
    omitted).
    """
    H = pathA.at(1.0)
    K = pathA.at(0.0)
    if 2 * poly.k > 2 * ext.geom.d:
        # the compared forms exceed top degree and vanish identically
        lhs = MixedField()
    else:
        lhs = phi_higgs(poly, ext, H) - phi_higgs(poly, ext, K)
    Ra = r_higgs(poly, ext, pathA, nodes=nodes)
    theorem = (lhs - i_dbar_del(Ra)).sup_norm()
    pathind = 0.0
    if pathB is not None:
        Rb = r_higgs(poly, ext, pathB, nodes=nodes)
        pathind = (i_dbar_del(Ra) - i_dbar_del(Rb)).sup_norm()
    return theorem, pathind


# ---------------------------------------------------------------------------
# moment map and energies
# ---------------------------------------------------------------------------

def m0_alpha(ext, metric, alpha, F=None):
    """Moment map Lambda F_perp + i alpha T; trace free by construction."""
    lf = lambda_contract(hb.higgs_curvature(ext, metric).part(1, 1)
                         if F is None else F.part(1, 1))
    lf = kg.traceless_project(lf)
    T = hb.automorphism_T(ext, metric)
    return lf + (1j * alpha) * T


def integrate_mixed_top(mixed):
    """Integral of (the integrable parts of) a scalar mixed form against
    the right omega power: sum over (p,p) parts of integral part ^ omega^(d-p)."""
    geom = kg._mixed_geom(mixed)
    total = 0.0 + 0.0j
    for f in mixed:
        if f.p != f.q:
            continue
        total += kg.integrate(kg.wedge_omega_power(f, geom.d - f.p))
    return total


def m_simpson(ext, metricH, metricK, nodes=GAUSS_NODES_DEFAULT, path=None):
    """Simpson energy: integral of the arity-2 transgression against omega^(d-1)."""
    if path is None:
        if float(np.max(np.abs(metricH.H.values[0] - metricK.H.values[0]))) == 0.0:
            return 0.0
        path = MetricPath.exponential(ext, metricH, metricK)
    R2 = r_higgs(pair_poly(), ext, path, nodes=nodes)
    total = 0.0
    for f in R2:
        if f.p == 1 and f.q == 1:
            total += kg.integrate(kg.wedge_omega_power(f, ext.geom.d - 1)).real
    return total


def m_higgs_alpha(ext, metricH, metricK, alpha, nodes=GAUSS_NODES_DEFAULT,
                  path=None):
    """The extension energy M(H, K); M(K, K) = 0 and the cocycle law holds.

    M = M_S - (2 alpha / d) * integral r1(H_1, K_1) ^ omega^d, with r1 taken
    on the induced E1-block metrics.  The alpha-term normalization makes the
    first variation equal 2 i (d-1)! * integral Tr(s m0) for every d.
    """
    if path is None and float(np.max(np.abs(
            metricH.H.values[0] - metricK.H.values[0]))) == 0.0:
        return 0.0
    ms = m_simpson(ext, metricH, metricK, nodes=nodes, path=path)
    d = ext.geom.d
    r1_block = _r1_subblock(ext, metricH, metricK)
    term = kg.integrate(kg.wedge_omega_power(r1_block, d)).real / d
    return ms - 2.0 * alpha * term


def first_variation_formula(ext, metric, s, alpha, F=None):
    """2 i (d-1)! * integral Tr(s m0_alpha(H)); the derivative of M along He^{ts}."""
    m0 = m0_alpha(ext, metric, alpha, F=F)
    val = 2j * factorial(ext.geom.d - 1) * kg.integrate(trace(wedge(s, m0)))
    return val.real


def first_variation_check(ext, metricK, s, alpha, t=0.0, dt=1e-4,
                          nodes=GAUSS_NODES_DEFAULT):
    """Relative error between the finite-difference derivative of
    t -> M(K e^{ts}, K) and the moment-map formula.

    Returns (fd, formula, relative_error); the rank-degenerate case s = 0
    reports an exact match.
    """
    if kg.sup_norm(s) == 0.0:
        return 0.0, 0.0, 0.0

    def metric_at(tv):
        return hb.HermitianMetric(ext, s=tv * s, K=metricK.K, validate=False)
    mp = metric_at(t + dt)
    mm = metric_at(t - dt)
    fd = (m_higgs_alpha(ext, mp, metricK, alpha, nodes=nodes)
          - m_higgs_alpha(ext, mm, metricK, alpha, nodes=nodes)) / (2 * dt)
    formula = first_variation_formula(ext, metric_at(t), s, alpha)
    rel = abs(fd - formula) / max(abs(formula), 1e-12)
    return fd, formula, rel


def off_block_component(ext, metric, s):
    """The u-block of s in the H-orthogonal splitting: pi s (1 - pi)."""
    pi = hb.block_orthogonal_projection(ext, metric)
    one = ext.identity()
    return wedge(pi, wedge(s, one - pi))


def second_variation_formula(ext, metric, s, alpha):
    """2 (|nabla'' s|_H^2 - alpha |u|_H^2) in this package's normalization."""
    H = metric.H
    ds = hb.nabla_pp(ext, s)
    nrm = sum(inner_product(f, f, H=H, Hcol=H).real for f in ds)
    u = off_block_component(ext, metric, s)
    unrm = inner_product(u, u, H=H, Hcol=H).real
    return 2.0 * (nrm - alpha * unrm)


def second_variation_check(ext, metric, s, alpha, dt=1e-3,
                           nodes=GAUSS_NODES_DEFAULT):
    """(fd_second_derivative, formula, relative_error) along H e^{ts} at t=0."""
    if kg.sup_norm(s) == 0.0:
        return 0.0, 0.0, 0.0

    def energy(tv):
        m = hb.HermitianMetric(ext, s=tv * s, K=metric.H, validate=False)
        return m_higgs_alpha(ext, m, metric, alpha, nodes=nodes)

    fd = (energy(dt) - 2.0 * energy(0.0) + energy(-dt)) / dt ** 2
    formula = second_variation_formula(ext, metric, s, alpha)
    rel = abs(fd - formula) / max(abs(formula), 1e-12)
    return fd, formula, rel


def maximum_principle_report(ext, metricH, metricK, alpha):
    """Soft diagnostic of the interior bound Delta|s| <= 2(|m0(H)| + |m0(K)|).

    Evaluated at the grid maximum of |s| with the spectral Laplacian; the
    distributional inequality may be violated at discretization level, so
    this only reports (and flags) rather than asserts.
    """
    sv = _rel_log(metricK.H.values[0], metricH.H.values[0])
    snorm = np.sqrt(np.sum(np.abs(sv) ** 2, axis=(-2, -1)))
    geom = ext.geom
    lap = np.zeros_like(snorm)
    for ax in range(2 * geom.d):
        lap += kg._spectral_deriv(geom, kg._spectral_deriv(geom, snorm, ax), ax).real
    idx = np.unravel_index(np.argmax(snorm), snorm.shape)
    m0h = m0_alpha(ext, metricH, alpha)
    m0k = m0_alpha(ext, metricK, alpha)
    mh = np.sqrt(np.sum(np.abs(m0h.values[0]) ** 2, axis=(-2, -1)))
    mk = np.sqrt(np.sum(np.abs(m0k.values[0]) ** 2, axis=(-2, -1)))
    lhs = float(lap[idx])
    rhs = float(2.0 * (mh[idx] + mk[idx]))
    return {"lhs": lhs, "rhs": rhs, "satisfied": lhs <= rhs + 1e-8,
            "argmax": tuple(int(i) for i in idx),
            "sup_s": float(snorm[idx])}
