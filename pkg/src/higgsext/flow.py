"""Gradient-descent solver for the deformed Hermitian-Einstein equation.

The flow descends the extension energy in the trace-free chart s (fixed
background K, metrics H = K e^s), stepping against the moment map
m0 = Lambda F_perp + i alpha T with an inverse-Laplacian preconditioner and
Armijo backtracking.  Per-step energy decrements are measured by Gauss
quadrature of the exact first-variation formula along the step segment, so
the recorded energy trace is nonincreasing by construction.

Termination: Converged (sup-norm residual below tolerance), Destabilized
(sup |s| exceeded the divergence cap; a finite-grid stand-in for the
analytic blow-up alternative), or IterationCap.  On destabilization the
normalized tail of the trajectory is eigen-analyzed into a candidate
filtration, and the exact rational Q-quantity of the matched subobject
profiles is reported.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial

import numpy as np
from scipy.sparse import identity as sparse_identity
from scipy.sparse.linalg import splu

from higgsext import functional as fn
from higgsext import higgs_bundle as hb
from higgsext import kahler_grid as kg

CONVERGED = "Converged"
DESTABILIZED = "Destabilized"
ITERATION_CAP = "IterationCap"


@dataclass
class FlowOptions:
    tol: float = 1e-6
    max_iters: int = 20_000
    sup_s_cap: float = 50.0
    precondition: bool = True
    sigma: float = 1.0
    armijo_c1: float = 1e-4
    tau_init: float = 1.0
    tau_max: float = 4.0
    tau_min: float = 1e-12
    energy_nodes: int = 1
    tail_window: int = 50
    record_every: int = 1


@dataclass
class FlowResult:
    status: str
    iterations: int
    residual_sup: float
    residual_l2: float
    energy: float
    metric: object
    traces: dict = field(repr=False, default_factory=dict)
    destabilization: dict | None = None
    det_drift: float = 0.0

    def csv_rows(self):
        """Rows (iteration, energy, residual_sup, residual_L2, sup_s, step_size)."""
        t = self.traces
        for i in range(len(t["energy"])):
            yield (i, t["energy"][i], t["residual_sup"][i],
                   t["residual_l2"][i], t["sup_s"][i], t["step_size"][i])


class Preconditioner:
    """Per-twist-sector inverse shifted Laplacian (sigma + 4 dbar^dag dbar)^-1.

    Spectral for untwisted sectors; cached sparse LU of the covariant
    finite-difference operator for twisted sectors (d = 1).  Conjugate twist
    sectors use conjugated solves, so pointwise hermiticity survives up to
    roundoff (the direction is re-projected afterwards anyway).
    """

    def __init__(self, geom, twists, sigma=1.0):
        self.geom = geom
        self.sigma = sigma
        self._spectral = None
        self._lu = {}
        self._conjugate = set()
        sectors = set()
        n = len(twists)
        for i in range(n):
            for j in range(n):
                sectors.add(tuple(a - b for a, b in zip(twists[i], twists[j])))
        for tw in sectors:
            if not any(tw):
                if self._spectral is None:
                    self._spectral = self._spectral_multiplier()
                continue
            # opposite twists must use exactly conjugate solves, otherwise
            # preconditioning breaks pointwise hermiticity of directions
            canon = tw if tw > tuple(-t for t in tw) else tuple(-t for t in tw)
            if canon != tw:
                self._conjugate.add(tw)
            if canon in self._lu:
                continue
            if geom.d == 1:
                D = kg.twisted_dbar_matrix(geom, canon[0])
                A = (sigma * sparse_identity(geom.N ** 2, format="csc")
                     + 4.0 * (D.getH() @ D)).tocsc()
                self._lu[canon] = splu(A)
            else:
                self._lu[canon] = None  # identity fallback off the d=1 flow path

    def _spectral_multiplier(self):
        # must match the actual discrete dbar symbol (Nyquist mode zeroed),
        # otherwise the preconditioned Hessian degenerates at those modes
        geom = self.geom
        modes = np.fft.fftfreq(geom.N, 1.0 / geom.N)
        modes[geom.N // 2] = 0.0
        mult = np.zeros(geom.grid_shape)
        for ax in range(2 * geom.d):
            shape = [1] * (2 * geom.d)
            shape[ax] = geom.N
            mult = mult + (2 * np.pi * modes.reshape(shape)) ** 2
        return 1.0 / (self.sigma + mult)

    def apply(self, f):
        out = f.copy()
        from scipy.fft import fftn, ifftn
        for tw, rows, cols in kg._gather_twist_classes(f):
            sub = f.values[0][..., rows, cols]
            if not any(tw):
                axes = tuple(range(2 * self.geom.d))
                sub = ifftn(self._spectral[..., None]
                            * fftn(sub, axes=axes), axes=axes)
            else:
                canon = tw if tw not in self._conjugate \
                    else tuple(-t for t in tw)
                lu = self._lu.get(canon)
                if lu is not None:
                    if tw in self._conjugate:
                        flat = np.conj(sub).reshape(self.geom.N ** 2, -1)
                        sub = np.conj(lu.solve(flat)).reshape(sub.shape)
                    else:
                        flat = sub.reshape(self.geom.N ** 2, -1)
                        sub = lu.solve(flat).reshape(sub.shape)
            out.values[0][..., rows, cols] = sub
        return out


def _metric_from_H(ext, Hv, K):
    m = hb.HermitianMetric(ext, K=K.H, validate=False)
    H = ext.identity()
    H.values = Hv[None]
    m.H = H
    return m


def _log_rel(Kv, Hv):
    return fn._rel_log(Kv, Hv)


def _sup_eig(sv):
    w = np.linalg.eigvalsh(0.5 * (sv + np.conj(np.swapaxes(sv, -1, -2))))
    return float(np.max(np.abs(w)))


def _herm_sqrt_factors(Hv):
    """Pointwise (H^(1/2), H^(-1/2), log H, sup |log H|) from one eigh."""
    w, v = np.linalg.eigh(Hv)
    vh = np.conj(np.swapaxes(v, -1, -2))
    sq = (v * np.sqrt(w)[..., None, :]) @ vh
    isq = (v / np.sqrt(w)[..., None, :]) @ vh
    lg = (v * np.log(w)[..., None, :]) @ vh
    return sq, isq, lg, float(np.max(np.abs(np.log(w))))


def run_flow(ext, alpha, opts=None, K=None, s0=None, params=None):
    """Minimize the extension energy; drives m0_alpha(H) to zero when possible.

    alpha is in analytic units (2*pi times the exact slope parameter);
    alpha = 0 recovers the plain Higgs equation for the slope target.
    """
    opts = opts or FlowOptions()
    K = K if K is not None else hb.HermitianMetric.background(ext)
    params = params or hb.EquationParameters.for_extension(ext, alpha)
    dfac = factorial(ext.geom.d - 1)

    pre = Preconditioner(ext.geom, ext.twists, sigma=opts.sigma) \
        if opts.precondition else None

    Kv = K.H.values[0]
    Hv = Kv.copy() if s0 is None else \
        (Kv @ kg._pade6_expm(s0.values[0]))
    Hv = 0.5 * (Hv + np.conj(np.swapaxes(Hv, -1, -2)))

    traces = {k: [] for k in ("energy", "residual_sup", "residual_l2",
                              "sup_s", "step_size")}
    tail = []
    energy = 0.0
    tau = opts.tau_init
    det_drift = 0.0
    status = ITERATION_CAP
    destab = None
    res_sup = res_l2 = np.inf
    it = 0

    def moment(metric):
        F = hb.higgs_curvature(ext, metric)
        m0 = fn.m0_alpha(ext, metric, alpha, F=F)
        return F, m0

    K_is_identity = float(np.max(np.abs(
        Kv - np.eye(ext.n)))) < 1e-13

    metric = _metric_from_H(ext, Hv, K)
    for it in range(opts.max_iters):
        F, m0 = moment(metric)
        _, res_sup, res_l2 = hb.hhe_residual(ext, metric, params, F=F)

        sq, isq, logH, sup_log = _herm_sqrt_factors(metric.H.values[0])
        if K_is_identity:
            sv, sup_s = logH, sup_log
        else:
            sv = _log_rel(Kv, metric.H.values[0])
            sup_s = _sup_eig(sv)
        det_drift = max(det_drift, float(np.max(np.abs(
            np.linalg.det(metric.H.values[0]) / np.linalg.det(Kv) - 1.0))))
        s_field = ext.identity()
        s_field.values = sv[None]
        tail.append(s_field)
        if len(tail) > opts.tail_window:
            tail.pop(0)

        traces["energy"].append(energy)
        traces["residual_sup"].append(res_sup)
        traces["residual_l2"].append(res_l2)
        traces["sup_s"].append(sup_s)

        if res_sup < opts.tol:
            status = CONVERGED
            traces["step_size"].append(0.0)
            break
        if sup_s > opts.sup_s_cap:
            status = DESTABILIZED
            traces["step_size"].append(0.0)
            destab = destabilization_report(ext, metric, tail, alpha)
            break

        im0 = 1j * m0  # H-hermitian
        if pre is not None:
            # precondition in plain-hermitian coordinates: the isometry
            # X -> H^(1/2) X H^(-1/2) carries the energy pairing to the
            # Hilbert-Schmidt product, where the sector solves are positive,
            # so the preconditioned direction is guaranteed descent.
            Xt = im0.copy()
            Xv = sq @ im0.values[0] @ isq
            Xt.values = (0.5 * (Xv + np.conj(np.swapaxes(Xv, -1, -2))))[None]
            Yt = pre.apply(Xt)
            direction = im0.copy()
            direction.values = (isq @ Yt.values[0] @ sq)[None]
            direction = kg.traceless_project(direction) * (-1.0)
        else:
            direction = kg.traceless_project(
                kg.hermitian_project(im0, H=metric.H)) * (-1.0)
        slope = fn.first_variation_formula(ext, metric, direction, alpha, F=F)
        if not slope < 0:
            direction = -1.0 * kg.traceless_project(
                kg.hermitian_project(im0, H=metric.H))
            slope = fn.first_variation_formula(ext, metric, direction, alpha, F=F)
        if not np.isfinite(slope):
            raise FloatingPointError(
                f"non-finite energy slope at iteration {it}")

        gx, gw = np.polynomial.legendre.leggauss(opts.energy_nodes)
        gx = 0.5 * (gx + 1.0)
        gw = 0.5 * gw
        dv = direction.values[0]
        accepted = False
        backtracked = False
        while tau > opts.tau_min:
            dM = 0.0
            ok = True
            for xi, wi in zip(gx, gw):
                Ht = metric.H.values[0] @ kg._pade6_expm((tau * xi) * dv)
                Ht = 0.5 * (Ht + np.conj(np.swapaxes(Ht, -1, -2)))
                mt = _metric_from_H(ext, Ht, K)
                _, m0t = moment(mt)
                val = 2.0 * dfac * (1j * kg.integrate(
                    kg.trace(kg.wedge(direction, m0t)))).real
                if not np.isfinite(val):
                    ok = False
                    break
                dM += tau * wi * val
            if ok and dM <= opts.armijo_c1 * tau * slope:
                accepted = True
                break
            tau *= 0.5
            backtracked = True
        if not accepted:
            status = ITERATION_CAP
            traces["step_size"].append(0.0)
            break

        Hv_new = metric.H.values[0] @ kg._pade6_expm(tau * dv)
        Hv_new = 0.5 * (Hv_new + np.conj(np.swapaxes(Hv_new, -1, -2)))
        metric = _metric_from_H(ext, Hv_new, K)
        energy += dM
        traces["step_size"].append(tau)
        if not backtracked:
            tau = min(tau * 2.0, opts.tau_max)
    else:
        it = opts.max_iters

    for k in traces:
        traces[k] = np.asarray(traces[k])
    return FlowResult(status=status, iterations=it, residual_sup=res_sup,
                      residual_l2=res_l2, energy=energy, metric=metric,
                      traces=traces, destabilization=destab,
                      det_drift=det_drift)


# ---------------------------------------------------------------------------
# destabilization analysis
# ---------------------------------------------------------------------------

def extract_destabilizer(ext, s_tail, cluster_rel_tol=0.05):
    """Eigen-analysis of the normalized trajectory tail.

    Averages the L1-normalized s iterates, eigen-decomposes pointwise,
    clusters the eigenvalue branches into approximately constant levels
    lambda_1 < ... < lambda_k, and builds the filtration projections
    pi_i = projector onto the eigenvalue levels <= lambda_i.  Reports the
    gaps a_i = lambda_{i+1} - lambda_i and, per projection, the residuals of
    idempotency, hermiticity and (1 - pi) nabla''(pi) = 0.
    """
    if len(s_tail) < 2:
        raise ValueError("trajectory tail too short for destabilizer analysis")
    acc = None
    used = 0
    for s in s_tail:
        w = np.linalg.eigvalsh(s.values[0])
        l1 = float(np.mean(np.sum(np.abs(w), axis=-1)))
        if l1 < 1e-14:
            continue
        acc = (s.values[0] / l1) if acc is None else acc + s.values[0] / l1
        used += 1
    if acc is None:
        raise ValueError("trajectory tail is identically zero")
    u = acc / used
    u = 0.5 * (u + np.conj(np.swapaxes(u, -1, -2)))
    w, v = np.linalg.eigh(u)

    flat = np.sort(w.reshape(-1, ext.n), axis=0)
    centers = [float(np.mean(flat[:, j])) for j in range(ext.n)]
    spread = max(centers[-1] - centers[0], 1e-12)
    clusters = [[0]]
    for j in range(1, ext.n):
        if centers[j] - centers[clusters[-1][-1]] < cluster_rel_tol * spread:
            clusters[-1].append(j)
        else:
            clusters.append([j])
    lambdas = [float(np.mean([centers[j] for j in c])) for c in clusters]
    gaps = [lambdas[i + 1] - lambdas[i] for i in range(len(lambdas) - 1)]

    projections = []
    cuts = [0.5 * (lambdas[i] + lambdas[i + 1]) for i in range(len(lambdas) - 1)]
    for cut in cuts:
        mask = (w <= cut).astype(float)
        P = np.einsum("...ij,...j,...kj->...ik", v, mask, np.conj(v),
                      optimize=True)
        pf = ext.identity()
        pf.values = P[None]
        projections.append(pf)

    reports = []
    one = ext.identity()
    for pf in projections:
        Pv = pf.values[0]
        idem = float(np.max(np.abs(Pv @ Pv - Pv)))
        herm = float(np.max(np.abs(Pv - np.conj(np.swapaxes(Pv, -1, -2)))))
        # (1 - pi) nabla''(pi) measures failure to cut out a weak subbundle
        compl = one - pf
        resid = 0.0
        for part in hb.nabla_pp(ext, pf):
            resid = max(resid, kg.sup_norm(kg.wedge(compl, part)))
        reports.append({"idempotency": idem, "hermiticity": herm,
                        "holomorphy": resid})

    eig_constancy = float(np.max(np.std(np.sort(w, axis=-1).reshape(-1, ext.n),
                                        axis=0)))
    return {"lambdas": lambdas, "gaps": gaps, "projections": projections,
            "property_residuals": reports, "eigenvalue_constancy": eig_constancy}


def block_overlap(ext, pi_field):
    """Normalized L2 overlap of a projection field with the E1 block projector."""
    blk = ext.identity()
    blk.values = np.broadcast_to(ext.block_matrix().astype(complex),
                                 blk.values.shape).copy()
    num = abs(kg.inner_product(pi_field, blk))
    den = kg.norm_l2(pi_field) * kg.norm_l2(blk)
    return num / max(den, 1e-30)


def destabilization_report(ext, metric, tail, alpha, scenario=None):
    """Assemble the eigen-structure report and the exact Q-quantity.

    Cluster levels and gaps are rationalized with small denominators; the
    subobject data of the dominant projection is matched against the
    declared profiles when a scenario is supplied.
    """
    analysis = extract_destabilizer(ext, tail)
    gaps = analysis["gaps"]
    if gaps:
        dom = int(np.argmax(gaps))
        dominant = analysis["projections"][dom]
        overlap = block_overlap(ext, dominant)
    else:
        dominant = None
        overlap = 0.0
    report = {"analysis": analysis, "dominant_overlap_E1": overlap}

    lam_k = Fraction(analysis["lambdas"][-1]).limit_denominator(64)
    mu_alg = Fraction(ext.deg, ext.n)
    alpha_alg = Fraction(float(alpha) / (2 * np.pi)).limit_denominator(10 ** 6)
    tau1 = mu_alg + alpha_alg * Fraction(ext.n2, ext.n)
    tau2 = mu_alg - alpha_alg * Fraction(ext.n1, ext.n)
    parts = []
    if dominant is not None:
        # identify the dominant projection with the E1 block when they align
        if overlap > 0.95:
            r1, r2 = ext.n1, 0
            ri = ext.n1
            mui = Fraction(ext.deg1, ext.n1)
        else:
            ri, r1, r2 = 1, 0, 1
            mui = Fraction(ext.deg2, max(ext.n2, 1))
        for g in gaps:
            parts.append((ri, mui, r1, r2,
                          Fraction(g).limit_denominator(64)))
    q, signs = q_quantity((ext.n, mu_alg, ext.n1, ext.n2), parts,
                          lam_k, tau1, tau2)
    report["Q"] = q
    report["part_signs"] = signs
    return report


def q_quantity(total, parts, lambda_k, tau1, tau2):
    """Exact rational blow-up obstruction quantity.

    total = (r, mu, r1, r2); parts is a list of (r_i, mu_i, r1_i, r2_i, a_i)
    with nonnegative gaps a_i.  Returns (Q, per-part signs) where
    Q = lambda_k (r mu - r1 tau1 - r2 tau2) - sum a_i (r_i mu_i - r1_i tau1
    - r2_i tau2); strict negativity of every part bracket forces Q > 0.
    """
    r, mu, r1, r2 = total
    lam = Fraction(lambda_k)
    t1, t2 = Fraction(tau1), Fraction(tau2)
    head = Fraction(r) * Fraction(mu) - Fraction(r1) * t1 - Fraction(r2) * t2
    q = lam * head
    signs = []
    for (ri, mui, r1i, r2i, ai) in parts:
        ai = Fraction(ai)
        if ai < 0:
            raise ValueError("gaps must be nonnegative")
        bracket = (Fraction(ri) * Fraction(mui)
                   - Fraction(r1i) * t1 - Fraction(r2i) * t2)
        q -= ai * bracket
        signs.append(1 if bracket > 0 else (-1 if bracket < 0 else 0))
    return q, signs


# ---------------------------------------------------------------------------
# certification
# ---------------------------------------------------------------------------

def certify_solution(ext, metric, alpha, declared=(), params=None):
    """Certify a candidate metric: residual norms, the trace identity, and
    the easy-direction slope identity on declared invariant projections.

    declared: iterable of (name, columns, mu_alpha_exact) where columns span
    the invariant subsheaf and mu_alpha_exact is its exact algebraic
    alpha-slope.  For each one the identity
        mu_alpha(sub) = mu_alpha(total) - |nabla'' pi|^2 / rk(sub)
    is evaluated with both sides computed independently (the left exactly,
    the right from the curvature integrals), in analytic units.
    """
    params = params or hb.EquationParameters.for_extension(ext, alpha)
    F = hb.higgs_curvature(ext, metric)
    _, res_sup, res_l2 = hb.hhe_residual(ext, metric, params, F=F)
    trace_identity = abs(kg.integrate(kg.trace(
        hb.i_lambda_F(ext, metric, F=F))).real - ext.n * params.mu)
    out = {"residual_sup": res_sup, "residual_l2": res_l2,
           "trace_identity": trace_identity, "subobjects": []}
    for name, columns, mu_alpha_exact in declared:
        pi = hb.subbundle_projection(ext, metric, columns)
        curv, corr = hb.degree_terms(ext, metric, pi, F=F)
        rk = np.asarray(columns).shape[-1]
        lhs_exact = 2 * np.pi * float(mu_alpha_exact)
        rhs_identity = params.tau1 - corr / rk
        strict = corr > 1e-10
        out["subobjects"].append({
            "name": name,
            "mu_alpha_exact_analytic": lhs_exact,
            "identity_rhs": rhs_identity,
            "identity_residual": abs(lhs_exact - rhs_identity),
            "correction": corr,
            "strict_inequality": strict,
            "degree_analytic": curv - corr,
        })
    return out
