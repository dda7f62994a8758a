"""Extensions of Higgs bundles on flat tori.

The extension data is a split smooth bundle E = E1 (+) E2 built from twisted
line-bundle factors, an upper-triangular holomorphic structure (per-block
(0,1)-potentials plus the off-diagonal beta) and an upper-triangular Higgs
field (per-block theta plus the off-diagonal b).  The combined operator
``nabla'' = dbar_E + theta`` must square to zero; every metric H = K e^s then
determines a connection nabla = nabla'' + nabla'_H whose curvature drives the
deformed Hermitian-Einstein machinery.

Analytic slope convention, centralized here: mu = 2*pi*deg/(rk*V) with V = 1.
The exact-arithmetic stability module works with deg/rk instead; the 2*pi
factor is the only conversion between the two.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from higgsext import kahler_grid as kg
from higgsext.kahler_grid import (FormField, MixedField, adjoint_endo,
                                  as_mixed, covariant_dbar, covariant_del,
                                  identity_endo, inner_product,
                                  lambda_contract, sup_norm, trace, wedge,
                                  zeros_field)

TWO_PI = 2.0 * np.pi


class IntegrabilityError(ValueError):
    """Extension data fails the flatness check of nabla''."""

    def __init__(self, message, blocks=None):
        super().__init__(message)
        self.blocks = blocks or {}


@dataclass(frozen=True)
class LineBundleFactor:
    """Twisted line-bundle factor with its constant-curvature background.

    degree is the per-complex-factor twist tuple.  The implicit background
    potential A = sum_i 2*pi*i*k_i*y_i dx_i has curvature -2*pi*i*k_i omega_i,
    so (i/2pi) times the integrated background curvature recovers the degree.
    """

    degree: tuple

    @property
    def total_degree(self):
        return sum(self.degree)

    def chern_weil_residual(self):
        val = sum((1j / TWO_PI) * (-TWO_PI * 1j * k) for k in self.degree)
        return abs(val - self.total_degree)


def _factor(deg, d):
    if isinstance(deg, LineBundleFactor):
        return deg
    if isinstance(deg, (int, np.integer)):
        deg = (int(deg),) + (0,) * (d - 1)
    return LineBundleFactor(degree=tuple(int(k) for k in deg))


class HiggsExtension:
    """Extension of Higgs bundles over a flat torus.

    dbar_pot is the (0,1)-potential of dbar_E relative to the factor
    backgrounds (within-block pieces on the diagonal, beta upper right);
    theta is the (1,0) Higgs field (theta1/theta2 diagonal, b upper right).
    Both are stored as End(E)-shaped fields with the block structure embedded.
    """

    def __init__(self, geom, factors1, factors2, dbar_pot, theta,
                 check=True, tol=1e-6):
        self.geom = geom
        self.factors1 = tuple(_factor(f, geom.d) for f in factors1)
        self.factors2 = tuple(_factor(f, geom.d) for f in factors2)
        self.dbar_pot = dbar_pot
        self.theta = theta
        if dbar_pot.row_twists != self.twists or theta.row_twists != self.twists:
            raise kg.FieldShapeError("potential twists do not match the factors")
        if check:
            resid, blocks = self.integrability_residual()
            if resid > tol:
                raise IntegrabilityError(
                    "extension data is not integrable: "
                    f"|(nabla'')^2| = {resid:.3e}, blocks {blocks}",
                    blocks=blocks)

    @property
    def n1(self):
        return len(self.factors1)

    @property
    def n2(self):
        return len(self.factors2)

    @property
    def n(self):
        return self.n1 + self.n2

    @property
    def twists(self):
        return tuple(f.degree for f in self.factors1 + self.factors2)

    @property
    def deg(self):
        return sum(f.total_degree for f in self.factors1 + self.factors2)

    @property
    def deg1(self):
        return sum(f.total_degree for f in self.factors1)

    @property
    def deg2(self):
        return sum(f.total_degree for f in self.factors2)

    @property
    def mu_analytic(self):
        return TWO_PI * self.deg / self.n

    def identity(self):
        return identity_endo(self.geom, self.twists)

    def block_matrix(self):
        """Constant matrix of the smooth projection onto the E1 summand."""
        m = np.zeros((self.n, self.n))
        m[: self.n1, : self.n1] = np.eye(self.n1)
        return m

    def nabla_pp_potential(self):
        """Total potential of nabla'' relative to the background: B + theta."""
        return as_mixed(self.dbar_pot, self.theta)

    def background_curvature(self):
        """Constant diagonal (1,1)-curvature of the factor backgrounds."""
        F0 = zeros_field(self.geom, 1, 1, self.twists, self.twists)
        idx = kg._basis_index(self.geom.d, 1, 1)
        for j, tw in enumerate(self.twists):
            for i, k in enumerate(tw):
                # -2 pi i k omega_i with omega_i = (i/2) dz_i ^ dzbar_i
                F0.values[idx[((i,), (i,))], ..., j, j] += np.pi * k
        return F0

    def integrability_residual(self):
        """Sup norm of (nabla'')^2 with a per-block breakdown."""
        C = self.nabla_pp_potential()
        F = C.dbar() + C.wedge(C)
        blocks = {"11": 0.0, "12": 0.0, "21": 0.0, "22": 0.0}
        n1 = self.n1
        for f in F:
            v = np.abs(f.values)
            blocks["11"] = max(blocks["11"], float(np.max(v[..., :n1, :n1], initial=0.0)))
            blocks["12"] = max(blocks["12"], float(np.max(v[..., :n1, n1:], initial=0.0)))
            blocks["21"] = max(blocks["21"], float(np.max(v[..., n1:, :n1], initial=0.0)))
            blocks["22"] = max(blocks["22"], float(np.max(v[..., n1:, n1:], initial=0.0)))
        return max(blocks.values()), blocks


def check_integrability(ext):
    """Diagnostic flatness check; returns (sup_residual, per-block residuals)."""
    return ext.integrability_residual()


def build_extension(geom, degrees1, degrees2, beta=None, b_field=None,
                    theta1=None, theta2=None, dbar1_pot=None, dbar2_pot=None,
                    check=True, tol=1e-6):
    """Assemble a Higgs extension from block data.

    beta / b_field are Hom(E2,E1)-valued (0,1)/(1,0) fields with (n1 x n2)
    fibers, theta1/theta2 are End(E_i)-valued (1,0) fields, dbar*_pot are
    optional within-block (0,1)-potentials.  Construction fails with the
    offending block residuals if (nabla'')^2 does not vanish to ``tol``.
    """
    f1 = tuple(_factor(x, geom.d) for x in degrees1)
    f2 = tuple(_factor(x, geom.d) for x in degrees2)
    tw = tuple(f.degree for f in f1 + f2)
    n1, n2 = len(f1), len(f2)

    B = zeros_field(geom, 0, 1, tw, tw)
    T = zeros_field(geom, 1, 0, tw, tw)

    def put(dst, block, i0, j0, ni, nj):
        if block is None:
            return
        if block.values.shape[-2:] != (ni, nj):
            raise kg.FieldShapeError("block fiber shape mismatch")
        dst.values[..., i0:i0 + ni, j0:j0 + nj] += block.values

    put(B, beta, 0, n1, n1, n2)
    put(B, dbar1_pot, 0, 0, n1, n1)
    put(B, dbar2_pot, n1, n1, n2, n2)
    put(T, b_field, 0, n1, n1, n2)
    put(T, theta1, 0, 0, n1, n1)
    put(T, theta2, n1, n1, n2, n2)
    return HiggsExtension(geom, f1, f2, B, T, check=check, tol=tol)


# ---------------------------------------------------------------------------
# metrics and parameters
# ---------------------------------------------------------------------------

class HermitianMetric:
    """Metric H = K e^s with s trace-free and K-hermitian.

    K defaults to the identity in the factor trivialization, which is the
    constant-curvature background on every factor; the trace part of the
    deformed equation then holds exactly at s = 0.
    """

    def __init__(self, ext, s=None, K=None, validate=True):
        self.ext = ext
        self.K = K if K is not None else ext.identity()
        self.s = s if s is not None else 0.0 * ext.identity()
        Hv = self.K.values[0] @ kg._pade6_expm(self.s.values[0])
        Hv = 0.5 * (Hv + np.conj(np.swapaxes(Hv, -1, -2)))
        H = ext.identity()
        H.values = Hv[None]
        self.H = H
        if validate:
            self._validate()

    def _validate(self, tol=1e-8):
        Kv = self.K.values[0]
        sv = self.s.values[0]
        sdag = np.conj(np.swapaxes(sv, -1, -2))
        herm = float(np.max(np.abs(np.linalg.solve(Kv, sdag @ Kv) - sv)))
        tr = float(np.max(np.abs(np.trace(sv, axis1=-2, axis2=-1))))
        if herm > tol:
            raise ValueError(f"s is not K-hermitian (residual {herm:.2e})")
        if tr > tol:
            raise ValueError(f"s is not trace free (residual {tr:.2e})")
        if self.min_eigenvalue() <= 0:
            raise ValueError("metric is not positive definite")

    @classmethod
    def background(cls, ext):
        return cls(ext)

    @classmethod
    def from_s(cls, ext, s, K=None):
        return cls(ext, s=s, K=K)

    @classmethod
    def from_matrix(cls, ext, mat):
        """Metric with constant fiber matrix ``mat`` (K stays the identity)."""
        mat = np.asarray(mat, dtype=complex)
        w, v = np.linalg.eigh(mat)
        if np.min(w) <= 0:
            raise ValueError("matrix is not positive definite")
        s = ext.identity()
        logm = (v * np.log(w)) @ np.conj(v.T)
        s.values = np.broadcast_to(logm, s.values.shape).copy()
        m = cls(ext, validate=False)
        m.s = s
        H = ext.identity()
        H.values = np.broadcast_to(mat, H.values.shape).copy()
        m.H = H
        return m

    def det_ratio_residual(self):
        r = np.linalg.det(self.H.values[0]) / np.linalg.det(self.K.values[0])
        return float(np.max(np.abs(r - 1.0)))

    def min_eigenvalue(self):
        return float(np.min(np.linalg.eigvalsh(self.H.values[0]).real))


@dataclass(frozen=True)
class EquationParameters:
    """Slope and Lagrange parameters of the deformed equation (analytic units)."""

    alpha: float
    mu: float
    tau1: float
    tau2: float

    @classmethod
    def for_extension(cls, ext, alpha):
        mu = ext.mu_analytic
        return cls(alpha=alpha, mu=mu,
                   tau1=mu + alpha * ext.n2 / ext.n,
                   tau2=mu - alpha * ext.n1 / ext.n)

    def identity_residuals(self, n1, n2):
        n = n1 + n2
        return (abs((self.tau1 - self.tau2) - self.alpha),
                abs(n1 * self.tau1 + n2 * self.tau2 - n * self.mu))


def alpha_analytic(alpha_algebraic):
    """Convert the exact slope parameter to analytic units (2*pi factor)."""
    return TWO_PI * float(alpha_algebraic)


# ---------------------------------------------------------------------------
# operators, connection, curvature
# ---------------------------------------------------------------------------

def higgs_operator_apply(ext, f, endo=None):
    """Apply nabla'' = dbar_E + theta; graded commutator on End(E) input."""
    if endo is None:
        endo = (f.row_twists == ext.twists and f.col_twists == ext.twists)
    if endo:
        return nabla_pp(ext, f)
    C = ext.nabla_pp_potential()
    out = MixedField()
    if f.q + 1 <= ext.geom.d:
        out = out + as_mixed(covariant_dbar(f))
    return out + C.wedge(as_mixed(f))


def nabla_pp(ext, x):
    """nabla'' on End(E)-valued forms or mixed fields (graded commutator)."""
    C = ext.nabla_pp_potential()
    m = x if isinstance(x, MixedField) else as_mixed(x)
    return m.dbar() + C.graded_commutator(m)


def theta_adjoint(ext, metric):
    """Pointwise H^-1 theta^dagger H, with the form part conjugated."""
    return adjoint_endo(ext.theta, metric.H)


def chern_prime_potential(ext, metric):
    """(1,0)-potential of the Chern connection of (dbar_E, H).

    A_H = H^-1 (del0 H) - B^{*H}, relative to the factor backgrounds, with
    the fiber trace of the metric term pinned to the exact scalar derivative
    of log det H.  Pointwise Tr(H^-1 del H) equals del(log det H) only for
    exact derivations; enforcing it for the discrete derivative makes the
    trace sector of the deformed equation hold identically whenever
    det H = det K, at an O(h^order) change of the potential.
    """
    H = metric.H
    dH = covariant_del(H)
    A = dH.copy()
    A.values = np.linalg.solve(H.values[0], dH.values)
    n = ext.n
    trA = np.trace(A.values, axis1=-2, axis2=-1)
    logdet = np.log(np.linalg.det(H.values[0]).real)
    dlogdet = covariant_del(kg.scalar_field(ext.geom, logdet.astype(complex)))
    corr = (dlogdet.values[..., 0, 0] - trA) / n
    A.values = A.values + corr[..., None, None] * np.eye(n)
    return A - adjoint_endo(ext.dbar_pot, H)


def nabla_prime_potential(ext, metric):
    """Total potential of nabla'_H = D'_H + theta^*_H (mixed field)."""
    return as_mixed(chern_prime_potential(ext, metric), theta_adjoint(ext, metric))


def nabla_prime(ext, metric, x, pot=None):
    """nabla'_H on End(E)-valued forms or mixed fields."""
    if pot is None:
        pot = nabla_prime_potential(ext, metric)
    m = x if isinstance(x, MixedField) else as_mixed(x)
    return m.delop() + pot.graded_commutator(m)


@dataclass
class HiggsConnection:
    """The connection split nabla = nabla'' + nabla'_H.

    nabla'' is metric independent (dbar potential plus the Higgs field);
    nabla'_H collects the Chern (1,0)-potential and the Higgs adjoint.
    """

    ext: object
    metric: object
    nabla_pp_pot: MixedField
    nabla_prime_pot: MixedField

    def apply_section(self, s):
        """Full covariant derivative of an E-valued (0,0)-field."""
        out = MixedField([covariant_dbar(s), covariant_del(s)])
        return out + self.nabla_pp_pot.wedge(as_mixed(s)) \
            + self.nabla_prime_pot.wedge(as_mixed(s))


def higgs_connection(ext, metric):
    return HiggsConnection(ext=ext, metric=metric,
                           nabla_pp_pot=ext.nabla_pp_potential(),
                           nabla_prime_pot=nabla_prime_potential(ext, metric))


def random_section(ext, rng, mmax=1, scale=1.0):
    """Random band-limited E-valued section respecting the twist sectors."""
    zero = (ext.geom.zero_twist(),)
    f = zeros_field(ext.geom, 0, 0, ext.twists, zero)
    for i in range(ext.n):
        tw = f.entry_twist(i, 0)
        base = kg.random_bandlimited(ext.geom, rng, mmax=mmax).values[0, ..., 0, 0]
        if any(tw):
            base = base * kg.twisted_generator(ext.geom, tw)
        f.values[0, ..., i, 0] = scale * base
    return f


def connection_leibniz_residual(ext, metric, rng=None, trials=4, mmax=2):
    """nabla(f s) - df (x) s - f nabla(s) on random data; nabla is a connection.

    f is a band-limited untwisted scalar, s a random section; exact up to
    product aliasing for untwisted data.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    conn = higgs_connection(ext, metric)
    worst = 0.0
    for _ in range(trials):
        f = kg.random_bandlimited(ext.geom, rng, mmax=mmax)
        s = random_section(ext, rng, mmax=mmax)
        fs = s.copy()
        fs.values = f.values * s.values
        lhs = conn.apply_section(fs)
        df = as_mixed(covariant_del(f), covariant_dbar(f))
        rhs = MixedField()
        for part in df:
            rhs = rhs + as_mixed(kg.form_times_endo(part, s))
        for part in conn.apply_section(s):
            g = part.copy()
            g.values = f.values * part.values
            rhs = rhs + as_mixed(g)
        scale = max(kg.sup_norm(f) * kg.sup_norm(s), 1e-30)
        worst = max(worst, (lhs - rhs).sup_norm() / scale)
    return worst


def higgs_curvature(ext, metric, symmetrize=True):
    """Curvature of the Higgs connection as a mixed 2-form.

    F = F0 + D0(A) + A ^ A for the total potential A relative to the flat
    background; carries (1,1), (2,0) and (0,2) parts in general.

    With symmetrize=True (the default) the continuum reality structure is
    enforced exactly on the grid: the (1,1) part is made H-anti-hermitian
    and the (2,0)/(0,2) parts exact mutual H-adjoints.  The discarded piece
    is pure discretization defect (it vanishes identically in the continuum
    and is orthogonal to anything a metric can change), and keeping it would
    put an artificial floor under the equation residual.
    """
    A = ext.nabla_pp_potential() + nabla_prime_potential(ext, metric)
    F = as_mixed(ext.background_curvature()) + A.dbar() + A.delop() + A.wedge(A)
    if not symmetrize:
        return F
    H = metric.H
    out = MixedField()
    f11 = F.part(1, 1)
    out = out + as_mixed(0.5 * (f11 - adjoint_endo(f11, H)))
    f20, f02 = F.part(2, 0), F.part(0, 2)
    if f20 is not None and f02 is not None:
        out = out + as_mixed(0.5 * (f20 + adjoint_endo(f02, H)))
        out = out + as_mixed(0.5 * (f02 + adjoint_endo(f20, H)))
    elif f20 is not None or f02 is not None:
        g = f20 if f20 is not None else f02
        out = out + as_mixed(0.5 * g)
        out = out + as_mixed(0.5 * adjoint_endo(g, H))
    return out


def i_lambda_F(ext, metric, F=None):
    """i Lambda of the (1,1)-part of the Higgs curvature."""
    if F is None:
        F = higgs_curvature(ext, metric)
    return 1j * lambda_contract(F.part(1, 1))


def block_orthogonal_projection(ext, metric):
    """Pointwise H-orthogonal projection onto the E1 block, [[1, H1^-1 h],[0, 0]]."""
    n1 = ext.n1
    Hv = metric.H.values[0]
    P = np.zeros_like(Hv)
    P[..., :n1, :n1] = np.eye(n1)
    if n1 < ext.n:
        P[..., :n1, n1:] = np.linalg.solve(Hv[..., :n1, :n1], Hv[..., :n1, n1:])
    out = ext.identity()
    out.values = P[None]
    return out


def automorphism_T(ext, metric):
    """Traceless block automorphism in the H-orthogonal splitting.

    T = (n2/n) pi1 - (n1/n)(1 - pi1); its pointwise trace vanishes.
    """
    pi1 = block_orthogonal_projection(ext, metric)
    n1, n2, n = ext.n1, ext.n2, ext.n
    return ((n1 + n2) / n) * pi1 - (n1 / n) * ext.identity()


def subbundle_projection(ext, metric, columns):
    """H-orthogonal projection onto the pointwise span of given columns.

    Accepts a constant (n x r) matrix or a (grid..., n, r) array; built by
    the Gram solve P = S (S^dag H S)^-1 S^dag H (a pointwise polar-type
    orthonormalization), hence idempotent and H-self-adjoint exactly.
    """
    S = np.asarray(columns, dtype=complex)
    if S.ndim == 2:
        S = np.broadcast_to(S, (*ext.geom.grid_shape, *S.shape))
    Hv = metric.H.values[0]
    HS = Hv @ S
    G = np.conj(np.swapaxes(S, -1, -2)) @ HS
    P = S @ np.linalg.solve(G, np.conj(np.swapaxes(HS, -1, -2)))
    out = ext.identity()
    out.values = P[None]
    return out


def projection_residuals(metric, pi):
    """Sup-norm residuals of pi^2 = pi and pi^{*H} = pi."""
    v = pi.values[0]
    idem = float(np.max(np.abs(v @ v - v)))
    Hv = metric.H.values[0]
    vdag = np.conj(np.swapaxes(v, -1, -2))
    sadj = float(np.max(np.abs(np.linalg.solve(Hv, vdag @ Hv) - v)))
    return idem, sadj


def hhe_residual(ext, metric, params, F=None):
    """i Lambda F - mu I - alpha T; vanishes exactly at a solution.

    Returns (field, sup norm, L2 norm).
    """
    resid = (i_lambda_F(ext, metric, F=F)
             - params.mu * ext.identity()
             - params.alpha * automorphism_T(ext, metric))
    return resid, sup_norm(resid), kg.norm_l2(resid, H=metric.H, Hcol=metric.H)


def degree_terms(ext, metric, pi, F=None):
    """Curvature and correction terms of the analytic degree of a subsheaf.

    deg_an = i * integral tr(Lambda(pi F)) - |nabla'' pi|^2_H; analytic units
    are 2*pi times the topological degree.
    """
    if F is None:
        F = higgs_curvature(ext, metric)
    piF = wedge(pi, F.part(1, 1))
    curv = (1j * kg.integrate(trace(lambda_contract(piF)))).real
    dpi = nabla_pp(ext, pi)
    corr = sum(inner_product(f, f, H=metric.H, Hcol=metric.H).real for f in dpi)
    return curv, corr


def degree_via_projection(ext, metric, pi, F=None, check_tol=1e-8):
    """Analytic degree of the subsheaf cut out by an H-orthogonal projection."""
    idem, sadj = projection_residuals(metric, pi)
    if idem > check_tol or sadj > check_tol:
        raise ValueError("input is not an H-orthogonal projection "
                         f"(residuals {idem:.2e}, {sadj:.2e})")
    curv, corr = degree_terms(ext, metric, pi, F=F)
    return curv - corr


# ---------------------------------------------------------------------------
# structural diagnostics
# ---------------------------------------------------------------------------

def kahler_identity_residual(ext, metric, rng=None, trials=4, mmax=1):
    """Empirical residual of the two Kaehler identities.

    Tests, on random band-limited End(E)-valued fields,
        <i Lambda (nabla'' a)^{1,1}, c>_H = <a, nabla'_H c>_H
        <-i Lambda (nabla'_H a)^{1,1}, c>_H = <a, nabla'' c>_H
    for mixed 1-form inputs a and (0,0) probes c, normalized by field norms.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    pot = nabla_prime_potential(ext, metric)
    H = metric.H

    def pair(mf_a, mf_b):
        val = 0.0
        for f in mf_a:
            g = mf_b.part(f.p, f.q)
            if g is not None:
                val += inner_product(f, g, H=H, Hcol=H)
        return val

    worst = 0.0
    for _ in range(trials):
        a = as_mixed(random_endo(ext, rng, mmax=mmax, p=1, q=0),
                     random_endo(ext, rng, mmax=mmax, p=0, q=1))
        c = random_endo(ext, rng, mmax=mmax)
        scale = max(sum(kg.norm_l2(f, H=H, Hcol=H) for f in a)
                    * kg.norm_l2(c, H=H, Hcol=H), 1e-30)

        da11 = nabla_pp(ext, a).part(1, 1)
        lhs1 = inner_product(1j * lambda_contract(da11), c, H=H, Hcol=H) \
            if da11 is not None else 0.0
        rhs1 = pair(a, nabla_prime(ext, metric, c, pot=pot))
        worst = max(worst, abs(lhs1 - rhs1) / scale)

        pa11 = nabla_prime(ext, metric, a, pot=pot).part(1, 1)
        lhs2 = inner_product(-1j * lambda_contract(pa11), c, H=H, Hcol=H) \
            if pa11 is not None else 0.0
        rhs2 = pair(a, nabla_pp(ext, c))
        worst = max(worst, abs(lhs2 - rhs2) / scale)
    return worst


def theta_adjoint_property_residual(ext, metric, rng=None, trials=8):
    """Max residual of the defining adjoint property of theta^*_H.

    For random sections s, t the (1,0)-coefficients of (theta s, t)_H must
    equal the conjugated (0,1)-coefficients of (s, theta^*_H t)_H pointwise;
    this is exact linear algebra and must hold to roundoff.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    Hv = metric.H.values[0]
    th = ext.theta
    ts = theta_adjoint(ext, metric)
    worst = 0.0
    for _ in range(trials):
        s = random_endo(ext, rng, mmax=1).values[0][..., :, :1]
        t = random_endo(ext, rng, mmax=1).values[0][..., :, :1]
        tH = np.conj(np.swapaxes(t, -1, -2)) @ Hv
        for c in range(th.values.shape[0]):
            lhs = tH @ (th.values[c] @ s)
            rhs = np.conj(np.swapaxes(ts.values[c] @ t, -1, -2)) @ Hv @ s
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst


def bianchi_residual(ext, metric):
    """Sup norm of nabla''(F) and nabla'_H(F) for the Higgs curvature."""
    F = higgs_curvature(ext, metric)
    pot = nabla_prime_potential(ext, metric)
    return max(nabla_pp(ext, F).sup_norm(),
               nabla_prime(ext, metric, F, pot=pot).sup_norm())


def random_endo(ext, rng, mmax=1, p=0, q=0, scale=1.0):
    """Random band-limited End(E)-valued field respecting the twist sectors.

    Twisted entries are band-limited modulations of the discrete holomorphic
    generators of their sector.
    """
    f = zeros_field(ext.geom, p, q, ext.twists, ext.twists)
    ncomp = f.values.shape[0]
    gens = {}
    for i in range(ext.n):
        for j in range(ext.n):
            tw = f.entry_twist(i, j)
            if tw not in gens:
                gens[tw] = (kg.twisted_generator(ext.geom, tw)
                            if any(tw) else 1.0)
            for c in range(ncomp):
                base = kg.random_bandlimited(ext.geom, rng, mmax=mmax)
                f.values[c, ..., i, j] = scale * gens[tw] * base.values[0, ..., 0, 0]
    return f


def random_direction(ext, metric, rng, mmax=1, scale=1.0):
    """Random trace-free H-hermitian (0,0)-direction (an element of S(H))."""
    s = random_endo(ext, rng, mmax=mmax, scale=scale)
    return kg.traceless_project(kg.hermitian_project(s, H=metric.H))
