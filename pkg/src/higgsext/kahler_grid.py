"""Discrete complex geometry on flat tori.

Grids, matrix-valued (p,q)-form fields, twisted line-bundle sectors,
covariant derivatives, the Lefschetz contraction and periodic quadrature.

Conventions, fixed package-wide (total volume V = 1):

* per complex factor ``z = x + iy``, ``dz = dx + i dy``, ``omega = dx ^ dy``,
  so ``Lambda(omega) = d`` and ``|dz|^2 = 2`` in the flat metric;
* a twist-``k`` sector (degree-k line bundle factor) is realized by clutching:
  coefficient functions are 1-periodic in x and obey
  ``f(x, y+1) = exp(-2 pi i k x) f(x, y)``,
  with background potential ``A = 2 pi i k y dx``.  The background curvature
  is then ``F0 = -2 pi i k omega`` and ``(i / 2 pi) \\int F0 = k``;
* untwisted coefficients are differentiated spectrally, twisted ones by
  central finite differences (default order 6) with clutching link phases.

All fields are plain immutable-by-convention value objects; every operation
returns a new field.  Quadrature is the uniform periodic trapezoid rule,
reduced with numpy's pairwise summation, hence deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations

import numpy as np
from scipy import fft as sfft
from scipy import sparse

TWO_PI = 2.0 * np.pi

# central first-derivative stencils, offset -> coefficient (grid units)
_STENCILS = {
    2: {-1: -0.5, 1: 0.5},
    4: {-2: 1 / 12, -1: -2 / 3, 1: 2 / 3, 2: -1 / 12},
    6: {-3: -1 / 60, -2: 3 / 20, -1: -3 / 4, 1: 3 / 4, 2: -3 / 20, 3: 1 / 60},
}


class GeometryError(ValueError):
    pass


class FieldShapeError(ValueError):
    pass


@dataclass(frozen=True)
class BaseGeometry:
    """Flat torus of complex dimension d, N grid points per real axis, V = 1."""

    d: int
    N: int
    fd_order: int = 6

    @property
    def volume(self):
        return 1.0

    @property
    def grid_shape(self):
        return (self.N,) * (2 * self.d)

    @property
    def npoints(self):
        return self.N ** (2 * self.d)

    def axis_coord(self, axis):
        """Coordinate array for real grid axis ``axis``, broadcast over the grid."""
        shape = [1] * (2 * self.d)
        shape[axis] = self.N
        return (np.arange(self.N) / self.N).reshape(shape)

    def zero_twist(self):
        return (0,) * self.d


def make_torus(d, N, fd_order=6):
    """Create a flat-torus geometry.  N must be even and at least 8; d in {1, 2}."""
    if d not in (1, 2):
        raise GeometryError(f"complex dimension must be 1 or 2, got {d}")
    if N < 8 or N % 2 != 0:
        raise GeometryError(f"grid size must be even and >= 8, got {N}")
    if fd_order not in _STENCILS:
        raise GeometryError(f"unsupported finite-difference order {fd_order}")
    return BaseGeometry(d=d, N=N, fd_order=fd_order)


# ---------------------------------------------------------------------------
# (p,q)-component bookkeeping
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def form_basis(d, p, q):
    """Ordered basis of (p,q)-components: pairs (I, J) of sorted index tuples."""
    return tuple(
        (I, J)
        for I in combinations(range(d), p)
        for J in combinations(range(d), q)
    )


@lru_cache(maxsize=None)
def _basis_index(d, p, q):
    return {c: i for i, c in enumerate(form_basis(d, p, q))}


def n_components(d, p, q):
    return len(form_basis(d, p, q))


def _merge_sign(a, b):
    # parity of sorting the concatenation of two disjoint increasing tuples
    sign = 1
    for x in a:
        sign *= (-1) ** sum(1 for y in b if y < x)
    return sign


@lru_cache(maxsize=None)
def _wedge_table(d, p1, q1, p2, q2):
    """Structure constants of the wedge on component bases.

    Returns tuples (ia, ib, iout, sign) with
    (dz_I1 dzbar_J1) ^ (dz_I2 dzbar_J2) = sign * dz_I dzbar_J.
    """
    p, q = p1 + p2, q1 + q2
    if p > d or q > d:
        return ()
    out = []
    idx = _basis_index(d, p, q)
    for ia, (I1, J1) in enumerate(form_basis(d, p1, q1)):
        for ib, (I2, J2) in enumerate(form_basis(d, p2, q2)):
            if set(I1) & set(I2) or set(J1) & set(J2):
                continue
            sign = (-1) ** (len(J1) * len(I2))
            sign *= _merge_sign(I1, I2) * _merge_sign(J1, J2)
            I = tuple(sorted(I1 + I2))
            J = tuple(sorted(J1 + J2))
            out.append((ia, ib, idx[(I, J)], sign))
    return tuple(out)


@lru_cache(maxsize=None)
def _omega_coeffs(d):
    """omega = sum_i (i/2) dz_i ^ dzbar_i on the (1,1) component basis."""
    coeffs = np.zeros(n_components(d, 1, 1), dtype=complex)
    idx = _basis_index(d, 1, 1)
    for i in range(d):
        coeffs[idx[((i,), (i,))]] = 0.5j
    return coeffs


@lru_cache(maxsize=None)
def _lambda_matrix(d, p, q):
    """Matrix of the Lefschetz contraction (p,q) -> (p-1,q-1).

    Defined as the pointwise adjoint of wedging with omega for the flat
    Hodge metric in which |dz_I ^ dzbar_J|^2 = 2^(p+q).
    """
    lo_basis = form_basis(d, p - 1, q - 1)
    hi_idx = _basis_index(d, p, q)
    omega = _omega_coeffs(d)
    mat = np.zeros((len(lo_basis), n_components(d, p, q)), dtype=complex)
    # (Lambda a)_k = 4 * conj(W_jk) a_j with W the matrix of omega ^ .
    for ic, (ia, ib, iout, sign) in enumerate(_wedge_table(d, 1, 1, p - 1, q - 1)):
        mat[ib, iout] += 4.0 * np.conj(omega[ia] * sign)
    return mat


# ---------------------------------------------------------------------------
# fields
# ---------------------------------------------------------------------------

def _as_twists(tw, d):
    """Normalize a twist argument to a tuple of length-d integer tuples."""
    out = []
    for t in tw:
        if isinstance(t, int):
            t = (t,) * 1 if d == 1 else tuple([t] + [0] * (d - 1))
        t = tuple(int(x) for x in t)
        if len(t) != d:
            raise FieldShapeError(f"twist {t} has wrong length for d={d}")
        out.append(t)
    return tuple(out)


@dataclass
class FormField:
    """Matrix-valued (p,q)-form on the grid.

    values has shape (ncomp, *grid, rows, cols); entry (i, j) is a section of
    the twist row_twists[i] - col_twists[j] sector tensored with the form
    component.
    """

    geom: BaseGeometry
    p: int
    q: int
    row_twists: tuple
    col_twists: tuple
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.row_twists = _as_twists(self.row_twists, self.geom.d)
        self.col_twists = _as_twists(self.col_twists, self.geom.d)
        expected = (
            n_components(self.geom.d, self.p, self.q),
            *self.geom.grid_shape,
            len(self.row_twists),
            len(self.col_twists),
        )
        if self.values.shape != expected:
            raise FieldShapeError(
                f"values shape {self.values.shape} != expected {expected}"
            )
        if self.values.dtype != np.complex128:
            self.values = self.values.astype(np.complex128)

    @property
    def rows(self):
        return len(self.row_twists)

    @property
    def cols(self):
        return len(self.col_twists)

    @property
    def ncomp(self):
        return self.values.shape[0]

    def copy(self):
        return FormField(self.geom, self.p, self.q, self.row_twists,
                         self.col_twists, self.values.copy())

    def entry_twist(self, i, j):
        return tuple(a - b for a, b in zip(self.row_twists[i], self.col_twists[j]))

    def __add__(self, other):
        _check_same_type(self, other)
        return FormField(self.geom, self.p, self.q, self.row_twists,
                         self.col_twists, self.values + other.values)

    def __sub__(self, other):
        _check_same_type(self, other)
        return FormField(self.geom, self.p, self.q, self.row_twists,
                         self.col_twists, self.values - other.values)

    def __mul__(self, scalar):
        return FormField(self.geom, self.p, self.q, self.row_twists,
                         self.col_twists, self.values * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return self * (-1.0)


def _check_same_type(a, b):
    if (a.geom != b.geom or a.p != b.p or a.q != b.q
            or a.row_twists != b.row_twists or a.col_twists != b.col_twists):
        raise FieldShapeError("fields have incompatible type data")


def zeros_field(geom, p, q, row_twists, col_twists):
    row_twists = _as_twists(row_twists, geom.d)
    col_twists = _as_twists(col_twists, geom.d)
    shape = (n_components(geom.d, p, q), *geom.grid_shape,
             len(row_twists), len(col_twists))
    return FormField(geom, p, q, row_twists, col_twists,
                     np.zeros(shape, dtype=complex))


def scalar_field(geom, data, p=0, q=0):
    """Scalar-fiber (p,q)-field from a grid array (one array per component)."""
    nc = n_components(geom.d, p, q)
    arr = np.asarray(data, dtype=complex)
    if p == q == 0 and arr.ndim == 0:
        arr = np.full(geom.grid_shape, complex(arr))
    if arr.shape == geom.grid_shape:
        arr = arr[None] if nc == 1 else None
    if arr is None or arr.shape != (nc, *geom.grid_shape):
        raise FieldShapeError("bad scalar field data shape")
    zero = (geom.zero_twist(),)
    return FormField(geom, p, q, zero, zero, arr[..., None, None])


def identity_endo(geom, twists):
    twists = _as_twists(twists, geom.d)
    n = len(twists)
    vals = np.zeros((1, *geom.grid_shape, n, n), dtype=complex)
    vals[..., np.arange(n), np.arange(n)] = 1.0
    return FormField(geom, 0, 0, twists, twists, vals)


def const_endo(geom, twists, matrix, p=0, q=0, comp=None):
    """Constant matrix-valued (p,q)-field; nonzero only in component ``comp``."""
    twists = _as_twists(twists, geom.d)
    n = len(twists)
    mat = np.asarray(matrix, dtype=complex)
    out = zeros_field(geom, p, q, twists, twists)
    ic = 0 if comp is None else comp
    out.values[ic] = np.broadcast_to(mat, (*geom.grid_shape, n, n))
    return out


def omega_field(geom):
    """The Kaehler form as a constant scalar (1,1)-field."""
    nc = n_components(geom.d, 1, 1)
    vals = np.zeros((nc, *geom.grid_shape, 1, 1), dtype=complex)
    vals += _omega_coeffs(geom.d).reshape((nc,) + (1,) * (2 * geom.d + 2))
    zero = (geom.zero_twist(),)
    return FormField(geom, 1, 1, zero, zero, vals)


def check_clutching(geom, fn, twist, tol=1e-12):
    """Verify a continuum sampler obeys the twisted periodicity rule.

    fn takes d=1 arguments (x, y) or d=2 arguments (x1, y1, x2, y2) as arrays.
    """
    twist = _as_twists([twist], geom.d)[0]
    xs = np.arange(geom.N) / geom.N
    if geom.d == 1:
        x, y = np.meshgrid(xs, xs, indexing="ij")
        base = fn(x, y)
        if np.max(np.abs(fn(x + 1, y) - base)) > tol:
            raise FieldShapeError("sampler is not 1-periodic in x")
        phase = np.exp(-2j * np.pi * twist[0] * x)
        if np.max(np.abs(fn(x, y + 1) - phase * base)) > tol:
            raise FieldShapeError("sampler violates the clutching phase rule")
        return base
    raise NotImplementedError("clutching check implemented for d=1 samplers")


def sample_section(geom, fn, twist):
    """Sample a (checked) twisted continuum section onto the grid (d=1)."""
    return check_clutching(geom, fn, twist)


# ---------------------------------------------------------------------------
# wedge products and adjoints
# ---------------------------------------------------------------------------

def wedge(a, b):
    """Matrix wedge product of two form fields (matmul on fibers)."""
    if a.geom != b.geom:
        raise FieldShapeError("wedge of fields on different geometries")
    if a.col_twists != b.row_twists:
        raise FieldShapeError("fiber shapes/twists do not chain")
    d = a.geom.d
    p, q = a.p + b.p, a.q + b.q
    if p > d or q > d:
        raise FieldShapeError("wedge exceeds top bidegree")
    out = zeros_field(a.geom, p, q, a.row_twists, b.col_twists)
    for ia, ib, iout, sign in _wedge_table(d, a.p, a.q, b.p, b.q):
        out.values[iout] += sign * (a.values[ia] @ b.values[ib])
    return out


def graded_commutator(a, b):
    """[a, b] = a^b - (-1)^(|a||b|) b^a for matrix-valued forms."""
    sign = (-1) ** ((a.p + a.q) * (b.p + b.q))
    return wedge(a, b) - float(sign) * wedge(b, a)


def dagger(a):
    """Conjugate transpose: fiber dagger plus form conjugation dz <-> dzbar."""
    d = a.geom.d
    out = zeros_field(a.geom, a.q, a.p, a.col_twists, a.row_twists)
    idx = _basis_index(d, a.q, a.p)
    sign = (-1) ** (a.p * a.q)
    for i, (I, J) in enumerate(form_basis(d, a.p, a.q)):
        out.values[idx[(J, I)]] = sign * np.conj(
            np.swapaxes(a.values[i], -1, -2))
    return out


def adjoint_endo(a, H=None):
    """Pointwise metric adjoint a^{*H} = H^{-1} a^dagger H of an End-valued form."""
    if a.row_twists != a.col_twists:
        raise FieldShapeError("metric adjoint needs an endomorphism-valued field")
    adag = dagger(a)
    if H is None:
        return adag
    adag.values = np.linalg.solve(H.values[0], adag.values @ H.values[0])
    return adag


def trace(a):
    """Fiber trace, producing a scalar-valued form field."""
    if a.rows != a.cols:
        raise FieldShapeError("trace needs a square fiber")
    vals = np.trace(a.values, axis1=-2, axis2=-1)[..., None, None]
    zero = (a.geom.zero_twist(),)
    return FormField(a.geom, a.p, a.q, zero, zero, vals)


def form_times_endo(form, endo):
    """Product of a scalar-fiber form with a (0,0) matrix field."""
    if form.rows != 1 or form.cols != 1:
        raise FieldShapeError("form factor must have a scalar fiber")
    if endo.p != 0 or endo.q != 0:
        raise FieldShapeError("matrix factor must be a (0,0) field")
    out = zeros_field(form.geom, form.p, form.q, endo.row_twists,
                      endo.col_twists)
    out.values = form.values * endo.values
    return out


# ---------------------------------------------------------------------------
# Lefschetz contraction, integration, inner products
# ---------------------------------------------------------------------------

def lambda_contract(f):
    """Adjoint of wedging with omega; lowers bidegree by (1,1)."""
    if f.p < 1 or f.q < 1:
        raise FieldShapeError("lambda_contract needs bidegree (p,q) with p,q >= 1")
    mat = _lambda_matrix(f.geom.d, f.p, f.q)
    out = zeros_field(f.geom, f.p - 1, f.q - 1, f.row_twists, f.col_twists)
    for k in range(mat.shape[0]):
        for j in range(mat.shape[1]):
            if mat[k, j] != 0:
                out.values[k] += mat[k, j] * f.values[j]
    return out


def integrate(f):
    """Integral over the torus of a top-degree form or a (0,0)-density.

    Scalar fiber required.  Exact for band-limited integrands.
    """
    if f.rows != 1 or f.cols != 1:
        raise FieldShapeError("integrate needs a scalar fiber; take trace first")
    d = f.geom.d
    if f.p == 0 and f.q == 0:
        return complex(np.mean(f.values[0]))
    if f.p == d and f.q == d:
        # dz ^ dzbar = -2i dx ^ dy per factor, times the parity of
        # un-interleaving the canonical dz_I dzbar_J ordering
        sign = (-1) ** (d * (d - 1) // 2)
        return complex(sign * (-2j) ** d * np.mean(f.values[0]))
    raise FieldShapeError("integrate needs a top-degree form or a density")


def wedge_omega_power(f, m):
    """f ^ omega^m (omega wedged m times)."""
    out = f
    om = omega_field(f.geom)
    for _ in range(m):
        out = wedge(out, om)
    return out


def integrate_top(f):
    """Integral of trace(f) ^ omega^(d - (p+q)/2) lifted to top degree."""
    g = trace(f) if f.rows > 1 else f
    if g.p != g.q:
        raise FieldShapeError("integrate_top needs a (p,p)-form")
    return integrate(wedge_omega_power(g, f.geom.d - g.p))


def hodge_weight(d, p, q):
    """Squared norm of each basis (p,q)-component form, |dz|^2 = 2 convention."""
    return 2.0 ** (p + q)


def pointwise_pairing(a, b, H=None, Hcol=None):
    """Pointwise Hodge pairing <a, b> as a grid array.

    For Hom-valued fields with row metric H and column metric Hcol:
    sum over components of 2^(p+q) tr(a Hcol^-1 b^dag H).
    """
    _check_same_type(a, b)
    w = hodge_weight(a.geom.d, a.p, a.q)
    bdag = np.conj(np.swapaxes(b.values, -1, -2))
    if Hcol is not None:
        bdag = np.einsum("...ij,c...jk->c...ik",
                         np.linalg.inv(Hcol.values[0]), bdag, optimize=True)
    if H is not None:
        bdag = np.einsum("c...ij,...jk->c...ik", bdag, H.values[0],
                         optimize=True)
    prod = np.einsum("c...ij,c...ji->...", a.values, bdag, optimize=True)
    return w * prod


def inner_product(a, b, H=None, Hcol=None):
    """L2 inner product of two matching form fields, conjugate symmetric in (a, b)."""
    return complex(np.mean(pointwise_pairing(a, b, H=H, Hcol=Hcol)))


def norm_l2(a, H=None, Hcol=None):
    return float(np.sqrt(max(inner_product(a, a, H=H, Hcol=Hcol).real, 0.0)))


def sup_norm(f):
    """Max over grid points and components of the fiber Frobenius norm."""
    v = np.sqrt(np.sum(np.abs(f.values) ** 2, axis=(-2, -1)))
    return float(np.max(v))


# ---------------------------------------------------------------------------
# mixed-bidegree fields
# ---------------------------------------------------------------------------

class MixedField:
    """Formal sum of form fields of different bidegrees (fixed fiber data).

    Curvatures of Higgs connections and transgression forms are not of pure
    (p,q) type; this container distributes wedge products and derivatives
    over the parts and silently drops anything beyond top bidegree (such
    forms vanish identically on a d-fold).
    """

    def __init__(self, parts=()):
        self.parts = {}
        for f in parts:
            self._accumulate(f)

    def _accumulate(self, f):
        key = (f.p, f.q)
        if key in self.parts:
            self.parts[key] = self.parts[key] + f
        else:
            self.parts[key] = f

    def part(self, p, q):
        return self.parts.get((p, q))

    def __iter__(self):
        return iter(self.parts.values())

    def __add__(self, other):
        out = MixedField(self.parts.values())
        for f in _mixed_parts(other):
            out._accumulate(f)
        return out

    def __sub__(self, other):
        return self + (other * (-1.0))

    def __mul__(self, scalar):
        return MixedField([f * scalar for f in self])

    __rmul__ = __mul__

    def __neg__(self):
        return self * (-1.0)

    def wedge(self, other):
        d = _mixed_geom(self).d
        out = MixedField()
        for a in self:
            for b in _mixed_parts(other):
                if a.p + b.p > d or a.q + b.q > d:
                    continue
                out._accumulate(wedge(a, b))
        return out

    def dbar(self):
        if not self.parts:
            return MixedField()
        d = _mixed_geom(self).d
        return MixedField([covariant_dbar(f) for f in self if f.q + 1 <= d])

    def delop(self):
        if not self.parts:
            return MixedField()
        d = _mixed_geom(self).d
        return MixedField([covariant_del(f) for f in self if f.p + 1 <= d])

    def trace(self):
        return MixedField([trace(f) for f in self])

    def adjoint(self, H=None):
        return MixedField([adjoint_endo(f, H) for f in self])

    def graded_commutator(self, other):
        d = _mixed_geom(self).d
        out = MixedField()
        for a in self:
            for b in _mixed_parts(other):
                if a.p + b.p > d or a.q + b.q > d:
                    continue
                out._accumulate(graded_commutator(a, b))
        return out

    def sup_norm(self):
        return max((sup_norm(f) for f in self), default=0.0)


def _mixed_parts(x):
    if isinstance(x, MixedField):
        return list(x.parts.values())
    return [x]


def _mixed_geom(m):
    for f in m:
        return f.geom
    raise FieldShapeError("empty mixed field")


def as_mixed(*fields):
    return MixedField([f for f in fields if f is not None])


# ---------------------------------------------------------------------------
# covariant derivatives
# ---------------------------------------------------------------------------

def _spectral_deriv(geom, arr, axis):
    N = geom.N
    modes = np.fft.fftfreq(N, 1.0 / N)
    modes[N // 2] = 0.0  # symmetric Nyquist convention
    shape = [1] * arr.ndim
    shape[axis] = N
    mult = (2j * np.pi * modes).reshape(shape)
    return sfft.ifft(mult * sfft.fft(arr, axis=axis), axis=axis)


def _fd_roll(geom, arr, axis, o):
    return np.roll(arr, -o, axis=axis)


def _fd_roll_phased(geom, arr, axis_y, axis_x, o, k):
    """Shift along a clutched y-axis, applying the wrap phase exp(-+2 pi i k x)."""
    out = np.roll(arr, -o, axis=axis_y)
    if k == 0 or o == 0:
        return out
    x = geom.axis_coord(0)  # placeholder, reshaped below
    shape = [1] * arr.ndim
    shape[axis_x] = geom.N
    x = (np.arange(geom.N) / geom.N).reshape(shape)
    v = np.moveaxis(out, axis_y, 0)
    if o > 0:
        ph = np.exp(-2j * np.pi * k * x)
        v[-o:] = v[-o:] * np.moveaxis(np.broadcast_to(ph, arr.shape), axis_y, 0)[-o:]
    else:
        ph = np.exp(2j * np.pi * k * x)
        v[:-o] = v[:-o] * np.moveaxis(np.broadcast_to(ph, arr.shape), axis_y, 0)[:-o]
    return out


def _factor_derivs(geom, arr, twist, factor, grid_offset=1):
    """Return (D_x, D_y) covariant real-direction derivatives for one factor.

    arr carries the grid axes at positions grid_offset .. grid_offset+2d-1;
    twist is the per-factor integer for this entry.
    """
    ax_x = grid_offset + 2 * factor
    ax_y = grid_offset + 2 * factor + 1
    k = twist[factor]
    if k == 0:
        return _spectral_deriv(geom, arr, ax_x), _spectral_deriv(geom, arr, ax_y)
    st = _STENCILS[geom.fd_order]
    N = geom.N
    dx = np.zeros_like(arr)
    dy = np.zeros_like(arr)
    for o, co in st.items():
        dx += co * _fd_roll(geom, arr, ax_x, o)
        dy += co * _fd_roll_phased(geom, arr, ax_y, ax_x, o, k)
    dx *= N
    dy *= N
    shape = [1] * arr.ndim
    shape[ax_y] = N
    ycoord = (np.arange(N) / N).reshape(shape)
    dx = dx + (2j * np.pi * k) * ycoord * arr  # background potential A_x = 2 pi i k y
    return dx, dy


@lru_cache(maxsize=None)
def _twist_classes_cached(row_twists, col_twists):
    classes = {}
    for i, rt in enumerate(row_twists):
        for j, ct in enumerate(col_twists):
            tw = tuple(a - b for a, b in zip(rt, ct))
            classes.setdefault(tw, []).append((i, j))
    return tuple(
        (tw, np.array([i for i, _ in idx]), np.array([j for _, j in idx]))
        for tw, idx in classes.items())


def _gather_twist_classes(f):
    """Group fiber entries by entry twist; yields (twist, rows_idx, cols_idx)."""
    yield from _twist_classes_cached(f.row_twists, f.col_twists)


def _cov_deriv(f, antiholomorphic):
    geom = f.geom
    d = geom.d
    if antiholomorphic:
        p_out, q_out = f.p, f.q + 1
        table = _wedge_table(d, 0, 1, f.p, f.q)
    else:
        p_out, q_out = f.p + 1, f.q
        table = _wedge_table(d, 1, 0, f.p, f.q)
    if p_out > d or q_out > d:
        raise FieldShapeError("derivative exceeds top bidegree")
    out = zeros_field(geom, p_out, q_out, f.row_twists, f.col_twists)
    for tw, rows, cols in _gather_twist_classes(f):
        sub = f.values[:, ..., rows, cols]  # (ncomp, *grid, nsel)
        for factor in range(d):
            dx, dy = _factor_derivs(geom, sub, tw, factor)
            comp = 0.5 * (dx + 1j * dy) if antiholomorphic else 0.5 * (dx - 1j * dy)
            for ia, ib, iout, sign in table:
                if ia != factor:
                    continue
                # (rows, cols) pairs are distinct, so fancy += is safe
                out.values[iout][..., rows, cols] += sign * comp[ib]
    return out


def covariant_dbar(f):
    """Background-covariant antiholomorphic derivative, raising q by one."""
    return _cov_deriv(f, antiholomorphic=True)


def covariant_del(f):
    """Background-covariant holomorphic derivative, raising p by one."""
    return _cov_deriv(f, antiholomorphic=False)


def exterior_d(f):
    """d = del + dbar; halves landing beyond top bidegree vanish identically."""
    d = f.geom.d
    parts = []
    if f.p + 1 <= d:
        parts.append(covariant_del(f))
    if f.q + 1 <= d:
        parts.append(covariant_dbar(f))
    if not parts:
        raise FieldShapeError("exterior_d of a top-degree form")
    if len(parts) == 1:
        return parts[0]
    raise FieldShapeError("exterior_d output has mixed bidegree; use MixedField")


# ---------------------------------------------------------------------------
# twisted dbar as a sparse matrix (d = 1), for kernel eigensolves
# ---------------------------------------------------------------------------

def twisted_dbar_matrix(geom, k):
    """Sparse matrix of the covariant dbar on twist-k scalar sections (d=1).

    Uses exactly the same stencils, link phases and background potential as
    the field operators; flattened index is a*N + b for grid point (a, b).
    """
    if geom.d != 1:
        raise GeometryError("sparse dbar implemented for d = 1")
    N = geom.N
    st = _STENCILS[geom.fd_order]
    a = np.arange(N)
    A, B = np.meshgrid(a, a, indexing="ij")
    flat = (A * N + B).ravel()
    x = A / N
    y = B / N
    rows, cols, data = [], [], []

    def add(r, c, v):
        rows.append(r)
        cols.append(c)
        data.append(v)

    for o, co in st.items():
        # x-shift: (a+o) mod N, no phase
        tgt = ((A + o) % N) * N + B
        add(flat, tgt.ravel(), np.full(N * N, 0.5 * co * N, dtype=complex))
        # y-shift: phase where the shift wraps
        wrap_up = (B + o) >= N
        wrap_dn = (B + o) < 0
        phase = np.ones((N, N), dtype=complex)
        phase[wrap_up] = np.exp(-2j * np.pi * k * x[wrap_up])
        phase[wrap_dn] = np.exp(2j * np.pi * k * x[wrap_dn])
        tgt = A * N + (B + o) % N
        add(flat, tgt.ravel(), (0.5j * co * N * phase).ravel())
    # potential term from A_x = 2 pi i k y on the D_x part
    add(flat, flat, (0.5 * 2j * np.pi * k * y).ravel())
    mat = sparse.coo_matrix(
        (np.concatenate([np.atleast_1d(v) for v in data]),
         (np.concatenate([np.atleast_1d(r) for r in rows]),
          np.concatenate([np.atleast_1d(c) for c in cols]))),
        shape=(N * N, N * N),
    )
    return mat.tocsr()


@lru_cache(maxsize=None)
def _generator_1d(N, fd_order, k):
    """Discrete holomorphic generator of the twist-k sector on one factor.

    For k > 0 this is the kernel of the discrete covariant dbar (the
    discretization of a theta section), computed by a shift-invert
    eigensolve; k < 0 uses the conjugate of the |k| generator; k = 0 is the
    constant 1.  Deterministic: fixed start vector and a pinned phase.
    """
    from scipy.sparse.linalg import eigsh

    if k == 0:
        return np.ones((N, N), dtype=complex)
    if k < 0:
        return np.conj(_generator_1d(N, fd_order, -k))
    geom = BaseGeometry(d=1, N=N, fd_order=fd_order)
    D = twisted_dbar_matrix(geom, k)
    A = (D.getH() @ D).tocsc()
    v0 = np.ones(N * N)
    w, v = eigsh(A, k=1, sigma=-1.0, which="LM", v0=v0)
    g = v[:, 0].reshape(N, N)
    g = g / np.sqrt(np.mean(np.abs(g) ** 2))
    anchor = g.ravel()[np.argmax(np.abs(g))]
    g = g * (np.conj(anchor) / np.abs(anchor))
    g.setflags(write=False)
    return g


def twisted_generator(geom, twist):
    """Smooth unit-mean-square reference section of a twist sector.

    Product of per-factor discrete theta-kernel generators; used to seed
    harmonic representatives and to modulate random twisted test fields.
    """
    twist = _as_twists([twist], geom.d)[0]
    out = np.ones(geom.grid_shape, dtype=complex)
    for i, k in enumerate(twist):
        g = _generator_1d(geom.N, geom.fd_order, k)
        shape = [1] * (2 * geom.d)
        shape[2 * i] = geom.N
        shape[2 * i + 1] = geom.N
        out = out * g.reshape(shape)
    return out


# ---------------------------------------------------------------------------
# pointwise matrix functions
# ---------------------------------------------------------------------------

def _pade6_expm(a):
    """Batched Pade order-6 scaling-and-squaring matrix exponential."""
    norm = np.max(np.sum(np.abs(a), axis=-1), axis=-1)
    smax = float(np.max(norm)) if norm.size else 0.0
    squarings = max(0, int(np.ceil(np.log2(max(smax, 1e-300) / 0.5))))
    x = a / (2.0 ** squarings)
    n = a.shape[-1]
    ident = np.broadcast_to(np.eye(n, dtype=complex), a.shape)
    b = [1.0, 1 / 2, 5 / 44, 1 / 66, 1 / 792, 1 / 15840, 1 / 665280]
    x2 = x @ x
    x4 = x2 @ x2
    u = x @ (b[1] * ident + b[3] * x2 + b[5] * x4)
    v = b[0] * ident + b[2] * x2 + b[4] * x4 + b[6] * (x4 @ x2)
    r = np.linalg.solve(v - u, v + u)
    for _ in range(squarings):
        r = r @ r
    return r


def expm_field(s):
    """Pointwise matrix exponential of a (0,0) endomorphism field."""
    out = s.copy()
    out.values = _pade6_expm(s.values)
    return out


def expm_hermitian_field(s):
    """Exponential of a pointwise-hermitian field, re-symmetrized afterwards."""
    out = expm_field(s)
    herm = 0.5 * (out.values + np.conj(np.swapaxes(out.values, -1, -2)))
    out.values = herm
    return out


def logm_posdef_field(h):
    """Pointwise logarithm of a hermitian positive-definite field (via eigh)."""
    w, v = np.linalg.eigh(h.values)
    if np.min(w) <= 0:
        raise FieldShapeError("logm of a non positive definite field")
    lw = np.log(w)
    out = h.copy()
    out.values = np.einsum("...ij,...j,...kj->...ik", v, lw, np.conj(v),
                           optimize=True)
    return out


def eig_range(h):
    w = np.linalg.eigh(h.values)[0]
    return float(np.min(w)), float(np.max(w))


# ---------------------------------------------------------------------------
# random band-limited test fields
# ---------------------------------------------------------------------------

def random_bandlimited(geom, rng, mmax=2, p=0, q=0, shape=(1, 1),
                       row_twists=None, col_twists=None, scale=1.0):
    """Random untwisted band-limited field; modes |m| <= mmax per axis."""
    if row_twists is None:
        row_twists = (geom.zero_twist(),) * shape[0]
    if col_twists is None:
        col_twists = (geom.zero_twist(),) * shape[1]
    f = zeros_field(geom, p, q, row_twists, col_twists)
    naxes = 2 * geom.d
    coords = [geom.axis_coord(ax) for ax in range(naxes)]
    for _ in range((2 * mmax + 1)):
        ms = rng.integers(-mmax, mmax + 1, size=naxes)
        coeff = (rng.standard_normal(f.values.shape[:1] + (1,) * naxes
                                     + f.values.shape[-2:])
                 + 1j * rng.standard_normal(f.values.shape[:1] + (1,) * naxes
                                            + f.values.shape[-2:]))
        phase = np.ones(geom.grid_shape, dtype=complex)
        for ax, m in enumerate(ms):
            phase = phase * np.exp(2j * np.pi * m * coords[ax])
        f.values += scale * coeff * phase[..., None, None]
    return f


def hermitian_project(s, H=None):
    """Pointwise (H-)hermitian part of a (0,0)-endomorphism field."""
    sdag = np.conj(np.swapaxes(s.values, -1, -2))
    if H is not None:
        Hv = H.values[0]
        sdag = np.linalg.solve(Hv, sdag @ Hv)
    out = s.copy()
    out.values = 0.5 * (s.values + sdag)
    return out


def traceless_project(s):
    out = s.copy()
    n = s.rows
    tr = np.trace(s.values, axis1=-2, axis2=-1) / n
    out.values = s.values - tr[..., None, None] * np.eye(n)
    return out
