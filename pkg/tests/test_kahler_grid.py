import numpy as np
import pytest
from scipy.sparse.linalg import eigsh

from higgsext import kahler_grid as kg


def test_make_torus_validation():
    geom = kg.make_torus(1, 32)
    assert geom.npoints == 1024
    assert kg.integrate(kg.scalar_field(geom, 1.0)) == pytest.approx(1.0)
    kg.make_torus(1, 8)  # boundary of the precondition
    geom2 = kg.make_torus(2, 16)
    assert geom2.npoints == 65536
    om = kg.omega_field(geom2)
    assert kg.integrate(kg.wedge(om, om)) / 2 == pytest.approx(1.0, abs=1e-13)
    with pytest.raises(kg.GeometryError):
        kg.make_torus(1, 31)
    with pytest.raises(kg.GeometryError):
        kg.make_torus(1, 6)
    with pytest.raises(kg.GeometryError):
        kg.make_torus(3, 16)


def test_lambda_contraction():
    g1 = kg.make_torus(1, 16)
    lam = kg.lambda_contract(kg.omega_field(g1))
    assert np.allclose(lam.values, 1.0)
    g2 = kg.make_torus(2, 8)
    lam2 = kg.lambda_contract(kg.omega_field(g2))
    assert np.allclose(lam2.values, 2.0)
    # (i/2) c dz ^ dzbar contracts to c
    c = 3.7 - 0.4j
    f = kg.scalar_field(g1, np.full(g1.grid_shape, 0.5j * c), p=1, q=1)
    assert np.allclose(kg.lambda_contract(f).values, c)
    with pytest.raises(kg.FieldShapeError):
        kg.lambda_contract(kg.scalar_field(g1, 1.0))


def test_lambda_omega_identity():
    # integrate(Lambda(omega * f)) = d * integrate(f) exactly
    for d, N in ((1, 16), (2, 8)):
        g = kg.make_torus(d, N)
        rng = np.random.default_rng(0)
        f = kg.random_bandlimited(g, rng, mmax=2)
        wf = kg.form_times_endo(kg.omega_field(g), f)
        lhs = kg.integrate(kg.lambda_contract(wf))
        rhs = d * kg.integrate(f)
        assert abs(lhs - rhs) < 1e-12 * max(abs(rhs), 1.0)


def test_integrate():
    g = kg.make_torus(1, 32)
    x = g.axis_coord(0)
    y = g.axis_coord(1)
    assert abs(kg.integrate(kg.scalar_field(g, np.sin(2 * np.pi * x) * np.ones_like(y)))) < 1e-14
    sep = kg.scalar_field(g, (1 + np.cos(2 * np.pi * x)) * (1 + np.cos(2 * np.pi * y)))
    assert kg.integrate(sep) == pytest.approx(1.0, abs=1e-13)
    with pytest.raises(kg.FieldShapeError):
        kg.integrate(kg.random_bandlimited(g, np.random.default_rng(0), p=1, q=0))


def test_integrate_deterministic_reduction():
    g = kg.make_torus(1, 32)
    f = kg.scalar_field(g, np.random.default_rng(3).standard_normal(g.grid_shape))
    assert kg.integrate(f) == kg.integrate(f.copy())


def test_covariant_dbar_basics():
    g = kg.make_torus(1, 32)
    one = kg.scalar_field(g, 1.0)
    assert kg.sup_norm(kg.covariant_dbar(one)) == 0.0
    x = g.axis_coord(0)
    y = g.axis_coord(1)
    f = kg.scalar_field(g, np.exp(2j * np.pi * x) * np.ones_like(y))
    db = kg.covariant_dbar(f)
    expected = 1j * np.pi * np.exp(2j * np.pi * x) * np.ones_like(y)
    assert np.max(np.abs(db.values[0, ..., 0, 0] - expected)) < 1e-12
    with pytest.raises(kg.FieldShapeError):
        kg.covariant_dbar(kg.random_bandlimited(g, np.random.default_rng(0), p=0, q=1))


def test_twisted_generator_kernel_residual():
    g = kg.make_torus(1, 64)
    phi = kg.twisted_generator(g, (1,))
    f = kg.FormField(g, 0, 0, ((1,),), ((0,),), phi[None, ..., None, None])
    assert kg.sup_norm(kg.covariant_dbar(f)) < 1e-6
    # degree-2 sector has a two-dimensional discrete kernel
    g32 = kg.make_torus(1, 32)
    D = kg.twisted_dbar_matrix(g32, 2)
    w = eigsh((D.getH() @ D).tocsc(), k=3, sigma=-1.0, which="LM")[0]
    w = np.sort(np.abs(w))
    assert w[0] < 1e-8 and w[1] < 1e-8 and w[2] > 1e-1


def test_sparse_dbar_matches_operator():
    g = kg.make_torus(1, 16)
    rng = np.random.default_rng(1)
    for k in (-2, -1, 1, 2):
        arr = rng.standard_normal(g.grid_shape) + 1j * rng.standard_normal(g.grid_shape)
        f = kg.FormField(g, 0, 0, ((k,),), ((0,),), arr[None, ..., None, None])
        op = kg.covariant_dbar(f).values[0, ..., 0, 0]
        mat = (kg.twisted_dbar_matrix(g, k) @ arr.ravel()).reshape(g.grid_shape)
        assert np.max(np.abs(op - mat)) < 1e-12


def test_inner_product():
    g = kg.make_torus(1, 32)
    rng = np.random.default_rng(0)
    f = kg.random_bandlimited(g, rng, mmax=2)
    zero = 0.0 * f
    assert kg.inner_product(zero, zero) == 0
    c = 2.5 - 1.0j
    assert kg.inner_product(c * f, f) == pytest.approx(c * kg.inner_product(f, f))
    dz = kg.scalar_field(g, np.ones(g.grid_shape), p=1, q=0)
    assert kg.inner_product(dz, dz) == pytest.approx(2.0)
    g_ = kg.random_bandlimited(g, rng, mmax=2)
    assert kg.inner_product(f, g_) == pytest.approx(np.conj(kg.inner_product(g_, f)))


def test_spectral_adjointness():
    # <dbar a, b> = <a, -i Lambda del b> for untwisted scalars, spectrally exact
    g = kg.make_torus(1, 32)
    rng = np.random.default_rng(1)
    a = kg.random_bandlimited(g, rng, mmax=3)
    b = kg.random_bandlimited(g, rng, mmax=3, p=0, q=1)
    lhs = kg.inner_product(kg.covariant_dbar(a), b)
    rhs = kg.inner_product(a, -1j * kg.lambda_contract(kg.covariant_del(b)))
    assert abs(lhs - rhs) < 1e-10


def test_leibniz_and_stokes():
    g = kg.make_torus(1, 32)
    rng = np.random.default_rng(2)
    a = kg.random_bandlimited(g, rng, mmax=3)
    b = kg.random_bandlimited(g, rng, mmax=3)
    lhs = kg.covariant_dbar(kg.wedge(a, b))
    rhs = kg.wedge(kg.covariant_dbar(a), b) + kg.wedge(a, kg.covariant_dbar(b))
    assert kg.sup_norm(lhs - rhs) < 1e-10
    oneform = kg.random_bandlimited(g, rng, mmax=3, p=1, q=0)
    assert abs(kg.integrate(kg.exterior_d(oneform))) < 1e-10


def test_wedge_algebra_d2():
    g = kg.make_torus(2, 8)
    rng = np.random.default_rng(0)
    a = kg.random_bandlimited(g, rng, mmax=1, p=1, q=0)
    b = kg.random_bandlimited(g, rng, mmax=1, p=0, q=1)
    c = kg.random_bandlimited(g, rng, mmax=1, p=1, q=0)
    assert kg.sup_norm(kg.wedge(a, b) + kg.wedge(b, a)) < 1e-13
    assert kg.sup_norm(kg.wedge(kg.wedge(a, b), c) - kg.wedge(a, kg.wedge(b, c))) < 1e-12
    s = kg.random_bandlimited(g, rng, mmax=1)
    mix = kg.covariant_del(kg.covariant_dbar(s)) + kg.covariant_dbar(kg.covariant_del(s))
    assert kg.sup_norm(mix) < 1e-11


def test_clutching_check():
    g = kg.make_torus(1, 16)
    k = 1

    def section(x, y):
        return np.exp(-2j * np.pi * k * x * np.floor(y)) * np.exp(2j * np.pi * (y - np.floor(y)))

    vals = kg.check_clutching(g, section, (k,))
    assert vals.shape == g.grid_shape

    def wrong(x, y):
        return np.exp(2j * np.pi * y)

    with pytest.raises(kg.FieldShapeError):
        kg.check_clutching(g, wrong, (k,))


def test_matrix_functions():
    g = kg.make_torus(1, 16)
    rng = np.random.default_rng(0)
    s = kg.random_bandlimited(g, rng, mmax=1, shape=(2, 2), scale=0.3)
    s = kg.hermitian_project(s)
    e = kg.expm_hermitian_field(s)
    back = kg.logm_posdef_field(e)
    assert kg.sup_norm(back - s) < 1e-12
    t = kg.traceless_project(s)
    assert np.max(np.abs(np.trace(t.values[0], axis1=-2, axis2=-1))) < 1e-13


def test_dagger_and_adjoint():
    g = kg.make_torus(1, 16)
    rng = np.random.default_rng(0)
    a = kg.random_bandlimited(g, rng, mmax=1, shape=(2, 2), p=1, q=0)
    b = kg.dagger(kg.dagger(a))
    assert kg.sup_norm(a - b) < 1e-13
    # metric adjoint is an involution as well
    h = kg.hermitian_project(kg.random_bandlimited(g, rng, mmax=1, shape=(2, 2), scale=0.2))
    H = kg.expm_hermitian_field(h)
    astar = kg.adjoint_endo(a, H)
    assert kg.sup_norm(kg.adjoint_endo(astar, H) - a) < 1e-12


def test_mixed_field():
    g = kg.make_torus(1, 16)
    rng = np.random.default_rng(0)
    a = kg.random_bandlimited(g, rng, mmax=1, p=1, q=0)
    b = kg.random_bandlimited(g, rng, mmax=1, p=0, q=1)
    m = kg.as_mixed(a, b)
    assert set(m.parts) == {(1, 0), (0, 1)}
    w = m.wedge(m)
    assert set(w.parts) == {(1, 1)}  # overflow parts dropped (they vanish)
    assert (m - m).sup_norm() == 0.0
