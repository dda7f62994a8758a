from fractions import Fraction as Fr

import numpy as np
import pytest

from higgsext import stability as st


def profile(rk, deg, rk1, deg1, rk2, deg2):
    return st.SubobjectProfile(rk=rk, deg=Fr(deg), rk1=rk1, deg1=Fr(deg1),
                               rk2=rk2, deg2=Fr(deg2))


def rank2_scenario(alpha):
    subs = (profile(1, -1, 1, -1, 0, 0), profile(1, -1, 0, 0, 1, -1))
    return st.StabilityScenario(curve=st.CurveData(genus=1), n=2, deg=Fr(-1),
                                rk2=1, deg2=Fr(0), subobjects=subs,
                                alpha=Fr(alpha))


def test_alpha_slope_examples():
    assert st.alpha_slope(-1, 2, 1, Fr(-1, 2)) == Fr(-3, 4)
    assert st.alpha_slope(5, 3, 2, 0) == Fr(5, 3)
    assert st.alpha_slope(0, 3, 2, -3) == Fr(-2)
    assert isinstance(st.alpha_slope(1, 2, 1, Fr(-1, 3)), Fr)
    with pytest.raises(ZeroDivisionError):
        st.alpha_slope(1, 0, 0, Fr(-1))


def test_alpha_range_examples():
    assert st.alpha_range(-1, 1, 0, 1) == (Fr(-1), Fr(0))
    assert st.alpha_range(0, 1, 0, 1) is None
    assert st.alpha_range(1, 1, 0, 1) is None
    with pytest.raises(ZeroDivisionError):
        st.alpha_range(0, 0, 0, 1)


def test_slope_classification_rank2():
    status, witness = st.is_slope_stable(rank2_scenario(Fr(-1, 2)))
    assert status == st.STABLE
    assert witness.rk1 == 1 and witness.deg == -1  # E1 is the worst subobject
    status, witness = st.is_slope_stable(rank2_scenario(Fr(-3, 2)))
    assert status == st.UNSTABLE
    assert witness.rk1 == 1
    status, _ = st.is_slope_stable(rank2_scenario(Fr(-1)))
    assert status == st.SEMISTABLE


def test_scenario_validation():
    with pytest.raises(ValueError):
        rank2_scenario(Fr(1, 2))  # alpha must be negative
    with pytest.raises(ValueError):
        profile(2, 0, 1, 0, 2, 0)  # ranks do not add up


def test_hilbert_poly():
    g1 = st.CurveData(genus=1, h=1)
    assert st.hilbert_poly(g1, 1, 0) == (0, 1)        # P(m) = m
    assert st.hilbert_poly(g1, 0, 7) == (7, 0)        # torsion length
    p1 = st.CurveData(genus=0, h=1)
    assert st.hilbert_poly(p1, 1, 0) == (1, 1)        # m + 1
    with pytest.raises(ValueError):
        st.hilbert_poly(g1, -1, 0)


def test_hilbert_rescale():
    assert st.hilbert_rescale((0, 1), 2) == (0, 2)
    assert st.hilbert_rescale((-1, 2), 3) == (-1, 6)
    assert st.hilbert_rescale((4, 5), 1) == (4, 5)
    with pytest.raises(ValueError):
        st.hilbert_rescale((0, 1), 0)


def test_gieseker_chain_cases():
    # slope stable implies Gieseker stable with clause (i) strict everywhere
    scn = rank2_scenario(Fr(-1, 2))
    gs, trace = st.gieseker_classify(scn)
    assert gs == st.G_STABLE
    assert all(outcome == "strict" and clause == "i" for _, clause, outcome in trace)

    # equality in (i) and (ii), strictly larger quotient polynomial in (iii)
    curve = st.CurveData(genus=1, h=1)
    base = dict(curve=curve, n=4, deg=Fr(0), rk2=2, deg2=Fr(-2), alpha=Fr(-2))
    strict = st.StabilityScenario(
        subobjects=(profile(2, 0, 1, 0, 1, 0),), **base)
    gs, trace = st.gieseker_classify(strict)
    assert gs == st.G_STABLE
    assert trace[0][1] == "iii" and trace[0][2].startswith("strict")

    boundary = st.StabilityScenario(
        subobjects=(profile(2, 0, 1, 1, 1, -1),), **base)
    gs, trace = st.gieseker_classify(boundary)
    assert gs == st.G_SEMISTABLE
    assert trace[0][1] == "iii"

    violated = st.StabilityScenario(
        subobjects=(profile(2, 0, 1, 2, 1, -2),), **base)
    gs, _ = st.gieseker_classify(violated)
    assert gs == st.G_UNSTABLE

    # rk2' = 0 subobjects are decided by clauses (i)-(ii) alone; on a curve
    # they can never reach clause (iii), since (i)- and (ii)-equality are
    # jointly impossible for them when alpha < 0
    torsionish = st.StabilityScenario(
        subobjects=(profile(2, -2, 2, -2, 0, 0),), **base)
    gs, trace = st.gieseker_classify(torsionish)
    assert gs == st.G_STABLE
    assert trace[0][1] in ("i", "ii") and trace[0][2] == "strict"


def test_implication_chain_randomized():
    report = st.implication_check(count=10_000, seed=0)
    assert report["checked"] == 10_000
    assert report["violations"] == 0


def test_scaling_invariance():
    import random
    rng = random.Random(5)
    for _ in range(300):
        scn = st.random_scenario(rng)
        lam = rng.choice([2, 3, 5])
        scaled = st.StabilityScenario(
            curve=scn.curve, n=scn.n, deg=lam * scn.deg, rk2=scn.rk2,
            deg2=lam * scn.deg2,
            subobjects=tuple(
                st.SubobjectProfile(rk=s.rk, deg=lam * s.deg, rk1=s.rk1,
                                    deg1=lam * s.deg1, rk2=s.rk2,
                                    deg2=lam * s.deg2)
                for s in scn.subobjects),
            alpha=lam * scn.alpha)
        assert st.is_slope_stable(scn)[0] == st.is_slope_stable(scaled)[0]


def test_spectral_fiber():
    assert np.allclose(st.spectral_fiber([[0, 1], [0, 0]]), [0, 0])
    assert np.allclose(st.spectral_fiber(np.diag([2.0, -1.0])), [-1, 2])
    assert np.allclose(st.spectral_fiber([[0, 1], [1, 0]]), [-1, 1])
    with pytest.raises(ValueError):
        st.spectral_fiber(np.zeros((2, 3)))


def test_spectral_fiber_block_triangular():
    rng = np.random.default_rng(0)
    for _ in range(20):
        a = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        b = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        c = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
        m = np.block([[a, c], [np.zeros((3, 2)), b]])
        whole = st.spectral_fiber(m)
        parts = np.concatenate([st.spectral_fiber(a), st.spectral_fiber(b)])
        parts = parts[np.lexsort((parts.imag, parts.real))]
        assert np.max(np.abs(whole - parts)) < 1e-10


def test_cross_module_slope_identity(scen32):
    from higgsext import higgs_bundle as hb
    for name in ("S0", "S2"):
        scn = scen32[name]
        params = hb.EquationParameters.for_extension(scn.ext, scn.alpha_an)
        mu_alpha = st.alpha_slope(scn.stability.deg, scn.stability.n,
                                  scn.stability.rk2, scn.stability.alpha)
        assert abs(2 * np.pi * float(mu_alpha) - params.tau1) < 1e-12


def test_library_profiles_classify_as_documented(scen32):
    assert st.is_slope_stable(scen32["S0"].stability)[0] == st.STABLE
    assert st.is_slope_stable(scen32["S1"].stability)[0] == st.STABLE
    assert st.is_slope_stable(scen32["S2"].stability)[0] == st.STABLE
    assert st.is_slope_stable(scen32["U0"].stability)[0] == st.UNSTABLE
    assert st.is_slope_stable(scen32["P0"].stability)[0] == st.SEMISTABLE
    assert st.is_slope_stable(scen32["X0"].stability)[0] == st.UNSTABLE
