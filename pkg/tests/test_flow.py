from fractions import Fraction

import numpy as np
import pytest

from higgsext import flow as fl
from higgsext import functional as fn
from higgsext import higgs_bundle as hb
from higgsext import kahler_grid as kg
from higgsext import scenarios as sc


def test_p0_background_is_exact_solution(flow_results):
    res = flow_results["P0"]
    assert res.status == fl.CONVERGED
    assert res.iterations == 0
    assert res.residual_sup < 1e-10


def test_p0_perturbed_converges_block_diagonal(flow_results):
    res = flow_results["P0_perturbed"]
    assert res.status == fl.CONVERGED
    off = float(np.max(np.abs(res.metric.H.values[0][..., 0, 1])))
    assert off < 1e-8
    assert res.det_drift < 1e-10


@pytest.mark.parametrize("name", ["S0", "S1", "S2"])
def test_stable_scenarios_converge(name, flow_results):
    res = flow_results[name]
    assert res.status == fl.CONVERGED
    assert res.residual_sup < 1e-6
    assert res.iterations <= 5000
    assert res.det_drift < 1e-10


def test_energy_trace_nonincreasing(flow_results):
    for name in ("S0", "S2", "P0_perturbed"):
        e = flow_results[name].traces["energy"]
        assert np.all(np.diff(e) <= 1e-12)


def test_central_higgs_flow_invariance(flow_results):
    # a central Higgs field drops out of every flow quantity; in floating
    # point the trajectories bifurcate at ulp level through line-search
    # decisions and reconverge, so the substantive identity is between the
    # converged metrics and energies (the field-level invariance is asserted
    # separately at matched metrics in the bundle tests)
    a, b = flow_results["S0"], flow_results["S1"]
    assert a.iterations == b.iterations
    assert float(np.max(np.abs(a.metric.H.values[0] - b.metric.H.values[0]))) < 1e-10
    assert abs(a.energy - b.energy) < 1e-9
    d = np.abs(a.traces["residual_sup"] - b.traces["residual_sup"])
    assert np.max(d[:5]) < 1e-10


def test_u0_destabilizes(flow_results):
    res = flow_results["U0"]
    assert res.status == fl.DESTABILIZED
    d = res.destabilization
    assert d["dominant_overlap_E1"] > 0.99
    assert d["Q"] <= 0


def test_alpha_zero_reduces_to_plain_equation(flow_results, scen32):
    res = flow_results["alpha0"]
    assert res.status == fl.CONVERGED
    # at alpha = 0 the converged equation is i Lambda F = mu I
    ext = scen32["S0"].ext
    params = hb.EquationParameters.for_extension(ext, 0.0)
    _, sup, _ = hb.hhe_residual(ext, res.metric, params)
    assert sup < 1e-6


def test_gauge_covariance(scen32):
    # conjugating the extension data by a constant block phase leaves the
    # residual trajectory unchanged
    base = scen32["S0"]
    g = base.ext.geom
    phase = np.exp(0.7j)
    beta = kg.zeros_field(g, 0, 1, ((-1,),), ((0,),))
    beta.values[0] = phase * base.ext.dbar_pot.values[0][..., :1, 1:]
    ext2 = hb.build_extension(g, [-1], [0], beta=beta)
    opts = fl.FlowOptions(max_iters=1200)
    r1 = fl.run_flow(base.ext, base.alpha_an, opts)
    r2 = fl.run_flow(ext2, base.alpha_an, opts)
    assert r1.status == r2.status == fl.CONVERGED
    assert abs(r1.residual_sup - r2.residual_sup) < 1e-8
    assert abs(r1.energy - r2.energy) < 1e-8


def test_convexity_at_converged_metric(flow_results, scen32):
    scn = scen32["S0"]
    m = flow_results["S0"].metric
    for i in range(10):
        s = hb.random_direction(scn.ext, m, np.random.default_rng(50 + i),
                                mmax=1, scale=0.3)
        assert fn.second_variation_formula(scn.ext, m, s, scn.alpha_an) >= -1e-8


def test_flow_gradient_vanishes_at_convergence(flow_results, scen32):
    scn = scen32["S0"]
    m = flow_results["S0"].metric
    m0 = fn.m0_alpha(scn.ext, m, scn.alpha_an)
    s = kg.traceless_project(kg.hermitian_project(1j * m0, H=m.H))
    assert abs(fn.first_variation_formula(scn.ext, m, s, scn.alpha_an)) < 1e-6


def test_q_quantity():
    # consistent tau data makes the head term vanish
    tau1, tau2 = Fraction(-3, 4), Fraction(-1, 4)
    total = (2, Fraction(-1, 2), 1, 1)
    q, signs = fl.q_quantity(total, [], Fraction(1, 2), tau1, tau2)
    assert q == 0 and signs == []
    # hand value for the destabilizing configuration
    tau1 = Fraction(-5, 4)
    tau2 = Fraction(1, 4)
    part = (1, Fraction(-1), 1, 0, Fraction(1))
    q, signs = fl.q_quantity((2, Fraction(-1, 2), 1, 1), [part],
                             Fraction(1, 2), tau1, tau2)
    assert q == Fraction(-1, 4)
    assert signs == [1]
    # strictly negative brackets with positive gaps force Q > 0
    import random
    rng = random.Random(0)
    for _ in range(50):
        t1 = Fraction(rng.randint(-8, -1), rng.randint(1, 4))
        t2 = Fraction(rng.randint(-8, 8), rng.randint(1, 4))
        parts = []
        for _ in range(rng.randint(1, 3)):
            r1 = rng.randint(0, 2)
            r2 = rng.randint(0, 2)
            if r1 + r2 == 0:
                r1 = 1
            bracket_bound = r1 * t1 + r2 * t2
            mui = (bracket_bound - Fraction(rng.randint(1, 5), 7)) / (r1 + r2)
            parts.append((r1 + r2, mui, r1, r2, Fraction(rng.randint(1, 3))))
        n1, n2 = 1, 1
        mu = (n1 * t1 + n2 * t2) / (n1 + n2)
        q, signs = fl.q_quantity((n1 + n2, mu, n1, n2), parts,
                                 Fraction(rng.randint(1, 3)), t1, t2)
        assert all(s < 0 for s in signs)
        assert q > 0
    with pytest.raises(ValueError):
        fl.q_quantity((2, Fraction(0), 1, 1), [(1, Fraction(0), 1, 0, Fraction(-1))],
                      Fraction(1), Fraction(-1), Fraction(0))


def test_extract_destabilizer_exact_block(scen32):
    ext = scen32["S0"].ext
    s = kg.const_endo(ext.geom, ext.twists, np.diag([0.5, -0.5]))
    rep = fl.extract_destabilizer(ext, [s, s, s])
    assert np.allclose(rep["lambdas"], [-0.5, 0.5])
    r = rep["property_residuals"][0]
    assert r["idempotency"] < 1e-10 and r["hermiticity"] < 1e-10
    assert rep["eigenvalue_constancy"] < 1e-10
    # diagnostic only on rough input: must run without assertions
    rng = np.random.default_rng(0)
    m = hb.HermitianMetric.background(ext)
    s2 = hb.random_direction(ext, m, rng, mmax=1, scale=1.0)
    fl.extract_destabilizer(ext, [s2, s2])
    with pytest.raises(ValueError):
        fl.extract_destabilizer(ext, [s])


def test_certify_solution(flow_results, scen32):
    scn = scen32["S0"]
    res = flow_results["S0"]
    cert = fl.certify_solution(
        scn.ext, res.metric, scn.alpha_an,
        declared=[("E1", np.array([[1.0], [0.0]]), Fraction(-1))])
    assert cert["residual_sup"] < 1e-6
    assert cert["trace_identity"] < 1e-8
    sub = cert["subobjects"][0]
    assert sub["identity_residual"] < 1e-4
    assert sub["strict_inequality"]
    # pi = identity: zero correction, equality of slopes
    certI = fl.certify_solution(
        scn.ext, res.metric, scn.alpha_an,
        declared=[("E", np.eye(2), Fraction(-3, 4))])
    subI = certI["subobjects"][0]
    assert subI["correction"] < 1e-10
    assert subI["identity_residual"] < 1e-8


def test_certify_p0_boundary(flow_results, scen32):
    scn = scen32["P0"]
    res = flow_results["P0"]
    cert = fl.certify_solution(
        scn.ext, res.metric, scn.alpha_an,
        declared=[("E1", np.array([[1.0], [0.0]]), Fraction(-1))])
    sub = cert["subobjects"][0]
    assert sub["correction"] < 1e-10          # split: no second fundamental form
    assert sub["identity_residual"] < 1e-8    # equality of alpha-slopes
    assert not sub["strict_inequality"]


def test_preconditioner_positive(scen32):
    scn = scen32["S0"]
    ext = scn.ext
    pre = fl.Preconditioner(ext.geom, ext.twists)
    rng = np.random.default_rng(0)
    for _ in range(5):
        x = kg.hermitian_project(hb.random_endo(ext, rng, mmax=2))
        y = pre.apply(x)
        pair = kg.integrate(kg.trace(kg.wedge(y, x))).real
        assert pair > 0
        # hermiticity preserved by the conjugate-paired sector solves
        assert kg.sup_norm(y - kg.hermitian_project(y)) < 1e-10
