"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines; every tolerance is pinned here, nothing is deferred.
"""

import random
from fractions import Fraction as Fr

import numpy as np
import pytest

from higgsext import bogomolov as bg
from higgsext import flow as fl
from higgsext import functional as fn
from higgsext import higgs_bundle as hb
from higgsext import kahler_grid as kg
from higgsext import scenarios as sc
from higgsext import stability as st


def _report(number, title, checks):
    ok = all(passed for _, passed in checks)
    line = f"ACCEPTANCE {number} ({title}): {'PASS' if ok else 'FAIL'}"
    print("\n" + line)
    for label, passed in checks:
        print(f"    [{'ok' if passed else 'FAIL'}] {label}")
    assert ok, line
    return ok


def test_criterion_1_structural_identities(scen32, scen64):
    checks = []
    r0 = scen32["S0"].ext.integrability_residual()[0]
    r1 = scen32["S1"].ext.integrability_residual()[0]
    r2 = scen32["S2"].ext.integrability_residual()[0]
    checks.append((f"(nabla'')^2 S0 = {r0:.2e} < 1e-10", r0 < 1e-10))
    checks.append((f"(nabla'')^2 S1 = {r1:.2e} < 1e-10", r1 < 1e-10))
    checks.append((f"(nabla'')^2 S2 = {r2:.2e} < 1e-6", r2 < 1e-6))

    g = kg.make_torus(1, 32)
    triv = hb.build_extension(g, [0], [0])
    ku = hb.kahler_identity_residual(triv, hb.HermitianMetric.background(triv),
                                     rng=np.random.default_rng(0), mmax=3)
    checks.append((f"Kaehler identities untwisted = {ku:.2e} < 1e-10", ku < 1e-10))
    ext64 = scen64["S0"].ext
    K64 = hb.HermitianMetric.background(ext64)
    m64 = hb.HermitianMetric.from_s(
        ext64, hb.random_direction(ext64, K64, np.random.default_rng(1),
                                   mmax=1, scale=0.25))
    kt = hb.kahler_identity_residual(ext64, m64, rng=np.random.default_rng(2),
                                     mmax=1)
    checks.append((f"Kaehler identities twisted N=64 = {kt:.2e} < 1e-6", kt < 1e-6))

    b0 = hb.bianchi_residual(triv, hb.HermitianMetric.background(triv))
    bb = hb.bianchi_residual(hb.build_extension(g, [-1], [0]),
                             hb.HermitianMetric.background(
                                 hb.build_extension(g, [-1], [0])))
    bs = hb.bianchi_residual(ext64, m64)
    checks.append((f"Bianchi flat trivial = {b0:.2e} < 1e-10", b0 < 1e-10))
    checks.append((f"Bianchi line-bundle background = {bb:.2e} < 1e-10", bb < 1e-10))
    checks.append((f"Bianchi S0 + random s, N=64 = {bs:.2e} < 1e-5", bs < 1e-5))
    _report(1, "structural identities", checks)


def test_criterion_2_chern_weil(scen64):
    checks = []
    g = kg.make_torus(1, 32)
    for k in (-2, -1, 1, 2):
        ext = hb.build_extension(g, [k], [0])
        F = hb.higgs_curvature(ext, hb.HermitianMetric.background(ext))
        deg = (1j / (2 * np.pi) * kg.integrate(kg.trace(F.part(1, 1)))).real
        checks.append((f"deg L({k}) = {deg:+.12f}", abs(deg - k) < 1e-10))
    ext = scen64["S0"].ext
    m = hb.HermitianMetric.background(ext)
    pi1 = hb.subbundle_projection(ext, m, np.array([[1.0], [0.0]]))
    val = hb.degree_via_projection(ext, m, pi1)
    checks.append(
        (f"degree_via_projection(E1 of S0, N=64) = {val:.8f} vs -2*pi",
         abs(val + 2 * np.pi) < 1e-4))
    _report(2, "Chern-Weil degrees", checks)


def test_criterion_3_variational_formulas(scen32):
    checks = []
    for name in ("S0", "S2"):
        scn = scen32[name]
        ext = scn.ext
        K = hb.HermitianMetric.background(ext)
        worst_first = worst_second = 0.0
        for i in range(20):
            rng = np.random.default_rng(200 + i)
            s = hb.random_direction(ext, K, rng, mmax=1, scale=0.4)
            _, _, rel1 = fn.first_variation_check(ext, K, s, scn.alpha_an,
                                                  t=0.3, dt=1e-4)
            _, _, rel2 = fn.second_variation_check(ext, K, s, scn.alpha_an,
                                                   dt=1e-3)
            worst_first = max(worst_first, rel1)
            worst_second = max(worst_second, rel2)
        checks.append((f"{name}: first variation rel err (20 dirs) "
                       f"= {worst_first:.2e} < 1e-4", worst_first < 1e-4))
        checks.append((f"{name}: second variation rel err (20 dirs) "
                       f"= {worst_second:.2e} < 1e-3", worst_second < 1e-3))

    ext = sc.make_scenario("S0", N=64).ext
    alpha = sc.make_scenario("S0").alpha_an
    K = hb.HermitianMetric.background(ext)
    rng = np.random.default_rng(2)
    H, Km, J = (hb.HermitianMetric.from_s(
        ext, hb.random_direction(ext, K, rng, mmax=1, scale=0.12))
        for _ in range(3))
    coc = abs(fn.m_higgs_alpha(ext, H, Km, alpha)
              + fn.m_higgs_alpha(ext, Km, J, alpha)
              - fn.m_higgs_alpha(ext, H, J, alpha))
    anti = abs(fn.m_higgs_alpha(ext, H, Km, alpha)
               + fn.m_higgs_alpha(ext, Km, H, alpha))
    checks.append((f"cocycle = {coc:.2e} < 1e-8", coc < 1e-8))
    checks.append((f"antisymmetry = {anti:.2e} < 1e-8", anti < 1e-8))
    _report(3, "variational formulas", checks)


def test_criterion_4_hitchin_kobayashi_desk_scale(flow_results, scen32):
    checks = []
    for name in ("S0", "S1", "S2", "P0"):
        res = flow_results[name]
        ok = (res.status == fl.CONVERGED and res.residual_sup < 1e-6
              and res.iterations <= 20_000)
        checks.append((f"{name}: {res.status} in {res.iterations} iterations, "
                       f"residual {res.residual_sup:.2e}", ok))
    a, b = flow_results["S0"], flow_results["S1"]
    mdiff = float(np.max(np.abs(a.metric.H.values[0] - b.metric.H.values[0])))
    checks.append((f"S1 flow matches S0 (converged metric diff {mdiff:.2e}, "
                   f"iterations {a.iterations} = {b.iterations})",
                   mdiff < 1e-10 and a.iterations == b.iterations))
    u = flow_results["U0"]
    overlap = u.destabilization["dominant_overlap_E1"]
    checks.append((f"U0: {u.status}, dominant projection overlap with E1 "
                   f"= {overlap:.6f} > 0.99",
                   u.status == fl.DESTABILIZED and overlap > 0.99))
    checks.append((f"U0: Q = {u.destabilization['Q']} <= 0",
                   u.destabilization["Q"] <= 0))

    declared = {
        "S0": [("E1", np.array([[1.0], [0.0]]), Fr(-1))],
        "S1": [("E1", np.array([[1.0], [0.0]]), Fr(-1))],
        "P0": [("E1", np.array([[1.0], [0.0]]), Fr(-1))],
        "S2": [("L(-1) in E1", np.array([[0.0], [1.0], [0.0]]), Fr(-1)),
               ("E1", np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]), Fr(-1, 2))],
    }
    for name, decl in declared.items():
        scn = scen32[name]
        cert = fl.certify_solution(scn.ext, flow_results[name].metric,
                                   scn.alpha_an, declared=decl)
        worst = max(s["identity_residual"] for s in cert["subobjects"])
        checks.append((f"{name}: easy-direction slope identity residual "
                       f"= {worst:.2e} < 1e-4", worst < 1e-4))
    _report(4, "Hitchin-Kobayashi at desk scale", checks)


def test_criterion_5_transgression(scen64):
    checks = []
    ext = scen64["X0"].ext
    K = hb.HermitianMetric.background(ext)
    rng = np.random.default_rng(4)
    H = hb.HermitianMetric.from_s(
        ext, hb.random_direction(ext, K, rng, mmax=1, scale=0.3))
    pathA = fn.MetricPath.exponential(ext, H, K)
    pathB = fn.MetricPath.two_segment(
        ext, H, K, hb.random_direction(ext, K, rng, mmax=1, scale=0.15))
    th1, _ = fn.transgression_residual(fn.trace_poly(), ext, pathA, nodes=8)
    r1a = fn.r_higgs(fn.trace_poly(), ext, pathA, nodes=8)
    r1b = fn.r_higgs(fn.trace_poly(), ext, pathB, nodes=8)
    k1pi = (r1a - r1b).sup_norm()
    checks.append((f"arity-1 theorem residual N=64 = {th1:.2e} < 1e-10",
                   th1 < 1e-10))
    checks.append((f"arity-1 path independence N=64 = {k1pi:.2e} < 1e-10",
                   k1pi < 1e-10))
    th2, pi2 = fn.transgression_residual(fn.pair_poly(), ext, pathA, pathB,
                                         nodes=8)
    ms = abs(fn.m_simpson(ext, H, K, nodes=8, path=pathA)
             - fn.m_simpson(ext, H, K, nodes=8, path=pathB))
    checks.append((f"arity-2 theorem residual N=64 (top degree on a curve) "
                   f"= {th2:.2e} < 1e-5", th2 < 1e-5))
    checks.append((f"arity-2 dbar-del path independence N=64 = {pi2:.2e} "
                   f"< 1e-5", pi2 < 1e-5))
    checks.append((f"arity-2 energy path independence N=64 = {ms:.2e} < 1e-5",
                   ms < 1e-5))

    x2 = sc.make_scenario("X2", N=16)
    K2 = hb.HermitianMetric.background(x2.ext)
    rng2 = np.random.default_rng(3)
    H2 = hb.HermitianMetric.from_s(
        x2.ext, hb.random_direction(x2.ext, K2, rng2, mmax=1, scale=0.05))
    pA = fn.MetricPath.exponential(x2.ext, H2, K2)
    pB = fn.MetricPath.two_segment(
        x2.ext, H2, K2, hb.random_direction(x2.ext, K2, rng2, mmax=1, scale=0.025))
    th22, pi22 = fn.transgression_residual(fn.pair_poly(), x2.ext, pA, pB,
                                           nodes=8)
    checks.append((f"arity-2 theorem residual, two variables = {th22:.2e} "
                   f"< 1e-5", th22 < 1e-5))
    checks.append((f"arity-2 path independence, two variables = {pi22:.2e} "
                   f"< 1e-5", pi22 < 1e-5))
    _report(5, "transgression forms", checks)


def test_criterion_6_exact_stability(scen32):
    checks = []
    s0 = st.is_slope_stable(scen32["S0"].stability)[0]
    u0 = st.is_slope_stable(scen32["U0"].stability)[0]
    p0 = st.is_slope_stable(scen32["P0"].stability)[0]
    s2 = st.is_slope_stable(scen32["S2"].stability)[0]
    checks.append((f"S0 at alpha -1/2: {s0}", s0 == st.STABLE))
    checks.append((f"U0 at alpha -3/2: {u0}", u0 == st.UNSTABLE))
    checks.append((f"P0 at boundary alpha -1: {p0}", p0 == st.SEMISTABLE))
    checks.append((f"S2 at alpha -1/4: {s2}", s2 == st.STABLE))
    rep = st.implication_check(count=10_000, seed=0)
    checks.append((f"implication chain on {rep['checked']} instances, "
                   f"{rep['violations']} violations", rep["violations"] == 0))

    tau1, tau2 = Fr(-3, 4), Fr(-1, 4)
    q0, _ = fl.q_quantity((2, Fr(-1, 2), 1, 1), [], Fr(1, 2), tau1, tau2)
    checks.append((f"Q with no parts = {q0} (exact zero)", q0 == 0))
    qd, signs = fl.q_quantity((2, Fr(-1, 2), 1, 1),
                              [(1, Fr(-1), 1, 0, Fr(1))],
                              Fr(1, 2), Fr(-5, 4), Fr(1, 4))
    checks.append((f"Q for the destabilizing instance = {qd} = -1/4, "
                   f"sign {signs}", qd == Fr(-1, 4) and signs == [1]))
    rng = random.Random(1)
    all_pos = True
    for _ in range(100):
        t1 = Fr(rng.randint(-8, -1), rng.randint(1, 4))
        t2 = Fr(rng.randint(-8, 8), rng.randint(1, 4))
        parts = []
        for _ in range(rng.randint(1, 3)):
            r1 = rng.randint(0, 2)
            r2 = rng.randint(0, 2)
            r1 = r1 or 1
            mui = (r1 * t1 + r2 * t2 - Fr(rng.randint(1, 5), 7)) / (r1 + r2)
            parts.append((r1 + r2, mui, r1, r2, Fr(rng.randint(1, 3))))
        mu = (t1 + t2) / 2
        q, sgn = fl.q_quantity((2, mu, 1, 1), parts, Fr(rng.randint(1, 3)),
                               t1, t2)
        all_pos = all_pos and q > 0 and all(s < 0 for s in sgn)
    checks.append(("Q > 0 whenever every part bracket is strictly negative "
                   "(100 exact instances)", all_pos))
    _report(6, "exact stability", checks)


def test_criterion_7_bogomolov():
    checks = []
    fuzz = bg.identity_fuzz(samples=1000, nmax=3, seed=0)
    checks.append((f"pointwise identity fuzz (1000 samples, n<=3) max "
                   f"residual = {fuzz:.2e} < 1e-12", fuzz < 1e-12))
    s1 = bg.SummandData(1, Fr(0), Fr(0), Fr(0))
    s2 = bg.SummandData(1, Fr(1), Fr(0), Fr(2))
    data, _ = bg.split_chern_decomposition((s1, s2))
    gap = bg.mu_hat(1, Fr(0)) - bg.mu_hat(1, Fr(1))
    roots_ok = (bg.bogomolov_slack(data, alpha_hat=gap) == 0
                and bg.bogomolov_slack(data, alpha_hat=-gap) == 0
                and all(bg.bogomolov_slack(data, alpha_hat=a) != 0
                        for a in (Fr(-1, 2), Fr(-2), Fr(1, 3))))
    checks.append(("equality-family slack vanishes exactly at alpha_hat = "
                   "+-(mu1-mu2) and only there", roots_ok))
    rng = random.Random(0)
    exact = True
    for _ in range(100):
        def srand():
            return bg.SummandData(rng.randint(1, 3),
                                  Fr(rng.randint(-5, 5), rng.randint(1, 4)),
                                  Fr(rng.randint(-5, 5), rng.randint(1, 4)),
                                  Fr(rng.randint(-5, 5), rng.randint(1, 4)))
        _, resid = bg.split_chern_decomposition(
            (srand(), srand()), Fr(rng.randint(-5, 5), rng.randint(1, 4)),
            V=Fr(rng.randint(1, 3)))
        exact = exact and resid == 0
    checks.append(("Whitney-sum rearrangement identity exactly zero on 100 "
                   "random rational instances", exact))
    _report(7, "Bogomolov arithmetic", checks)


def test_criterion_8_determinism(tmp_path):
    from higgsext import cli
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert cli.main(["run-flow", "--scenario", "P0", "--grid", "16",
                         "--seed", "3", "--out-dir", str(out), "--quiet"]) == 0
        assert cli.main(["check-stability", "--scenario", "S0", "--grid", "16",
                         "--seed", "3", "--out-dir", str(out), "--quiet"]) == 0
        assert cli.main(["bogomolov", "--scenario", "P2", "--grid", "8",
                         "--seed", "3", "--out-dir", str(out), "--quiet"]) == 0
    names = ("P0_trace.csv", "P0_report.json", "P0_metric.npy",
             "S0_stability.json", "P2_bogomolov.json")
    same = all((a / n).read_bytes() == (b / n).read_bytes() for n in names)
    _report(8, "determinism",
            [(f"byte-identical outputs for {len(names)} artifacts", same)])
