import numpy as np
import pytest

from higgsext import flow as fl
from higgsext import higgs_bundle as hb
from higgsext import scenarios as sc


@pytest.fixture(scope="session")
def scen32():
    return {name: sc.make_scenario(name, N=32)
            for name in ("S0", "S1", "S2", "U0", "P0", "X0")}


@pytest.fixture(scope="session")
def scen64():
    return {name: sc.make_scenario(name, N=64) for name in ("S0", "X0")}


@pytest.fixture(scope="session")
def flow_results(scen32):
    """All desk-scale flow runs, shared across test modules."""
    out = {}
    for name in ("S0", "S1", "S2"):
        s = scen32[name]
        out[name] = fl.run_flow(s.ext, s.alpha_an,
                                fl.FlowOptions(max_iters=5000))
    p0 = scen32["P0"]
    out["P0"] = fl.run_flow(p0.ext, p0.alpha_an, fl.FlowOptions(max_iters=10))
    rng = np.random.default_rng(0)
    K = hb.HermitianMetric.background(p0.ext)
    s0 = hb.random_direction(p0.ext, K, rng, mmax=1, scale=0.3)
    out["P0_perturbed"] = fl.run_flow(p0.ext, p0.alpha_an,
                                      fl.FlowOptions(max_iters=4000), s0=s0)
    u0 = scen32["U0"]
    out["U0"] = fl.run_flow(u0.ext, u0.alpha_an,
                            fl.FlowOptions(max_iters=4000, sup_s_cap=8.0))
    s0s = scen32["S0"]
    out["alpha0"] = fl.run_flow(s0s.ext, 0.0, fl.FlowOptions(max_iters=5000))
    return out
