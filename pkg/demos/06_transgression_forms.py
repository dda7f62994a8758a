"""Secondary characteristic forms for pairs of metrics.

The difference of an invariant polynomial of two Higgs curvatures is
i dbar del of a path-integral transgression form.  Arity one is exactly
path independent; arity two underlies the Simpson-type energy whose
critical points solve the deformed Hermitian-Einstein equation.
"""

import numpy as np

from higgsext import functional as fn
from higgsext import higgs_bundle as hb
from higgsext import scenarios as sc

scn = sc.make_scenario("X0", N=64)   # active nilpotent Higgs coupling
ext = scn.ext
K = hb.HermitianMetric.background(ext)
rng = np.random.default_rng(4)
H = hb.HermitianMetric.from_s(ext, hb.random_direction(ext, K, rng, mmax=1,
                                                       scale=0.3))
pathA = fn.MetricPath.exponential(ext, H, K)
pathB = fn.MetricPath.two_segment(
    ext, H, K, hb.random_direction(ext, K, rng, mmax=1, scale=0.15))

r1a = fn.r_higgs(fn.trace_poly(), ext, pathA)
r1b = fn.r_higgs(fn.trace_poly(), ext, pathB)
th1, _ = fn.transgression_residual(fn.trace_poly(), ext, pathA)
print(f"arity 1: theorem residual {th1:.2e}; "
      f"exact path independence {(r1a - r1b).sup_norm():.2e}")

msA = fn.m_simpson(ext, H, K, path=pathA)
msB = fn.m_simpson(ext, H, K, path=pathB)
print(f"arity 2 on a curve: energy along two paths "
      f"{msA:.8f} vs {msB:.8f} (difference {abs(msA - msB):.2e})")

# on a two-variable base the full identity phi(H) - phi(K) = i dbar del R
# is nontrivial for arity 2
x2 = sc.make_scenario("X2", N=16)
K2 = hb.HermitianMetric.background(x2.ext)
rng2 = np.random.default_rng(3)
H2 = hb.HermitianMetric.from_s(
    x2.ext, hb.random_direction(x2.ext, K2, rng2, mmax=1, scale=0.05))
pA = fn.MetricPath.exponential(x2.ext, H2, K2)
pB = fn.MetricPath.two_segment(
    x2.ext, H2, K2, hb.random_direction(x2.ext, K2, rng2, mmax=1, scale=0.025))
th2, pi2 = fn.transgression_residual(fn.pair_poly(), x2.ext, pA, pB)
print(f"arity 2, two variables: theorem residual {th2:.2e}, "
      f"path independence {pi2:.2e}")

# the energy's variational identities, checked against finite differences
s = hb.random_direction(ext, K, rng, mmax=1, scale=0.4)
_, _, rel1 = fn.first_variation_check(ext, K, s, scn.alpha_an, t=0.3)
lhs, rhs, rel2 = fn.second_variation_check(ext, K, s, scn.alpha_an)
print(f"\nfirst variation vs moment-map formula: relative error {rel1:.2e}")
print(f"second variation {lhs:+.4f} vs 2(|nabla'' s|^2 - alpha |u|^2) "
      f"= {rhs:+.4f} (relative error {rel2:.2e})")
