"""What the flow does on an unstable scenario.

Below the admissible parameter range no solution exists; the metric
degenerates along the destabilizing subobject.  The trajectory tail is
eigen-analyzed into a filtration whose dominant projection identifies the
destabilizer, and the exact rational obstruction quantity is reported.
"""

from higgsext import flow as fl
from higgsext import scenarios as sc
from higgsext import stability as st

scn = sc.make_scenario("U0", N=32)
lo, hi = st.alpha_range(scn.ext.deg1, scn.ext.n1, scn.ext.deg2, scn.ext.n2)
print(f"U0: alpha = {scn.alpha_alg}, admissible range ({lo}, {hi}) "
      f"-> outside")

result = fl.run_flow(scn.ext, scn.alpha_an,
                     fl.FlowOptions(max_iters=4000, sup_s_cap=8.0))
print(f"status: {result.status} after {result.iterations} iterations "
      f"(sup|s| reached {result.traces['sup_s'][-1]:.2f})")

d = result.destabilization
print("\neigenvalue levels of the normalized tail:",
      [f"{v:+.4f}" for v in d["analysis"]["lambdas"]])
print("gaps:", [f"{v:.4f}" for v in d["analysis"]["gaps"]])
print(f"dominant projection overlap with the E1 block: "
      f"{d['dominant_overlap_E1']:.8f}")
for i, rep in enumerate(d["analysis"]["property_residuals"]):
    print(f"projection {i}: idempotency {rep['idempotency']:.1e}, "
          f"hermiticity {rep['hermiticity']:.1e}, "
          f"holomorphy {rep['holomorphy']:.1e}")
print(f"\nexact obstruction quantity Q = {d['Q']} "
      f"(nonpositive: stability fails), part signs {d['part_signs']}")
