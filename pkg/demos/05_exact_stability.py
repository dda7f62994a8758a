"""Exact-rational stability over curves.

Slope classification with witnesses, the Gieseker clauses with their
deciding traces, the implication chain on randomized instances, spectral
fibers, and Hilbert polynomial rescaling.
"""

from fractions import Fraction as Fr

import numpy as np

from higgsext import scenarios as sc
from higgsext import stability as st

for name in ("S0", "U0", "P0", "S2", "X0"):
    scn = sc.make_scenario(name, N=32)
    status, witness = st.is_slope_stable(scn.stability)
    gs, _ = st.gieseker_classify(scn.stability)
    wtxt = "" if witness is None else \
        f"  worst subobject: rk {witness.rk}, deg {witness.deg}"
    print(f"{name} at alpha = {scn.stability.alpha}: {status} / {gs}{wtxt}")

# the boundary of the admissible range is exactly the semistable locus
for alpha in (Fr(-1, 2), Fr(-1), Fr(-3, 2)):
    subs = (st.SubobjectProfile(1, Fr(-1), 1, Fr(-1), 0, Fr(0)),
            st.SubobjectProfile(1, Fr(0), 0, Fr(0), 1, Fr(0)))
    scn = st.StabilityScenario(curve=st.CurveData(genus=1), n=2, deg=Fr(-1),
                               rk2=1, deg2=Fr(0), subobjects=subs, alpha=alpha)
    print(f"split profile at alpha = {alpha}: {st.is_slope_stable(scn)[0]}")

report = st.implication_check(count=10_000, seed=0)
print(f"\nimplication chain (slope stable => Gieseker stable => Gieseker "
      f"semistable => slope semistable): {report['checked']} random "
      f"instances, {report['violations']} violations")

print("\nspectral fiber of [[0,1],[1,0]]:", st.spectral_fiber([[0, 1], [1, 0]]))
print("spectral fiber of a nilpotent:  ", st.spectral_fiber([[0, 1], [0, 0]]))

P = st.hilbert_poly(st.CurveData(genus=1, h=1), 1, 0)
print(f"\nHilbert polynomial of a degree-0 line bundle on an elliptic curve: "
      f"{P[1]}*m + {P[0]}; pulled back through a degree-3 twist: "
      f"{st.hilbert_rescale(P, 3)[1]}*m + {st.hilbert_rescale(P, 3)[0]}")
