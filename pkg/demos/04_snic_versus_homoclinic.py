"""Region I fires through a SNIC; Region IV through a homoclinic loop.

The Region I point (0, 0.03) has a competitive resting state. Its fold sits on
an invariant circle, so the frequency falls to zero at onset, and no
saddle-homoclinic connection exists between I* and the fold.
"""
import numpy as np

from mirrorfhn import I_STAR, BracketInvalid, ModelParams, detect_snic, find_homoclinic, find_limit_cycle
from mirrorfhn.continuation import branch_folds
from mirrorfhn.gspt import latency_scaling

p = ModelParams(0.02, I_STAR, 0.0, 0.03)
fold = [f for f in branch_folds(p) if abs(f.location.v + 1) < 0.05][0]
print(f"fold at I = {fold.i_crit:.8f}, SNIC: {detect_snic(p, fold)}")
try:
    find_homoclinic(p)
except BracketInvalid as exc:
    print("homoclinic search:", exc)

print("\nfrequency above the SNIC")
for d in np.logspace(-9, -3, 7):
    c = find_limit_cycle(p.with_current(fold.i_crit + d), slow_budget=20000)
    print(f"  dI = {d:.0e}  period = {c.period:10.1f}  f = {c.frequency:.3e}")

print("\nspike latency after a step to I_fold + dI (eps = 0.02)")
for name, pt in (("I", (0.0, 0.03)), ("IV", (-0.3, -0.1586))):
    s = latency_scaling(*pt, 0.02)
    print(f"  Region {name}: slope {s.fit['slope']:.3f}, max/min {s.fit['ratio_max_min']:.1f}")
