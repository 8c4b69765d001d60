"""Slow-fast decomposition and the epsilon -> 0 limit of the homoclinic current.

The singular orbit of the Region IV point jumps to the right branch, drifts to
the upper fold, drops to the left attracting branch, slides into the pinch and
continues on the lower sheet to the node. As eps shrinks, I_SH approaches I*.
"""
from mirrorfhn import I_STAR, ModelParams, PhaseState, ic_sweep, singular_orbit
from mirrorfhn.gspt import bistability_persistence

p = ModelParams(0.02, I_STAR, -0.3, -0.1586)
for seg in singular_orbit(p, PhaseState(0.0, 0.5)):
    print("  %-8s %-8s %s" % seg)

study = ic_sweep(-0.3, -0.1586)
print("\nI_c by epsilon")
for e, v, lam in zip(study.x, study.values, study.meta["lambda_c"]):
    print(f"  eps = {e:<6} I_c = {v:.6e}  I_c/eps = {lam:.4f}")

bp = bistability_persistence(-0.3, -0.1586)
print("\nbistable width by epsilon:", [f"{w:.5f}" for w in bp.values])
