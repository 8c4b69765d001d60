"""The transcritical organizing center and its pitchfork degeneration.

At I = 2/3 the V-nullcline n^2 = V - V^3/3 + I pinches at (-1, 0). Placing the
n-nullcline through that point (n0 = n0_star(V0)) makes (-1, 0) a degenerate
equilibrium for every V0; at V0 = v0_star the quadratic coefficient vanishes
too and the center dynamics reduce to -v^3/3.
"""
import numpy as np

from mirrorfhn import I_STAR, ModelParams, degeneracy_report, find_equilibria, k_slope, n0_star, v0_star
from mirrorfhn.normalform import center_roots

vs = v0_star()
print(f"I* = {I_STAR:.6f}, v0_star = {vs:.6f}, n0_star(v0_star) = {n0_star(vs):.6f}")

for v0 in (-1.0, -0.3, vs):
    p = ModelParams(0.02, I_STAR, v0, n0_star(v0))
    rep = degeneracy_report(p)
    # a triple root is only resolved to about cbrt(machine eps), so take the nearest state
    tc = min(find_equilibria(p), key=lambda e: abs(e.state.v + 1) + abs(e.state.n))
    print(
        f"V0 = {v0:+.4f}  k = {k_slope(v0):.4f}  quadratic coeff = {rep.coeff_quadratic:+.4f}  "
        f"pinch kind = {tc.kind} (offset {abs(tc.state.v + 1):.0e})  pitchfork = {rep.pitchfork}"
    )

# unfolding: move n0 off the transcritical line and watch the center roots split
print("\ncenter-manifold roots as n0 moves off the TC line at V0 = -0.3")
for dn in (-0.1, -0.01, 0.0, 0.01, 0.1):
    p = ModelParams(0.02, I_STAR, -0.3, n0_star(-0.3) + dn)
    print(f"  delta0 = {dn:+.2f}: roots {np.round(center_roots(p), 4)}")
