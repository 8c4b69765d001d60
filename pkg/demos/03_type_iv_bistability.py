"""Type IV: a saddle-homoclinic orbit before the fold.

For (V0, n0) = (-0.3, -0.1586) the resting node and the saddle are both
cooperative (n < 0). The spiking cycle is born in a saddle-homoclinic
bifurcation at I_SH and coexists with rest until the fold at I_SN. Below I_SH a
single spike is followed by an after-depolarization bump.
"""
from pathlib import Path

from mirrorfhn import I_STAR, ModelParams, bifurcation_diagram, detect_adp, find_homoclinic
from mirrorfhn.classify import bistable_range
from mirrorfhn.continuation import section_gap
from mirrorfhn.io import atomic_write, bifdiag_svg

p = ModelParams(0.02, I_STAR, -0.3, -0.1586)
sh = find_homoclinic(p)
print(f"I_SH = {sh.i_crit:.10f} (I_c = {sh.i_crit - I_STAR:.3e}), bracket {sh.meta['bracket']}")
for di in (-2e-3, 0.0):
    g = section_gap(p.with_current(sh.i_crit + di))
    print(f"  gap at I_SH{di:+.0e}: {g.gap:+.3e}")

d = bifurcation_diagram(p, (0.6, 0.75), cycle_grid=16)
for b in d.points:
    print(f"  {b.kind:10s} I = {b.i_crit:.8f}  V = {b.location.v:+.5f}")
sn = [b for b in d.points if b.kind == "SN" and b.i_crit > I_STAR][0]
rng = bistable_range(p, [0.66, 0.67, 0.672, 0.675, 0.68])
print(f"bistable range {rng} vs (I_SH, I_SN) = ({sh.i_crit:.6f}, {sn.i_crit:.6f})")

adp = detect_adp(p.with_current(sh.i_crit - 0.01))
print(f"ADP at I_SH - 0.01: bump {adp.bump_height:.3f} above trough {adp.trough_v:.3f}, robust={adp.robust}")

out = Path(__file__).with_name("output")
atomic_write(out / "type_iv_bifdiag.svg", bifdiag_svg(d))
