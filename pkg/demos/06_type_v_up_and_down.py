"""Type V: coexisting down-state and up-state.

At (-1.5, -1.8682) the down-state disappears at I_SN,down and the up-state at
I_SN,up, giving an eps-independent bistable window. This point has no Hopf on
the up-state branch; the point (-0.2, -1.2) does, which places the Hopf
relative to the bistable window (the two scenarios of the up-state).
"""
from mirrorfhn import I_STAR, ModelParams, find_equilibria
from mirrorfhn.continuation import branch_folds, branch_hopfs

for pt in ((-1.5, -1.8682), (-0.2, -1.2)):
    p = ModelParams(0.02, I_STAR, *pt)
    eqs = find_equilibria(p)
    folds = [f.i_crit for f in branch_folds(p) if abs(f.i_crit - I_STAR) > 0.01]
    print(f"(V0, n0) = {pt}")
    print("  equilibria at I*:", [(round(e.state.v, 3), e.kind) for e in eqs])
    print("  folds:", [round(f, 5) for f in folds])
    print("  Hopf:", [(round(h.i_crit, 5), round(h.location.v, 3)) for h in branch_hopfs(p)] or "none")
