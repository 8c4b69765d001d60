"""Equilibria, their linear classification, and saddle-manifold arcs."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.optimize import brentq

from .dynamics import IntegratorOptions, Trajectory, integrate
from .model import (
    V_WINDOW,
    ModelParams,
    PhaseState,
    dn_inf,
    interaction_sign,
    jacobian,
    n_inf,
    n_nullcline,
    vector_field,
)

Kind = Literal["stable_node", "stable_focus", "unstable_node", "unstable_focus", "saddle", "degenerate"]
Branch = Literal["lower_left", "lower_right", "upper_left", "upper_middle", "upper_right", "pinch"]
Direction = Literal["unstable_plus", "unstable_minus", "stable_plus", "stable_minus"]

GRID_POINTS = 4000
DEGENERATE_TOL = 1e-9
PINCH_TOL = 1e-9


@dataclass(frozen=True)
class Equilibrium:
    state: PhaseState
    eigenvalues: tuple[complex, complex]
    kind: Kind
    branch: Branch
    interaction: str
    residual: float = 0.0
    jacobian: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def stable(self) -> bool:
        return self.kind in ("stable_node", "stable_focus")

    def as_dict(self) -> dict:
        return {
            "v": self.state.v,
            "n": self.state.n,
            "eigenvalues": [[float(np.real(z)), float(np.imag(z))] for z in self.eigenvalues],
            "kind": self.kind,
            "branch": self.branch,
            "interaction": self.interaction,
        }


@dataclass(frozen=True)
class ManifoldSeed:
    base: Equilibrium
    direction: Direction
    offset: float = 1e-6

    def __post_init__(self):
        if self.base.kind != "saddle":
            raise ValueError(f"manifold seeds need a saddle, got {self.base.kind}")
        if not 1e-8 <= self.offset <= 1e-3:
            raise ValueError(f"offset must lie in [1e-8, 1e-3], got {self.offset!r}")

    def eigenvector(self) -> np.ndarray:
        """Unit eigenvector oriented so that 'plus' has a positive V component."""
        w, vecs = np.linalg.eig(self.base.jacobian)
        w = np.real(w)
        want_unstable = self.direction.startswith("unstable")
        i = int(np.argmax(w)) if want_unstable else int(np.argmin(w))
        vec = np.real(vecs[:, i])
        vec = vec / np.linalg.norm(vec)
        if vec[0] < 0 or (vec[0] == 0 and vec[1] < 0):
            vec = -vec
        return vec if self.direction.endswith("plus") else -vec

    def start(self) -> PhaseState:
        return PhaseState.from_array(self.base.state.as_array() + self.offset * self.eigenvector())


def g_equilibrium(v, p: ModelParams):
    """V' restricted to the n-nullcline; its roots are the equilibrium abscissae."""
    v = np.asarray(v, dtype=float)
    nn = n_inf(v - p.v0) + p.n0
    return v - v**3 / 3.0 - nn * nn + p.i_app


def dg_equilibrium(v, p: ModelParams):
    v = np.asarray(v, dtype=float)
    nn = n_inf(v - p.v0) + p.n0
    return 1.0 - v * v - 2.0 * nn * dn_inf(v - p.v0)


def _linear_kind(J: np.ndarray) -> Kind:
    tr = float(np.trace(J))
    det = float(np.linalg.det(J))
    scale = max(1.0, float(np.linalg.norm(J)))
    if abs(det) < DEGENERATE_TOL * scale:
        return "degenerate"
    if det < 0:
        return "saddle"
    if abs(tr) < DEGENERATE_TOL * scale:
        return "degenerate"
    disc = tr * tr - 4.0 * det
    stab = "stable" if tr < 0 else "unstable"
    return f"{stab}_{'node' if disc >= 0 else 'focus'}"  # type: ignore[return-value]


def branch_of(s: PhaseState) -> Branch:
    if abs(s.v + 1.0) < PINCH_TOL and abs(s.n) < PINCH_TOL:
        return "pinch"
    if s.n < 0:
        return "lower_left" if s.v < -1.0 else "lower_right"
    if s.v < -1.0:
        return "upper_left"
    # 1 - V^2 changes sign at V = 1 on the upper arc
    return "upper_middle" if s.v < 1.0 else "upper_right"


def classify_equilibrium(p: ModelParams, state: PhaseState, tol: float = 1e-8) -> Equilibrium:
    f = vector_field(p, state)
    res = float(np.hypot(*f))
    if not res < tol:
        raise ValueError(f"state {state} is not an equilibrium (residual {res:.3e})")
    J = jacobian(p, state)
    ev = np.linalg.eigvals(J)
    ev = tuple(sorted((complex(z) for z in ev), key=lambda z: (z.real, z.imag)))
    eq = Equilibrium(
        state=state,
        eigenvalues=ev,
        kind=_linear_kind(J),
        branch=branch_of(state),
        interaction=interaction_sign(p, state),
        residual=res,
        jacobian=J,
    )
    return eq


def _newton_polish(p: ModelParams, v: float) -> PhaseState:
    y = np.array([v, n_nullcline(v, p)])
    f = np.array(vector_field(p, PhaseState(*y)))
    J = jacobian(p, PhaseState(*y))
    if abs(np.linalg.det(J)) > 1e-12:
        y2 = y - np.linalg.solve(J, f)
        f2 = np.array(vector_field(p, PhaseState(*y2)))
        if np.linalg.norm(f2) <= np.linalg.norm(f):
            y = y2
    return PhaseState(float(y[0]), float(y[1]))


def equilibrium_abscissae(p: ModelParams, window=V_WINDOW, points: int = GRID_POINTS) -> list[float]:
    """Roots of g on ``window``: sign changes plus touching (double) roots."""
    lo, hi = window
    vs = np.linspace(lo, hi, points)
    gv = g_equilibrium(vs, p)
    dg = dg_equilibrium(vs, p)
    roots: list[float] = []

    def solve(a, b):
        return brentq(g_equilibrium, a, b, args=(p,), xtol=1e-13, rtol=4 * np.finfo(float).eps, maxiter=200)

    for i in range(points - 1):
        a, b = vs[i], vs[i + 1]
        ga, gb = gv[i], gv[i + 1]
        if ga == 0.0:
            roots.append(a)
            continue
        extremum = dg[i] * dg[i + 1] < 0
        if extremum:
            # split the cell at the extremum so two roots in one cell are not lost
            ve = brentq(dg_equilibrium, a, b, args=(p,), xtol=1e-15, rtol=4 * np.finfo(float).eps)
            ge = float(g_equilibrium(ve, p))
            if abs(ge) < 1e-12:
                roots.append(ve)
                continue
            if ga * ge < 0:
                roots.append(solve(a, ve))
            if ge * gb < 0:
                roots.append(solve(ve, b))
        elif ga * gb < 0:
            roots.append(solve(a, b))
    if gv[-1] == 0.0:
        roots.append(hi)
    roots.sort()
    merged: list[float] = []
    for r in roots:
        if merged and abs(r - merged[-1]) < 1e-8:
            continue
        merged.append(float(r))
    return merged


def find_equilibria(p: ModelParams, window=V_WINDOW, points: int = GRID_POINTS) -> list[Equilibrium]:
    """All equilibria with V in ``window``, sorted by V."""
    out = []
    for v in equilibrium_abscissae(p, window, points):
        s = _newton_polish(p, v)
        out.append(classify_equilibrium(p, s))
    return out


def find_saddle(p: ModelParams, branch: str | None = None) -> Equilibrium | None:
    for eq in find_equilibria(p):
        if eq.kind == "saddle" and (branch is None or eq.branch == branch):
            return eq
    return None


def manifold_arc(p: ModelParams, seed: ManifoldSeed, opts: IntegratorOptions | None = None) -> Trajectory:
    """Integrate a saddle separatrix branch; stable directions run backward in time."""
    if opts is None:
        opts = IntegratorOptions(t_end=40.0 / p.epsilon, rel_tol=1e-10, abs_tol=1e-12)
    direction = 1 if seed.direction.startswith("unstable") else -1
    return integrate(p, seed.start(), opts.replace(direction=direction))
