"""One-parameter analysis in I_app.

The equilibrium set is the graph ``I(V) = (n_inf(V - V0) + n0)**2 + V**3/3 - V``,
so branches, folds and Hopf points are computed from closed forms rather than
by pseudo-arclength continuation. Cycles and the saddle-homoclinic current are
found by simulation.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .dynamics import IntegratorOptions, Section, Trajectory, integrate
from .equilibria import Equilibrium, ManifoldSeed, classify_equilibrium, find_equilibria, manifold_arc
from .model import I_STAR, V_WINDOW, ModelParams, PhaseState, d2n_inf, dn_inf, n_inf

FOLD_XTOL = 1e-12
DEFAULT_RHO = -0.1
DEFAULT_SECTION_WINDOW = (-2.5, 0.5)
SNIC_OFFSET = 1e-3
SNIC_PROXIMITY = 0.05
TC_TOL = 1e-6


class CycleAmbiguous(RuntimeError):
    """Neither convergence nor periodicity was established within the budget."""


class SectionError(RuntimeError):
    """An arc did not cross the section inside the window."""

    def __init__(self, msg: str, outcome: str):
        super().__init__(msg)
        self.outcome = outcome


class BracketInvalid(RuntimeError):
    """The gap has no sign change on the bracket: no homoclinic there."""


@dataclass(frozen=True)
class BifurcationPoint:
    kind: str
    i_crit: float
    location: PhaseState
    residual: float
    meta: dict = field(default_factory=dict, compare=False)

    def as_dict(self) -> dict:
        meta = {k: v for k, v in self.meta.items() if not isinstance(v, Trajectory)}
        return {
            "kind": self.kind,
            "i_crit": self.i_crit,
            "v": self.location.v,
            "n": self.location.n,
            "residual": self.residual,
            "meta": meta,
        }


@dataclass(frozen=True)
class EquilibriumBranch:
    params: ModelParams
    v: np.ndarray
    i_app: np.ndarray
    points: tuple[tuple[float, Equilibrium], ...]
    folds: tuple[BifurcationPoint, ...]
    hopfs: tuple[BifurcationPoint, ...]

    @property
    def stable(self) -> np.ndarray:
        return np.array([eq.stable for _, eq in self.points])

    def fold_adjacent(self, v: float) -> tuple[Optional[BifurcationPoint], Optional[BifurcationPoint]]:
        """Nearest folds left and right of abscissa ``v``."""
        left = [f for f in self.folds if f.location.v < v]
        right = [f for f in self.folds if f.location.v > v]
        return (left[-1] if left else None, right[0] if right else None)


@dataclass(frozen=True)
class LimitCycle:
    i_app: float
    period: float
    v_min: float
    v_max: float
    orbit: Trajectory = field(repr=False, compare=False)
    closure: float = 0.0

    @property
    def frequency(self) -> float:
        return 1.0 / self.period


@dataclass(frozen=True)
class SectionGap:
    rho: float
    q_a: float
    q_r: float
    v_window: tuple[float, float]

    @property
    def gap(self) -> float:
        return self.q_a - self.q_r


# --- the branch graph ---------------------------------------------------------


def branch_current(v, v0: float, n0: float):
    v = np.asarray(v, dtype=float)
    nn = n_inf(v - v0) + n0
    out = nn * nn + v**3 / 3.0 - v
    return float(out) if out.ndim == 0 else out


def branch_slope(v, v0: float, n0: float):
    """dI/dV along the equilibrium graph."""
    v = np.asarray(v, dtype=float)
    nn = n_inf(v - v0) + n0
    out = 2.0 * nn * dn_inf(v - v0) + v * v - 1.0
    return float(out) if out.ndim == 0 else out


def branch_curvature(v, v0: float, n0: float):
    v = np.asarray(v, dtype=float)
    x = v - v0
    nn = n_inf(x) + n0
    out = 2.0 * (dn_inf(x) ** 2 + nn * d2n_inf(x)) + 2.0 * v
    return float(out) if out.ndim == 0 else out


def _state_on_branch(v: float, p: ModelParams) -> PhaseState:
    return PhaseState(float(v), float(n_inf(v - p.v0) + p.n0))


def _fold_point(v: float, p: ModelParams) -> BifurcationPoint:
    i_c = branch_current(v, p.v0, p.n0)
    s = _state_on_branch(v, p)
    curv = branch_curvature(v, p.v0, p.n0)
    kind = "SN"
    meta = {"curvature": curv, "snic": None}
    if abs(s.v + 1.0) < TC_TOL and abs(s.n) < TC_TOL and abs(i_c - I_STAR) < TC_TOL:
        kind = "pitchfork" if abs(curv) < 1e-6 else "TC"
    return BifurcationPoint(kind, i_c, s, abs(branch_slope(v, p.v0, p.n0)), meta)


def equilibrium_branch(p_base: ModelParams, v_range=V_WINDOW, resolution: int = 4000) -> EquilibriumBranch:
    """Tabulate the equilibrium graph over ``v_range`` with folds and Hopf points."""
    v0, n0, eps = p_base.v0, p_base.n0, p_base.epsilon
    vs = np.linspace(v_range[0], v_range[1], resolution)
    ic = branch_current(vs, v0, n0)
    points = tuple(
        (float(i), classify_equilibrium(p_base.with_current(i), _state_on_branch(v, p_base), tol=1e-9))
        for v, i in zip(vs, ic)
    )
    folds = branch_folds(p_base, v_range, resolution)
    hopfs = branch_hopfs(p_base, v_range)
    return EquilibriumBranch(p_base, vs, ic, points, tuple(folds), tuple(hopfs))


def branch_folds(p_base: ModelParams, v_range=V_WINDOW, resolution: int = 4000) -> list[BifurcationPoint]:
    """Zeros of dI/dV, i.e. saddle-node points, sorted by V."""
    v0, n0 = p_base.v0, p_base.n0
    vs = np.linspace(v_range[0], v_range[1], resolution)
    di = branch_slope(vs, v0, n0)
    folds = []
    for j in np.nonzero(di[:-1] * di[1:] < 0)[0]:
        vf = brentq(branch_slope, vs[j], vs[j + 1], args=(v0, n0), xtol=FOLD_XTOL, rtol=4 * np.finfo(float).eps)
        folds.append(_fold_point(vf, p_base))
    for j in np.nonzero(di == 0.0)[0]:
        folds.append(_fold_point(vs[j], p_base))
    folds.sort(key=lambda f: f.location.v)
    return folds


def branch_hopfs(p_base: ModelParams, v_range=V_WINDOW) -> list[BifurcationPoint]:
    v0, n0, eps = p_base.v0, p_base.n0, p_base.epsilon
    hopfs = []
    if eps < 1.0:
        # tr J = 1 - V^2 - eps vanishes at V = +-sqrt(1 - eps); det J = eps dI/dV
        for vh in (-np.sqrt(1.0 - eps), np.sqrt(1.0 - eps)):
            if not v_range[0] <= vh <= v_range[1]:
                continue
            if branch_slope(vh, v0, n0) <= 0:
                continue
            i_h = branch_current(vh, v0, n0)
            s = _state_on_branch(vh, p_base)
            eq = classify_equilibrium(p_base.with_current(i_h), s, tol=1e-9)
            res = max(abs(z.real) for z in eq.eigenvalues)
            omega = abs(eq.eigenvalues[-1].imag)
            hopfs.append(
                BifurcationPoint(
                    "Hopf",
                    i_h,
                    s,
                    res,
                    {"omega": omega, "natural_frequency": omega / (2 * np.pi), "det": eps * branch_slope(vh, v0, n0)},
                )
            )
    return hopfs


def resting_folds(p: ModelParams, eq: Equilibrium, branch: Optional[EquilibriumBranch] = None):
    """Folds bounding the stable segment that contains ``eq``: (lower-I end, upper-I end)."""
    folds = branch.folds if branch is not None else branch_folds(p)
    left = [f for f in folds if f.location.v < eq.state.v]
    right = [f for f in folds if f.location.v > eq.state.v]
    left, right = (left[-1] if left else None), (right[0] if right else None)
    ends = [f for f in (left, right) if f is not None]
    lo = [f for f in ends if f.i_crit < p.i_app]
    hi = [f for f in ends if f.i_crit > p.i_app]
    return (max(lo, key=lambda f: f.i_crit) if lo else None, min(hi, key=lambda f: f.i_crit) if hi else None)


# --- limit cycles -------------------------------------------------------------


def _launch(p: ModelParams) -> PhaseState:
    return PhaseState(-2.5, p.n0 + 1.0)


def _periodic(times: list[float], count: int, rel: float) -> bool:
    if len(times) < count + 1:
        return False
    isi = np.diff(times[-(count + 1):])
    return bool(np.all(np.abs(isi - isi[-1]) <= rel * isi[-1]))


def find_limit_cycle(
    p: ModelParams,
    launch: Optional[PhaseState] = None,
    slow_budget: float = 50.0,
    intervals: int = 4,
    rel: float = 1e-4,
    opts: Optional[IntegratorOptions] = None,
) -> Optional[LimitCycle]:
    """Simulate from ``launch`` and return the attracting cycle it settles on, if any.

    Periodicity means ``intervals`` successive inter-spike intervals agreeing to
    ``rel``. Returns None on convergence to an equilibrium. Cycles that never
    reach the spike threshold are detected on the mid-amplitude level instead.
    """
    s = launch or _launch(p)
    budget = slow_budget / p.epsilon
    base = opts or IntegratorOptions()
    chunk = base.replace(t_end=budget, max_spikes=intervals + 4, stop_on_convergence=True)
    times: list[float] = []
    elapsed = 0.0
    y = s.as_array()
    while elapsed < budget:
        tr = integrate(p, y, chunk.replace(t_end=budget - elapsed))
        times.extend(elapsed + t for t in tr.spike_times)
        if tr.status == "converged":
            return None
        if tr.status == "window_exit":
            raise CycleAmbiguous(f"trajectory left the window at I={p.i_app}")
        if _periodic(times, intervals, rel):
            start = PhaseState.from_array(np.atleast_2d(tr.at(tr.spike_times[-1]))[0])
            return _cycle_from_spikes(p, start, times[-1] - times[-2], base)
        elapsed += float(tr.t[-1])
        y = tr.y[-1]
        if tr.status == "t_end":
            break
    return _small_cycle(p, PhaseState.from_array(y), intervals, rel, base)


def _cycle_from_spikes(p: ModelParams, s: PhaseState, period_guess: float, opts: IntegratorOptions) -> LimitCycle:
    # s sits on a spike crossing; one more period traces the closed orbit
    tr = integrate(p, s, opts.replace(t_end=2.0 * period_guess, max_spikes=2, stop_on_convergence=False))
    # s lies on the crossing itself, which may register as a spike at t ~ 0
    st = [t for t in tr.spike_times if t > 0.5 * period_guess]
    period = st[0] if st else period_guess
    end = np.atleast_2d(tr.at(period))[0]
    closure = float(np.hypot(*(end - s.as_array())))
    sel = tr.t <= period
    return LimitCycle(
        i_app=p.i_app,
        period=float(period),
        v_min=float(tr.v[sel].min()),
        v_max=float(max(tr.v[sel].max(), end[0])),
        orbit=tr,
        closure=closure,
    )


def _small_cycle(p, s, intervals, rel, opts) -> LimitCycle:
    """Fallback for sub-threshold cycles: crossings of the mid-amplitude level."""
    probe = integrate(p, s, opts.replace(t_end=20.0 / p.epsilon, stop_on_convergence=True))
    if probe.status == "converged":
        return None
    half = probe.t >= probe.t[-1] / 2
    lo, hi = probe.v[half].min(), probe.v[half].max()
    if hi - lo < 1e-6:
        raise CycleAmbiguous(f"slow drift without convergence at I={p.i_app}")
    level = 0.5 * (lo + hi)
    o = opts.replace(spike_threshold=level, stop_on_convergence=False)
    tr = integrate(p, probe.y[-1], o.replace(t_end=20.0 / p.epsilon, max_spikes=intervals + 2))
    times = tr.spike_times
    if not _periodic(times, intervals, rel):
        raise CycleAmbiguous(f"no periodicity established at I={p.i_app}")
    start = PhaseState.from_array(np.atleast_2d(tr.at(times[-1]))[0])
    return _cycle_from_spikes(p, start, times[-1] - times[-2], o)


def detect_snic(
    p: ModelParams,
    fold: BifurcationPoint,
    delta: float = SNIC_OFFSET,
    proximity: float = SNIC_PROXIMITY,
    require_absent_below: bool = True,
) -> bool:
    """Whether the fold sits on an invariant circle.

    Above the fold a stable cycle must pass within ``proximity`` of the fold
    point. With ``require_absent_below`` the launch from the far side of the
    fold just below it must also settle to rest, which separates a SNIC from a
    fold that lies inside a pre-existing cycle's neighbourhood.
    """
    if fold.kind not in ("SN", "SNIC"):
        raise ValueError(f"expected a saddle-node point, got {fold.kind}")
    above = p.with_current(fold.i_crit + delta)
    try:
        cyc = find_limit_cycle(above, launch=fold.location)
    except CycleAmbiguous:
        return False
    if cyc is None:
        return False
    sel = cyc.orbit.t <= cyc.period
    d = np.hypot(cyc.orbit.v[sel] - fold.location.v, cyc.orbit.n[sel] - fold.location.n).min()
    if d >= proximity:
        return False
    if require_absent_below:
        below = p.with_current(fold.i_crit - delta)
        try:
            if find_limit_cycle(below) is not None:
                return False
        except CycleAmbiguous:
            return False
    return True


# --- section gap and homoclinic -------------------------------------------------


def _homoclinic_saddle(p: ModelParams) -> Optional[Equilibrium]:
    """The saddle nearest the transcritical point, where the homoclinic loop lives."""
    saddles = [e for e in find_equilibria(p) if e.kind == "saddle"]
    if not saddles:
        return None
    return min(saddles, key=lambda e: np.hypot(e.state.v + 1.0, e.state.n))


def default_rho(p: ModelParams) -> float:
    """Section height between the cooperative saddle at I* and n = 0, else -0.1."""
    sad = _homoclinic_saddle(p.with_current(I_STAR))
    if sad is not None and sad.state.n < 0:
        return 0.4 * sad.state.n
    return DEFAULT_RHO


def _arc_opts(p: ModelParams) -> IntegratorOptions:
    return IntegratorOptions(t_end=40.0 / p.epsilon, rel_tol=1e-10, abs_tol=1e-12)


def _unstable_opts(p: ModelParams, sad: Equilibrium) -> IntegratorOptions:
    # near a fold the unstable eigenvalue is tiny, so the departure takes ~ log(1/offset)/lambda;
    # convergence stopping is off because the slow departure mimics convergence
    lam = max(z.real for z in sad.eigenvalues)
    t_end = max(40.0 / p.epsilon, 40.0 / lam)
    return _arc_opts(p).replace(t_end=t_end, stop_on_convergence=False)


def _unstable_outcome(p, sad, rho, v_window, offset):
    """('cross', q_a) | ('escape', None) | ('return', None) | ('lost', None)."""
    seed = ManifoldSeed(sad, "unstable_plus", offset)
    sec = Section(rho, v_window, direction=-1, arm_on_spike=True)
    tr = manifold_arc(p, seed, _unstable_opts(p, sad).replace(section=sec, max_section_crossings=1, max_spikes=2))
    crossings = tr.events_of("section_cross")
    spikes = tr.spike_times
    if crossings and (len(spikes) < 2 or crossings[0].t < spikes[1]):
        return "cross", crossings[0].payload["v"], tr
    if len(spikes) >= 2:
        return "escape", None, tr
    if len(spikes) == 1:
        return "return", None, tr
    return "lost", None, tr


def _stable_crossing(p, sad, rho, v_window, offset):
    # take the stable branch heading toward the section (n increases backward if rho is above)
    seed = ManifoldSeed(sad, "stable_plus", offset)
    vec = seed.eigenvector()
    toward = 1 if rho > sad.state.n else -1
    if np.sign(vec[1]) != toward:
        seed = ManifoldSeed(sad, "stable_minus", offset)
    sec = Section(rho, v_window, direction=toward)
    tr = manifold_arc(p, seed, _arc_opts(p).replace(section=sec, max_section_crossings=1))
    crossings = tr.events_of("section_cross")
    if not crossings:
        raise SectionError(f"stable arc misses n={rho} inside {v_window} at I={p.i_app}", "stable_miss")
    return crossings[0].payload["v"], tr


def section_gap(
    p: ModelParams,
    rho: Optional[float] = None,
    v_window=DEFAULT_SECTION_WINDOW,
    offset: float = 1e-8,
) -> SectionGap:
    """Signed distance q_a - q_r between the saddle's unstable and stable arcs on n = rho."""
    if rho is None:
        rho = default_rho(p)
    if not rho < 0:
        raise ValueError(f"section height must be negative, got {rho!r}")
    if not rho > p.n0:
        raise ValueError(f"section height {rho} lies below the strip floor n0={p.n0}")
    sad = _homoclinic_saddle(p)
    if sad is None:
        raise SectionError(f"no saddle at I={p.i_app}", "no_saddle")
    outcome, q_a, _ = _unstable_outcome(p, sad, rho, v_window, offset)
    if outcome != "cross":
        raise SectionError(f"unstable arc does not cross n={rho} inside {v_window} ({outcome})", outcome)
    q_r, _ = _stable_crossing(p, sad, rho, v_window, offset)
    return SectionGap(rho=rho, q_a=float(q_a), q_r=float(q_r), v_window=tuple(v_window))


def gap_sign(p: ModelParams, rho: Optional[float] = None, v_window=DEFAULT_SECTION_WINDOW, offset: float = 1e-8) -> int:
    """Sign of q_a - q_r, extended to arcs that never reach the section.

    An unstable arc that fires a second spike has passed right of the stable
    manifold (+1); one that settles to rest has stayed left of it (-1).
    """
    if rho is None:
        rho = default_rho(p)
    sad = _homoclinic_saddle(p)
    if sad is None:
        raise SectionError(f"no saddle at I={p.i_app}", "no_saddle")
    outcome, q_a, _ = _unstable_outcome(p, sad, rho, v_window, offset)
    if outcome == "escape":
        return 1
    if outcome == "return":
        return -1
    if outcome == "lost":
        raise SectionError(f"unstable arc undetermined at I={p.i_app}", "lost")
    q_r, _ = _stable_crossing(p, sad, rho, v_window, offset)
    return int(np.sign(q_a - q_r))


def lower_fold(p_base: ModelParams) -> Optional[BifurcationPoint]:
    """The fold at which the cooperative resting node disappears as I increases."""
    p = p_base.with_current(I_STAR)
    rest = [e for e in find_equilibria(p) if e.stable and e.state.n < 0]
    if not rest:
        return None
    _, hi = resting_folds(p, rest[0])
    return hi


def find_homoclinic(
    p_base: ModelParams,
    i_bracket: Optional[tuple[float, float]] = None,
    rho: Optional[float] = None,
    v_window=DEFAULT_SECTION_WINDOW,
    tol: float = 1e-10,
) -> BifurcationPoint:
    """Saddle-homoclinic current by bisection on the sign of the section gap."""
    if i_bracket is None:
        fold = lower_fold(p_base)
        if fold is None:
            raise BracketInvalid("no cooperative resting node, hence no default bracket")
        i_bracket = (I_STAR - 0.05, fold.i_crit - 1e-6)
    if rho is None:
        rho = default_rho(p_base)
    lo, hi = map(float, i_bracket)

    def sign(i):
        try:
            return gap_sign(p_base.with_current(i), rho, v_window)
        except SectionError:
            return 0

    # 5-point scan; shrink to the first sign change if the signs are not monotone
    grid = np.linspace(lo, hi, 5)
    signs = [sign(i) for i in grid]
    changes = [j for j in range(4) if signs[j] < 0 < signs[j + 1]]
    if not changes:
        raise BracketInvalid(f"gap sign does not change on [{lo}, {hi}] (signs {signs})")
    monotone = all(a <= b for a, b in zip(signs, signs[1:]))
    j = changes[0]
    lo, hi = float(grid[j]), float(grid[j + 1])
    while hi - lo >= tol:
        mid = 0.5 * (lo + hi)
        s = sign(mid)
        if s == 0:
            break
        if s < 0:
            lo = mid
        else:
            hi = mid
    p_c = p_base.with_current(lo)
    sad = _homoclinic_saddle(p_c)
    residual = np.nan
    for i in (lo, hi):
        try:
            residual = np.nanmin([residual, abs(section_gap(p_base.with_current(i), rho, v_window).gap)])
        except (SectionError, ValueError):
            pass
    meta = {"bracket": (lo, hi), "rho": rho, "monotone_scan": monotone, "scan_signs": signs}
    try:
        loop = homoclinic_loop(p_c, rho, v_window)
        meta.update(loop=loop, closure=loop.closure, stitch=loop.stitch)
    except SectionError:
        pass
    return BifurcationPoint("homoclinic", lo, sad.state, float(residual), meta)


@dataclass(frozen=True)
class HomoclinicLoop:
    """Unstable arc up to the section, joined to the stable arc from the section back to the saddle."""

    saddle: PhaseState
    states: np.ndarray
    stitch: float

    @property
    def closure(self) -> float:
        return float(np.hypot(*(self.states[-1] - self.saddle.as_array())))


def homoclinic_loop(p: ModelParams, rho: Optional[float] = None, v_window=DEFAULT_SECTION_WINDOW, offset: float = 1e-8) -> HomoclinicLoop:
    if rho is None:
        rho = default_rho(p)
    sad = _homoclinic_saddle(p)
    if sad is None:
        raise SectionError(f"no saddle at I={p.i_app}", "no_saddle")
    outcome, _, tr_a = _unstable_outcome(p, sad, rho, v_window, offset)
    if outcome != "cross":
        raise SectionError(f"unstable arc does not reach the section ({outcome})", outcome)
    t_a = tr_a.events_of("section_cross")[0].t
    _, tr_r = _stable_crossing(p, sad, rho, v_window, offset)
    t_r = tr_r.events_of("section_cross")[0].t
    a = np.vstack([tr_a.y[tr_a.t < t_a], np.atleast_2d(tr_a.at(t_a))])
    # the stable arc was integrated backward; reverse it so the loop runs forward in time
    r = np.vstack([np.atleast_2d(tr_r.at(t_r)), tr_r.y[tr_r.t < t_r][::-1]])
    r = np.vstack([r, sad.state.as_array()[None, :]])
    return HomoclinicLoop(sad.state, np.vstack([a, r]), float(np.hypot(*(a[-1] - r[0]))))


# --- diagrams -----------------------------------------------------------------


def hopf_criticality(p_base: ModelParams, hopf: BifurcationPoint, delta: float = 1e-3) -> str:
    """'supercritical' if a small stable cycle is born on the unstable side, else 'subcritical'."""
    for side in (1, -1):
        p = p_base.with_current(hopf.i_crit + side * delta)
        eqs = [e for e in find_equilibria(p) if abs(e.state.v - hopf.location.v) < 0.1]
        if eqs and not eqs[0].stable:
            kick = PhaseState(eqs[0].state.v + 1e-3, eqs[0].state.n)
            try:
                cyc = find_limit_cycle(p, launch=kick, slow_budget=200.0)
            except CycleAmbiguous:
                return "undetermined"
            if cyc is not None and cyc.v_max - cyc.v_min < 0.5:
                return "supercritical"
            return "subcritical"
    return "undetermined"


@dataclass(frozen=True)
class BifurcationDiagram:
    params: ModelParams
    i_range: tuple[float, float]
    branch: EquilibriumBranch
    cycles: tuple[tuple[float, Optional[LimitCycle]], ...]
    points: tuple[BifurcationPoint, ...]

    def kinds(self) -> list[str]:
        return [b.kind for b in self.points]

    def stable_at(self, i_app: float) -> list[PhaseState]:
        """Stable equilibria at ``i_app`` according to the diagram."""
        p = self.params.with_current(i_app)
        return [e.state for e in find_equilibria(p) if e.stable]

    def cycle_at(self, i_app: float) -> bool:
        """Whether the tabulated cycle branch is present at ``i_app`` (nearest grid point)."""
        if not self.cycles:
            return False
        grid = np.array([c[0] for c in self.cycles])
        j = int(np.argmin(np.abs(grid - i_app)))
        return self.cycles[j][1] is not None

    def branch_rows(self) -> list[dict]:
        rows = []
        for (i, eq), v in zip(self.branch.points, self.branch.v):
            if self.i_range[0] <= i <= self.i_range[1]:
                rows.append({"i_app": i, "v": eq.state.v, "n": eq.state.n, "kind": eq.kind, "stable": eq.stable})
        return rows

    def cycle_rows(self) -> list[dict]:
        return [
            {
                "i_app": i,
                "present": c is not None,
                "period": c.period if c else np.nan,
                "v_min": c.v_min if c else np.nan,
                "v_max": c.v_max if c else np.nan,
            }
            for i, c in self.cycles
        ]

    def to_json_dict(self) -> dict:
        return {
            "params": self.params.as_dict(),
            "i_range": list(self.i_range),
            "points": [b.as_dict() for b in self.points],
            "cycles": self.cycle_rows(),
        }


def bifurcation_diagram(
    p_base: ModelParams,
    i_range: tuple[float, float],
    cycle_grid: int = 21,
    homoclinic: bool = True,
    criticality: bool = False,
    launch: Optional[PhaseState] = None,
) -> BifurcationDiagram:
    """Equilibrium branch, cycle branch on a grid and every bifurcation point in ``i_range``."""
    lo, hi = i_range
    branch = equilibrium_branch(p_base)
    pts = [f for f in branch.folds if lo <= f.i_crit <= hi]
    for h in branch.hopfs:
        if lo <= h.i_crit <= hi:
            if criticality:
                h = BifurcationPoint(h.kind, h.i_crit, h.location, h.residual, {**h.meta, "criticality": hopf_criticality(p_base, h)})
            pts.append(h)
    annotated = []
    for f in pts:
        if f.kind == "SN":
            snic = detect_snic(p_base, f)
            f = BifurcationPoint("SNIC" if snic else "SN", f.i_crit, f.location, f.residual, {**f.meta, "snic": snic})
        annotated.append(f)
    pts = annotated
    if homoclinic:
        try:
            h = find_homoclinic(p_base)
            if lo <= h.i_crit <= hi:
                pts.append(h)
        except BracketInvalid:
            pass
    cycles = []
    if cycle_grid > 0:
        for i in np.linspace(lo, hi, cycle_grid):
            try:
                c = find_limit_cycle(p_base.with_current(i), launch=launch)
            except CycleAmbiguous:
                c = None
            cycles.append((float(i), c))
    pts.sort(key=lambda b: b.i_crit)
    return BifurcationDiagram(p_base, (lo, hi), branch, tuple(cycles), tuple(pts))
