"""Singular-limit objects and the epsilon-scaling experiments.

The critical manifold is the V-nullcline ``n**2 = a(V)`` with
``a(V) = V - V**3/3 + I``. Its attracting parts have ``1 - V**2 < 0``. Branch
names follow the usual convention: ``S_a+``/``S_r+`` lie above the
transcritical point (n > 0), ``S_a-``/``S_r-`` below it, and ``S_right`` is
the attracting plateau V > 1 that carries the spike.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .classify import bistable_range, loglog_slope, measure_latency, resting_state
from .continuation import (
    BracketInvalid,
    SectionError,
    branch_folds,
    find_homoclinic,
    gap_sign,
    lower_fold,
    resting_folds,
    section_gap,
)
from .dynamics import IntegratorOptions, Trajectory, integrate_layer
from .equilibria import find_equilibria
from .model import I_STAR, ModelParams, PhaseState, n_inf

DEFAULT_EPSILONS = (0.05, 0.02, 0.01, 0.005)

# V-intervals of the three normally hyperbolic pieces, split where 1 - V^2 = 0
_PIECES = {"left": (-np.inf, -1.0), "middle": (-1.0, 1.0), "right": (1.0, np.inf)}


def critical_a(v, i_app: float):
    v = np.asarray(v, dtype=float)
    out = v - v**3 / 3.0 + i_app
    return float(out) if out.ndim == 0 else out


def branch_name(v: float, n: float) -> str:
    if v > 1.0:
        return "S_right"
    if v < -1.0:
        return "S_a+" if n > 0 else "S_a-"
    return "S_r+" if n > 0 else "S_r-"


def is_attracting(v) -> np.ndarray:
    return 1.0 - np.asarray(v, dtype=float) ** 2 < 0


@dataclass(frozen=True)
class CriticalManifold:
    i_app: float
    branches: dict = field(repr=False)
    fold: PhaseState
    pinch: Optional[PhaseState]

    def residuals(self) -> np.ndarray:
        pts = np.vstack([b for b in self.branches.values() if len(b)])
        return pts[:, 0] - pts[:, 0] ** 3 / 3.0 - pts[:, 1] ** 2 + self.i_app


def critical_manifold(i_app: float, v_range=(-3.0, 2.5), samples: int = 2000) -> CriticalManifold:
    vs = np.linspace(v_range[0], v_range[1], samples)
    vs = vs[np.abs(np.abs(vs) - 1.0) > 1e-12]
    a = critical_a(vs, i_app)
    ok = a >= 0
    vs, r = vs[ok], np.sqrt(a[ok])
    branches: dict[str, list] = {k: [] for k in ("S_a+", "S_r+", "S_a-", "S_r-", "S_right")}
    for v, n in zip(vs, r):
        for sgn in (1.0, -1.0):
            nn = sgn * n
            # the two halves of the right plateau meet at a = 0, where n changes sign
            branches[branch_name(v, nn if nn != 0 else 1.0)].append((v, nn))
    arrays = {k: np.array(v, dtype=float).reshape(-1, 2) for k, v in branches.items()}
    fold = PhaseState(1.0, float(np.sqrt(critical_a(1.0, i_app))))
    a_pinch = critical_a(-1.0, i_app)
    pinch = PhaseState(-1.0, 0.0) if abs(a_pinch) < 1e-12 else None
    return CriticalManifold(float(i_app), arrays, fold, pinch)


def layer_flow(i_app: float, s0: PhaseState, t_end: float = 200.0) -> Trajectory:
    """Fast dynamics with n frozen at s0.n."""
    return integrate_layer(i_app, s0, IntegratorOptions(t_end=t_end))


@dataclass(frozen=True)
class SlowOrbit:
    """Solution of the reduced problem on one branch of the critical manifold."""

    tau: np.ndarray
    v: np.ndarray
    n: np.ndarray
    piece: str
    stop: str  # 't_end', 'converged', 'fold' or 'pinch'

    @property
    def final_state(self) -> PhaseState:
        return PhaseState(float(self.v[-1]), float(self.n[-1]))


def _piece_of(v: float) -> str:
    if v < -1.0:
        return "left"
    if v > 1.0:
        return "right"
    return "middle"


def _v_of_n(n: float, i_app: float, piece: str) -> float:
    """V on ``piece`` with a(V) = n**2, by bisection (a is monotone on each piece)."""
    lo, hi = _PIECES[piece]
    lo = max(lo, -20.0)
    hi = min(hi, 20.0)
    f_lo, f_hi = critical_a(lo, i_app) - n * n, critical_a(hi, i_app) - n * n
    # past a fold (Runge-Kutta stages may probe there) return the fold abscissa
    if f_lo * f_hi > 0:
        return lo if abs(f_lo) < abs(f_hi) else hi
    f = lambda v: critical_a(v, i_app) - n * n  # noqa: E731
    return brentq(f, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps)


def reduced_flow(p: ModelParams, s0: PhaseState, t_end: float = 50.0) -> SlowOrbit:
    """Slow flow dn/dtau = n_inf(V - V0) + n0 - n with V(n) on the branch of s0.

    Stops with 'fold' or 'pinch' where the branch parameterisation fails
    (the singular drop), or 'converged' at a reduced equilibrium.
    """
    res = s0.v - s0.v**3 / 3.0 - s0.n**2 + p.i_app
    if abs(res) > 1e-8:
        raise ValueError(f"s0 is not on the critical manifold (residual {res:.2e})")
    piece = _piece_of(s0.v)
    lo, hi = _PIECES[piece]
    # range of n^2 available on this piece
    a_edges = [critical_a(x, p.i_app) for x in (lo, hi) if np.isfinite(x)]
    pinch_here = any(abs(x + 1.0) < 1e-15 for x in (lo, hi)) and abs(critical_a(-1.0, p.i_app)) < 1e-12

    def rhs(_, y):
        v = _v_of_n(y[0], p.i_app, piece)
        return [n_inf(v - p.v0) + p.n0 - y[0]]

    def edge_event(k):
        def ev(_, y):
            return y[0] ** 2 - a_edges[k]

        ev.terminal = True
        return ev

    def rest_event(_, y):
        return rhs(0, y)[0]

    events = [edge_event(k) for k in range(len(a_edges))]
    if pinch_here:
        # n**2 only touches zero at the pinch, so watch n itself
        def pinch_event(_, y):
            return y[0]

        pinch_event.terminal = True
        events.append(pinch_event)
    sol = solve_ivp(rhs, (0.0, t_end), [s0.n], rtol=1e-10, atol=1e-12, events=events, dense_output=False, max_step=0.05)
    n = sol.y[0]
    v = np.array([_v_of_n(x, p.i_app, piece) for x in n])
    if sol.status == 1:
        stop = "pinch" if pinch_here and abs(n[-1]) < 1e-6 else "fold"
    elif abs(rest_event(0, [n[-1]])) < 1e-8:
        stop = "converged"
    else:
        stop = "t_end"
    return SlowOrbit(sol.t, v, n, piece, stop)


def singular_orbit(p: ModelParams, s0: PhaseState, max_segments: int = 8) -> list[tuple[str, str, str]]:
    """Alternate layer and reduced segments from s0.

    Returns (segment, branch, ending) triples. At a fold the orbit drops along
    the fast fibre; at the pinch it continues on the other side of n = 0.
    """
    out = []
    s, fast = s0, True
    for _ in range(max_segments):
        if fast:
            tr = layer_flow(p.i_app, s)
            land = tr.final_state
            s = PhaseState(_v_of_n(land.n, p.i_app, _piece_of(land.v)), land.n)
            out.append(("layer", branch_name(s.v, s.n), tr.status))
        orbit = reduced_flow(p, s, t_end=200.0)
        out.append(("reduced", branch_name(s.v, s.n), orbit.stop))
        f = orbit.final_state
        if orbit.stop == "fold":
            # step just past the fold along the slow direction, then follow the fast fibre
            s, fast = PhaseState(f.v, f.n + 1e-3 * np.sign(orbit.n[-1] - orbit.n[0])), True
        elif orbit.stop == "pinch":
            nn = -1e-6 * np.sign(orbit.n[0])
            s, fast = PhaseState(_v_of_n(nn, p.i_app, orbit.piece), nn), False
        else:
            break
    return out


# --- epsilon experiments --------------------------------------------------------


@dataclass(frozen=True)
class ScalingStudy:
    quantity: str
    x_name: str
    x: tuple[float, ...]
    values: tuple[Optional[float], ...]
    fit: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([self.x_name, self.quantity])
        for x, v in zip(self.x, self.values):
            w.writerow([f"{x:.17g}", "" if v is None else f"{v:.17g}"])
        return buf.getvalue()

    def to_json_dict(self) -> dict:
        return {
            "quantity": self.quantity,
            "x_name": self.x_name,
            "x": list(self.x),
            "values": list(self.values),
            "fit": self.fit,
            "meta": self.meta,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, default=float)


def compute_ic(v0: float, n0: float, epsilon: float) -> float:
    """I_c = I_SH - I*, from the same homoclinic routine used by continuation."""
    return find_homoclinic(ModelParams(epsilon, I_STAR, v0, n0)).i_crit - I_STAR


def ic_sweep(v0: float, n0: float, epsilons: Sequence[float] = DEFAULT_EPSILONS) -> ScalingStudy:
    eps = tuple(float(e) for e in epsilons)
    if any(b >= a for a, b in zip(eps, eps[1:])) or min(eps) <= 0:
        raise ValueError("epsilon values must be positive and strictly decreasing")
    vals, errors = [], {}
    for e in eps:
        try:
            vals.append(compute_ic(v0, n0, e))
        except BracketInvalid as exc:
            vals.append(None)
            errors[str(e)] = str(exc)
    fit = {}
    ok = [(np.sqrt(e), v) for e, v in zip(eps, vals) if v is not None]
    if len(ok) >= 3:
        coef = np.polyfit([x for x, _ in ok], [v for _, v in ok], 2)
        fit = {"model": "I_c ~ c0 + c1 sqrt(eps) + c2 eps", "c0": coef[2], "c1": coef[1], "c2": coef[0]}
    ratios = [v / e if v is not None else None for e, v in zip(eps, vals)]
    return ScalingStudy("I_c", "epsilon", eps, tuple(vals), fit, {"v0": v0, "n0": n0, "lambda_c": ratios, "errors": errors})


@dataclass(frozen=True)
class GapReport:
    currents: tuple[float, ...]
    gaps: tuple[Optional[float], ...]
    signs: tuple[int, ...]
    increasing: bool
    sign_changes: int
    rho: float


def gap_monotonicity_check(
    p: ModelParams, i_window: tuple[float, float], k_points: int = 9, rho: Optional[float] = None
) -> GapReport:
    """Sample q_a - q_r across ``i_window``; undefined gaps make the check fail."""
    from .continuation import default_rho

    rho = default_rho(p) if rho is None else rho
    currents = np.linspace(i_window[0], i_window[1], k_points)
    gaps, signs = [], []
    for i in currents:
        pi = p.with_current(float(i))
        try:
            gaps.append(section_gap(pi, rho).gap)
        except (SectionError, ValueError):
            gaps.append(None)
        try:
            signs.append(gap_sign(pi, rho))
        except SectionError:
            signs.append(0)
    defined = all(g is not None for g in gaps)
    increasing = defined and all(b > a for a, b in zip(gaps, gaps[1:]))
    nz = [s for s in signs if s != 0]
    changes = sum(1 for a, b in zip(nz, nz[1:]) if a != b)
    return GapReport(tuple(map(float, currents)), tuple(gaps), tuple(signs), bool(increasing), changes, rho)


def _default_bistable_grid(p: ModelParams, points: int = 41) -> np.ndarray:
    folds = [f.i_crit for f in branch_folds(p) if abs(f.i_crit) < 10]
    lo = min([I_STAR - 0.1] + [f - 0.1 for f in folds])
    hi = max([I_STAR + 0.1] + [f + 0.1 for f in folds])
    # bistable windows can be far narrower than the coarse spacing, so probe beside every fold
    extra = [f + d for f in folds for d in (-1e-4, 1e-4)] + [I_STAR]
    return np.unique(np.concatenate([np.linspace(lo, hi, points), extra]))


def bistability_persistence(
    v0: float, n0: float, epsilons: Sequence[float] = DEFAULT_EPSILONS, i_grid: Optional[Sequence[float]] = None
) -> ScalingStudy:
    eps = tuple(float(e) for e in epsilons)
    widths, ranges = [], []
    for e in eps:
        p = ModelParams(e, I_STAR, v0, n0)
        grid = _default_bistable_grid(p) if i_grid is None else i_grid
        r = bistable_range(p, grid)
        ranges.append(list(r) if r else None)
        widths.append(r[1] - r[0] if r else 0.0)
    rel = None
    if len(widths) >= 2 and widths[-2] > 0:
        rel = abs(widths[-1] - widths[-2]) / widths[-2]
    return ScalingStudy(
        "bistable_width", "epsilon", eps, tuple(widths), {"relative_change_last_two": rel}, {"v0": v0, "n0": n0, "ranges": ranges}
    )


@dataclass(frozen=True)
class AbsenceReport:
    epsilons: tuple[float, ...]
    absent: tuple[bool, ...]
    signs: tuple[tuple[int, ...], ...]
    constant_sign: tuple[bool, ...]
    brackets: tuple[tuple[float, float], ...]

    @property
    def all_absent(self) -> bool:
        return all(self.absent) and all(self.constant_sign)


def _resting_fold_current(p: ModelParams) -> float:
    rest = resting_state(p)
    _, fold = resting_folds(p, rest)
    if fold is None:
        raise ValueError("resting state has no upper fold")
    return fold.i_crit


def homoclinic_absence_check(
    v0: float, n0: float, epsilons: Sequence[float] = (0.05, 0.02, 0.01), samples: int = 9
) -> AbsenceReport:
    """For each eps: no gap sign change over (I*, I_fold) and find_homoclinic bracket-invalid."""
    absent, signs, const, brackets = [], [], [], []
    for e in epsilons:
        p = ModelParams(e, I_STAR, v0, n0)
        i_fold = _resting_fold_current(p)
        br = (I_STAR + 1e-6, i_fold - 1e-6)
        brackets.append(br)
        try:
            find_homoclinic(p, br)
            absent.append(False)
        except BracketInvalid:
            absent.append(True)
        ss = []
        for i in np.linspace(br[0], br[1], samples):
            try:
                ss.append(gap_sign(p.with_current(float(i))))
            except SectionError:
                ss.append(0)
        nz = [s for s in ss if s != 0]
        signs.append(tuple(ss))
        const.append(len(set(nz)) <= 1)
    return AbsenceReport(tuple(map(float, epsilons)), tuple(absent), tuple(signs), tuple(const), tuple(brackets))


def latency_scaling(
    v0: float, n0: float, epsilon: float, deltas: Sequence[float] = tuple(np.logspace(-4, -1, 7))
) -> ScalingStudy:
    """Latency from rest at I* after a step to I_fold + delta, with a log-log fit."""
    p = ModelParams(epsilon, I_STAR, v0, n0)
    i_fold = _resting_fold_current(p)
    lat = [measure_latency(p, i_fold + d).latency for d in deltas]
    finite = [(d, t) for d, t in zip(deltas, lat) if np.isfinite(t)]
    fit: dict = {}
    if len(finite) >= 2:
        slope, resid = loglog_slope(*zip(*finite))
        fit = {"slope": slope, "residual": resid, "ratio_max_min": max(t for _, t in finite) / min(t for _, t in finite)}
    return ScalingStudy(
        "latency",
        "delta_i",
        tuple(map(float, deltas)),
        tuple(float(t) for t in lat),
        fit,
        {"v0": v0, "n0": n0, "epsilon": epsilon, "i_fold": i_fold},
    )
