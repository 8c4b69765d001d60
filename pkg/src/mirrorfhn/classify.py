"""Region labels, the (V0, n0) chart and the electrophysiological signature battery."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .continuation import (
    BracketInvalid,
    CycleAmbiguous,
    LimitCycle,
    branch_current,
    branch_folds,
    detect_snic,
    find_homoclinic,
    find_limit_cycle,
    resting_folds,
)
from .dynamics import IntegratorOptions, StimulusProtocol, integrate, integrate_protocol
from .equilibria import Equilibrium, find_equilibria
from .model import I_STAR, ModelParams, PhaseState, delta0, dn_inf, n0_star, n_inf, v0_star

REGIONS = ("I", "II", "III", "IV", "V")
BOUNDARY_TOL = 1e-6
TYPE3_CEILING = 2.0
TYPE3_GRID = 64
ADP_THRESHOLD = 1e-3
CHART_V0 = (-2.0, 0.2)
CHART_N0 = (-2.2, 0.8)
CHART_GRID = 120


class Unclassifiable(ValueError):
    """The equilibrium census at I* matches none of the region rules."""


class NoRestingState(ValueError):
    pass


class NoSpike(RuntimeError):
    pass


@dataclass(frozen=True)
class RegionLabel:
    region: str
    evidence: dict = field(default_factory=dict, compare=False)

    def as_dict(self) -> dict:
        return {"region": self.region, "evidence": self.evidence}


# --- region decision ----------------------------------------------------------


def _census(eqs: Sequence[Equilibrium]) -> list[dict]:
    return [{"v": e.state.v, "n": e.state.n, "kind": e.kind, "branch": e.branch} for e in eqs]


def _resting_loss_current(p: ModelParams, rest: Equilibrium) -> float:
    """Current at which the resting equilibrium first loses stability as I increases."""
    # along a stable segment dI/dV > 0, so increasing I moves the equilibrium right
    v_r = rest.state.v
    candidates = [f.location.v for f in branch_folds(p) if f.location.v > v_r]
    vh = -np.sqrt(1.0 - p.epsilon) if p.epsilon < 1.0 else None
    if vh is not None and vh > v_r:
        candidates.append(vh)
    if not candidates:
        return np.inf
    return float(branch_current(min(candidates), p.v0, p.n0))


def _single_resting(p: ModelParams, rest: Equilibrium, cycle_scan: bool) -> RegionLabel:
    i_loss = _resting_loss_current(p, rest)
    evidence = {"resting_loss_current": i_loss, "scan": [I_STAR, I_STAR + TYPE3_CEILING], "cycle_scan": cycle_scan}
    if i_loss <= I_STAR + TYPE3_CEILING:
        return RegionLabel("II", evidence)
    if cycle_scan:
        grid = np.linspace(I_STAR, I_STAR + TYPE3_CEILING, TYPE3_GRID + 1)[1:]
        for i in grid:
            try:
                cyc = find_limit_cycle(p.with_current(i))
            except CycleAmbiguous:
                cyc = None
            if cyc is not None:
                evidence["cycle_at"] = float(i)
                return RegionLabel("II", evidence)
    return RegionLabel("III", evidence)


def region_at(v0: float, n0: float, epsilon: float, cycle_scan: bool = True) -> RegionLabel:
    """Region I-V from the equilibrium census at I = I*.

    Single-equilibrium points are Type II when the resting state loses
    stability or a stable cycle appears for I in (I*, I* + 2]; otherwise III.
    ``cycle_scan=False`` skips the 64 cycle simulations and uses only the
    analytic stability-loss test.
    """
    p = ModelParams(epsilon, I_STAR, v0, n0)
    d0 = delta0(p)
    eqs = find_equilibria(p)
    evidence = {"delta0": d0, "census": _census(eqs)}
    if abs(d0) < BOUNDARY_TOL:
        return RegionLabel("boundary", {**evidence, "reason": "transcritical"})
    near = [f for f in branch_folds(p) if abs(f.i_crit - I_STAR) < BOUNDARY_TOL]
    if near or any(e.kind == "degenerate" for e in eqs):
        return RegionLabel("boundary", {**evidence, "reason": "tangency"})

    stable = [e for e in eqs if e.stable]
    saddles = [e for e in eqs if e.kind == "saddle"]
    if len(eqs) == 1 and stable:
        lab = _single_resting(p, stable[0], cycle_scan)
        return RegionLabel(lab.region, {**evidence, **lab.evidence})
    if len(eqs) == 3 and len(saddles) == 1:
        if len(stable) == 2:
            return RegionLabel("V", evidence)
        if len(stable) == 1:
            node, sad = stable[0], saddles[0]
            third = [e for e in eqs if e is not node and e is not sad][0]
            if not third.stable:
                if node.state.n < 0 and sad.state.n < 0:
                    return RegionLabel("IV", evidence)
                if node.state.n > 0 and sad.state.n > 0:
                    return RegionLabel("I", evidence)
    raise Unclassifiable(f"census at I* not covered by the region rules: {[e.kind for e in eqs]}")


def coherence_evidence(label: RegionLabel, v0: float, n0: float, epsilon: float) -> dict:
    """Bifurcation evidence expected for a label (SNIC for I, homoclinic for IV, folds for V)."""
    p = ModelParams(epsilon, I_STAR, v0, n0)
    out: dict = {}
    if label.region == "I":
        rest = [e for e in find_equilibria(p) if e.stable][0]
        _, fold = resting_folds(p, rest)
        out["fold_current"] = fold.i_crit if fold else None
        out["snic"] = bool(fold and detect_snic(p, fold))
    elif label.region == "IV":
        try:
            h = find_homoclinic(p)
            out["homoclinic_current"] = h.i_crit
        except BracketInvalid as exc:
            out["homoclinic_current"] = None
            out["homoclinic_error"] = str(exc)
    elif label.region == "V":
        stable = sorted((e for e in find_equilibria(p) if e.stable), key=lambda e: e.state.v)
        down = resting_folds(p, stable[0])[1]
        up = resting_folds(p, stable[-1])[0]
        out["i_sn_up"] = up.i_crit if up else None
        out["i_sn_down"] = down.i_crit if down else None
    elif label.region == "III":
        grid = np.linspace(I_STAR, I_STAR + TYPE3_CEILING, TYPE3_GRID + 1)[1:]
        out["fi_all_zero"] = all(f == 0.0 for _, f in fi_curve(p, grid))
    return out


# --- chart --------------------------------------------------------------------


def _tangency_roots(v0: float, n0_range) -> list[tuple[str, float, float]]:
    """Solutions (branch, V, n0) of g = g' = 0 at I* other than the pinch V = -1."""
    out = []
    # g = 0 gives n_nullcline = s sqrt(a) with a = -(V+1)^2 (V-2)/3; dividing g' by (V + 1)
    # removes the trivial root at the pinch
    for sgn, tag in ((1.0, "upper"), (-1.0, "lower")):
        for lo, hi, side in ((-4.0, -1.0 - 1e-9, -1.0), (-1.0 + 1e-9, 2.0 - 1e-12, 1.0)):
            def h(v, sgn=sgn, side=side):
                return (1.0 - v) - 2.0 * sgn * side * np.sqrt((2.0 - v) / 3.0) * dn_inf(v - v0)

            vs = np.linspace(lo, hi, 800)
            hv = h(vs)
            for j in np.nonzero(hv[:-1] * hv[1:] < 0)[0]:
                vr = brentq(h, vs[j], vs[j + 1], xtol=1e-13)
                a = vr - vr**3 / 3.0 + I_STAR
                n0 = sgn * np.sqrt(max(a, 0.0)) - n_inf(vr - v0)
                if n0_range[0] <= n0 <= n0_range[1]:
                    out.append((tag, float(vr), float(n0)))
    return out


@dataclass(frozen=True)
class Chart:
    v0: np.ndarray
    n0: np.ndarray
    labels: np.ndarray  # shape (len(n0), len(v0))
    epsilon: float
    tc_line: np.ndarray  # (m, 2) columns v0, n0
    sn_points: tuple[tuple[str, float, float, float], ...]  # (branch, v0, V, n0)
    pitchfork: tuple[float, float]

    def rows(self):
        for i, n0 in enumerate(self.n0):
            for j, v0 in enumerate(self.v0):
                yield float(v0), float(n0), str(self.labels[i, j])

    def present(self) -> set[str]:
        return set(np.unique(self.labels))

    def sn_curves(self) -> dict[str, list[tuple[float, float]]]:
        curves: dict[str, list[tuple[float, float]]] = {}
        for tag, v0, _, n0 in self.sn_points:
            curves.setdefault(tag, []).append((v0, n0))
        return curves


def _chart_row(job) -> list[str]:
    v0s, n0, epsilon, cycle_scan = job
    out = []
    for v0 in v0s:
        try:
            out.append(region_at(v0, n0, epsilon, cycle_scan=cycle_scan).region)
        except Unclassifiable:
            out.append("unclassified")
    return out


def chart(
    v0_range=CHART_V0,
    n0_range=CHART_N0,
    grid: int | tuple[int, int] = CHART_GRID,
    epsilon: float = 0.02,
    cycle_scan: bool = False,
    workers: int = 1,
) -> Chart:
    """Region labels at cell centres plus the TC line and saddle-node boundary curves."""
    nv, nn = (grid, grid) if isinstance(grid, int) else grid
    dv = (v0_range[1] - v0_range[0]) / nv
    dn = (n0_range[1] - n0_range[0]) / nn
    v0s = v0_range[0] + dv * (np.arange(nv) + 0.5)
    n0s = n0_range[0] + dn * (np.arange(nn) + 0.5)
    jobs = [(tuple(map(float, v0s)), float(n0), epsilon, cycle_scan) for n0 in n0s]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_chart_row, jobs))
    else:
        rows = [_chart_row(j) for j in jobs]
    labels = np.array(rows, dtype=object).reshape(nn, nv)
    fine = np.linspace(v0_range[0], v0_range[1], 4 * nv + 1)
    tc = np.column_stack([fine, [n0_star(v) for v in fine]])
    sn = []
    for v0 in fine:
        for tag, vr, n0 in _tangency_roots(float(v0), n0_range):
            sn.append((tag, float(v0), vr, n0))
    vs = v0_star()
    return Chart(v0s, n0s, labels.astype(str), epsilon, tc, tuple(sn), (vs, n0_star(vs)))


# --- signature battery --------------------------------------------------------


def resting_state(p: ModelParams) -> Equilibrium:
    """Lowest-voltage stable equilibrium."""
    stable = sorted((e for e in find_equilibria(p) if e.stable), key=lambda e: e.state.v)
    if not stable:
        raise NoRestingState(f"no stable equilibrium at I={p.i_app}")
    return stable[0]


@dataclass(frozen=True)
class Latency:
    i_step: float
    latency: float
    protocol: dict

    @property
    def infinite(self) -> bool:
        return not np.isfinite(self.latency)


def measure_latency(p_rest: ModelParams, i_step: float, horizon: Optional[float] = None) -> Latency:
    """Time to the first spike after switching from rest at p_rest.i_app to ``i_step``."""
    rest = resting_state(p_rest)
    horizon = horizon or 100.0 / p_rest.epsilon
    tr = integrate(
        p_rest.with_current(i_step),
        rest.state,
        IntegratorOptions(t_end=horizon, max_spikes=1, max_step=0.5, stop_on_convergence=False),
    )
    st = tr.spike_times
    proto = {"i_rest": p_rest.i_app, "i_step": i_step, "horizon": horizon, "rest": [rest.state.v, rest.state.n]}
    return Latency(i_step, st[0] if st else float("inf"), proto)


def latency_curve(p_rest: ModelParams, i_ref: float, deltas: Sequence[float]) -> list[tuple[float, float]]:
    return [(float(d), measure_latency(p_rest, i_ref + d).latency) for d in deltas]


def loglog_slope(x, y) -> tuple[float, float]:
    """Least-squares slope of log y against log x and its RMS residual."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    coef = np.polyfit(lx, ly, 1)
    res = ly - np.polyval(coef, lx)
    return float(coef[0]), float(np.sqrt(np.mean(res**2)))


def _far_side(p: ModelParams) -> PhaseState:
    """Launch state across the saddle's stable manifold, else on the right branch."""
    sad = [e for e in find_equilibria(p) if e.kind == "saddle"]
    if sad:
        s = min(sad, key=lambda e: np.hypot(e.state.v + 1.0, e.state.n)).state
        return PhaseState(s.v + 0.3, s.n)
    return PhaseState(2.0, p.n0 + 1.0)


def _tail_bump(v: np.ndarray) -> tuple[bool, float, float]:
    """Local minimum followed by a local maximum in a sampled tail."""
    dv = np.diff(v)
    sgn = np.sign(dv)
    nz = np.nonzero(sgn)[0]
    best = (False, np.nan, 0.0)
    i_min = None
    for a, b in zip(nz[:-1], nz[1:]):
        if sgn[a] < 0 < sgn[b]:
            i_min = b
        elif sgn[a] > 0 > sgn[b] and i_min is not None:
            height = float(v[b] - v[i_min])
            if height > best[2]:
                best = (True, float(v[i_min]), height)
    return best


@dataclass(frozen=True)
class ADPRecord:
    present: bool
    trough_v: float
    bump_height: float
    robust: bool
    launch: tuple[float, float]


def detect_adp(p: ModelParams, perturbation: float = 1e-3) -> ADPRecord:
    """Fire one spike from rest and look for a bump in the sub-threshold tail."""
    resting_state(p)
    launch = _far_side(p)
    opts = IntegratorOptions(t_end=200.0 / p.epsilon, max_step=0.05)
    tr = integrate(p, launch, opts)
    st = tr.spike_times
    if not st:
        raise NoSpike(f"launch {launch} did not elicit a spike at I={p.i_app}")
    after = np.nonzero((tr.t > st[0]) & (tr.v < 0.0))[0]
    if after.size == 0:
        raise NoSpike("trajectory never returned below V = 0")
    i0 = after[0]
    present, trough, height = _tail_bump(tr.v[i0:])
    present = present and height > ADP_THRESHOLD
    robust = present
    if present:
        base = tr.y[i0]
        for d in ((perturbation, 0.0), (-perturbation, 0.0), (0.0, perturbation), (0.0, -perturbation)):
            tr2 = integrate(p, base + np.array(d), opts)
            ok, _, h2 = _tail_bump(tr2.v)
            if not (ok and h2 > ADP_THRESHOLD):
                robust = False
                break
    return ADPRecord(bool(present), trough, height, bool(robust), (launch.v, launch.n))


def _attractor(p: ModelParams, s: PhaseState):
    """('cycle', LimitCycle) or ('eq', PhaseState) reached from ``s``."""
    try:
        cyc = find_limit_cycle(p, launch=s, slow_budget=200.0)
    except CycleAmbiguous:
        return ("unknown", None)
    if cyc is not None:
        return ("cycle", cyc)
    tr = integrate(p, s, IntegratorOptions(t_end=400.0 / p.epsilon, max_step=0.5))
    return ("eq", tr.final_state)


def is_bistable(p: ModelParams) -> bool:
    stable = [e for e in find_equilibria(p) if e.stable]
    if len(stable) >= 2:
        return True
    if not stable:
        return False
    far = _attractor(p, _far_side(p))
    if far[0] == "cycle":
        return True
    if far[0] == "eq":
        return bool(np.hypot(far[1].v - stable[0].state.v, far[1].n - stable[0].state.n) > 1e-3)
    return False


def bistable_range(p_base: ModelParams, i_grid: Sequence[float], tol: float = 1e-6) -> Optional[tuple[float, float]]:
    """Largest contiguous bistable interval on ``i_grid``, endpoints refined by bisection."""
    grid = np.asarray(sorted(i_grid), dtype=float)
    flags = [is_bistable(p_base.with_current(i)) for i in grid]
    best, run = None, None
    for j, f in enumerate(flags):
        if f:
            run = (run[0], j) if run else (j, j)
            if best is None or run[1] - run[0] > best[1] - best[0]:
                best = run
        else:
            run = None
    if best is None:
        return None

    def refine(inside, outside):
        while abs(outside - inside) > tol:
            mid = 0.5 * (inside + outside)
            if is_bistable(p_base.with_current(mid)):
                inside = mid
            else:
                outside = mid
        return 0.5 * (inside + outside)

    a, b = best
    lo = refine(grid[a], grid[a - 1]) if a > 0 else grid[a]
    hi = refine(grid[b], grid[b + 1]) if b < len(grid) - 1 else grid[b]
    return float(lo), float(hi)


def fi_curve(p_base: ModelParams, i_grid: Sequence[float], slow_budget: float = 50.0) -> list[tuple[float, float]]:
    out = []
    for i in i_grid:
        try:
            cyc = find_limit_cycle(p_base.with_current(float(i)), slow_budget=slow_budget)
        except CycleAmbiguous:
            cyc = None
        out.append((float(i), cyc.frequency if cyc else 0.0))
    return out


@dataclass(frozen=True)
class SubthresholdRecord:
    damped_oscillation: bool
    natural_frequency: Optional[float]
    fitted_frequency: Optional[float]
    sign_alternations: int
    reason: str = ""


def subthreshold_response(p: ModelParams, kick: float = 1e-3) -> SubthresholdRecord:
    rest = resting_state(p)
    if rest.kind != "stable_focus":
        return SubthresholdRecord(False, None, None, 0, "node")
    omega = abs(rest.eigenvalues[-1].imag)
    decay = abs(rest.eigenvalues[-1].real)
    t_end = min(20.0 * 2 * np.pi / omega, 30.0 / max(decay, 1e-12))
    tr = integrate(
        p,
        PhaseState(rest.state.v + kick, rest.state.n),
        IntegratorOptions(t_end=t_end, stop_on_convergence=False, max_step=0.05),
    )
    x = tr.v - rest.state.v
    idx = np.nonzero(x[:-1] * x[1:] < 0)[0]
    # interpolated zero crossings of V - V_rest
    tz = tr.t[idx] - x[idx] * (tr.t[idx + 1] - tr.t[idx]) / (x[idx + 1] - x[idx])
    fitted = float(1.0 / (2.0 * np.mean(np.diff(tz)))) if tz.size >= 3 else None
    return SubthresholdRecord(tz.size >= 2, omega / (2 * np.pi), fitted, int(tz.size))


@dataclass(frozen=True)
class SlopeDetection:
    step_spikes: int
    staircase_spikes: int
    protocol: dict


def slope_detection(p: ModelParams, delta_i: float, n_steps: int = 20, step_slow: float = 50.0) -> SlopeDetection:
    """Spikes for an abrupt step of ``delta_i`` versus a slow staircase of the same height."""
    rest = resting_state(p)
    dur = step_slow / p.epsilon
    opts = IntegratorOptions(max_step=0.5, stop_on_convergence=False)
    step = StimulusProtocol.step(p.i_app, p.i_app + delta_i, 1.0, dur)
    stair = StimulusProtocol.staircase(p.i_app, p.i_app + delta_i, n_steps, dur)
    n_step = len(integrate_protocol(p, rest.state, step, opts).spike_times)
    n_stair = len(integrate_protocol(p, rest.state, stair, opts).spike_times)
    proto = {"delta_i": delta_i, "n_steps": n_steps, "step_duration": dur}
    return SlopeDetection(n_step, n_stair, proto)


@dataclass(frozen=True)
class SignatureReport:
    params: ModelParams
    latency_curve: list
    latency_slope: Optional[float]
    adp: Optional[ADPRecord]
    bistable_range: Optional[tuple[float, float]]
    fi_curve: list
    subthreshold: Optional[SubthresholdRecord]
    slope_detection: Optional[SlopeDetection]
    protocols: dict

    def as_dict(self) -> dict:
        from dataclasses import asdict

        def conv(x):
            return asdict(x) if x is not None and hasattr(x, "__dataclass_fields__") else x

        return {
            "params": self.params.as_dict(),
            "latency_curve": [list(r) for r in self.latency_curve],
            "latency_slope": self.latency_slope,
            "adp": conv(self.adp),
            "bistable_range": list(self.bistable_range) if self.bistable_range else None,
            "fi_curve": [list(r) for r in self.fi_curve],
            "subthreshold": conv(self.subthreshold),
            "slope_detection": conv(self.slope_detection),
            "protocols": self.protocols,
        }


def signature_battery(
    p: ModelParams,
    deltas: Sequence[float] = (1e-4, 1e-3, 1e-2, 1e-1),
    i_grid: Optional[Sequence[float]] = None,
    slope_delta: float = 0.5,
) -> SignatureReport:
    """Run every signature measurement that applies at ``p``; inapplicable items are None."""
    if i_grid is None:
        i_grid = np.linspace(p.i_app - 0.1, p.i_app + 0.3, 17)
    protocols = {"deltas": list(deltas), "i_grid": [float(i) for i in i_grid], "slope_delta": slope_delta}
    curve, slope = [], None
    try:
        rest = resting_state(p)
        _, fold = resting_folds(p, rest)
        if fold is not None:
            curve = latency_curve(p, fold.i_crit, deltas)
            finite = [(d, t) for d, t in curve if np.isfinite(t)]
            if len(finite) >= 2:
                slope = loglog_slope(*zip(*finite))[0]
            protocols["latency_reference"] = fold.i_crit
    except NoRestingState:
        pass
    try:
        adp = detect_adp(p)
    except (NoRestingState, NoSpike):
        adp = None
    try:
        sub = subthreshold_response(p)
    except NoRestingState:
        sub = None
    try:
        slope_rec = slope_detection(p, slope_delta)
    except NoRestingState:
        slope_rec = None
    return SignatureReport(
        params=p,
        latency_curve=curve,
        latency_slope=slope,
        adp=adp,
        bistable_range=bistable_range(p, i_grid),
        fi_curve=fi_curve(p, i_grid),
        subthreshold=sub,
        slope_detection=slope_rec,
        protocols=protocols,
    )
