"""Time integration, piecewise-constant stimulus protocols and event detection."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from . import _rk
from .model import ModelParams, PhaseState

DEFAULT_SPIKE_THRESHOLD = 1.0
SPIKE_REARM = 0.5
DIVERGENCE_WINDOW = (-6.0, 5.0)

_STATUS_EVENT = {
    _rk.STATUS_CONVERGED: "converged",
    _rk.STATUS_WINDOW_EXIT: "window_exit",
}


class IntegrationError(RuntimeError):
    """Step-size underflow or step budget exhausted."""


@dataclass(frozen=True)
class Section:
    """Horizontal section n = rho restricted to v_lo <= V <= v_hi.

    ``direction`` is +1 for upward crossings and -1 for downward ones. With
    ``arm_on_spike`` only crossings after the first spike are counted.
    """

    rho: float
    v_window: tuple[float, float] = (-np.inf, np.inf)
    direction: int = -1
    arm_on_spike: bool = False

    def __post_init__(self):
        if self.direction not in (-1, 1):
            raise ValueError("section direction must be +1 or -1")


@dataclass(frozen=True)
class IntegratorOptions:
    t_end: float = 100.0
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_step: float = 0.1
    spike_threshold: float = DEFAULT_SPIKE_THRESHOLD
    section: Optional[Section] = None
    stop_on_convergence: bool = True
    convergence_tol: float = 1e-9
    max_spikes: int = 0
    max_section_crossings: int = 0
    direction: int = 1
    window: tuple[float, float] = DIVERGENCE_WINDOW
    max_steps: int = 20_000_000

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol"):
            tol = getattr(self, name)
            if not 0 < tol <= 1e-2:
                raise ValueError(f"{name} must lie in (0, 1e-2], got {tol!r}")
        if not self.t_end > 0:
            raise ValueError(f"t_end must be positive, got {self.t_end!r}")
        if self.direction not in (-1, 1):
            raise ValueError("direction must be +1 or -1")

    def replace(self, **kw) -> "IntegratorOptions":
        from dataclasses import replace

        return replace(self, **kw)


@dataclass(frozen=True)
class StimulusProtocol:
    """Piecewise-constant applied current as (duration, i_app) segments."""

    segments: tuple[tuple[float, float], ...]

    def __post_init__(self):
        segs = tuple((float(d), float(i)) for d, i in self.segments)
        if not segs:
            raise ValueError("a protocol needs at least one segment")
        for d, i in segs:
            if not (d > 0 and np.isfinite(d)):
                raise ValueError(f"segment durations must be positive, got {d!r}")
            if not np.isfinite(i):
                raise ValueError("segment currents must be finite")
        object.__setattr__(self, "segments", segs)

    @classmethod
    def step(cls, i_before: float, i_after: float, t_before: float, t_after: float):
        return cls(((t_before, i_before), (t_after, i_after)))

    @classmethod
    def pulse(cls, i_base: float, i_pulse: float, t_before: float, width: float, t_after: float):
        return cls(((t_before, i_base), (width, i_pulse), (t_after, i_base)))

    @classmethod
    def staircase(cls, i_start: float, i_stop: float, n_steps: int, step_duration: float, t_before: float = 0.0):
        """Ramp approximated by ``n_steps`` equal increments from i_start to i_stop."""
        segs = []
        if t_before > 0:
            segs.append((t_before, i_start))
        for j in range(1, n_steps + 1):
            segs.append((step_duration, i_start + (i_stop - i_start) * j / n_steps))
        return cls(tuple(segs))

    @classmethod
    def pulse_train(cls, i_base: float, i_pulse: float, width: float, period: float, count: int, t_after: float):
        segs = []
        for _ in range(count):
            segs.append((width, i_pulse))
            segs.append((period - width, i_base))
        segs.append((t_after, i_base))
        return cls(tuple(segs))

    @property
    def duration(self) -> float:
        return sum(d for d, _ in self.segments)


@dataclass(frozen=True)
class Event:
    t: float
    kind: str
    payload: dict = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled solution with its Dormand-Prince continuous extension.

    For backward integrations (``direction == -1``) ``t`` counts elapsed
    backward time, so it is still increasing.
    """

    t: np.ndarray
    y: np.ndarray
    cont: np.ndarray
    events: tuple[Event, ...]
    params: Optional[ModelParams]
    direction: int = 1
    status: str = "t_end"
    segment_starts: tuple[float, ...] = (0.0,)

    @property
    def v(self) -> np.ndarray:
        return self.y[:, 0]

    @property
    def n(self) -> np.ndarray:
        return self.y[:, 1]

    @property
    def tau(self) -> np.ndarray:
        """Samples in the slow time tau = eps t."""
        if self.params is None:
            raise ValueError("layer-flow trajectories have no slow time")
        return self.params.epsilon * self.t

    @property
    def final_state(self) -> PhaseState:
        return PhaseState.from_array(self.y[-1])

    def __len__(self) -> int:
        return self.t.shape[0]

    def at(self, t) -> np.ndarray:
        """Dense-output state(s) at time(s) ``t``."""
        tq = np.atleast_1d(np.asarray(t, dtype=float))
        if self.cont.shape[0] == 0:
            out = np.repeat(self.y[:1], tq.shape[0], axis=0)
        else:
            out = _rk.dense_eval(self.t, self.cont, tq)
        return out[0] if np.ndim(t) == 0 else out

    def events_of(self, kind: str) -> list[Event]:
        return [e for e in self.events if e.kind == kind]

    @property
    def spike_times(self) -> list[float]:
        return [e.t for e in self.events if e.kind == "spike"]

    def segment_index(self, t: float) -> int:
        return int(np.searchsorted(self.segment_starts, t, side="right") - 1)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "V", "n"])
        for ti, (vi, ni) in zip(self.t, self.y):
            w.writerow([f"{ti:.17g}", f"{vi:.17g}", f"{ni:.17g}"])
        return buf.getvalue()

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "params": self.params.as_dict() if self.params is not None else None,
            "direction": self.direction,
            "status": self.status,
            "n_samples": len(self),
            "t_final": float(self.t[-1]),
            "final_state": [float(self.y[-1, 0]), float(self.y[-1, 1])],
            "events": [{"t": e.t, "kind": e.kind, "payload": _jsonable(e.payload)} for e in self.events],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, PhaseState):
        return [obj.v, obj.n]
    return obj


def _raw_run(p: ModelParams, y0: np.ndarray, opts: IntegratorOptions, t_end: float, conv: bool, layer: bool = False):
    sec = opts.section
    if sec is None:
        sec_dir, rho, vlo, vhi, arm = 0, 0.0, -np.inf, np.inf, False
    else:
        # direction refers to sample order, i.e. backward time for backward runs
        sec_dir, rho, (vlo, vhi), arm = sec.direction, sec.rho, sec.v_window, sec.arm_on_spike
    ts, ys, cs, status = _rk.run(
        float(y0[0]),
        float(y0[1]),
        float(t_end),
        0.0 if layer else p.epsilon,
        p.i_app,
        p.v0,
        p.n0,
        float(opts.direction),
        opts.rel_tol,
        opts.abs_tol,
        opts.max_step,
        opts.spike_threshold,
        SPIKE_REARM,
        int(opts.max_spikes),
        int(sec_dir),
        float(rho),
        float(vlo),
        float(vhi),
        bool(arm),
        int(opts.max_section_crossings),
        bool(conv),
        opts.convergence_tol,
        1.0 if layer else 1.0 / p.epsilon,
        float(opts.window[0]),
        float(opts.window[1]),
        int(opts.max_steps),
    )
    if status == _rk.STATUS_STEP_UNDERFLOW:
        raise IntegrationError(f"step-size underflow at t={ts[-1]:.6g} (stiffness failure)")
    if status == _rk.STATUS_MAX_STEPS:
        raise IntegrationError(f"step budget of {opts.max_steps} exhausted at t={ts[-1]:.6g}")
    return ts, ys, cs, status


def _status_name(status: int) -> str:
    return {
        _rk.STATUS_T_END: "t_end",
        _rk.STATUS_CONVERGED: "converged",
        _rk.STATUS_WINDOW_EXIT: "window_exit",
        _rk.STATUS_SPIKE_LIMIT: "spike_limit",
        _rk.STATUS_SECTION_LIMIT: "section_limit",
    }[status]


def _refine_root(ts, cs, i, comp, level):
    """Root of component ``comp`` minus ``level`` on step i of the dense output."""

    def g(x):
        return _rk.dense_eval(ts, cs, np.array([x]))[0, comp] - level

    a, b = ts[i], ts[i + 1]
    ga, gb = g(a), g(b)
    if ga == 0.0:
        return a
    if gb == 0.0 or ga * gb > 0:
        return b
    return brentq(g, a, b, xtol=1e-13, rtol=4 * np.finfo(float).eps, maxiter=200)


def _spike_times(t, y, cont, threshold, rearm=SPIKE_REARM):
    v = y[:, 0]
    armed = v[0] < threshold
    out = []
    for i in range(1, v.shape[0]):
        if armed and v[i] >= threshold and v[i - 1] < threshold:
            out.append(_refine_root(t, cont, i - 1, 0, threshold))
            armed = False
        elif not armed and v[i] < threshold - rearm:
            armed = True
    return out


def _section_events(t, y, cont, sec: Section, first_spike):
    n = y[:, 1]
    if sec.direction > 0:
        idx = np.nonzero((n[:-1] < sec.rho) & (n[1:] >= sec.rho))[0]
    else:
        idx = np.nonzero((n[:-1] > sec.rho) & (n[1:] <= sec.rho))[0]
    out = []
    for i in idx:
        if sec.arm_on_spike and (first_spike is None or t[i + 1] < first_spike):
            continue
        tc = _refine_root(t, cont, i, 1, sec.rho)
        vc = float(_rk.dense_eval(t, cont, np.array([tc]))[0, 0])
        if sec.v_window[0] <= vc <= sec.v_window[1]:
            out.append(Event(float(tc), "section_cross", {"v": vc, "n": sec.rho}))
    return out


def _assemble(p, ts, ys, cs, status_code, opts, segment_starts=(0.0,), seg_status=None):
    events = []
    spikes = _spike_times(ts, ys, cs, opts.spike_threshold)
    starts = np.asarray(segment_starts)
    for ts_ in spikes:
        seg = int(np.searchsorted(starts, ts_, side="right") - 1)
        events.append(Event(float(ts_), "spike", {"segment": seg}))
    if opts.section is not None:
        first = spikes[0] if spikes else None
        for e in _section_events(ts, ys, cs, opts.section, first):
            seg = int(np.searchsorted(starts, e.t, side="right") - 1)
            events.append(Event(e.t, e.kind, {**e.payload, "segment": seg}))
    if status_code in _STATUS_EVENT:
        events.append(
            Event(
                float(ts[-1]),
                _STATUS_EVENT[status_code],
                {"v": float(ys[-1, 0]), "n": float(ys[-1, 1]), "segment": len(segment_starts) - 1},
            )
        )
    events.sort(key=lambda e: e.t)
    return Trajectory(
        t=ts,
        y=ys,
        cont=cs,
        events=tuple(events),
        params=p,
        direction=opts.direction,
        status=_status_name(status_code),
        segment_starts=tuple(float(s) for s in segment_starts),
    )


def integrate(p: ModelParams, s0: PhaseState, opts: IntegratorOptions = IntegratorOptions()) -> Trajectory:
    """Adaptive Dormand-Prince 5(4) solution from ``s0`` up to ``opts.t_end``.

    Stops early on convergence to an equilibrium, on leaving the divergence
    window, or when a configured spike/section count is reached.
    """
    y0 = s0.as_array() if isinstance(s0, PhaseState) else np.asarray(s0, dtype=float)
    ts, ys, cs, status = _raw_run(p, y0, opts, opts.t_end, opts.stop_on_convergence)
    return _assemble(p, ts, ys, cs, status, opts)


def integrate_protocol(
    p: ModelParams,
    s0: PhaseState,
    proto: StimulusProtocol,
    opts: IntegratorOptions = IntegratorOptions(),
) -> Trajectory:
    """Integrate with I_app switched per protocol segment; the state is continuous at switches.

    ``opts.t_end`` is ignored; convergence stopping applies to the last segment only.
    """
    y = s0.as_array() if isinstance(s0, PhaseState) else np.asarray(s0, dtype=float)
    t_parts, y_parts, c_parts = [], [], []
    starts = []
    offset = 0.0
    status = _rk.STATUS_T_END
    last = len(proto.segments) - 1
    for j, (dur, i_app) in enumerate(proto.segments):
        pj = p.with_current(i_app)
        ts, ys, cs, status = _raw_run(pj, y, opts, dur, opts.stop_on_convergence and j == last)
        starts.append(offset)
        if j == 0:
            t_parts.append(ts + offset)
            y_parts.append(ys)
        else:
            t_parts.append(ts[1:] + offset)
            y_parts.append(ys[1:])
        # dense-output rows hold absolute states, so they concatenate unchanged
        c_parts.append(cs)
        offset += float(ts[-1])
        y = ys[-1]
        if status in (_rk.STATUS_WINDOW_EXIT, _rk.STATUS_SPIKE_LIMIT, _rk.STATUS_SECTION_LIMIT):
            break
    ts = np.concatenate(t_parts)
    ys = np.concatenate(y_parts)
    cs = np.concatenate(c_parts)
    return _assemble(p, ts, ys, cs, status, opts, segment_starts=tuple(starts))


def detect_spikes(traj: Trajectory, threshold: float = DEFAULT_SPIKE_THRESHOLD) -> list[float]:
    """Upward crossings of V = threshold, re-armed once V drops below threshold - 0.5."""
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    if traj.cont.shape[0] == 0:
        return []
    return _spike_times(traj.t, traj.y, traj.cont, threshold)


def slow_time_options(p: ModelParams, tau_end: float, **kw) -> IntegratorOptions:
    """Options for integrating up to slow time tau_end = eps t_end."""
    return IntegratorOptions(t_end=tau_end / p.epsilon, **kw)


def integrate_layer(i_app: float, s0: PhaseState, opts: IntegratorOptions = IntegratorOptions()) -> Trajectory:
    """Fast flow V' = V - V**3/3 - n**2 + I_app with n frozen (the eps = 0 limit).

    Convergence is checked over unit time intervals.
    """
    p = ModelParams(1.0, float(i_app), 0.0, 0.0)
    y0 = s0.as_array() if isinstance(s0, PhaseState) else np.asarray(s0, dtype=float)
    ts, ys, cs, status = _raw_run(p, y0, opts, opts.t_end, opts.stop_on_convergence, layer=True)
    tr = _assemble(p, ts, ys, cs, status, opts)
    return Trajectory(tr.t, tr.y, tr.cont, tr.events, None, tr.direction, tr.status, tr.segment_starts)
