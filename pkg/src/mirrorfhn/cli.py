"""Command-line entry point: JSON experiment configs in, CSV/JSON/SVG artifacts out.

Every subcommand reads an optional ``--config`` file, fills defaults, validates
the result against a per-command JSON schema and writes its artifacts into
``--out``. Exit codes: 0 success (including in-band absence findings),
2 configuration error, 3 integrator failure.
"""
from __future__ import annotations

import argparse
import copy
import json
import sys
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

import jsonschema
import numpy as np

from . import classify, continuation, gspt
from .dynamics import IntegrationError, IntegratorOptions, StimulusProtocol, integrate, integrate_protocol
from .equilibria import find_equilibria
from .io import atomic_write, bifdiag_svg, chart_svg, csv_text, dict_rows_csv, json_text
from .model import I_STAR, ModelParams, PhaseState

SCHEMA_VERSION = 1
EXIT_OK, EXIT_CONFIG, EXIT_INTEGRATOR = 0, 2, 3

REGION_IV = {"epsilon": 0.02, "i_app": I_STAR, "v0": -0.3, "n0": -0.1586}


class ConfigError(ValueError):
    pass


# --- schemas ------------------------------------------------------------------

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_PAIR = {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}
_PARAMS = {
    "type": "object",
    "properties": {"epsilon": _POS, "i_app": _NUM, "v0": _NUM, "n0": _NUM},
    "required": ["epsilon", "i_app", "v0", "n0"],
    "additionalProperties": False,
}
_TOL = {"type": "number", "exclusiveMinimum": 0, "maximum": 1e-2}


def _obj(props: dict, required: Sequence[str] = ()) -> dict:
    base = {"schema_version": {"const": SCHEMA_VERSION}, "command": {"type": "string"}}
    return {
        "type": "object",
        "properties": {**base, **props},
        "required": ["schema_version", "command", *required],
        "additionalProperties": False,
    }


SCHEMAS: dict[str, dict] = {
    "simulate": _obj(
        {
            "params": _PARAMS,
            "initial": _PAIR,
            "t_end": _POS,
            "protocol": {"type": ["array", "null"], "items": _PAIR},
            "rel_tol": _TOL,
            "abs_tol": _TOL,
            "max_step": _POS,
            "spike_threshold": _NUM,
            "stop_on_convergence": {"type": "boolean"},
        },
        ["params", "initial"],
    ),
    "equilibria": _obj({"params": _PARAMS}, ["params"]),
    "bifdiag": _obj(
        {
            "params": _PARAMS,
            "i_range": _PAIR,
            "cycle_grid": {"type": "integer", "minimum": 0},
            "homoclinic": {"type": "boolean"},
            "criticality": {"type": "boolean"},
        },
        ["params", "i_range"],
    ),
    "chart": _obj(
        {
            "v0_range": _PAIR,
            "n0_range": _PAIR,
            "grid": {"type": "integer", "minimum": 2},
            "epsilon": _POS,
            "cycle_scan": {"type": "boolean"},
            "workers": {"type": "integer", "minimum": 1},
        }
    ),
    "classify": _obj({"v0": _NUM, "n0": _NUM, "epsilon": _POS, "cycle_scan": {"type": "boolean"}}, ["v0", "n0"]),
    "signatures": _obj(
        {
            "params": _PARAMS,
            "deltas": {"type": "array", "items": _POS, "minItems": 1},
            "i_grid": {"type": ["array", "null"], "items": _NUM},
            "slope_delta": _NUM,
        },
        ["params"],
    ),
    "gspt": _obj(
        {
            "task": {"enum": ["ic-sweep", "bistability", "absence", "latency", "gap", "singular-orbit"]},
            "v0": _NUM,
            "n0": _NUM,
            "epsilon": _POS,
            "epsilons": {"type": "array", "items": _POS, "minItems": 1},
            "deltas": {"type": "array", "items": _POS, "minItems": 2},
            "i_window": _PAIR,
            "k_points": {"type": "integer", "minimum": 2},
            "initial": _PAIR,
            "i_app": _NUM,
        },
        ["task", "v0", "n0"],
    ),
}

DEFAULTS: dict[str, dict] = {
    "simulate": {
        "params": {**REGION_IV, "i_app": 0.66},
        "initial": [-0.5, -0.05],
        "t_end": 5000.0,
        "protocol": None,
        "rel_tol": 1e-8,
        "abs_tol": 1e-10,
        "max_step": 0.1,
        "spike_threshold": 1.0,
        "stop_on_convergence": True,
    },
    "equilibria": {"params": REGION_IV},
    "bifdiag": {"params": REGION_IV, "i_range": [0.55, 0.75], "cycle_grid": 21, "homoclinic": True, "criticality": False},
    "chart": {
        "v0_range": list(classify.CHART_V0),
        "n0_range": list(classify.CHART_N0),
        "grid": classify.CHART_GRID,
        "epsilon": 0.02,
        "cycle_scan": False,
        "workers": 1,
    },
    "classify": {"v0": -0.3, "n0": -0.1586, "epsilon": 0.02, "cycle_scan": True},
    "signatures": {"params": REGION_IV, "deltas": [1e-4, 1e-3, 1e-2, 1e-1], "i_grid": None, "slope_delta": 0.5},
    "gspt": {
        "task": "ic-sweep",
        "v0": -0.3,
        "n0": -0.1586,
        "epsilon": 0.02,
        "epsilons": list(gspt.DEFAULT_EPSILONS),
        "deltas": [float(d) for d in np.logspace(-4, -1, 7)],
        "i_window": None,
        "k_points": 9,
        "initial": None,
        "i_app": I_STAR,
    },
}
# optional pairs default to null and are then resolved by the command
for _key in ("i_window", "initial"):
    SCHEMAS["gspt"]["properties"][_key] = {"anyOf": [_PAIR, {"type": "null"}]}


def resolve_config(command: str, user: Optional[dict]) -> dict:
    """Merge ``user`` over defaults and validate; raises ConfigError."""
    if command not in SCHEMAS:
        raise ConfigError(f"unknown command {command!r}")
    user = {} if user is None else user
    if not isinstance(user, dict):
        raise ConfigError("config must be a JSON object")
    if user.get("command", command) != command:
        raise ConfigError(f"config is for command {user['command']!r}, not {command!r}")
    cfg = {"schema_version": SCHEMA_VERSION, "command": command, **copy.deepcopy(DEFAULTS[command])}
    for k, v in user.items():
        if isinstance(v, dict) and isinstance(cfg.get(k), dict):
            cfg[k] = {**cfg[k], **v}
        else:
            cfg[k] = v
    validate_config(cfg)
    return cfg


def validate_config(cfg: dict, schema: Optional[dict] = None) -> None:
    schema = SCHEMAS.get(cfg.get("command")) if schema is None else schema
    if schema is None:
        raise ConfigError(f"unknown command {cfg.get('command')!r}")
    try:
        jsonschema.validate(cfg, schema)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {exc.message}") from None
    try:
        if "params" in cfg:
            ModelParams(**cfg["params"])
        if "epsilon" in cfg:
            ModelParams(cfg["epsilon"], I_STAR, 0.0, 0.0)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    for key in ("i_range", "v0_range", "n0_range", "i_window"):
        r = cfg.get(key)
        if r is not None and not r[0] < r[1]:
            raise ConfigError(f"{key} must be increasing, got {r}")


# --- commands -----------------------------------------------------------------


class _Out:
    """Collects artifacts for one run; every path is forced inside ``root``."""

    def __init__(self, root: Path, cfg: dict):
        self.root = root.resolve()
        self.cfg = cfg
        self.written: list[str] = []

    def _path(self, name: str) -> Path:
        p = (self.root / name).resolve()
        if self.root not in p.parents:
            raise ConfigError(f"refusing to write outside {self.root}: {name}")
        return p

    def text(self, name: str, data: str) -> None:
        atomic_write(self._path(name), data)
        self.written.append(name)

    def report(self, name: str, body: dict) -> None:
        doc = {"schema_version": SCHEMA_VERSION, "config": self.cfg, "schema": SCHEMAS[self.cfg["command"]], **body}
        self.text(name, json_text(doc))


def _params(cfg) -> ModelParams:
    return ModelParams(**cfg["params"])


def cmd_simulate(cfg: dict, out: _Out, svg: bool) -> int:
    p = _params(cfg)
    opts = IntegratorOptions(
        t_end=cfg["t_end"],
        rel_tol=cfg["rel_tol"],
        abs_tol=cfg["abs_tol"],
        max_step=cfg["max_step"],
        spike_threshold=cfg["spike_threshold"],
        stop_on_convergence=cfg["stop_on_convergence"],
    )
    s0 = PhaseState(*cfg["initial"])
    if cfg["protocol"] is not None:
        try:
            proto = StimulusProtocol(tuple(tuple(seg) for seg in cfg["protocol"]))
        except ValueError as exc:
            raise ConfigError(f"protocol: {exc}") from None
        tr = integrate_protocol(p, s0, proto, opts)
    else:
        tr = integrate(p, s0, opts)
    out.text("trajectory.csv", tr.to_csv())
    out.report("events.json", {"trajectory": tr.to_json_dict(), "spike_times": tr.spike_times})
    return EXIT_OK


def cmd_equilibria(cfg: dict, out: _Out, svg: bool) -> int:
    eqs = find_equilibria(_params(cfg))
    rows = [
        (e.state.v, e.state.n, e.kind, e.branch, e.interaction, e.eigenvalues[0].real, e.eigenvalues[0].imag,
         e.eigenvalues[1].real, e.eigenvalues[1].imag)
        for e in eqs
    ]
    out.text("equilibria.csv", csv_text(["V", "n", "kind", "branch", "interaction", "re1", "im1", "re2", "im2"], rows))
    out.report("equilibria.json", {"equilibria": [e.as_dict() for e in eqs]})
    return EXIT_OK


def cmd_bifdiag(cfg: dict, out: _Out, svg: bool) -> int:
    d = continuation.bifurcation_diagram(
        _params(cfg), tuple(cfg["i_range"]), cfg["cycle_grid"], cfg["homoclinic"], cfg["criticality"]
    )
    pts = [b.as_dict() for b in d.points]
    out.text("points.csv", csv_text(["kind", "i_crit", "V", "n", "residual"],
                                    [(b["kind"], b["i_crit"], b["v"], b["n"], b["residual"]) for b in pts]))
    out.text("branch.csv", dict_rows_csv(d.branch_rows(), ["i_app", "v", "n", "kind", "stable"]))
    out.text("cycles.csv", dict_rows_csv(d.cycle_rows(), ["i_app", "present", "period", "v_min", "v_max"]))
    findings = {}
    if cfg["homoclinic"] and "homoclinic" not in d.kinds():
        findings["homoclinic"] = "absent in range"
    out.report("bifdiag.json", {"diagram": d.to_json_dict(), "findings": findings})
    if svg:
        out.text("bifdiag.svg", bifdiag_svg(d))
    return EXIT_OK


def cmd_chart(cfg: dict, out: _Out, svg: bool) -> int:
    ch = classify.chart(
        tuple(cfg["v0_range"]), tuple(cfg["n0_range"]), cfg["grid"], cfg["epsilon"], cfg["cycle_scan"], cfg["workers"]
    )
    out.text("chart.csv", csv_text(["v0", "n0", "label"], ch.rows()))
    out.text("tc_line.csv", csv_text(["v0", "n0"], ch.tc_line))
    out.text("sn_curves.csv", csv_text(["branch", "v0", "V", "n0"], ch.sn_points))
    counts = {lab: int(np.sum(ch.labels == lab)) for lab in sorted(ch.present())}
    out.report("chart.json", {"labels_present": sorted(ch.present()), "counts": counts, "pitchfork": list(ch.pitchfork)})
    if svg:
        out.text("chart.svg", chart_svg(ch))
    return EXIT_OK


def cmd_classify(cfg: dict, out: _Out, svg: bool) -> int:
    try:
        lab = classify.region_at(cfg["v0"], cfg["n0"], cfg["epsilon"], cfg["cycle_scan"])
    except classify.Unclassifiable as exc:
        out.report("classify.json", {"region": None, "finding": str(exc)})
        return EXIT_OK
    ev = classify.coherence_evidence(lab, cfg["v0"], cfg["n0"], cfg["epsilon"])
    out.report("classify.json", {"region": lab.region, "evidence": lab.evidence, "coherence": ev})
    return EXIT_OK


def cmd_signatures(cfg: dict, out: _Out, svg: bool) -> int:
    kw = {"deltas": tuple(cfg["deltas"]), "slope_delta": cfg["slope_delta"]}
    if cfg["i_grid"] is not None:
        kw["i_grid"] = cfg["i_grid"]
    rep = classify.signature_battery(_params(cfg), **kw)
    out.text("latency.csv", csv_text(["delta_i", "latency"], rep.latency_curve))
    out.text("fi.csv", csv_text(["i_app", "frequency"], rep.fi_curve))
    out.report("signatures.json", {"signatures": rep.as_dict()})
    return EXIT_OK


def cmd_gspt(cfg: dict, out: _Out, svg: bool) -> int:
    task, v0, n0 = cfg["task"], cfg["v0"], cfg["n0"]
    if task == "ic-sweep":
        study = gspt.ic_sweep(v0, n0, cfg["epsilons"])
    elif task == "bistability":
        study = gspt.bistability_persistence(v0, n0, cfg["epsilons"])
    elif task == "latency":
        study = gspt.latency_scaling(v0, n0, cfg["epsilon"], cfg["deltas"])
    elif task == "absence":
        rep = gspt.homoclinic_absence_check(v0, n0, cfg["epsilons"])
        rows = [(e, a, c) for e, a, c in zip(rep.epsilons, rep.absent, rep.constant_sign)]
        out.text("absence.csv", csv_text(["epsilon", "absent", "constant_sign"], rows))
        out.report("gspt.json", {"task": task, "report": rep, "all_absent": rep.all_absent})
        return EXIT_OK
    elif task == "gap":
        p = ModelParams(cfg["epsilon"], I_STAR, v0, n0)
        window = cfg["i_window"]
        if window is None:
            i_sh = continuation.find_homoclinic(p).i_crit
            window = [i_sh - 0.01, i_sh + 0.01]
        rep = gspt.gap_monotonicity_check(p, tuple(window), cfg["k_points"])
        out.text("gap.csv", csv_text(["i_app", "gap", "sign"], zip(rep.currents, rep.gaps, rep.signs)))
        out.report("gspt.json", {"task": task, "report": rep})
        return EXIT_OK
    else:
        p = ModelParams(cfg["epsilon"], cfg["i_app"], v0, n0)
        s0 = PhaseState(*(cfg["initial"] or [2.0, n0 + 1.0]))
        segs = gspt.singular_orbit(p, s0)
        out.report("gspt.json", {"task": task, "segments": [{"flow": a, "branch": b, "end": c} for a, b, c in segs]})
        return EXIT_OK
    out.text(f"{task}.csv", study.to_csv())
    out.report("gspt.json", {"task": task, "study": study.to_json_dict()})
    return EXIT_OK


COMMANDS: dict[str, Callable[[dict, _Out, bool], int]] = {
    "simulate": cmd_simulate,
    "equilibria": cmd_equilibria,
    "bifdiag": cmd_bifdiag,
    "chart": cmd_chart,
    "classify": cmd_classify,
    "signatures": cmd_signatures,
    "gspt": cmd_gspt,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mirrorfhn", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", type=Path, help="JSON experiment config (defaults used when omitted)")
        sp.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        sp.add_argument("--svg", action="store_true", help="also write a static SVG where supported")
        sp.add_argument("--seedless", action="store_true", help="accepted for reproducibility scripts; nothing is random")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        user: Any = None
        if args.config is not None:
            try:
                user = json.loads(args.config.read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config: {exc}") from None
        cfg = resolve_config(args.command, user)
        return COMMANDS[args.command](cfg, _Out(args.out, cfg), args.svg)
    except (ConfigError, ValueError) as exc:
        # domain preconditions (ordering of sweeps, ranges) are config problems too
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IntegrationError as exc:
        print(f"integrator failure: {exc}", file=sys.stderr)
        return EXIT_INTEGRATOR


if __name__ == "__main__":
    raise SystemExit(main())
