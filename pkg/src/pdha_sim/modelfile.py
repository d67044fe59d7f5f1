"""Model file loading and saving.

Files are JSON with a top-level "schema": 1. Unknown keys are rejected
and semantic problems are collected and reported together rather than
one at a time.
"""
from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from .automaton import (
    DiscretizationSpec,
    GuardDecl,
    InitSpec,
    ModelDescription,
    ModePde,
    RegionDecl,
    ResetDecl,
    SourceTerm,
)
from .errors import ModelFileError
from .mesh import SpaceDomain, validate_regions, Region
from .schemes import BoundaryCondition

SCHEMA_VERSION = 1

_TOP_KEYS = {
    "schema", "name", "domain", "modes", "boundary", "regions",
    "init", "guards", "resets", "discretization",
}


class _Problems:
    def __init__(self):
        self.items: list[str] = []

    def add(self, msg: str) -> None:
        self.items.append(msg)

    def check_keys(self, obj: dict, allowed: set[str], where: str) -> None:
        unknown = set(obj) - allowed
        if unknown:
            self.add(f"{where}: unknown keys {sorted(unknown)}")


def _get(obj: dict, key: str, kind, where: str, problems: _Problems, default=None, required=True):
    if key not in obj:
        if required:
            problems.add(f"{where}: missing key {key!r}")
        return default
    val = obj[key]
    if kind is float and isinstance(val, (int, float)) and not isinstance(val, bool):
        return float(val)
    if kind is int and isinstance(val, int) and not isinstance(val, bool):
        return val
    if not isinstance(val, kind):
        problems.add(f"{where}: key {key!r} should be {getattr(kind, '__name__', kind)}")
        return default
    return val


def _parse_source(obj: Any, where: str, problems: _Problems) -> SourceTerm:
    if obj is None:
        return SourceTerm()
    if not isinstance(obj, dict):
        problems.add(f"{where}: source must be an object")
        return SourceTerm()
    kind = _get(obj, "kind", str, where, problems, default="zero")
    if kind == "zero":
        problems.check_keys(obj, {"kind"}, where)
        return SourceTerm()
    if kind == "affine":
        problems.check_keys(obj, {"kind", "slope", "intercept"}, where)
        return SourceTerm(
            kind="affine",
            slope=_get(obj, "slope", float, where, problems, default=0.0),
            intercept=_get(obj, "intercept", float, where, problems, default=0.0),
        )
    if kind == "tabulated":
        problems.check_keys(obj, {"kind", "values"}, where)
        values = _get(obj, "values", list, where, problems, default=[])
        return SourceTerm(kind="tabulated", values=tuple(float(v) for v in values or [0.0]))
    if kind == "expression":
        problems.check_keys(obj, {"kind", "formula"}, where)
        formula = _get(obj, "formula", str, where, problems, default="0.0")
        term = SourceTerm(kind="expression", formula=formula)
        try:
            term.evaluate(np.asarray([0.0, 1.0]), 0.0)
        except Exception as exc:  # noqa: BLE001 - report, don't crash
            problems.add(f"{where}: formula does not evaluate: {exc}")
        return term
    problems.add(f"{where}: unknown source kind {kind!r}")
    return SourceTerm()


def _parse_bc(obj: Any, where: str, problems: _Problems) -> BoundaryCondition:
    if not isinstance(obj, dict):
        problems.add(f"{where}: boundary must be an object")
        return BoundaryCondition("mirror")
    problems.check_keys(obj, {"kind", "value"}, where)
    kind = _get(obj, "kind", str, where, problems, default="mirror")
    value = _get(obj, "value", float, where, problems, default=0.0, required=False)
    try:
        return BoundaryCondition(kind, value)
    except ValueError as exc:
        problems.add(f"{where}: {exc}")
        return BoundaryCondition("mirror")


def load_model(path: str | Path) -> ModelDescription:
    """Parse and validate a model file.

    Raises:
        ModelFileError: on JSON errors (with line/column) or semantic
            problems; every violation found is listed.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ModelFileError([f"cannot read {path}: {exc}"]) from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFileError([f"parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}"]) from exc
    return model_from_dict(doc)


def model_from_dict(doc: Any) -> ModelDescription:
    problems = _Problems()
    if not isinstance(doc, dict):
        raise ModelFileError(["top level must be an object"])
    problems.check_keys(doc, _TOP_KEYS, "top level")
    schema = _get(doc, "schema", int, "top level", problems)
    if schema is not None and schema != SCHEMA_VERSION:
        problems.add(f"unsupported schema version {schema}; this build reads {SCHEMA_VERSION}")
    name = _get(doc, "name", str, "top level", problems, default="model")

    dom_obj = _get(doc, "domain", dict, "top level", problems, default={})
    problems.check_keys(dom_obj or {}, {"lower", "upper"}, "domain")
    lower = _get(dom_obj or {}, "lower", float, "domain", problems, default=0.0)
    upper = _get(dom_obj or {}, "upper", float, "domain", problems, default=1.0)
    try:
        domain = SpaceDomain(lower, upper)
    except ValueError as exc:
        problems.add(f"domain: {exc}")
        domain = SpaceDomain(0.0, 1.0)

    modes: list[ModePde] = []
    mode_objs = _get(doc, "modes", list, "top level", problems, default=[])
    for k, mo in enumerate(mode_objs or []):
        where = f"modes[{k}]"
        if not isinstance(mo, dict):
            problems.add(f"{where}: must be an object")
            continue
        problems.check_keys(mo, {"name", "flow", "invariant"}, where)
        mname = _get(mo, "name", str, where, problems, default=f"mode{k}")
        flow = _get(mo, "flow", dict, where, problems, default={})
        problems.check_keys(flow or {}, {"kind", "alpha", "speed", "source"}, f"{where}.flow")
        fkind = _get(flow or {}, "kind", str, f"{where}.flow", problems, default="diffusion")
        alpha = _get(flow or {}, "alpha", float, f"{where}.flow", problems, default=0.0, required=False)
        speed = _get(flow or {}, "speed", float, f"{where}.flow", problems, default=0.0, required=False)
        source = _parse_source((flow or {}).get("source"), f"{where}.flow.source", problems)
        if fkind not in ("diffusion", "advection"):
            problems.add(f"{where}.flow: unknown kind {fkind!r}")
            fkind = "diffusion"
        if fkind == "advection" and speed == 0.0:
            problems.add(f"{where}.flow: advection needs a nonzero speed")
            speed = 1.0
        invariant = None
        if mo.get("invariant") is not None:
            box = mo["invariant"]
            if not (isinstance(box, list) and len(box) == 2):
                problems.add(f"{where}: invariant must be [lo, hi]")
            else:
                invariant = (float(box[0]), float(box[1]))
                if invariant[0] > invariant[1]:
                    problems.add(f"{where}: invariant box is reversed")
        modes.append(
            ModePde(name=mname, kind=fkind, alpha=alpha, speed=speed, source=source, invariant=invariant)
        )
    mode_names = [mp.name for mp in modes]
    if len(set(mode_names)) != len(mode_names):
        problems.add("modes: duplicate names")
    if not modes:
        problems.add("modes: at least one mode is required")
        modes = [ModePde(name="mode0", kind="diffusion", alpha=1.0)]
        mode_names = ["mode0"]

    bc_obj = _get(doc, "boundary", dict, "top level", problems, default={})
    problems.check_keys(bc_obj or {}, {"left", "right"}, "boundary")
    left = _parse_bc((bc_obj or {}).get("left", {}), "boundary.left", problems)
    right = _parse_bc((bc_obj or {}).get("right", {}), "boundary.right", problems)

    regions: list[RegionDecl] = []
    region_objs = _get(doc, "regions", list, "top level", problems, default=[])
    for k, ro in enumerate(region_objs or []):
        where = f"regions[{k}]"
        if not isinstance(ro, dict):
            problems.add(f"{where}: must be an object")
            continue
        problems.check_keys(ro, {"interval", "closed_left", "closed_right", "mode"}, where)
        interval = _get(ro, "interval", list, where, problems, default=[0.0, 1.0])
        if not (isinstance(interval, list) and len(interval) == 2):
            problems.add(f"{where}: interval must be [a, b]")
            interval = [0.0, 1.0]
        rmode = _get(ro, "mode", str, where, problems, default=mode_names[0])
        if rmode not in mode_names:
            problems.add(f"{where}: undeclared mode {rmode!r}")
        regions.append(
            RegionDecl(
                lower=float(interval[0]),
                upper=float(interval[1]),
                mode=rmode,
                closed_left=bool(ro.get("closed_left", True)),
                closed_right=bool(ro.get("closed_right", False)),
            )
        )
    if not regions:
        problems.add("regions: at least one region is required")
    else:
        mode_ids = {nm: i for i, nm in enumerate(mode_names)}
        interval_regions = [
            Region(r.lower, r.upper, mode_ids.get(r.mode, 0), r.closed_left, r.closed_right)
            for r in regions
        ]
        for msg in validate_regions(interval_regions, domain):
            problems.add(f"regions: {msg}")

    init_obj = _get(doc, "init", dict, "top level", problems, default={"constant": 0.0})
    problems.check_keys(init_obj or {}, {"constant", "samples", "expression"}, "init")
    init_keys = [k for k in ("constant", "samples", "expression") if k in (init_obj or {})]
    if len(init_keys) != 1:
        problems.add("init: exactly one of constant | samples | expression is required")
        init = InitSpec(kind="constant", value=0.0)
    elif init_keys[0] == "constant":
        init = InitSpec(kind="constant", value=float(init_obj["constant"]))
    elif init_keys[0] == "samples":
        init = InitSpec(kind="samples", values=tuple(float(v) for v in init_obj["samples"]))
    else:
        init = InitSpec(kind="expression", formula=str(init_obj["expression"]))
        try:
            init.evaluate(np.asarray([0.0, 1.0]))
        except Exception as exc:  # noqa: BLE001
            problems.add(f"init: expression does not evaluate: {exc}")

    guards: list[GuardDecl] = []
    for k, go in enumerate(_get(doc, "guards", list, "top level", problems, default=[], required=False) or []):
        where = f"guards[{k}]"
        if not isinstance(go, dict):
            problems.add(f"{where}: must be an object")
            continue
        problems.check_keys(go, {"mode", "event", "direction", "threshold", "target"}, where)
        gmode = _get(go, "mode", str, where, problems, default=mode_names[0])
        target = _get(go, "target", str, where, problems, default=mode_names[0])
        direction = _get(go, "direction", str, where, problems, default="rising")
        for nm, what in ((gmode, "mode"), (target, "target")):
            if nm not in mode_names:
                problems.add(f"{where}: undeclared {what} {nm!r}")
        if direction not in ("rising", "falling"):
            problems.add(f"{where}: direction must be rising or falling")
            direction = "rising"
        if gmode == target:
            problems.add(f"{where}: source and target mode coincide")
        guards.append(
            GuardDecl(
                mode=gmode,
                event=_get(go, "event", str, where, problems, default=f"event{k}"),
                direction=direction,
                threshold=_get(go, "threshold", float, where, problems, default=0.0),
                target=target,
            )
        )

    resets: list[ResetDecl] = []
    guard_events = {g.event for g in guards}
    for k, ro in enumerate(_get(doc, "resets", list, "top level", problems, default=[], required=False) or []):
        where = f"resets[{k}]"
        if not isinstance(ro, dict):
            problems.add(f"{where}: must be an object")
            continue
        problems.check_keys(ro, {"event", "kind", "value"}, where)
        event = _get(ro, "event", str, where, problems, default="")
        kind = _get(ro, "kind", str, where, problems, default="identity")
        if event not in guard_events:
            problems.add(f"{where}: reset for undeclared event {event!r}")
        if kind not in ("identity", "set_to", "clamp_to_threshold"):
            problems.add(f"{where}: unknown reset kind {kind!r}")
            kind = "identity"
        value = _get(ro, "value", float, where, problems, default=math.nan, required=(kind == "set_to"))
        resets.append(ResetDecl(event=event, kind=kind, value=value))

    disc = None
    disc_obj = _get(doc, "discretization", dict, "top level", problems, default=None, required=False)
    if disc_obj is not None:
        problems.check_keys(disc_obj, {"m", "h", "scheme"}, "discretization")
        m = _get(disc_obj, "m", int, "discretization", problems, default=None, required=False)
        h = _get(disc_obj, "h", float, "discretization", problems, default=None, required=False)
        scheme = _get(disc_obj, "scheme", str, "discretization", problems, default=None, required=False)
        if (m is None) == (h is None):
            problems.add("discretization: exactly one of m | h is required")
        if scheme is not None and scheme not in ("second_central", "first_upwind", "characteristic"):
            problems.add(f"discretization: unknown scheme {scheme!r}")
        if h is not None and h > 0:
            cells = domain.length / h
            if abs(cells - round(cells)) > 1e-9:
                problems.add(f"discretization: h={h} does not tile the domain")
            else:
                m = int(round(cells)) + 1
        disc = DiscretizationSpec(m=m, h=h, scheme=scheme)

    if problems.items:
        raise ModelFileError(problems.items)
    return ModelDescription(
        name=name,
        domain=domain,
        modes=tuple(modes),
        boundary=(left, right),
        regions=tuple(regions),
        init=init,
        guards=tuple(guards),
        resets=tuple(resets),
        discretization=disc,
    )


def model_to_dict(model: ModelDescription) -> dict:
    """Serialize a ModelDescription; callables cannot round-trip."""

    def source_dict(src: SourceTerm):
        if src.kind == "zero":
            return None
        if src.kind == "affine":
            return {"kind": "affine", "slope": src.slope, "intercept": src.intercept}
        if src.kind == "tabulated":
            return {"kind": "tabulated", "values": list(src.values)}
        if src.kind == "expression":
            return {"kind": "expression", "formula": src.formula}
        raise ValueError("callable sources cannot be serialized")

    def bc_dict(bc: BoundaryCondition):
        out = {"kind": bc.kind}
        if bc.kind == "dirichlet":
            out["value"] = bc.value
        return out

    doc: dict = {
        "schema": SCHEMA_VERSION,
        "name": model.name,
        "domain": {"lower": model.domain.lower, "upper": model.domain.upper},
        "modes": [],
        "boundary": {"left": bc_dict(model.boundary[0]), "right": bc_dict(model.boundary[1])},
        "regions": [
            {
                "interval": [r.lower, r.upper],
                "closed_left": r.closed_left,
                "closed_right": r.closed_right,
                "mode": r.mode,
            }
            for r in model.regions
        ],
    }
    for mp in model.modes:
        flow: dict = {"kind": mp.kind}
        if mp.kind == "diffusion":
            flow["alpha"] = mp.alpha
        else:
            flow["speed"] = mp.speed
        src = source_dict(mp.source)
        if src is not None:
            flow["source"] = src
        entry: dict = {"name": mp.name, "flow": flow}
        if mp.invariant is not None:
            entry["invariant"] = list(mp.invariant)
        doc["modes"].append(entry)

    if model.init.kind == "constant":
        doc["init"] = {"constant": model.init.value}
    elif model.init.kind == "samples":
        doc["init"] = {"samples": list(model.init.values)}
    elif model.init.kind == "expression":
        doc["init"] = {"expression": model.init.formula}
    else:
        raise ValueError("callable init cannot be serialized")

    if model.guards:
        doc["guards"] = [
            {
                "mode": g.mode,
                "event": g.event,
                "direction": g.direction,
                "threshold": g.threshold,
                "target": g.target,
            }
            for g in model.guards
        ]
    if model.resets:
        doc["resets"] = [
            {"event": r.event, "kind": r.kind, **({"value": r.value} if r.kind == "set_to" else {})}
            for r in model.resets
        ]
    if model.discretization is not None:
        d: dict = {}
        if model.discretization.h is not None:
            d["h"] = model.discretization.h
        elif model.discretization.m is not None:
            d["m"] = model.discretization.m
        if model.discretization.scheme is not None:
            d["scheme"] = model.discretization.scheme
        doc["discretization"] = d
    return doc


def save_model(model: ModelDescription, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=2) + "\n")
