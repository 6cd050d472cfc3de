"""The run config document: a flat JSON object, format_version 1.

``load_config`` turns a document (optionally layered over a preset) into a
validated ``ConfigBundle``; ``dump_config`` is its inverse. Every problem
found is reported at once through ``ConfigError``.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import Any, Literal, Optional, Sequence, Union

from pydantic import BaseModel, ValidationError

from app.config import settings
from app.models.errors import ConfigError, NotFoundError, Violation
from app.models.schemas import (
    ConfigBundle,
    DispersalSpec,
    Grid,
    ICFamily,
    InitialConditionSpec,
    ModelConfig,
    OutcomeThresholds,
    Preset,
    StepControl,
)
from app.services.diagnostics import default_thresholds
from app.services.scenarios import get_preset
from app.services.validation import collect_violations, step_control_violations, threshold_violations

SPECIES = ("u", "v")
IC_FIELDS = ("family", "center", "width", "amplitude", "center2", "width2", "amplitude2", "table")


class ConfigDocument(BaseModel):
    """Every key the document accepts. d1, d2 and m have no default."""

    model_config = {"extra": "forbid"}

    format_version: Literal[1] = 1
    preset: Optional[str] = None

    length: float = 1.0
    n_cells: int = 300
    d1: float
    d2: float
    k_u: float = 0.0
    k_v: float = 1.0
    p_u: float = 2.0
    p_v: float = 2.0
    epsilon: float = 1e-4
    epsilon_u: Optional[float] = None
    epsilon_v: Optional[float] = None
    drift_q: float = 0.5
    m: Union[float, list[float]]
    drift_enabled: bool = True
    reaction_enabled: bool = True

    t_end: float = 10.0
    snapshots: Optional[list[float]] = None

    cfl_safety: float = settings.cfl_safety
    dt_max: float = settings.dt_max
    dt_min: float = settings.dt_min
    fixed_dt: Optional[float] = None
    nonneg_clip_tolerance: float = settings.nonneg_clip_tolerance
    observe_every: int = settings.observe_every

    exclusion_threshold: Optional[float] = None
    survival_threshold: Optional[float] = None

    ic_u_family: ICFamily = ICFamily.GAUSSIAN_BUMP
    ic_u_center: float = 0.25
    ic_u_width: float = 0.08
    ic_u_amplitude: float = 0.5
    ic_u_center2: float = 0.5
    ic_u_width2: float = 0.1
    ic_u_amplitude2: float = 0.0
    ic_u_table: Optional[list[float]] = None

    ic_v_family: ICFamily = ICFamily.GAUSSIAN_BUMP
    ic_v_center: float = 0.75
    ic_v_width: float = 0.08
    ic_v_amplitude: float = 0.5
    ic_v_center2: float = 0.5
    ic_v_width2: float = 0.1
    ic_v_amplitude2: float = 0.0
    ic_v_table: Optional[list[float]] = None


CONFIG_KEYS = tuple(ConfigDocument.model_fields)


# --------------- Parsing ---------------

def _parse_error(message: str, line: int = 0, column: int = 0) -> ConfigError:
    where = f"line {line}, column {column}: " if line else ""
    return ConfigError([Violation(code="PARSE_ERROR", field="", message=f"{where}{message}")])


def parse_text(text: str) -> dict[str, Any]:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise _parse_error(e.msg, e.lineno, e.colno) from e
    if not isinstance(raw, dict):
        raise _parse_error("document must be a JSON object")
    return raw


def parse_value(text: str) -> Any:
    """JSON literal, then a fraction like 7/4, else the bare string."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        pass
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError):
        return text


def apply_overrides(raw: dict[str, Any], overrides: Sequence[str]) -> dict[str, Any]:
    """Layer ``key=value`` strings over raw; keys are checked later with the rest."""
    merged = dict(raw)
    bad = []
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            bad.append(Violation(
                code="INVALID_VALUE", field=item, message="override must look like key=value",
            ))
            continue
        merged[key.strip()] = parse_value(value)
    if bad:
        raise ConfigError(bad)
    return merged


# --------------- Document <-> bundle ---------------

def _violations_from(e: ValidationError) -> list[Violation]:
    found = []
    for err in e.errors():
        key = str(err["loc"][0]) if err["loc"] else ""
        if err["type"] == "extra_forbidden":
            found.append(Violation(code="UNKNOWN_KEY", field=key, message=f"unknown key {key!r}"))
        elif err["type"] == "missing":
            found.append(Violation(code="MISSING_KEY", field=key, message=f"{key} is required"))
        else:
            found.append(Violation(code="INVALID_VALUE", field=key, message=err["msg"]))
    return found


def document_from_preset(preset: Preset) -> dict[str, Any]:
    """The preset as plain document keys (without the ``preset`` key itself)."""
    cfg = preset.cfg
    doc: dict[str, Any] = {
        "length": cfg.grid.length,
        "n_cells": cfg.grid.n_cells,
        "d1": cfg.disp_u.d,
        "d2": cfg.disp_v.d,
        "k_u": cfg.disp_u.k,
        "k_v": cfg.disp_v.k,
        "p_u": cfg.disp_u.p,
        "p_v": cfg.disp_v.p,
        **_epsilon_keys(cfg.disp_u, cfg.disp_v),
        "drift_q": cfg.drift_q,
        "m": cfg.resource_m,
        "drift_enabled": cfg.drift_enabled,
        "reaction_enabled": cfg.reaction_enabled,
        "t_end": preset.t_end,
        "snapshots": list(preset.snapshot_times),
    }
    for s, ic in zip(SPECIES, (preset.ic_u, preset.ic_v)):
        doc.update(_ic_keys(s, ic))
    return doc


def _epsilon_keys(disp_u: DispersalSpec, disp_v: DispersalSpec) -> dict[str, float]:
    """One shared epsilon key when the species agree, else one per species."""
    if disp_u.epsilon == disp_v.epsilon:
        return {"epsilon": disp_v.epsilon}
    return {"epsilon_u": disp_u.epsilon, "epsilon_v": disp_v.epsilon}


def _or(value: Optional[float], fallback: float) -> float:
    return fallback if value is None else value


def _ic_keys(species: str, ic: InitialConditionSpec) -> dict[str, Any]:
    keys = {}
    for name in IC_FIELDS:
        value = getattr(ic, name)
        if name == "family":
            value = value.value
        if value is not None:
            keys[f"ic_{species}_{name}"] = value
    return keys


def _merged(raw: dict[str, Any]) -> dict[str, Any]:
    name = raw.get("preset")
    if name is None:
        return dict(raw)
    if not isinstance(name, str):
        raise ConfigError([Violation(code="INVALID_VALUE", field="preset", message="preset must be a name")])
    try:
        base = document_from_preset(get_preset(name))
    except NotFoundError as e:
        raise ConfigError([Violation(code="INVALID_VALUE", field="preset", message=str(e))]) from e
    # A new horizon invalidates the preset's snapshot times
    if "t_end" in raw and "snapshots" not in raw:
        base.pop("snapshots")
    return {**base, **raw}


def bundle_from_document(doc: ConfigDocument) -> ConfigBundle:
    """Build and validate the run bundle; collects model, step and snapshot violations together."""
    model = ModelConfig(
        grid=Grid(length=doc.length, n_cells=doc.n_cells),
        disp_u=DispersalSpec(d=doc.d1, k=doc.k_u, p=doc.p_u, epsilon=_or(doc.epsilon_u, doc.epsilon)),
        disp_v=DispersalSpec(d=doc.d2, k=doc.k_v, p=doc.p_v, epsilon=_or(doc.epsilon_v, doc.epsilon)),
        drift_q=doc.drift_q,
        resource_m=doc.m,
        drift_enabled=doc.drift_enabled,
        reaction_enabled=doc.reaction_enabled,
    )
    step = StepControl(
        cfl_safety=doc.cfl_safety,
        dt_max=doc.dt_max,
        dt_min=doc.dt_min,
        t_end=doc.t_end,
        nonneg_clip_tolerance=doc.nonneg_clip_tolerance,
        fixed_dt=doc.fixed_dt,
        observe_every=doc.observe_every,
    )
    violations = collect_violations(model) + step_control_violations(step)

    snapshots = doc.snapshots if doc.snapshots is not None else [0.0, doc.t_end]
    outside = [t for t in snapshots if not 0.0 <= t <= doc.t_end]
    if outside:
        violations.append(Violation(
            code="INVALID_VALUE", field="snapshots",
            message=f"snapshot times {outside} outside [0, t_end={doc.t_end}]",
        ))
    exclusion = doc.exclusion_threshold
    survival = doc.survival_threshold
    violations += threshold_violations(exclusion, survival)
    if violations:
        raise ConfigError(violations)

    defaults = default_thresholds(model.m_sup, settings.exclusion_factor, settings.survival_factor)
    thresholds = OutcomeThresholds(
        exclusion=_or(exclusion, defaults.exclusion),
        survival=_or(survival, defaults.survival),
    )
    ics = [
        InitialConditionSpec(**{
            name: getattr(doc, f"ic_{s}_{name}") for name in IC_FIELDS
        })
        for s in SPECIES
    ]
    return ConfigBundle(
        model=model,
        ic_u=ics[0],
        ic_v=ics[1],
        step=step,
        thresholds=thresholds,
        snapshots=sorted(set(float(t) for t in snapshots)),
        preset=doc.preset,
    )


def bundle_from_raw(raw: dict[str, Any]) -> ConfigBundle:
    try:
        doc = ConfigDocument(**_merged(raw))
    except ValidationError as e:
        raise ConfigError(_violations_from(e)) from e
    return bundle_from_document(doc)


def load_config(source: Union[str, Path]) -> ConfigBundle:
    """Parse a document given as a path or as JSON text."""
    if isinstance(source, str) and source.lstrip().startswith("{"):
        return bundle_from_raw(parse_text(source))
    path = Path(source)
    if not path.is_file():
        raise NotFoundError(f"config file {path} not found")
    return bundle_from_raw(parse_text(path.read_text(encoding="utf-8")))


def document_from_bundle(bundle: ConfigBundle) -> dict[str, Any]:
    model, step = bundle.model, bundle.step
    doc: dict[str, Any] = {"format_version": 1}
    if bundle.preset is not None:
        doc["preset"] = bundle.preset
    doc.update({
        "length": model.grid.length,
        "n_cells": model.grid.n_cells,
        "d1": model.disp_u.d,
        "d2": model.disp_v.d,
        "k_u": model.disp_u.k,
        "k_v": model.disp_v.k,
        "p_u": model.disp_u.p,
        "p_v": model.disp_v.p,
        **_epsilon_keys(model.disp_u, model.disp_v),
        "drift_q": model.drift_q,
        "m": model.resource_m,
        "drift_enabled": model.drift_enabled,
        "reaction_enabled": model.reaction_enabled,
        "t_end": step.t_end,
        "snapshots": list(bundle.snapshots),
        "cfl_safety": step.cfl_safety,
        "dt_max": step.dt_max,
        "dt_min": step.dt_min,
        "nonneg_clip_tolerance": step.nonneg_clip_tolerance,
        "observe_every": step.observe_every,
        "exclusion_threshold": bundle.thresholds.exclusion,
        "survival_threshold": bundle.thresholds.survival,
    })
    if step.fixed_dt is not None:
        doc["fixed_dt"] = step.fixed_dt
    for s, ic in zip(SPECIES, (bundle.ic_u, bundle.ic_v)):
        doc.update(_ic_keys(s, ic))
    return doc


def dump_config(bundle: ConfigBundle) -> str:
    return json.dumps(document_from_bundle(bundle), indent=2) + "\n"


# --------------- Scenario resolution ---------------

def resolve_scenario(
    scenario: str,
    overrides: Sequence[str] = (),
    t_end: Optional[float] = None,
    snapshots: Optional[Sequence[float]] = None,
) -> tuple[str, ConfigBundle]:
    """(scenario id, bundle) for a preset name or a config file path, plus CLI overrides."""
    path = Path(scenario)
    if path.suffix == ".json" or path.is_file():
        if not path.is_file():
            raise NotFoundError(f"config file {path} not found")
        raw = parse_text(path.read_text(encoding="utf-8"))
        scenario_id = path.stem
    else:
        get_preset(scenario)
        raw = {"preset": scenario}
        scenario_id = scenario

    raw = apply_overrides(raw, overrides)
    if t_end is not None:
        raw["t_end"] = t_end
    if snapshots is not None:
        raw["snapshots"] = list(snapshots)
    return scenario_id, bundle_from_raw(raw)
