"""JSON scenario files.

Top level keys mirror ScenarioConfig plus ``horizon`` and ``n_steps`` of the
time grid; ``classes`` is a list of per-class records. ``lambda`` is the
attack rate and ``weight`` the population share of the class. Omitted
``gamma_E``/``gamma_L`` are derived from the matching beta.
"""
from __future__ import annotations

import json
import re
from dataclasses import fields
from importlib import resources
from pathlib import Path

from .errors import InvalidConfig, ParseError
from .model import (
    DEFAULT_MAX_ITER, DEFAULT_N_STEPS, DEFAULT_TOL, NetworkModel, NodeClassParams, ScenarioConfig,
    TimeGrid, validate,
)

_TOP_DEFAULTS = {
    "n_steps": DEFAULT_N_STEPS,
    "tolerance": DEFAULT_TOL,
    "max_iterations": DEFAULT_MAX_ITER,
    "damping": 1.0,
    "initial_alpha": 0.5,
    "seed": 0,
    "output_dir": "out",
}
_TOP_REQUIRED = ("horizon", "classes")
_CLASS_REQUIRED = ("degree", "weight")
_JSON_TO_FIELD = {"lambda": "lam"}
_FIELD_TO_JSON = {v: k for k, v in _JSON_TO_FIELD.items()}
_CLASS_FIELDS = {f.name: f for f in fields(NodeClassParams)}
_CLASS_KEYS = {_FIELD_TO_JSON.get(n, n) for n in _CLASS_FIELDS} | {"weight"}
_INT_KEYS = {"degree", "type_id", "n_steps", "max_iterations", "seed"}
_BOOL_KEYS = {"scaling_enabled", "scale_target"}

BUNDLED_SCENARIO = "reference_scenario.json"


def _line_of(text: str, key: str, start: int = 0) -> int:
    m = re.compile(r'"%s"\s*:' % re.escape(key)).search(text, start)
    return text.count("\n", 0, m.start()) + 1 if m else 1


def _check_type(key, value, where, problems):
    if key in _BOOL_KEYS:
        ok = isinstance(value, bool)
    elif key in _INT_KEYS:
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif key == "output_dir":
        ok = isinstance(value, str)
    else:
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    if not ok:
        problems.append(f"{where}{key}: unexpected value {value!r}")
    return ok


def parse_config(text: str, source: str = "<string>") -> ScenarioConfig:
    """Build a validated ScenarioConfig from JSON text."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.lineno, f"{source}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ParseError(1, f"{source}: top level must be an object")
    known_top = set(_TOP_DEFAULTS) | set(_TOP_REQUIRED)
    for key in doc:
        if key not in known_top:
            raise ParseError(_line_of(text, key), f"{source}: unknown key {key!r}")
    missing = [k for k in _TOP_REQUIRED if k not in doc]
    if missing:
        raise ParseError(1, f"{source}: missing required key(s) {', '.join(missing)}")
    if not isinstance(doc["classes"], list) or not doc["classes"]:
        raise ParseError(_line_of(text, "classes"), f"{source}: 'classes' must be a non-empty list")

    problems: list[str] = []
    applied: list[str] = []
    top = {}
    for key, default in _TOP_DEFAULTS.items():
        if key in doc:
            if _check_type(key, doc[key], "", problems):
                top[key] = doc[key]
        else:
            top[key] = default
            applied.append(key)
    _check_type("horizon", doc["horizon"], "", problems)

    classes, weights = [], []
    cursor = _line_of(text, "classes")
    offset = text.find('"classes"')
    for idx, rec in enumerate(doc["classes"]):
        where = f"classes[{idx}]."
        if not isinstance(rec, dict):
            raise ParseError(cursor, f"{source}: {where[:-1]} must be an object")
        for key in rec:
            if key not in _CLASS_KEYS:
                raise ParseError(_line_of(text, key, offset), f"{source}: unknown key {where}{key}")
        absent = [k for k in _CLASS_REQUIRED if k not in rec]
        if absent:
            raise ParseError(cursor, f"{source}: {where[:-1]} lacks {', '.join(absent)}")
        kwargs = {}
        for key, value in rec.items():
            if key == "weight":
                continue
            if _check_type(key, value, where, problems):
                kwargs[_JSON_TO_FIELD.get(key, key)] = value
        if "weight" in rec and _check_type("weight", rec["weight"], where, problems):
            weights.append(float(rec["weight"]))
        else:
            weights.append(float("nan"))
        for pair in (("beta_E", "gamma_E"), ("beta_L", "gamma_L")):
            b, g = pair
            if b in kwargs and g not in kwargs:
                kwargs[g] = 1.0 - kwargs[b]
            elif g in kwargs and b not in kwargs:
                kwargs[b] = 1.0 - kwargs[g]
        kwargs.setdefault("target_qoi", float(kwargs.get("degree", 1)))
        for name, f in _CLASS_FIELDS.items():
            if name not in kwargs and name not in ("degree", "target_qoi"):
                applied.append(where + _FIELD_TO_JSON.get(name, name))
        if "degree" in kwargs:
            classes.append(NodeClassParams(**kwargs))
    if problems:
        raise InvalidConfig(problems)
    cfg = ScenarioConfig(
        network=NetworkModel(tuple(classes), tuple(weights)),
        grid=TimeGrid(float(doc["horizon"]), int(top["n_steps"])),
        tolerance=float(top["tolerance"]), max_iterations=int(top["max_iterations"]),
        damping=float(top["damping"]), initial_alpha=float(top["initial_alpha"]),
        seed=int(top["seed"]), output_dir=str(top["output_dir"]), defaults_applied=tuple(applied),
    )
    return validate(cfg)


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(0, f"{path}: {exc.strerror or exc}") from None
    return parse_config(text, str(path))


def load_bundled() -> ScenarioConfig:
    """The four-class reference scenario shipped with the package."""
    text = resources.files("seli_mfg").joinpath("data", BUNDLED_SCENARIO).read_text(encoding="utf-8")
    return parse_config(text, BUNDLED_SCENARIO)


def config_to_dict(config: ScenarioConfig) -> dict:
    """Fully materialised JSON document; ``parse_config`` inverts it."""
    classes = []
    for cls, w in zip(config.network.classes, config.network.weights):
        rec = {"degree": cls.degree, "weight": w}
        for name in _CLASS_FIELDS:
            if name != "degree":
                rec[_FIELD_TO_JSON.get(name, name)] = getattr(cls, name)
        classes.append(rec)
    return {
        "horizon": config.grid.horizon,
        "n_steps": config.grid.n_steps,
        "tolerance": config.tolerance,
        "max_iterations": config.max_iterations,
        "damping": config.damping,
        "initial_alpha": config.initial_alpha,
        "seed": config.seed,
        "output_dir": config.output_dir,
        "classes": classes,
    }


def dump_config(config: ScenarioConfig, path=None) -> str:
    text = json.dumps(config_to_dict(config), indent=2) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8", newline="\n")
    return text
