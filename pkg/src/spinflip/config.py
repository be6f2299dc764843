"""JSON run configuration.

All quantities are SI: metres, ohm metres, hertz, kelvin.  Example::

    {
      "wire": {
        "core":    {"outer_radius": 185e-6, "resistivity": 1.6e-8},
        "coating": {"outer_radius": 240e-6, "resistivity": 2.7e-8},
        "atom_distance": 50e-6
      },
      "transition": {"frequency": 560e3, "temperature": 300},
      "numerics": {"rtol": 1e-8}
    }

A layer gives exactly one of ``resistivity``, ``skin_depth`` (at the
transition frequency) or ``rel_permittivity`` (``[re, im]``).
"""

import json
from dataclasses import replace

import jsonschema

from .errors import ConfigError, SpinflipError
from .rate import QuadPolicy
from .stack import CODATA2018, Layer, Transition, WireStack
from .sweep import PARAMETERS, PRESETS, Coupling, Scenario, SweepSpec

_POS = {"type": "number", "exclusiveMinimum": 0}

_LAYER = {
    "type": "object",
    "additionalProperties": False,
    "required": ["outer_radius"],
    "properties": {
        "outer_radius": _POS,
        "resistivity": _POS,
        "skin_depth": _POS,
        "rel_permittivity": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
        "rel_permeability": {"oneOf": [
            {"type": "number"},
            {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}]},
    },
    "oneOf": [{"required": ["resistivity"]}, {"required": ["skin_depth"]},
              {"required": ["rel_permittivity"]}],
}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["wire", "transition"],
    "properties": {
        "constants": {
            "type": "object",
            "additionalProperties": False,
            "properties": {k: _POS for k in ("mu0", "eps0", "hbar", "kB", "muB", "c", "gS")},
        },
        "wire": {
            "type": "object",
            "additionalProperties": False,
            "required": ["core", "coating", "atom_distance"],
            "properties": {"core": _LAYER, "coating": _LAYER, "atom_distance": _POS},
        },
        "transition": {
            "type": "object",
            "additionalProperties": False,
            "required": ["frequency"],
            "properties": {
                "frequency": _POS,
                "temperature": {"type": "number", "minimum": 0},
                "angular_factor_S2": _POS,
            },
        },
        "numerics": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "rtol": _POS, "atol": _POS, "mode_tol": _POS, "tail_constant": _POS,
                "n_max": {"oneOf": [{"type": "integer", "minimum": 0}, {"const": "auto"}]},
                "max_evaluations": {"type": "integer", "minimum": 1},
                "workers": {"type": "integer", "minimum": 1},
            },
        },
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "preset": {"enum": sorted(PRESETS)},
                "param": {"enum": list(PARAMETERS)},
                "from": _POS,
                "to": _POS,
                "points": {"type": "integer", "minimum": 2},
                "log": {"type": "boolean"},
                "couplings": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["target", "source", "factor"],
                        "properties": {"target": {"type": "string"}, "source": {"type": "string"},
                                       "factor": _POS},
                    },
                },
                "temperatures": {"type": "array", "items": {"type": "number", "minimum": 0}},
                "out": {"type": "string"},
                "overlay": {"type": "string"},
            },
        },
    },
}

_VALIDATOR = jsonschema.Draft202012Validator(SCHEMA)


def validate(doc):
    errors = sorted(_VALIDATOR.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise ConfigError(e.message, e.absolute_path)


def load(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}")
    validate(doc)
    return doc


def _complex(v):
    return complex(v[0], v[1]) if isinstance(v, list) else complex(v)


def _layer(d, frequency, constants, path):
    mu = _complex(d.get("rel_permeability", 1.0))
    try:
        if "resistivity" in d:
            return Layer(d["outer_radius"], resistivity=d["resistivity"], rel_permeability=mu)
        if "skin_depth" in d:
            return Layer.from_skin_depth(d["outer_radius"], d["skin_depth"], frequency, constants,
                                         rel_permeability=mu)
        return Layer(d["outer_radius"], explicit_rel_permittivity=_complex(d["rel_permittivity"]),
                     rel_permeability=mu)
    except SpinflipError as exc:
        raise ConfigError(str(exc), path)


def build(doc):
    """Turn a validated document into a :class:`~spinflip.sweep.Scenario`."""
    validate(doc)
    try:
        constants = replace(CODATA2018, **doc.get("constants", {}))
    except SpinflipError as exc:
        raise ConfigError(str(exc), ("constants",))
    t = doc["transition"]
    try:
        transition = Transition(t["frequency"], t.get("temperature", 0.0),
                                t.get("angular_factor_S2", 0.125))
    except SpinflipError as exc:
        raise ConfigError(str(exc), ("transition",))
    w = doc["wire"]
    f = transition.frequency
    core = _layer(w["core"], f, constants, ("wire", "core"))
    coating = _layer(w["coating"], f, constants, ("wire", "coating"))
    try:
        stack = WireStack(core, coating)
    except SpinflipError as exc:
        raise ConfigError(str(exc), ("wire",))
    num = {k: v for k, v in doc.get("numerics", {}).items() if k != "workers"}
    try:
        policy = QuadPolicy(**num)
    except SpinflipError as exc:
        raise ConfigError(str(exc), ("numerics",))
    return Scenario(stack, transition, w["atom_distance"], policy, constants)


def sweep_spec(section):
    """A :class:`SweepSpec` from the ``sweep`` section (without a preset)."""
    try:
        couplings = tuple(Coupling(c["target"], c["source"], c["factor"])
                          for c in section.get("couplings", ()))
        temps = tuple(section["temperatures"]) if section.get("temperatures") else None
        return SweepSpec(section["param"], section["from"], section["to"], section.get("points", 21),
                         "log" if section.get("log", False) else "linear", couplings, temps)
    except KeyError as exc:
        raise ConfigError(f"missing field {exc.args[0]!r}", ("sweep",))
    except SpinflipError as exc:
        raise ConfigError(str(exc), ("sweep",))
