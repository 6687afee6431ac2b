"""Experiment configuration documents.

The canonical on-disk format is a JSON object; it is the one human-editable
format the command line accepts.  A minimal document supplies n, p_grid,
trials and seed; everything else is defaulted and echoed back on
serialization, so parse -> serialize -> parse is the identity.

Example::

    {
      "n": 100000,
      "p_grid": [0.2, 0.5],
      "trials": 100,
      "seed": 20240601,
      "s0": "symmetric",
      "dynamics": "three_majority"
    }
"""

from __future__ import annotations

import json
from typing import Any

from .chain import Dynamics
from .harness import ExperimentConfig, RecordMode, ValidationError

__all__ = ["ParseError", "parse_config", "serialize_config"]

_FIELDS = {
    "n",
    "p_grid",
    "trials",
    "seed",
    "dynamics",
    "s0",
    "t_max",
    "gamma",
    "epsilon",
    "record_mode",
    "metastability_window",
}
_REQUIRED = ("n", "p_grid", "trials", "seed")


class ParseError(ValueError):
    """Document is not well-formed; carries line/column diagnostics."""


def _expect_int(doc: dict, key: str) -> int:
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(f"field '{key}' must be an integer, got {value!r}")
    return value


def _expect_float(doc: dict, key: str) -> float:
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"field '{key}' must be a number, got {value!r}")
    return float(value)


def parse_config(document: str) -> ExperimentConfig:
    """Parse and validate a configuration document.

    Raises ParseError for malformed JSON (with line/column) and
    ValidationError naming the offending field or invariant otherwise.
    """
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ParseError(
            f"malformed document at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(doc, dict):
        raise ParseError("document must be a JSON object of configuration fields")

    unknown = set(doc) - _FIELDS
    if unknown:
        raise ValidationError(f"unknown field(s): {', '.join(sorted(unknown))}")
    missing = [key for key in _REQUIRED if key not in doc]
    if missing:
        raise ValidationError(f"missing required field(s): {', '.join(missing)}")

    kwargs: dict[str, Any] = {
        "n": _expect_int(doc, "n"),
        "trials": _expect_int(doc, "trials"),
        "seed": _expect_int(doc, "seed"),
    }

    grid = doc["p_grid"]
    if not isinstance(grid, list) or not grid:
        raise ValidationError("field 'p_grid' must be a non-empty list of numbers")
    for value in grid:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValidationError(f"p_grid entries must be numbers, got {value!r}")
    kwargs["p_grid"] = tuple(float(v) for v in grid)

    if "dynamics" in doc:
        try:
            kwargs["dynamics"] = Dynamics(doc["dynamics"])
        except ValueError:
            choices = ", ".join(d.value for d in Dynamics)
            raise ValidationError(
                f"field 'dynamics' must be one of: {choices}; got {doc['dynamics']!r}"
            ) from None
    if "record_mode" in doc:
        try:
            kwargs["record_mode"] = RecordMode(doc["record_mode"])
        except ValueError:
            choices = ", ".join(m.value for m in RecordMode)
            raise ValidationError(
                f"field 'record_mode' must be one of: {choices}; got {doc['record_mode']!r}"
            ) from None
    if "s0" in doc:
        if isinstance(doc["s0"], str):
            kwargs["s0"] = doc["s0"]
        else:
            kwargs["s0"] = _expect_int(doc, "s0")
    if "t_max" in doc and doc["t_max"] is not None:
        kwargs["t_max"] = _expect_int(doc, "t_max")
    if "metastability_window" in doc and doc["metastability_window"] is not None:
        kwargs["metastability_window"] = _expect_int(doc, "metastability_window")
    if "gamma" in doc:
        kwargs["gamma"] = _expect_float(doc, "gamma")
    if "epsilon" in doc:
        kwargs["epsilon"] = _expect_float(doc, "epsilon")

    return ExperimentConfig(**kwargs)


def serialize_config(cfg: ExperimentConfig) -> str:
    """Canonical document for a configuration, all defaults made explicit."""
    doc = {
        "n": cfg.n,
        "p_grid": list(cfg.p_grid),
        "trials": cfg.trials,
        "seed": cfg.seed,
        "dynamics": cfg.dynamics.value,
        "s0": cfg.s0,
        "t_max": cfg.t_max,
        "gamma": cfg.gamma,
        "epsilon": cfg.epsilon,
        "record_mode": cfg.record_mode.value,
        "metastability_window": cfg.metastability_window,
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"
