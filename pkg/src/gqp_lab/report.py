"""Report files: schema-versioned JSON, CSV tables and gnuplot data blocks.

Every float is written with 17 significant digits, so a report re-read and
re-written is byte-identical.  Files are written to a temporary name in the
target directory and renamed into place.
"""
from __future__ import annotations

import datetime as _dt
import json
import math
import os
import tempfile
from dataclasses import fields as dc_fields
from pathlib import Path

import jsonschema
import numpy as np

from .errors import InvalidInputError
from .spectral import ConvergenceLevel, SpectralResult
from .topology import TopoReport

SCHEMA_ID = "gqp-lab/report"
SCHEMA_VERSION = 1


def format_float(x: float) -> str:
    x = float(x)
    if not math.isfinite(x):
        raise InvalidInputError(f"cannot serialize non-finite value {x!r}")
    text = "%.17g" % x
    if text == "-0":
        text = "0"
    # keep floats recognisable as floats on re-read
    if all(ch not in text for ch in ".eEn"):
        text += ".0"
    return text


def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [_encode(v, indent, level + 1) for v in obj]
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(items) + "]"
        return "[\n" + ",\n".join(pad + it for it in items) + "\n" + end + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    raise InvalidInputError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    return _encode(obj, indent, 0) + "\n"


def atomic_write(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def timestamp() -> str:
    return _dt.datetime.now(_dt.timezone.utc).replace(microsecond=0).isoformat()


# ---------------------------------------------------------------------------
# schema

_NUM = {"type": "number"}
_INT = {"type": "integer"}
_NUM_OR_NULL = {"type": ["number", "null"]}
_INT_OR_NULL = {"type": ["integer", "null"]}
_RANGE = {"type": "object", "additionalProperties": False, "required": ["min", "max"],
          "properties": {"min": _NUM, "max": _NUM}}


def _closed(props: dict, required=None) -> dict:
    return {"type": "object", "additionalProperties": False,
            "required": list(props if required is None else required), "properties": props}


def _topology_schema():
    types = {
        "surface": {"type": "string"}, "params": {"type": "object", "additionalProperties": _NUM},
        "resolution": {"type": "array", "items": _INT, "minItems": 2, "maxItems": 2},
        "rule_v": {"type": "string"}, "truncation_T": _NUM_OR_NULL,
        "signed_degree": _INT, "absolute_degree_rounded": _INT, "paper_degree": _INT,
        "bogomolnyi_state_bound": _INT, "degree_clean": {"type": "boolean"},
        "euler_characteristic_input": _INT_OR_NULL, "gauss_bonnet_residual": _NUM_OR_NULL,
        "field_ranges": _closed({"V_dacosta": _RANGE, "K": _RANGE, "H": _RANGE}),
    }
    props = {f.name: types.get(f.name, _NUM) for f in dc_fields(TopoReport)}
    return _closed(props)


def _spectrum_schema():
    level = _closed({f.name: {"N": _INT, "T": _NUM_OR_NULL, "threshold": _NUM, "bound_count": _INT,
                              "channel_counts": {"type": "object", "additionalProperties": _INT},
                              "ground_energy": _NUM, "lmax_reached": {"type": "boolean"}}[f.name]
                     for f in dc_fields(ConvergenceLevel)})
    types = {
        "surface": {"type": "string"}, "parameters": {"type": "object", "additionalProperties": _NUM},
        "potential": {"type": "string"}, "units": _closed({"hbar": _NUM, "mass": _NUM, "hbar2_over_2m": _NUM}),
        "N": _INT, "T": _NUM_OR_NULL, "lmax": _INT, "threshold_rule": {"type": "string"},
        "degeneracy_rule": {"type": "string"},
        "eigenvalues": {"type": "object", "additionalProperties": {"type": "array", "items": _NUM}},
        "channel_counts": {"type": "object", "additionalProperties": _INT},
        "bound_count": _INT_OR_NULL,
        "bound_count_range": {"type": "array", "items": _INT, "minItems": 2, "maxItems": 2},
        "converged": {"type": "boolean"}, "levels": {"type": "array", "items": level},
        "lmax_reached": {"type": "boolean"}, "paper_bound": _INT_OR_NULL,
        "paper_bound_agrees": {"type": ["boolean", "null"]},
    }
    props = {f.name: types.get(f.name, _NUM) for f in dc_fields(SpectralResult)}
    return _closed(props)


_CHECK = _closed({"name": {"type": "string"}, "ok": {"type": "boolean"},
                  "detail": {"type": "object"}})
_COMPARISON = _closed({
    "quantity": {"type": "string"}, "paper_value": _NUM, "relation": {"enum": [">=", "=="]},
    "computed": _NUM_OR_NULL, "status": {"enum": ["agree", "disagree", "undetermined"]},
    "note": {"type": "string"},
})

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "gqp-lab run report",
    **_closed({
        "schema": {"const": SCHEMA_ID},
        "schema_version": {"const": SCHEMA_VERSION},
        "tool": _closed({"name": {"const": "gqp-lab"}, "version": {"type": "string"},
                         "kernel_backend": {"type": "string"}}),
        "command": {"enum": ["analyze", "spectrum", "sweep"]},
        "generated_at": {"type": "string"},
        "config": {"type": "object"},
        "units": _closed({"hbar": _NUM, "mass": _NUM, "hbar2_over_2m": _NUM}),
        "truncation_T": _NUM_OR_NULL,
        "field_summary": {"anyOf": [{"type": "null"},
                                    _closed({"V_dacosta": _RANGE, "K": _RANGE, "H": _RANGE})]},
        "topology": {"anyOf": [{"type": "null"}, _topology_schema()]},
        "spectrum": {"anyOf": [{"type": "null"}, _spectrum_schema()]},
        "sweep": {"anyOf": [{"type": "null"}, {"type": "object"}]},
        "checks": {"type": "array", "items": _CHECK},
        "paper_comparison": {"type": "array", "items": _COMPARISON},
        "status": _closed({"exit_code": {"enum": [0, 2, 3]}, "message": {"type": "string"}}),
        "outputs": {"type": "array", "items": {"type": "string"}},
    }),
}


def validate_report(data: dict) -> dict:
    try:
        jsonschema.validate(data, REPORT_SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path)
        raise InvalidInputError(f"report does not match schema v{SCHEMA_VERSION} at '{path}': "
                                f"{exc.message}") from None
    return data


def read_report(path) -> dict:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInputError(f"cannot read report {path}: {exc}") from None
    return validate_report(data)


def write_report(path, data: dict) -> Path:
    validate_report(data)
    return atomic_write(path, dumps(data))


# ---------------------------------------------------------------------------
# tables

def csv_text(header, rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_cell(v) for v in row))
    return "\n".join(lines) + "\n"


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format_float(v) if math.isfinite(v) else "nan"
    text = str(v)
    if any(ch in text for ch in ',"\n'):
        text = '"' + text.replace('"', '""') + '"'
    return text


def gnuplot_blocks(header, blocks) -> str:
    """Whitespace-separated columns; blank line between blocks (``splot`` layout)."""
    out = ["# " + " ".join(header)]
    for b, rows in enumerate(blocks):
        if b:
            out.append("")
        for row in rows:
            out.append(" ".join(_cell(v) for v in row))
    return "\n".join(out) + "\n"


def spectrum_tables(result: SpectralResult) -> dict[int, str]:
    """One CSV per channel: index, energy and whether it counts as bound."""
    tables = {}
    for ell, vals in result.eigenvalues.items():
        rows = [(i, float(e), bool(e < result.threshold)) for i, e in enumerate(vals)]
        tables[int(ell)] = csv_text(("n", "energy", "bound"), rows)
    return tables
