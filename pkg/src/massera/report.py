"""JSON serialization of analysis results (schema ``report_v1``).

Non-finite floats become ``null`` so the output is strict JSON. Reports
carry no timestamps; anything run-dependent belongs under ``metadata``.
"""

from __future__ import annotations

import json
import math
from typing import Any

import numpy as np

from .period import ClassificationReport, FixedPointScan

__all__ = ["SCHEMA_VERSION", "REPORT_SCHEMA", "report_to_dict", "fixed_points_to_list", "dumps", "validate"]

SCHEMA_VERSION = "report_v1"

_num = {"type": ["number", "null"]}

_fixed_point = {
    "type": "object",
    "required": ["u", "stability", "transverse", "isolation_gap"],
    "properties": {
        "u": {"type": "number"},
        "stability": {
            "enum": [
                "positively_asymptotically_stable",
                "negatively_asymptotically_stable",
                "semi_stable",
                "inconclusive",
            ]
        },
        "transverse": {"type": "boolean"},
        "isolation_gap": _num,
        "residual": _num,
    },
}

_chain = {
    "type": "object",
    "required": ["recurrent_indices", "scc_partition", "grid_spacing", "epsilon"],
    "properties": {
        "recurrent_indices": {"type": "array", "items": {"type": "integer"}},
        "recurrent_points": {"type": "array", "items": {"type": "number"}},
        "scc_partition": {"type": "array", "items": {"type": "array", "items": {"type": "integer"}}},
        "internally_transitive": {"type": ["boolean", "null"]},
        "grid_spacing": {"type": "number"},
        "grid_slack": {"type": "number"},
        "epsilon": {"type": "number"},
        "n_min": {"type": "integer"},
        "n_max": {"type": "integer"},
    },
}

REPORT_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "massera report",
    "type": "object",
    "required": ["schema", "command"],
    "properties": {
        "schema": {"const": SCHEMA_VERSION},
        "command": {"enum": ["analyze", "fixed-points", "chain", "bebutov", "preset-list"]},
        "field": {"type": "object"},
        "runs": {"type": "array", "items": {"$ref": "#/$defs/analysis"}},
        "fixed_points": {"type": "array", "items": _fixed_point},
        "continuum": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
        "chain": _chain,
        "bebutov": {"type": "object"},
        "presets": {"type": "array", "items": {"type": "object"}},
        "tolerances": {"type": "object"},
        "notes": {"type": "array", "items": {"type": "string"}},
        "metadata": {"type": "object"},
    },
    "$defs": {
        "analysis": {
            "type": "object",
            "required": [
                "verdict",
                "tau",
                "u0",
                "horizon",
                "residual_tail_sup",
                "iterate_tail_span",
                "iterate_limit",
                "delta",
                "fixed_points",
                "tolerances",
                "notes",
            ],
            "properties": {
                "verdict": {
                    "enum": [
                        "S_ASYMPTOTICALLY_PERIODIC",
                        "ASYMPTOTICALLY_PERIODIC",
                        "NOT_ASYMPTOTICALLY_PERIODIC",
                        "UNBOUNDED",
                        "INCONCLUSIVE",
                    ]
                },
                "tau": {"type": "number"},
                "u0": {"type": "number"},
                "horizon": {"type": "number"},
                "residual_tail_sup": _num,
                "iterate_tail_span": _num,
                "iterate_limit": _num,
                "iterate_tail_mean": _num,
                "s_check": {"type": ["string", "null"]},
                "convergence": {"type": ["string", "null"]},
                "fixed_point_consistency": _num,
                "delta": {
                    "type": ["object", "null"],
                    "required": ["alpha", "beta"],
                    "properties": {"alpha": _num, "beta": _num},
                },
                "fixed_points": {"type": "array", "items": _fixed_point},
                "tolerances": {"type": "object"},
                "notes": {"type": "array", "items": {"type": "string"}},
            },
        }
    },
}


def _clean(obj):
    """Recursively convert to JSON-native types, mapping inf and nan to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def fixed_points_to_list(scan: FixedPointScan | None) -> list[dict]:
    if scan is None:
        return []
    return [
        {
            "u": r.u_star,
            "stability": r.stability.value,
            "transverse": r.transverse,
            "isolation_gap": r.isolation_gap,
            "residual": r.residual,
        }
        for r in scan.records
    ]


def report_to_dict(rep: ClassificationReport) -> dict:
    out = {
        "verdict": rep.verdict.value,
        "tau": rep.tau,
        "u0": rep.u0,
        "horizon": rep.horizon,
        "residual_tail_sup": rep.residual_tail_sup,
        "iterate_tail_span": rep.iterate_tail_span,
        "iterate_limit": rep.iterate_limit,
        "iterate_tail_mean": rep.iterate_tail_mean,
        "s_check": None if rep.s_check is None else rep.s_check.status.value,
        "convergence": None if rep.convergence is None else rep.convergence.status.value,
        "fixed_point_consistency": rep.fixed_point_consistency,
        "delta": None if rep.delta is None else {"alpha": rep.delta.alpha, "beta": rep.delta.beta},
        "fixed_points": fixed_points_to_list(rep.fixed_points),
        "tolerances": rep.parameters_used,
        "notes": list(rep.evidence_notes),
    }
    if rep.fixed_points is not None and rep.fixed_points.has_continuum:
        out["continuum"] = [list(c) for c in rep.fixed_points.continuum]
    return _clean(out)


def dumps(doc: dict) -> str:
    """Deterministic JSON text (sorted keys, strict floats)."""
    return json.dumps(_clean(doc), sort_keys=True, indent=2, allow_nan=False) + "\n"


def validate(doc: dict) -> None:
    """Raise ``jsonschema.ValidationError`` if ``doc`` does not match ``report_v1``."""
    import jsonschema

    jsonschema.validate(doc, REPORT_SCHEMA)
