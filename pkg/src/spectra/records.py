"""JSON encoding of trial records, config validation and run manifests."""
from __future__ import annotations

import json
import math
import os
from datetime import datetime, timezone
from functools import lru_cache
from importlib import resources

import jsonschema

from . import __version__
from .ensemble import GENERATOR_NAME
from .experiments import TrialRecord

SCHEMA_VERSION = 1
NEG_INF_TOKEN = "-inf"

_RADIUS_LOG_KEYS = ("exact_log_radius", "log_upper", "log_lower")


@lru_cache(maxsize=None)
def load_schema(name: str) -> dict:
    text = resources.files("spectra").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def _errors(schema_name: str, obj) -> list[str]:
    validator = jsonschema.Draft202012Validator(load_schema(schema_name))
    out = []
    for err in sorted(validator.iter_errors(obj), key=lambda e: list(map(str, e.absolute_path))):
        where = "/".join(map(str, err.absolute_path)) or "<root>"
        out.append(f"{where}: {err.message}")
    return out


def config_errors(obj) -> list[str]:
    """Every schema violation in a config document, empty when valid."""
    return _errors("experiment_config", obj)


def record_errors(obj) -> list[str]:
    return _errors("trial_record", obj)


def encode_log(x):
    if x is None:
        return None
    return NEG_INF_TOKEN if x == -math.inf else x


def decode_log(x):
    if x is None:
        return None
    return -math.inf if x == NEG_INF_TOKEN else float(x)


def record_to_dict(rec: TrialRecord, timings: bool = False) -> dict:
    radius = None
    if rec.radius is not None:
        radius = dict(rec.radius)
        for key in _RADIUS_LOG_KEYS:
            radius[key] = encode_log(radius[key])
    out = {
        "trial_index": rec.trial_index,
        "derived_seed": rec.derived_seed,
        "d": rec.d,
        "p": rec.p,
        "structure": dict(rec.structure),
        "radius": radius,
    }
    if timings:
        out["wall_time_ms"] = dict(rec.wall_time_ms)
    return out


def record_from_dict(obj: dict) -> TrialRecord:
    radius = obj["radius"]
    if radius is not None:
        radius = dict(radius)
        for key in _RADIUS_LOG_KEYS:
            radius[key] = decode_log(radius[key])
    return TrialRecord(
        trial_index=obj["trial_index"],
        derived_seed=obj["derived_seed"],
        d=obj["d"],
        p=obj["p"],
        structure=dict(obj["structure"]),
        radius=radius,
        wall_time_ms=dict(obj.get("wall_time_ms", {})),
    )


def dumps_record(rec: TrialRecord, timings: bool = False) -> str:
    # timings are excluded by default: they would break byte-identical reruns
    return json.dumps(record_to_dict(rec, timings), separators=(",", ":"))


def loads_records(lines) -> list[TrialRecord]:
    """Parse JSONL lines; raises ValueError naming the 1-based line number."""
    out = []
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValueError(f"line {lineno}: invalid JSON ({exc.msg})") from None
        errs = record_errors(obj)
        if errs:
            raise ValueError(f"line {lineno}: {errs[0]}")
        out.append(record_from_dict(obj))
    return out


def now_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def manifest(config: dict | None = None, *, started: str | None = None, timestamps: bool = True) -> dict:
    """Provenance block.  Outputs are reproducible only for equal tool and generator versions."""
    out = {
        "tool": "spectra",
        "tool_version": __version__,
        "generator": GENERATOR_NAME,
        "schema_version": SCHEMA_VERSION,
    }
    if config is not None:
        out["config"] = config
    if timestamps:
        out["started"] = started or now_iso()
        out["finished"] = now_iso()
        out["host_threads"] = os.cpu_count()
    return out
