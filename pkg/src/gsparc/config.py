"""Experiment documents: schema validation, normalisation and execution."""
from __future__ import annotations

import csv
import io
import json
import os
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from . import __version__
from .channel import (
    CSV_COLUMNS,
    CSV_VERSION,
    DEFAULT_MAX_ERRORS,
    MultiUserConfig,
    SimRecord,
    code_digest,
    interference_simulate,
    mac_simulate,
    run_bler,
)
from .code import CodeInstance, CodeSpec
from .decoding import DecoderSpec
from .dictionary import dictionary_shape
from .errors import ConfigError

_SWEEP_RANGE = {
    "type": "object",
    "properties": {
        "start": {"type": "number"},
        "stop": {"type": "number"},
        "step": {"type": "number", "exclusiveMinimum": 0},
    },
    "required": ["start", "stop", "step"],
    "additionalProperties": False,
}

_GAIN = {"oneOf": [{"type": "number"},
                   {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}]}

SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "gsparc experiment",
    "type": "object",
    "properties": {
        "dict": {"enum": ["gold", "mub"]},
        "n": {"type": "integer", "minimum": 2, "maximum": 10},
        "scheme": {"enum": ["sse", "sfe"], "default": "sse"},
        "K": {"type": "integer", "minimum": 1},
        "M": {"type": "integer", "minimum": 1, "default": 4},
        "offset": {"type": "boolean", "default": False},
        "columns": {"type": ["integer", "null"], "minimum": 1, "default": None},
        "identity_columns": {"type": "integer", "minimum": 0, "default": 0},
        "decoder": {"enum": ["mad", "pmad", "omp"], "default": "mad"},
        "T": {"type": "integer", "minimum": 1, "default": 1},
        "mode": {"enum": ["single", "mac", "broadcast", "interference"], "default": "single"},
        "users": {"type": ["integer", "null"], "minimum": 1, "default": None},
        "assignment": {
            "type": ["array", "null"],
            "items": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
            "default": None,
        },
        "user_M": {"type": ["array", "null"], "items": {"type": "integer", "minimum": 1},
                   "default": None},
        "gains": {"type": ["array", "null"], "items": {"type": "array", "items": _GAIN},
                  "default": None},
        "noise_offsets_db": {"type": ["array", "null"], "items": {"type": "number"},
                             "default": None},
        "shared_noise": {"type": "boolean", "default": False},
        "sweep": {
            "oneOf": [_SWEEP_RANGE,
                      {"type": "array", "items": {"type": "number"}, "minItems": 1}],
            "default": [0.0],
        },
        "max_trials": {"type": "integer", "minimum": 1, "default": 10000},
        "max_errors": {"type": ["integer", "null"], "minimum": 1, "default": DEFAULT_MAX_ERRORS},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1, "default": 0},
        "out": {"type": ["string", "null"], "default": None},
    },
    "required": ["dict", "n", "K"],
    "additionalProperties": False,
}

_CODE_KEYS = ("dict", "n", "scheme", "K", "M", "offset", "columns", "identity_columns")


def sweep_points(sweep) -> list[float]:
    """Expand ``{start, stop, step}`` (stop inclusive) or return an explicit list."""
    if isinstance(sweep, list):
        return [float(v) for v in sweep]
    start, stop, step = sweep["start"], sweep["stop"], sweep["step"]
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    if count < 1:
        raise ConfigError("sweep: stop must not be below start")
    return [round(start + i * step, 10) for i in range(count)]


def _error_path(err: jsonschema.ValidationError) -> str:
    return "/".join(str(p) for p in err.absolute_path) or "<root>"


@dataclass(frozen=True)
class ExperimentSpec:
    """A validated experiment document with all defaults filled in."""

    doc: dict

    def __getitem__(self, key):
        return self.doc[key]

    @property
    def code_spec(self) -> CodeSpec:
        return CodeSpec(**{k: self.doc[k] for k in _CODE_KEYS})

    @property
    def decoder(self) -> DecoderSpec:
        return DecoderSpec(self.doc["decoder"], self.doc["T"])

    @property
    def ebn0_points(self) -> list[float]:
        return sweep_points(self.doc["sweep"])

    @property
    def digest(self) -> str:
        return code_digest(self.doc)

    def multiuser(self, K: int) -> MultiUserConfig | None:
        d = self.doc
        if d["mode"] == "single":
            return None
        gains = None
        if d["gains"] is not None:
            gains = [[complex(*g) if isinstance(g, list) else complex(g) for g in row]
                     for row in d["gains"]]
        kw = dict(mode=d["mode"], M=d["user_M"], gains=gains,
                  noise_offsets_db=d["noise_offsets_db"], shared_noise=d["shared_noise"])
        if d["assignment"] is not None:
            return MultiUserConfig(d["assignment"], **kw)
        return MultiUserConfig.even(K, d["users"] or K, **kw)


def normalize(doc: dict) -> dict:
    """Fill defaults and order keys canonically (schema validation assumed)."""
    out = {}
    for key, prop in SCHEMA["properties"].items():
        if key in doc:
            out[key] = doc[key]
        elif "default" in prop:
            out[key] = prop["default"]
    return json.loads(json.dumps(out))


def parse_spec(text: str | dict) -> ExperimentSpec:
    """Parse and validate an experiment document (JSON text or a mapping)."""
    if isinstance(text, str):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from None
    else:
        doc = dict(text)
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise ConfigError(f"{_error_path(err)}: {err.message}")
    spec = ExperimentSpec(normalize(doc))
    _check_semantics(spec)
    return spec


def _check_semantics(spec: ExperimentSpec) -> None:
    d = spec.doc
    if d["decoder"] != "pmad" and d["T"] != 1:
        raise ConfigError("T: only the pmad decoder takes T > 1")
    if d["mode"] != "single" and d["scheme"] != "sse":
        raise ConfigError("mode: multi-user experiments need scheme 'sse'")
    if d["mode"] == "single":
        for key in ("users", "assignment", "user_M", "gains", "noise_offsets_db"):
            if d[key] is not None:
                raise ConfigError(f"{key}: only valid for multi-user modes")
    sweep_points(d["sweep"])
    code = spec.code_spec
    _, L = dictionary_shape(code.dict, code.n, code.columns, code.identity_columns)
    if code.K > L:
        raise ConfigError(f"K: {code.K} exceeds the {L} dictionary columns")
    if d["mode"] != "single":
        spec.multiuser(code.K).validate(code.K)


def serialize(spec: ExperimentSpec) -> str:
    return json.dumps(spec.doc, sort_keys=True, indent=2) + "\n"


def schema_text() -> str:
    return json.dumps(SCHEMA, indent=2) + "\n"


# ------------------------------------------------------------------ execution

def simulate(spec: ExperimentSpec, *, threads: int | None = None) -> list[SimRecord]:
    code = CodeInstance(spec.code_spec)
    d = spec.doc
    args = (spec.ebn0_points, d["max_trials"], d["max_errors"], d["seed"])
    mu = spec.multiuser(code.K)
    if mu is None:
        recs = run_bler(code, spec.decoder, *args, threads=threads)
    elif mu.mode == "mac":
        recs = mac_simulate(code, mu, spec.decoder, *args, threads=threads)
    else:
        recs = interference_simulate(code, mu, spec.decoder, *args, threads=threads)
    for r in recs:
        r.config_digest = spec.digest
    return recs


def records_csv(records: list[SimRecord]) -> str:
    buf = io.StringIO()
    buf.write(f"# {CSV_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        w.writerow(r.csv_row())
    return buf.getvalue()


def read_records_csv(text: str) -> list[SimRecord]:
    lines = text.splitlines()
    if not lines or lines[0] != f"# {CSV_VERSION}":
        raise ValueError(f"not a {CSV_VERSION} file")
    rows = list(csv.reader(lines[1:]))
    if tuple(rows[0]) != CSV_COLUMNS:
        raise ValueError("unexpected CSV header")
    return [SimRecord.from_csv_row(row) for row in rows[1:]]


def gnuplot_data(records: list[SimRecord]) -> str:
    lines = ["# ebn0_db bler ci_low ci_high trials errors"]
    for r in sorted(records, key=lambda r: r.ebn0_db):
        lo, hi = r.interval()
        lines.append(f"{r.ebn0_db:g} {r.bler:.6e} {lo:.6e} {hi:.6e} {r.trials} {r.block_errors}")
    return "\n".join(lines) + "\n"


def gnuplot_script(data_name: str, title: str) -> str:
    return (
        "set logscale y\n"
        "set xlabel 'Eb/N0 (dB)'\n"
        "set ylabel 'BLER'\n"
        "set grid\n"
        f"plot '{data_name}' using 1:2:3:4 with yerrorlines title '{title}'\n"
    )


def _write(path: Path, text: str) -> None:
    try:
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc


def run_experiment(spec: ExperimentSpec, out: str | os.PathLike | None = None, *,
                   dry_run: bool = False, threads: int | None = None) -> dict:
    """Run the experiment and write ``<stem>.csv``, ``.json``, ``.manifest.json``,
    ``.dat`` and ``.gp`` next to ``out`` (default: the spec's ``out`` or
    ``gsparc-<digest>``). With ``dry_run`` only validation and code
    construction happen. Returns the manifest."""
    code = CodeInstance(spec.code_spec)
    manifest = {
        "digest": spec.digest,
        "version": __version__,
        "spec": spec.doc,
        "code": code.describe(),
    }
    if dry_run:
        manifest["dry_run"] = True
        return manifest
    stem = Path(out or spec.doc["out"] or f"gsparc-{spec.digest}")
    if stem.suffix == ".csv":
        stem = stem.with_suffix("")
    if not stem.parent.exists():
        raise OSError(f"output directory does not exist: {stem.parent}")
    t0 = time.perf_counter()
    records = simulate(spec, threads=threads)
    manifest["wall_time_s"] = time.perf_counter() - t0
    paths = {ext: stem.with_name(stem.name + ext)
             for ext in (".csv", ".json", ".manifest.json", ".dat", ".gp")}
    manifest["outputs"] = {k.lstrip("."): str(v) for k, v in paths.items()}
    _write(paths[".csv"], records_csv(records))
    _write(paths[".json"], json.dumps([r.to_json() for r in records], indent=2) + "\n")
    _write(paths[".dat"], gnuplot_data(records))
    _write(paths[".gp"], gnuplot_script(paths[".dat"].name, f"{code.label} {spec.decoder.label}"))
    _write(paths[".manifest.json"], json.dumps(manifest, indent=2, default=str) + "\n")
    return manifest
