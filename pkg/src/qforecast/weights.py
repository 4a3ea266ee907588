"""Versioned JSON persistence for pretrained weights.

Floats are written with ``repr`` (shortest round-trip form), so
``load(save(w))`` reproduces every value bit for bit.
"""

from __future__ import annotations

import json
import os
import tempfile
from importlib import resources
from pathlib import Path

from .data_pipeline import NormStats
from .errors import ConfigurationError, DataError, WeightsError
from .forecasting import PretrainedWeights

SCHEMA = "qforecast-weights"
VERSION = 1
BUNDLED = {"model1": "reference_model1.json", "model2": "reference_model2.json", "model3": "reference_model3.json"}


def to_dict(w: PretrainedWeights) -> dict:
    return {
        "schema": SCHEMA,
        "version": VERSION,
        "kind": w.kind,
        "n_features": w.n_features,
        "encoding": w.encoding,
        "cutoff": w.cutoff,
        "seed": w.seed,
        "config_digest": w.config_digest,
        "source": w.source,
        "options": w.options,
        "slots": [{"name": n, "value": v} for n, v in zip(w.slots, w.values)],
        "stats": w.stats.to_dict() if w.stats is not None else None,
        "metadata": w.metadata,
    }


def from_dict(d: dict) -> PretrainedWeights:
    if not isinstance(d, dict) or d.get("schema") != SCHEMA:
        raise WeightsError(f"not a {SCHEMA} document")
    if d.get("version") != VERSION:
        raise WeightsError(f"weights schema version {d.get('version')!r} is not supported (expected {VERSION})")
    try:
        slots = d["slots"]
        w = PretrainedWeights(
            kind=d["kind"],
            slots=[s["name"] for s in slots],
            values=[s["value"] for s in slots],
            n_features=int(d.get("n_features", 1)),
            encoding=d.get("encoding"),
            cutoff=int(d.get("cutoff", 12)),
            seed=int(d.get("seed", 0)),
            config_digest=d.get("config_digest", ""),
            source=d.get("source", ""),
            stats=NormStats.from_dict(d["stats"]) if d.get("stats") else None,
            options=dict(d.get("options") or {}),
            metadata=dict(d.get("metadata") or {}),
        )
        w.spec()  # slot layout must match the kind
    except (KeyError, TypeError, ValueError, ConfigurationError, DataError) as exc:
        raise WeightsError(f"invalid weights document: {exc}") from exc
    return w


def dumps(w: PretrainedWeights) -> str:
    return json.dumps(to_dict(w), indent=2, sort_keys=False) + "\n"


def atomic_write(path, text: str) -> None:
    """Write to a sibling temp file, then rename over ``path``."""
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


def save(w: PretrainedWeights, path) -> None:
    atomic_write(path, dumps(w))


def load(path) -> PretrainedWeights:
    path = Path(path)
    if not path.is_file():
        raise WeightsError(f"weights file not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise WeightsError(f"{path.name} is not valid JSON: {exc}") from exc
    return from_dict(doc)


def bundled(name: str) -> PretrainedWeights:
    """Published parameter sets: ``model1``, ``model2`` or ``model3``."""
    if name not in BUNDLED:
        raise ConfigurationError(f"no bundled weights {name!r}; have {sorted(BUNDLED)}")
    text = resources.files("qforecast").joinpath("fixtures", BUNDLED[name]).read_text(encoding="utf-8")
    return from_dict(json.loads(text))


def resolve(ref: str) -> PretrainedWeights:
    """A path, or ``bundled:model2`` style reference."""
    if ref.startswith("bundled:"):
        return bundled(ref.split(":", 1)[1])
    return load(ref)
