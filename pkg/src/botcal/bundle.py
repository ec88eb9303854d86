"""Versioned model bundle: forest suite + calibrator + CAP model.

File layout: the header line ``botcal-model v1`` followed by one JSON
document. Floats are written with ``repr`` precision so a reloaded bundle
scores bit-identically.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

from botcal.calibration import Calibrator
from botcal.errors import ParseError, ValidationError, VersionError
from botcal.features import DEFAULT_SCHEMA, GROUPS, FeatureSchema
from botcal.forest import LANGUAGE_INDEPENDENT, DecisionTree, ForestModel, ForestParams, ForestSuite
from botcal.posterior import CapModel

MAGIC = "botcal-model"
FORMAT_VERSION = "v1"
HEADER = f"{MAGIC} {FORMAT_VERSION}"


@dataclass(frozen=True, eq=False)
class ModelBundle:
    forests: ForestSuite
    calibrator: Calibrator
    cap_model: CapModel
    metadata: dict

    @property
    def schema(self) -> FeatureSchema:
        return self.forests.schema

    @cached_property
    def version(self) -> str:
        """Short content hash identifying this bundle."""
        return f"{FORMAT_VERSION}-{hashlib.sha256(dumps(self).encode()).hexdigest()[:12]}"

    def replace(self, **changes) -> "ModelBundle":
        fields = {"forests": self.forests, "calibrator": self.calibrator,
                  "cap_model": self.cap_model, "metadata": self.metadata}
        fields.update(changes)
        return ModelBundle(**fields)


def _forest_to_dict(m: ForestModel) -> dict:
    return {
        "schema_fingerprint": m.schema_fingerprint,
        "n_features": m.n_features,
        "params": {
            "n_trees": m.params.n_trees, "seed": m.params.seed, "min_leaf": m.params.min_leaf,
            "features_per_split": m.params.features_per_split, "max_depth": m.params.max_depth,
            "bootstrap": m.params.bootstrap,
        },
        "metadata": m.metadata,
        "trees": [t.to_dict() for t in m.trees],
    }


def _forest_from_dict(d: dict) -> ForestModel:
    trees = tuple(DecisionTree.from_dict(t) for t in d["trees"])
    n_features = int(d["n_features"])
    for t in trees:
        t.validate(n_features)
    if not trees:
        raise ValidationError("forest has no trees")
    return ForestModel(trees, str(d["schema_fingerprint"]), n_features, ForestParams(**d["params"]),
                       dict(d.get("metadata", {})))


def to_document(bundle: ModelBundle) -> dict:
    suite = bundle.forests
    return {
        "schema": {
            "version": suite.schema.version,
            "fingerprint": suite.schema.fingerprint,
        },
        "metadata": bundle.metadata,
        "forests": {
            "main": _forest_to_dict(suite.main),
            "groups": {g: _forest_to_dict(m) for g, m in suite.groups.items()},
            LANGUAGE_INDEPENDENT: _forest_to_dict(suite.language_independent),
        },
        "calibrator": bundle.calibrator.to_dict(),
        "cap": bundle.cap_model.to_dict(),
    }


def from_document(doc: dict, schema: FeatureSchema = DEFAULT_SCHEMA) -> ModelBundle:
    """Rebuild a bundle. The stored schema fingerprint is kept as-is; scoring
    refuses vectors whose schema differs."""
    try:
        f = doc["forests"]
        main = _forest_from_dict(f["main"])
        groups = {g: _forest_from_dict(f["groups"][g]) for g in GROUPS if g in f["groups"]}
        unknown = set(f["groups"]) - set(GROUPS)
        if unknown:
            raise ValidationError(f"unknown feature groups in bundle: {sorted(unknown)}")
        li = _forest_from_dict(f[LANGUAGE_INDEPENDENT])
        calibrator = Calibrator.from_dict(doc["calibrator"])
        cap_model = CapModel.from_dict(doc["cap"])
        metadata = dict(doc.get("metadata", {}))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ParseError(f"model document is incomplete or malformed: {exc!r}") from exc
    return ModelBundle(ForestSuite(schema, main, groups, li), calibrator, cap_model, metadata)


def dumps(bundle: ModelBundle) -> str:
    return HEADER + "\n" + json.dumps(to_document(bundle), separators=(",", ":")) + "\n"


def loads(text: str, schema: FeatureSchema = DEFAULT_SCHEMA) -> ModelBundle:
    header, sep, body = text.partition("\n")
    if not sep:
        raise ParseError("model file is truncated (no header line)")
    parts = header.strip().split(" ")
    if len(parts) != 2 or parts[0] != MAGIC:
        raise ParseError(f"not a botcal model file (header {header[:40]!r})")
    if parts[1] != FORMAT_VERSION:
        raise VersionError(f"model format {parts[1]!r} is not supported; this build reads {FORMAT_VERSION!r}")
    if not body.endswith("\n"):
        raise ParseError("model file is truncated (missing end-of-document newline)")
    try:
        doc = json.loads(body)
    except json.JSONDecodeError as exc:
        raise ParseError(f"model document is truncated or corrupt: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("model document must be a JSON object")
    return from_document(doc, schema)


def save_model(bundle: ModelBundle, path: str | Path) -> None:
    Path(path).write_text(dumps(bundle), encoding="utf-8")


def load_model(path: str | Path, schema: FeatureSchema = DEFAULT_SCHEMA) -> ModelBundle:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path}: not UTF-8 text") from exc
    return loads(text, schema)
