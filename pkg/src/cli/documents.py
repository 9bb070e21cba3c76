import inspect
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np
from jsonschema import Draft202012Validator

from src.arclen import UnitSpeedCurve
from src.curve_core import Curve, sampled_curve
from src.lib.catalog import curve_builders, get_curve
from src.lib.errors import RectifyError, SchemaError

KINDS = ("analytic", "sampled")

NUMBERS = {"type": "array", "items": {"type": "number"}}

CURVE_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "curve",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "kind": {"enum": list(KINDS)},
        "name": {"type": "string", "minLength": 1},
        "params": {"type": "object"},
        "domain": {**NUMBERS, "minItems": 2, "maxItems": 2},
        "dim": {"type": "integer", "minimum": 1},
        "nodes": {**NUMBERS, "minItems": 2},
        "values": {
            "type": "array",
            "minItems": 2,
            "items": {"anyOf": [{"type": "number"}, {**NUMBERS, "minItems": 1}]},
        },
    },
    "allOf": [
        # a bare name means an analytic curve
        {"if": {"not": {"required": ["kind"]}}, "then": {"required": ["name"]}},
        {"if": {"required": ["kind"], "properties": {"kind": {"const": "analytic"}}}, "then": {"required": ["name"]}},
        {"if": {"required": ["kind"], "properties": {"kind": {"const": "sampled"}}},
         "then": {"required": ["nodes", "values"]}},
    ],
}

MANIFEST_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "run manifest",
    "type": "object",
    "additionalProperties": False,
    "required": ["command", "inputs"],
    "properties": {
        "command": {"enum": ["length", "frechet", "lineint", "bc", "verify"]},
        "inputs": {"type": "array", "items": {"type": "string"}},
        "seed": {"type": "integer"},
        "tolerances": {"type": "object", "additionalProperties": {"type": "number"}},
        "schedule": {"type": "object", "additionalProperties": {"type": "integer"}},
        "outputs": {"type": "array", "items": {"type": "string"}},
    },
}

curve_validator = Draft202012Validator(CURVE_SCHEMA)
manifest_validator = Draft202012Validator(MANIFEST_SCHEMA)


def validate_with_schema(obj: Any, validator: Draft202012Validator):
    """Raise SchemaError listing every violation, located by JSON path."""
    errors = [f"{list(e.absolute_path)}: {e.message}" for e in sorted(validator.iter_errors(obj), key=str)]
    if errors:
        raise SchemaError(f"Invalid {validator.schema['title']}: " + "; ".join(errors))


@dataclass
class CurveSpecDocument:
    """
    JSON curve description:
      {"kind": "analytic", "name": "circle", "params": {"radius": 2}, "domain": [0, 6.28]}
      {"kind": "sampled", "domain": [0, 1], "dim": 2, "nodes": [...], "values": [[...], ...]}
    """

    kind: str
    name: Optional[str] = None
    params: dict = field(default_factory=dict)
    domain: Optional[list] = None
    dim: Optional[int] = None
    nodes: Optional[list] = None
    values: Optional[list] = None

    @classmethod
    def from_dict(cls, raw: Any) -> "CurveSpecDocument":
        validate_with_schema(raw, curve_validator)
        doc = cls(raw.get("kind", "analytic"), raw.get("name"), dict(raw.get("params") or {}), raw.get("domain"),
                  raw.get("dim"), raw.get("nodes"), raw.get("values"))
        doc.validate()
        return doc

    def validate(self):
        """Checks the schema cannot express: ordering and shape agreement."""
        if self.domain is not None and not float(self.domain[0]) < float(self.domain[1]):
            raise SchemaError(f"domain must be [a, b] with a < b, got {self.domain!r}")
        if self.kind == "analytic":
            return
        nodes = np.asarray(self.nodes, dtype=float)
        try:
            values = np.asarray(self.values, dtype=float)
        except ValueError:
            raise SchemaError("value rows must all have the same length") from None
        if values.ndim == 1:
            values = values.reshape(-1, 1)
        if len(nodes) != len(values):
            raise SchemaError(f"{len(nodes)} nodes but {len(values)} value rows")
        if np.any(np.diff(nodes) <= 0):
            raise SchemaError("nodes must be strictly increasing")
        if self.dim is not None and values.shape[1] != int(self.dim):
            raise SchemaError(f"dim is {self.dim} but value rows have length {values.shape[1]}")
        if self.domain is not None and (nodes[0] != float(self.domain[0]) or nodes[-1] != float(self.domain[1])):
            raise SchemaError(f"nodes must start at {self.domain[0]} and end at {self.domain[1]}")

    def to_curve(self) -> Curve:
        try:
            if self.kind == "sampled":
                return sampled_curve(self.nodes, self.values)
            params = dict(self.params)
            builder = curve_builders.get(str(self.name).lower())
            if self.domain is not None and builder is not None \
                    and "domain" in inspect.signature(builder).parameters:
                params.setdefault("domain", self.domain)
            curve = get_curve(self.name, **params)
        except SchemaError:
            raise
        except RectifyError as e:
            raise SchemaError(str(e)) from e
        if self.domain is not None and [curve.domain_lo, curve.domain_hi] != [float(d) for d in self.domain]:
            raise SchemaError(f"{self.name} lives on [{curve.domain_lo}, {curve.domain_hi}], not {self.domain}")
        return curve

    @classmethod
    def from_curve(cls, curve) -> "CurveSpecDocument":
        if isinstance(curve, UnitSpeedCurve):
            curve = curve.as_curve()
        domain = [curve.domain_lo, curve.domain_hi]
        if curve.is_sampled:
            return cls("sampled", domain=domain, dim=curve.dim, nodes=curve.body.nodes.tolist(),
                       values=curve.body.values.tolist())
        return cls("analytic", curve.name, dict(curve.body.params), domain, curve.dim)

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v not in (None, {})}


def read_document(source: str) -> CurveSpecDocument:
    """Load a curve spec from a JSON file, from stdin ("-"), or a bare catalog name such as "circle"."""
    if source == "-":
        text = sys.stdin.read()
    elif Path(source).is_file():
        text = Path(source).read_text()
    elif source.lower() in curve_builders:
        return CurveSpecDocument("analytic", source.lower())
    else:
        raise SchemaError(f"No curve spec file or catalog curve named {source!r}")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError(f"Curve spec is not valid JSON: {e}") from e
    return CurveSpecDocument.from_dict(raw)


def load_curve(source: str) -> Curve:
    return read_document(source).to_curve()


@dataclass
class RunManifest:
    command: str
    inputs: list
    seed: int = 0
    tolerances: dict = field(default_factory=dict)
    schedule: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)

    def write(self, path: str):
        record = asdict(self)
        validate_with_schema(record, manifest_validator)
        Path(path).write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")

    @classmethod
    def read(cls, path: str) -> "RunManifest":
        try:
            record = json.loads(Path(path).read_text())
        except json.JSONDecodeError as e:
            raise SchemaError(f"Run manifest is not valid JSON: {e}") from e
        validate_with_schema(record, manifest_validator)
        return cls(**record)
