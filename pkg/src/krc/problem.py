"""JSON problem files.

One file holds one state space and cost plus any number of named objects::

    {
      "version": 1,
      "labels": ["0", "1", "2"],
      "cost": [[0, 1, 2], [1, 0, 1], [2, 1, 0]],   # or "discrete" / "line"
      "coords": [0.0, 0.5, 1.0],                   # optional, for "line"
      "measures": {"mu": [0.5, 0.5, 0.0], "nu": [0.0, 0.5, 0.5]},
      "families": {"A": {"omega_labels": [...], "weights": [...], "margins": [[...], ...]}},
      "joints": {"J": {"omega_labels": [...], "table": [[...], ...]}},
      "chains": {"K": {"matrix": [[...], ...], "init": [...]}}
    }

``joint`` / ``chain`` (singular) are shorthands for a single object named
``joint`` / ``chain``.  A bare joint-law file
``{"omega_labels": [...], "s_labels": [...], "table": [[...]]}`` is also
accepted; its cost defaults to the discrete metric.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dependence import JointLaw
from .errors import InputError, UnknownMeasure
from .measures import CostMatrix, FiniteSpace, ProbVec, validate_prob
from .param import RandomMeasureFamily
from .reconstruct import validate_stochastic

SUPPORTED_VERSIONS = (1,)


class ProblemError(InputError):
    """Malformed problem file; the message names the offending field or position."""


@dataclass
class Problem:
    space: FiniteSpace
    cost: CostMatrix
    measures: dict[str, ProbVec] = field(default_factory=dict)
    families: dict[str, RandomMeasureFamily] = field(default_factory=dict)
    joints: dict[str, JointLaw] = field(default_factory=dict)
    chains: dict[str, tuple[np.ndarray, ProbVec]] = field(default_factory=dict)
    digest: str = ""

    def _lookup(self, table: dict, kind: str, name: str | None):
        if name is None:
            if len(table) == 1:
                return next(iter(table.values()))
            raise UnknownMeasure(f"file has {len(table)} {kind}s; name one of {sorted(table)}")
        try:
            return table[name]
        except KeyError:
            raise UnknownMeasure(f"no {kind} named {name!r}; have {sorted(table)}") from None

    def measure(self, name):
        return self._lookup(self.measures, "measure", name)

    def family(self, name):
        return self._lookup(self.families, "family", name)

    def joint(self, name=None):
        return self._lookup(self.joints, "joint", name)

    def chain(self, name=None):
        return self._lookup(self.chains, "chain", name)


def _at(path: str, fn, *args):
    try:
        return fn(*args)
    except ProblemError:
        raise
    except (InputError, ValueError, TypeError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        raise ProblemError(f"{path}: {msg}") from None


def _require(obj: dict, key: str, path: str):
    if key not in obj:
        raise ProblemError(f"{path}: missing field {key!r}")
    return obj[key]


def _cost(obj: dict, space: FiniteSpace) -> CostMatrix:
    raw = obj.get("cost", "discrete")
    if raw == "discrete":
        return CostMatrix.discrete(space)
    if raw == "line":
        return _at("coords", CostMatrix.line, space, obj.get("coords"))
    if isinstance(raw, str):
        raise ProblemError(f"cost: unknown named metric {raw!r} (use 'discrete' or 'line')")
    return _at("cost", lambda: CostMatrix(space, np.asarray(raw, dtype=float)))


def _family(obj: dict, space: FiniteSpace, path: str) -> RandomMeasureFamily:
    omega = _at(f"{path}.omega_labels", FiniteSpace, _require(obj, "omega_labels", path))
    weights = _at(f"{path}.weights", validate_prob, _require(obj, "weights", path), omega)
    margins = _require(obj, "margins", path)
    if not isinstance(margins, list) or len(margins) != omega.n:
        raise ProblemError(f"{path}.margins: expected {omega.n} rows")
    rows = tuple(_at(f"{path}.margins[{k}]", validate_prob, m, space) for k, m in enumerate(margins))
    return RandomMeasureFamily(omega, weights, rows)


def _joint(obj: dict, space: FiniteSpace, path: str) -> JointLaw:
    omega = _at(f"{path}.omega_labels", FiniteSpace, _require(obj, "omega_labels", path))
    if "s_labels" in obj:
        s = _at(f"{path}.s_labels", FiniteSpace, obj["s_labels"])
        if s != space:
            raise ProblemError(f"{path}.s_labels: must equal the file's labels {list(space.labels)}")
    table = _require(obj, "table", path)
    return _at(f"{path}.table", lambda: JointLaw(omega, space, np.asarray(table, dtype=float)))


def _chain(obj: dict, space: FiniteSpace, path: str):
    P = _at(f"{path}.matrix", validate_stochastic, _require(obj, "matrix", path), space)
    init = _at(f"{path}.init", validate_prob, _require(obj, "init", path), space)
    return P, init


def _named(obj: dict, plural: str, singular: str) -> dict:
    out = dict(obj.get(plural) or {})
    if not isinstance(out, dict):
        raise ProblemError(f"{plural}: expected an object of named entries")
    if singular in obj:
        out.setdefault(singular, obj[singular])
    return out


def parse_problem(obj: dict) -> Problem:
    if not isinstance(obj, dict):
        raise ProblemError("top level: expected a JSON object")
    version = obj.get("version", 1)
    if version not in SUPPORTED_VERSIONS:
        raise ProblemError(f"version: unsupported version {version!r}")
    if "labels" not in obj and "table" in obj:
        # bare joint-law file
        obj = {"labels": _require(obj, "s_labels", "top level"), "cost": obj.get("cost", "discrete"),
               "joint": obj}
    space = _at("labels", FiniteSpace, _require(obj, "labels", "top level"))
    prob = Problem(space, _cost(obj, space))
    for name, raw in (obj.get("measures") or {}).items():
        prob.measures[name] = _at(f"measures.{name}", validate_prob, raw, space)
    for name, raw in _named(obj, "families", "family").items():
        prob.families[name] = _family(raw, space, f"families.{name}")
    for name, raw in _named(obj, "joints", "joint").items():
        prob.joints[name] = _joint(raw, space, f"joints.{name}")
    for name, raw in _named(obj, "chains", "chain").items():
        prob.chains[name] = _chain(raw, space, f"chains.{name}")
    return prob


def load_problem(path: str | Path) -> Problem:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise ProblemError(f"{path}: {exc.strerror}") from None
    try:
        obj = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ProblemError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    prob = parse_problem(obj)
    prob.digest = hashlib.sha256(data).hexdigest()
    return prob
