"""Shared domain types: simplex points, neighbour censuses, rule tables, run configs.

Everything here is an immutable value type; simulation state lives in
``engine`` and is exact-integer, with simplex points derived as views.
The number of types is fixed at 3.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

SIMPLEX_TOL = 1e-12

#: vertex counts / per-type degree sums of the default initial graph:
#: complete graph on 9 vertices, three of each type (each vertex has degree 8)
DEFAULT_VERTEX_COUNTS = (3, 3, 3)
DEFAULT_DEGREE_SUMS = (24, 24, 24)

RULE_NAMES = ("linear", "rps", "perturbed_rps", "tournament4", "custom")
MODES = ("aggregate", "graph")


class ConfigError(ValueError):
    """Invalid model configuration or rule file."""


@dataclass(frozen=True)
class SimplexPoint:
    """A point (x, y, z) with nonnegative coordinates summing to 1."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        if self.x < 0 or self.y < 0 or self.z < 0:
            raise ValueError(f"negative simplex coordinate: {self}")
        if abs(self.x + self.y + self.z - 1.0) > SIMPLEX_TOL:
            raise ValueError(f"coordinates must sum to 1: {self}")

    @classmethod
    def from_weights(cls, w1: float, w2: float, w3: float) -> "SimplexPoint":
        """Normalise nonnegative weights onto the simplex."""
        if w1 < 0 or w2 < 0 or w3 < 0:
            raise ValueError("weights must be nonnegative")
        total = w1 + w2 + w3
        if total <= 0:
            raise ValueError("at least one weight must be positive")
        return cls(w1 / total, w2 / total, w3 / total)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)

    def __iter__(self):
        return iter((self.x, self.y, self.z))


def simplex_from_weights(w1: float, w2: float, w3: float) -> SimplexPoint:
    return SimplexPoint.from_weights(w1, w2, w3)


def n_count_vectors(m: int) -> int:
    """Number of neighbour censuses for m neighbours: C(m+2, 2)."""
    return (m + 1) * (m + 2) // 2


def enumerate_count_vectors(m: int) -> list[tuple[int, int, int]]:
    """All (u1, u2, u3) with u1+u2+u3 = m, ordered (m,0,0) ... (0,0,m)."""
    if m < 1:
        raise ValueError("m must be >= 1")
    return [
        (u1, u2, m - u1 - u2)
        for u1 in range(m, -1, -1)
        for u2 in range(m - u1, -1, -1)
    ]


def count_vector_index(u: tuple[int, int, int], m: int) -> int:
    """Rank of census u in enumerate_count_vectors(m); O(1), used by the kernels."""
    u1, u2, u3 = u
    if u1 < 0 or u2 < 0 or u3 < 0 or u1 + u2 + u3 != m:
        raise ValueError(f"census {u} does not sum to m={m}")
    r = m - u1
    return r * (r + 1) // 2 + (r - u2)


@dataclass(frozen=True)
class RuleTable:
    """Total map from every neighbour census (sum m) to a type distribution.

    Rows of ``probs`` follow ``enumerate_count_vectors(m)``.  Builders of
    the exactly-rational tables also attach the Fraction rows so tests can
    compare without float rounding.
    """

    m: int
    probs: np.ndarray  # (n_count_vectors(m), 3) float64, read-only
    name: str = "custom"
    exact: Optional[tuple[tuple[Fraction, Fraction, Fraction], ...]] = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        probs = np.ascontiguousarray(self.probs, dtype=np.float64)
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    def prob(self, u: tuple[int, int, int]) -> np.ndarray:
        """Distribution of the new vertex's type given neighbour census u."""
        return self.probs[count_vector_index(u, self.m)]

    def entries(self):
        """Iterate (census, distribution-row) pairs in table order."""
        return zip(enumerate_count_vectors(self.m), self.probs)


def _as_int3(value, key: str) -> tuple[int, int, int]:
    try:
        a, b, c = value
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be a list of 3 integers")
    for v in (a, b, c):
        if not isinstance(v, int) or isinstance(v, bool):
            raise ConfigError(f"{key} entries must be integers, got {value!r}")
        if v < 0:
            raise ConfigError(f"{key} entries must be nonnegative, got {value!r}")
    return (a, b, c)


@dataclass(frozen=True)
class ModelConfig:
    """Everything needed to reproduce one simulation run."""

    rule_name: str
    steps: int
    seed: int
    h: Optional[float] = None
    table_path: Optional[str] = None
    m: Optional[int] = None  # linear rule only; defaults to 2
    vertex_counts: tuple[int, int, int] = DEFAULT_VERTEX_COUNTS
    degree_sums: tuple[int, int, int] = DEFAULT_DEGREE_SUMS
    mode: str = "aggregate"
    record_interval: int = 1000

    def __post_init__(self):
        if self.rule_name not in RULE_NAMES:
            raise ConfigError(
                f"unknown rule {self.rule_name!r}; expected one of {RULE_NAMES}"
            )
        if self.rule_name == "perturbed_rps" and self.h is None:
            raise ConfigError("perturbed_rps requires h")
        if self.rule_name == "custom" and not self.table_path:
            raise ConfigError("custom rule requires table_path")
        if self.steps < 0:
            raise ConfigError("steps must be >= 0")
        if self.record_interval < 1:
            raise ConfigError("record_interval must be >= 1")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not (-(1 << 63) <= self.seed < (1 << 64)):
            raise ConfigError("seed must fit in 64 bits")
        _as_int3(self.vertex_counts, "vertex_counts")
        _as_int3(self.degree_sums, "degree_sums")
        for i, (c, d) in enumerate(zip(self.vertex_counts, self.degree_sums)):
            if c == 0 and d > 0:
                raise ConfigError(
                    f"type {i + 1} has degree sum {d} but no vertices"
                )
        if any(d == 0 for d in self.degree_sums):
            # permitted, but both convergence results assume every type present
            warnings.warn(
                "initial graph is missing a type (zero degree sum); "
                "the convergence behaviour of the built-in models assumes "
                "all three types present",
                stacklevel=2,
            )

    @classmethod
    def from_dict(cls, doc: dict) -> "ModelConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(doc) - {"rule", "initial", "steps", "seed", "mode", "record_interval"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        rule = doc.get("rule")
        if not isinstance(rule, dict) or "name" not in rule:
            raise ConfigError('config requires a "rule" object with a "name"')
        rule_unknown = set(rule) - {"name", "h", "table_path", "m"}
        if rule_unknown:
            raise ConfigError(f"unknown rule keys: {sorted(rule_unknown)}")
        initial = doc.get("initial")
        kwargs = {}
        if initial is not None:
            if not isinstance(initial, dict):
                raise ConfigError('"initial" must be an object')
            if "vertex_counts" in initial:
                kwargs["vertex_counts"] = _as_int3(
                    initial["vertex_counts"], "initial.vertex_counts"
                )
            if "degree_sums" in initial:
                kwargs["degree_sums"] = _as_int3(
                    initial["degree_sums"], "initial.degree_sums"
                )
        for key in ("steps", "seed"):
            if key not in doc:
                raise ConfigError(f"config requires {key!r}")
            if not isinstance(doc[key], int) or isinstance(doc[key], bool):
                raise ConfigError(f"{key!r} must be an integer")
        if "mode" in doc:
            kwargs["mode"] = doc["mode"]
        if "record_interval" in doc:
            ri = doc["record_interval"]
            if not isinstance(ri, int) or isinstance(ri, bool):
                raise ConfigError('"record_interval" must be an integer')
            kwargs["record_interval"] = ri
        h = rule.get("h")
        if h is not None and not isinstance(h, (int, float)):
            raise ConfigError('"h" must be a number')
        m = rule.get("m")
        if m is not None and (not isinstance(m, int) or isinstance(m, bool)):
            raise ConfigError('"m" must be an integer')
        return cls(
            rule_name=rule["name"],
            steps=doc["steps"],
            seed=doc["seed"],
            h=None if h is None else float(h),
            table_path=rule.get("table_path"),
            m=m,
            **kwargs,
        )

    @classmethod
    def from_json(cls, text: str) -> "ModelConfig":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        return cls.from_dict(doc)

    def to_dict(self) -> dict:
        rule: dict = {"name": self.rule_name}
        if self.h is not None:
            rule["h"] = self.h
        if self.table_path is not None:
            rule["table_path"] = self.table_path
        if self.m is not None:
            rule["m"] = self.m
        return {
            "rule": rule,
            "initial": {
                "vertex_counts": list(self.vertex_counts),
                "degree_sums": list(self.degree_sums),
            },
            "steps": self.steps,
            "seed": self.seed,
            "mode": self.mode,
            "record_interval": self.record_interval,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)
