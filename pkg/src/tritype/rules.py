"""Rule tables: how a new vertex's type is drawn from its neighbour census.

Type 1 is rock, type 2 paper, type 3 scissors; paper beats rock, scissors
beat paper, rock beats scissors.  Builders return dense ``RuleTable``s
ordered by ``enumerate_count_vectors``; the built-in tables also carry
exact Fraction rows.  ``tournament_outcome`` is an independent oracle for
the m=4 table: it enumerates the bracket instead of hard-coding results.
"""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Optional

import numpy as np

from .core import (
    ConfigError,
    RuleTable,
    count_vector_index,
    enumerate_count_vectors,
    n_count_vectors,
)

MAX_CUSTOM_M = 16
ROW_SUM_TOL = 1e-9

F0 = Fraction(0)
F1 = Fraction(1)


def _table_from_exact(m, rows, name, params=None):
    probs = np.array([[float(p) for p in row] for row in rows])
    return RuleTable(
        m=m, probs=probs, name=name, exact=tuple(rows), params=params or {}
    )


def linear_rule(m: int) -> RuleTable:
    """p_u = u/m: the new vertex copies a uniformly-chosen neighbour."""
    if m < 1:
        raise ValueError("m must be >= 1")
    rows = [
        (Fraction(u1, m), Fraction(u2, m), Fraction(u3, m))
        for (u1, u2, u3) in enumerate_count_vectors(m)
    ]
    return _table_from_exact(m, rows, "linear")


def _beats(a: int, b: int) -> bool:
    # 0-indexed types; rock(0) beats scissors(2), paper(1) rock, scissors paper
    return (a - b) % 3 == 1


def _duel(a: int, b: int) -> int:
    if a == b:
        return a
    return a if _beats(a, b) else b


def perturbed_rps_rule(h: float) -> RuleTable:
    """Two-neighbour duel, but with probability h the type is uniform instead.

    With k = h/3 the winner's probability is 1-2k and each loser's is k;
    h = 0 is the plain duel table.
    """
    if not 0 <= h < 1:
        raise ValueError(f"h must be in [0, 1), got {h}")
    k = Fraction(h) / 3
    rows = []
    for (u1, u2, u3) in enumerate_count_vectors(2):
        types = [0] * u1 + [1] * u2 + [2] * u3
        winner = _duel(types[0], types[1])
        row = [k, k, k]
        row[winner] = 1 - 2 * k
        rows.append(tuple(row))
    name = "perturbed_rps" if h else "rps"
    return _table_from_exact(2, rows, name, {"h": float(h)})


def rps_rule() -> RuleTable:
    """Plain two-neighbour duel (m=2): the winning neighbour's type is copied."""
    return perturbed_rps_rule(0.0)


def tournament_outcome(u: tuple[int, int, int]) -> tuple[Fraction, Fraction, Fraction]:
    """Winner distribution of the four-player knockout, by enumeration.

    The census is expanded into four labelled players; each of the three
    ways of pairing them into two semifinals is equally likely; winners
    meet in the final.  Ties inside a match keep the shared type.
    Denominators always divide 3.
    """
    u1, u2, u3 = u
    if min(u1, u2, u3) < 0 or u1 + u2 + u3 != 4:
        raise ValueError(f"census {u} must be nonnegative and sum to 4")
    players = [0] * u1 + [1] * u2 + [2] * u3
    pairings = (((0, 1), (2, 3)), ((0, 2), (1, 3)), ((0, 3), (1, 2)))
    wins = [0, 0, 0]
    for (a, b), (c, d) in pairings:
        champion = _duel(
            _duel(players[a], players[b]), _duel(players[c], players[d])
        )
        wins[champion] += 1
    return (Fraction(wins[0], 3), Fraction(wins[1], 3), Fraction(wins[2], 3))


# m=4 knockout table; thirds appear only when all three types are present
_TOURNAMENT_ROWS = {
    (4, 0, 0): (F1, F0, F0),
    (3, 0, 1): (F1, F0, F0),
    (2, 0, 2): (F1, F0, F0),
    (1, 0, 3): (F1, F0, F0),
    (0, 4, 0): (F0, F1, F0),
    (1, 3, 0): (F0, F1, F0),
    (2, 2, 0): (F0, F1, F0),
    (3, 1, 0): (F0, F1, F0),
    (0, 0, 4): (F0, F0, F1),
    (0, 1, 3): (F0, F0, F1),
    (0, 2, 2): (F0, F0, F1),
    (0, 3, 1): (F0, F0, F1),
    (2, 1, 1): (Fraction(1, 3), Fraction(2, 3), F0),
    (1, 2, 1): (F0, Fraction(1, 3), Fraction(2, 3)),
    (1, 1, 2): (Fraction(2, 3), F0, Fraction(1, 3)),
}


def tournament_rule() -> RuleTable:
    """Knockout tournament among four neighbours (m=4), table as published."""
    rows = [_TOURNAMENT_ROWS[u] for u in enumerate_count_vectors(4)]
    return _table_from_exact(4, rows, "tournament4")


def validate_rule(table: RuleTable) -> Optional[str]:
    """Return None if the table is a complete, well-formed rule, else why not."""
    if not 1 <= table.m <= MAX_CUSTOM_M:
        return f"m must be in 1..{MAX_CUSTOM_M}, got {table.m}"
    expected = n_count_vectors(table.m)
    shape = np.shape(table.probs)
    if shape != (expected, 3):
        return f"expected {expected} rows of 3 probabilities, got shape {shape}"
    for u, row in table.entries():
        if np.any(row < 0):
            return f"negative probability at census {u}: {row.tolist()}"
        if np.any(row > 1):
            return f"probability above 1 at census {u}: {row.tolist()}"
        if abs(float(row.sum()) - 1.0) > ROW_SUM_TOL:
            return f"row at census {u} sums to {float(row.sum())!r}, not 1"
    return None


def load_rule(path: str) -> RuleTable:
    """Load and validate a custom rule table from a JSON file.

    Format: ``{"m": int, "entries": [{"u": [3 ints], "p": [3 reals]}, ...]}``
    with every census summing to m listed exactly once.
    """
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read rule file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"rule file {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "m" not in doc or "entries" not in doc:
        raise ConfigError(f'rule file {path} must have keys "m" and "entries"')
    m = doc["m"]
    if not isinstance(m, int) or isinstance(m, bool) or not 1 <= m <= MAX_CUSTOM_M:
        raise ConfigError(f"rule m must be an integer in 1..{MAX_CUSTOM_M}, got {m!r}")
    probs = np.full((n_count_vectors(m), 3), np.nan)
    for entry in doc["entries"]:
        if not isinstance(entry, dict) or "u" not in entry or "p" not in entry:
            raise ConfigError(f'rule entries need "u" and "p": {entry!r}')
        u = entry["u"]
        p = entry["p"]
        if len(u) != 3 or any(not isinstance(v, int) or v < 0 for v in u):
            raise ConfigError(f"census must be 3 nonnegative integers: {u!r}")
        if sum(u) != m:
            raise ConfigError(f"census {u} does not sum to m={m}")
        if len(p) != 3 or any(not isinstance(v, (int, float)) for v in p):
            raise ConfigError(f"distribution must be 3 reals: {p!r}")
        idx = count_vector_index(tuple(u), m)
        if not np.isnan(probs[idx]).all():
            raise ConfigError(f"duplicate entry for census {tuple(u)}")
        if min(p) < 0:
            raise ConfigError(f"negative probability at census {tuple(u)}: {p}")
        if abs(sum(p) - 1.0) > ROW_SUM_TOL:
            raise ConfigError(
                f"distribution at census {tuple(u)} sums to {sum(p)!r}, not 1"
            )
        probs[idx] = p
    missing = [
        u
        for u, row in zip(enumerate_count_vectors(m), probs)
        if np.isnan(row).any()
    ]
    if missing:
        raise ConfigError(f"rule file is missing censuses: {missing}")
    table = RuleTable(m=m, probs=probs, name="custom", params={"path": str(path)})
    problem = validate_rule(table)
    if problem is not None:
        raise ConfigError(problem)
    return table


def resolve_rule(
    name: str,
    h: Optional[float] = None,
    table_path: Optional[str] = None,
    m: Optional[int] = None,
) -> RuleTable:
    """Build the table a config names (the CLI and engine entry point)."""
    if name == "linear":
        return linear_rule(2 if m is None else m)
    if name == "rps":
        return rps_rule()
    if name == "perturbed_rps":
        if h is None:
            raise ConfigError("perturbed_rps requires h")
        try:
            return perturbed_rps_rule(h)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if name == "tournament4":
        return tournament_rule()
    if name == "custom":
        if not table_path:
            raise ConfigError("custom rule requires table_path")
        return load_rule(table_path)
    raise ConfigError(f"unknown rule {name!r}")
