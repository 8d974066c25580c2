"""Typed preferential-attachment process with exact integer accounting.

Each step connects a new vertex to m existing vertices chosen
independently with probability proportional to degree (multi-edges
allowed, never self-loops), tallies the neighbour types into a census u,
draws the new type from the rule row p_u, and adds the 2m endpoint
degrees.  Aggregate mode tracks only per-type degree sums and vertex
counts, so memory is O(1) in the number of steps; graph mode additionally
materialises the endpoint array (which doubles as the flattened edge
list) to validate that reduction and to export graphs.

Draw order per step is part of the reproducibility contract shared by
the Python-level ``step`` and the njit kernels:

1. m bounded integer draws in [0, total degree), each mapped to a type
   by cumulative comparison against the degree sums (aggregate) or by
   endpoint lookup (graph);
2. one unit-interval draw mapped to the new type by cumulative
   comparison against p_u.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, replace
from math import comb
from typing import Callable, Optional

import numpy as np
from numba import njit

from .core import ConfigError, ModelConfig, RuleTable, SimplexPoint
from .rng import U64, Xoshiro256PP, child_seeds, xs_below, xs_init, xs_unit
from .rules import resolve_rule

# progress callbacks fire and kernels yield at this cadence
PROGRESS_STEPS = 10_000_000

_MAX_TOTAL_DEGREE = 1 << 62


@dataclass(frozen=True)
class TrajectoryRecord:
    """One sampled point of a run: proportions and the product 27·X·Y·Z."""

    step: int
    vertex_props: SimplexPoint  # A, B, C
    degree_props: SimplexPoint  # X, Y, Z
    product27: float

    def row(self) -> tuple:
        a, b, c = self.vertex_props
        x, y, z = self.degree_props
        return (self.step, a, b, c, x, y, z, self.product27)


@dataclass
class EngineState:
    """Exact integer state of one run; confined to a single worker."""

    table: RuleTable
    mode: str
    degree_sums: list[int]
    vertex_counts: list[int]
    step: int = 0
    # graph mode only: consecutive endpoint pairs form the edge list.
    # Lists under the step-level API; run() leaves int64 arrays instead.
    endpoints: Optional["list[int] | np.ndarray"] = None
    vertex_types: Optional["list[int] | np.ndarray"] = None

    def record(self) -> TrajectoryRecord:
        degree_props = SimplexPoint.from_weights(*self.degree_sums)
        x, y, z = degree_props
        return TrajectoryRecord(
            step=self.step,
            vertex_props=SimplexPoint.from_weights(*self.vertex_counts),
            degree_props=degree_props,
            product27=27.0 * x * y * z,
        )


def _complete_graph_edges(per_type: int) -> list[tuple[int, int]]:
    n = 3 * per_type
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def _realize_multigraph(degrees: list[int]) -> list[tuple[int, int]]:
    """Pair endpoints into a self-loop-free multigraph with these degrees.

    Feasible iff the total is even and no vertex needs more than half of
    it; repeatedly matching the two largest remaining degrees then never
    gets stuck.
    """
    total = sum(degrees)
    if total % 2:
        raise ConfigError("initial degree sums must have an even total")
    if degrees and 2 * max(degrees) > total:
        raise ConfigError(
            "initial composition is not realizable as a graph: "
            "one vertex holds more than half the total degree"
        )
    heap = [(-d, v) for v, d in enumerate(degrees) if d > 0]
    heapq.heapify(heap)
    edges = []
    while heap:
        da, a = heapq.heappop(heap)
        if not heap:
            raise ConfigError("initial composition is not realizable as a graph")
        db, b = heapq.heappop(heap)
        edges.append((a, b))
        if da + 1 < 0:
            heapq.heappush(heap, (da + 1, a))
        if db + 1 < 0:
            heapq.heappush(heap, (db + 1, b))
    return edges


def _initial_graph(cfg: ModelConfig) -> tuple[list[int], list[int]]:
    """Concrete G0 for graph mode: (endpoint pairs flattened, vertex types)."""
    counts = cfg.vertex_counts
    sums = cfg.degree_sums
    vtypes = [t for t in range(3) for _ in range(counts[t])]
    c = counts[0]
    if counts == (c, c, c) and c > 0 and all(s == c * (3 * c - 1) for s in sums):
        edges = _complete_graph_edges(c)
    else:
        degrees = []
        for t in range(3):
            if counts[t] == 0:
                continue
            base, extra = divmod(sums[t], counts[t])
            degrees.extend(
                base + 1 if i < extra else base for i in range(counts[t])
            )
        edges = _realize_multigraph(degrees)
    endpoints = [v for edge in edges for v in edge]
    return endpoints, vtypes


def init_state(cfg: ModelConfig) -> EngineState:
    table = resolve_rule(cfg.rule_name, cfg.h, cfg.table_path, cfg.m)
    total = sum(cfg.degree_sums)
    if total <= 0:
        raise ConfigError("initial total degree must be positive")
    if total + 2 * table.m * cfg.steps >= _MAX_TOTAL_DEGREE:
        raise ConfigError("run too long: total degree would overflow 63 bits")
    state = EngineState(
        table=table,
        mode=cfg.mode,
        degree_sums=list(cfg.degree_sums),
        vertex_counts=list(cfg.vertex_counts),
    )
    if cfg.mode == "graph":
        state.endpoints, state.vertex_types = _initial_graph(cfg)
        if len(state.endpoints) != total:
            raise ConfigError(
                "initial graph endpoints do not match the configured degree sums"
            )
    return state


def sample_census(state: EngineState, rng: Xoshiro256PP) -> tuple[int, int, int]:
    """Draw the m neighbour types; consumes exactly m bounded draws."""
    d1, d2, d3 = state.degree_sums
    total = d1 + d2 + d3
    u = [0, 0, 0]
    if state.mode == "graph":
        for _ in range(state.table.m):
            endpoint = state.endpoints[rng.next_below(total)]
            u[state.vertex_types[endpoint]] += 1
    else:
        for _ in range(state.table.m):
            r = rng.next_below(total)
            if r < d1:
                u[0] += 1
            elif r < d1 + d2:
                u[1] += 1
            else:
                u[2] += 1
    return tuple(u)


def assign_type(table: RuleTable, u: tuple[int, int, int], rng: Xoshiro256PP) -> int:
    """Draw the new vertex's type from p_u; consumes one unit draw."""
    p = table.prob(u)
    v = rng.next_unit()
    if v < p[0]:
        return 0
    if v < p[0] + p[1]:
        return 1
    return 2


def step(state: EngineState, rng: Xoshiro256PP) -> EngineState:
    """Advance one vertex; mutates and returns `state`."""
    m = state.table.m
    d1, d2, d3 = state.degree_sums
    total = d1 + d2 + d3
    if state.mode == "graph":
        chosen = []
        for _ in range(m):
            chosen.append(state.endpoints[rng.next_below(total)])
        u = [0, 0, 0]
        for v in chosen:
            u[state.vertex_types[v]] += 1
        u = tuple(u)
    else:
        u = sample_census(state, rng)
    t_new = assign_type(state.table, u, rng)
    for i in range(3):
        state.degree_sums[i] += u[i]
    state.degree_sums[t_new] += m
    state.vertex_counts[t_new] += 1
    if state.mode == "graph":
        new_id = len(state.vertex_types)
        state.vertex_types.append(t_new)
        for v in chosen:
            state.endpoints.extend((v, new_id))
    state.step += 1
    return state


@njit(cache=True, nogil=True)
def _agg_chunk(deg, vcnt, step0, n_steps, m, probs, rng, rint, out_steps, out_vals):
    nrec = 0
    s = step0
    for _ in range(n_steps):
        d0 = deg[0]
        d1 = deg[1]
        total = U64(d0 + d1 + deg[2])
        c0 = U64(d0)
        c1 = U64(d0 + d1)
        u1 = 0
        u2 = 0
        u3 = 0
        for _ in range(m):
            r = xs_below(rng, total)
            if r < c0:
                u1 += 1
            elif r < c1:
                u2 += 1
            else:
                u3 += 1
        rr = m - u1
        idx = (rr * (rr + 1)) // 2 + (rr - u2)
        v = xs_unit(rng)
        if v < probs[idx, 0]:
            t = 0
        elif v < probs[idx, 0] + probs[idx, 1]:
            t = 1
        else:
            t = 2
        deg[0] += u1
        deg[1] += u2
        deg[2] += u3
        deg[t] += m
        vcnt[t] += 1
        s += 1
        if s % rint == 0:
            out_steps[nrec] = s
            _fill_record(deg, vcnt, out_vals, nrec)
            nrec += 1
    return nrec


@njit(cache=True, nogil=True)
def _graph_chunk(
    deg, vcnt, step0, n_steps, m, probs, rng, rint,
    endpoints, n_end, vtypes, n_vert, out_steps, out_vals,
):
    nrec = 0
    s = step0
    ne = n_end
    nv = n_vert
    chosen = np.empty(m, dtype=np.int64)
    for _ in range(n_steps):
        total = U64(ne)
        u1 = 0
        u2 = 0
        u3 = 0
        for j in range(m):
            r = xs_below(rng, total)
            w = endpoints[r]
            chosen[j] = w
            tw = vtypes[w]
            if tw == 0:
                u1 += 1
            elif tw == 1:
                u2 += 1
            else:
                u3 += 1
        rr = m - u1
        idx = (rr * (rr + 1)) // 2 + (rr - u2)
        v = xs_unit(rng)
        if v < probs[idx, 0]:
            t = 0
        elif v < probs[idx, 0] + probs[idx, 1]:
            t = 1
        else:
            t = 2
        deg[0] += u1
        deg[1] += u2
        deg[2] += u3
        deg[t] += m
        vcnt[t] += 1
        vtypes[nv] = t
        for j in range(m):
            endpoints[ne] = chosen[j]
            endpoints[ne + 1] = nv
            ne += 2
        nv += 1
        s += 1
        if s % rint == 0:
            out_steps[nrec] = s
            _fill_record(deg, vcnt, out_vals, nrec)
            nrec += 1
    return nrec


@njit(cache=True, nogil=True, inline="always")
def _fill_record(deg, vcnt, out_vals, i):
    nv = vcnt[0] + vcnt[1] + vcnt[2]
    nd = deg[0] + deg[1] + deg[2]
    x = deg[0] / nd
    y = deg[1] / nd
    z = deg[2] / nd
    out_vals[i, 0] = vcnt[0] / nv
    out_vals[i, 1] = vcnt[1] / nv
    out_vals[i, 2] = vcnt[2] / nv
    out_vals[i, 3] = x
    out_vals[i, 4] = y
    out_vals[i, 5] = z
    out_vals[i, 6] = 27.0 * x * y * z


def run(
    cfg: ModelConfig,
    progress: Optional[Callable[[int, int], None]] = None,
    return_state: bool = False,
):
    """Run a configured simulation; deterministic given (cfg, cfg.seed).

    Returns the list of TrajectoryRecords (step 0, every record_interval
    steps, and the final step).  `progress(done, total)` is invoked about
    every 10^7 steps.  With `return_state=True` also returns the final
    EngineState (needed for graph export).
    """
    state = init_state(cfg)
    records = [state.record()]
    rint = cfg.record_interval
    rng = xs_init(U64(cfg.seed & ((1 << 64) - 1)))
    deg = np.array(state.degree_sums, dtype=np.int64)
    vcnt = np.array(state.vertex_counts, dtype=np.int64)
    if cfg.mode == "graph":
        n_end0 = len(state.endpoints)
        endpoints = np.empty(n_end0 + 2 * state.table.m * cfg.steps, dtype=np.int64)
        endpoints[:n_end0] = state.endpoints
        vtypes = np.empty(len(state.vertex_types) + cfg.steps, dtype=np.int64)
        vtypes[: len(state.vertex_types)] = state.vertex_types
        n_end = n_end0
        n_vert = len(state.vertex_types)
    probs = state.table.probs
    chunk = max(rint, PROGRESS_STEPS - PROGRESS_STEPS % rint)
    done = 0
    while done < cfg.steps:
        n_steps = min(chunk, cfg.steps - done)
        cap = n_steps // rint + 1
        out_steps = np.empty(cap, dtype=np.int64)
        out_vals = np.empty((cap, 7), dtype=np.float64)
        if cfg.mode == "graph":
            nrec = _graph_chunk(
                deg, vcnt, done, n_steps, state.table.m, probs, rng, rint,
                endpoints, n_end, vtypes, n_vert, out_steps, out_vals,
            )
            n_end += 2 * state.table.m * n_steps
            n_vert += n_steps
        else:
            nrec = _agg_chunk(
                deg, vcnt, done, n_steps, state.table.m, probs, rng, rint,
                out_steps, out_vals,
            )
        for i in range(nrec):
            records.append(_record_from_row(int(out_steps[i]), out_vals[i]))
        done += n_steps
        if progress is not None:
            progress(done, cfg.steps)
    state.degree_sums = [int(v) for v in deg]
    state.vertex_counts = [int(v) for v in vcnt]
    state.step = cfg.steps
    if cfg.mode == "graph":
        # kept as arrays; a 10^7-step run would not fit as a Python list
        state.endpoints = endpoints
        state.vertex_types = vtypes
    if cfg.steps > 0 and cfg.steps % rint != 0:
        records.append(state.record())
    if return_state:
        return records, state
    return records


def _record_from_row(step_index: int, vals: np.ndarray) -> TrajectoryRecord:
    return TrajectoryRecord(
        step=step_index,
        vertex_props=SimplexPoint(vals[0], vals[1], vals[2]),
        degree_props=SimplexPoint(vals[3], vals[4], vals[5]),
        product27=float(vals[6]),
    )


def run_ensemble(
    cfg: ModelConfig,
    runs: int,
    jobs: int = 1,
    progress: Optional[Callable[[int, int], None]] = None,
) -> list[tuple[int, TrajectoryRecord]]:
    """Independent runs with child seeds split from cfg.seed.

    Returns [(child_seed, final record)] ordered by run index regardless
    of completion order.  Workers are threads; the kernels drop the GIL.
    """
    if runs < 1:
        raise ConfigError("runs must be >= 1")
    seeds = child_seeds(cfg.seed, runs)
    results: list = [None] * runs

    def _one(i: int) -> None:
        records = run(replace(cfg, seed=seeds[i]))
        results[i] = (seeds[i], records[-1])
        if progress is not None:
            progress(i, runs)

    if jobs <= 1:
        for i in range(runs):
            _one(i)
    else:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            list(pool.map(_one, range(runs)))
    return results


def exact_drift(table: RuleTable, point: SimplexPoint | tuple) -> np.ndarray:
    """Mean-field drift of the degree proportions under this rule.

    One step adds, in expectation, m·x_i endpoint mass to type i from the
    neighbour side and m·q_i(x) from the new vertex, against total growth
    2m, so the normalised drift direction is (q_i(x) - x_i)/2 with
    q_i(x) = sum_u Multinomial(u; m, x) p_u(i).
    """
    x = np.asarray(tuple(point), dtype=np.float64)
    m = table.m
    q = np.zeros(3)
    for (u1, u2, u3), row in table.entries():
        coef = comb(m, u1) * comb(m - u1, u2)
        weight = coef * x[0] ** u1 * x[1] ** u2 * x[2] ** u3
        q += weight * row
    return (q - x) / 2.0
