"""Costing and verification.

Time is measured in chunk-times internally (one chunk-time T = alpha +
beta * chunk_bytes) and converted to seconds once, so the abstract cost and
the simulator agree bit for bit.  A whole strategy costs

    d * reconfig_delay + (sum of round durations) * T

where an all-unit round lasts its maximum hop count and a round with
multi-chunk flows lasts max(hops + size - 1) over its entries.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np

from .core import CostModel, Round, Strategy, as_traffic_array
from .schedule import check_contention_free
from .topology import shift_power_sums

__all__ = [
    "CostBreakdown",
    "round_units",
    "round_duration",
    "power_sum",
    "strategy_cost",
    "assemble_total",
    "lower_bound_hop_term",
    "lower_bound",
    "search_space_size",
    "Decomposition",
    "DecompositionTerm",
    "verify_decomposition",
    "lower_bound_gap_rows",
]


def round_units(r: Round) -> int:
    """Duration of one round in chunk-times."""
    if not r.entries:
        return 0
    if r.unit_chunks:
        return r.max_hop
    return max(p.length + f.size_chunks - 1 for f, p in r.entries)


def round_duration(r: Round, cm: CostModel) -> float:
    return round_units(r) * cm.T


def power_sum(S: Strategy) -> int:
    """Total transmission units of a strategy (sum of round durations in T)."""
    return sum(round_units(r) for stage in S.stages for r in stage.schedule.rounds)


def assemble_total(units: int, d: int, cm: CostModel) -> tuple[float, float, float]:
    """Single place where units and stages become seconds; the simulator uses
    the same expression so equal inputs give bit-identical totals."""
    transmit = units * cm.T
    reconfig = d * cm.reconfig_delay
    return transmit, reconfig, transmit + reconfig


@dataclass(frozen=True)
class CostBreakdown:
    d: int
    power_sum: int
    reconfig_seconds: float
    transmit_seconds: float
    total_seconds: float


def strategy_cost(S: Strategy, cm: CostModel) -> CostBreakdown:
    units = power_sum(S)
    d = S.d
    transmit, reconfig, total = assemble_total(units, d, cm)
    return CostBreakdown(d, units, reconfig, transmit, total)


# --- lower bound ------------------------------------------------------------


def lower_bound_hop_term(n: int, d: int) -> int:
    """Least total transmission units any d-stage degree-1 strategy can reach.

    With q = (n-1) // d and u = (n-1) mod d, the n-1 distance classes are
    best served q or q+1 per stage at hop counts 1..q(+1), giving
    d*q*(q+1)/2 + u*(q+1).
    """
    if n < 2:
        raise ValueError("need n >= 2")
    if not 1 <= d <= n - 1:
        raise ValueError(f"d={d} outside 1..{n - 1}")
    q, u = divmod(n - 1, d)
    return d * q * (q + 1) // 2 + u * (q + 1)


def lower_bound(n: int, d: int, R: float, T: float, k: int = 1) -> float:
    """Completion-time floor d*R + hopTerm*T.  Only degree-1 endpoints are
    covered; other k are rejected rather than given an unsound number."""
    if k != 1:
        raise ValueError("lower bound only applies to degree-1 endpoints (k=1)")
    if R < 0 or T <= 0:
        raise ValueError("need R >= 0 and T > 0")
    return d * R + lower_bound_hop_term(n, d) * T


def lower_bound_gap_rows(n: int, d_values=None) -> list[dict]:
    """Per-d comparison of generated shift-sequence cost against the bound."""
    if d_values is None:
        d_values = range(1, n)
    d_values = sorted(set(int(d) for d in d_values))
    d_max = max(d_values)
    sums = shift_power_sums(n, d_max)
    rows = []
    for d in d_values:
        ps = sums[d - 1]
        lb = lower_bound_hop_term(n, d)
        rows.append({"n": n, "d": d, "powerSum": ps, "hopTerm": lb, "ratio": ps / lb})
    return rows


# --- search space -----------------------------------------------------------


def search_space_size(n: int) -> int:
    """Exact count of distinct (topology sequence, flow-assignment) plans:
    sum over d of (n!)^d * d^(n*(n-1))."""
    if n < 2:
        raise ValueError("need n >= 2")
    f = factorial(n)
    pairs = n * (n - 1)
    return sum(f**d * d**pairs for d in range(1, n))


# --- decomposition verification ---------------------------------------------


@dataclass(frozen=True)
class DecompositionTerm:
    stage: int
    round_index: int
    hops: int
    mask: np.ndarray  # chunks served at this (stage, round, hop count)


@dataclass(frozen=True)
class Decomposition:
    ok: bool
    terms: tuple[DecompositionTerm, ...]
    failure: str | None = None


def verify_decomposition(S: Strategy, A) -> tuple[bool, Decomposition]:
    """Check that a strategy exactly serves the demand, term by term.

    Terms group each round's flows by hop count; their masks must sum to the
    demand matrix, every path must be wired on its stage topology, and every
    round must be contention-free.  On failure the first violated term (or
    the first mismatched pair) is named.
    """
    arr = as_traffic_array(A)
    n = arr.shape[0]
    if S.params.n != n:
        raise ValueError("strategy and demand disagree on node count")
    report = check_contention_free(S)
    terms: list[DecompositionTerm] = []
    for si, stage in enumerate(S.stages):
        for ri, rnd in enumerate(stage.schedule.rounds):
            by_h: dict[int, np.ndarray] = {}
            for f, p in rnd.entries:
                m = by_h.setdefault(p.length, np.zeros((n, n), dtype=np.int64))
                m[f.src, f.dst] += f.size_chunks
            for h in sorted(by_h):
                terms.append(DecompositionTerm(si, ri, h, by_h[h]))
    if not report.ok:
        return False, Decomposition(False, tuple(terms), failure=report.violations[0])
    served = np.zeros((n, n), dtype=np.int64)
    for t in terms:
        served += t.mask
    if not np.array_equal(served, arr):
        diff = np.argwhere(served != arr)
        s, d = (int(x) for x in diff[0])
        failure = f"pair {s}->{d}: served {int(served[s, d])} chunks, demand {int(arr[s, d])}"
        bad = next(
            (t for t in terms if t.mask[s, d] > 0),
            terms[0] if terms else None,
        )
        if bad is not None:
            failure += f" (first touching term: stage {bad.stage} round {bad.round_index} h={bad.hops})"
        return False, Decomposition(False, tuple(terms), failure=failure)
    return True, Decomposition(True, tuple(terms))
