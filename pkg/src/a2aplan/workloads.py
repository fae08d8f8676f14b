"""Synthetic traffic generation: uniform, random, and rank-skewed demand."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import TrafficMatrix

__all__ = ["WorkloadSpec", "gen_traffic"]

KINDS = ("uniform", "random", "zipf")


@dataclass(frozen=True)
class WorkloadSpec:
    n: int
    kind: str = "uniform"
    mean_chunks: int = 1
    seed: int = 0
    zipf_exponent: float = 0.4

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown workload kind {self.kind!r}, expected one of {KINDS}")
        if self.n < 2:
            raise ValueError("need n >= 2")
        if self.mean_chunks < 1:
            raise ValueError("mean_chunks must be >= 1")
        if self.kind == "zipf" and self.zipf_exponent <= 0:
            raise ValueError("zipf_exponent must be positive for zipf workloads")


def gen_traffic(spec: WorkloadSpec) -> TrafficMatrix:
    """Build a demand matrix.

    uniform: every pair sends mean_chunks.
    random:  i.i.d. integer sizes on [1, 2*mean_chunks - 1] (mean preserved).
    zipf:    pair sizes follow rank^(-zipf_exponent) with ranks assigned in a
             seeded random order, rescaled to the requested mean, floored at 1.
    """
    n = spec.n
    rng = np.random.default_rng(spec.seed)
    if spec.kind == "uniform":
        a = np.full((n, n), spec.mean_chunks, dtype=np.int64)
    elif spec.kind == "random":
        a = rng.integers(1, 2 * spec.mean_chunks, size=(n, n), endpoint=False, dtype=np.int64) \
            if spec.mean_chunks > 1 else np.ones((n, n), dtype=np.int64)
    else:  # zipf
        pairs = n * (n - 1)
        ranks = rng.permutation(pairs) + 1
        w = ranks.astype(np.float64) ** (-spec.zipf_exponent)
        sizes = np.maximum(1, np.rint(w * (spec.mean_chunks * pairs / w.sum()))).astype(np.int64)
        a = np.zeros((n, n), dtype=np.int64)
        off = [(s, d) for s in range(n) for d in range(n) if s != d]
        for (s, d), c in zip(off, sizes):
            a[s, d] = c
    np.fill_diagonal(a, 0)
    return TrafficMatrix(a)
