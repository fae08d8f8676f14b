"""Reference strategies to compare against: a static topology, per-class
direct circuits, and a greedy Birkhoff-von-Neumann style decomposition."""
from __future__ import annotations

import numpy as np

from .core import (
    Flow,
    NetworkParams,
    Path,
    Round,
    Schedule,
    Stage,
    Strategy,
    Topology,
    as_traffic_array,
)
from .schedule import cross_topology_assign
from .topology import (
    build_circulant,
    build_cycle,
    build_generalized_kautz,
    choose_circulant_offsets,
)
from .core import TopologySequence

__all__ = [
    "STATIC_FAMILIES",
    "static_shortest_path",
    "direct_circuits",
    "greedy_bvn",
    "greedy_bvn_strategy",
]

STATIC_FAMILIES = ("cycle", "circulant", "genkautz")


def static_shortest_path(params: NetworkParams, A, family: str = "cycle") -> Strategy:
    """Never reconfigure: one topology of the given family, shortest-path
    schedule.  With k=1 every family degenerates to the ring."""
    n, k = params.n, params.k
    if family not in STATIC_FAMILIES:
        raise ValueError(f"unknown static family {family!r}")
    if family == "cycle" or k == 1:
        topo = build_cycle(n) if k == 1 else build_circulant(n, k, tuple(range(1, k + 1)))
    elif family == "circulant":
        topo = build_circulant(n, k, choose_circulant_offsets(n, k))
    else:
        topo = build_generalized_kautz(n, k)
    strat = cross_topology_assign(TopologySequence([topo], {"family": "static"}), A)
    strat.provenance["baseline"] = f"static:{family}"
    return strat


def direct_circuits(params: NetworkParams, A) -> Strategy:
    """Serve every distance class over a direct circuit: ceil((n-1)/k)
    topologies, each giving k classes a one-hop round."""
    n, k = params.n, params.k
    arr = as_traffic_array(A)
    if arr.shape[0] != n:
        raise ValueError("traffic and params disagree on node count")
    m = -(-(n - 1) // k)
    idx = np.arange(n)
    stages: list[Stage] = []
    for r in range(m):
        real = [r * k + j + 1 for j in range(k) if r * k + j + 1 <= n - 1]
        offsets = list(real)
        fill = 1
        while len(offsets) < k:  # last topology may need repeated-coverage filler ports
            if fill not in offsets:
                offsets.append(fill)
            fill += 1
        topo = build_circulant(n, k, tuple(offsets))
        entries = []
        for j, o in enumerate(real):
            col = arr[idx, (idx + o) % n]
            for i in np.nonzero(col)[0]:
                i = int(i)
                dst = (i + o) % n
                entries.append((Flow(i, dst, int(col[i])), Path(((i, dst, j),))))
        if not entries:
            continue
        stages.append(Stage(topo, Schedule([Round(entries)])))
    if not stages:
        raise ValueError("no demand to serve")
    return Strategy(stages, {"baseline": "directCircuits"})


def greedy_bvn(A) -> list[tuple[tuple[int, ...], int]]:
    """Greedy decomposition of the demand into (permutation, weight) terms.

    Each term is a maximum-cardinality matching on the support of the
    residual, weighted by the smallest matched entry; repeats until the
    residual is zero.  Permutations are full and fixed-point free; positions
    not carrying demand are completed deterministically.
    """
    arr = as_traffic_array(A).copy()
    n = arr.shape[0]
    terms: list[tuple[tuple[int, ...], int]] = []
    while arr.any():
        matched = _max_support_matching(arr)
        if not matched:
            raise RuntimeError("nonzero residual with empty matching")
        perm = _complete_permutation(matched, n)
        # completion may have released pairs; only subtract what the
        # permutation actually carries, the rest stays for later terms
        kept = [(s, d) for s, d in matched if perm[s] == d]
        if not kept:
            raise RuntimeError("permutation completion dropped every matched pair")
        w = min(int(arr[s, d]) for s, d in kept)
        for s, d in kept:
            arr[s, d] -= w
        terms.append((perm, w))
    return terms


def _max_support_matching(arr: np.ndarray) -> list[tuple[int, int]]:
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import maximum_bipartite_matching

    rows, cols = np.nonzero(arr)
    m = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=arr.shape)
    match = maximum_bipartite_matching(m, perm_type="column")
    return [(int(u), int(v)) for u, v in enumerate(match) if v >= 0]


def _complete_permutation(matched: list[tuple[int, int]], n: int) -> tuple[int, ...]:
    """Extend a partial matching to a fixed-point-free permutation.

    Leftover sources map onto leftover targets by the rotation avoiding fixed
    points; if the only leftover pairing would be a self-loop, the
    lexicographically last matched pair is released to make room (its demand
    stays in the residual for a later term).
    """
    matched = sorted(matched)
    while True:
        fwd = dict(matched)
        left = sorted(set(range(n)) - set(fwd))
        right = sorted(set(range(n)) - set(fwd.values()))
        if not left:
            return tuple(fwd[u] for u in range(n))
        shift = next(
            (s for s in range(len(left)) if all(left[i] != right[(i + s) % len(left)] for i in range(len(left)))),
            None,
        )
        if shift is None:
            matched = matched[:-1]  # forced self-loop; release one pair
            continue
        for i, u in enumerate(left):
            fwd[u] = right[(i + shift) % len(left)]
        return tuple(fwd[u] for u in range(n))


def greedy_bvn_strategy(params: NetworkParams, A) -> Strategy:
    """Strategy form of greedy_bvn: terms become topology layers (k terms per
    stage), each term contributing one round of weighted one-hop flows."""
    n, k = params.n, params.k
    arr = as_traffic_array(A)
    terms = greedy_bvn(arr)
    residual = arr.copy()
    stages: list[Stage] = []
    for base in range(0, len(terms), k):
        group = terms[base : base + k]
        layers = [perm for perm, _ in group]
        while len(layers) < k:
            layers.append(_spare_layer(layers, n))
        topo = Topology(
            NetworkParams(n, k),
            tuple(layers),
            family_tag="custom",
            family_params={"baseline": "greedyBvN", "terms": len(group)},
        )
        rounds = []
        for j, (perm, w) in enumerate(group):
            entries = []
            for s in range(n):
                d = perm[s]
                take = min(w, int(residual[s, d]))
                if take > 0:
                    residual[s, d] -= take
                    entries.append((Flow(s, d, take), Path(((s, d, j),))))
            if entries:
                rounds.append(Round(entries))
        if rounds:
            stages.append(Stage(topo, Schedule(rounds)))
    if residual.any():
        raise RuntimeError("greedy decomposition left demand unserved")
    if not stages:
        raise ValueError("no demand to serve")
    return Strategy(stages, {"baseline": "greedyBvN"})


def _spare_layer(layers: list[tuple[int, ...]], n: int) -> tuple[int, ...]:
    del layers  # any fixed-point-free permutation will do; ports stay idle
    return tuple((i + 1) % n for i in range(n))
