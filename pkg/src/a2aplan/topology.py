"""Topology families and sequence generation.

Covers single topologies (cycle, circulant, generalized Kautz), the shift
sequences used for degree-1 endpoints, and contraction, which shortens hot
multi-hop rounds of an existing sequence by appending a topology that serves
those flows directly.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations
from math import gcd, ceil, log
from typing import Any, Callable

import numpy as np

from .core import NetworkParams, Topology, TopologySequence, TrafficMatrix

__all__ = [
    "UNREACH",
    "build_cycle",
    "build_circulant",
    "choose_circulant_offsets",
    "build_generalized_kautz",
    "build_shift_sequence",
    "choose_shifts",
    "shift_power_sums",
    "shift_class_hops",
    "circulant_offsets",
    "shortest_hops",
    "ExpansionProfile",
    "expansion_profile",
    "is_node_symmetric",
    "contract_sequence",
    "to_dot",
]

UNREACH = 1 << 30


def build_cycle(n: int) -> Topology:
    """Unidirectional ring: node i wired to i+1 (mod n)."""
    params = NetworkParams(n, 1)
    layer = tuple((i + 1) % n for i in range(n))
    return Topology(params, (layer,), family_tag="cycle", family_params={"offsets": [1]})


def build_circulant(n: int, k: int, offsets) -> Topology:
    """Layer j wires node i to i + offsets[j] (mod n)."""
    offs = tuple(int(s) for s in offsets)
    params = NetworkParams(n, k)
    if len(offs) != k:
        raise ValueError(f"need {k} offsets, got {len(offs)}")
    if len(set(offs)) != len(offs):
        raise ValueError(f"offsets must be distinct, got {offs}")
    for s in offs:
        if not 1 <= s <= n - 1:
            raise ValueError(f"offset {s} outside 1..{n - 1}")
    layers = tuple(tuple((i + s) % n for i in range(n)) for s in offs)
    return Topology(params, layers, family_tag="circulant", family_params={"offsets": list(offs)})


def circulant_offsets(P: Topology) -> tuple[int, ...] | None:
    """Per-layer offsets when every layer is a rotation, else None."""
    n = P.params.n
    offs = []
    for layer in P.layers:
        s = layer[0] % n
        if any(layer[i] != (i + s) % n for i in range(n)):
            return None
        offs.append(s)
    return tuple(offs)


# --- shift sequences (k=1) --------------------------------------------------


def shift_class_hops(n: int, s: int) -> np.ndarray:
    """Hops needed to cover each distance class 1..n-1 on the shift-s rotation.

    Class t takes the least m >= 1 with m*s = t (mod n); UNREACH if no such m.
    """
    h = np.full(n, UNREACH, dtype=np.int64)
    m = np.arange(1, n, dtype=np.int64)
    np.minimum.at(h, (m * s) % n, m)
    return h[1:]


@dataclass
class _ShiftState:
    """Greedy chooser state, kept so longer prefixes extend prior work."""

    n: int
    shifts: list[int]
    sums: list[int]
    minh: np.ndarray
    rem: list[int]
    H_rem: np.ndarray | None
    saturated: bool = False


_shift_states: dict[int, _ShiftState] = {}


def _shift_state(n: int) -> _ShiftState:
    st = _shift_states.get(n)
    if st is None:
        minh = shift_class_hops(n, 1).astype(np.int32)  # class t at t hops
        shifts, sums = [1], [int(minh.sum())]
        if n >= 3:
            minh = np.minimum(minh, shift_class_hops(n, n - 1).astype(np.int32))
            shifts.append(n - 1)
            sums.append(int(minh.sum()))
        used = set(shifts)
        cop = [s for s in range(2, n - 1) if s not in used and gcd(s, n) == 1]
        rest = [s for s in range(2, n - 1) if s not in used and gcd(s, n) != 1]
        rem = cop + rest
        st = _ShiftState(n, shifts, sums, minh, rem, None)
        _shift_states[n] = st
    return st


def _extend_shifts(st: _ShiftState, d: int) -> None:
    n = st.n
    while len(st.shifts) < min(d, n - 1) and st.rem:
        if st.saturated or int(st.minh.max()) == 1:
            # every class already direct somewhere; remaining picks are ties
            st.saturated = True
            s = st.rem.pop(0)
            st.shifts.append(s)
            st.sums.append(n - 1)
            st.H_rem = None
            continue
        if st.H_rem is None or st.H_rem.shape[0] != len(st.rem):
            st.H_rem = np.stack([shift_class_hops(n, s) for s in st.rem]).astype(np.int32)
        cand_sums = np.minimum(st.H_rem, st.minh[None, :]).sum(axis=1)
        i = int(np.argmin(cand_sums))  # first argmin wins; rem is ordered
        s = st.rem.pop(i)
        st.minh = np.minimum(st.minh, st.H_rem[i])
        st.H_rem = np.delete(st.H_rem, i, axis=0)
        st.shifts.append(s)
        st.sums.append(int(st.minh.sum()))
    if not st.rem:
        st.H_rem = None


def choose_shifts(n: int, d: int) -> tuple[int, ...]:
    """Shift amounts for a d-stage rotation sequence on n endpoints.

    The first shift is always 1 (the cycle) and the second is n-1; later
    shifts greedily minimize the summed per-class hop minimum, breaking ties
    toward shifts coprime with n, then by value.  The choice is prefix
    consistent: longer sequences extend shorter ones.
    """
    if not 1 <= d <= n - 1:
        raise ValueError(f"stage count d={d} outside 1..{n - 1}")
    st = _shift_state(n)
    _extend_shifts(st, d)
    return tuple(st.shifts[:d])


def shift_power_sums(n: int, d: int) -> tuple[int, ...]:
    """Transmission power sums (in chunk-times) of the shift-sequence prefixes 1..d."""
    if not 1 <= d <= n - 1:
        raise ValueError(f"stage count d={d} outside 1..{n - 1}")
    st = _shift_state(n)
    _extend_shifts(st, d)
    return tuple(st.sums[:d])


def build_shift_sequence(n: int, d: int) -> TopologySequence:
    """Degree-1 sequence: the cycle followed by d-1 further rotations."""
    shifts = choose_shifts(n, d)
    topos = [build_cycle(n)]
    for s in shifts[1:]:
        topos.append(build_circulant(n, 1, (s,)))
    trace = {"family": "shift", "shifts": list(shifts), "powerSums": list(shift_power_sums(n, d))}
    return TopologySequence(topos, trace)


# --- circulant offset selection --------------------------------------------


def choose_circulant_offsets(n: int, k: int) -> tuple[int, ...]:
    """Offset set (always containing 1) minimizing scheduled transmission cost.

    Small instances are searched exhaustively over all k-subsets containing
    offset 1; larger ones start from a geometric ladder and local-search by
    single-offset swaps.  Cost of a candidate is the summed per-round maximum
    hop count of the symmetric schedule, ties broken toward the
    lexicographically smallest offset tuple.
    """
    NetworkParams(n, k)
    if k == 1:
        return (1,)
    from .schedule import symmetric_template_cost

    def cost(offs: tuple[int, ...]) -> int:
        return symmetric_template_cost(n, offs)

    exhaustive = n <= 64 and _n_subsets(n - 2, k - 1) <= 40000
    if exhaustive:
        best: tuple[int, ...] | None = None
        best_cost = None
        for extra in combinations(range(2, n), k - 1):
            offs = (1,) + extra
            c = cost(offs)
            if best_cost is None or c < best_cost or (c == best_cost and offs < best):
                best, best_cost = offs, c
        assert best is not None
        return best
    # geometric ladder seed, then greedy single-offset swaps
    seed = {1}
    for j in range(1, k):
        s = int(ceil(n ** (j / k)))
        while s in seed or s >= n:
            s += 1
        seed.add(s)
    cur = tuple(sorted(seed))
    cur_cost = cost(cur)
    improved = True
    while improved:
        improved = False
        for i in range(1, k):  # keep offset 1 fixed
            for s in range(2, n):
                if s in cur:
                    continue
                cand = tuple(sorted(cur[:i] + (s,) + cur[i + 1:]))
                c = cost(cand)
                if c < cur_cost or (c == cur_cost and cand < cur):
                    cur, cur_cost = cand, c
                    improved = True
    return cur


def _n_subsets(n: int, k: int) -> int:
    out = 1
    for i in range(k):
        out = out * (n - i) // (i + 1)
    return out


# --- generalized Kautz ------------------------------------------------------


def build_generalized_kautz(n: int, k: int) -> Topology:
    """Degree-k expander on n nodes: u's successors are -k*u - j (mod n), j=1..k.

    Self-loops produced by the formula are repaired pairwise (two loop nodes
    swap targets); a leftover loop is resolved by splicing into a non-loop
    edge.  The edge multiset is then decomposed into k permutation layers.
    """
    params = NetworkParams(n, k)
    succ = [[(-k * u - j) % n for j in range(1, k + 1)] for u in range(n)]
    loops = [(u, j) for u in range(n) for j in range(k) if succ[u][j] == u]
    for (u, ju), (v, jv) in zip(loops[0::2], loops[1::2]):
        succ[u][ju] = v
        succ[v][jv] = u
    if len(loops) % 2 == 1:
        u, ju = loops[-1]
        a, jb = _splice_partner(succ, u)
        b = succ[a][jb]
        succ[u][ju] = b
        succ[a][jb] = u
    edges = [(u, v) for u in range(n) for v in succ[u]]
    layers = _decompose_layers(n, k, edges)
    topo = Topology(params, layers, family_tag="genkautz", family_params={"k": k})
    hops = shortest_hops(topo)
    if int(hops.max()) >= UNREACH:
        raise ValueError(f"generalized Kautz graph n={n} k={k} is not strongly connected")
    return topo


def _splice_partner(succ: list[list[int]], u: int) -> tuple[int, int]:
    n, k = len(succ), len(succ[0])
    fallback = None
    for a in range(n):
        if a == u:
            continue
        for j in range(k):
            b = succ[a][j]
            if b == u or b == a:
                continue
            if fallback is None:
                fallback = (a, j)
            if b not in succ[u] and u not in succ[a]:
                return a, j  # avoids creating parallel edges
    if fallback is None:
        raise ValueError("no edge available to absorb a self-loop")
    return fallback


def _decompose_layers(n: int, k: int, edges: list[tuple[int, int]]) -> tuple[tuple[int, ...], ...]:
    """Split a k-regular self-loop-free edge multiset into k permutations."""
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import maximum_bipartite_matching

    remaining = Counter(edges)
    layers = []
    for _ in range(k):
        keys = sorted(remaining.keys())
        rows = [u for u, _ in keys]
        cols = [v for _, v in keys]
        m = csr_matrix((np.ones(len(keys)), (rows, cols)), shape=(n, n))
        perm = maximum_bipartite_matching(m, perm_type="column")
        if np.any(perm < 0):
            raise ValueError("edge multiset is not decomposable into permutations")
        layer = tuple(int(v) for v in perm)
        for u, v in enumerate(layer):
            remaining[(u, v)] -= 1
            if remaining[(u, v)] == 0:
                del remaining[(u, v)]
        layers.append(layer)
    if remaining:
        raise ValueError("layer decomposition left edges behind")
    return tuple(layers)


# --- structure probes -------------------------------------------------------


def shortest_hops(P: Topology) -> np.ndarray:
    """All-pairs hop counts by BFS over the layer union (UNREACH if cut off)."""
    n = P.params.n
    adj = [sorted({layer[i] for layer in P.layers}) for i in range(n)]
    out = np.full((n, n), UNREACH, dtype=np.int64)
    for s in range(n):
        out[s, s] = 0
        frontier = [s]
        dist = 0
        row = out[s]
        while frontier:
            dist += 1
            nxt = []
            for u in frontier:
                for v in adj[u]:
                    if row[v] >= UNREACH:
                        row[v] = dist
                        nxt.append(v)
            frontier = nxt
    return out


@dataclass(frozen=True)
class ExpansionProfile:
    """Cumulative reachable-peer counts per radius, for each node."""

    per_node: tuple[tuple[int, ...], ...]
    diameter: int | None  # None when some pair is unreachable

    @property
    def strongly_connected(self) -> bool:
        return self.diameter is not None


def expansion_profile(P: Topology) -> ExpansionProfile:
    n = P.params.n
    hops = shortest_hops(P)
    reachable = hops < UNREACH
    connected = bool(reachable.all())
    diam = int(hops.max()) if connected else int(hops[reachable].max())
    per_node = tuple(
        tuple(int(np.count_nonzero((hops[s] >= 1) & (hops[s] <= r))) for r in range(1, diam + 1))
        for s in range(n)
    )
    return ExpansionProfile(per_node, diam if connected else None)


def kautz_diameter_bound(n: int, k: int) -> int:
    """Reference bound for the generalized Kautz family: ceil(log_k n) + 1."""
    return int(ceil(log(n) / log(k))) + 1 if k >= 2 else n - 1


def is_node_symmetric(P: Topology) -> bool:
    """Whether rotating every node by +1 maps the edge multiset onto itself."""
    n = P.params.n
    edges = Counter()
    for layer in P.layers:
        for i, t in enumerate(layer):
            edges[(i, t)] += 1
    rotated = Counter({((u + 1) % n, (v + 1) % n): c for (u, v), c in edges.items()})
    return edges == rotated


# --- contraction ------------------------------------------------------------


def contract_sequence(
    base: Topology,
    d: int,
    scheduler: Callable | None = None,
) -> TopologySequence:
    """Grow a d-stage sequence from one topology by repeatedly contracting the
    round with the largest total hop count into a direct-serving topology.

    Construction is structural: it works on the canonical unit all-to-all
    demand, and later stages only ever shorten flows.  When every round is
    already single-hop the sequence stops early and the trace says so.
    """
    from . import schedule as _sched

    n, k = base.params.n, base.params.k
    if not 1 <= d <= n - 1:
        raise ValueError(f"stage count d={d} outside 1..{n - 1}")
    unit = TrafficMatrix.uniform(n, 1)
    topos = [base]
    steps: list[dict[str, Any]] = []
    exhausted = False
    while len(topos) < d:
        strat = _sched.cross_topology_assign(TopologySequence(list(topos)), unit, scheduler=scheduler)
        pick = _pick_contraction_round(strat)
        if pick is None:
            exhausted = True
            break
        si, ri, rnd = pick
        pairs = sorted(
            {(f.src, f.dst) for f, p in rnd.entries if p.length >= 2}
        )
        all_circulant = all(circulant_offsets(t) is not None for t in topos)
        if all_circulant:
            new = _contract_circulant(topos, pairs, n, k)
        else:
            new = _contract_general(topos, pairs, n, k)
        steps.append({"stage": si, "round": ri, "pairs": len(pairs), "family": new.family_tag})
        topos.append(new)
    trace = {"family": "contracted", "base": base.family_tag, "steps": steps}
    if exhausted:
        trace["exhausted"] = True
    return TopologySequence(topos, trace)


def _pick_contraction_round(strat) -> tuple[int, int, Any] | None:
    best = None
    for si, stage in enumerate(strat.stages):
        for ri, rnd in enumerate(stage.schedule.rounds):
            if rnd.max_hop < 2:
                continue
            total = sum(p.length for _, p in rnd.entries)
            key = (-total, si, ri)
            if best is None or key < best[0]:
                best = (key, si, ri, rnd)
    if best is None:
        return None
    return best[1], best[2], best[3]


def _contract_circulant(topos: list[Topology], pairs, n: int, k: int) -> Topology:
    classes = sorted({(v - u) % n for u, v in pairs})
    if len(classes) > k:
        raise ValueError("contracted round exceeds port capacity")
    if len(classes) < k:
        # fill spare ports with the farthest still-indirect classes
        best = np.full(n, UNREACH, dtype=np.int64)
        for t in topos:
            offs = circulant_offsets(t)
            ch = _circulant_class_hops(n, offs)
            best[1:] = np.minimum(best[1:], ch)
        order = sorted(
            (c for c in range(1, n) if c not in classes),
            key=lambda c: (-min(int(best[c]), UNREACH), c),
        )
        for c in order:
            classes.append(c)
            if len(classes) == k:
                break
    return Topology(
        NetworkParams(n, k),
        tuple(tuple((i + s) % n for i in range(n)) for s in sorted(classes)),
        family_tag="contracted",
        family_params={"offsets": sorted(classes)},
    )


def _circulant_class_hops(n: int, offsets) -> np.ndarray:
    """Least hops to each distance class 1..n-1 over the given offsets (BFS)."""
    dist = np.full(n, UNREACH, dtype=np.int64)
    dist[0] = 0
    frontier = [0]
    h = 0
    while frontier:
        h += 1
        nxt = []
        for r in frontier:
            for s in offsets:
                t = (r + s) % n
                if dist[t] >= UNREACH:
                    dist[t] = h
                    nxt.append(t)
        frontier = nxt
    return dist[1:]


def _contract_general(topos: list[Topology], pairs, n: int, k: int) -> Topology:
    best = np.minimum.reduce([shortest_hops(t) for t in topos])
    outd = Counter()
    ind = Counter()
    kept: list[tuple[int, int]] = []
    for u, v in sorted(pairs, key=lambda p: (-int(best[p[0], p[1]]), p)):
        if outd[u] < k and ind[v] < k:
            kept.append((u, v))
            outd[u] += 1
            ind[v] += 1
    edges = list(kept)
    edge_set = Counter(edges)
    # top up to a k-regular multiset, farthest still-slow pairs first
    out_def = [u for u in range(n) for _ in range(k - outd[u])]
    in_def = [v for v in range(n) for _ in range(k - ind[v])]
    cand = sorted(
        {(u, v) for u in set(out_def) for v in set(in_def) if u != v},
        key=lambda p: (-min(int(best[p[0], p[1]]), UNREACH), p),
    )
    out_need = Counter(out_def)
    in_need = Counter(in_def)
    for u, v in cand:
        while out_need[u] > 0 and in_need[v] > 0 and edge_set[(u, v)] == 0:
            edges.append((u, v))
            edge_set[(u, v)] += 1
            out_need[u] -= 1
            in_need[v] -= 1
    _finish_fill(edges, edge_set, out_need, in_need, n)
    layers = _decompose_layers(n, k, edges)
    return Topology(
        NetworkParams(n, k),
        layers,
        family_tag="contracted",
        family_params={"pairs": [[u, v] for u, v in kept]},
    )


def _finish_fill(edges, edge_set, out_need, in_need, n: int) -> None:
    """Resolve leftover port deficits, allowing parallels but never self-loops."""
    outs = sorted(u for u in out_need for _ in range(out_need[u]))
    ins = sorted(v for v in in_need for _ in range(in_need[v]))
    for u in outs:
        v = next((v for v in ins if v != u and edge_set[(u, v)] == 0), None)
        if v is None:
            v = next((v for v in ins if v != u), None)
        if v is None:
            # only u -> u remains; splice into an existing fill edge
            a, b = next((e for e in edges if u not in e), None) or (None, None)
            if a is None:
                raise ValueError("cannot complete topology without a self-link")
            edges.remove((a, b))
            edge_set[(a, b)] -= 1
            for e in ((a, u), (u, b)):
                edges.append(e)
                edge_set[e] += 1
            continue
        ins.remove(v)
        edges.append((u, v))
        edge_set[(u, v)] += 1


def to_dot(P: Topology) -> str:
    """GraphViz rendering; edge labels give the layer index."""
    lines = [f'digraph "{P.family_tag}" {{', "  rankdir=LR;"]
    for j, layer in enumerate(P.layers):
        for i, t in enumerate(layer):
            lines.append(f'  {i} -> {t} [label="{j}"];')
    lines.append("}")
    return "\n".join(lines)
