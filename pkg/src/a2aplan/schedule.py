"""Contention-free flow scheduling on single topologies and topology sequences.

Two per-topology schedulers exist: a rotation-symmetric one that schedules a
reference node and replicates by rotation, and a general one for expander-like
topologies that packs explicit shortest paths.  Cross-topology assignment
splits demand across the stages of a sequence; chunk-aware extraction and
node relabeling adapt a unit-demand template to real flow sizes.

Contention rules, which the simulator enforces hop by hop:
  - in an all-unit round two entries may not use the same link at the same
    hop index (links free up as the wavefront advances);
  - in a round with any multi-chunk entry, entries must be fully
    link-disjoint so that pipelined chunks never queue.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from .core import (
    Flow,
    Path,
    Round,
    Schedule,
    Stage,
    Strategy,
    Topology,
    TopologySequence,
    as_traffic_array,
)
from .topology import (
    UNREACH,
    _circulant_class_hops,
    circulant_offsets,
    shortest_hops,
)

PATHS_PER_CLASS_CAP = 64
PATHS_PER_PAIR_CAP = 16


# --- symmetric scheduling ---------------------------------------------------


def _shortest_layer_paths(n: int, offsets: Sequence[int], classes: Iterable[int], cap: int = PATHS_PER_CLASS_CAP):
    """All shortest layer sequences from the reference node to each class.

    Relies on shortest paths being layered: every prefix of a shortest path is
    itself shortest, so enumeration can prune by forward and backward BFS
    levels.  Returns (paths_by_class, dist) with paths in lexicographic layer
    order, at most cap per class.
    """
    k = len(offsets)
    dist = _bfs_residues(n, offsets)
    rev_offsets = [(-s) % n for s in offsets]
    out: dict[int, list[tuple[int, ...]]] = {}
    for t in sorted(set(classes)):
        if dist[t] >= UNREACH:
            raise ValueError(f"distance class {t} unreachable over offsets {tuple(offsets)}")
        back = _bfs_residues(n, rev_offsets, start=t)
        acc: list[int] = []
        found: list[tuple[int, ...]] = []

        def walk(r: int) -> None:
            if len(found) >= cap:
                return
            depth = len(acc)
            if r == t and depth == dist[t]:
                found.append(tuple(acc))
                return
            for l in range(k):
                nr = (r + offsets[l]) % n
                if dist[nr] == depth + 1 and back[nr] == dist[t] - depth - 1:
                    acc.append(l)
                    walk(nr)
                    acc.pop()

        walk(0)
        out[t] = found
    return out, dist


def _bfs_residues(n: int, offsets: Sequence[int], start: int = 0) -> list[int]:
    dist = [UNREACH] * n
    dist[start] = 0
    frontier = [start]
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
    return dist


def symmetric_template(n: int, offsets: Sequence[int], classes: Iterable[int] | None = None):
    """Reference-node round structure for a circulant: rounds of
    (distance class, layer sequence), packed first-fit shortest first.

    A class may sit in an earlier round via any of its shortest layer
    sequences; layer use must be disjoint at every hop index, which caps a
    round at k classes since every path occupies hop 0.
    """
    cls = sorted(set(classes)) if classes is not None else list(range(1, n))
    paths, dist = _shortest_layer_paths(n, offsets, cls)
    rounds: list[dict[str, Any]] = []
    for t in sorted(cls, key=lambda t: (dist[t], t)):
        placed = False
        for rnd in rounds:
            for lseq in paths[t]:
                if all((i, l) not in rnd["slots"] for i, l in enumerate(lseq)):
                    rnd["members"].append((t, lseq))
                    rnd["slots"].update((i, l) for i, l in enumerate(lseq))
                    placed = True
                    break
            if placed:
                break
        if not placed:
            lseq = paths[t][0]
            rounds.append({"members": [(t, lseq)], "slots": {(i, l) for i, l in enumerate(lseq)}})
    return [r["members"] for r in rounds]


def symmetric_template_cost(n: int, offsets: Sequence[int]) -> int:
    """Summed per-round maximum hop count over the full class template."""
    template = symmetric_template(n, offsets)
    return sum(max(len(lseq) for _, lseq in rnd) for rnd in template)


def schedule_symmetric(P: Topology, A) -> Schedule:
    """Schedule demand on a rotation-structured topology by scheduling the
    reference node and rotating.  Multi-chunk flows are extracted afterwards
    into fully link-disjoint rounds."""
    offs = circulant_offsets(P)
    if offs is None:
        raise ValueError("symmetric scheduler needs rotation-structured layers")
    n = P.params.n
    arr = _demand_for(P, A)
    idx = np.arange(n)
    present = [t for t in range(1, n) if arr[idx, (idx + t) % n].any()]
    template = symmetric_template(n, offs, present)
    rounds: list[list[tuple[Flow, Path]]] = []
    for members in template:
        entries: list[tuple[Flow, Path]] = []
        for t, lseq in members:
            col = arr[idx, (idx + t) % n]
            for i in np.nonzero(col)[0]:
                entries.append(_rotated_entry(int(i), t, lseq, offs, n, int(col[i])))
        rounds.append(entries)
    return Schedule(_extract_multichunk(rounds))


def _rotated_entry(i: int, t: int, lseq: Sequence[int], offs: Sequence[int], n: int, size: int):
    hops = []
    at = i
    for l in lseq:
        nxt = (at + offs[l]) % n
        hops.append((at, nxt, l))
        at = nxt
    return Flow(i, (i + t) % n, size), Path(tuple(hops))


def _demand_for(P: Topology, A) -> np.ndarray:
    arr = as_traffic_array(A)
    if arr.shape[0] != P.params.n:
        raise ValueError(f"traffic is {arr.shape[0]} nodes but topology has {P.params.n}")
    return arr


# --- expander scheduling ----------------------------------------------------


def schedule_expander(P: Topology, A) -> Schedule:
    """General scheduler: enumerate shortest paths per demanded pair, pack
    hop-count blocks first-fit, merge compatible rounds, then extract
    multi-chunk flows."""
    n = P.params.n
    arr = _demand_for(P, A)
    adj = _adjacency_lists(P)
    dist = shortest_hops(P)
    pairs = [(int(s), int(d)) for s, d in np.argwhere(arr > 0)]
    for s, d in pairs:
        if dist[s, d] >= UNREACH:
            raise ValueError(f"demand {s}->{d} unreachable on this topology")
    rev_dist = _reverse_dists(P, {d for _, d in pairs})
    by_h: dict[int, list[tuple[int, int]]] = {}
    for s, d in sorted(pairs):
        by_h.setdefault(int(dist[s, d]), []).append((s, d))

    blocks: list[list[tuple[list, set]]] = []
    for h in sorted(by_h):
        block: list[tuple[list, set]] = []
        for s, d in by_h[h]:
            cands = _pair_paths(s, d, h, adj, dist, rev_dist[d])
            placed = False
            for entries, occupied in block:
                for hops in cands:
                    slots = {(i, a, l) for i, (a, _, l) in enumerate(hops)}
                    if not (slots & occupied):
                        entries.append((s, d, hops))
                        occupied |= slots
                        placed = True
                        break
                if placed:
                    break
            if not placed:
                hops = cands[0]
                block.append(([(s, d, hops)], {(i, a, l) for i, (a, _, l) in enumerate(hops)}))
        blocks.append(block)

    structural = [entries for block in blocks for entries, _ in block]
    structural = _merge_structural(structural)
    rounds = [
        [(Flow(s, d, int(arr[s, d])), Path(tuple(hops))) for s, d, hops in entries]
        for entries in structural
    ]
    return Schedule(_extract_multichunk(rounds))


def _adjacency_lists(P: Topology):
    n = P.params.n
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for j, layer in enumerate(P.layers):
        for i, t in enumerate(layer):
            adj[i].append((t, j))
    for i in range(n):
        adj[i].sort()
    return adj


def _reverse_dists(P: Topology, dsts: set[int]) -> dict[int, np.ndarray]:
    n = P.params.n
    radj: list[list[int]] = [[] for _ in range(n)]
    for layer in P.layers:
        for i, t in enumerate(layer):
            radj[t].append(i)
    out = {}
    for d in dsts:
        dist = np.full(n, UNREACH, dtype=np.int64)
        dist[d] = 0
        frontier = [d]
        h = 0
        while frontier:
            h += 1
            nxt = []
            for u in frontier:
                for w in radj[u]:
                    if dist[w] >= UNREACH:
                        dist[w] = h
                        nxt.append(w)
            frontier = nxt
        out[d] = dist
    return out


def _pair_paths(s: int, d: int, h: int, adj, dist, back, cap: int = PATHS_PER_PAIR_CAP):
    """All shortest hop sequences s -> d, lexicographic by (node, layer)."""
    found: list[list[tuple[int, int, int]]] = []
    acc: list[tuple[int, int, int]] = []

    def walk(u: int) -> None:
        if len(found) >= cap:
            return
        depth = len(acc)
        if u == d and depth == h:
            found.append(list(acc))
            return
        for w, l in adj[u]:
            if dist[s, w] == depth + 1 and back[w] == h - depth - 1:
                acc.append((u, w, l))
                walk(w)
                acc.pop()

    walk(s)
    return found


def _merge_structural(rounds: list[list[tuple[int, int, list]]]):
    """Merge unit-view rounds whose hop-indexed link use is disjoint."""
    kept: list[tuple[list, set]] = []
    for entries in rounds:
        slots = {(i, a, l) for _, _, hops in entries for i, (a, _, l) in enumerate(hops)}
        for k_entries, k_slots in kept:
            if not (slots & k_slots):
                k_entries.extend(entries)
                k_slots |= slots
                break
        else:
            kept.append((list(entries), slots))
    return [entries for entries, _ in kept]


# --- chunk-aware extraction -------------------------------------------------


def _extract_multichunk(rounds: list[list[tuple[Flow, Path]]]) -> list[Round]:
    """Keep unit flows in their template rounds; pull multi-chunk flows into
    rounds packed greedily under full link-disjointness.

    An extracted round is folded back into an earlier round when the union is
    fully link-disjoint; the union's duration max(h + size - 1) never exceeds
    the two separate durations.
    """
    unit_rounds: list[list[tuple[Flow, Path]]] = []
    multis: list[tuple[Flow, Path]] = []
    for entries in rounds:
        unit = [(f, p) for f, p in entries if f.size_chunks == 1]
        multis.extend((f, p) for f, p in entries if f.size_chunks > 1)
        if unit:
            unit_rounds.append(unit)
    multis.sort(key=lambda fp: (-fp[0].size_chunks, fp[0].src, fp[0].dst))
    extras: list[tuple[list, set]] = []
    for f, p in multis:
        links = {(a, l) for a, _, l in p.hops}
        for entries, used in extras:
            if not (links & used):
                entries.append((f, p))
                used |= links
                break
        else:
            extras.append(([(f, p)], set(links)))
    merged: list[list[tuple[Flow, Path]]] = [list(e) for e in unit_rounds]
    for entries, _ in extras:
        for base in merged:
            if not _entries_conflict(Round(base + entries)):
                base.extend(entries)
                break
        else:
            merged.append(list(entries))
    return [Round(e) for e in merged]


# --- contention checking ----------------------------------------------------


@dataclass(frozen=True)
class ContentionReport:
    ok: bool
    violations: tuple[str, ...]
    rounds_checked: int


def _round_conflicts(P: Topology, rnd: Round, where: str) -> list[str]:
    issues: list[str] = []
    k = P.params.k
    for f, p in rnd.entries:
        for a, b, l in p.hops:
            if not 0 <= l < k:
                issues.append(f"{where}: flow {f.src}->{f.dst} uses layer {l} outside 0..{k - 1}")
            elif P.layers[l][a] != b:
                issues.append(f"{where}: flow {f.src}->{f.dst} hop ({a},{b}) not wired on layer {l}")
    # owners are entry indices, not (src, dst) pairs, so a duplicated flow
    # entry still counts as two contenders on its links
    if rnd.unit_chunks:
        seen: dict[tuple[int, int, int], tuple[int, Flow]] = {}
        for ei, (f, p) in enumerate(rnd.entries):
            for i, (a, _, l) in enumerate(p.hops):
                key = (i, a, l)
                if key in seen and seen[key][0] != ei:
                    o = seen[key][1]
                    issues.append(
                        f"{where}: link ({a}, layer {l}) shared at hop {i} by {o.src}->{o.dst} and {f.src}->{f.dst}"
                    )
                seen[key] = (ei, f)
    else:
        owner: dict[tuple[int, int], tuple[int, Flow]] = {}
        for ei, (f, p) in enumerate(rnd.entries):
            for a, _, l in p.hops:
                key = (a, l)
                if key in owner and owner[key][0] != ei:
                    o = owner[key][1]
                    issues.append(
                        f"{where}: multi-chunk round shares link ({a}, layer {l}) between {o.src}->{o.dst} and {f.src}->{f.dst}"
                    )
                owner[key] = (ei, f)
    return issues


def check_contention_free(S: Strategy) -> ContentionReport:
    """Validate wiring and the per-round contention rules for a whole strategy."""
    violations: list[str] = []
    count = 0
    for si, stage in enumerate(S.stages):
        for ri, rnd in enumerate(stage.schedule.rounds):
            count += 1
            violations.extend(_round_conflicts(stage.topology, rnd, f"stage {si} round {ri}"))
    return ContentionReport(not violations, tuple(violations), count)


def merge_rounds(S: Schedule) -> Schedule:
    """Greedily merge rounds whose union stays contention-free.

    All-unit unions need hop-indexed link disjointness; unions containing a
    multi-chunk flow need full link disjointness.
    """
    kept: list[Round] = []
    for rnd in S.rounds:
        merged = False
        for i, base in enumerate(kept):
            cand = Round(base.entries + rnd.entries)
            if not _entries_conflict(cand):
                kept[i] = cand
                merged = True
                break
        if not merged:
            kept.append(rnd)
    return Schedule(kept)


def _entries_conflict(rnd: Round) -> bool:
    if rnd.unit_chunks:
        seen: set[tuple[int, int, int]] = set()
        for _, p in rnd.entries:
            for i, (a, _, l) in enumerate(p.hops):
                if (i, a, l) in seen:
                    return True
                seen.add((i, a, l))
        return False
    used: set[tuple[int, int]] = set()
    for _, p in rnd.entries:
        for a, _, l in p.hops:
            if (a, l) in used:
                return True
            used.add((a, l))
    return False


# --- cross-topology assignment ----------------------------------------------


def cross_topology_assign(seq: TopologySequence, A, scheduler: Callable | None = None) -> Strategy:
    """Assign demand across a sequence: each flow goes to the topology giving
    it the fewest hops, earliest stage on ties, then each stage is scheduled
    independently.  On all-circulant sequences assignment moves whole distance
    classes; otherwise it is per pair."""
    if not seq.topologies:
        raise ValueError("empty topology sequence")
    params = seq.topologies[0].params
    for t in seq.topologies:
        if t.params != params:
            raise ValueError("sequence mixes network parameters")
    n = params.n
    arr = as_traffic_array(A)
    if arr.shape[0] != n:
        raise ValueError(f"traffic is {arr.shape[0]} nodes but sequence has {n}")
    offsets = [circulant_offsets(t) for t in seq.topologies]
    if all(o is not None for o in offsets):
        demands = _assign_classes(n, arr, offsets)
        kind = "classes"
    else:
        demands = _assign_pairs(n, arr, seq.topologies)
        kind = "pairs"
    stages: list[Stage] = []
    dropped: list[int] = []
    for m, topo in enumerate(seq.topologies):
        if not demands[m].any():
            dropped.append(m)
            continue
        sched_fn = _pick_scheduler(topo, scheduler)
        stages.append(Stage(topo, sched_fn(topo, demands[m])))
    if not stages:
        raise ValueError("no demand to schedule")
    prov: dict[str, Any] = {"assignment": kind}
    if dropped:
        prov["droppedStages"] = dropped
    if seq.generation_trace:
        prov["sequence"] = {k: v for k, v in seq.generation_trace.items() if k in ("family", "shifts", "base")}
    return Strategy(stages, prov)


def _pick_scheduler(topo: Topology, scheduler: Callable | None) -> Callable:
    symmetric_ok = circulant_offsets(topo) is not None
    if scheduler is schedule_symmetric:
        return schedule_symmetric if symmetric_ok else schedule_expander
    if scheduler is not None:
        return scheduler
    return schedule_symmetric if symmetric_ok else schedule_expander


def _assign_classes(n: int, arr: np.ndarray, offsets: list) -> list[np.ndarray]:
    hops = np.stack([_circulant_class_hops(n, offs) for offs in offsets])  # (m, n-1)
    idx = np.arange(n)
    present = [t for t in range(1, n) if arr[idx, (idx + t) % n].any()]
    best = hops.min(axis=0)
    for t in present:
        if best[t - 1] >= UNREACH:
            raise ValueError(f"distance class {t} unreachable on every topology of the sequence")
    owner = hops.argmin(axis=0)  # first minimum = earliest stage
    demands = [np.zeros((n, n), dtype=np.int64) for _ in offsets]
    for t in present:
        m = int(owner[t - 1])
        cols = (idx + t) % n
        demands[m][idx, cols] = arr[idx, cols]
    return demands


def _assign_pairs(n: int, arr: np.ndarray, topologies: list[Topology]) -> list[np.ndarray]:
    dists = np.stack([shortest_hops(t) for t in topologies])  # (m, n, n)
    demanded = arr > 0
    best = dists.min(axis=0)
    if np.any(demanded & (best >= UNREACH)):
        s, d = np.argwhere(demanded & (best >= UNREACH))[0]
        raise ValueError(f"demand {int(s)}->{int(d)} unreachable on every topology of the sequence")
    owner = dists.argmin(axis=0)
    return [np.where(demanded & (owner == m), arr, 0) for m in range(len(topologies))]


# --- node relabeling for skewed sizes ---------------------------------------


@dataclass(frozen=True)
class Relabeling:
    """Virtual-to-physical node permutation with its predicted schedule cost.

    Costs are in chunk-times over the unit template: unit flows contribute
    through per-round maxima, multi-chunk flows as extracted rounds of
    h + size - 1.
    """

    perm: tuple[int, ...]
    predicted_units: int
    identity_units: int

    @property
    def gain_units(self) -> int:
        return self.identity_units - self.predicted_units


def relabel_for_sizes(A, strategy_template: Strategy, seed_perm: Sequence[int] | None = None) -> Relabeling:
    """Choose a node relabeling that routes heavy flows over short slots.

    The template must be a unit-demand strategy on the same node count.  The
    search seeds from identity, a greedy heavy-to-short binding, and an
    optional caller-provided permutation, then hill-climbs over
    transpositions (best improvement per pass, deterministic tie order).
    """
    arr = as_traffic_array(A)
    n = arr.shape[0]
    if strategy_template.params.n != n:
        raise ValueError("template and traffic disagree on node count")
    u_l, v_l, h_l, r_l = [], [], [], []
    rid = 0
    for stage in strategy_template.stages:
        for rnd in stage.schedule.rounds:
            for f, p in rnd.entries:
                u_l.append(f.src)
                v_l.append(f.dst)
                h_l.append(p.length)
                r_l.append(rid)
            rid += 1
    u_arr = np.asarray(u_l)
    v_arr = np.asarray(v_l)
    h_arr = np.asarray(h_l, dtype=np.int64)
    r_arr = np.asarray(r_l)
    n_rounds = rid

    def evaluate(p: np.ndarray) -> int:
        sizes = arr[p[u_arr], p[v_arr]]
        unit = sizes == 1
        maxes = np.zeros(n_rounds, dtype=np.int64)
        np.maximum.at(maxes, r_arr[unit], h_arr[unit])
        multi = sizes > 1
        return int(maxes.sum() + (h_arr[multi] + sizes[multi] - 1).sum())

    identity = np.arange(n)
    ident_cost = evaluate(identity)
    cands = [(ident_cost, identity)]
    greedy = _greedy_size_seed(arr, u_arr, v_arr, h_arr, n)
    cands.append((evaluate(greedy), greedy))
    if seed_perm is not None:
        sp = np.asarray(seed_perm)
        cands.append((evaluate(sp), sp.copy()))
    cost, perm = min(cands, key=lambda cp: (cp[0], tuple(cp[1])))
    perm = perm.copy()
    for _ in range(200):  # pass cap; converges far earlier in practice
        best_delta, best_swap = 0, None
        for i in range(n - 1):
            for j in range(i + 1, n):
                perm[i], perm[j] = perm[j], perm[i]
                c = evaluate(perm)
                perm[i], perm[j] = perm[j], perm[i]
                if c - cost < best_delta:
                    best_delta, best_swap = c - cost, (i, j)
        if best_swap is None:
            break
        i, j = best_swap
        perm[i], perm[j] = perm[j], perm[i]
        cost += best_delta
    return Relabeling(tuple(int(x) for x in perm), cost, ident_cost)


def _greedy_size_seed(arr: np.ndarray, u_arr, v_arr, h_arr, n: int) -> np.ndarray:
    """Bind the heaviest demand pairs to the shortest template slots.

    Bindings are partial and injective; unbound virtual nodes are completed
    with the remaining physical nodes in ascending order.
    """
    order = np.argsort(h_arr, kind="stable")
    slots = [(int(u_arr[i]), int(v_arr[i])) for i in order]
    flat = sorted(((-int(arr[s, d]), int(s), int(d)) for s, d in np.argwhere(arr > 0)))
    fwd: dict[int, int] = {}  # virtual -> physical
    rev: dict[int, int] = {}
    for _, s, d in flat[:n]:
        for pos, (u, v) in enumerate(slots):
            ok_u = fwd.get(u, s if s not in rev else None) == s
            ok_v = fwd.get(v, d if d not in rev else None) == d
            if ok_u and ok_v and (u != v):
                fwd[u], rev[s] = s, u
                fwd[v], rev[d] = d, v
                del slots[pos]
                break
    free = iter(x for x in range(n) if x not in rev)
    return np.asarray([fwd.get(u) if u in fwd else next(free) for u in range(n)])


def conjugate_strategy(S: Strategy, perm: Sequence[int]) -> Strategy:
    """Apply a virtual-to-physical node permutation to every stage and flow."""
    p = [int(x) for x in perm]
    n = S.params.n
    if sorted(p) != list(range(n)):
        raise ValueError("perm must be a permutation of 0..n-1")
    stages = []
    for stage in S.stages:
        topo = stage.topology
        layers = []
        for layer in topo.layers:
            new = [0] * n
            for u in range(n):
                new[p[u]] = p[layer[u]]
            layers.append(tuple(new))
        new_topo = Topology(
            topo.params,
            tuple(layers),
            family_tag=topo.family_tag,
            family_params={**dict(topo.family_params), "relabeled": True},
        )
        rounds = []
        for rnd in stage.schedule.rounds:
            entries = [
                (
                    Flow(p[f.src], p[f.dst], f.size_chunks),
                    Path(tuple((p[a], p[b], l) for a, b, l in pa.hops)),
                )
                for f, pa in rnd.entries
            ]
            rounds.append(Round(entries))
        stages.append(Stage(new_topo, Schedule(rounds)))
    prov = dict(S.provenance)
    prov["relabel"] = {"perm": p}
    return Strategy(stages, prov)


def format_rounds(S: Strategy) -> str:
    """Human-readable per-stage round table."""
    lines: list[str] = []
    for si, stage in enumerate(S.stages):
        topo = stage.topology
        offs = circulant_offsets(topo)
        desc = f"offsets {list(offs)}" if offs else f"{topo.family_tag}"
        lines.append(f"stage {si}: {desc}, {len(stage.schedule.rounds)} rounds")
        for ri, rnd in enumerate(stage.schedule.rounds):
            kind = "unit" if rnd.unit_chunks else "multi"
            flows = ", ".join(
                f"{f.src}->{f.dst}" + (f" x{f.size_chunks}" if f.size_chunks > 1 else "") + f" ({p.length}h)"
                for f, p in rnd.entries[:8]
            )
            more = "" if len(rnd.entries) <= 8 else f", ... {len(rnd.entries) - 8} more"
            lines.append(f"  round {ri} [{kind}, max {rnd.max_hop}h]: {flows}{more}")
    return "\n".join(lines)
