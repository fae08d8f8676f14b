"""Core data model: network parameters, traffic, topologies, schedules, strategies.

Everything downstream (topology generation, scheduling, costing, simulation)
builds on the types in this module.  Serialization to and from JSON lives here
as well so that the CLI and the library agree on one schema.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "NetworkParams",
    "TrafficMatrix",
    "TrafficReport",
    "Flow",
    "Path",
    "Round",
    "Schedule",
    "Topology",
    "TopologySequence",
    "Stage",
    "Strategy",
    "CostModel",
    "validate_traffic",
    "as_traffic_array",
    "adjacency_matrix",
    "traffic_to_json",
    "traffic_from_json",
    "topology_to_json",
    "topology_from_json",
    "strategy_to_json",
    "strategy_from_json",
]


@dataclass(frozen=True)
class NetworkParams:
    """Size of the electrical domain (n endpoints) and per-endpoint link count k."""

    n: int
    k: int = 1

    def __post_init__(self) -> None:
        if not isinstance(self.n, int) or not isinstance(self.k, int):
            raise ValueError("n and k must be integers")
        if self.n < 2:
            raise ValueError(f"need at least two endpoints, got n={self.n}")
        if self.k < 1:
            raise ValueError(f"need at least one link per endpoint, got k={self.k}")
        if self.k >= self.n:
            raise ValueError(f"k={self.k} must be smaller than n={self.n}")


@dataclass(frozen=True)
class TrafficReport:
    """Outcome of traffic validation: hard issues plus informational flags."""

    ok: bool
    issues: tuple[str, ...] = ()
    flags: tuple[str, ...] = ()


def as_traffic_array(A: "TrafficMatrix | np.ndarray | Sequence[Sequence[int]]") -> np.ndarray:
    """Coerce any accepted traffic representation to a square int64 ndarray."""
    if isinstance(A, TrafficMatrix):
        return A.chunks
    arr = np.asarray(A)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"traffic matrix must be square, got shape {arr.shape}")
    if not np.issubdtype(arr.dtype, np.integer):
        if np.issubdtype(arr.dtype, np.floating) and np.all(arr == np.floor(arr)):
            arr = arr.astype(np.int64)
        else:
            raise ValueError("traffic matrix entries must be integers (whole chunk counts)")
    return arr.astype(np.int64, copy=False)


def validate_traffic(A: "TrafficMatrix | np.ndarray | Sequence[Sequence[int]]") -> TrafficReport:
    """Check a traffic matrix: square, integer, nonnegative, zero diagonal.

    An all-zero matrix is valid but flagged as empty demand.
    """
    issues: list[str] = []
    flags: list[str] = []
    try:
        arr = as_traffic_array(A)
    except ValueError as exc:
        return TrafficReport(ok=False, issues=(str(exc),))
    if np.any(arr < 0):
        bad = np.argwhere(arr < 0)
        issues.append(f"negative entries at {[tuple(map(int, ij)) for ij in bad[:8]]}")
    diag = np.diagonal(arr)
    if np.any(diag != 0):
        where = np.nonzero(diag)[0]
        issues.append(f"nonzero diagonal at nodes {[int(i) for i in where[:8]]}")
    if not issues and not arr.any():
        flags.append("emptyDemand")
    return TrafficReport(ok=not issues, issues=tuple(issues), flags=tuple(flags))


@dataclass(frozen=True)
class TrafficMatrix:
    """Demand in whole chunks: chunks[s, d] from endpoint s to endpoint d."""

    chunks: np.ndarray

    def __post_init__(self) -> None:
        arr = as_traffic_array(self.chunks)
        report = validate_traffic(arr)
        if not report.ok:
            raise ValueError("invalid traffic matrix: " + "; ".join(report.issues))
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "chunks", arr)

    @property
    def n(self) -> int:
        return int(self.chunks.shape[0])

    @classmethod
    def uniform(cls, n: int, chunks_per_pair: int = 1) -> "TrafficMatrix":
        a = np.full((n, n), int(chunks_per_pair), dtype=np.int64)
        np.fill_diagonal(a, 0)
        return cls(a)


@dataclass(frozen=True, order=True)
class Flow:
    """One point-to-point transfer of size_chunks whole chunks."""

    src: int
    dst: int
    size_chunks: int = 1

    def __post_init__(self) -> None:
        if self.src == self.dst:
            raise ValueError(f"flow source equals destination ({self.src})")
        if self.size_chunks < 1:
            raise ValueError(f"flow size must be at least one chunk, got {self.size_chunks}")


Hop = tuple[int, int, int]  # (from_node, to_node, layer)


@dataclass(frozen=True)
class Path:
    """A hop sequence; each hop is (from_node, to_node, layer)."""

    hops: tuple[Hop, ...]

    def __post_init__(self) -> None:
        if not self.hops:
            raise ValueError("path needs at least one hop")
        hops = tuple((int(a), int(b), int(l)) for a, b, l in self.hops)
        for (_, b, _), (a2, _, _) in zip(hops, hops[1:]):
            if b != a2:
                raise ValueError(f"discontiguous path: hop ends at {b}, next starts at {a2}")
        object.__setattr__(self, "hops", hops)

    @property
    def length(self) -> int:
        return len(self.hops)

    @property
    def src(self) -> int:
        return self.hops[0][0]

    @property
    def dst(self) -> int:
        return self.hops[-1][1]


@dataclass
class Round:
    """Flows sent concurrently; unit_chunks is true when every flow is one chunk."""

    entries: list[tuple[Flow, Path]]
    unit_chunks: bool = field(init=False)

    def __post_init__(self) -> None:
        for flow, path in self.entries:
            if path.src != flow.src or path.dst != flow.dst:
                raise ValueError(f"path endpoints {path.src}->{path.dst} do not match flow {flow.src}->{flow.dst}")
        self.unit_chunks = all(f.size_chunks == 1 for f, _ in self.entries)

    @property
    def max_hop(self) -> int:
        return max(p.length for _, p in self.entries) if self.entries else 0


@dataclass
class Schedule:
    rounds: list[Round]

    def all_entries(self) -> Iterable[tuple[Flow, Path]]:
        for r in self.rounds:
            yield from r.entries


@dataclass(frozen=True)
class Topology:
    """A circuit configuration: k layers, each a fixed-point-free permutation.

    Layer j connects node i to layers[j][i].  Parallel edges across layers are
    tolerated; self-links are not.
    """

    params: NetworkParams
    layers: tuple[tuple[int, ...], ...]
    family_tag: str = "custom"
    family_params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        n, k = self.params.n, self.params.k
        layers = tuple(tuple(int(x) for x in layer) for layer in self.layers)
        if len(layers) != k:
            raise ValueError(f"expected {k} layers, got {len(layers)}")
        full = frozenset(range(n))
        for j, layer in enumerate(layers):
            if len(layer) != n or set(layer) != full:
                raise ValueError(f"layer {j} is not a permutation of 0..{n - 1}")
            for i, t in enumerate(layer):
                if i == t:
                    raise ValueError(f"layer {j} has a self-link at node {i}")
        object.__setattr__(self, "layers", layers)

    @cached_property
    def neighbor_layers(self) -> dict[tuple[int, int], int]:
        """Lowest layer index realizing each directed edge."""
        out: dict[tuple[int, int], int] = {}
        for j, layer in enumerate(self.layers):
            for i, t in enumerate(layer):
                out.setdefault((i, t), j)
        return out


def adjacency_matrix(P: Topology) -> np.ndarray:
    """Directed edge counts; entry [u, v] is the number of layers wiring u to v."""
    n = P.params.n
    A = np.zeros((n, n), dtype=np.int64)
    for layer in P.layers:
        A[np.arange(n), np.asarray(layer)] += 1
    return A


@dataclass
class TopologySequence:
    """Ordered circuit configurations to be applied over successive stages."""

    topologies: list[Topology]
    generation_trace: dict[str, Any] = field(default_factory=dict)

    @property
    def d(self) -> int:
        return len(self.topologies)


@dataclass
class Stage:
    topology: Topology
    schedule: Schedule


@dataclass
class Strategy:
    """A topology sequence together with a per-stage flow schedule."""

    stages: list[Stage]
    provenance: dict[str, Any] = field(default_factory=dict)

    @property
    def d(self) -> int:
        return len(self.stages)

    @property
    def params(self) -> NetworkParams:
        if not self.stages:
            raise ValueError("strategy has no stages")
        return self.stages[0].topology.params

    def demand_served(self) -> np.ndarray:
        """Chunk totals summed over every entry of every round, per (src, dst)."""
        n = self.params.n
        out = np.zeros((n, n), dtype=np.int64)
        for stage in self.stages:
            for flow, _ in stage.schedule.all_entries():
                out[flow.src, flow.dst] += flow.size_chunks
        return out


@dataclass(frozen=True)
class CostModel:
    """Per-chunk transfer time T = alpha + beta * chunk_bytes, plus the
    reconfiguration delay charged once per stage."""

    alpha: float = 500e-9
    beta: float = 1e-11
    chunk_bytes: int = 4 * 2**20
    reconfig_delay: float = 15e-6

    def __post_init__(self) -> None:
        if self.alpha < 0 or self.beta < 0 or self.reconfig_delay < 0:
            raise ValueError("cost model terms must be nonnegative")
        if self.chunk_bytes <= 0:
            raise ValueError("chunk size must be positive")

    @property
    def T(self) -> float:
        return self.alpha + self.beta * self.chunk_bytes


# --- JSON serialization -----------------------------------------------------
#
# Field names are part of the external contract: n, k, layers, stages, rounds,
# entries, src, dst, sizeChunks, hops.


def traffic_to_json(A: "TrafficMatrix | np.ndarray") -> dict[str, Any]:
    arr = as_traffic_array(A)
    return {"n": int(arr.shape[0]), "chunks": arr.tolist()}


def traffic_from_json(obj: Mapping[str, Any] | str) -> TrafficMatrix:
    obj = _loaded(obj)
    _require(obj, "traffic", ("n", "chunks"))
    arr = np.asarray(obj["chunks"])
    if arr.ndim != 2 or arr.shape != (obj["n"], obj["n"]):
        raise ValueError(f"chunks must be an {obj['n']}x{obj['n']} matrix")
    return TrafficMatrix(as_traffic_array(arr))


def topology_to_json(P: Topology) -> dict[str, Any]:
    return {
        "n": P.params.n,
        "k": P.params.k,
        "layers": [list(layer) for layer in P.layers],
        "familyTag": P.family_tag,
        "familyParams": dict(P.family_params),
    }


def topology_from_json(obj: Mapping[str, Any] | str) -> Topology:
    obj = _loaded(obj)
    _require(obj, "topology", ("n", "k", "layers"))
    params = NetworkParams(int(obj["n"]), int(obj["k"]))
    return Topology(
        params,
        tuple(tuple(layer) for layer in obj["layers"]),
        family_tag=str(obj.get("familyTag", "custom")),
        family_params=dict(obj.get("familyParams", {})),
    )


def strategy_to_json(S: Strategy) -> dict[str, Any]:
    return {
        "n": S.params.n,
        "k": S.params.k,
        "stages": [
            {
                "topology": topology_to_json(stage.topology),
                "rounds": [
                    {
                        "unitChunks": r.unit_chunks,
                        "entries": [
                            {
                                "src": f.src,
                                "dst": f.dst,
                                "sizeChunks": f.size_chunks,
                                "hops": [list(h) for h in p.hops],
                            }
                            for f, p in r.entries
                        ],
                    }
                    for r in stage.schedule.rounds
                ],
            }
            for stage in S.stages
        ],
        "provenance": dict(S.provenance),
    }


def strategy_from_json(obj: Mapping[str, Any] | str) -> Strategy:
    obj = _loaded(obj)
    _require(obj, "strategy", ("n", "k", "stages"))
    stages: list[Stage] = []
    for si, st in enumerate(obj["stages"]):
        _require(st, f"stage {si}", ("topology", "rounds"))
        topo = topology_from_json(st["topology"])
        rounds: list[Round] = []
        for ri, r in enumerate(st["rounds"]):
            _require(r, f"stage {si} round {ri}", ("entries",))
            entries: list[tuple[Flow, Path]] = []
            for e in r["entries"]:
                _require(e, f"stage {si} round {ri} entry", ("src", "dst", "sizeChunks", "hops"))
                flow = Flow(int(e["src"]), int(e["dst"]), int(e["sizeChunks"]))
                path = Path(tuple((int(a), int(b), int(l)) for a, b, l in e["hops"]))
                entries.append((flow, path))
            rounds.append(Round(entries))
        stages.append(Stage(topo, Schedule(rounds)))
    return Strategy(stages, provenance=dict(obj.get("provenance", {})))


def _loaded(obj: Mapping[str, Any] | str) -> Mapping[str, Any]:
    if isinstance(obj, str):
        try:
            obj = json.loads(obj)
        except json.JSONDecodeError as exc:
            raise ValueError(f"not valid JSON: {exc}") from exc
    if not isinstance(obj, Mapping):
        raise ValueError(f"expected a JSON object, got {type(obj).__name__}")
    return obj


def _require(obj: Mapping[str, Any], what: str, keys: tuple[str, ...]) -> None:
    if not isinstance(obj, Mapping):
        raise ValueError(f"{what} must be a JSON object")
    missing = [k for k in keys if k not in obj]
    if missing:
        raise ValueError(f"{what} is missing fields {missing}")
