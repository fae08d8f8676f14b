"""Store-and-forward event simulation of a strategy.

Rounds run back to back inside a stage and a reconfiguration barrier precedes
every stage.  Within a round, time advances in whole chunk-times; each link
(node, layer) carries one chunk per slot, a chunk that arrives in slot t may
leave in slot t+1, and link conflicts resolve by lowest chunk index, then flow
(src, dst).  Waiting on a chunk of another flow is recorded as a violation:
the abstract cost model promises that never happens for schedules produced
here.

Totals are assembled from integer units through the same expression the cost
module uses, so simulated and abstract totals agree exactly when no queueing
occurs.
"""
from __future__ import annotations

import csv
import heapq
from dataclasses import dataclass, field
from typing import IO

import numpy as np

from .core import CostModel, Strategy, as_traffic_array
from .cost import assemble_total, round_units

__all__ = ["SimConfig", "SimReport", "simulate", "compare_abstract_vs_sim"]


@dataclass(frozen=True)
class SimConfig:
    cost_model: CostModel = field(default_factory=CostModel)
    trace: IO[str] | None = None  # per-event CSV rows when given
    max_units_per_round: int = 10_000_000


@dataclass(frozen=True)
class SimReport:
    per_round_seconds: tuple[float, ...]
    per_stage_seconds: tuple[float, ...]
    total_seconds: float
    total_units: int
    reconfig_events: tuple[dict, ...]
    violations: tuple[str, ...]
    demand_matched: bool


def simulate(S: Strategy, A, cfg: SimConfig | None = None) -> SimReport:
    cfg = cfg or SimConfig()
    cm = cfg.cost_model
    arr = as_traffic_array(A)
    n = S.params.n
    if arr.shape[0] != n:
        raise ValueError("traffic and strategy disagree on node count")
    writer = csv.writer(cfg.trace) if cfg.trace is not None else None
    if writer:
        writer.writerow(["stage", "round", "slot", "src", "dst", "chunk", "from", "to", "layer"])

    served = np.zeros((n, n), dtype=np.int64)
    per_round: list[float] = []
    per_stage: list[float] = []
    reconfigs: list[dict] = []
    violations: list[str] = []
    total_units = 0
    t_now = 0.0
    for si, stage in enumerate(S.stages):
        reconfigs.append({"stage": si, "startSeconds": t_now, "durationSeconds": cm.reconfig_delay})
        t_now += cm.reconfig_delay
        stage_units = 0
        for ri, rnd in enumerate(stage.schedule.rounds):
            units, viols = _run_round(rnd, si, ri, served, writer, cfg.max_units_per_round)
            violations.extend(viols)
            per_round.append(units * cm.T)
            stage_units += units
            t_now += units * cm.T
        per_stage.append(stage_units * cm.T)
        total_units += stage_units
    matched = bool(np.array_equal(served, arr))
    if not matched:
        bad = np.argwhere(served != arr)
        s, d = (int(x) for x in bad[0])
        violations.append(f"served demand mismatch at {s}->{d}: got {int(served[s, d])}, want {int(arr[s, d])}")
    _, _, total = assemble_total(total_units, S.d, cm)
    return SimReport(
        per_round_seconds=tuple(per_round),
        per_stage_seconds=tuple(per_stage),
        total_seconds=total,
        total_units=total_units,
        reconfig_events=tuple(reconfigs),
        violations=tuple(violations),
        demand_matched=matched,
    )


def _run_round(rnd, si: int, ri: int, served, writer, max_units: int) -> tuple[int, list[str]]:
    """Slot-stepped simulation of a single round; returns (units, violations)."""
    flows = [(f, p.hops) for f, p in rnd.entries]
    # chunk state: [flow_idx, chunk_idx, hop_pos]
    state: dict[int, list[int]] = {}
    by_slot: dict[int, list[int]] = {}
    serial = 0
    for fi, (f, hops) in enumerate(flows):
        for q in range(f.size_chunks):
            state[serial] = [fi, q, 0]
            by_slot.setdefault(0, []).append(serial)
            serial += 1
    pending = serial
    violations: list[str] = []
    flagged: set[int] = set()
    last_slot = 0
    slots_heap = [0]
    seen_slots = {0}
    while pending:
        slot = heapq.heappop(slots_heap)
        waiting = by_slot.pop(slot, [])
        if not waiting:
            continue
        if slot > max_units:
            raise RuntimeError(f"stage {si} round {ri} exceeded {max_units} slots; malformed schedule?")
        claims: dict[tuple[int, int], list[int]] = {}
        for cid in waiting:
            fi, q, pos = state[cid]
            a, _, l = flows[fi][1][pos]
            claims.setdefault((a, l), []).append(cid)
        for link, cids in sorted(claims.items()):
            cids.sort(key=lambda c: (state[c][1], flows[state[c][0]][0].src, flows[state[c][0]][0].dst))
            winner = cids[0]
            fi, q, pos = state[winner]
            f, hops = flows[fi]
            a, b, l = hops[pos]
            if writer:
                writer.writerow([si, ri, slot, f.src, f.dst, q, a, b, l])
            if pos + 1 == len(hops):
                served[f.src, f.dst] += 1  # one chunk delivered
                del state[winner]
                pending -= 1
                last_slot = max(last_slot, slot + 1)
            else:
                state[winner][2] = pos + 1
                by_slot.setdefault(slot + 1, []).append(winner)
                if slot + 1 not in seen_slots:
                    seen_slots.add(slot + 1)
                    heapq.heappush(slots_heap, slot + 1)
            for loser in cids[1:]:
                lf = state[loser][0]
                if lf != fi and loser not in flagged:
                    flagged.add(loser)
                    lw = flows[lf][0]
                    violations.append(
                        f"stage {si} round {ri}: flow {lw.src}->{lw.dst} chunk {state[loser][1]} "
                        f"queued behind {f.src}->{f.dst} on link {link} at slot {slot}"
                    )
                by_slot.setdefault(slot + 1, []).append(loser)
                if slot + 1 not in seen_slots:
                    seen_slots.add(slot + 1)
                    heapq.heappush(slots_heap, slot + 1)
    return last_slot, violations


def compare_abstract_vs_sim(S: Strategy, A, cfg: SimConfig | None = None) -> float:
    """Largest relative error between abstract round durations / total and the
    simulated ones.  Zero means exact agreement."""
    cfg = cfg or SimConfig()
    cm = cfg.cost_model
    rep = simulate(S, A, cfg)
    err = 0.0
    i = 0
    abstract_units = 0
    for stage in S.stages:
        for rnd in stage.schedule.rounds:
            au = round_units(rnd)
            abstract_units += au
            sim_sec = rep.per_round_seconds[i]
            abs_sec = au * cm.T
            denom = abs_sec if abs_sec > 0 else 1.0
            err = max(err, abs(sim_sec - abs_sec) / denom)
            i += 1
    _, _, abs_total = assemble_total(abstract_units, S.d, cm)
    err = max(err, abs(rep.total_seconds - abs_total) / abs_total)
    return err
