"""Advice computation and the supervisor round machine.

The honest supervisor waits for every node to become attentive, broadcasts a
snapshot request, rebuilds the union graph from the Neighborhood reports, and
answers with per-node advice: a position on a spanning-tree linearization
plus a certificate of the sorted-path tree. Malicious strategies reuse the
same request/collect machinery but distort the advice payloads.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from .core import Advice, Message, Neighborhood, NodeId, RequestSnapshot
from .ttp import label_tree, tree_to_path

STRATEGIES = ("split", "sybil", "wrong_vids", "cycle", "partial", "stale")

PHASES = ("idle", "waiting", "collecting", "advising")


@dataclass
class SupervisorState:
    membership: set[NodeId]
    mode: str = "honest"  # honest | absent | malicious
    strategy: Optional[str] = None
    phase: str = "idle"
    wait_counter: int = 0
    collected: dict[NodeId, frozenset] = field(default_factory=dict)
    advice_rounds: list[int] = field(default_factory=list)
    round_no: int = 0


def make_supervisor(membership, mode: str = "honest",
                    strategy: Optional[str] = None) -> SupervisorState:
    if strategy is not None and strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    if mode not in ("honest", "absent", "malicious"):
        raise ValueError(f"unknown supervisor mode {mode!r}")
    if mode == "malicious" and strategy is None:
        raise ValueError("malicious mode needs a strategy")
    return SupervisorState(membership=set(membership), mode=mode,
                           strategy=strategy)


def _connected(adj: dict[NodeId, set[NodeId]]) -> bool:
    if len(adj) <= 1:
        return True
    start = min(adj)
    seen = {start}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return len(seen) == len(adj)


def snapshot_graph(collected: dict[NodeId, frozenset],
                   membership: set[NodeId]) -> dict[NodeId, set[NodeId]]:
    """Union the reported memberships into an undirected graph."""
    adj: dict[NodeId, set[NodeId]] = {u: set() for u in sorted(membership)}
    for u, members in collected.items():
        for v in members:
            if v in adj and v != u:
                adj[u].add(v)
                adj[v].add(u)
    return adj


def compute_advice(snapshot: dict[NodeId, set[NodeId]],
                   root: NodeId) -> dict[NodeId, Advice]:
    """Honest advice: spanning-tree path positions plus sorted-path certificate."""
    ids = sorted(snapshot)
    if len(ids) < 2:
        raise ValueError("advice needs at least two nodes")
    if root not in snapshot:
        raise ValueError("root must be in the snapshot")
    parent: dict[NodeId, NodeId] = {}
    depth = {root: 0}
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for v in sorted(snapshot[u]):
            if v not in depth:
                depth[v] = depth[u] + 1
                parent[v] = u
                queue.append(v)
    if len(depth) != len(ids):
        raise ValueError("snapshot is disconnected")
    tree = label_tree(root, parent, 0)
    path = tree_to_path(tree)
    vid = {v: i + 1 for i, v in enumerate(path)}
    rank = {v: i for i, v in enumerate(ids)}
    out: dict[NodeId, Advice] = {}
    for v in ids:
        if v == root:
            out[v] = Advice(vid=vid[v], c_par=0, c_dist=0, par=None, dist=0)
        else:
            pred = ids[rank[v] - 1]
            out[v] = Advice(vid=vid[v], c_par=vid[pred], c_dist=rank[v],
                            par=parent[v], dist=depth[v])
    return out


def _advice_root(snapshot: dict[NodeId, set[NodeId]]) -> NodeId:
    return min(snapshot)


def _strategy_split(snapshot, membership) -> dict[NodeId, Advice]:
    """Advise two disjoint paths over the id halves, without any cross edge."""
    ids = sorted(membership)
    halves = [ids[: len(ids) // 2], ids[len(ids) // 2:]]
    out: dict[NodeId, Advice] = {}
    for half in halves:
        if len(half) < 2:
            continue
        sub = {u: snapshot[u] & set(half) for u in half}
        comp = _component(sub, half[0])
        if len(comp) < 2:
            continue
        part = {u: snapshot[u] & comp for u in sorted(comp)}
        out.update(compute_advice(part, min(comp)))
    return out


def _component(adj: dict[NodeId, set[NodeId]], start: NodeId) -> set[NodeId]:
    seen = {start}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return seen


def _strategy_sybil(snapshot, membership) -> dict[NodeId, Advice]:
    phantom = max(membership) + 10 ** 6
    return {u: Advice(vid=2, c_par=1, c_dist=1, par=phantom, dist=1)
            for u in sorted(membership)}


def _strategy_wrong_vids(snapshot, membership) -> dict[NodeId, Advice]:
    out = compute_advice(snapshot, _advice_root(snapshot))
    victim = max(out, key=lambda u: out[u].vid)
    a = out[victim]
    bad_vid = 2 if a.vid >= 3 else 3
    out[victim] = Advice(vid=bad_vid, c_par=a.c_par, c_dist=a.c_dist,
                         par=a.par, dist=a.dist)
    return out


def _strategy_cycle(snapshot, membership) -> dict[NodeId, Advice]:
    out = compute_advice(snapshot, _advice_root(snapshot))
    root = _advice_root(snapshot)
    ring = sorted(u for u in out if u != root)[-3:]
    if not ring:
        return out
    vids = [out[u].vid for u in ring]
    shared = max(out[u].c_dist for u in ring)
    for i, u in enumerate(ring):
        a = out[u]
        out[u] = Advice(vid=a.vid, c_par=vids[(i - 1) % len(ring)],
                        c_dist=shared, par=a.par, dist=a.dist)
    return out


def _strategy_partial(snapshot, membership) -> dict[NodeId, Advice]:
    out = compute_advice(snapshot, _advice_root(snapshot))
    out.pop(max(out))
    return out


def restrict_advice(advice: dict[NodeId, Advice],
                    subset: set[NodeId]) -> dict[NodeId, Advice]:
    return {u: a for u, a in advice.items() if u in subset}


def _strategy_stale(snapshot, membership) -> dict[NodeId, Advice]:
    """Advise on a perturbed snapshot: one edge dropped, or added if the
    drop would disconnect the graph."""
    adj = {u: set(vs) for u, vs in snapshot.items()}
    edges = sorted({(min(u, v), max(u, v))
                    for u, vs in adj.items() for v in vs})
    if edges:
        a, b = edges[-1]
        adj[a].discard(b)
        adj[b].discard(a)
        if not _connected(adj):
            adj[a].add(b)
            adj[b].add(a)
            ids = sorted(adj)
            for u in ids:
                w = next((v for v in ids if v != u and v not in adj[u]), None)
                if w is not None:
                    adj[u].add(w)
                    adj[w].add(u)
                    break
    return compute_advice(adj, _advice_root(adj))


_STRATEGY_FNS = {
    "split": _strategy_split,
    "sybil": _strategy_sybil,
    "wrong_vids": _strategy_wrong_vids,
    "cycle": _strategy_cycle,
    "partial": _strategy_partial,
    "stale": _strategy_stale,
}


def malicious_step(strategy: str, round_no: int, membership: set[NodeId],
                   snapshot: Optional[dict[NodeId, set[NodeId]]] = None,
                   ) -> dict[NodeId, Advice]:
    """Advice payloads for one adversarial strategy at the advising moment."""
    if strategy not in _STRATEGY_FNS:
        raise ValueError(f"unknown strategy {strategy!r}")
    if snapshot is None:
        snapshot = {u: set() for u in membership}
    return _STRATEGY_FNS[strategy](snapshot, membership)


def honest_step(state: SupervisorState,
                inbound: list[tuple[NodeId, Message]],
                attentive: set[NodeId],
                ) -> tuple[SupervisorState, list[tuple[NodeId, Message]]]:
    """One supervisor round: collect reports, advise, or wait.

    Also drives the malicious modes; they differ only in the advice payload.
    Supervisor-to-node messages returned here reach the nodes this round.
    """
    out: list[tuple[NodeId, Message]] = []
    if state.mode == "absent":
        state.round_no += 1
        return state, out
    if state.phase == "collecting":
        for sender, msg in inbound:
            if isinstance(msg, Neighborhood) and sender in state.membership:
                state.collected[sender] = frozenset(msg.members)
        snap = snapshot_graph(state.collected, state.membership)
        if set(state.collected) == state.membership and _connected(snap):
            state.phase = "advising"
            if state.mode == "honest":
                advice = compute_advice(snap, _advice_root(snap))
            else:
                advice = malicious_step(state.strategy, state.round_no,
                                        state.membership, snap)
            for u in sorted(advice):
                out.append((u, advice[u]))
            state.advice_rounds.append(state.round_no)
            state.phase = "idle"
        else:
            state.phase = "waiting"
        state.collected = {}
    if state.phase == "idle" and len(state.membership) >= 2 and attentive:
        state.phase = "waiting"
    if state.phase == "waiting":
        state.wait_counter += 1
        if attentive >= state.membership:
            for u in sorted(state.membership):
                out.append((u, RequestSnapshot()))
            state.phase = "collecting"
    state.round_no += 1
    return state, out
