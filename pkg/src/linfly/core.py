"""Node registers, wire messages, configurations, and graph extraction.

A configuration maps node ids to full register states. Edges of the
communication graph are either explicit (an id stored in an address
variable) or implicit (an id carried by an in-flight message); the union
must stay weakly connected in every round of a correct run.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from typing import Iterable, Optional

NodeId = int

# Marker for the supervisor as a message destination; consecutive-id pairs
# of real nodes define the target topology, so node ids are plain ints.
SUPERVISOR = "supervisor"


# --- wire messages ---------------------------------------------------------
# Frozen dataclasses; ids() lists every node id carried by the payload
# (used for implicit edges and the id-provenance audit), key() gives the
# canonical processing order within a round.


@dataclass(frozen=True, slots=True)
class RejFlyover:
    def ids(self) -> tuple[NodeId, ...]:
        return ()

    def key(self):
        return (0,)


@dataclass(frozen=True, slots=True)
class TestLineR:
    sender: NodeId

    def ids(self) -> tuple[NodeId, ...]:
        return (self.sender,)

    def key(self):
        return (1, self.sender)


@dataclass(frozen=True, slots=True)
class TestLineL:
    sender: NodeId

    def ids(self) -> tuple[NodeId, ...]:
        return (self.sender,)

    def key(self):
        return (2, self.sender)


@dataclass(frozen=True, slots=True)
class FlyConstR:
    w: NodeId
    level: int
    sender: NodeId

    def ids(self) -> tuple[NodeId, ...]:
        return (self.w, self.sender)

    def key(self):
        return (3, self.level, self.sender, self.w)


@dataclass(frozen=True, slots=True)
class FlyConstL:
    w: NodeId
    level: int
    sender: NodeId

    def ids(self) -> tuple[NodeId, ...]:
        return (self.w, self.sender)

    def key(self):
        return (4, self.level, self.sender, self.w)


@dataclass(frozen=True, slots=True)
class TestVID:
    vid: int

    def ids(self) -> tuple[NodeId, ...]:
        return ()

    def key(self):
        return (5, self.vid)


@dataclass(frozen=True, slots=True)
class TestFlyID:
    flyid: Optional[NodeId]  # None tells receivers there is no flyover here

    def ids(self) -> tuple[NodeId, ...]:
        return () if self.flyid is None else (self.flyid,)

    def key(self):
        return (6, -1 if self.flyid is None else self.flyid)


@dataclass(frozen=True, slots=True)
class TestCert:
    origin: NodeId
    target_vid: int
    dist: int

    def ids(self) -> tuple[NodeId, ...]:
        return (self.origin,)

    def key(self):
        return (7, self.target_vid, self.dist, self.origin)


@dataclass(frozen=True, slots=True)
class IntroCert:
    sender: NodeId

    def ids(self) -> tuple[NodeId, ...]:
        return (self.sender,)

    def key(self):
        return (8, self.sender)


@dataclass(frozen=True, slots=True)
class RequestSnapshot:
    def ids(self) -> tuple[NodeId, ...]:
        return ()

    def key(self):
        return (9,)


@dataclass(frozen=True, slots=True)
class Intro:
    id: NodeId

    def ids(self) -> tuple[NodeId, ...]:
        return (self.id,)

    def key(self):
        return (10, self.id)


@dataclass(frozen=True, slots=True)
class Neighborhood:
    members: tuple[NodeId, ...]  # sorted snapshot of the sender's memory

    def ids(self) -> tuple[NodeId, ...]:
        return self.members

    def key(self):
        return (11,) + self.members


@dataclass(frozen=True, slots=True)
class Advice:
    vid: int
    c_par: int
    c_dist: int
    par: Optional[NodeId]
    dist: int

    def ids(self) -> tuple[NodeId, ...]:
        return () if self.par is None else (self.par,)

    def key(self):
        return (12, self.vid, self.c_par, self.c_dist,
                -1 if self.par is None else self.par, self.dist)


@dataclass(frozen=True, slots=True)
class TestAdvice:
    dist: int
    sender: NodeId

    def ids(self) -> tuple[NodeId, ...]:
        return (self.sender,)

    def key(self):
        return (13, self.sender, self.dist)


VERIFIED_KINDS = ("parent", "sib+", "sib-", "child")


@dataclass(frozen=True, slots=True)
class Verified:
    kind: str  # one of VERIFIED_KINDS
    id: NodeId

    def ids(self) -> tuple[NodeId, ...]:
        return (self.id,)

    def key(self):
        return (14, VERIFIED_KINDS.index(self.kind), self.id)


@dataclass(frozen=True, slots=True)
class PathPlus:
    id: NodeId

    def ids(self) -> tuple[NodeId, ...]:
        return (self.id,)

    def key(self):
        return (15, self.id)


@dataclass(frozen=True, slots=True)
class PathMinus:
    id: NodeId

    def ids(self) -> tuple[NodeId, ...]:
        return (self.id,)

    def key(self):
        return (16, self.id)


@dataclass(frozen=True, slots=True)
class Rev:
    dest: NodeId
    payload: tuple[NodeId, ...] = ()

    def ids(self) -> tuple[NodeId, ...]:
        return (self.dest,) + self.payload

    def key(self):
        return (17, self.dest) + self.payload


@dataclass(frozen=True, slots=True)
class Base:
    payload: tuple[NodeId, ...]

    def ids(self) -> tuple[NodeId, ...]:
        return self.payload

    def key(self):
        return (18,) + self.payload


Message = (
    RejFlyover | TestLineR | TestLineL | FlyConstR | FlyConstL | TestVID
    | TestFlyID | TestCert | IntroCert | RequestSnapshot | Intro
    | Neighborhood | Advice | TestAdvice | Verified | PathPlus | PathMinus
    | Rev | Base
)


def message_key(msg: Message):
    return msg.key()


def message_to_obj(msg: Message) -> list:
    name = type(msg).__name__
    if isinstance(msg, Verified):
        return [name, msg.kind, msg.id]
    if isinstance(msg, (Neighborhood, Base)):
        return [name, list(msg.ids() if isinstance(msg, Neighborhood) else msg.payload)]
    if isinstance(msg, Rev):
        return [name, msg.dest, list(msg.payload)]
    if isinstance(msg, Advice):
        return [name, msg.vid, msg.c_par, msg.c_dist, msg.par, msg.dist]
    vals = []
    for f in type(msg).__dataclass_fields__:
        vals.append(getattr(msg, f))
    return [name] + vals


# --- node state ------------------------------------------------------------


@dataclass
class NodeState:
    """Full register of one node.

    L and R are the flyover address lists (level i neighbour at index i-1,
    left and right along the advised path). vid is the path position, flyid
    the advertised leftmost member, c_par / c_dist / c_ids the connectivity
    certificate, t the advice-pipeline timer, dist the advised tree depth,
    base_mem the base-algorithm memory. channel holds the messages that will
    be delivered at the start of the next round.
    """

    id: NodeId
    L: list[NodeId] = field(default_factory=list)
    R: list[NodeId] = field(default_factory=list)
    vid: int = 0
    flyid: Optional[NodeId] = None  # None only transiently; default is own id
    exit: int = 0
    c_par: int = 0
    c_dist: int = -1
    c_ids: set[NodeId] = field(default_factory=set)
    t: int = 0
    dist: int = 0
    base_mem: set[NodeId] = field(default_factory=set)
    channel: list = field(default_factory=list)

    def __post_init__(self):
        if self.flyid is None:
            self.flyid = self.id

    @property
    def S(self) -> set[NodeId]:
        return set(self.L) | set(self.R)

    @property
    def dual(self) -> bool:
        return bool(self.L) or bool(self.R)

    @property
    def attentive(self) -> bool:
        return not self.dual and self.exit == 0 and self.t == 0

    def s_l(self, i: int) -> Optional[NodeId]:
        return self.L[i - 1] if 1 <= i <= len(self.L) else None

    def s_r(self, i: int) -> Optional[NodeId]:
        return self.R[i - 1] if 1 <= i <= len(self.R) else None

    def address_ids(self) -> set[NodeId]:
        """Every id this node stores in an address variable."""
        out = set(self.L)
        out.update(self.R)
        out.update(self.c_ids)
        out.update(self.base_mem)
        if self.flyid is not None and self.flyid != self.id:
            out.add(self.flyid)
        return out

    def clone(self) -> "NodeState":
        return NodeState(
            id=self.id, L=list(self.L), R=list(self.R), vid=self.vid,
            flyid=self.flyid, exit=self.exit, c_par=self.c_par,
            c_dist=self.c_dist, c_ids=set(self.c_ids), t=self.t,
            dist=self.dist, base_mem=set(self.base_mem),
            channel=list(self.channel),
        )

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "L": list(self.L),
            "R": list(self.R),
            "vID": self.vid,
            "flyID": self.flyid,
            "exit": self.exit,
            "c_par": self.c_par,
            "c_dist": self.c_dist,
            "c_ids": sorted(self.c_ids),
            "t": self.t,
            "dist": self.dist,
            "base_mem": sorted(self.base_mem),
            "channel": [message_to_obj(m) for m in self.channel],
        }


@dataclass
class Configuration:
    nodes: dict[NodeId, NodeState]
    round_no: int = 0
    supervisor: Optional[object] = None
    sup_inbox: list = field(default_factory=list)

    def ids(self) -> list[NodeId]:
        return sorted(self.nodes)

    def clone(self) -> "Configuration":
        return Configuration(
            nodes={u: st.clone() for u, st in self.nodes.items()},
            round_no=self.round_no,
            supervisor=copy.deepcopy(self.supervisor),
            sup_inbox=list(self.sup_inbox),
        )

    def to_records(self) -> list[dict]:
        return [self.nodes[u].to_record() for u in self.ids()]

    def dumps(self) -> str:
        return json.dumps({"round": self.round_no, "nodes": self.to_records()})


def initial_configuration(adjacency: dict[NodeId, set[NodeId]]) -> Configuration:
    """Default-state nodes whose base memory mirrors the given adjacency."""
    nodes = {}
    for u in sorted(adjacency):
        st = NodeState(id=u)
        st.base_mem = {v for v in adjacency[u] if v != u}
        nodes[u] = st
    return Configuration(nodes=nodes)


# --- communication graph ---------------------------------------------------


def explicit_edges(config: Configuration) -> set[tuple[NodeId, NodeId]]:
    """Directed edges (u, v) with v stored in an address variable of u."""
    out = set()
    nodes = config.nodes
    for u, st in nodes.items():
        for v in st.address_ids():
            if v != u and v in nodes:
                out.add((u, v))
    return out


def implicit_edges(config: Configuration) -> set[tuple[NodeId, NodeId]]:
    """Directed edges (u, v) with v carried by a message in u's channel."""
    out = set()
    nodes = config.nodes
    for u, st in nodes.items():
        for msg in st.channel:
            for v in msg.ids():
                if v != u and v in nodes:
                    out.add((u, v))
    return out


def extract_graph(config: Configuration) -> dict[tuple[NodeId, NodeId], str]:
    """Directed edges keyed (u, v), each labelled explicit or implicit.

    An edge is explicit when v sits in one of u's address variables and
    implicit when v is only carried by a message waiting in u's channel;
    explicit wins when both hold.
    """
    edges = {e: "implicit" for e in implicit_edges(config)}
    for e in explicit_edges(config):
        edges[e] = "explicit"
    return edges


def communication_graph(config: Configuration) -> dict[NodeId, set[NodeId]]:
    """Undirected adjacency of the explicit plus implicit edge union."""
    adj: dict[NodeId, set[NodeId]] = {u: set() for u in config.nodes}
    for u, v in explicit_edges(config) | implicit_edges(config):
        adj[u].add(v)
        adj[v].add(u)
    return adj


def is_weakly_connected(graph) -> bool:
    """True when the undirected version of the graph is connected.

    Accepts a Configuration or a plain adjacency dict mapping each node
    to a set of successors (nodes without edges still need a key).
    """
    if isinstance(graph, Configuration):
        nodes = graph.ids()
        adj = communication_graph(graph)
    else:
        nodes = sorted(graph)
        adj = {u: set() for u in graph}
        for u, succs in graph.items():
            for v in succs:
                adj[u].add(v)
                adj.setdefault(v, set()).add(u)
    if len(nodes) <= 1:
        return True
    seen = {nodes[0]}
    stack = [nodes[0]]
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return len(seen) == len(nodes)


def bfs_distances(adj: dict[NodeId, set[NodeId]], source: NodeId) -> dict[NodeId, int]:
    dist = {source: 0}
    frontier = [source]
    d = 0
    while frontier:
        d += 1
        nxt = []
        for u in frontier:
            for v in adj[u]:
                if v not in dist:
                    dist[v] = d
                    nxt.append(v)
        frontier = nxt
    return dist
