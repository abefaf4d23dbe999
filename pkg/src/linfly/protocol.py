"""Per-node round transition: flyover maintenance, advice pipeline, base step.

Each round a node runs, in order: sanity checks and flyover teardown,
response handlers for last round's flyover traffic, flyover test senders,
the advice pipeline (timer, snapshot, advice intake, tree certification,
local transform, path join), the advised-neighbor transfer, and finally the
base algorithm. Response handlers run before the test senders so that a
shortcut level learned from this round's deliveries is propagated in this
round's sends; that keeps construction at one level per round. An exit flag
raised by a response handler still takes effect (teardown) only next round.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .baseline import base_step, flush
from .core import (
    Advice,
    Base,
    FlyConstL,
    FlyConstR,
    Intro,
    IntroCert,
    Message,
    Neighborhood,
    NodeId,
    NodeState,
    PathMinus,
    PathPlus,
    RejFlyover,
    RequestSnapshot,
    Rev,
    TestAdvice,
    TestCert,
    TestFlyID,
    TestLineL,
    TestLineR,
    TestVID,
    Verified,
    message_key,
)

Send = tuple[NodeId, Message]


@dataclass
class RoundOutput:
    sends: list[Send] = field(default_factory=list)
    to_supervisor: list[Message] = field(default_factory=list)
    did_reject: bool = False


def next_stop(st: NodeState, val: int) -> Optional[NodeId]:
    """Greedy routing hop toward the node at path position val.

    Picks the shortcut whose target position is closest to val, preferring
    the lower level on ties. Empty when val is unreachable from here.
    """
    if val < 1 or val == st.vid or st.vid < 1:
        return None
    if not st.L and not st.R:
        return None
    if val > st.vid:
        if not st.R:
            return None
        best, gap = 0, None
        for i in range(1, len(st.R) + 1):
            d = abs(st.vid + 2 ** (i - 1) - val)
            if gap is None or d < gap:
                best, gap = i, d
        return st.R[best - 1]
    if not st.L:
        return None
    best, gap = 0, None
    for i in range(1, len(st.L) + 1):
        d = abs(st.vid - 2 ** (i - 1) - val)
        if gap is None or d < gap:
            best, gap = i, d
    return st.L[best - 1]


def well_formed_advice(adv: Advice, snap: set[NodeId]) -> bool:
    if not (isinstance(adv.vid, int) and isinstance(adv.c_par, int)):
        return False
    if adv.vid < 0 or adv.c_par < 0:
        return False
    if adv.par is None:
        return adv.dist == 0 and adv.vid == 1 and adv.c_dist == 0
    return adv.par in snap and adv.dist > 0 and adv.vid > 1 and adv.c_dist > 0


def _scrub_self(st: NodeState) -> None:
    # own id must never sit in a mutable address variable
    if st.id in st.L:
        st.L = [x for x in st.L if x != st.id]
    if st.id in st.R:
        st.R = [x for x in st.R if x != st.id]
    st.c_ids.discard(st.id)
    st.base_mem.discard(st.id)


def _basic_checks(st: NodeState, rejected: bool) -> None:
    S = st.S
    if rejected:
        st.exit = 1
    if not S and (st.c_ids or st.flyid != st.id):
        st.exit = 1
    if (not st.L and st.R) and (st.vid != 1 or st.flyid != st.id):
        st.exit = 1
    if st.L and st.vid <= 1:
        st.exit = 1
    if (st.vid == 1 and st.c_dist != 0) or (st.vid > 1 and st.c_dist <= 0):
        st.exit = 1
    if S and st.vid > 1 and next_stop(st, st.c_par) is None:
        st.exit = 1
    if len(st.c_ids) > 2:
        st.exit = 1
    if len(st.c_ids) == 2 and (st.id > max(st.c_ids) or st.id < min(st.c_ids)):
        st.exit = 1


def _reject_flyover(st: NodeState, out: RoundOutput) -> None:
    if st.exit != 1:
        return
    flyids = (st.S | {st.flyid} | st.c_ids) - {st.id}
    for v in sorted(flyids):
        out.sends.append((v, RejFlyover()))
    st.base_mem = flush(st.base_mem, flyids, st.id)
    st.L = []
    st.R = []
    st.vid = 0
    st.flyid = st.id
    st.exit = 0
    st.c_par = 0
    st.c_dist = -1
    st.c_ids = set()
    out.did_reject = True


def _r_test_flyover_construction(st: NodeState, by_type: dict, out: RoundOutput) -> None:
    for m in by_type.get(TestLineR, ()):
        sen = m.sender
        if (st.L and st.s_l(1) != sen) or not st.L:
            st.exit = 1
        if not st.S or st.exit == 1:
            if sen != st.id:
                out.sends.append((sen, RejFlyover()))
            st.base_mem = flush(st.base_mem, (sen,), st.id)
    for m in by_type.get(TestLineL, ()):
        sen = m.sender
        if (st.R and st.s_r(1) != sen) or not st.R:
            st.exit = 1
        if not st.S or st.exit == 1:
            if sen != st.id:
                out.sends.append((sen, RejFlyover()))
            st.base_mem = flush(st.base_mem, (sen,), st.id)
    for m in by_type.get(FlyConstR, ()):
        w, i, sen = m.w, m.level, m.sender
        if (len(st.L) >= i and st.s_l(i) != sen) or not st.L:
            st.exit = 1
        if len(st.L) >= i + 1 and st.s_l(i + 1) != w:
            st.exit = 1
        if st.exit == 0 and 1 < len(st.L) < i:
            st.base_mem = flush(st.base_mem, (sen, w), st.id)
        if st.exit == 0 and len(st.L) == i and st.s_l(i) == sen:
            if w != st.id:
                st.L.append(w)
        if not st.S or st.exit == 1:
            for v in sorted({sen, w} - {st.id}):
                out.sends.append((v, RejFlyover()))
            st.base_mem = flush(st.base_mem, (sen, w), st.id)
    for m in by_type.get(FlyConstL, ()):
        w, i, sen = m.w, m.level, m.sender
        if (len(st.R) >= i and st.s_r(i) != sen) or not st.R:
            st.exit = 1
        if len(st.R) >= i + 1 and st.s_r(i + 1) != w:
            st.exit = 1
        if st.exit == 0 and 1 < len(st.R) < i:
            st.base_mem = flush(st.base_mem, (sen, w), st.id)
        if st.exit == 0 and len(st.R) == i and st.s_r(i) == sen:
            if w != st.id:
                st.R.append(w)
        if not st.S or st.exit == 1:
            for v in sorted({sen, w} - {st.id}):
                out.sends.append((v, RejFlyover()))
            st.base_mem = flush(st.base_mem, (sen, w), st.id)


def _r_test_conn_certificate(st: NodeState, by_type: dict, out: RoundOutput) -> None:
    for m in by_type.get(TestCert, ()):
        w, tvid, d = m.origin, m.target_vid, m.dist
        prop = (st.vid == 1) or (st.vid > 1 and st.flyid != st.id)
        if st.vid == tvid and d - 1 != st.c_dist:
            st.exit = 1
        if st.vid != tvid and next_stop(st, tvid) is None:
            st.exit = 1
        if not st.S or st.exit == 1:
            if w != st.id:
                out.sends.append((w, RejFlyover()))
            st.base_mem = flush(st.base_mem, (w,), st.id)
        elif st.vid != tvid:
            if not prop:
                st.base_mem = flush(st.base_mem, (w,), st.id)
            else:
                out.sends.append((next_stop(st, tvid), m))
        else:
            if w != st.id:
                st.c_ids.add(w)
                out.sends.append((w, IntroCert(st.id)))
    for m in by_type.get(IntroCert, ()):
        if m.sender != st.id:
            st.c_ids.add(m.sender)


def _r_test_flyover_metadata(st: NodeState, by_type: dict, out: RoundOutput) -> None:
    for m in by_type.get(TestVID, ()):
        if not st.S or st.vid != m.vid:
            st.exit = 1
    for m in by_type.get(TestFlyID, ()):
        f = m.flyid
        if st.L and st.exit == 0 and st.flyid == st.id and f is not None:
            st.flyid = f
        if (st.S and st.flyid != f) or (not st.S and f is not None):
            st.exit = 1
        if st.exit == 1 and f is not None:
            if f != st.id:
                out.sends.append((f, RejFlyover()))
            st.base_mem = flush(st.base_mem, (f,), st.id)


def _test_flyover_construction(st: NodeState, out: RoundOutput) -> None:
    if st.R:
        out.sends.append((st.s_r(1), TestLineR(st.id)))
    if st.L:
        out.sends.append((st.s_l(1), TestLineL(st.id)))
    if st.R and st.L:
        for i in range(1, min(len(st.R), len(st.L)) + 1):
            out.sends.append((st.s_r(i), FlyConstR(st.s_l(i), i, st.id)))
            out.sends.append((st.s_l(i), FlyConstL(st.s_r(i), i, st.id)))


def _test_conn_certificate(st: NodeState, out: RoundOutput) -> None:
    if st.vid > 1 and st.flyid != st.id:
        dest = next_stop(st, st.c_par)
        if dest is not None:
            out.sends.append((dest, TestCert(st.id, st.c_par, st.c_dist)))


def _test_flyover_metadata(st: NodeState, out: RoundOutput,
                           channel_ids: set[NodeId]) -> None:
    # a node advertises its flyover id only once it actually sits in one:
    # the leftmost member (vid 1) must hold shortcuts, any other member must
    # already have adopted a foreign flyid
    prop = (st.vid == 1 and bool(st.S)) or (st.vid > 1 and st.flyid != st.id)
    for i in range(1, len(st.R) + 1):
        out.sends.append((st.R[i - 1], TestVID(st.vid + 2 ** (i - 1))))
    for i in range(1, len(st.L) + 1):
        out.sends.append((st.L[i - 1], TestVID(st.vid - 2 ** (i - 1))))
    if not st.S and st.vid == 0:
        for v in sorted((st.address_ids() | channel_ids) - {st.id}):
            out.sends.append((v, TestFlyID(None)))
    if prop:
        for v in sorted(st.address_ids() - {st.id, st.flyid}):
            out.sends.append((v, TestFlyID(st.flyid)))


def _basic_checks2(st: NodeState) -> None:
    if st.t > 5:
        st.t = 5
    if st.t < 0:
        st.t = 0
    if st.t > 0:
        st.t -= 1
    # reset the path position only once the advice window is over, so a
    # mid-pipeline node keeps the position it was advised
    if st.t == 0 and (not st.S or st.exit == 1):
        st.vid = 0


def _snapshot_req(st: NodeState, by_type: dict, out: RoundOutput) -> None:
    if not (st.attentive and RequestSnapshot in by_type):
        return
    st.t = 5
    snap = sorted(st.base_mem)
    for v in snap:
        out.sends.append((v, Intro(st.id)))
    for v in snap:
        out.sends.append((st.id, Intro(v)))
    out.to_supervisor.append(Neighborhood(tuple(snap)))


def _get_advice(st: NodeState, by_type: dict, out: RoundOutput) -> None:
    busy = not (not st.S and st.exit == 0 and st.t > 1)
    snap = {m.id for m in by_type.get(Intro, ())}
    advs = by_type.get(Advice, ())
    if advs and not busy and st.t == 4:
        adv = advs[0]
        if well_formed_advice(adv, snap):
            st.vid = adv.vid
            st.c_par = adv.c_par
            st.c_dist = adv.c_dist
            st.dist = adv.dist
            if adv.par is not None:
                out.sends.append((adv.par, TestAdvice(st.dist, st.id)))
    st.base_mem = flush(st.base_mem, snap, st.id)


def _certify_tree(st: NodeState, by_type: dict, out: RoundOutput) -> None:
    ignore = not (not st.S and st.exit == 0 and st.t > 1)
    children: set[NodeId] = set()
    for m in by_type.get(TestAdvice, ()):
        children.add(m.sender)
        if st.dist != m.dist - 1:
            ignore = True
    if not ignore and children:
        _setup_local_transform(st, sorted(children), out)
    st.base_mem = flush(st.base_mem, children, st.id)


def _setup_local_transform(st: NodeState, children: list[NodeId],
                           out: RoundOutput) -> None:
    q = len(children)
    for c in children:
        out.sends.append((c, Verified("parent", st.id)))
    for j in range(1, q):
        out.sends.append((children[j - 1], Verified("sib+", children[j])))
    for j in range(q - 1):
        out.sends.append((children[j + 1], Verified("sib-", children[j])))
    for c in children:
        out.sends.append((st.id, Verified("child", c)))


def _local_transform(st: NodeState, by_type: dict, out: RoundOutput) -> None:
    ignore = not (not st.S and st.exit == 0 and st.t > 1)
    parent = r_sib = l_sib = None
    children: set[NodeId] = set()
    for m in by_type.get(Verified, ()):
        kind, v = m.kind, m.id
        if kind == "parent":
            if parent is not None:
                ignore = True
            if not ignore:
                parent = v
        elif kind == "sib+":
            if r_sib is not None:
                ignore = True
            if not ignore:
                r_sib = v
        elif kind == "sib-":
            if l_sib is not None:
                ignore = True
            if not ignore:
                l_sib = v
        if kind == "child" or ignore:
            children.add(v)
    if (parent is None and st.dist != 0) or (parent is not None and st.dist < 1):
        ignore = True
    if not ignore and parent is not None:
        _execute_transform(st, parent, r_sib, l_sib, sorted(children), out)
    st.base_mem = flush(st.base_mem, {parent, r_sib, l_sib} | children, st.id)


def _execute_transform(st: NodeState, parent: NodeId, r_sib: Optional[NodeId],
                       l_sib: Optional[NodeId], children: list[NodeId],
                       out: RoundOutput) -> None:
    """Emit the one advised-path edge this node is responsible for.

    Odd depth points right (to parent or right sibling, possibly through the
    largest child); even depth mirrors to the left with the smallest child.
    """
    send = out.sends.append
    if st.dist % 2 == 1:
        target = parent if r_sib is None else r_sib
        if not children:
            send((target, PathPlus(st.id)))
            send((st.id, PathMinus(target)))
        else:
            send((target, PathPlus(children[-1])))
            send((children[-1], PathMinus(target)))
    else:
        target = parent if l_sib is None else l_sib
        if not children:
            send((target, PathMinus(st.id)))
            send((st.id, PathPlus(target)))
        else:
            send((target, PathMinus(children[0])))
            send((children[0], PathPlus(target)))


def _join_path(st: NodeState, by_type: dict) -> None:
    ignore = not (not st.S and st.exit == 0 and st.t >= 1)
    fly_l = fly_r = None
    for m in by_type.get(PathPlus, ()):
        if fly_r is not None:
            ignore = True
        if not ignore:
            fly_r = m.id
        else:
            st.base_mem = flush(st.base_mem, (m.id,), st.id)
    for m in by_type.get(PathMinus, ()):
        if st.vid == 1 or fly_l is not None:
            ignore = True
        if not ignore:
            fly_l = m.id
        else:
            st.base_mem = flush(st.base_mem, (m.id,), st.id)
    if not ignore:
        if fly_l is not None and fly_l != st.id:
            st.L = [fly_l]
        if fly_r is not None and fly_r != st.id:
            st.R = [fly_r]
    st.base_mem = flush(st.base_mem, (fly_l, fly_r), st.id)


def _transfer_advised(st: NodeState) -> None:
    st.base_mem = flush(st.base_mem, st.c_ids, st.id)


def node_round(state: NodeState, delivered: list[Message]) -> tuple[NodeState, RoundOutput]:
    """Run one full round for a single node, mutating and returning state."""
    st = state
    _scrub_self(st)
    msgs = sorted(delivered, key=message_key)
    by_type: dict[type, list] = {}
    for m in msgs:
        by_type.setdefault(type(m), []).append(m)
    # ids learned from node-originated traffic this round; supervisor
    # messages grant no addressing rights
    channel_ids = set()
    for m in msgs:
        if not isinstance(m, (Advice, RequestSnapshot)):
            channel_ids.update(m.ids())
    channel_ids.discard(st.id)

    out = RoundOutput()
    _basic_checks(st, RejFlyover in by_type)
    _reject_flyover(st, out)
    _r_test_flyover_construction(st, by_type, out)
    _r_test_conn_certificate(st, by_type, out)
    _r_test_flyover_metadata(st, by_type, out)
    _test_flyover_construction(st, out)
    _test_conn_certificate(st, out)
    _test_flyover_metadata(st, out, channel_ids)
    _basic_checks2(st)
    _snapshot_req(st, by_type, out)
    _get_advice(st, by_type, out)
    _certify_tree(st, by_type, out)
    _local_transform(st, by_type, out)
    _join_path(st, by_type)
    _transfer_advised(st)

    base_msgs = list(by_type.get(Base, ())) + list(by_type.get(Rev, ()))
    st.base_mem, base_sends = base_step(st.id, st.base_mem, base_msgs)
    out.sends.extend(base_sends)

    st.channel = []
    return st, out
