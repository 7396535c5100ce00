"""Greedy local routing over the precomputed tables.

A route is a chain of legs. Each leg steers toward a pseudo-destination (a
representative, a cell member, or the marked edge of a Steiner relay) along
the curve cut into the surface by the leg's guiding plane; every hop moves
across exactly one mesh edge. The tracer follows the curve by sign tests of
per-vertex plane distances, with endpoint snapping so vertex hits are
deterministic, and carries the last crossing in the packet so the exit face
never has to be re-derived from scratch. If the trace degenerates (grazing
planes), the leg is re-aimed through the current vertex once per incident
and, failing that, finished by distance-greedy hops; both paths are recorded
as degenerate events and never silently truncate a route.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Plane, Tolerance, DEFAULT_TOL
from .compact_routing import NodeLabel, tz_next_hop
from .tables import EntryKind, RoutingSystem

__all__ = [
    "RoutingError",
    "UnknownVertex",
    "TrivialRoute",
    "HopLimitExceeded",
    "NoExitFace",
    "Target",
    "PacketHeader",
    "RouteTrace",
    "make_packet",
    "step",
    "route",
]


class RoutingError(RuntimeError):
    pass


class UnknownVertex(RoutingError):
    pass


class TrivialRoute(RoutingError):
    pass


class HopLimitExceeded(RoutingError):
    pass


class NoExitFace(RoutingError):
    pass


@dataclass
class Target:
    kind: str  # 'vertex' | 'steiner'
    point: np.ndarray  # aim point: vertex position or lifted Steiner point
    arrival: tuple[int, ...]  # vertices that complete the leg
    vertex: int = -1  # vertex-kind target
    node: int = -1  # spanner node the leg heads for (-1 for plain cell legs)


@dataclass
class _EdgeFront:
    other: int  # crossing edge is (current, other)
    point: np.ndarray
    face: int  # face the curve continues into


@dataclass
class _VertexFront:
    vertex: int  # the curve passes through this vertex
    via_face: int  # face carrying the back branch (-1 at a leg start)
    back_vertex: int


@dataclass
class PacketHeader:
    dest_vertex: int
    dest_label: NodeLabel
    pseudo: Target | None = None
    plane: Plane | None = None
    prev_vertex: int = -1
    tz_word: str = "local"
    hop_count: int = 0
    # tracer state; carried with the packet so forwarding stays one-pass
    front: object | None = None
    gamma_normal: np.ndarray | None = None
    sig: np.ndarray | None = None
    fallback: bool = False
    fallback_seen: set = field(default_factory=set)
    reaim_count: int = 0
    events: list = field(default_factory=list)
    legs: list = field(default_factory=list)
    switch_budget: int = 0


@dataclass
class RouteTrace:
    source: int
    dest: int
    vertices: list[int]
    cases: list[str]
    lengths: list[float]
    events: list[str]
    legs: list[dict]

    @property
    def total_length(self) -> float:
        return float(sum(self.lengths))

    @property
    def hops(self) -> int:
        return len(self.lengths)

    def to_csv(self) -> str:
        lines = ["hop_index vertex_id case edge_length"]
        for i, (v, c, ln) in enumerate(zip(self.vertices[1:], self.cases, self.lengths)):
            lines.append(f"{i} {v} {c} {ln:.9g}")
        lines.append(
            f"summary {self.source} {self.dest} {self.hops} {self.total_length:.9g}"
        )
        return "\n".join(lines) + "\n"


def make_packet(s: int, t: int, system: RoutingSystem) -> PacketHeader:
    P = system.P
    if not (0 <= s < P.n) or not (0 <= t < P.n):
        raise UnknownVertex(f"vertex out of range: s={s}, t={t}")
    if s == t:
        raise TrivialRoute("source equals destination")
    _vid, label = system.label_of_vertex(t)
    header = PacketHeader(dest_vertex=t, dest_label=label)
    header.switch_budget = 8 * (system.graph.num_nodes + 4)
    _pseudo_switch(s, header, system)
    return header


def _node_target(system: RoutingSystem, node_id: int) -> Target:
    node = system.graph.nodes[node_id]
    if node.kind == "rep":
        return Target(
            kind="vertex", point=system.P.vertices[node.vertex],
            arrival=(node.vertex,), vertex=node.vertex, node=node_id,
        )
    return Target(
        kind="steiner", point=node.lift3d,
        arrival=tuple(sorted(set(node.marked))), node=node_id,
    )


def _set_leg(v: int, header: PacketHeader, system: RoutingSystem,
             target: Target, gamma_normal: np.ndarray,
             stored_plane: Plane | None = None) -> None:
    P = system.P
    header.pseudo = target
    header.gamma_normal = gamma_normal
    snap = P.tol.snap(P.diameter())
    if float(np.linalg.norm(target.point - P.vertices[v])) <= snap:
        header.plane = None
        header.sig = None
    else:
        plane = stored_plane
        if plane is None or abs(float(plane.signed_distance(P.vertices[v]))) > snap:
            # anchor the guiding plane at the forwarding vertex itself
            plane = Plane.through_points_orthogonal_to(
                P.vertices[v], target.point, gamma_normal
            )
        header.plane = plane
        header.sig = plane.signed_distance(P.vertices)
    header.front = None
    header.fallback = False
    header.fallback_seen = set()
    header.legs.append({
        "start_hop": header.hop_count,
        "source": v,
        "target_point": target.point.copy(),
        "target_vertex": target.vertex,
        "kind": target.kind,
        "tz": header.tz_word,
    })


def _pseudo_switch(v: int, header: PacketHeader, system: RoutingSystem) -> None:
    """Consult the tables at v and install the next leg (possibly several
    times in a row when legs collapse to the current vertex)."""
    P = system.P
    scheme = system.scheme
    while True:
        header.switch_budget -= 1
        if header.switch_budget < 0:
            raise HopLimitExceeded("pseudo-destination switching did not settle")
        if v == header.dest_vertex:
            return
        label = header.dest_label
        table = system.tables[v]
        prev_target = header.pseudo

        if (prev_target is not None and prev_target.kind == "steiner"
                and v in prev_target.arrival):
            # marked-vertex relay: continue the spanner walk on behalf of the
            # Steiner node whose edge this vertex bounds
            s_node = prev_target.node
            nxt = _consult_node(s_node, v, label, header, system)
        elif system.assignment.rep_of[v] != v:
            entry = table.entries[("v", system.assignment.rep_of[v])]
            header.tz_word = "local"
            _set_leg(v, header, system,
                     Target("vertex", P.vertices[entry.dest], (entry.dest,),
                            vertex=entry.dest),
                     system.patch_gamma(int(system.decomp.owner_of_vertex[v])).normal,
                     stored_plane=entry.plane)
            nxt = None
        else:
            t = header.dest_vertex
            owner = int(system.decomp.owner_of_vertex[v])
            if system.assignment.rep_of[t] == v:
                entry = table.entries[("v", t)]
                header.tz_word = "local"
                _set_leg(v, header, system,
                         Target("vertex", P.vertices[t], (t,), vertex=t),
                         system.patch_gamma(owner).normal, stored_plane=entry.plane)
                nxt = None
            elif label.patch == owner:
                rep_vertex = system.graph.nodes[label.node].vertex
                entry = table.entries[("v", rep_vertex)]
                header.tz_word = "local"
                _set_leg(v, header, system,
                         Target("vertex", P.vertices[rep_vertex], (rep_vertex,),
                                vertex=rep_vertex, node=label.node),
                         system.patch_gamma(owner).normal, stored_plane=entry.plane)
                nxt = None
            else:
                nxt = _consult_node(table.g_node, v, label, header, system)
        if nxt is not None:
            continue
        # a leg that already terminates here collapses into another switch
        if header.pseudo is not None and v in header.pseudo.arrival:
            if header.pseudo.kind == "vertex" and header.pseudo.vertex == v:
                # reached a representative along the chain; consult it afresh
                header.pseudo = None
            continue
        return


def _consult_node(node_id: int, v: int, label: NodeLabel, header: PacketHeader,
                  system: RoutingSystem):
    """Spanner-level decision at the node owned by (or relayed through) v.

    Same-face targets are routed by a direct plane entry (their scheme
    entries are pruned); anything else takes the compact-routing next hop.
    Returns v to signal an immediate re-switch, None when a leg was set.
    """
    node = system.graph.nodes[node_id]
    target_node = label.node
    shared = set(node.patches) & set(system.graph.nodes[target_node].patches)
    if target_node == node_id or shared:
        face = min(shared) if shared else min(node.patches)
        header.tz_word = "local"
        _set_leg(v, header, system, _node_target(system, target_node),
                 system.patch_gamma(face).normal)
        return None
    w = tz_next_hop(system.scheme, node_id, target_node)
    key = (min(node_id, w), max(node_id, w))
    face, stored = system.gedge_planes.get(key, (min(node.patches), None))
    header.tz_word = "global"
    tgt = _node_target(system, w)
    snap = system.P.tol.snap(system.P.diameter())
    if float(np.linalg.norm(tgt.point - system.P.vertices[v])) <= snap and v in tgt.arrival:
        # zero-length hop in the spanner walk; adopt the node and re-consult
        header.pseudo = tgt
        return v
    _set_leg(v, header, system, tgt, system.patch_gamma(face).normal,
             stored_plane=stored)
    return None


# ---------------------------------------------------------------------------
# the per-hop tracer


def _sig_of(header: PacketHeader, v: int) -> float:
    return float(header.sig[v])


def _cross_point(P, header, u: int, v: int) -> tuple[np.ndarray, int]:
    """Crossing of the guiding plane with edge (u, v); returns the point and
    the endpoint index (u or v) if the crossing snaps to one, else -1."""
    su, sv = _sig_of(header, u), _sig_of(header, v)
    a, b = P.vertices[u], P.vertices[v]
    t = su / (su - sv)
    q = a + t * (b - a)
    snap = P.tol.snap(float(np.linalg.norm(b - a)))
    if float(np.linalg.norm(q - a)) <= snap:
        return q, u
    if float(np.linalg.norm(q - b)) <= snap:
        return q, v
    return q, -1


def _third_vertex(P, face: int, u: int, v: int) -> int:
    for x in P.faces[face]:
        if x != u and x != v:
            return int(x)
    raise NoExitFace(f"face {face} lacks a third vertex distinct from {u},{v}")


def _tie_order(P, face: int, w: int) -> tuple[int, int]:
    """(p2, p3) = successor and predecessor of w in the face's stored cyclic
    order; the distance tie in the look-ahead falls to p3."""
    f = P.faces[face]
    k = int(np.where(f == w)[0][0])
    return int(f[(k + 1) % 3]), int(f[(k + 2) % 3])


def _look_ahead(P, header, w: int, exit_face: int, a1: int, a2: int, snap: float):
    """The curve leaves w's fan through edge (a1, a2) of exit_face. Decide
    between the edge endpoints by where the curve continues in the face
    beyond; a hit on that face's far vertex falls to the distance tie rule."""
    f3 = P.other_face(exit_face, a1, a2)
    c = _third_vertex(P, f3, a1, a2)

    def tie():
        p2, p3 = _tie_order(P, exit_face, w)
        d2 = P.edge_length(w, p2) + P.edge_length(p2, c)
        d3 = P.edge_length(w, p3) + P.edge_length(p3, c)
        move = p2 if d2 < d3 else p3
        return move, "TieBreak", _VertexFront(c, f3, move)

    sc = _sig_of(header, c)
    if abs(sc) <= snap:
        return tie()
    if sc * _sig_of(header, a1) < 0:
        near, far = a1, a2
    else:
        near, far = a2, a1
    qq, hit = _cross_point(P, header, near, c)
    if hit == near:
        return near, "VertexHit", _VertexFront(near, exit_face, w)
    if hit == c:
        return tie()
    return near, "General", _EdgeFront(c, qq, P.other_face(f3, near, c))


def _trace_edge_front(P, header, current: int, snap: float):
    """Continue the curve through the fan of `current` from the carried
    crossing until it exits through an opposite edge, hits a vertex, or the
    fan is exhausted (None -> re-aim)."""
    front: _EdgeFront = header.front
    u = front.other
    face = front.face
    for _ in range(len(P.vertex_fan[current]) + 4):
        if current not in P.faces[face] or u not in P.faces[face]:
            return None
        z = _third_vertex(P, face, current, u)
        sz = _sig_of(header, z)
        if abs(sz) <= snap:
            return z, "VertexHit", _VertexFront(z, face, current)
        su = _sig_of(header, u)
        sw = _sig_of(header, current)
        if sz * su < 0.0:
            # exits through the edge opposite to current
            q, hit = _cross_point(P, header, u, z)
            if hit == u:
                return u, "VertexHit", _VertexFront(u, face, current)
            if hit == z:
                return z, "VertexHit", _VertexFront(z, face, current)
            return _look_ahead(P, header, current, face, u, z, snap)
        if sz * sw < 0.0:
            # crosses the radial edge (current, z); march around the fan
            q, hit = _cross_point(P, header, current, z)
            if hit == z:
                return z, "VertexHit", _VertexFront(z, face, current)
            if hit == current:
                return None
            face = P.other_face(face, current, z)
            u = z
            continue
        return None
    return None


def _branch_candidates(P, header, at: int, exclude_face: int, exclude_vertex: int,
                       snap: float):
    """Continuations of the curve out of a vertex it passes through: either a
    crossing inside an incident face or a run along an incident edge."""
    cands = []
    seen_runs = set()
    pos = P.vertices
    for f in P.vertex_fan[at]:
        fa = P.faces[f]
        others = [int(x) for x in fa if x != at]
        b, c = others
        sb, sc = _sig_of(header, b), _sig_of(header, c)
        for vtx, sv in ((b, sb), (c, sc)):
            if abs(sv) <= snap and vtx != exclude_vertex and vtx not in seen_runs:
                seen_runs.add(vtx)
                cands.append((pos[vtx] - pos[at], vtx, "run", f))
        if f == exclude_face:
            continue
        if abs(sb) > snap and abs(sc) > snap and sb * sc < 0.0:
            q, hit = _cross_point(P, header, b, c)
            if hit >= 0:
                if hit != exclude_vertex and hit not in seen_runs:
                    seen_runs.add(hit)
                    cands.append((pos[hit] - pos[at], hit, "run", f))
                continue
            cands.append((q - pos[at], -1, "cross", f, b, c, q))
    return cands


def _start_trace(P, header, current: int, snap: float):
    """Leg start or vertex passage: choose the branch whose initial direction
    best aligns with the pseudo-destination and take the first move."""
    front = header.front
    exclude_face = -1
    exclude_vertex = -1
    if isinstance(front, _VertexFront):
        exclude_face = front.via_face
        exclude_vertex = front.back_vertex
    cands = _branch_candidates(P, header, current, exclude_face, exclude_vertex, snap)
    if not cands:
        return None
    goal = header.pseudo.point - P.vertices[current]
    gn = float(np.linalg.norm(goal))
    goal = goal / gn if gn > 0 else goal

    def score(cand):
        d = cand[0]
        nn = float(np.linalg.norm(d))
        return float(d @ goal) / nn if nn > 0 else -2.0

    best = max(cands, key=score)
    if best[2] == "run":
        vtx, f = best[1], best[3]
        return vtx, "VertexHit", _VertexFront(vtx, f, current)
    _d, _v, _k, f, b, c, _q = best
    return _look_ahead(P, header, current, f, b, c, snap)


def _greedy_step(P, header, current: int):
    """Distance-greedy fallback toward the pseudo-destination; refuses to
    revisit a vertex so a stuck leg fails loudly instead of cycling."""
    goal = header.pseudo.point
    ranked = sorted(
        P.neighbors[current],
        key=lambda w: (float(np.linalg.norm(P.vertices[w] - goal)), w),
    )
    for w in ranked:
        if w not in header.fallback_seen:
            header.fallback_seen.add(w)
            return w
    raise NoExitFace(f"greedy fallback exhausted the neighbourhood of {current}")


def step(current: int, header: PacketHeader, system: RoutingSystem) -> tuple[int, str]:
    """One forwarding decision; returns the next vertex (always a mesh
    neighbour of `current`) and the case label for the trace."""
    P = system.P
    switched = False
    guard = 0
    while header.pseudo is None or (
        current != header.dest_vertex and current in header.pseudo.arrival
    ):
        _pseudo_switch(current, header, system)
        switched = True
        guard += 1
        if guard > 4:
            break
    if current == header.dest_vertex:
        raise RoutingError("step called at the destination")

    def finish(nxt: int, case: str) -> tuple[int, str]:
        # table consultations and the very first hop relabel plain forwards;
        # vertex hits and distance ties keep their own case
        if case == "General":
            if switched:
                case = "PseudoSwitch"
            elif header.hop_count == 0:
                case = "FirstHop"
        header.prev_vertex = current
        header.hop_count += 1
        return nxt, case

    neighbors = P.neighbors[current]
    if header.dest_vertex in neighbors:
        return finish(header.dest_vertex, "General")
    target = header.pseudo
    arrival_adjacent = [w for w in target.arrival if w in neighbors]
    if arrival_adjacent:
        if len(arrival_adjacent) == 1:
            return finish(arrival_adjacent[0], "General")
        best = min(
            arrival_adjacent,
            key=lambda w: (float(np.linalg.norm(P.vertices[w] - target.point)), w),
        )
        return finish(best, "General")

    if header.plane is None and not header.fallback:
        # degenerate leg (target collapses onto the source); greedy it
        header.fallback = True
        header.fallback_seen.add(current)
    snap = P.tol.snap(P.diameter())
    while not header.fallback:
        if header.front is None or (
            isinstance(header.front, _VertexFront) and header.front.vertex == current
        ):
            result = _start_trace(P, header, current, snap)
        elif isinstance(header.front, _VertexFront):
            vf: _VertexFront = header.front
            result = (vf.vertex, "VertexHit", vf)
        else:
            result = _trace_edge_front(P, header, current, snap)
        if result is not None:
            nxt, case, front = result
            header.front = front
            return finish(nxt, case)
        if header.reaim_count < 8:
            header.reaim_count += 1
            header.events.append(f"reaim@{current}")
            plane = Plane.through_points_orthogonal_to(
                P.vertices[current], target.point, header.gamma_normal
            )
            header.plane = plane
            header.sig = plane.signed_distance(P.vertices)
            header.front = None
            continue
        header.fallback = True
        header.fallback_seen.add(current)
        header.events.append(f"fallback@{current}")
    return finish(_greedy_step(P, header, current), "General")


def route(
    s: int,
    t: int,
    system: RoutingSystem,
    hop_multiplier: float = 4.0,
) -> RouteTrace:
    """Simulate local forwarding from s to t; every consecutive pair in the
    returned trace is an edge of the polytope."""
    P = system.P
    header = make_packet(s, t, system)
    limit = max(4, int(hop_multiplier * P.n))
    vertices = [s]
    cases: list[str] = []
    lengths: list[float] = []
    current = s
    while current != t:
        if len(lengths) >= limit:
            raise HopLimitExceeded(
                f"route {s}->{t} exceeded {limit} hops at vertex {current}"
            )
        nxt, case = step(current, header, system)
        if nxt not in P.neighbors[current]:
            raise RoutingError(f"non-local forward {current}->{nxt}")
        vertices.append(nxt)
        cases.append(case)
        lengths.append(P.edge_length(current, nxt))
        current = nxt
    return RouteTrace(
        source=s, dest=t, vertices=vertices, cases=cases, lengths=lengths,
        events=list(header.events), legs=list(header.legs),
    )
