"""Per-vertex routing tables on the polytope and their serialization.

Table kinds: a non-representative vertex holds exactly one entry (the plane
toward its representative); a representative holds one plane entry per cell
member and per same-patch representative, plus its compact-routing tables
over the spanner (stored once in the shared scheme and attributed to the
representative, or to both marked vertices for a Steiner node); marked
vertices hold relay entries for the Steiner nodes on their edge.

The .prt byte format is self-contained (mesh included): magic PRT1, version,
little-endian length-prefixed sections, CRC32 trailer. Planes are serialized
as an anchor plus two direction points.
"""
from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .geometry import Plane, Tolerance, DEFAULT_TOL, plane_frame
from .polytope import TriangulatedPolytope, PolytopeMetrics, compute_theta_m, from_arrays
from .patching import (
    Patch,
    PatchDecomposition,
    Sketch,
    build_sketch,
    compute_patches,
    project_patch,
)
from .sampling import RepresentativeAssignment, build_grid, select_representatives
from .spanner import DisconnectedSpanner, SpannerGraph, SpannerNode, build_spanner
from .compact_routing import (
    LandmarkScheme,
    MarkedVertexInfo,
    NodeLabel,
    materialize_plane_entries,
    prune_intra_face,
    tz_preprocess,
)

__all__ = [
    "SerializationError",
    "FormatVersionMismatch",
    "ChecksumMismatch",
    "TruncatedStream",
    "EntryKind",
    "RoutingEntry",
    "RoutingTable",
    "RoutingSystem",
    "build_tables",
    "preprocess_mesh",
    "serialize",
    "deserialize",
    "to_json",
]

MAGIC = b"PRT1"
VERSION = 1


class SerializationError(ValueError):
    pass


class FormatVersionMismatch(SerializationError):
    pass


class ChecksumMismatch(SerializationError):
    pass


class TruncatedStream(SerializationError):
    pass


class EntryKind(Enum):
    TO_MY_REP = 0
    REP_TO_MEMBER = 1
    REP_TO_REP_SAME_PATCH = 2
    GLOBAL = 3
    MARKED_RELAY = 4


@dataclass
class RoutingEntry:
    kind: EntryKind
    dest: int
    plane: Plane | None
    next_pseudo: int | None


@dataclass
class RoutingTable:
    vertex: int
    entries: dict = field(default_factory=dict)
    neighbour_map: dict = field(default_factory=dict)
    opposite_face_map: dict = field(default_factory=dict)
    g_node: int = -1

    def local_entry_count(self) -> int:
        return len(self.entries)


@dataclass
class RoutingSystem:
    """Everything the routing phase needs, in one serializable bundle."""

    P: TriangulatedPolytope | None = None
    eps: float = 0.0
    delta: float = 0.0
    metrics: PolytopeMetrics | None = None
    decomp: PatchDecomposition | None = None
    assignment: RepresentativeAssignment | None = None
    graph: SpannerGraph | None = None
    scheme: LandmarkScheme | None = None
    gedge_planes: dict = field(default_factory=dict)
    marked_info: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)

    def is_empty(self) -> bool:
        return self.P is None

    def rep_of(self, v: int) -> int:
        return self.assignment.rep_of[v]

    def label_of_vertex(self, t: int) -> tuple[int, NodeLabel]:
        rep = self.assignment.rep_of[t]
        node = self.graph.node_of_vertex[rep]
        return t, self.scheme.labels[node]

    def patch_gamma(self, pid: int) -> Plane:
        return self.decomp.patches[pid].gamma

    def total_entries(self) -> int:
        """Entry count for the amortized-size law: local plane entries plus
        scheme entries, Steiner-node tables counted at both marked vertices."""
        total = sum(t.local_entry_count() for t in self.tables.values())
        if self.scheme is None or self.graph is None:
            return total
        for node in self.graph.nodes:
            copies = 1 if node.kind == "rep" else 2
            total += copies * self.scheme.entries_at(node.id)
        return total

    def summary(self) -> dict:
        g = self.graph
        return {
            "n": self.P.n,
            "faces": self.P.num_faces,
            "epsilon": self.eps,
            "delta": self.delta,
            "patches": self.decomp.count,
            "representatives": len(self.assignment.reps),
            "spanner_nodes": g.num_nodes,
            "spanner_edges": len(g.edges),
            "landmarks": len(self.scheme.landmarks),
            "table_entries": self.total_entries(),
            "theta_m": self.metrics.theta_m,
        }


def build_tables(
    P: TriangulatedPolytope,
    decomp: PatchDecomposition,
    assignment: RepresentativeAssignment,
    graph: SpannerGraph,
    marked_info: dict[int, MarkedVertexInfo],
    tol: Tolerance = DEFAULT_TOL,
) -> dict[int, RoutingTable]:
    marked_map: dict[int, list[int]] = {}
    for info in marked_info.values():
        for x in sorted(set(info.marked)):
            marked_map.setdefault(x, []).append(info.steiner)

    tables: dict[int, RoutingTable] = {}
    for v in range(P.n):
        owner = int(decomp.owner_of_vertex[v])
        gamma = decomp.patches[owner].gamma
        entries: dict = {}
        r = assignment.rep_of[v]
        if r != v:
            entries[("v", r)] = RoutingEntry(
                EntryKind.TO_MY_REP, r,
                Plane.through_points_orthogonal_to(P.vertices[v], P.vertices[r], gamma.normal),
                r,
            )
        else:
            for m in assignment.members.get(v, ()):
                if m == v:
                    continue
                entries[("v", m)] = RoutingEntry(
                    EntryKind.REP_TO_MEMBER, m,
                    Plane.through_points_orthogonal_to(P.vertices[v], P.vertices[m], gamma.normal),
                    m,
                )
            for r2 in assignment.patch_reps.get(owner, ()):
                if r2 == v:
                    continue
                entries[("v", r2)] = RoutingEntry(
                    EntryKind.REP_TO_REP_SAME_PATCH, r2,
                    Plane.through_points_orthogonal_to(P.vertices[v], P.vertices[r2], gamma.normal),
                    r2,
                )
        for s in marked_map.get(v, ()):
            entries[("s", s)] = RoutingEntry(EntryKind.MARKED_RELAY, s, None, None)

        fan = P.vertex_fan[v]
        opposite = {}
        for fi in fan:
            k = int(np.where(P.faces[fi] == v)[0][0])
            opposite[fi] = int(P.opposite_face[fi, k])
        tables[v] = RoutingTable(
            vertex=v,
            entries=entries,
            neighbour_map={w: graph.node_of_vertex.get(w, -1) for w in P.neighbors[v]},
            opposite_face_map=opposite,
            g_node=graph.node_of_vertex.get(v, -1),
        )
    return tables


def preprocess_mesh(
    P: TriangulatedPolytope,
    eps: float,
    delta: float | None = None,
    landmark_seed: int | None = None,
    tol: Tolerance = DEFAULT_TOL,
) -> RoutingSystem:
    """Run the full preprocessing pipeline and return the routing system."""
    if not (0.0 < eps < 1.0):
        raise ValueError("eps must lie in (0, 1)")
    if delta is None:
        delta = eps
    metrics = compute_theta_m(P)
    decomp = compute_patches(P, delta)
    sketch = build_sketch(P, decomp, tol=tol)
    projections = {p.id: project_patch(P, p) for p in decomp.patches}
    grids = {pid: build_grid(proj, eps) for pid, proj in projections.items()}
    assignment = select_representatives(grids, projections, decomp)
    graph = build_spanner(P, decomp, sketch, assignment, eps, tol)
    if not graph.connected:
        hint = (
            "larger" if decomp.count * 2 > P.n else "smaller"
        )  # many rep-less sketch faces cannot relay; rebalance patches vs n
        raise DisconnectedSpanner(
            f"global spanner is disconnected ({decomp.count} patches over "
            f"{P.n} vertices); retry with a {hint} epsilon"
        )
    scheme = tz_preprocess(graph, seed=landmark_seed)
    for n in graph.nodes:
        if n.kind == "rep":
            pid, cell = assignment.cell_of[n.vertex]
            scheme.labels[n.id] = NodeLabel(n.id, scheme.home[n.id], pid, cell)
    scheme = prune_intra_face(scheme, graph)
    gedge_planes, marked_info = materialize_plane_entries(scheme, graph, decomp, P, tol)
    tables = build_tables(P, decomp, assignment, graph, marked_info, tol)
    return RoutingSystem(
        P=P, eps=eps, delta=delta, metrics=metrics, decomp=decomp,
        assignment=assignment, graph=graph, scheme=scheme,
        gedge_planes=gedge_planes, marked_info=marked_info, tables=tables,
    )


# ---------------------------------------------------------------------------
# binary serialization

_SEC_META = 1
_SEC_MESH = 2
_SEC_PATCHES = 3
_SEC_ASSIGN = 4
_SEC_NODES = 5
_SEC_EDGES = 6
_SEC_SCHEME = 7
_SEC_PLANES = 8
_SEC_VTABLES = 9


class _Writer:
    def __init__(self):
        self.buf = bytearray()

    def u8(self, x): self.buf += struct.pack("<B", x)
    def u16(self, x): self.buf += struct.pack("<H", x)
    def u32(self, x): self.buf += struct.pack("<I", x)
    def i64(self, x): self.buf += struct.pack("<q", x)
    def f64(self, x): self.buf += struct.pack("<d", float(x))

    def f64s(self, arr):
        self.buf += np.ascontiguousarray(arr, dtype="<f8").tobytes()

    def i64s(self, arr):
        self.buf += np.ascontiguousarray(arr, dtype="<i8").tobytes()

    def plane(self, p: Plane | None):
        if p is None:
            self.u8(0)
            return
        self.u8(1)
        self.f64s(p.anchor)
        self.f64s(p.anchor + p.dir1)
        self.f64s(p.anchor + p.dir2)


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise TruncatedStream("stream ended mid-record")
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def u8(self): return struct.unpack("<B", self.take(1))[0]
    def u16(self): return struct.unpack("<H", self.take(2))[0]
    def u32(self): return struct.unpack("<I", self.take(4))[0]
    def i64(self): return struct.unpack("<q", self.take(8))[0]
    def f64(self): return struct.unpack("<d", self.take(8))[0]

    def f64s(self, count) -> np.ndarray:
        return np.frombuffer(self.take(8 * count), dtype="<f8").astype(np.float64)

    def i64s(self, count) -> np.ndarray:
        return np.frombuffer(self.take(8 * count), dtype="<i8").astype(np.int64)

    def plane(self) -> Plane | None:
        if self.u8() == 0:
            return None
        anchor = self.f64s(3)
        p1 = self.f64s(3)
        p2 = self.f64s(3)
        return Plane(anchor, p1 - anchor, p2 - anchor)


def serialize(system: RoutingSystem) -> bytes:
    """Serialize to the .prt byte format; an empty system is a bare header."""
    sections: list[tuple[int, bytes]] = []
    if not system.is_empty():
        sections.append((_SEC_META, _write_meta(system)))
        sections.append((_SEC_MESH, _write_mesh(system.P)))
        sections.append((_SEC_PATCHES, _write_patches(system.decomp)))
        sections.append((_SEC_ASSIGN, _write_assignment(system.assignment, system.P.n)))
        sections.append((_SEC_NODES, _write_nodes(system.graph)))
        sections.append((_SEC_EDGES, _write_edges(system.graph)))
        sections.append((_SEC_SCHEME, _write_scheme(system.scheme)))
        sections.append((_SEC_PLANES, _write_planes(system.gedge_planes)))
        sections.append((_SEC_VTABLES, _write_vtables(system.tables, system.P.n)))
    head = _Writer()
    head.buf += MAGIC
    head.u16(VERSION)
    head.u16(0)
    head.u32(len(sections))
    for tag, payload in sections:
        head.u8(tag)
        head.buf += struct.pack("<Q", len(payload))
        head.buf += payload
    crc = zlib.crc32(bytes(head.buf)) & 0xFFFFFFFF
    head.u32(crc)
    return bytes(head.buf)


def deserialize(data: bytes) -> RoutingSystem:
    if len(data) < 16:
        raise TruncatedStream("shorter than the fixed header")
    body, trailer = data[:-4], data[-4:]
    if struct.unpack("<I", trailer)[0] != (zlib.crc32(body) & 0xFFFFFFFF):
        raise ChecksumMismatch("CRC32 trailer does not match")
    r = _Reader(body)
    if r.take(4) != MAGIC:
        raise FormatVersionMismatch("bad magic")
    version = r.u16()
    if version != VERSION:
        raise FormatVersionMismatch(f"unsupported version {version}")
    r.u16()
    nsec = r.u32()
    payloads: dict[int, _Reader] = {}
    for _ in range(nsec):
        tag = r.u8()
        (length,) = struct.unpack("<Q", r.take(8))
        payloads[tag] = _Reader(r.take(length))
    if not payloads:
        return RoutingSystem()
    return _reassemble(payloads)


def _write_meta(system: RoutingSystem) -> bytes:
    w = _Writer()
    w.f64(system.eps)
    w.f64(system.delta)
    return bytes(w.buf)


def _write_mesh(P: TriangulatedPolytope) -> bytes:
    w = _Writer()
    w.u32(P.n)
    w.u32(P.num_faces)
    w.f64s(P.vertices)
    w.i64s(P.faces)
    return bytes(w.buf)


def _write_patches(decomp: PatchDecomposition) -> bytes:
    w = _Writer()
    w.f64(decomp.delta)
    w.u32(decomp.count)
    for p in decomp.patches:
        w.u32(p.rep_face)
        w.plane(p.gamma)
        w.f64(p.normal_cone_width)
    w.i64s(decomp.patch_of_face)
    w.i64s(decomp.owner_of_vertex)
    return bytes(w.buf)


def _write_assignment(a: RepresentativeAssignment, n: int) -> bytes:
    w = _Writer()
    w.u32(n)
    rep_arr = np.array([a.rep_of[v] for v in range(n)], dtype=np.int64)
    cell_arr = np.array([a.cell_of[v][1] for v in range(n)], dtype=np.int64)
    w.i64s(rep_arr)
    w.i64s(cell_arr)
    w.u32(len(a.reps))
    for r in a.reps:
        w.i64(r)
        w.f64s(a.rep_point[r])
    return bytes(w.buf)


def _write_nodes(g: SpannerGraph) -> bytes:
    w = _Writer()
    w.u32(len(g.nodes))
    for nd in g.nodes:
        w.u8(0 if nd.kind == "rep" else 1)
        w.i64(nd.vertex if nd.vertex is not None else -1)
        w.u32(nd.patches[0])
        w.i64(nd.patches[1] if len(nd.patches) > 1 else -1)
        w.f64s(nd.point3d)
        w.f64s(nd.lift3d)
        e = nd.edge_of_p or (-1, -1)
        w.i64(e[0]); w.i64(e[1])
        m = nd.marked or (-1, -1)
        w.i64(m[0]); w.i64(m[1])
    return bytes(w.buf)


def _write_edges(g: SpannerGraph) -> bytes:
    w = _Writer()
    w.u32(len(g.edges))
    for u, v, wt, f in g.edges:
        w.u32(u); w.u32(v); w.f64(wt); w.u32(f)
    return bytes(w.buf)


def _write_intmap(w: _Writer, m: dict[int, int]) -> None:
    w.u32(len(m))
    for k in sorted(m):
        w.i64(k)
        w.i64(m[k])


def _write_scheme(s: LandmarkScheme) -> bytes:
    w = _Writer()
    w.u8(1 if s.pruned else 0)
    w.u32(len(s.landmarks))
    for ell in s.landmarks:
        w.i64(ell)
    w.u32(len(s.home))
    for u in sorted(s.home):
        w.i64(u)
        w.i64(s.home[u])
        w.f64(s.dist_to_set[u])
    for group in (s.exact_next, s.to_landmark_next, s.landmark_full_next):
        w.u32(len(group))
        for u in sorted(group):
            w.i64(u)
            _write_intmap(w, group[u])
    w.u32(len(s.labels))
    for u in sorted(s.labels):
        lb = s.labels[u]
        w.i64(u); w.i64(lb.node); w.i64(lb.home); w.i64(lb.patch); w.i64(lb.cell)
    return bytes(w.buf)


def _write_planes(planes: dict) -> bytes:
    w = _Writer()
    w.u32(len(planes))
    for (u, v) in sorted(planes):
        face, plane = planes[(u, v)]
        w.u32(u); w.u32(v); w.i64(face)
        w.plane(plane)
    return bytes(w.buf)


def _write_vtables(tables: dict[int, RoutingTable], n: int) -> bytes:
    w = _Writer()
    w.u32(n)
    for v in range(n):
        t = tables[v]
        w.i64(t.g_node)
        w.u32(len(t.entries))
        for key in sorted(t.entries, key=lambda k: (k[0], k[1])):
            e = t.entries[key]
            w.u8(e.kind.value)
            w.i64(e.dest)
            w.plane(e.plane)
            w.i64(e.next_pseudo if e.next_pseudo is not None else -1)
        _write_intmap(w, t.neighbour_map)
        _write_intmap(w, t.opposite_face_map)
    return bytes(w.buf)


def _read_intmap(r: _Reader) -> dict[int, int]:
    return {r.i64(): r.i64() for _ in range(r.u32())}


def _reassemble(payloads: dict[int, _Reader]) -> RoutingSystem:
    for tag in (_SEC_META, _SEC_MESH, _SEC_PATCHES, _SEC_ASSIGN, _SEC_NODES,
                _SEC_EDGES, _SEC_SCHEME, _SEC_PLANES, _SEC_VTABLES):
        if tag not in payloads:
            raise TruncatedStream(f"missing section {tag}")
    r = payloads[_SEC_META]
    eps = r.f64()
    delta = r.f64()

    r = payloads[_SEC_MESH]
    n = r.u32()
    nf = r.u32()
    verts = r.f64s(3 * n).reshape(n, 3)
    faces = r.i64s(3 * nf).reshape(nf, 3)
    P = from_arrays(verts, faces)

    r = payloads[_SEC_PATCHES]
    pdelta = r.f64()
    pcount = r.u32()
    patches = []
    for pid in range(pcount):
        rep_face = r.u32()
        gamma = r.plane()
        width = r.f64()
        origin, u, vv = plane_frame(gamma)
        patches.append(Patch(
            id=pid, faces=[], rep_face=rep_face, gamma=gamma, vertices=set(),
            frame_origin=origin, frame_u=u, frame_v=vv, normal_cone_width=width,
        ))
    patch_of_face = r.i64s(nf)
    owner = r.i64s(n)
    for fi, pid in enumerate(patch_of_face):
        patches[pid].faces.append(fi)
        patches[pid].vertices.update(int(x) for x in faces[fi])
    decomp = PatchDecomposition(patches, patch_of_face, owner, pdelta)

    r = payloads[_SEC_ASSIGN]
    an = r.u32()
    rep_arr = r.i64s(an)
    cell_arr = r.i64s(an)
    nreps = r.u32()
    reps = []
    rep_point = {}
    for _ in range(nreps):
        rv = r.i64()
        reps.append(rv)
        rep_point[rv] = r.f64s(2)
    members: dict[int, list[int]] = {}
    for v in range(an):
        members.setdefault(int(rep_arr[v]), []).append(v)
    patch_reps: dict[int, list[int]] = {}
    for rv in reps:
        patch_reps.setdefault(int(owner[rv]), []).append(rv)
    assignment = RepresentativeAssignment(
        reps=reps,
        rep_of={v: int(rep_arr[v]) for v in range(an)},
        cell_of={v: (int(owner[v]), int(cell_arr[v])) for v in range(an)},
        rep_point=rep_point,
        members=members,
        patch_reps=patch_reps,
    )

    r = payloads[_SEC_NODES]
    ncount = r.u32()
    nodes = []
    for nid in range(ncount):
        kind = "rep" if r.u8() == 0 else "steiner"
        vertex = r.i64()
        pa = r.u32()
        pb = r.i64()
        point3d = r.f64s(3)
        lift3d = r.f64s(3)
        eu, ev = r.i64(), r.i64()
        mx, my = r.i64(), r.i64()
        patches_t = (pa,) if pb < 0 else (pa, int(pb))
        nodes.append(SpannerNode(
            id=nid, kind=kind, patches=patches_t,
            pos2d={pid: decomp.patches[pid].to_2d(point3d) for pid in patches_t},
            point3d=point3d, lift3d=lift3d,
            vertex=None if vertex < 0 else int(vertex),
            edge_of_p=None if eu < 0 else (int(eu), int(ev)),
            marked=None if mx < 0 else (int(mx), int(my)),
        ))

    r = payloads[_SEC_EDGES]
    ecount = r.u32()
    edges = [(r.u32(), r.u32(), r.f64(), r.u32()) for _ in range(ecount)]
    per_face: dict[int, list[int]] = {}
    for nd in nodes:
        for pid in nd.patches:
            per_face.setdefault(pid, []).append(nd.id)
    graph = SpannerGraph(
        nodes=nodes, edges=edges, per_face_nodes=per_face,
        node_of_vertex={nd.vertex: nd.id for nd in nodes if nd.kind == "rep"},
    )
    graph.build_adjacency()

    r = payloads[_SEC_SCHEME]
    pruned = r.u8() == 1
    landmarks = [r.i64() for _ in range(r.u32())]
    home = {}
    dist_to_set = {}
    for _ in range(r.u32()):
        u = r.i64()
        home[u] = r.i64()
        dist_to_set[u] = r.f64()
    groups = []
    for _ in range(3):
        group = {}
        for _j in range(r.u32()):
            u = r.i64()
            group[u] = _read_intmap(r)
        groups.append(group)
    labels = {}
    for _ in range(r.u32()):
        u = r.i64()
        labels[u] = NodeLabel(r.i64(), r.i64(), r.i64(), r.i64())
    scheme = LandmarkScheme(
        landmarks=landmarks, home=home, dist_to_set=dist_to_set,
        exact_next=groups[0], to_landmark_next=groups[1],
        landmark_full_next=groups[2], labels=labels, pruned=pruned,
    )

    r = payloads[_SEC_PLANES]
    gedge_planes = {}
    for _ in range(r.u32()):
        u, v = r.u32(), r.u32()
        face = r.i64()
        gedge_planes[(u, v)] = (int(face), r.plane())

    r = payloads[_SEC_VTABLES]
    tn = r.u32()
    tables = {}
    for v in range(tn):
        g_node = r.i64()
        entries = {}
        for _ in range(r.u32()):
            kind = EntryKind(r.u8())
            dest = r.i64()
            plane = r.plane()
            nxt = r.i64()
            key = ("s", dest) if kind is EntryKind.MARKED_RELAY else ("v", dest)
            entries[key] = RoutingEntry(kind, dest, plane, None if nxt < 0 else nxt)
        neighbour_map = _read_intmap(r)
        opposite = _read_intmap(r)
        tables[v] = RoutingTable(v, entries, neighbour_map, opposite, g_node)

    marked_info = {
        nd.id: MarkedVertexInfo(nd.id, nd.edge_of_p, nd.lift3d, nd.marked)
        for nd in nodes if nd.kind == "steiner"
    }
    metrics = compute_theta_m(P)
    graph.connected = True
    return RoutingSystem(
        P=P, eps=eps, delta=delta, metrics=metrics, decomp=decomp,
        assignment=assignment, graph=graph, scheme=scheme,
        gedge_planes=gedge_planes, marked_info=marked_info, tables=tables,
    )


def to_json(system: RoutingSystem) -> str:
    """Human-readable mirror of the binary format, for debugging."""
    if system.is_empty():
        return json.dumps({"empty": True})
    doc = {
        "epsilon": system.eps,
        "delta": system.delta,
        "mesh": {
            "vertices": system.P.vertices.tolist(),
            "faces": system.P.faces.tolist(),
        },
        "patches": [
            {
                "id": p.id,
                "rep_face": p.rep_face,
                "anchor": p.gamma.anchor.tolist(),
                "normal": p.gamma.normal.tolist(),
            }
            for p in system.decomp.patches
        ],
        "representatives": system.assignment.reps,
        "nodes": [
            {
                "id": nd.id, "kind": nd.kind, "patches": list(nd.patches),
                "vertex": nd.vertex, "lift": nd.lift3d.tolist(),
                "marked": list(nd.marked) if nd.marked else None,
            }
            for nd in system.graph.nodes
        ],
        "edges": [[u, v, w, f] for (u, v, w, f) in system.graph.edges],
        "landmarks": system.scheme.landmarks,
        "tables": {
            str(v): {
                "g_node": t.g_node,
                "entries": [
                    {
                        "kind": e.kind.name,
                        "dest": e.dest,
                        "next": e.next_pseudo,
                        "plane": None if e.plane is None else {
                            "anchor": e.plane.anchor.tolist(),
                            "p1": (e.plane.anchor + e.plane.dir1).tolist(),
                            "p2": (e.plane.anchor + e.plane.dir2).tolist(),
                        },
                    }
                    for e in t.entries.values()
                ],
            }
            for v, t in sorted(system.tables.items())
        },
    }
    return json.dumps(doc, indent=2)
