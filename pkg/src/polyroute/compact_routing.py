"""Compact routing tables over the spanner graph: sqrt(N) landmarks, per-node
exact entries for targets closer than their own landmark distance, and full
next-hop maps at landmarks.

A packet for target t moves by three rules evaluated at the current node x:
exact entry for t if x is inside t's ball, full-map lookup if x is a
landmark, otherwise one hop toward t's home landmark. Ball membership is
closed under shortest-path prefixes toward t and under descent from t's home
landmark, so the walk never stalls and its length is at most
2*d(t, home(t)) + d(x, t) <= 3*d(x, t).
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

import numpy as np

from .geometry import Plane, Tolerance, DEFAULT_TOL
from .patching import PatchDecomposition
from .polytope import TriangulatedPolytope
from .spanner import SpannerGraph

__all__ = [
    "Disconnected",
    "NodeLabel",
    "LandmarkScheme",
    "MarkedVertexInfo",
    "tz_preprocess",
    "tz_next_hop",
    "tz_route_nodes",
    "prune_intra_face",
    "materialize_plane_entries",
]


class Disconnected(RuntimeError):
    pass


@dataclass(frozen=True)
class NodeLabel:
    node: int
    home: int
    patch: int
    cell: int

    def bit_length(self, num_nodes: int, num_landmarks: int,
                   num_patches: int, num_cells: int) -> int:
        def width(count: int) -> int:
            return max(1, math.ceil(math.log2(max(count, 2))))
        return (width(num_nodes) + width(num_landmarks)
                + width(num_patches) + width(num_cells))


@dataclass
class LandmarkScheme:
    landmarks: list[int]
    home: dict[int, int]
    dist_to_set: dict[int, float]
    exact_next: dict[int, dict[int, int]]
    to_landmark_next: dict[int, dict[int, int]]
    landmark_full_next: dict[int, dict[int, int]]
    labels: dict[int, NodeLabel] = field(default_factory=dict)
    pruned: bool = False

    def is_landmark(self, node: int) -> bool:
        return node in self.landmark_full_next

    def entry_count(self) -> int:
        total = sum(len(m) for m in self.exact_next.values())
        total += sum(len(m) for m in self.to_landmark_next.values())
        total += sum(len(m) for m in self.landmark_full_next.values())
        return total

    def entries_at(self, node: int) -> int:
        total = len(self.exact_next.get(node, ()))
        total += len(self.to_landmark_next.get(node, ()))
        total += len(self.landmark_full_next.get(node, ()))
        return total


@dataclass
class MarkedVertexInfo:
    steiner: int
    edge: tuple[int, int]
    lift: np.ndarray
    marked: tuple[int, int]


def tz_preprocess(graph: SpannerGraph, seed: int | None = None) -> LandmarkScheme:
    """Build the landmark scheme on a connected spanner graph.

    Landmarks default to the ceil(sqrt(N)) highest-degree nodes (ties by id);
    a seed switches to seeded random selection for experiments.
    """
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import dijkstra as csdijkstra

    nodes = [n.id for n in graph.nodes]
    N = len(nodes)
    if N == 0:
        return LandmarkScheme([], {}, {}, {}, {}, {})
    adj = graph.adjacency
    if N == 1:
        only = nodes[0]
        return LandmarkScheme([only], {only: only}, {only: 0.0},
                              {only: {}}, {only: {}}, {only: {}},
                              labels=_make_labels(graph, {only: only}))
    if not graph.connected:
        raise Disconnected("spanner graph is disconnected")

    k = math.ceil(math.sqrt(N))
    if seed is None:
        ranked = sorted(nodes, key=lambda u: (-len(adj.get(u, ())), u))
        landmarks = sorted(ranked[:k])
    else:
        rng = random.Random(seed)
        landmarks = sorted(rng.sample(nodes, k))

    uniq = {}
    for u, v, w, _f in graph.edges:
        uniq.setdefault((min(u, v), max(u, v)), w)
    rows = [u for (u, v) in uniq] + [v for (u, v) in uniq]
    cols = [v for (u, v) in uniq] + [u for (u, v) in uniq]
    wts = list(uniq.values()) * 2
    mat = csr_matrix((wts, (rows, cols)), shape=(N, N))
    dist, pred = csdijkstra(mat, directed=False, return_predecessors=True)
    if not np.isfinite(dist).all():
        raise Disconnected("spanner graph is disconnected")

    lm = np.asarray(landmarks)
    d_lm = dist[lm]  # (k, N)
    set_dist = d_lm.min(axis=0)
    home_idx = d_lm.argmin(axis=0)  # ties fall to the smallest landmark id
    home = {u: int(lm[home_idx[u]]) for u in nodes}

    to_landmark_next: dict[int, dict[int, int]] = {u: {} for u in nodes}
    landmark_full_next: dict[int, dict[int, int]] = {}
    for ell in landmarks:
        prow = pred[ell]
        order = np.argsort(dist[ell], kind="stable")
        first = np.full(N, -1, dtype=np.int64)
        first[ell] = ell
        for u in order:
            u = int(u)
            if u == ell:
                continue
            p = int(prow[u])
            to_landmark_next[u][ell] = p
            first[u] = u if p == ell else first[p]
        landmark_full_next[ell] = {u: int(first[u]) for u in nodes if u != ell}

    # balls: x holds an exact entry for t iff d(x, t) < d(A, t); the next hop
    # is x's predecessor in the tree rooted at t
    exact_next: dict[int, dict[int, int]] = {u: {} for u in nodes}
    inside = dist < set_dist[None, :]
    np.fill_diagonal(inside, False)
    xs, ts = np.nonzero(inside)
    for x, t in zip(xs.tolist(), ts.tolist()):
        exact_next[x][t] = int(pred[t, x])

    return LandmarkScheme(
        landmarks=landmarks,
        home=home,
        dist_to_set={u: float(set_dist[u]) for u in nodes},
        exact_next=exact_next,
        to_landmark_next=to_landmark_next,
        landmark_full_next=landmark_full_next,
        labels=_make_labels(graph, home),
    )


def _make_labels(graph: SpannerGraph, home: dict[int, int]) -> dict[int, NodeLabel]:
    labels = {}
    for n in graph.nodes:
        labels[n.id] = NodeLabel(node=n.id, home=home[n.id],
                                 patch=min(n.patches), cell=-1)
    return labels


def tz_next_hop(scheme: LandmarkScheme, current: int, target: int) -> int:
    """Stateless next-hop rule; target must carry its home landmark in
    scheme.labels (it does for every node of the preprocessed graph)."""
    if target == current:
        return current
    ex = scheme.exact_next.get(current)
    if ex is not None and target in ex:
        return ex[target]
    home = scheme.labels[target].home
    if current == home:
        # descent from the target's home landmark: every subsequent node is
        # strictly closer to the target than its landmark distance, so exact
        # entries take over after this hop
        full = scheme.landmark_full_next[current]
        if target in full:
            return full[target]
        raise RuntimeError(
            f"entry for {target} pruned at its home landmark {current}; "
            "intra-face pairs must be routed by plane entries"
        )
    hop = scheme.to_landmark_next.get(current, {}).get(home)
    if hop is None:
        raise RuntimeError(
            f"no routing entry at node {current} for target {target}"
        )
    return hop


def tz_route_nodes(scheme: LandmarkScheme, s: int, t: int,
                   max_hops: int | None = None) -> list[int]:
    """Simulate the scheme walk from node s to node t on the graph."""
    if max_hops is None:
        max_hops = 4 * max(len(scheme.home), 1)
    walk = [s]
    cur = s
    while cur != t:
        if len(walk) > max_hops:
            raise RuntimeError(f"scheme walk exceeded {max_hops} hops")
        cur = tz_next_hop(scheme, cur, t)
        walk.append(cur)
    return walk


def prune_intra_face(scheme: LandmarkScheme, graph: SpannerGraph) -> LandmarkScheme:
    """Drop table entries whose source and target nodes share a sketch face;
    those pairs are routed by direct plane entries on the polytope instead."""
    patch_sets = {n.id: set(n.patches) for n in graph.nodes}

    def share(u: int, v: int) -> bool:
        return bool(patch_sets[u] & patch_sets[v])

    for x, table in scheme.exact_next.items():
        for t in [t for t in table if share(x, t)]:
            del table[t]
    for ell, table in scheme.landmark_full_next.items():
        for t in [t for t in table if share(ell, t)]:
            del table[t]
    scheme.pruned = True
    return scheme


def materialize_plane_entries(
    scheme: LandmarkScheme,
    graph: SpannerGraph,
    decomp: PatchDecomposition,
    P: TriangulatedPolytope,
    tol: Tolerance = DEFAULT_TOL,
) -> tuple[dict[tuple[int, int], tuple[int, Plane | None]], dict[int, MarkedVertexInfo]]:
    """For every next-hop pair stored anywhere in the scheme, precompute the
    guiding plane: orthogonal to the sketch face carrying the spanner edge
    and containing both endpoints' lifted points. Also collect the marked
    vertices serving each Steiner node."""
    edge_face: dict[tuple[int, int], int] = {}
    for (u, v, _w, f) in graph.edges:
        edge_face.setdefault((min(u, v), max(u, v)), f)
    snap = tol.snap(P.diameter())

    used: set[tuple[int, int]] = set()
    for x, table in scheme.exact_next.items():
        used.update((x, w) for w in table.values())
    for x, table in scheme.to_landmark_next.items():
        used.update((x, w) for w in table.values())
    for ell, table in scheme.landmark_full_next.items():
        used.update((ell, w) for w in table.values())

    planes: dict[tuple[int, int], tuple[int, Plane | None]] = {}
    for x, w in used:
        key = (min(x, w), max(x, w))
        if key in planes:
            continue
        face = edge_face.get(key)
        if face is None:
            # next hops are graph neighbours; every pair has a face
            common = set(graph.nodes[x].patches) & set(graph.nodes[w].patches)
            face = min(common) if common else min(graph.nodes[x].patches)
        a = graph.nodes[key[0]].lift3d
        b = graph.nodes[key[1]].lift3d
        if float(np.linalg.norm(b - a)) <= snap:
            planes[key] = (face, None)
            continue
        gamma = decomp.patches[face].gamma
        planes[key] = (face, Plane.through_points_orthogonal_to(a, b, gamma.normal))

    marked: dict[int, MarkedVertexInfo] = {}
    for n in graph.nodes:
        if n.kind == "steiner":
            marked[n.id] = MarkedVertexInfo(
                steiner=n.id, edge=n.edge_of_p, lift=n.lift3d, marked=n.marked,
            )
    return planes, marked
