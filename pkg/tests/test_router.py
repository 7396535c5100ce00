import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polyroute.cli import generate_mesh
from polyroute.geometry import Plane
from polyroute.oracle import build_subdivision_graph, oracle_slack
from polyroute.router import (
    HopLimitExceeded,
    PacketHeader,
    Target,
    TrivialRoute,
    UnknownVertex,
    make_packet,
    route,
    step,
)
from polyroute.tables import preprocess_mesh

from conftest import random_pairs


def _vid(mesh, point):
    return int(np.argmin(np.linalg.norm(mesh.vertices - np.asarray(point), axis=1)))


def test_make_packet_non_rep_targets_its_rep(sphere50_system):
    system = sphere50_system
    non_rep = next(v for v in range(system.P.n) if system.assignment.rep_of[v] != v)
    t = (non_rep + 7) % system.P.n
    header = make_packet(non_rep, t, system)
    assert header.pseudo.kind == "vertex"
    assert header.pseudo.vertex == system.assignment.rep_of[non_rep]


def test_make_packet_rep_to_member(sphere50_system):
    system = sphere50_system
    rep, members = next(
        (r, m) for r, m in system.assignment.members.items() if len(m) > 1
    )
    t = next(v for v in members if v != rep)
    header = make_packet(rep, t, system)
    assert header.pseudo.vertex == t


def test_make_packet_rejects_trivial(sphere50_system):
    with pytest.raises(TrivialRoute):
        make_packet(3, 3, sphere50_system)


def test_make_packet_rejects_unknown(sphere50_system):
    with pytest.raises(UnknownVertex):
        make_packet(0, 5000, sphere50_system)


def test_tetra_all_pairs_single_hop(tetra_system):
    for s, t in itertools.permutations(range(4), 2):
        trace = route(s, t, tetra_system)
        assert trace.vertices == [s, t]
        assert trace.total_length == pytest.approx(
            tetra_system.P.edge_length(s, t)
        )


def test_octa_antipodal_two_hops(octa_system):
    mesh = octa_system.P
    s = _vid(mesh, [1, 0, 0])
    t = _vid(mesh, [-1, 0, 0])
    trace = route(s, t, octa_system)
    assert trace.hops == 2
    assert trace.total_length == pytest.approx(2 * math.sqrt(2))


def _hand_header(system, t, plane, aim_point=None):
    _vid_, label = system.label_of_vertex(t)
    header = PacketHeader(dest_vertex=t, dest_label=label)
    header.switch_budget = 100
    point = system.P.vertices[t] if aim_point is None else np.asarray(aim_point, float)
    header.pseudo = Target(kind="vertex", point=point, arrival=(t,), vertex=t)
    header.plane = plane
    header.gamma_normal = plane.normal
    header.sig = plane.signed_distance(system.P.vertices)
    return header


def test_step_forwards_to_edge_of_continuing_crossing(octa_system):
    # the guiding plane exits the first face through the opposite edge and
    # crosses the far face's edge at p2's side, so p2 receives the packet
    mesh = octa_system.P
    p1 = _vid(mesh, [1, 0, 0])
    p2 = _vid(mesh, [0, 1, 0])
    t = _vid(mesh, [-1, 0, 0])
    n = np.array([0.1, 1.0, -0.6])
    n /= np.linalg.norm(n)
    plane = Plane.from_normal(mesh.vertices[p1], n)
    header = _hand_header(octa_system, t, plane)
    nxt, case = step(p1, header, octa_system)
    assert nxt == p2
    assert case == "FirstHop"


def test_step_tie_goes_to_predecessor(octa_system):
    # the curve hits the far vertex exactly and both detours are equal; the
    # packet falls to the predecessor of the current vertex in the exit face
    mesh = octa_system.P
    p1 = _vid(mesh, [1, 0, 0])
    t = _vid(mesh, [-1, 0, 0])
    n = np.array([0.0, 1.0, -1.0]) / math.sqrt(2)
    plane = Plane.from_normal(mesh.vertices[p1], n)
    up = _vid(mesh, [0, 1, 0])
    zp = _vid(mesh, [0, 0, 1])
    header = _hand_header(octa_system, t, plane, aim_point=[-0.2, 0.7, 0.7])
    nxt, case = step(p1, header, octa_system)
    assert case == "TieBreak"
    exit_face = next(
        fi for fi in mesh.vertex_fan[p1]
        if {up, zp} <= set(map(int, mesh.faces[fi]))
    )
    f = mesh.faces[exit_face]
    k = int(np.where(f == p1)[0][0])
    predecessor = int(f[(k + 2) % 3])
    assert nxt == predecessor


def test_locality_and_termination_random_hull():
    mesh = generate_mesh("sphere", 200, 2)
    system = preprocess_mesh(mesh, 0.35)
    for s, t in random_pairs(mesh.n, 300, seed=5):
        trace = route(s, t, system)
        assert trace.vertices[0] == s
        assert trace.vertices[-1] == t
        assert trace.hops <= 4 * mesh.n
        for a, b in zip(trace.vertices, trace.vertices[1:]):
            assert (min(a, b), max(a, b)) in mesh.edge_adjacency


def test_hop_limit_raises(sphere50_system):
    pairs = random_pairs(50, 100, seed=1)
    long_pair = None
    for s, t in pairs:
        if route(s, t, sphere50_system).hops > 4:
            long_pair = (s, t)
            break
    assert long_pair is not None
    with pytest.raises(HopLimitExceeded):
        route(*long_pair, sphere50_system, hop_multiplier=4.0 / 50.0)


def test_zigzag_leg_bound(sphere50_system):
    # per-leg length <= geodesic * (1+2*delta) * (1+mu) / sin(theta_m)
    system = sphere50_system
    mesh = system.P
    graph = build_subdivision_graph(mesh, 8)
    pairs = random_pairs(mesh.n, 60, seed=3)
    mu = oracle_slack(mesh, pairs, 8, base_graph=graph, sample=16)
    factor = (1 + 2 * system.delta) * (1 + mu) / math.sin(system.metrics.theta_m)
    checked = 0
    for s, t in pairs:
        trace = route(s, t, system)
        if trace.events:
            continue
        bounds = [leg["start_hop"] for leg in trace.legs] + [trace.hops]
        for li, leg in enumerate(trace.legs):
            if leg["kind"] != "vertex" or leg["target_vertex"] < 0:
                continue
            a = leg["source"]
            b = leg["target_vertex"]
            lo, hi = bounds[li], bounds[li + 1]
            seg = sum(trace.lengths[lo:hi])
            end = trace.vertices[hi]
            if end != b:  # leg cut short by a destination snap
                continue
            if seg == 0.0 or a == b:
                continue
            geo = graph.distance(a, b)
            assert seg <= factor * geo + 1e-9
            checked += 1
    assert checked > 20


def test_plane_adherence(sphere50_system):
    # vertices visited inside a leg belong to faces intersected by the plane
    system = sphere50_system
    mesh = system.P
    for s, t in random_pairs(mesh.n, 40, seed=9):
        trace = route(s, t, system)
        if trace.events:
            continue
        bounds = [leg["start_hop"] for leg in trace.legs] + [trace.hops]
        for li, leg in enumerate(trace.legs):
            a = leg["source"]
            target_pt = leg["target_point"]
            gamma = None
            lo, hi = bounds[li], bounds[li + 1]
            if np.linalg.norm(target_pt - mesh.vertices[a]) < 1e-12:
                continue
            owner = int(system.decomp.owner_of_vertex[a])
            plane = Plane.through_points_orthogonal_to(
                mesh.vertices[a], target_pt,
                system.patch_gamma(owner).normal,
            )
            sig = plane.signed_distance(mesh.vertices)
            for v in trace.vertices[lo:hi]:
                if v == trace.dest:
                    continue
                crossed = False
                for fi in mesh.vertex_fan[v]:
                    vals = sig[mesh.faces[fi]]
                    if vals.min() <= 1e-9 and vals.max() >= -1e-9:
                        crossed = True
                        break
                assert crossed


@settings(max_examples=500, deadline=None)
@given(
    pts=st.tuples(*[st.floats(-50, 50, allow_nan=False) for _ in range(9)]),
)
def test_triangle_detour_inequality(pts):
    # |AB| + |BC| <= |AC| / sin(B/2) for any triangle
    a = np.array(pts[0:3])
    b = np.array(pts[3:6])
    c = np.array(pts[6:9])
    ab = np.linalg.norm(a - b)
    bc = np.linalg.norm(b - c)
    ac = np.linalg.norm(a - c)
    if ab < 1e-6 or bc < 1e-6 or ac < 1e-6:
        return
    cosb = float((a - b) @ (c - b)) / (ab * bc)
    angle_b = math.acos(max(-1.0, min(1.0, cosb)))
    if angle_b < 1e-6:
        return
    assert ab + bc <= ac / math.sin(angle_b / 2.0) + 1e-9


def test_trace_csv_format(octa_system):
    trace = route(0, 1, octa_system)
    lines = trace.to_csv().strip().split("\n")
    assert lines[0] == "hop_index vertex_id case edge_length"
    assert lines[-1].startswith("summary ")
    for i, line in enumerate(lines[1:-1]):
        parts = line.split()
        assert int(parts[0]) == i
        assert parts[2] in {"FirstHop", "General", "VertexHit", "TieBreak", "PseudoSwitch"}
        assert float(parts[3]) > 0


def test_route_deterministic(sphere50_system):
    for s, t in random_pairs(50, 20, seed=4):
        t1 = route(s, t, sphere50_system)
        t2 = route(s, t, sphere50_system)
        assert t1.vertices == t2.vertices
        assert t1.cases == t2.cases
