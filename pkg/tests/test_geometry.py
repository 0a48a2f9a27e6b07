import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial import ConvexHull

from oracles import lowest_point, sampled_hausdorff, surface_points
from pivotplan import shapes
from pivotplan.config import GripperModel
from pivotplan.errors import DegenerateMesh, EmptyRange, NoGraspFound, ParseError
from pivotplan.geometry import Grasp, Pose, collision_free_angles, contact_candidates, convex_hull, \
    hausdorff_distance, load_mesh, parse_obj, sample_grasps, simplify_mesh, stable_placements, write_obj
from pivotplan.transforms import quat_to_matrix, random_quat

CUBE_OBJ = """\
v -0.5 -0.5 -0.5
v 0.5 -0.5 -0.5
v 0.5 0.5 -0.5
v -0.5 0.5 -0.5
v -0.5 -0.5 0.5
v 0.5 -0.5 0.5
v 0.5 0.5 0.5
v -0.5 0.5 0.5
f 1 3 2
f 1 4 3
f 5 6 7
f 5 7 8
f 1 2 6
f 1 6 5
f 3 4 8
f 3 8 7
f 2 3 7
f 2 7 6
f 4 1 5
f 4 5 8
"""


# ---------------------------------------------------------------------------
# mesh ingestion
# ---------------------------------------------------------------------------

def test_load_unit_cube(tmp_path):
    path = tmp_path / "cube.obj"
    path.write_text(CUBE_OBJ)
    m = load_mesh(path)
    assert len(m.vertices) == 8 and len(m.triangles) == 12
    assert np.allclose(m.com, 0.0, atol=1e-12)
    assert m.is_watertight()


def test_com_line_passes_through(tmp_path):
    tet = shapes.tetrahedron(10.0)
    tet.com = np.array([0.5, -0.25, 1.0])
    path = tmp_path / "tet.obj"
    write_obj(tet, path)
    assert np.allclose(load_mesh(path).com, [0.5, -0.25, 1.0])


def test_bad_vertex_index():
    text = CUBE_OBJ + "f 1 2 99\n"
    with pytest.raises(ParseError):
        parse_obj(text)


@pytest.mark.parametrize("text", ["v 1 2\nf 1 2 3\n", "v a b c\n", "q 1 2 3\n", "", "com 1 2\n"])
def test_malformed_records(text):
    with pytest.raises(ParseError):
        parse_obj(text)


def test_open_mesh_rejected():
    lines = CUBE_OBJ.splitlines()[:-2]
    with pytest.raises(DegenerateMesh):
        parse_obj("\n".join(lines))


def test_quads_and_duplicate_vertices_welded():
    text = CUBE_OBJ.split("f")[0] + "v 0.5 0.5 0.5\n" + "".join(
        "f " + " ".join(f.split()[1:]) + "\n" for f in CUBE_OBJ.splitlines() if f.startswith("f"))
    m = parse_obj(text)
    assert len(m.vertices) == 8


# ---------------------------------------------------------------------------
# hulls and Hausdorff distance
# ---------------------------------------------------------------------------

def test_hull_drops_interior_vertex():
    pts = np.vstack([shapes.cube(2.0).vertices, [[0.1, 0.2, -0.3]]])
    h = convex_hull(pts)
    assert len(h.vertices) == 8
    assert not np.any(np.all(np.isclose(h.vertices, [0.1, 0.2, -0.3]), axis=1))
    assert len(h.facets) == 6


def test_tetrahedron_hull_has_four_facets():
    assert len(convex_hull(shapes.tetrahedron(5.0)).facets) == 4


def test_coplanar_points_rejected():
    pts = np.random.default_rng(0).random((20, 3))
    pts[:, 2] = 0.0
    with pytest.raises(DegenerateMesh):
        convex_hull(pts)


def test_hull_contains_random_ball_points(rng):
    pts = rng.normal(size=(1000, 3))
    pts *= (rng.random(1000) ** (1 / 3) / np.linalg.norm(pts, axis=1))[:, None]
    h = convex_hull(pts)
    tol = 1e-6 * h.scale
    # every input point inside every facet half-space, checked directly
    assert np.all(pts @ h.normals.T - h.offsets <= tol)
    assert np.allclose(np.linalg.norm(h.normals, axis=1), 1.0, atol=1e-9)
    # the hull's vertex set agrees with qhull's
    assert len(h.vertices) == len(ConvexHull(pts).vertices)


def test_hausdorff_identity_and_translation():
    a = convex_hull(shapes.cube(1.0))
    assert hausdorff_distance(a, a) == 0.0
    b = convex_hull(shapes.cube(1.0).transformed(offset=(0.3, 0.0, 0.0)))
    assert hausdorff_distance(a, b) == pytest.approx(0.3, abs=1e-12)


def test_hausdorff_scaled_cube_matches_box_oracle(rng):
    a = convex_hull(shapes.cube(1.0))
    b = convex_hull(shapes.cube(1.1))
    exact = hausdorff_distance(a, b)
    assert exact == pytest.approx(0.05 * math.sqrt(3.0), rel=1e-9)
    # independent route: 10^5 surface samples of the larger cube, distance
    # to the axis-aligned unit cube by clipping
    pts = surface_points(b.vertices, b.triangles, 100_000, rng)
    sampled = np.linalg.norm(pts - np.clip(pts, -0.5, 0.5), axis=1).max()
    assert sampled <= exact + 1e-12
    assert exact == pytest.approx(sampled, rel=0.02)


def test_hausdorff_matches_sampling_oracle_on_simplified_sphere(rng):
    h = convex_hull(shapes.uv_sphere(50.0, 40, 26))
    s = simplify_mesh(h, 1.0)
    exact = hausdorff_distance(h, s)
    sampled = sampled_hausdorff(h.vertices, h.triangles, s.vertices, s.triangles, 2000, rng)
    assert exact == pytest.approx(sampled, rel=0.02)


# ---------------------------------------------------------------------------
# simplification
# ---------------------------------------------------------------------------

def test_zero_bound_returns_input():
    h = convex_hull(shapes.uv_sphere(10.0, 20, 12))
    assert simplify_mesh(h, 0.0) is h


def test_sphere_simplification_reduces_vertices():
    h = convex_hull(shapes.uv_sphere(50.0, 40, 26))
    assert len(h.triangles) >= 2000
    s = simplify_mesh(h, 0.02 * 50.0)
    assert len(s.vertices) < len(h.vertices)
    assert hausdorff_distance(h, s) <= 1.0


@pytest.mark.parametrize("bound", [0.1, 5.0, 100.0])
def test_tetrahedron_unchanged(bound):
    h = convex_hull(shapes.tetrahedron(20.0))
    assert len(simplify_mesh(h, bound).vertices) == 4


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.05, 5.0))
def test_simplification_contract_random_hulls(seed, bound):
    pts = np.random.default_rng(seed).normal(scale=20.0, size=(200, 3))
    h = convex_hull(pts)
    s = simplify_mesh(h, bound)
    assert len(s.vertices) <= len(h.vertices)
    assert hausdorff_distance(h, s) <= bound + 1e-9
    # the simplified hull is inside the original
    assert np.all(h.contains(s.vertices))


# ---------------------------------------------------------------------------
# contact candidates
# ---------------------------------------------------------------------------

def test_unique_lowest_vertex_singleton():
    h = convex_hull(shapes.tetrahedron(10.0))
    pose = Pose([0.9, 0.1, 0.3, 0.2], [0, 0, 0])
    z = h.vertices @ pose.matrix[2]
    assert contact_candidates(h, pose, 0.0) == [(int(np.argmin(z)), 0.0)]


def test_cube_face_down_gives_four_candidates():
    h = convex_hull(shapes.cube(10.0))
    cand = contact_candidates(h, Pose([1, 0, 0, 0], [0, 0, 5]), 0.0)
    assert sorted(h.vertices[i][2] for i, _ in cand) == [-5.0] * 4


@pytest.mark.parametrize("d_h", [0.5, 1.0, 2.0])
def test_true_contact_inside_candidate_balls(d_h, rng):
    pts = rng.normal(scale=25.0, size=(400, 3))
    h = convex_hull(pts)
    s = simplify_mesh(h, d_h)
    for _ in range(100):
        R = quat_to_matrix(random_quat(rng))
        pose = Pose.from_matrix(R, rng.normal(size=3))
        low = lowest_point(h.vertices, R, pose.position)
        cand = contact_candidates(s, pose, d_h)
        centers = s.vertices[[i for i, _ in cand]] @ R.T + pose.position
        assert np.min(np.linalg.norm(centers - low, axis=1) - d_h) <= 1e-9


# ---------------------------------------------------------------------------
# grasps
# ---------------------------------------------------------------------------

def test_cube_grasps_join_opposite_faces():
    m = shapes.cube(60.0)
    grasps = sample_grasps(m, 50, GripperModel())
    assert 1 <= len(grasps) <= 50
    for g in grasps:
        assert np.dot(g.n_left, g.n_right) == pytest.approx(-1.0)
        assert g.width == pytest.approx(60.0)
        # contacts on faces, away from edges
        assert np.sum(np.isclose(np.abs(g.p_left), 30.0)) == 1


def test_sphere_grasps_pass_through_center():
    m = shapes.uv_sphere(40.0, 40, 26)
    grasps = sample_grasps(m, 20, GripperModel(stroke=120.0))
    for g in grasps:
        # distance from the center to the grasp line
        d = np.linalg.norm(np.cross(-g.p_left, g.axis))
        assert d < 0.1 * 40.0
        assert np.degrees(np.arccos(np.clip(-g.n_left @ g.n_right, -1, 1))) <= 10.0 + 1e-9


def test_grasps_respect_stroke_and_trimming():
    gripper = GripperModel()
    m = shapes.l_block()
    grasps = sample_grasps(m, 50, gripper, trim_fraction=0.15)
    tol = 0.15 * m.scale
    for g in grasps:
        assert g.width <= gripper.stroke
    for i, g in enumerate(grasps):
        for h in grasps[:i]:
            same = max(np.linalg.norm(g.p_left - h.p_left), np.linalg.norm(g.p_right - h.p_right))
            swap = max(np.linalg.norm(g.p_left - h.p_right), np.linalg.norm(g.p_right - h.p_left))
            assert min(same, swap) > tol


def test_object_wider_than_stroke():
    with pytest.raises(NoGraspFound):
        sample_grasps(shapes.cube(200.0), 10, GripperModel())


# ---------------------------------------------------------------------------
# placements
# ---------------------------------------------------------------------------

def _com_over_facet(h, f, com, margin):
    """Direct check: project the COM onto facet f's plane and test the
    polygon in 2D with qhull."""
    n = h.normals[f]
    pts = h.vertices[h.facets[f]]
    u = pts[1] - pts[0]
    u /= np.linalg.norm(u)
    v = np.cross(n, u)
    p2 = np.c_[pts @ u, pts @ v]
    c2 = np.array([com @ u, com @ v])
    eq = ConvexHull(p2).equations
    return np.all(eq[:, :2] @ c2 + eq[:, 2] <= -margin)


def test_cube_and_tetrahedron_counts():
    assert len(stable_placements(convex_hull(shapes.cube(10.0)), np.zeros(3))) == 6
    tet = shapes.tetrahedron(30.0)
    assert len(stable_placements(convex_hull(tet), tet.com)) == 4


def test_offset_com_facets_match_direct_check():
    # a tall thin prism leaning to one side: its end facets cannot hold the
    # COM, the long sides can
    m = shapes.extrude([(0, 0), (20, 0), (60, 120), (40, 120)], 20.0)
    h = convex_hull(m)
    ps = stable_placements(h, m.com, margin=1.0)
    facets = {p.facet for p in ps}
    verdicts = [_com_over_facet(h, f, m.com, 1.0) for f in range(len(h.facets))]
    assert [f in facets for f in range(len(h.facets))] == verdicts
    assert any(verdicts) and not all(verdicts)
    ends = [f for f in range(len(h.facets)) if abs(h.normals[f][1]) > 0.99]
    assert ends and not facets & set(ends)


@pytest.mark.parametrize("name", ["l_block", "t_block", "wedge", "bottle", "star_prism"])
def test_placements_match_direct_check(name):
    m = getattr(shapes, name)()
    h = convex_hull(m)
    ps = stable_placements(h, m.com)
    assert ps
    for p in ps:
        R = quat_to_matrix(p.orientation)
        assert np.allclose(R @ h.normals[p.facet], [0, 0, -1], atol=1e-9)
        assert _com_over_facet(h, p.facet, m.com, 1.0 - 1e-9)


# ---------------------------------------------------------------------------
# collision-free angles
# ---------------------------------------------------------------------------

def _sweep_collisions(grasp, mesh, gripper, angles, n_samples=60_000, seed=0):
    """Collision flag per angle: dense surface samples tested against the
    uninflated gripper boxes placed by explicit frames."""
    pts = np.vstack([mesh.vertices, surface_points(mesh.vertices, mesh.triangles, n_samples,
                                                   np.random.default_rng(seed))])
    e0, e1 = grasp.reference_frame()
    x = grasp.axis
    out = []
    for phi in angles:
        z = math.cos(phi) * e0 + math.sin(phi) * e1
        y = np.cross(z, x)
        local = (pts - grasp.center) @ np.column_stack([x, y, z])
        hit = False
        for lo, hi in gripper.boxes(grasp.width):
            if np.any(np.all((local > lo) & (local < hi), axis=1)):
                hit = True
                break
        out.append(hit)
    return np.array(out)


def _inside(intervals, a):
    return any(iv.contains(a) for iv in intervals)


def test_small_cube_is_free_all_round():
    g = Grasp(0, [-30, 0, 0], [30, 0, 0], [-1, 0, 0], [1, 0, 0])
    iv = collision_free_angles(g, shapes.cube(60.0), GripperModel())
    assert len(iv) == 1 and iv[0].lo == -np.pi and iv[0].hi == np.pi


def test_protrusion_blocks_some_angles():
    post = shapes.extrude([(0, 0), (80, 0), (80, 20), (20, 20), (20, 120), (0, 120)], 30.0)
    g = Grasp(0, [30, 10, -15], [30, 10, 15], [0, 0, -1], [0, 0, 1])
    gripper = GripperModel()
    iv = collision_free_angles(g, post, gripper)
    angles = np.deg2rad(np.arange(-180, 180, 1.0))
    swept = _sweep_collisions(g, post, gripper, angles)
    claimed = np.array([_inside(iv, a) for a in angles])
    assert swept.any() and not swept.all()
    # sound: no returned angle collides in the sweep
    assert not np.any(claimed & swept)
    # not vacuous: most of the free sweep is returned
    assert claimed.sum() >= 0.8 * (~swept).sum()


def test_grasp_deep_in_notch_has_no_free_angle():
    comb = shapes.extrude([(-20, 0), (20, 0), (20, 60), (10, 60), (10, 10), (5, 10), (5, 60), (-5, 60),
                           (-5, 10), (-10, 10), (-10, 60), (-20, 60)], 30.0)
    g = Grasp(0, [-5, 35, 0], [5, 35, 0], [-1, 0, 0], [1, 0, 0])
    with pytest.raises(EmptyRange):
        collision_free_angles(g, comb, GripperModel())
