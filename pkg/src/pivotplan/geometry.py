"""Mesh ingestion and convex geometry for reorienting.

Shapes live in the object frame in millimeters.  Poses map object-frame
points into the world frame whose XY plane is the table.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull, QhullError, cKDTree

from .errors import DegenerateMesh, EmptyRange, NoGraspFound, ParseError
from .transforms import as_quat, perpendicular, quat_to_matrix, matrix_to_quat

TWO_PI = 2.0 * np.pi


# ---------------------------------------------------------------------------
# data types
# ---------------------------------------------------------------------------

@dataclass
class TriMesh:
    vertices: np.ndarray
    triangles: np.ndarray
    com: np.ndarray

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        self.triangles = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        self.com = np.asarray(self.com, dtype=float).reshape(3)
        if len(self.triangles) and self.triangles.max() >= len(self.vertices):
            raise ParseError("triangle index out of range")

    @property
    def scale(self):
        return float(np.linalg.norm(self.vertices.max(0) - self.vertices.min(0)))

    @property
    def corners(self):
        return self.vertices[self.triangles]

    @property
    def face_normals(self):
        c = self.corners
        n = np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0])
        return n / np.linalg.norm(n, axis=1, keepdims=True)

    @property
    def face_areas(self):
        c = self.corners
        return 0.5 * np.linalg.norm(np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0]), axis=1)

    def edge_faces(self):
        """Map each undirected edge (i, j), i < j, to the list of adjacent triangles."""
        out = {}
        for t, tri in enumerate(self.triangles):
            for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
                key = (a, b) if a < b else (b, a)
                out.setdefault(key, []).append(t)
        return out

    def is_watertight(self):
        return all(len(f) == 2 for f in self.edge_faces().values())

    def transformed(self, scale=1.0, offset=(0.0, 0.0, 0.0)):
        off = np.asarray(offset, float)
        return TriMesh(self.vertices * scale + off, self.triangles.copy(), self.com * scale + off)


@dataclass
class ConvexPolytope:
    """Convex polytope with merged (possibly non-triangular) facets.

    ``facets[i]`` lists vertex indices counter-clockwise about ``normals[i]``;
    the half-space of facet i is ``normals[i] @ x <= offsets[i]``.
    ``triangles`` is an outward-oriented triangulation; ``tri_facet`` maps each
    triangle back to its facet.
    """

    vertices: np.ndarray
    facets: list
    normals: np.ndarray
    offsets: np.ndarray
    triangles: np.ndarray
    tri_facet: np.ndarray
    source_index: np.ndarray = None

    @property
    def scale(self):
        return float(np.linalg.norm(self.vertices.max(0) - self.vertices.min(0)))

    def contains(self, points, tol=None):
        tol = 1e-6 * self.scale if tol is None else tol
        pts = np.atleast_2d(points)
        return np.all(pts @ self.normals.T <= self.offsets + tol, axis=1)

    def facet_area(self, i):
        poly = self.vertices[self.facets[i]]
        c = poly.mean(0)
        s = np.zeros(3)
        for a, b in zip(poly, np.roll(poly, -1, axis=0)):
            s += np.cross(a - c, b - c)
        return 0.5 * float(np.dot(s, self.normals[i]))

    def to_trimesh(self, com=None):
        com = self.vertices.mean(0) if com is None else com
        return TriMesh(self.vertices.copy(), self.triangles.copy(), com)


@dataclass
class Pose:
    orientation: np.ndarray
    position: np.ndarray

    def __post_init__(self):
        self.orientation = as_quat(self.orientation)
        self.position = np.asarray(self.position, dtype=float).reshape(3)

    @property
    def matrix(self):
        return quat_to_matrix(self.orientation)

    def apply(self, points):
        return np.asarray(points) @ self.matrix.T + self.position

    @classmethod
    def from_matrix(cls, R, p):
        return cls(matrix_to_quat(R), p)

    def to_dict(self):
        return {"q": [float(v) for v in self.orientation], "p": [float(v) for v in self.position]}

    @classmethod
    def from_dict(cls, d):
        return cls(d["q"], d["p"])


@dataclass
class Grasp:
    id: int
    p_left: np.ndarray
    p_right: np.ndarray
    n_left: np.ndarray
    n_right: np.ndarray

    def __post_init__(self):
        for name in ("p_left", "p_right", "n_left", "n_right"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float).reshape(3))

    @property
    def center(self):
        return 0.5 * (self.p_left + self.p_right)

    @property
    def axis(self):
        d = self.p_right - self.p_left
        return d / np.linalg.norm(d)

    @property
    def width(self):
        return float(np.linalg.norm(self.p_right - self.p_left))

    def reference_frame(self):
        """Object-frame unit vectors (e0, e1) spanning the plane normal to the axis.

        Gripper angles about the grasp axis are measured from e0 toward e1.
        """
        a = self.axis
        e0 = perpendicular(a)
        return e0, np.cross(a, e0)

    def to_dict(self):
        return {"id": int(self.id), **{k: [float(v) for v in getattr(self, k)]
                                       for k in ("p_left", "p_right", "n_left", "n_right")}}

    @classmethod
    def from_dict(cls, d):
        return cls(d["id"], d["p_left"], d["p_right"], d["n_left"], d["n_right"])


@dataclass
class StablePlacement:
    id: int
    facet: int
    orientation: np.ndarray
    polygon: np.ndarray
    margin: float = 0.0

    def to_dict(self):
        return {"id": int(self.id), "facet": int(self.facet),
                "orientation": [float(v) for v in self.orientation],
                "polygon": np.asarray(self.polygon).tolist(), "margin": float(self.margin)}

    @classmethod
    def from_dict(cls, d):
        return cls(d["id"], d["facet"], np.asarray(d["orientation"], float),
                   np.asarray(d["polygon"], float), d.get("margin", 0.0))


@dataclass
class AngleInterval:
    lo: float
    hi: float

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError("AngleInterval requires lo <= hi")

    @property
    def width(self):
        return self.hi - self.lo

    def contains(self, a, tol=0.0):
        return self.lo - tol <= a <= self.hi + tol


# ---------------------------------------------------------------------------
# mesh ingestion
# ---------------------------------------------------------------------------

def parse_obj(text, com=None, degenerate_fraction=0.1):
    verts, tris, file_com = [], [], None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        tag = parts[0]
        try:
            if tag == "v":
                verts.append([float(x) for x in parts[1:4]])
                if len(parts) < 4:
                    raise ValueError
            elif tag == "f":
                idx = [int(p.split("/")[0]) for p in parts[1:]]
                if len(idx) < 3:
                    raise ValueError
                idx = [i - 1 if i > 0 else len(verts) + i for i in idx]
                for k in range(1, len(idx) - 1):
                    tris.append([idx[0], idx[k], idx[k + 1]])
            elif tag == "com":
                file_com = [float(x) for x in parts[1:4]]
                if len(file_com) != 3:
                    raise ValueError
            elif tag in ("vn", "vt", "o", "g", "s", "usemtl", "mtllib"):
                continue
            else:
                raise ParseError(f"line {lineno}: unsupported record {tag!r}")
        except ValueError:
            raise ParseError(f"line {lineno}: malformed {tag!r} record") from None
    if len(verts) < 4 or not tris:
        raise ParseError("mesh needs at least 4 vertices and one face")
    verts = np.array(verts, float)
    tris = np.array(tris, np.int64)
    if tris.min() < 0 or tris.max() >= len(verts):
        raise ParseError(f"face references vertex {tris.max() + 1} of {len(verts)}")
    if com is None:
        com = file_com
    return _finish_mesh(verts, tris, com, degenerate_fraction)


def load_mesh(path, com=None):
    """Load an ASCII OBJ subset (``v``, ``f``, optional ``com`` line)."""
    with open(path) as fh:
        return parse_obj(fh.read(), com=com)


def _finish_mesh(verts, tris, com, degenerate_fraction):
    scale = float(np.linalg.norm(verts.max(0) - verts.min(0)))
    if scale <= 0:
        raise DegenerateMesh("mesh has zero extent")
    # weld duplicate vertices
    key = np.round(verts / (1e-9 * scale)).astype(np.int64)
    _, first, inverse = np.unique(key, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.reshape(-1)
    order = np.argsort(first)
    remap = np.empty_like(order)
    remap[order] = np.arange(len(order))
    verts = verts[first[order]]
    tris = remap[inverse[tris]]
    c = verts[tris]
    area = 0.5 * np.linalg.norm(np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0]), axis=1)
    bad = area <= 1e-12 * scale * scale
    if bad.mean() > degenerate_fraction:
        raise DegenerateMesh(f"{int(bad.sum())} of {len(tris)} triangles have zero area")
    tris = tris[~bad]
    used = np.unique(tris)
    if len(used) < len(verts):
        remap = -np.ones(len(verts), np.int64)
        remap[used] = np.arange(len(used))
        verts, tris = verts[used], remap[tris]
    mesh = TriMesh(verts, tris, np.zeros(3))
    if not mesh.is_watertight():
        raise DegenerateMesh("mesh is not watertight")
    mesh.com = np.asarray(com, float) if com is not None else solid_centroid(mesh)
    return mesh


def solid_centroid(mesh):
    """Center of mass of the enclosed solid at uniform density."""
    c = mesh.corners
    vol = np.einsum("ij,ij->i", c[:, 0], np.cross(c[:, 1], c[:, 2])) / 6.0
    total = vol.sum()
    if abs(total) <= 1e-12 * mesh.scale ** 3:
        raise DegenerateMesh("mesh encloses no volume")
    return (vol[:, None] * c.sum(1) / 4.0).sum(0) / total


def write_obj(mesh, path, with_com=True):
    with open(path, "w") as fh:
        for v in mesh.vertices:
            fh.write("v {:.10g} {:.10g} {:.10g}\n".format(*v))
        for t in mesh.triangles:
            fh.write("f {} {} {}\n".format(*(t + 1)))
        if with_com:
            fh.write("com {:.10g} {:.10g} {:.10g}\n".format(*mesh.com))


# ---------------------------------------------------------------------------
# convex hulls
# ---------------------------------------------------------------------------

def convex_hull(mesh):
    """Convex hull of a mesh (or of an (n, 3) point array)."""
    points = mesh.vertices if isinstance(mesh, TriMesh) else np.asarray(mesh, float)
    return _hull_from_points(points)


def _hull_from_points(points):
    points = np.asarray(points, float)
    if len(points) < 4:
        raise DegenerateMesh("need at least 4 points for a 3D hull")
    try:
        qh = ConvexHull(points)
    except QhullError as exc:
        raise DegenerateMesh(f"input is coplanar or degenerate: {exc.args[0].splitlines()[0]}") from None
    src = np.asarray(qh.vertices)
    remap = -np.ones(len(points), np.int64)
    remap[src] = np.arange(len(src))
    verts = points[src]
    tris = remap[qh.simplices]
    scale = float(np.linalg.norm(verts.max(0) - verts.min(0)))
    eq = qh.equations
    normals, offsets = eq[:, :3], -eq[:, 3]
    # orient triangles outward
    c = verts[tris]
    tn = np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0])
    flip = np.einsum("ij,ij->i", tn, normals) < 0
    tris[flip] = tris[flip][:, ::-1]
    # group coplanar triangles into facets
    groups = []
    assigned = -np.ones(len(tris), np.int64)
    for t in range(len(tris)):
        if assigned[t] >= 0:
            continue
        same = (normals @ normals[t] > 1 - 1e-9) & (np.abs(offsets - offsets[t]) <= 1e-9 * scale)
        same &= assigned < 0
        assigned[same] = len(groups)
        groups.append(np.nonzero(same)[0])
    facets, fnormals, foffsets, keep_tri = [], [], [], []
    for g, members in enumerate(groups):
        ids = np.unique(tris[members])
        cc = verts[tris[members]]
        area_vec = 0.5 * np.cross(cc[:, 1] - cc[:, 0], cc[:, 2] - cc[:, 0]).sum(0)
        area = np.linalg.norm(area_vec)
        if area < 1e-9 * scale * scale:
            continue
        n = area_vec / area
        facets.append(_ccw_order(verts, ids, n))
        fnormals.append(n)
        foffsets.append(float(np.max(verts[ids] @ n)))
        keep_tri.extend((t, len(facets) - 1) for t in members)
    keep_tri.sort()
    tri_idx = np.array([t for t, _ in keep_tri], np.int64)
    tri_facet = np.array([f for _, f in keep_tri], np.int64)
    return ConvexPolytope(verts, facets, np.array(fnormals), np.array(foffsets),
                          tris[tri_idx], tri_facet, source_index=src)


def _ccw_order(verts, ids, normal):
    pts = verts[ids]
    c = pts.mean(0)
    u = perpendicular(normal)
    v = np.cross(normal, u)
    ang = np.arctan2((pts - c) @ v, (pts - c) @ u)
    return ids[np.argsort(ang, kind="stable")]


# ---------------------------------------------------------------------------
# distances
# ---------------------------------------------------------------------------

def closest_point_on_triangles(p, a, b, c):
    """Closest points on triangles (a, b, c) to points p; all arrays (m, 3)."""
    ab, ac, ap = b - a, c - a, p - a
    d1 = np.einsum("ij,ij->i", ab, ap)
    d2 = np.einsum("ij,ij->i", ac, ap)
    bp = p - b
    d3 = np.einsum("ij,ij->i", ab, bp)
    d4 = np.einsum("ij,ij->i", ac, bp)
    cp = p - c
    d5 = np.einsum("ij,ij->i", ab, cp)
    d6 = np.einsum("ij,ij->i", ac, cp)
    va = d3 * d6 - d5 * d4
    vb = d5 * d2 - d1 * d6
    vc = d1 * d4 - d3 * d2
    with np.errstate(divide="ignore", invalid="ignore"):
        denom = 1.0 / (va + vb + vc)
        v = vb * denom
        w = vc * denom
        out = a + ab * v[:, None] + ac * w[:, None]
        # edge regions
        t_ab = d1 / (d1 - d3)
        t_ac = d2 / (d2 - d6)
        t_bc = (d4 - d3) / ((d4 - d3) + (d5 - d6))
    m = (vc <= 0) & (d1 >= 0) & (d3 <= 0)
    out[m] = a[m] + t_ab[m, None] * ab[m]
    m2 = (vb <= 0) & (d2 >= 0) & (d6 <= 0)
    out[m2] = a[m2] + t_ac[m2, None] * ac[m2]
    m3 = (va <= 0) & ((d4 - d3) >= 0) & ((d5 - d6) >= 0)
    out[m3] = b[m3] + t_bc[m3, None] * (c[m3] - b[m3])
    # vertex regions
    ma = (d1 <= 0) & (d2 <= 0)
    out[ma] = a[ma]
    mb = (d3 >= 0) & (d4 <= d3)
    out[mb] = b[mb]
    mc = (d6 >= 0) & (d5 <= d6)
    out[mc] = c[mc]
    return out


def point_polytope_distance(points, poly):
    """Euclidean distance from each point to the solid polytope (0 inside)."""
    points = np.atleast_2d(np.asarray(points, float))
    viol = points @ poly.normals.T - poly.offsets
    out = np.zeros(len(points))
    tri_corners = poly.vertices[poly.triangles]
    for i in np.nonzero(np.any(viol > 0, axis=1))[0]:
        faces = np.nonzero(viol[i] > 0)[0]
        tmask = np.isin(poly.tri_facet, faces)
        tc = tri_corners[tmask]
        p = np.repeat(points[i][None], len(tc), axis=0)
        q = closest_point_on_triangles(p, tc[:, 0], tc[:, 1], tc[:, 2])
        out[i] = np.sqrt(np.min(np.sum((q - p) ** 2, axis=1)))
    return out


def hausdorff_distance(P, Q):
    """Exact Hausdorff distance between two convex polytopes.

    For convex bodies the boundary and solid Hausdorff distances coincide and
    the supremum is attained at a vertex, so vertex-to-polytope distances in
    both directions suffice.
    """
    return float(max(point_polytope_distance(P.vertices, Q).max(),
                     point_polytope_distance(Q.vertices, P).max()))


def vertex_hausdorff_distance(P, Q):
    """Hausdorff distance between the vertex sets of two polytopes."""
    a = np.asarray(getattr(P, "vertices", P), float)
    b = np.asarray(getattr(Q, "vertices", Q), float)
    return float(max(cKDTree(b).query(a)[0].max(), cKDTree(a).query(b)[0].max()))


def simplify_mesh(hull, bound):
    """Drop hull vertices while every original vertex stays within ``bound``
    of a kept vertex.

    The vertex-set criterion implies ``hausdorff_distance(hull, out) <= bound``
    because the output is contained in the input and every input vertex is
    within ``bound`` of an output vertex.
    """
    verts = hull.vertices
    n = len(verts)
    if bound <= 0 or n <= 4:
        return hull
    tree = cKDTree(verts)
    nn_dist = tree.query(verts, k=2)[0][:, 1]
    order = np.argsort(nn_dist, kind="stable")
    keep = np.ones(n, bool)
    owner = np.arange(n)  # index of nearest kept vertex for each original vertex
    for v in order:
        if keep.sum() <= 4:
            break
        affected = np.nonzero(owner == v)[0]
        keep[v] = False
        kept_idx = np.nonzero(keep)[0]
        d = np.linalg.norm(verts[affected][:, None, :] - verts[kept_idx][None], axis=2)
        best = d.argmin(1)
        if d[np.arange(len(affected)), best].max() <= bound:
            owner[affected] = kept_idx[best]
        else:
            keep[v] = True
    if keep.all():
        return hull
    try:
        out = _hull_from_points(verts[keep])
    except DegenerateMesh:
        return hull
    if vertex_hausdorff_distance(verts, out.vertices) > bound:
        return hull
    base = hull.source_index if hull.source_index is not None else np.arange(n)
    out.source_index = base[np.nonzero(keep)[0][out.source_index]]
    return out


def contact_candidates(simplified, pose, d_h):
    """Simplified-hull vertices that may carry the true table contact.

    Returns ``[(vertex index, ball radius), ...]`` for every vertex within
    ``2 * d_h`` of the lowest one.
    """
    z = simplified.vertices @ pose.matrix[2] + pose.position[2]
    tol = 1e-9 * simplified.scale
    idx = np.nonzero(z <= z.min() + 2.0 * d_h + tol)[0]
    return [(int(i), float(d_h)) for i in idx]


# ---------------------------------------------------------------------------
# grasps
# ---------------------------------------------------------------------------

def _ray_hits(origin, direction, corners, eps):
    """Nearest forward hit of a ray against all triangles (Moller-Trumbore)."""
    v0, v1, v2 = corners[:, 0], corners[:, 1], corners[:, 2]
    e1, e2 = v1 - v0, v2 - v0
    pvec = np.cross(direction, e2)
    det = np.einsum("ij,ij->i", e1, pvec)
    ok = np.abs(det) > 1e-14
    inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
    tvec = origin - v0
    u = np.einsum("ij,ij->i", tvec, pvec) * inv
    qvec = np.cross(tvec, e1)
    v = (qvec @ direction) * inv
    t = np.einsum("ij,ij->i", e2, qvec) * inv
    hit = ok & (u >= -1e-12) & (v >= -1e-12) & (u + v <= 1 + 1e-12) & (t > eps)
    if not hit.any():
        return None, None
    cand = np.nonzero(hit)[0]
    j = cand[np.argmin(t[cand])]
    return j, float(t[j])


def feature_edges(mesh, angle):
    """Segments (m, 2, 3) of edges whose dihedral angle exceeds ``angle``."""
    normals = mesh.face_normals
    segs = []
    cos_lim = math.cos(angle)
    for (a, b), faces in mesh.edge_faces().items():
        if len(faces) != 2 or normals[faces[0]] @ normals[faces[1]] < cos_lim:
            segs.append((mesh.vertices[a], mesh.vertices[b]))
    return np.array(segs).reshape(-1, 2, 3)


def _point_segment_distance(p, segs):
    if len(segs) == 0:
        return np.inf
    a, b = segs[:, 0], segs[:, 1]
    ab = b - a
    t = np.clip(np.einsum("ij,ij->i", p - a, ab) / np.maximum(np.einsum("ij,ij->i", ab, ab), 1e-300), 0, 1)
    return float(np.min(np.linalg.norm(a + t[:, None] * ab - p, axis=1)))


def grasps_similar(g, h, tol):
    direct = (np.linalg.norm(g.p_left - h.p_left) <= tol and np.linalg.norm(g.p_right - h.p_right) <= tol)
    swapped = (np.linalg.norm(g.p_left - h.p_right) <= tol and np.linalg.norm(g.p_right - h.p_left) <= tol)
    return direct or swapped


def sample_grasps(mesh, max_n, gripper=None, antipodal_tol=np.deg2rad(10.0), finger_mu=0.5,
                  trim_fraction=0.05, edge_margin=3.0, seed=0, n_samples=None):
    """Sample antipodal facet-to-facet grasps uniformly over the surface area."""
    if max_n < 1:
        raise ValueError("max_n must be >= 1")
    stroke = gripper.stroke if gripper is not None else np.inf
    rng = np.random.default_rng(seed)
    normals = mesh.face_normals
    areas = mesh.face_areas
    corners = mesh.corners
    scale = mesh.scale
    edges = feature_edges(mesh, antipodal_tol)
    margin = min(edge_margin, 0.05 * scale)
    cone = min(antipodal_tol, math.atan(finger_mu))
    n_samples = n_samples or max(40 * max_n, 400)
    faces = rng.choice(len(areas), size=n_samples, p=areas / areas.sum())
    bary = rng.random((n_samples, 2))
    flip = bary.sum(1) > 1
    bary[flip] = 1 - bary[flip]
    eps = 1e-7 * scale
    kept = []
    trim_tol = trim_fraction * scale
    for f, (s, t) in zip(faces, bary):
        c = corners[f]
        p = c[0] + s * (c[1] - c[0]) + t * (c[2] - c[0])
        n_p = normals[f]
        j, dist = _ray_hits(p, -n_p, corners, eps)
        if j is None or dist > stroke or dist < 1e-3 * scale:
            continue
        q = p - dist * n_p
        n_q = normals[j]
        if np.dot(n_p, -n_q) < math.cos(antipodal_tol):
            continue
        if np.dot(-n_p, n_q) < math.cos(cone):  # grasp line inside the finger friction cone at q
            continue
        if _point_segment_distance(p, edges) < margin or _point_segment_distance(q, edges) < margin:
            continue
        g = Grasp(len(kept), p, q, n_p, n_q)
        if any(grasps_similar(g, h, trim_tol) for h in kept):
            continue
        kept.append(g)
        if len(kept) >= max_n:
            break
    if not kept:
        raise NoGraspFound("no antipodal pair within the gripper stroke")
    return kept


# ---------------------------------------------------------------------------
# stable placements
# ---------------------------------------------------------------------------

def rotation_to_down(normal):
    """Smallest rotation matrix taking ``normal`` to (0, 0, -1)."""
    n = np.asarray(normal, float) / np.linalg.norm(normal)
    down = np.array([0.0, 0.0, -1.0])
    axis = np.cross(n, down)
    s, c = np.linalg.norm(axis), float(n @ down)
    if s < 1e-12:
        if c > 0:
            return np.eye(3)
        return np.diag([1.0, -1.0, -1.0])
    from .transforms import rot_axis_angle
    return rot_axis_angle(axis / s, math.atan2(s, c))


def convex_polygon_margin(polygon, point):
    """Signed distance from ``point`` to the boundary of a convex polygon
    (positive inside).  Vertex order may be either orientation."""
    poly = np.asarray(polygon, float)
    area2 = np.sum(poly[:, 0] * np.roll(poly[:, 1], -1) - np.roll(poly[:, 0], -1) * poly[:, 1])
    if area2 < 0:
        poly = poly[::-1]
    a, b = poly, np.roll(poly, -1, axis=0)
    e = b - a
    ln = np.linalg.norm(e, axis=1)
    good = ln > 0
    cross = e[good, 0] * (point[1] - a[good, 1]) - e[good, 1] * (point[0] - a[good, 0])
    return float(np.min(cross / ln[good]))


def stable_placements(hull, com, margin=1.0):
    """One placement per hull facet whose support polygon holds the COM
    projection at least ``margin`` inside."""
    com = np.asarray(com, float)
    out = []
    for f, ids in enumerate(hull.facets):
        R = rotation_to_down(hull.normals[f])
        poly = (hull.vertices[ids] @ R.T)[:, :2]
        c = (R @ com)[:2]
        m = convex_polygon_margin(poly, c)
        if m >= margin:
            out.append(StablePlacement(len(out), f, matrix_to_quat(R), poly, m))
    return out


# ---------------------------------------------------------------------------
# gripper / object collision
# ---------------------------------------------------------------------------

def surface_samples(mesh, spacing):
    """Vertices plus a barycentric grid on every triangle; returns points and
    the covering radius of the sample set."""
    pts = [mesh.vertices]
    cover = 0.0
    for tri in mesh.corners:
        edge = max(np.linalg.norm(tri[1] - tri[0]), np.linalg.norm(tri[2] - tri[1]),
                   np.linalg.norm(tri[0] - tri[2]))
        k = max(1, int(math.ceil(edge / spacing)))
        cover = max(cover, edge / k / math.sqrt(3.0))
        if k == 1:
            continue
        i, j = np.meshgrid(np.arange(k + 1), np.arange(k + 1), indexing="ij")
        m = (i + j) <= k
        s, t = i[m] / k, j[m] / k
        pts.append(tri[0] + s[:, None] * (tri[1] - tri[0]) + t[:, None] * (tri[2] - tri[0]))
    return np.unique(np.vstack(pts), axis=0), cover


def collision_free_angles(grasp, mesh, gripper, resolution=np.deg2rad(0.5), spacing=None,
                          samples=None):
    """Gripper rotations about the grasp axis (object frame) free of
    gripper/object contact other than at the fingertips.

    The angle phi places the gripper Z axis at ``cos(phi) e0 + sin(phi) e1``
    with (e0, e1) from ``grasp.reference_frame()``.  Each returned interval is
    conservative: the mesh is sampled with known covering radius and gripper
    boxes are inflated by that radius plus the angular bin width.
    """
    if samples is None:
        spacing = spacing or max(0.5, min(2.0, mesh.scale / 60.0))
        samples = surface_samples(mesh, spacing)
    pts, cover = samples
    nbins = int(round(TWO_PI / resolution))
    width = TWO_PI / nbins
    centers = -np.pi + (np.arange(nbins) + 0.5) * width
    a = grasp.axis
    e0, e1 = grasp.reference_frame()
    rel = pts - grasp.center
    u = rel @ a
    x0, x1 = rel @ e0, rel @ e1
    r = np.hypot(x0, x1)
    psi = np.arctan2(x1, x0)
    blocked = np.zeros(nbins, bool)
    # Rotation about the axis leaves u unchanged, so only (y, z) are inflated.
    # The finger pads sit ``pad`` beyond the contact planes.
    m_all = cover + r * math.sin(0.5 * width) + 1e-9
    for lo, hi in gripper.boxes(grasp.width):
        sel = (u >= lo[0]) & (u <= hi[0]) & (r + m_all >= max(lo[2], 0.0))
        m = m_all
        if not sel.any():
            continue
        rs, ps, ms = r[sel], psi[sel], m[sel]
        for start in range(0, len(rs), 4096):
            sl = slice(start, start + 4096)
            delta = ps[sl][:, None] - centers[None, :]
            vy = -rs[sl][:, None] * np.sin(delta)
            vz = rs[sl][:, None] * np.cos(delta)
            mm = ms[sl][:, None]
            inside = ((vy >= lo[1] - mm) & (vy <= hi[1] + mm) & (vz >= lo[2] - mm) & (vz <= hi[2] + mm))
            blocked |= inside.any(0)
    if blocked.all():
        raise EmptyRange(f"grasp {grasp.id}: every gripper angle collides")
    if not blocked.any():
        return [AngleInterval(-np.pi, np.pi)]
    edges = -np.pi + np.arange(nbins + 1) * width
    out = []
    j = 0
    while j < nbins:
        if blocked[j]:
            j += 1
            continue
        k = j
        while k + 1 < nbins and not blocked[k + 1]:
            k += 1
        out.append(AngleInterval(float(edges[j]), float(min(edges[k + 1], np.pi))))
        j = k + 1
    return out


def free_components(intervals):
    """Merge intervals touching across +-pi into connected arcs ``(lo, hi)``
    with ``hi`` possibly above pi."""
    iv = sorted((i.lo, i.hi) for i in intervals)
    if not iv:
        return []
    if len(iv) == 1 and iv[0][0] <= -np.pi + 1e-12 and iv[0][1] >= np.pi - 1e-12:
        return [(-np.pi, np.pi)]
    if len(iv) > 1 and iv[0][0] <= -np.pi + 1e-12 and iv[-1][1] >= np.pi - 1e-12:
        first = iv.pop(0)
        last = iv.pop()
        iv.append((last[0], first[1] + TWO_PI))
    return iv


def is_full_circle(component):
    return component[1] - component[0] >= TWO_PI - 1e-12
