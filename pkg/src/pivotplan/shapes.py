"""Watertight primitive meshes for tests, examples and the bench corpus."""

import numpy as np

from .geometry import TriMesh, solid_centroid


def _mesh(verts, tris, com=None):
    m = TriMesh(np.asarray(verts, float), np.asarray(tris, np.int64), np.zeros(3))
    m.com = solid_centroid(m) if com is None else np.asarray(com, float)
    return m


def box(sx, sy, sz, center=(0.0, 0.0, 0.0), com=None):
    h = 0.5 * np.array([sx, sy, sz], float)
    signs = np.array([[-1, -1, -1], [1, -1, -1], [1, 1, -1], [-1, 1, -1],
                      [-1, -1, 1], [1, -1, 1], [1, 1, 1], [-1, 1, 1]], float)
    verts = signs * h + np.asarray(center, float)
    tris = [[0, 2, 1], [0, 3, 2], [4, 5, 6], [4, 6, 7],
            [0, 1, 5], [0, 5, 4], [2, 3, 7], [2, 7, 6],
            [1, 2, 6], [1, 6, 5], [3, 0, 4], [3, 4, 7]]
    return _mesh(verts, tris, com)


def cube(edge=1.0, com=None):
    return box(edge, edge, edge, com=com)


def tetrahedron(edge=1.0, com=None):
    s = edge / (2.0 * np.sqrt(2.0))
    verts = s * np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], float)
    tris = [[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]]
    return _mesh(verts, tris, com)


def uv_sphere(radius=1.0, segments=40, rings=26):
    """Latitude/longitude sphere with ``2 * segments * (rings - 1)`` triangles."""
    verts = [[0.0, 0.0, radius]]
    for i in range(1, rings):
        th = np.pi * i / rings
        for j in range(segments):
            ph = 2 * np.pi * j / segments
            verts.append([radius * np.sin(th) * np.cos(ph), radius * np.sin(th) * np.sin(ph),
                          radius * np.cos(th)])
    verts.append([0.0, 0.0, -radius])
    bottom = len(verts) - 1

    def idx(i, j):
        return 1 + (i - 1) * segments + j % segments

    tris = []
    for j in range(segments):
        tris.append([0, idx(1, j), idx(1, j + 1)])
    for i in range(1, rings - 1):
        for j in range(segments):
            a, b = idx(i, j), idx(i, j + 1)
            c, d = idx(i + 1, j), idx(i + 1, j + 1)
            tris.append([a, c, d])
            tris.append([a, d, b])
    for j in range(segments):
        tris.append([bottom, idx(rings - 1, j + 1), idx(rings - 1, j)])
    return _mesh(verts, tris, com=np.zeros(3))


def _ear_clip(poly):
    """Triangulate a simple counter-clockwise polygon."""
    idx = list(range(len(poly)))
    out = []

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    guard = 0
    while len(idx) > 3 and guard < 10000:
        guard += 1
        for k in range(len(idx)):
            i0, i1, i2 = idx[k - 1], idx[k], idx[(k + 1) % len(idx)]
            a, b, c = poly[i0], poly[i1], poly[i2]
            if cross(a, b, c) <= 0:
                continue
            inside = False
            for j in idx:
                if j in (i0, i1, i2):
                    continue
                p = poly[j]
                if cross(a, b, p) >= 0 and cross(b, c, p) >= 0 and cross(c, a, p) >= 0:
                    inside = True
                    break
            if not inside:
                out.append((i0, i1, i2))
                idx.pop(k)
                break
    out.append(tuple(idx))
    return out


def extrude(polygon, height, com=None):
    """Prism over a simple 2D polygon (either orientation), z in [-h/2, h/2]."""
    poly = np.asarray(polygon, float)
    area2 = np.sum(poly[:, 0] * np.roll(poly[:, 1], -1) - np.roll(poly[:, 0], -1) * poly[:, 1])
    if area2 < 0:
        poly = poly[::-1]
    n = len(poly)
    h = 0.5 * height
    verts = np.vstack([np.c_[poly, np.full(n, -h)], np.c_[poly, np.full(n, h)]])
    tris = []
    for a, b, c in _ear_clip(poly):
        tris.append([n + a, n + b, n + c])
        tris.append([c, b, a])
    for i in range(n):
        j = (i + 1) % n
        tris.append([i, j, n + j])
        tris.append([i, n + j, n + i])
    return _mesh(verts, tris, com)


def l_block(long=80.0, short=40.0, thick=30.0, depth=30.0):
    """L-shaped prism: a ``long`` leg and a ``short`` leg of width ``thick``."""
    poly = [(0, 0), (long, 0), (long, thick), (thick, thick), (thick, short), (0, short)]
    m = extrude(poly, depth)
    return m.transformed(offset=-m.com)


def t_block(width=60.0, stem=30.0, bar=20.0, stem_width=20.0, depth=30.0):
    """T-shaped prism: a horizontal bar on top of a narrower stem."""
    w, s, b, sw = width / 2, stem, bar, stem_width / 2
    poly = [(-sw, 0), (sw, 0), (sw, s), (w, s), (w, s + b), (-w, s + b), (-w, s), (-sw, s)]
    m = extrude(poly, depth)
    return m.transformed(offset=-m.com)


def u_block(width=60.0, height=60.0, wall=10.0, floor=10.0, depth=30.0):
    """U-shaped channel; its inner notch is ``width - 2 * wall`` wide."""
    w = width / 2
    poly = [(-w, 0), (w, 0), (w, height), (w - wall, height), (w - wall, floor),
            (-w + wall, floor), (-w + wall, height), (-w, height)]
    m = extrude(poly, depth)
    return m.transformed(offset=-m.com)


def regular_prism(n_sides, radius, height, com=None):
    ang = 2 * np.pi * np.arange(n_sides) / n_sides
    return extrude(np.c_[radius * np.cos(ang), radius * np.sin(ang)], height, com)


def wedge(length=80.0, base=60.0, height=40.0, depth=40.0):
    """Triangular prism."""
    m = extrude([(0, 0), (base, 0), (0.3 * base, height)], depth)
    m = m.transformed(offset=-m.com)
    return TriMesh(m.vertices, m.triangles, m.com)


def revolve(profile, segments=16, com=None):
    """Solid of revolution about Z from a profile of (radius, z) points.

    The profile runs bottom to top; its first and last radii may be zero
    (pole) or positive (flat cap closed by a fan).
    """
    prof = np.asarray(profile, float)
    ang = 2 * np.pi * np.arange(segments) / segments
    ring, verts = [], []
    for r, z in prof:
        if r <= 0:
            ring.append([len(verts)])
            verts.append([0.0, 0.0, z])
        else:
            ring.append(list(range(len(verts), len(verts) + segments)))
            verts.extend(np.c_[r * np.cos(ang), r * np.sin(ang), np.full(segments, z)])
    tris = []
    for lo, hi in zip(ring[:-1], ring[1:]):
        for i in range(segments):
            j = (i + 1) % segments
            if len(lo) == 1:
                tris.append([lo[0], hi[j], hi[i]])
            elif len(hi) == 1:
                tris.append([lo[i], lo[j], hi[0]])
            else:
                tris.append([lo[i], lo[j], hi[j]])
                tris.append([lo[i], hi[j], hi[i]])
    for cap, top in ((ring[0], False), (ring[-1], True)):
        if len(cap) > 1:
            c = len(verts)
            verts.append([0.0, 0.0, prof[-1 if top else 0, 1]])
            for i in range(segments):
                j = (i + 1) % segments
                tris.append([c, cap[i], cap[j]] if top else [c, cap[j], cap[i]])
    return _mesh(verts, tris, com)


def bottle(height=100.0, radius=22.0, neck=8.0, segments=16):
    h = height
    profile = [(radius, 0.0), (radius, 0.55 * h), (0.7 * radius, 0.7 * h), (neck, 0.8 * h), (neck, h)]
    return revolve(profile, segments)


def spool(height=60.0, rim=30.0, core=14.0, flange=8.0, segments=16):
    """Two flanges joined by a narrow core: non-convex, rolls on its rims."""
    profile = [(rim, 0.0), (rim, flange), (core, flange), (core, height - flange), (rim, height - flange),
               (rim, height)]
    return revolve(profile, segments)


def star_prism(points=5, outer=40.0, inner=18.0, height=25.0):
    ang = np.pi * np.arange(2 * points) / points
    rad = np.where(np.arange(2 * points) % 2 == 0, outer, inner)
    return extrude(np.c_[rad * np.cos(ang), rad * np.sin(ang)], height)


def fit_to_cube(mesh, size=100.0):
    """Uniformly scale so the bounding box fits a cube of edge ``size``,
    centred on the origin."""
    lo, hi = mesh.vertices.min(0), mesh.vertices.max(0)
    s = size / float(np.max(hi - lo))
    return mesh.transformed(s, -s * 0.5 * (lo + hi))


def corpus():
    """Named meshes used by the tests and the default bench corpus."""
    return {
        "cube": cube(60.0),
        "box": box(90.0, 50.0, 30.0),
        "hex_prism": regular_prism(6, 30.0, 70.0),
        "l_block": l_block(),
        "t_block": t_block(),
        "wedge": wedge(),
        "bottle": bottle(),
        "spool": spool(),
        "star": star_prism(),
    }
