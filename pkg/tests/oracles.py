"""Brute-force reference computations used by the tests.

Nothing here calls into the library's own algorithms; each routine solves
the same question by enumeration, sampling or a generic solver.
"""

import itertools

import numpy as np
from scipy.optimize import lsq_linear
from scipy.spatial import ConvexHull


# ---------------------------------------------------------------------------
# quadratic programs
# ---------------------------------------------------------------------------

def qp_by_enumeration(H, c, A_eq, b_eq, A_in, b_in, tol=1e-7):
    """Minimum of 1/2 x'Hx + c'x over A_eq x = b_eq, A_in x >= b_in by
    trying every active set (H positive definite).  Returns (x, f) or None
    when no active set yields a feasible KKT point."""
    n = len(c)
    best = None
    for k in range(min(len(b_in), n) + 1):
        for S in itertools.combinations(range(len(b_in)), k):
            A = np.vstack([A_eq, A_in[list(S)]])
            b = np.concatenate([b_eq, b_in[list(S)]])
            m = len(b)
            K = np.block([[H, -A.T], [A, np.zeros((m, m))]]) if m else H
            rhs = np.concatenate([-c, b])
            sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
            if np.linalg.norm(K @ sol - rhs) > tol:
                continue
            x, lam = sol[:n], sol[n:]
            if len(b_eq) and np.max(np.abs(A_eq @ x - b_eq)) > tol:
                continue
            if len(b_in) and np.min(A_in @ x - b_in) < -tol:
                continue
            if np.any(lam[len(b_eq):] < -1e-9):
                continue
            f = 0.5 * x @ H @ x + c @ x
            if best is None or f < best[1]:
                best = (x, f)
    return best


def random_qp(rng, max_n=8, max_constraints=12, infeasible_rate=0.15):
    """Random strictly convex QP with at most ``max_constraints`` rows in
    total; some instances get a contradictory pair of rows."""
    n = int(rng.integers(1, max_n + 1))
    M = rng.normal(size=(n, n))
    H = M @ M.T + 0.1 * np.eye(n)
    c = 3.0 * rng.normal(size=n)
    m_eq = int(rng.integers(0, min(3, n)))
    m_in = int(rng.integers(0, max_constraints - m_eq + 1))
    A_eq, b_eq = rng.normal(size=(m_eq, n)), rng.normal(size=m_eq)
    A_in, b_in = rng.normal(size=(m_in, n)), rng.normal(size=m_in)
    if m_in >= 2 and rng.random() < infeasible_rate:
        A_in[-1] = -A_in[0]
        b_in[-1] = -b_in[0] + 1.0 + rng.random()
    return H, c, A_eq, b_eq, A_in, b_in


# ---------------------------------------------------------------------------
# planar statics
# ---------------------------------------------------------------------------

def planar_force_oracle(Cy, Qy, Qz, mu, g=1.0, n=4001):
    """Table forces at O = (0, 0) balancing gravity at C with a torque-free
    pivot at Q, found by scanning force directions (tau, 1), |tau| <= mu.

    The moment of all forces about Q must vanish; for a direction the
    magnitude is then fixed and must be positive.  Returns a dict with
    ``any`` (some direction works), ``toward`` / ``away`` (the cone edge
    opposing contact motion toward / away from Q works) and the feasible
    tangential ratios.
    """
    tau = np.linspace(-mu, mu, n)
    # moment about Q of unit table force (tau, 1) at O, and of gravity at C
    m_f = (0.0 - Qy) * 1.0 - (0.0 - Qz) * tau
    m_g = (Cy - Qy) * (-g)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = -m_g / m_f
    ok = np.isfinite(t) & (t > 0)
    s = np.sign(Qy)
    edge_toward = -mu * s   # friction opposes motion toward Q
    edge_away = mu * s

    def edge_ok(e):
        mf = -Qy + Qz * e
        return mf != 0 and (-m_g / mf) > 0

    return {"any": bool(ok.any()), "toward": edge_ok(edge_toward), "away": edge_ok(edge_away),
            "tau": tau[ok]}


def table_state(oracle, motion):
    """Contact-state cell implied by the force oracle for one motion."""
    stable = oracle["toward"]
    if motion == "TowardQ":
        return "Sliding" if stable else "Unstable"
    if motion == "AwayFromQ":
        if not stable:
            return "Unstable"
        return "Sliding" if oracle["away"] else "ImpossibleMotion"
    return "SlidingOrSticking" if oracle["any"] else "Unstable"


def projected_cone_oracle(mu, tilt, n=20001):
    """Largest |f_y| / f_z' over the 3D Coulomb cone, with y horizontal and
    z' the in-plane direction of a plane whose normal is tilted by ``tilt``
    above the table.  Samples the cone boundary."""
    phi = np.linspace(-np.pi, np.pi, n)
    f = np.stack([mu * np.cos(phi), mu * np.sin(phi), np.ones_like(phi)], axis=1)
    x = np.array([np.cos(tilt), 0.0, np.sin(tilt)])   # plane normal (grasp axis)
    y = np.array([0.0, 1.0, 0.0])
    z = np.cross(x, y)
    fz = f @ z
    good = fz > 1e-12
    return float(np.max(np.abs(f[good] @ y) / fz[good]))


# ---------------------------------------------------------------------------
# convex geometry
# ---------------------------------------------------------------------------

def distance_to_hull(points, vertices, weight=1e4):
    """Euclidean distance from each point to conv(vertices), as a bounded
    least-squares problem over convex weights (the sum-to-one row is weighted
    heavily).  Points inside qhull's half-spaces are assigned zero."""
    V = np.asarray(vertices, float)
    P = np.asarray(points, float)
    eq = ConvexHull(V).equations
    tol = 1e-9 * np.ptp(V, axis=0).max()
    inside = np.all(P @ eq[:, :3].T + eq[:, 3] <= tol, axis=1)
    A = np.vstack([V.T, weight * np.ones(len(V))])
    out = np.zeros(len(P))
    for i in np.nonzero(~inside)[0]:
        lam = lsq_linear(A, np.concatenate([P[i], [weight]]), bounds=(0, np.inf), method="bvls", tol=1e-12).x
        out[i] = np.linalg.norm(V.T @ lam - P[i])
    return out


def surface_points(vertices, triangles, n, rng):
    """Area-weighted random points on a triangle soup."""
    c = np.asarray(vertices)[np.asarray(triangles)]
    area = 0.5 * np.linalg.norm(np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0]), axis=1)
    k = rng.choice(len(c), size=n, p=area / area.sum())
    r1, r2 = rng.random(n), rng.random(n)
    flip = r1 + r2 > 1
    r1[flip], r2[flip] = 1 - r1[flip], 1 - r2[flip]
    return c[k, 0] + r1[:, None] * (c[k, 1] - c[k, 0]) + r2[:, None] * (c[k, 2] - c[k, 0])


def sampled_hausdorff(P_vertices, P_tris, Q_vertices, Q_tris, n, rng):
    """Hausdorff distance between two convex solids from vertices plus random
    surface samples, each measured against the other solid by bounded least squares."""
    a = np.vstack([P_vertices, surface_points(P_vertices, P_tris, n, rng)])
    b = np.vstack([Q_vertices, surface_points(Q_vertices, Q_tris, n, rng)])
    return float(max(distance_to_hull(a, Q_vertices).max(), distance_to_hull(b, P_vertices).max()))


def lowest_point(vertices, R, t):
    """World position of the lowest vertex under pose (R, t)."""
    w = np.asarray(vertices) @ np.asarray(R).T + t
    return w[np.argmin(w[:, 2])]


# ---------------------------------------------------------------------------
# graphs
# ---------------------------------------------------------------------------

def bfs_hops(n, edges, s, t):
    """Hop count from s to t by plain breadth-first search, or None."""
    adj = {i: set() for i in range(n)}
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)
    dist = {s: 0}
    frontier = [s]
    while frontier:
        nxt = []
        for u in frontier:
            for v in sorted(adj[u]):
                if v not in dist:
                    dist[v] = dist[u] + 1
                    nxt.append(v)
        frontier = nxt
    return dist.get(t)
