"""Dense convex QP solver (primal active set).

Solves  min 1/2 x'Hx + c'x  s.t.  A_eq x = b_eq,  A_in x >= b_in,  lb <= x <= ub.

A feasible starting point comes from a max-slack LP (HiGHS via scipy);
the LP's infeasibility verdict is what makes ``Infeasible`` decisive.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .errors import DimensionMismatch, NotPSD

OPTIMAL = "Optimal"
INFEASIBLE = "Infeasible"
MAXITER = "MaxIter"
UNBOUNDED = "Unbounded"


@dataclass
class QProblem:
    H: np.ndarray
    c: np.ndarray
    A_eq: np.ndarray = None
    b_eq: np.ndarray = None
    A_in: np.ndarray = None
    b_in: np.ndarray = None
    lb: np.ndarray = None
    ub: np.ndarray = None

    def __post_init__(self):
        self.H = np.atleast_2d(np.asarray(self.H, float))
        self.c = np.asarray(self.c, float).reshape(-1)
        n = len(self.c)
        if self.H.shape != (n, n):
            raise DimensionMismatch(f"H is {self.H.shape}, c has length {n}")
        self.A_eq, self.b_eq = _rows(self.A_eq, self.b_eq, n, "equality")
        self.A_in, self.b_in = _rows(self.A_in, self.b_in, n, "inequality")
        for name in ("lb", "ub"):
            v = getattr(self, name)
            if v is not None:
                v = np.broadcast_to(np.asarray(v, float), (n,)).copy()
                setattr(self, name, v)

    @property
    def n(self):
        return len(self.c)

    def stacked_inequalities(self):
        """All inequalities, box bounds included, as A x >= b."""
        A, b = [self.A_in], [self.b_in]
        eye = np.eye(self.n)
        if self.lb is not None:
            m = np.isfinite(self.lb)
            A.append(eye[m])
            b.append(self.lb[m])
        if self.ub is not None:
            m = np.isfinite(self.ub)
            A.append(-eye[m])
            b.append(-self.ub[m])
        return np.vstack(A), np.concatenate(b)

    def objective(self, x):
        return float(0.5 * x @ self.H @ x + self.c @ x)


def _rows(A, b, n, what):
    if A is None or (np.size(A) == 0 and (b is None or np.size(b) == 0)):
        return np.zeros((0, n)), np.zeros(0)
    A = np.atleast_2d(np.asarray(A, float))
    b = np.asarray(b, float).reshape(-1)
    if A.shape[1] != n or A.shape[0] != len(b):
        raise DimensionMismatch(f"{what} system is {A.shape} with {len(b)} right-hand sides; n = {n}")
    return A, b


@dataclass
class QSolution:
    x: np.ndarray
    objective: float
    status: str
    iterations: int = 0
    lam_eq: np.ndarray = field(default=None, repr=False)
    lam_in: np.ndarray = field(default=None, repr=False)
    primal_residual: float = np.nan
    kkt_residual: float = np.nan

    @property
    def ok(self):
        return self.status == OPTIMAL


def _null_space(A, n, rtol=1e-10):
    if A.shape[0] == 0:
        return np.eye(n)
    _, s, vt = np.linalg.svd(A)
    rank = int(np.sum(s > rtol * max(1.0, s[0])))
    return vt[rank:].T


def _phase_one(A_eq, b_eq, A_in, b_in, n):
    """Feasible point, as deep inside the inequalities as a unit slack allows.

    Maximises s <= 1 subject to A_in x - s |a_i| >= b_in; a point with s > 0
    starts the active-set loop with an empty working set.
    """
    if not len(b_in):
        if not len(b_eq):
            return np.zeros(n)
        x = np.linalg.lstsq(A_eq, b_eq, rcond=None)[0]
        if np.max(np.abs(A_eq @ x - b_eq)) > 1e-9 * max(1.0, np.max(np.abs(b_eq))):
            return None
        return x
    norms = np.linalg.norm(A_in, axis=1)
    A_ub = np.hstack([-A_in, norms[:, None]])
    cost = np.zeros(n + 1)
    cost[-1] = -1.0
    kw = dict(A_ub=A_ub, b_ub=-b_in, bounds=[(None, None)] * n + [(None, 1.0)], method="highs")
    if len(b_eq):
        kw.update(A_eq=np.hstack([A_eq, np.zeros((len(b_eq), 1))]), b_eq=b_eq)
    res = linprog(cost, **kw)
    if res.status == 4:
        res = linprog(cost, **{**kw, "method": "highs-ipm"})
    if res.status == 3:
        # unbounded slack cannot happen with s <= 1; treat as solver trouble
        return None
    if res.status != 0 or res.x[-1] < -1e-9 * max(1.0, np.max(np.abs(b_in))):
        return None
    return np.asarray(res.x[:n], float)


def solve(p, max_iter=None, tol=1e-9):
    """Solve a convex QP; returns a :class:`QSolution`."""
    H, c, n = p.H, p.c, p.n
    hscale = max(1.0, float(np.max(np.abs(H))) if H.size else 1.0)
    if np.max(np.abs(H - H.T), initial=0.0) > 1e-9 * hscale:
        raise DimensionMismatch("H is not symmetric")
    H = 0.5 * (H + H.T)
    if n and np.linalg.eigvalsh(H)[0] < -1e-8 * hscale:
        raise NotPSD("H has a negative eigenvalue")
    A_eq, b_eq = p.A_eq, p.b_eq
    A_in, b_in = p.stacked_inequalities()
    m_eq, m_in = len(b_eq), len(b_in)
    scale = max(1.0, float(np.max(np.abs(np.concatenate([b_eq, b_in, c]))))) if m_eq + m_in else 1.0
    feas_tol = 1e-9 * scale

    x = _phase_one(A_eq, b_eq, A_in, b_in, n)
    if x is None:
        return QSolution(np.full(n, np.nan), np.nan, INFEASIBLE)
    if m_eq:
        # polish equality residual onto the affine set
        r = A_eq @ x - b_eq
        x = x - np.linalg.lstsq(A_eq, r, rcond=None)[0]

    slack = A_in @ x - b_in
    work = []
    for i in np.nonzero(slack <= feas_tol)[0]:
        trial = np.vstack([A_eq, A_in[work + [i]]])
        if np.linalg.matrix_rank(trial) == len(trial) or not len(trial):
            work.append(int(i))
    max_iter = max_iter or 50 * (n + m_in + 10)
    status = MAXITER
    it = 0
    lam = None
    while it < max_iter:
        it += 1
        A_w = np.vstack([A_eq, A_in[work]]) if work else A_eq
        g = H @ x + c
        Z = _null_space(A_w, n)
        step = np.zeros(n)
        unbounded_dir = False
        if Z.shape[1]:
            Hr = Z.T @ H @ Z
            gr = Z.T @ g
            w, V = np.linalg.eigh(Hr)
            pos = w > 1e-10 * hscale
            coef = V.T @ gr
            flat = ~pos & (np.abs(coef) > 1e-12 * max(1.0, np.linalg.norm(g)))
            if flat.any():
                step = -Z @ (V[:, flat] @ coef[flat])
                unbounded_dir = True
            else:
                step = -Z @ (V[:, pos] @ (coef[pos] / w[pos]))
        if np.linalg.norm(step) <= 1e-12 * max(1.0, np.linalg.norm(x)):
            lam = np.linalg.lstsq(A_w.T, g, rcond=None)[0] if len(A_w) else np.zeros(0)
            lam_w = lam[m_eq:]
            neg = np.nonzero(lam_w < -1e-10 * max(1.0, np.linalg.norm(g)))[0]
            if not len(neg):
                status = OPTIMAL
                break
            # drop the most negative multiplier; Bland's rule once cycling is possible
            j = neg[0] if it > 3 * (m_in + n) else neg[np.argmin(lam_w[neg])]
            work.pop(int(j))
            continue
        Ap = A_in @ step
        slack = A_in @ x - b_in
        alpha, block = (np.inf if unbounded_dir else 1.0), None
        in_work = np.zeros(m_in, bool)
        in_work[work] = True
        for i in np.nonzero((Ap < -1e-14) & ~in_work)[0]:
            a = max(0.0, slack[i]) / -Ap[i]
            if a < alpha - 1e-15:
                alpha, block = a, int(i)
        if not np.isfinite(alpha):
            status = UNBOUNDED
            break
        x = x + alpha * step
        if block is not None:
            work.append(block)
            work.sort()
    # residuals
    lam_eq, lam_in = np.zeros(m_eq), np.zeros(m_in)
    if lam is not None and status == OPTIMAL:
        lam_eq = lam[:m_eq]
        lam_in[work] = np.maximum(lam[m_eq:], 0.0)
    primal = max(np.max(np.abs(A_eq @ x - b_eq), initial=0.0),
                 np.max(b_in - A_in @ x, initial=0.0))
    kkt = float(np.linalg.norm(H @ x + c - A_eq.T @ lam_eq - A_in.T @ lam_in))
    return QSolution(x, p.objective(x), status, it, lam_eq, lam_in[:len(p.b_in)], float(primal), kkt)
