"""scikit-learn style wrapper: ``fit`` a mesh, ``predict`` plans for pose pairs."""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .config import PlannerConfig
from .errors import NoPlan
from .geometry import TriMesh, load_mesh
from .graph import build_offline, plan_online
from .storage import mesh_hash


class ReorientPlanner(BaseEstimator):
    """Offline data is built by ``fit``; ``predict`` returns one
    MultiStepPlan (or None when infeasible) per ``(initial, final)`` pair."""

    def __init__(self, k=0.1, xi=2.0, n_steps=50, step_time=0.2, mu=0.5, d_h=0.5, theta_max_deg=45.0,
                 max_grasps=50, trim_fraction=0.15, max_searches=25, force_rolling=False, seed=0):
        self.k = k
        self.xi = xi
        self.n_steps = n_steps
        self.step_time = step_time
        self.mu = mu
        self.d_h = d_h
        self.theta_max_deg = theta_max_deg
        self.max_grasps = max_grasps
        self.trim_fraction = trim_fraction
        self.max_searches = max_searches
        self.force_rolling = force_rolling
        self.seed = seed

    def _config(self):
        return PlannerConfig.from_dict({
            "k": self.k, "xi": self.xi, "n_steps": self.n_steps, "step_time": self.step_time, "mu": self.mu,
            "d_h": self.d_h, "max_grasps": self.max_grasps, "trim_fraction": self.trim_fraction,
            "seed": self.seed, "limits": {"theta_max_deg": self.theta_max_deg},
        })

    def fit(self, X, y=None):
        """``X`` is a TriMesh or a path to an OBJ file."""
        mesh = X if isinstance(X, TriMesh) else load_mesh(X)
        self.config_ = self._config()
        self.offline_ = build_offline(mesh, self.config_, mesh_hash(mesh))
        self.n_grasps_ = len(self.offline_.grasps)
        self.n_placements_ = self.offline_.n_placements
        return self

    def predict(self, X):
        check_is_fitted(self, "offline_")
        out = []
        for initial, final in X:
            try:
                out.append(plan_online(initial, final, self.offline_, self.config_, self.config_.limits,
                                       force_rolling=self.force_rolling, max_searches=self.max_searches))
            except NoPlan:
                out.append(None)
        return out

    def score(self, X, y=None):
        """Fraction of pose pairs that received a plan."""
        plans = self.predict(X)
        return float(np.mean([p is not None for p in plans])) if plans else 0.0
