"""
Convergence measures and a centralized reference solver.

All swarm-level quantities are taken at the state average
``x_bar = mean_i x_i``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .convex import team_set
from .errors import OracleError


@dataclass
class MetricSample:
    t: float
    consensus_err: float
    feas_err: float
    per_set_dists: list = field(default_factory=list)
    team_value: float = float("nan")
    V1: float = float("nan")
    opt_dist: float | None = None
    V2: float | None = None


class _Context:
    """Caches the team set so repeated measurements share it."""

    def __init__(self, sets, fs):
        self.sets = list(sets)
        self.fs = list(fs)
        self.H = team_set(self.sets)
        self.unique = list(getattr(self.H, "members", [self.H]))


def measure(state, sets, fs, reference=None, t=None, _ctx=None) -> MetricSample:
    """Consensus, feasibility and Lyapunov diagnostics of one swarm state.

    ``V1 = sum_i ||x_i - x_bar||^2 + n ||x_bar - P_H(x_bar)||^2``. When a
    reference optimum is given, ``opt_dist = ||x_bar - reference||`` and
    ``V2`` replaces the feasibility term by ``n * opt_dist**2``.
    """
    ctx = _ctx or _Context(sets, fs)
    X = np.asarray(state.x if hasattr(state, "x") else state, dtype=float)
    n = len(X)
    xbar = X.mean(axis=0)
    dev = np.linalg.norm(X - xbar, axis=1)
    feas = float(np.linalg.norm(xbar - ctx.H.project(xbar)))
    spread = float(np.sum(dev ** 2))
    sample = MetricSample(
        t=float(getattr(state, "t", 0.0) if t is None else t),
        consensus_err=float(dev.max()),
        feas_err=feas,
        per_set_dists=[float(s.distance(xbar)) for s in ctx.sets],
        team_value=float(sum(f.eval(xbar) for f in ctx.fs)),
        V1=spread + n * feas ** 2,
    )
    if reference is not None:
        od = float(np.linalg.norm(xbar - np.asarray(reference, dtype=float)))
        sample.opt_dist = od
        sample.V2 = spread + n * od ** 2
    return sample


def trajectory_metrics(traj, sets, fs, reference=None):
    """``measure`` at every recorded sample of ``traj``."""
    ctx = _Context(sets, fs)
    out = [measure(traj.x[s], sets, fs, reference, t=traj.times[s], _ctx=ctx) for s in range(traj.n_samples)]
    traj.metrics = out
    return out


def team_gradient(fs, s):
    return sum(f.grad(s) for f in fs)


def verify_kkt(fs, sets, s, tol: float = 1e-6, alpha: float = 1e-2) -> bool:
    """Projected-gradient fixed-point test for optimality over ``H``.

    True iff ``s`` lies in ``H`` and
    ``||s - P_H(s - alpha * sum_i grad f_i(s))|| / alpha <= tol``.
    """
    H = team_set(sets)
    s = np.asarray(s, dtype=float)
    if H.distance(s) > tol:
        return False
    r = np.linalg.norm(s - H.project(s - alpha * team_gradient(fs, s))) / alpha
    return bool(r <= tol)


def sqrt_decay(alpha0):
    return lambda k: alpha0 / np.sqrt(k + 1.0)


def centralized_oracle(fs, sets, x0=None, step_rule=None, iters: int = 50000, tol: float = 1e-12, window: int = 100):
    """Projected gradient descent on the team objective over ``H``.

    Reference solver for the optimum. Steps follow ``step_rule(k)``
    (default ``alpha0 / sqrt(k + 1)``). With the default rule ``alpha0`` is
    halved whenever a step fails to decrease the objective; with a
    user-supplied rule the objective may rise, and a rise that persists over
    ``window`` iterations raises ``OracleError``.

    Returns the final iterate.
    """
    H = team_set(sets)
    dim = fs[0].dim
    x = H.project(np.zeros(dim) if x0 is None else np.asarray(x0, dtype=float))

    def F(y):
        return float(sum(f.eval(y) for f in fs))

    adaptive = step_rule is None
    alpha0 = 1.0
    if adaptive:
        g = team_gradient(fs, x)
        # curvature estimate from a gradient difference along the gradient
        d = g / (np.linalg.norm(g) or 1.0) * 1e-4
        curv = np.linalg.norm(team_gradient(fs, x + d) - g) / 1e-4
        alpha0 = 1.0 / max(curv, 1e-8)
        step_rule = lambda k: alpha0 / np.sqrt(k + 1.0)  # noqa: E731

    fx = F(x)
    history = [fx]
    for k in range(iters):
        g = team_gradient(fs, x)
        a = step_rule(k)
        x_new = H.project(x - a * g)
        f_new = F(x_new)
        if adaptive:
            while f_new > fx and a > 1e-300:
                alpha0 *= 0.5
                a = step_rule(k)
                x_new = H.project(x - a * g)
                f_new = F(x_new)
        if not np.all(np.isfinite(x_new)):
            raise OracleError(f"oracle iterate became non-finite at iteration {k}")
        moved = np.linalg.norm(x_new - x)
        x, fx = x_new, f_new
        history.append(fx)
        if len(history) > window and fx > history[-window - 1] + 1e-12 * max(1.0, abs(fx)):
            raise OracleError(f"team objective rose over the last {window} iterations (iteration {k})")
        if moved <= tol * max(1.0, a):
            break
    return x
