"""
Discrete-time projected consensus algorithm with gradient switching.

One step for agent ``i``:

1. ``v_i = sum_j a_ij x_j`` (including the self weight), the stepsize
   accumulator update ``q_i += arctan(exp(||x_i||)) T`` and ``grad f_i(v_i)``;
2. ``gr_i = 0`` if ``sqrt(q_i) <= ||grad f_i(v_i)||**2`` else
   ``grad f_i(v_i) / sqrt(q_i)``, using ``q_i`` from before the update;
3. ``w_i = v_i - gr_i T``;
4. ``x_i = (1 - gamma_i) w_i + gamma_i P_{H_i}(w_i)``.

The zero branch keeps a huge gradient from throwing an agent far away while
``q_i`` is still small.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .convex import StackedProjector
from .ct_solver import _check_q, epoch_lookup, stepsize_rate
from .errors import PreconditionError, SimulationError, StateCorruptionError
from .graph import DT, WeightedDigraph, stochasticity_defects
from .objective import StackedGradient
from .trajectory import Recorder, SwarmState

log = logging.getLogger(__name__)

MIXED = "mixed"
PROJECTED = "projected"
DEFAULT_GAMMA = 0.5
FEASIBILITY_TOL = 1e-12


@dataclass(frozen=True)
class DtParams:
    """Sample time ``T``, per-agent blend ``gamma`` and operating mode.

    ``mixed`` requires every ``gamma_i`` in ``(0, 1)``; ``projected``
    requires every ``gamma_i == 1`` and keeps each agent inside its set.
    """

    T: float
    gamma: tuple
    mode: str = PROJECTED

    def __post_init__(self):
        g = tuple(float(v) for v in np.atleast_1d(self.gamma))
        object.__setattr__(self, "gamma", g)
        if not self.T > 0:
            raise ValueError("sample time must be positive")
        if self.mode == MIXED:
            if not all(0 < v < 1 for v in g):
                raise ValueError("mixed mode needs 0 < gamma_i < 1 for every agent")
        elif self.mode == PROJECTED:
            if not all(v == 1 for v in g):
                raise ValueError("projected mode needs gamma_i = 1 for every agent")
        else:
            raise ValueError(f"unknown mode {self.mode!r}")

    @classmethod
    def for_mode(cls, mode, n, T=0.1, gamma=None):
        if gamma is None:
            gamma = 1.0 if mode == PROJECTED else DEFAULT_GAMMA
        return cls(T, tuple(np.broadcast_to(np.asarray(gamma, dtype=float), (n,))), mode)

    def gamma_array(self, n):
        return np.broadcast_to(np.asarray(self.gamma, dtype=float), (n,)).copy()


@dataclass
class StepDiagnostics:
    zero_branch: np.ndarray
    v: np.ndarray
    w: np.ndarray

    @property
    def fired(self):
        return [int(i) for i in np.nonzero(self.zero_branch)[0]]


def _update(X, q, A, project, gradient, T, gamma):
    V = A @ X
    G = gradient(V)
    sq = np.sqrt(q)
    fired = sq <= np.einsum("ij,ij->i", G, G)
    gr = np.where(fired[:, None], 0.0, G / sq[:, None])
    norms = np.sqrt(np.einsum("ij,ij->i", X, X))
    q_next = q + stepsize_rate(norms) * T
    W = V - gr * T
    X_next = W * (1.0 - gamma)[:, None] + project(W) * gamma[:, None]
    return X_next, q_next, fired, V, W, norms


def dt_step(state: SwarmState, g: WeightedDigraph, sets, fs, params: DtParams, tol: float = 1e-9):
    """One discrete-time step. Returns ``(new_state, StepDiagnostics)``."""
    defects = stochasticity_defects(g, tol) if g.family == DT else ["graph uses the zero-diagonal convention"]
    if defects:
        raise PreconditionError("mixing matrix is not doubly stochastic: " + "; ".join(defects))
    _check_q(state.q)
    X_next, q_next, fired, V, W, _ = _update(
        state.x, state.q, np.asarray(g.weights), StackedProjector(sets), StackedGradient(fs),
        params.T, params.gamma_array(state.n),
    )
    return SwarmState(state.t + params.T, X_next, q_next), StepDiagnostics(fired, V, W)


def simulate_dt(scenario, stride=None, horizon=None):
    """Run the discrete-time algorithm over ``scenario``.

    The schedule is indexed by step number. In projected mode every agent's
    membership in its own set is checked after every step and the number of
    violations is stored on the trajectory.
    """
    params = scenario.dt_params
    T = float(params.T)
    horizon = scenario.horizon if horizon is None else horizon
    stride = int(stride or scenario.stride)
    n_steps = int(round(horizon / T))
    schedule = scenario.schedule
    for e, g in enumerate(schedule.graphs):
        defects = stochasticity_defects(g)
        if defects:
            raise PreconditionError(f"epoch {e + 1} mixing matrix is not doubly stochastic: {defects[0]}")
    lookup = epoch_lookup(schedule, 1.0)
    As = [np.ascontiguousarray(g.weights) for g in schedule.graphs]
    project = StackedProjector(scenario.sets)
    gradient = StackedGradient(scenario.objectives)

    X, q = scenario.initial_state()
    X, q = X.copy(), q.copy()
    _check_q(q)
    n = len(X)
    gamma = params.gamma_array(n)
    check_feasible = params.mode == PROJECTED
    if check_feasible:
        outside = ~project.contains(X, FEASIBILITY_TOL)
        if outside.any():
            i = int(np.nonzero(outside)[0][0])
            raise PreconditionError(f"projected mode needs x_i(0) in H_i; agent {i + 1} starts outside")

    rec = Recorder(DT, T, n_steps, n, track_fires=True)
    rec.max_norm = float(np.linalg.norm(X, axis=1).max())
    rec.sample(0, X, q)
    try:
        for k in range(n_steps):
            X, q, fired, _, _, norms = _update(X, q, As[lookup(k)], project, gradient, T, gamma)
            if not np.isfinite(X).all():
                raise StateCorruptionError(f"non-finite state after step {k + 1}")
            rec.mark_fired(k, fired)
            if check_feasible:
                rec.violations += int(np.count_nonzero(~project.contains(X, FEASIBILITY_TOL)))
            nmax = norms.max()
            if nmax > rec.max_norm:
                rec.max_norm = float(nmax)
            if (k + 1) % stride == 0 or k + 1 == n_steps:
                rec.sample(k + 1, X, q)
    except StateCorruptionError as err:
        raise SimulationError(str(err), rec.build(gamma, complete=False)) from err
    rec.max_norm = max(rec.max_norm, float(np.linalg.norm(X, axis=1).max()))
    return rec.build(gamma)
