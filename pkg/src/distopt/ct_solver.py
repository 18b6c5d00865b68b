"""
Continuous-time projected consensus dynamics, integrated by forward Euler.

Each agent evolves as

    dx_i/dt = sum_j a_ij (x_j - x_i) - (x_i - P_{H_i}(x_i)) - grad f_i(x_i) / sqrt(q_i)
    dq_i/dt = arctan(exp(||x_i||))

so the gradient gain ``1/sqrt(q_i)`` shrinks at a rate set by the agent's own
state, not by a shared clock.
"""

from __future__ import annotations

import bisect
import logging

import numpy as np

from .convex import StackedProjector
from .errors import StateCorruptionError, StepAlignmentError, SimulationError
from .graph import CT, WeightedDigraph
from .objective import StackedGradient
from .trajectory import Recorder, SwarmState

log = logging.getLogger(__name__)

HALF_PI = 0.5 * np.pi


def stepsize_rate(norms):
    """``arctan(exp(z))`` for ``z >= 0`` without overflow.

    Uses ``arctan(e^z) = pi/2 - arctan(e^-z)``; the rate always lies in
    ``[pi/4, pi/2]``.
    """
    return HALF_PI - np.arctan(np.exp(-np.asarray(norms)))


def _derivative(X, q, L, project, gradient):
    norms = np.sqrt(np.einsum("ij,ij->i", X, X))
    xdot = -(L @ X) - (X - project(X)) - gradient(X) / np.sqrt(q)[:, None]
    return xdot, stepsize_rate(norms), norms


def _check_q(q):
    if np.any(~(q > 0)):
        i = int(np.argmin(np.where(np.isnan(q), -np.inf, q)))
        raise StateCorruptionError(f"stepsize accumulator q_{i + 1} = {q[i]} is not positive")


def ct_rhs(state: SwarmState, g: WeightedDigraph, sets, fs):
    """Right-hand side ``(xdot, qdot)`` of the continuous-time dynamics."""
    if g.family != CT:
        raise ValueError("continuous-time dynamics need a zero-diagonal graph")
    _check_q(state.q)
    xdot, qdot, _ = _derivative(state.x, state.q, g.laplacian, StackedProjector(sets), StackedGradient(fs))
    return xdot, qdot


def euler_step(state: SwarmState, schedule, sets, fs, h: float) -> SwarmState:
    """Advance ``state`` by one forward-Euler step of length ``h``.

    The graph active at ``state.t`` is used for the whole step, so no
    switching time may fall strictly inside ``(t, t + h)``.
    """
    if not h > 0:
        raise ValueError("step must be positive")
    t = state.t
    eps = 1e-9 * max(1.0, h)
    inside = schedule.boundaries(t + eps, t + h - eps)
    if inside:
        raise StepAlignmentError(f"graph switches at t = {inside[0]:g}, inside step ({t:g}, {t + h:g})")
    xdot, qdot = ct_rhs(state, schedule.graph_at(t), sets, fs)
    return SwarmState(t + h, state.x + h * xdot, state.q + h * qdot)


def epoch_lookup(schedule, h):
    """Map an integer step index to the active epoch index."""
    starts, period = schedule.epoch_steps(h)
    starts = starts.tolist()
    cyclic = schedule.cyclic

    def lookup(k):
        kk = k % period if cyclic else k
        return bisect.bisect_right(starts, kk) - 1

    return lookup


def simulate_ct(scenario, stride=None, horizon=None):
    """Integrate the continuous-time algorithm over ``scenario``.

    Parameters
    ----------
    scenario : Scenario
        Objectives, sets, schedule (times in seconds), step ``h``, horizon
        and initial states.
    stride : int, optional
        Record every ``stride`` steps; defaults to ``scenario.stride``.
    horizon : float, optional
        Overrides ``scenario.horizon``.

    Returns
    -------
    Trajectory

    Raises
    ------
    SimulationError
        On non-finite states or a corrupted ``q``; ``err.trajectory``
        holds every sample recorded before the failure.
    """
    h = float(scenario.step)
    horizon = scenario.horizon if horizon is None else horizon
    stride = int(stride or scenario.stride)
    n_steps = int(round(horizon / h))
    schedule = scenario.schedule
    lookup = epoch_lookup(schedule, h)
    Ls = [np.ascontiguousarray(g.laplacian) for g in schedule.graphs]
    project = StackedProjector(scenario.sets)
    gradient = StackedGradient(scenario.objectives)

    X, q = scenario.initial_state()
    X = X.copy()
    q = q.copy()
    _check_q(q)
    rec = Recorder(CT, h, n_steps, len(X))
    rec.max_norm = float(np.linalg.norm(X, axis=1).max())
    rec.sample(0, X, q)
    log.debug("ct run: %d agents, %d steps of %g s", len(X), n_steps, h)
    try:
        for k in range(n_steps):
            xdot, qdot, norms = _derivative(X, q, Ls[lookup(k)], project, gradient)
            X = X + h * xdot
            q = q + h * qdot
            if not np.isfinite(X).all():
                raise StateCorruptionError(f"non-finite state after step {k + 1}")
            nmax = norms.max()
            if nmax > rec.max_norm:
                rec.max_norm = float(nmax)
            if (k + 1) % stride == 0 or k + 1 == n_steps:
                rec.sample(k + 1, X, q)
    except StateCorruptionError as err:
        raise SimulationError(str(err), rec.build(complete=False)) from err
    rec.max_norm = max(rec.max_norm, float(np.linalg.norm(X, axis=1).max()))
    return rec.build()
