"""Sampled solver output shared by both algorithm families."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class AgentState:
    x: np.ndarray
    q: float


@dataclass
class SwarmState:
    """Positions ``x`` (n, m) and stepsize accumulators ``q`` (n,) at time ``t``."""

    t: float
    x: np.ndarray
    q: np.ndarray

    @property
    def n(self):
        return self.x.shape[0]

    @property
    def agents(self):
        return [AgentState(self.x[i].copy(), float(self.q[i])) for i in range(self.n)]

    @classmethod
    def from_agents(cls, t, agents):
        return cls(float(t), np.array([a.x for a in agents], dtype=float), np.array([a.q for a in agents], dtype=float))

    @property
    def mean(self):
        return self.x.mean(axis=0)


@dataclass
class Trajectory:
    """States recorded every ``stride`` steps (plus the final step).

    ``fired[s, i]`` is True when agent ``i`` took the zero-gradient branch of
    the discrete-time rule in any step since the previous sample.
    ``fires_per_step[k]`` counts the agents that took that branch in step
    ``k`` (discrete-time runs only).
    """

    family: str
    step: float
    steps: np.ndarray
    times: np.ndarray
    x: np.ndarray
    q: np.ndarray
    fired: np.ndarray | None = None
    fires_per_step: np.ndarray | None = None
    gamma: np.ndarray | None = None
    feasibility_violations: int = 0
    max_norm: float = 0.0
    complete: bool = True
    metrics: list = field(default_factory=list)

    @property
    def n_samples(self):
        return len(self.times)

    @property
    def final(self) -> SwarmState:
        return SwarmState(float(self.times[-1]), self.x[-1].copy(), self.q[-1].copy())

    def state(self, s) -> SwarmState:
        return SwarmState(float(self.times[s]), self.x[s].copy(), self.q[s].copy())


class Recorder:
    """Accumulates samples during a run."""

    def __init__(self, family, step, n_steps, n, track_fires=False):
        self.family = family
        self.step = step
        self.steps, self.times, self.xs, self.qs, self.fired = [], [], [], [], []
        self.fires_per_step = np.zeros(n_steps, dtype=np.int32) if track_fires else None
        self._pending = np.zeros(n, dtype=bool)
        self.max_norm = 0.0
        self.violations = 0

    def mark_fired(self, k, fired):
        self.fires_per_step[k] = int(fired.sum())
        self._pending |= fired

    def sample(self, k, x, q):
        self.steps.append(k)
        self.times.append(k * self.step)
        self.xs.append(x.copy())
        self.qs.append(q.copy())
        self.fired.append(self._pending.copy())
        self._pending[:] = False

    def build(self, gamma=None, complete=True) -> Trajectory:
        track = self.fires_per_step is not None
        return Trajectory(
            family=self.family,
            step=self.step,
            steps=np.array(self.steps, dtype=np.int64),
            times=np.array(self.times),
            x=np.array(self.xs),
            q=np.array(self.qs),
            fired=np.array(self.fired) if track else None,
            fires_per_step=self.fires_per_step,
            gamma=gamma,
            feasibility_violations=self.violations,
            max_norm=self.max_norm,
            complete=complete,
        )
