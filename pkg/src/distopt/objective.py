"""
Smooth convex local objectives with analytic gradients.

Three families are supported:

``ShiftedPower``
    ``f(x) = sum_l (x_l + c_l)**p / p`` with even ``p >= 2``.
``Quadratic``
    ``f(x) = 0.5 x'Qx + q'x + r`` with ``Q`` symmetric positive definite.
``Sum``
    Sum of other objectives.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .convex import Ball
from .errors import DimensionError, UnsupportedError


class Objective:
    dim: int

    def _check(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise DimensionError(f"objective expects dimension {self.dim}, got shape {x.shape}")
        return x

    def __call__(self, x):
        return self.eval(x)


@dataclass(frozen=True, eq=False)
class ShiftedPower(Objective):
    shift: np.ndarray
    exponent: int = 2

    def __post_init__(self):
        c = np.array(self.shift, dtype=float).reshape(-1)
        c.setflags(write=False)
        p = int(self.exponent)
        if p != self.exponent or p < 2 or p % 2:
            raise ValueError(f"exponent must be an even integer >= 2, got {self.exponent}")
        object.__setattr__(self, "shift", c)
        object.__setattr__(self, "exponent", p)

    @property
    def dim(self):
        return self.shift.size

    def eval(self, x):
        x = self._check(x)
        return np.sum((x + self.shift) ** self.exponent, axis=-1) / self.exponent

    def grad(self, x):
        x = self._check(x)
        return (x + self.shift) ** (self.exponent - 1)

    def to_record(self):
        return {"shifted_power": {"shift": [float(v) for v in self.shift], "exponent": self.exponent}}

    def __eq__(self, other):
        return isinstance(other, ShiftedPower) and self.exponent == other.exponent and np.array_equal(self.shift, other.shift)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Quadratic(Objective):
    Q: np.ndarray
    q: np.ndarray | None = None
    r: float = 0.0

    def __post_init__(self):
        Q = np.atleast_2d(np.array(self.Q, dtype=float))
        m = Q.shape[0]
        if Q.shape != (m, m):
            raise ValueError("Q must be square")
        if not np.allclose(Q, Q.T, rtol=0, atol=1e-12 * max(1.0, np.abs(Q).max())):
            raise ValueError("Q must be symmetric")
        if np.linalg.eigvalsh(Q).min() <= 0:
            # a singular Q leaves the minimizer set empty or unbounded
            raise ValueError("Q must be positive definite so the minimizer set is a bounded nonempty point")
        q = np.zeros(m) if self.q is None else np.array(self.q, dtype=float).reshape(-1)
        if q.size != m:
            raise DimensionError("q must match Q")
        Q.setflags(write=False)
        q.setflags(write=False)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "r", float(self.r))

    @property
    def dim(self):
        return self.q.size

    def eval(self, x):
        x = self._check(x)
        return 0.5 * np.einsum("...i,ij,...j->...", x, self.Q, x) + x @ self.q + self.r

    def grad(self, x):
        x = self._check(x)
        return x @ self.Q + self.q

    def to_record(self):
        return {"quadratic": {"Q": self.Q.tolist(), "q": [float(v) for v in self.q], "r": self.r}}

    def __eq__(self, other):
        return (
            isinstance(other, Quadratic)
            and self.r == other.r
            and np.array_equal(self.Q, other.Q)
            and np.array_equal(self.q, other.q)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Sum(Objective):
    terms: tuple

    def __post_init__(self):
        terms = tuple(self.terms)
        if not terms:
            raise ValueError("Sum needs at least one term")
        if len({t.dim for t in terms}) != 1:
            raise DimensionError("Sum terms differ in dimension")
        object.__setattr__(self, "terms", terms)

    @property
    def dim(self):
        return self.terms[0].dim

    def eval(self, x):
        return sum(t.eval(x) for t in self.terms)

    def grad(self, x):
        return sum(t.grad(x) for t in self.terms)

    def to_record(self):
        return {"sum": {"terms": [t.to_record() for t in self.terms]}}

    def __eq__(self, other):
        return isinstance(other, Sum) and self.terms == other.terms

    __hash__ = None


def evaluate(f: Objective, x):
    return f.eval(x)


def grad(f: Objective, x):
    return f.grad(x)


def grad_check(f: Objective, x, h: float = 1e-5) -> float:
    """Largest per-coordinate error between analytic and central-difference gradients.

    The error of coordinate ``l`` is ``|fd_l - g_l| / max(1, |g_l|)``, i.e.
    relative for large gradients and absolute near zero.
    """
    if not h > 0:
        raise ValueError("h must be positive")
    x = np.asarray(x, dtype=float)
    g = f.grad(x)
    fd = np.empty_like(x)
    for l in range(x.size):
        e = np.zeros_like(x)
        e[l] = h
        fd[l] = (f.eval(x + e) - f.eval(x - e)) / (2 * h)
    return float(np.max(np.abs(fd - g) / np.maximum(1.0, np.abs(g))))


def _as_quadratic(f):
    if isinstance(f, Quadratic):
        return f.Q, f.q
    if isinstance(f, ShiftedPower) and f.exponent == 2:
        return np.eye(f.dim), f.shift.copy()
    if isinstance(f, Sum):
        parts = [_as_quadratic(t) for t in f.terms]
        if all(p is not None for p in parts):
            return sum(p[0] for p in parts), sum(p[1] for p in parts)
    return None


def minimizer_set_bound(f: Objective) -> Ball:
    """A ball certified to contain the minimizer set of ``f``."""
    if isinstance(f, ShiftedPower):
        return Ball(-f.shift, 0.0)
    quad = _as_quadratic(f)
    if quad is not None:
        Q, q = quad
        return Ball(np.linalg.solve(Q, -q), 0.0)
    if isinstance(f, Sum) and len(f.terms) == 1:
        return minimizer_set_bound(f.terms[0])
    raise UnsupportedError(f"no minimizer bound available for {type(f).__name__} of mixed structure")


def objective_from_record(rec) -> Objective:
    if not isinstance(rec, dict) or len(rec) != 1:
        raise ValueError(f"objective record must be a single-key mapping, got {rec!r}")
    (tag, body), = rec.items()
    if tag == "shifted_power":
        return ShiftedPower(body["shift"], body.get("exponent", 2))
    if tag == "quadratic":
        return Quadratic(body["Q"], body.get("q"), body.get("r", 0.0))
    if tag == "sum":
        terms = body["terms"] if isinstance(body, dict) else body
        return Sum(tuple(objective_from_record(t) for t in terms))
    raise ValueError(f"unknown objective type {tag!r}")


class StackedGradient:
    """Evaluate every agent's gradient on an ``(n, m)`` state array.

    Uses a single vectorized expression when all objectives are
    ``ShiftedPower``; otherwise falls back to a per-agent loop.
    """

    def __init__(self, objectives: Sequence[Objective]):
        self.objectives = list(objectives)
        if all(isinstance(f, ShiftedPower) for f in self.objectives):
            self._shift = np.array([f.shift for f in self.objectives])
            self._pow = np.array([f.exponent - 1 for f in self.objectives])[:, None]
        else:
            self._shift = None

    def __call__(self, X):
        if self._shift is not None:
            return (X + self._shift) ** self._pow
        return np.array([f.grad(x) for f, x in zip(self.objectives, X)])


def bench_family(family: int, j: int) -> ShiftedPower:
    """Local objective ``f_family^j`` of the 24-agent planar benchmark.

    Families 1-4 are quadratic, 5-8 quartic; within each block the shift
    ``0.9 + 0.1 j`` is applied to no coordinate, the first, the second, or
    both.
    """
    if not 1 <= family <= 8 or j not in (1, 2, 3):
        raise ValueError("family in 1..8 and j in 1..3")
    c = 0.9 + 0.1 * j
    pattern = [(0, 0), (1, 0), (0, 1), (1, 1)][(family - 1) % 4]
    return ShiftedPower(np.array(pattern, dtype=float) * c, 2 if family <= 4 else 4)
