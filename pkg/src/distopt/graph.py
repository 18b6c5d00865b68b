"""
Switching communication graphs.

A ``WeightedDigraph`` stores the adjacency matrix ``A`` with the convention
that ``A[i, j] > 0`` means agent ``i`` receives information from agent ``j``.
Two self-loop conventions coexist:

* ``"ct"`` graphs (continuous-time algorithm) have a zero diagonal;
* ``"dt"`` graphs (discrete-time algorithm) carry a positive diagonal and are
  meant to be doubly stochastic mixing matrices.

A ``GraphSchedule`` is a cyclic, piecewise-constant sequence of graphs.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse.csgraph import connected_components

from .errors import PreconditionError, ScheduleRangeError, StepAlignmentError

CT = "ct"
DT = "dt"
FAMILIES = (CT, DT)

DEFAULT_TOL = 1e-9

# Labels used in validation reports. Numbering follows the standing
# assumptions of the method (bounded minimizers, H nonempty, dwell time,
# joint connectivity, doubly stochastic weights, discrete joint connectivity).
A_MINIMIZERS = "Assumption 1 (nonempty bounded minimizer sets)"
A_FEASIBLE = "Assumption 2 (nonempty constraint intersection)"
A_DWELL = "Assumption 4 (dwell time)"
A_JOINT_CT = "Assumption 5 (joint strong connectivity)"
A_STOCHASTIC = "Assumption 6 (doubly stochastic weights)"
A_JOINT_DT = "Assumption 7 (joint strong connectivity)"
A_BALANCED = "Balanced graphs (continuous-time hypothesis)"


@dataclass(frozen=True, eq=False)
class WeightedDigraph:
    """Weighted directed graph on ``n`` agents.

    Parameters
    ----------
    weights : array_like, shape (n, n)
        Nonnegative adjacency weights, ``weights[i, j]`` is the weight of
        the edge from ``j`` to ``i``.
    family : {"ct", "dt"}
        Self-loop convention.
    eta : float, optional
        Lower bound on nonzero weights. Defaults to the smallest nonzero
        weight.
    """

    weights: np.ndarray
    family: str = CT
    eta: float | None = None

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError(f"weights must be square, got shape {w.shape}")
        if self.family not in FAMILIES:
            raise ValueError(f"unknown graph family {self.family!r}")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError("weights must be finite and nonnegative")
        nz = w[w > 0]
        eta = self.eta
        if eta is None:
            eta = float(nz.min()) if nz.size else 1.0
        if eta <= 0:
            raise ValueError("eta must be positive")
        if nz.size and nz.min() < eta * (1 - 1e-12):
            raise ValueError(f"nonzero weight {nz.min()} below eta={eta}")
        diag = np.diag(w)
        if self.family == CT and np.any(diag != 0):
            raise ValueError("continuous-time graphs must have a zero diagonal")
        if self.family == DT and np.any(diag < eta * (1 - 1e-12)):
            i = int(np.argmin(diag))
            raise ValueError(f"discrete-time graph needs a_ii >= eta; a_{i}{i} = {diag[i]}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "eta", float(eta))

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    @cached_property
    def laplacian(self) -> np.ndarray:
        L = laplacian(self)
        L.setflags(write=False)
        return L

    def edges(self):
        """Off-diagonal ``(i, j, a_ij)`` triples with ``a_ij > 0``."""
        ii, jj = np.nonzero(self.weights)
        return [(int(i), int(j), float(self.weights[i, j])) for i, j in zip(ii, jj) if i != j]

    def neighbors(self, i: int) -> list[int]:
        row = self.weights[i]
        return [int(j) for j in np.nonzero(row)[0] if j != i]

    def __eq__(self, other):
        if not isinstance(other, WeightedDigraph):
            return NotImplemented
        return (
            self.family == other.family
            and self.eta == other.eta
            and np.array_equal(self.weights, other.weights)
        )

    __hash__ = None


def from_edges(n, edges, family=CT, weight=0.5, undirected=True, self_weights=None, eta=None):
    """Build a graph from an edge list.

    ``edges`` holds ``(i, j)`` or ``(i, j, w)`` tuples; ``(i, j)`` means ``j``
    sends to ``i``. With ``undirected=True`` the symmetric entry is set too.
    """
    w = np.zeros((n, n))
    for e in edges:
        i, j = int(e[0]), int(e[1])
        a = float(e[2]) if len(e) > 2 else weight
        if i == j:
            raise ValueError("self-loops go through self_weights")
        w[i, j] = a
        if undirected:
            w[j, i] = a
    if self_weights is not None:
        w[np.diag_indices(n)] = self_weights
    return WeightedDigraph(w, family=family, eta=eta)


def ring_edges(n: int) -> list[tuple[int, int]]:
    return [(i, (i + 1) % n) for i in range(n)] if n > 2 else path_edges(n)


def path_edges(n: int) -> list[tuple[int, int]]:
    return [(i, i + 1) for i in range(n - 1)]


def complete_edges(n: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def laplacian(g: WeightedDigraph) -> np.ndarray:
    """Graph Laplacian ``L = D - A`` with the diagonal of ``A`` ignored."""
    a = np.array(g.weights, dtype=float)
    np.fill_diagonal(a, 0.0)
    L = -a
    L[np.diag_indices_from(L)] = a.sum(axis=1)
    return L


def is_balanced(g: WeightedDigraph, tol: float = DEFAULT_TOL) -> bool:
    """In-weight equals out-weight at every node (within ``tol``)."""
    a = np.array(g.weights)
    np.fill_diagonal(a, 0.0)
    return bool(np.all(np.abs(a.sum(axis=1) - a.sum(axis=0)) <= tol))


def stochasticity_defects(g: WeightedDigraph, tol: float = DEFAULT_TOL) -> list[str]:
    """Human-readable reasons why ``g`` is not doubly stochastic."""
    w = g.weights
    out = []
    for i, s in enumerate(w.sum(axis=1)):
        if abs(s - 1.0) > tol:
            out.append(f"row {i + 1} sums to {s:.12g}")
    for j, s in enumerate(w.sum(axis=0)):
        if abs(s - 1.0) > tol:
            out.append(f"column {j + 1} sums to {s:.12g}")
    for i, d in enumerate(np.diag(w)):
        if d < g.eta * (1 - 1e-12) or d <= 0:
            out.append(f"diagonal entry a_{i + 1}{i + 1} = {d:.12g} is not positive")
    return out


def is_doubly_stochastic(g: WeightedDigraph, tol: float = DEFAULT_TOL) -> bool:
    return not stochasticity_defects(g, tol)


def metropolis_weights(edges: Iterable[tuple[int, int]], n: int) -> WeightedDigraph:
    """Metropolis-Hastings mixing matrix of an undirected simple graph.

    ``a_ij = 1 / (1 + max(deg_i, deg_j))`` on edges and the remaining mass on
    the diagonal, which makes the result symmetric and doubly stochastic.
    """
    pairs = {(min(i, j), max(i, j)) for i, j in edges if i != j}
    deg = np.zeros(n, dtype=int)
    for i, j in pairs:
        deg[i] += 1
        deg[j] += 1
    w = np.zeros((n, n))
    for i, j in pairs:
        w[i, j] = w[j, i] = 1.0 / (1.0 + max(deg[i], deg[j]))
    w[np.diag_indices(n)] = 1.0 - w.sum(axis=1)
    return WeightedDigraph(w, family=DT)


def is_strongly_connected(g: WeightedDigraph) -> bool:
    if g.n <= 1:
        return True
    adj = (g.weights > 0).astype(np.int8)
    ncomp, _ = connected_components(adj, directed=True, connection="strong")
    return ncomp == 1


def laplacian_spectrum_check(g: WeightedDigraph, tol: float = 1e-9) -> bool:
    """Symmetric part of ``L`` is PSD with a simple zero eigenvalue."""
    if not is_strongly_connected(g):
        raise PreconditionError("laplacian_spectrum_check needs a strongly connected graph")
    L = g.laplacian
    ev = np.linalg.eigvalsh(0.5 * (L + L.T))
    return bool(np.all(ev >= -tol) and np.sum(np.abs(ev) <= tol) == 1)


@dataclass(frozen=True)
class GraphSchedule:
    """Cyclic piecewise-constant graph sequence.

    ``starts[e]`` is the start time (or step index) of epoch ``e``; the last
    epoch lasts until ``period``, after which the list is replayed.
    """

    starts: tuple
    graphs: tuple
    period: float
    dwell: float | None = None
    window: float | None = None
    cyclic: bool = True

    def __post_init__(self):
        starts = tuple(float(s) for s in self.starts)
        graphs = tuple(self.graphs)
        if not graphs or len(starts) != len(graphs):
            raise ValueError("schedule needs one start per graph and at least one epoch")
        if starts[0] != 0:
            raise ValueError("first epoch must start at 0")
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise ValueError("epoch starts must strictly increase")
        if self.period <= starts[-1]:
            raise ValueError("period must exceed the last epoch start")
        n = graphs[0].n
        fam = graphs[0].family
        if any(g.n != n or g.family != fam for g in graphs):
            raise ValueError("all epochs must share agent count and graph family")
        object.__setattr__(self, "starts", starts)
        object.__setattr__(self, "graphs", graphs)
        object.__setattr__(self, "period", float(self.period))

    @classmethod
    def static(cls, g: WeightedDigraph, period: float = 1.0, **kw) -> "GraphSchedule":
        return cls((0.0,), (g,), period, **kw)

    @property
    def n(self) -> int:
        return self.graphs[0].n

    @property
    def family(self) -> str:
        return self.graphs[0].family

    def lengths(self) -> list[float]:
        ends = list(self.starts[1:]) + [self.period]
        return [e - s for s, e in zip(self.starts, ends)]

    def _check_range(self, t):
        if t < 0 or (not self.cyclic and t >= self.period):
            raise ScheduleRangeError(f"time {t} outside schedule [0, {self.period})")

    def index_at(self, t: float) -> int:
        """Epoch index active at time ``t``."""
        self._check_range(t)
        tau = math.fmod(t, self.period) if self.cyclic else t
        # snap values that sit on a boundary up to rounding
        eps = 1e-9 * max(1.0, self.period)
        i = bisect.bisect_right(self.starts, tau + eps) - 1
        return max(i, 0)

    def graph_at(self, t: float) -> WeightedDigraph:
        return self.graphs[self.index_at(t)]

    def epoch_steps(self, h: float):
        """Epoch starts and period as integer multiples of the step ``h``.

        Raises ``StepAlignmentError`` when a switching time is not a multiple
        of ``h``, since a fixed-step integrator would then straddle it.
        """
        out = []
        for t in list(self.starts) + [self.period]:
            k = round(t / h)
            if abs(k * h - t) > 1e-9 * max(1.0, abs(t)):
                raise StepAlignmentError(f"switching time {t:g} is not a multiple of the step {h:g}")
            out.append(int(k))
        return np.array(out[:-1], dtype=np.int64), out[-1]

    def boundaries(self, a: float, b: float) -> list[float]:
        """Epoch switching times in the open interval ``(a, b)``."""
        out = []
        c0 = math.floor(a / self.period) if self.cyclic else 0
        c1 = math.floor(b / self.period) if self.cyclic else 0
        for c in range(c0, c1 + 1):
            for s in self.starts:
                t = c * self.period + s
                if a < t < b:
                    out.append(t)
        return out


def union_graph(schedule: GraphSchedule, window: Sequence[float]) -> WeightedDigraph:
    """Union of all epoch graphs active during ``[start, end)``.

    Edge weights are the elementwise maximum over the epochs involved.
    """
    a, b = float(window[0]), float(window[1])
    if not b > a:
        raise ScheduleRangeError(f"empty window [{a}, {b})")
    schedule._check_range(a)
    if not schedule.cyclic and b > schedule.period:
        raise ScheduleRangeError(f"window end {b} beyond schedule end {schedule.period}")
    times = [a] + schedule.boundaries(a, b)
    idx = {schedule.index_at(t) for t in times}
    if len(idx) == 1:
        return schedule.graphs[idx.pop()]
    w = np.max([schedule.graphs[i].weights for i in sorted(idx)], axis=0)
    g0 = schedule.graphs[0]
    return WeightedDigraph(w, family=g0.family, eta=min(schedule.graphs[i].eta for i in idx))


@dataclass
class WindowCheck:
    start: float
    end: float
    connected: bool
    length_ok: bool


@dataclass
class EpochCheck:
    index: int
    start: float
    length: float
    dwell_ok: bool
    weights_ok: bool
    detail: str = ""


@dataclass
class ScheduleReport:
    family: str
    windows: list = field(default_factory=list)
    epochs: list = field(default_factory=list)
    issues: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.issues

    def summary(self) -> str:
        lines = [
            f"family: {self.family}",
            f"epochs: {len(self.epochs)}",
            f"connectivity windows checked: {len(self.windows)}",
            f"passed: {self.passed}",
        ]
        lines += [f"  {a}: {d}" for a, d in self.issues]
        return "\n".join(lines)


def _greedy_windows(schedule: GraphSchedule):
    """Earliest-connection partition of the cyclic schedule.

    Starting at time 0, each window grows epoch by epoch until the union is
    strongly connected. Because the schedule is cyclic, the walk repeats
    once it returns to an epoch phase it has already started from.
    Yields ``(start, end, connected)``.
    """
    E = len(schedule.graphs)
    lengths = schedule.lengths()
    phase, t = 0, 0.0
    seen = set()
    while phase not in seen:
        seen.add(phase)
        start = t
        adj = np.zeros((schedule.n, schedule.n), dtype=bool)
        connected = False
        for step in range(E):
            e = (phase + step) % E
            adj |= schedule.graphs[e].weights > 0
            t += lengths[e]
            if connected_components(adj.astype(np.int8), directed=True, connection="strong")[0] == 1:
                connected = True
                phase = (e + 1) % E
                break
        yield start, t, connected
        if not connected or not schedule.cyclic:
            return


def validate_schedule(schedule: GraphSchedule, family: str | None = None, tol: float = DEFAULT_TOL) -> ScheduleReport:
    """Check a schedule against the graph assumptions of its algorithm family.

    Violations are recorded as ``(assumption, detail)`` pairs in
    ``report.issues``; nothing is raised.
    """
    family = family or schedule.family
    rep = ScheduleReport(family=family)
    if schedule.family != family:
        rep.issues.append(("Graph family", f"schedule graphs use {schedule.family!r}, expected {family!r}"))

    dwell = schedule.dwell
    for e, (s, length, g) in enumerate(zip(schedule.starts, schedule.lengths(), schedule.graphs)):
        dwell_ok = True
        if family == CT and dwell is not None and len(schedule.graphs) > 1:
            dwell_ok = length >= dwell * (1 - 1e-12)
            if not dwell_ok:
                rep.issues.append((A_DWELL, f"epoch {e + 1} lasts {length:g} < d_w = {dwell:g}"))
        if family == CT:
            ok = is_balanced(g, tol)
            detail = "" if ok else "in-weight differs from out-weight"
            if not ok:
                a = np.array(g.weights)
                np.fill_diagonal(a, 0)
                bad = np.nonzero(np.abs(a.sum(1) - a.sum(0)) > tol)[0]
                detail = f"node {bad[0] + 1} in-weight {a.sum(1)[bad[0]]:g} != out-weight {a.sum(0)[bad[0]]:g}"
                rep.issues.append((A_BALANCED, f"epoch {e + 1}: {detail}"))
        else:
            defects = stochasticity_defects(g, tol)
            ok = not defects
            detail = "; ".join(defects)
            if defects:
                rep.issues.append((A_STOCHASTIC, f"epoch {e + 1}: {detail}"))
        rep.epochs.append(EpochCheck(e, s, length, dwell_ok, ok, detail))

    joint = A_JOINT_CT if family == CT else A_JOINT_DT
    M = schedule.window
    if family == CT and M is not None and dwell is not None and not M > dwell:
        rep.issues.append((joint, f"window M = {M:g} must exceed d_w = {dwell:g}"))
    for a, b, connected in _greedy_windows(schedule):
        length_ok = M is None or (b - a) <= M * (1 + 1e-12)
        rep.windows.append(WindowCheck(a, b, connected, length_ok))
        if not connected:
            rep.issues.append((joint, f"union of all graphs from t = {a:g} over a full cycle is not strongly connected"))
        elif not length_ok:
            rep.issues.append((joint, f"window [{a:g}, {b:g}) needs length {b - a:g} > M = {M:g}"))
    return rep
