"""
Closed convex sets and Euclidean projections onto them.

Every set exposes ``project`` (closest point), ``distance`` and ``contains``.
Projections accept a single point of shape ``(m,)`` or a batch ``(k, m)``.
Intersections are projected with Dykstra's algorithm, which converges to the
true projection rather than to an arbitrary feasible point. Its iterate is
finished by solving the optimality conditions on the nearly active constraints,
which is exact once certified and rescues the slow cases where Dykstra crawls.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionError, NonConvergenceError

DYKSTRA_TOL = 1e-10
DYKSTRA_MAX_ITER = 10000
# sweeps after which the active-set finish is attempted
POLISH_SWEEPS = frozenset(4**k for k in range(2, 8))


class ConvexSet:
    """Base class. Subclasses implement ``_project`` on a ``(k, m)`` batch."""

    dim: int

    def project(self, y):
        y = np.asarray(y, dtype=float)
        if y.shape[-1] != self.dim or y.ndim > 2:
            raise DimensionError(f"expected points of dimension {self.dim}, got shape {y.shape}")
        if y.ndim == 1:
            return self._project(y[None, :])[0]
        return self._project(y)

    def distance(self, y):
        y = np.asarray(y, dtype=float)
        return np.linalg.norm(y - self.project(y), axis=-1)

    def contains(self, y, tol: float = 1e-12):
        return self.distance(y) <= tol

    def _project(self, y):
        raise NotImplementedError

    def to_record(self) -> dict:
        raise NotImplementedError


def _vec(v, name):
    a = np.array(v, dtype=float).reshape(-1)
    a.setflags(write=False)
    if a.size == 0:
        raise ValueError(f"{name} must be nonempty")
    return a


def _listify(a):
    return [float(v) for v in a]


@dataclass(frozen=True, eq=False)
class Ball(ConvexSet):
    """Closed Euclidean ball. A zero radius gives a single point."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _vec(self.center, "center"))
        if not self.radius >= 0 or not np.isfinite(self.radius):
            raise ValueError(f"radius must be finite and nonnegative, got {self.radius}")
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self):
        return self.center.size

    def _project(self, y):
        d = y - self.center
        r = np.linalg.norm(d, axis=1)
        out = y.copy()
        far = r > self.radius
        if np.any(far):
            scale = self.radius / r[far]
            # rounding can leave the scaled point an ulp outside; nudge it in
            nudge = 2 * np.finfo(float).eps * (1.0 + np.abs(self.center).max() / max(self.radius, 1e-300))
            for _ in range(16):
                p = self.center + d[far] * scale[:, None]
                over = np.linalg.norm(p - self.center, axis=1) > self.radius
                if not np.any(over):
                    break
                scale[over] *= 1.0 - nudge
                nudge *= 2
            out[far] = p
        return out

    def contains(self, y, tol: float = 1e-12):
        y = np.asarray(y, dtype=float)
        return np.linalg.norm(y - self.center, axis=-1) <= self.radius + tol

    def to_record(self):
        return {"ball": {"center": _listify(self.center), "radius": self.radius}}

    def __eq__(self, other):
        return isinstance(other, Ball) and self.radius == other.radius and np.array_equal(self.center, other.center)

    def __hash__(self):
        return hash(("ball", self.center.tobytes(), self.radius))


@dataclass(frozen=True, eq=False)
class Box(ConvexSet):
    """Axis-aligned box; infinite bounds leave a side open."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo, hi = _vec(self.lo, "lo"), _vec(self.hi, "hi")
        if lo.shape != hi.shape:
            raise ValueError("lo and hi must have equal length")
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)) or np.any(lo > hi):
            raise ValueError("box needs lo <= hi in every coordinate")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self):
        return self.lo.size

    def _project(self, y):
        return np.minimum(np.maximum(y, self.lo), self.hi)

    def contains(self, y, tol: float = 1e-12):
        y = np.asarray(y, dtype=float)
        return np.all((y >= self.lo - tol) & (y <= self.hi + tol), axis=-1)

    def to_record(self):
        return {"box": {"lo": _listify(self.lo), "hi": _listify(self.hi)}}

    def __eq__(self, other):
        return isinstance(other, Box) and np.array_equal(self.lo, other.lo) and np.array_equal(self.hi, other.hi)

    def __hash__(self):
        return hash(("box", self.lo.tobytes(), self.hi.tobytes()))


@dataclass(frozen=True, eq=False)
class Halfspace(ConvexSet):
    """The set ``{x : normal . x <= offset}``."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        a = _vec(self.normal, "normal")
        if not np.linalg.norm(a) > 0:
            raise ValueError("halfspace normal must be nonzero")
        object.__setattr__(self, "normal", a)
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def dim(self):
        return self.normal.size

    def _project(self, y):
        a = self.normal
        excess = y @ a - self.offset
        out = y.copy()
        over = excess > 0
        if np.any(over):
            shift = excess[over] / (a @ a)
            # rounding can leave the point an ulp outside; push it just inside
            nudge = 2 * np.finfo(float).eps * (1.0 + np.abs(y[over]).max(axis=1) * np.abs(a).max() / (a @ a))
            for _ in range(16):
                p = y[over] - np.outer(shift, a)
                bad = p @ a > self.offset
                if not np.any(bad):
                    break
                shift[bad] += nudge[bad]
                nudge *= 2
            out[over] = p
        return out

    def contains(self, y, tol: float = 1e-12):
        y = np.asarray(y, dtype=float)
        return y @ self.normal - self.offset <= tol * np.linalg.norm(self.normal)

    def to_record(self):
        return {"halfspace": {"normal": _listify(self.normal), "offset": self.offset}}

    def __eq__(self, other):
        return isinstance(other, Halfspace) and self.offset == other.offset and np.array_equal(self.normal, other.normal)

    def __hash__(self):
        return hash(("halfspace", self.normal.tobytes(), self.offset))


@dataclass(frozen=True, eq=False)
class Intersection(ConvexSet):
    """Intersection of member sets, projected with Dykstra's algorithm."""

    members: tuple
    tol: float = DYKSTRA_TOL
    max_iter: int = DYKSTRA_MAX_ITER

    def __post_init__(self):
        members = []
        for s in self.members:
            # flatten nested intersections and drop exact duplicates
            for t in (s.members if isinstance(s, Intersection) else (s,)):
                if t not in members:
                    members.append(t)
        if not members:
            raise ValueError("intersection needs at least one member")
        if len({s.dim for s in members}) != 1:
            raise DimensionError("intersection members differ in dimension")
        object.__setattr__(self, "members", tuple(members))

    @property
    def dim(self):
        return self.members[0].dim

    def _project(self, y):
        return np.array([dykstra(self.members, row, self.tol, self.max_iter) for row in y])

    def contains(self, y, tol: float | None = None):
        tol = self.tol if tol is None else tol
        y = np.asarray(y, dtype=float)
        return np.all([np.asarray(s.distance(y)) <= tol for s in self.members], axis=0)

    def to_record(self):
        rec = {"members": [s.to_record() for s in self.members]}
        if self.tol != DYKSTRA_TOL:
            rec["tol"] = self.tol
        if self.max_iter != DYKSTRA_MAX_ITER:
            rec["max_iter"] = self.max_iter
        return {"intersection": rec}

    def __eq__(self, other):
        return isinstance(other, Intersection) and self.members == other.members

    def __hash__(self):
        return hash(("intersection", self.members))


def project(s: ConvexSet, y):
    return s.project(y)


def distance(s: ConvexSet, y):
    return s.distance(y)


def dykstra(sets: Sequence[ConvexSet], y, tol: float = DYKSTRA_TOL, max_iter: int = DYKSTRA_MAX_ITER):
    """Project ``y`` onto the intersection of ``sets``.

    Parameters
    ----------
    sets : sequence of ConvexSet
        Members with exact projectors; their intersection must be nonempty.
    y : array_like, shape (m,)
        Point to project.
    tol : float
        Stop once a full sweep changes neither the iterate nor any
        correction increment by more than ``tol`` and the iterate is within
        ``tol`` of every member. The iterate alone can stall at a wrong point
        while the increments are still being redistributed.
    max_iter : int
        Maximum number of sweeps.

    Returns
    -------
    ndarray, shape (m,)

    Raises
    ------
    NonConvergenceError
        If ``max_iter`` sweeps do not suffice.
    """
    y = np.asarray(y, dtype=float)
    sets = list(sets)
    if len(sets) == 1:
        return sets[0].project(y)
    cons = _constraints(sets)
    x = y.copy()
    incs = [np.zeros_like(y) for _ in sets]
    resid = np.inf
    for sweep in range(1, max_iter + 1):
        x_prev = x
        moved = 0.0
        for i, s in enumerate(sets):
            z = x + incs[i]
            x = s.project(z)
            moved = max(moved, float(np.linalg.norm(z - x - incs[i])))
            incs[i] = z - x
        moved = max(moved, float(np.linalg.norm(x - x_prev)))
        scale = 1.0 + float(np.linalg.norm(y - x))
        if moved <= tol:
            resid = max(float(s.distance(x)) for s in sets)
            if resid <= tol:
                p = _polish(cons, y, x, 1e-6 * scale, tol)
                return x if p is None else p
        if sweep in POLISH_SWEEPS:
            p = _polish(cons, y, x, 1e-3 * scale, tol)
            if p is not None:
                return p
    if not np.isfinite(resid):
        resid = max(float(s.distance(x)) for s in sets)
    raise NonConvergenceError(
        f"Dykstra did not converge in {max_iter} sweeps (residual {resid:.3e})",
        last_iterate=x,
        residual=resid,
    )


def _constraints(sets):
    """Smooth inequalities ``g(x) <= 0`` describing ``sets``, or None if unsupported.

    Each entry is ``("lin", a, b)`` for ``a.x <= b`` or ``("sph", c, r)`` for
    ``|x - c| <= r``.
    """
    out = []
    for s in sets:
        if isinstance(s, Halfspace):
            out.append(("lin", s.normal, s.offset))
        elif isinstance(s, Ball):
            out.append(("sph", s.center, s.radius))
        elif isinstance(s, Box):
            eye = np.eye(s.dim)
            for k in range(s.dim):
                if np.isfinite(s.hi[k]):
                    out.append(("lin", eye[k], s.hi[k]))
                if np.isfinite(s.lo[k]):
                    out.append(("lin", -eye[k], -s.lo[k]))
        else:
            return None
    return out


def _gap(con, x):
    """Signed distance of ``x`` outside the constraint boundary."""
    kind, a, b = con
    if kind == "lin":
        return (a @ x - b) / np.linalg.norm(a)
    return np.linalg.norm(x - a) - b


def _polish(cons, y, x, delta, tol):
    """Exact projection from an approximate one, or None if none is certified.

    Tries every subset of the constraints within ``delta`` of ``x`` as the
    active set, solves the equality-constrained optimality system by Newton's
    method and accepts a point that is feasible with nonnegative multipliers.
    Such a point is the unique projection since the problem is convex.
    """
    if cons is None:
        return None
    cand = [j for j, c in enumerate(cons) if abs(_gap(c, x)) <= delta]
    if len(cand) > 12:
        return None
    for size in range(min(y.size, len(cand)) + 1):
        for active in itertools.combinations(cand, size):
            p = _solve_active([cons[j] for j in active], y, x)
            if p is not None and all(_gap(c, p) <= tol for c in cons):
                return p
    return None


def _solve_active(act, y, x, max_newton=50):
    m, k = y.size, len(act)
    if k == 0:
        return y.copy()
    sph = np.array([c[0] == "sph" for c in act])

    def grads(z):
        return np.array([a if kind == "lin" else z - a for kind, a, _ in act])

    def values(z):
        return np.array([a @ z - b if kind == "lin" else 0.5 * ((z - a) @ (z - a) - b * b) for kind, a, b in act])

    scale = 1.0 + np.linalg.norm(y) + np.linalg.norm(x)
    z = x.copy()
    lam = np.linalg.lstsq(grads(z).T, y - z, rcond=None)[0]
    for _ in range(max_newton):
        G = grads(z)
        F = np.concatenate([z - y + G.T @ lam, values(z)])
        if np.linalg.norm(F) <= 1e-14 * scale:
            break
        J = np.zeros((m + k, m + k))
        J[:m, :m] = (1.0 + lam[sph].sum()) * np.eye(m)
        J[:m, m:] = G.T
        J[m:, :m] = G
        try:
            step = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            return None
        if not np.all(np.isfinite(step)):
            return None
        z = z + step[:m]
        lam = lam + step[m:]
    F = np.concatenate([z - y + grads(z).T @ lam, values(z)])
    if np.linalg.norm(F) > 1e-12 * scale or np.any(lam < -1e-12 * (1.0 + np.abs(lam).max())):
        return None
    return z


def set_from_record(rec) -> ConvexSet:
    """Inverse of ``ConvexSet.to_record``."""
    if not isinstance(rec, dict) or len(rec) != 1:
        raise ValueError(f"set record must be a single-key mapping, got {rec!r}")
    (tag, body), = rec.items()
    body = body or {}
    if tag == "ball":
        return Ball(body["center"], body["radius"])
    if tag == "box":
        lo = [float(v) for v in body["lo"]]
        hi = [float(v) for v in body["hi"]]
        return Box(lo, hi)
    if tag == "halfspace":
        return Halfspace(body["normal"], body["offset"])
    if tag == "intersection":
        return Intersection(
            tuple(set_from_record(r) for r in body["members"]),
            tol=float(body.get("tol", DYKSTRA_TOL)),
            max_iter=int(body.get("max_iter", DYKSTRA_MAX_ITER)),
        )
    raise ValueError(f"unknown set type {tag!r}")


def team_set(sets: Sequence[ConvexSet], tol: float = DYKSTRA_TOL, max_iter: int = DYKSTRA_MAX_ITER) -> ConvexSet:
    """The intersection of all agents' sets, collapsed when they coincide."""
    inter = Intersection(tuple(sets), tol=tol, max_iter=max_iter)
    return inter.members[0] if len(inter.members) == 1 else inter


class StackedProjector:
    """Project row ``i`` of an ``(n, m)`` array onto ``sets[i]``.

    When every set is a ball, box or halfspace the whole array is projected
    with three masked array expressions (each is the identity on rows of the
    other kinds). Otherwise agents sharing an identical set are projected
    group by group.
    """

    def __init__(self, sets: Sequence[ConvexSet]):
        self.sets = list(sets)
        groups: list[tuple[ConvexSet, list[int]]] = []
        for i, s in enumerate(self.sets):
            for t, idx in groups:
                if t == s:
                    idx.append(i)
                    break
            else:
                groups.append((s, [i]))
        self.groups = [(s, np.array(idx)) for s, idx in groups]
        self._fast = all(isinstance(s, (Ball, Box, Halfspace)) for s in self.sets)
        if self._fast:
            n, m = len(self.sets), self.sets[0].dim
            self._lo = np.full((n, m), -np.inf)
            self._hi = np.full((n, m), np.inf)
            self._c = np.zeros((n, m))
            self._r = np.full(n, np.inf)
            self._a = np.zeros((n, m))
            self._b = np.full(n, np.inf)
            self._aa = np.ones(n)
            for i, s in enumerate(self.sets):
                if isinstance(s, Box):
                    self._lo[i], self._hi[i] = s.lo, s.hi
                elif isinstance(s, Ball):
                    self._c[i], self._r[i] = s.center, s.radius
                else:
                    self._a[i], self._b[i] = s.normal, s.offset
                    self._aa[i] = s.normal @ s.normal
            self._has_hs = any(isinstance(s, Halfspace) for s in self.sets)

    def __call__(self, X):
        if self._fast:
            Y = np.minimum(np.maximum(X, self._lo), self._hi)
            d = Y - self._c
            r = np.sqrt(np.einsum("ij,ij->i", d, d))
            far = r > self._r
            if far.any():
                scale = np.where(far, self._r / np.where(far, r, 1.0), 1.0)
                Y = np.where(far[:, None], self._c + d * scale[:, None], Y)
            if self._has_hs:
                ex = np.einsum("ij,ij->i", Y, self._a) - self._b
                Y = Y - (np.maximum(ex, 0.0) / self._aa)[:, None] * self._a
            return Y
        out = np.empty_like(X)
        for s, idx in self.groups:
            out[idx] = s._project(X[idx])
        return out

    def contains(self, X, tol: float = 1e-12):
        if self._fast:
            ok = np.all((X >= self._lo - tol) & (X <= self._hi + tol), axis=1)
            d = X - self._c
            ok &= np.sqrt(np.einsum("ij,ij->i", d, d)) <= self._r + tol
            if self._has_hs:
                ok &= np.einsum("ij,ij->i", X, self._a) - self._b <= tol * np.sqrt(self._aa)
            return ok
        ok = np.empty(len(X), dtype=bool)
        for s, idx in self.groups:
            ok[idx] = s.contains(X[idx], tol)
        return ok
