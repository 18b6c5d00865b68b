"""
Scenario files, assumption checks, and run orchestration.

A scenario is a YAML document. Agents are numbered from 1 in the file and in
every message. Minimal continuous-time example::

    name: two-agents
    family: ct                # ct | dt
    dimension: 2
    step: 0.1                 # Euler step (ct) or sample time T (dt)
    horizon: 100.0            # seconds
    stride: 10                # record every 10 steps
    seed: 0
    q0: 1.0
    initial: {lo: [-1, -1], hi: [1, 1], project: false}   # or x0: [[..], ..]
    feasible_point: [0.0, 0.0]
    reference: [0.0, 0.0]     # optional known optimum
    agents:
      - objective: {shifted_power: {shift: [1, 0], exponent: 2}}
        set: {ball: {center: [0, 0], radius: 3}}
      - objective: {quadratic: {Q: [[1, 0], [0, 1]], q: [0, 0], r: 0}}
        set: {box: {lo: [-.inf, -1], hi: [.inf, 1]}}
    schedule:
      period: 2.0             # epochs replay cyclically with this period
      dwell: 1.0              # d_w (ct only)
      window: 2.0             # M
      epochs:
        - start: 0.0
          undirected: [[1, 2, 0.5]]
        - start: 1.0
          edges: [[1, 2, 0.5], [2, 1, 0.5]]   # [i, j, a_ij]: i hears j

Discrete-time scenarios add ``dt: {mode: projected | mixed, gamma: 0.5}``,
give epoch starts and ``period``/``window`` in steps, and list self weights
with ``diag: [...]``. A full ``weights`` matrix is accepted instead of edge
lists.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from . import graph as gr
from .convex import Ball, Box, set_from_record
from .ct_solver import simulate_ct
from .dt_solver import MIXED, PROJECTED, DtParams, simulate_dt
from .errors import (
    ScenarioParseError,
    ScenarioValidationError,
    SimulationError,
    StepAlignmentError,
    UnsupportedError,
)
from .metrics import trajectory_metrics
from .objective import minimizer_set_bound, objective_from_record, bench_family

log = logging.getLogger(__name__)

A_START = "Projected-mode start (x_i(0) in H_i)"
A_ALIGN = "Step alignment"
WITNESS_TOL = 1e-9
BENCH_OPTIMUM = (-0.5, 1.0)
BENCH_HORIZON = {"ct": 50000.0, "dt": 30000.0}
VARIANTS = ("ct", "dt-mixed", "dt-projected")


@dataclass(eq=False)
class Scenario:
    """Complete experiment description."""

    name: str
    family: str
    dimension: int
    objectives: list
    sets: list
    schedule: gr.GraphSchedule
    step: float = 0.1
    horizon: float = 100.0
    stride: int = 10
    seed: int = 0
    q0: object = 1.0
    x0: np.ndarray | None = None
    init_lo: np.ndarray | None = None
    init_hi: np.ndarray | None = None
    init_project: bool = False
    dt_params: DtParams | None = None
    feasible_point: np.ndarray | None = None
    reference: np.ndarray | None = None

    @property
    def n(self):
        return len(self.objectives)

    def initial_state(self):
        """``(X0, q0)`` arrays. Random starts are drawn from ``seed``."""
        if self.x0 is not None:
            X = np.array(self.x0, dtype=float)
        else:
            rng = np.random.default_rng(self.seed)
            X = rng.uniform(self.init_lo, self.init_hi, size=(self.n, self.dimension))
            if self.init_project:
                X = np.array([s.project(x) for s, x in zip(self.sets, X)])
        q = np.broadcast_to(np.asarray(self.q0, dtype=float), (self.n,)).copy()
        return X, q

    def with_overrides(self, seed=None, stride=None, horizon=None):
        kw = {}
        if seed is not None:
            kw["seed"] = int(seed)
        if stride is not None:
            kw["stride"] = int(stride)
        if horizon is not None:
            kw["horizon"] = float(horizon)
        return replace(self, **kw)

    def __eq__(self, other):
        if not isinstance(other, Scenario):
            return NotImplemented
        return to_dict(self) == to_dict(other)


# --------------------------------------------------------------------------
# YAML with source positions

class _Marked(dict):
    mark = None
    key_marks: dict


class _MarkedList(list):
    mark = None


class _Loader(yaml.SafeLoader):
    pass


def _construct_mapping(loader, node):
    loader.flatten_mapping(node)
    d = _Marked()
    d.mark = node.start_mark
    d.key_marks = {}
    for k_node, v_node in node.value:
        key = loader.construct_object(k_node, deep=True)
        d[key] = loader.construct_object(v_node, deep=True)
        d.key_marks[key] = v_node.start_mark
    return d


def _construct_seq(loader, node):
    out = _MarkedList(loader.construct_object(c, deep=True) for c in node.value)
    out.mark = node.start_mark
    return out


_Loader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_mapping)
_Loader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_SEQUENCE_TAG, _construct_seq)


def _pos(obj, key=None):
    mark = None
    if key is not None and isinstance(obj, _Marked):
        mark = obj.key_marks.get(key)
    if mark is None:
        mark = getattr(obj, "mark", None)
    return (mark.line + 1, mark.column + 1) if mark is not None else (None, None)


def _fail(msg, obj=None, key=None):
    line, col = _pos(obj, key)
    raise ScenarioParseError(msg, line, col)


def _req(d, key, what="scenario"):
    if not isinstance(d, dict):
        _fail(f"{what} must be a mapping", d)
    if key not in d:
        _fail(f"{what} is missing required key {key!r}", d)
    return d[key]


def _vector(v, m, what, ctx, key):
    try:
        a = np.array(v, dtype=float).reshape(-1)
    except (TypeError, ValueError):
        _fail(f"{what} must be a list of numbers", ctx, key)
    if a.size != m:
        _fail(f"{what} has length {a.size}, expected dimension {m}", ctx, key)
    return a


def _graph_from_record(rec, n, family):
    if "weights" in rec:
        w = np.array(rec["weights"], dtype=float)
        if w.shape != (n, n):
            _fail(f"weights must be {n}x{n}", rec, "weights")
    else:
        w = np.zeros((n, n))
        for key, sym in (("edges", False), ("undirected", True)):
            for e in rec.get(key, []) or []:
                if len(e) != 3:
                    _fail("edge entries are [i, j, weight]", rec, key)
                i, j, a = int(e[0]) - 1, int(e[1]) - 1, float(e[2])
                if not (0 <= i < n and 0 <= j < n) or i == j:
                    _fail(f"bad edge {list(e)} for {n} agents", rec, key)
                w[i, j] = a
                if sym:
                    w[j, i] = a
        if "diag" in rec:
            diag = np.array(rec["diag"], dtype=float)
            if diag.shape != (n,):
                _fail(f"diag must have {n} entries", rec, "diag")
            w[np.diag_indices(n)] = diag
    try:
        return gr.WeightedDigraph(w, family=family, eta=rec.get("eta"))
    except ValueError as err:
        _fail(f"invalid graph: {err}", rec)


def _schedule_from_record(rec, n, family):
    epochs = _req(rec, "epochs", "schedule")
    if not isinstance(epochs, list) or not epochs:
        _fail("schedule.epochs must be a nonempty list", rec, "epochs")
    starts, graphs = [], []
    for ep in epochs:
        starts.append(float(_req(ep, "start", "epoch")))
        graphs.append(_graph_from_record(ep, n, family))
    period = rec.get("period")
    if period is None:
        period = starts[-1] + 1.0 if len(starts) == 1 else starts[-1] + (starts[-1] - starts[-2])
    try:
        return gr.GraphSchedule(
            tuple(starts), tuple(graphs), float(period),
            dwell=None if rec.get("dwell") is None else float(rec["dwell"]),
            window=None if rec.get("window") is None else float(rec["window"]),
            cyclic=bool(rec.get("cyclic", True)),
        )
    except ValueError as err:
        _fail(f"invalid schedule: {err}", rec)


def parse_scenario(text: str, validate: bool = True) -> Scenario:
    """Parse (and by default validate) scenario YAML text.

    Raises
    ------
    ScenarioParseError
        Malformed YAML or structure, with line and column.
    ScenarioValidationError
        Well-formed scenario violating an assumption; ``err.issues`` names it.
    """
    if not text or not text.strip():
        raise ScenarioParseError("empty scenario", 1, 1)
    try:
        doc = yaml.load(text, Loader=_Loader)
    except yaml.MarkedYAMLError as err:
        mark = err.problem_mark or err.context_mark
        raise ScenarioParseError(f"YAML syntax error: {err.problem}", mark.line + 1, mark.column + 1) from err
    if not isinstance(doc, dict):
        raise ScenarioParseError("scenario must be a YAML mapping", 1, 1)

    issues = []
    family = str(_req(doc, "family")).lower()
    if family not in gr.FAMILIES:
        _fail(f"family must be 'ct' or 'dt', got {family!r}", doc, "family")
    m = int(_req(doc, "dimension"))
    agents = _req(doc, "agents")
    if not isinstance(agents, list) or not agents:
        _fail("agents must be a nonempty list", doc, "agents")
    n = len(agents)
    objectives, sets = [], []
    for idx, ag in enumerate(agents, 1):
        orec = _req(ag, "objective", f"agent {idx}")
        try:
            f = objective_from_record(orec)
        except (KeyError, TypeError) as err:
            _fail(f"agent {idx}: malformed objective ({err})", ag, "objective")
        except ValueError as err:
            if "positive definite" in str(err):
                issues.append((gr.A_MINIMIZERS, f"agent {idx}: {err}"))
                f = None
            else:
                _fail(f"agent {idx}: {err}", ag, "objective")
        if f is not None and f.dim != m:
            _fail(f"agent {idx}: objective dimension {f.dim} != {m}", ag, "objective")
        srec = _req(ag, "set", f"agent {idx}")
        try:
            s = set_from_record(srec)
        except (KeyError, TypeError, ValueError) as err:
            _fail(f"agent {idx}: malformed set ({err})", ag, "set")
        if s.dim != m:
            _fail(f"agent {idx}: set dimension {s.dim} != {m}", ag, "set")
        objectives.append(f)
        sets.append(s)

    schedule = _schedule_from_record(_req(doc, "schedule"), n, family)

    x0 = lo = hi = None
    project_init = False
    if "x0" in doc:
        x0 = np.array(doc["x0"], dtype=float)
        if x0.shape != (n, m):
            _fail(f"x0 must be {n}x{m}", doc, "x0")
    else:
        init = _req(doc, "initial")
        lo = _vector(_req(init, "lo", "initial"), m, "initial.lo", init, "lo")
        hi = _vector(_req(init, "hi", "initial"), m, "initial.hi", init, "hi")
        if np.any(lo > hi):
            _fail("initial.lo must not exceed initial.hi", init)
        project_init = bool(init.get("project", False))

    dt_params = None
    step = float(doc.get("step", 0.1))
    if family == gr.DT:
        dtrec = doc.get("dt") or {}
        mode = str(dtrec.get("mode", PROJECTED))
        try:
            dt_params = DtParams.for_mode(mode, n, T=step, gamma=dtrec.get("gamma"))
        except ValueError as err:
            _fail(f"dt: {err}", doc, "dt")

    def opt_vec(key):
        return None if doc.get(key) is None else _vector(doc[key], m, key, doc, key)

    sc = Scenario(
        name=str(doc.get("name", "scenario")),
        family=family,
        dimension=m,
        objectives=objectives,
        sets=sets,
        schedule=schedule,
        step=step,
        horizon=float(doc.get("horizon", 100.0)),
        stride=int(doc.get("stride", 10)),
        seed=int(doc.get("seed", 0)),
        q0=_q0(doc.get("q0", 1.0), n, doc),
        x0=x0,
        init_lo=lo,
        init_hi=hi,
        init_project=project_init,
        dt_params=dt_params,
        feasible_point=opt_vec("feasible_point"),
        reference=opt_vec("reference"),
    )
    if issues:
        raise ScenarioValidationError(issues)
    if validate:
        issues = validate_scenario(sc)
        if issues:
            raise ScenarioValidationError(issues)
    return sc


def _q0(v, n, doc):
    q = np.asarray(v, dtype=float)
    if q.ndim == 0:
        return float(q)
    if q.shape != (n,):
        _fail(f"q0 must be a scalar or have {n} entries", doc, "q0")
    return tuple(float(x) for x in q)


def load_scenario(path, validate: bool = True) -> Scenario:
    return parse_scenario(Path(path).read_text(), validate=validate)


# --------------------------------------------------------------------------
# Serialization

def _graph_record(g, family):
    rec = {"edges": [[i + 1, j + 1, w] for i, j, w in g.edges()]}
    if family == gr.DT:
        rec["diag"] = [float(v) for v in np.diag(g.weights)]
    return rec


def to_dict(sc: Scenario) -> dict:
    d = {
        "name": sc.name,
        "family": sc.family,
        "dimension": sc.dimension,
        "step": sc.step,
        "horizon": sc.horizon,
        "stride": sc.stride,
        "seed": sc.seed,
        "q0": sc.q0 if np.ndim(sc.q0) == 0 else [float(v) for v in sc.q0],
    }
    if sc.x0 is not None:
        d["x0"] = np.asarray(sc.x0, dtype=float).tolist()
    else:
        d["initial"] = {"lo": [float(v) for v in sc.init_lo], "hi": [float(v) for v in sc.init_hi], "project": sc.init_project}
    if sc.dt_params is not None:
        gam = set(sc.dt_params.gamma)
        d["dt"] = {"mode": sc.dt_params.mode, "gamma": gam.pop() if len(gam) == 1 else list(sc.dt_params.gamma)}
    if sc.feasible_point is not None:
        d["feasible_point"] = [float(v) for v in sc.feasible_point]
    if sc.reference is not None:
        d["reference"] = [float(v) for v in sc.reference]
    d["agents"] = [{"objective": f.to_record(), "set": s.to_record()} for f, s in zip(sc.objectives, sc.sets)]
    sch = sc.schedule
    srec = {"period": sch.period}
    if sch.dwell is not None:
        srec["dwell"] = sch.dwell
    if sch.window is not None:
        srec["window"] = sch.window
    if not sch.cyclic:
        srec["cyclic"] = False
    srec["epochs"] = [dict(start=s, **_graph_record(g, sc.family)) for s, g in zip(sch.starts, sch.graphs)]
    d["schedule"] = srec
    return d


def serialize_scenario(sc: Scenario) -> str:
    return yaml.safe_dump(to_dict(sc), sort_keys=False, default_flow_style=None, width=100)


# --------------------------------------------------------------------------
# Validation

def validate_scenario(sc: Scenario):
    """All assumption violations of ``sc`` as ``(assumption, detail)`` pairs."""
    issues = []
    if len(sc.sets) != sc.n or sc.schedule.n != sc.n:
        issues.append(("Structure", f"{sc.n} objectives, {len(sc.sets)} sets, {sc.schedule.n}-agent graphs"))
        return issues
    for i, f in enumerate(sc.objectives, 1):
        try:
            minimizer_set_bound(f)
        except UnsupportedError:
            pass  # sums of coercive terms are coercive; nothing to certify numerically
        except np.linalg.LinAlgError as err:
            issues.append((gr.A_MINIMIZERS, f"agent {i}: {err}"))

    p = sc.feasible_point
    if p is None:
        issues.append((gr.A_FEASIBLE, "no feasible_point witness given"))
    else:
        for i, s in enumerate(sc.sets, 1):
            d = float(s.distance(p))
            if d > WITNESS_TOL:
                issues.append((gr.A_FEASIBLE, f"witness {list(map(float, p))} is {d:.3g} away from agent {i}'s set"))

    rep = gr.validate_schedule(sc.schedule, sc.family)
    issues.extend(rep.issues)

    if sc.family == gr.CT:
        try:
            sc.schedule.epoch_steps(sc.step)
        except StepAlignmentError as err:
            issues.append((A_ALIGN, str(err)))
    else:
        try:
            sc.schedule.epoch_steps(1.0)
        except StepAlignmentError as err:
            issues.append((A_ALIGN, "discrete-time epoch starts must be integer steps: " + str(err)))
        if sc.dt_params is not None and sc.dt_params.mode == PROJECTED:
            if sc.x0 is not None:
                for i, (s, x) in enumerate(zip(sc.sets, sc.x0), 1):
                    if not s.contains(x, 1e-12):
                        issues.append((A_START, f"agent {i} starts {float(s.distance(x)):.3g} outside its set"))
            elif not sc.init_project:
                issues.append((A_START, "random initial states must set initial.project: true"))
    return issues


def a_priori_bound(sc: Scenario) -> float:
    """Envelope used by the boundedness checks.

    Ten times the sum of the largest initial norm, the largest minimizer
    norm and the witness norm. Empirical, not a constant from the
    convergence theory.
    """
    if sc.x0 is not None:
        r0 = float(np.linalg.norm(sc.x0, axis=1).max())
    else:
        r0 = float(np.linalg.norm(np.maximum(np.abs(sc.init_lo), np.abs(sc.init_hi))))
    rmin = 0.0
    for f in sc.objectives:
        try:
            b = minimizer_set_bound(f)
            rmin = max(rmin, float(np.linalg.norm(b.center)) + b.radius)
        except UnsupportedError:
            pass
    rfeas = 0.0 if sc.feasible_point is None else float(np.linalg.norm(sc.feasible_point))
    return 10.0 * (r0 + rmin + rfeas)


# --------------------------------------------------------------------------
# Built-in 24-agent planar benchmark

def bench_sets():
    """The four planar constraint sets of the benchmark."""
    inf = np.inf
    return {
        1: Ball([0.0, 0.0], 3.0),
        2: Box([-inf, 1.0], [0.5, inf]),
        3: Ball([0.0, 3.0], 3.0),
        4: Box([-0.5, 1.0], [inf, inf]),
    }


def bench_assignment(n=24):
    """``(family, j)`` for every agent, families interleaved along the ring."""
    return [((k % 8) + 1, k // 8 + 1) for k in range(n)]


def builtin_benchmark(variant: str = "ct", scale: float = 1.0, seed: int = 0, horizon=None) -> Scenario:
    """The 24-agent benchmark on the two-row ring.

    Agents 1-12 form the top row and 24-13 the bottom row; horizontal links
    plus the end links 1-24 and 12-13 close a 24-cycle. The schedule cycles
    through 12 subgraphs, each dropping the two opposite ring edges
    ``(r, r+1)`` and ``(r+12, r+13)``; each subgraph is two disconnected
    paths and any two consecutive ones cover the whole ring. Every epoch
    lasts 1 s (10 steps).

    Continuous-time graphs use weight 0.5 on every edge; discrete-time
    graphs use Metropolis weights, since uniform 0.5 weights with self loops
    are not doubly stochastic on this ring.
    """
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    n, h = 24, 0.1
    family = gr.CT if variant == "ct" else gr.DT
    assign = bench_assignment(n)
    objectives = [bench_family(fam, j) for fam, j in assign]
    setmap = bench_sets()
    sets = [setmap[(fam - 1) % 4 + 1] for fam, _ in assign]

    ring = gr.ring_edges(n)
    subgraphs = [[e for k, e in enumerate(ring) if k not in (r, r + n // 2)] for r in range(n // 2)]
    if family == gr.CT:
        graphs = [gr.from_edges(n, sub, family=gr.CT, weight=0.5) for sub in subgraphs]
        unit, dwell, window = 1.0, 1.0, 2.0
    else:
        graphs = [gr.metropolis_weights(sub, n) for sub in subgraphs]
        unit, dwell, window = 10, None, 20
    schedule = gr.GraphSchedule(
        tuple(float(e * unit) for e in range(len(graphs))), tuple(graphs), float(len(graphs) * unit),
        dwell=dwell, window=float(window),
    )
    dt_params = None
    if family == gr.DT:
        dt_params = DtParams.for_mode(PROJECTED if variant == "dt-projected" else MIXED, n, T=h)
    return Scenario(
        name=f"ring24-{variant}" + (f"-x{scale:g}" if scale != 1 else ""),
        family=family,
        dimension=2,
        objectives=objectives,
        sets=sets,
        schedule=schedule,
        step=h,
        horizon=float(horizon if horizon is not None else BENCH_HORIZON[family]),
        # ten full switching periods, so samples share the same phase of the cycle
        stride=10 * len(graphs) * round(unit / h if family == gr.CT else unit),
        seed=seed,
        q0=1.0,
        init_lo=np.array([-1.0, -1.0]) * scale,
        init_hi=np.array([1.0, 1.0]) * scale,
        init_project=variant == "dt-projected",
        dt_params=dt_params,
        feasible_point=np.array(BENCH_OPTIMUM),
        reference=np.array(BENCH_OPTIMUM),
    )


# --------------------------------------------------------------------------
# Running

def _fmt(v):
    return format(float(v), ".17g")


def simulate(sc: Scenario, stride=None, horizon=None):
    if sc.family == gr.CT:
        return simulate_ct(sc, stride=stride, horizon=horizon)
    return simulate_dt(sc, stride=stride, horizon=horizon)


def trajectory_csv(traj, sc: Scenario) -> str:
    """Per-(sample, agent) rows; swarm-level columns repeat within a sample."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    m = sc.dimension
    header = ["t", "agent"] + [f"x_{l + 1}" for l in range(m)] + ["q", "dist_Hi", "consensus_err", "V1"]
    dt = traj.family == gr.DT
    if dt:
        header += ["gr_zero_branch", "gamma"]
    w.writerow(header)
    for s, ms in enumerate(traj.metrics):
        X = traj.x[s]
        dists = [float(sset.distance(x)) for sset, x in zip(sc.sets, X)]
        for i in range(sc.n):
            row = [_fmt(traj.times[s]), i + 1] + [_fmt(v) for v in X[i]]
            row += [_fmt(traj.q[s, i]), _fmt(dists[i]), _fmt(ms.consensus_err), _fmt(ms.V1)]
            if dt:
                row += [int(traj.fired[s, i]), _fmt(traj.gamma[i])]
            w.writerow(row)
    return buf.getvalue()


def metrics_csv(metrics) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "consensus_err", "feas_err", "team_value", "V1", "opt_dist"])
    for ms in metrics:
        w.writerow([
            _fmt(ms.t), _fmt(ms.consensus_err), _fmt(ms.feas_err), _fmt(ms.team_value), _fmt(ms.V1),
            "" if ms.opt_dist is None else _fmt(ms.opt_dist),
        ])
    return buf.getvalue()


@dataclass
class RunReport:
    scenario: str
    family: str
    steps: int
    samples: int
    values: dict = field(default_factory=dict)
    complete: bool = True

    def text(self) -> str:
        lines = [f"scenario: {self.scenario}", f"family: {self.family}", f"steps: {self.steps}", f"samples: {self.samples}"]
        for k, v in self.values.items():
            if isinstance(v, (list, tuple)):
                v = "[" + ", ".join(_fmt(x) for x in v) + "]"
            elif isinstance(v, float):
                v = _fmt(v)
            lines.append(f"{k}: {v}")
        lines.append(f"complete: {self.complete}")
        return "\n".join(lines) + "\n"


def _report_values(sc, traj, metrics):
    last = metrics[-1]
    v = {
        "agents": sc.n,
        "dimension": sc.dimension,
        "step": float(sc.step),
        "horizon": float(traj.times[-1]),
        "assumptions": "pass",
        "terminal_mean": [float(x) for x in traj.x[-1].mean(axis=0)],
        "terminal_consensus_err": last.consensus_err,
        "terminal_feas_err": last.feas_err,
        "terminal_team_value": last.team_value,
        "terminal_V1": last.V1,
    }
    if sc.reference is not None:
        v["reference"] = [float(x) for x in sc.reference]
        v["terminal_opt_dist"] = last.opt_dist
        v["terminal_V2"] = last.V2
        v["max_agent_dist_to_reference"] = float(np.linalg.norm(traj.x[-1] - sc.reference, axis=1).max())
    qf = traj.q[-1]
    v["q_ratio_spread"] = float(qf.max() / qf.min() - 1.0)
    v["max_state_norm"] = traj.max_norm
    v["a_priori_bound"] = a_priori_bound(sc)
    if traj.family == gr.DT:
        fires = traj.fires_per_step
        v["mode"] = sc.dt_params.mode
        v["gr_zero_branch_firings"] = int(fires.sum())
        nz = np.nonzero(fires)[0]
        v["gr_zero_branch_last_step"] = int(nz[-1]) if nz.size else -1
        v["feasibility_violations"] = traj.feasibility_violations if sc.dt_params.mode == PROJECTED else "n/a"
    return v


def run(sc: Scenario, out_dir, figures: bool = True) -> RunReport:
    """Validate, simulate and write ``trajectory.csv``, ``metrics.csv``,
    ``report.txt`` (and figures) into ``out_dir``.

    Raises ``ScenarioValidationError`` before any stepping if an assumption
    fails. If the solver fails, outputs for the recorded prefix are written
    before the ``SimulationError`` propagates.
    """
    issues = validate_scenario(sc)
    if issues:
        raise ScenarioValidationError(issues)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    error = None
    try:
        traj = simulate(sc)
    except SimulationError as err:
        error, traj = err, err.trajectory
    metrics = trajectory_metrics(traj, sc.sets, sc.objectives, sc.reference)
    (out / "trajectory.csv").write_text(trajectory_csv(traj, sc))
    (out / "metrics.csv").write_text(metrics_csv(metrics))
    report = RunReport(sc.name, sc.family, int(traj.steps[-1]), traj.n_samples, _report_values(sc, traj, metrics), complete=error is None)
    if error is not None:
        report.values["error"] = str(error)
    (out / "report.txt").write_text(report.text())
    if figures:
        from .plotting import plot_metrics, plot_trajectories

        plot_trajectories(traj, out / "trajectories.png", title=sc.name, reference=sc.reference)
        plot_metrics(metrics, out / "metrics.png", title=sc.name)
    if error is not None:
        raise error
    return report
