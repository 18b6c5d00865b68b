import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from distopt.convex import Ball
from distopt.errors import DimensionError, UnsupportedError
from distopt.objective import (
    Quadratic,
    ShiftedPower,
    StackedGradient,
    Sum,
    grad_check,
    minimizer_set_bound,
    objective_from_record,
    bench_family,
)
from distopt.scenario import builtin_benchmark, bench_assignment

from oracles import central_difference, bench_team_value


def bench_objectives():
    return [bench_family(f, j) for f, j in bench_assignment()]


def test_eval_and_grad_examples():
    f = ShiftedPower([1, 0], 2)
    assert f.eval([0, 0]) == 0.5
    np.testing.assert_array_equal(f.grad([0, 0]), [1, 0])
    np.testing.assert_array_equal(ShiftedPower([1, 0], 4).grad([1, 0]), [8, 0])
    g = bench_family(5, 1)
    np.testing.assert_allclose(g.shift, [0, 0])
    c = 0.9 + 0.1 * 1
    assert bench_family(8, 1).eval(-np.array([c, c])) == 0


def test_bench_family_shift_patterns():
    # shift applied to no coordinate, the first, the second, or both
    for fam, pattern in zip(range(1, 9), [(0, 0), (1, 0), (0, 1), (1, 1)] * 2):
        for j in (1, 2, 3):
            f = bench_family(fam, j)
            np.testing.assert_allclose(f.shift, np.array(pattern) * (0.9 + 0.1 * j))
            assert f.exponent == (2 if fam <= 4 else 4)
    with pytest.raises(ValueError):
        bench_family(9, 1)


def test_team_value_matches_hand_sum_and_ranks_optimum():
    fs = bench_objectives()
    for s in ([-0.5, 1.0], [0.0, 0.0], [0.3, -2.0]):
        assert sum(f.eval(s) for f in fs) == pytest.approx(float(bench_team_value(np.array(s))[0]), rel=1e-12)
    F = lambda s: sum(f.eval(s) for f in fs)  # noqa: E731
    # (0, 0) is infeasible and has the lower value; the optimum is constrained
    assert F([-0.5, 1.0]) == pytest.approx(49.3467, abs=1e-9)
    assert F([0.0, 0.0]) == pytest.approx(11.8377, abs=1e-4)
    assert F([-0.5, 1.0]) < F([0.0, 1.0]) < F([0.5, 1.0])
    assert F([-0.5, 1.0]) < F([-0.5, 1.5])


def test_team_gradient_at_constrained_optimum_points_into_the_active_constraints():
    # the optimum sits on x = -0.5 and y = 1; the gradient is not zero there
    g = sum(f.grad([-0.5, 1.0]) for f in bench_objectives())
    np.testing.assert_allclose(g, [1.218, 80.418], atol=1e-9)
    assert g[0] > 0 and g[1] > 0


def test_builtin_objectives_are_the_24_family_members():
    sc = builtin_benchmark("ct")
    assert len(sc.objectives) == 24
    assert sorted(bench_assignment()) == [(f, j) for f in range(1, 9) for j in (1, 2, 3)]
    for f, (fam, j) in zip(sc.objectives, bench_assignment()):
        assert f == bench_family(fam, j)


def test_dimension_errors():
    with pytest.raises(DimensionError):
        ShiftedPower([1, 0], 2).eval([1, 2, 3])
    with pytest.raises(DimensionError):
        Quadratic(np.eye(2)).grad([1.0])


def test_construction_errors():
    with pytest.raises(ValueError):
        ShiftedPower([0, 0], 3)
    with pytest.raises(ValueError):
        ShiftedPower([0, 0], 0)
    with pytest.raises(ValueError, match="positive definite"):
        Quadratic(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        Quadratic([[1, 2], [0, 1]])


def test_grad_check_examples():
    assert grad_check(ShiftedPower([0.3, -1.2], 4), [0.7, 0.1]) <= 1e-6
    assert grad_check(Quadratic([[2, 0.5], [0.5, 1]]), [0, 0]) <= 1e-9
    with pytest.raises(ValueError):
        grad_check(ShiftedPower([0, 0], 2), [0, 0], h=0)


def test_minimizer_set_bound_examples():
    assert minimizer_set_bound(ShiftedPower([1, -2], 4)) == Ball([-1, 2], 0)
    assert minimizer_set_bound(Quadratic(np.eye(2), [1, 0])) == Ball([-1, 0], 0)
    c1, c2 = np.array([1.0, 0.5]), np.array([-0.2, 2.0])
    b = minimizer_set_bound(Sum((ShiftedPower(c1, 2), ShiftedPower(c2, 2))))
    np.testing.assert_allclose(b.center, -(c1 + c2) / 2, atol=1e-15)
    assert b.radius == 0
    with pytest.raises(UnsupportedError):
        minimizer_set_bound(Sum((ShiftedPower(c1, 4), ShiftedPower(c2, 2))))


def test_records_round_trip():
    fs = [ShiftedPower([1, 2], 4), Quadratic([[2, 0], [0, 1]], [1, 1], 3), Sum((ShiftedPower([0, 1], 2), Quadratic(np.eye(2))))]
    for f in fs:
        assert objective_from_record(f.to_record()) == f
    with pytest.raises(ValueError):
        objective_from_record({"cubic": {}})


def test_stacked_gradient_matches_loop():
    rng = np.random.default_rng(1)
    fs = bench_objectives()
    X = rng.normal(size=(24, 2))
    np.testing.assert_allclose(StackedGradient(fs)(X), [f.grad(x) for f, x in zip(fs, X)], rtol=1e-15)
    mixed = fs[:3] + [Quadratic([[2, 0.3], [0.3, 1]], [1, 0])]
    np.testing.assert_allclose(StackedGradient(mixed)(X[:4]), [f.grad(x) for f, x in zip(mixed, X[:4])])


@st.composite
def objectives(draw):
    shift = draw(arrays(np.float64, 2, elements=st.floats(-2, 2)))
    kind = draw(st.sampled_from(["power", "quadratic", "sum"]))
    if kind == "power":
        return ShiftedPower(shift, draw(st.sampled_from([2, 4, 6])))
    M = draw(arrays(np.float64, (2, 2), elements=st.floats(-1, 1)))
    Q = M @ M.T + 0.1 * np.eye(2)
    quad = Quadratic(Q, shift)
    if kind == "quadratic":
        return quad
    return Sum((quad, ShiftedPower(-shift, 4)))


unit_box = arrays(np.float64, 2, elements=st.floats(-3, 3))


@settings(max_examples=200, deadline=None)
@given(objectives(), unit_box, unit_box, st.floats(0, 1))
def test_convexity_and_monotone_gradient(f, x, y, lam):
    z = lam * x + (1 - lam) * y
    assert f.eval(z) <= lam * f.eval(x) + (1 - lam) * f.eval(y) + 1e-9 * (1 + abs(f.eval(x)) + abs(f.eval(y)))
    assert (f.grad(x) - f.grad(y)) @ (x - y) >= -1e-9 * (1 + np.linalg.norm(x - y))


@settings(max_examples=100, deadline=None)
@given(objectives(), unit_box)
def test_gradient_matches_independent_central_difference(f, x):
    fd = central_difference(f.eval, x, h=1e-5)
    g = f.grad(x)
    assert np.all(np.abs(fd - g) <= 1e-6 * np.maximum(1.0, np.abs(g)))


@settings(max_examples=100, deadline=None)
@given(
    arrays(np.float64, 2, elements=st.floats(-2, 2)),
    st.sampled_from([2, 4, 6]),
    st.floats(0.1, 5),
    st.integers(0, 2**31),
)
def test_bounded_gradient_on_ball(shift, p, R, seed):
    f = ShiftedPower(shift, p)
    rng = np.random.default_rng(seed)
    u = rng.normal(size=(200, 2))
    pts = u / np.linalg.norm(u, axis=1, keepdims=True) * R * rng.uniform(size=(200, 1))
    gmax = max(np.linalg.norm(f.grad(x)) for x in pts)
    assert gmax <= p * (R + np.linalg.norm(shift)) ** (p - 1)


@settings(max_examples=100, deadline=None)
@given(objectives(), st.floats(0, 2 * np.pi))
def test_coercive_along_rays(f, angle):
    u = np.array([np.cos(angle), np.sin(angle)])
    vals = [f.eval(t * u) for t in (10, 20, 40, 80, 160)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
