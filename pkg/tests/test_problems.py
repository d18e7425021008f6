import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from hebsg import problems as P
from hebsg.core import evaluate
from oracles import l1_proj_active_set, l1_proj_lambda_search

vecs = arrays(np.float64, st.integers(1, 12), elements=st.floats(-50, 50))


# -- projections --------------------------------------------------------------

def test_l1_projection_examples():
    assert np.array_equal(P.project_l1_ball([0.2, -0.3], 1), [0.2, -0.3])
    assert np.allclose(P.project_l1_ball([3.0, 0.0], 1), [1, 0], atol=1e-15)
    assert np.allclose(P.project_l1_ball([1.0, 1.0], 1), [0.5, 0.5], atol=1e-15)


def test_l1_projection_rejects_bad_input():
    with pytest.raises(ValueError):
        P.project_l1_ball([1.0], 0)
    with pytest.raises(ValueError):
        P.project_l1_ball([1.0, 2.0], 1, method="bogus")


@pytest.mark.parametrize("method", ["sort", "pivot"])
@given(v=vecs, tau=st.floats(0.01, 20))
def test_l1_projection_feasible(method, v, tau):
    x = P.project_l1_ball(v, tau, method=method)
    assert np.abs(x).sum() <= tau * (1 + 1e-12)


@pytest.mark.parametrize("method", ["sort", "pivot"])
def test_l1_projection_feasible_under_cancellation(method):
    # threshold close to the entries: a - lam loses most significant digits
    x = P.project_l1_ball([33.0, 33.0, 33.0], 0.01, method=method)
    assert np.abs(x).sum() <= 0.01 * (1 + 1e-15)
    assert np.allclose(x, 0.01 / 3, rtol=1e-12, atol=0)


@given(v=arrays(np.float64, st.integers(1, 4), elements=st.floats(-10, 10)), tau=st.floats(0.05, 5))
def test_l1_projection_matches_active_set(v, tau):
    assert np.allclose(P.project_l1_ball(v, tau), l1_proj_active_set(v, tau), atol=1e-8, rtol=0)


@given(v=vecs, tau=st.floats(0.01, 20))
def test_l1_sort_and_pivot_agree(v, tau):
    a = P.project_l1_ball(v, tau, "sort")
    b = P.project_l1_ball(v, tau, "pivot")
    assert np.max(np.abs(a - b), initial=0) <= 1e-12 * max(1.0, np.abs(v).max(initial=0))


def test_l1_projection_matches_lambda_search(rng):
    for _ in range(200):
        n = int(rng.integers(1, 51))
        v = rng.standard_normal(n) * rng.uniform(0.1, 10)
        tau = rng.uniform(0.05, 5)
        assert np.allclose(P.project_l1_ball(v, tau), l1_proj_lambda_search(v, tau), atol=1e-8, rtol=0)


PROJECTIONS = {
    "box": lambda v: P.project_box(v, 0.7),
    "ball": lambda v: P.project_ball(v, 1.3),
    "l1-sort": lambda v: P.project_l1_ball(v, 2.0),
    "l1-pivot": lambda v: P.project_l1_ball(v, 2.0, method="pivot"),
}


@pytest.mark.parametrize("name", PROJECTIONS)
def test_projection_idempotent_and_nonexpansive(name, rng):
    proj = PROJECTIONS[name]
    for _ in range(1000):
        n = int(rng.integers(1, 8))
        x, y = rng.standard_normal((2, n)) * 3
        px, py = proj(x), proj(y)
        assert np.allclose(proj(px), px, atol=1e-10, rtol=0)
        assert np.linalg.norm(px - py) <= np.linalg.norm(x - y) + 1e-10


# -- power growth -------------------------------------------------------------

def test_power_growth_examples():
    p = P.PowerGrowthProblem(1, 0.5, 2)
    v, g = P.power_growth_oracle(p, np.array([1.0, 0.0]))
    assert v == 1 and np.allclose(g, [2, 0])
    v, g = P.power_growth_oracle(P.PowerGrowthProblem(1, 1, 1), np.array([0.5]))
    assert v == 0.5 and g[0] == 1
    v, g = P.power_growth_oracle(P.PowerGrowthProblem(2, 1 / 3, 3), np.array([0.0, 1.0, 0.0]))
    assert v == pytest.approx(2) and np.linalg.norm(g) == pytest.approx(6)
    v, g = P.power_growth_oracle(p, np.zeros(2))
    assert v == 0 and not g.any()


@given(c=st.floats(0.1, 5), theta=st.floats(0.2, 1), dim=st.integers(1, 5),
       pt=arrays(np.float64, 5, elements=st.floats(-1, 1)))
def test_power_growth_heb_equality_and_G(c, theta, dim, pt):
    prob = P.PowerGrowthProblem(c, theta, dim)
    inst = prob.instance()
    x = inst.project(pt[:dim])
    h, g = evaluate(inst, x)
    d = inst.distance(x)
    assert abs(h - c * d ** (1 / theta)) <= 1e-12 * (1 + h)
    assert np.linalg.norm(g) <= inst.heb.G * (1 + 1e-12)


def test_l1norm_problem_certificate(rng):
    inst = P.make_l1_norm_problem(4, radius=0.5)
    assert inst.heb.c == 1 and inst.heb.theta == 1 and inst.heb.G == 2
    for _ in range(200):
        x = inst.project(rng.uniform(-1, 1, 4))
        h, g = evaluate(inst, x)
        assert h >= inst.distance(x) - 1e-15
        assert np.linalg.norm(g) <= 2


# -- LAD ----------------------------------------------------------------------

def test_lad_oracle_hand():
    lad = P.LadProblem(np.array([[1.0], [-1.0]]), np.zeros(2), 5.0)
    v, g = P.lad_oracle(lad, np.array([1.0]))
    assert v == 2 and g[0] == 2
    v, g = P.lad_oracle(lad, np.array([0.0]))
    assert v == 0 and g[0] == 0


def test_lad_oracle_dimension_mismatch():
    lad = P.make_random_lad(4, 3, 1, 0)
    with pytest.raises(ValueError):
        P.lad_oracle(lad, np.zeros(2))
    with pytest.raises(ValueError):
        P.LadProblem(np.ones((3, 2)), np.ones(2), 1.0)


def _subgradient_inequality(inst, rng, n_x=20, n_y=100):
    worst = np.inf
    for _ in range(n_x):
        x = inst.project(rng.standard_normal(inst.dim))
        hx, g = evaluate(inst, x)
        for _ in range(n_y // 10):
            Y = inst.project(rng.standard_normal(inst.dim) * 2)
            hy, _ = evaluate(inst, Y)
            worst = min(worst, hy - hx - g @ (Y - x))
    return worst


def test_lad_subgradient_inequality(rng):
    inst = P.make_random_lad(5, 3, 1.0, 7).instance()
    x = inst.project(rng.standard_normal(3))
    hx, g = evaluate(inst, x)
    for _ in range(100):
        y = rng.standard_normal(3) * 2
        hy, _ = evaluate(inst, y)
        assert hy >= hx + g @ (y - x) - 1e-10
    assert _subgradient_inequality(inst, rng) >= -1e-10


def test_lad_certified_G_bounds_subgradients(rng):
    lad = P.make_random_lad(30, 8, 1.0, 3)
    for _ in range(500):
        _, g = P.lad_oracle(lad, lad.instance().project(rng.standard_normal(8)))
        assert np.linalg.norm(g) <= lad.G_certified * (1 + 1e-12)


def test_make_random_lad():
    a, b = P.make_random_lad(100, 50, 1, 0), P.make_random_lad(100, 50, 1, 0)
    assert a.E.shape == (100, 50) and a.b.shape == (100,)
    assert np.array_equal(a.E, b.E) and np.array_equal(a.b, b.b)
    assert not np.array_equal(a.E, P.make_random_lad(100, 50, 1, 1).E)
    one = P.make_random_lad(1, 1, 1, 0)
    e, bb = one.E[0, 0], one.b[0]
    # 1-D: minimise |e x - b| over |x| <= 1
    x_star = np.clip(bb / e, -1, 1)
    assert P.lad_oracle(one, np.array([x_star]))[0] == pytest.approx(max(0.0, abs(bb) - abs(e)), abs=1e-15)


def test_consistent_lad_declares_valid_heb(rng):
    lad, inst = P.make_consistent_lad(20, 5, 2.0, 1)
    for _ in range(300):
        x = inst.project(rng.standard_normal(5))
        h, g = evaluate(inst, x)
        assert h - inst.optimal_value >= inst.heb.c * inst.distance(x) * (1 - 1e-12)
        assert np.linalg.norm(g) <= inst.heb.G


# -- SVM ----------------------------------------------------------------------

def test_svm_oracle_hand():
    svm = P.SvmProblem(np.array([[1.0, 0.0]]), np.array([1.0]), 5.0)
    v, g = P.svm_oracle(svm, np.array([2.0, 0.0]))
    assert v == 0 and np.array_equal(g, [0, 0])
    v, g = P.svm_oracle(svm, np.zeros(2))
    assert v == 1 and np.array_equal(g, [-1, 0])
    v, g = P.svm_oracle(svm, np.array([1.0, 0.0]))
    assert v == 0 and not g.any()


def test_svm_subgradient_inequality(rng):
    inst = P.make_random_svm(12, 4, 2.0, 5).instance()
    assert _subgradient_inequality(inst, rng) >= -1e-10


def test_svm_validation():
    with pytest.raises(ValueError):
        P.SvmProblem(np.ones((2, 2)), np.array([1.0, 0.5]), 1)
    with pytest.raises(ValueError):
        P.svm_oracle(P.make_random_svm(3, 2, 1, 0), np.zeros(3))


def test_make_random_svm():
    a, b = P.make_random_svm(100, 50, 2, 0), P.make_random_svm(100, 50, 2, 0)
    assert a.C.shape == (100, 50) and set(np.unique(a.y)) <= {-1.0, 1.0}
    assert np.array_equal(a.C, b.C) and np.array_equal(a.y, b.y)
    assert a.G == pytest.approx(np.linalg.norm(a.C, axis=1).sum())


def test_separable_svm_reaches_zero():
    from hebsg.schedules import polynomial
    from hebsg.solvers import generic_sg

    svm = P.SvmProblem(np.array([[1.0, 0.2], [2.0, -0.1], [1.5, 0.0]]), np.ones(3), 2.0)
    rep = generic_sg(svm.instance(), polynomial(0.5, 0.5), 200, np.zeros(2))
    assert rep.best_obj == 0.0
