import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import rosen, rosen_der

from selfscaled.testfns import FunctionProblem, grad_check, quadratic_xy, rosenbrock

coords = st.floats(-2.0, 2.0, allow_nan=False)


def test_rosenbrock_known_values():
    p = rosenbrock(2)
    assert p.eval_f(np.array([1.0, 1.0])) == 0.0
    assert np.array_equal(p.eval_grad(np.ones(2)), np.zeros(2))
    # 100 (0.25 - 0.5)^2 + 0.25 = 6.5 at (0.5, 0.5)
    assert p.eval_f(np.array([0.5, 0.5])) == pytest.approx(6.5, abs=1e-15)
    # d/dx1 = -400 x1 (x2 - x1^2) - 2 (1 - x1), d/dx2 = 200 (x2 - x1^2)
    assert p.eval_grad(np.array([0.5, 0.5])).tolist() == [-51.0, 50.0]


def test_grad_check_examples():
    assert grad_check(rosenbrock(5), np.full(5, 0.5)) <= 1e-6
    assert grad_check(rosenbrock(2), np.ones(2)) <= 1e-9


def test_rosenbrock_dimension_guard():
    with pytest.raises(ValueError):
        rosenbrock(1)


@pytest.mark.parametrize("n", [2, 5, 10, 20])
def test_rosenbrock_matches_scipy(n):
    rng = np.random.default_rng(n)
    p = rosenbrock(n)
    for _ in range(10):
        x = rng.uniform(-2, 2, n)
        assert p.eval_f(x) == pytest.approx(rosen(x), rel=1e-14)
        assert np.allclose(p.eval_grad(x), rosen_der(x), rtol=1e-13, atol=1e-12)


@given(st.lists(coords, min_size=2, max_size=20))
def test_rosenbrock_nonnegative(xs):
    x = np.array(xs)
    f = rosenbrock(len(xs)).eval_f(x)
    assert f >= 0.0
    if np.abs(x - 1.0).max() > 1e-6:
        assert f > 0.0


@pytest.mark.parametrize("n", [2, 5, 10, 20])
def test_rosenbrock_grad_check_random_points(n):
    rng = np.random.default_rng(100 + n)
    p = rosenbrock(n)
    worst = max(grad_check(p, rng.uniform(-2, 2, n)) for _ in range(100))
    assert worst <= 1e-6


def test_quadratic_xy():
    p = quadratic_xy()
    assert p.eval_f(np.zeros(2)) == 0.0
    assert p.eval_f(np.full(2, 1 - 3 * (1 / 3))) == 0.0
    assert p.eval_f(np.array([1.0, 1.0])) == 3.0
    assert p.eval_f(np.array([-2.0, -2.0])) == 12.0
    assert p.eval_grad(np.array([1.0, 1.0])).tolist() == [3.0, 3.0]
    assert grad_check(p, np.array([1.0, 1.0])) <= 1e-9


def test_counters():
    p = rosenbrock(3)
    x = np.zeros(3)
    p.eval_f(x)
    p.eval_f(x)
    p.eval_grad(x)
    p.eval_fg(x)
    assert (p.n_fev, p.n_gev) == (3, 2)
    p.reset_counters()
    assert (p.n_fev, p.n_gev) == (0, 0)


def test_grad_check_flags_wrong_gradient():
    p = FunctionProblem(1, lambda x: float(x[0] ** 2), lambda x: 3.0 * x)
    assert grad_check(p, np.array([1.0])) > 0.1
