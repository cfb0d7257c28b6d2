import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hermite_cosim.errors import ConfigError, EvaluationFailure, ZeroDirection
from hermite_cosim.solvers import (JfmConfig, Method, Outcome, check_convergence, gmres,
                                   jvp_fd, solve)
from hermite_cosim.solvers.base import lstsq_drop_oldest
from hermite_cosim.solvers.newton import backtrack

JFM = ("newtonls", "anderson", "ngmres", "ngmres-ls")


def contraction(rng, n, radius):
    q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    return q @ np.diag(radius * rng.uniform(0.3, 1.0, n) * rng.choice([-1, 1], n)) @ q.T


# -- convergence test ------------------------------------------------------------

def test_convergence_test_examples():
    assert check_convergence(np.zeros(3), np.ones(3), 1e-4, 1e-4)
    assert check_convergence([1e-5], [1.0], 1e-4, 1e-4)
    assert not check_convergence([1e-3], [1.0], 1e-4, 1e-4)


def test_convergence_test_is_componentwise():
    # one bad component is enough to fail
    assert not check_convergence([0.0, 1e-3], [1.0, 1.0], 1e-4, 1e-4)
    # large iterate components widen the band
    assert check_convergence([1e-3], [100.0], 1e-4, 1e-4)


# -- building blocks ---------------------------------------------------------------

def test_jvp_linear_and_homogeneous(rng):
    A = rng.normal(size=(4, 4))
    F = lambda x: A @ x  # noqa: E731
    x, v = rng.normal(size=4), rng.normal(size=4)
    jv = jvp_fd(F, x, v, F(x))
    np.testing.assert_allclose(jv, A @ v, rtol=1e-6, atol=1e-6 * np.linalg.norm(A @ v))
    np.testing.assert_allclose(jvp_fd(F, x, 10 * v, F(x)), 10 * jv, rtol=1e-6, atol=1e-6)


def test_jvp_scalar_square():
    F = lambda x: x ** 2  # noqa: E731
    assert jvp_fd(F, np.array([2.0]), np.array([1.0]), np.array([4.0]))[0] == pytest.approx(4.0, abs=1e-5)


def test_jvp_zero_direction():
    with pytest.raises(ZeroDirection):
        jvp_fd(lambda x: x, np.ones(2), np.zeros(2), np.ones(2))


def test_gmres_identity():
    res = gmres(lambda v: v, np.array([1.0, -2.0, 3.0]), 30, 1e-10, 100)
    np.testing.assert_allclose(res.x, [1, -2, 3])
    assert res.iterations == 1


def test_gmres_diagonal():
    res = gmres(lambda v: np.array([1.0, 2.0]) * v, np.array([1.0, 2.0]), 30, 1e-12, 100)
    np.testing.assert_allclose(res.x, [1.0, 1.0], rtol=1e-12)


def test_gmres_spd_against_dense(rng):
    B = rng.normal(size=(5, 5))
    A = B @ B.T + 5 * np.eye(5)
    b = rng.normal(size=5)
    res = gmres(lambda v: A @ v, b, 30, 1e-10, 100)
    assert res.converged
    np.testing.assert_allclose(res.x, np.linalg.solve(A, b), rtol=1e-8)
    np.testing.assert_allclose(res.Ax, A @ res.x, atol=1e-9)


def test_gmres_restarted(rng):
    A = np.eye(12) + 0.3 * rng.normal(size=(12, 12))
    b = rng.normal(size=12)
    res = gmres(lambda v: A @ v, b, 3, 1e-10, 500)
    assert res.converged
    assert np.linalg.norm(A @ res.x - b) <= 1e-9 * np.linalg.norm(b)


def test_lstsq_drops_oldest_dependent_column():
    A = np.array([[1.0, 2.0, 0.0], [1.0, 2.0, 1.0], [0.0, 0.0, 1.0]])
    coef, dropped = lstsq_drop_oldest(A, np.array([2.0, 3.0, 1.0]))
    assert dropped == 1
    np.testing.assert_allclose(A[:, 1:] @ coef, [2.0, 3.0, 1.0])


def test_backtrack_full_step_accepted_on_linear():
    p = JfmConfig().newton
    F = lambda x: x - 1.0  # noqa: E731
    x = np.array([3.0])
    r = F(x)
    out = backtrack(F, x, -r, float(np.linalg.norm(r)), float(r @ -r), p)
    assert out is not None
    np.testing.assert_allclose(out[0], [1.0])


# -- fixed point --------------------------------------------------------------------

def test_fixed_point_one_step_to_constant():
    c = np.array([1.5, -2.0])
    x, st = solve(lambda x: x - c, np.zeros(2), JfmConfig.from_name("fixed-point"))
    assert st.converged and st.iterations == 1
    np.testing.assert_array_equal(x, c)


def test_fixed_point_geometric():
    cfg = JfmConfig.from_name("fixed-point", eps_abs=1e-6, eps_rel=1e-6)
    x, st = solve(lambda x: x - 0.5 * x, np.array([1.0]), cfg)
    assert st.converged
    # iterate k is 0.5**k with residual 0.5**(k+1); first k passing the test
    k = next(k for k in range(100) if 0.5 ** (k + 1) < 1e-6 * (1 + 0.5 ** k))
    assert st.iterations == k == 19
    assert abs(x[0]) < 1e-5


def test_fixed_point_diverges_above_one():
    _, st = solve(lambda x: x - 1.25 * x, np.array([1.0]), JfmConfig.from_name("fixed-point"))
    assert st.outcome is Outcome.DIVERGED


def test_fixed_point_max_iterations():
    cfg = JfmConfig.from_name("fixed-point", max_it=5, eps_abs=1e-12, eps_rel=1e-12)
    _, st = solve(lambda x: x - 0.9 * x, np.array([1.0]), cfg)
    assert st.outcome is Outcome.MAX_ITERATIONS
    assert st.iterations == 5


# -- Newton ----------------------------------------------------------------------------

@pytest.mark.parametrize("F", [lambda x: x - 3.0, lambda x: x - 1.25 * x + 2.0])
def test_newton_linear_one_iteration(F):
    x, st = solve(F, np.array([0.0]), JfmConfig.from_name("newtonls"))
    assert st.converged and st.iterations == 1
    assert abs(F(x)[0]) < 1e-8


def test_newton_nonlinear_quadratic_tail():
    F = lambda x: np.array([x[0] ** 2 - 1.0, x[1] - x[0]])  # noqa: E731
    cfg = JfmConfig.from_name("newtonls", eps_abs=1e-12, eps_rel=1e-12,
                              **{"newton.gmres_rtol": 1e-12})
    x, st = solve(F, np.array([2.0, 0.0]), cfg)
    assert st.converged
    np.testing.assert_allclose(x, [1.0, 1.0], atol=1e-10)
    h = np.array(st.residual_history)
    ratios = h[2:] / h[1:-1] ** 2
    # residual roughly squares each step once in the basin
    assert np.all(ratios[:-1] < 2.0)
    assert h[-2] / h[-3] < 0.1


def test_newton_reports_evaluation_failure():
    def F(x):
        if x[0] > 0.5:
            raise EvaluationFailure("boom")
        return x - 1.0
    _, st = solve(F, np.array([0.0]), JfmConfig.from_name("newtonls"))
    assert st.outcome is Outcome.DIVERGED
    assert "boom" in st.message


# -- accelerated methods -----------------------------------------------------------

@pytest.mark.parametrize("method", ["anderson", "ngmres", "ngmres-ls"])
def test_linear_constant_in_two(method):
    c = np.array([4.0, -1.0, 0.5])
    x, st = solve(lambda x: x - c, np.zeros(3), JfmConfig.from_name(method))
    assert st.converged and st.iterations <= 2
    np.testing.assert_allclose(x, c, atol=1e-10)


@pytest.mark.parametrize("method", JFM)
def test_scalar_non_contraction(method):
    x, st = solve(lambda x: x - 1.25 * x, np.array([1.0]), JfmConfig.from_name(method))
    assert st.converged
    assert abs(x[0]) < 1e-4


@pytest.mark.parametrize("method", ["anderson", "ngmres", "ngmres-ls"])
def test_no_slower_than_fixed_point(method, rng):
    for _ in range(5):
        A = contraction(rng, 4, 0.9)
        b = rng.normal(size=4)
        F = lambda x: x - (A @ x + b)  # noqa: E731
        x0 = np.zeros(4)
        _, fp = solve(F, x0, JfmConfig.from_name("fixed-point", max_it=500))
        x, st = solve(F, x0, JfmConfig.from_name(method, max_it=500))
        assert fp.converged and st.converged
        assert st.iterations <= fp.iterations
        np.testing.assert_allclose(x, np.linalg.solve(np.eye(4) - A, b), atol=1e-3)


def test_ngmres_restart_envelope(rng):
    cfg = JfmConfig.from_name("ngmres", eps_abs=1e-10, eps_rel=1e-10, max_it=200,
                              **{"ngmres.restart_type": "periodic", "ngmres.restart_it": 2})
    A = contraction(rng, 4, 0.8)
    A = 0.5 * (A + A.T)
    b = rng.normal(size=4)
    _, st = solve(lambda x: x - (A @ x + b), np.zeros(4), cfg)
    assert st.converged
    envelope = np.minimum.accumulate(st.residual_history)
    assert envelope[-1] < 1e-9 * max(1.0, envelope[0])


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2 ** 31))
def test_anderson_recovers_linear_fixed_points(n, seed):
    rng = np.random.default_rng(seed)
    A = contraction(rng, n, 1.5)
    b = rng.normal(size=n)
    F = lambda x: x - (A @ x + b)  # noqa: E731
    cfg = JfmConfig.from_name("anderson", eps_abs=1e-10, eps_rel=1e-10, max_it=60)
    x, st = solve(F, np.zeros(n), cfg)
    assert st.converged
    np.testing.assert_allclose(F(x), 0.0, atol=1e-8)


def test_counts_every_evaluation():
    calls = []

    def F(x):
        calls.append(1)
        return x - 2.0
    for m in ("fixed-point",) + JFM:
        calls.clear()
        _, st = solve(F, np.zeros(2), JfmConfig.from_name(m))
        assert st.residual_evals == len(calls)


# -- configuration -----------------------------------------------------------------

def test_config_defaults():
    cfg = JfmConfig()
    assert cfg.method is Method.NEWTON_LS
    assert cfg.newton.ls_order == 3 and cfg.newton.alpha == 1e-4
    assert cfg.anderson.m == 30 and cfg.anderson.restart_type == "none"
    assert cfg.ngmres.m == 30 and cfg.ngmres.select_type == "difference"
    assert (cfg.ngmres.gammaA, cfg.ngmres.epsilonB, cfg.ngmres.deltaB) == (2.0, 0.1, 0.9)


def test_config_from_name_overrides():
    cfg = JfmConfig.from_name("NGMRES_LS", eps_abs="1e-6", **{"anderson.m": "5"})
    assert cfg.method is Method.NGMRES_LS
    assert cfg.ngmres.select_type == "linesearch"
    assert cfg.eps_abs == 1e-6 and cfg.anderson.m == 5


@pytest.mark.parametrize("kwargs", [{"eps_abs": 0.0}, {"max_it": 0},
                                    {"anderson.restart_type": "difference"},
                                    {"newton.ls_type": "cp"}, {"nope": 1}, {"foo.bar": 1}])
def test_config_rejects(kwargs):
    with pytest.raises(ConfigError):
        JfmConfig.from_name("newtonls", **kwargs)


def test_unknown_method():
    with pytest.raises(ConfigError):
        JfmConfig.from_name("broyden")
