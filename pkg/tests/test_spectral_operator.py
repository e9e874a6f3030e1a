import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from volterra.grid import TimeGrid
from volterra.spectral_operator import (
    OperatorError,
    SpectralOperator,
    apply_A,
    fractional_power_apply,
    make_laplacian_1d,
    make_operator,
    resolvent_of_A,
    sectorial_constant,
    semigroup_apply,
    semigroup_norm_bounds,
    yosida,
    yosida_eigenvalues,
)


def test_laplacian_eigenvalues():
    op = make_laplacian_1d(5)
    assert np.allclose(op.eigenvalues, (np.arange(1, 6) * np.pi) ** 2)
    assert op.dim == 5 and op.lam_max == pytest.approx(25 * np.pi**2)
    assert not op.bounded
    assert op.describe()["K"] == 5


@pytest.mark.parametrize("K", [0, -1, 2.5])
def test_bad_size(K):
    with pytest.raises(OperatorError):
        make_laplacian_1d(K)


@pytest.mark.parametrize("lam", [[], [1.0, -2.0], [0.0], [np.inf]])
def test_bad_eigenvalues(lam):
    with pytest.raises(OperatorError):
        SpectralOperator(np.asarray(lam, dtype=float))


def test_make_operator_variants():
    assert make_operator({"kind": "laplacian", "size": 3}).dim == 3
    op = make_operator({"eigenvalues": [4.0, 1.0]})
    assert list(op.eigenvalues) == [1.0, 4.0]
    assert make_operator(op) is op
    with pytest.raises(OperatorError):
        make_operator({"kind": "wave"})


def test_apply_semigroup_and_powers():
    op = make_laplacian_1d(3)
    x = np.array([1.0, -2.0, 0.5])
    assert np.allclose(apply_A(op, x), -op.eigenvalues * x)
    assert np.allclose(semigroup_apply(op, 0.0, x), x)
    assert np.allclose(semigroup_apply(op, 0.1, x), np.exp(-0.1 * op.eigenvalues) * x)
    assert np.allclose(fractional_power_apply(op, 0.5, x), np.sqrt(op.eigenvalues) * x)
    assert op.graph_norm(x) == pytest.approx(math.sqrt(x @ x + np.sum((op.eigenvalues * x) ** 2)))
    stack = np.ones((4, 3))
    assert op.apply(stack).shape == (4, 3)
    with pytest.raises(OperatorError):
        op.apply(np.ones(2))
    with pytest.raises(OperatorError):
        op.semigroup(-1.0, x)
    with pytest.raises(OperatorError):
        op.fractional_power(1.0, x)


def test_yosida_approximation():
    op = make_laplacian_1d(4)
    assert np.allclose(yosida_eigenvalues(op.eigenvalues, 10.0), 10 * op.eigenvalues / (10 + op.eigenvalues))
    assert yosida_eigenvalues(0.0, 5.0) == 0.0
    ops = [yosida(op, n) for n in (1e2, 1e4, 1e6)]
    assert all(o.bounded for o in ops)
    assert all(o.lam_max < n for o, n in zip(ops, (1e2, 1e4, 1e6)))
    errs = [np.abs(o.eigenvalues - op.eigenvalues).max() for o in ops]
    assert errs[0] > errs[1] > errs[2]
    with pytest.raises(OperatorError):
        yosida(op, 0.0)


def test_resolvent_and_sector():
    op = make_laplacian_1d(3)
    r = resolvent_of_A(op, 2.0)
    x = np.array([1.0, 1.0, 1.0])
    assert np.allclose(2.0 * r(x) - op.apply(r(x)), x)
    assert r.norm == pytest.approx(1 / (2 + np.pi**2))
    assert sectorial_constant(op, np.geomspace(1e-3, 1e6, 50)) <= 1.0
    with pytest.raises(OperatorError):
        resolvent_of_A(op, -1.0)


@settings(max_examples=30, deadline=None)
@given(gamma=st.floats(0.01, 0.99), K=st.integers(1, 30), steps=st.integers(10, 400))
def test_semigroup_estimates_never_exceed_analytic(gamma, K, steps):
    b = semigroup_norm_bounds(make_laplacian_1d(K), TimeGrid(1.0, steps), gamma)
    assert b.within(1e-12)
    assert b.sup_T == 1.0  # t = 0


def test_semigroup_estimates_are_attained_when_resolved():
    # t lambda_1 sweeps through 1 and gamma on a fine grid
    op = SpectralOperator(np.array([1.0]))
    b = semigroup_norm_bounds(op, TimeGrid(5.0, 50000), 0.5)
    a = b.analytic
    assert b.sup_tAT == pytest.approx(a["sup_tAT"], rel=1e-7)
    assert b.sup_frac == pytest.approx(a["sup_frac"], rel=1e-7)
    assert b.sup_frac_A == pytest.approx(a["sup_frac_A"], rel=1e-7)
    assert [row[0] for row in b.rows()][0] == "||T(t)||"
    with pytest.raises(OperatorError):
        semigroup_norm_bounds(op, TimeGrid(1.0, 10), 0.0)
