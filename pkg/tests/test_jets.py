import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conelab import jets as J
from conelab.errors import DomainError, JetOrderError
from jet_trees import random_tree, tree_error


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_random_tree_matches_fd(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 5))
    tree = random_tree(rng, 5, d)
    assert tree_error(tree, rng.uniform(-0.8, 0.8, d)) <= 0


def test_seed_coordinate():
    x = J.seed_coordinate(0, [2.0], 1)
    assert x.value == 2.0 and np.array_equal(x.grad, [1.0])
    assert not x.hess.any() and not x.third.any()
    y = J.seed_coordinate(1, [1.0, 5.0], 2)
    assert y.value == 5.0 and np.array_equal(y.grad, [0.0, 1.0])
    with pytest.raises((IndexError, ValueError)):
        J.seed_coordinate(2, [1.0, 5.0], 2)


def test_primitive_taylor_coefficients():
    e = J.exp(J.seed_coordinate(0, [0.0], 1))
    assert (e.value, e.grad[0], e.hess[0, 0], e.third[0, 0, 0]) == (1.0, 1.0, 1.0, 1.0)
    x = J.seed_coordinate(0, [3.0], 1)
    sq = x * x
    assert (sq.value, sq.grad[0], sq.hess[0, 0], sq.third[0, 0, 0]) == (9.0, 6.0, 2.0, 0.0)
    sh = J.sinh(J.seed_coordinate(0, [0.0], 1))
    assert (sh.value, sh.grad[0], sh.hess[0, 0], sh.third[0, 0, 0]) == (0.0, 1.0, 0.0, 1.0)
    c2 = J.cos(J.seed_coordinate(0, [0.0], 1)) ** 2
    assert c2.value == 1.0 and c2.grad[0] == 0.0 and c2.hess[0, 0] == pytest.approx(-2.0) and c2.third[0, 0, 0] == pytest.approx(0.0)


def test_domain_errors():
    with pytest.raises(DomainError):
        J.sqrt(J.seed_coordinate(0, [-1.0], 1))
    with pytest.raises(DomainError):
        1.0 / J.seed_coordinate(0, [0.0], 1)


def test_fd_oracle_examples():
    fd = J.fd_derivatives(lambda x: x[0] ** 2, [1.0], 2, step=1e-3)
    assert fd.hess[0, 0] == pytest.approx(2.0, abs=1e-7)
    fd3 = J.fd_derivatives(lambda x: np.exp(2 * x[0]), [0.0], 3, step=1e-2)
    assert fd3.third[0, 0, 0] == pytest.approx(8.0, rel=1e-4)


def test_fd_vs_jets_on_pseudosphere_metric():
    from conelab.families import build_pseudosphere

    ps = build_pseudosphere(2, 1)
    x = np.array([0.9, 0.2, -0.3])
    jet = ps.metric.at(x, 2)
    fd = J.fd_derivatives(ps.metric.values, x, 2)
    for a, b in ((jet.grad, fd.grad), (jet.hess, fd.hess)):
        assert np.max(np.abs(a - b) / np.maximum(np.abs(b), 1.0)) < 1e-5


def test_derivative_tensors_symmetric():
    p = np.array([0.3, -0.2, 0.5])
    x = J.seed(p)
    u = J.sin(x[0] * x[1]) * J.exp(x[2]) + x[0] ** 3 * x[2]
    assert np.array_equal(u.hess, u.hess.T)
    for perm in [(1, 0, 2), (0, 2, 1), (2, 1, 0)]:
        assert np.allclose(u.third, u.third.transpose(perm), rtol=0, atol=1e-15)


def test_add_mul_commutative_associative():
    a, b, c = J.seed([0.3, -0.7, 1.1])
    for lhs, rhs in (((a * b) * c, a * (b * c)), ((a + b) + c, a + (b + c)), (a * b, b * a)):
        for u, v in zip((lhs.value, lhs.grad, lhs.hess, lhs.third), (rhs.value, rhs.grad, rhs.hess, rhs.third)):
            assert np.allclose(u, v, rtol=1e-15, atol=1e-15)


def test_inverse_matrix_jet():
    x, y = J.seed([0.4, 0.7])
    M = J.jarray([[2.0 + x * y, J.sin(x)], [J.sin(x), 1.0 + y * y]])
    eye = J.einsum("ij,jk->ik", M, J.inv(M))
    assert np.allclose(eye.value, np.eye(2), atol=1e-14)
    for part in (eye.grad, eye.hess, eye.third):
        assert np.max(np.abs(part)) < 1e-13


def test_d_lowers_order():
    x, y = J.seed([0.1, 0.2], 2)
    du = (x * y).d()
    assert du.order == 1
    assert np.allclose(du.value, [0.2, 0.1])
    with pytest.raises(JetOrderError):
        du.d().d()


def test_truncate():
    x, y = J.seed([0.1, 0.2])
    z = (x * y).truncate(1)
    assert z.order == 1 and z.hess is None
