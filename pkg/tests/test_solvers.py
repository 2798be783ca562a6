import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from distlearn.consensus import identity_mixing
from distlearn.esn import ReadoutDesign, admm_l1_esn
from distlearn.solvers import (
    RidgeProblem,
    gram_inverse,
    inversion_lemma_gram,
    ridge,
    ridge_dual,
    ridge_primal,
    soft_threshold,
)


def gradient_descent_ridge(h, y, lam, iters=20000):
    """Plain gradient descent on 0.5||Hb - y||^2 + 0.5 lam ||b||^2."""
    step = 1.0 / (np.linalg.norm(h, 2) ** 2 + lam)
    b = np.zeros((h.shape[1], y.shape[1]))
    for _ in range(iters):
        b -= step * (h.T @ (h @ b - y) + lam * b)
    return b


def coordinate_descent_lasso(h, y, lam, sweeps=5000):
    """Cyclic coordinate descent on 0.5||Hw - y||^2 + lam ||w||_1."""
    w = np.zeros(h.shape[1])
    col_sq = np.sum(h**2, axis=0)
    r = y - h @ w
    for _ in range(sweeps):
        for j in range(h.shape[1]):
            r += h[:, j] * w[j]
            rho = h[:, j] @ r
            w[j] = np.sign(rho) * max(abs(rho) - lam, 0.0) / col_sq[j]
            r -= h[:, j] * w[j]
    return w


class TestRidge:
    def test_identity_design(self):
        beta = ridge_primal(RidgeProblem(np.eye(3), np.array([[1.0], [2.0], [3.0]]), 1e-12))
        assert np.allclose(beta.ravel(), [1, 2, 3])

    def test_heavy_shrinkage(self, rng):
        h, y = rng.normal(size=(30, 6)), rng.normal(size=(30, 1))
        beta = ridge_primal(RidgeProblem(h, y, 1e6))
        assert np.linalg.norm(beta) < 1e-3 * np.linalg.norm(h.T @ y)

    def test_matches_gradient_descent_oracle(self, rng):
        h, y = rng.normal(size=(20, 5)), rng.normal(size=(20, 1))
        beta = ridge_primal(RidgeProblem(h, y, 0.7))
        assert np.allclose(beta, gradient_descent_ridge(h, y, 0.7), atol=1e-6)

    def test_dual_single_row(self):
        beta = ridge_dual(RidgeProblem(np.array([[1.0, 0.0]]), np.array([[1.0]]), 1.0))
        assert np.allclose(beta.ravel(), [0.5, 0.0])

    def test_dual_wide_system(self, rng):
        p = RidgeProblem(rng.normal(size=(5, 50)), rng.normal(size=(5, 1)), 0.3)
        a, b = ridge_primal(p), ridge_dual(p)
        assert np.linalg.norm(a - b) / np.linalg.norm(a) < 1e-8

    def test_large_lambda_vanishes(self, rng):
        p = RidgeProblem(rng.normal(size=(5, 8)), rng.normal(size=(5, 1)), 1e12)
        assert np.max(np.abs(ridge_dual(p))) < 1e-10

    def test_validation(self):
        with pytest.raises(ValueError):
            RidgeProblem(np.eye(2), np.ones((2, 1)), 0.0)
        with pytest.raises(ValueError):
            RidgeProblem(np.eye(2), np.ones((3, 1)), 1.0)

    @given(n=st.integers(1, 30), b=st.integers(1, 30), m=st.integers(1, 3),
           lam=st.floats(1e-3, 1e3), seed=st.integers(0, 10_000))
    def test_primal_equals_dual(self, n, b, m, lam, seed):
        r = np.random.default_rng(seed)
        p = RidgeProblem(r.normal(size=(n, b)), r.normal(size=(n, m)), lam)
        a, d = ridge_primal(p), ridge_dual(p)
        assert np.linalg.norm(a - d) <= 1e-8 * max(np.linalg.norm(a), 1e-300)
        assert np.allclose(ridge(p.design, p.targets, lam), a, rtol=1e-8, atol=1e-12)

    @given(seed=st.integers(0, 10_000))
    def test_local_minimum_probe(self, seed):
        r = np.random.default_rng(seed)
        p = RidgeProblem(r.normal(size=(15, 6)), r.normal(size=(15, 1)), 0.5)
        beta = ridge_primal(p)
        u = r.normal(size=beta.shape)
        u /= np.linalg.norm(u)
        assert p.objective(beta) <= p.objective(beta + 1e-3 * u)


class TestSoftThreshold:
    def test_piecewise(self):
        assert np.allclose(soft_threshold(np.array([3.0, -1.0, 0.5]), 1.0), [2.0, 0.0, 0.0])
        assert np.allclose(soft_threshold(np.array([-3.0]), 1.0), [-2.0])

    def test_zero_threshold_is_identity(self, rng):
        v = rng.normal(size=7)
        assert np.array_equal(soft_threshold(v, 0.0), v)

    def test_negative_threshold(self):
        with pytest.raises(ValueError):
            soft_threshold(np.ones(2), -1.0)

    @given(a=arrays(float, 8, elements=st.floats(-1e3, 1e3)),
           b=arrays(float, 8, elements=st.floats(-1e3, 1e3)),
           kappa=st.floats(0, 100))
    def test_non_expansive(self, a, b, kappa):
        lhs = np.linalg.norm(soft_threshold(a, kappa) - soft_threshold(b, kappa))
        assert lhs <= np.linalg.norm(a - b) * (1 + 1e-12) + 1e-12

    def test_lasso_admm_matches_coordinate_descent(self, rng):
        h = rng.normal(size=(10, 4))
        y = h @ np.array([1.5, 0.0, -0.7, 0.05]) + 0.1 * rng.normal(size=10)
        lam = 1.0
        w, _, _ = admm_l1_esn(identity_mixing(1), [ReadoutDesign(h, y[:, None])], lam,
                              gamma=1.0, max_iters=5000, eps_abs=1e-12, eps_rel=1e-12)
        assert np.allclose(w[0].ravel(), coordinate_descent_lasso(h, y, lam), atol=1e-4)


class TestInversionLemma:
    def test_zero_design(self):
        assert np.allclose(inversion_lemma_gram(np.zeros((3, 4)), 2.0), np.eye(4) / 2.0)

    @pytest.mark.parametrize("shape,gamma", [((3, 10), 1.0), ((50, 5), 0.1)])
    def test_matches_direct_inverse(self, rng, shape, gamma):
        h = rng.normal(size=shape)
        direct = np.linalg.inv(h.T @ h + gamma * np.eye(shape[1]))
        lemma = inversion_lemma_gram(h, gamma)
        assert np.linalg.norm(lemma - direct) / np.linalg.norm(direct) < 1e-8
        assert np.allclose(gram_inverse(h, gamma), direct, rtol=1e-8, atol=1e-12)

    def test_bad_gamma(self):
        with pytest.raises(ValueError):
            inversion_lemma_gram(np.ones((2, 2)), 0.0)
