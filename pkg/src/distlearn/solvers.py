"""Centralized linear solvers shared by the model modules."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg


@dataclass(frozen=True)
class RidgeProblem:
    """Regularized least squares ``min ||H b - y||^2 / 2 + lam ||b||^2 / 2``."""

    design: np.ndarray
    targets: np.ndarray
    lam: float

    def __post_init__(self) -> None:
        if self.lam <= 0:
            raise ValueError("lambda must be positive")
        if self.design.shape[0] != np.asarray(self.targets).shape[0]:
            raise ValueError("design and targets have different row counts")

    def objective(self, beta: np.ndarray) -> float:
        r = self.design @ beta - self.targets
        return 0.5 * float(np.sum(r**2)) + 0.5 * self.lam * float(np.sum(beta**2))


def spd_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve a symmetric positive-definite system via Cholesky."""
    return linalg.cho_solve(linalg.cho_factor(a, lower=True, check_finite=True), b)


def ridge_primal(problem: RidgeProblem) -> np.ndarray:
    """``(H^T H + lam I)^{-1} H^T y``, convenient when rows outnumber columns."""
    h, y = problem.design, problem.targets
    gram = h.T @ h
    gram[np.diag_indices_from(gram)] += problem.lam
    return spd_solve(gram, h.T @ y)


def ridge_dual(problem: RidgeProblem) -> np.ndarray:
    """``H^T (H H^T + lam I)^{-1} y``, convenient when columns outnumber rows."""
    h, y = problem.design, problem.targets
    kern = h @ h.T
    kern[np.diag_indices_from(kern)] += problem.lam
    return h.T @ spd_solve(kern, y)


def ridge(design: np.ndarray, targets: np.ndarray, lam: float) -> np.ndarray:
    """Ridge solution using whichever form has the smaller system."""
    prob = RidgeProblem(np.asarray(design, float), np.asarray(targets, float), lam)
    n, b = prob.design.shape
    return ridge_dual(prob) if n < b else ridge_primal(prob)


def soft_threshold(v: np.ndarray, kappa: float) -> np.ndarray:
    """Coordinate-wise shrinkage ``sign(v) * max(|v| - kappa, 0)``."""
    if kappa < 0:
        raise ValueError("kappa must be non-negative")
    v = np.asarray(v, dtype=float)
    return np.sign(v) * np.maximum(np.abs(v) - kappa, 0.0)


def inversion_lemma_gram(h: np.ndarray, gamma: float) -> np.ndarray:
    """Inverse of ``H^T H + gamma I`` through the ``N x N`` system ``gamma I + H H^T``.

    Cheaper than a direct inverse when ``H`` has fewer rows than columns.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    n, b = h.shape
    kern = h @ h.T
    kern[np.diag_indices_from(kern)] += gamma
    inner = spd_solve(kern, h) if n else np.zeros((0, b))
    return (np.eye(b) - h.T @ inner) / gamma


def gram_inverse(h: np.ndarray, gamma: float) -> np.ndarray:
    """Explicit ``(H^T H + gamma I)^{-1}``, meant to be computed once and reused."""
    n, b = h.shape
    if n < b:
        return inversion_lemma_gram(h, gamma)
    gram = h.T @ h
    gram[np.diag_indices_from(gram)] += gamma
    return spd_solve(gram, np.eye(b))
