"""Error measures and fold splitting shared by the harness and the benchmarks."""

from __future__ import annotations

import numpy as np


def nrmse(pred: np.ndarray, truth: np.ndarray) -> float:
    """``sqrt(sum (pred - truth)^2 / (T var(truth)))`` with the population variance."""
    pred = np.asarray(pred, dtype=float).ravel()
    truth = np.asarray(truth, dtype=float).ravel()
    if pred.shape != truth.shape:
        raise ValueError("prediction and truth differ in length")
    var = float(np.var(truth))
    if var <= 0:
        raise ValueError("truth has zero variance")
    return float(np.sqrt(np.sum((pred - truth) ** 2) / (truth.size * var)))


def kfold_split(n_items: int, k: int, seed: int) -> list[np.ndarray]:
    """Shuffle ``range(n_items)`` and cut it into ``k`` near-equal folds."""
    if not 1 <= k <= n_items:
        raise ValueError("need 1 <= k <= n_items")
    perm = np.random.default_rng(seed).permutation(n_items)
    return [np.sort(f) for f in np.array_split(perm, k)]


def train_test_folds(n_items: int, k: int, seed: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """``(train, test)`` index pairs; with ``k == 1`` the whole set is both."""
    folds = kfold_split(n_items, k, seed)
    if k == 1:
        return [(folds[0], folds[0])]
    return [(np.sort(np.concatenate(folds[:i] + folds[i + 1:])), folds[i]) for i in range(k)]


def sub_seed(seed: int, *keys: int) -> int:
    """Deterministic child seed for a ``(seed, keys...)`` tuple."""
    return int(np.random.SeedSequence([seed, *keys]).generate_state(1)[0])
