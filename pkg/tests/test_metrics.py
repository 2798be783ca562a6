import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from distlearn.metrics import kfold_split, nrmse, sub_seed, train_test_folds


class TestNrmse:
    def test_perfect_prediction(self):
        assert nrmse([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == 0.0

    def test_mean_predictor_scores_one(self):
        truth = np.array([0.0, 1.0, 5.0, 2.0])
        assert nrmse(np.full(4, truth.mean()), truth) == pytest.approx(1.0)

    def test_by_hand(self):
        # population variance of [0, 2] is 1, squared errors sum to 2 over 2 samples
        assert nrmse([1.0, 3.0], [0.0, 2.0]) == pytest.approx(1.0)
        assert nrmse([0.5, 2.0], [0.0, 2.0]) == pytest.approx(np.sqrt(0.125))

    @given(st.floats(0.1, 100.0), st.integers(0, 1000))
    def test_scale_invariant(self, scale, seed):
        rng = np.random.default_rng(seed)
        truth = rng.normal(size=30)
        pred = truth + rng.normal(size=30) * 0.3
        assert nrmse(scale * pred, scale * truth) == pytest.approx(nrmse(pred, truth), rel=1e-9)

    def test_errors(self):
        with pytest.raises(ValueError):
            nrmse([1.0], [1.0, 2.0])
        with pytest.raises(ValueError):
            nrmse([1.0, 2.0], [3.0, 3.0])


class TestFolds:
    @given(st.integers(1, 60), st.integers(1, 10), st.integers(0, 99))
    def test_kfold_is_partition(self, n, k, seed):
        if k > n:
            return
        folds = kfold_split(n, k, seed)
        sizes = [len(f) for f in folds]
        assert max(sizes) - min(sizes) <= 1
        assert np.array_equal(np.sort(np.concatenate(folds)), np.arange(n))

    def test_train_test_complement(self):
        for train, test in train_test_folds(23, 4, seed=1):
            assert len(np.intersect1d(train, test)) == 0
            assert len(train) + len(test) == 23

    def test_single_fold_reuses_all(self):
        ((train, test),) = train_test_folds(5, 1, seed=0)
        assert np.array_equal(train, test)

    def test_bad_k(self):
        with pytest.raises(ValueError):
            kfold_split(3, 4, seed=0)
        with pytest.raises(ValueError):
            kfold_split(3, 0, seed=0)

    def test_deterministic(self):
        a = kfold_split(40, 3, seed=7)
        b = kfold_split(40, 3, seed=7)
        assert all(np.array_equal(x, y) for x, y in zip(a, b))


class TestSubSeed:
    def test_stable_and_distinct(self):
        assert sub_seed(1, 2, 3) == sub_seed(1, 2, 3)
        assert len({sub_seed(0, r) for r in range(50)}) == 50
        assert sub_seed(0, 1, 2) != sub_seed(0, 2, 1)
