import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from distlearn.consensus import identity_mixing, mix_metropolis
from distlearn.netgraph import gen_erdos_renyi
from distlearn.rvfl import (
    BrlsState,
    RvflParams,
    admm_consensus,
    admm_rvfl,
    brls_update,
    cons_rvfl,
    decode_classes,
    encode_classes,
    ensemble_vote,
    hidden_matrix,
    local_rvfl,
    misclassification,
    predict,
    regularized_objective,
    s_cons_rvfl,
    train_centralized,
    vp_admm_rvfl,
    vp_predict,
)
from distlearn.solvers import ridge_primal, RidgeProblem


def _regression(rng, n=120, d=4):
    x = rng.uniform(-1, 1, size=(n, d))
    y = np.sin(x.sum(axis=1)) + 0.05 * rng.normal(size=n)
    return x, y


def _shards(x, y, parts):
    idx = np.array_split(np.arange(len(x)), parts)
    return [(x[i], y[i]) for i in idx]


class TestHiddenMatrix:
    def test_zero_params_give_half(self):
        params = RvflParams(np.zeros((5, 3)), np.zeros(5))
        assert np.all(hidden_matrix(params, np.ones((4, 3))) == 0.5)

    def test_saturation(self):
        params = RvflParams(np.zeros((2, 1)), np.full(2, 50.0))
        assert np.allclose(hidden_matrix(params, np.zeros((3, 1))), 1.0, atol=1e-20)

    def test_matches_scalar_loop(self, rng):
        params = RvflParams.draw(3, 6, seed=4)
        x = rng.normal(size=(7, 3))
        h = hidden_matrix(params, x)
        for i in range(7):
            for j in range(6):
                a = sum(params.hidden_weights[j, c] * x[i, c] for c in range(3)) + params.hidden_biases[j]
                assert h[i, j] == pytest.approx(1.0 / (1.0 + np.exp(-a)), abs=1e-12)

    def test_shared_seed_gives_identical_rows(self, rng):
        x = rng.normal(size=(5, 3))
        a = hidden_matrix(RvflParams.draw(3, 8, seed=9), x)
        b = hidden_matrix(RvflParams.draw(3, 8, seed=9), x)
        assert np.array_equal(a, b)

    def test_draw_range(self):
        p = RvflParams.draw(4, 100, seed=0, weight_range=0.5)
        assert np.all(np.abs(p.hidden_weights) <= 0.5) and np.all(np.abs(p.hidden_biases) <= 0.5)

    def test_wrong_width(self):
        with pytest.raises(ValueError):
            hidden_matrix(RvflParams.draw(3, 4, seed=0), np.ones((2, 2)))


class TestClasses:
    def test_binary_round_trip(self):
        labels = np.array([0, 1, 1, 0])
        assert np.array_equal(decode_classes(encode_classes(labels, 2)), labels)

    def test_multiclass_round_trip(self):
        labels = np.array([2, 0, 1, 2])
        assert np.array_equal(decode_classes(encode_classes(labels, 3)), labels)

    def test_ties_go_to_lowest_class(self):
        assert decode_classes(np.array([[1.0, 1.0, 0.0]]))[0] == 0

    @given(scale=st.floats(1e-3, 1e3), seed=st.integers(0, 1000))
    def test_argmax_invariant_to_positive_scaling(self, scale, seed):
        scores = np.random.default_rng(seed).normal(size=(20, 4))
        assert np.array_equal(decode_classes(scores), decode_classes(scale * scores))

    def test_ensemble_vote(self):
        votes = [np.array([[1.0], [-1.0]]), np.array([[1.0], [1.0]]), np.array([[-1.0], [-1.0]])]
        assert ensemble_vote(votes).tolist() == [1, 0]

    def test_misclassification(self):
        assert misclassification(np.array([1.0, -1.0, 1.0]), np.array([1, 1, 1])) == pytest.approx(1 / 3)


class TestCentralizedAndConsensus:
    def test_zero_targets(self, rng):
        params = RvflParams.draw(2, 10, seed=0)
        beta = train_centralized(params, rng.normal(size=(8, 2)), np.zeros(8), 1.0)
        assert np.all(beta == 0)

    def test_duplicated_sample_scales_lambda(self, rng):
        params = RvflParams.draw(2, 5, seed=1)
        x = rng.normal(size=(1, 2))
        y = np.array([0.7])
        dup = train_centralized(params, np.repeat(x, 10, axis=0), np.repeat(y, 10), 2.0)
        single = train_centralized(params, x, y, 0.2)
        assert np.allclose(dup, single, atol=1e-10)

    def test_single_agent_equals_centralized(self, rng):
        x, y = _regression(rng)
        params = RvflParams.draw(4, 30, seed=2)
        out = cons_rvfl(identity_mixing(1), [(x, y)], params, 0.5)
        assert np.allclose(out[0], train_centralized(params, x, y, 0.5))

    def test_identical_shards_equal_local_solution(self, rng):
        x, y = _regression(rng, n=40)
        params = RvflParams.draw(4, 20, seed=3)
        mix = mix_metropolis(gen_erdos_renyi(5, 0.6, 0))
        out = cons_rvfl(mix, [(x, y)] * 5, params, 0.5)
        assert np.allclose(out, train_centralized(params, x, y, 0.5)[None], atol=1e-10)

    def test_consensus_is_mean_of_local(self, rng):
        x, y = _regression(rng)
        params = RvflParams.draw(4, 20, seed=3)
        shards = _shards(x, y, 6)
        mix = mix_metropolis(gen_erdos_renyi(6, 0.5, 1))
        out = cons_rvfl(mix, shards, params, 0.5)
        assert np.allclose(out, local_rvfl(shards, params, 0.5).mean(axis=0)[None], atol=1e-6)


class TestAdmm:
    def test_single_agent_reaches_ridge(self, rng):
        x, y = _regression(rng)
        params = RvflParams.draw(4, 25, seed=5)
        z, trace = admm_rvfl(identity_mixing(1), [(x, y)], params, lam=1.0, gamma=1.0,
                             max_iters=300, eps_abs=1e-9, eps_rel=1e-9)
        assert np.allclose(z[0], train_centralized(params, x, y, 1.0), atol=1e-6)

    def test_zero_targets(self, rng):
        params = RvflParams.draw(3, 10, seed=0)
        shards = [(rng.normal(size=(10, 3)), np.zeros(10)) for _ in range(3)]
        mix = mix_metropolis(gen_erdos_renyi(3, 1.0, 0))
        z, trace = admm_rvfl(mix, shards, params, lam=1.0)
        assert np.all(z == 0)
        assert trace.iterations == 1 and trace.r_norm[0] == 0 and trace.s_norm[0] == 0

    def test_network_reaches_optimum_with_tuned_penalty(self, rng):
        # The penalty sits inside the Gram spectrum of the local designs. Far
        # below or above it the same 1000 iterations stop short of the optimum.
        x, y = _regression(rng, n=300)
        params = RvflParams.draw(4, 40, seed=6)
        shards = _shards(x, y, 10)
        designs = [hidden_matrix(params, xs) for xs, _ in shards]
        mix = mix_metropolis(gen_erdos_renyi(10, 0.4, 2))
        z, trace = admm_consensus(designs, [ys for _, ys in shards], mix, lam=1.0, gamma=10.0,
                                  max_iters=1000, eps_abs=1e-8, eps_rel=1e-8, track_objective=True)
        opt = train_centralized(params, x, y, 1.0)
        best = regularized_objective(list(zip(designs, [ys for _, ys in shards])), opt, 1.0)
        assert abs(trace.objective[-1] - best) / best < 1e-9
        assert np.allclose(z, opt[None], atol=1e-4)
        assert trace.r_norm[-1] < trace.r_norm[9]

    def test_trace_rows(self, rng):
        x, y = _regression(rng, n=30)
        params = RvflParams.draw(4, 5, seed=0)
        _, trace = admm_rvfl(identity_mixing(1), [(x, y)], params, 1.0, max_iters=5, eps_abs=0, eps_rel=0)
        rows = list(trace.rows())
        assert len(rows) == 5 and rows[0][0] == 1


class TestBrls:
    def test_initial_state(self):
        s = BrlsState.init(4, 2, 0.5)
        assert np.allclose(s.p, 2 * np.eye(4)) and np.all(s.beta == 0)

    def test_single_chunk_equals_ridge(self, rng):
        h, y = rng.normal(size=(30, 8)), rng.normal(size=(30, 1))
        s = brls_update(BrlsState.init(8, 1, 0.3), h, y)
        assert np.allclose(s.beta, ridge_primal(RidgeProblem(h, y, 0.3)), rtol=1e-8, atol=1e-10)

    def test_zero_targets_keep_zero(self, rng):
        s = brls_update(BrlsState.init(5, 1, 1.0), rng.normal(size=(6, 5)), np.zeros(6))
        assert np.all(s.beta == 0)

    @given(seed=st.integers(0, 10_000), chunks=st.integers(1, 12))
    def test_any_chunking_equals_batch(self, seed, chunks):
        r = np.random.default_rng(seed)
        n, b = int(r.integers(chunks, 60)), int(r.integers(1, 15))
        h, y = r.normal(size=(n, b)), r.normal(size=(n, 2))
        lam = float(r.uniform(0.05, 5))
        cuts = np.sort(r.choice(np.arange(1, n), size=min(chunks - 1, n - 1), replace=False))
        state = BrlsState.init(b, 2, lam)
        for hc, yc in zip(np.split(h, cuts), np.split(y, cuts)):
            state = brls_update(state, hc, yc)
        batch = ridge_primal(RidgeProblem(h, y, lam))
        assert np.linalg.norm(state.beta - batch) <= 1e-6 * max(np.linalg.norm(batch), 1e-12)
        assert np.linalg.eigvalsh(state.p).min() > 0

    def test_sequential_single_agent_matches_brls(self, rng):
        x, y = _regression(rng, n=60)
        params = RvflParams.draw(4, 12, seed=0)
        chunks = _shards(x, y, 4)
        beta, _ = s_cons_rvfl(identity_mixing(1), [chunks], params, 0.5)
        state = BrlsState.init(12, 1, 0.5)
        for xc, yc in chunks:
            state = brls_update(state, hidden_matrix(params, xc), yc)
        assert np.allclose(beta[0], state.beta)

    def test_sequential_identical_streams(self, rng):
        x, y = _regression(rng, n=60)
        params = RvflParams.draw(4, 12, seed=0)
        chunks = _shards(x, y, 3)
        mix = mix_metropolis(gen_erdos_renyi(4, 0.8, 0))
        beta, trace = s_cons_rvfl(mix, [chunks] * 4, params, 0.5, evaluate=lambda b: float(np.sum(b)))
        single, _ = s_cons_rvfl(identity_mixing(1), [chunks], params, 0.5)
        assert np.allclose(beta, single[0][None], atol=1e-10)
        assert len(trace) == 3

    def test_sequential_uneven_rounds(self, rng):
        x, y = _regression(rng, n=20)
        params = RvflParams.draw(4, 3, seed=0)
        with pytest.raises(ValueError):
            s_cons_rvfl(identity_mixing(2), [_shards(x, y, 2), _shards(x, y, 3)], params, 1.0)


class TestVerticalPartition:
    def test_single_agent_equals_centralized(self, rng):
        x, y = _regression(rng)
        model = vp_admm_rvfl(identity_mixing(1), x, y, [np.arange(4)], 30, lam=0.5, rho=0.1,
                             max_iters=3000, seed=0)
        params = RvflParams.draw(4, 30, 0 + 7919)
        ref = predict(params, train_centralized(params, x, y, 0.5), x)
        assert np.allclose(vp_predict(model, x), ref, atol=1e-4)

    def test_zero_targets(self, rng):
        x = rng.normal(size=(20, 4))
        model = vp_admm_rvfl(identity_mixing(2), x, np.zeros(20), [np.arange(2), np.arange(2, 4)], 10, 1.0)
        assert all(np.all(b == 0) for b in model.betas)

    def test_network_matches_concatenated_model(self, rng):
        x, y = _regression(rng, n=150, d=6)
        sets = [np.arange(0, 2), np.arange(2, 4), np.arange(4, 6)]
        mix = mix_metropolis(gen_erdos_renyi(3, 1.0, 0))
        model = vp_admm_rvfl(mix, x, y, sets, 30, lam=0.5, rho=0.5, max_iters=3000)
        h = np.hstack([hidden_matrix(p, x[:, f]) for p, f in zip(model.params, sets)])
        beta = ridge_primal(RidgeProblem(h, y[:, None], 0.5))
        assert np.allclose(vp_predict(model, x), h @ beta, atol=1e-4)
        assert np.allclose(vp_predict(model, x, mix=mix), vp_predict(model, x), atol=1e-6)

    def test_single_agent_partials(self, rng):
        x, y = _regression(rng, n=30)
        model = vp_admm_rvfl(identity_mixing(1), x, y, [np.arange(4)], 5, 1.0, max_iters=5)
        assert np.allclose(vp_predict(model, x), model.partials(x)[0])
