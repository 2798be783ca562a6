"""Benchmark runners: one function per experiment, each returning per-fold metrics.

A runner receives a :class:`RunContext` for a single repetition and returns a
list of :class:`FoldOutput`. All randomness is drawn from seeds derived from
``(config.seed, repetition, ...)`` so results do not depend on execution order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

import numpy as np

from . import datagen, edm_ssl, esn, rvfl, s3vm, saf
from .consensus import MixingMatrix, build_mixing, dac_run, identity_mixing
from .metrics import nrmse, sub_seed, train_test_folds
from .netgraph import (
    AgentNetwork,
    gen_complete,
    gen_erdos_renyi,
    gen_linear,
    gen_scale_free,
    gen_small_world,
)
from .solvers import ridge

Metric = float | int | bool | None


@dataclass
class FoldOutput:
    """Scalar metrics for one fold plus optional trace tables."""

    metrics: dict[str, Metric]
    traces: dict[str, tuple[list[str], list[list[Any]]]] = field(default_factory=dict)


@dataclass
class RunContext:
    """Everything a runner needs for one repetition.

    ``config`` is any object exposing ``seed``, ``hyper``, ``topology``,
    ``dataset``, ``folds`` and ``partition`` (normally an ``ExperimentConfig``).
    """

    config: Any
    rep: int

    @property
    def hyper(self) -> Mapping[str, Any]:
        return self.config.hyper

    def seed(self, *keys: int) -> int:
        return sub_seed(self.config.seed, self.rep, *keys)

    def network(self, n_agents: int | None = None, key: int = 0) -> AgentNetwork:
        spec = dict(self.config.topology)
        n = int(spec.get("agents", 1) if n_agents is None else n_agents)
        return build_network(spec, n, self.seed(101, key, n))

    def mixing(self, net: AgentNetwork) -> MixingMatrix:
        if net.n_agents == 1:
            return identity_mixing(1)
        return build_mixing(net, self.config.topology.get("mixing", "metropolis"))

    def tabular(self) -> datagen.TabularDataset:
        spec = dict(self.config.dataset)
        name = spec.pop("generator")
        return make_tabular(name, self.seed(202), **spec)

    def sequences(self) -> datagen.SequenceDataset:
        spec = dict(self.config.dataset)
        name = spec.pop("generator")
        count = int(spec.pop("sequences"))
        length = int(spec.pop("length"))
        return datagen.gen_sequences(name, count, length, self.seed(303), **spec)

    def folds(self, n_items: int) -> list[tuple[np.ndarray, np.ndarray]]:
        return train_test_folds(n_items, int(self.config.folds), self.seed(404))


# ------------------------------------------------------------------ builders

TOPOLOGIES = ("erdos_renyi", "complete", "linear", "small_world", "scale_free")
TABULAR = ("two_gaussian", "two_moons", "csv")
SEQUENCES = ("narma10", "extpoly", "mackey_glass", "lorenz")


def build_network(spec: Mapping[str, Any], n_agents: int, seed: int) -> AgentNetwork:
    kind = spec.get("kind", "erdos_renyi")
    if kind not in TOPOLOGIES:
        raise ValueError(f"unknown topology {kind!r}")
    if n_agents == 1:
        return gen_complete(1)
    if kind == "erdos_renyi":
        return gen_erdos_renyi(n_agents, float(spec.get("p", 0.2)), seed)
    if kind == "complete":
        return gen_complete(n_agents)
    if kind == "linear":
        return gen_linear(n_agents, int(spec.get("k", 1)))
    if kind == "small_world":
        return gen_small_world(n_agents, int(spec.get("k", 2)), float(spec.get("alpha", 0.15)), seed)
    if kind == "scale_free":
        return gen_scale_free(n_agents, int(spec.get("m", 2)), seed)
    raise ValueError(f"unknown topology {kind!r}")


def make_tabular(name: str, seed: int, **kwargs) -> datagen.TabularDataset:
    if name == "two_gaussian":
        return datagen.gen_two_gaussian(int(kwargs.pop("n")), int(kwargs.pop("d")), seed, **kwargs)
    if name == "two_moons":
        return datagen.gen_two_moons(int(kwargs.pop("n")), seed, **kwargs)
    if name == "csv":
        header, rows = datagen.load_csv(kwargs["path"])
        label = kwargs.get("label", header[-1])
        j = header.index(label)
        x = np.delete(rows, j, axis=1)
        return datagen.TabularDataset(x, rows[:, j].astype(int), {"generator": "csv", "path": str(kwargs["path"])})
    raise ValueError(f"unknown tabular dataset {name!r}")


def unit_interval(x: np.ndarray, ref: np.ndarray | None = None) -> np.ndarray:
    """Min-max scaling to ``[0, 1]`` using the range of ``ref``."""
    return 0.5 * (datagen.normalize_range(x, ref) + 1.0)


def _err(scores: np.ndarray, labels: np.ndarray) -> float:
    return float(rvfl.misclassification(scores, labels))


def _shards(ctx: RunContext, x: np.ndarray, y: np.ndarray, idx: np.ndarray, n_agents: int, key: int):
    parts = np.array_split(np.random.default_rng(ctx.seed(505, key, n_agents)).permutation(idx), n_agents)
    return [(x[p], y[p]) for p in parts]


# ------------------------------------------------------------------ consensus


def run_dac(ctx: RunContext) -> list[FoldOutput]:
    """DAC on a random graph under each mixing strategy, plus a complete graph."""
    h = ctx.hyper
    net = ctx.network()
    n = net.n_agents
    rng = np.random.default_rng(ctx.seed(1))
    values = rng.normal(size=(n, int(h["dim"])))
    mean = values.mean(axis=0)
    out: dict[str, Metric] = {}
    rows = []
    for strategy in h["strategies"]:
        mix = build_mixing(net, strategy)
        res = dac_run(mix, values, int(h["max_iters"]), float(h["delta"]), true_mean=mean)
        # same protocol without early stopping, to see where the deviation falls below tolerance
        capped = dac_run(mix, values, int(h["max_iters"]), np.finfo(float).tiny, true_mean=mean)
        hit = next((i + 1 for i, v in enumerate(capped.deviation) if v < float(h["tolerance"])), None)
        out[f"iters_{strategy}"] = res.iterations
        out[f"reach_{strategy}"] = hit
        out[f"deviation_{strategy}"] = capped.deviation[-1]
        out[f"rho_{strategy}"] = mix.essential_spectral_radius()
        full = dac_run(build_mixing(gen_complete(n), strategy), values, int(h["max_iters"]), float(h["delta"]), true_mean=mean)
        out[f"complete_reach_{strategy}"] = next(
            (i + 1 for i, v in enumerate(full.deviation) if v < 1e-12), None
        )
        rows += [[strategy, i + 1, v] for i, v in enumerate(capped.deviation)]
    return [FoldOutput(out, {"deviation": (["strategy", "iteration", "max_deviation"], rows)})]


# ------------------------------------------------------------------ RVFL


def run_rvfl_hp(ctx: RunContext) -> list[FoldOutput]:
    """Centralized, consensus and local-only RVFL on horizontally split data."""
    h = ctx.hyper
    ds = ctx.tabular()
    y_all = np.asarray(ds.y, dtype=int)
    lam, hidden = float(h["lam"]), int(h["hidden"])
    targets = rvfl.encode_classes(y_all, 2)
    outputs = []
    for f, (tr, te) in enumerate(ctx.folds(len(y_all))):
        x = unit_interval(ds.x, ds.x[tr])
        params = rvfl.RvflParams.draw(x.shape[1], hidden, ctx.seed(2, f))
        beta = rvfl.train_centralized(params, x[tr], targets[tr], lam)
        m: dict[str, Metric] = {"err_central": _err(rvfl.predict(params, beta, x[te]), y_all[te])}
        for n_agents in h["agents"]:
            net = ctx.network(n_agents, key=f)
            mix = ctx.mixing(net)
            shards = _shards(ctx, x, targets, tr, n_agents, f)
            cons = rvfl.cons_rvfl(mix, shards, params, lam)
            m[f"err_cons_L{n_agents}"] = _err(rvfl.predict(params, cons[0], x[te]), y_all[te])
            local = rvfl.local_rvfl(shards, params, lam)
            m[f"err_local_L{n_agents}"] = float(
                np.mean([_err(rvfl.predict(params, b, x[te]), y_all[te]) for b in local])
            )
        outputs.append(FoldOutput(m))
    return outputs


def run_admm_rvfl(ctx: RunContext) -> list[FoldOutput]:
    """Relative objective gap of ADMM-RVFL to the centralized ridge optimum."""
    h = ctx.hyper
    ds = ctx.tabular()
    x = unit_interval(ds.x)
    targets = rvfl.encode_classes(np.asarray(ds.y, dtype=int), 2)
    lam = float(h["lam"])
    params = rvfl.RvflParams.draw(x.shape[1], int(h["hidden"]), ctx.seed(2))
    net = ctx.network()
    mix = ctx.mixing(net)
    shards = _shards(ctx, x, targets, np.arange(len(x)), net.n_agents, 0)
    designs = [(rvfl.hidden_matrix(params, xs), ys) for xs, ys in shards]
    best = rvfl.regularized_objective(designs, ridge(np.vstack([d for d, _ in designs]), np.vstack([t for _, t in designs]), lam), lam)
    z, trace = rvfl.admm_rvfl(
        mix, shards, params, lam, float(h["gamma"]), int(h["max_iters"]),
        float(h["eps_abs"]), float(h["eps_rel"]), track_objective=True,
    )
    gaps = [(rvfl.regularized_objective(designs, zk, lam) - best) / best for zk in z]
    rows = [
        [i + 1, (o - best) / best, r, s]
        for i, (o, r, s) in enumerate(zip(trace.objective, trace.r_norm, trace.s_norm))
    ]
    metrics = {
        "rel_gap_max": float(max(gaps)),
        "rel_gap_mean_z": float((rvfl.regularized_objective(designs, z.mean(axis=0), lam) - best) / best),
        "iterations": trace.iterations,
        "converged": trace.converged,
    }
    return [FoldOutput(metrics, {"admm": (["iteration", "rel_gap", "r_norm", "s_norm"], rows)})]


def run_brls(ctx: RunContext) -> list[FoldOutput]:
    """Recursive ridge over random chunkings against the batch solution."""
    h = ctx.hyper
    rng = np.random.default_rng(ctx.seed(3))
    worst = 0.0
    for _ in range(int(h["problems"])):
        n = int(rng.integers(20, 201))
        b = int(rng.integers(2, 41))
        m = int(rng.integers(1, 4))
        lam = float(10.0 ** rng.uniform(-3, 2))
        hmat, y = rng.normal(size=(n, b)), rng.normal(size=(n, m))
        cuts = np.sort(rng.choice(np.arange(1, n), size=int(rng.integers(0, min(10, n - 1) + 1)), replace=False))
        state = rvfl.BrlsState.init(b, m, lam)
        for rows in np.split(np.arange(n), cuts):
            state = rvfl.brls_update(state, hmat[rows], y[rows])
        batch = ridge(hmat, y, lam)
        worst = max(worst, float(np.linalg.norm(state.beta - batch) / np.linalg.norm(batch)))
    return [FoldOutput({"max_rel_err": worst})]


def run_vp_rvfl(ctx: RunContext) -> list[FoldOutput]:
    """Feature-partitioned RVFL: VP-ADMM, centralized, and a vote of local models."""
    h = ctx.hyper
    ds = ctx.tabular()
    y_all = np.asarray(ds.y, dtype=int)
    targets = rvfl.encode_classes(y_all, 2)
    lam, hidden = float(h["lam"]), int(h["hidden"])
    net = ctx.network()
    mix = ctx.mixing(net)
    features = datagen.partition(ds.x.shape[1], net.n_agents, "vertical")
    outputs = []
    for f, (tr, te) in enumerate(ctx.folds(len(y_all))):
        x = unit_interval(ds.x, ds.x[tr])
        params = rvfl.RvflParams.draw(x.shape[1], hidden, ctx.seed(2, f))
        beta = rvfl.train_centralized(params, x[tr], targets[tr], lam)
        model = rvfl.vp_admm_rvfl(
            mix, x[tr], targets[tr], features, hidden, lam, float(h["rho"]), int(h["max_iters"]), ctx.seed(4, f)
        )
        votes = [
            rvfl.predict(p, rvfl.train_centralized(p, x[tr][:, fs], targets[tr], lam), x[te][:, fs])
            for p, fs in zip(model.params, features)
        ]
        outputs.append(FoldOutput({
            "err_central": _err(rvfl.predict(params, beta, x[te]), y_all[te]),
            "err_vp_admm": _err(rvfl.vp_predict(model, x[te], mix), y_all[te]),
            "err_ensemble": _err(rvfl.ensemble_vote(votes), y_all[te]),
        }))
    return outputs


# ------------------------------------------------------------------ ESN


def _esn_params(ctx: RunContext, key: int) -> esn.EsnParams:
    h = ctx.hyper
    return esn.esn_init(
        int(h.get("inputs", 1)), int(h["reservoir"]), ctx.seed(5, key),
        rho=float(h["rho"]), alpha_i=float(h["alpha_i"]), alpha_f=float(h["alpha_f"]),
        alpha_t=float(h["alpha_t"]), noise_level=float(h.get("noise", 1e-3)), washout=int(h.get("washout", 100)),
    )


def _esn_score(params: esn.EsnParams, readout: np.ndarray, test) -> float:
    pred = np.concatenate([esn.esn_predict(params, readout, x) for x, _ in test])
    truth = np.concatenate([np.asarray(d, float).reshape(len(d), -1)[params.washout:] for _, d in test])
    return nrmse(pred, truth)


def _esn_designs(ctx, params, train, n_agents, key):
    groups = np.array_split(np.arange(len(train)), n_agents)
    return [
        esn.build_readout_design(params, [train[i] for i in g], noise_rng=np.random.default_rng(ctx.seed(6, key, k)))
        for k, g in enumerate(groups)
    ]


def run_esn(ctx: RunContext) -> list[FoldOutput]:
    """Centralized, ADMM and local-only ESN readouts under k-fold over sequences."""
    h = ctx.hyper
    seqs = ctx.sequences().sequences
    lam = float(h["lam"])
    n_agents = int(ctx.config.topology.get("agents", 5))
    net = ctx.network()
    mix = ctx.mixing(net)
    outputs = []
    for f, (tr, te) in enumerate(ctx.folds(len(seqs))):
        params = _esn_params(ctx, f)
        train, test = [seqs[i] for i in tr], [seqs[i] for i in te]
        design = esn.build_readout_design(params, train, noise_rng=np.random.default_rng(ctx.seed(6, f)))
        central = _esn_score(params, esn.train_readout(design, lam), test)
        designs = _esn_designs(ctx, params, train, n_agents, f)
        z, trace = esn.admm_esn(mix, designs, lam, float(h["gamma"]), int(h["max_iters"]), float(h["eps"]), float(h["eps"]))
        local = [_esn_score(params, esn.train_readout(d, lam), test) for d in designs]
        outputs.append(FoldOutput({
            "nrmse_central": central,
            "nrmse_admm": _esn_score(params, z[0], test),
            "nrmse_local": float(np.mean(local)),
            "admm_iterations": trace.iterations,
        }))
    return outputs


def run_l1_esn(ctx: RunContext) -> list[FoldOutput]:
    """Sparsity and error of the L1 readout across a grid of penalties."""
    h = ctx.hyper
    seqs = ctx.sequences().sequences
    outputs = []
    for f, (tr, te) in enumerate(ctx.folds(len(seqs))):
        params = _esn_params(ctx, f)
        train, test = [seqs[i] for i in tr], [seqs[i] for i in te]
        design = esn.build_readout_design(params, train, noise_rng=np.random.default_rng(ctx.seed(6, f)))
        m: dict[str, Metric] = {}
        rows = []
        for lam in h["lams"]:
            z, sparsity, trace = esn.admm_l1_esn(
                identity_mixing(1), [design], float(lam), float(h["gamma"]), int(h["max_iters"]), float(h["eps"]), float(h["eps"])
            )
            err_l1 = _esn_score(params, z[0], test)
            err_ridge = _esn_score(params, esn.train_readout(design, float(lam)), test)
            m[f"sparsity_{lam:g}"] = sparsity
            m[f"nrmse_l1_{lam:g}"] = err_l1
            m[f"nrmse_ridge_{lam:g}"] = err_ridge
            rows.append([float(lam), sparsity, err_l1, err_ridge, trace.iterations])
        outputs.append(FoldOutput(m, {"sweep": (["lam", "sparsity", "nrmse_l1", "nrmse_ridge", "iterations"], rows)}))
    return outputs


# ------------------------------------------------------------------ EDM and LapKRR


def _random_mask(rng: np.random.Generator, n: int, fraction: float) -> np.ndarray:
    m = np.triu(rng.random((n, n)) < fraction, 1)
    m = m | m.T
    np.fill_diagonal(m, True)
    return m


def run_edm(ctx: RunContext) -> list[FoldOutput]:
    """EDM operator identities and the two completion schemes on small instances."""
    h = ctx.hyper
    rng = np.random.default_rng(ctx.seed(7))
    n = int(h["points"])
    a, b = rng.normal(size=(n, n)), rng.normal(size=(n, n))
    a, b = a + a.T, b + b.T
    adj = abs(float(np.sum(edm_ssl.kappa(a) * b)) - float(np.sum(a * edm_ssl.kappa_adjoint(b))))
    adj /= max(1.0, abs(float(np.sum(edm_ssl.kappa(a) * b))))
    pts = rng.uniform(-1.0, 1.0, (n, int(h["dim"])))
    truth = edm_ssl.edm_from_points(pts)
    kap = float(np.max(np.abs(edm_ssl.kappa(pts @ pts.T) - truth)))
    mask = _random_mask(rng, n, float(h["fraction"]))
    view = edm_ssl.MaskedEdm(truth * mask, mask.astype(float), int(h["dim"]) + 2)
    dgd = edm_ssl.dgd_edm_complete(
        [view], identity_mixing(1), rank=int(h["dim"]), eta=float(h["eta"]), max_iters=int(h["max_iters"]), seed=ctx.seed(8)
    )
    nb = int(h["block_size"])
    u = rng.uniform(0.5, 1.5, nb)
    low_rank = np.outer(u, u)
    bmask = _random_mask(rng, nb, float(h["block_fraction"]))
    half = nb // 2
    observed = low_rank * bmask
    block = edm_ssl.block_edm_complete(
        [observed[:, :half], observed[:, half:]], [bmask[:, :half], bmask[:, half:]],
        build_mixing(gen_complete(2), "max_degree"), 1, max_iters=int(h["max_iters"]), seed=ctx.seed(9),
    )
    full = block.matrices[0]
    return [FoldOutput({
        "adjoint_err": adj,
        "kappa_err": kap,
        "dgd_rel_err": edm_ssl.completion_error(dgd.matrices[0], truth),
        "dgd_iterations": dgd.iterations,
        "block_rel_err": edm_ssl.completion_error(full, low_rank),
        "block_asymmetry": float(np.max(np.abs(full - full.T))),
        "block_min": float(full.min()),
    })]


def run_privacy(ctx: RunContext) -> list[FoldOutput]:
    """Monte-Carlo mean of projected inner products against the true ones."""
    h = ctx.hyper
    d, m, draws = int(h["dim"]), int(h["proj_dim"]), int(h["draws"])
    sigma = float(h["sigma"])
    rng = np.random.default_rng(ctx.seed(10))
    xs, ys = rng.normal(size=(int(h["pairs"]), d)), rng.normal(size=(int(h["pairs"]), d))
    samples = np.empty((draws, len(xs)))
    for t in range(draws):
        proj = edm_ssl.LinearProjection.draw(d, m, sigma, ctx.seed(11, t))
        samples[t] = np.einsum("ij,ij->i", proj(xs), proj(ys))
    true = np.einsum("ij,ij->i", xs, ys)
    se = samples.std(axis=0, ddof=1) / math.sqrt(draws)
    z = np.abs(samples.mean(axis=0) - true) / se
    return [FoldOutput({"max_z": float(z.max()), "mean_abs_diff": float(np.mean(np.abs(samples.mean(axis=0) - true)))})]


def _ssl_layout(ctx: RunContext, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    h = ctx.hyper
    perm = np.random.default_rng(ctx.seed(12)).permutation(n)
    n_lab, n_test = int(h["labeled"]), int(h["test"])
    return perm[:n_lab], perm[n_lab : n_lab + n_test], perm[n_lab + n_test :]


def run_lapkrr(ctx: RunContext) -> list[FoldOutput]:
    """Centralized, distributed (exchange, completion, DAC) and local LapKRR."""
    h = ctx.hyper
    ds = ctx.tabular()
    x = datagen.normalize_range(ds.x)
    y = 2.0 * np.asarray(ds.y, float) - 1.0
    lab, tst, unl = _ssl_layout(ctx, len(y))
    net = ctx.network()
    mix = ctx.mixing(net)
    part = edm_ssl.SslPartition.split(x[lab], y[lab], x[unl], net.n_agents)
    ga, gi, nn, sk, q = float(h["gamma_a"]), float(h["gamma_i"]), int(h["nn"]), float(h["sigma_k"]), int(h["q"])
    inputs = part.inputs()
    dist = edm_ssl.edm_from_points(inputs)
    k, lap = edm_ssl.build_graph_kernel(dist, nn, sk, q)
    labels, observed = part.global_labels()
    alpha = edm_ssl.lapkrr_centralized(k, lap, labels, observed, ga, gi)
    err_c = float(np.mean(np.sign(edm_ssl.gaussian_kernel(edm_ssl.edm_between(x[tst], inputs), sk) @ alpha) != y[tst]))
    views = edm_ssl.simulate_exchange(
        net, part, float(h["p1"]), int(h["n1"]), float(h["p2"]), int(h["n2"]), ctx.seed(13)
    )
    comp = edm_ssl.dgd_edm_complete(
        views, mix, rank=x.shape[1], eta=float(h["eta"]), max_iters=int(h["max_iters"]), seed=ctx.seed(14)
    )
    model = edm_ssl.distr_lapkrr(mix, part, comp.matrices, ga, gi, nn, sk, q)
    err_d = float(np.mean(np.sign(model.predict(part, x[tst], mix)) != y[tst]))
    local = []
    for a in range(part.n_agents):
        xa = part.agent_inputs(a)
        ya, ja = part.agent_labels(a)
        ka, la = edm_ssl.build_graph_kernel(edm_ssl.edm_from_points(xa), nn, sk, q)
        try:
            aa = edm_ssl.lapkrr_centralized(ka, la, ya, ja, ga, gi)
            pred = edm_ssl.gaussian_kernel(edm_ssl.edm_between(x[tst], xa), sk) @ aa
        except np.linalg.LinAlgError:
            pred = np.zeros(len(tst))
        local.append(float(np.mean(np.sign(pred) != y[tst])))
    return [FoldOutput({
        "err_central": err_c,
        "err_distributed": err_d,
        "err_local": float(np.mean(local)),
        "completion_err": float(np.mean([edm_ssl.completion_error(mat, dist) for mat in comp.matrices])),
        "sampled_fraction": float(np.mean([v.sampled_fraction for v in views])),
        "completion_diverged": comp.diverged,
    })]


# ------------------------------------------------------------------ S3VM


def run_s3vm(ctx: RunContext) -> list[FoldOutput]:
    """Centralized accuracy against a supervised baseline, then NEXT vs DGD rounds."""
    h = ctx.hyper
    ds = ctx.tabular()
    x = datagen.normalize_range(ds.x)
    y = 2.0 * np.asarray(ds.y, float) - 1.0
    lab, tst, unl = _ssl_layout(ctx, len(y))
    c1, c2, s = float(h["c1"]), float(h["c2"]), float(h["s"])
    central = s3vm.S3vmProblem([x[lab]], [y[lab]], [x[unl]], c1=c1, c2=c2, s=s)
    shift, b = s3vm.fix_offset_and_center(central.unlabeled_x, float(h["ratio"]))
    res = s3vm.grad_s3vm_centralized(s3vm.centered(central, shift, b), *h["central_step"], int(h["max_iters"]), 1e-5)
    err_s3 = s3vm.predict_and_error(res.mean_weights, b, x[tst] - shift, y[tst])
    ws, bs = s3vm.supervised_svm(x[lab], y[lab], c1)
    err_sup = s3vm.predict_and_error(ws, bs, x[tst], y[tst])

    net = ctx.network()
    mix = ctx.mixing(net)
    prob = s3vm.S3vmProblem.split(x[lab], y[lab], x[unl], net.n_agents, c1=c1, c2=c2, s=s)
    shift_d, b_d = s3vm.fix_offset_and_center(prob.unlabeled_x, float(h["ratio"]), mix)
    prob = s3vm.centered(prob, shift_d, b_d)
    thr = float(h["grad_threshold"])
    cap = int(h["max_iters"])
    dgd = s3vm.dgd_s3vm(mix, prob, *h["dgd_step"], cap, grad_tol=thr)
    nxt = s3vm.next_s3vm(mix, prob, *h["next_step"], cap, grad_tol=thr)
    rows = [["dgd", *r] for r in dgd.trace.rows()] + [["next", *r] for r in nxt.trace.rows()]
    return [FoldOutput(
        {
            "err_s3vm": err_s3,
            "err_supervised": err_sup,
            "rounds_dgd": dgd.trace.rounds_to(thr),
            "rounds_next": nxt.trace.rounds_to(thr),
            "err_next": s3vm.predict_and_error(nxt.mean_weights, b_d, x[tst] - shift_d, y[tst]),
            "err_dgd": s3vm.predict_and_error(dgd.mean_weights, b_d, x[tst] - shift_d, y[tst]),
        },
        {"rounds": (["solver", "round", "objective", "grad_norm", "disagreement"], rows)},
    )]


# ------------------------------------------------------------------ gradient checks


def _rel(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-12))


def _central_diff(f: Callable[[np.ndarray], float], w: np.ndarray, step: float) -> np.ndarray:
    g = np.empty_like(w)
    for i in range(w.size):
        e = np.zeros_like(w)
        e[i] = step
        g[i] = (f(w + e) - f(w - e)) / (2 * step)
    return g


def run_gradcheck(ctx: RunContext) -> list[FoldOutput]:
    """Analytic gradients against central differences at random points."""
    h = ctx.hyper
    rng = np.random.default_rng(ctx.seed(15))
    step = float(h["step"])
    worst = {"hinge": 0.0, "exp": 0.0, "saf_w": 0.0, "saf_q": 0.0}
    d, taps = int(h["dim"]), int(h["taps"])
    for _ in range(int(h["points"])):
        x = rng.normal(size=(20, d))
        yl = rng.choice([-1.0, 1.0], 20)
        w = rng.normal(size=d)
        b = float(rng.normal())
        _, g = s3vm.labeled_loss(w, x, yl, b, 0.7)
        worst["hinge"] = max(worst["hinge"], _rel(g, _central_diff(lambda v: s3vm.labeled_loss(v, x, yl, b, 0.7)[0], w, step)))
        _, g = s3vm.unlabeled_penalty(w, x, b, 0.3, 5.0)
        worst["exp"] = max(worst["exp"], _rel(g, _central_diff(lambda v: s3vm.unlabeled_penalty(v, x, b, 0.3, 5.0)[0], w, step)))

        state = saf.SafState.init(taps, 0.01, 0.01)
        state.w = rng.normal(scale=0.5, size=taps)
        state.nonlinearity.control_y[:] += rng.normal(scale=0.1, size=state.nonlinearity.control_y.size)
        buf = rng.normal(size=taps)
        target = float(rng.normal())
        gw, gq, start = saf.saf_gradients(state, buf, target)

        def cost_w(v):
            probe = state.copy()
            probe.w = v
            return (target - saf.saf_output(probe, buf)[0]) ** 2

        def cost_q(v):
            probe = state.copy()
            probe.nonlinearity.control_y[start : start + saf.SPAN] = v
            return (target - saf.saf_output(probe, buf)[0]) ** 2

        worst["saf_w"] = max(worst["saf_w"], _rel(gw, _central_diff(cost_w, state.w.copy(), step)))
        span = state.nonlinearity.control_y[start : start + saf.SPAN].copy()
        worst["saf_q"] = max(worst["saf_q"], _rel(gq, _central_diff(cost_q, span, step)))
    return [FoldOutput({f"max_rel_{k}": v for k, v in worst.items()})]


# ------------------------------------------------------------------ SAF


def diffusion_lms(inputs, desired, mix: np.ndarray, taps: int, mu: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Plain combine-then-adapt diffusion LMS; returns final taps and squared errors."""
    buffers = np.stack([datagen.delay_buffers(np.asarray(x, float), taps) for x in inputs])
    dd = np.stack([np.asarray(v, float) for v in desired])
    w = np.zeros((len(inputs), taps))
    w[:, 0] = 1.0
    sq = np.empty(dd.shape)
    for n in range(dd.shape[1]):
        psi = mix @ w
        e = dd[:, n] - np.einsum("km,km->k", psi, buffers[:, n])
        w = psi + (mu * e)[:, None] * buffers[:, n]
        sq[:, n] = e**2
    return w, sq


def run_dsaf(ctx: RunContext) -> list[FoldOutput]:
    """Steady-state MSE of D-SAF, non-cooperative SAF and D-LMS on a Wiener system."""
    h = ctx.hyper
    net = ctx.network()
    mix = ctx.mixing(net)
    n_agents, taps, length = net.n_agents, int(h["taps"]), int(h["samples"])
    inputs, desired, truth = datagen.gen_saf_streams(
        n_agents, length, taps, ctx.seed(16), saf.reference_nonlinearity(h.get("nonlinearity", "mild"))
    )
    mu = np.random.default_rng(ctx.seed(17)).uniform(*h["mu_range"], n_agents)
    tail = max(1, length // 10)

    def steady(sq: np.ndarray) -> float:
        return float(np.mean(saf.to_db(sq[:, -tail:].mean(axis=1))))

    d = saf.run_dsaf(inputs, desired, mix, taps, mu, mu)
    nc = saf.run_dsaf(inputs, desired, np.eye(n_agents), taps, mu, mu)
    dl = saf.run_dsaf(inputs, desired, mix, taps, mu, 0.0)
    w_ref, sq_ref = diffusion_lms(inputs, desired, mix.weights, taps, mu)
    stride = max(1, length // 500)
    rows = []
    for start in range(0, length, stride):
        window = slice(start, min(start + stride, length))
        rows.append([start + 1, *(float(np.mean(saf.to_db(r.sq_error[:, window].mean(axis=1)))) for r in (d, nc, dl))])
    return [FoldOutput(
        {
            "mse_dsaf_db": steady(d.sq_error),
            "mse_ncsaf_db": steady(nc.sq_error),
            "mse_dlms_db": steady(dl.sq_error),
            "noise_db": float(np.mean(saf.to_db(truth.noise_var))),
            "lms_max_step_diff": float(np.max(np.abs(dl.sq_error - sq_ref))),
            "lms_weight_diff": float(np.max(np.abs(dl.w - w_ref))),
        },
        {"mse": (["sample", "dsaf_db", "ncsaf_db", "dlms_db"], rows)},
    )]


# ------------------------------------------------------------------ registry


@dataclass(frozen=True)
class AlgorithmSpec:
    """Runner plus the defaults and documented ranges of its hyperparameters."""

    runner: Callable[[RunContext], list[FoldOutput]]
    kind: str
    defaults: Mapping[str, Any]
    ranges: Mapping[str, tuple[float, float]] = field(default_factory=dict)


ALGORITHMS: dict[str, AlgorithmSpec] = {
    "dac": AlgorithmSpec(
        run_dac, "none",
        {"dim": 10, "strategies": ["laplacian_heuristic", "metropolis", "max_degree"], "max_iters": 300, "delta": 1e-6, "tolerance": 1e-6},
        {"dim": (1, 1e6), "max_iters": (1, 1e6), "delta": (0, 1), "tolerance": (0, 1)},
    ),
    "rvfl_hp": AlgorithmSpec(
        run_rvfl_hp, "tabular", {"lam": 8.0, "hidden": 500, "agents": [5, 25]},
        {"lam": (0, 1e6), "hidden": (1, 1e5)},
    ),
    "admm_rvfl": AlgorithmSpec(
        run_admm_rvfl, "tabular",
        {"lam": 8.0, "hidden": 500, "gamma": 1.0, "max_iters": 300, "eps_abs": 1e-3, "eps_rel": 1e-3},
        {"lam": (0, 1e6), "hidden": (1, 1e5), "gamma": (0, 1e6), "max_iters": (1, 1e6), "eps_abs": (0, 1), "eps_rel": (0, 1)},
    ),
    "brls": AlgorithmSpec(run_brls, "none", {"problems": 50}, {"problems": (1, 1e6)}),
    "vp_rvfl": AlgorithmSpec(
        run_vp_rvfl, "tabular", {"lam": 8.0, "hidden": 500, "rho": 0.1, "max_iters": 200},
        {"lam": (0, 1e6), "hidden": (1, 1e5), "rho": (0, 1e6), "max_iters": (1, 1e6)},
    ),
    "esn": AlgorithmSpec(
        run_esn, "sequence",
        {"reservoir": 300, "rho": 0.9, "alpha_i": 0.5, "alpha_f": 0.3, "alpha_t": 0.1, "lam": 0.125,
         "gamma": 0.01, "max_iters": 400, "eps": 1e-4, "noise": 1e-3, "washout": 100},
        {"reservoir": (1, 1e5), "rho": (0, 1.5), "alpha_i": (0, 10), "alpha_f": (0, 10), "alpha_t": (0, 10),
         "lam": (0, 1e6), "gamma": (0, 1e6), "max_iters": (1, 1e6), "eps": (0, 1)},
    ),
    "l1_esn": AlgorithmSpec(
        run_l1_esn, "sequence",
        {"reservoir": 200, "rho": 0.9, "alpha_i": 0.3, "alpha_f": 0.0, "alpha_t": 0.5,
         "lams": [1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1], "gamma": 0.01, "max_iters": 400, "eps": 1e-4},
        {"reservoir": (1, 1e5), "rho": (0, 1.5), "gamma": (0, 1e6), "max_iters": (1, 1e6)},
    ),
    "edm": AlgorithmSpec(
        run_edm, "none",
        {"points": 20, "dim": 2, "fraction": 0.6, "eta": 1e-2, "max_iters": 1500, "block_size": 10, "block_fraction": 0.7},
        {"points": (3, 1e4), "fraction": (0, 1), "block_fraction": (0, 1), "eta": (0, 1), "max_iters": (1, 1e6)},
    ),
    "privacy": AlgorithmSpec(
        run_privacy, "none", {"dim": 10, "proj_dim": 5, "sigma": 1.0, "draws": 10000, "pairs": 10},
        {"dim": (1, 1e5), "proj_dim": (1, 1e5), "sigma": (0, 1e6), "draws": (2, 1e8), "pairs": (1, 1e5)},
    ),
    "lapkrr": AlgorithmSpec(
        run_lapkrr, "tabular",
        {"labeled": 14, "test": 200, "gamma_a": 2.0**-5, "gamma_i": 4.0, "nn": 6, "sigma_k": 0.03, "q": 1,
         "p1": 0.035, "n1": 100, "p2": 0.035, "n2": 100, "eta": 1e-3, "max_iters": 1500},
        {"gamma_a": (0, 1e6), "gamma_i": (0, 1e6), "nn": (1, 1e4), "sigma_k": (0, 1e6), "q": (1, 10),
         "p1": (0, 1), "p2": (0, 1), "eta": (0, 1), "max_iters": (1, 1e6)},
    ),
    "s3vm": AlgorithmSpec(
        run_s3vm, "tabular",
        {"labeled": 40, "test": 55, "c1": 1.0, "c2": 1.0, "s": 5.0, "ratio": 0.5, "max_iters": 500,
         "grad_threshold": 1e-3, "central_step": [1.0, 0.55], "dgd_step": [1.0, 0.55], "next_step": [0.5, 0.3]},
        {"c1": (0, 1e6), "c2": (0, 1e6), "s": (0, 1e3), "ratio": (0, 1), "max_iters": (1, 1e6), "grad_threshold": (0, 1)},
    ),
    "gradcheck": AlgorithmSpec(
        run_gradcheck, "none", {"points": 100, "dim": 6, "taps": 5, "step": 1e-6},
        {"points": (1, 1e6), "step": (0, 1)},
    ),
    "dsaf": AlgorithmSpec(
        run_dsaf, "none",
        {"taps": 5, "samples": 25000, "mu_range": [0.01, 0.03], "nonlinearity": "mild"},
        {"taps": (1, 1e3), "samples": (10, 1e8)},
    ),
}
