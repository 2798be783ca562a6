"""Random-vector functional-link networks and their distributed trainers.

The hidden layer is a fixed random sigmoid expansion shared by all agents, so
only the linear output weights ``beta`` (shape ``B x M``) are learned. Four
training schemes are offered for horizontally partitioned data (consensus
averaging, consensus ADMM, sequential consensus over recursive least squares)
plus a sharing-form ADMM for vertically partitioned features.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .consensus import MixingMatrix, dac_run
from .solvers import gram_inverse, ridge, spd_solve


@dataclass(frozen=True)
class RvflParams:
    """Random hidden layer: ``h_j(x) = sigmoid(w_j^T x + b_j)``."""

    hidden_weights: np.ndarray
    hidden_biases: np.ndarray
    weight_range: float = 1.0

    @property
    def input_dim(self) -> int:
        return self.hidden_weights.shape[1]

    @property
    def hidden_count(self) -> int:
        return self.hidden_weights.shape[0]

    @classmethod
    def draw(cls, input_dim: int, hidden_count: int, seed: int, weight_range: float = 1.0) -> "RvflParams":
        rng = np.random.default_rng(seed)
        w = rng.uniform(-weight_range, weight_range, size=(hidden_count, input_dim))
        b = rng.uniform(-weight_range, weight_range, size=hidden_count)
        return cls(w, b, weight_range)


def hidden_matrix(params: RvflParams, x: np.ndarray) -> np.ndarray:
    """Sigmoid expansion of ``x`` (``N x d``) into ``N x B`` features."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != params.input_dim:
        raise ValueError(f"expected {params.input_dim} input columns, got {x.shape[1]}")
    a = x @ params.hidden_weights.T + params.hidden_biases
    # tanh form is numerically safe for large |a|
    return 0.5 * (1.0 + np.tanh(0.5 * a))


def as_targets(y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    return y[:, None] if y.ndim == 1 else y


def encode_classes(labels: np.ndarray, n_classes: int) -> np.ndarray:
    """Map class indices to targets: one ``+-1`` column for two classes, one-hot ``+-1`` otherwise."""
    labels = np.asarray(labels, dtype=int)
    if n_classes == 2:
        return np.where(labels == 1, 1.0, -1.0)[:, None]
    out = -np.ones((labels.size, n_classes))
    out[np.arange(labels.size), labels] = 1.0
    return out


def decode_classes(scores: np.ndarray) -> np.ndarray:
    """Inverse of :func:`encode_classes`; ties resolve to the lowest class index."""
    scores = as_targets(scores)
    if scores.shape[1] == 1:
        return (scores[:, 0] > 0).astype(int)
    return np.argmax(scores, axis=1)


def misclassification(scores: np.ndarray, labels: np.ndarray) -> float:
    return float(np.mean(decode_classes(scores) != np.asarray(labels, dtype=int)))


def regularized_objective(shards: Sequence[tuple[np.ndarray, np.ndarray]], beta: np.ndarray, lam: float) -> float:
    """``sum_k ||H_k beta - y_k||^2 / 2 + lam ||beta||^2 / 2`` over pre-expanded shards."""
    loss = sum(float(np.sum((h @ beta - as_targets(y)) ** 2)) for h, y in shards)
    return 0.5 * loss + 0.5 * lam * float(np.sum(beta**2))


def train_centralized(params: RvflParams, x: np.ndarray, y: np.ndarray, lam: float) -> np.ndarray:
    return ridge(hidden_matrix(params, x), as_targets(y), lam)


def predict(params: RvflParams, beta: np.ndarray, x: np.ndarray) -> np.ndarray:
    return hidden_matrix(params, x) @ beta


def cons_rvfl(
    mix: MixingMatrix,
    shards: Sequence[tuple[np.ndarray, np.ndarray]],
    params: RvflParams,
    lam: float,
    dac_iters: int = 300,
    dac_delta: float = 1e-12,
) -> np.ndarray:
    """Local ridge solutions averaged by DAC.

    Returns:
        Array ``(L, B, M)`` with each agent's final weights.
    """
    local = np.stack([train_centralized(params, x, y, lam) for x, y in shards])
    return dac_run(mix, local, dac_iters, dac_delta).final_states


def local_rvfl(shards: Sequence[tuple[np.ndarray, np.ndarray]], params: RvflParams, lam: float) -> np.ndarray:
    """Per-agent ridge solutions without communication."""
    return np.stack([train_centralized(params, x, y, lam) for x, y in shards])


def ensemble_vote(per_agent_scores: Sequence[np.ndarray]) -> np.ndarray:
    """Majority vote over per-agent class decisions; ties go to the lowest class."""
    votes = np.stack([decode_classes(s) for s in per_agent_scores])
    n_classes = max(int(votes.max()) + 1, 2)
    counts = np.stack([(votes == c).sum(axis=0) for c in range(n_classes)], axis=1)
    return np.argmax(counts, axis=1)


@dataclass
class AdmmTrace:
    """Per-iteration ADMM diagnostics."""

    objective: list[float] = field(default_factory=list)
    r_norm: list[float] = field(default_factory=list)
    s_norm: list[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False

    def rows(self):
        for n in range(len(self.r_norm)):
            obj = self.objective[n] if n < len(self.objective) else float("nan")
            yield n + 1, obj, self.r_norm[n], self.s_norm[n]


def admm_consensus(
    designs: Sequence[np.ndarray],
    targets: Sequence[np.ndarray],
    mix: MixingMatrix,
    lam: float,
    gamma: float = 1.0,
    max_iters: int = 300,
    eps_abs: float = 1e-3,
    eps_rel: float = 1e-3,
    z_update: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None,
    dac_iters: int = 300,
    dac_delta: float = 1e-12,
    track_objective: bool = False,
) -> tuple[np.ndarray, AdmmTrace]:
    """Global-consensus ADMM for ``sum_k ||H_k b - y_k||^2 / 2 + reg(b)``.

    Each agent solves its quadratic subproblem with a factorization computed
    once, the network averages of ``beta_k`` and ``t_k`` come from DAC, and the
    shared variable is refreshed by ``z_update(beta_avg, t_avg)``. The default
    update is the closed form for the ridge penalty ``lam ||z||^2 / 2``.

    Returns:
        ``(z, trace)`` where ``z`` has shape ``(L, B, M)`` (one copy per agent).
    """
    n_agents = len(designs)
    ys = [as_targets(y) for y in targets]
    b_dim, m_dim = designs[0].shape[1], ys[0].shape[1]
    if z_update is None:
        def z_update(beta_avg, t_avg):
            return (gamma * beta_avg + t_avg) / (lam / n_agents + gamma)

    inverses = [gram_inverse(h, gamma) for h in designs]
    hty = [h.T @ y for h, y in zip(designs, ys)]
    z = np.zeros((n_agents, b_dim, m_dim))
    t = np.zeros_like(z)
    beta = np.zeros_like(z)
    trace = AdmmTrace()
    sqrt_l = math.sqrt(n_agents)
    for n in range(1, max_iters + 1):
        for k in range(n_agents):
            beta[k] = inverses[k] @ (hty[k] - t[k] + gamma * z[k])
        avg = dac_run(mix, np.concatenate([beta, t], axis=2), dac_iters, dac_delta).final_states
        z_prev = z
        z = np.stack([z_update(avg[k, :, :m_dim], avg[k, :, m_dim:]) for k in range(n_agents)])
        t = t + gamma * (beta - z)
        r = np.sqrt(np.sum((beta - z) ** 2, axis=(1, 2)))
        s = gamma * np.sqrt(np.sum((z - z_prev) ** 2, axis=(1, 2)))
        eps_p = sqrt_l * eps_abs + eps_rel * np.maximum(
            np.sqrt(np.sum(beta**2, axis=(1, 2))), np.sqrt(np.sum(z**2, axis=(1, 2)))
        )
        eps_d = sqrt_l * eps_abs + eps_rel * np.sqrt(np.sum(t**2, axis=(1, 2)))
        trace.r_norm.append(float(r.max()))
        trace.s_norm.append(float(s.max()))
        if track_objective:
            trace.objective.append(
                regularized_objective(list(zip(designs, ys)), z.mean(axis=0), lam)
            )
        trace.iterations = n
        if np.all(r < eps_p) and np.all(s < eps_d):
            trace.converged = True
            break
    return z, trace


def admm_rvfl(
    mix: MixingMatrix,
    shards: Sequence[tuple[np.ndarray, np.ndarray]],
    params: RvflParams,
    lam: float,
    gamma: float = 1.0,
    max_iters: int = 300,
    eps_abs: float = 1e-3,
    eps_rel: float = 1e-3,
    **kwargs,
) -> tuple[np.ndarray, AdmmTrace]:
    """Consensus ADMM over per-agent RVFL expansions."""
    designs = [hidden_matrix(params, x) for x, _ in shards]
    return admm_consensus(designs, [y for _, y in shards], mix, lam, gamma, max_iters, eps_abs, eps_rel, **kwargs)


@dataclass
class BrlsState:
    """Recursive ridge state: ``P = (H^T H + lam I)^{-1}`` and weights ``beta``."""

    p: np.ndarray
    beta: np.ndarray

    @classmethod
    def init(cls, hidden_count: int, n_outputs: int, lam: float) -> "BrlsState":
        return cls(np.eye(hidden_count) / lam, np.zeros((hidden_count, n_outputs)))


def brls_update(state: BrlsState, h: np.ndarray, y: np.ndarray) -> BrlsState:
    """Absorb one chunk of rows into the recursive ridge solution."""
    y = as_targets(y)
    if h.shape[0] == 0:
        return state
    ph_t = state.p @ h.T
    m = np.eye(h.shape[0]) + h @ ph_t
    p = state.p - ph_t @ spd_solve(m, ph_t.T)
    p = 0.5 * (p + p.T)
    beta = state.beta + p @ (h.T @ (y - h @ state.beta))
    return BrlsState(p, beta)


def s_cons_rvfl(
    mix: MixingMatrix,
    chunk_streams: Sequence[Sequence[tuple[np.ndarray, np.ndarray]]],
    params: RvflParams,
    lam: float,
    evaluate: Callable[[np.ndarray], float] | None = None,
    dac_iters: int = 300,
    dac_delta: float = 1e-12,
) -> tuple[np.ndarray, list[float]]:
    """Sequential consensus training: local recursive update then DAC on ``beta``.

    Matrices ``P_k`` stay private; only the weights are averaged each round.

    Returns:
        ``(beta, trace)`` with per-agent weights ``(L, B, M)`` and the value of
        ``evaluate(mean beta)`` after each round (empty if no evaluator).
    """
    n_rounds = {len(s) for s in chunk_streams}
    if len(n_rounds) != 1:
        raise ValueError("every agent needs the same number of chunks")
    m_dim = as_targets(chunk_streams[0][0][1]).shape[1]
    states = [BrlsState.init(params.hidden_count, m_dim, lam) for _ in chunk_streams]
    trace: list[float] = []
    for r in range(n_rounds.pop()):
        for k, stream in enumerate(chunk_streams):
            x, y = stream[r]
            states[k] = brls_update(states[k], hidden_matrix(params, x), y)
        avg = dac_run(mix, np.stack([s.beta for s in states]), dac_iters, dac_delta).final_states
        for k in range(len(states)):
            states[k] = BrlsState(states[k].p, avg[k])
        if evaluate is not None:
            trace.append(evaluate(avg.mean(axis=0)))
    return np.stack([s.beta for s in states]), trace


@dataclass
class VpModel:
    """Vertically partitioned RVFL: agent ``k`` expands its own feature block."""

    feature_sets: list[np.ndarray]
    params: list[RvflParams]
    betas: list[np.ndarray]
    trace: AdmmTrace = field(default_factory=AdmmTrace)

    def partials(self, x: np.ndarray) -> np.ndarray:
        """Per-agent outputs ``beta_k^T h_k(x_k)``, shape ``(L, N, M)``."""
        return np.stack(
            [hidden_matrix(p, x[:, f]) @ b for f, p, b in zip(self.feature_sets, self.params, self.betas)]
        )


def vp_admm_rvfl(
    mix: MixingMatrix,
    x: np.ndarray,
    y: np.ndarray,
    feature_sets: Sequence[np.ndarray],
    hidden_total: int,
    lam: float,
    rho: float = 0.1,
    max_iters: int = 200,
    seed: int = 0,
    dac_iters: int = 300,
    dac_delta: float = 1e-12,
    tol: float = 0.0,
) -> VpModel:
    """Sharing-form ADMM for ``||sum_k H_k b_k - y||^2 / 2 + lam sum_k ||b_k||^2 / 2``.

    Every agent owns ``ceil(hidden_total / L)`` hidden units over its feature
    block. The network average of ``H_k b_k`` is obtained by DAC; the target
    vector is known to all agents.
    """
    n_agents = len(feature_sets)
    b_k = math.ceil(hidden_total / n_agents)
    y = as_targets(y)
    params = [RvflParams.draw(len(f), b_k, seed + 7919 * (k + 1)) for k, f in enumerate(feature_sets)]
    hs = [hidden_matrix(p, x[:, f]) for p, f in zip(params, feature_sets)]
    solvers = [gram_inverse(h, lam / rho) @ h.T for h in hs]
    betas = [np.zeros((b_k, y.shape[1])) for _ in range(n_agents)]
    outs = np.zeros((n_agents,) + y.shape)
    zbar = np.zeros_like(outs)
    u = np.zeros_like(outs)
    mean_out = np.zeros_like(outs)
    trace = AdmmTrace()
    for n in range(1, max_iters + 1):
        for k in range(n_agents):
            betas[k] = solvers[k] @ (outs[k] + zbar[k] - mean_out[k] - u[k])
            outs[k] = hs[k] @ betas[k]
        mean_out = dac_run(mix, outs, dac_iters, dac_delta).final_states
        z_prev = zbar
        zbar = (y[None] + rho * (mean_out + u)) / (n_agents + rho)
        u = u + mean_out - zbar
        r = float(np.max(np.sqrt(np.sum((mean_out - zbar) ** 2, axis=(1, 2)))))
        s = float(rho * np.max(np.sqrt(np.sum((zbar - z_prev) ** 2, axis=(1, 2)))))
        trace.r_norm.append(r)
        trace.s_norm.append(s)
        trace.iterations = n
        if tol > 0 and r < tol and s < tol:
            trace.converged = True
            break
    return VpModel([np.asarray(f) for f in feature_sets], params, betas, trace)


def vp_predict(model: VpModel, x: np.ndarray, mix: MixingMatrix | None = None, dac_iters: int = 300, dac_delta: float = 1e-12) -> np.ndarray:
    """Sum of the agents' partial outputs, obtained as ``L`` times a DAC average.

    Without a mixing matrix the exact sum is returned. With one, the result is
    agent 0's consensus estimate.
    """
    parts = model.partials(x)
    if mix is None:
        return parts.sum(axis=0)
    return parts.shape[0] * dac_run(mix, parts, dac_iters, dac_delta).final_states[0]
