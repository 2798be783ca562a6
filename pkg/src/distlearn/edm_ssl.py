"""Distributed semi-supervised kernel ridge regression with a graph Laplacian penalty.

Agents first build a shared view of the pairwise squared-distance matrix
(pattern exchange, local blocks, entry exchange, low-rank completion), then
derive kernel and Laplacian matrices from it and solve for the kernel
expansion coefficients through two network sums.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .consensus import MixingMatrix, dac_sum
from .netgraph import AgentNetwork

Transform = Callable[[np.ndarray], np.ndarray]


# ---------------------------------------------------------------- EDM algebra


def edm_from_points(x: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances between the rows of ``x``."""
    x = np.asarray(x, dtype=float)
    x = x[:, None] if x.ndim == 1 else x
    sq = np.sum(x**2, axis=1)
    d = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.maximum(d, 0.0, out=d)
    d = 0.5 * (d + d.T)
    np.fill_diagonal(d, 0.0)
    return d


def kappa(a: np.ndarray) -> np.ndarray:
    """Map a Gram-like matrix to distances: ``diag(A) 1^T + 1 diag(A)^T - 2A``."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("kappa expects a square matrix")
    g = np.diag(a)
    return g[:, None] + g[None, :] - 2.0 * a


def kappa_adjoint(a: np.ndarray) -> np.ndarray:
    """Frobenius adjoint of :func:`kappa`: ``2 (diag(A 1) - A)``."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("kappa_adjoint expects a square matrix")
    return 2.0 * (np.diag(a.sum(axis=1)) - a)


def completion_error(estimate: np.ndarray, truth: np.ndarray) -> float:
    """Relative Frobenius error ``||D~ - D|| / ||D||``."""
    return float(np.linalg.norm(estimate - truth) / np.linalg.norm(truth))


# ------------------------------------------------------------------ data types


@dataclass
class MaskedEdm:
    """One agent's partial view of the global distance matrix."""

    estimate: np.ndarray
    mask: np.ndarray
    rank_hint: int

    def __post_init__(self) -> None:
        if self.estimate.shape != self.mask.shape or self.estimate.shape[0] != self.estimate.shape[1]:
            raise ValueError("estimate and mask must be matching square matrices")
        if self.rank_hint < 1:
            raise ValueError("rank hint must be positive")

    @property
    def size(self) -> int:
        return self.estimate.shape[0]

    @property
    def sampled_fraction(self) -> float:
        return float(self.mask.mean())

    def to_coo(self) -> np.ndarray:
        """Sampled entries as ``(i, j, value)`` rows."""
        i, j = np.nonzero(self.mask)
        return np.column_stack([i, j, self.estimate[i, j]])


@dataclass
class SslPartition:
    """Per-agent labeled and unlabeled shards.

    Patterns are globally ordered by agent, and within an agent labeled
    patterns come before unlabeled ones.
    """

    labeled_x: list[np.ndarray]
    labeled_y: list[np.ndarray]
    unlabeled_x: list[np.ndarray]

    def __post_init__(self) -> None:
        if not (len(self.labeled_x) == len(self.labeled_y) == len(self.unlabeled_x)):
            raise ValueError("every agent needs labeled inputs, labels and unlabeled inputs")
        for xs, ys in zip(self.labeled_x, self.labeled_y):
            if len(xs) != len(ys):
                raise ValueError("labeled inputs and labels differ in length")

    @classmethod
    def split(
        cls,
        x_lab: np.ndarray,
        y_lab: np.ndarray,
        x_unl: np.ndarray,
        n_agents: int,
    ) -> "SslPartition":
        """Evenly split already shuffled labeled and unlabeled sets."""
        lab = np.array_split(np.arange(len(x_lab)), n_agents)
        unl = np.array_split(np.arange(len(x_unl)), n_agents)
        return cls(
            [np.asarray(x_lab)[i] for i in lab],
            [np.asarray(y_lab, dtype=float)[i] for i in lab],
            [np.asarray(x_unl)[i] for i in unl],
        )

    @property
    def n_agents(self) -> int:
        return len(self.labeled_x)

    @property
    def sizes(self) -> np.ndarray:
        return np.array([len(a) + len(b) for a, b in zip(self.labeled_x, self.unlabeled_x)])

    @property
    def n_labeled(self) -> int:
        return int(sum(len(a) for a in self.labeled_x))

    @property
    def n_unlabeled(self) -> int:
        return int(sum(len(a) for a in self.unlabeled_x))

    @property
    def n_total(self) -> int:
        return self.n_labeled + self.n_unlabeled

    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.sizes)])

    def agent_indices(self, k: int) -> np.ndarray:
        off = self.offsets()
        return np.arange(off[k], off[k + 1])

    def agent_inputs(self, k: int) -> np.ndarray:
        return np.vstack([self.labeled_x[k], self.unlabeled_x[k]])

    def inputs(self) -> np.ndarray:
        return np.vstack([self.agent_inputs(k) for k in range(self.n_agents)])

    def agent_labels(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        """Zero-padded labels and labeled indicator over the agent's own patterns."""
        n_lab = len(self.labeled_x[k])
        n_unl = len(self.unlabeled_x[k])
        y = np.concatenate([self.labeled_y[k], np.zeros(n_unl)])
        j = np.concatenate([np.ones(n_lab), np.zeros(n_unl)])
        return y, j

    def global_labels(self) -> tuple[np.ndarray, np.ndarray]:
        parts = [self.agent_labels(k) for k in range(self.n_agents)]
        return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


@dataclass
class LapKrrModel:
    """Kernel expansion over the training patterns."""

    alpha: np.ndarray
    gamma_a: float
    gamma_i: float
    kernel_width: float
    nn: int
    q: int

    def __post_init__(self) -> None:
        if self.gamma_a <= 0:
            raise ValueError("gamma_A must be positive")
        if self.q < 1:
            raise ValueError("q must be a positive integer")

    def predict(self, x_new: np.ndarray, x_train: np.ndarray) -> np.ndarray:
        return gaussian_kernel(edm_between(x_new, x_train), self.kernel_width) @ self.alpha


# ---------------------------------------------------------------- privacy


@dataclass(frozen=True)
class LinearProjection:
    """Random Gaussian projection ``u = R x / (sqrt(m) sigma)``."""

    r: np.ndarray
    sigma: float

    @classmethod
    def draw(cls, d: int, m: int, sigma: float, seed: int) -> "LinearProjection":
        if sigma <= 0 or m < 1:
            raise ValueError("need sigma > 0 and m >= 1")
        return cls(np.random.default_rng(seed).normal(0.0, sigma, (m, d)), sigma)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        m = self.r.shape[0]
        return np.asarray(x, dtype=float) @ self.r.T / (np.sqrt(m) * self.sigma)


@dataclass(frozen=True)
class TanhProjection:
    """Random nonlinear map ``v = b + Q tanh(a + C x)``."""

    a: np.ndarray
    b: np.ndarray
    q: np.ndarray
    c: np.ndarray

    @classmethod
    def draw(cls, d: int, m: int, t: int, sigmas: Sequence[float], seed: int) -> "TanhProjection":
        """``sigmas`` are the standard deviations of ``(a, b, Q, C)``."""
        sa, sb, sq, sc = (float(s) for s in sigmas)
        if min(sa, sb, sq, sc) < 0:
            raise ValueError("standard deviations must be non-negative")
        rng = np.random.default_rng(seed)
        return cls(rng.normal(0.0, sa, t), rng.normal(0.0, sb, m), rng.normal(0.0, sq, (m, t)), rng.normal(0.0, sc, (t, d)))

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.b + np.tanh(self.a + np.asarray(x, dtype=float) @ self.c.T) @ self.q.T


def privacy_linear(x: np.ndarray, m: int, sigma: float, seed: int) -> np.ndarray:
    """Project a single pattern with the matrix drawn from ``seed``."""
    x = np.asarray(x, dtype=float)
    return LinearProjection.draw(x.shape[-1], m, sigma, seed)(x)


def privacy_nonlinear(x: np.ndarray, m: int, t: int, sigmas: Sequence[float], seed: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return TanhProjection.draw(x.shape[-1], m, t, sigmas, seed)(x)


# ------------------------------------------------------------ exchange protocol


def share_counts(n: int, n_max: int, budget: float) -> tuple[int, int]:
    """Own and relayed item counts shared at round ``n`` (1-based) of ``n_max``."""
    own = int(np.floor((n_max - n + 1) / n_max * budget))
    relay = int(np.floor((n - 1) / n_max * budget))
    return max(own, 1), relay


def _pick(rng: np.random.Generator, pool: np.ndarray, count: int) -> np.ndarray:
    if count <= 0 or pool.size == 0:
        return pool[:0]
    return rng.choice(pool, size=min(count, pool.size), replace=False)


def simulate_exchange(
    net: AgentNetwork,
    partition: SslPartition,
    p1: float,
    n1: int,
    p2: float,
    n2: int,
    seed: int,
    privacy: Transform | None = None,
    rank_hint: int | None = None,
) -> list[MaskedEdm]:
    """Pattern exchange, local distance blocks, then entry exchange.

    Patterns received from neighbors are stored in transformed form when a
    ``privacy`` map is given; distances involving them are computed between
    transformed vectors (the agent transforms its own pattern too). Distances
    among an agent's own patterns always use the raw inputs.
    """
    if not (0 < p1 <= 1 and 0 < p2 <= 1):
        raise ValueError("exchange fractions must lie in (0, 1]")
    if n1 < 0 or n2 < 0:
        raise ValueError("exchange rounds must be non-negative")
    n_agents = partition.n_agents
    if net.n_agents != n_agents:
        raise ValueError("network and partition disagree on the number of agents")
    rng = np.random.default_rng(seed)
    x = partition.inputs()
    shared = x if privacy is None else np.asarray(privacy(x), dtype=float)
    size = partition.n_total
    own_idx = [partition.agent_indices(k) for k in range(n_agents)]
    neighbors = [net.neighbors(k) for k in range(n_agents)]

    # pattern exchange
    known = [np.zeros(size, dtype=bool) for _ in range(n_agents)]
    for k in range(n_agents):
        known[k][own_idx[k]] = True
    for n in range(1, n1 + 1):
        outgoing = []
        for k in range(n_agents):
            own_c, relay_c = share_counts(n, n1, p1 * len(own_idx[k]))
            relayed = np.flatnonzero(known[k])
            relayed = relayed[~np.isin(relayed, own_idx[k])]
            outgoing.append(np.concatenate([_pick(rng, own_idx[k], own_c), _pick(rng, relayed, relay_c)]))
        for k in range(n_agents):
            for j in neighbors[k]:
                known[j][outgoing[k]] = True

    # local distance blocks
    estimate = [np.zeros((size, size)) for _ in range(n_agents)]
    mask = [np.zeros((size, size), dtype=bool) for _ in range(n_agents)]
    for k in range(n_agents):
        idx = np.flatnonzero(known[k])
        block = edm_from_points(shared[idx])
        own = own_idx[k]
        if privacy is not None:
            local = np.searchsorted(idx, own)
            block[np.ix_(local, local)] = edm_from_points(x[own])
        estimate[k][np.ix_(idx, idx)] = block
        mask[k][np.ix_(idx, idx)] = True
    computed = [np.triu(m, k=1) for m in mask]
    budget = [float(c.sum()) for c in computed]

    # entry exchange over upper-triangular pairs
    ui, uj = np.triu_indices(size, k=1)
    for n in range(1, n2 + 1):
        outgoing = []
        for k in range(n_agents):
            own_c, relay_c = share_counts(n, n2, p2 * budget[k])
            sampled = mask[k][ui, uj]
            own_flag = computed[k][ui, uj]
            own_rows = np.flatnonzero(own_flag)
            relay_rows = np.flatnonzero(sampled & ~own_flag)
            rows = np.concatenate([_pick(rng, own_rows, own_c), _pick(rng, relay_rows, relay_c)]).astype(int)
            a, b = ui[rows], uj[rows]
            outgoing.append((a, b, estimate[k][a, b]))
        for k in range(n_agents):
            a, b, vals = outgoing[k]
            for j in neighbors[k]:
                new = ~mask[j][a, b]
                aj, bj, vj = a[new], b[new], vals[new]
                estimate[j][aj, bj] = vj
                estimate[j][bj, aj] = vj
                mask[j][aj, bj] = True
                mask[j][bj, aj] = True

    d_in = x.shape[1]
    r = d_in + 2 if rank_hint is None else rank_hint
    views = []
    for k in range(n_agents):
        np.fill_diagonal(mask[k], True)
        np.fill_diagonal(estimate[k], 0.0)
        views.append(MaskedEdm(estimate[k], mask[k].astype(float), r))
    return views


def column_blocks(views: Sequence[MaskedEdm], partition: SslPartition) -> list[MaskedEdm]:
    """Each agent keeps only the columns of its own patterns (as a masked view)."""
    out = []
    for k, v in enumerate(views):
        cols = partition.agent_indices(k)
        keep = np.zeros(v.size, dtype=bool)
        keep[cols] = True
        out.append(MaskedEdm(v.estimate * keep, v.mask * keep, v.rank_hint))
    return out


# --------------------------------------------------------------- completion


@dataclass
class CompletionResult:
    """Per-agent completed matrices and the cost trace."""

    matrices: list[np.ndarray]
    cost: list[float] = field(default_factory=list)
    iterations: int = 0
    diverged: bool = False


def edm_descent_direction(v: np.ndarray, target: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """``kappa*(mask o (kappa(V V^T) - target)) V``; a quarter of the exact gradient."""
    resid = mask * (kappa(v @ v.T) - target)
    return kappa_adjoint(resid) @ v


def masked_cost(v: np.ndarray, target: np.ndarray, mask: np.ndarray) -> float:
    return float(np.sum((mask * (target - kappa(v @ v.T))) ** 2))


def dgd_edm_complete(
    views: Sequence[MaskedEdm],
    mix: MixingMatrix | np.ndarray,
    rank: int | None = None,
    eta: float = 1e-2,
    max_iters: int = 1500,
    seed: int = 0,
    init: np.ndarray | None = None,
    init_scale: float = 0.1,
    blowup: float = 10.0,
) -> CompletionResult:
    """Diffusion gradient descent on the low-rank factor ``V`` of a Gram matrix.

    Every agent takes a local step on its own masked cost and then averages
    the factors with its neighbors. Aborts when the summed cost grows by more
    than ``blowup`` times its initial value.
    """
    c = mix.weights if isinstance(mix, MixingMatrix) else np.asarray(mix, dtype=float)
    n_agents = len(views)
    if c.shape != (n_agents, n_agents):
        raise ValueError("mixing matrix does not match the number of views")
    if eta <= 0:
        raise ValueError("eta must be positive")
    size = views[0].size
    # a Gram factor of width d yields distances of rank at most d + 2
    r = max(views[0].rank_hint - 2, 1) if rank is None else rank
    if r < 1:
        raise ValueError("rank must be positive")
    rng = np.random.default_rng(seed)
    if init is None:
        v = np.broadcast_to(rng.normal(0.0, init_scale, (size, r)), (n_agents, size, r)).copy()
    else:
        v = np.broadcast_to(np.asarray(init, dtype=float), (n_agents, size, r)).copy()
    targets = [vw.estimate for vw in views]
    masks = [vw.mask for vw in views]
    result = CompletionResult(matrices=[])
    start = sum(masked_cost(v[k], targets[k], masks[k]) for k in range(n_agents))
    result.cost.append(start)
    for n in range(1, max_iters + 1):
        step = np.stack([v[k] - eta * edm_descent_direction(v[k], targets[k], masks[k]) for k in range(n_agents)])
        v = np.einsum("kl,lij->kij", c, step)
        cost = sum(masked_cost(v[k], targets[k], masks[k]) for k in range(n_agents))
        result.cost.append(cost)
        result.iterations = n
        if not np.isfinite(cost) or cost > blowup * max(start, 1e-300):
            result.diverged = True
            break
    result.matrices = [kappa(v[k] @ v[k].T) for k in range(n_agents)]
    return result


def block_edm_complete(
    blocks: Sequence[np.ndarray],
    block_masks: Sequence[np.ndarray],
    mix: MixingMatrix | np.ndarray,
    rank: int,
    alpha: float = 0.4,
    max_iters: int = 1500,
    seed: int = 0,
    tol: float = 1e-10,
) -> CompletionResult:
    """Decentralized factorization completion over column blocks.

    Agent ``k`` holds the ``N x N_k`` block ``blocks[k]`` with its sampled
    positions. The shared left factor follows an exact first-order consensus
    recursion with ``C~ = (I + C) / 2``; the right factor is the least-squares
    fit ``pinv(A_k) D~_k``; the completed block keeps sampled entries and
    clamps negatives to zero. After the last round the blocks are gathered and
    symmetrized, so every agent ends with the same matrix.
    """
    c = mix.weights if isinstance(mix, MixingMatrix) else np.asarray(mix, dtype=float)
    n_agents = len(blocks)
    if c.shape != (n_agents, n_agents):
        raise ValueError("mixing matrix does not match the number of blocks")
    if alpha <= 0 or rank < 1:
        raise ValueError("need alpha > 0 and rank >= 1")
    c_tilde = 0.5 * (np.eye(n_agents) + c)
    hat = [np.asarray(b, dtype=float) for b in blocks]
    obs = [np.asarray(m, dtype=bool) for m in block_masks]
    size = hat[0].shape[0]
    rng = np.random.default_rng(seed)
    a = np.stack([rng.normal(0.0, 1.0, (size, rank)) for _ in range(n_agents)])
    b = [rng.normal(0.0, 1.0, (rank, h.shape[1])) for h in hat]
    dt = [h.copy() for h in hat]

    def local_grad(k: int) -> np.ndarray:
        return a[k] - dt[k] @ b[k].T

    def refit(k: int) -> None:
        try:
            b[k] = np.linalg.pinv(a[k]) @ dt[k]
        except np.linalg.LinAlgError as exc:
            raise RuntimeError(f"pseudoinverse failed at agent {k}") from exc
        ab = a[k] @ b[k]
        full = np.where(obs[k], hat[k], ab)
        dt[k] = np.maximum(full, 0.0)

    result = CompletionResult(matrices=[])
    grad_prev = np.stack([local_grad(k) for k in range(n_agents)])
    a_prev = a.copy()
    a = np.einsum("kl,lij->kij", c, a) - alpha * grad_prev
    for k in range(n_agents):
        refit(k)
    for n in range(1, max_iters):
        grad = np.stack([local_grad(k) for k in range(n_agents)])
        a_next = (
            a
            + np.einsum("kl,lij->kij", c, a)
            - np.einsum("kl,lij->kij", c_tilde, a_prev)
            - alpha * (grad - grad_prev)
        )
        a_prev, a, grad_prev = a, a_next, grad
        for k in range(n_agents):
            refit(k)
        fit = sum(float(np.sum((obs[k] * (hat[k] - a[k] @ b[k])) ** 2)) for k in range(n_agents))
        result.cost.append(fit)
        result.iterations = n + 1
        if not np.isfinite(fit):
            result.diverged = True
            break
        if fit < tol:
            break
    full = np.hstack(dt)
    full = 0.5 * (full + full.T)
    result.matrices = [full.copy() for _ in range(n_agents)]
    return result


def block_complete_views(
    views: Sequence[MaskedEdm],
    partition: SslPartition,
    mix: MixingMatrix | np.ndarray,
    rank: int | None = None,
    **kwargs,
) -> CompletionResult:
    """Run :func:`block_edm_complete` on the column blocks of per-agent views."""
    blocks, masks = [], []
    for k, v in enumerate(views):
        cols = partition.agent_indices(k)
        blocks.append(v.estimate[:, cols])
        masks.append(v.mask[:, cols] > 0)
    r = views[0].rank_hint if rank is None else rank
    return block_edm_complete(blocks, masks, mix, r, **kwargs)


# --------------------------------------------------------- kernel and Laplacian


def edm_between(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    d = np.sum(a**2, 1)[:, None] + np.sum(b**2, 1)[None, :] - 2.0 * a @ b.T
    return np.maximum(d, 0.0)


def gaussian_kernel(d: np.ndarray, width: float) -> np.ndarray:
    if width <= 0:
        raise ValueError("kernel width must be positive")
    return np.exp(-np.asarray(d, dtype=float) / (2.0 * width**2))


def knn_adjacency(d: np.ndarray, nn: int, width: float) -> np.ndarray:
    """Gaussian-weighted ``nn``-nearest-neighbor graph, symmetrized by max."""
    d = np.asarray(d, dtype=float)
    size = d.shape[0]
    nn = min(nn, size - 1)
    w = np.zeros_like(d)
    if nn < 1:
        return w
    masked = d.copy()
    np.fill_diagonal(masked, np.inf)
    nearest = np.argsort(masked, axis=1, kind="stable")[:, :nn]
    rows = np.repeat(np.arange(size), nn)
    w[rows, nearest.ravel()] = gaussian_kernel(d[rows, nearest.ravel()], width)
    return np.maximum(w, w.T)


def normalized_laplacian(w: np.ndarray) -> np.ndarray:
    """``G^{-1/2} (G - W) G^{-1/2}``; isolated vertices get zero rows."""
    deg = w.sum(axis=1)
    inv_sqrt = np.zeros_like(deg)
    pos = deg > 0
    inv_sqrt[pos] = 1.0 / np.sqrt(deg[pos])
    lap = np.diag(deg) - w
    return inv_sqrt[:, None] * lap * inv_sqrt[None, :]


def build_graph_kernel(d: np.ndarray, nn: int, sigma_k: float, q: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Kernel matrix and iterated normalized Laplacian from a distance matrix."""
    d = np.asarray(d, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValueError("distance matrix must be square")
    if q < 1:
        raise ValueError("q must be a positive integer")
    k = gaussian_kernel(d, sigma_k)
    lap = np.linalg.matrix_power(normalized_laplacian(knn_adjacency(d, nn, sigma_k)), q)
    return k, lap


# ------------------------------------------------------------------- training


def lapkrr_system(k: np.ndarray, lap: np.ndarray, labeled: np.ndarray, gamma_a: float, gamma_i: float) -> np.ndarray:
    """``J K + gamma_A I + gamma_I L K`` with ``J`` the labeled indicator."""
    if gamma_a <= 0:
        raise ValueError("gamma_A must be positive")
    if gamma_i < 0:
        raise ValueError("gamma_I must be non-negative")
    m = np.asarray(labeled, dtype=float)[:, None] * k + gamma_i * (lap @ k)
    m[np.diag_indices_from(m)] += gamma_a
    return m


def _solve(m: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.solve(m, rhs)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError("singular manifold-regularized system") from exc


def lapkrr_centralized(
    k: np.ndarray,
    lap: np.ndarray,
    labels: np.ndarray,
    labeled: np.ndarray,
    gamma_a: float,
    gamma_i: float,
) -> np.ndarray:
    """Kernel coefficients ``(J K + gamma_A I + gamma_I L K)^{-1} y_hat``."""
    y_hat = np.asarray(labels, dtype=float) * np.asarray(labeled, dtype=float)
    return _solve(lapkrr_system(k, lap, labeled, gamma_a, gamma_i), y_hat)


def krr(k: np.ndarray, y: np.ndarray, gamma_a: float) -> np.ndarray:
    """Plain kernel ridge coefficients ``(K + gamma_A I)^{-1} y``."""
    return _solve(k + gamma_a * np.eye(len(y)), np.asarray(y, dtype=float))


@dataclass
class DistrLapKrrResult:
    """Per-agent coefficient pieces and the network-summed coefficients."""

    local_alpha: np.ndarray
    alpha: np.ndarray
    labeled_total: np.ndarray
    kernel_width: float

    def predict(self, partition: SslPartition, x_new: np.ndarray, mix: MixingMatrix | np.ndarray, **dac_kw) -> np.ndarray:
        """Sum of per-agent partial outputs, each over the agent's own patterns."""
        partials = []
        for k in range(partition.n_agents):
            idx = partition.agent_indices(k)
            kern = gaussian_kernel(edm_between(x_new, partition.agent_inputs(k)), self.kernel_width)
            partials.append(kern @ self.alpha[k][idx])
        return dac_sum(mix, np.stack(partials), **dac_kw)[0]


def distr_lapkrr(
    mix: MixingMatrix | np.ndarray,
    partition: SslPartition,
    completed: Sequence[np.ndarray],
    gamma_a: float,
    gamma_i: float,
    nn: int,
    sigma_k: float,
    q: int = 1,
    dac_iters: int = 500,
    dac_delta: float = 1e-14,
) -> DistrLapKrrResult:
    """Two network sums: labeled indicators, then local coefficient pieces.

    Each agent builds its kernel and Laplacian from its own completed matrix.
    """
    n_agents = partition.n_agents
    size = partition.n_total
    indicators = np.zeros((n_agents, size))
    rhs = np.zeros((n_agents, size))
    for k in range(n_agents):
        idx = partition.agent_indices(k)
        y, j = partition.agent_labels(k)
        indicators[k, idx] = j
        rhs[k, idx] = y * j
    if n_agents > 1:
        labeled_total = dac_sum(mix, indicators, max_iters=dac_iters, delta=dac_delta)
    else:
        labeled_total = indicators.copy()
    local = np.zeros((n_agents, size))
    for k in range(n_agents):
        kern, lap = build_graph_kernel(completed[k], nn, sigma_k, q)
        local[k] = _solve(lapkrr_system(kern, lap, labeled_total[k], gamma_a, gamma_i), rhs[k])
    alpha = dac_sum(mix, local, max_iters=dac_iters, delta=dac_delta) if n_agents > 1 else local.copy()
    return DistrLapKrrResult(local, alpha, labeled_total, sigma_k)
