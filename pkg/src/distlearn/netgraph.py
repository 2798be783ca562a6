"""Agent-network topologies and their algebraic views.

Every generator returns an :class:`AgentNetwork` whose adjacency matrix is
symmetric, zero-diagonal and connected. Randomized generators draw from a
``numpy.random.Generator`` seeded with the supplied integer, so the same seed
always yields the same graph.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MAX_RETRIES = 1000


class ConnectivityError(RuntimeError):
    """Raised when a random generator cannot produce a connected graph."""


@dataclass(frozen=True)
class AgentNetwork:
    """Undirected simple graph over ``n_agents`` agents.

    Attributes:
        n_agents: Number of agents.
        adjacency: Symmetric 0/1 matrix with zero diagonal.
        seed: Seed used to generate the graph (``None`` for deterministic ones).
    """

    n_agents: int
    adjacency: np.ndarray = field(repr=False)
    seed: int | None = None

    def __post_init__(self) -> None:
        adj = np.asarray(self.adjacency, dtype=np.int64)
        if adj.shape != (self.n_agents, self.n_agents):
            raise ValueError("adjacency shape does not match n_agents")
        if not np.array_equal(adj, adj.T):
            raise ValueError("adjacency must be symmetric")
        if np.any(np.diag(adj) != 0):
            raise ValueError("adjacency must have a zero diagonal")
        if not np.all((adj == 0) | (adj == 1)):
            raise ValueError("adjacency must be 0/1")
        adj.setflags(write=False)
        object.__setattr__(self, "adjacency", adj)

    @property
    def degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)

    @property
    def n_edges(self) -> int:
        return int(self.adjacency.sum() // 2)

    def neighbors(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.adjacency[k])

    def edges(self) -> list[tuple[int, int]]:
        i, j = np.nonzero(np.triu(self.adjacency, 1))
        return list(zip(i.tolist(), j.tolist()))


@dataclass(frozen=True)
class GraphMatrices:
    """Degree, Laplacian and normalized Laplacian of a network."""

    degree: np.ndarray
    laplacian: np.ndarray
    normalized_laplacian: np.ndarray


def _from_edges(n: int, edges, seed=None) -> AgentNetwork:
    adj = np.zeros((n, n), dtype=np.int64)
    for i, j in edges:
        if i != j:
            adj[i, j] = adj[j, i] = 1
    return AgentNetwork(n, adj, seed)


def is_connected(net: AgentNetwork | np.ndarray) -> bool:
    """Breadth-first reachability check from node 0."""
    adj = net.adjacency if isinstance(net, AgentNetwork) else np.asarray(net)
    n = adj.shape[0]
    if n == 0:
        return False
    seen = np.zeros(n, dtype=bool)
    seen[0] = True
    queue = deque([0])
    while queue:
        k = queue.popleft()
        for j in np.flatnonzero(adj[k]):
            if not seen[j]:
                seen[j] = True
                queue.append(j)
    return bool(seen.all())


def gen_erdos_renyi(n_agents: int, p: float, seed: int) -> AgentNetwork:
    """Random graph where each edge appears independently with probability ``p``.

    Draws are repeated until the graph is connected.

    Raises:
        ConnectivityError: If no connected graph is found within the retry cap.
    """
    if n_agents < 2:
        raise ValueError("need at least two agents")
    if not 0 < p <= 1:
        raise ValueError("p must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    iu = np.triu_indices(n_agents, 1)
    for _ in range(MAX_RETRIES):
        adj = np.zeros((n_agents, n_agents), dtype=np.int64)
        adj[iu] = rng.random(iu[0].size) < p
        adj = adj + adj.T
        if is_connected(adj):
            return AgentNetwork(n_agents, adj, seed)
    raise ConnectivityError(f"no connected ER({n_agents}, {p}) graph in {MAX_RETRIES} draws")


def gen_linear(n_agents: int, k: int) -> AgentNetwork:
    """Chain where node ``i`` links to its next ``k`` successors."""
    if not 1 <= k < n_agents:
        raise ValueError("need 1 <= k < n_agents")
    edges = [(i, j) for i in range(n_agents) for j in range(i + 1, min(i + k, n_agents - 1) + 1)]
    return _from_edges(n_agents, edges)


def gen_small_world(n_agents: int, k: int, alpha: float, seed: int) -> AgentNetwork:
    """Watts-Strogatz graph: ring lattice with ``k`` neighbors per side, then rewiring.

    Each lattice edge ``(i, i+j)`` keeps ``i`` and, with probability ``alpha``,
    moves its far endpoint to a uniformly chosen node that is neither ``i`` nor
    an existing neighbor of ``i``.
    """
    if k < 1 or 2 * k >= n_agents:
        raise ValueError("need 1 <= k and 2k < n_agents")
    if not 0 <= alpha <= 1:
        raise ValueError("alpha must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    for _ in range(MAX_RETRIES):
        adj = np.zeros((n_agents, n_agents), dtype=np.int64)
        for i in range(n_agents):
            for j in range(1, k + 1):
                t = (i + j) % n_agents
                adj[i, t] = adj[t, i] = 1
        for j in range(1, k + 1):
            for i in range(n_agents):
                t = (i + j) % n_agents
                if rng.random() >= alpha or not adj[i, t]:
                    continue
                free = np.flatnonzero(adj[i] == 0)
                free = free[free != i]
                if free.size == 0:
                    continue
                new = int(rng.choice(free))
                adj[i, t] = adj[t, i] = 0
                adj[i, new] = adj[new, i] = 1
        if is_connected(adj):
            return AgentNetwork(n_agents, adj, seed)
    raise ConnectivityError("no connected small-world graph within retry cap")


def gen_scale_free(n_agents: int, m: int, seed: int) -> AgentNetwork:
    """Barabási-Albert preferential attachment grown from an ``(m+1)``-clique."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if n_agents < m + 1:
        raise ValueError("need n_agents >= m + 1")
    rng = np.random.default_rng(seed)
    adj = np.zeros((n_agents, n_agents), dtype=np.int64)
    adj[: m + 1, : m + 1] = 1
    np.fill_diagonal(adj, 0)
    for new in range(m + 1, n_agents):
        deg = adj[:new, :new].sum(axis=1).astype(float)
        targets = rng.choice(new, size=m, replace=False, p=deg / deg.sum())
        adj[new, targets] = adj[targets, new] = 1
    return AgentNetwork(n_agents, adj, seed)


def gen_complete(n_agents: int) -> AgentNetwork:
    adj = np.ones((n_agents, n_agents), dtype=np.int64)
    np.fill_diagonal(adj, 0)
    return AgentNetwork(n_agents, adj)


def graph_matrices(net: AgentNetwork) -> GraphMatrices:
    """Degree matrix, Laplacian ``D - A`` and ``D^{-1/2} (D - A) D^{-1/2}``."""
    deg = net.degrees
    degree = np.diag(deg)
    lap = degree - net.adjacency
    inv_sqrt = np.zeros(net.n_agents)
    nz = deg > 0
    inv_sqrt[nz] = 1.0 / np.sqrt(deg[nz])
    norm = inv_sqrt[:, None] * lap * inv_sqrt[None, :]
    return GraphMatrices(degree=degree, laplacian=lap, normalized_laplacian=norm)


def save_edgelist(net: AgentNetwork, path: str | Path) -> None:
    lines = [f"L {net.n_agents}"] + [f"{i} {j}" for i, j in net.edges()]
    Path(path).write_text("\n".join(lines) + "\n")


def load_edgelist(path: str | Path) -> AgentNetwork:
    rows = [r.split() for r in Path(path).read_text().splitlines() if r.strip()]
    if not rows or rows[0][0] != "L":
        raise ValueError("edge list must start with 'L <n_agents>'")
    n = int(rows[0][1])
    return _from_edges(n, [(int(a), int(b)) for a, b in rows[1:]])
