"""Mixing matrices and decentralized average consensus (DAC).

DAC repeatedly replaces each agent's state with a weighted combination of its
neighbors' states, ``m_k[n] = sum_j C_kj m_j[n-1]``. With a doubly stochastic
``C`` the states converge to the network average.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .netgraph import AgentNetwork, graph_matrices


class MixingStrategy(str, Enum):
    MAX_DEGREE = "max_degree"
    METROPOLIS = "metropolis"
    LAPLACIAN_HEURISTIC = "laplacian_heuristic"


@dataclass(frozen=True)
class MixingMatrix:
    """Consensus weights ``C`` together with the rule that produced them."""

    weights: np.ndarray = field(repr=False)
    strategy: MixingStrategy | None = None

    def __post_init__(self) -> None:
        w = np.array(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError("mixing matrix must be square")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def n_agents(self) -> int:
        return self.weights.shape[0]

    def essential_spectral_radius(self) -> float:
        """Spectral radius of ``C - 11^T / L``; below one means DAC converges."""
        n = self.n_agents
        return float(np.max(np.abs(np.linalg.eigvals(self.weights - np.full((n, n), 1.0 / n)))))


def identity_mixing(n_agents: int) -> MixingMatrix:
    """No communication: every agent keeps its own state."""
    return MixingMatrix(np.eye(n_agents))


def mix_max_degree(net: AgentNetwork) -> MixingMatrix:
    """Constant weight ``1/(d_max+1)`` on every edge."""
    deg = net.degrees
    w = net.adjacency / (deg.max() + 1.0)
    np.fill_diagonal(w, 1.0 - deg / (deg.max() + 1.0))
    return MixingMatrix(w, MixingStrategy.MAX_DEGREE)


def mix_metropolis(net: AgentNetwork) -> MixingMatrix:
    """Metropolis-Hastings weights ``1/(max(d_i, d_j)+1)`` on edge ``(i, j)``."""
    deg = net.degrees.astype(float)
    w = net.adjacency / (np.maximum(deg[:, None], deg[None, :]) + 1.0)
    np.fill_diagonal(w, 0.0)
    np.fill_diagonal(w, 1.0 - w.sum(axis=1))
    return MixingMatrix(w, MixingStrategy.METROPOLIS)


def mix_laplacian_heuristic(net: AgentNetwork) -> MixingMatrix:
    """``C = I - a L`` with the constant edge weight ``a = 2/(lambda_max + lambda_2)``.

    ``lambda_2`` is the algebraic connectivity (second-smallest Laplacian
    eigenvalue), which is positive on a connected graph.
    """
    lap = graph_matrices(net).laplacian.astype(float)
    eig = np.linalg.eigvalsh(lap)
    a = 2.0 / (eig[-1] + eig[1])
    return MixingMatrix(np.eye(net.n_agents) - a * lap, MixingStrategy.LAPLACIAN_HEURISTIC)


MIXERS = {
    MixingStrategy.MAX_DEGREE: mix_max_degree,
    MixingStrategy.METROPOLIS: mix_metropolis,
    MixingStrategy.LAPLACIAN_HEURISTIC: mix_laplacian_heuristic,
}


def build_mixing(net: AgentNetwork, strategy: str | MixingStrategy) -> MixingMatrix:
    return MIXERS[MixingStrategy(strategy)](net)


@dataclass
class DacResult:
    """Outcome of a DAC run.

    Attributes:
        final_states: Array of shape ``(L, ...)`` with each agent's final state.
        iterations: Number of mixing rounds performed.
        converged: Whether the stopping rule fired before ``max_iters``.
        trace: Largest squared update norm per round.
        rnd: Relative network disagreement per round (only if a true mean was given).
        deviation: Largest distance to the true mean per round (only if given).
    """

    final_states: np.ndarray
    iterations: int
    converged: bool
    trace: list[float] = field(default_factory=list)
    rnd: list[float] = field(default_factory=list)
    deviation: list[float] = field(default_factory=list)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iteration", "max_update_norm", "rnd"])
            for n, upd in enumerate(self.trace, start=1):
                rnd = repr(self.rnd[n - 1]) if self.rnd else ""
                writer.writerow([n, repr(upd), rnd])


def network_disagreement(states: np.ndarray, initial: np.ndarray, true_mean: np.ndarray) -> float:
    """Mean over agents of ``||x_k - mean||^2 / ||x_k(0) - mean||^2``.

    Agents whose initial state already equals the mean are skipped, since their
    ratio is undefined. Returns 0 when every agent is skipped.
    """
    states = np.asarray(states, dtype=float).reshape(len(states), -1)
    initial = np.asarray(initial, dtype=float).reshape(len(initial), -1)
    mean = np.asarray(true_mean, dtype=float).reshape(-1)
    num = np.sum((states - mean) ** 2, axis=1)
    den = np.sum((initial - mean) ** 2, axis=1)
    keep = den > 0
    if not keep.any():
        return 0.0
    return float(np.sum(num[keep] / den[keep]) / len(states))


def dac_run(
    mix: MixingMatrix | np.ndarray,
    initial: np.ndarray,
    max_iters: int = 300,
    delta: float = 1e-6,
    true_mean: np.ndarray | None = None,
) -> DacResult:
    """Run synchronous DAC until every agent's squared update is below ``delta``.

    Args:
        mix: Mixing matrix ``C`` (L x L).
        initial: Agent states, shape ``(L, ...)``; trailing axes are flattened.
        max_iters: Round cap.
        delta: Threshold on the squared norm of each agent's update.
        true_mean: Optional network average for diagnostic traces.
    """
    c = mix.weights if isinstance(mix, MixingMatrix) else np.asarray(mix, dtype=float)
    if delta <= 0:
        raise ValueError("delta must be positive")
    init = np.asarray(initial, dtype=float)
    shape = init.shape
    x0 = init.reshape(shape[0], -1)
    x = x0.copy()
    mean = None if true_mean is None else np.asarray(true_mean, dtype=float).reshape(-1)
    result = DacResult(final_states=x, iterations=0, converged=False)
    for n in range(1, max_iters + 1):
        new = c @ x
        upd = np.sum((new - x) ** 2, axis=1)
        x = new
        result.trace.append(float(upd.max()))
        if mean is not None:
            result.rnd.append(network_disagreement(x, x0, mean))
            result.deviation.append(float(np.max(np.abs(x - mean))))
        result.iterations = n
        if np.all(upd < delta):
            result.converged = True
            break
    result.final_states = x.reshape(shape)
    return result


def dac_average(mix: MixingMatrix | np.ndarray, values: np.ndarray, max_iters: int = 300, delta: float = 1e-12) -> np.ndarray:
    """Convenience wrapper returning only the per-agent averaged states."""
    return dac_run(mix, values, max_iters=max_iters, delta=delta).final_states


def dac_sum(mix: MixingMatrix | np.ndarray, values: np.ndarray, max_iters: int = 300, delta: float = 1e-12) -> np.ndarray:
    """Per-agent estimate of the network sum (average times ``L``)."""
    values = np.asarray(values, dtype=float)
    return values.shape[0] * dac_average(mix, values, max_iters, delta)
