"""Linear semi-supervised SVM with a smooth unlabeled penalty, solved across agents.

The objective is

    sum_k l_k(w) + sum_k g_k(w) + ||w||^2 / 2

with ``l_k`` the squared hinge on agent ``k``'s labeled data scaled by
``C1 / (2 L)``, and ``g_k = C2 / (2 U) sum exp(-s f(x)^2)`` on its unlabeled
data. The offset ``b`` is fixed beforehand from the positive-label ratio after
centering the inputs on the unlabeled mean.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import optimize

from .consensus import MixingMatrix, dac_average


@dataclass
class S3vmProblem:
    """Per-agent shards plus loss weights.

    Attributes:
        labeled_x: Inputs with known labels, one array per agent.
        labeled_y: Labels in ``{-1, +1}``, one array per agent.
        unlabeled_x: Inputs without labels, one array per agent.
        c1: Weight of the labeled loss.
        c2: Weight of the unlabeled penalty.
        s: Sharpness of the unlabeled penalty.
        offset: Fixed bias ``b`` of the decision function.
    """

    labeled_x: list[np.ndarray]
    labeled_y: list[np.ndarray]
    unlabeled_x: list[np.ndarray]
    c1: float = 1.0
    c2: float = 1.0
    s: float = 5.0
    offset: float = 0.0

    def __post_init__(self) -> None:
        if not (len(self.labeled_x) == len(self.labeled_y) == len(self.unlabeled_x)):
            raise ValueError("shard lists must have one entry per agent")
        if self.c1 < 0 or self.c2 < 0 or self.s <= 0:
            raise ValueError("need C1, C2 >= 0 and s > 0")
        for y in self.labeled_y:
            if np.any(np.abs(np.asarray(y)) != 1):
                raise ValueError("labels must be -1 or +1")

    @property
    def n_agents(self) -> int:
        return len(self.labeled_x)

    @property
    def dim(self) -> int:
        for x in (*self.labeled_x, *self.unlabeled_x):
            if len(x):
                return x.shape[1]
        raise ValueError("problem holds no data")

    @property
    def n_labeled(self) -> int:
        return int(sum(len(x) for x in self.labeled_x))

    @property
    def n_unlabeled(self) -> int:
        return int(sum(len(x) for x in self.unlabeled_x))

    @classmethod
    def split(
        cls,
        x_lab: np.ndarray,
        y_lab: np.ndarray,
        x_unl: np.ndarray,
        n_agents: int,
        **kwargs,
    ) -> "S3vmProblem":
        """Evenly split labeled and unlabeled sets over ``n_agents``."""
        lab = np.array_split(np.arange(len(x_lab)), n_agents)
        unl = np.array_split(np.arange(len(x_unl)), n_agents)
        x_lab = np.asarray(x_lab, dtype=float)
        y_lab = np.asarray(y_lab, dtype=float)
        x_unl = np.asarray(x_unl, dtype=float)
        return cls([x_lab[i] for i in lab], [y_lab[i] for i in lab], [x_unl[i] for i in unl], **kwargs)

    def merged(self) -> "S3vmProblem":
        """Same data held by a single agent."""
        d = self.dim
        return S3vmProblem(
            [np.vstack([x.reshape(-1, d) for x in self.labeled_x])],
            [np.concatenate(self.labeled_y)],
            [np.vstack([x.reshape(-1, d) for x in self.unlabeled_x])],
            self.c1,
            self.c2,
            self.s,
            self.offset,
        )


@dataclass
class LocalTerms:
    """Values and gradients of one agent's cost pieces."""

    labeled: float
    unlabeled: float
    reg: float
    grad_labeled: np.ndarray
    grad_unlabeled: np.ndarray
    grad_reg: np.ndarray

    @property
    def grad_local(self) -> np.ndarray:
        """Gradient of the agent's data terms (no regularizer)."""
        return self.grad_labeled + self.grad_unlabeled


def hinge_active(margin: np.ndarray) -> np.ndarray:
    """Indicator of the squared-hinge region; the kink ``m = 1`` counts as active."""
    return (margin <= 1.0).astype(float)


def labeled_loss(w: np.ndarray, x: np.ndarray, y: np.ndarray, b: float, weight: float) -> tuple[float, np.ndarray]:
    """``weight / 2 * sum max(0, 1 - m)^2`` and its gradient, with ``m = y f(x)``."""
    if len(y) == 0:
        return 0.0, np.zeros_like(w)
    margin = y * (x @ w + b)
    slack = np.maximum(0.0, 1.0 - margin)
    value = 0.5 * weight * float(slack @ slack)
    grad = -weight * (x.T @ (hinge_active(margin) * slack * y))
    return value, grad


def unlabeled_penalty(w: np.ndarray, x: np.ndarray, b: float, weight: float, s: float) -> tuple[float, np.ndarray]:
    """``weight / 2 * sum exp(-s f^2)`` and its gradient."""
    if len(x) == 0:
        return 0.0, np.zeros_like(w)
    f = x @ w + b
    e = np.exp(-s * f**2)
    value = 0.5 * weight * float(e.sum())
    grad = -s * weight * (x.T @ (e * f))
    return value, grad


def losses_and_grads(w: np.ndarray, problem: S3vmProblem, k: int) -> LocalTerms:
    """Agent ``k``'s labeled loss, unlabeled penalty, regularizer and gradients."""
    w = np.asarray(w, dtype=float)
    n_lab = max(problem.n_labeled, 1)
    n_unl = max(problem.n_unlabeled, 1)
    xl = np.asarray(problem.labeled_x[k], dtype=float).reshape(-1, w.size)
    xu = np.asarray(problem.unlabeled_x[k], dtype=float).reshape(-1, w.size)
    lv, lg = labeled_loss(w, xl, np.asarray(problem.labeled_y[k], dtype=float), problem.offset, problem.c1 / n_lab)
    uv, ug = unlabeled_penalty(w, xu, problem.offset, problem.c2 / n_unl, problem.s)
    return LocalTerms(lv, uv, 0.5 * float(w @ w), lg, ug, w.copy())


def global_objective(w: np.ndarray, problem: S3vmProblem) -> float:
    terms = [losses_and_grads(w, problem, k) for k in range(problem.n_agents)]
    return sum(t.labeled + t.unlabeled for t in terms) + 0.5 * float(w @ w)


def global_gradient(w: np.ndarray, problem: S3vmProblem) -> np.ndarray:
    grad = np.asarray(w, dtype=float).copy()
    for k in range(problem.n_agents):
        grad += losses_and_grads(w, problem, k).grad_local
    return grad


def fix_offset_and_center(
    unlabeled: Sequence[np.ndarray],
    ratio: float,
    mix: MixingMatrix | np.ndarray | None = None,
    dac_iters: int = 1000,
    dac_delta: float = 1e-16,
) -> tuple[np.ndarray, float]:
    """Unlabeled mean (direct or via consensus) and the fixed offset ``2 r - 1``.

    With ``mix`` given every agent runs consensus on ``(U_k mean_k, U_k)`` and
    the ratio of the two sums gives the network-wide mean; agent 0's estimate
    is returned. Subtract the returned shift from every input before training
    and prediction.
    """
    if not 0.0 <= ratio <= 1.0:
        raise ValueError("ratio must lie in [0, 1]")
    blocks = [np.asarray(u, dtype=float) for u in unlabeled]
    counts = np.array([len(u) for u in blocks], dtype=float)
    if counts.sum() < 1:
        raise ValueError("need at least one unlabeled point")
    dim = next(u.shape[1] for u in blocks if len(u))
    sums = np.stack([u.sum(axis=0) if len(u) else np.zeros(dim) for u in blocks])
    if mix is None:
        shift = sums.sum(axis=0) / counts.sum()
    else:
        states = dac_average(mix, np.column_stack([sums, counts]), max_iters=dac_iters, delta=dac_delta)
        shift = states[0, :-1] / states[0, -1]
    return shift, 2.0 * ratio - 1.0


def centered(problem: S3vmProblem, shift: np.ndarray, offset: float) -> S3vmProblem:
    """Copy of ``problem`` with all inputs translated by ``-shift`` and the offset set."""
    return S3vmProblem(
        [np.asarray(x, float) - shift for x in problem.labeled_x],
        [np.asarray(y, float) for y in problem.labeled_y],
        [np.asarray(x, float) - shift for x in problem.unlabeled_x],
        problem.c1,
        problem.c2,
        problem.s,
        offset,
    )


def step_size(n: int, alpha0: float, delta: float) -> float:
    """Diminishing schedule ``alpha0 / (n + 1)^delta``."""
    return alpha0 / (n + 1) ** delta


@dataclass
class S3vmTrace:
    """Per-round global objective, gradient norm and agent disagreement."""

    objective: list[float] = field(default_factory=list)
    grad_norm: list[float] = field(default_factory=list)
    disagreement: list[float] = field(default_factory=list)

    def record(self, weights: np.ndarray, problem: S3vmProblem) -> float:
        avg = weights.mean(axis=0)
        g = float(np.linalg.norm(global_gradient(avg, problem)))
        self.objective.append(global_objective(avg, problem))
        self.grad_norm.append(g)
        diffs = weights[:, None, :] - weights[None, :, :]
        self.disagreement.append(float(np.sqrt(np.max(np.sum(diffs**2, axis=2)))))
        return g

    def rounds_to(self, threshold: float) -> int | None:
        """First recorded round with gradient norm at or below ``threshold``."""
        for n, g in enumerate(self.grad_norm):
            if g <= threshold:
                return n
        return None

    def rows(self) -> list[tuple[int, float, float, float]]:
        return [(n, o, g, d) for n, (o, g, d) in enumerate(zip(self.objective, self.grad_norm, self.disagreement))]


@dataclass
class S3vmResult:
    """Final per-agent weights, the offset and the trace (entry 0 is the start)."""

    weights: np.ndarray
    offset: float
    trace: S3vmTrace
    rounds: int

    @property
    def mean_weights(self) -> np.ndarray:
        return self.weights.mean(axis=0)


def grad_s3vm_centralized(
    problem: S3vmProblem,
    alpha0: float = 1.0,
    delta: float = 0.55,
    max_iters: int = 500,
    grad_tol: float = 1e-5,
) -> S3vmResult:
    """Plain gradient descent on the pooled objective."""
    w = np.zeros(problem.dim)
    trace = S3vmTrace()
    g = trace.record(w[None], problem)
    n = 0
    while n < max_iters and g >= grad_tol:
        w = w - step_size(n, alpha0, delta) * global_gradient(w, problem)
        n += 1
        g = trace.record(w[None], problem)
    return S3vmResult(w[None].copy(), problem.offset, trace, n)


def _mixing(mix: MixingMatrix | np.ndarray) -> np.ndarray:
    return mix.weights if isinstance(mix, MixingMatrix) else np.asarray(mix, dtype=float)


def dgd_s3vm(
    mix: MixingMatrix | np.ndarray,
    problem: S3vmProblem,
    alpha0: float = 1.0,
    delta: float = 0.55,
    max_iters: int = 500,
    grad_tol: float | None = None,
) -> S3vmResult:
    """Local gradient step (regularizer split evenly) followed by neighbor averaging.

    ``grad_tol`` is an external observer on the pooled gradient at the agents'
    average; agents never use it.
    """
    c = _mixing(mix)
    n_agents = problem.n_agents
    if c.shape != (n_agents, n_agents):
        raise ValueError("mixing matrix does not match the number of agents")
    w = np.zeros((n_agents, problem.dim))
    trace = S3vmTrace()
    g = trace.record(w, problem)
    n = 0
    while n < max_iters and (grad_tol is None or g >= grad_tol):
        a = step_size(n, alpha0, delta)
        psi = np.empty_like(w)
        for k in range(n_agents):
            t = losses_and_grads(w[k], problem, k)
            psi[k] = w[k] - a * (t.grad_local + t.grad_reg / n_agents)
        w = c @ psi
        n += 1
        g = trace.record(w, problem)
    return S3vmResult(w, problem.offset, trace, n)


def surrogate_gradient(
    w: np.ndarray,
    problem: S3vmProblem,
    k: int,
    grad_unlabeled_anchor: np.ndarray,
    pi: np.ndarray,
) -> np.ndarray:
    """Gradient of the local strongly convex surrogate at ``w``.

    The surrogate keeps the labeled loss and regularizer, linearizes the
    unlabeled penalty at the anchor and adds the linear term ``pi^T w``.
    """
    n_lab = max(problem.n_labeled, 1)
    xl = np.asarray(problem.labeled_x[k], dtype=float).reshape(-1, w.size)
    _, lg = labeled_loss(w, xl, np.asarray(problem.labeled_y[k], float), problem.offset, problem.c1 / n_lab)
    return lg + grad_unlabeled_anchor + w + pi


def solve_surrogate(
    anchor: np.ndarray,
    problem: S3vmProblem,
    k: int,
    pi: np.ndarray,
    inner_iters: int = 50,
    inner_tol: float = 1e-5,
    alpha0: float = 1.0,
    delta: float = 0.55,
) -> np.ndarray:
    """Approximate surrogate minimizer by diminishing-step gradient descent from the anchor."""
    g_anchor = losses_and_grads(anchor, problem, k).grad_unlabeled
    w = anchor.copy()
    for m in range(inner_iters):
        grad = surrogate_gradient(w, problem, k, g_anchor, pi)
        if np.linalg.norm(grad) < inner_tol:
            break
        w = w - step_size(m, alpha0, delta) * grad
    return w


@dataclass
class NextState:
    """Per-agent iterates, gradient-sum trackers and estimates of the others' gradients."""

    w: np.ndarray
    v: np.ndarray
    pi: np.ndarray
    grad_h: np.ndarray

    @classmethod
    def init(cls, problem: S3vmProblem) -> "NextState":
        n_agents = problem.n_agents
        w = np.zeros((n_agents, problem.dim))
        grad_h = np.stack([losses_and_grads(w[k], problem, k).grad_local for k in range(n_agents)])
        v = grad_h.copy()
        return cls(w, v, (n_agents - 1) * v, grad_h)


def next_round(
    state: NextState,
    c: np.ndarray,
    problem: S3vmProblem,
    step: float,
    inner_iters: int = 50,
    inner_tol: float = 1e-5,
    inner_alpha0: float = 1.0,
    inner_delta: float = 0.55,
) -> NextState:
    """One synchronous round: surrogate solve, convex step, mixing, tracker update."""
    n_agents = problem.n_agents
    z = np.empty_like(state.w)
    for k in range(n_agents):
        w_hat = solve_surrogate(state.w[k], problem, k, state.pi[k], inner_iters, inner_tol, inner_alpha0, inner_delta)
        z[k] = state.w[k] + step * (w_hat - state.w[k])
    w_new = c @ z
    grad_new = np.stack([losses_and_grads(w_new[k], problem, k).grad_local for k in range(n_agents)])
    v = c @ state.v + (grad_new - state.grad_h)
    return NextState(w_new, v, n_agents * v - grad_new, grad_new)


def next_s3vm(
    mix: MixingMatrix | np.ndarray,
    problem: S3vmProblem,
    alpha0: float = 0.6,
    delta: float = 0.8,
    max_iters: int = 500,
    inner_iters: int = 50,
    inner_tol: float = 1e-5,
    inner_alpha0: float = 1.0,
    inner_delta: float = 0.55,
    grad_tol: float | None = None,
) -> S3vmResult:
    """Successive convex approximation with gradient tracking.

    Each round every agent approximately minimizes its surrogate, moves a
    fraction ``alpha[n]`` toward the minimizer, averages with its neighbors,
    and updates its tracker of the network-wide data gradient.
    """
    c = _mixing(mix)
    if c.shape != (problem.n_agents, problem.n_agents):
        raise ValueError("mixing matrix does not match the number of agents")
    state = NextState.init(problem)
    trace = S3vmTrace()
    g = trace.record(state.w, problem)
    n = 0
    while n < max_iters and (grad_tol is None or g >= grad_tol):
        state = next_round(
            state, c, problem, step_size(n, alpha0, delta), inner_iters, inner_tol, inner_alpha0, inner_delta
        )
        n += 1
        g = trace.record(state.w, problem)
    return S3vmResult(state.w, problem.offset, trace, n)


def predict_and_error(w: np.ndarray, b: float, x: np.ndarray, y: np.ndarray) -> float:
    """Misclassification rate of ``sign(w^T x + b)``; zero scores count as positive."""
    scores = np.asarray(x, dtype=float) @ np.asarray(w, dtype=float) + b
    pred = np.where(scores >= 0, 1.0, -1.0)
    return float(np.mean(pred != np.asarray(y, dtype=float)))


def supervised_svm(x: np.ndarray, y: np.ndarray, c1: float = 1.0) -> tuple[np.ndarray, float]:
    """Linear squared-hinge SVM with a free bias, fit on labeled data only.

    Minimizes ``c1 / (2 L) sum max(0, 1 - y (w^T x + b))^2 + ||w||^2 / 2``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n, d = x.shape
    weight = c1 / n

    def fun(theta):
        w, b = theta[:d], theta[d]
        margin = y * (x @ w + b)
        slack = np.maximum(0.0, 1.0 - margin)
        value = 0.5 * weight * slack @ slack + 0.5 * w @ w
        coef = -weight * slack * y
        return value, np.concatenate([x.T @ coef + w, [coef.sum()]])

    res = optimize.minimize(fun, np.zeros(d + 1), jac=True, method="L-BFGS-B", options={"maxiter": 1000, "gtol": 1e-10})
    return res.x[:d], float(res.x[d])
