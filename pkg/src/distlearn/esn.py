"""Echo state networks with ridge or L1 readouts trained across agents."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .consensus import MixingMatrix
from .rvfl import AdmmTrace, admm_consensus
from .solvers import ridge, soft_threshold


@dataclass(frozen=True)
class EsnParams:
    """Fixed reservoir shared by all agents.

    ``n_inputs`` counts the constant bias input, which is appended to every
    input vector by :func:`with_bias`.
    """

    w_in: np.ndarray
    w_res: np.ndarray
    w_fb: np.ndarray
    teacher_scale: float = 1.0
    noise_level: float = 0.0
    washout: int = 100

    @property
    def n_inputs(self) -> int:
        return self.w_in.shape[1]

    @property
    def reservoir_size(self) -> int:
        return self.w_res.shape[0]

    @property
    def n_outputs(self) -> int:
        return self.w_fb.shape[1]


def spectral_radius(w: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(w)))) if w.size else 0.0


def esn_init(
    n_inputs: int,
    reservoir_size: int,
    seed: int,
    rho: float = 0.9,
    alpha_i: float = 0.5,
    alpha_f: float = 0.0,
    alpha_t: float = 1.0,
    density: float = 0.25,
    noise_level: float = 1e-3,
    washout: int = 100,
    n_outputs: int = 1,
    max_tries: int = 100,
) -> EsnParams:
    """Draw a reservoir: dense input/feedback weights and a sparse recurrent matrix.

    ``n_inputs`` is the raw input dimension; one extra column is added for the
    constant input. The recurrent matrix keeps a ``density`` fraction of its
    uniform ``[-1, 1]`` entries and is rescaled to spectral radius ``rho``.
    """
    if not 0 < density <= 1:
        raise ValueError("density must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    w_in = rng.uniform(-alpha_i, alpha_i, (reservoir_size, n_inputs + 1))
    for _ in range(max_tries):
        w_res = rng.uniform(-1.0, 1.0, (reservoir_size, reservoir_size))
        w_res *= rng.random((reservoir_size, reservoir_size)) < density
        radius = spectral_radius(w_res)
        if radius > 0:
            break
    else:
        raise RuntimeError("could not draw a non-degenerate reservoir")
    w_res *= rho / radius
    w_fb = rng.uniform(-alpha_f, alpha_f, (reservoir_size, n_outputs)) if alpha_f > 0 else np.zeros((reservoir_size, n_outputs))
    return EsnParams(w_in, w_res, w_fb, alpha_t, noise_level, washout)


def with_bias(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    x = x[:, None] if x.ndim == 1 else x
    return np.hstack([x, np.ones((x.shape[0], 1))])


def reservoir_run(
    params: EsnParams,
    inputs: np.ndarray,
    teacher: np.ndarray | None = None,
    readout: np.ndarray | None = None,
    noise_rng: np.random.Generator | None = None,
    initial_state: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Drive the reservoir with ``inputs`` (already including the bias column).

    With ``teacher`` given the feedback uses the desired outputs (teacher
    forcing). Otherwise, when a ``readout`` is supplied, the network's own
    previous output is fed back (free run). State noise is drawn from
    ``noise_rng`` uniformly in ``[0, noise_level]`` when an rng is passed.

    Returns:
        ``(states, outputs)`` with shapes ``(T, N_r)`` and ``(T, N_o)``; outputs
        are zero unless a readout is given.
    """
    inputs = np.asarray(inputs, dtype=float)
    steps = inputs.shape[0]
    n_out = params.n_outputs
    fb_on = np.any(params.w_fb)
    if teacher is not None:
        teacher = np.asarray(teacher, dtype=float).reshape(steps, n_out)
    elif fb_on and readout is None:
        raise ValueError("feedback reservoirs need a teacher or a readout")
    h = np.zeros(params.reservoir_size) if initial_state is None else np.asarray(initial_state, float).copy()
    y_prev = np.zeros(n_out)
    states = np.empty((steps, params.reservoir_size))
    outputs = np.zeros((steps, n_out))
    drive = inputs @ params.w_in.T
    for n in range(steps):
        a = drive[n] + params.w_res @ h
        if fb_on:
            a = a + params.w_fb @ y_prev
        if noise_rng is not None and params.noise_level > 0:
            a = a + noise_rng.uniform(0.0, params.noise_level, params.reservoir_size)
        h = np.tanh(a)
        states[n] = h
        if readout is not None:
            outputs[n] = params.teacher_scale * (np.concatenate([inputs[n], h]) @ readout)
        y_prev = teacher[n] if teacher is not None else outputs[n]
    return states, outputs


@dataclass
class ReadoutDesign:
    """Stacked ``[x^T h^T]`` rows after washout and targets divided by the output scale."""

    h: np.ndarray
    d: np.ndarray


def build_readout_design(
    params: EsnParams,
    sequences: Sequence[tuple[np.ndarray, np.ndarray]],
    washout: int | None = None,
    noise_rng: np.random.Generator | None = None,
) -> ReadoutDesign:
    """Teacher-forced runs over raw ``(inputs, targets)`` sequences."""
    washout = params.washout if washout is None else washout
    rows, targets = [], []
    for x, d in sequences:
        if len(d) <= washout:
            raise ValueError(f"sequence of length {len(d)} is not longer than the washout {washout}")
        xb = with_bias(x)
        d = np.asarray(d, dtype=float).reshape(len(d), -1)
        states, _ = reservoir_run(params, xb, teacher=d, noise_rng=noise_rng)
        rows.append(np.hstack([xb, states])[washout:])
        targets.append(d[washout:] / params.teacher_scale)
    return ReadoutDesign(np.vstack(rows), np.vstack(targets))


def train_readout(design: ReadoutDesign, lam: float) -> np.ndarray:
    return ridge(design.h, design.d, lam)


def esn_predict(params: EsnParams, readout: np.ndarray, x: np.ndarray, washout: int | None = None) -> np.ndarray:
    """Free-run prediction on one sequence; returns the post-washout outputs."""
    washout = params.washout if washout is None else washout
    _, out = reservoir_run(params, with_bias(x), readout=readout)
    return out[washout:]


def admm_esn(
    mix: MixingMatrix,
    designs: Sequence[ReadoutDesign],
    lam: float,
    gamma: float = 0.01,
    max_iters: int = 400,
    eps_abs: float = 1e-4,
    eps_rel: float = 1e-4,
    **kwargs,
) -> tuple[np.ndarray, AdmmTrace]:
    """Consensus ADMM over per-agent readout designs (ridge penalty)."""
    return admm_consensus(
        [d.h for d in designs], [d.d for d in designs], mix, lam, gamma, max_iters, eps_abs, eps_rel, **kwargs
    )


def admm_l1_esn(
    mix: MixingMatrix,
    designs: Sequence[ReadoutDesign],
    lam_l1: float,
    gamma: float = 0.01,
    max_iters: int = 400,
    eps_abs: float = 1e-4,
    eps_rel: float = 1e-4,
    **kwargs,
) -> tuple[np.ndarray, float, AdmmTrace]:
    """Consensus ADMM for ``sum_k ||H_k w - d_k||^2 / 2 + lam_l1 ||w||_1``.

    The shared variable is the soft-thresholded average of local weights and
    scaled multipliers.

    Returns:
        ``(z, sparsity, trace)`` where sparsity is the fraction of exact zeros
        in agent 0's copy.
    """
    n_agents = len(designs)

    def z_update(beta_avg, t_avg):
        return soft_threshold(beta_avg + t_avg / gamma, lam_l1 / (n_agents * gamma))

    z, trace = admm_consensus(
        [d.h for d in designs], [d.d for d in designs], mix, 0.0, gamma, max_iters, eps_abs, eps_rel,
        z_update=z_update, **kwargs,
    )
    return z, float(np.mean(z[0] == 0.0)), trace
