"""Spline adaptive filters (SAF) and their diffusion form over a network.

A SAF is a linear FIR stage ``s = w^T x`` followed by a Catmull-Rom spline
``y = u^T B q_span`` whose control points ``q`` are adapted together with ``w``.
With identity-initialized control points and a zero spline step size the
filter is exactly LMS, so diffusion LMS needs no separate implementation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .consensus import MixingMatrix
from .datagen import WienerGroundTruth, delay_buffers

SPAN = 4  # cubic spline: four active control points

# Control ordinates on 21 knots spanning [-2, 2]. Reconstructed shapes, not measured data.
MILD_CONTROL_POINTS = (
    -1.1721, -1.1568, -1.1333, -1.0976, -1.0441, -0.9653, -0.8530, -0.6993,
    -0.5008, -0.2624, 0.0000, 0.2624, 0.5008, 0.6993, 0.8530, 0.9653,
    1.0441, 1.0976, 1.1333, 1.1568, 1.1721,
)
STRONG_CONTROL_POINTS = (
    -0.9951, -0.9243, -0.8513, -0.8120, -0.8323, -0.9051, -0.9792, -0.9724,
    -0.8090, -0.4655, 0.0000, 0.4655, 0.8090, 0.9724, 0.9792, 0.9051,
    0.8323, 0.8120, 0.8513, 0.9243, 0.9951,
)


@lru_cache(maxsize=None)
def _cr_basis() -> np.ndarray:
    b = 0.5 * np.array(
        [[-1.0, 3.0, -3.0, 1.0], [2.0, -5.0, 4.0, -1.0], [-1.0, 0.0, 1.0, 0.0], [0.0, 2.0, 0.0, 0.0]]
    )
    b.setflags(write=False)
    return b


def cr_basis() -> np.ndarray:
    """Catmull-Rom basis matrix (4 x 4)."""
    return _cr_basis().copy()


@dataclass
class SplineNonlinearity:
    """Uniform-knot cubic spline with ``Q`` (odd) control ordinates centred on zero."""

    control_y: np.ndarray
    spacing: float = 0.2
    basis: np.ndarray = field(default_factory=cr_basis)

    def __post_init__(self) -> None:
        self.control_y = np.asarray(self.control_y, dtype=float).copy()
        if self.n_knots % 2 == 0 or self.n_knots < SPAN:
            raise ValueError("need an odd number of at least four control points")

    @property
    def n_knots(self) -> int:
        return self.control_y.size

    @property
    def knots_x(self) -> np.ndarray:
        half = (self.n_knots - 1) // 2
        return self.spacing * np.arange(-half, half + 1)

    @classmethod
    def identity(cls, n_knots: int = 21, spacing: float = 0.2) -> "SplineNonlinearity":
        half = (n_knots - 1) // 2
        return cls(spacing * np.arange(-half, half + 1), spacing)

    def copy(self) -> "SplineNonlinearity":
        return SplineNonlinearity(self.control_y.copy(), self.spacing, self.basis)

    def __call__(self, s: np.ndarray) -> np.ndarray:
        return spline_eval(self.control_y, self.spacing, np.asarray(s, dtype=float), self.basis)


@dataclass(frozen=True)
class SpanInfo:
    """Where ``s`` falls on the knot grid.

    ``index`` is the one-based index ``floor(s/dx) + (Q-1)/2`` of
    the knot preceding the interval; the active control points are
    ``control_y[start : start + 4]`` with ``start = index - 1``.
    """

    index: int
    u: float
    u_vec: np.ndarray
    du_vec: np.ndarray
    clamped: bool

    @property
    def start(self) -> int:
        return self.index - 1


def _basis_vectors(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Monomial vector and its derivative, extended linearly outside ``[0, 1]``.

    Inside the unit interval this is ``(u^3, u^2, u, 1)`` and ``(3u^2, 2u, 1, 0)``.
    Beyond it the boundary polynomial is continued by its tangent line, which
    keeps the output and gradients bounded and leaves linear splines exact.
    """
    u = np.asarray(u, dtype=float)
    uc = np.clip(u, 0.0, 1.0)
    du = np.stack([3 * uc**2, 2 * uc, np.ones_like(uc), np.zeros_like(uc)], axis=-1)
    uv = np.stack([uc**3, uc**2, uc, np.ones_like(uc)], axis=-1) + (u - uc)[..., None] * du
    return uv, du


def span_lookup(s: float, nl: SplineNonlinearity) -> SpanInfo:
    """Locate ``s`` among the knots.

    Inputs outside the representable range use the boundary span with ``u``
    measured from that span (so ``u`` leaves ``[0, 1)``) and ``clamped`` set.
    """
    ratio = s / nl.spacing
    fl = math.floor(ratio)
    idx = fl + (nl.n_knots - 1) // 2
    lo, hi = 1, nl.n_knots - 3
    clamped = not lo <= idx <= hi
    if clamped:
        idx = min(max(idx, lo), hi)
        fl = idx - (nl.n_knots - 1) // 2
    u = ratio - fl
    uv, du = _basis_vectors(np.array(u))
    return SpanInfo(idx, u, uv, du, clamped)


def spline_eval(control_y: np.ndarray, spacing: float, s: np.ndarray, basis: np.ndarray | None = None) -> np.ndarray:
    """Vectorized spline evaluation with the same boundary rule as :func:`span_lookup`."""
    basis = _cr_basis() if basis is None else basis
    q = np.asarray(control_y, dtype=float)
    n_knots = q.size
    half = (n_knots - 1) // 2
    ratio = np.asarray(s, dtype=float) / spacing
    start = np.clip(np.floor(ratio).astype(int) + half, 1, n_knots - 3) - 1
    u = ratio - (start + 1 - half)
    uvec, _ = _basis_vectors(u)
    spans = q[start[..., None] + np.arange(SPAN)]
    return np.einsum("...i,ij,...j->...", uvec, basis, spans)


@dataclass
class SafState:
    """Linear taps, spline and step sizes of one filter."""

    w: np.ndarray
    nonlinearity: SplineNonlinearity
    mu_w: float
    mu_q: float

    @classmethod
    def init(cls, taps: int, mu_w: float, mu_q: float, n_knots: int = 21, spacing: float = 0.2) -> "SafState":
        """Unit-impulse taps and identity spline."""
        if mu_w < 0 or mu_q < 0:
            raise ValueError("step sizes must be non-negative")
        w = np.zeros(taps)
        w[0] = 1.0
        return cls(w, SplineNonlinearity.identity(n_knots, spacing), mu_w, mu_q)

    def copy(self) -> "SafState":
        return SafState(self.w.copy(), self.nonlinearity.copy(), self.mu_w, self.mu_q)


def saf_output(state: SafState, x: np.ndarray) -> tuple[float, float, SpanInfo]:
    """Return ``(y, s, span)`` for one input buffer."""
    s = float(state.w @ x)
    info = span_lookup(s, state.nonlinearity)
    q = state.nonlinearity.control_y[info.start : info.start + SPAN]
    return float(info.u_vec @ state.nonlinearity.basis @ q), s, info


def spline_slope(nl: SplineNonlinearity, info: SpanInfo, q_span: np.ndarray | None = None) -> float:
    """Derivative of the spline output with respect to ``s``."""
    q = nl.control_y[info.start : info.start + SPAN] if q_span is None else q_span
    return float(info.du_vec @ nl.basis @ q) / nl.spacing


def saf_adapt(state: SafState, x: np.ndarray, d: float) -> tuple[SafState, float]:
    """One stochastic-gradient step on ``(d - y)^2``; only the active span moves."""
    y, _, info = saf_output(state, x)
    e = d - y
    nl = state.nonlinearity
    slope = spline_slope(nl, info)
    new = state.copy()
    new.w = state.w + state.mu_w * e * slope * x
    new.nonlinearity.control_y[info.start : info.start + SPAN] += state.mu_q * e * (nl.basis.T @ info.u_vec)
    return new, e


def saf_gradients(state: SafState, x: np.ndarray, d: float) -> tuple[np.ndarray, np.ndarray, int]:
    """Analytic gradients of ``(d - y)^2`` with respect to ``w`` and the active span.

    Returns ``(grad_w, grad_span, start)``.
    """
    y, _, info = saf_output(state, x)
    e = d - y
    nl = state.nonlinearity
    return -2.0 * e * spline_slope(nl, info) * x, -2.0 * e * (nl.basis.T @ info.u_vec), info.start


@dataclass
class DsafResult:
    """Final per-agent parameters and per-sample squared errors ``(L, T)``."""

    w: np.ndarray
    q: np.ndarray
    sq_error: np.ndarray
    msd_linear: np.ndarray | None = None
    msd_nonlinear: np.ndarray | None = None


def dsaf_round(
    w: np.ndarray,
    q: np.ndarray,
    c: np.ndarray,
    x: np.ndarray,
    d: np.ndarray,
    mu_w: np.ndarray,
    mu_q: np.ndarray,
    spacing: float,
    basis: np.ndarray | None = None,
    order: str = "cta",
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """One synchronous diffusion step for all agents.

    Args:
        w: Taps, shape ``(L, M)``.
        q: Control ordinates, shape ``(L, Q)``.
        c: Mixing weights ``(L, L)``.
        x: Current input buffers ``(L, M)``.
        d: Desired outputs ``(L,)``.
        order: ``"cta"`` (combine then adapt, span-wise control-point mixing)
            or ``"atc"`` (adapt then combine full vectors).

    Returns:
        ``(w_new, q_new, errors)``.
    """
    basis = _cr_basis() if basis is None else basis
    n_agents, n_knots = q.shape
    half = (n_knots - 1) // 2
    psi = c @ w if order == "cta" else w
    s = np.einsum("km,km->k", psi, x)
    ratio = s / spacing
    start = np.clip(np.floor(ratio).astype(int) + half, 1, n_knots - 3) - 1
    u = ratio - (start + 1 - half)
    cols = start[:, None] + np.arange(SPAN)
    if order == "cta":
        # agent k mixes its neighbours' ordinates on its own active span
        xi = np.einsum("kl,lkj->kj", c, q[:, cols])
    else:
        xi = q[np.arange(n_agents)[:, None], cols]
    uvec, duvec = _basis_vectors(u)
    ub = uvec @ basis
    y = np.einsum("kj,kj->k", ub, xi)
    e = d - y
    slope = np.einsum("kj,kj->k", duvec @ basis, xi) / spacing
    w_new = psi + (mu_w * e * slope)[:, None] * x
    q_new = q.copy()
    q_new[np.arange(n_agents)[:, None], cols] = xi + (mu_q * e)[:, None] * ub
    if order == "atc":
        w_new = c @ w_new
        q_new = c @ q_new
    return w_new, q_new, e


def run_dsaf(
    inputs: Sequence[np.ndarray],
    desired: Sequence[np.ndarray],
    mix: MixingMatrix | np.ndarray,
    taps: int,
    mu_w: np.ndarray | float,
    mu_q: np.ndarray | float,
    n_knots: int = 21,
    spacing: float = 0.2,
    order: str = "cta",
    truth: WienerGroundTruth | None = None,
    record_every: int = 0,
) -> DsafResult:
    """Run diffusion SAF over per-agent scalar input streams.

    Taps start at the unit impulse and the spline at the identity. Passing
    ``mix=np.eye(L)`` gives non-cooperative filters; ``mu_q=0`` gives (D-)LMS.
    """
    c = mix.weights if isinstance(mix, MixingMatrix) else np.asarray(mix, dtype=float)
    n_agents = len(inputs)
    buffers = np.stack([delay_buffers(np.asarray(x, float), taps) for x in inputs])
    dd = np.stack([np.asarray(v, float) for v in desired])
    steps = dd.shape[1]
    mu_w = np.broadcast_to(np.asarray(mu_w, float), (n_agents,))
    mu_q = np.broadcast_to(np.asarray(mu_q, float), (n_agents,))
    w = np.zeros((n_agents, taps))
    w[:, 0] = 1.0
    q = np.tile(SplineNonlinearity.identity(n_knots, spacing).control_y, (n_agents, 1))
    sq = np.empty((n_agents, steps))
    msd_l, msd_nl = [], []
    q0 = None
    if truth is not None:
        q0 = sample_reference(truth.f0, n_knots, spacing)
    for n in range(steps):
        w, q, e = dsaf_round(w, q, c, buffers[:, n], dd[:, n], mu_w, mu_q, spacing, order=order)
        sq[:, n] = e**2
        if truth is not None and record_every and (n + 1) % record_every == 0:
            msd_l.append([msd_db(truth.w0, wk) for wk in w])
            msd_nl.append([msd_db(q0, qk) for qk in q])
    res = DsafResult(w, q, sq)
    if msd_l:
        res.msd_linear = np.array(msd_l)
        res.msd_nonlinear = np.array(msd_nl)
    return res


DB_FLOOR = -300.0


def to_db(value: np.ndarray | float) -> np.ndarray | float:
    """``10 log10(value)`` floored at -300 dB."""
    v = np.asarray(value, dtype=float)
    out = np.where(v > 0, 10.0 * np.log10(np.where(v > 0, v, 1.0)), DB_FLOOR)
    out = np.where(np.isnan(v), np.nan, np.maximum(out, DB_FLOOR))
    return float(out) if out.ndim == 0 else out


def mse_db(errors: np.ndarray) -> np.ndarray:
    return to_db(np.asarray(errors, dtype=float) ** 2)


def msd_db(reference: np.ndarray, estimate: np.ndarray) -> float:
    """Deviation in dB: ``10 log10 ||reference - estimate||``."""
    return to_db(float(np.linalg.norm(np.asarray(reference) - np.asarray(estimate))))


def sample_reference(f0: Callable[[np.ndarray], np.ndarray], n_knots: int = 21, spacing: float = 0.2) -> np.ndarray:
    """Reference control ordinates: ``f0`` evaluated at the knot abscissas."""
    return np.asarray(f0(SplineNonlinearity.identity(n_knots, spacing).control_y), dtype=float)


def saf_metrics(state: SafState, truth: WienerGroundTruth) -> tuple[float, float]:
    """Linear and nonlinear MSD (dB) of one filter against the ground truth."""
    q0 = sample_reference(truth.f0, state.nonlinearity.n_knots, state.nonlinearity.spacing)
    return msd_db(truth.w0, state.w), msd_db(q0, state.nonlinearity.control_y)


def reference_nonlinearity(kind: str = "mild") -> Callable[[np.ndarray], np.ndarray]:
    """Reference distortion used by the Wiener benchmark, as a spline over 21 knots."""
    table = {"mild": MILD_CONTROL_POINTS, "strong": STRONG_CONTROL_POINTS}[kind]
    return SplineNonlinearity(np.array(table), 0.2)
