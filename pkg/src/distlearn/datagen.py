"""Synthetic benchmarks, partitioning, normalization and CSV I/O."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, stats

from .netgraph import AgentNetwork


@dataclass
class SequenceDataset:
    """List of ``(inputs T x N_i, targets T)`` pairs plus generator metadata."""

    sequences: list[tuple[np.ndarray, np.ndarray]]
    metadata: dict = field(default_factory=dict)


@dataclass
class TabularDataset:
    x: np.ndarray
    y: np.ndarray
    metadata: dict = field(default_factory=dict)


def squash(d: np.ndarray) -> np.ndarray:
    """Map a target stream into ``(-1, 1)`` with ``tanh(d - mean(d))``."""
    return np.tanh(d - d.mean())


def narma10_response(x: np.ndarray, limit: float = 1e3) -> np.ndarray | None:
    """Raw NARMA-10 output for input ``x`` (zero start); ``None`` if it blows past ``limit``."""
    d = np.zeros(len(x))
    for n in range(10, len(x)):
        prev = d[n - 10 : n]
        d[n] = 0.1 + 0.3 * d[n - 1] + 0.05 * d[n - 1] * np.prod(prev) + 1.5 * x[n] * x[n - 9]
        if not np.isfinite(d[n]) or abs(d[n]) > limit:
            return None
    return d


def gen_narma10(length: int, seed: int, warmup: int = 50, max_tries: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Tenth-order NARMA system driven by white noise in ``[0, 0.5]``.

    Returns ``(x, d)`` with ``x`` of shape ``(length, 1)`` and the squashed target.
    Diverging draws are discarded and the input is redrawn.
    """
    if length <= 10:
        raise ValueError("length must exceed 10")
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        x = rng.uniform(0.0, 0.5, length + warmup)
        d = narma10_response(x)
        if d is not None:
            return x[warmup:, None], squash(d[warmup:])
    raise RuntimeError("NARMA-10 recurrence diverged repeatedly")


def extpoly_coefficients(p: int, rng: np.random.Generator) -> np.ndarray:
    """Upper-triangular ``a_ij`` (``i + j <= p``) drawn uniformly in ``[-1, 1]``."""
    a = np.zeros((p + 1, p + 1))
    for i in range(p + 1):
        a[i, : p - i + 1] = rng.uniform(-1.0, 1.0, p - i + 1)
    return a


def extpoly_response(x: np.ndarray, a: np.ndarray, lag: int) -> np.ndarray:
    """Raw (unsquashed) polynomial ``sum a_ij x[n]^i x[n-lag]^j``; ``x[n<0] = 0``."""
    delayed = np.concatenate([np.zeros(lag), x[: len(x) - lag]]) if lag else x
    p = a.shape[0] - 1
    out = np.zeros_like(x)
    for i in range(p + 1):
        for j in range(p - i + 1):
            out += a[i, j] * x**i * delayed**j
    return out


def gen_extpoly(length: int, seed: int, p: int = 7, lag: int = 7) -> tuple[np.ndarray, np.ndarray]:
    if p < 0 or lag < 0:
        raise ValueError("p and lag must be non-negative")
    rng = np.random.default_rng(seed)
    a = extpoly_coefficients(p, rng)
    x = rng.uniform(-1.0, 1.0, length)
    return x[:, None], squash(extpoly_response(x, a, lag))


def mackey_glass_series(
    n_samples: int,
    tau: float = 30.0,
    dt: float = 0.1,
    subsample: int = 10,
    history: Callable[[float], float] | float = 0.9,
    discard: int = 0,
) -> np.ndarray:
    """Mackey-Glass series ``x' = -0.1 x + 0.2 x_tau / (1 + x_tau^10)`` by RK4.

    Delayed values between grid points come from cubic interpolation over the
    stored fine-grid history; before ``t = 0`` the history function is used.
    """
    hist = history if callable(history) else (lambda t, v=float(history): v)
    steps = (n_samples + discard) * subsample
    lag = int(round(tau / dt))
    pre = np.array([hist(-(lag - i) * dt) for i in range(lag + 1)])
    xs = np.empty(lag + 1 + steps)
    xs[: lag + 1] = pre

    def midpoint(j: int) -> float:
        # cubic interpolation halfway between fine-grid samples j and j+1
        lo = xs[max(j - 1, 0)]
        return (-lo + 9.0 * xs[j] + 9.0 * xs[j + 1] - xs[j + 2]) / 16.0

    def f(x, xd):
        return -0.1 * x + 0.2 * xd / (1.0 + xd**10)

    for n in range(steps):
        i = lag + n
        x = xs[i]
        d0, dh, d1 = xs[i - lag], midpoint(i - lag), xs[i - lag + 1]
        k1 = f(x, d0)
        k2 = f(x + 0.5 * dt * k1, dh)
        k3 = f(x + 0.5 * dt * k2, dh)
        k4 = f(x + dt * k3, d1)
        xs[i + 1] = x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    fine = xs[lag:]
    return fine[::subsample][discard : discard + n_samples]


def gen_mackey_glass(length: int, seed: int, tau: float = 30.0, horizon: int = 10, discard: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Mackey-Glass ``horizon``-step-ahead prediction; the seed perturbs the initial history."""
    rng = np.random.default_rng(seed)
    h0 = 0.9 + 0.2 * rng.uniform(-1.0, 1.0)
    series = mackey_glass_series(length + horizon, tau=tau, history=h0, discard=discard)
    return series[:length, None], series[horizon : horizon + length]


def lorenz_rhs(_t, s, sigma=10.0, eta=28.0, zeta=8.0 / 3.0):
    x1, x2, x3 = s
    return [sigma * (x2 - x1), x1 * (eta - x3) - x2, x1 * x2 - zeta * x3]


def gen_lorenz(
    length: int, seed: int, initial: Sequence[float] | None = None, step: float = 1.0, tol: float = 1e-6
) -> tuple[np.ndarray, np.ndarray]:
    """Lorenz attractor sampled every ``step`` seconds; target is the next ``x1``."""
    rng = np.random.default_rng(seed)
    s0 = np.asarray(initial, float) if initial is not None else rng.uniform(-10.0, 10.0, 3) + np.array([0, 0, 25.0])
    times = np.arange(length + 1) * step
    sol = integrate.solve_ivp(lorenz_rhs, (0.0, times[-1]), s0, t_eval=times, method="RK45", rtol=tol, atol=tol)
    traj = sol.y.T
    return traj[:-1], traj[1:, 0]


SEQUENCE_GENERATORS = {
    "narma10": gen_narma10,
    "extpoly": gen_extpoly,
    "mackey_glass": gen_mackey_glass,
    "lorenz": gen_lorenz,
}


def gen_sequences(name: str, n_sequences: int, length: int, seed: int, **kwargs) -> SequenceDataset:
    """Several independent sequences from one generator, seeded from ``seed``."""
    gen = SEQUENCE_GENERATORS[name]
    seeds = np.random.SeedSequence(seed).generate_state(n_sequences)
    if name == "extpoly":
        # one shared polynomial, different input streams
        rng = np.random.default_rng(seed)
        p, lag = kwargs.get("p", 7), kwargs.get("lag", 7)
        a = extpoly_coefficients(p, rng)
        raw = []
        for s in seeds:
            x = np.random.default_rng(int(s)).uniform(-1.0, 1.0, length)
            raw.append((x, extpoly_response(x, a, lag)))
        mean = np.concatenate([d for _, d in raw]).mean()
        seqs = [(x[:, None], np.tanh(d - mean)) for x, d in raw]
    else:
        seqs = [gen(length, int(s), **kwargs) for s in seeds]
    return SequenceDataset(seqs, {"generator": name, "seed": seed, "length": length, **kwargs})


def two_gaussian_mean(bayes_error: float) -> float:
    """Half-distance between class means giving the requested Bayes error (unit variance)."""
    return float(stats.norm.ppf(1.0 - bayes_error))


def gen_two_gaussian(
    n: int,
    d: int,
    seed: int,
    bayes_error: float = 0.05,
    separation: float | None = None,
    spread: bool = False,
) -> TabularDataset:
    """Two isotropic unit-variance Gaussians with means ``+-mu`` along one direction.

    Labels are ``0`` and ``1`` drawn with equal probability. ``mu`` follows from
    the Bayes error unless ``separation`` (the distance between means) is given.
    The direction is the first axis, or the normalized all-ones vector when
    ``spread`` is set, so every feature block carries part of the signal.
    """
    if d < 2:
        raise ValueError("d must be >= 2")
    mu = separation / 2.0 if separation is not None else two_gaussian_mean(bayes_error)
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 2, n)
    x = rng.normal(size=(n, d))
    direction = np.full(d, 1.0 / math.sqrt(d)) if spread else np.eye(d)[0]
    x += np.where(y == 1, mu, -mu)[:, None] * direction
    meta = {"generator": "two_gaussian", "seed": seed, "mu": mu, "bayes_error": bayes_error, "spread": spread}
    return TabularDataset(x, y, meta)


def gen_two_moons(n: int, seed: int, noise: float = 0.1) -> TabularDataset:
    """Two interleaved half circles with Gaussian jitter; labels 0/1."""
    rng = np.random.default_rng(seed)
    y = np.arange(n) % 2
    rng.shuffle(y)
    theta = rng.uniform(0.0, math.pi, n)
    x = np.where(
        (y == 0)[:, None],
        np.column_stack([np.cos(theta), np.sin(theta)]),
        np.column_stack([1.0 - np.cos(theta), 0.5 - np.sin(theta)]),
    )
    x = x + noise * rng.normal(size=x.shape)
    return TabularDataset(x, y, {"generator": "two_moons", "seed": seed, "noise": noise})


@dataclass
class WienerGroundTruth:
    """Shared Wiener system plus per-agent input correlation and noise variance."""

    w0: np.ndarray
    f0: Callable[[np.ndarray], np.ndarray]
    correlation: np.ndarray
    noise_var: np.ndarray


def gen_saf_streams(
    n_agents: int,
    length: int,
    taps: int,
    seed: int,
    f0: Callable[[np.ndarray], np.ndarray] | None = None,
    a_range: tuple[float, float] = (0.0, 0.8),
    noise_db: tuple[float, float] = (-25.0, -10.0),
) -> tuple[list[np.ndarray], list[np.ndarray], WienerGroundTruth]:
    """Per-agent AR(1) inputs passed through ``f0(w0^T x)`` plus Gaussian noise.

    Returns ``(inputs, desired, truth)`` where ``inputs[k]`` is the raw scalar
    stream of agent ``k``; tapped-delay buffers are formed by the filter.
    Noise levels are dB of variance.
    """
    if f0 is None:
        from .saf import reference_nonlinearity

        f0 = reference_nonlinearity("mild")
    rng = np.random.default_rng(seed)
    w0 = rng.normal(size=taps)
    w0 /= np.linalg.norm(w0)
    a = rng.uniform(*a_range, n_agents)
    var = 10.0 ** (rng.uniform(*noise_db, n_agents) / 10.0)
    xs, ds = [], []
    for k in range(n_agents):
        xi = rng.normal(size=length)
        x = np.empty(length)
        prev = rng.normal()
        for n in range(length):
            prev = a[k] * prev + math.sqrt(1.0 - a[k] ** 2) * xi[n]
            x[n] = prev
        buf = delay_buffers(x, taps)
        d = f0(buf @ w0) + math.sqrt(var[k]) * rng.normal(size=length)
        xs.append(x)
        ds.append(d)
    return xs, ds, WienerGroundTruth(w0, f0, a, var)


def delay_buffers(x: np.ndarray, taps: int) -> np.ndarray:
    """Rows ``[x[n], x[n-1], ..., x[n-taps+1]]`` with zeros before the start."""
    padded = np.concatenate([np.zeros(taps - 1), x])
    return np.lib.stride_tricks.sliding_window_view(padded, taps)[:, ::-1].copy()


def normalize_range(x: np.ndarray, ref: np.ndarray | None = None) -> np.ndarray:
    """Affine map of each feature to ``[-1, 1]`` using min/max of ``ref``; constant features map to 0."""
    ref = x if ref is None else ref
    lo, hi = ref.min(axis=0), ref.max(axis=0)
    span = hi - lo
    out = np.zeros_like(x, dtype=float)
    ok = span > 0
    out[:, ok] = 2.0 * (x[:, ok] - lo[ok]) / span[ok] - 1.0
    return out


def split_counts(n: int, parts: int) -> list[int]:
    """Even split with the remainder spread over the first parts."""
    base, extra = divmod(n, parts)
    return [base + (1 if k < extra else 0) for k in range(parts)]


def partition(
    n_items: int,
    n_agents: int | AgentNetwork,
    mode: str = "horizontal",
    seed: int | None = None,
) -> list[np.ndarray]:
    """Disjoint index sets covering ``range(n_items)``.

    In horizontal mode the items are samples and are shuffled when a seed is
    given. In vertical mode the items are features and are kept in order.
    """
    count = n_agents.n_agents if isinstance(n_agents, AgentNetwork) else int(n_agents)
    if n_items < count:
        raise ValueError("fewer items than agents")
    order = np.arange(n_items)
    if mode == "horizontal" and seed is not None:
        order = np.random.default_rng(seed).permutation(n_items)
    elif mode not in ("horizontal", "vertical"):
        raise ValueError(f"unknown partition mode {mode!r}")
    bounds = np.cumsum([0] + split_counts(n_items, count))
    return [np.sort(order[bounds[k] : bounds[k + 1]]) for k in range(count)]


def vertical_hidden_budget(total: int, n_agents: int) -> int:
    return math.ceil(total / n_agents)


class CsvFormatError(ValueError):
    pass


def save_csv(path: str | Path, header: Sequence[str], rows: np.ndarray, metadata: dict | None = None) -> None:
    """Write a numeric table with a header; ``metadata`` goes to ``<path>.meta`` as key=value lines."""
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    if rows.size and rows.shape[1] != len(header):
        raise CsvFormatError("row width does not match header")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) for v in row])
    if metadata is not None:
        Path(str(path) + ".meta").write_text("".join(f"{k}={v}\n" for k, v in metadata.items()))


def load_csv(path: str | Path) -> tuple[list[str], np.ndarray]:
    """Read a numeric table written by :func:`save_csv`."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvFormatError(f"{path}: empty file") from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise CsvFormatError(f"{path}: line {lineno} has {len(row)} fields, expected {len(header)}")
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                raise CsvFormatError(f"{path}: line {lineno} is not numeric") from None
    return header, np.array(rows, dtype=float).reshape(len(rows), len(header))


def load_metadata(path: str | Path) -> dict:
    meta = Path(str(path) + ".meta")
    if not meta.exists():
        return {}
    return dict(line.split("=", 1) for line in meta.read_text().splitlines() if "=" in line)


def save_sequences(path: str | Path, data: SequenceDataset) -> None:
    n_in = data.sequences[0][0].shape[1]
    header = ["seq_id"] + [f"x{i}" for i in range(n_in)] + ["target"]
    rows = [np.column_stack([np.full(len(d), s), x, d]) for s, (x, d) in enumerate(data.sequences)]
    save_csv(path, header, np.vstack(rows), data.metadata)


def load_sequences(path: str | Path) -> SequenceDataset:
    header, table = load_csv(path)
    if header[0] != "seq_id" or header[-1] != "target":
        raise CsvFormatError(f"{path}: expected seq_id ... target columns")
    seqs = []
    for sid in np.unique(table[:, 0]):
        rows = table[table[:, 0] == sid]
        seqs.append((rows[:, 1:-1], rows[:, -1]))
    return SequenceDataset(seqs, load_metadata(path))
