"""Trace-class Q-Wiener paths in the eigenbasis of the operator.

Each mode ``k`` of ensemble member ``stream`` draws from its own Philox
stream keyed by ``(seed, stream, k)``.  A grid with ``N = m 2^L`` steps
(``m`` odd) is built by sampling ``W`` on ``m`` coarse steps and filling
midpoints level by level with Brownian-bridge draws.  The draws are consumed
in level order, so a path on ``N`` steps and a path on ``2N`` steps with the
same seed agree bit for bit at the shared times.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import TimeGrid, matrix_csv


@dataclass(frozen=True, eq=False)
class QCovariance:
    """Diagonal covariance ``Q e_k = q_k e_k``."""

    eigenvalues: np.ndarray

    def __post_init__(self):
        q = np.atleast_1d(np.asarray(self.eigenvalues, dtype=float)).copy()
        if q.ndim != 1 or not np.all(np.isfinite(q)):
            raise ValueError("covariance eigenvalues must be a finite 1-d array")
        if np.any(q < 0):
            raise ValueError("covariance eigenvalues must be nonnegative")
        q.setflags(write=False)
        object.__setattr__(self, "eigenvalues", q)

    @property
    def trace(self) -> float:
        return float(self.eigenvalues.sum())

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)

    @classmethod
    def power_law(cls, K: int, exponent: float = 4.0, scale: float = 1.0) -> "QCovariance":
        """``q_k = scale * k^(-exponent)``."""
        return cls(scale * np.arange(1, K + 1, dtype=float) ** (-exponent))


def make_covariance(spec, K: int) -> QCovariance:
    if isinstance(spec, QCovariance):
        q = spec
    else:
        spec = dict(spec)
        kind = str(spec.get("kind", "power")).lower()
        if kind == "power":
            q = QCovariance.power_law(K, float(spec.get("exponent", 4.0)), float(spec.get("scale", 1.0)))
        elif kind == "values":
            q = QCovariance(np.asarray(spec["values"], dtype=float))
        else:
            raise ValueError(f"unknown covariance kind {kind!r}")
    if q.dim != K:
        raise ValueError(f"covariance has {q.dim} modes, operator has {K}")
    return q


@dataclass(frozen=True, eq=False)
class HilbertPath:
    """Mode coefficients on a grid: shape ``(K, N+1)`` or a batch ``(S, K, N+1)``."""

    grid: TimeGrid
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.ndim not in (2, 3) or c.shape[-1] != len(self.grid):
            raise ValueError(f"coefficients of shape {c.shape} do not fit a grid with {len(self.grid)} points")
        if not np.all(np.isfinite(c)):
            raise ValueError("path coefficients must be finite")
        object.__setattr__(self, "coeffs", c)

    @property
    def dim(self) -> int:
        return self.coeffs.shape[-2]

    @property
    def batched(self) -> bool:
        return self.coeffs.ndim == 3

    def norms(self) -> np.ndarray:
        """``|X(t_i)|_H`` for every time (and batch member)."""
        return np.sqrt(np.sum(self.coeffs**2, axis=-2))

    def member(self, s: int) -> "HilbertPath":
        return HilbertPath(self.grid, self.coeffs[s]) if self.batched else self

    def __add__(self, other: "HilbertPath") -> "HilbertPath":
        if other.grid != self.grid:
            raise ValueError("paths live on different grids")
        return HilbertPath(self.grid, self.coeffs + other.coeffs)

    def __mul__(self, factor: float) -> "HilbertPath":
        return HilbertPath(self.grid, self.coeffs * factor)

    __rmul__ = __mul__

    def to_csv(self) -> str:
        if self.batched:
            raise ValueError("export one ensemble member at a time")
        return matrix_csv(self.grid.points, self.coeffs)

    @classmethod
    def zeros(cls, grid: TimeGrid, K: int) -> "HilbertPath":
        return cls(grid, np.zeros((K, len(grid))))


@dataclass(frozen=True, eq=False)
class NoisePath(HilbertPath):
    """Sampled ``W(t_i)``; ``increments`` are the exact differences of ``coeffs``."""

    q: QCovariance | None = None
    seed: int | None = None

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.coeffs, axis=-1)

    @classmethod
    def from_increments(cls, grid: TimeGrid, increments, q=None, seed=None) -> "NoisePath":
        inc = np.asarray(increments, dtype=float)
        zero = np.zeros(inc.shape[:-1] + (1,))
        return cls(grid, np.concatenate([zero, np.cumsum(inc, axis=-1)], axis=-1), q=q, seed=seed)


def dyadic_split(steps: int) -> tuple[int, int]:
    """``steps = odd * 2**levels``."""
    levels = 0
    while steps % 2 == 0:
        steps //= 2
        levels += 1
    return steps, levels


def _normals(seed: int, streams, K: int, count: int) -> np.ndarray:
    out = np.empty((len(streams), K, count))
    for s, stream in enumerate(streams):
        for k in range(K):
            seq = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream), k))
            out[s, k] = np.random.Generator(np.random.Philox(seq)).standard_normal(count)
    return out


def _build(q: QCovariance, grid: TimeGrid, z: np.ndarray) -> np.ndarray:
    """Values ``(S, K, N+1)`` from normals ``(S, K, N)`` by coarse sampling plus bridge levels."""
    odd, levels = dyadic_split(grid.steps)
    sd = np.sqrt(q.eigenvalues)[None, :, None]
    tau = grid.horizon / odd
    batch = z.shape[:2]
    w = np.zeros(batch + (odd + 1,))
    w[..., 1:] = np.cumsum(z[..., :odd] * sd * np.sqrt(tau), axis=-1)
    used = odd
    for _ in range(levels):
        n_mid = w.shape[-1] - 1
        mid = 0.5 * (w[..., :-1] + w[..., 1:]) + z[..., used : used + n_mid] * sd * np.sqrt(0.25 * tau)
        used += n_mid
        nxt = np.empty(batch + (2 * n_mid + 1,))
        nxt[..., 0::2] = w
        nxt[..., 1::2] = mid
        w = nxt
        tau *= 0.5
    return w


def sample_path(q: QCovariance, grid: TimeGrid, seed: int, stream: int = 0) -> NoisePath:
    """One path of ``W`` with ``E|W(t)|^2 = t Tr Q``."""
    z = _normals(seed, [stream], q.dim, grid.steps)
    return NoisePath(grid, _build(q, grid, z)[0], q=q, seed=seed)


def sample_ensemble(q: QCovariance, grid: TimeGrid, seed: int, size: int, first_stream: int = 0) -> NoisePath:
    """Batch of ``size`` independent paths (streams ``first_stream ..``)."""
    streams = range(first_stream, first_stream + size)
    z = _normals(seed, streams, q.dim, grid.steps)
    return NoisePath(grid, _build(q, grid, z), q=q, seed=seed)


@dataclass
class CovarianceReport:
    trace: float
    ensemble_size: int
    times: np.ndarray
    estimates: np.ndarray
    expected: np.ndarray
    std_errors: np.ndarray
    cross_z: np.ndarray
    variance_dev: np.ndarray
    variance_band: np.ndarray

    @property
    def z_scores(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            z = (self.estimates - self.expected) / self.std_errors
        return np.where(self.std_errors > 0, z, 0.0)

    @property
    def passed(self) -> bool:
        return bool(
            np.all(np.abs(self.z_scores) <= 3.0)
            and np.all(np.abs(self.cross_z) <= 3.0)
            and np.all(self.variance_dev <= self.variance_band)
        )

    def to_text(self) -> str:
        lines = [f"Q-Wiener covariance check, Tr Q = {self.trace:.6g}, ensemble = {self.ensemble_size}", "t,estimate,expected,std_error,z"]
        for row in zip(self.times, self.estimates, self.expected, self.std_errors, self.z_scores):
            lines.append(",".join(f"{v:.6e}" for v in row))
        lines.append(f"max |cross-covariance z| = {np.max(np.abs(self.cross_z)) if self.cross_z.size else 0.0:.3f}")
        return "\n".join(lines)


def covariance_check(q: QCovariance, grid: TimeGrid, ensemble_size: int, seed: int, paths: NoisePath | None = None) -> CovarianceReport:
    """Monte-Carlo check of ``E|W(t)|^2 = t Tr Q`` and of mode independence at ``T``."""
    if ensemble_size < 100:
        raise ValueError("ensemble_size must be at least 100")
    if paths is None:
        paths = sample_ensemble(q, grid, seed, ensemble_size)
    w = paths.coeffs
    n = w.shape[0]
    idx = np.unique(np.linspace(0, grid.steps, 5).round().astype(int))
    sq = np.sum(w[:, :, idx] ** 2, axis=1)
    est = sq.mean(axis=0)
    se = sq.std(axis=0, ddof=1) / np.sqrt(n)
    times = grid.points[idx]
    final = w[:, :, -1]
    K = q.dim
    cross = []
    for j in range(K):
        for k in range(j + 1, K):
            prod = final[:, j] * final[:, k]
            s = prod.std(ddof=1) / np.sqrt(n)
            cross.append(prod.mean() / s if s > 0 else 0.0)
    var = np.mean(final**2, axis=0)
    qT = q.eigenvalues * grid.horizon
    return CovarianceReport(
        trace=q.trace,
        ensemble_size=n,
        times=times,
        estimates=est,
        expected=times * q.trace,
        std_errors=se,
        cross_z=np.asarray(cross),
        variance_dev=np.abs(var - qT),
        variance_band=3.0 * np.sqrt(2.0 / (n - 1)) * qT,
    )


def sample_seeds(q: QCovariance, grid: TimeGrid, seeds) -> NoisePath:
    """Batch with one stream-0 path per seed, each identical to ``sample_path(q, grid, seed)``."""
    z = np.concatenate([_normals(s, [0], q.dim, grid.steps) for s in seeds])
    return NoisePath(grid, _build(q, grid, z), q=q)
