"""Stochastic convolution ``W^S(t) = int_0^t S(t - tau) dW(tau)`` by two routes.

The direct route sums resolvent values against noise increments.  The
reformulated route avoids the resolvent: with ``c = a(0)`` it integrates

    Y' = c A Y + Wt + c W,    W^S = A Y + W,
    Wt(t) = int_0^t a'(t - s) W^S(s) ds,

per mode with exponential Euler.  For ``c = 1`` this is the usual Cauchy
problem ``Y' = A Y + Wt + W``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import backend, quadrature
from .grid import TimeGrid
from .kernel import Kernel, KernelError, require_finite_origin
from .resolvent import ResolventFamily
from .spectral_operator import OperatorError, SpectralOperator
from .wiener import HilbertPath, NoisePath

DIRECT = "direct"
REFORMULATED = "reformulated"


@dataclass(frozen=True, eq=False)
class ConvolutionResult:
    w_s: HilbertPath
    method: str
    kernel: str
    operator: str
    seed: int | None = None

    @property
    def grid(self) -> TimeGrid:
        return self.w_s.grid

    @property
    def dt(self) -> float:
        return self.grid.dt

    def to_csv(self) -> str:
        return self.w_s.to_csv()


@dataclass(frozen=True, eq=False)
class MemoryTerm:
    w_tilde: HilbertPath


@dataclass(frozen=True, eq=False)
class CauchyState:
    """``Y`` with the constant ``c`` of its equation ``Y' = c A Y + forcing``."""

    y: HilbertPath
    c: float = 1.0


def _batch(x: np.ndarray) -> np.ndarray:
    return x[None] if x.ndim == 2 else x


def _unbatch(x: np.ndarray, like: np.ndarray) -> np.ndarray:
    return x[0] if like.ndim == 2 else x


def _check_noise(noise: HilbertPath, grid: TimeGrid, K: int):
    if noise.grid != grid:
        raise ValueError(f"noise lives on {noise.grid}, expected {grid}")
    if noise.dim != K:
        raise ValueError(f"noise has {noise.dim} modes, expected {K}")


def toeplitz_apply(v, first, u: np.ndarray) -> np.ndarray:
    """``sum_{1<=j<=i} v[i-j] u_j + first[i] u_0`` along the last axis of ``u``."""
    ub = _batch(np.asarray(u, dtype=float))
    x = ub.copy()
    x[..., 0] = 0.0
    vk = np.ascontiguousarray(np.broadcast_to(np.asarray(v, dtype=float)[: ub.shape[-1]], ub.shape[1:]))
    out = backend.lower_toeplitz(vk, np.ascontiguousarray(x))
    out += np.asarray(first)[: ub.shape[-1]] * ub[..., :1]
    return _unbatch(out, np.asarray(u))


def convolve_direct(fam: ResolventFamily, noise: NoisePath) -> ConvolutionResult:
    """Left-point Ito sums ``W^S_k(t_i) = sum_{j<i} s_k(t_i - t_j) dW_{j,k}``."""
    _check_noise(noise, fam.grid, fam.operator.dim)
    s = np.array(fam.values)
    s[:, 0] = 0.0
    inc = _batch(noise.increments)
    x = np.zeros(inc.shape[:-1] + (inc.shape[-1] + 1,))
    x[..., :-1] = inc
    out = backend.lower_toeplitz(np.ascontiguousarray(s), x)
    return ConvolutionResult(
        HilbertPath(fam.grid, _unbatch(out, noise.coeffs)),
        DIRECT,
        fam.kernel.label(),
        fam.operator.label,
        getattr(noise, "seed", None),
    )


def memory_term(k: Kernel, w_s: HilbertPath) -> MemoryTerm:
    """``Wt(t_i) = int_0^{t_i} a'(t_i - s) W^S(s) ds`` by product integration."""
    try:
        require_finite_origin(k)
    except KernelError as exc:
        raise KernelError(f"{exc}; the kernel derivative is not integrable at 0") from None
    v, first = quadrature.memory_toeplitz(k, w_s.grid)
    return MemoryTerm(HilbertPath(w_s.grid, toeplitz_apply(v, first, w_s.coeffs)))


def convolve_reformulated(
    op: SpectralOperator, k: Kernel, noise: NoisePath
) -> tuple[ConvolutionResult, CauchyState, MemoryTerm]:
    """Causal time stepping of the Cauchy-problem form of ``W^S``.

    Step ``i`` advances ``Y`` by exponential Euler with the forcing frozen at
    ``t_{i-1}``, sets ``W^S(t_i) = A Y(t_i) + W(t_i)``, and only then forms
    ``Wt(t_i)``, so the product-trapezoid memory sum can include the newest
    node without an implicit solve.
    """
    try:
        c = require_finite_origin(k)
    except KernelError as exc:
        raise KernelError(f"{exc}; only the implicit identity is available, use the direct route") from None
    if c == 0.0:
        raise KernelError("a(0) = 0: only the implicit identity is available, use the direct route")
    grid = noise.grid
    _check_noise(noise, grid, op.dim)
    lam = op.eigenvalues
    decay = np.exp(-c * lam * grid.dt)
    phi = -np.expm1(-c * lam * grid.dt) / (c * lam)
    mem, mem_first = quadrature.memory_toeplitz(k, grid)
    y, wt, ws = backend.reformulated_sweep(
        decay, phi, lam, float(c), mem, mem_first, np.ascontiguousarray(_batch(noise.coeffs))
    )
    like = noise.coeffs
    result = ConvolutionResult(
        HilbertPath(grid, _unbatch(ws, like)), REFORMULATED, k.label(), op.label, getattr(noise, "seed", None)
    )
    return result, CauchyState(HilbertPath(grid, _unbatch(y, like)), c), MemoryTerm(HilbertPath(grid, _unbatch(wt, like)))


def exponential_euler(op: SpectralOperator, forcing: HilbertPath, c: float = 1.0) -> CauchyState:
    """``Y' = c A Y + f`` with ``f`` frozen at the left end of each step, ``Y(0) = 0``."""
    if forcing.dim != op.dim:
        raise ValueError(f"forcing has {forcing.dim} modes, operator has {op.dim}")
    h = forcing.grid.dt
    lam = op.eigenvalues
    decay = np.exp(-c * lam * h)[:, None]
    phi = (-np.expm1(-c * lam * h) / (c * lam))[:, None]
    f = _batch(forcing.coeffs)
    y = np.zeros_like(f)
    for i in range(1, f.shape[-1]):
        y[..., i] = decay[:, 0] * y[..., i - 1] + phi[:, 0] * f[..., i - 1]
    return CauchyState(HilbertPath(forcing.grid, _unbatch(y, forcing.coeffs)), c)


def cauchy_derivative_check(
    state: CauchyState, op: SpectralOperator, w_tilde: MemoryTerm, noise: HilbertPath
) -> float:
    """Max over interior times of ``|centered dY/dt - (c A Y + Wt + c W)|_H``.

    For a deterministic ``Y'  = c A Y + f`` pass ``w_tilde`` as zeros and ``f / c``
    as ``noise``.
    """
    y = state.y.coeffs
    if y.shape[-1] < 3:
        return 0.0
    h = state.y.grid.dt
    dy = (y[..., 2:] - y[..., :-2]) / (2.0 * h)
    c = state.c
    rhs = -c * op.eigenvalues[:, None] * y + w_tilde.w_tilde.coeffs + c * noise.coeffs
    res = dy - rhs[..., 1:-1]
    return float(np.sqrt(np.sum(res**2, axis=-2)).max())


def _identity_residual(k: Kernel, lam: np.ndarray, w_s: np.ndarray, w: np.ndarray, grid: TimeGrid) -> np.ndarray:
    v, first = quadrature.uniform_toeplitz(k, grid)
    q = toeplitz_apply(v, first, w_s)
    return w_s + lam[:, None] * q - w


def mild_identity_residuals(
    op_n: SpectralOperator, k: Kernel, result: ConvolutionResult, noise: NoisePath
) -> np.ndarray | float:
    """``max_i |W^S(t_i) - Q[a, A_n W^S](t_i) - W(t_i)|_H``, one value per ensemble member."""
    if not op_n.bounded:
        raise OperatorError("the mild identity check needs a bounded (Yosida) operator")
    _check_noise(noise, result.grid, op_n.dim)
    res = _identity_residual(k, op_n.eigenvalues, result.w_s.coeffs, noise.coeffs, result.grid)
    d = np.sqrt(np.sum(res**2, axis=-2)).max(axis=-1)
    return d if np.ndim(d) else float(d)


def mild_identity_residual_bounded(
    op_n: SpectralOperator, k: Kernel, result: ConvolutionResult, noise: NoisePath
) -> float:
    """Largest residual of the bounded-operator identity over all members."""
    return float(np.max(mild_identity_residuals(op_n, k, result, noise)))


def weak_identity_residual(
    op: SpectralOperator, k: Kernel, result: ConvolutionResult, noise: NoisePath, mode: int
) -> float:
    """Residual of the tested identity against the eigenvector ``e_mode`` (0-based)."""
    if not 0 <= mode < op.dim:
        raise IndexError(f"mode {mode} outside 0..{op.dim - 1}")
    _check_noise(noise, result.grid, op.dim)
    sel = (..., slice(mode, mode + 1), slice(None))
    res = _identity_residual(k, op.eigenvalues[mode : mode + 1], result.w_s.coeffs[sel], noise.coeffs[sel], result.grid)
    return float(np.abs(res).max())


def mild_solution(fam: ResolventFamily, x0, noise: NoisePath) -> HilbertPath:
    """``X(t_i) = S(t_i) x0 + W^S(t_i)``."""
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (fam.operator.dim,):
        raise ValueError(f"x0 has shape {x0.shape}, expected ({fam.operator.dim},)")
    ws = convolve_direct(fam, noise).w_s
    return HilbertPath(fam.grid, fam.values * x0[:, None] + ws.coeffs)


def sup_discrepancy(a: ConvolutionResult, b: ConvolutionResult) -> np.ndarray | float:
    """``sup_i |a(t_i) - b(t_i)|_H`` (one value per ensemble member when batched)."""
    if a.grid != b.grid:
        raise ValueError("results live on different grids")
    d = np.sqrt(np.sum((a.w_s.coeffs - b.w_s.coeffs) ** 2, axis=-2)).max(axis=-1)
    return d if np.ndim(d) else float(d)


@dataclass
class DiscrepancyReport:
    """Direct vs reformulated sup discrepancies, one row per seed, one column per grid."""

    kernel: str
    K: int
    horizon: float
    seeds: list
    steps: list
    discrepancy: np.ndarray = field(repr=False)

    @property
    def medians(self) -> np.ndarray:
        return np.median(self.discrepancy, axis=0)

    @property
    def decreasing(self) -> np.ndarray:
        return np.all(np.diff(self.discrepancy, axis=1) < 0, axis=1)

    def to_text(self) -> str:
        lines = [f"kernel={self.kernel}", f"K={self.K}", f"seeds={','.join(map(str, self.seeds))}"]
        lines.append("steps,dt,median_sup_discrepancy,max_sup_discrepancy")
        for n, med, mx in zip(self.steps, self.medians, self.discrepancy.max(axis=0)):
            lines.append(f"{n},{self.horizon / n:.6e},{med:.6e},{mx:.6e}")
        return "\n".join(lines)
