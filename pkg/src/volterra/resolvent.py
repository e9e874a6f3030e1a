"""Resolvent families ``S(t)`` built mode by mode from the resolvent equation.

On an eigenvector ``e_k`` the resolvent equation
``S(t)x = x + int_0^t a(t-s) A S(s)x ds`` becomes the scalar equation
``s_k(t) + lambda_k (a * s_k)(t) = 1``; the family is the diagonal matrix of
these scalar resolvents.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import quadrature
from .grid import ScalarPath, TimeGrid, matrix_csv
from .kernel import Kernel, solve_on_nodes
from .spectral_operator import SpectralOperator, yosida

KNOWN_COMPLETELY_POSITIVE = ("exponential", "constant", "fractional")


def _solve_grid(k: Kernel, grid: TimeGrid, stiffness: float, grading: float | None):
    if grading is None:
        return grid.points, np.arange(len(grid)), quadrature.uniform_node_weights(k, grid)
    tau = quadrature.stiffness_time(k, stiffness, grid.horizon)
    return quadrature.graded_weights(k, grid, tau, grading)


def scalar_resolvent(
    k: Kernel, lam: float, grid: TimeGrid, grading: float | None = quadrature.DEFAULT_GRADING
) -> ScalarPath:
    """Solve ``s + lam (a * s) = 1`` on ``grid``."""
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    nodes, index, weights = _solve_grid(k, grid, lam, grading)
    s = solve_on_nodes(k, [lam], np.ones(len(nodes)), nodes, weights)[0]
    return ScalarPath(grid, s[index])


@dataclass(frozen=True, eq=False)
class ResolventFamily:
    """Scalar resolvents ``s_k(t_i)`` of every mode, plus the nodes they were solved on."""

    operator: SpectralOperator
    kernel: Kernel
    grid: TimeGrid
    nodes: np.ndarray = field(repr=False)
    index: np.ndarray = field(repr=False)
    fine_values: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    @property
    def values(self) -> np.ndarray:
        """``(K, N+1)`` matrix of ``s_k(t_i)`` on the working grid."""
        return self.fine_values[:, self.index]

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.operator.eigenvalues

    def apply(self, i: int, x) -> np.ndarray:
        """``S(t_i) x``."""
        return self.values[:, i] * np.asarray(x, dtype=float)

    def norms(self) -> np.ndarray:
        """``||S(t_i)||`` for every grid time."""
        return np.abs(self.values).max(axis=0)

    def perturbed(self, mode: int, i: int, delta: float) -> "ResolventFamily":
        """Copy with ``s_mode(t_i)`` shifted by ``delta`` (for residual diagnostics)."""
        fine = self.fine_values.copy()
        fine[mode, self.index[i]] += delta
        return replace(self, fine_values=fine)

    def to_csv(self) -> str:
        return matrix_csv(self.grid.points, self.values)


def build_resolvent_family(
    op: SpectralOperator,
    k: Kernel,
    grid: TimeGrid,
    grading: float | None = quadrature.DEFAULT_GRADING,
    stiffness: float | None = None,
) -> ResolventFamily:
    """Solve the resolvent equation for every eigenmode of ``op``.

    All modes share one node set, graded near ``t = 0`` according to the
    stiffest mode (or ``stiffness`` when given) unless ``grading`` is None.
    """
    if k.kind not in KNOWN_COMPLETELY_POSITIVE:
        warnings.warn(
            f"{k.label()} is not known to be completely positive; the resolvent is computed anyway",
            stacklevel=2,
        )
    stiffness = op.lam_max if stiffness is None else stiffness
    nodes, index, weights = _solve_grid(k, grid, stiffness, grading)
    fine = solve_on_nodes(k, op.eigenvalues, np.ones(len(nodes)), nodes, weights)
    fine.setflags(write=False)
    return ResolventFamily(op, k, grid, nodes, index, fine, weights)


def resolvent_residual(fam: ResolventFamily) -> float:
    """Max over modes and solve nodes of ``|s_k - 1 + lambda_k Q[a, s_k]|``."""
    q = quadrature.apply(fam.weights, fam.fine_values)
    res = fam.fine_values - 1.0 + fam.eigenvalues[:, None] * q
    return float(np.abs(res).max())


def commutes_with_A(fam: ResolventFamily, atol: float = 0.0) -> bool:
    """``A S(t) e_k == S(t) A e_k`` for every basis vector and grid time."""
    eye = np.eye(fam.operator.dim)
    for i in range(len(fam.grid)):
        left = fam.operator.apply(fam.apply(i, eye))
        right = fam.apply(i, fam.operator.apply(eye))
        if np.max(np.abs(left - right)) > atol:
            return False
    return True


@dataclass
class YosidaReport:
    n_list: list
    sup_diff: list
    growth_M: list
    growth_w0: list
    kernel: str
    operator: str

    @property
    def ratios(self) -> list:
        d = self.sup_diff
        return [d[i] / d[i + 1] if d[i + 1] > 0 else math.inf for i in range(len(d) - 1)]

    @property
    def strictly_decreasing(self) -> bool:
        return all(b < a for a, b in zip(self.sup_diff, self.sup_diff[1:]))

    def to_text(self) -> str:
        lines = [f"Yosida resolvent convergence, kernel={self.kernel}, operator={self.operator}", "n,sup_diff,ratio,M_hat,w0_hat"]
        ratios = [float("nan")] + self.ratios
        for n, d, r, m, w in zip(self.n_list, self.sup_diff, ratios, self.growth_M, self.growth_w0):
            lines.append(f"{n:g},{d:.6e},{r:.4f},{m:.6f},{w:.6f}")
        return "\n".join(lines)


def yosida_resolvent_convergence(
    op: SpectralOperator,
    k: Kernel,
    grid: TimeGrid,
    n_list: Sequence[float],
    grading: float | None = quadrature.DEFAULT_GRADING,
) -> YosidaReport:
    """Compare the families of ``(A_n, a)`` with the family of ``(A, a)`` on one node set.

    Reports ``sup_{t_i, k} |S_n(t_i) e_k - S(t_i) e_k|`` and the empirical growth
    constants ``M, w0`` in ``||S_n(t)|| <= M exp(w0 t)``.
    """
    n_list = [float(n) for n in n_list]
    if any(n <= 0 for n in n_list) or any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n_list must be positive and increasing")
    base = build_resolvent_family(op, k, grid, grading)
    t = grid.points
    diffs, ms, ws = [], [], []
    for n in n_list:
        fam_n = build_resolvent_family(yosida(op, n), k, grid, grading, stiffness=op.lam_max)
        diffs.append(float(np.abs(fam_n.values - base.values).max()))
        norms = fam_n.norms()
        ms.append(float(norms.max()))
        with np.errstate(divide="ignore"):
            rates = np.log(np.maximum(norms[1:], 1e-300)) / t[1:]
        ws.append(float(max(0.0, rates.max())))
    return YosidaReport(n_list, diffs, ms, ws, k.label(), op.label)
