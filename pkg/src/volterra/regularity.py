"""Time and space regularity diagnostics for discretized Hilbert-space paths.

Everything here is a finite-truncation, finite-grid surrogate: numbers are
reported and compared across refinements, never matched to constants.
The space ``D_A(gamma, 2)`` is measured through ``|x| + |(-A)^gamma x|``,
which is an equivalent norm for diagonal self-adjoint generators.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

from . import backend
from .spectral_operator import OperatorError, SpectralOperator
from .wiener import HilbertPath, QCovariance


@dataclass
class RegularityReport:
    gamma: float | None = None
    theta: float | None = None
    dts: list = field(default_factory=list)
    max_increments: list = field(default_factory=list)
    exponent: float | None = None
    exponent_residual: float | None = None
    norms: dict = field(default_factory=dict)
    M_hat: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def continuity_ok(self) -> bool:
        """Max increment strictly decreases under refinement."""
        m = self.max_increments
        return all(b < a for a, b in zip(m, m[1:]))

    def to_text(self) -> str:
        lines = []
        if self.gamma is not None:
            lines.append(f"gamma={self.gamma:g}" + (f", theta={self.theta:g}" if self.theta is not None else ""))
        if self.dts:
            lines.append("dt,max_increment")
            lines.extend(f"{d:.6e},{m:.6e}" for d, m in zip(self.dts, self.max_increments))
        if self.exponent is not None:
            lines.append(
                f"empirical Holder exponent (diagnostic only) = {self.exponent:.4f}, "
                f"regression residual = {self.exponent_residual:.3e}"
            )
        for key, val in self.norms.items():
            lines.append(f"{key} = {val:.6e}")
        if self.M_hat is not None:
            lines.append(f"M_hat = {self.M_hat:.6e}")
        for key, val in self.extra.items():
            lines.append(f"{key} = {val}")
        return "\n".join(lines)


def max_increments(x: HilbertPath) -> np.ndarray | float:
    """``max_i |X(t_{i+1}) - X(t_i)|_H`` (per member for batches)."""
    d = np.sqrt(np.sum(np.diff(x.coeffs, axis=-1) ** 2, axis=-2)).max(axis=-1)
    return d if np.ndim(d) else float(d)


def scalar_max_increments(values: np.ndarray) -> np.ndarray | float:
    d = np.abs(np.diff(values, axis=-1)).max(axis=-1)
    return d if np.ndim(d) else float(d)


def _loglog_fit(dts, incs):
    dts = np.asarray(dts, dtype=float)
    incs = np.asarray(incs, dtype=float)
    if np.any(incs <= 0):
        return None, None
    x, y = np.log(dts), np.log(incs)
    slope, icpt = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * x + icpt)) ** 2)))
    return float(slope), resid


def path_modulus(levels: Sequence[HilbertPath]) -> RegularityReport:
    """Modulus table over coupled refinements of one path, coarse to fine.

    The log-log slope of max increment against ``dt`` is an empirical
    diagnostic, not a Holder exponent claim.
    """
    if len(levels) < 2:
        raise ValueError("path_modulus needs at least 2 refinement levels")
    if any(p.batched for p in levels):
        raise ValueError("pass one path per level; use max_increments for ensembles")
    dts = [p.grid.dt for p in levels]
    incs = [max_increments(p) for p in levels]
    slope, resid = _loglog_fit(dts, incs)
    return RegularityReport(dts=dts, max_increments=incs, exponent=slope, exponent_residual=resid)


def _check_gamma(gamma: float, name: str = "gamma"):
    if not 0.0 < gamma < 1.0:
        raise OperatorError(f"{name} must lie in (0, 1), got {gamma}")


def fractional_norms(op: SpectralOperator, gamma: float, x: HilbertPath) -> np.ndarray:
    """``|(-A)^gamma X(t_i)|_H`` per time (and member)."""
    scale = op.eigenvalues**gamma
    return np.sqrt(np.sum((scale[:, None] * x.coeffs) ** 2, axis=-2))


def hypothesis_partial_sums(op: SpectralOperator, gamma: float, q: QCovariance) -> np.ndarray:
    """Partial sums ``sum_{k<=K'} q_k lambda_k^{2 gamma}``, ``K' = 1..K``."""
    return np.cumsum(q.eigenvalues * op.eigenvalues ** (2.0 * gamma))


def gaussianity_z(samples: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Skewness and kurtosis z-scores per column of ``samples`` (rows are draws)."""
    if samples.shape[0] < 20:
        raise ValueError("Gaussianity tests need at least 20 draws")
    return stats.skewtest(samples, axis=0).statistic, stats.kurtosistest(samples, axis=0).statistic


def spatial_regularity(op: SpectralOperator, gamma: float, w_s: HilbertPath, q: QCovariance) -> RegularityReport:
    """Fractional-power path of ``W^S``, its increments, and the noise-domain partial sums.

    With an ensemble (batched ``w_s``) of at least 20 members, each mode of
    ``(-A)^gamma W^S(T)`` is z-tested for skewness and excess kurtosis.
    """
    _check_gamma(gamma)
    values = fractional_norms(op, gamma, w_s)
    report = RegularityReport(gamma=gamma, dts=[w_s.grid.dt])
    inc = scalar_max_increments(values)
    report.max_increments = [float(np.max(inc))]
    report.norms = {"sup_t |(-A)^gamma W^S(t)|_H": float(values.max())}
    report.extra["finite"] = bool(np.all(np.isfinite(values)))
    report.extra["partial_sums"] = hypothesis_partial_sums(op, gamma, q)
    report.extra["values"] = values
    if w_s.batched and w_s.coeffs.shape[0] >= 20:
        final = (op.eigenvalues**gamma) * w_s.coeffs[:, :, -1]
        zs, zk = gaussianity_z(final)
        live = q.eigenvalues > 0
        ok = (np.abs(zs) <= 3.0) & (np.abs(zk) <= 3.0)
        report.extra["skew_z"] = zs
        report.extra["kurtosis_z"] = zk
        report.extra["gaussian_pass_fraction"] = float(ok[live].mean()) if live.any() else 1.0
    return report


def _l2_time(grid, sq: np.ndarray) -> np.ndarray:
    return np.sqrt(sq @ grid.trapezoid_weights())


def slobodeckij_seminorm(x: HilbertPath, gamma: float) -> np.ndarray | float:
    """Discrete ``W^{gamma,2}`` seminorm: trapezoid double sum, diagonal excluded."""
    _check_gamma(gamma)
    t = x.grid.points
    w = x.grid.trapezoid_weights()
    batch = x.coeffs[None] if not x.batched else x.coeffs
    out = np.array(
        [math.sqrt(backend.slobodeckij_sum(np.ascontiguousarray(m.T), t, w, 1.0 + 2.0 * gamma)) for m in batch]
    )
    return out if x.batched else float(out[0])


def interpolation_norms(
    y: HilbertPath, op: SpectralOperator, gamma: float, forcing: HilbertPath, theta: float | None = None
) -> RegularityReport:
    """Endpoint norms of ``Y`` against ``|forcing|_{L^2(0,T;H)}`` and their ratio ``M_hat``.

    ``theta < gamma`` adds the composed mixed norm ``|(-A)^theta Y|_{W^{gamma-theta,2}}``
    (experimental).  Batched inputs report the largest ``M_hat`` over members.
    """
    _check_gamma(gamma)
    if forcing.grid != y.grid or forcing.coeffs.shape != y.coeffs.shape:
        raise ValueError("forcing must live on the same grid with the same shape as Y")
    grid = y.grid
    l2 = _l2_time(grid, np.sum(y.coeffs**2, axis=-2))
    semi = slobodeckij_seminorm(y, gamma)
    sobolev = np.sqrt(l2**2 + np.asarray(semi) ** 2)
    proxy = np.sqrt(np.sum(y.coeffs**2, axis=-2)) + fractional_norms(op, gamma, y)
    interp = _l2_time(grid, proxy**2)
    f_norm = _l2_time(grid, np.sum(forcing.coeffs**2, axis=-2))
    total = sobolev + interp
    with np.errstate(invalid="ignore", divide="ignore"):
        m_hat = np.where(f_norm > 0, total / f_norm, 0.0)
    report = RegularityReport(gamma=gamma, theta=theta, dts=[grid.dt])
    report.norms = {
        "|Y|_W^{gamma,2}": float(np.max(sobolev)),
        "|Y|_L2(D_A(gamma,2))": float(np.max(interp)),
        "|forcing|_L2": float(np.max(f_norm)),
        "sup_t |(-A)^gamma Y(t)|_H": float(fractional_norms(op, gamma, y).max()),
    }
    report.M_hat = float(np.max(m_hat))
    report.extra["M_hat_members"] = m_hat
    if theta is not None:
        if not 0.0 <= theta < gamma:
            raise OperatorError(f"theta must satisfy 0 <= theta < gamma, got {theta}")
        shifted = HilbertPath(grid, (op.eigenvalues**theta)[:, None] * y.coeffs)
        mixed = slobodeckij_seminorm(shifted, gamma - theta)
        report.norms["mixed |(-A)^theta Y|_W^{gamma-theta,2} (experimental)"] = float(np.max(mixed))
    return report


def maximal_regularity_norms(y: HilbertPath, op: SpectralOperator) -> RegularityReport:
    """Discrete ``|Y|_{W^{1,2}(0,T;H)}`` and ``|A Y|_{L^2(0,T;H)}`` (max over members)."""
    grid = y.grid
    h = grid.dt
    dq = np.diff(y.coeffs, axis=-1) / h
    deriv = np.sqrt(h * np.sum(dq**2, axis=(-2, -1)))
    l2 = _l2_time(grid, np.sum(y.coeffs**2, axis=-2))
    w12 = np.sqrt(deriv**2 + l2**2)
    ay = _l2_time(grid, np.sum((op.eigenvalues[:, None] * y.coeffs) ** 2, axis=-2))
    report = RegularityReport(dts=[h])
    report.norms = {"|Y|_W^{1,2}": float(np.max(w12)), "|AY|_L2": float(np.max(ay))}
    report.extra["W12_members"] = w12
    report.extra["AY_members"] = ay
    return report
