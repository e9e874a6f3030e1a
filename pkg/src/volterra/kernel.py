"""Scalar memory kernels, the linear Volterra solver and the complete-positivity check.

A kernel ``a`` enters every equation through convolutions ``(a * u)(t)``.
Integrals against ``a`` are discretized by product integration: ``u`` is
interpolated linearly between nodes and the kernel moments over each panel
are computed exactly (closed form) or by Gauss-Legendre quadrature, so
weakly singular kernels keep their accuracy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np
from scipy.special import gamma as gamma_fn

from . import quadrature
from .grid import ScalarPath, TimeGrid

KINDS = ("exponential", "constant", "fractional", "tabulated")

# Gauss-Legendre rule mapped to [0, 1]
_GL_X, _GL_W = np.polynomial.legendre.leggauss(12)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W

CP_TOLERANCE = 1e-10


class KernelError(ValueError):
    """Invalid kernel description or an evaluation outside the kernel's domain."""


class SingularStepError(ArithmeticError):
    """The implicit update ``1 + mu * w_ii`` vanished at some step."""

    def __init__(self, step: int, mu: float | None = None):
        self.step = step
        self.mu = mu
        super().__init__(f"singular linear step at index {step}" + (f" (mu={mu})" if mu is not None else ""))


@dataclass(frozen=True)
class Kernel:
    """Scalar memory kernel ``a(t)`` on ``(0, T]``.

    ``fractional`` means ``a(t) = (t + epsilon)**(alpha - 1) / Gamma(alpha)``;
    ``tabulated`` interpolates ``table_a`` linearly in ``table_t``.
    """

    kind: str
    alpha: float = 1.0
    epsilon: float = 0.0
    table_t: tuple = field(default=(), repr=False)
    table_a: tuple = field(default=(), repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise KernelError(f"unknown kernel kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "fractional":
            if not (0.0 < self.alpha <= 1.0):
                raise KernelError(f"fractional kernel needs alpha in (0, 1], got {self.alpha}")
            if not (self.epsilon >= 0.0 and math.isfinite(self.epsilon)):
                raise KernelError(f"fractional kernel needs epsilon >= 0, got {self.epsilon}")
        if self.kind == "tabulated":
            t = np.asarray(self.table_t, dtype=float)
            a = np.asarray(self.table_a, dtype=float)
            if t.ndim != 1 or t.shape != a.shape or len(t) < 2:
                raise KernelError("tabulated kernel needs matching 1-d tables with at least two points")
            if t[0] != 0.0 or np.any(np.diff(t) <= 0):
                raise KernelError("tabulated kernel times must start at 0 and increase strictly")
            if not np.all(np.isfinite(a)):
                raise KernelError("tabulated kernel values must be finite")

    # -- basic evaluation -------------------------------------------------

    @property
    def singular_at_origin(self) -> bool:
        return self.kind == "fractional" and self.epsilon == 0.0 and self.alpha < 1.0

    @property
    def c(self) -> float | None:
        """``a(0)``, or None when the kernel is unbounded at the origin."""
        if self.singular_at_origin:
            return None
        return float(self(0.0))

    @property
    def support(self) -> float:
        return float(self.table_t[-1]) if self.kind == "tabulated" else math.inf

    def _check_times(self, t, allow_origin):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(t > self.support * (1 + 1e-12)):
            raise KernelError(f"kernel evaluated outside its domain [0, {self.support}]")
        if not allow_origin and np.any(t == 0):
            raise KernelError(f"a(0) undefined for {self.label()}")
        return t

    def __call__(self, t):
        t = self._check_times(t, allow_origin=not self.singular_at_origin)
        if self.kind == "exponential":
            out = np.exp(-t)
        elif self.kind == "constant":
            out = np.ones_like(t)
        elif self.kind == "fractional":
            out = (t + self.epsilon) ** (self.alpha - 1.0) / gamma_fn(self.alpha)
        else:
            out = np.interp(t, self.table_t, self.table_a)
        return out if out.ndim else float(out)

    def derivative(self, t):
        t = self._check_times(t, allow_origin=not self.singular_at_origin)
        if self.kind == "exponential":
            out = -np.exp(-t)
        elif self.kind == "constant":
            out = np.zeros_like(t)
        elif self.kind == "fractional":
            out = (self.alpha - 1.0) * (t + self.epsilon) ** (self.alpha - 2.0) / gamma_fn(self.alpha)
        else:
            slopes = np.gradient(np.asarray(self.table_a), np.asarray(self.table_t), edge_order=1)
            out = np.interp(t, self.table_t, slopes)
        return out if out.ndim else float(out)

    def integral(self, t):
        """``int_0^t a(s) ds``."""
        t = self._check_times(t, allow_origin=True)
        if self.kind == "exponential":
            out = -np.expm1(-t)
        elif self.kind == "constant":
            out = t.copy()
        elif self.kind == "fractional":
            al, eps = self.alpha, self.epsilon
            out = ((t + eps) ** al - eps**al) / (al * gamma_fn(al))
        else:
            tt = np.asarray(self.table_t)
            aa = np.asarray(self.table_a)
            cum = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(tt) * (aa[1:] + aa[:-1]))])
            idx = np.clip(np.searchsorted(tt, t, side="right") - 1, 0, len(tt) - 2)
            left = tt[idx]
            a_left = aa[idx]
            a_t = np.interp(t, tt, aa)
            out = cum[idx] + 0.5 * (t - left) * (a_left + a_t)
        return out if out.ndim else float(out)

    # -- product-integration moments ---------------------------------------

    def panel_moments(self, lower, width):
        """Hat-function moments of ``a`` over ``s in [L, L + D]``.

        Returns ``(near, far)`` with ``near = D * int_0^1 a(L + D x) (1 - x) dx``
        and ``far = D * int_0^1 a(L + D x) x dx``.  For a target time ``t_i``
        and panel ``[t_p, t_{p+1}]``, ``L = t_i - t_{p+1}``: ``near`` weighs
        ``u(t_{p+1})`` and ``far`` weighs ``u(t_p)``.
        """
        lower = np.asarray(lower, dtype=float)
        width = np.asarray(width, dtype=float)
        lower, width = np.broadcast_arrays(lower, width)
        if self.kind == "constant":
            half = 0.5 * width
            return half.copy(), half.copy()
        if self.kind == "fractional":
            near = np.empty(lower.shape)
            far = np.empty(lower.shape)
            exact = (lower + self.epsilon) < width
            if np.any(exact):
                near[exact], far[exact] = _fractional_moments(self.alpha, self.epsilon, lower[exact], width[exact])
            rest = ~exact
            if np.any(rest):
                near[rest], far[rest] = self._gauss_moments(lower[rest], width[rest])
            return near, far
        return self._gauss_moments(lower, width)

    def _gauss_moments(self, lower, width):
        s = lower[..., None] + width[..., None] * _GL_X
        vals = self(s) * _GL_W
        far = width * np.sum(vals * _GL_X, axis=-1)
        near = width * np.sum(vals, axis=-1) - far
        return near, far

    def derivative_panel_moments(self, lower, width):
        """Hat-function moments of the derivative, obtained by parts from ``panel_moments``.

        Needs finite ``a`` at both panel ends.
        """
        lower = np.asarray(lower, dtype=float)
        width = np.asarray(width, dtype=float)
        near, far = self.panel_moments(lower, width)
        mean = (near + far) / width
        return mean - self(lower), self(lower + width) - mean

    # -- description ---------------------------------------------------------

    def label(self) -> str:
        if self.kind == "fractional":
            return f"fractional(alpha={self.alpha:g}, epsilon={self.epsilon:g})"
        if self.kind == "tabulated":
            return f"tabulated({len(self.table_t)} points)"
        return self.kind

    def as_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "fractional":
            out.update(alpha=self.alpha, epsilon=self.epsilon)
        if self.kind == "tabulated":
            out.update(table_t=list(self.table_t), table_a=list(self.table_a))
        return out


def _fractional_moments(alpha, eps, lower, width):
    """Closed-form hat moments of ``(s + eps)**(alpha-1)/Gamma(alpha)``.

    Used when the panel sits close to the singular point ``s = -eps``.
    """
    v = lower + eps
    u = v + width
    g = gamma_fn(alpha)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(v > 0, np.log1p(width / np.where(v > 0, v, 1.0)), 0.0)
        d_a = np.where(v > 0, v**alpha * np.expm1(alpha * ratio), u**alpha)
        d_a1 = np.where(v > 0, v ** (alpha + 1) * np.expm1((alpha + 1) * ratio), u ** (alpha + 1))
    total = d_a / (alpha * g)
    far = (d_a1 / (alpha + 1) - v * d_a / alpha) / (width * g)
    return total - far, far


def make_kernel(spec: Union[str, dict, Kernel], horizon: float | None = None) -> Kernel:
    """Build a kernel from a name or a dict such as ``{"kind": "fractional", "alpha": 0.5}``.

    With ``horizon`` given, tabulated kernels must cover ``[0, horizon]``.
    """
    if isinstance(spec, Kernel):
        kernel = spec
    else:
        if isinstance(spec, str):
            spec = {"kind": spec}
        spec = dict(spec)
        kind = str(spec.pop("kind", "")).strip().lower()
        if kind == "tabulated":
            if "table" in spec:
                table = np.asarray(spec.pop("table"), dtype=float)
                spec["table_t"], spec["table_a"] = table[:, 0], table[:, 1]
            spec["table_t"] = tuple(float(x) for x in spec.get("table_t", ()))
            spec["table_a"] = tuple(float(x) for x in spec.get("table_a", ()))
        unknown = set(spec) - {"alpha", "epsilon", "table_t", "table_a"}
        if unknown:
            raise KernelError(f"unknown kernel parameters {sorted(unknown)}")
        kwargs = {k: float(v) for k, v in spec.items() if k in ("alpha", "epsilon")}
        kwargs.update({k: v for k, v in spec.items() if k.startswith("table")})
        kernel = Kernel(kind, **kwargs)
    if horizon is not None and kernel.support < horizon * (1 - 1e-12):
        raise KernelError(f"tabulated kernel covers [0, {kernel.support}] but horizon is {horizon}")
    return kernel


def eval_kernel(k: Kernel, t):
    return k(t)


def eval_kernel_derivative(k: Kernel, t):
    return k.derivative(t)


def require_finite_origin(k: Kernel) -> float:
    """Return ``a(0)`` or raise when it is undefined."""
    c = k.c
    if c is None:
        raise KernelError(f"a(0) undefined for {k.label()}; choose epsilon > 0 or alpha = 1")
    return c


# -- linear Volterra equations of the second kind ------------------------------

RightHandSide = Union[ScalarPath, Callable, float]


def _rhs_on(f: RightHandSide, nodes: np.ndarray, grid: TimeGrid) -> np.ndarray:
    if isinstance(f, ScalarPath):
        if f.grid != grid:
            raise ValueError("right-hand side lives on a different grid")
        if len(nodes) != len(grid):
            raise ValueError("a graded solve needs the right-hand side as a function of time")
        return np.asarray(f.values, dtype=float)
    if callable(f):
        return np.broadcast_to(np.asarray(f(nodes), dtype=float), nodes.shape).copy()
    return np.full(nodes.shape, float(f))


def solve_on_nodes(k: Kernel, mus: Sequence[float], f_nodes: np.ndarray, nodes: np.ndarray, weights=None):
    """Solve ``u + mu (a * u) = f`` on arbitrary nodes for every ``mu`` at once."""
    mus = np.atleast_1d(np.asarray(mus, dtype=float))
    if weights is None:
        weights = quadrature.node_weights(k, nodes)
    u, bad = quadrature.sweep(weights, f_nodes, mus)
    if bad >= 0:
        row = weights[bad * (bad + 1) // 2 + bad]
        hit = mus[np.abs(1.0 + mus * row) <= 1e-14 * (1.0 + np.abs(mus * row))]
        raise SingularStepError(bad, float(hit[0]) if len(hit) else None)
    return u


def solve_linear_volterra(
    k: Kernel,
    mu: float,
    f: RightHandSide,
    grid: TimeGrid,
    grading: float | None = None,
) -> ScalarPath:
    """Solve ``u(t) + mu * int_0^t a(t - s) u(s) ds = f(t)`` on ``grid``.

    Product-trapezoidal quadrature on the grid itself by default.  With
    ``grading`` (a ratio such as 0.01) the solve runs on a refinement of the
    grid that is graded near ``t = 0`` to resolve the initial layer of stiff
    problems; ``f`` must then be a function of time or a constant.
    """
    if grading is None:
        nodes = grid.points
        index = np.arange(len(grid))
        weights = quadrature.uniform_node_weights(k, grid)
    else:
        tau = quadrature.stiffness_time(k, abs(mu), grid.horizon)
        nodes, index, weights = quadrature.graded_weights(k, grid, tau, grading)
    rhs = _rhs_on(f, nodes, grid)
    u = solve_on_nodes(k, [mu], rhs, nodes, weights)[0]
    return ScalarPath(grid, u[index])


def volterra_residual(k: Kernel, mu: float, u: ScalarPath, f: RightHandSide) -> np.ndarray:
    """Pointwise residual ``u + mu Q[a, u] - f`` of the product-trapezoidal discretization."""
    grid = u.grid
    weights = quadrature.uniform_node_weights(k, grid)
    q = quadrature.apply(weights, u.values[None, :])[0]
    return u.values + mu * q - _rhs_on(f, grid.points, grid)


@dataclass
class PositivityRow:
    steps: int
    mu: float
    min_s: float
    min_r: float
    tol_s: float
    tol_r: float

    @property
    def passed(self) -> bool:
        return self.min_s >= -self.tol_s and self.min_r >= -self.tol_r


@dataclass
class PositivityReport:
    kernel: Kernel
    rows: list

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    @property
    def negative(self) -> list:
        return [r for r in self.rows if not r.passed]

    def to_text(self) -> str:
        lines = [f"complete positivity of {self.kernel.label()}", "steps,mu,min_s,min_r,status"]
        for r in self.rows:
            lines.append(f"{r.steps},{r.mu:g},{r.min_s:.6e},{r.min_r:.6e},{'ok' if r.passed else 'NEGATIVE'}")
        return "\n".join(lines)


def check_complete_positivity(
    k: Kernel,
    mus: Sequence[float],
    grid: TimeGrid,
    refine: bool = True,
) -> PositivityReport:
    """Solve ``s + mu a*s = 1`` and ``r + mu a*r = a`` and report their minima.

    Values at or above ``-1e-10 * max(1, max|s|)`` count as nonnegative.  The
    check runs on ``grid`` and, with ``refine``, once more at half the step.
    """
    mus = np.asarray(list(mus), dtype=float)
    if np.any(mus < 0):
        raise ValueError("complete positivity is defined for mu >= 0")
    require_finite_origin(k)
    rows = []
    grids = [grid, grid.refine(2)] if refine else [grid]
    for g in grids:
        nodes = g.points
        weights = quadrature.uniform_node_weights(k, g)
        s = solve_on_nodes(k, mus, np.ones(len(g)), nodes, weights)
        r = solve_on_nodes(k, mus, np.asarray(k(nodes), dtype=float), nodes, weights)
        for mu, s_row, r_row in zip(mus, s, r):
            rows.append(
                PositivityRow(
                    steps=g.steps,
                    mu=float(mu),
                    min_s=float(s_row.min()),
                    min_r=float(r_row.min()),
                    tol_s=CP_TOLERANCE * max(1.0, float(np.abs(s_row).max())),
                    tol_r=CP_TOLERANCE * max(1.0, float(np.abs(r_row).max())),
                )
            )
    return PositivityReport(k, rows)
