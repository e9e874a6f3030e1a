"""Uniform time grids and scalar paths living on them."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np


def fmt(x: float) -> str:
    """Format a float with 17 significant digits (round-trip exact)."""
    return f"{float(x):.17g}"


@dataclass(frozen=True)
class TimeGrid:
    """Uniform discretization ``t_i = i*T/N`` of ``[0, T]``."""

    horizon: float
    steps: int

    def __post_init__(self):
        if not (np.isfinite(self.horizon) and self.horizon > 0):
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        if int(self.steps) != self.steps or self.steps < 1:
            raise ValueError(f"steps must be a positive integer, got {self.steps}")
        object.__setattr__(self, "steps", int(self.steps))
        object.__setattr__(self, "horizon", float(self.horizon))

    @property
    def dt(self) -> float:
        return self.horizon / self.steps

    @property
    def points(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.steps + 1)

    def __len__(self):
        return self.steps + 1

    def refine(self, factor: int = 2) -> "TimeGrid":
        return TimeGrid(self.horizon, self.steps * factor)

    def coarsen(self, factor: int = 2) -> "TimeGrid":
        if self.steps % factor:
            raise ValueError(f"{self.steps} steps cannot be coarsened by {factor}")
        return TimeGrid(self.horizon, self.steps // factor)

    def trapezoid_weights(self) -> np.ndarray:
        w = np.full(self.steps + 1, self.dt)
        w[0] = w[-1] = 0.5 * self.dt
        return w


@dataclass(frozen=True, eq=False)
class ScalarPath:
    """Real values on every point of a grid."""

    grid: TimeGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (len(self.grid),):
            raise ValueError(f"expected {len(self.grid)} values, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("path values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["t", "value"])
        for t, v in zip(self.grid.points, self.values):
            writer.writerow([fmt(t), fmt(v)])
        return out.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ScalarPath":
        rows = list(csv.reader(io.StringIO(text)))
        data = np.array([[float(a), float(b)] for a, b in rows[1:]])
        t = data[:, 0]
        grid = TimeGrid(t[-1], len(t) - 1)
        if not np.allclose(t, grid.points, rtol=0, atol=1e-12 * grid.horizon):
            raise ValueError("CSV times are not a uniform grid starting at 0")
        return cls(grid, data[:, 1])


def matrix_csv(times: np.ndarray, rows: np.ndarray, label: str = "mode") -> str:
    """CSV with a header of grid times and one row per mode."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow([label] + [fmt(t) for t in times])
    for k, row in enumerate(np.atleast_2d(rows), start=1):
        writer.writerow([k] + [fmt(v) for v in row])
    return out.getvalue()
