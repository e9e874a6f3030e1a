"""INI experiment configuration.

Sections ``[operator]``, ``[kernel]``, ``[noise]`` feed the matching
``make_*`` constructors; ``[grid]`` gives the finest grid and how many
factor-2 coarsenings to run; ``[run]`` selects the experiment.  See
``configs/minimal.ini``.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from .grid import TimeGrid
from .kernel import Kernel, KernelError, make_kernel
from .spectral_operator import OperatorError, SpectralOperator, make_operator
from .wiener import QCovariance, make_covariance

EXPERIMENTS = (
    "complete-positivity",
    "resolvent-build",
    "yosida-convergence",
    "convolution-compare",
    "identities",
    "regularity",
    "all",
)


class ConfigError(ValueError):
    pass


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.replace(";", ",").split(",") if x.strip()]


@dataclass
class ExperimentConfig:
    name: str
    operator: SpectralOperator
    kernel: Kernel
    covariance: QCovariance
    horizon: float
    steps: int
    levels: int
    experiment: str
    seed: int = 0
    seeds: int = 10
    ensemble: int = 200
    gammas: list = field(default_factory=lambda: [0.5])
    yosida: list = field(default_factory=lambda: [1e2, 1e3, 1e4, 1e5])
    identity_n: float = 1e3
    mus: list = field(default_factory=lambda: [0.0, 0.5, 1.0, 10.0])
    output: str | None = None
    raw: dict = field(default_factory=dict, repr=False)

    def grids(self) -> list[TimeGrid]:
        """Coarse to fine: ``steps / 2^(levels-1), ..., steps``."""
        return [TimeGrid(self.horizon, self.steps >> (self.levels - 1 - i)) for i in range(self.levels)]

    @property
    def finest(self) -> TimeGrid:
        return TimeGrid(self.horizon, self.steps)

    @property
    def seed_list(self) -> list[int]:
        return list(range(self.seed, self.seed + self.seeds))


def parse_config(text: str, name: str = "config") -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from None
    raw = {s: dict(parser[s]) for s in parser.sections()}
    for section in ("operator", "kernel", "grid", "run"):
        if section not in raw:
            raise ConfigError(f"missing section [{section}]")
    try:
        op_spec = dict(raw["operator"])
        if "eigenvalues" in op_spec:
            op_spec["eigenvalues"] = _floats(op_spec["eigenvalues"])
        operator = make_operator(op_spec)
        grid = raw["grid"]
        horizon = float(grid.get("horizon", 1.0))
        steps = int(grid["steps"])
        levels = int(grid.get("levels", 3))
        kernel_spec = dict(raw["kernel"])
        for key in ("table_t", "table_a"):
            if key in kernel_spec:
                kernel_spec[key] = _floats(kernel_spec[key])
        kernel = make_kernel(kernel_spec, horizon=horizon)
        noise = dict(raw.get("noise", {"kind": "power"}))
        if "values" in noise:
            noise["values"] = _floats(noise["values"])
        covariance = make_covariance(noise, operator.dim)
        run = raw["run"]
        experiment = run.get("experiment", "").strip()
        cfg = ExperimentConfig(
            name=name,
            operator=operator,
            kernel=kernel,
            covariance=covariance,
            horizon=horizon,
            steps=steps,
            levels=levels,
            experiment=experiment,
            seed=int(run.get("seed", 0)),
            seeds=int(run.get("seeds", 10)),
            ensemble=int(run.get("ensemble", 200)),
            gammas=_floats(run.get("gammas", "0.5")),
            yosida=_floats(run.get("yosida", "1e2, 1e3, 1e4, 1e5")),
            identity_n=float(run.get("identity_n", 1e3)),
            mus=_floats(run.get("mus", "0, 0.5, 1, 10")),
            output=run.get("output") or None,
            raw=raw,
        )
    except (KeyError, ValueError, TypeError, KernelError, OperatorError) as exc:
        raise ConfigError(f"invalid spec: {exc}") from None
    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig):
    if cfg.experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {cfg.experiment!r}; choose one of {', '.join(EXPERIMENTS)}")
    if cfg.levels < 1:
        raise ConfigError("grid levels must be >= 1")
    if cfg.steps % (1 << (cfg.levels - 1)):
        raise ConfigError(f"steps={cfg.steps} is not divisible by 2^(levels-1)")
    if cfg.steps >> (cfg.levels - 1) < 2:
        raise ConfigError("coarsest grid needs at least 2 steps")
    if cfg.seeds < 1 or cfg.ensemble < 100:
        raise ConfigError("need seeds >= 1 and ensemble >= 100")
    if not cfg.gammas or any(not 0.0 < g < 1.0 for g in cfg.gammas):
        raise ConfigError("gammas must lie in (0, 1)")
    if any(m < 0 for m in cfg.mus):
        raise ConfigError("mus must be nonnegative")
    if len(cfg.yosida) < 2 or any(b <= a for a, b in zip(cfg.yosida, cfg.yosida[1:])) or cfg.yosida[0] <= 0:
        raise ConfigError("yosida must list at least two increasing positive values")


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return parse_config(text, name=path.stem)
