"""Named experiment suites driven by an :class:`ExperimentConfig`."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import convolution as conv
from . import regularity as reg
from .config import ExperimentConfig
from .grid import fmt
from .kernel import KernelError, check_complete_positivity, require_finite_origin
from .resolvent import (
    KNOWN_COMPLETELY_POSITIVE,
    build_resolvent_family,
    commutes_with_A,
    resolvent_residual,
    yosida_resolvent_convergence,
)
from .spectral_operator import semigroup_norm_bounds, yosida
from .wiener import HilbertPath, covariance_check, sample_ensemble, sample_seeds

# Fraction of seeds that must show a monotone refinement trend.
SEED_QUORUM = 0.9
RESIDUAL_TOL = 1e-8


class PreconditionError(RuntimeError):
    """The configured objects do not meet an experiment's requirements."""


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""

    def as_dict(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed), "detail": self.detail}


@dataclass
class Outcome:
    experiment: str
    checks: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)
    text: list = field(default_factory=list)
    data: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str, passed, detail: str = ""):
        self.checks.append(Check(name, bool(passed), detail))


def _csv(header, rows) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return out.getvalue()


def _quorum(flags) -> tuple[bool, str]:
    flags = np.asarray(flags, dtype=bool)
    need = math.ceil(SEED_QUORUM * len(flags))
    return int(flags.sum()) >= need, f"{int(flags.sum())}/{len(flags)} seeds (need {need})"


def _monotone(rows: np.ndarray) -> np.ndarray:
    """Per row, strictly decreasing along the last axis."""
    return np.all(np.diff(rows, axis=-1) < 0, axis=-1)


def _require_reformulation(cfg: ExperimentConfig) -> float:
    try:
        c = require_finite_origin(cfg.kernel)
    except KernelError as exc:
        raise PreconditionError(f"{exc}; the reformulated route needs a finite a(0)") from None
    if c == 0.0:
        raise PreconditionError("a(0) = 0; the reformulated route needs a nonzero a(0)")
    return c


# -- experiments -----------------------------------------------------------


def complete_positivity(cfg: ExperimentConfig) -> Outcome:
    out = Outcome("complete-positivity")
    try:
        report = check_complete_positivity(cfg.kernel, cfg.mus, cfg.finest)
    except KernelError as exc:
        raise PreconditionError(str(exc)) from None
    out.tables["positivity.csv"] = _csv(
        ["steps", "mu", "min_s", "min_r", "status"],
        [(r.steps, r.mu, r.min_s, r.min_r, "ok" if r.passed else "negative") for r in report.rows],
    )
    out.text.append(report.to_text())
    out.check("s and r nonnegative on two resolutions", report.passed, f"{len(report.negative)} negative rows")
    return out


def resolvent_build(cfg: ExperimentConfig) -> Outcome:
    out = Outcome("resolvent-build")
    grid = cfg.finest
    fam = build_resolvent_family(cfg.operator, cfg.kernel, grid)
    res = resolvent_residual(fam)
    out.tables["resolvent.csv"] = fam.to_csv()
    out.check("discrete resolvent equation residual", res <= RESIDUAL_TOL, f"{res:.3e} <= {RESIDUAL_TOL:g}")
    out.check("S(t) commutes with A", commutes_with_A(fam))
    vals = fam.values
    if cfg.kernel.kind in KNOWN_COMPLETELY_POSITIVE:
        lo, hi = float(vals.min()), float(vals.max())
        out.check("0 <= s_k(t) <= 1", lo >= -1e-10 and hi <= 1 + 1e-10, f"min {lo:.3e}, max {hi:.6f}")
    if cfg.kernel.kind == "constant":
        err = float(np.abs(vals - np.exp(-np.outer(fam.eigenvalues, grid.points))).max())
        out.check("constant kernel gives the semigroup", err <= 1e-4, f"max error {err:.3e}")
    rows = []
    for g in cfg.gammas:
        b = semigroup_norm_bounds(cfg.operator, grid, g)
        rows.extend((g, name, value, bound) for name, value, bound in b.rows())
        out.check(f"analytic semigroup estimates (gamma={g:g})", b.within(1e-12))
    out.tables["semigroup_bounds.csv"] = _csv(["gamma", "quantity", "grid_sup", "analytic"], rows)
    out.text.append(f"resolvent residual {res:.3e}; max ||S(t)|| = {float(fam.norms().max()):.6f}")
    return out


def yosida_convergence(cfg: ExperimentConfig) -> Outcome:
    out = Outcome("yosida-convergence")
    rep = yosida_resolvent_convergence(cfg.operator, cfg.kernel, cfg.finest, cfg.yosida)
    ratios = [1.0] + rep.ratios
    out.tables["yosida.csv"] = _csv(
        ["n", "sup_diff", "ratio", "M_hat", "w0_hat"],
        [(n, d, r, m, w) for n, d, r, m, w in zip(rep.n_list, rep.sup_diff, ratios, rep.growth_M, rep.growth_w0)],
    )
    out.text.append(rep.to_text())
    out.check("sup differences strictly decreasing", rep.strictly_decreasing)
    ok = all(5.0 <= r <= 15.0 for r in rep.ratios)
    out.check("consecutive ratios in [5, 15]", ok, ", ".join(f"{r:.3f}" for r in rep.ratios))
    out.data["sup_diff"] = rep.sup_diff
    return out


def convolution_compare(cfg: ExperimentConfig) -> Outcome:
    out = Outcome("convolution-compare")
    _require_reformulation(cfg)
    seeds = cfg.seed_list
    table = []
    for grid in cfg.grids():
        noise = sample_seeds(cfg.covariance, grid, seeds)
        fam = build_resolvent_family(cfg.operator, cfg.kernel, grid)
        direct = conv.convolve_direct(fam, noise)
        reform, _, _ = conv.convolve_reformulated(cfg.operator, cfg.kernel, noise)
        table.append(np.atleast_1d(conv.sup_discrepancy(direct, reform)))
    disc = np.array(table).T
    rep = conv.DiscrepancyReport(cfg.kernel.label(), cfg.operator.dim, cfg.horizon, seeds, [g.steps for g in cfg.grids()], disc)
    out.text.append(rep.to_text())
    out.data["median_discrepancy"] = {str(n): float(m) for n, m in zip(rep.steps, rep.medians)}
    out.tables["discrepancy.csv"] = _csv(["seed"] + [f"N={n}" for n in rep.steps], [[s, *row] for s, row in zip(seeds, disc)])
    first = HilbertPath(direct.grid, direct.w_s.coeffs[0])
    out.tables["ws_direct.csv"] = first.to_csv()
    out.tables["ws_reformulated.csv"] = HilbertPath(reform.grid, reform.w_s.coeffs[0]).to_csv()
    out.tables["noise.csv"] = HilbertPath(noise.grid, noise.coeffs[0]).to_csv()
    if len(rep.steps) >= 2:
        ok, detail = _quorum(rep.decreasing)
        out.check("per-seed discrepancy strictly decreasing in N", ok, detail)
    if len(rep.steps) >= 3:
        lo, hi = rep.medians[-1], rep.medians[0]
        out.check("median discrepancy at finest <= half of coarsest", lo <= 0.5 * hi, f"{lo:.3e} vs {hi:.3e}")
    cov = covariance_check(cfg.covariance, cfg.grids()[0], cfg.ensemble, cfg.seed)
    out.text.append(cov.to_text())
    out.tables["covariance.csv"] = _csv(
        ["t", "estimate", "expected", "std_error", "z"],
        zip(cov.times, cov.estimates, cov.expected, cov.std_errors, cov.z_scores),
    )
    out.check("E|W(t)|^2 = t Tr Q within 3 standard errors", np.all(np.abs(cov.z_scores) <= 3.0))
    out.check(
        "mode cross-covariances within 3 standard errors of 0",
        np.all(np.abs(cov.cross_z) <= 3.0),
        f"max |z| = {np.max(np.abs(cov.cross_z)) if cov.cross_z.size else 0.0:.3f}",
    )
    return out


def identities(cfg: ExperimentConfig) -> Outcome:
    out = Outcome("identities")
    op_n = yosida(cfg.operator, cfg.identity_n)
    seeds = cfg.seed_list
    mild, weak = [], []
    for grid in cfg.grids():
        noise = sample_seeds(cfg.covariance, grid, seeds)
        fam_n = build_resolvent_family(op_n, cfg.kernel, grid)
        ws_n = conv.convolve_direct(fam_n, noise)
        mild.append(np.atleast_1d(conv.mild_identity_residuals(op_n, cfg.kernel, ws_n, noise)))
        fam = build_resolvent_family(cfg.operator, cfg.kernel, grid)
        ws = conv.convolve_direct(fam, noise)
        weak.append(max(conv.weak_identity_residual(cfg.operator, cfg.kernel, ws, noise, m) for m in range(cfg.operator.dim)))
    mild = np.array(mild).T
    steps = [g.steps for g in cfg.grids()]
    out.tables["identity_residuals.csv"] = _csv(["seed"] + [f"N={n}" for n in steps], [[s, *row] for s, row in zip(seeds, mild)])
    out.tables["weak_residuals.csv"] = _csv(["steps", "max_weak_residual"], zip(steps, weak))
    if len(steps) >= 2:
        ratios = mild[:, :-1] / mild[:, 1:]
        ok = np.all((ratios >= 1.4) & (ratios <= 2.6))
        out.check("bounded-operator identity residual halves with dt (+-30%)", ok, f"ratios in [{ratios.min():.3f}, {ratios.max():.3f}]")
        out.check("tested identity residual decreases with dt", all(b < a for a, b in zip(weak, weak[1:])), ", ".join(f"{w:.3e}" for w in weak))
    dres = []
    for grid in cfg.grids():
        f = np.zeros((cfg.operator.dim, len(grid)))
        f[0] = grid.points
        forcing = HilbertPath(grid, f)
        state = conv.exponential_euler(cfg.operator, forcing)
        zero = conv.MemoryTerm(HilbertPath.zeros(grid, cfg.operator.dim))
        dres.append(conv.cauchy_derivative_check(state, cfg.operator, zero, forcing))
    out.tables["cauchy_residuals.csv"] = _csv(["steps", "residual"], zip(steps, dres))
    if len(steps) >= 2:
        r = [a / b for a, b in zip(dres, dres[1:])]
        out.check("Cauchy derivative residual O(dt) for smooth forcing", all(1.4 <= x <= 2.6 for x in r), ", ".join(f"{x:.3f}" for x in r))
    out.text.append("identity residual medians per level: " + ", ".join(f"{m:.3e}" for m in np.median(mild, axis=0)))
    return out


def regularity(cfg: ExperimentConfig) -> Outcome:
    out = Outcome("regularity")
    seeds = cfg.seed_list
    op, q = cfg.operator, cfg.covariance
    try:
        _require_reformulation(cfg)
        with_y = True
    except PreconditionError as exc:
        with_y = False
        out.text.append(f"Y-based norms skipped: {exc}")
    incs, frac = [], {g: [] for g in cfg.gammas}
    mhat, maxreg, first_paths = {g: [] for g in cfg.gammas}, [], []
    for grid in cfg.grids():
        noise = sample_seeds(q, grid, seeds)
        fam = build_resolvent_family(op, cfg.kernel, grid)
        ws = conv.convolve_direct(fam, noise).w_s
        first_paths.append(ws.member(0))
        incs.append(reg.max_increments(ws))
        for g in cfg.gammas:
            rep = reg.spatial_regularity(op, g, ws, q)
            if not rep.extra["finite"]:
                out.check(f"|(-A)^gamma W^S| finite (gamma={g:g}, N={grid.steps})", False)
            frac[g].append(reg.scalar_max_increments(rep.extra["values"]))
        if with_y:
            _, state, mem = conv.convolve_reformulated(op, cfg.kernel, noise)
            forcing = HilbertPath(grid, mem.w_tilde.coeffs + noise.coeffs)
            for g in cfg.gammas:
                mhat[g].append(reg.interpolation_norms(state.y, op, g, forcing).extra["M_hat_members"])
            mr = reg.maximal_regularity_norms(state.y, op)
            maxreg.append(mr.extra["W12_members"] + mr.extra["AY_members"])
    steps = [g.steps for g in cfg.grids()]
    incs = np.array(incs).T
    rows = [[s, *row] for s, row in zip(seeds, incs)]
    out.tables["modulus.csv"] = _csv(["seed"] + [f"N={n}" for n in steps], rows)
    if len(steps) >= 2:
        pm = reg.path_modulus(first_paths)
        out.text.append(f"seed {seeds[0]}:\n" + pm.to_text())
        ok, detail = _quorum(_monotone(incs))
        out.check("max increment of W^S decreases under refinement", ok, detail)
    spatial_rows = []
    for g in cfg.gammas:
        arr = np.array(frac[g]).T
        spatial_rows += [[g, s, *row] for s, row in zip(seeds, arr)]
        if len(steps) >= 2:
            ok, detail = _quorum(_monotone(arr))
            out.check(f"max increment of |(-A)^gamma W^S| decreases (gamma={g:g})", ok, detail)
    out.tables["spatial.csv"] = _csv(["gamma", "seed"] + [f"N={n}" for n in steps], spatial_rows)
    ens_grid = cfg.grids()[0]
    ens = sample_ensemble(q, ens_grid, cfg.seed, cfg.ensemble)
    ws_ens = conv.convolve_direct(build_resolvent_family(op, cfg.kernel, ens_grid), ens).w_s
    for g in cfg.gammas:
        rep = reg.spatial_regularity(op, g, ws_ens, q)
        frac_ok = rep.extra["gaussian_pass_fraction"]
        out.check(f"per-mode Gaussianity at 3 sigma (gamma={g:g})", frac_ok >= 0.95, f"{frac_ok:.1%} of modes pass")
        out.text.append(f"gamma={g:g}: partial sums of q_k lambda_k^(2 gamma): " + ", ".join(f"{v:.4g}" for v in rep.extra["partial_sums"]))
    if with_y:
        norm_rows = []
        for g in cfg.gammas:
            arr = np.array(mhat[g]).T
            norm_rows += [["M_hat", g, s, *row] for s, row in zip(seeds, arr)]
            if len(steps) >= 2:
                var = np.abs(arr[:, -1] / arr[:, -2] - 1.0)
                out.check(f"M_hat varies < 20% between the two finest grids (gamma={g:g})", np.all(var < 0.2), f"max {var.max():.3%}")
        arr = np.array(maxreg).T
        norm_rows += [["W12+AY", "", s, *row] for s, row in zip(seeds, arr)]
        if len(steps) >= 2:
            var = np.abs(arr[:, -1] / arr[:, -2] - 1.0)
            out.check("|Y|_W12 + |AY|_L2 varies < 20% between the two finest grids", np.all(var < 0.2), f"max {var.max():.3%}")
        out.tables["norms.csv"] = _csv(["quantity", "gamma", "seed"] + [f"N={n}" for n in steps], norm_rows)
    return out


SUITES = {
    "complete-positivity": complete_positivity,
    "resolvent-build": resolvent_build,
    "yosida-convergence": yosida_convergence,
    "convolution-compare": convolution_compare,
    "identities": identities,
    "regularity": regularity,
}

DESCRIPTIONS = {
    "complete-positivity": (
        "Solves s + mu (a * s) = 1 and r + mu (a * r) = a for every configured mu >= 0 on the\n"
        "finest grid and on one further halving of the step, and checks that both solutions\n"
        "stay nonnegative (tolerance 1e-10 relative to max|s|).  This is the defining property\n"
        "of a completely positive kernel."
    ),
    "resolvent-build": (
        "Builds the resolvent family S(t) mode by mode from s_k + lambda_k (a * s_k) = 1,\n"
        "checks the discrete equation residual, that S(t) commutes with A, that 0 <= s_k <= 1\n"
        "for completely positive kernels, and that a constant kernel reproduces the semigroup\n"
        "e^(-lambda_k t).  Also checks the analytic-semigroup bounds ||T(t)|| <= 1,\n"
        "t ||A T(t)|| <= 1/e and t^g ||(-A)^g T(t)|| <= (g/e)^g on the grid."
    ),
    "yosida-convergence": (
        "Replaces A by its Yosida approximations A_n = n A (n - A)^(-1) for the configured n,\n"
        "rebuilds the resolvent family for each, and checks that sup |S_n(t) - S(t)| decreases\n"
        "strictly with consecutive ratios in [5, 15] (an empirical O(1/n) rate).  Reports the\n"
        "empirical growth constants M, w0 in ||S_n(t)|| <= M e^(w0 t)."
    ),
    "convolution-compare": (
        "Computes the stochastic convolution W^S(t) = int S(t - s) dW(s) two ways on coupled\n"
        "noise at every refinement level: directly from the resolvent family (left-point Ito\n"
        "sums) and through the Cauchy problem Y' = c A Y + Wt + c W, W^S = A Y + W with the\n"
        "memory forcing Wt = int a'(t - s) W^S(s) ds.  Checks that the per-seed discrepancy\n"
        "decreases under refinement and that the Q-Wiener covariance E|W(t)|^2 = t Tr Q holds.\n"
        "Needs a finite, nonzero a(0)."
    ),
    "identities": (
        "Checks the identities satisfied by W^S: for the bounded Yosida operator,\n"
        "W^S - a * (A_n W^S) = W with residual halving as dt halves; the tested identity\n"
        "<W^S, e_k> + lambda_k a * <W^S, e_k> = <W, e_k> for every mode; and the Cauchy\n"
        "problem derivative residual for a smooth forcing."
    ),
    "regularity": (
        "Regularity diagnostics on coupled refinements: continuity of W^S (max increment\n"
        "decreases; the log-log slope is printed as an empirical diagnostic only), the path\n"
        "|(-A)^gamma W^S(t)| and per-mode Gaussianity of (-A)^gamma W^S(T), the ratio M_hat\n"
        "of the W^{gamma,2} and L^2(D_A(gamma,2)) norms of Y to |W + Wt|_L2, and the\n"
        "maximal-regularity norms |Y|_W12 and |AY|_L2, all checked for refinement stability."
    ),
    "all": "Runs every experiment above in order on the same configuration.",
}


def run_suite(name: str, cfg: ExperimentConfig) -> list[Outcome]:
    names = list(SUITES) if name == "all" else [name]
    outcomes = []
    for n in names:
        try:
            outcomes.append(SUITES[n](cfg))
        except PreconditionError as exc:
            if name != "all":
                raise
            o = Outcome(n)
            o.check("precondition", False, str(exc))
            outcomes.append(o)
    return outcomes
