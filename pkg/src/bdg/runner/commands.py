"""Experiment commands. Each returns a result object and writes its artifacts
below ``config.out``; none of them print."""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from bdg.diagnostics import TimeSeries, interference_check
from bdg.dynamics import IntegrationBlowup, StepperConfig, evolve
from bdg.equilibrium import EquilibriumData, gap_lhs_sum, gap_table, solve_critical_temperature, standard_setup
from bdg.model_core import GridSpec, PhysicalParams
from bdg.runner import output, svg
from bdg.runner.config import N_CAP, PRESETS, RunConfig

logger = logging.getLogger(__name__)

PLOTS = {
    "norm": ("norm_scaled", "scaled pair norm", False),
    "psi": ("abs_psi", "|psi_t|", False),
    "delta_f": ("delta_f", "relative free energy drift", True),
}


def n_threads() -> int:
    """Parallel sweep width from ``BDG_THREADS`` (default 1)."""
    raw = os.environ.get("BDG_THREADS", "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"BDG_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ValueError(f"BDG_THREADS must be a positive integer, got {raw!r}")
    return n


def _map(fn, items):
    items = list(items)
    width = min(n_threads(), max(1, len(items)))
    if width == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=width) as pool:
        return list(pool.map(fn, items))


@dataclass
class TcReport:
    t_c: float
    residual: float
    grid: GridSpec


def cmd_tc(config: RunConfig) -> TcReport:
    params, grid = config.physical(), config.grid()
    t_c = solve_critical_temperature(params, grid)
    residual = gap_lhs_sum(t_c, 0.0, params, grid) - 2.0 * math.pi / params.a
    return TcReport(t_c=t_c, residual=residual, grid=grid)


def cmd_gap_table(config: RunConfig, h_list: Sequence[float], name="gap_table", logy=True):
    """Rows ``(h, delta0)`` plus CSV and semilog SVG."""
    base = config.physical()
    rows = _map(lambda h: gap_table([h], base, config.n_period, config.m_density)[0], h_list)
    meta = config.metadata()
    meta.pop("h")
    meta["h_list"] = " ".join(output.fmt(float(h)) for h in h_list)
    output.write_table(config.out / f"{name}.csv", ("h", "delta0"), rows, meta)
    svg.line_plot(config.out / f"{name}.svg", [("delta0", [r[0] for r in rows], [r[1] for r in rows])],
                  title="gap versus h", xlabel="h", ylabel="delta0", logy=logy)
    return rows


@dataclass
class EvolveResult:
    setup: EquilibriumData
    stepper: StepperConfig
    series: Dict[str, TimeSeries] = field(default_factory=dict)
    errors: Dict[str, str] = field(default_factory=dict)
    paths: List[Path] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors


def _run_kind(setup, kind, stepper):
    try:
        return kind, evolve(setup, kind, stepper), None
    except IntegrationBlowup as exc:
        return kind, exc.series, exc


def cmd_evolve(config: RunConfig, plots: Sequence[str] = tuple(PLOTS), svg_name=None,
               logy: Optional[bool] = None) -> EvolveResult:
    """One shared setup, one run per kind, ``series_<kind>.csv`` and SVG overlays.

    A blowup leaves a partial CSV and ``error_<kind>.json``; the other kinds
    still run.
    """
    setup = standard_setup(config.physical(), config.grid())
    stepper = config.stepper(setup.grid)
    result = EvolveResult(setup=setup, stepper=stepper)
    meta = config.metadata()
    for kind, series, exc in _map(lambda k: _run_kind(setup, k, stepper), config.kinds):
        if series is not None:
            result.series[kind] = series
            result.paths.append(output.write_series(config.out / f"series_{kind}.csv", series, meta))
        if exc is not None:
            result.errors[kind] = str(exc)
            result.paths.append(output.write_error(config.out / f"error_{kind}.json", kind, exc, meta))
            logger.error("%s run aborted: %s", kind, exc)
    for plot in plots:
        column, label, default_log = PLOTS[plot]
        if svg_name is None:
            target = config.out / f"{plot}.svg"
        else:
            target = config.out / (f"{svg_name}.svg" if len(plots) == 1 else f"{svg_name}_{plot}.svg")
        curves = []
        for kind, s in result.series.items():
            y = s.abs_psi if column == "abs_psi" else getattr(s, column)
            curves.append((kind, s.t, y))
        result.paths.append(svg.line_plot(
            target, curves, title=f"{label}, h={config.h:g}, N={config.n_period}", xlabel="t",
            ylabel=label, logy=default_log if logy is None else logy))
    return result


def cmd_convergence_m(config: RunConfig, m_list: Sequence[int], name="convergence_m"):
    """Rows ``(M, T_c)`` for the configured ``h`` and ``N``."""
    params = config.physical()

    def one(m):
        return int(m), solve_critical_temperature(params, GridSpec(config.n_period, int(m), config.h))

    rows = _map(one, m_list)
    meta = config.metadata()
    meta.pop("m_density")
    meta["m_list"] = " ".join(str(int(m)) for m in m_list)
    output.write_table(config.out / f"{name}.csv", ("M", "T_c"), rows, meta)
    svg.line_plot(config.out / f"{name}.svg", [("T_c", [r[0] for r in rows], [r[1] for r in rows])],
                  title=f"T_c versus M, h={config.h:g}, N={config.n_period}", xlabel="M", ylabel="T_c")
    return rows


@dataclass
class CheckNReport:
    adequate_n: Optional[int]
    pairs: List[tuple] = field(default_factory=list)
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.adequate_n is not None


def _aligned_steppers(config: RunConfig, small: GridSpec, big: GridSpec):
    """Step configs for ``N`` and ``2N`` whose sample times coincide exactly."""
    a = config.stepper(small)
    ratio = big.k_modes // small.k_modes
    b = StepperConfig(tau=a.tau / ratio, t_end=a.t_end, sample_stride=a.sample_stride * ratio)
    return a, b


def cmd_check_n(config: RunConfig, threshold=0.05, n_cap=N_CAP) -> CheckNReport:
    """Double ``N`` until the runs at ``N`` and ``2N`` never diverge.

    The adequate ``N`` is the smaller member of the first agreeing pair.
    Reaching ``2N > n_cap`` without agreement is reported as a failure.
    """
    kind = "full" if config.kind == "both" else config.kind
    params = config.physical()
    report = CheckNReport(adequate_n=None)
    n = config.n_period
    cache = {}

    def series_for(n_, stepper):
        if n_ not in cache:
            setup = standard_setup(params, GridSpec(n_, config.m_density, config.h))
            cache[n_] = evolve(setup, kind, stepper)
        return cache[n_]

    while 2 * n <= n_cap:
        small, big = GridSpec(n, config.m_density, config.h), GridSpec(2 * n, config.m_density, config.h)
        st_small, st_big = _aligned_steppers(config, small, big)
        if n in cache and not np.array_equal(cache[n].t, st_small.sample_steps() * st_small.tau):
            del cache[n]
        s_small, s_big = _map(lambda p: series_for(*p), [(n, st_small), (2 * n, st_big)])
        t_div = interference_check(s_small, s_big, threshold)
        report.pairs.append((n, 2 * n, t_div))
        if math.isinf(t_div):
            report.adequate_n = n
            report.message = f"adequate N = {n}"
            break
        n *= 2
    else:
        report.message = f"no adequate N up to the cap N = {n_cap}"
    meta = config.metadata()
    meta.update(kind=kind, threshold=threshold, n_cap=n_cap,
                adequate_n=report.adequate_n if report.ok else "none")
    output.write_table(config.out / "check_n.csv", ("N", "N2", "divergence_time"), report.pairs, meta)
    curves = [(f"N={k}", s.t, s.abs_psi / s.abs_psi[0]) for k, s in sorted(cache.items())]
    if curves:
        svg.line_plot(config.out / "check_n.svg", curves, title=f"|psi_t|/|psi_0|, h={config.h:g}",
                      xlabel="t", ylabel="|psi_t| / |psi_0|")
    return report


def cmd_figure(name: str, base: Optional[RunConfig] = None):
    """Run the preset ``name`` (``fig1`` ... ``fig9``) into ``base.out / name``."""
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; choose from {', '.join(sorted(PRESETS))}")
    preset = PRESETS[name]
    base = base or RunConfig()
    config = base.replace(out=base.out / name, **preset.config)
    if preset.command == "gap-table":
        return cmd_gap_table(config, preset.h_list, name=name, logy=preset.logy)
    if preset.command == "convergence-m":
        return cmd_convergence_m(config, preset.m_list, name=name)
    return cmd_evolve(config, plots=preset.plots, svg_name=name, logy=preset.logy)
