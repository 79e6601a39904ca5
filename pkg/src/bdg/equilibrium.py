"""Critical temperature, gap and the initial states built from them."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Tuple

import numpy as np
from scipy.optimize import bisect
from scipy.special import expit

from bdg._validation import check_positive
from bdg.model_core import (
    BdGState,
    GridSpec,
    PhysicalParams,
    SpectralScalars,
    compensated_sum,
    dispersion,
)

__all__ = [
    "BracketError",
    "GapSolution",
    "EquilibriumData",
    "gap_lhs_sum",
    "solve_critical_temperature",
    "solve_gap",
    "gap_table",
    "build_initial_state",
    "build_reference_pair_state",
    "normal_state",
    "standard_setup",
    "custom_setup",
]

T_BRACKET = (1e-4, 10.0)
XTOL = 1e-10


class BracketError(ValueError):
    """The bisection bracket does not enclose a sign change."""

    def __init__(self, lo, hi, f_lo, f_hi, what="root"):
        self.lo, self.hi, self.f_lo, self.f_hi = lo, hi, f_lo, f_hi
        super().__init__(
            f"no sign change for {what} in [{lo:g}, {hi:g}]: "
            f"residuals {f_lo:.6g} and {f_hi:.6g}"
        )


def _pair_factor(energy: np.ndarray, T: float) -> np.ndarray:
    """``tanh(E / 2T) / E`` with the value ``1/(2T)`` at ``E = 0``."""
    out = np.full_like(energy, 1.0 / (2.0 * T))
    nz = energy != 0.0
    out[nz] = np.tanh(energy[nz] / (2.0 * T)) / energy[nz]
    return out


def gap_lhs_sum(T, delta, params: PhysicalParams, grid: GridSpec) -> float:
    """Riemann sum of ``tanh(E/2T)/E``, ``E = sqrt(eps**2 + delta**2)``.

    Each mode is weighted by the momentum spacing ``h/N`` so that the sum
    approximates the momentum integral of the continuum gap equation.
    """
    T = check_positive(T, "T")
    if delta < 0:
        raise ValueError(f"`delta` must be non-negative, got {delta!r}.")
    eps = dispersion(grid, params)
    energy = np.sqrt(eps * eps + float(delta) ** 2)
    return grid.spacing * compensated_sum(_pair_factor(energy, T))


def _target(params: PhysicalParams) -> float:
    if params.a <= 0:
        raise ValueError("the gap equation needs an attractive coupling a > 0")
    return 2.0 * math.pi / params.a


def _bisect(f, lo, hi, what):
    f_lo, f_hi = f(lo), f(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if np.sign(f_lo) == np.sign(f_hi):
        raise BracketError(lo, hi, f_lo, f_hi, what)
    return bisect(f, lo, hi, xtol=XTOL, maxiter=500)


def solve_critical_temperature(params: PhysicalParams, grid: GridSpec, bracket=T_BRACKET) -> float:
    """Temperature at which the linearized gap equation has a solution.

    Solves ``gap_lhs_sum(T, 0) = 2 pi / a`` by bisection; the left-hand side
    decreases monotonically in ``T``.
    """
    target = _target(params)
    lo, hi = bracket
    return _bisect(lambda T: gap_lhs_sum(T, 0.0, params, grid) - target, lo, hi, "T_c")


@dataclass(frozen=True)
class GapSolution:
    delta: float
    normal_phase: bool
    residual: float


def solve_gap(T, params: PhysicalParams, grid: GridSpec) -> GapSolution:
    """Equilibrium gap at temperature ``T``.

    Above ``T_c`` only ``delta = 0`` solves the gap equation; this is reported
    with ``normal_phase=True`` instead of raising.
    """
    T = check_positive(T, "T")
    target = _target(params)

    def f(delta):
        return gap_lhs_sum(T, delta, params, grid) - target

    f0 = f(0.0)
    if f0 <= 0.0:
        return GapSolution(delta=0.0, normal_phase=True, residual=f0)
    hi = 1.0
    while f(hi) > 0.0:
        hi *= 2.0
        if hi > 1e6:
            raise BracketError(0.0, hi, f0, f(hi), "gap")
    delta = _bisect(f, 0.0, hi, "gap")
    return GapSolution(delta=delta, normal_phase=False, residual=f(delta))


def gap_table(h_values: Iterable[float], params: Optional[PhysicalParams] = None,
              n_period=8, m_density=256) -> List[Tuple[float, float]]:
    """``(h, delta0)`` rows, with ``delta0`` the gap at ``T_c - h**2``."""
    base = params or PhysicalParams()
    rows = []
    for h in h_values:
        p = PhysicalParams(a=base.a, mu=base.mu, h=h)
        grid = GridSpec(n_period=n_period, m_density=m_density, h=p.h)
        t_c = solve_critical_temperature(p, grid)
        rows.append((p.h, solve_gap(t_c - p.h**2, p, grid).delta))
    return rows


def build_initial_state(delta0, T, params: PhysicalParams, grid: GridSpec
                        ) -> Tuple[BdGState, SpectralScalars]:
    """Thermal BCS-type state ``1 / (1 + exp(H_delta / T))``.

    Returns the state together with the per-mode scalars (dispersion,
    conserved radicand, root branch) that the reduced dynamics need.
    """
    T = check_positive(T, "T")
    if delta0 < 0:
        raise ValueError(f"`delta0` must be non-negative, got {delta0!r}.")
    eps = dispersion(grid, params)
    q = _pair_factor(np.sqrt(eps * eps + float(delta0) ** 2), T)
    if delta0 == 0:
        # same function, but the Fermi form makes Gamma_0 == Gamma_N bit for bit
        gamma = expit(-eps / T)
    else:
        gamma = 0.5 - 0.5 * eps * q
    alpha = (0.5 * float(delta0) * q).astype(np.complex128)
    state = BdGState(gamma, alpha, 0.0)
    return state, SpectralScalars.from_state(state, eps)


def build_reference_pair_state(delta, T, params: PhysicalParams, grid: GridSpec) -> np.ndarray:
    """Translation-invariant pair density ``(delta/2) tanh(E/2T)/E``."""
    T = check_positive(T, "T")
    eps = dispersion(grid, params)
    q = _pair_factor(np.sqrt(eps * eps + float(delta) ** 2), T)
    return (0.5 * float(delta) * q).astype(np.complex128)


def normal_state(T, params: PhysicalParams, grid: GridSpec) -> BdGState:
    """Fermi-Dirac occupations with vanishing pair density."""
    T = check_positive(T, "T")
    eps = dispersion(grid, params)
    return BdGState(expit(-eps / T), np.zeros(grid.k_modes, dtype=np.complex128), 0.0)


@dataclass(frozen=True, eq=False)
class EquilibriumData:
    """Everything the standard protocol fixes before time evolution.

    ``params.T`` equals ``t_sim``; ``scalars`` carries the dispersion,
    ``h_aux`` and the branch flags of the initial state.
    """

    params: PhysicalParams
    grid: GridSpec
    t_c: float
    delta0: float
    t_sim: float
    gamma0: np.ndarray
    alpha0: np.ndarray
    alpha_star: np.ndarray
    scalars: SpectralScalars

    @property
    def h_aux(self) -> np.ndarray:
        return self.scalars.h_aux

    @property
    def eps(self) -> np.ndarray:
        return self.scalars.eps

    @property
    def initial_state(self) -> BdGState:
        return BdGState(self.gamma0, self.alpha0, 0.0)

    def metadata(self) -> dict:
        return {
            "h": self.params.h,
            "a": self.params.a,
            "mu": self.params.mu,
            "N": self.grid.n_period,
            "M": self.grid.m_density,
            "K": self.grid.k_modes,
            "T_c": self.t_c,
            "Delta0": self.delta0,
            "T_sim": self.t_sim,
        }


def standard_setup(params: PhysicalParams, grid: GridSpec) -> EquilibriumData:
    """Initial data slightly above ``T_c``.

    The gap is solved at ``T_c - h**2`` and then inserted, unchanged, into a
    thermal state at ``T_c + h**2``. The same gap and temperature define the
    reference pair state, so ``alpha_star`` equals the initial pair density.
    """
    h = params.h
    t_c = solve_critical_temperature(params, grid)
    gap = solve_gap(t_c - h * h, params, grid)
    t_sim = t_c + h * h
    state, scalars = build_initial_state(gap.delta, t_sim, params, grid)
    alpha_star = build_reference_pair_state(gap.delta, t_sim, params, grid)
    return EquilibriumData(
        params=params.with_temperature(t_sim),
        grid=grid,
        t_c=t_c,
        delta0=gap.delta,
        t_sim=t_sim,
        gamma0=state.gamma,
        alpha0=state.alpha,
        alpha_star=alpha_star,
        scalars=scalars,
    )


def custom_setup(delta0, T, params: PhysicalParams, grid: GridSpec, t_c=float("nan")) -> EquilibriumData:
    """Initial data for an explicit ``(delta0, T)`` pair, bypassing the solvers."""
    state, scalars = build_initial_state(delta0, T, params, grid)
    return EquilibriumData(
        params=params.with_temperature(T),
        grid=grid,
        t_c=t_c,
        delta0=float(delta0),
        t_sim=float(T),
        gamma0=state.gamma,
        alpha0=state.alpha,
        alpha_star=build_reference_pair_state(delta0, T, params, grid),
        scalars=scalars,
    )
