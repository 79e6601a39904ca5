"""Observables sampled along trajectories and checks built on them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy.special import xlogy

from bdg.equilibrium import EquilibriumData, _pair_factor, normal_state
from bdg.model_core import (
    BdGState,
    GridSpec,
    PhysicalParams,
    compensated_sum,
    dispersion,
    inner_product,
    lattice_coupling,
    mode_eigenvalues,
)

__all__ = [
    "TimeSeries",
    "SeriesRecorder",
    "order_parameter",
    "scaled_pair_norm",
    "entropy",
    "free_energy",
    "linearized_energy",
    "energy_error",
    "energy_condition",
    "decay_fit",
    "nondecay_check",
    "interference_check",
    "INTERFERENCE_THRESHOLD",
]

INTERFERENCE_THRESHOLD = 0.05


@dataclass
class TimeSeries:
    """Sampled diagnostics of one run.

    ``delta_f`` is the relative drift of the conserved energy: the free
    energy for the nonlinear systems and the quadratic form conserved by the
    linearized flow (see :func:`linearized_energy`) for ``linear`` runs.
    """

    t: np.ndarray
    norm_scaled: np.ndarray
    psi: np.ndarray
    delta_f: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.t)

    @property
    def abs_psi(self) -> np.ndarray:
        return np.abs(self.psi)

    @property
    def kind(self) -> Optional[str]:
        return self.metadata.get("kind")

    def check(self):
        """Raise ``ValueError`` unless the series invariants hold."""
        if len(self.t) == 0:
            return
        if self.t[0] != 0.0 or self.delta_f[0] != 0.0:
            raise ValueError("first row must have t = 0 and delta_f = 0")
        if np.any(np.diff(self.t) <= 0):
            raise ValueError("sample times must increase strictly")
        if np.any(self.delta_f < 0):
            raise ValueError("delta_f must be non-negative")


def order_parameter(alpha, alpha_star, h) -> complex:
    """``(1/h) <alpha_star | alpha>``."""
    return inner_product(alpha_star, alpha) / h


def scaled_pair_norm(alpha, h) -> float:
    """``(1/h**2) sum_k |alpha(k)|**2``."""
    alpha = np.asarray(alpha, dtype=np.complex128)
    return compensated_sum(alpha.real**2 + alpha.imag**2) / (h * h)


def entropy(state: BdGState) -> float:
    """Von Neumann entropy ``-sum_k tr Gamma log Gamma`` from the eigenvalues."""
    lam1, lam2 = mode_eigenvalues(state)
    lam1 = np.clip(lam1, 0.0, 1.0)
    lam2 = np.clip(lam2, 0.0, 1.0)
    return -compensated_sum(xlogy(lam1, lam1) + xlogy(lam2, lam2))


def free_energy(state: BdGState, params: PhysicalParams, grid: GridSpec, T) -> float:
    """Discrete free energy ``sum eps gamma - g |sum alpha|**2 - T S``.

    The pairing term is the contact potential averaged over the torus,
    ``-g |alpha(x=0)|**2`` with ``g = lattice_coupling``; its gradient is the
    off-diagonal entry of the mean-field Hamiltonian used by the dynamics.
    """
    eps = dispersion(grid, params)
    kinetic = compensated_sum(eps * state.gamma)
    pairing = -lattice_coupling(params, grid) * abs(compensated_sum(state.alpha)) ** 2
    return kinetic + pairing - T * entropy(state)


def linearized_energy(alpha, initial: EquilibriumData) -> float:
    """Quadratic form ``sum |alpha|**2 / q - g |sum alpha|**2`` with
    ``q = tanh(E/2T)/E`` at the initial ``(delta0, T)``.

    The linearized flow conserves it exactly, so it plays the role of the
    free energy for ``linear`` runs.
    """
    eps = initial.scalars.eps
    q = _pair_factor(np.sqrt(eps * eps + initial.delta0**2), initial.t_sim)
    alpha = np.asarray(alpha, dtype=np.complex128)
    g = lattice_coupling(initial.params, initial.grid)
    return compensated_sum((alpha.real**2 + alpha.imag**2) / q) - g * abs(compensated_sum(alpha)) ** 2


def energy_error(f0, f) -> float:
    """Relative drift ``|(F - F0) / F0|``; the absolute drift ``|F|`` when ``F0 = 0``."""
    if f0 == 0:
        return abs(f)
    return abs((f - f0) / f0)


def energy_condition(initial: EquilibriumData) -> float:
    """``(F(Gamma0) - F(Gamma_N)) / h**4`` at the simulation temperature."""
    params, grid, T = initial.params, initial.grid, initial.t_sim
    f0 = free_energy(initial.initial_state, params, grid, T)
    fn = free_energy(normal_state(T, params, grid), params, grid, T)
    return (f0 - fn) / params.h**4


class SeriesRecorder:
    """Sampling sink that turns states into :class:`TimeSeries` rows."""

    def __init__(self, initial: EquilibriumData, kind, config=None):
        from bdg.dynamics import SystemKind

        self.initial = initial
        self.kind = SystemKind(kind)
        self.h = initial.params.h
        self._energy = self._linear_energy if self.kind is SystemKind.LINEAR else self._free_energy
        self.f0 = self._energy(initial.initial_state)
        self.rows = []
        self.metadata = dict(initial.metadata())
        self.metadata["kind"] = self.kind.value
        if config is not None:
            self.metadata.update(tau=config.tau, t_end=config.t_end, sample_stride=config.sample_stride)

    def _free_energy(self, state):
        return free_energy(state, self.initial.params, self.initial.grid, self.initial.t_sim)

    def _linear_energy(self, state):
        return linearized_energy(state.alpha, self.initial)

    def __call__(self, t, state: BdGState):
        f = self._energy(state)
        self.rows.append((
            float(t),
            scaled_pair_norm(state.alpha, self.h),
            order_parameter(state.alpha, self.initial.alpha_star, self.h),
            energy_error(self.f0, f),
        ))

    def series(self, **extra) -> TimeSeries:
        meta = dict(self.metadata)
        meta.update(extra)
        if self.rows:
            t, norm, psi, df = (np.array(c) for c in zip(*self.rows))
        else:
            t = norm = df = np.empty(0)
            psi = np.empty(0, dtype=np.complex128)
        return TimeSeries(t=t, norm_scaled=norm, psi=psi.astype(np.complex128), delta_f=df, metadata=meta)


def decay_fit(series: TimeSeries, window: Optional[Tuple[float, float]] = None):
    """Least-squares fit of ``log|psi_t|`` against ``t``.

    Returns ``(rate, r_squared)``. The default window skips the first tenth of
    the run.
    """
    t = np.asarray(series.t)
    if window is None:
        window = (0.1 * t[-1], t[-1])
    mask = (t >= window[0]) & (t <= window[1])
    y = np.abs(series.psi[mask])
    if mask.sum() < 3:
        raise ValueError("fewer than three samples in the fit window")
    if np.any(y <= 0):
        raise ValueError("|psi| must be positive on the fit window")
    x = t[mask]
    logy = np.log(y)
    slope, intercept = np.polyfit(x, logy, 1)
    resid = logy - (slope * x + intercept)
    ss_tot = float(np.sum((logy - logy.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), r2


def nondecay_check(series: TimeSeries, h=None):
    """``(max_t ||psi_t| - |psi_0|| / sqrt(h), min_t |psi_t| / |psi_0|)``."""
    h = series.metadata["h"] if h is None else h
    a = series.abs_psi
    if a[0] == 0:
        raise ValueError("|psi_0| = 0: the ratio is undefined")
    return float(np.max(np.abs(a - a[0])) / math.sqrt(h)), float(np.min(a) / a[0])


def interference_check(small: TimeSeries, big: TimeSeries, threshold=INTERFERENCE_THRESHOLD) -> float:
    """Earliest sample time where the normalized curves ``|psi_t| / |psi_0|``
    of the two runs differ by more than ``threshold``; ``inf`` if they never do.

    ``psi`` is a sum over all retained modes and so grows with ``N``; each
    run is therefore normalized by its own initial value. Both series must
    share their sample times and ``h``.
    """
    if len(small.t) != len(big.t) or not np.allclose(small.t, big.t, rtol=1e-12, atol=0):
        raise ValueError("incompatible series: sample times differ")
    for key in ("h", "M"):
        if key in small.metadata and key in big.metadata and small.metadata[key] != big.metadata[key]:
            raise ValueError(f"incompatible series: {key} differs")
    a, b = small.abs_psi, big.abs_psi
    if a[0] == 0 or b[0] == 0:
        raise ValueError("|psi_0| = 0: the normalized curves are undefined")
    dev = np.abs(a / a[0] - b / b[0])
    hit = np.nonzero(dev > threshold)[0]
    return float(small.t[hit[0]]) if hit.size else math.inf


def is_non_monotone(values, rel_tol=1e-3) -> bool:
    """True when ``values`` rises by more than ``rel_tol`` of its range after its minimum."""
    values = np.asarray(values)
    i = int(np.argmin(values))
    span = float(values.max() - values.min())
    return i < len(values) - 1 and float(values[i:].max() - values[i]) > rel_tol * span
