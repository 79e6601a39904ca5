"""Right-hand sides, the Strang splitting stepper and trajectory drivers.

Three systems share the kinetic term ``i alpha' = 2 eps alpha + ...``:

* ``FULL`` -- occupations and pair density evolve together;
* ``REDUCED`` -- occupations are recovered from ``alpha`` through the
  conserved per-mode radicand, halving the state;
* ``LINEAR`` -- occupations frozen at their initial value.

The public ``rhs_*``/``strang_step``/``reference_evolve`` functions are
plain numpy. ``evolve`` drives the compiled kernels in :mod:`bdg._kernels`
and is checked against the numpy path in the test suite.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

import numpy as np

from bdg import _kernels
from bdg.equilibrium import EquilibriumData
from bdg.model_core import (
    BdGState,
    GridSpec,
    PhysicalParams,
    SpectralScalars,
    compensated_sum,
    dispersion,
    lattice_coupling,
)

logger = logging.getLogger(__name__)

__all__ = [
    "SystemKind",
    "StepperConfig",
    "IntegrationBlowup",
    "CLAMP_TOL",
    "rhs_full",
    "rhs_reduced",
    "rhs_linear",
    "gamma_from_alpha",
    "kinetic_flow",
    "strang_step",
    "evolve",
    "reference_evolve",
    "Propagator",
]

CLAMP_TOL = 1e-10


class SystemKind(str, Enum):
    FULL = "full"
    REDUCED = "reduced"
    LINEAR = "linear"

    # long names used in reports
    @property
    def label(self) -> str:
        return {"full": "FullCoupled", "reduced": "ReducedAlpha", "linear": "Linearized"}[self.value]


class IntegrationBlowup(RuntimeError):
    """A trajectory left the admissible set.

    Carries the offending storage position ``mode``, the time ``t`` and,
    when raised from :func:`evolve`, the ``series`` sampled so far.
    """

    def __init__(self, message, mode=None, t=None, excess=None, series=None):
        super().__init__(message)
        self.mode = mode
        self.t = t
        self.excess = excess
        self.series = series


@dataclass(frozen=True)
class StepperConfig:
    """Time step, horizon and sampling cadence.

    ``n_steps = round(t_end / tau)``; the state is sampled every
    ``sample_stride`` steps and always at the final step.
    """

    tau: float
    t_end: float
    sample_stride: int = 1

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"`tau` must be positive, got {self.tau!r}.")
        if not self.t_end >= 0:
            raise ValueError(f"`t_end` must be non-negative, got {self.t_end!r}.")
        if int(self.sample_stride) != self.sample_stride or self.sample_stride < 1:
            raise ValueError(f"`sample_stride` must be a positive integer, got {self.sample_stride!r}.")
        if self.t_end / self.tau >= 2**63:
            raise ValueError("t_end / tau overflows the step counter")
        object.__setattr__(self, "sample_stride", int(self.sample_stride))

    @classmethod
    def production(cls, grid: GridSpec, tau_factor=0.1, t_end_factor=1.0, samples=2000,
                   t_end=None) -> "StepperConfig":
        """``tau = tau_factor / K`` and ``t_end = t_end_factor / h**2``."""
        tau = tau_factor / grid.k_modes
        if t_end is None:
            t_end = t_end_factor / grid.h**2
        n_steps = int(round(t_end / tau))
        stride = max(1, -(-n_steps // max(1, int(samples))))
        return cls(tau=tau, t_end=t_end, sample_stride=stride)

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.tau))

    def sample_steps(self) -> np.ndarray:
        n = self.n_steps
        steps = np.arange(0, n + 1, self.sample_stride, dtype=np.int64)
        if steps[-1] != n:
            steps = np.append(steps, n)
        return steps


def _interaction_scalar(alpha, params, grid) -> complex:
    """``g * sum_k alpha(k)``, minus the contact convolution."""
    return lattice_coupling(params, grid) * compensated_sum(alpha)


def rhs_full(state: BdGState, params: PhysicalParams, grid: GridSpec):
    """Time derivatives ``(gamma', alpha')`` of the full coupled system.

    ``i gamma' = 2 g (conj(c) alpha - c conj(alpha))`` is purely imaginary, so
    ``gamma'`` is returned as a real vector.
    """
    eps = dispersion(grid, params)
    gc = _interaction_scalar(state.alpha, params, grid)
    alpha = state.alpha
    dgamma = 4.0 * (gc.real * alpha.imag - gc.imag * alpha.real)
    dalpha = -1j * (2.0 * eps * alpha + 2.0 * gc * (2.0 * state.gamma - 1.0))
    return dgamma, dalpha


def gamma_from_alpha(alpha, scalars: SpectralScalars, clamp_tol=CLAMP_TOL, return_excess=False,
                     gamma_degenerate=None):
    """Occupations ``1/2 + branch * sqrt(h_aux - |alpha|**2)``.

    Radicands in ``[-clamp_tol, 0)`` are clamped to zero; anything lower
    raises :class:`IntegrationBlowup` naming the first offending mode. At
    degenerate modes the sign of ``gamma - 1/2`` is not fixed by ``alpha``;
    pass their occupations as ``gamma_degenerate`` (in position order) to
    override the default branch.
    """
    alpha = np.asarray(alpha, dtype=np.complex128)
    r = scalars.h_aux - (alpha.real**2 + alpha.imag**2)
    if gamma_degenerate is not None:
        r[scalars.degenerate] = 0.0
    excess = float(max(0.0, -r.min())) if r.size else 0.0
    if excess > clamp_tol:
        mode = int(np.argmax(r < -clamp_tol))
        raise IntegrationBlowup(
            f"radicand {r[mode]:.3e} below -{clamp_tol:g} at mode position {mode}",
            mode=mode, excess=excess)
    gamma = 0.5 + scalars.branch * np.sqrt(np.maximum(r, 0.0))
    if gamma_degenerate is not None:
        gamma[scalars.degenerate] = gamma_degenerate
    if return_excess:
        return gamma, excess
    return gamma


def rhs_reduced(alpha, scalars: SpectralScalars, params: PhysicalParams, grid: GridSpec,
                clamp_tol=CLAMP_TOL, gamma_degenerate=None) -> np.ndarray:
    """``alpha'`` of the reduced system, ``i alpha' = 2 eps alpha + 4 g c branch sqrt(...)``.

    ``gamma_degenerate`` supplies the occupations of the degenerate modes,
    see :func:`gamma_from_alpha`.
    """
    alpha = np.asarray(alpha, dtype=np.complex128)
    gamma = gamma_from_alpha(alpha, scalars, clamp_tol, gamma_degenerate=gamma_degenerate)
    gc = _interaction_scalar(alpha, params, grid)
    return -1j * (2.0 * scalars.eps * alpha + 2.0 * gc * (2.0 * gamma - 1.0))


def rhs_linear(alpha, gamma0, params: PhysicalParams, grid: GridSpec) -> np.ndarray:
    """``alpha'`` with the occupations frozen at ``gamma0``."""
    alpha = np.asarray(alpha, dtype=np.complex128)
    eps = dispersion(grid, params)
    gc = _interaction_scalar(alpha, params, grid)
    return -1j * (2.0 * eps * alpha + 2.0 * gc * (2.0 * np.asarray(gamma0) - 1.0))


def kinetic_flow(alpha, tau, grid: GridSpec, params: PhysicalParams) -> np.ndarray:
    """Exact kinetic flow ``alpha(k) -> exp(-2i eps(k) tau) alpha(k)``."""
    eps = dispersion(grid, params)
    return np.exp(-2j * eps * tau) * np.asarray(alpha, dtype=np.complex128)


def _rk4(f, y, tau):
    k1 = f(y)
    k2 = f(_axpy(y, 0.5 * tau, k1))
    k3 = f(_axpy(y, 0.5 * tau, k2))
    k4 = f(_axpy(y, tau, k3))
    return tuple(yi + (tau / 6.0) * (a + 2.0 * b + 2.0 * c + d)
                 for yi, a, b, c, d in zip(y, k1, k2, k3, k4))


def _axpy(y, s, k):
    return tuple(yi + s * ki for yi, ki in zip(y, k))


def _interaction_field(kind: SystemKind, params, grid, scalars=None, gamma0=None, clamp_tol=CLAMP_TOL):
    """Vector field of the interaction part on state tuples.

    The tuples are ``(gamma, alpha)`` for ``FULL``, ``(gamma_degenerate,
    alpha)`` for ``REDUCED`` and ``(alpha,)`` for ``LINEAR``.
    """
    g = lattice_coupling(params, grid)

    def full(y):
        gamma, alpha = y
        gc = g * compensated_sum(alpha)
        return (4.0 * (gc.real * alpha.imag - gc.imag * alpha.real),
                -2j * gc * (2.0 * gamma - 1.0))

    def reduced(y):
        gdeg, alpha = y
        gamma = gamma_from_alpha(alpha, scalars, clamp_tol, gamma_degenerate=gdeg)
        gc = g * compensated_sum(alpha)
        adeg = alpha[scalars.degenerate]
        return (4.0 * (gc.real * adeg.imag - gc.imag * adeg.real),
                -2j * gc * (2.0 * gamma - 1.0))

    def linear(y):
        (alpha,) = y
        return (-2j * g * compensated_sum(alpha) * (2.0 * gamma0 - 1.0),)

    return {SystemKind.FULL: full, SystemKind.REDUCED: reduced, SystemKind.LINEAR: linear}[kind]


def _full_field(kind: SystemKind, params, grid, scalars=None, gamma0=None, clamp_tol=CLAMP_TOL):
    eps = dispersion(grid, params)
    inter = _interaction_field(kind, params, grid, scalars, gamma0, clamp_tol)

    def field(y):
        out = inter(y)
        return out[:-1] + (out[-1] - 2j * eps * y[-1],)

    return field


def _initial_tuple(kind, gamma, alpha, scalars):
    if kind is SystemKind.FULL:
        return (np.array(gamma, dtype=np.float64), np.array(alpha, dtype=np.complex128))
    if kind is SystemKind.REDUCED:
        return (np.array(gamma, dtype=np.float64)[scalars.degenerate],
                np.array(alpha, dtype=np.complex128))
    return (np.array(alpha, dtype=np.complex128),)


def _state_from_tuple(kind, y, scalars, gamma0, t, clamp_tol=CLAMP_TOL):
    alpha = y[-1]
    if kind is SystemKind.FULL:
        gamma = y[0]
    elif kind is SystemKind.REDUCED:
        gamma = gamma_from_alpha(alpha, scalars, clamp_tol, gamma_degenerate=y[0])
    else:
        gamma = np.asarray(gamma0, dtype=np.float64)
    return BdGState(gamma, alpha, t)


def _check_aux(kind, scalars, gamma0):
    if kind is SystemKind.REDUCED and scalars is None:
        raise ValueError("the reduced system needs SpectralScalars (h_aux, branch)")
    if kind is SystemKind.LINEAR and gamma0 is None:
        raise ValueError("the linearized system needs the frozen occupations gamma0")


def strang_step(state: BdGState, tau, kind, params: PhysicalParams, grid: GridSpec,
                scalars: Optional[SpectralScalars] = None, gamma0=None,
                clamp_tol=CLAMP_TOL) -> BdGState:
    """One step ``kin(tau/2) o rk4_interaction(tau) o kin(tau/2)``.

    For ``REDUCED`` the returned occupations are recomputed from ``alpha``
    (degenerate modes excepted); for ``LINEAR`` they stay at ``gamma0``.
    """
    kind = SystemKind(kind)
    _check_aux(kind, scalars, gamma0)
    alpha = kinetic_flow(state.alpha, 0.5 * tau, grid, params)
    inter = _interaction_field(kind, params, grid, scalars, gamma0, clamp_tol)
    y = _rk4(inter, _initial_tuple(kind, state.gamma, alpha, scalars), tau)
    y = y[:-1] + (kinetic_flow(y[-1], 0.5 * tau, grid, params),)
    return _state_from_tuple(kind, y, scalars, gamma0, state.t + tau, clamp_tol)


def reference_evolve(initial: EquilibriumData, kind, t_end, tau_ref=None,
                     clamp_tol=CLAMP_TOL) -> BdGState:
    """Un-split classical RK4 on the whole vector field.

    Slow and only meant as a numerical oracle on small grids; ``tau_ref``
    defaults to ``0.01 / K``.
    """
    kind = SystemKind(kind)
    grid, params = initial.grid, initial.params
    tau = 0.01 / grid.k_modes if tau_ref is None else float(tau_ref)
    n = int(round(t_end / tau))
    field = _full_field(kind, params, grid, initial.scalars, initial.gamma0, clamp_tol)
    y = _initial_tuple(kind, initial.gamma0, initial.alpha0, initial.scalars)
    for _ in range(n):
        y = _rk4(field, y, tau)
    return _state_from_tuple(kind, y, initial.scalars, initial.gamma0, n * tau, clamp_tol)


class _Folding:
    """Mirror-symmetry folding ``k -> -k``.

    When every per-mode input is even in ``k`` the dynamics keep it so, and
    only ``k = -K/2`` and ``k = 0 .. K/2 - 1`` need to be evolved; the modes
    ``0 < k < K/2`` then count twice in every sum. Without symmetry the
    folding is the identity with unit weights.
    """

    def __init__(self, K: int, symmetric: bool):
        self.K = K
        self.symmetric = symmetric and K >= 4
        if self.symmetric:
            half = K // 2
            self.rep = np.concatenate(([0], np.arange(half, K)))
            self.weights = np.full(half + 1, 2.0)
            self.weights[0] = 1.0
            self.weights[1] = 1.0
            # storage position p holds k = p - K/2; its representative is |k|
            k = np.arange(K) - half
            self.expand = np.where(k == -half, 0, np.abs(k) + 1)
        else:
            self.rep = np.arange(K)
            self.weights = np.ones(K)
            self.expand = np.arange(K)

    @staticmethod
    def is_even(x) -> bool:
        x = np.asarray(x)
        half = x.shape[0] // 2
        return bool(np.array_equal(x[1:half][::-1], x[half + 1:]))

    def fold(self, x):
        return np.ascontiguousarray(np.asarray(x)[self.rep])

    def unfold(self, x):
        return np.asarray(x)[self.expand]


class Propagator:
    """Mutable integrator state for one trajectory.

    Holds the folded arrays and precomputed phase factors and advances them
    with the compiled kernels. ``state()`` returns an immutable snapshot.
    """

    def __init__(self, initial: EquilibriumData, kind, tau, clamp_tol=CLAMP_TOL, fold=True):
        self.kind = SystemKind(kind)
        self.initial = initial
        self.tau = float(tau)
        self.clamp_tol = clamp_tol
        grid, params = initial.grid, initial.params
        eps = initial.scalars.eps
        even = fold and all(_Folding.is_even(x) for x in
                            (initial.alpha0, initial.gamma0, eps, initial.h_aux))
        self.folding = _Folding(grid.k_modes, even)
        f = self.folding.fold
        self.g = lattice_coupling(params, grid)
        self.weights = self.folding.weights
        self.ph_half = f(np.exp(-1j * eps * self.tau))
        self.ph_full = f(np.exp(-2j * eps * self.tau))
        self.alpha = f(initial.alpha0).astype(np.complex128)
        self.gamma = f(initial.gamma0).astype(np.float64)
        sc = initial.scalars
        # degenerate modes: zero coefficient and a radicand that stays positive
        self.h_aux = f(np.where(sc.degenerate, 1.0, sc.h_aux))
        self.coef_reduced = f(np.where(sc.degenerate, 0.0, 4.0 * self.g * sc.branch))
        self.deg_idx = np.flatnonzero(f(sc.degenerate)).astype(np.int64)
        self.gamma_deg = self.gamma[self.deg_idx].copy()
        self.coef_linear = f(2.0 * self.g * (2.0 * initial.gamma0 - 1.0))
        self.steps = 0
        self.max_clamp = 0.0

    @property
    def t(self) -> float:
        return self.steps * self.tau

    def advance(self, nsteps: int):
        nsteps = int(nsteps)
        if nsteps <= 0:
            return
        if self.kind is SystemKind.FULL:
            _kernels.advance_full(self.gamma, self.alpha, self.weights, self.ph_half,
                                  self.ph_full, self.g, self.tau, nsteps)
            done = nsteps
        elif self.kind is SystemKind.LINEAR:
            _kernels.advance_linear(self.alpha, self.weights, self.ph_half, self.ph_full,
                                    self.coef_linear, self.tau, nsteps)
            done = nsteps
        else:
            worst, bad, done = _kernels.advance_reduced(
                self.alpha, self.weights, self.ph_half, self.ph_full, self.h_aux,
                self.coef_reduced, self.tau, nsteps, self.clamp_tol, self.deg_idx,
                self.gamma_deg, self.g)
            self.max_clamp = max(self.max_clamp, worst)
            if bad >= 0:
                self.steps += done
                mode = int(self.folding.rep[bad])
                raise IntegrationBlowup(
                    f"reduced system left its branch at mode position {mode}, t={self.t:.6g} "
                    f"(radicand excess {worst:.3e})", mode=mode, t=self.t, excess=worst)
        self.steps += done
        if not np.all(np.isfinite(self.alpha)):
            raise IntegrationBlowup(f"non-finite pair density at t={self.t:.6g}", t=self.t)

    def state(self) -> BdGState:
        u = self.folding.unfold
        alpha = u(self.alpha)
        if self.kind is SystemKind.FULL:
            gamma = u(self.gamma)
        elif self.kind is SystemKind.REDUCED:
            gamma_full_deg = np.empty(len(self.gamma))
            gamma_full_deg[self.deg_idx] = self.gamma_deg
            gamma = gamma_from_alpha(alpha, self.initial.scalars, clamp_tol=np.inf,
                                     gamma_degenerate=u(gamma_full_deg)[self.initial.scalars.degenerate])
        else:
            gamma = self.initial.gamma0
        return BdGState(gamma, alpha, self.t)


def evolve(initial: EquilibriumData, kind, config: StepperConfig,
           sink: Optional[Callable[[float, BdGState], None]] = None, fold=True):
    """Integrate from ``t = 0`` to ``config.t_end`` and return a ``TimeSeries``.

    ``sink(t, state)`` is called at every sample, after the built-in
    diagnostics recorder. On :class:`IntegrationBlowup` the exception carries
    the partial series.
    """
    from bdg.diagnostics import SeriesRecorder

    kind = SystemKind(kind)
    prop = Propagator(initial, kind, config.tau, fold=fold)
    recorder = SeriesRecorder(initial, kind, config)
    steps = config.sample_steps()

    def emit():
        state = prop.state()
        recorder(state.t, state)
        if sink is not None:
            sink(state.t, state)

    emit()
    for target in steps[1:]:
        try:
            prop.advance(int(target) - prop.steps)
        except IntegrationBlowup as exc:
            exc.series = recorder.series(max_clamp=prop.max_clamp, error=str(exc))
            raise
        emit()
    logger.debug("%s run finished: %d steps, max clamp %.3g", kind.label, prop.steps, prop.max_clamp)
    return recorder.series(max_clamp=prop.max_clamp)
