"""Parameters, discrete state and per-mode quantities of the 1-D BdG model.

Momenta live on the integer grid ``k = -K/2, ..., K/2 - 1`` and are stored in
that physical order throughout. The physical momentum of mode ``k`` is
``p = (h / N) k``, so the mode spacing is ``h / N`` and the momentum cutoff is
``M / 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from bdg._validation import (
    check_h,
    check_nonnegative,
    check_positive,
    check_power_of_two,
    check_same_length,
    check_vector,
)

__all__ = [
    "PhysicalParams",
    "GridSpec",
    "BdGState",
    "SpectralScalars",
    "dispersion",
    "lattice_coupling",
    "contact_convolution",
    "mode_eigenvalues",
    "inner_product",
    "compensated_sum",
    "collocation_transform",
    "inverse_collocation_transform",
]


@dataclass(frozen=True)
class PhysicalParams:
    """Dimensionless physical parameters.

    Parameters
    ----------
    a : float
        Strength of the attractive contact interaction ``V(x) = -a delta(x)``.
        ``a = 0`` (free dynamics) is allowed, but the gap equations need ``a > 0``.
    mu : float
        Chemical potential.
    h : float
        Semiclassical parameter, restricted to ``1/2**m``.
    T : float, optional
        Temperature of the simulation. Left unset until the equilibrium
        protocol has fixed it.
    """

    a: float = 1.0
    mu: float = 1.0
    h: float = 0.25
    T: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "a", check_nonnegative(self.a, "a"))
        object.__setattr__(self, "h", check_h(self.h))
        object.__setattr__(self, "mu", float(self.mu))
        if self.T is not None:
            object.__setattr__(self, "T", check_positive(self.T, "T"))

    def with_temperature(self, T: float) -> "PhysicalParams":
        return PhysicalParams(a=self.a, mu=self.mu, h=self.h, T=T)


@dataclass(frozen=True)
class GridSpec:
    """Truncated momentum grid with ``K = M N / h`` modes.

    Parameters
    ----------
    n_period : int
        Period multiplier ``N > 1``; the system has period ``2 pi N / h``.
    m_density : int
        Modes per unit momentum ``M``.
    h : float
        Semiclassical parameter (the same as in :class:`PhysicalParams`).
    """

    n_period: int = 8
    m_density: int = 256
    h: float = 0.25
    k_modes: int = field(init=False)

    def __post_init__(self):
        h = check_h(self.h)
        object.__setattr__(self, "h", h)
        if int(self.n_period) != self.n_period or self.n_period <= 1:
            raise ValueError(f"`n_period` must be an integer > 1, got {self.n_period!r}.")
        if int(self.m_density) != self.m_density or self.m_density < 1:
            raise ValueError(f"`m_density` must be a positive integer, got {self.m_density!r}.")
        object.__setattr__(self, "n_period", int(self.n_period))
        object.__setattr__(self, "m_density", int(self.m_density))
        # h = 2**-m, so M*N/h = M*N*2**m is exact in integer arithmetic
        inv_h = round(1.0 / h)
        K = self.m_density * self.n_period * inv_h
        object.__setattr__(self, "k_modes", check_power_of_two(K, "K = M*N/h"))

    @classmethod
    def for_params(cls, params: PhysicalParams, n_period=8, m_density=256) -> "GridSpec":
        return cls(n_period=n_period, m_density=m_density, h=params.h)

    @property
    def K(self) -> int:
        return self.k_modes

    @property
    def spacing(self) -> float:
        """Momentum spacing ``h / N`` between neighbouring modes."""
        return self.h / self.n_period

    @cached_property
    def indices(self) -> np.ndarray:
        K = self.k_modes
        return np.arange(-K // 2, K // 2, dtype=np.int64)

    @cached_property
    def momenta(self) -> np.ndarray:
        return self.spacing * self.indices

    def position(self, k: int) -> int:
        """Storage position of mode index ``k``."""
        K = self.k_modes
        if not -K // 2 <= k < K // 2:
            raise IndexError(f"mode {k} outside [-{K // 2}, {K // 2 - 1}]")
        return k + K // 2


@dataclass(frozen=True, eq=False)
class BdGState:
    """Translation-invariant generalized density matrix on the grid.

    ``gamma`` holds the occupations and ``alpha`` the pair density; together
    they form ``Gamma(k) = [[gamma, alpha], [conj(alpha), 1 - gamma]]``.
    """

    gamma: np.ndarray
    alpha: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        gamma = np.asarray(self.gamma, dtype=np.float64)
        alpha = check_vector(self.alpha, len(gamma), "alpha")
        gamma.setflags(write=False)
        alpha.setflags(write=False)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "t", float(self.t))

    def __len__(self):
        return self.gamma.shape[0]

    def matrix(self, pos: int) -> np.ndarray:
        """2x2 matrix ``Gamma`` at storage position ``pos``."""
        g, a = self.gamma[pos], self.alpha[pos]
        return np.array([[g, a], [np.conj(a), 1.0 - g]])

    def radicand(self) -> np.ndarray:
        """``(gamma - 1/2)**2 + |alpha|**2`` per mode."""
        return (self.gamma - 0.5) ** 2 + np.abs(self.alpha) ** 2

    def invariant_violation(self) -> float:
        """Largest violation of ``0 <= gamma <= 1`` and ``radicand <= 1/4``."""
        over = max(
            float(np.max(-self.gamma, initial=0.0)),
            float(np.max(self.gamma - 1.0, initial=0.0)),
            float(np.max(self.radicand() - 0.25, initial=0.0)),
        )
        return max(over, 0.0)

    def replace(self, gamma=None, alpha=None, t=None) -> "BdGState":
        return BdGState(
            self.gamma if gamma is None else gamma,
            self.alpha if alpha is None else alpha,
            self.t if t is None else t,
        )


@dataclass(frozen=True, eq=False)
class SpectralScalars:
    """Per-mode data fixed by the initial state.

    ``branch`` is +1 where ``eps < 0`` (inside the Fermi sea) and -1 elsewhere;
    it selects the root when ``gamma`` is recovered from ``alpha``.
    ``degenerate`` marks modes that start at ``gamma = 1/2`` (the Fermi modes
    ``eps = 0``). There the root is not determined by the initial data, so
    the reduced dynamics carry their occupation explicitly.
    """

    eps: np.ndarray
    h_aux: np.ndarray
    branch: np.ndarray
    degenerate: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.degenerate is None:
            object.__setattr__(self, "degenerate", np.zeros(len(self.eps), dtype=bool))

    @classmethod
    def from_state(cls, state: BdGState, eps: np.ndarray) -> "SpectralScalars":
        eps = np.asarray(eps, dtype=np.float64)
        return cls(eps=eps, h_aux=state.radicand(), branch=np.where(eps < 0.0, 1.0, -1.0),
                   degenerate=state.gamma == 0.5)

    @property
    def degenerate_positions(self) -> np.ndarray:
        return np.flatnonzero(self.degenerate)


def check_compatible(params: PhysicalParams, grid: GridSpec):
    if params.h != grid.h:
        raise ValueError(f"params.h={params.h} does not match grid.h={grid.h}")


def dispersion(grid: GridSpec, params: PhysicalParams) -> np.ndarray:
    """Kinetic energy ``(h/N)**2 k**2 - mu`` in physical mode order."""
    check_compatible(params, grid)
    k = grid.indices.astype(np.float64)
    return (grid.spacing**2) * k * k - params.mu


def lattice_coupling(params: PhysicalParams, grid: GridSpec) -> float:
    """Coupling per mode, ``a h / (2 pi N)``.

    This is the Fourier coefficient of the contact potential rescaled to the
    macroscopic torus. With it a Riemann sum over modes, weighted by the mode
    spacing ``h/N``, reproduces the continuum gap equation, and the BCS
    equilibrium below ``T_c`` is a stationary point of the dynamics.
    """
    return params.a * grid.h / (2.0 * math.pi * grid.n_period)


def compensated_sum(x) -> complex | float:
    """Correctly rounded sum of a real or complex vector (``math.fsum``)."""
    x = np.asarray(x)
    if np.iscomplexobj(x):
        return complex(math.fsum(x.real.tolist()), math.fsum(x.imag.tolist()))
    return math.fsum(x.tolist())


def contact_convolution(alpha, params: PhysicalParams, grid: GridSpec) -> complex:
    """Convolution of the contact potential with ``alpha``.

    The result does not depend on the mode, so a single scalar
    ``-g * sum_k alpha(k)`` with ``g = lattice_coupling(params, grid)`` is
    returned.
    """
    alpha = check_vector(alpha, grid.k_modes, "alpha")
    return -lattice_coupling(params, grid) * compensated_sum(alpha)


def mode_eigenvalues(state: BdGState, k: Optional[int] = None):
    """Eigenvalues ``1/2 +- sqrt((gamma - 1/2)**2 + |alpha|**2)`` of ``Gamma``.

    With ``k`` given (a storage position) returns the pair ``(lam1, lam2)``
    for that mode, otherwise two arrays over all modes. ``lam1 >= lam2`` and
    ``lam1 + lam2 == 1``.
    """
    if k is None:
        root = np.sqrt(state.radicand())
        lam1 = 0.5 + root
        return lam1, 1.0 - lam1
    g, a = state.gamma[k], state.alpha[k]
    root = math.sqrt((g - 0.5) ** 2 + abs(a) ** 2)
    lam1 = 0.5 + root
    return lam1, 1.0 - lam1


def inner_product(f, g) -> complex:
    """``sum_k conj(f(k)) g(k)`` over the retained modes."""
    check_same_length(f, g)
    f = np.asarray(f, dtype=np.complex128)
    g = np.asarray(g, dtype=np.complex128)
    return compensated_sum(np.conj(f) * g)


def collocation_transform(coeffs) -> np.ndarray:
    """Evaluate ``sum_k c(k) exp(i k x_j)`` at ``x_j = 2 pi j / K``.

    Both coefficients (``k``) and samples (``j``) are in physical order
    ``-K/2, ..., K/2 - 1``.
    """
    c = check_vector(coeffs, name="coeffs")
    K = check_power_of_two(c.shape[0])
    return np.fft.fftshift(np.fft.ifft(np.fft.ifftshift(c)) * K)


def inverse_collocation_transform(values) -> np.ndarray:
    """Recover collocation coefficients from samples at ``x_j``."""
    v = check_vector(values, name="values")
    K = check_power_of_two(v.shape[0])
    return np.fft.fftshift(np.fft.fft(np.fft.ifftshift(v))) / K
