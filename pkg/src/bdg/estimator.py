"""scikit-learn style front end.

``fit`` runs the equilibrium protocol (critical temperature, gap, initial
state) and stores the results as fitted attributes; ``evolve`` integrates
the requested systems from the fitted initial data.

>>> sim = BdGSimulator(h=0.25, m_density=32, n_period=4, t_end=1.0).fit()
>>> series = sim.evolve("linear")
"""

from __future__ import annotations

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from bdg._validation import check_h, check_positive
from bdg.dynamics import StepperConfig, SystemKind, evolve
from bdg.equilibrium import standard_setup
from bdg.model_core import GridSpec, PhysicalParams


class BdGSimulator(BaseEstimator):
    """Standard setup plus time evolution for one value of ``h``.

    Parameters
    ----------
    h : float, default=0.25
        Semiclassical parameter, a power of 1/2.
    n_period, m_density : int
        Grid parameters ``N`` and ``M``; ``K = M N / h``.
    a, mu : float
        Contact coupling and chemical potential.
    t_end_factor : float, default=1
        Horizon in units of ``1/h**2``. Ignored when ``t_end`` is given.
    tau_factor : float, default=0.1
        Time step in units of ``1/K``.
    samples : int, default=2000
        Approximate number of diagnostic samples per run.
    t_end : float, optional
        Absolute horizon, overriding ``t_end_factor``.

    Attributes
    ----------
    equilibrium_ : EquilibriumData
    t_c_, delta0_, t_sim_ : float
    series_ : dict
        ``TimeSeries`` per evolved kind.
    """

    def __init__(self, h=0.25, n_period=8, m_density=256, a=1.0, mu=1.0,
                 t_end_factor=1.0, tau_factor=0.1, samples=2000, t_end=None):
        self.h = h
        self.n_period = n_period
        self.m_density = m_density
        self.a = a
        self.mu = mu
        self.t_end_factor = t_end_factor
        self.tau_factor = tau_factor
        self.samples = samples
        self.t_end = t_end

    def _validate_params(self):
        check_h(self.h)
        check_positive(self.tau_factor, "tau_factor")
        check_positive(self.t_end_factor, "t_end_factor")
        if self.t_end is not None and self.t_end < 0:
            raise ValueError(f"`t_end` must be non-negative, got {self.t_end!r}.")

    def fit(self, X=None, y=None):
        self._validate_params()
        params = PhysicalParams(a=self.a, mu=self.mu, h=self.h)
        self.grid_ = GridSpec(n_period=self.n_period, m_density=self.m_density, h=params.h)
        self.equilibrium_ = standard_setup(params, self.grid_)
        self.t_c_ = self.equilibrium_.t_c
        self.delta0_ = self.equilibrium_.delta0
        self.t_sim_ = self.equilibrium_.t_sim
        self.series_ = {}
        return self

    def stepper_config(self) -> StepperConfig:
        check_is_fitted(self, "equilibrium_")
        return StepperConfig.production(self.grid_, tau_factor=self.tau_factor,
                                        t_end_factor=self.t_end_factor,
                                        samples=self.samples, t_end=self.t_end)

    def evolve(self, kind="full", sink=None):
        """Integrate ``kind`` (``full``, ``reduced`` or ``linear``) and return its series."""
        check_is_fitted(self, "equilibrium_")
        kind = SystemKind(kind)
        series = evolve(self.equilibrium_, kind, self.stepper_config(), sink=sink)
        self.series_[kind.value] = series
        return series
