"""Run configuration and the figure preset table."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Tuple

from bdg._validation import check_h, check_positive, check_power_of_two
from bdg.dynamics import StepperConfig
from bdg.model_core import GridSpec, PhysicalParams

KINDS = ("full", "reduced", "linear", "both")
N_CAP = 64


@dataclass(frozen=True)
class RunConfig:
    """All knobs of one invocation. Runs are deterministic; there is no seed.

    ``t_end`` overrides ``t_end_factor / h**2`` when given. ``kind='both'``
    means the full system and its linearization from one shared setup.
    """

    h: float = 0.25
    n_period: int = 8
    m_density: int = 256
    a: float = 1.0
    mu: float = 1.0
    kind: str = "both"
    t_end_factor: float = 1.0
    tau_factor: float = 0.1
    samples: int = 2000
    t_end: Optional[float] = None
    out: Path = field(default=Path("bdg_out"))

    def __post_init__(self):
        object.__setattr__(self, "h", check_h(self.h))
        check_power_of_two(self.n_period, "n_period")
        check_power_of_two(self.m_density, "m_density")
        check_positive(self.a, "a")
        check_positive(self.t_end_factor, "t_end_factor")
        check_positive(self.tau_factor, "tau_factor")
        if int(self.samples) != self.samples or self.samples < 1:
            raise ValueError(f"`samples` must be a positive integer, got {self.samples!r}.")
        if self.kind not in KINDS:
            raise ValueError(f"`kind` must be one of {KINDS}, got {self.kind!r}.")
        if self.t_end is not None and not self.t_end >= 0:
            raise ValueError(f"`t_end` must be non-negative, got {self.t_end!r}.")
        object.__setattr__(self, "out", Path(self.out))

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    @property
    def kinds(self) -> Tuple[str, ...]:
        return ("full", "linear") if self.kind == "both" else (self.kind,)

    def physical(self) -> PhysicalParams:
        return PhysicalParams(a=self.a, mu=self.mu, h=self.h)

    def grid(self) -> GridSpec:
        return GridSpec(n_period=self.n_period, m_density=self.m_density, h=self.h)

    def stepper(self, grid: Optional[GridSpec] = None) -> StepperConfig:
        return StepperConfig.production(grid or self.grid(), tau_factor=self.tau_factor,
                                        t_end_factor=self.t_end_factor, samples=self.samples,
                                        t_end=self.t_end)

    def metadata(self) -> dict:
        """RunConfig fields for the CSV header (``out`` excluded: it does not affect results)."""
        d = dataclasses.asdict(self)
        d.pop("out")
        return d


@dataclass(frozen=True)
class Preset:
    """One figure: the command that produces it, its configuration and plot style."""

    command: str
    config: dict
    plots: Tuple[str, ...] = ()
    logy: bool = False
    h_list: Tuple[float, ...] = ()
    m_list: Tuple[int, ...] = ()
    description: str = ""


PRESETS = {
    "fig1": Preset("gap-table", {}, logy=True,
                   h_list=(0.25, 0.125, 0.0625, 0.03125, 0.015625),
                   description="gap versus h, semilog"),
    "fig2": Preset("evolve", {"h": 0.25, "kind": "both", "t_end_factor": 2.0}, plots=("norm",),
                   description="scaled pair norm, h=1/4"),
    "fig3": Preset("evolve", {"h": 0.25, "kind": "both", "t_end_factor": 2.0}, plots=("psi",),
                   description="|psi_t|, h=1/4"),
    "fig4": Preset("evolve", {"h": 0.125, "kind": "both"}, plots=("norm",),
                   description="scaled pair norm, h=1/8"),
    "fig5": Preset("evolve", {"h": 0.125, "kind": "both"}, plots=("psi",),
                   description="|psi_t|, h=1/8"),
    "fig6": Preset("evolve", {"h": 0.0625, "kind": "both"}, plots=("norm", "psi"),
                   description="scaled pair norm and |psi_t|, h=1/16 (hours)"),
    "fig7": Preset("convergence-m", {"h": 0.25, "n_period": 8},
                   m_list=(16, 32, 64, 128, 256, 512),
                   description="T_c versus M"),
    "fig8": Preset("evolve", {"h": 0.125, "kind": "full"}, plots=("delta_f",), logy=True,
                   description="free energy drift, h=1/8, semilog"),
    "fig9": Preset("evolve", {"h": 0.125, "n_period": 4, "kind": "full"}, plots=("psi",),
                   description="periodicity artifact at N=4, h=1/8"),
}
