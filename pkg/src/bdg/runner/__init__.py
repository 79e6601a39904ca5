"""Experiment runner: configuration, commands, CSV/SVG output and the CLI."""

from bdg.runner.commands import (
    cmd_check_n,
    cmd_convergence_m,
    cmd_evolve,
    cmd_figure,
    cmd_gap_table,
    cmd_tc,
)
from bdg.runner.config import PRESETS, RunConfig

__all__ = [
    "RunConfig",
    "PRESETS",
    "cmd_tc",
    "cmd_gap_table",
    "cmd_evolve",
    "cmd_convergence_m",
    "cmd_check_n",
    "cmd_figure",
]
