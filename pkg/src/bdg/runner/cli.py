"""Command line entry point ``bdg``.

Exit codes: 0 when every requested run completed, 1 when a run blew up or
no adequate ``N`` was found, 2 for usage errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from fractions import Fraction
from pathlib import Path

from bdg.runner import commands
from bdg.runner.config import KINDS, PRESETS, RunConfig


def _h_value(text: str) -> float:
    try:
        return float(Fraction(text))
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"invalid h value {text!r}") from None


def _list_of(conv):
    def parse(text):
        return [conv(t) for t in text.replace(",", " ").split()] if text.strip() else []
    return parse


def _common(p):
    p.add_argument("--h", type=_h_value, default=0.25, help="semiclassical parameter, e.g. 1/8")
    p.add_argument("--n-period", type=int, default=8)
    p.add_argument("--m-density", type=int, default=256)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--kind", choices=KINDS, default="both")
    p.add_argument("--t-end-factor", type=float, default=1.0)
    p.add_argument("--t-end", type=float, default=None, help="absolute horizon, overrides --t-end-factor")
    p.add_argument("--tau-factor", type=float, default=0.1)
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--out", type=Path, default=Path("bdg_out"))
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bdg", description="BCS/BdG time evolution experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    _common(sub.add_parser("tc", help="critical temperature for the configured grid"))
    p = sub.add_parser("gap-table", help="gap delta0 for a list of h")
    _common(p)
    p.add_argument("--h-list", type=_list_of(_h_value), default=[0.25, 0.125, 0.0625])
    _common(sub.add_parser("evolve", help="time evolution of one or both systems"))
    p = sub.add_parser("convergence-m", help="T_c as a function of M")
    _common(p)
    p.add_argument("--m-list", type=_list_of(int), default=[16, 32, 64, 128, 256, 512])
    p = sub.add_parser("check-n", help="double N until the periodicity artifact vanishes")
    _common(p)
    p.add_argument("--threshold", type=float, default=0.05)
    p = sub.add_parser("figure", help="run a figure preset")
    p.add_argument("preset", choices=sorted(PRESETS))
    _common(p)
    return parser


def _config(args) -> RunConfig:
    return RunConfig(h=args.h, n_period=args.n_period, m_density=args.m_density, a=args.a, mu=args.mu,
                     kind=args.kind, t_end_factor=args.t_end_factor, tau_factor=args.tau_factor,
                     samples=args.samples, t_end=args.t_end, out=args.out)


def _report_evolve(res) -> int:
    for kind, s in res.series.items():
        status = "ABORTED" if kind in res.errors else "ok"
        print(f"{kind}: {status}, {len(s)} samples, t_end={s.t[-1]:.6g}, "
              f"|psi| {s.abs_psi[0]:.6g} -> {s.abs_psi[-1]:.6g}, max delta_f={s.delta_f.max():.3e}")
    for kind, msg in res.errors.items():
        print(f"{kind}: error: {msg}", file=sys.stderr)
    return 0 if res.ok else 1


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = _config(args)
        commands.n_threads()
    except ValueError as exc:
        parser.error(str(exc))

    if args.command == "tc":
        rep = commands.cmd_tc(config)
        print(f"T_c = {rep.t_c:.10f}  residual = {rep.residual:.3e}  (N={config.n_period}, "
              f"M={config.m_density}, h={config.h:g}, K={rep.grid.k_modes})")
        return 0
    if args.command == "gap-table":
        try:
            rows = commands.cmd_gap_table(config, args.h_list)
        except ValueError as exc:
            parser.error(str(exc))
        for h, d in rows:
            print(f"h={h:g}  delta0={d:.6f}")
        return 0
    if args.command == "evolve":
        return _report_evolve(commands.cmd_evolve(config))
    if args.command == "convergence-m":
        try:
            rows = commands.cmd_convergence_m(config, args.m_list)
        except ValueError as exc:
            parser.error(str(exc))
        for m, t_c in rows:
            print(f"M={m}  T_c={t_c:.10f}")
        return 0
    if args.command == "check-n":
        rep = commands.cmd_check_n(config, threshold=args.threshold)
        for n, n2, t in rep.pairs:
            print(f"N={n} vs N={n2}: divergence time {t:g}")
        print(rep.message, file=sys.stdout if rep.ok else sys.stderr)
        return 0 if rep.ok else 1
    res = commands.cmd_figure(args.preset, config)
    if isinstance(res, commands.EvolveResult):
        return _report_evolve(res)
    for row in res:
        print("  ".join(f"{v:g}" for v in row))
    return 0


if __name__ == "__main__":
    sys.exit(main())
