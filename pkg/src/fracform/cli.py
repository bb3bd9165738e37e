"""Command-line entry point: ``fracform {run,sweep,demo-observer,oracle-special}``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from fracform.analysis import compare_special_solution
from fracform.config import resolve_config
from fracform.errors import ConfigError, DomainError, FormationError
from fracform.observer import run_demo
from fracform.simulation import emit_csv, format_value, run_simulation, sweep_tau

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def _on_off(value: str) -> bool:
    v = value.lower()
    if v not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected 'on' or 'off'")
    return v == "on"


def _tau_list(value: str) -> list[float]:
    try:
        return [float(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {value!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fracform", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="simulate one scenario")
    run.add_argument("--config", required=True, help="scenario .cfg path or bundled config name")
    run.add_argument("--out", default=".", help="output directory (default: current)")
    run.add_argument("--tau", type=float, help="override the controller's tau")
    run.add_argument("--observer", type=_on_off, help="on|off, override the observer switch")

    sweep = sub.add_parser("sweep", help="run one scenario for several tau values")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--taus", type=_tau_list, required=True, help="comma-separated, e.g. -0.2,-0.1,0,0.1,0.2")
    sweep.add_argument("--out", required=True)

    demo = sub.add_parser("demo-observer", help="linear vs fractional-power observer on a two-state plant")
    demo.add_argument("--out", required=True)
    demo.add_argument("--horizon", type=float, default=20.0)
    demo.add_argument("--dt", type=float, default=1e-3)

    oracle = sub.add_parser("oracle-special", help="closed-form special solution vs RK4 integration")
    oracle.add_argument("--tau", type=float, required=True)
    oracle.add_argument("--x0", type=float, required=True)
    oracle.add_argument("--k1", type=float, default=-0.3)
    oracle.add_argument("--dt", type=float, default=1e-3)
    return parser


def _outdir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _tag(tau: float) -> str:
    return f"tau{tau:+g}"


def cmd_run(args) -> int:
    cfg = resolve_config(args.config)
    if args.tau is not None:
        cfg = cfg.with_tau(args.tau)
    if args.observer is not None:
        cfg = cfg.with_observer(args.observer)
    traj, summary = run_simulation(cfg)
    out = _outdir(args.out)
    stem = f"{cfg.name}_{_tag(cfg.controller.tau)}"
    csv_path = emit_csv(traj, out / f"{stem}.csv")
    (out / f"{stem}_summary.json").write_text(json.dumps(summary.as_dict(), indent=2) + "\n")
    print(json.dumps(summary.as_dict(), indent=2))
    print(f"wrote {csv_path}", file=sys.stderr)
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = resolve_config(args.config)
    for tau in args.taus:
        if not tau > -0.5:
            raise DomainError(f"tau must exceed -1/2, got {tau}")
    summaries = sweep_tau(cfg, args.taus)
    out = _outdir(args.out)
    rows = [s.as_dict() for s in summaries]
    (out / f"{cfg.name}_sweep.json").write_text(json.dumps(rows, indent=2) + "\n")
    for s in summaries:
        ct = "-" if s.convergence_time is None else f"{s.convergence_time:.2f}"
        print(f"tau={s.tau:+.2f} converged={s.converged} t_conv={ct} "
              f"min_lambda2={s.min_lambda2:.4g} effort={s.total_effort:.1f}"
              + (f" error={s.error}" if s.error else ""))
    return EXIT_RUNTIME if any(s.error for s in summaries) else EXIT_OK


def cmd_demo(args) -> int:
    t, lin = run_demo("linear", args.horizon, args.dt)
    _, nl = run_demo("nonlinear", args.horizon, args.dt)
    out = _outdir(args.out)
    path = out / "observer_demo.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "y1", "y2", "lin_y1hat", "lin_y2hat", "nl_y1hat", "nl_y2hat"])
        for k in range(len(t)):
            w.writerow([format_value(v) for v in (t[k], *lin[k, :2], *lin[k, 2:], *nl[k, 2:])])
    k5 = int(round(5.0 / args.dt))
    if k5 < len(t):
        e_lin = abs(lin[k5, 0] - lin[k5, 2])
        e_nl = abs(nl[k5, 0] - nl[k5, 2])
        print(f"output error at t=5: linear={e_lin:.3e} nonlinear={e_nl:.3e}")
    print(f"wrote {path}", file=sys.stderr)
    return EXIT_OK


def cmd_oracle(args) -> int:
    res = compare_special_solution(args.tau, args.x0, k1=args.k1, dt=args.dt)
    print(f"touchdown_time={res.touchdown:.6g}")
    print(f"max_deviation={res.max_deviation:.3e}")
    print(f"state_at_touchdown=({res.final_state[0]:.3e}, {res.final_state[1]:.3e})")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "demo-observer": cmd_demo, "oracle-special": cmd_oracle}


def _join_list_values(argv: list[str]) -> list[str]:
    # argparse treats "-0.2,0,0.2" as an option; glue it onto its flag
    out: list[str] = []
    it = iter(argv)
    for a in it:
        if a == "--taus":
            nxt = next(it, None)
            out.append(a if nxt is None else f"{a}={nxt}")
        else:
            out.append(a)
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = _join_list_values(list(sys.argv[1:] if argv is None else argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, DomainError) as exc:
        print(f"fracform: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (FormationError, OSError) as exc:
        print(f"fracform: aborted: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
