"""Command-line entry point: ``mimo-crb <command> [options]``.

Exit codes: 0 success, 1 configuration error, 2 numerical failure (all trials
singular, discard-rate threshold breached, or a failed ``verify``).
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import __version__
from .errors import AliasingViolation, AllTrialsDiscarded, MimoCrbError, OutOfBand, StructuralError
from .experiments import COMMANDS, ExperimentConfig, default_experiment, run_command, verify_table

log = logging.getLogger("mimo_crb")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config; keys override the command defaults")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--trials", type=int, help="Monte Carlo trials per configuration")
    common.add_argument("--workers", type=int,
                        help="worker processes (default: $MIMO_CRB_WORKERS or 1); never changes output")
    common.add_argument("--mode", choices=["full", "blockdiag"], help="FIM used for the exact bound")
    common.add_argument("--out", help="output CSV path (default: stdout)")
    common.add_argument("--json", action="store_true", help="also write a JSON mirror next to --out")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="mimo-crb", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    helps = {
        "bound-asymptotic": "closed-form bound on a horizon x subcarrier grid",
        "bound-exact": "Monte Carlo averaged exact bound on a horizon x subcarrier grid",
        "fig1": "RNMSE surface vs frequency and horizon (exact and asymptotic)",
        "fig2": "frequency-averaged RNMSE vs horizon at several SNRs",
        "fig3": "RNMSE vs number of time pilots for several array sizes",
        "fig4": "RNMSE vs number of paths",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    v = sub.add_parser("verify", parents=[common], help="recompute a result file and compare")
    v.add_argument("table", help="CSV written by one of the other commands")
    v.add_argument("--rtol", type=float, default=1e-9)
    return p


def _build_config(args) -> ExperimentConfig:
    cfg = default_experiment(args.command)
    if args.config:
        cfg = ExperimentConfig.load(args.config, base=cfg)
    over = {}
    if args.seed is not None:
        over["seed"] = args.seed
    if args.trials is not None:
        over["trials"] = args.trials
    if args.mode is not None:
        over["mode"] = args.mode
    if over:
        d = cfg.to_dict()
        d.update(over)
        cfg = ExperimentConfig.from_dict(d)
    return cfg


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "verify":
            ok, worst, _ = verify_table(args.table, workers=args.workers, rtol=args.rtol)
            print(f"{'OK' if ok else 'MISMATCH'} max relative difference {worst:.3g}")
            return EXIT_OK if ok else EXIT_NUMERIC
        cfg = _build_config(args)
        table = run_command(args.command, cfg, workers=args.workers)
    except AllTrialsDiscarded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (StructuralError, AliasingViolation, OutOfBand, ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MimoCrbError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    if args.out:
        table.write(args.out, json_mirror=args.json)
    else:
        sys.stdout.write(table.to_csv())

    frac = table.metadata.get("max_discard_fraction_observed", 0.0)
    if frac > cfg.max_discard_fraction:
        print(f"error: {frac:.1%} of trials discarded as singular (limit {cfg.max_discard_fraction:.1%})",
              file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
