"""Command line front end.

Exit codes: 0 success, 2 config rejected, 3 numerical failure
(quadrature/CFL/support/step budget/resolution), 4 asserted property failed.
"""

import argparse
import logging
import sys
from pathlib import Path

from ..errors import ConfigError, PParabError, PropertyError
from .commands import COMMANDS
from .config import load_config

log = logging.getLogger("pparab")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--outdir", default="out", help="report directory (default: out)")
    common.add_argument("--seed", type=int, default=0, help="RNG seed (default: 0)")
    common.add_argument(
        "--threads", type=int, default=1, help="parallel solves in sweeps (default: 1)"
    )
    common.add_argument("--verbose", action="store_true", help="debug logging")
    parser = argparse.ArgumentParser(
        prog="pparab",
        description="Degenerate diffusion laboratory: experiments and self-tests.",
        parents=[common],
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        cmd = sub.add_parser(name, help=f"run the {name} experiment", parents=[common])
        cmd.add_argument("--config", default=None, help="INI config file")
        cmd.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="SECTION.KEY=VALUE",
            help="override a config entry (repeatable)",
        )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    outdir = Path(args.outdir)
    try:
        cfg = load_config(args.config, args.overrides)
        outdir.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](cfg, outdir, args.seed, args.threads)
    except ConfigError as exc:
        log.error("config rejected: %s", exc)
        return 2
    except PropertyError as exc:
        log.error("property failed: %s", exc)
        return 4
    except ValueError as exc:
        log.error("config rejected: %s", exc)
        return 2
    except PParabError as exc:
        log.error("numerical failure: %s", exc)
        return 3
    log.info("%s finished, reports in %s", args.command, outdir)
    return 0


if __name__ == "__main__":
    sys.exit(main())
