"""
This module is the command-line entry point.

It configures logging, parses the subcommands, loads the run config and
dispatches to the services. Domain errors are mapped to exit codes here and
nowhere else.

Exit codes:
    0 success, 1 usage/config, 2 physics (instability), 3 validity.
"""

import argparse
import logging
import sys
from typing import Optional, Sequence

from pydantic import ValidationError

from mechcat import __version__
from mechcat.cli.deps import get_protocol_service, get_sweep_service, resolve_output_dir
from mechcat.core.config import get_settings
from mechcat.core.exceptions import ConfigError, MechcatError
from mechcat.schemas.config import SweepSpec, format_validation_error, load_config

logger = logging.getLogger(__name__)

COMMANDS = ("squeeze", "sweep", "subtract", "wigner", "fidelity", "pipeline")


class _Parser(argparse.ArgumentParser):
    """Raise ConfigError instead of exiting, so usage errors map to exit 1."""

    def error(self, message: str) -> None:
        raise ConfigError(f"{self.prog}: {message}")


def _global_flags() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="Run config or manifest JSON (default: shipped configs/reference.json)")
    common.add_argument("--out", help="Output directory (default: $MECHCAT_OUTPUT_DIR or ./runs)")
    common.add_argument("--jobs", type=int, default=1, help="Worker processes for sweeps and grids")
    common.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Dotted-path config override, repeatable",
    )
    common.add_argument("--dry-run", action="store_true", help="Derived quantities only")
    common.add_argument("--strict", action="store_true", help="Escalate parity-mismatch warnings")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags()
    parser = _Parser(prog="mechcat", description="Mechanical cat states by squeezing and phonon subtraction")
    parser.add_argument("--version", action="version", version=f"mechcat {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    sub.add_parser("squeeze", parents=[common], help="Steady-state squeezing (step 1)")

    sweep = sub.add_parser("sweep", parents=[common], help="Squeezing versus ratio, T or G_minus")
    sweep.add_argument("--axis", required=True, help="ratio | T | G_minus (Hz)")
    sweep.add_argument("--start", type=float, required=True)
    sweep.add_argument("--stop", type=float, required=True)
    sweep.add_argument("--points", type=int, required=True)
    sweep.add_argument("--optimize", action="store_true", help="Optimize G_plus/G_minus at every point")

    subtract = sub.add_parser("subtract", parents=[common], help="Phonon subtraction (step 2)")
    subtract.add_argument("-k", type=int, required=True, help="Detected photon count")
    subtract.add_argument("--input", help="cm.json or state.json (default: steady state of the config)")

    wigner = sub.add_parser("wigner", parents=[common], help="Fock-basis Wigner grid of a state")
    wigner.add_argument("state", help="State JSON file")

    fidelity = sub.add_parser("fidelity", parents=[common], help="Best cat fidelity of a state")
    fidelity.add_argument("state", help="State JSON file")
    fidelity.add_argument("--parity", help="even | odd (default: from the state's parity)")
    fidelity.add_argument("--alpha-max", type=float, help="Upper |alpha| searched")
    fidelity.add_argument("--angle", type=float, help="Cat axis angle in rad (default: anti-squeezed axis)")

    sub.add_parser("pipeline", parents=[common], help="squeeze, subtract k=1,2, wigner, fidelity")
    return parser


def run(args: argparse.Namespace) -> None:
    overrides = list(args.overrides)
    if getattr(args, "alpha_max", None) is not None:
        overrides.append(f"numerics.alpha_max={args.alpha_max!r}")
    config = load_config(args.config, overrides)
    out = resolve_output_dir(args.out, config)
    if args.jobs < 1:
        raise ConfigError("--jobs must be at least 1")

    if args.command == "sweep":
        try:
            spec = SweepSpec(
                axis=args.axis,
                start=args.start,
                stop=args.stop,
                points=args.points,
                optimize=args.optimize,
            )
        except ValidationError as exc:
            raise ConfigError(f"sweep spec: {format_validation_error(exc)}") from exc
        get_sweep_service(out, args.jobs).sweep(config, spec, dry_run=args.dry_run)
        return

    service = get_protocol_service(out, args.jobs)
    if args.command == "squeeze":
        service.squeeze(config, dry_run=args.dry_run)
    elif args.command == "subtract":
        service.subtract(config, args.k, args.input, dry_run=args.dry_run)
    elif args.command == "wigner":
        service.wigner(config, args.state)
    elif args.command == "fidelity":
        if args.parity is not None and args.parity not in ("even", "odd"):
            raise ConfigError(f"--parity must be 'even' or 'odd', got {args.parity!r}")
        service.fidelity(config, args.state, args.parity, args.angle, strict=args.strict)
    elif args.command == "pipeline":
        service.pipeline(config, dry_run=args.dry_run, strict=args.strict)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse `argv`, run the command and return its exit code."""
    settings = get_settings()
    logging.basicConfig(
        level=settings.LOG_LEVEL,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise ConfigError(f"a command is required: {', '.join(COMMANDS)}")
        run(args)
    except MechcatError as exc:
        logger.debug("Command failed", exc_info=True)
        logger.error("%s: %s", type(exc).__name__, exc)
        print(f"mechcat: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except Exception:
        logger.exception("Unexpected failure")
        print("mechcat: internal error, see log", file=sys.stderr)
        return 1
    return 0
