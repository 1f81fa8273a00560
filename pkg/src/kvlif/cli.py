"""Command-line entry point: ``kvlif <subcommand> [--config PATH] [--seed N] ...``.

Exit codes: 0 success, 2 configuration error, 3 numeric divergence, 4 I/O error.
Log verbosity comes from the ``KVLIF_LOG_LEVEL`` environment variable.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .config import PRESETS, ConfigError, load_config_file, resolve_config
from .experiments import COMMANDS
from .neurons import NEURON_KINDS
from .training import DivergenceError, NumericError

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGENCE, EXIT_IO = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="kvlif", description="KvLIF / LIF spiking-neuron experiments.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "dynamics": "single-neuron traces under a Poisson (or constant) drive",
        "sweep": "firing rate vs constant input intensity, and the false-positive scenario",
        "train": "train one network per neuron kind on a toy task",
        "robustness": "accuracy under a grid of noise levels",
        "energy": "AC/MAC operation counts and SOP energy of one evaluation pass",
        "shortwindow": "accuracy when inference uses fewer time steps",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text, description=text)
        p.add_argument("--config", help="YAML or JSON config file")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", default="runs", help="output root (default: runs)")
        p.add_argument("--neuron", choices=NEURON_KINDS, help="restrict to one neuron kind")
        p.add_argument("--preset", choices=tuple(PRESETS))
        if name == "train":
            p.add_argument("--resume", help="checkpoint to continue training from")
        if name in ("robustness", "energy", "shortwindow"):
            p.add_argument("--checkpoint", help="checkpoint file or train run directory (default: train now)")
    return parser


def _overrides(args) -> dict:
    over = {"experiment": args.command}
    if args.seed is not None:
        over["seed"] = args.seed
    if args.neuron is not None:
        over["neurons"] = [args.neuron]
    if args.preset is not None:
        over["preset"] = args.preset
    return over


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("KVLIF_LOG_LEVEL", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    args = build_parser().parse_args(argv)
    try:
        file_data = load_config_file(args.config) if args.config else {}
        cfg = resolve_config(file_data, _overrides(args))
        extra = {}
        if getattr(args, "resume", None):
            extra["resume"] = args.resume
        if getattr(args, "checkpoint", None):
            extra["checkpoint"] = args.checkpoint
        _, run_dir = COMMANDS[args.command](cfg, args.out, **extra)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (DivergenceError, NumericError) as e:
        print(f"numeric divergence: {e}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return EXIT_IO
    print(run_dir)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
