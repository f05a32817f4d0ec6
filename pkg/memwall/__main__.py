# This file is part of memwall
#
# Copyright (C) 2023 The memwall authors
#
# This software is free software: you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# This software is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with this software.  If not, see <https://www.gnu.org/licenses/>.

"""Memwall command line driver."""

import sys
import logging
import argparse

from memwall import commands
from memwall.report import FORMATS, output_report
from memwall.model_spec import PRECISION_BYTES
from memwall.roofline import DEFAULT_DIVISOR
from memwall.train_memory import C_LIN, OPTIMIZER_STATE
import memwall.errors

EXIT_IO_ERROR = 2
EXIT_VALIDATION_ERROR = 3
EXIT_OVERFLOW = 4

VALIDATION_ERRORS = (
    memwall.errors.DocumentError,
    memwall.errors.ValidationError,
    memwall.errors.TrendFileError,
    memwall.errors.DegenerateFit,
    memwall.errors.UnknownMetric,
    memwall.errors.UnknownDevice,
    memwall.errors.UnknownPreset,
    memwall.errors.UndecodableInput,
)


class ArgumentParser(argparse.ArgumentParser):
    """Argument parser reporting bad options as validation errors."""

    def error(self, message):
        """Print usage and message, then exit as a validation error."""
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION_ERROR, f"{self.prog}: error: {message}\n")


def output_options():
    """Options shared by every command that writes a report."""
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument(
        "--format", choices=FORMATS, default="csv", help="Report format."
    )
    parser.add_argument(
        "--emit",
        choices=["gnuplot-data"],
        default=None,
        help="Emit CSV rows under a commented column header.",
    )
    return parser


def workload_options():
    """Options describing the inference scenario."""
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument(
        "--seq",
        default="128",
        help="Sequence length, or a comma separated sweep (default: 128).",
    )
    parser.add_argument("--batch", default="1", help="Batch size.")
    parser.add_argument(
        "--precision",
        choices=list(PRECISION_BYTES),
        default="int8",
        help="Storage precision of weights and activations.",
    )
    return parser


def inference_options():
    """Options of the inference cost analyses."""
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument(
        "--mode",
        choices=["encoder", "decoder"],
        default=None,
        help="Inference mode (default: the model's own class).",
    )
    parser.add_argument(
        "--elementwise",
        action="store_true",
        help="Count softmax, normalization, activation and residuals.",
    )
    parser.add_argument(
        "--embeddings",
        action="store_true",
        help="Count embedding lookups and the LM head.",
    )
    parser.add_argument(
        "--prompt-len",
        default="0",
        help="Prompt tokens processed before decoder generation.",
    )
    return parser


def cli_parser():
    """Build the command line parser."""
    parser = ArgumentParser(
        prog="memwall",
        description="Analytical memory-wall modeling of Transformers.",
    )
    parser.add_argument(
        "-d",
        "--debug",
        action="count",
        default=0,
        help="Set debug level (up to -ddd).",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    common = [output_options(), workload_options()]

    analyze = subparsers.add_parser(
        "analyze",
        parents=common + [inference_options()],
        help="Count FLOPs, MOPs and arithmetic intensity.",
    )
    analyze.add_argument("models", nargs="+", help="Model file or preset.")
    analyze.add_argument(
        "--per-layer", action="store_true", help="One row per kernel."
    )

    roofline = subparsers.add_parser(
        "roofline",
        parents=common + [inference_options()],
        help="Estimate roofline latency on hardware.",
    )
    roofline.add_argument("models", nargs="+", help="Model file or preset.")
    roofline.add_argument(
        "--hardware",
        required=True,
        help="Hardware CSV, hardware document or bundled device name.",
    )
    roofline.add_argument(
        "--device",
        action="append",
        default=[],
        help="Select a device of the hardware CSV (repeatable).",
    )
    roofline.add_argument(
        "--divisor",
        default=str(DEFAULT_DIVISOR),
        help="Bytes of memory per trainable parameter.",
    )

    trend = subparsers.add_parser(
        "trends",
        parents=[output_options()],
        help="Fit growth rates per two years.",
    )
    trend.add_argument(
        "source",
        nargs="?",
        default=None,
        help="Trend CSV (default: the bundled dataset).",
    )
    trend.add_argument("--metric", default="all", help="Metric to fit.")
    trend.add_argument("--from", dest="year_from", type=float, default=None)
    trend.add_argument("--to", dest="year_to", type=float, default=None)
    trend.add_argument(
        "--exclude-tag",
        action="append",
        default=[],
        help="Drop rows carrying this tag (repeatable).",
    )

    memory = subparsers.add_parser(
        "memory", parents=common, help="Training memory footprint."
    )
    memory.add_argument("models", nargs="+", help="Model file or preset.")
    memory.add_argument(
        "--optimizer", choices=list(OPTIMIZER_STATE), default="adam"
    )
    memory.add_argument("--param-bytes", default="4")
    memory.add_argument("--state-bytes", default="4")
    memory.add_argument("--checkpoint-every", default=None)
    memory.add_argument("--checkpoint-sweep", action="store_true")
    memory.add_argument("--c-lin", default=str(C_LIN))
    memory.add_argument("--weight-bits", default=None)
    memory.add_argument(
        "--prune",
        default=None,
        help="Pruned fraction of the weights, structured or unstructured.",
    )

    return parser


def parse_command_line(argv=None):
    """Parse command line arguments and configure logging."""
    options = cli_parser().parse_args(argv)
    log_format = "%(levelname)s (%(funcName)s) %(message)s"
    level = 30 - (10 * (3 if options.debug > 3 else options.debug))
    logging.basicConfig(format=log_format, level=level)
    logging.addLevelName(3, "LEXER")
    logging.addLevelName(5, "PARSER")
    logging.addLevelName(7, "MODEL")
    return options


def _count(text, name, minimum=1):
    return commands.parse_counts(text, name, minimum)[0]


def _workload_args(options):
    return {
        "seqs": commands.parse_counts(options.seq, "seq"),
        "batch": _count(options.batch, "batch"),
        "precision": options.precision,
        "fmt": options.format,
    }


def run(options):
    """Run the selected command and return its report."""
    if options.command == "trends":
        return commands.cmd_trends(
            options.source,
            options.metric,
            options.year_from,
            options.year_to,
            options.exclude_tag,
            fmt=options.format,
        )
    if options.command == "memory":
        return commands.cmd_memory(
            options.models,
            options.optimizer,
            _count(options.param_bytes, "param-bytes"),
            _count(options.state_bytes, "state-bytes", minimum=0),
            (
                None
                if options.checkpoint_every is None
                else _count(options.checkpoint_every, "checkpoint-every")
            ),
            options.checkpoint_sweep,
            _count(options.c_lin, "c-lin"),
            (
                None
                if options.weight_bits is None
                else _count(options.weight_bits, "weight-bits")
            ),
            sparsity=(
                None
                if options.prune is None
                else commands.parse_sparsity(options.prune)
            ),
            **_workload_args(options),
        )
    inference = {
        "mode": options.mode,
        "elementwise": options.elementwise,
        "include_embeddings": options.embeddings,
        "prompt_len": _count(options.prompt_len, "prompt-len", minimum=0),
        **_workload_args(options),
    }
    if options.command == "roofline":
        return commands.cmd_roofline(
            options.models,
            options.hardware,
            options.device,
            divisor=_count(options.divisor, "divisor"),
            **inference,
        )
    return commands.cmd_analyze(
        options.models, per_layer=options.per_layer, **inference
    )


def main(argv=None):
    """Entry point for memwall."""
    options = parse_command_line(argv)
    try:
        report = run(options)
    except OSError as error:
        print(str(error), file=sys.stderr)
        return EXIT_IO_ERROR
    except VALIDATION_ERRORS as error:
        print(str(error), file=sys.stderr)
        return EXIT_VALIDATION_ERROR
    except memwall.errors.CountOverflow as error:
        print(str(error), file=sys.stderr)
        return EXIT_OVERFLOW
    output_report(report, sys.stdout, options.emit)
    return 0


if __name__ == "__main__":
    sys.exit(main())
