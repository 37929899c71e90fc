#!/usr/bin/env python3
"""
Command line front end: bounds, comparisons, matrices, tau tables, oracles and verification
"""

import argparse
import logging
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from pydantic import ValidationError

from config import Settings, settings as default_settings
from errors import PolicyError, RegionBoundError, UsageError
from models import (
    Architecture,
    Command,
    GammaFamily,
    OrientedArrangement1D,
    OrientedArrangement2D,
    OutputFormat,
    ReLUNetwork,
    RunConfig,
    SubnetworkPartition,
)
from services.arrangement_service import ArrangementService, histogram_of_sigma
from services.bound_service import BoundService, naive_bound, prior_product_bound
from services.gamma_service import FAMILY_NAMES, GammaService, conjecture_tau2, tau_closed_form
from services.network_service import NetworkService
from services.report_service import Report, ReportService
from services.verification_service import SUITES, VerificationService

logger = logging.getLogger(__name__)

ORACLE_ACTIONS = ("tau1", "sigma", "cells", "search", "net", "subnet")


class CommandRunner:
    """Runs one parsed command against freshly built services"""

    def __init__(self, settings: Settings):
        self.settings = settings
        self.gamma_service = GammaService(settings)
        self.bound_service = BoundService(settings)
        self.arrangement_service = ArrangementService(settings)
        self.network_service = NetworkService(settings, self.arrangement_service)
        self.verification_service = VerificationService(
            settings, self.gamma_service, self.bound_service, self.arrangement_service, self.network_service,
        )
        self.report_service = ReportService()

    def run(self, config: RunConfig) -> Tuple[Report, int]:
        handlers = {
            Command.BOUND: self.cmd_bound,
            Command.COMPARE: self.cmd_compare,
            Command.VERIFY: self.cmd_verify,
            Command.TAU: self.cmd_tau,
            Command.MATRIX: self.cmd_matrix,
            Command.ORACLE: self.cmd_oracle,
        }
        return handlers[config.command](config)

    def _architecture(self, config: RunConfig) -> Architecture:
        if not config.arch:
            raise UsageError(f"{config.command.value} needs --arch")
        return Architecture.parse(config.arch)

    def _growth(self, family: GammaFamily, arch: Architecture) -> Optional[int]:
        width = arch.constant_width
        if width is None:
            return None
        return self.bound_service.growth_rate(family, min(arch.n0, width), width)

    def cmd_bound(self, config: RunConfig) -> Tuple[Report, int]:
        arch = self._architecture(config)
        family = self.gamma_service.family(config.family)
        if family.conjectured and not config.allow_conjecture:
            raise PolicyError(f"family {family.name} rests on a conjecture; pass --allow-conjecture")

        if config.partition:
            partition = SubnetworkPartition.parse(config.partition)
            subs = [self.bound_service.composed_family(family, block) for block in partition.blocks(arch)]
            result = self.bound_service.subnet_compose(subs, partition, arch)
        else:
            result = self.bound_service.compose(family, arch)
        logger.info(f"Bound for {arch} with {family.name}: {result.bound}")
        report = self.report_service.bound_report(result, family.status.value, self._growth(family, arch))
        return report, 0

    def cmd_compare(self, config: RunConfig) -> Tuple[Report, int]:
        arch = self._architecture(config)
        bar_bound = self.bound_service.compose_bound(self.gamma_service.family("bar"), arch)
        rows: List[Dict[str, Any]] = []
        for family in self.gamma_service.families():
            bound = self.bound_service.compose_bound(family, arch)
            rows.append({
                "family": family.name,
                "status": family.status.value,
                "conjectured": family.conjectured,
                "bound": bound,
                "growth": self._growth(family, arch),
                "ratio_to_bar": Fraction(bound, bar_bound),
            })
        report = self.report_service.compare_report(
            str(arch), rows, prior_product_bound(arch), naive_bound(arch),
        )
        return report, 0

    def cmd_verify(self, config: RunConfig) -> Tuple[Report, int]:
        if config.suite != "all" and config.suite not in SUITES:
            raise UsageError(f"unknown suite {config.suite!r}; expected all or one of {', '.join(SUITES)}")
        ledger = self.verification_service.run(
            config.suite, p1=config.p1, trials=config.trials, seed=config.seed, out_dir=config.out_dir,
        )
        return self.report_service.ledger_report(ledger), 1 if ledger.failed else 0

    def tau_entry(self, p0: int, p1: int) -> Dict[str, Any]:
        if p0 == 1 or p0 >= p1:
            return {"p0": p0, "p1": p1, "status": "proven-closed-form", "histogram": tau_closed_form(p0, p1)}
        if p0 == 2:
            return {"p0": p0, "p1": p1, "status": "conjectured", "histogram": conjecture_tau2(p1)}
        return {
            "p0": p0, "p1": p1, "status": "unknown-upper-bound",
            "histogram": self.gamma_service.gamma_star_recursive(p0, p1),
        }

    def cmd_tau(self, config: RunConfig) -> Tuple[Report, int]:
        if config.p0 is not None and config.p1 is not None:
            entries = [self.tau_entry(config.p0, config.p1)]
        else:
            size = self._p1_or_default(config)
            entries = [self.tau_entry(p0, p1) for p0 in range(1, size + 1) for p1 in range(1, size + 1)]
        return self.report_service.tau_report(entries), 0

    def cmd_matrix(self, config: RunConfig) -> Tuple[Report, int]:
        family = self.gamma_service.family(config.family)
        p1 = self._p1_or_default(config)
        if config.p0 is not None and config.p0 < 0:
            raise UsageError(f"--p0 must be non-negative, got {config.p0}")
        matrix = self.bound_service.build_bound_matrix(family, p1)
        growth = self.bound_service.growth_rate(family, p1 if config.p0 is None else min(config.p0, p1), p1)
        return self.report_service.matrix_report(matrix, family.status.value, growth), 0

    def cmd_oracle(self, config: RunConfig) -> Tuple[Report, int]:
        oracle = self.arrangement_service
        if config.action == "tau1":
            p1 = self._require_p1(config)
            joined, closed = oracle.oracle_tau1(p1), tau_closed_form(1, p1)
            report = self.report_service.histogram_report(
                f"Exhaustive tau1 oracle p1={p1}",
                {"p1": str(p1), "closed_form": str(closed), "matches": str(joined == closed).lower()},
                joined,
            )
            return report, 0 if joined == closed else 1

        if config.action == "sigma":
            sigma = self._parse_sigma(config.sigma)
            histogram = histogram_of_sigma(sigma)
            points = OrientedArrangement1D(points=tuple(range(1, len(sigma) + 1)), orientations=sigma)
            geometric = oracle.activation_histogram_1d(points)
            report = self.report_service.histogram_report(
                f"Orientation {config.sigma}",
                {"p1": str(len(sigma)), "geometric_match": str(geometric == histogram).lower()},
                histogram,
            )
            return report, 0 if geometric == histogram else 1

        if config.action == "subnet":
            arch = self._architecture(config)
            estimate = self.network_service.empirical_subnet_histogram(
                arch.widths, arch.n0, config.trials, config.seed,
            )
            report = self.report_service.histogram_report(
                f"Sampled subnetwork histogram for {arch}",
                {"p0": str(arch.n0), "topology": "x".join(map(str, arch.widths)),
                 "seed": str(config.seed), "trials": str(config.trials), "status": "empirical lower bound"},
                estimate,
            )
            return report, 0

        if config.action == "cells":
            if config.input_path:
                arr = self._load(config.input_path, OrientedArrangement2D)
            else:
                arr = oracle.hot_center_arrangement(self._require_p1(config))
            cells = oracle.enumerate_cells_2d(arr)
            histogram = oracle.activation_histogram_2d(arr)
            report = self.report_service.histogram_report(
                f"Cells of {arr.size} oriented lines",
                {"cells": str(len(cells)), "general_position": str(oracle.is_general_position(arr)).lower()},
                histogram,
            )
            report.headers = ["sign", "active", "x", "y"]
            report.rows = [
                ["".join(map(str, c.sign.bits)), str(c.sign.ones), str(c.witness[0]), str(c.witness[1])]
                for c in cells
            ]
            report.payload["cells"] = [c.model_dump(mode="json") for c in cells]
            return report, 0

        if config.action == "search":
            p1 = self._require_p1(config)
            result = oracle.search_tau2(p1, config.trials, config.seed)
            if result.counterexample is not None:
                oracle.write_counterexample(result.counterexample, config.out_dir)
            return self.report_service.search_report(result, conjecture_tau2(p1)), 1 if result.counterexample else 0

        if config.action == "net":
            if not config.input_path:
                raise UsageError("oracle net needs --input with a network JSON file")
            count = self.network_service.count_regions_1d_net(self._load(config.input_path, ReLUNetwork))
            return self.report_service.region_report(count), 0

        raise UsageError(f"oracle action must be one of {', '.join(ORACLE_ACTIONS)}")

    @staticmethod
    def _p1_or_default(config: RunConfig, default: int = 6) -> int:
        if config.p1 is None:
            return default
        if config.p1 < 1:
            raise UsageError(f"--p1 must be positive, got {config.p1}")
        return config.p1

    @staticmethod
    def _parse_sigma(text: Optional[str]) -> Tuple[int, ...]:
        if not text or any(ch not in "+-" for ch in text):
            raise UsageError(f'oracle sigma needs --sigma made of "+" and "-", got {text!r}')
        return tuple(1 if ch == "+" else -1 for ch in text)

    @staticmethod
    def _require_p1(config: RunConfig) -> int:
        if config.p1 is None:
            raise UsageError(f"{config.command.value} {config.action or ''} needs --p1".replace("  ", " "))
        return config.p1

    @staticmethod
    def _load(path: str, model):
        try:
            return model.model_validate_json(Path(path).read_text())
        except OSError as e:
            raise UsageError(f"cannot read {path}: {str(e)}")
        except ValidationError as e:
            raise UsageError(f"{path} is not a valid {model.__name__}: {e.errors()[0]['msg']}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--arch", help='architecture "n0xn1x...xnL", e.g. 3x6x6')
    common.add_argument("--family", default="star", help=f"one of: {', '.join(FAMILY_NAMES)}")
    common.add_argument("--partition", help='subnetwork boundaries, e.g. "0,2,4"')
    common.add_argument("--p0", type=int)
    common.add_argument("--p1", type=int)
    common.add_argument("--trials", type=int)
    common.add_argument("--seed", type=int, help="defaults to REGIONBOUND_SEED")
    common.add_argument("--format", default="text", choices=[f.value for f in OutputFormat])
    common.add_argument("--out-dir")
    common.add_argument("--allow-conjecture", action="store_true")
    common.add_argument("--suite", default="all", help=f"all or one of: {', '.join(SUITES)}")
    common.add_argument("--input", help="JSON arrangement or network for the oracle")
    common.add_argument("--sigma", help='orientations of points on a line, e.g. "+-+"')

    parser = argparse.ArgumentParser(
        prog="regionbound",
        description="Exact upper bounds on the number of linear regions of ReLU networks",
    )
    commands = parser.add_subparsers(dest="command", required=True)
    commands.add_parser("bound", parents=[common], help="bound for one architecture and family")
    commands.add_parser("compare", parents=[common], help="bounds of every family side by side")
    commands.add_parser("verify", parents=[common], help="run verification suites")
    commands.add_parser("tau", parents=[common], help="table of known activation histogram joins")
    commands.add_parser("matrix", parents=[common], help="print a bound matrix")
    oracle = commands.add_parser("oracle", parents=[common], help="brute-force arrangement oracles")
    oracle.add_argument("action", choices=ORACLE_ACTIONS)
    return parser


def parse_config(argv: Optional[Sequence[str]], settings: Settings) -> RunConfig:
    args = build_parser().parse_args(argv)
    return RunConfig(
        command=Command(args.command),
        arch=args.arch,
        family=args.family,
        partition=args.partition,
        seed=settings.seed if args.seed is None else args.seed,
        trials=settings.trials if args.trials is None else args.trials,
        output_format=OutputFormat(args.format),
        allow_conjecture=args.allow_conjecture,
        p0=args.p0,
        p1=args.p1,
        suite=args.suite,
        action=getattr(args, "action", None),
        input_path=args.input,
        sigma=args.sigma,
        out_dir=args.out_dir or settings.out_dir,
    )


def main(argv: Optional[Sequence[str]] = None, settings: Optional[Settings] = None) -> int:
    settings = settings or default_settings
    logging.basicConfig(
        level=settings.log_level.upper(),
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    config = parse_config(argv, settings)
    runner = CommandRunner(settings)
    try:
        report, exit_code = runner.run(config)
    except RegionBoundError as e:
        logger.error(f"{config.command.value} failed: {str(e)}")
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except ValidationError as e:
        logger.error(f"{config.command.value} rejected its input: {str(e)}")
        print(f"error: {e}", file=sys.stderr)
        return UsageError.exit_code

    print(runner.report_service.render(report, config.output_format))
    return exit_code


if __name__ == "__main__":
    sys.exit(main())
