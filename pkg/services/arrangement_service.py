"""
Arrangement Service: exact oriented point arrangements on the line and oriented
line arrangements in the plane, with the conjecture search built on top
"""

import itertools
import logging
import math
import random
from fractions import Fraction
from pathlib import Path
from typing import Iterator, List, Optional, Sequence, Tuple

from config import Settings
from errors import DomainError, OracleCapError
from models import (
    Cell,
    Counterexample,
    Histogram,
    OrientedArrangement1D,
    OrientedArrangement2D,
    SignVector,
    TauSearchResult,
)
from services.gamma_service import conjecture_tau2
from services.lattice_service import dominates, from_suffix_sums, join_all

logger = logging.getLogger(__name__)

Constraint = Tuple[Fraction, Fraction, Fraction]  # a*x + b*y + c > 0
Point = Tuple[Fraction, Fraction]

# rationalization of tangent points; far finer than any angular gap used below
TANGENT_DENOMINATOR = 10 ** 6


def histogram_of_sigma(sigma: Sequence[int]) -> Histogram:
    """Activation histogram of p1 oriented points on a line, read off the orientations alone"""
    level = sum(1 for s in sigma if s == -1)
    counts = [0] * (len(sigma) + 1)
    counts[level] += 1
    for s in sigma:
        level += s
        counts[level] += 1
    return Histogram.of(counts)


def pick_between(lo: Optional[Fraction], hi: Optional[Fraction]) -> Fraction:
    if lo is not None and hi is not None:
        return (lo + hi) / 2
    if lo is not None:
        return lo + 1
    if hi is not None:
        return hi - 1
    return Fraction(0)


def strict_feasible_point(constraints: Sequence[Constraint]) -> Optional[Point]:
    """Interior point of {a*x + b*y + c > 0 for all rows}, or None; eliminates x, then solves for y"""
    lower, upper, y_rows = [], [], []
    for a, b, c in constraints:
        if a > 0:
            lower.append((a, b, c))
        elif a < 0:
            upper.append((a, b, c))
        else:
            y_rows.append((b, c))
    for a1, b1, c1 in lower:
        for a2, b2, c2 in upper:
            y_rows.append((a1 * b2 - a2 * b1, a1 * c2 - a2 * c1))

    y_lo: Optional[Fraction] = None
    y_hi: Optional[Fraction] = None
    for beta, gamma in y_rows:
        if beta == 0:
            if gamma <= 0:
                return None
            continue
        bound = Fraction(-gamma) / beta
        if beta > 0:
            y_lo = bound if y_lo is None else max(y_lo, bound)
        else:
            y_hi = bound if y_hi is None else min(y_hi, bound)
    if y_lo is not None and y_hi is not None and y_lo >= y_hi:
        return None
    y = pick_between(y_lo, y_hi)

    x_lo = max((Fraction(-(b * y + c)) / a for a, b, c in lower), default=None)
    x_hi = min((Fraction(-(b * y + c)) / a for a, b, c in upper), default=None)
    if x_lo is not None and x_hi is not None and x_lo >= x_hi:
        return None
    x = pick_between(x_lo, x_hi)
    if all(a * x + b * y + c > 0 for a, b, c in constraints):
        return x, y
    return None


def _popcount(value: int) -> int:
    return bin(value).count("1")


def tangent_line(theta: float) -> Constraint:
    """Tangent to the unit circle near angle theta, active on the side of the origin"""
    t = Fraction(math.tan(theta / 2)).limit_denominator(TANGENT_DENOMINATOR)
    denominator = 1 + t * t
    cos, sin = (1 - t * t) / denominator, 2 * t / denominator
    return -cos, -sin, Fraction(1)


class ArrangementService:
    """Service for exact arrangement oracles"""

    def __init__(self, settings: Settings):
        self.settings = settings

    # ---------------------------------------------------------------- 1-D

    def activation_histogram_1d(self, arr: OrientedArrangement1D) -> Histogram:
        """Evaluate the pattern at one sample point per interval of the line"""
        points = list(arr.points)
        if not points:
            return Histogram.basis(0)
        samples = [points[0] - 1]
        samples += [(a + b) / 2 for a, b in zip(points, points[1:])]
        samples.append(points[-1] + 1)
        counts = [0] * (len(points) + 1)
        for x in samples:
            active = sum(
                1 for t, sigma in zip(points, arr.orientations)
                if (sigma == 1 and x > t) or (sigma == -1 and x < t)
            )
            counts[active] += 1
        return Histogram.of(counts)

    def oracle_tau1(self, p1: int) -> Histogram:
        """Join of histogram_of_sigma over all 2^p1 orientations"""
        cap = self.settings.tau1_enumeration_cap
        if p1 > cap:
            message = f"oracle_tau1 enumerates 2^p1 orientations; p1={p1} exceeds the cap {cap}"
            logger.warning(message)
            raise OracleCapError(message)
        if p1 < 0:
            raise DomainError(f"p1 must be non-negative, got {p1}")
        return join_all(histogram_of_sigma(sigma) for sigma in itertools.product((-1, 1), repeat=p1))

    # ---------------------------------------------------------------- 2-D

    def _check_lines(self, arr: OrientedArrangement2D) -> None:
        cap = self.settings.cell_enumeration_cap
        if arr.size > cap:
            message = f"cell enumeration is capped at {cap} lines, got {arr.size}"
            logger.warning(message)
            raise OracleCapError(message)
        for index, (a, b, _) in enumerate(arr.lines):
            if a == 0 and b == 0:
                raise DomainError(f"line {index} is degenerate: a = b = 0")

    def is_general_position(self, arr: OrientedArrangement2D) -> bool:
        """No degenerate line, no two parallel lines, no three through one point"""
        lines = arr.lines
        if any(a == 0 and b == 0 for a, b, _ in lines):
            return False
        for (a1, b1, _), (a2, b2, _) in itertools.combinations(lines, 2):
            if a1 * b2 - a2 * b1 == 0:
                return False
        for (a1, b1, c1), (a2, b2, c2), (a3, b3, c3) in itertools.combinations(lines, 3):
            det = a1 * (b2 * c3 - b3 * c2) - b1 * (a2 * c3 - a3 * c2) + c1 * (a2 * b3 - a3 * b2)
            if det == 0:
                return False
        return True

    def _cells(self, lines: Sequence[Constraint]) -> List[Tuple[int, Point]]:
        """(active mask, witness) for every nonempty open cell, by depth-first sign extension"""
        found: List[Tuple[int, Point]] = []

        def extend(prefix: List[Constraint], mask: int, witness: Point, depth: int) -> None:
            if depth == len(lines):
                found.append((mask, witness))
                return
            a, b, c = lines[depth]
            value = a * witness[0] + b * witness[1] + c
            for active in (True, False):
                row = (a, b, c) if active else (-a, -b, -c)
                rows = prefix + [row]
                if (value > 0 and active) or (value < 0 and not active):
                    point: Optional[Point] = witness
                else:
                    point = strict_feasible_point(rows)
                if point is not None:
                    extend(rows, mask | (1 << depth) if active else mask, point, depth + 1)

        extend([], 0, (Fraction(0), Fraction(0)), 0)
        return found

    def enumerate_cells_2d(self, arr: OrientedArrangement2D) -> List[Cell]:
        """Every sign vector with a nonempty open cell, each with an exact interior witness"""
        self._check_lines(arr)
        return [
            Cell.model_construct(sign=SignVector.from_mask(mask, arr.size), witness=witness)
            for mask, witness in sorted(self._cells(arr.lines), key=lambda item: item[0])
        ]

    def activation_histogram_2d(self, arr: OrientedArrangement2D) -> Histogram:
        self._check_lines(arr)
        counts = [0] * (arr.size + 1)
        for mask, _ in self._cells(arr.lines):
            counts[_popcount(mask)] += 1
        return Histogram.of(counts)

    def orientation_histograms(self, arr: OrientedArrangement2D) -> Iterator[Tuple[int, Histogram]]:
        """(flip mask, histogram) for all 2^p1 re-orientations, sharing one cell enumeration"""
        self._check_lines(arr)
        masks = [mask for mask, _ in self._cells(arr.lines)]
        for flip in range(1 << arr.size):
            counts = [0] * (arr.size + 1)
            for mask in masks:
                counts[_popcount(mask ^ flip)] += 1
            yield flip, Histogram.of(counts)

    def hot_center_arrangement(self, p1: int) -> OrientedArrangement2D:
        """Tangents to the unit circle, nearly evenly spaced, all active at the centre"""
        if p1 < 1:
            raise DomainError(f"p1 must be positive, got {p1}")
        # line k is turned by k*eps so that even p1 has no parallel opposite sides
        eps = math.pi / (2 * p1 * p1)
        lines = tuple(tangent_line(2 * math.pi * k / p1 + k * eps) for k in range(p1))
        return OrientedArrangement2D(lines=lines)

    def random_arrangement(self, p1: int, rng: random.Random) -> OrientedArrangement2D:
        """Seeded general-position sample: bounded random rationals or a jittered tangent polygon"""
        for _ in range(self.settings.max_resample):
            if rng.random() < 0.5:
                lines = tuple(self._random_line(rng) for _ in range(p1))
            else:
                lines = self._jittered_tangents(p1, rng)
            arr = OrientedArrangement2D(lines=lines)
            if self.is_general_position(arr):
                return arr
        raise DomainError(f"no general-position arrangement of {p1} lines after {self.settings.max_resample} draws")

    def _random_line(self, rng: random.Random) -> Constraint:
        bound, denominator = self.settings.coefficient_bound, self.settings.denominator_bound
        return tuple(
            Fraction(rng.randint(-bound, bound), rng.randint(1, denominator)) for _ in range(3)
        )

    def _jittered_tangents(self, p1: int, rng: random.Random) -> Tuple[Constraint, ...]:
        gap = 2 * math.pi / p1
        rotation = rng.uniform(0, 2 * math.pi)
        lines = []
        for k in range(p1):
            a, b, c = tangent_line(rotation + k * gap + rng.uniform(-0.4, 0.4) * gap)
            lines.append((-a, -b, -c) if rng.random() < 0.5 else (a, b, c))
        return tuple(lines)

    def search_tau2(self, p1: int, trials: int, seed: int) -> TauSearchResult:
        """Join activation histograms over sampled arrangements and all their orientations"""
        cap = self.settings.search_cap
        if p1 > cap:
            message = f"search_tau2 is capped at p1={cap}, got {p1}"
            logger.warning(message)
            raise OracleCapError(message)
        bound = conjecture_tau2(p1)
        best: List[int] = []
        counterexample: Optional[Counterexample] = None

        # trial 0 is the deterministic hot-centre construction
        for trial in range(trials + 1):
            if trial == 0:
                arr = self.hot_center_arrangement(p1)
            else:
                arr = self.random_arrangement(p1, random.Random(f"{seed}:{trial}"))
            for flip, histogram in self.orientation_histograms(arr):
                sums = histogram.suffix_sums()
                best += [0] * (len(sums) - len(best))
                for j, s in enumerate(sums):
                    best[j] = max(best[j], s)
                if counterexample is None and not dominates(histogram, bound):
                    counterexample = Counterexample(
                        p1=p1, seed=seed, trial=trial,
                        arrangement=arr.flipped(flip), histogram=histogram, bound=bound,
                    )
                    logger.warning(f"Histogram {histogram} escapes the conjectured bound {bound} (trial {trial})")
            if trial and trial % 100 == 0:
                logger.info(f"search_tau2 p1={p1}: {trial}/{trials} arrangements searched")

        return TauSearchResult(
            p1=p1, trials=trials, seed=seed,
            join=from_suffix_sums(best), counterexample=counterexample,
        )

    def write_counterexample(self, counterexample: Counterexample, out_dir: str) -> Path:
        """Dump a replayable JSON artifact"""
        directory = Path(out_dir)
        directory.mkdir(parents=True, exist_ok=True)
        path = directory / (
            f"counterexample_p{counterexample.p1}_seed{counterexample.seed}_trial{counterexample.trial}.json"
        )
        path.write_text(counterexample.model_dump_json(indent=2))
        logger.info(f"Counterexample written to {path}")
        return path
