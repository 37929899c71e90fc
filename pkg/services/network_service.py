"""
Network Service: exact activation patterns of small ReLU networks with
one-dimensional input, and sampled lower-bound estimates of subnetwork histograms
"""

import logging
import random
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from config import Settings
from errors import DomainError, OracleCapError
from models import (
    DenseLayer,
    FamilyStatus,
    Histogram,
    Pattern,
    PiecewiseLinearPath,
    ReLUNetwork,
    RegionCount,
    SubnetGammaFamily,
)
from services.arrangement_service import ArrangementService, pick_between
from services.lattice_service import join_all

logger = logging.getLogger(__name__)


class _Piece:
    """Open interval (lo, hi) of the input line, or a single point when `point` is set"""

    __slots__ = ("lo", "hi", "point", "slope", "intercept", "pattern")

    def __init__(self, lo, hi, point, slope, intercept, pattern):
        self.lo: Optional[Fraction] = lo
        self.hi: Optional[Fraction] = hi
        self.point: Optional[Fraction] = point
        self.slope: Tuple[Fraction, ...] = slope
        self.intercept: Tuple[Fraction, ...] = intercept
        self.pattern: Pattern = pattern

    def contains(self, x: Fraction) -> bool:
        return (self.lo is None or self.lo < x) and (self.hi is None or x < self.hi)


def _rectify(bits, slope, intercept):
    return (
        tuple(s if bit else Fraction(0) for bit, s in zip(bits, slope)),
        tuple(t if bit else Fraction(0) for bit, t in zip(bits, intercept)),
    )


def _signs(x: Fraction, slope, intercept) -> Tuple[int, ...]:
    return tuple(1 if s * x + t > 0 else 0 for s, t in zip(slope, intercept))


def min_active_histogram(patterns: Sequence[Pattern]) -> Histogram:
    """sum over patterns of e_{min_l |s_l|}"""
    counts: Dict[int, int] = {}
    for pattern in patterns:
        level = min(sum(bits) for bits in pattern)
        counts[level] = counts.get(level, 0) + 1
    return Histogram.from_counts(counts)


class NetworkService:
    """Service for exact one-dimensional region counting and subnetwork sampling"""

    def __init__(self, settings: Settings, arrangement_service: ArrangementService):
        self.settings = settings
        self.arrangement_service = arrangement_service

    def _propagate(self, net: ReLUNetwork) -> List[_Piece]:
        if net.input_dim != 1:
            raise DomainError(f"exact propagation needs input dimension 1, got {net.input_dim}")
        pieces = [_Piece(None, None, None, (Fraction(1),), (Fraction(0),), ())]
        budget = self.settings.breakpoint_budget

        for layer in net.layers:
            advanced: List[_Piece] = []
            for piece in pieces:
                slope = tuple(
                    sum((w * s for w, s in zip(row, piece.slope)), Fraction(0)) for row in layer.weights
                )
                intercept = tuple(
                    sum((w * t for w, t in zip(row, piece.intercept)), Fraction(0)) + b
                    for row, b in zip(layer.weights, layer.biases)
                )
                if piece.point is not None:
                    bits = _signs(piece.point, slope, intercept)
                    advanced.append(_Piece(
                        piece.lo, piece.hi, piece.point, *_rectify(bits, slope, intercept),
                        piece.pattern + (bits,),
                    ))
                    continue

                cuts = sorted({-t / s for s, t in zip(slope, intercept) if s != 0 and piece.contains(-t / s)})
                edges: List[Optional[Fraction]] = [piece.lo, *cuts, piece.hi]
                for index, (left, right) in enumerate(zip(edges, edges[1:])):
                    bits = _signs(pick_between(left, right), slope, intercept)
                    advanced.append(_Piece(
                        left, right, None, *_rectify(bits, slope, intercept), piece.pattern + (bits,),
                    ))
                    if index < len(cuts):
                        cut = cuts[index]
                        bits = _signs(cut, slope, intercept)
                        advanced.append(_Piece(
                            cut, cut, cut, *_rectify(bits, slope, intercept), piece.pattern + (bits,),
                        ))

            if len(advanced) > budget:
                logger.warning(f"Breakpoint budget {budget} exhausted at {len(advanced)} pieces")
                raise OracleCapError(f"breakpoint propagation produced {len(advanced)} pieces, budget is {budget}")
            pieces = advanced
        return pieces

    @staticmethod
    def _output_path(pieces: List[_Piece]) -> PiecewiseLinearPath:
        intervals = [piece for piece in pieces if piece.point is None]
        return PiecewiseLinearPath(
            breakpoints=tuple(piece.hi for piece in intervals[:-1]),
            slopes=tuple(piece.slope for piece in intervals),
            intercepts=tuple(piece.intercept for piece in intervals),
        )

    def propagate_1d(self, net: ReLUNetwork) -> PiecewiseLinearPath:
        """Network output on the whole input line as a piecewise affine path"""
        return self._output_path(self._propagate(net))

    def count_regions_1d_net(self, net: ReLUNetwork) -> RegionCount:
        """Exact number of attained activation patterns, including those at isolated breakpoints"""
        pieces = self._propagate(net)
        patterns = sorted({piece.pattern for piece in pieces})

        layer_histograms = []
        for depth in range(len(net.layers)):
            counts: Dict[int, int] = {}
            for prefix in {pattern[: depth + 1] for pattern in patterns}:
                active = sum(prefix[-1])
                counts[active] = counts.get(active, 0) + 1
            layer_histograms.append(Histogram.from_counts(counts))

        output = self._output_path(pieces)
        logger.debug(f"Network {net.widths}: {len(patterns)} patterns over {len(output.breakpoints) + 1} intervals")
        return RegionCount(
            count=len(patterns), layer_histograms=layer_histograms, patterns=patterns, output=output,
        )

    def random_network(self, widths: Sequence[int], rng: random.Random, input_dim: int = 1) -> ReLUNetwork:
        """Small random rational weights and biases"""
        layers = []
        previous = input_dim
        for width in widths:
            weights = tuple(
                tuple(Fraction(rng.randint(-5, 5), rng.randint(1, 4)) for _ in range(previous))
                for _ in range(width)
            )
            biases = tuple(Fraction(rng.randint(-10, 10), rng.randint(1, 4)) for _ in range(width))
            layers.append(DenseLayer(weights=weights, biases=biases))
            previous = width
        return ReLUNetwork(layers=tuple(layers))

    @staticmethod
    def hot_center_layer(p1: int) -> DenseLayer:
        """Breakpoints 1..p1, the first ceil(p1/2) active to their right, the rest to their left"""
        half = (p1 + 1) // 2
        weights = tuple((Fraction(1 if i <= half else -1),) for i in range(1, p1 + 1))
        biases = tuple(Fraction(-i if i <= half else i) for i in range(1, p1 + 1))
        return DenseLayer(weights=weights, biases=biases)

    def empirical_subnet_histogram(self, topology: Sequence[int], p0: int, trials: int, seed: int) -> Histogram:
        """Lower-bound estimate of the subnetwork histogram join; never an upper bound"""
        topology = tuple(topology)
        if not topology or any(width < 1 for width in topology):
            raise DomainError(f"topology needs positive widths, got {topology}")
        samples: List[Histogram] = []

        if p0 == 1:
            for trial in range(trials + 1):
                rng = random.Random(f"{seed}:{trial}")
                net = self.random_network(topology, rng)
                if trial == 0:
                    net = ReLUNetwork(layers=(self.hot_center_layer(topology[0]), *net.layers[1:]))
                samples.append(min_active_histogram(self.count_regions_1d_net(net).patterns))
        elif p0 == 2:
            if len(topology) != 1:
                raise DomainError("input dimension 2 is only supported for single-layer topologies")
            oracle = self.arrangement_service
            samples.append(oracle.activation_histogram_2d(oracle.hot_center_arrangement(topology[0])))
            for trial in range(1, trials + 1):
                arr = oracle.random_arrangement(topology[0], random.Random(f"{seed}:{trial}"))
                samples.append(oracle.activation_histogram_2d(arr))
        else:
            raise DomainError(f"empirical estimates exist for p0 in {{1, 2}}, got {p0}")

        logger.info(f"Sampled {len(samples)} networks of topology {topology} with input dimension {p0}")
        return join_all(samples)

    def empirical_family(self, topology: Sequence[int], trials: int, seed: int) -> SubnetGammaFamily:
        """Block family from sampled estimates; larger inputs reuse the largest supported estimate"""
        topology = tuple(topology)
        deepest = 2 if len(topology) == 1 and topology[0] <= self.settings.cell_enumeration_cap else 1
        estimates: Dict[int, Histogram] = {}

        def generator(p0: int) -> Histogram:
            if p0 == 0:
                return Histogram.basis(min(topology))
            key = min(p0, deepest)
            if key not in estimates:
                estimates[key] = self.empirical_subnet_histogram(topology, key, trials, seed)
            return estimates[key]

        return SubnetGammaFamily(
            name=f"empirical{topology}",
            topology=topology,
            status=FamilyStatus.EMPIRICAL,
            generator=generator,
        )

