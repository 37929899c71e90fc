import itertools
import json
import random
from fractions import Fraction

import pytest

from errors import DomainError, OracleCapError
from models import Counterexample, Histogram, OrientedArrangement1D, OrientedArrangement2D
from services.arrangement_service import histogram_of_sigma, strict_feasible_point
from services.bound_service import schlaefli_count
from services.gamma_service import conjecture_tau2, tau_closed_form
from services.lattice_service import dominates


def h(*entries: int) -> Histogram:
    return Histogram(entries=entries)


def lines(*rows) -> OrientedArrangement2D:
    return OrientedArrangement2D(lines=rows)


THREE_LINES = lines((1, 0, 0), (0, 1, 0), (-1, -1, 1))


class TestLine:
    @pytest.mark.parametrize("sigma,expected", [
        ((1, 1, -1), h(0, 1, 2, 1)),
        ((-1, -1, -1), h(1, 1, 1, 1)),
        ((), h(1)),
    ])
    def test_histogram_of_sigma(self, sigma, expected):
        assert histogram_of_sigma(sigma) == expected

    def test_geometric_evaluation_matches(self, arrangement_service):
        for sigma in itertools.product((-1, 1), repeat=5):
            arr = OrientedArrangement1D(points=tuple(range(5)), orientations=sigma)
            assert arrangement_service.activation_histogram_1d(arr) == histogram_of_sigma(sigma)

    def test_arrangement_validation(self):
        with pytest.raises(ValueError):
            OrientedArrangement1D(points=(2, 1), orientations=(1, 1))
        with pytest.raises(ValueError):
            OrientedArrangement1D(points=(1, 2), orientations=(1, 0))
        with pytest.raises(ValueError):
            OrientedArrangement1D(points=(0.5,), orientations=(1,))

    @pytest.mark.parametrize("p1", range(1, 13))
    def test_oracle_tau1(self, arrangement_service, p1):
        assert arrangement_service.oracle_tau1(p1) == tau_closed_form(1, p1)

    @pytest.mark.slow
    @pytest.mark.parametrize("p1", range(13, 17))
    def test_oracle_tau1_large(self, arrangement_service, p1):
        assert arrangement_service.oracle_tau1(p1) == tau_closed_form(1, p1)

    def test_oracle_cap(self, arrangement_service):
        with pytest.raises(OracleCapError):
            arrangement_service.oracle_tau1(arrangement_service.settings.tau1_enumeration_cap + 1)


class TestPlane:
    def test_feasibility(self):
        point = strict_feasible_point([(1, 0, 0), (0, 1, 0), (-1, -1, 1)])
        assert point is not None
        x, y = point
        assert x > 0 and y > 0 and x + y < 1
        assert strict_feasible_point([(1, 0, 0), (-1, 0, 0)]) is None
        assert strict_feasible_point([(1, 1, 0), (-1, -1, 0)]) is None

    def test_cell_counts(self, arrangement_service):
        assert len(arrangement_service.enumerate_cells_2d(THREE_LINES)) == 7
        assert len(arrangement_service.enumerate_cells_2d(lines((1, 0, 0), (1, 0, -1)))) == 3
        single = arrangement_service.enumerate_cells_2d(lines((1, 2, 3)))
        assert sorted(cell.sign.bits for cell in single) == [(0,), (1,)]

    def test_witnesses_lie_in_their_cells(self, arrangement_service):
        arr = arrangement_service.random_arrangement(6, random.Random("witness"))
        for cell in arrangement_service.enumerate_cells_2d(arr):
            x, y = cell.witness
            for bit, (a, b, c) in zip(cell.sign.bits, arr.lines):
                value = a * x + b * y + c
                assert value > 0 if bit else value < 0

    def test_hot_center_triangle(self, arrangement_service):
        assert arrangement_service.activation_histogram_2d(THREE_LINES) == h(0, 3, 3, 1)
        assert arrangement_service.activation_histogram_2d(THREE_LINES.flipped(0b111)) == h(1, 3, 3)

    def test_degenerate_line(self, arrangement_service):
        with pytest.raises(DomainError):
            arrangement_service.enumerate_cells_2d(lines((0, 0, 1)))
        assert not arrangement_service.is_general_position(lines((0, 0, 1)))

    def test_general_position(self, arrangement_service):
        assert arrangement_service.is_general_position(THREE_LINES)
        assert not arrangement_service.is_general_position(lines((1, 0, 0), (2, 0, 1)))
        assert not arrangement_service.is_general_position(lines((1, 0, 0), (0, 1, 0), (1, 1, 0)))

    def test_cell_cap(self, arrangement_service):
        arr = arrangement_service.hot_center_arrangement(arrangement_service.settings.cell_enumeration_cap + 1)
        with pytest.raises(OracleCapError):
            arrangement_service.activation_histogram_2d(arr)

    @pytest.mark.parametrize("p1", range(2, 9))
    def test_hot_center_attains_conjecture(self, arrangement_service, p1):
        arr = arrangement_service.hot_center_arrangement(p1)
        assert arrangement_service.is_general_position(arr)
        assert arrangement_service.activation_histogram_2d(arr) == conjecture_tau2(p1)

    @pytest.mark.parametrize("p1", [3, 4, 5, 6])
    def test_random_arrangements(self, arrangement_service, p1):
        rng = random.Random(f"random:{p1}")
        for _ in range(10):
            arr = arrangement_service.random_arrangement(p1, rng)
            assert arrangement_service.is_general_position(arr)
            cells = arrangement_service.enumerate_cells_2d(arr)
            assert len(cells) == schlaefli_count(2, p1)
            histogram = arrangement_service.activation_histogram_2d(arr)
            assert histogram.norm() == len(cells)
            flipped = arrangement_service.activation_histogram_2d(arr.flipped((1 << p1) - 1))
            assert flipped == Histogram.of(reversed([histogram[i] for i in range(p1 + 1)]))
            for _, oriented in arrangement_service.orientation_histograms(arr):
                assert dominates(oriented, conjecture_tau2(p1))

    @pytest.mark.slow
    @pytest.mark.parametrize("p1", range(3, 9))
    def test_sampled_histograms_stay_below_conjecture(self, arrangement_service, p1):
        bound, samples, trial = conjecture_tau2(p1), 0, 0
        while samples < 10 ** 4:
            trial += 1
            arr = arrangement_service.random_arrangement(p1, random.Random(f"below:{p1}:{trial}"))
            for flip, histogram in arrangement_service.orientation_histograms(arr):
                assert dominates(histogram, bound), (trial, flip, histogram)
                samples += 1

    def test_rationals_round_trip_through_json(self):
        arr = lines((Fraction(1, 3), -2, Fraction(5, 7)))
        dumped = json.loads(arr.model_dump_json())
        assert dumped == {"lines": [["1/3", "-2", "5/7"]]}
        assert OrientedArrangement2D.model_validate(dumped) == arr


class TestSearch:
    @pytest.mark.parametrize("p1,trials", [(2, 50), (3, 200), (4, 200)])
    def test_join_equals_conjecture(self, arrangement_service, p1, trials):
        result = arrangement_service.search_tau2(p1, trials, seed=11)
        assert result.join == conjecture_tau2(p1)
        assert result.counterexample is None

    def test_deterministic(self, arrangement_service):
        first = arrangement_service.search_tau2(5, 20, seed=3)
        second = arrangement_service.search_tau2(5, 20, seed=3)
        assert first == second

    def test_search_cap(self, arrangement_service):
        with pytest.raises(OracleCapError):
            arrangement_service.search_tau2(arrangement_service.settings.search_cap + 1, 1, seed=0)

    def test_counterexample_artifact(self, arrangement_service, tmp_path):
        counterexample = Counterexample(
            p1=3, seed=7, trial=2, arrangement=THREE_LINES,
            histogram=h(0, 0, 0, 7), bound=conjecture_tau2(3),
        )
        path = arrangement_service.write_counterexample(counterexample, str(tmp_path))
        assert path.name == "counterexample_p3_seed7_trial2.json"
        assert Counterexample.model_validate_json(path.read_text()) == counterexample
