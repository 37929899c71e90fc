import pytest
from hypothesis import given, settings as hyp_settings, strategies as st
from pydantic import ValidationError

from errors import DomainError
from models import Histogram
from services.lattice_service import clip, dominates, from_suffix_sums, join, join_all, k_operator, shift
from tests.strategies import histograms


def h(*entries: int) -> Histogram:
    return Histogram(entries=entries)


e = Histogram.basis


class TestHistogram:
    def test_trailing_zeros_are_trimmed(self):
        assert h(1, 2, 0, 0) == h(1, 2)
        assert h(0, 0).entries == ()

    def test_rejects_negative_and_float_entries(self):
        with pytest.raises(ValidationError):
            h(1, -1)
        with pytest.raises(ValidationError):
            Histogram(entries=[1.5])

    def test_json_uses_decimal_strings(self):
        big = 42 ** 30
        assert Histogram(entries=[0, big]).model_dump(mode="json") == {"entries": ["0", str(big)]}
        assert Histogram.model_validate_json('{"entries": ["3", "0", "7"]}') == h(3, 0, 7)

    def test_arithmetic_and_printing(self):
        assert str(4 * e(2) + 16 * e(3)) == "4e2+16e3"
        assert str(Histogram.zero()) == "0"
        assert (h(1, 2) + e(3)).norm() == 4
        assert e(5)[9] == 0


class TestDominates:
    @pytest.mark.parametrize("v,w,expected", [
        (e(2), e(3), True),
        (e(3), e(2), False),
        (h(2, 0, 1), h(0, 2, 1), True),
    ])
    def test_examples(self, v, w, expected):
        assert dominates(v, w) is expected

    @given(histograms(), histograms())
    def test_antisymmetric(self, v, w):
        if dominates(v, w) and dominates(w, v):
            assert v == w

    @given(histograms(), histograms())
    def test_norm_monotone(self, v, w):
        if dominates(v, w):
            assert v.norm() <= w.norm()

    @given(histograms(), histograms(), histograms(), histograms())
    def test_sum_monotone(self, v, v2, w, w2):
        v2, w2 = join(v, v2), join(w, w2)
        assert dominates(v + w, v2 + w2)


class TestJoin:
    def test_examples(self):
        assert join(h(2, 0, 1), h(0, 3)) == h(0, 2, 1)
        assert join_all(e(i) for i in range(7)) == e(6)
        assert join_all([]) == Histogram.zero()

    @given(histograms())
    def test_idempotent(self, v):
        assert join(v, v) == v

    @given(histograms(), histograms(), st.integers(min_value=0, max_value=14))
    def test_least_upper_bound(self, v, w, k):
        upper = join(v, w)
        assert dominates(v, upper) and dominates(w, upper)
        assert dominates(upper, v + w)
        for u in (upper + e(k), join(upper, e(k))):
            assert dominates(upper, u)

    @given(histograms())
    def test_suffix_sums_round_trip(self, v):
        assert from_suffix_sums(v.suffix_sums()) == v


class TestOperators:
    def test_clip_examples(self):
        assert clip(20 * e(3) + 15 * e(4) + 6 * e(5) + e(6), 3) == 42 * e(3)
        assert clip(e(2), 5) == e(2)
        assert clip(h(0, 0, 1, 2, 2, 1), 1) == 6 * e(1)
        with pytest.raises(DomainError):
            clip(e(1), -1)

    @given(histograms(), st.integers(min_value=0, max_value=14), st.integers(min_value=0, max_value=14))
    def test_clip_composes_to_min(self, v, j, k):
        assert clip(clip(v, k), j) == clip(v, min(j, k))

    @given(histograms(), histograms(), st.integers(min_value=0, max_value=14))
    def test_clip_keeps_order(self, v, u, j):
        w = join(v, u)
        assert dominates(clip(v, j), clip(w, j))

    @given(histograms(), st.integers(min_value=0, max_value=14))
    def test_clip_and_shift_keep_norm(self, v, j):
        assert clip(v, j).norm() == v.norm()
        assert shift(v).norm() == v.norm()

    @given(histograms())
    def test_shift_only_moves_up(self, v):
        assert dominates(v, shift(v))

    @given(histograms(), histograms())
    def test_shift_keeps_order(self, v, u):
        w = join(v, u)
        assert dominates(shift(v), shift(w))

    def test_shift_examples(self):
        assert shift(h(1, 2)) == h(0, 1, 2)
        assert shift(Histogram.zero()) == Histogram.zero()
        assert shift(e(1), 3) == e(4)

    @hyp_settings(max_examples=50)
    @given(histograms(), histograms(), st.integers(min_value=0, max_value=20))
    def test_shift_is_linear(self, v, w, c):
        assert shift(v + w) == shift(v) + shift(w)
        assert shift(c * v) == c * shift(v)

    def test_k_operator_examples(self):
        assert k_operator(e(1), 2, 4) == 6 * e(3)
        assert k_operator(h(1, 2, 3), 0, 0) == h(1, 2, 3)
        assert k_operator(h(1, 1), 1, 3) == 3 * e(2) + 3 * e(3)
        with pytest.raises(DomainError):
            k_operator(e(1), 3, 2)
