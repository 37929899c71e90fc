"""
Histogram lattice: suffix-sum order, join, clipping, shift and path-count operators
"""

from math import comb
from typing import Iterable, List

from errors import DomainError
from models import Histogram


def from_suffix_sums(sums: List[int]) -> Histogram:
    """Inverse of Histogram.suffix_sums (sums must be non-increasing)"""
    return Histogram.of(
        sums[j] - (sums[j + 1] if j + 1 < len(sums) else 0) for j in range(len(sums))
    )


def dominates(v: Histogram, w: Histogram) -> bool:
    """v ⪯ w: every suffix sum of v is at most the matching suffix sum of w"""
    sv, sw = v.suffix_sums(), w.suffix_sums()
    if len(sv) > len(sw):
        return False
    return all(a <= b for a, b in zip(sv, sw))


def join(v: Histogram, w: Histogram) -> Histogram:
    """Least upper bound: suffix sums are the pointwise max"""
    sv, sw = v.suffix_sums(), w.suffix_sums()
    size = max(len(sv), len(sw))
    sv += [0] * (size - len(sv))
    sw += [0] * (size - len(sw))
    return from_suffix_sums([max(a, b) for a, b in zip(sv, sw)])


def join_all(histograms: Iterable[Histogram]) -> Histogram:
    """Join of a collection; the empty join is the zero histogram"""
    best: List[int] = []
    for histogram in histograms:
        sums = histogram.suffix_sums()
        if len(sums) > len(best):
            best += [0] * (len(sums) - len(best))
        for j, s in enumerate(sums):
            if s > best[j]:
                best[j] = s
    return from_suffix_sums(best)


def clip(v: Histogram, j: int) -> Histogram:
    """cl_j: move all mass above index j down to j"""
    if j < 0:
        raise DomainError(f"clip index must be non-negative, got {j}")
    if v.size <= j + 1:
        return v
    head = list(v.entries[:j])
    return Histogram.of(head + [sum(v.entries[j:])])


def shift(v: Histogram, times: int = 1) -> Histogram:
    """pi^times: every index moves up by `times`"""
    if times < 0:
        raise DomainError(f"shift count must be non-negative, got {times}")
    if not v.entries:
        return v
    return Histogram.of([0] * times + list(v.entries))


def k_operator(v: Histogram, delta_i: int, delta_j: int) -> Histogram:
    """K_{di,dj}(v) = C(dj, di) * pi^{dj-di}(v), the number of monotone paths times the shift"""
    if delta_i < 0 or delta_j < delta_i:
        raise DomainError(f"K operator needs 0 <= delta_i <= delta_j, got ({delta_i}, {delta_j})")
    return comb(delta_j, delta_i) * shift(v, delta_j - delta_i)
