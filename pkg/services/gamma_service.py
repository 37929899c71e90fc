"""
Gamma Service: layer-wise bound families, closed-form activation histogram joins,
the improved recursive collection and the bound-condition validator
"""

import logging
import threading
from math import comb
from typing import Callable, Dict, Mapping, Optional, Tuple

from config import Settings
from errors import DomainError
from models import FamilyStatus, GammaFamily, Histogram, ValidationReport, Violation
from services.lattice_service import dominates, k_operator, shift

logger = logging.getLogger(__name__)

FAMILY_NAMES = ("hat", "tilde", "bar", "star", "star-conjecture")


def _check_range(name: str, p0: int, p1: int, low: int = 0) -> None:
    if p1 < 1 or p0 < low or p0 > p1:
        raise DomainError(f"{name} needs {low} <= p0 <= p1 and p1 >= 1, got ({p0}, {p1})")


def gamma_hat(p0: int, p1: int) -> Histogram:
    _check_range("gamma_hat", p0, p1)
    return Histogram.basis(p1, 2 ** p1)


def gamma_tilde(p0: int, p1: int) -> Histogram:
    _check_range("gamma_tilde", p0, p1)
    return Histogram.basis(p1, sum(comb(p1, j) for j in range(p0 + 1)))


def gamma_bar(p0: int, p1: int) -> Histogram:
    _check_range("gamma_bar", p0, p1)
    return Histogram.from_counts({p1 - j: comb(p1, j) for j in range(p0 + 1)})


def binomial_histogram(p1: int) -> Histogram:
    """sum_i C(p1, i) e_i: every pattern of p1 neurons attained once"""
    return Histogram.of(comb(p1, i) for i in range(p1 + 1))


def tau_closed_form(p0: int, p1: int) -> Histogram:
    """Activation histogram join where it is known: p0 = 1 or p0 >= p1"""
    if p1 < 1 or p0 < 0:
        raise DomainError(f"tau needs p0 >= 0 and p1 >= 1, got ({p0}, {p1})")
    if p0 == 0:
        return Histogram.basis(p1)
    if p0 >= p1:
        return binomial_histogram(p1)
    if p0 != 1:
        raise DomainError(
            f"tau_{p0}^{p1} has no known closed form; use conjecture_tau2 or gamma_star instead"
        )
    counts: Dict[int, int] = {p1: 1}
    for i in range((p1 + 1) // 2, p1):
        counts[i] = 2
    if p1 % 2 == 1:
        counts[(p1 - 1) // 2] = 1
    return Histogram.from_counts(counts)


def conjecture_tau2(p1: int) -> Histogram:
    """Conjectured activation histogram join for input dimension two"""
    if p1 < 2:
        raise DomainError(f"the two-dimensional conjecture needs p1 >= 2, got {p1}")
    counts: Dict[int, int] = {p1: 1}
    for i in range(p1 // 2, p1):
        counts[i] = p1
    if p1 % 2 == 0:
        counts[p1 // 2 - 1] = p1 // 2
    return Histogram.from_counts(counts)


def recursion_step(inner: Histogram, lower: Histogram) -> Histogram:
    """pi(inner) + lower"""
    return shift(inner) + lower


def gamma_star_explicit(p0: int, p1: int) -> Histogram:
    """Closed form of the improved collection for p1 >= p0 >= 2"""
    _check_range("gamma_star_explicit", p0, p1, low=2)
    gap = p1 - p0
    counts: Dict[int, int] = {}
    if gap % 2 == 0:
        counts[gap // 2] = 1
    for k in range(gap // 2 + 1, gap + 1):
        top = 2 * p0 + 2 * k - p1
        counts[k] = comb(top - 2, p0 - 1) + comb(top - 1, p0 - 1)
    for k in range(gap + 1, p1 + 1):
        counts[k] = comb(p1, p1 - k)
    return Histogram.from_counts(counts)


def gamma_star_k_expansion(p0: int, p1: int) -> Histogram:
    """Improved collection unfolded into K operators over the p0 = 1 anchors"""
    _check_range("gamma_star_k_expansion", p0, p1, low=2)
    total = Histogram.zero()
    for l in range(1, p1 - p0 + 2):
        total = total + k_operator(tau_closed_form(1, l), p0 - 2, p1 - l - 1)
    anchor = tau_closed_form(1, 1)
    for k in range(2, p0 + 1):
        total = total + k_operator(anchor, p0 - k, p1 - 1)
    return total


class GammaService:
    """Service for bound families and their memoized recursions"""

    def __init__(self, settings: Settings):
        self.settings = settings
        self._lock = threading.Lock()
        # (anchor name, p0, p1) -> histogram; write once per key
        self._memo: Dict[Tuple[str, int, int], Histogram] = {}
        self._families: Dict[str, GammaFamily] = {
            "hat": GammaFamily(name="hat", generator=gamma_hat),
            "tilde": GammaFamily(name="tilde", generator=gamma_tilde),
            "bar": GammaFamily(name="bar", generator=gamma_bar),
            "star": GammaFamily(name="star", generator=self.gamma_star_recursive),
            "star-conjecture": GammaFamily(
                name="star-conjecture",
                status=FamilyStatus.CONJECTURED,
                generator=self.star_conjecture,
            ),
        }

    def family(self, name: str) -> GammaFamily:
        try:
            return self._families[name]
        except KeyError:
            raise DomainError(f"unknown family {name!r}; expected one of {', '.join(FAMILY_NAMES)}")

    def families(self) -> Tuple[GammaFamily, ...]:
        return tuple(self._families[name] for name in FAMILY_NAMES)

    def gamma_star_recursive(self, p0: int, p1: int) -> Histogram:
        """Improved collection via the shift recursion anchored at tau_1"""
        _check_range("gamma_star_recursive", p0, p1, low=1)
        return self._unfold("star", p0, p1, self._star_anchor)

    def star_conjecture(self, p0: int, p1: int) -> Histogram:
        """Same recursion, additionally anchored at the conjectured tau_2"""
        _check_range("star_conjecture", p0, p1, low=1)
        return self._unfold("star-conjecture", p0, p1, self._conjecture_anchor)

    @staticmethod
    def _star_anchor(p0: int, p1: int) -> Optional[Histogram]:
        return tau_closed_form(1, p1) if p0 == 1 else None

    @staticmethod
    def _conjecture_anchor(p0: int, p1: int) -> Optional[Histogram]:
        if p0 == 1:
            return tau_closed_form(1, p1)
        if p0 == 2 and p1 >= 2:
            return conjecture_tau2(p1)
        return None

    def _unfold(
        self,
        key: str,
        p0: int,
        p1: int,
        anchor: Callable[[int, int], Optional[Histogram]],
    ) -> Histogram:
        """Fill the table column by column up to p1; entries with p0 > p1 read the diagonal"""
        cached = self._memo.get((key, p0, p1))
        if cached is not None:
            return cached

        def lookup(i: int, j: int) -> Histogram:
            return table[(key, min(i, j), j)]

        table: Dict[Tuple[str, int, int], Histogram] = {}
        for j in range(1, p1 + 1):
            for i in range(1, min(p0, j) + 1):
                entry = self._memo.get((key, i, j))
                if entry is None:
                    entry = anchor(i, j)
                if entry is None:
                    entry = recursion_step(lookup(min(i, j - 1), j - 1), lookup(i - 1, j - 1))
                table[(key, i, j)] = entry

        with self._lock:
            if len(self._memo) + len(table) > self.settings.cache_limit:
                logger.debug(f"Recursion memo reached {len(self._memo)} entries; clearing")
                self._memo.clear()
            for cell, entry in table.items():
                self._memo.setdefault(cell, entry)
            return self._memo.get((key, p0, p1), table[(key, p0, p1)])

    def validate_bound_condition(
        self,
        family: GammaFamily,
        p1_max: int,
        lower_bounds: Optional[Mapping[Tuple[int, int], Histogram]] = None,
    ) -> ValidationReport:
        """Check monotonicity in p0, support and every known lower bound up to p1_max"""
        if p1_max < 1:
            raise DomainError(f"p1_max must be at least 1, got {p1_max}")
        report = ValidationReport(family=family.name, p1_max=p1_max)
        extra = dict(lower_bounds or {})

        for p1 in range(1, p1_max + 1):
            column = [family.histogram(p0, p1) for p0 in range(p1 + 1)]
            for p0, histogram in enumerate(column):
                report.checked += 1
                if histogram.size > p1 + 1:
                    report.violations.append(Violation(
                        p0=p0, p1=p1, condition="support",
                        detail=f"{histogram} has support beyond index {p1}",
                    ))
                if p0 > 0 and not dominates(column[p0 - 1], histogram):
                    report.violations.append(Violation(
                        p0=p0, p1=p1, condition="monotonicity",
                        detail=f"gamma_{p0 - 1},{p1} = {column[p0 - 1]} is not below {histogram}",
                    ))
                for bound in self._known_lower_bounds(p0, p1, extra):
                    if not dominates(bound, histogram):
                        report.violations.append(Violation(
                            p0=p0, p1=p1, condition="lower-bound",
                            detail=f"known lower bound {bound} is not below {histogram}",
                        ))

        if report.violations:
            logger.warning(f"Family {family.name} violates the bound condition {len(report.violations)} times")
        else:
            logger.info(f"Family {family.name} satisfies the bound condition up to p1={p1_max}")
        return report

    @staticmethod
    def _known_lower_bounds(p0: int, p1: int, extra: Dict[Tuple[int, int], Histogram]):
        if p0 == 0:
            # only the single region is known, so any norm-one histogram qualifies
            bounds = [Histogram.basis(0)]
        elif p0 == 1 or p0 >= p1:
            bounds = [tau_closed_form(p0, p1)]
        else:
            bounds = []
        if (p0, p1) in extra:
            bounds.append(extra[(p0, p1)])
        return bounds
