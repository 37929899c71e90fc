"""
Bound Service: transformation rules, bound matrices and composed region bounds
"""

import logging
from math import comb
from typing import Dict, List, Optional, Sequence, Set, Tuple

from config import Settings
from errors import DomainError, PathMismatchError, PolicyError, TopologyMismatchError
from models import (
    Architecture,
    BoundMatrix,
    BoundResult,
    FamilyStatus,
    GammaFamily,
    Histogram,
    SubnetGammaFamily,
    SubnetworkPartition,
)
from services.lattice_service import clip

logger = logging.getLogger(__name__)

Matrix = List[List[int]]


def schlaefli_count(p0: int, p1: int) -> int:
    """Regions cut out of R^p0 by p1 hyperplanes in general position"""
    return sum(comb(p1, j) for j in range(min(p0, p1) + 1))


def prior_product_bound(arch: Architecture) -> int:
    """prod_l sum_{i <= min(n0..n_{l-1})} C(n_l, i)"""
    bound, smallest = 1, arch.n0
    for width in arch.widths:
        bound *= schlaefli_count(smallest, width)
        smallest = min(smallest, width)
    return bound


def naive_bound(arch: Architecture) -> int:
    """2 to the number of hidden neurons"""
    return 2 ** sum(arch.widths)


def m_matrix(p0: int, p1: int) -> Matrix:
    """(p1+1)x(p0+1) 0/1 matrix sending index j to min(j, p1)"""
    cells = [[0] * (p0 + 1) for _ in range(p1 + 1)]
    for j in range(p0 + 1):
        cells[min(j, p1)][j] = 1
    return cells


def mat_vec(matrix: Sequence[Sequence[int]], vector: Sequence[int]) -> List[int]:
    return [sum(a * b for a, b in zip(row, vector)) for row in matrix]


def mat_mul(left: Sequence[Sequence[int]], right: Sequence[Sequence[int]]) -> Matrix:
    columns = list(zip(*right))
    return [[sum(a * b for a, b in zip(row, column)) for column in columns] for row in left]


def basis_vector(index: int) -> List[int]:
    return [0] * index + [1]


class BoundService:
    """Service for turning gamma families into region bounds"""

    def __init__(self, settings: Settings):
        self.settings = settings
        self._columns: Dict[Tuple[GammaFamily, int, int], Histogram] = {}
        self._matrices: Dict[Tuple[GammaFamily, int], BoundMatrix] = {}

    def _column(self, family: GammaFamily, p1: int, j: int) -> Histogram:
        """cl_j(gamma_{j,p1}), the j-th column of the width-p1 bound matrix"""
        key = (family, p1, j)
        column = self._columns.get(key)
        if column is None:
            column = clip(family.histogram(j, p1), j)
            if len(self._columns) >= self.settings.cache_limit:
                logger.debug(f"Column cache reached {len(self._columns)} entries; clearing")
                self._columns.clear()
            self._columns[key] = column
        return column

    def phi_apply(self, family: GammaFamily, p1: int, v: Histogram) -> Histogram:
        """Push a dimension histogram through one layer of width p1"""
        total = Histogram.zero()
        for p0, count in enumerate(v.entries):
            if count:
                total = total + count * self._column(family, p1, min(p0, p1))
        return total

    def bound_columns(
        self, family: GammaFamily, p1: int, reach: int, support: Optional[Set[int]] = None,
    ) -> Matrix:
        """(p1+1)x(reach+1) leading block of the width-p1 bound matrix; columns outside support stay zero"""
        columns = [
            self._column(family, p1, j) if support is None or j in support else Histogram.zero()
            for j in range(reach + 1)
        ]
        return [[column[i] for column in columns] for i in range(p1 + 1)]

    def build_bound_matrix(self, family: GammaFamily, p1: int) -> BoundMatrix:
        key = (family, p1)
        if key not in self._matrices:
            cells = tuple(tuple(row) for row in self.bound_columns(family, p1, p1))
            if len(self._matrices) >= self.settings.cache_limit:
                self._matrices.clear()
            self._matrices[key] = BoundMatrix(family=family.name, p1=p1, cells=cells)
        return self._matrices[key]

    def compose_bound(self, family: GammaFamily, arch: Architecture) -> int:
        return self.compose(family, arch).bound

    def compose(self, family: GammaFamily, arch: Architecture) -> BoundResult:
        """Region bound for arch, by histogram composition cross-checked against the matrix product"""
        v = Histogram.basis(arch.n0)
        pushed: List[Histogram] = []
        for width in arch.widths:
            v = self.phi_apply(family, width, v)
            pushed.append(v)

        # the dimension never exceeds min(n0, n1, ..., nl), so later columns are unreachable
        vector, reach = basis_vector(arch.n0), arch.n0
        for width in arch.widths:
            reach = min(reach, width)
            spread = mat_vec(m_matrix(len(vector) - 1, width), vector)[: reach + 1]
            support = {j for j, count in enumerate(spread) if count}
            vector = mat_vec(self.bound_columns(family, width, reach, support), spread)

        self._assert_paths(f"{family.name} on {arch}", v, vector)
        return BoundResult(
            bound=v.norm(),
            family=family.name,
            conjectured=family.conjectured,
            per_layer_histograms=pushed,
            architecture=str(arch),
        )

    def growth_rate(self, family: GammaFamily, n0: int, n: int) -> int:
        """Largest of the first n0+1 diagonal entries of the width-n bound matrix"""
        if n0 > n:
            raise DomainError(f"growth rate needs n0 <= n, got n0={n0}, n={n}")
        return max(self._column(family, n, j)[j] for j in range(n0 + 1))

    def singleton_family(self, family: GammaFamily, p1: int) -> SubnetGammaFamily:
        """Wrap a layer-wise family as a one-layer block family"""
        return SubnetGammaFamily(
            name=family.name,
            topology=(p1,),
            status=family.status,
            generator=lambda p0: family.histogram(p0, p1),
        )

    def composed_family(self, family: GammaFamily, topology: Sequence[int]) -> SubnetGammaFamily:
        """Block family whose histogram for input p0 is the layer-wise composition applied to e_p0"""
        topology = tuple(topology)

        def generator(p0: int) -> Histogram:
            v = Histogram.basis(p0)
            for width in topology:
                v = self.phi_apply(family, width, v)
            return v

        return SubnetGammaFamily(
            name=f"{family.name}-composed",
            topology=topology,
            status=family.status,
            generator=generator,
        )

    def subnet_phi_apply(self, sub: SubnetGammaFamily, v: Histogram) -> Histogram:
        total = Histogram.zero()
        for p0, count in enumerate(v.entries):
            if count:
                index = min(p0, sub.first_width)
                total = total + count * clip(sub.histogram(index), index)
        return total

    def subnet_bound_matrix(
        self, sub: SubnetGammaFamily, reach: Optional[int] = None, support: Optional[Set[int]] = None,
    ) -> Matrix:
        """Block bound matrix, optionally only its first reach+1 columns and zero outside support"""
        p1 = sub.first_width
        columns = [
            clip(sub.histogram(j), j) if support is None or j in support else Histogram.zero()
            for j in range(p1 + 1 if reach is None else reach + 1)
        ]
        return [[column[i] for column in columns] for i in range(p1 + 1)]

    def subnet_compose_bound(
        self,
        subs: Sequence[SubnetGammaFamily],
        partition: SubnetworkPartition,
        arch: Architecture,
        unsound_ok: bool = False,
    ) -> int:
        return self.subnet_compose(subs, partition, arch, unsound_ok).bound

    def subnet_compose(
        self,
        subs: Sequence[SubnetGammaFamily],
        partition: SubnetworkPartition,
        arch: Architecture,
        unsound_ok: bool = False,
    ) -> BoundResult:
        """Region bound from block families, one per partition block"""
        blocks = partition.blocks(arch)
        if len(blocks) != len(subs):
            raise TopologyMismatchError(f"{len(blocks)} blocks but {len(subs)} block families")
        for sub, block in zip(subs, blocks):
            if sub.topology != tuple(block):
                raise TopologyMismatchError(
                    f"family {sub.name} has topology {sub.topology}, block needs {tuple(block)}"
                )
            if sub.status is FamilyStatus.EMPIRICAL and not unsound_ok:
                raise PolicyError(
                    f"family {sub.name} is a sampled lower-bound estimate; pass unsound_ok to compose it"
                )

        v = Histogram.basis(arch.n0)
        pushed: List[Histogram] = []
        for sub in subs:
            v = self.subnet_phi_apply(sub, v)
            pushed.append(v)

        vector, reach = basis_vector(arch.n0), arch.n0
        for sub in subs:
            reach = min(reach, sub.first_width)
            spread = mat_vec(m_matrix(len(vector) - 1, sub.first_width), vector)[: reach + 1]
            support = {j for j, count in enumerate(spread) if count}
            vector = mat_vec(self.subnet_bound_matrix(sub, reach, support), spread)

        self._assert_paths(f"subnetwork composition on {arch}", v, vector)
        statuses = {sub.status for sub in subs}
        return BoundResult(
            bound=v.norm(),
            family="+".join(sub.name for sub in subs),
            conjectured=FamilyStatus.CONJECTURED in statuses or FamilyStatus.EMPIRICAL in statuses,
            per_layer_histograms=pushed,
            architecture=str(arch),
        )

    @staticmethod
    def _assert_paths(label: str, histogram: Histogram, vector: List[int]) -> None:
        if Histogram.of(vector) != histogram:
            logger.error(f"Histogram and matrix paths disagree for {label}: {histogram} vs {vector}")
            raise PathMismatchError(f"histogram and matrix paths disagree for {label}")
