import random

import pytest
from hypothesis import given, strategies as st

from config import Settings
from errors import DomainError, PolicyError, TopologyMismatchError, UsageError
from models import Architecture, FamilyStatus, GammaFamily, Histogram, SubnetGammaFamily, SubnetworkPartition
from services.bound_service import (
    BoundService,
    basis_vector,
    m_matrix,
    mat_mul,
    mat_vec,
    naive_bound,
    prior_product_bound,
    schlaefli_count,
)
from services.gamma_service import FAMILY_NAMES, GammaService, tau_closed_form
from services.lattice_service import clip, dominates, join
from services.verification_service import MATRIX_BAR_6, MATRIX_CONJECTURE_6, MATRIX_STAR_6, random_architecture
from tests.strategies import histograms

e = Histogram.basis


def arch(text: str) -> Architecture:
    return Architecture.parse(text)


def test_schlaefli_count():
    assert schlaefli_count(2, 3) == 7
    assert schlaefli_count(1, 6) == 7
    assert schlaefli_count(3, 6) == 42


def test_architecture_parsing():
    parsed = arch("3x6x6")
    assert parsed.n0 == 3 and parsed.widths == (6, 6) and parsed.constant_width == 6
    assert str(parsed) == "3x6x6"
    for bad in ("3", "3x", "0x4", "3x-1", "axb"):
        with pytest.raises(UsageError):
            arch(bad)


def test_partition_parsing():
    assert SubnetworkPartition.parse("0,2,4").blocks(arch("2x6x6x6x6")) == [(6, 6), (6, 6)]
    with pytest.raises(UsageError):
        SubnetworkPartition.parse("1,2")
    with pytest.raises(UsageError):
        SubnetworkPartition.parse("0,2").blocks(arch("2x6x6x6"))


class TestPhi:
    def test_examples(self, gamma_service, bound_service):
        assert bound_service.phi_apply(gamma_service.family("bar"), 6, e(3)) == 42 * e(3)
        assert bound_service.phi_apply(gamma_service.family("star"), 6, e(3)) == 4 * e(2) + 38 * e(3)
        for name in FAMILY_NAMES:
            assert bound_service.phi_apply(gamma_service.family(name), 4, Histogram.zero()) == Histogram.zero()

    def test_dimension_above_width_is_replicated(self, gamma_service, bound_service):
        star = gamma_service.family("star")
        assert bound_service.phi_apply(star, 4, 3 * e(9)) == bound_service.phi_apply(star, 4, 3 * e(4))

    @given(st.sampled_from(["bar", "star"]), st.integers(min_value=1, max_value=8), histograms(10), histograms(10))
    def test_monotone_in_the_input(self, name, p1, v, u):
        gammas = GammaService(Settings())
        bounds = BoundService(Settings())
        w = join(v, u)
        family = gammas.family(name)
        assert dominates(bounds.phi_apply(family, p1, v), bounds.phi_apply(family, p1, w))

    @given(st.sampled_from(FAMILY_NAMES), st.integers(min_value=1, max_value=8), histograms(10), histograms(10),
           st.integers(min_value=0, max_value=50))
    def test_linear(self, name, p1, v, w, c):
        gammas = GammaService(Settings())
        bounds = BoundService(Settings())
        family = gammas.family(name)
        assert bounds.phi_apply(family, p1, v + w) == bounds.phi_apply(family, p1, v) + bounds.phi_apply(family, p1, w)
        assert bounds.phi_apply(family, p1, c * v) == c * bounds.phi_apply(family, p1, v)


class TestMatrices:
    @pytest.mark.parametrize("name,printed,growth", [
        ("bar", MATRIX_BAR_6, 42),
        ("star", MATRIX_STAR_6, 38),
        ("star-conjecture", MATRIX_CONJECTURE_6, 35),
    ])
    def test_width_six(self, gamma_service, bound_service, name, printed, growth):
        family = gamma_service.family(name)
        matrix = bound_service.build_bound_matrix(family, 6)
        assert [list(row) for row in matrix.cells] == printed
        assert bound_service.growth_rate(family, 3, 6) == growth

    @pytest.mark.parametrize("name", FAMILY_NAMES)
    @pytest.mark.parametrize("p1", [1, 3, 7])
    def test_shape(self, gamma_service, bound_service, name, p1):
        family = gamma_service.family(name)
        matrix = bound_service.build_bound_matrix(family, p1)
        assert matrix.is_upper_triangular()
        for j in range(matrix.dim):
            assert matrix.column(j).norm() == family.histogram(j, p1).norm()

    def test_growth_rate_needs_small_input(self, gamma_service, bound_service):
        with pytest.raises(DomainError):
            bound_service.growth_rate(gamma_service.family("bar"), 7, 6)

    def test_m_matrix(self):
        assert m_matrix(3, 2) == [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 1]]
        assert mat_vec(m_matrix(1, 3), basis_vector(1)) == [0, 1, 0, 0]


class TestCompose:
    def test_width_six_pair(self, gamma_service, bound_service):
        expected = {"bar": 1764, "star": 1684, "star-conjecture": 1624, "hat": 4096, "tilde": 1764}
        for name, bound in expected.items():
            assert bound_service.compose_bound(gamma_service.family(name), arch("3x6x6")) == bound
        assert prior_product_bound(arch("3x6x6")) == 1764
        assert naive_bound(arch("3x6x6")) == 4096

    def test_per_layer_histograms(self, gamma_service, bound_service):
        result = bound_service.compose(gamma_service.family("star"), arch("3x6x6"))
        assert result.per_layer_histograms == [4 * e(2) + 38 * e(3), 240 * e(2) + 1444 * e(3)]
        assert not result.conjectured
        assert bound_service.compose(gamma_service.family("star-conjecture"), arch("3x6x6")).conjectured

    def test_matrix_product_oracle(self, gamma_service, bound_service):
        bar = gamma_service.family("bar")
        b6 = [list(row) for row in bound_service.build_bound_matrix(bar, 6).cells]
        product = mat_mul(mat_mul(b6, m_matrix(6, 6)), mat_mul(b6, m_matrix(3, 6)))
        assert sum(mat_vec(product, basis_vector(3))) == bound_service.compose_bound(bar, arch("3x6x6"))

    @pytest.mark.parametrize("name", FAMILY_NAMES)
    def test_single_neuron_and_line(self, gamma_service, bound_service, name):
        assert bound_service.compose_bound(gamma_service.family(name), arch("1x1")) == 2
        if name != "hat":
            assert bound_service.compose_bound(gamma_service.family(name), arch("1x5")) == 6

    def test_tilde_recovers_product_bound(self, gamma_service, bound_service):
        rng = random.Random("tilde")
        for _ in range(20):
            architecture = random_architecture(rng, max_depth=4, max_width=8)
            assert bound_service.compose_bound(gamma_service.family("tilde"), architecture) == \
                prior_product_bound(architecture)

    def test_hat_is_naive(self, gamma_service, bound_service):
        rng = random.Random("hat")
        for _ in range(20):
            architecture = random_architecture(rng, max_depth=4, max_width=6)
            assert bound_service.compose_bound(gamma_service.family("hat"), architecture) == \
                naive_bound(architecture)

    def test_tighter_family_gives_smaller_bound(self, gamma_service, bound_service):
        rng = random.Random("chain")
        order = ["star", "bar", "tilde", "hat"]
        for _ in range(30):
            architecture = random_architecture(rng, max_depth=5, max_width=8)
            bounds = [bound_service.compose_bound(gamma_service.family(name), architecture) for name in order]
            assert bounds == sorted(bounds)

    def test_single_layer_is_tight_where_tau_is_known(self, bound_service):
        def tau(p0: int, p1: int) -> Histogram:
            return tau_closed_form(p0, p1)

        family = GammaFamily(name="tau", generator=tau)
        for n0, n1 in [(1, 4), (1, 7), (5, 3), (4, 4)]:
            assert bound_service.compose_bound(family, Architecture(n0=n0, widths=(n1,))) == \
                schlaefli_count(n0, n1)

    def test_unreachable_columns_are_never_evaluated(self, bound_service):
        family = GammaFamily(name="tau", generator=tau_closed_form)
        assert bound_service.compose_bound(family, Architecture(n0=1, widths=(4,))) == 5
        result = bound_service.compose(family, Architecture(n0=1, widths=(4, 4)))
        assert result.per_layer_histograms == [5 * e(1), 25 * e(1)]
        subs = [bound_service.singleton_family(family, 4)] * 2
        partition = SubnetworkPartition.singletons(2)
        assert bound_service.subnet_compose_bound(subs, partition, Architecture(n0=1, widths=(4, 4))) == 25

    def test_wide_layer_reads_one_column(self, gamma_service, bound_service):
        star = gamma_service.family("star")
        assert bound_service.compose_bound(star, Architecture(n0=1, widths=(300,))) == 301
        assert bound_service.growth_rate(star, 1, 300) == 301
        assert len(bound_service._columns) <= 2

    def test_column_cache_is_bounded(self, gamma_service, settings):
        bounds = BoundService(settings.model_copy(update={"cache_limit": 4}))
        bar = gamma_service.family("bar")
        for width in range(1, 12):
            assert bounds.compose_bound(bar, Architecture(n0=2, widths=(width, width))) == \
                BoundService(settings).compose_bound(bar, Architecture(n0=2, widths=(width, width)))
            assert len(bounds._columns) <= 4

    def test_deep_bounds_stay_exact(self, gamma_service, bound_service):
        deep = Architecture(n0=3, widths=(6,) * 40)
        bound = bound_service.compose_bound(gamma_service.family("bar"), deep)
        assert bound == 42 ** 40


class TestSubnetworks:
    def test_singletons_match_layerwise(self, gamma_service, bound_service):
        star = gamma_service.family("star")
        rng = random.Random("singletons")
        for _ in range(20):
            architecture = random_architecture(rng, max_depth=5, max_width=8)
            subs = [bound_service.singleton_family(star, width) for width in architecture.widths]
            partition = SubnetworkPartition.singletons(architecture.depth)
            assert bound_service.subnet_compose_bound(subs, partition, architecture) == \
                bound_service.compose_bound(star, architecture)

    def test_singleton_phi(self, gamma_service, bound_service):
        sub = bound_service.singleton_family(gamma_service.family("bar"), 6)
        assert bound_service.subnet_phi_apply(sub, e(3)) == 42 * e(3)
        assert bound_service.subnet_phi_apply(sub, Histogram.zero()) == Histogram.zero()
        assert bound_service.subnet_phi_apply(sub, 2 * e(8)) == bound_service.subnet_phi_apply(sub, 2 * e(6))

    def test_composed_blocks_are_associative(self, gamma_service, bound_service):
        star = gamma_service.family("star")
        architecture = arch("2x6x6x6x6")
        partition = SubnetworkPartition.parse("0,2,4")
        subs = [bound_service.composed_family(star, block) for block in partition.blocks(architecture)]
        assert bound_service.subnet_compose_bound(subs, partition, architecture) == \
            bound_service.compose_bound(star, architecture)

    def test_whole_network_block(self, bound_service):
        whole = SubnetGammaFamily(
            name="cap", topology=(3,), generator=lambda p0: Histogram.basis(min(p0, 3), schlaefli_count(p0, 3)),
        )
        bound = bound_service.subnet_compose_bound([whole], SubnetworkPartition.singletons(1), arch("1x3"))
        assert bound == clip(whole.histogram(1), 1).norm() == 4

    def test_topology_mismatch(self, gamma_service, bound_service):
        sub = bound_service.singleton_family(gamma_service.family("bar"), 5)
        with pytest.raises(TopologyMismatchError):
            bound_service.subnet_compose_bound([sub], SubnetworkPartition.singletons(1), arch("2x6"))
        with pytest.raises(TopologyMismatchError):
            bound_service.subnet_compose_bound([sub, sub], SubnetworkPartition.singletons(1), arch("2x5"))

    def test_empirical_needs_opt_in(self, bound_service):
        estimate = SubnetGammaFamily(
            name="estimate", topology=(3,), status=FamilyStatus.EMPIRICAL,
            generator=lambda p0: tau_closed_form(min(p0, 1), 3),
        )
        partition, architecture = SubnetworkPartition.singletons(1), arch("1x3")
        with pytest.raises(PolicyError):
            bound_service.subnet_compose_bound([estimate], partition, architecture)
        result = bound_service.subnet_compose([estimate], partition, architecture, unsound_ok=True)
        assert result.conjectured and result.bound == 4

    def test_empirical_estimate_sits_below_composed_bound(self, gamma_service, bound_service, network_service):
        estimate = network_service.empirical_family((6, 6), trials=5, seed=1)
        composed = bound_service.composed_family(gamma_service.family("bar"), (6, 6))
        assert estimate.status is FamilyStatus.EMPIRICAL
        assert dominates(estimate.histogram(6), composed.histogram(6))
