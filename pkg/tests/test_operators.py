import numpy as np
import pytest

from randresp.basis import ChebyshevBasis, FourierBasis, from_callable
from randresp.errors import ConfigurationError, ModelError
from randresp.maps import ExpandingCircleMap, GaussMap, RenyiMap
from randresp.operators import (Component, DiscretizedOperator, RandomSystem,
                                build_operator, duality_defect,
                                family_matrix, fixed_component,
                                resolvent_solve, stationary_density,
                                ulam_operator)
from randresp.systems import circle_mixture, gauss_density, gauss_renyi


@pytest.fixture(scope="module")
def cheb():
    return ChebyshevBasis(40)


class TestAssembly:
    def test_component_validation(self):
        with pytest.raises(ConfigurationError):
            Component(weight=lambda e: 1.0, dweight=lambda e: 0.0)

    def test_weights_must_sum_to_one(self):
        with pytest.raises(ConfigurationError):
            RandomSystem([fixed_component(GaussMap(), weight=0.7)])

    def test_mixture_linearity(self, cheb):
        mg = family_matrix(GaussMap(), cheb, cutoff=2000)
        mr = family_matrix(RenyiMap(), cheb, cutoff=2000)
        op = build_operator(gauss_renyi(0.3), 0.0, cheb, cutoff=2000)
        assert np.max(np.abs(op.matrix - (0.3 * mg + 0.7 * mr))) < 1e-12

    def test_bernoulli_row_action(self, cheb):
        # entries of the mixture operator match the p/(n+x)^2 formula rows
        p = 0.41
        op = build_operator(gauss_renyi(p), 0.0, cheb, cutoff=50000)
        phi = lambda y: y ** 3 - y
        x = cheb.nodes
        n = np.arange(1, 50001)[:, None]
        t = 1.0 / (n + x[None, :])
        direct = (p * t ** 2 * phi(t) + (1 - p) * t ** 2 * phi(1 - t)).sum(axis=0)
        f = from_callable(cheb, phi)
        assert np.max(np.abs(op.apply(f.values) - direct)) < 1e-9

    def test_inadmissible_eps(self, cheb):
        with pytest.raises(ConfigurationError):
            build_operator(gauss_renyi(0.5), 0.7, cheb)


class TestStationary:
    def test_gauss_density_machine_precision(self, cheb):
        op = build_operator(RandomSystem([fixed_component(GaussMap())]),
                            0.0, cheb, cutoff=10000)
        h = stationary_density(op)
        g = np.linspace(0, 1, 500)
        assert np.max(np.abs(h(g) - gauss_density(g))) < 1e-9
        assert h.integrate() == pytest.approx(1.0, abs=1e-13)

    def test_doubling_density_uniform(self):
        fb = FourierBasis(32)
        op = build_operator(
            RandomSystem([fixed_component(ExpandingCircleMap(0.0))]),
            0.0, fb)
        h = stationary_density(op)
        assert np.max(np.abs(h.values - 1.0)) < 1e-12

    def test_rejects_operator_without_fixed_point(self, cheb):
        op = DiscretizedOperator(0.5 * np.eye(cheb.size), cheb, 0, 0, 0.0)
        with pytest.raises(ModelError):
            stationary_density(op)

    def test_spectral_gap_reported(self, cheb):
        op = build_operator(gauss_renyi(0.5), 0.0, cheb, cutoff=5000)
        h = stationary_density(op)
        assert 0.3 < h.meta["gap"] < 1.0
        assert h.meta["eigenvalue_1"] == pytest.approx(1.0, abs=1e-10)


class TestResolvent:
    def test_zero_mean_enforced(self, cheb):
        op = build_operator(gauss_renyi(0.5), 0.0, cheb, cutoff=2000)
        with pytest.raises(ConfigurationError):
            resolvent_solve(op, from_callable(cheb, lambda x: x))

    def test_solution_satisfies_equation(self, cheb):
        op = build_operator(gauss_renyi(0.5), 0.0, cheb, cutoff=2000)
        q = from_callable(cheb, lambda x: x - 0.5)
        f = resolvent_solve(op, q)
        assert f.meta["residual"] < 1e-11
        assert f.integrate() == pytest.approx(0.0, abs=1e-12)


class TestDuality:
    def test_tail_compensated_duality(self, cheb):
        op = build_operator(gauss_renyi(0.5), 0.0, cheb, cutoff=10000)
        rng = np.random.default_rng(0)
        for _ in range(10):
            defect = duality_defect(op, rng.standard_normal(7))
            assert defect < 1e-10  # far below the reported 1/cutoff bound

    def test_circle_duality(self):
        fb = FourierBasis(64)
        op = build_operator(circle_mixture(0.05), 0.05, fb)
        assert duality_defect(op, np.array([0.3, 1.0, -2.0, 0.7])) < 1e-12


class TestUlamOracle:
    def test_columns_stochastic(self):
        op = ulam_operator(gauss_renyi(0.5), 0.0, k=256, samples_per_bin=64)
        colsums = op.matrix.sum(axis=0)
        assert np.max(np.abs(colsums - 1.0)) < 1e-12

    def test_gauss_l1_agreement(self):
        sys = RandomSystem([fixed_component(GaussMap())])
        op = ulam_operator(sys, 0.0, k=1024, samples_per_bin=256)
        h = stationary_density(op)
        ref = gauss_density(op.basis.nodes)
        l1 = np.sum(np.abs(h.values - ref)) * op.basis.width
        assert l1 < 0.03

    def test_size_guard(self):
        with pytest.raises(ConfigurationError):
            ulam_operator(gauss_renyi(0.5), 0.0, k=8)
