import numpy as np
import pytest

from randresp.basis import ChebyshevBasis, FourierBasis, from_callable
from randresp.distributions import DiracTranslate
from randresp.maps import ExpandingCircleMap, GaussMap, RenyiMap
from randresp.operators import (Component, RandomSystem, build_operator,
                                family_matrix, fixed_component,
                                stationary_density)
from randresp.response import (derivative_operator_apply,
                               deterministic_response,
                               finite_difference_check, response)
from randresp.systems import (circle_mixture, gauss_density, gauss_renyi,
                              gauss_renyi_expansion)


@pytest.fixture(scope="module")
def fourier():
    return FourierBasis(64)


@pytest.fixture(scope="module")
def cheb():
    return ChebyshevBasis(40)


class TestDerivativeOperator:
    def test_circle_mixture_weight_derivative(self, fourier):
        # at eps=0 the density is 1 and q = L_{T1} 1 - L_{T2} 1 = L_{T1} 1 - 1
        sys = circle_mixture(0.05)
        h0 = stationary_density(build_operator(sys, 0.0, fourier))
        q = derivative_operator_apply(sys, h0)
        lt1 = family_matrix(ExpandingCircleMap(0.05), fourier)
        expected = lt1 @ np.ones(fourier.size) - 1.0
        assert np.max(np.abs(q.values - expected)) < 1e-12

    def test_gauss_renyi_expansion_rule(self, cheb):
        # p_eps = 1 - eps: q = -L_G h_G + L_R h_G = -h_G + L_R h_G
        sys = gauss_renyi_expansion()
        h0 = stationary_density(build_operator(sys, 0.0, cheb, cutoff=20000))
        q = derivative_operator_apply(sys, h0, cutoff=20000)
        lr = family_matrix(RenyiMap(), cheb, cutoff=20000)
        expected = -h0.values + lr @ h0.values
        assert np.max(np.abs(q.values - expected)) < 1e-10


class TestResponse:
    def test_circle_neumann_series_oracle(self, fourier):
        # h* = sum_n L_{T2}^n (L_{T1} 1 - 1), truncated independently
        rep = response(circle_mixture(0.05), fourier)
        lt2 = family_matrix(ExpandingCircleMap(0.0), fourier)
        q = family_matrix(ExpandingCircleMap(0.05), fourier) @ np.ones(
            fourier.size) - 1.0
        acc = q.copy()
        term = q.copy()
        for _ in range(60):
            term = lt2 @ term
            acc += term
        assert np.max(np.abs(rep.h_star_normalized.values - acc)) < 1e-9

    def test_response_mean_zero(self, cheb):
        rep = response(gauss_renyi(0.5), cheb, cutoff=5000)
        assert rep.h_star_normalized.integrate() == pytest.approx(0.0, abs=1e-11)
        assert rep.diagnostics["resolvent_residual"] < 1e-10

    def test_observable_pairing(self, fourier):
        rep = response(circle_mixture(0.05), fourier,
                       observables={"cos": lambda x: np.cos(2 * np.pi * x)})
        direct = float(fourier.quad_weights
                       @ (np.cos(2 * np.pi * fourier.nodes)
                          * rep.h_star_normalized.values))
        assert rep.observable_responses["cos"] == pytest.approx(direct)


class TestDeterministicEquivalence:
    def test_matches_dirac_translate_pipeline(self, fourier):
        # frozen-parameter pipeline vs the forward-data classical formula
        lam = 0.05
        comp = Component(weight=lambda e: 1.0, dweight=lambda e: 0.0,
                         template=lambda u: ExpandingCircleMap(u),
                         dist=DiracTranslate(lam, support=(-0.15, 0.15)))
        sys = RandomSystem([comp], eps_range=(-0.05, 0.05))
        rep = response(sys, fourier)
        det = deterministic_response(lambda u: ExpandingCircleMap(u), lam,
                                     fourier)
        g = np.linspace(0, 1, 300, endpoint=False)
        assert np.max(np.abs(rep.h_star_normalized(g) - det(g))) < 1e-11


class TestFiniteDifference:
    def test_central_second_order(self, fourier):
        rows = finite_difference_check(circle_mixture(0.05),
                                       [1e-2, 5e-3], fourier)
        assert rows[0]["scheme"] == "central"
        assert rows[1]["observed_order"] > 1.8

    def test_one_sided_when_needed(self, cheb):
        rows = finite_difference_check(gauss_renyi_expansion(),
                                       [1e-2, 5e-3], cheb, cutoff=5000)
        assert all(r["scheme"] == "one-sided" for r in rows)
        assert rows[1]["observed_order"] > 0.9


def test_gauss_renyi_expansion_base_density(cheb):
    rep = response(gauss_renyi_expansion(), cheb, cutoff=20000)
    g = np.linspace(0, 1, 400)
    assert np.max(np.abs(rep.h0(g) - gauss_density(g))) < 1e-12
