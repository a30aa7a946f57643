import numpy as np
import pytest

from randresp.basis import ChebyshevBasis, FourierBasis
from randresp.distributions import PMSmoothFamily, SmoothDensity
from randresp.errors import ConfigurationError, UnsupportedOperation
from randresp.maps import ExpandingCircleMap, GaussMap, LSVMap
from randresp.montecarlo import (OrbitSpec, binned_density, mc_density_check,
                                 mc_response_check, run_orbit, sample_orbit)
from randresp.operators import (Component, RandomSystem, fixed_component)
from randresp.systems import circle_mixture, gauss_density, gauss_renyi


class TestDeterminism:
    def test_same_seed_bitwise(self):
        sys = gauss_renyi(0.5)
        a = run_orbit(sys, 0.0, seed=11, burn_in=1000, length=20000)
        b = run_orbit(sys, 0.0, seed=11, burn_in=1000, length=20000)
        assert np.array_equal(a, b)
        c = run_orbit(sys, 0.0, seed=12, burn_in=1000, length=20000)
        assert not np.array_equal(a, c)

    def test_common_random_numbers_across_eps(self):
        # the parameter stream layout must not depend on eps, so nearby
        # eps values give strongly coupled orbits early on
        sys = circle_mixture(0.05)
        a = run_orbit(sys, 0.10, seed=3, burn_in=1000, length=500)
        b = run_orbit(sys, 0.1001, seed=3, burn_in=1000, length=500)
        assert np.max(np.abs(a[:20] - b[:20])) < 1e-1


class TestHistograms:
    def test_doubling_uniform_histogram(self):
        sys = RandomSystem([fixed_component(ExpandingCircleMap(0.0))])
        x = run_orbit(sys, 0.0, seed=5, burn_in=1000, length=200000)
        counts, _ = np.histogram(x, bins=64, range=(0.0, 1.0))
        n, p = len(x), 1.0 / 64
        # dyadic bins have lag-k indicator correlation ~2^-k, inflating the
        # binomial variance by 1 + 2 sum 2^-k = 3
        sigma = np.sqrt(3.0 * n * p * (1 - p))
        assert np.max(np.abs(counts - n * p)) < 4.0 * sigma

    def test_gauss_mean_observable(self):
        # int x/( (1+x) log 2 ) dx = 1/log2 - 1
        sys = RandomSystem([fixed_component(GaussMap())])
        stats = sample_orbit(OrbitSpec(sys, 0.0, seed=21, burn_in=1000,
                                       length=400000,
                                       observables={"x": lambda x: x}))
        mean = stats.observable_means["x"]
        se = stats.observable_se["x"]
        target = 1.0 / np.log(2.0) - 1.0
        assert abs(mean - target) < 4.0 * se
        assert se < 2e-3


class TestDensityCheck:
    def test_spectral_density_within_ci(self):
        sys = RandomSystem([fixed_component(GaussMap())])
        rep = mc_density_check(sys, 0.0, gauss_density, n_seeds=4,
                               length=100000, bins=128, n_boot=100)
        assert rep["within_3ci"]
        assert rep["l1"] < 0.05

    def test_mixture_density_differs_from_gauss(self):
        # the 50/50 Gauss-Renyi mixture does not preserve the Gauss density;
        # its histogram should sit a fixed L1 distance away
        rep = mc_density_check(gauss_renyi(0.5), 0.0, gauss_density,
                               n_seeds=4, length=100000, bins=128, n_boot=50)
        assert not rep["within_3ci"]
        assert 0.05 < rep["l1"] < 0.15

    def test_binned_density_integrates(self):
        edges = np.linspace(0.0, 1.0, 65)
        vals = binned_density(gauss_density, edges)
        mass = np.sum(vals * np.diff(edges))
        assert mass == pytest.approx(1.0, abs=1e-10)


class TestResponseCheck:
    def test_circle_mixture_z_score(self):
        rep = mc_response_check(circle_mixture(0.05),
                                lambda x: np.cos(2 * np.pi * x),
                                eps=0.05, basis=FourierBasis(64), eps0=0.1,
                                n_seeds=8, length=100000)
        assert abs(rep["z"]) < 4.5
        assert rep["se"] > 0.0

    def test_gauss_renyi_z_score(self):
        rep = mc_response_check(gauss_renyi(0.5), lambda x: x,
                                eps=0.05, basis=ChebyshevBasis(40),
                                n_seeds=8, length=100000, cutoff=5000)
        assert abs(rep["z"]) < 4.5


class TestValidation:
    def test_orbit_spec_guards(self):
        sys = gauss_renyi(0.5)
        with pytest.raises(ConfigurationError):
            OrbitSpec(sys, 0.0, seed=1, burn_in=10, length=20000)
        with pytest.raises(ConfigurationError):
            OrbitSpec(sys, 0.0, seed=1, burn_in=1000, length=100)

    def test_negative_weight_rejected(self):
        sys = circle_mixture(0.05)
        with pytest.raises(ConfigurationError):
            run_orbit(sys, -0.05, seed=1, burn_in=1000, length=20000)

    def test_unsamplable_distribution(self):
        pm = PMSmoothFamily(0.25, 0.45)
        generic = SmoothDensity(pm.support, pm.rho, pm.drho, pm.eps_range)
        comp = Component(weight=lambda e: 1.0, dweight=lambda e: 0.0,
                         template=lambda u: LSVMap(u), dist=generic)
        sys = RandomSystem([comp], eps_range=(-0.05, 0.05), name="lsv")
        with pytest.raises(UnsupportedOperation):
            run_orbit(sys, 0.0, seed=1, burn_in=1000, length=20000)
