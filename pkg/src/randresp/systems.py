"""Canonical random systems used across the test suite and the CLI."""

import numpy as np

from .errors import ConfigurationError
from .maps import ExpandingCircleMap, GaussMap, RenyiMap
from .operators import Component, RandomSystem, fixed_component


def circle_mixture(lam=0.05, eps_range=(-0.25, 0.25)):
    """Two-map circle mixture: T1 = 2x + lam sin(2 pi x) with probability eps,
    the doubling map with probability 1 - eps."""
    t1 = fixed_component(ExpandingCircleMap(lam),
                         weight=lambda e: e, dweight=lambda e: 1.0)
    t2 = fixed_component(ExpandingCircleMap(0.0),
                         weight=lambda e: 1.0 - e, dweight=lambda e: -1.0)
    return RandomSystem([t1, t2], eps_range=eps_range,
                        name=f"circle-mixture(lam={lam})")


def gauss_renyi(p=0.5, slope=1.0, eps_range=(-0.25, 0.25)):
    """Bernoulli Gauss/Renyi mixture with p_eps = p + slope*eps."""
    if not 0.0 < p < 1.0:
        raise ConfigurationError("need p in (0,1)")
    g = fixed_component(GaussMap(), weight=lambda e: p + slope * e,
                        dweight=lambda e: slope)
    r = fixed_component(RenyiMap(), weight=lambda e: 1.0 - p - slope * e,
                        dweight=lambda e: -slope)
    return RandomSystem([g, r], eps_range=eps_range,
                        name=f"gauss-renyi(p={p})")


def gauss_renyi_expansion():
    """p_eps = 1 - eps: pure Gauss at eps = 0, used for the density expansion
    h_eps = h_G + eps h* + O(eps^2) around the Gauss density."""
    g = fixed_component(GaussMap(), weight=lambda e: 1.0 - e,
                        dweight=lambda e: -1.0)
    r = fixed_component(RenyiMap(), weight=lambda e: e,
                        dweight=lambda e: 1.0)
    return RandomSystem([g, r], eps_range=(0.0, 0.25),
                        name="gauss-renyi-expansion")


def gauss_density(x):
    """1/((1+x) log 2), the Gauss-map invariant density."""
    return 1.0 / ((1.0 + np.asarray(x, dtype=float)) * np.log(2.0))
