"""Stationary densities and linear response for iid random compositions of
one-dimensional maps: spectral transfer-operator solves, a first-return
(inducing) scheme for intermittent maps, and Ulam / Monte-Carlo oracles.
"""

from .basis import (ChebyshevBasis, DensityFunction, FourierBasis,
                    PanelChebBasis, UlamBasis, from_callable, h_norm)
from .distributions import (DiracMixture, DiracTranslate, FrozenDirac,
                            PMSmoothFamily, SmoothDensity, UniformToDirac)
from .errors import (ConfigurationError, ModelError, NumericalError,
                     UnsupportedOperation)
from .maps import (ExpandingCircleMap, GaussMap, LSVMap, RenyiMap,
                   check_expansion, make_family)
from .operators import (Component, RandomSystem, build_operator,
                        fixed_component, resolvent_solve, stationary_density,
                        ulam_operator)
from .response import (deterministic_response, finite_difference_check,
                       response)
from .inducing import InducedSystem
from .systems import (circle_mixture, gauss_density, gauss_renyi,
                      gauss_renyi_expansion)

__version__ = "0.1.0"
