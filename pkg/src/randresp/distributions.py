"""Parameter distributions eta_eps that are differentiable as distributions
of order one:

    d/d eps  < eta_eps, phi >  =  (weight terms)  +  < nu_eps, phi' >

with nu_eps a signed measure of bounded variation.  Four families:

* ``DiracTranslate(a)``      eta_eps = delta_{a+eps},   nu_eps = delta_{a+eps}
* ``DiracMixture``           sum_i rho_i(eps) delta_{a_i+eps}; weight part plus
                             nu_eps = sum_i rho_i(eps) delta_{a_i+eps}
* ``SmoothDensity``          d eta_eps = rho_eps du on I; nu_eps has Lebesgue
                             density s -> integral_s^sup(I) (d rho/d eps)(u) du
* ``UniformToDirac(a)``      uniform on (a, a+eps); nu_eps has density
                             (u-a)/eps^2 there; at eps=0, eta_0 = delta_a and
                             nu_0 = (1/2) delta_a.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, NumericalError


def _gl_nodes(a, b, order):
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (a + b) + 0.5 * (b - a) * x, 0.5 * (b - a) * w


@dataclass
class DerivativeMeasure:
    """nu_eps: finitely many atoms and/or a Lebesgue density on ``support``."""

    support: tuple
    atoms: list = field(default_factory=list)  # [(location, weight)]
    density: object = None  # callable on support, or None

    def pair(self, dphi, order=40):
        """< nu, dphi > -- atoms exactly, density by Gauss-Legendre."""
        total = sum(w * float(np.asarray(dphi(loc))) for loc, w in self.atoms)
        if self.density is not None:
            a, b = self.support
            u, w = _gl_nodes(a, b, order)
            total += float(np.dot(w, np.asarray(dphi(u)) * self.density(u)))
        return total

    def quad_nodes(self, order=40):
        """Discretize nu as weighted points (signed weights allowed)."""
        locs = [loc for loc, _ in self.atoms]
        wts = [w for _, w in self.atoms]
        if self.density is not None:
            a, b = self.support
            u, w = _gl_nodes(a, b, order)
            locs.extend(u.tolist())
            wts.extend((w * self.density(u)).tolist())
        return np.asarray(locs), np.asarray(wts)


class ParameterDistribution:
    """Common interface; subclasses set ``kind`` and implement the hooks."""

    kind = None

    def check_eps(self, eps):
        lo, hi = self.eps_range
        if not lo <= eps <= hi:
            raise ConfigurationError(
                f"{self.kind}: eps={eps} outside admissible [{lo}, {hi}]")

    def admissible(self, eps):
        lo, hi = self.eps_range
        return lo <= eps <= hi

    def integrate(self, phi, eps, order=40):
        """< eta_eps, phi > with an order-doubling convergence check for
        density kinds."""
        self.check_eps(eps)
        locs, wts = self.quad_nodes(eps, order)
        val = float(np.dot(wts, np.asarray(phi(locs))))
        if self.has_density(eps):
            locs2, wts2 = self.quad_nodes(eps, 2 * order)
            val2 = float(np.dot(wts2, np.asarray(phi(locs2))))
            if abs(val2 - val) > 1e-8 * (1.0 + abs(val2)):
                raise NumericalError("quadrature not converged",
                                     {"estimates": (val, val2)})
            return val2
        return val

    def has_density(self, eps):
        return False

    def weight_derivative_atoms(self, eps):
        """Mixture weight-derivative part: atoms paired against phi itself."""
        return []


class DiracTranslate(ParameterDistribution):
    kind = "dirac-translate"

    def __init__(self, a, support=(0.0, 1.0)):
        self.a = float(a)
        self.support = support
        self.eps_range = (support[0] - a, support[1] - a)

    def quad_nodes(self, eps, order=40):
        return np.array([self.a + eps]), np.array([1.0])

    def derivative_measure(self, eps):
        self.check_eps(eps)
        return DerivativeMeasure(self.support, atoms=[(self.a + eps, 1.0)])


class FrozenDirac(DiracTranslate):
    """Point mass that does not move with eps (nu = 0)."""

    kind = "frozen-dirac"

    def __init__(self, a, support=(0.0, 1.0)):
        super().__init__(a, support)
        self.eps_range = (-np.inf, np.inf)

    def quad_nodes(self, eps, order=40):
        return np.array([self.a]), np.array([1.0])

    def derivative_measure(self, eps):
        return DerivativeMeasure(self.support, atoms=[])


class DiracMixture(ParameterDistribution):
    """sum_i rho_i(eps) delta_{a_i + eps} with differentiable weights."""

    kind = "dirac-mixture"

    def __init__(self, atoms, weights, dweights, support=(0.0, 1.0)):
        self.atoms_loc = np.asarray(atoms, dtype=float)
        self.weights = list(weights)    # callables of eps
        self.dweights = list(dweights)  # their derivatives
        if len(self.weights) != len(self.atoms_loc):
            raise ConfigurationError("atoms/weights length mismatch")
        self.support = support
        lo = support[0] - float(np.min(self.atoms_loc))
        hi = support[1] - float(np.max(self.atoms_loc))
        self.eps_range = (lo, hi)

    def _w(self, eps):
        w = np.array([f(eps) for f in self.weights], dtype=float)
        if abs(w.sum() - 1.0) > 1e-10:
            raise ConfigurationError("mixture weights must sum to 1")
        return w

    def quad_nodes(self, eps, order=40):
        return self.atoms_loc + eps, self._w(eps)

    def derivative_measure(self, eps):
        self.check_eps(eps)
        return DerivativeMeasure(
            self.support,
            atoms=list(zip(self.atoms_loc + eps, self._w(eps))))

    def weight_derivative_atoms(self, eps):
        return list(zip(self.atoms_loc + eps,
                        (f(eps) for f in self.dweights)))


class SmoothDensity(ParameterDistribution):
    """d eta_eps = rho(u, eps) du on I, with d rho/d eps given analytically."""

    kind = "smooth-density"

    def __init__(self, support, rho, drho_deps, eps_range):
        self.support = tuple(float(v) for v in support)
        self.rho = rho
        self.drho = drho_deps
        self.eps_range = eps_range

    def has_density(self, eps):
        return True

    def quad_nodes(self, eps, order=40):
        a, b = self.support
        u, w = _gl_nodes(a, b, order)
        return u, w * self.rho(u, eps)

    def derivative_measure(self, eps, order=40):
        self.check_eps(eps)
        a, b = self.support

        def nu_density(s):
            s = np.atleast_1d(np.asarray(s, dtype=float))
            out = np.empty_like(s)
            for i, si in enumerate(s):  # tail integral of drho on (s, b)
                u, w = _gl_nodes(si, b, order)
                out[i] = np.dot(w, self.drho(u, eps))
            return out

        return DerivativeMeasure(self.support, density=nu_density)

class PMSmoothFamily(SmoothDensity):
    """The linear density family on [alpha0, alpha1]:

        rho_eps(u) = 2 (u - alpha0/2 + eps) / ((alpha1-alpha0)(alpha1+2 eps))

    admissible for |eps| <= alpha0/4.  Its nu_eps has the closed-form density
    2 (alpha1-s)(alpha0-s) / ((alpha1-alpha0)(alpha1+2 eps)^2), and the CDF
    inverts in closed form (used for common-random-number sampling).
    """

    kind = "pm-smooth"

    def __init__(self, alpha0, alpha1):
        if not 0.0 < alpha0 < alpha1 < 1.0:
            raise ConfigurationError("need 0 < alpha0 < alpha1 < 1")
        if not alpha1 < 2.0 * alpha0:
            raise ConfigurationError("need alpha1 < 2 alpha0")
        self.alpha0 = float(alpha0)
        self.alpha1 = float(alpha1)

        def rho(u, eps):
            return (2.0 * (np.asarray(u) - alpha0 / 2.0 + eps)
                    / ((alpha1 - alpha0) * (alpha1 + 2.0 * eps)))

        def drho(u, eps):
            return (2.0 * (alpha1 + alpha0 - 2.0 * np.asarray(u))
                    / ((alpha1 - alpha0) * (alpha1 + 2.0 * eps) ** 2))

        super().__init__((alpha0, alpha1), rho, drho,
                         (-alpha0 / 4.0, alpha0 / 4.0))

    def derivative_measure(self, eps, order=40):
        self.check_eps(eps)
        a0, a1 = self.alpha0, self.alpha1
        c = 2.0 / ((a1 - a0) * (a1 + 2.0 * eps) ** 2)

        def nu_density(s):
            s = np.asarray(s, dtype=float)
            return c * (a1 - s) * (a0 - s)

        return DerivativeMeasure(self.support, density=nu_density)

    def inverse_cdf(self, p, eps):
        self.check_eps(eps)
        a0, a1 = self.alpha0, self.alpha1
        c = 2.0 / ((a1 - a0) * (a1 + 2.0 * eps))
        m = a0 / 2.0 - eps  # rho = c (u - m)
        p = np.asarray(p, dtype=float)
        return m + np.sqrt(2.0 * p / c + (a0 - m) ** 2)


class UniformToDirac(ParameterDistribution):
    """Uniform on (a, a+eps) for eps > 0, collapsing to delta_a at eps = 0."""

    kind = "uniform-to-dirac"

    def __init__(self, a, support=(0.0, 1.0)):
        self.a = float(a)
        self.support = support
        self.eps_range = (0.0, support[1] - a)

    def has_density(self, eps):
        return eps > 0.0

    def quad_nodes(self, eps, order=40):
        if eps == 0.0:
            return np.array([self.a]), np.array([1.0])
        u, w = _gl_nodes(self.a, self.a + eps, order)
        return u, w / eps

    def derivative_measure(self, eps):
        self.check_eps(eps)
        if eps == 0.0:
            return DerivativeMeasure(self.support, atoms=[(self.a, 0.5)])
        a = self.a

        def nu_density(u):
            u = np.asarray(u, dtype=float)
            inside = (u > a) & (u < a + eps)
            return np.where(inside, (u - a) / eps ** 2, 0.0)

        return DerivativeMeasure((a, a + eps), density=nu_density)

    def inverse_cdf(self, p, eps):
        return self.a + eps * np.asarray(p, dtype=float)


def pair_derivative(nu, dphi, order=40):
    """< nu, phi' > for a DerivativeMeasure (module-level convenience)."""
    return nu.pair(dphi, order)


def distribution_derivative(dist, phi, dphi, eps, order=40):
    """Full d/d eps < eta_eps, phi >: weight part + < nu, phi' >."""
    total = sum(w * float(np.asarray(phi(loc)))
                for loc, w in dist.weight_derivative_atoms(eps))
    total += dist.derivative_measure(eps).pair(dphi, order)
    return total


@dataclass
class ProductDerivativeTerm:
    """The j-th Leibniz term of d/d eps of a product measure:
    eta x ... x nu (slot j) x ... x eta."""

    dists: list
    j: int
    eps: float

    def pair(self, dphi_j, order=20):
        """Pair against d phi / d u_j; phi given as a function of the full
        parameter vector (tensor quadrature over all slots)."""
        grids = []
        for i, d in enumerate(self.dists):
            if i == self.j:
                grids.append(d.derivative_measure(self.eps).quad_nodes(order))
            else:
                grids.append(d.quad_nodes(self.eps, order))
        mesh = np.meshgrid(*[g[0] for g in grids], indexing="ij")
        wt = np.ones(mesh[0].shape)
        for axis, (_, w) in enumerate(grids):
            shape = [1] * len(grids)
            shape[axis] = -1
            wt = wt * w.reshape(shape)
        return float(np.sum(wt * dphi_j(*mesh)))


def product_derivative(dists, j, eps=0.0):
    if not 0 <= j < len(dists):
        raise ConfigurationError("slot index out of range")
    return ProductDerivativeTerm(list(dists), j, eps)
