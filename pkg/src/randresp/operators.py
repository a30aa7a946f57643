"""Assembly of the annealed transfer operator

    (L_eps Phi)(x) = sum_k pi_k(eps) int  sum_z Phi(g_{z,u}(x)) |g'_{z,u}(x)|  d eta_{k,eps}(u)

as a collocation matrix on a declared basis, plus the stationary-density and
deflated-resolvent solves and an independent Ulam (piecewise-constant) oracle
discretization.

Countable branch sums (Gauss / Renyi) are truncated at ``cutoff`` and the
truncated tail is compensated by a second-order Taylor expansion of the test
function at the branch accumulation point, with the remaining sums evaluated
by Hurwitz zeta.  The conservative un-compensated bound sum_{n>cutoff}
sup|g_n'| <= 1/cutoff is still what is *reported* as the tail bound.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import zeta as hurwitz_zeta

from .basis import DensityFunction, UlamBasis
from .errors import ConfigurationError, ModelError, NumericalError
from .maps import GaussMap, RenyiMap


@dataclass
class Component:
    """One mixture component: a family (fixed, or a template over a parameter
    distribution) with a differentiable marginal weight pi(eps)."""

    weight: object          # callable eps -> real
    dweight: object         # its derivative
    family: object = None   # fixed MapFamily, or None when template is set
    template: object = None  # callable u -> MapFamily
    dist: object = None     # ParameterDistribution over the template parameter

    def __post_init__(self):
        if (self.family is None) == (self.template is None):
            raise ConfigurationError(
                "component needs exactly one of family / template")
        if self.template is not None and self.dist is None:
            raise ConfigurationError("template component needs a distribution")

    def families_at(self, eps, quad_order):
        """Resolve to a list of (family, weight) pairs at this eps."""
        if self.family is not None:
            return [(self.family, 1.0)]
        locs, wts = self.dist.quad_nodes(eps, quad_order)
        return [(self.template(u), w) for u, w in zip(locs, wts)]


def fixed_component(family, weight=1.0, dweight=0.0):
    wfun = weight if callable(weight) else (lambda e, w=weight: w)
    dfun = dweight if callable(dweight) else (lambda e, d=dweight: d)
    return Component(weight=wfun, dweight=dfun, family=family)


@dataclass
class RandomSystem:
    components: list
    eps_range: tuple = (-0.25, 0.25)
    name: str = ""

    def __post_init__(self):
        for e in (self.eps_range[0], 0.0, self.eps_range[1]):
            total = sum(c.weight(e) for c in self.components)
            if abs(total - 1.0) > 1e-9:
                raise ConfigurationError(
                    f"weights sum to {total} at eps={e}, expected 1")

    @property
    def domain(self):
        fam = self.components[0].family or self.components[0].template(
            _probe_param(self.components[0].dist))
        return fam.domain

    def admissible(self, eps):
        lo, hi = self.eps_range
        ok = lo <= eps <= hi
        for c in self.components:
            if c.dist is not None:
                ok = ok and c.dist.admissible(eps)
        return ok


def _probe_param(dist):
    locs, _ = dist.quad_nodes(0.0, 2)
    return float(locs[0])


@dataclass
class DiscretizedOperator:
    matrix: object
    basis: object
    cutoff: int
    quad_order: int
    tail_bound: float
    meta: dict = field(default_factory=dict)
    _eig: object = None

    def apply(self, values):
        return self.matrix @ np.asarray(values, dtype=float)

    def apply_fn(self, f):
        return DensityFunction(self.basis, self.apply(f.values))

    def eigens(self):
        if self._eig is None:
            m = self.matrix
            if not isinstance(m, np.ndarray):
                raise NumericalError("dense eigensolve needs a dense matrix")
            vals, vecs = np.linalg.eig(m)
            order = np.argsort(-np.abs(vals))
            self._eig = (vals[order], vecs[:, order])
        return self._eig

    def report(self):
        out = {
            "cutoff": self.cutoff,
            "quad_order": self.quad_order,
            "tail_bound": self.tail_bound,
            "basis": repr(self.basis),
        }
        if isinstance(self.matrix, np.ndarray) and self.matrix.shape[0] <= 1024:
            vals, _ = self.eigens()
            out["eigenvalue_1"] = float(np.real(vals[0]))
            out["gap"] = float(1.0 - np.abs(vals[1]))
        out.update({k: v for k, v in self.meta.items()
                    if isinstance(v, (int, float, str, bool))})
        return out


# ----------------------------------------------------------------- assembly

_CHUNK = 2048


def family_matrix(family, basis, cutoff=10000):
    """Collocation matrix of the single-map transfer operator L_T."""
    x = basis.nodes
    n_nodes = len(x)
    M = np.zeros((n_nodes, basis.size))
    if family.countable:
        start = 1
        while start <= cutoff:
            stop = min(start + _CHUNK - 1, cutoff)
            n = np.arange(start, stop + 1, dtype=float)[:, None]
            t = 1.0 / (n + x[None, :])
            y = t if isinstance(family, GaussMap) else 1.0 - t
            w = t * t
            E = basis.eval_matrix(y.ravel()).reshape(len(n), n_nodes, -1)
            M += np.einsum("cn,cnb->nb", w, E)
            start = stop + 1
        M += _tail_correction(family, basis, cutoff)
    else:
        for b in range(family.nbranches):
            y = family.inverse(b, x, 0)
            w = np.abs(family.inverse(b, x, 1))
            M += w[:, None] * basis.eval_matrix(y)
    return M


def _tail_correction(family, basis, cutoff):
    """Taylor-compensate sum_{n>cutoff} Phi(g_n(x)) |g_n'(x)| at the branch
    accumulation point (0 for Gauss, 1 for Renyi)."""
    x = basis.nodes
    s2 = hurwitz_zeta(2, cutoff + 1.0 + x)
    s3 = hurwitz_zeta(3, cutoff + 1.0 + x)
    s4 = hurwitz_zeta(4, cutoff + 1.0 + x)
    anchor = 0.0 if isinstance(family, GaussMap) else 1.0
    sign = 1.0 if isinstance(family, GaussMap) else -1.0
    r0 = basis.eval_matrix(np.array([anchor]))[0]
    D = basis.diff_matrix
    r1 = r0 @ D
    r2 = r1 @ D
    return (np.outer(s2, r0) + sign * np.outer(s3, r1)
            + 0.5 * np.outer(s4, r2))


def build_operator(system, eps, basis, cutoff=10000, quad_order=12):
    """Discretize L_{P eps} at the basis nodes."""
    if not system.admissible(eps):
        raise ConfigurationError(f"eps={eps} outside the admissible range")
    M = np.zeros((len(basis.nodes), basis.size))
    tail = 0.0
    for comp in system.components:
        pw = comp.weight(eps)
        for fam, w in comp.families_at(eps, quad_order):
            M += pw * w * family_matrix(fam, basis, cutoff)
            if fam.countable:
                tail += abs(pw * w) / cutoff
    return DiscretizedOperator(M, basis, cutoff, quad_order, tail,
                               meta={"eps": eps, "tail_compensated": True,
                                     "system": system.name})


# ------------------------------------------------------------------- solves

def stationary_density(op, eig_tol=None):
    """Normalized fixed density of the discretized operator.

    ``eig_tol`` defaults to 1e-8 plus any mass deficit recorded by the
    builder (truncated induced operators are sub-stochastic by their tail).
    """
    if eig_tol is None:
        eig_tol = 1e-8 + op.meta.get("mass_deficit", 0.0)
    if getattr(op.basis, "kind", "") == "ulam":
        return _ulam_stationary(op)
    vals, vecs = op.eigens()
    lead = np.argmin(np.abs(vals - 1.0))
    lam1 = vals[lead]
    if abs(lam1 - 1.0) > eig_tol:
        raise ModelError("dominant eigenvalue far from 1",
                         {"eigenvalue": complex(lam1), "tol": eig_tol})
    others = np.abs(np.delete(vals, lead))
    gap = float(1.0 - np.max(others)) if len(others) else 1.0
    if gap <= 0.0:
        raise ModelError("no spectral gap at the discrete level",
                         {"gap": gap})
    v = np.real(vecs[:, lead])
    mass = float(op.basis.quad_weights @ v)
    if mass == 0.0:
        raise ModelError("fixed vector has zero mass")
    v = v / mass
    meta = {"eigenvalue_1": float(np.real(lam1)), "gap": gap}
    if np.min(v) < -1e-8:
        meta["positivity_warning"] = float(np.min(v))
    return DensityFunction(op.basis, v, meta=meta)


def _ulam_stationary(op, maxit=100000, tol=1e-13):
    k = op.basis.size
    v = np.ones(k)
    for it in range(maxit):
        w = op.matrix @ v
        w = w / (op.basis.quad_weights @ w)
        delta = np.max(np.abs(w - v))
        v = w
        if delta < tol:
            break
    else:
        raise NumericalError("Ulam power iteration stalled",
                             {"delta": float(delta)})
    return DensityFunction(op.basis, v, meta={"power_iterations": it + 1})


def resolvent_solve(op, q, h0=None, zero_mean_tol=1e-9):
    """Solve (I - L) f = q with integrate(f) = 0 via a bordered system that
    deflates the eigenvalue-1 direction.  Returns f with residual in meta."""
    qv = q.values if isinstance(q, DensityFunction) else np.asarray(q, float)
    w = op.basis.quad_weights
    mean_q = float(w @ qv)
    if abs(mean_q) > zero_mean_tol:
        raise ConfigurationError(
            f"resolvent rhs is not mean-zero: integral {mean_q:.3e}")
    if h0 is None:
        h0 = stationary_density(op)
    n = len(qv)
    A = np.eye(n) - op.matrix
    B = np.zeros((n + 1, n + 1))
    B[:n, :n] = A
    B[:n, n] = h0.values
    B[n, :n] = w
    rhs = np.concatenate([qv, [0.0]])
    try:
        sol = np.linalg.solve(B, rhs)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("bordered resolvent solve failed",
                             {"reason": str(exc)})
    f = sol[:n]
    residual = float(np.max(np.abs(A @ f - qv)))
    return DensityFunction(op.basis, f,
                           meta={"residual": residual,
                                 "multiplier": float(sol[n])})


# -------------------------------------------------------------- Ulam oracle

def ulam_operator(system, eps, k=4096, samples_per_bin=1024, quad_order=12):
    """Forward-sampling Ulam discretization (independent oracle).

    Each bin is sampled at ``samples_per_bin`` regular points which are pushed
    through every (family, parameter-weight) pair; columns sum to 1 exactly.
    """
    if k < 64:
        raise ConfigurationError("Ulam oracle needs k >= 64")
    basis = UlamBasis(k)
    spb = samples_per_bin
    pts = (np.arange(k * spb) + 0.5) / (k * spb)
    j = np.repeat(np.arange(k), spb)
    M = np.zeros((k, k))
    for comp in system.components:
        pw = comp.weight(eps)
        for fam, w in comp.families_at(eps, quad_order):
            y = fam.forward(pts)
            i = basis.bin_index(y)
            np.add.at(M, (i, j), pw * w / spb)
    return DiscretizedOperator(M, basis, 0, quad_order, 0.0,
                               meta={"eps": eps,
                                     "samples_per_bin": spb,
                                     "system": system.name})


# ------------------------------------------------------------- diagnostics

def duality_defect(op, poly_coeffs):
    """|integral(L Phi) - integral(Phi)| for Phi given by power-basis coeffs."""
    x = op.basis.nodes
    vals = np.polynomial.polynomial.polyval(x, poly_coeffs)
    w = op.basis.quad_weights
    return abs(float(w @ op.apply(vals)) - float(w @ vals))
