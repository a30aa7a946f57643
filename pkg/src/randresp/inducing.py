"""First-return (inducing) scheme for the intermittent family on
Delta = (1/2, 1].

A return-time-R inverse word branch factors as

    g_z = g_0 o g_{u_1} o ... o g_{u_{R-1}},   g_0(x) = (x+1)/2,

with g_u the left-branch inverse of the map with parameter u.  Because the
parameters are iid, every word sum over the product measure factorizes
through the single *averaged left-branch operator*

    (A f)(x) = int f(g_u(x)) g_u'(x) d eta(u),

so the induced operator, the unfolding F, and the eps-derivative terms are
all computed by iterating A (and its distribution-derivative sibling A_nu)
instead of enumerating parameter words.  This keeps the parameter integrals
spectrally accurate at every word length.

Functions on the left of Delta live on a dyadic panel-Chebyshev basis so the
steepening of densities toward the neutral fixed point stays resolved; values
below the lowest panel edge are extrapolated and flagged.
"""

from dataclasses import dataclass, field

import numpy as np

from .basis import ChebyshevBasis, DensityFunction, PanelChebBasis
from .errors import ConfigurationError
from .maps import LSVMap
from .operators import DiscretizedOperator, resolvent_solve, stationary_density


# ------------------------------------------------------- word-level helpers

def lsv_template(u):
    return LSVMap(u)


def xn_sequence(us, n):
    """Preimage chain of 1/2 under left branches with parameters ``us`` and
    its lift into Delta.

    Returns (x, xp) with x[k] = x_k for k = 1..n (x_k = g_{u_1}(x_{k-1}),
    x_0 = 1/2) and xp[k] = x'_k (x'_1 = 3/4, x'_k = (x_{k-1} shifted + 1)/2);
    the return time equals k exactly on (x'_k, x'_{k-1}].
    """
    us = np.asarray(us, dtype=float)
    if len(us) < n:
        raise ConfigurationError("parameter word too short")
    x = np.empty(n + 1)
    x[0] = 0.5
    for k in range(1, n + 1):
        # innermost parameter comes last: x_k = g_{u_1} o ... o g_{u_k} (1/2)
        v = 0.5
        for u in us[k - 1::-1]:
            v = float(LSVMap(u).left_inverse(np.array([v]))[0])
        x[k] = v
    xp = (x[:-1] + 1.0) / 2.0  # xp[k-1] = x'_k
    return x[1:], xp


def first_return_time(us, x, n_max=1000):
    """Direct-orbit first return time to Delta of x in (1/2, 1]; the step-m
    left branch uses parameter us[m-1]."""
    if not 0.5 < x <= 1.0:
        raise ConfigurationError("x must lie in (1/2, 1]")
    y = 2.0 * x - 1.0
    if y > 0.5:
        return 1
    for m in range(1, n_max):
        u = us[m - 1] if m - 1 < len(us) else us[-1]
        y = float(LSVMap(u).forward(np.array([y]))[0])
        if y > 0.5:
            return m + 1
    raise ConfigurationError(f"no return within {n_max} steps")


def compose_word(us, x):
    """G, G', G'' of the word branch g_0 o g_{u_1} o ... o g_{u_{R-1}} at x.

    ``us`` lists u_1..u_{R-1}; the innermost factor is g_{u_{R-1}}.
    """
    x = np.asarray(x, dtype=float)
    v = x.copy()
    vp = np.ones_like(v)
    vpp = np.zeros_like(v)
    for u in np.asarray(us, dtype=float)[::-1]:
        fam = LSVMap(u)
        g = fam.left_inverse(v)
        gp = 1.0 / fam.tprime(g)
        gpp = -fam.tsecond(g) / fam.tprime(g) ** 3
        vpp = gpp * vp ** 2 + gp * vpp
        vp = gp * vp
        v = g
    return (v + 1.0) / 2.0, vp / 2.0, vpp / 2.0


def compose_word_with_sens(us, x):
    """As compose_word, plus per-slot sensitivities dG/du_j and dG'/du_j.

    Direct forward-mode per slot (O(R^2)); used by tests and per-word
    derivative oracles, not by the operator recursion.
    """
    us = np.asarray(us, dtype=float)
    x = np.asarray(x, dtype=float)
    r = len(us)
    G, Gp, _ = compose_word(us, x)
    dG = np.zeros((r,) + x.shape)
    dGp = np.zeros((r,) + x.shape)
    for j in range(r):
        v = x.copy()
        s = np.zeros_like(v)        # d v / d u_j
        lp = np.zeros_like(v)       # d log(chain') / d u_j
        for i in range(r - 1, -1, -1):
            fam = LSVMap(us[i])
            g = fam.left_inverse(v)
            tp = fam.tprime(g)
            gp = 1.0 / tp
            gpp = -fam.tsecond(g) / tp ** 3
            new_s = gp * s
            if i == j:
                new_s = new_s + fam.du_inverse(fam.LEFT, v)
                lp = lp + fam.du_inverse_prime(fam.LEFT, v) / gp
            lp = lp + (gpp / gp) * s
            s = new_s
            v = g
        dG[j] = s / 2.0
        dGp[j] = Gp * lp
    return G, Gp, dG, dGp


# --------------------------------------------------------- induced machinery

@dataclass
class InducedResponse:
    h_hat0: DensityFunction
    q_hat: DensityFunction
    h_hat_star: DensityFunction
    h_star: object                 # UnfoldedDensity
    q_out: DensityFunction         # Q h-hat on the left region
    f_hstar_out: DensityFunction   # F(h-hat*) on the left region
    diagnostics: dict = field(default_factory=dict)


class UnfoldedDensity:
    """A function on (0,1] given by a Delta part and a left ("out") part."""

    def __init__(self, delta_fn, out_fn):
        self.delta_fn = delta_fn
        self.out_fn = out_fn
        self.floor = out_fn.basis.floor

    def __call__(self, x):
        scalar = np.isscalar(x)
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty_like(x)
        right = x > 0.5
        if np.any(right):
            out[right] = self.delta_fn(x[right])
        if np.any(~right):
            out[~right] = self.out_fn(x[~right])
        return float(out[0]) if scalar else out

    def integrate(self):
        """Integral over (floor, 1]; mass below the panel floor is excluded."""
        return self.delta_fn.integrate() + self.out_fn.integrate()

    def scaled(self, c):
        return UnfoldedDensity(self.delta_fn * c, self.out_fn * c)

    def minus(self, other):
        return UnfoldedDensity(self.delta_fn - other.delta_fn,
                               self.out_fn - other.out_fn)


class InducedSystem:
    """LSV system with parameter distribution ``dist`` induced on Delta."""

    def __init__(self, dist, n_max=40, quad_order=8, n_delta=40,
                 panel_degree=16, floor=1e-4, template=lsv_template):
        self.dist = dist
        self.n_max = int(n_max)
        self.quad_order = int(quad_order)
        self.template = template
        self.delta_basis = ChebyshevBasis(n_delta, 0.5, 1.0)
        self.out_basis = PanelChebBasis.dyadic(0.5, floor, panel_degree)
        locs, _ = dist.quad_nodes(0.0, 2)
        if np.any(locs <= 0.0) or np.any(locs >= 1.0):
            raise ConfigurationError("parameter values must sit inside (0,1)")
        self._cache = {}

    # -- building blocks ---------------------------------------------------

    def _eta_nodes(self, eps):
        return self.dist.quad_nodes(eps, self.quad_order)

    def a_rows(self, points, eps):
        """Rows of the averaged left-branch operator A at given points."""
        points = np.asarray(points, dtype=float)
        locs, wts = self._eta_nodes(eps)
        rows = np.zeros((len(points), self.out_basis.size))
        for u, w in zip(locs, wts):
            fam = self.template(u)
            g = fam.left_inverse(points)
            gp = 1.0 / fam.tprime(g)
            rows += w * gp[:, None] * self.out_basis.eval_matrix(g)
        return rows

    def a_nu_rows(self, points, eps):
        """Rows of A_nu: the nu_eps-pairing of d/du [f(g_u(x)) g_u'(x)]."""
        points = np.asarray(points, dtype=float)
        nu = self.dist.derivative_measure(eps)
        locs, wts = nu.quad_nodes(order=self.quad_order + 8)
        rows = np.zeros((len(points), self.out_basis.size))
        D = self.out_basis.diff_matrix
        for u, w in zip(locs, wts):
            if w == 0.0:
                continue
            fam = self.template(u)
            g = fam.left_inverse(points)
            gp = 1.0 / fam.tprime(g)
            dug = fam.du_inverse(fam.LEFT, points)
            dugp = fam.du_inverse_prime(fam.LEFT, points)
            E = self.out_basis.eval_matrix(g)
            rows += w * ((dug * gp)[:, None] * (E @ D) + dugp[:, None] * E)
        return rows

    def _blocks(self, eps):
        """Cache of the A matrix and the psi_1 transfer blocks at eps."""
        key = round(float(eps), 15)
        if key not in self._cache:
            xo = self.out_basis.nodes
            xd = self.delta_basis.nodes
            p0_out = 0.5 * self.delta_basis.eval_matrix((xo + 1.0) / 2.0)
            p0_delta = 0.5 * self.delta_basis.eval_matrix((xd + 1.0) / 2.0)
            a_out = self.a_rows(xo, eps)
            a_delta = self.a_rows(xd, eps)
            self._cache[key] = (a_out, a_delta, p0_out, p0_delta)
        return self._cache[key]

    # -- operator, unfolding, response -------------------------------------

    def induced_operator(self, eps=0.0):
        a_out, a_delta, p0_out, p0_delta = self._blocks(eps)
        # S = sum_{k=0}^{n_max-2} A^k P0  (word of return time k+2)
        s = p0_out.copy()
        acc = p0_out.copy()
        for _ in range(self.n_max - 2):
            s = a_out @ s
            acc += s
        m = p0_delta + a_delta @ acc
        tail = self.tail_mass(eps)
        op = DiscretizedOperator(m, self.delta_basis, self.n_max,
                                 self.quad_order, tail,
                                 meta={"eps": eps, "mass_deficit": tail,
                                       "n_max": self.n_max})
        return op

    def tail_mass(self, eps=0.0):
        """Mass of return times > n_max: 1/2 minus the enumerated cylinder
        masses (cross-checked in tests against the x'_n envelope)."""
        a_out, a_delta, p0_out, p0_delta = self._blocks(eps)
        wd = self.delta_basis.quad_weights
        total = float(wd @ (p0_delta @ np.ones(self.delta_basis.size)))
        vec = p0_out @ np.ones(self.delta_basis.size)
        for _ in range(self.n_max - 1):
            total += float(wd @ (a_delta @ vec))
            vec = a_out @ vec
        return max(0.5 - total, 0.0)

    def envelope_tail(self, eps=0.0):
        """Upper envelope for the unfolding truncation: x'_{n_max} - 1/2 along
        the constant word at the largest (slowest-escaping) parameter value."""
        locs, _ = self.dist.quad_nodes(eps, max(self.quad_order, 64))
        fam = self.template(float(np.max(locs)))
        v = np.array([0.5])
        for _ in range(self.n_max - 1):
            v = fam.left_inverse(v)
        return float(v[0]) / 2.0  # (x_{n-1} + 1)/2 - 1/2

    def stationary(self, eps=0.0):
        op = self.induced_operator(eps)
        # the eigenvalue sits below 1 by the *density-weighted* tail, which
        # can exceed the Lebesgue tail by sup h-hat; allow that headroom
        h = stationary_density(op, eig_tol=1e-8 + 10.0 * op.tail_bound)
        return op, h

    def unfold(self, h_hat, eps=0.0):
        """F(h_hat): h_hat on Delta, truncated word sum to the left of 1/2."""
        a_out, _, p0_out, _ = self._blocks(eps)
        s = p0_out @ h_hat.values
        acc = s.copy()
        for _ in range(self.n_max - 1):
            s = a_out @ s
            acc += s
        return UnfoldedDensity(h_hat, DensityFunction(self.out_basis, acc))

    def _derivative_series(self, h_hat, eps=0.0):
        """The word-sum eps-derivative sum_R sum_j A^{a} A_nu A^{b} psi1[h]
        evaluated on Delta (gives d/d eps L-hat h) and on the out region
        (gives Q h-hat)."""
        a_out, a_delta, p0_out, _ = self._blocks(eps)
        xd = self.delta_basis.nodes
        anu_out = self.a_nu_rows(self.out_basis.nodes, eps)
        anu_delta = self.a_nu_rows(xd, eps)
        psi = p0_out @ h_hat.values
        # s_k = A^k psi, partial sums PS_j = sum_{k<=n_max-1-j} s_k
        s_list = [psi]
        for _ in range(self.n_max - 2):
            s_list.append(a_out @ s_list[-1])
        cum = np.cumsum(np.array(s_list), axis=0)  # cum[m] = sum_{k<=m} s_k
        ps = [None] + [cum[self.n_max - 1 - j] for j in range(1, self.n_max)]
        # W = sum_{j>=2} A^{j-2} (A_nu PS_j), Horner from the top
        w = np.zeros(self.out_basis.size)
        for j in range(self.n_max - 1, 1, -1):
            w = anu_out @ ps[j] + a_out @ w
        q_delta = anu_delta @ ps[1] + a_delta @ w
        q_out = anu_out @ ps[1] + a_out @ w
        return (DensityFunction(self.delta_basis, q_delta),
                DensityFunction(self.out_basis, q_out))

    def q_correction(self, h_hat, eps=0.0):
        """Q h-hat: the word-derivative sum, supported left of Delta."""
        _, q_out = self._derivative_series(h_hat, eps)
        return q_out

    def response_hat(self, eps=0.0):
        """Induced response h-hat* on Delta (resolvent of the induced op)."""
        op, h_hat0 = self.stationary(eps)
        q_hat, q_out = self._derivative_series(h_hat0, eps)
        raw_mean = q_hat.integrate()
        # project out the truncation-induced mass defect before the solve
        q_proj = q_hat - h_hat0 * raw_mean
        h_hat_star = resolvent_solve(op, q_proj, h0=h_hat0)
        h_hat_star.meta["raw_mean_q"] = raw_mean
        return op, h_hat0, q_hat, q_out, h_hat_star

    def full_response(self, eps=0.0):
        """h* = F(h-hat*) + Q h-hat on (0,1] (and h-hat* itself on Delta)."""
        op, h_hat0, q_hat, q_out, h_hat_star = self.response_hat(eps)
        f_star = self.unfold(h_hat_star, eps)
        out_total = DensityFunction(self.out_basis,
                                    f_star.out_fn.values + q_out.values)
        h_star = UnfoldedDensity(h_hat_star, out_total)
        return InducedResponse(
            h_hat0=h_hat0, q_hat=q_hat, h_hat_star=h_hat_star,
            h_star=h_star, q_out=q_out, f_hstar_out=f_star.out_fn,
            diagnostics={
                "tail_mass": op.tail_bound,
                "envelope_tail": self.envelope_tail(eps),
                "raw_mean_q_hat": h_hat_star.meta["raw_mean_q"],
                "resolvent_residual": h_hat_star.meta["residual"],
                "eigenvalue_1": h_hat0.meta["eigenvalue_1"],
                "gap": h_hat0.meta["gap"],
            })

    def unfolded_density(self, eps):
        """h_eps = F(h-hat_eps), un-normalized."""
        _, h_hat = self.stationary(eps)
        return self.unfold(h_hat, eps)

    def apply_full_operator(self, fn, points, eps=0.0):
        """The *un-induced* annealed operator applied to a callable:
        (L f)(x) = int f(g_u(x)) g_u'(x) d eta(u) + f((x+1)/2) / 2."""
        points = np.asarray(points, dtype=float)
        locs, wts = self._eta_nodes(eps)
        out = 0.5 * np.asarray(fn((points + 1.0) / 2.0))
        for u, w in zip(locs, wts):
            fam = self.template(u)
            g = fam.left_inverse(points)
            gp = 1.0 / fam.tprime(g)
            out = out + w * np.asarray(fn(g)) * gp
        return out


# ------------------------------------------- deterministic comparison path

def induced_map_derivatives(u, y, r):
    """Forward-orbit accumulation of the return-time-r induced map at y:
    returns (That', That'', du That, du That').

    Step 0 is the right branch (parameter-free); steps 1..r-1 use the left
    branch of the parameter-u map.  The chain rule is accumulated forward,
    so this path never touches the inverse-branch machinery.
    """
    fam = LSVMap(u)
    y = np.asarray(y, dtype=float)
    v1 = np.full_like(y, 2.0)   # T-hat' so far (right branch first)
    v2 = np.zeros_like(y)
    du = np.zeros_like(y)
    dup = np.zeros_like(y)
    ym = 2.0 * y - 1.0
    for _ in range(r - 1):
        tp = fam.tprime(ym)
        ts = fam.tsecond(ym)
        dut = fam.du_forward(ym)
        dutp = fam.du_tprime(ym)
        v2 = ts * v1 ** 2 + tp * v2
        dup = (dutp + ts * du) * v1 + tp * dup
        du = dut + tp * du
        v1 = tp * v1
        ym = fam.forward(ym)
    return v1, v2, du, dup


def deterministic_induced_response(ind, u):
    """Induced response to eta_eps = delta_{u+eps} via the classical formula

        h-hat* = (I - L-hat_u)^{-1} L-hat_u [A1 h' + A2 h],

    with A1, A2 evaluated per word branch from forward-orbit derivatives of
    the induced map.  Independent of the nu-pairing pipeline up to the shared
    operator assembly."""
    op, h_hat = ind.stationary(0.0)
    dh_hat = h_hat.differentiate()
    xd = ind.delta_basis.nodes
    us_const = np.full(ind.n_max, u)
    q = np.zeros(ind.delta_basis.size)
    for r in range(2, ind.n_max + 1):
        g, gp, _ = compose_word(us_const[: r - 1], xd)
        v1, v2, duT, duTp = induced_map_derivatives(u, g, r)
        a1 = -duT / v1
        a2 = duT * v2 / v1 ** 2 - duTp / v1
        q += (a1 * dh_hat(g) + a2 * h_hat(g)) / v1  # |g_z'| = 1/That'(g)
    q_fn = DensityFunction(ind.delta_basis, q)
    raw_mean = q_fn.integrate()
    q_proj = q_fn - h_hat * raw_mean
    h_star = resolvent_solve(op, q_proj, h0=h_hat)
    h_star.meta["raw_mean_q"] = raw_mean
    return h_star


def deterministic_full_response(ind_dirac, u):
    """Full-interval deterministic response (Remark-4.3 path on Delta plus
    unfolding and the Q correction of the Dirac-translate distribution)."""
    h_hat_star = deterministic_induced_response(ind_dirac, u)
    _, h_hat = ind_dirac.stationary(0.0)
    q_out = ind_dirac.q_correction(h_hat, 0.0)
    f_star = ind_dirac.unfold(h_hat_star, 0.0)
    out_total = DensityFunction(ind_dirac.out_basis,
                                f_star.out_fn.values + q_out.values)
    return UnfoldedDensity(h_hat_star, out_total)
