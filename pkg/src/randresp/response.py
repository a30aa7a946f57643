"""Linear response of the stationary density.

The derivative q = d/d eps L_eps h0 at eps = 0 is assembled from the analytic
pieces (weight derivatives, moving-atom terms, and the nu-pairing of the
integrand's parameter derivative); the response itself is

    h* = (I - L_0)^{-1} q

solved on the zero-mean subspace.  Finite differencing of stationary solves
exists here only as a validator, never as the primary path.
"""

from dataclasses import dataclass, field

import numpy as np

from .basis import DensityFunction
from .errors import ConfigurationError
from .operators import (DiscretizedOperator, build_operator, family_matrix,
                        resolvent_solve, stationary_density)


@dataclass
class ResponseReport:
    h0: DensityFunction
    q: DensityFunction
    h_star: DensityFunction
    h_star_normalized: DensityFunction
    observable_responses: dict = field(default_factory=dict)
    fd_estimates: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)


def _branch_parameter_term(fam, h0, dh0, x):
    """sum over branches of h0'(g) du_g |g'| + h0(g) du_|g'| at the nodes."""
    if not getattr(fam, "parametrized", False):
        raise ConfigurationError(
            f"family {fam.kind!r} has no parameter derivatives")
    out = np.zeros_like(x)
    for b in range(fam.nbranches):
        g = fam.inverse(b, x, 0)
        gp = fam.inverse(b, x, 1)
        du_g = fam.du_inverse(b, x)
        du_gp = fam.du_inverse_prime(b, x)
        out += dh0(g) * du_g * np.abs(gp) + h0(g) * np.sign(gp) * du_gp
    return out


def derivative_operator_apply(system, h0, eps=0.0, cutoff=10000,
                              quad_order=12):
    """q(x) = d/d eps (L_eps h0)(x) at eps, from the analytic formulas."""
    basis = h0.basis
    x = basis.nodes
    dh0 = h0.differentiate()
    q = np.zeros(basis.size)
    for comp in system.components:
        pw = comp.weight(eps)
        dpw = comp.dweight(eps)
        # weight-derivative part: dpi * (L_k h0)
        if dpw != 0.0:
            acc = np.zeros(basis.size)
            for fam, w in comp.families_at(eps, quad_order):
                acc += w * (family_matrix(fam, basis, cutoff) @ h0.values)
            q += dpw * acc
        if comp.dist is None:
            continue
        # mixture atoms whose weights move with eps
        for loc, dw in comp.dist.weight_derivative_atoms(eps):
            fam = comp.template(loc)
            q += pw * dw * (family_matrix(fam, basis, cutoff) @ h0.values)
        # nu-pairing of the integrand's u-derivative
        nu = comp.dist.derivative_measure(eps)
        locs, wts = nu.quad_nodes(order=quad_order)
        for u, w in zip(locs, wts):
            if w == 0.0:
                continue
            fam = comp.template(u)
            q += pw * w * _branch_parameter_term(fam, h0, dh0, x)
    return DensityFunction(basis, q)


def normalized_response(h0, h_star):
    return h_star - h0 * h_star.integrate()


def response(system, basis, eps=0.0, cutoff=10000, quad_order=12,
             observables=None):
    op0 = build_operator(system, eps, basis, cutoff, quad_order)
    h0 = stationary_density(op0)
    q = derivative_operator_apply(system, h0, eps, cutoff, quad_order)
    h_star = resolvent_solve(op0, q, h0=h0)
    h_norm = normalized_response(h0, h_star)
    obs = {}
    for name, phi in (observables or {}).items():
        obs[name] = float(basis.quad_weights @ (phi(basis.nodes) * h_norm.values))
    return ResponseReport(
        h0=h0, q=q, h_star=h_star, h_star_normalized=h_norm,
        observable_responses=obs,
        diagnostics={
            "mean_q": q.integrate(),
            "mean_h_star": h_star.integrate(),
            "resolvent_residual": h_star.meta["residual"],
            "operator": op0.report(),
        })


def deterministic_response(template, u, basis, cutoff=10000):
    """Response of the single-map family T_{u+eps} at eps=0 via the classical
    formula (forward-map data only):

        h* = (I - L_u)^{-1} L_u [A1 h' + A2 h],
        A1 = -duT/T',   A2 = duT T''/T'^2 - duT'/T'.
    """
    fam = template(u)
    if not getattr(fam, "parametrized", False):
        raise ConfigurationError("family is not differentiable in u")
    from .operators import RandomSystem, fixed_component
    system = RandomSystem([fixed_component(fam)])
    op = build_operator(system, 0.0, basis, cutoff)
    h = stationary_density(op)
    y = basis.nodes
    tp = fam.tprime(y)
    ts = fam.tsecond(y)
    dut = fam.du_forward(y)
    dutp = fam.du_tprime(y)
    a1 = -dut / tp
    a2 = dut * ts / tp ** 2 - dutp / tp
    v = a1 * h.differentiate().values + a2 * h.values
    q = DensityFunction(basis, op.apply(v))
    h_star = resolvent_solve(op, q, h0=h)
    h_star.meta["mean_q"] = q.integrate()
    return h_star


def finite_difference_check(system, eps_list, basis, h_star=None, cutoff=10000,
                            quad_order=12, grid=2000):
    """Validate h* against central differences of normalized stationary
    densities; one-sided where -eps is inadmissible."""
    if h_star is None:
        h_star = response(system, basis, cutoff=cutoff,
                          quad_order=quad_order).h_star_normalized
    dh_star = h_star.differentiate()
    from .basis import _domain_grid
    g = _domain_grid(basis, grid)
    rows = []
    for eps in sorted(eps_list, reverse=True):
        hp = stationary_density(
            build_operator(system, eps, basis, cutoff, quad_order))
        if system.admissible(-eps):
            hm = stationary_density(
                build_operator(system, -eps, basis, cutoff, quad_order))
            fd = DensityFunction(basis, (hp.values - hm.values) / (2 * eps))
            scheme = "central"
        else:
            h0 = stationary_density(
                build_operator(system, 0.0, basis, cutoff, quad_order))
            fd = DensityFunction(basis, (hp.values - h0.values) / eps)
            scheme = "one-sided"
        diff = fd - h_star
        err_sup = float(np.max(np.abs(diff(g))))
        err_c1 = err_sup + float(np.max(np.abs((fd.differentiate() - dh_star)(g))))
        rows.append({"eps": eps, "error_sup": err_sup, "error_c1": err_c1,
                     "scheme": scheme})
    for prev, cur in zip(rows, rows[1:]):
        ratio = prev["error_sup"] / max(cur["error_sup"], 1e-300)
        step = prev["eps"] / cur["eps"]
        cur["observed_order"] = float(np.log(ratio) / np.log(step))
    return rows
