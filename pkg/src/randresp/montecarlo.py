"""Statistical oracle: iid random-orbit simulation.

Orbits of the annealed chain x_{n+1} = T_{Z_n}(x_n) are simulated with a
counter-based generator (Philox) keyed on the seed, so the per-step uniforms
are reproducible bitwise and -- crucially -- *identical* across runs at +eps
and -eps.  With common random numbers the finite difference of ergodic
averages is variance-reduced enough to resolve the operator-path response
prediction at desk scale.

The map compositions themselves run in a small numba kernel over precomputed
(family-code, parameter) step arrays; everything statistical (histograms,
batch means, bootstrap) stays in numpy.
"""

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import ConfigurationError, UnsupportedOperation

_CODES = {"expanding-circle": 0, "gauss": 1, "renyi": 2, "lsv": 3}


@njit(cache=True)
def _orbit_kernel(x0, codes, params, dither, out):
    x = x0
    two_pi = 2.0 * np.pi
    for i in range(len(codes)):
        c = codes[i]
        p = params[i]
        if c == 0:
            # the dither keeps the binary-shift map from draining mantissa
            # bits (2x mod 1 is exact in floats and collapses to 0)
            x = 2.0 * x + p * np.sin(two_pi * x) + dither[i]
            x -= np.floor(x)
        elif c == 1:
            if x < 1e-300:
                x = 1e-300
            x = 1.0 / x
            x -= np.floor(x)
        elif c == 2:
            if x > 1.0 - 1e-16:
                x = 1.0 - 1e-16
            x = 1.0 / (1.0 - x)
            x -= np.floor(x)
        else:
            if x <= 0.5:
                x = x + (2.0 * x) ** p * x
            else:
                x = 2.0 * x - 1.0
        out[i] = x
    return x


def _family_code(fam):
    code = _CODES.get(fam.kind)
    if code is None:
        raise UnsupportedOperation(f"no orbit kernel for family {fam.kind!r}")
    if fam.kind == "expanding-circle":
        return code, fam.lam
    if fam.kind == "lsv":
        return code, fam.u
    return code, 0.0


def _sample_parameters(dist, eps, u):
    """Map uniforms u in [0,1) to parameter draws from eta_eps, using the
    same uniforms for every eps (common random numbers)."""
    kind = dist.kind
    if kind == "frozen-dirac":
        return np.full_like(u, dist.a)
    if kind == "dirac-translate":
        return np.full_like(u, dist.a + eps)
    if kind == "dirac-mixture":
        w = np.array([f(eps) for f in dist.weights], dtype=float)
        idx = np.searchsorted(np.cumsum(w), u, side="right")
        idx = np.clip(idx, 0, len(w) - 1)
        return dist.atoms_loc[idx] + eps
    if hasattr(dist, "inverse_cdf"):
        return dist.inverse_cdf(u, eps)
    raise UnsupportedOperation(
        f"distribution {kind!r} has no sampling transform")


def _step_arrays(system, eps, n, rng):
    """(codes, params) for n steps; two uniform streams are always drawn so
    the stream layout does not depend on eps."""
    u_comp = rng.random(n)
    u_par = rng.random(n)
    weights = np.array([c.weight(eps) for c in system.components])
    if np.any(weights < 0.0):
        raise ConfigurationError("negative component probability; cannot "
                                 f"simulate at eps={eps}")
    choice = np.searchsorted(np.cumsum(weights), u_comp, side="right")
    choice = np.clip(choice, 0, len(weights) - 1)
    codes = np.empty(n, dtype=np.int8)
    params = np.empty(n, dtype=np.float64)
    for k, comp in enumerate(system.components):
        sel = choice == k
        if not np.any(sel):
            continue
        if comp.family is not None:
            code, p = _family_code(comp.family)
            codes[sel] = code
            params[sel] = p
        else:
            pars = _sample_parameters(comp.dist, eps, u_par[sel])
            probe = comp.template(float(pars[0]))
            code, _ = _family_code(probe)
            codes[sel] = code
            params[sel] = pars
    dither = (rng.random(n) - 0.5) * 2.0 ** -45
    return codes, params, dither


@dataclass
class OrbitSpec:
    system: object
    eps: float = 0.0
    seed: int = 0
    burn_in: int = 1000
    length: int = 100000
    observables: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.length < 10000:
            raise ConfigurationError("orbit length must be >= 10^4")
        if self.burn_in < 1000:
            raise ConfigurationError("burn-in must be >= 10^3")


@dataclass
class OrbitStats:
    histogram: np.ndarray    # density estimate per bin
    bin_edges: np.ndarray
    observable_means: dict
    observable_se: dict      # batch-means standard errors
    meta: dict


def run_orbit(system, eps, seed, burn_in, length, x0=None):
    """The raw post-burn-in orbit (deterministic given seed)."""
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    n = burn_in + length
    codes, params, dither = _step_arrays(system, eps, n, rng)
    if x0 is None:
        x0 = rng.random()
    out = np.empty(n)
    _orbit_kernel(x0, codes, params, dither, out)
    return out[burn_in:]


def sample_orbit(spec, bins=256, n_batches=50):
    orbit = run_orbit(spec.system, spec.eps, spec.seed, spec.burn_in,
                      spec.length)
    edges = np.linspace(0.0, 1.0, bins + 1)
    counts, _ = np.histogram(orbit, bins=edges)
    hist = counts / (len(orbit) * np.diff(edges))
    means, ses = {}, {}
    for name, phi in spec.observables.items():
        v = np.asarray(phi(orbit))
        means[name] = float(np.mean(v))
        b = v[: (len(v) // n_batches) * n_batches].reshape(n_batches, -1)
        bm = b.mean(axis=1)
        ses[name] = float(np.std(bm, ddof=1) / np.sqrt(n_batches))
    return OrbitStats(hist, edges, means, ses,
                      meta={"seed": spec.seed, "eps": spec.eps,
                            "length": spec.length, "burn_in": spec.burn_in})


# --------------------------------------------------- density triangulation

def binned_density(density_fn, edges, points_per_bin=8):
    """Bin averages of a callable density (Gauss-Legendre per bin)."""
    gl_x, gl_w = np.polynomial.legendre.leggauss(points_per_bin)
    a = edges[:-1][:, None]
    w = np.diff(edges)[:, None]
    pts = a + 0.5 * w * (gl_x[None, :] + 1.0)
    vals = np.asarray(density_fn(pts.ravel())).reshape(pts.shape)
    return 0.5 * (vals * gl_w[None, :]).sum(axis=1)


def mc_density_check(system, eps, density_fn, n_seeds=10, length=1000000,
                     burn_in=1000, bins=256, n_boot=200, seed0=7000):
    """L1 distance between the pooled orbit histogram and a reference density,
    with a bootstrap (over seeds) quantile of the pure-sampling-noise L1."""
    edges = np.linspace(0.0, 1.0, bins + 1)
    widths = np.diff(edges)
    hists = []
    for s in range(n_seeds):
        orbit = run_orbit(system, eps, seed0 + s, burn_in, length)
        counts, _ = np.histogram(orbit, bins=edges)
        hists.append(counts / (length * widths))
    hists = np.array(hists)
    pooled = hists.mean(axis=0)
    ref = binned_density(density_fn, edges)
    l1 = float(np.sum(np.abs(pooled - ref) * widths))
    rng = np.random.default_rng(seed0)
    boot = np.empty(n_boot)
    for b in range(n_boot):
        pick = rng.integers(0, n_seeds, n_seeds)
        boot[b] = np.sum(np.abs(hists[pick].mean(axis=0) - pooled) * widths)
    ci = float(np.quantile(boot, 0.975))
    return {"l1": l1, "bootstrap_ci": ci, "within_3ci": l1 <= 3.0 * ci,
            "n_seeds": n_seeds, "length": length, "bins": bins}


# -------------------------------------------------------- response cross-check

def mc_response_check(system, phi, eps, basis, eps0=0.0, n_seeds=10,
                      length=1000000, burn_in=1000, seed0=1000, cutoff=10000,
                      quad_order=12):
    """z-score of the common-random-number finite difference of ergodic
    averages against the operator-path prediction integral(phi h*).

    The denominator combines the seed-to-seed standard error with an O(eps^2)
    bias budget taken from the *spectral* finite difference at the same eps,
    so the test does not reward cancelling discretization against MC noise.
    """
    from .operators import build_operator, stationary_density
    from .response import response

    fds = []
    for s in range(n_seeds):
        means = {}
        for sgn in (+1, -1):
            orbit = run_orbit(system, eps0 + sgn * eps, seed0 + s, burn_in,
                              length)
            means[sgn] = float(np.mean(phi(orbit)))
        fds.append((means[+1] - means[-1]) / (2.0 * eps))
    fds = np.asarray(fds)
    fd_mc = float(np.mean(fds))
    se = float(np.std(fds, ddof=1) / np.sqrt(n_seeds))

    rep = response(system, basis, eps=eps0, cutoff=cutoff,
                   quad_order=quad_order)
    w = basis.quad_weights
    pred = float(w @ (phi(basis.nodes) * rep.h_star_normalized.values))
    spectral_fd = []
    for sgn in (+1, -1):
        h = stationary_density(
            build_operator(system, eps0 + sgn * eps, basis, cutoff,
                           quad_order))
        spectral_fd.append(float(w @ (phi(basis.nodes) * h.values)))
    bias = abs((spectral_fd[0] - spectral_fd[1]) / (2.0 * eps) - pred)
    z = (fd_mc - pred) / np.sqrt(se ** 2 + bias ** 2)
    return {"fd_estimate": fd_mc, "se": se, "prediction": pred,
            "bias_budget": bias, "z": float(z), "n_seeds": n_seeds,
            "length": length, "eps": eps, "eps0": eps0}
