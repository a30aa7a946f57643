"""The concrete one-dimensional map families and their inverse branches.

Four families:

* ``ExpandingCircleMap(lam)`` -- x -> 2x + lam sin(2 pi x) mod 1, two full
  branches, inverses by safeguarded root-finding.
* ``GaussMap`` -- x -> 1/x mod 1, countably many branches 1/(n+x).
* ``RenyiMap`` -- x -> 1/(1-x) mod 1, branches 1 - 1/(n+x).
* ``LSVMap(u)`` -- x(1 + 2^u x^u) on [0, 1/2], 2x - 1 on (1/2, 1]; the left
  branch carries the intermittent fixed point at 0.

Each family exposes its forward map, inverse branches with derivatives up to
third order, and (for the parametrized families) the partial derivatives in
the family parameter that the response formulas need.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, NumericalError


def _bisect_newton(f, fprime, lo, hi, maxit=200, tol=1e-14):
    """Vectorized safeguarded solve of f(y)=0 with y in [lo, hi].

    Bisection with a Newton step whenever it stays inside the bracket.
    ``lo``/``hi`` are arrays broadcastable to the target shape.
    """
    lo = np.array(lo, dtype=float, copy=True)
    hi = np.array(hi, dtype=float, copy=True)
    flo = f(lo)
    y = 0.5 * (lo + hi)
    for _ in range(maxit):
        fy = f(y)
        same = np.sign(fy) == np.sign(flo)
        lo = np.where(same, y, lo)
        flo = np.where(same, fy, flo)
        hi = np.where(same, hi, y)
        step = fy / fprime(y)
        cand = y - step
        inside = (cand > lo) & (cand < hi)
        y = np.where(inside, cand, 0.5 * (lo + hi))
        if np.max(hi - lo) < tol and np.max(np.abs(step)) < tol:
            break
    res = np.max(np.abs(f(y)))
    if res > 1e-10:
        raise NumericalError("branch inversion did not converge",
                             {"residual": float(res)})
    return y


@dataclass
class Branch:
    """One inverse branch g_z with derivatives g', g'', g'''."""

    family: object
    index: int
    range: tuple  # image interval g_z([0,1])

    def __call__(self, x, order=0):
        return self.family.inverse(self.index, x, order)


def branches(family, cutoff=10000):
    """Enumerate inverse branches up to ``cutoff`` (countable families only).

    Returns (list of Branch, tail bound on sum_{n>cutoff} sup|g_n'|).
    """
    if cutoff < 1:
        raise ConfigurationError("cutoff must be >= 1")
    if family.countable:
        idx = range(1, cutoff + 1)
        tail = 1.0 / cutoff  # integral comparison of sum 1/(n+x)^2
    else:
        idx = range(family.nbranches)
        tail = 0.0
    out = []
    for i in idx:
        lo = family.inverse(i, np.array([0.0, 1.0]), 0)
        a, b = float(np.min(lo)), float(np.max(lo))
        out.append(Branch(family, i, (a, b)))
    return out, tail


class GaussMap:
    kind = "gauss"
    domain = "interval"
    countable = True
    parametrized = False

    def forward(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            y = 1.0 / np.where(x == 0.0, np.inf, x)
        return y - np.floor(y)

    def inverse(self, n, x, order=0):
        x = np.asarray(x, dtype=float)
        t = 1.0 / (n + x)
        if order == 0:
            return t
        if order == 1:
            return -t ** 2
        if order == 2:
            return 2.0 * t ** 3
        if order == 3:
            return -6.0 * t ** 4
        raise ConfigurationError("order must be 0..3")


class RenyiMap:
    kind = "renyi"
    domain = "interval"
    countable = True
    parametrized = False

    def forward(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            y = 1.0 / np.where(x == 1.0, np.inf, 1.0 - x)
        return y - np.floor(y)

    def inverse(self, n, x, order=0):
        x = np.asarray(x, dtype=float)
        t = 1.0 / (n + x)
        if order == 0:
            return 1.0 - t
        if order == 1:
            return t ** 2
        if order == 2:
            return -2.0 * t ** 3
        if order == 3:
            return 6.0 * t ** 4
        raise ConfigurationError("order must be 0..3")


def gauss_gauss_derivative(n, k, x):
    """|(G_n^{-1} o G_k^{-1})'(x)| = 1/(n(k+x)+1)^2 for the composed branch."""
    return 1.0 / (n * (k + np.asarray(x, dtype=float)) + 1.0) ** 2


class ExpandingCircleMap:
    """T(x) = 2x + lam sin(2 pi x) mod 1 with |lam| < 1/(2 pi)."""

    kind = "expanding-circle"
    domain = "circle"
    countable = False
    nbranches = 2
    parametrized = True

    def __init__(self, lam=0.0):
        if abs(lam) >= 1.0 / (2.0 * np.pi):
            raise ConfigurationError("need |lambda| < 1/(2 pi)")
        self.lam = float(lam)

    # lifted map on [0,1] -> [0,2], strictly increasing
    def _lift(self, y):
        return 2.0 * y + self.lam * np.sin(2.0 * np.pi * y)

    def tprime(self, y):
        return 2.0 + 2.0 * np.pi * self.lam * np.cos(2.0 * np.pi * y)

    def tsecond(self, y):
        return -(2.0 * np.pi) ** 2 * self.lam * np.sin(2.0 * np.pi * y)

    def tthird(self, y):
        return -(2.0 * np.pi) ** 3 * self.lam * np.cos(2.0 * np.pi * y)

    # family-parameter derivatives (parameter = lam)
    def du_forward(self, y):
        return np.sin(2.0 * np.pi * np.asarray(y, dtype=float))

    def du_tprime(self, y):
        return 2.0 * np.pi * np.cos(2.0 * np.pi * np.asarray(y, dtype=float))

    def forward(self, x):
        y = self._lift(np.asarray(x, dtype=float))
        return y - np.floor(y)

    def _root(self, target):
        g = _bisect_newton(lambda y: self._lift(y) - target, self.tprime,
                           np.zeros_like(target), np.ones_like(target))
        return g

    def inverse(self, branch, x, order=0):
        if branch not in (0, 1):
            raise ConfigurationError("circle map has branches 0 and 1")
        x = np.asarray(x, dtype=float)
        g = self._root(x + branch)
        if order == 0:
            return g
        tp = self.tprime(g)
        if order == 1:
            return 1.0 / tp
        ts = self.tsecond(g)
        if order == 2:
            return -ts / tp ** 3
        if order == 3:
            return (3.0 * ts ** 2 - tp * self.tthird(g)) / tp ** 5
        raise ConfigurationError("order must be 0..3")

    def du_inverse(self, branch, x):
        """d/d lam of g(x) at fixed x (differentiate T_lam(g) = x)."""
        g = self.inverse(branch, x, 0)
        return -self.du_forward(g) / self.tprime(g)

    def du_inverse_prime(self, branch, x):
        """d/d lam of g'(x)."""
        g = self.inverse(branch, x, 0)
        tp = self.tprime(g)
        dg = -self.du_forward(g) / tp
        return -(self.du_tprime(g) + self.tsecond(g) * dg) / tp ** 2


class LSVMap:
    """Pomeau-Manneville type map x(1 + 2^u x^u) on [0, 1/2], 2x-1 above."""

    kind = "lsv"
    domain = "interval"
    countable = False
    nbranches = 2
    parametrized = True
    LEFT, RIGHT = 0, 1

    def __init__(self, u):
        if not 0.0 < u < 1.0:
            raise ConfigurationError("LSV needs u in (0, 1)")
        self.u = float(u)

    def forward(self, x):
        x = np.asarray(x, dtype=float)
        left = x + (2.0 * x) ** self.u * x
        return np.where(x <= 0.5, left, 2.0 * x - 1.0)

    # left-branch forward derivatives at a point y in [0, 1/2]
    def tprime(self, y):
        y = np.asarray(y, dtype=float)
        return 1.0 + (1.0 + self.u) * (2.0 * y) ** self.u

    def tsecond(self, y):
        y = np.asarray(y, dtype=float)
        with np.errstate(divide="ignore"):
            return 2.0 * self.u * (1.0 + self.u) * (2.0 * y) ** (self.u - 1.0)

    def tthird(self, y):
        y = np.asarray(y, dtype=float)
        with np.errstate(divide="ignore"):
            return (4.0 * self.u * (1.0 + self.u) * (self.u - 1.0)
                    * (2.0 * y) ** (self.u - 2.0))

    def du_forward(self, y):
        """d/du of the left branch x(1+(2x)^u) at fixed y."""
        y = np.asarray(y, dtype=float)
        out = np.zeros_like(y)
        pos = y > 0.0
        yp = y[pos] if y.ndim else y
        if y.ndim:
            out[pos] = yp * (2.0 * yp) ** self.u * np.log(2.0 * yp)
            return out
        return 0.0 if y == 0.0 else y * (2.0 * y) ** self.u * np.log(2.0 * y)

    def du_tprime(self, y):
        y = np.asarray(y, dtype=float)
        t = (2.0 * y) ** self.u
        with np.errstate(divide="ignore", invalid="ignore"):
            lg = np.where(y > 0.0, np.log(2.0 * y), 0.0)
        return t * (1.0 + (1.0 + self.u) * lg)

    def inverse(self, branch, x, order=0):
        x = np.asarray(x, dtype=float)
        if branch == self.RIGHT:
            if order == 0:
                return (x + 1.0) / 2.0
            if order == 1:
                return np.full_like(x, 0.5)
            if order in (2, 3):
                return np.zeros_like(x)
            raise ConfigurationError("order must be 0..3")
        if branch != self.LEFT:
            raise ConfigurationError("LSV has branches 0 (left) and 1 (right)")
        g = self.left_inverse(x)
        if order == 0:
            return g
        tp = self.tprime(g)
        if order == 1:
            return 1.0 / tp
        ts = self.tsecond(g)
        if order == 2:
            return -ts / tp ** 3
        if order == 3:
            return (3.0 * ts ** 2 - tp * self.tthird(g)) / tp ** 5
        raise ConfigurationError("order must be 0..3")

    def left_inverse(self, x):
        x = np.asarray(x, dtype=float)
        u = self.u

        def f(y):
            return y + (2.0 * y) ** u * y - x

        g = _bisect_newton(f, self.tprime, np.zeros_like(x),
                           np.minimum(0.5, np.maximum(x, 0.0)) + 1e-16)
        return np.minimum(g, 0.5)

    def du_inverse(self, branch, x):
        if branch == self.RIGHT:
            return np.zeros_like(np.asarray(x, dtype=float))
        g = self.inverse(self.LEFT, x, 0)
        return -self.du_forward(g) / self.tprime(g)

    def du_inverse_prime(self, branch, x):
        if branch == self.RIGHT:
            return np.zeros_like(np.asarray(x, dtype=float))
        g = self.inverse(self.LEFT, x, 0)
        tp = self.tprime(g)
        dg = -self.du_forward(g) / tp
        return -(self.du_tprime(g) + self.tsecond(g) * dg) / tp ** 2


def make_family(kind, **kw):
    kind = kind.lower()
    if kind in ("gauss",):
        return GaussMap()
    if kind in ("renyi",):
        return RenyiMap()
    if kind in ("expanding-circle", "circle"):
        return ExpandingCircleMap(kw.get("lam", 0.0))
    if kind in ("lsv", "pm"):
        return LSVMap(kw["u"])
    raise ConfigurationError(f"unknown map family {kind!r}")


@dataclass
class ExpansionReport:
    beta: float
    ok: bool
    detail: dict

    def __bool__(self):
        return self.ok


def check_expansion(family, grid_size=4097, cutoff=100):
    """Max of |g'| over branches and a grid; reports beta and whether < 1.

    For a family with a neutral fixed point (LSV) or with branches that are
    not uniformly contracting (single Gauss / Renyi near 0) this returns a
    violation report instead of raising.
    """
    if family.kind == "expanding-circle":
        # |g'| = 1/T' over the full circle of branch images
        y = np.linspace(0.0, 1.0, grid_size)
        beta = float(np.max(1.0 / family.tprime(y)))
        return ExpansionReport(beta, beta < 1.0, {"family": family.kind})
    x = np.linspace(0.0, 1.0, grid_size)
    brs, tail = branches(family, cutoff)
    beta = max(float(np.max(np.abs(b(x, 1)))) for b in brs)
    return ExpansionReport(beta, beta < 1.0,
                           {"family": family.kind, "tail": tail})


def check_distortion(family, grid_size=200, cutoff=100):
    """Max over grid pairs and branches of |g'(x)/g'(y) - 1| / |x - y|."""
    x = np.linspace(0.0, 1.0, grid_size)
    brs, _ = branches(family, cutoff)
    dx = np.abs(x[:, None] - x[None, :])
    np.fill_diagonal(dx, np.inf)
    worst = 0.0
    for b in brs:
        gp = np.abs(b(x, 1))
        ratio = np.abs(gp[:, None] / gp[None, :] - 1.0) / dx
        worst = max(worst, float(np.max(ratio)))
    return worst


def check_gauss_second_iterate(nmax=50, kmax=50, grid=100):
    """sup |(G_n o G_k)^{-1'}| over composed branches; equals 1/4 at n=k=1, x=0."""
    x = np.linspace(0.0, 1.0, grid)
    n = np.arange(1, nmax + 1)[:, None, None]
    k = np.arange(1, kmax + 1)[None, :, None]
    vals = gauss_gauss_derivative(n, k, x[None, None, :])
    return float(np.max(vals))
