"""Function representations: Chebyshev-Lobatto / Fourier / piecewise-constant
(Ulam) bases plus a panelled Chebyshev variant for functions with steep
behavior near an endpoint.

All bases are interpolatory: a function is stored by its values at the nodes,
and evaluation/differentiation/integration are linear in those values.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, UnsupportedOperation


def _cheb_nodes_weights(n):
    """Chebyshev-Lobatto nodes (ascending on [-1,1]) and Clenshaw-Curtis
    quadrature weights (Trefethen, Spectral Methods in MATLAB, clencurt)."""
    theta = np.pi * np.arange(n + 1) / n
    x = -np.cos(theta)  # ascending
    w = np.zeros(n + 1)
    ii = np.arange(1, n)
    v = np.ones(n - 1)
    if n % 2 == 0:
        w[0] = w[n] = 1.0 / (n ** 2 - 1)
        for k in range(1, n // 2):
            v -= 2.0 * np.cos(2 * k * theta[ii]) / (4 * k ** 2 - 1)
        v -= np.cos(n * theta[ii]) / (n ** 2 - 1)
    else:
        w[0] = w[n] = 1.0 / n ** 2
        for k in range(1, (n - 1) // 2 + 1):
            v -= 2.0 * np.cos(2 * k * theta[ii]) / (4 * k ** 2 - 1)
    w[ii] = 2.0 * v / n
    return x, w


def _bary_matrix(y, nodes, bw):
    """Barycentric evaluation matrix: rows give cardinal-function values at y."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    diff = y[:, None] - nodes[None, :]
    exact = np.abs(diff) < 1e-14
    # avoid division warnings at exact hits; fixed below
    diff[exact] = 1.0
    C = bw[None, :] / diff
    C /= C.sum(axis=1)[:, None]
    hit_rows = exact.any(axis=1)
    if np.any(hit_rows):
        C[hit_rows] = 0.0
        r, c = np.nonzero(exact)
        C[r, c] = 1.0
    return C


def _bary_diff_matrix(nodes, bw):
    """Differentiation matrix for arbitrary nodes with barycentric weights."""
    n = len(nodes)
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    D = (bw[None, :] / bw[:, None]) / diff
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -D.sum(axis=1))
    return D


class ChebyshevBasis:
    """Chebyshev-Lobatto collocation on an interval [a, b]."""

    kind = "chebyshev"
    domain = "interval"

    def __init__(self, n=40, a=0.0, b=1.0):
        if n < 4:
            raise ConfigurationError("Chebyshev basis needs n >= 4")
        if not b > a:
            raise ConfigurationError("empty interval")
        self.n = n
        self.a = float(a)
        self.b = float(b)
        x, w = _cheb_nodes_weights(n)
        self.nodes = a + (b - a) * 0.5 * (x + 1.0)
        self.quad_weights = 0.5 * (b - a) * w
        bw = np.ones(n + 1)
        bw[1::2] = -1.0
        bw[0] *= 0.5
        bw[-1] *= 0.5
        self._bw = bw
        self._D = None

    @property
    def size(self):
        return self.n + 1

    def eval_matrix(self, y):
        return _bary_matrix(y, self.nodes, self._bw)

    @property
    def diff_matrix(self):
        if self._D is None:
            self._D = _bary_diff_matrix(self.nodes, self._bw)
        return self._D

    def __repr__(self):
        return f"ChebyshevBasis(n={self.n}, [{self.a}, {self.b}])"


class FourierBasis:
    """Equispaced trigonometric collocation on the circle R/Z (n even)."""

    kind = "fourier"
    domain = "circle"

    def __init__(self, n=64):
        if n < 4 or n % 2:
            raise ConfigurationError("Fourier basis needs even n >= 4")
        self.n = n
        self.nodes = np.arange(n) / n
        self.quad_weights = np.full(n, 1.0 / n)
        self._D = None

    @property
    def size(self):
        return self.n

    def eval_matrix(self, y):
        y = np.atleast_1d(np.asarray(y, dtype=float))
        t = y[:, None] - self.nodes[None, :]
        t -= np.round(t)
        exact = np.abs(t) < 1e-14
        t[exact] = 0.5  # placeholder, overwritten below
        # band-limited cardinal for even n: sin(n pi t) / (n tan(pi t))
        C = np.sin(self.n * np.pi * t) / (self.n * np.tan(np.pi * t))
        C[exact.any(axis=1)] = 0.0
        r, c = np.nonzero(exact)
        C[r, c] = 1.0
        return C

    @property
    def diff_matrix(self):
        if self._D is None:
            # standard periodic spectral D for even n, rescaled to period 1
            n = self.n
            i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
            with np.errstate(divide="ignore", invalid="ignore"):
                D = np.pi * (-1.0) ** ((i - j) % 2) / np.tan(np.pi * (i - j) / n)
            np.fill_diagonal(D, 0.0)
            self._D = D
        return self._D

    def __repr__(self):
        return f"FourierBasis(n={self.n})"


class UlamBasis:
    """Piecewise-constant (Ulam) representation: K equal bins on [a, b]."""

    kind = "ulam"
    domain = "interval"

    def __init__(self, k=4096, a=0.0, b=1.0):
        if k < 4:
            raise ConfigurationError("Ulam basis needs k >= 4")
        self.k = k
        self.a = float(a)
        self.b = float(b)
        self.edges = np.linspace(a, b, k + 1)
        self.nodes = 0.5 * (self.edges[:-1] + self.edges[1:])
        self.width = (b - a) / k
        self.quad_weights = np.full(k, self.width)

    @property
    def size(self):
        return self.k

    def bin_index(self, y):
        idx = np.floor((np.asarray(y, dtype=float) - self.a) / self.width)
        return np.clip(idx.astype(np.int64), 0, self.k - 1)

    def eval_matrix(self, y):
        y = np.atleast_1d(y)
        C = np.zeros((len(y), self.k))
        C[np.arange(len(y)), self.bin_index(y)] = 1.0
        return C

    @property
    def diff_matrix(self):
        raise UnsupportedOperation("cannot differentiate an Ulam vector")

    def __repr__(self):
        return f"UlamBasis(k={self.k})"


class PanelChebBasis:
    """Piecewise Chebyshev-Lobatto on a strictly increasing panel partition.

    Used for functions on (0, b] that steepen toward 0: dyadic panels keep the
    endpoint singularity one panel-width away from every interpolation problem.
    Evaluation below the lowest panel edge ``floor`` falls back to extrapolating
    the lowest panel's polynomial; callers can check ``last_extrapolated``.
    """

    kind = "panel-chebyshev"
    domain = "interval"

    def __init__(self, edges, degree=16):
        edges = np.asarray(edges, dtype=float)
        if len(edges) < 2 or np.any(np.diff(edges) <= 0):
            raise ConfigurationError("panel edges must be strictly increasing")
        self.edges = edges
        self.degree = degree
        self.panels = [ChebyshevBasis(degree, a, b)
                       for a, b in zip(edges[:-1], edges[1:])]
        self.nodes = np.concatenate([p.nodes for p in self.panels])
        self.quad_weights = np.concatenate([p.quad_weights for p in self.panels])
        self.floor = edges[0]
        self.top = edges[-1]
        self.last_extrapolated = 0
        self._D = None

    @classmethod
    def dyadic(cls, top=0.5, floor=1e-4, degree=16):
        """Dyadic panels [top/2^{k+1}, top/2^k] down to (just below) floor."""
        edges = [top]
        while edges[-1] > floor * 2.0:
            edges.append(edges[-1] * 0.5)
        return cls(np.array(edges[::-1]), degree)

    @property
    def size(self):
        return len(self.nodes)

    def _locate(self, y):
        idx = np.searchsorted(self.edges, y, side="right") - 1
        return np.clip(idx, 0, len(self.panels) - 1)

    def eval_matrix(self, y):
        y = np.atleast_1d(np.asarray(y, dtype=float))
        if np.any(y > self.top * (1 + 1e-12)):
            raise ConfigurationError("evaluation above panel range")
        self.last_extrapolated = int(np.sum(y < self.floor))
        idx = self._locate(y)
        m = self.degree + 1
        C = np.zeros((len(y), self.size))
        for p in np.unique(idx):
            sel = idx == p
            C[np.ix_(sel, np.arange(p * m, (p + 1) * m))] = \
                self.panels[p].eval_matrix(y[sel])
        return C

    @property
    def diff_matrix(self):
        if self._D is None:
            m = self.degree + 1
            D = np.zeros((self.size, self.size))
            for p, panel in enumerate(self.panels):
                D[p * m:(p + 1) * m, p * m:(p + 1) * m] = panel.diff_matrix
            self._D = D
        return self._D

    def __repr__(self):
        return (f"PanelChebBasis({len(self.panels)} panels on "
                f"[{self.floor:g}, {self.top:g}], degree={self.degree})")


@dataclass
class DensityFunction:
    """A function stored by its values at the basis nodes."""

    basis: object
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.basis.size,):
            raise ConfigurationError("value vector does not match basis size")

    def __call__(self, x):
        scalar = np.isscalar(x)
        out = self.basis.eval_matrix(x) @ self.values
        return float(out[0]) if scalar else out

    def integrate(self):
        return float(self.basis.quad_weights @ self.values)

    def differentiate(self):
        return DensityFunction(self.basis, self.basis.diff_matrix @ self.values)

    def __add__(self, other):
        return DensityFunction(self.basis, self.values + other.values)

    def __sub__(self, other):
        return DensityFunction(self.basis, self.values - other.values)

    def __mul__(self, c):
        return DensityFunction(self.basis, self.values * float(c))

    __rmul__ = __mul__

    def sup_norm(self, grid=2000):
        g = _domain_grid(self.basis, grid)
        return float(np.max(np.abs(self(g))))

    def c1_norm(self, grid=2000):
        g = _domain_grid(self.basis, grid)
        return float(np.max(np.abs(self(g))) + np.max(np.abs(self.differentiate()(g))))


def _domain_grid(basis, grid):
    if basis.kind == "fourier":
        return np.arange(grid) / grid
    lo = getattr(basis, "a", None)
    if lo is None:  # panel basis
        lo, hi = basis.floor, basis.top
    else:
        hi = basis.b
    return np.linspace(lo, hi, grid)


def from_callable(basis, f):
    return DensityFunction(basis, np.asarray(f(basis.nodes), dtype=float))


def h_norm(f, gamma, lo=1e-4, hi=1.0, grid=10000):
    """sup over (lo, hi] of |x^gamma f(x)| on a refined grid.

    ``f`` may be a DensityFunction or any callable accepting arrays.
    Log-spaced points resolve the behavior near 0 that the weight x^gamma is
    there to control.
    """
    if gamma < 0:
        raise ConfigurationError("h_norm needs gamma >= 0")
    x = np.concatenate([
        np.geomspace(lo, hi, grid // 2),
        np.linspace(lo, hi, grid - grid // 2),
    ])
    return float(np.max(np.abs(x ** gamma * f(x))))


def to_csv(path, columns, header):
    """Write aligned columns with 17 significant digits."""
    arrs = [np.atleast_1d(np.asarray(c, dtype=float)) for c in columns]
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*arrs):
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
