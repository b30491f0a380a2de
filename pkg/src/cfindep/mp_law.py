"""Marcenko-Pastur reference law.

Support edges, density, characteristic function and Stieltjes transforms for
the limiting spectral distribution of ``X^* X / n`` when the columns of ``X``
are independent with i.i.d. standardized entries and ``p / n -> c``.

The continuous part of the characteristic function is integrated after the
change of variables ``x = (a+b)/2 + (b-a)/2 * sin(theta)``, which turns
``sqrt((b-x)(x-a)) dx`` into ``((b-a)/2)^2 cos^2(theta) dtheta`` and leaves a
bounded, smooth integrand on ``[-pi/2, pi/2]``.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import LowerHalfPlane, NonPositiveRatio, QuadratureTooCoarse

DEFAULT_NODES = 64
SELF_CHECK_TOL = 1e-8


@dataclass(frozen=True)
class MpParams:
    c: float
    a: float = field(init=False)
    b: float = field(init=False)
    atom: float = field(init=False)

    def __post_init__(self):
        if not self.c > 0:
            raise NonPositiveRatio(f"aspect ratio must be positive, got {self.c}")
        a, b = mp_support(self.c)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "atom", max(0.0, 1.0 - 1.0 / self.c))


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Nodes and weights on a reference interval.

    Gauss-Legendre rules live on ``[-1, 1]``; use :meth:`mapped` to move a
    rule to another interval.
    """

    nodes: np.ndarray
    weights: np.ndarray
    kind: str = "gauss_legendre"
    lower: float = -1.0
    upper: float = 1.0

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        weights = np.array(self.weights, dtype=float)
        if nodes.ndim != 1 or nodes.shape != weights.shape or nodes.size < 1:
            raise ValueError("nodes and weights must be matching 1-D arrays")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("quadrature nodes must be strictly increasing")
        if np.any(weights <= 0):
            raise ValueError("quadrature weights must be positive")
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    def __len__(self):
        return self.nodes.size

    def mapped(self, lower, upper):
        """The same rule affinely moved onto ``[lower, upper]``."""
        if not upper > lower:
            raise ValueError("need lower < upper")
        half = (upper - lower) / (self.upper - self.lower)
        nodes = lower + (self.nodes - self.lower) * half
        return QuadratureRule(nodes, self.weights * half, self.kind, lower, upper)

    def refined(self):
        """A rule of the same kind with twice as many nodes on the same interval."""
        return make_rule(2 * len(self), self.kind).mapped(self.lower, self.upper)

    @property
    def key(self):
        return (self.kind, len(self), float(self.lower), float(self.upper))


@lru_cache(maxsize=64)
def _gauss_legendre(n_nodes):
    return np.polynomial.legendre.leggauss(n_nodes)


def make_rule(n_nodes=DEFAULT_NODES, kind="gauss_legendre") -> QuadratureRule:
    """Quadrature rule with ``n_nodes`` nodes on ``[-1, 1]``."""
    if kind == "gauss_legendre":
        if n_nodes < 1:
            raise ValueError("need at least one node")
        x, w = _gauss_legendre(int(n_nodes))
        return QuadratureRule(x, w, "gauss_legendre")
    if kind == "trapezoid":
        if n_nodes < 2:
            raise ValueError("trapezoid rule needs at least two nodes")
        x = np.linspace(-1.0, 1.0, int(n_nodes))
        w = np.full(x.size, 2.0 / (x.size - 1))
        w[0] = w[-1] = 1.0 / (x.size - 1)
        return QuadratureRule(x, w, "trapezoid")
    raise ValueError(f"unknown quadrature kind {kind!r}")


def mp_support(c):
    """Edges ``((1 - sqrt c)^2, (1 + sqrt c)^2)`` of the continuous part."""
    if not c > 0:
        raise NonPositiveRatio(f"aspect ratio must be positive, got {c}")
    r = np.sqrt(c)
    return (1.0 - r) ** 2, (1.0 + r) ** 2


def mp_density(x, params: MpParams):
    """Density of the continuous part; the atom at zero is not included."""
    x = np.asarray(x, dtype=float)
    a, b, c = params.a, params.b, params.c
    inside = (x > a) & (x < b)
    safe = np.where(inside, x, 1.0)
    val = np.sqrt(np.clip((b - safe) * (safe - a), 0.0, None)) / (2 * np.pi * safe * c)
    out = np.where(inside, val, 0.0)
    return out if out.ndim else float(out)


def _theta_grid(params: MpParams, quad: QuadratureRule):
    """Points x(theta) and the weights that integrate ``g(x) f_c(x) dx``."""
    rule = quad.mapped(-np.pi / 2, np.pi / 2)
    theta = rule.nodes
    mid = (params.a + params.b) / 2
    half = (params.b - params.a) / 2
    x = mid + half * np.sin(theta)
    if params.c == 1.0:
        # a = 0: cos^2/x = (1 - sin)(1 + sin) / (2 (1 + sin)) exactly
        ratio = (1.0 - np.sin(theta)) / 2.0
    else:
        ratio = np.cos(theta) ** 2 / x
    # ((b-a)/2)^2 / (2 pi c) = 2 / pi
    return x, rule.weights * ratio * (2.0 / np.pi)


def _charfn_raw(t, params, quad):
    x, w = _theta_grid(params, quad)
    t = np.asarray(t, dtype=float)
    phase = np.exp(1j * np.multiply.outer(t, x))
    return params.atom + phase @ w


def mp_charfn(t, params: MpParams, quad: QuadratureRule | None = None, check=True):
    """Characteristic function ``s(t) = int e^{itx} dF^c(x)``.

    ``t`` may be a scalar or an array.  With ``check`` the value is recomputed
    on a rule of twice the size and :class:`QuadratureTooCoarse` is raised
    when the two disagree by more than 1e-8 in modulus.
    """
    quad = make_rule() if quad is None else quad
    if len(quad) < 2:
        raise ValueError("characteristic function quadrature needs at least two nodes")
    val = _charfn_raw(t, params, quad)
    if check:
        fine = _charfn_raw(t, params, quad.refined())
        gap = float(np.max(np.abs(fine - val), initial=0.0))
        if gap > SELF_CHECK_TOL:
            raise QuadratureTooCoarse(gap, SELF_CHECK_TOL)
    return val if np.ndim(val) else complex(val)


@lru_cache(maxsize=256)
def _cached_charfn(t_nodes, c, n_nodes, kind):
    val = mp_charfn(np.array(t_nodes), MpParams(c), make_rule(n_nodes, kind))
    val.setflags(write=False)
    return val


def mp_charfn_on(t_nodes, c, quad: QuadratureRule):
    """Memoized ``s(t, c)`` on a fixed node set (read-only array)."""
    return _cached_charfn(tuple(float(t) for t in t_nodes), float(c), len(quad), quad.kind)


def mp_moments(params: MpParams, k, quad: QuadratureRule | None = None):
    """``int x^k dF^c(x)`` for k in 1..4; the atom sits at zero and adds nothing."""
    if k not in (1, 2, 3, 4):
        raise ValueError("moment order must be 1, 2, 3 or 4")
    quad = make_rule() if quad is None else quad
    x, w = _theta_grid(params, quad)
    return float(np.sum(w * x**k))


def mp_stieltjes(z, c):
    """Closed-form Stieltjes transform ``m(z) = int dF^c(x) / (x - z)``."""
    z = complex(z)
    if not z.imag > 0:
        raise LowerHalfPlane(f"Stieltjes transform needs Im z > 0, got {z}")
    if not c > 0:
        raise NonPositiveRatio(f"aspect ratio must be positive, got {c}")
    u = 1 - c - z
    root = np.sqrt(u * u - 4 * c * z + 0j)
    m = (u + root) / (2 * c * z)
    if m.imag <= 0:
        m = (u - root) / (2 * c * z)
    return complex(m)


def underline_stieltjes(z, c):
    """Transform of the companion law ``(1 - c) delta_0 + c F^c``."""
    m = mp_stieltjes(z, c)
    z = complex(z)
    return complex(-(1 - c) / z + c * m)


def inverse_underline(m_under, c):
    """``z = -1/m + c/(1 + m)``: the explicit inverse for population spectrum delta_1.

    The leading term carries a minus sign; with ``+1/m`` the map does not
    invert :func:`underline_stieltjes`.
    """
    return -1.0 / m_under + c / (1.0 + m_under)


def fixed_point_residual(z, c):
    """``|m - 1/(1 - c - c z m - z)|`` for H = delta_1; zero at the true transform."""
    m = mp_stieltjes(z, c)
    z = complex(z)
    return abs(m - 1.0 / ((1 - c - c * z * m) - z))
