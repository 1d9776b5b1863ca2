"""Exact and low-energy-expanded Green functions, with the periodic square
potential closed form as an oracle.

The exact route propagates the solution that decays to the right: its
amplitude pair at the source point is fixed by the half-line data alone,
(S_l(y), 1 - S_l(y)), and the Wronskian with the left-decaying partner is
2ik(1 - S(y)).  Everything is rational in the one-period matrix elements
and the branch-resolved Z, so no square-root branch ever needs choosing,
and real k needs no extrapolation beyond the Z limit rule itself.

The textbook assembly - exponentiate the line integral of S along [y, x]
over a square-root endpoint factor - is kept as a cross-check route.  It
is branch-ambiguous in the gaps and its integrand develops near-poles
close to band edges, which is why it is not the primary path.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .iterint import bracket, cell_Q
from .potential import CellConstants, PeriodicPotential, cell_constants
from .transfer import (DEFAULT_RTOL, BandClass, branch_Z, classify_band,
                       evolve, monodromy, propagator_scan)

__all__ = [
    "GreenValue",
    "SquareWellParams",
    "GreenSeries",
    "green_exact",
    "square_well_oracle",
    "green_series",
]


@dataclass(frozen=True)
class GreenValue:
    G_S: complex
    G_F: complex
    x: float
    y: float
    k: complex
    band_class: BandClass | None


@dataclass(frozen=True)
class SquareWellParams:
    """Two-level cell: V = 0 on (0, a), C on (a, L)."""
    C: float
    L: float
    a: float

    def __post_init__(self):
        if not 0 < self.a < self.L:
            raise ValueError("need 0 < a < L")

    @property
    def b(self) -> float:
        return self.L - self.a

    @property
    def A(self) -> float:
        return -math.tanh(0.5 * self.C)

    def discriminant(self, k: complex) -> complex:
        """Half-trace of the one-period matrix, in closed form."""
        A2 = self.A * self.A
        return (cmath.cos(k * self.L) - A2 * cmath.cos(k * (self.L - 2 * self.b))) / (1 - A2)


@dataclass(frozen=True)
class GreenSeries:
    """Low-energy coefficients: G(k) ~ g_m1/(ik) + g_0 + ik g_1 + (ik)^2 g_2."""
    g_m1: float
    g_0: float
    g_1: float
    g_2: float
    q_1: float
    q_3: float
    x: float
    y: float

    def __call__(self, k: complex) -> complex:
        ik = 1j * complex(k)
        return self.g_m1 / ik + self.g_0 + ik * self.g_1 + ik * ik * self.g_2


# ---------------------------------------------------------------------------
# exact Green function

_GL_CACHE: dict = {}


def _gauss_panels(pot, y: float, x: float, order: int, max_panel: float):
    if order not in _GL_CACHE:
        _GL_CACHE[order] = np.polynomial.legendre.leggauss(order)
    t, w = _GL_CACHE[order]
    breaks = pot.breakpoints(y, x)
    nodes = []
    weights = []
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        nsub = max(1, int(math.ceil((hi - lo) / max_panel)))
        for j in range(nsub):
            a = lo + (hi - lo) * j / nsub
            b = lo + (hi - lo) * (j + 1) / nsub
            half = 0.5 * (b - a)
            nodes.append(0.5 * (a + b) + half * t)
            weights.append(half * w)
    return np.concatenate(nodes), np.concatenate(weights)


def _reduce_to_cell(pot, z: np.ndarray) -> np.ndarray:
    """Map points into the window (offset, offset + L]."""
    L = pot.period
    r = np.mod(z - pot.offset, L)
    r = np.where(r == 0.0, L, r)
    return pot.offset + r


def _endpoint_sl_s(pot, y: float, kc: complex, Z: complex, rtol: float):
    """S_l(y, k) and S(y, k) from the one-period matrix based at y."""
    U = evolve(pot, y, y - pot.period, kc, rtol)
    da = U.alpha_plus - U.alpha_minus
    sl = -2.0 * U.beta_minus / (da - 2.0 * U.beta_minus - 2j * Z)
    s_full = 1.0 + 2j * Z / (da + U.beta_plus - U.beta_minus)
    return sl, s_full


def _green_at(pot, x: float, y: float, kc: complex, Z: complex,
              rtol: float) -> complex:
    """Green function by propagating the right-decaying solution.

    Its amplitude pair at y is (S_l(y), 1 - S_l(y)) and the Wronskian with
    the left-decaying partner is 2ik(1 - S(y)); the value is the solution
    at x over the Wronskian.  Rational in the matrix elements and Z, so
    the branch is carried entirely by Z.
    """
    sl_y, s_y = _endpoint_sl_s(pot, y, kc, Z, rtol)
    denom = 2j * kc * (1.0 - s_y)
    if denom == 0:
        raise ArithmeticError(f"degenerate Wronskian at k = {kc} (band edge)")
    if x == y:
        return 1.0 / denom
    U = evolve(pot, x, y, kc, rtol)
    chi = ((U.alpha_plus + U.beta_plus) * sl_y
           + (U.beta_minus + U.alpha_minus) * (1.0 - sl_y))
    return chi / denom


def _green_by_line_integral(pot, x: float, y: float, kc: complex, Z: complex,
                            quad_order: int, rtol: float) -> complex:
    """Cross-check route: exp(ik(x-y) - ik * integral of S) over the
    square-root endpoint factor, with per-factor principal roots.

    The principal roots agree with the true branch away from gaps and
    edges; the primary route does not have this caveat.
    """
    if x > y:
        nodes, weights = _gauss_panels(pot, y, x, quad_order, pot.period / 2.0)
        pts = np.concatenate([nodes, [x, y]])
    else:
        weights = np.zeros(0)
        nodes = np.zeros(0)
        pts = np.array([x, y])
    red = _reduce_to_cell(pot, pts)
    uniq, inverse = np.unique(red, return_inverse=True)
    E, M = propagator_scan(pot, kc, uniq, rtol)
    Einv = np.empty_like(E)
    Einv[:, 0, 0] = E[:, 1, 1]
    Einv[:, 1, 1] = E[:, 0, 0]
    Einv[:, 0, 1] = -E[:, 0, 1]
    Einv[:, 1, 0] = -E[:, 1, 0]
    U = E @ M @ Einv
    da = U[:, 0, 0] - U[:, 1, 1]
    svals = (1.0 + 2j * Z / (da + U[:, 1, 0] - U[:, 0, 1]))[inverse]
    line = np.dot(weights, svals[: nodes.size]) if weights.size else 0.0
    phase = cmath.exp(1j * kc * (x - y) - 1j * kc * line)
    root = cmath.sqrt(1.0 - svals[-2]) * cmath.sqrt(1.0 - svals[-1])
    return phase / (2j * kc * root)


def green_exact(pot: PeriodicPotential, x: float, y: float, k: complex,
                eps: float | None = None, rtol: float = DEFAULT_RTOL) -> GreenValue:
    """Green functions of the periodic operator at (x, y; k).

    Both orderings of (x, y) are accepted; k = 0 is excluded.  Real k is
    the boundary limit from Im k > 0, carried by the limit branch of Z;
    band_class records whether k sits in a band, a gap, or within
    tolerance of an edge (where the limit degenerates).
    """
    k = complex(k)
    if k == 0:
        raise ValueError("k = 0 is singular; use the series route")
    if k.imag < 0:
        raise ValueError("defined for Im k >= 0")
    x = float(x)
    y = float(y)
    if x < y:
        x, y = y, x
    band = None
    if k.imag == 0:
        band = classify_band(pot, k.real, rtol=rtol)
    mono = monodromy(pot, k, eps=eps, rtol=rtol)
    gs = _green_at(pot, x, y, k, mono.Z, rtol)
    gf = math.exp(-0.5 * (pot.V(x) - pot.V(y))) * gs
    return GreenValue(G_S=gs, G_F=gf, x=x, y=y, k=k, band_class=band)


def square_well_oracle(p: SquareWellParams, x: float, y: float, k: complex,
                       eps: float | None = None) -> complex:
    """Closed-form Green function of the two-level cell for 0 < y <= x < a.

    Independent of the propagation machinery: the discriminant is evaluated
    from its trigonometric closed form, and only the branch rule for
    sqrt(1 - Y^2) is shared with the monodromy route.
    """
    if not (0 < y <= x < p.a):
        raise ValueError("closed form covers 0 < y <= x < a only")
    k = complex(k)
    if k == 0:
        raise ValueError("k = 0 is singular")
    Z = branch_Z(p.discriminant, k, eps=eps)
    A = p.A
    b = p.b
    L = p.L
    K = cmath.sin(k * L) - A * A * cmath.sin(k * (L - 2 * b)) - (1 - A * A) * Z
    sinb = cmath.sin(k * b)
    num1 = 2 * A * cmath.exp(2j * k * x) * cmath.exp(-1j * k * (L - b)) * sinb - K
    num2 = 2 * A * cmath.exp(-2j * k * y) * cmath.exp(1j * k * (L - b)) * sinb - K
    den = 2j * k * cmath.exp(1j * k * (x - y)) * (4 * A * A * sinb * sinb - K * K)
    return num1 * num2 / den


# ---------------------------------------------------------------------------
# low-energy series

def _s2_profile(pot, z: float, cc: CellConstants, q: float, tol: float) -> float:
    L = pot.period
    pmp = bracket(pot, "+-+", z - L, z, tol)
    return (math.exp(pot.V(z) - cc.V0) / cc.L0
            * (math.exp(-cc.V0) * pmp - (cc.L0 ** 4 / 4.0 + q) / (2.0 * cc.L0)))


def green_series(pot: PeriodicPotential, x: float, y: float,
                 cc: CellConstants | None = None, tol: float = 1e-12,
                 quad_order: int = 16) -> GreenSeries:
    """Low-energy coefficients of the Green function through order k^2."""
    x = float(x)
    y = float(y)
    if x < y:
        x, y = y, x
    if cc is None:
        cc = cell_constants(pot, tol)
    L = pot.period
    q = cell_Q(pot, tol)
    vx = pot.V(x)
    vy = pot.V(y)
    envelope = math.exp(-0.5 * (vx + vy))
    plus_xy = bracket(pot, "+", y, x, tol) if x > y else 0.0
    g_m1 = 0.5 * envelope * math.exp(cc.V0)
    g_0 = 0.5 * envelope * plus_xy
    pmp_x = bracket(pot, "+-+", x - L, x, tol)
    pmp_y = bracket(pot, "+-+", y - L, y, tol)
    g_1 = (envelope / (4.0 * cc.L0)
           * (pmp_x + pmp_y + cc.L0 * math.exp(-cc.V0) * plus_xy ** 2
              - math.exp(cc.V0) / cc.L0 * (cc.L0 ** 4 / 4.0 + q)))
    if x > y:
        nodes, weights = _gauss_panels(pot, y, x, quad_order, pot.period / 2.0)
        int_s2 = float(np.dot(weights, [_s2_profile(pot, z, cc, q, tol) for z in nodes]))
    else:
        int_s2 = 0.0
    g_2 = (math.exp(-cc.V0) * plus_xy * g_1
           - (math.exp(-3.0 * cc.V0) / 3.0 * plus_xy ** 3 + int_s2) * g_m1)
    return GreenSeries(g_m1=g_m1, g_0=g_0, g_1=g_1, g_2=g_2,
                       q_1=math.exp(-cc.V0) * plus_xy, q_3=-int_s2, x=x, y=y)
