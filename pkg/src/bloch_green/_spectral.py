"""Chebyshev-Lobatto machinery shared by the quadrature and operator grids.

All piecewise-smooth functions in this package live on panel meshes whose
breakpoints are aligned with the potential's segment boundaries, with
Chebyshev-Lobatto nodes inside each panel.  Cumulative integrals,
derivatives and point evaluation are then spectrally accurate, which is
what keeps the operator chains and the nested bracket integrals near
machine precision.
"""

from __future__ import annotations

import numpy as np
from numpy.polynomial import chebyshev as _cheb

__all__ = [
    "lobatto_nodes",
    "vals_to_coeffs",
    "coeffs_to_vals",
    "cheb_definite_integral_weights",
    "PanelMesh",
    "PanelFunction",
]


def lobatto_nodes(order: int) -> np.ndarray:
    """Chebyshev-Lobatto points of the given order, ascending on [-1, 1]."""
    if order < 1:
        raise ValueError("order must be >= 1")
    return -np.cos(np.pi * np.arange(order + 1) / order)


# Cached values<->coefficients cosine matrices, keyed by order.
_V2C: dict[int, np.ndarray] = {}
_C2V: dict[int, np.ndarray] = {}


def _v2c_matrix(n: int) -> np.ndarray:
    mat = _V2C.get(n)
    if mat is None:
        j = np.arange(n + 1)
        # values are at ascending nodes -cos(pi*j/n); flip to classic order
        cosmat = np.cos(np.pi * np.outer(j, n - j) / n)
        w = np.full(n + 1, 2.0 / n)
        w[0] *= 0.5
        w[-1] *= 0.5
        mat = cosmat * w
        mat[0] *= 0.5
        mat[-1] *= 0.5
        _V2C[n] = mat
    return mat


def _c2v_matrix(n: int) -> np.ndarray:
    mat = _C2V.get(n)
    if mat is None:
        x = lobatto_nodes(n)
        k = np.arange(n + 1)
        mat = np.cos(np.outer(np.arccos(x), k))
        _C2V[n] = mat
    return mat


def vals_to_coeffs(values: np.ndarray, axis: int = 0) -> np.ndarray:
    """Chebyshev coefficients of the interpolant through Lobatto-node values."""
    values = np.asarray(values)
    n = values.shape[axis] - 1
    return np.moveaxis(np.tensordot(_v2c_matrix(n), np.moveaxis(values, axis, 0), 1), 0, axis)


def coeffs_to_vals(coeffs: np.ndarray, axis: int = 0) -> np.ndarray:
    """Values at ascending Lobatto nodes from Chebyshev coefficients."""
    coeffs = np.asarray(coeffs)
    n = coeffs.shape[axis] - 1
    return np.moveaxis(np.tensordot(_c2v_matrix(n), np.moveaxis(coeffs, axis, 0), 1), 0, axis)


def cheb_definite_integral_weights(n: int) -> np.ndarray:
    """Weights w with integral_{-1}^{1} sum c_k T_k = w . c."""
    k = np.arange(n + 1)
    w = np.zeros(n + 1)
    even = k % 2 == 0
    w[even] = 2.0 / (1.0 - k[even] ** 2)
    return w


class PanelMesh:
    """A sorted set of panels [breaks[i], breaks[i+1]] with per-panel Lobatto nodes."""

    def __init__(self, breaks, order: int):
        breaks = np.asarray(breaks, dtype=float)
        if breaks.ndim != 1 or breaks.size < 2:
            raise ValueError("need at least one panel")
        if np.any(np.diff(breaks) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        self.breaks = breaks
        self.order = order
        self.npanels = breaks.size - 1
        self.half = 0.5 * np.diff(breaks)
        self.mid = 0.5 * (breaks[:-1] + breaks[1:])
        ref = lobatto_nodes(order)
        # nodes[i, j]: physical node j of panel i
        self.nodes = self.mid[:, None] + self.half[:, None] * ref[None, :]

    @property
    def a(self) -> float:
        return float(self.breaks[0])

    @property
    def b(self) -> float:
        return float(self.breaks[-1])

    def sample(self, fn) -> "PanelFunction":
        return PanelFunction(self, fn(self.nodes))

    def panel_of(self, x: np.ndarray) -> np.ndarray:
        """Panel index per point; interior breakpoints belong to the right panel."""
        idx = np.searchsorted(self.breaks, x, side="right") - 1
        return np.clip(idx, 0, self.npanels - 1)


class PanelFunction:
    """Function values on a PanelMesh; supports spectral calculus per panel.

    Values may be real or complex.  Discontinuities are representable at
    panel boundaries only (each panel owns both its endpoints).
    """

    def __init__(self, mesh: PanelMesh, values: np.ndarray):
        values = np.asarray(values)
        if values.shape != mesh.nodes.shape:
            raise ValueError("values shape does not match mesh")
        self.mesh = mesh
        self.values = values
        self._coeffs = None

    def coeffs(self) -> np.ndarray:
        if self._coeffs is None:
            self._coeffs = vals_to_coeffs(self.values, axis=1)
        return self._coeffs

    def antiderivative(self) -> "PanelFunction":
        """Cumulative integral from the left end of the mesh, continuous across panels."""
        c = self.coeffs()
        ci = _cheb.chebint(c.T, axis=0) * self.mesh.half[None, :]
        ref = lobatto_nodes(self.mesh.order)
        vals = _cheb.chebval(ref, ci)  # (npanels, order+1)
        vals = vals - vals[:, :1]
        panel_tot = vals[:, -1]
        offsets = np.concatenate(([0.0], np.cumsum(panel_tot)[:-1]))
        return PanelFunction(self.mesh, vals + offsets[:, None])

    def integral(self):
        w = cheb_definite_integral_weights(self.mesh.order)
        return np.sum(self.coeffs() @ w * self.mesh.half)

    def derivative(self) -> "PanelFunction":
        c = self.coeffs()
        cd = _cheb.chebder(c.T, axis=0).T / self.mesh.half[:, None]
        cd = np.concatenate([cd, np.zeros_like(cd[:, :1])], axis=1)
        return PanelFunction(self.mesh, coeffs_to_vals(cd, axis=1))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        xf = np.atleast_1d(x)
        idx = self.mesh.panel_of(xf)
        c = self.coeffs()
        out = np.empty(xf.shape, dtype=self.values.dtype)
        for i in np.unique(idx):
            sel = idx == i
            xi = (xf[sel] - self.mesh.mid[i]) / self.mesh.half[i]
            out[sel] = _cheb.chebval(xi, c[i])
        return out[0] if scalar else out

    def end_value(self):
        return self.values[-1, -1]

    def _binary(self, other, op):
        if isinstance(other, PanelFunction):
            if other.mesh is not self.mesh:
                raise ValueError("operands live on different meshes")
            return PanelFunction(self.mesh, op(self.values, other.values))
        return PanelFunction(self.mesh, op(self.values, other))

    def __add__(self, other):
        return self._binary(other, lambda a, b: a + b)

    def __sub__(self, other):
        return self._binary(other, lambda a, b: a - b)

    def __mul__(self, other):
        return self._binary(other, lambda a, b: a * b)

    __rmul__ = __mul__
